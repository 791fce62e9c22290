//! Plain-text circuit format.
//!
//! ```text
//! width 2
//! step
//! M1 X q0 -> s0
//! step
//! M2 ZZ q0 q1 -> s1
//! ROT Z q1 0.39269908169872414
//! DET s0 s1 = +1
//! DET s2 = prev
//! ```
//!
//! `#` starts a comment. `width` is optional and defaults to one past the
//! largest qubit index.

use std::fmt;
use std::str::FromStr;

use super::circuit::{Circuit, CircuitStep, Detector, DetectorParity, Operation, SlotId};
use crate::error::{Error, Result};
use crate::pauli::{PauliString, Sign};

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "width {}", self.width())?;
        for step in self.steps() {
            writeln!(f, "step")?;
            for op in &step.ops {
                match op {
                    Operation::Idle { qubit } => writeln!(f, "IDLE q{qubit}")?,
                    Operation::Meas1 { pauli, qubit, slot } => writeln!(f, "M1 {pauli} q{qubit} -> {slot}")?,
                    Operation::Meas2 { pauli, qubits, slot } => {
                        writeln!(f, "M2 {pauli} q{} q{} -> {slot}", qubits[0], qubits[1])?
                    }
                    Operation::Rotate { axis, qubit, phi } => writeln!(f, "ROT {axis} q{qubit} {phi:?}")?,
                }
            }
        }
        for d in self.detectors() {
            write!(f, "DET")?;
            for s in &d.slots {
                write!(f, " {s}")?;
            }
            match d.parity {
                DetectorParity::Fixed(Sign::Plus) => writeln!(f, " = +1")?,
                DetectorParity::Fixed(Sign::Minus) => writeln!(f, " = -1")?,
                DetectorParity::MatchPrevious => writeln!(f, " = prev")?,
            }
        }
        Ok(())
    }
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::ParseLine { line, msg: msg.into() }
}

fn qubit(tok: &str, line: usize) -> Result<usize> {
    tok.strip_prefix('q')
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| err(line, format!("expected qubit like q3, got {tok:?}")))
}

fn slot(tok: &str, line: usize) -> Result<SlotId> {
    tok.strip_prefix('s')
        .and_then(|t| t.parse().ok())
        .map(SlotId)
        .ok_or_else(|| err(line, format!("expected slot like s7, got {tok:?}")))
}

fn pauli_tok(tok: &str, line: usize) -> Result<PauliString> {
    tok.parse().map_err(|e: Error| err(line, e.to_string()))
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Circuit> {
        let mut width: Option<usize> = None;
        let mut steps: Vec<CircuitStep> = Vec::new();
        let mut detectors = Vec::new();
        let mut max_q = 0usize;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let need_step = |steps: &mut Vec<CircuitStep>| -> Result<()> {
                if steps.is_empty() {
                    return Err(err(ln, "operation before the first `step`"));
                }
                Ok(())
            };
            match toks[0] {
                "width" => {
                    let w = toks
                        .get(1)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| err(ln, "expected `width <n>`"))?;
                    width = Some(w);
                }
                "step" => {
                    if toks.len() != 1 {
                        return Err(err(ln, "`step` takes no arguments"));
                    }
                    steps.push(CircuitStep::default());
                }
                "M1" => {
                    need_step(&mut steps)?;
                    if toks.len() != 5 || toks[3] != "->" {
                        return Err(err(ln, "expected `M1 <pauli> q<i> -> s<k>`"));
                    }
                    let q = qubit(toks[2], ln)?;
                    max_q = max_q.max(q);
                    steps.last_mut().expect("checked").ops.push(Operation::Meas1 {
                        pauli: pauli_tok(toks[1], ln)?,
                        qubit: q,
                        slot: slot(toks[4], ln)?,
                    });
                }
                "M2" => {
                    need_step(&mut steps)?;
                    if toks.len() != 6 || toks[4] != "->" {
                        return Err(err(ln, "expected `M2 <pp> q<i> q<j> -> s<k>`"));
                    }
                    let (a, b) = (qubit(toks[2], ln)?, qubit(toks[3], ln)?);
                    max_q = max_q.max(a).max(b);
                    steps.last_mut().expect("checked").ops.push(Operation::Meas2 {
                        pauli: pauli_tok(toks[1], ln)?,
                        qubits: [a, b],
                        slot: slot(toks[5], ln)?,
                    });
                }
                "ROT" => {
                    need_step(&mut steps)?;
                    if toks.len() != 4 {
                        return Err(err(ln, "expected `ROT <axis> q<i> <phi>`"));
                    }
                    let q = qubit(toks[2], ln)?;
                    max_q = max_q.max(q);
                    let phi: f64 = toks[3].parse().map_err(|_| err(ln, format!("bad angle {:?}", toks[3])))?;
                    steps.last_mut().expect("checked").ops.push(Operation::Rotate {
                        axis: pauli_tok(toks[1], ln)?,
                        qubit: q,
                        phi,
                    });
                }
                "IDLE" => {
                    need_step(&mut steps)?;
                    if toks.len() != 2 {
                        return Err(err(ln, "expected `IDLE q<i>`"));
                    }
                    let q = qubit(toks[1], ln)?;
                    max_q = max_q.max(q);
                    steps.last_mut().expect("checked").ops.push(Operation::Idle { qubit: q });
                }
                "DET" => {
                    let eq = toks
                        .iter()
                        .position(|t| *t == "=")
                        .ok_or_else(|| err(ln, "expected `DET s<a> ... = <+1|-1|prev>`"))?;
                    if eq + 2 != toks.len() {
                        return Err(err(ln, "expected exactly one parity after `=`"));
                    }
                    let slots = toks[1..eq].iter().map(|t| slot(t, ln)).collect::<Result<Vec<_>>>()?;
                    let parity = match toks[eq + 1] {
                        "+1" | "1" => DetectorParity::Fixed(Sign::Plus),
                        "-1" => DetectorParity::Fixed(Sign::Minus),
                        "prev" => DetectorParity::MatchPrevious,
                        other => return Err(err(ln, format!("bad parity {other:?}"))),
                    };
                    detectors.push(Detector { slots, parity });
                }
                other => return Err(err(ln, format!("unknown directive {other:?}"))),
            }
        }
        let width = width.unwrap_or(max_q + 1);
        Circuit::new(width, steps, detectors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
width 3
step
M1 X q0 -> s0
ROT Z q2 0.39269908169872414
step
M2 ZZ q0 q1 -> s1  # joint parity
IDLE q2
step
M2 -XY q2 q0 -> s2
DET s0 s1 = +1
DET s1 s2 = prev
DET s2 = -1
";

    #[test]
    fn round_trip() {
        let c: Circuit = SAMPLE.parse().unwrap();
        assert_eq!(c.steps().len(), 3);
        let again: Circuit = c.to_string().parse().unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = SAMPLE.replace("M2 ZZ q0 q1 -> s1", "M2 ZZ q0 -> s1");
        match bad.parse::<Circuit>() {
            Err(Error::ParseLine { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            SAMPLE.replace("-> s2", "-> s1").parse::<Circuit>(),
            Err(Error::SlotCollision(_))
        ));
        assert!(matches!(
            "step\nM1 X q0 -> s0\nDET s4 = +1\n".parse::<Circuit>(),
            Err(Error::UnfilledSlot(_))
        ));
        assert!("M1 X q0 -> s0\n".parse::<Circuit>().is_err());
        assert!("step\nM1 X q0 -> s0\nM1 Z q0 -> s1\n".parse::<Circuit>().is_err());
    }

    #[test]
    fn resolve_match_previous() {
        let c: Circuit = SAMPLE.parse().unwrap();
        let r = c.resolved_detectors();
        assert_eq!(r.len(), 3);
        // {s1, s2} matches {s0, s1}: s0 s2 = +1.
        assert_eq!(r[1].slots, [SlotId(0), SlotId(2)].into_iter().collect());
        assert_eq!(r[1].parity, Sign::Plus);
    }
}
