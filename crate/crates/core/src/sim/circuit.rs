use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, Sign};

/// Index of a measurement outcome in a circuit's record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotId(pub u32);

impl std::fmt::Display for SlotId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operation {
    /// Explicit idle. Untouched qubits idle anyway; this only documents it.
    Idle { qubit: usize },
    Meas1 { pauli: PauliString, qubit: usize, slot: SlotId },
    Meas2 { pauli: PauliString, qubits: [usize; 2], slot: SlotId },
    /// Timed coupling pulse `e^{-i phi A}`.
    Rotate { axis: PauliString, qubit: usize, phi: f64 },
}

impl Operation {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Operation::Idle { qubit } | Operation::Meas1 { qubit, .. } | Operation::Rotate { qubit, .. } => {
                vec![*qubit]
            }
            Operation::Meas2 { qubits, .. } => qubits.to_vec(),
        }
    }

    pub fn slot(&self) -> Option<SlotId> {
        match self {
            Operation::Meas1 { slot, .. } | Operation::Meas2 { slot, .. } => Some(*slot),
            _ => None,
        }
    }

    pub fn is_measurement(&self) -> bool {
        self.slot().is_some()
    }

    /// The measured operator on the full register.
    pub fn measured_pauli(&self, width: usize) -> Option<Result<PauliString>> {
        match self {
            Operation::Meas1 { pauli, qubit, .. } => Some(pauli.embed(width, &[*qubit])),
            Operation::Meas2 { pauli, qubits, .. } => Some(pauli.embed(width, qubits)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CircuitStep {
    pub ops: Vec<Operation>,
}

impl CircuitStep {
    pub fn new(ops: Vec<Operation>) -> CircuitStep {
        CircuitStep { ops }
    }

    /// Qubits measured in this step.
    pub fn measured_qubits(&self) -> BTreeSet<usize> {
        self.ops
            .iter()
            .filter(|o| o.is_measurement())
            .flat_map(|o| o.qubits())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectorParity {
    /// The product of the outcomes must equal this sign.
    Fixed(Sign),
    /// The product must equal that of the previous detector.
    MatchPrevious,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Detector {
    pub slots: Vec<SlotId>,
    pub parity: DetectorParity,
}

impl Detector {
    pub fn fixed(slots: Vec<SlotId>, parity: Sign) -> Detector {
        Detector {
            slots,
            parity: DetectorParity::Fixed(parity),
        }
    }
}

/// A detector in fixed-parity form: the product of the outcomes in `slots`
/// must be `parity`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResolvedDetector {
    pub slots: BTreeSet<SlotId>,
    pub parity: Sign,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    width: usize,
    steps: Vec<CircuitStep>,
    detectors: Vec<Detector>,
}

impl Circuit {
    pub fn new(width: usize, steps: Vec<CircuitStep>, detectors: Vec<Detector>) -> Result<Circuit> {
        let c = Circuit {
            width,
            steps,
            detectors,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn steps(&self) -> &[CircuitStep] {
        &self.steps
    }

    pub fn detectors(&self) -> &[Detector] {
        &self.detectors
    }

    pub fn with_detectors(mut self, detectors: Vec<Detector>) -> Result<Circuit> {
        self.detectors = detectors;
        self.validate()?;
        Ok(self)
    }

    /// Measurement slots in circuit order.
    pub fn slots(&self) -> Vec<SlotId> {
        self.steps
            .iter()
            .flat_map(|s| s.ops.iter().filter_map(|o| o.slot()))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.width > crate::pauli::MAX_QUBITS {
            return Err(Error::Invalid(format!("unsupported register width {}", self.width)));
        }
        let mut seen = BTreeSet::new();
        for (si, step) in self.steps.iter().enumerate() {
            let mut used = BTreeSet::new();
            for op in &step.ops {
                let expect = match op {
                    Operation::Meas2 { .. } => 2,
                    _ => 1,
                };
                let width_of = match op {
                    Operation::Meas1 { pauli, .. } | Operation::Meas2 { pauli, .. } => Some(pauli),
                    Operation::Rotate { axis, .. } => Some(axis),
                    Operation::Idle { .. } => None,
                };
                if let Some(p) = width_of {
                    if p.num_qubits() != expect {
                        return Err(Error::Invalid(format!("step {si}: {p} acts on the wrong number of qubits")));
                    }
                    if p.is_identity() {
                        return Err(Error::Invalid(format!("step {si}: identity operator")));
                    }
                }
                for q in op.qubits() {
                    if q >= self.width {
                        return Err(Error::QubitOutOfRange { qubit: q, width: self.width });
                    }
                    if !used.insert(q) {
                        return Err(Error::Invalid(format!("step {si}: qubit {q} used twice")));
                    }
                }
                if let Some(s) = op.slot() {
                    if !seen.insert(s) {
                        return Err(Error::SlotCollision(s));
                    }
                }
            }
        }
        for (i, d) in self.detectors.iter().enumerate() {
            if d.slots.is_empty() {
                return Err(Error::Invalid(format!("detector {i} has no slots")));
            }
            for s in &d.slots {
                if !seen.contains(s) {
                    return Err(Error::UnfilledSlot(*s));
                }
            }
            if i == 0 && d.parity == DetectorParity::MatchPrevious {
                return Err(Error::Invalid("first detector cannot match a previous one".into()));
            }
        }
        Ok(())
    }

    /// Fixed-parity form of every detector. `MatchPrevious` becomes the
    /// symmetric difference with the previous detector's slots; detectors
    /// that reduce to the empty set are dropped.
    pub fn resolved_detectors(&self) -> Vec<ResolvedDetector> {
        let mut out = Vec::new();
        let mut prev: Option<BTreeSet<SlotId>> = None;
        for d in &self.detectors {
            let slots: BTreeSet<SlotId> = odd_multiplicity(&d.slots);
            let r = match d.parity {
                DetectorParity::Fixed(p) => ResolvedDetector { slots: slots.clone(), parity: p },
                DetectorParity::MatchPrevious => ResolvedDetector {
                    slots: slots.symmetric_difference(prev.as_ref().expect("validated")).copied().collect(),
                    parity: Sign::Plus,
                },
            };
            prev = Some(slots);
            if !r.slots.is_empty() {
                out.push(r);
            }
        }
        out
    }
}

/// Slots appearing an odd number of times; repeated outcomes cancel.
fn odd_multiplicity(slots: &[SlotId]) -> BTreeSet<SlotId> {
    let mut out = BTreeSet::new();
    for s in slots {
        if !out.insert(*s) {
            out.remove(s);
        }
    }
    out
}

/// Builds circuits with sequentially numbered slots.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    width: usize,
    steps: Vec<CircuitStep>,
    next_slot: u32,
}

impl CircuitBuilder {
    pub fn new(width: usize) -> CircuitBuilder {
        CircuitBuilder {
            width,
            steps: Vec::new(),
            next_slot: 0,
        }
    }

    /// Opens a new step.
    pub fn step(&mut self) -> &mut CircuitBuilder {
        self.steps.push(CircuitStep::default());
        self
    }

    fn push(&mut self, op: Operation) {
        if self.steps.is_empty() {
            self.steps.push(CircuitStep::default());
        }
        self.steps.last_mut().expect("nonempty").ops.push(op);
    }

    fn fresh(&mut self) -> SlotId {
        let s = SlotId(self.next_slot);
        self.next_slot += 1;
        s
    }

    pub fn meas1(&mut self, pauli: PauliString, qubit: usize) -> SlotId {
        let slot = self.fresh();
        self.push(Operation::Meas1 { pauli, qubit, slot });
        slot
    }

    pub fn meas2(&mut self, pauli: PauliString, q0: usize, q1: usize) -> SlotId {
        let slot = self.fresh();
        self.push(Operation::Meas2 {
            pauli,
            qubits: [q0, q1],
            slot,
        });
        slot
    }

    pub fn rotate(&mut self, axis: PauliString, qubit: usize, phi: f64) {
        self.push(Operation::Rotate { axis, qubit, phi });
    }

    pub fn steps(&self) -> &[CircuitStep] {
        &self.steps
    }

    pub fn build(self, detectors: Vec<Detector>) -> Result<Circuit> {
        Circuit::new(self.width, self.steps, detectors)
    }
}
