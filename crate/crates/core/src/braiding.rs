//! Measurement-based single-qubit Cliffords.
//!
//! An auxiliary qubit `a` (qubit 0) and the computational qubit `b` (qubit
//! 1) are measured in a short sequence of one- and two-qubit Paulis. Up to a
//! Pauli that depends on the outcomes, the sequence applies a Clifford from
//! one of the six Pauli equivalence classes to `b`. Sequences here are
//! stored in application order: the first entry is measured first.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{timed_coupling_rotation, NoiseParams};
use crate::error::{Error, Result};
use crate::operator::{average_gate_fidelity, projector, DenseOperator, Normalization, Superoperator, C64};
use crate::pauli::{pauli, Letter, PauliKey, PauliString, Sign};
use crate::sim::{run_circuit, Circuit, CircuitBuilder, RunOptions, SlotId, TrajectoryEnsemble};
use crate::state::PauliState;
use crate::tomography::LinearGst;

pub const AUX: usize = 0;
pub const COMP: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CliffordClass {
    Identity,
    H,
    S,
    HSH,
    SH,
    HS,
}

impl CliffordClass {
    pub const ALL: [CliffordClass; 6] = [
        CliffordClass::Identity,
        CliffordClass::H,
        CliffordClass::S,
        CliffordClass::HSH,
        CliffordClass::SH,
        CliffordClass::HS,
    ];
    pub const NONTRIVIAL: [CliffordClass; 5] = [
        CliffordClass::H,
        CliffordClass::S,
        CliffordClass::HSH,
        CliffordClass::SH,
        CliffordClass::HS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CliffordClass::Identity => "I",
            CliffordClass::H => "H",
            CliffordClass::S => "S",
            CliffordClass::HSH => "HSH",
            CliffordClass::SH => "SH",
            CliffordClass::HS => "HS",
        }
    }

    pub fn parse(s: &str) -> Result<CliffordClass> {
        CliffordClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s) || (s == "1" && *c == CliffordClass::Identity))
            .ok_or_else(|| Error::Parse(format!("unknown Clifford class `{s}`")))
    }

    /// Representative unitary. `SH` is the matrix product `S H`, so `H`
    /// acts first.
    pub fn unitary(self) -> DenseOperator {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let h = DMatrix::from_row_slice(2, 2, &[C64::new(r, 0.0), C64::new(r, 0.0), C64::new(r, 0.0), C64::new(-r, 0.0)]);
        let s = DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0)]);
        let m = match self {
            CliffordClass::Identity => DMatrix::identity(2, 2),
            CliffordClass::H => h,
            CliffordClass::S => s,
            CliffordClass::HSH => &h * &s * &h,
            CliffordClass::SH => &s * &h,
            CliffordClass::HS => &h * &s,
        };
        DenseOperator::from_matrix(m).expect("2x2")
    }
}

impl std::fmt::Display for CliffordClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Two-qubit Pauli bases the hardware can measure directly.
pub const NATIVE_TWO_QUBIT: [&str; 4] = ["ZZ", "YY", "YZ", "ZY"];

/// Measurements over `(aux, comp)`, first to last.
pub fn sequence_for(class: CliffordClass) -> Vec<PauliString> {
    let s: &[&str] = match class {
        CliffordClass::Identity => &[],
        CliffordClass::H => &["XI", "ZY", "YI", "XI"],
        CliffordClass::S => &["XI", "ZZ", "YI", "XI"],
        CliffordClass::HSH => &["XI", "ZZ", "ZY", "XI"],
        CliffordClass::SH => &["XI", "ZZ", "ZY", "YI", "XI"],
        CliffordClass::HS => &["XI", "ZY", "ZZ", "YI", "XI"],
    };
    s.iter().map(|p| pauli(p)).collect()
}

fn key(l: Letter) -> PauliKey {
    PauliString::single(1, 0, l).key()
}

/// Product of single-qubit Paulis with the phase dropped.
fn times(a: Letter, b: Letter) -> Letter {
    key(a).mul(key(b)).0.letter(0)
}

fn pow(l: Letter, e: i32) -> Letter {
    if e == 0 {
        Letter::I
    } else {
        l
    }
}

/// `(1 + s)/2` for a sign product `s`.
fn up(s: i32) -> i32 {
    (1 + s) / 2
}

/// `(1 - s)/2` for a sign product `s`.
fn down(s: i32) -> i32 {
    (1 - s) / 2
}

/// The Pauli that, applied after the sequence, leaves exactly the class
/// representative on the computational qubit.
pub fn pauli_correction(class: CliffordClass, outcomes: &[Sign]) -> Result<Letter> {
    let n = sequence_for(class).len();
    if outcomes.len() != n {
        return Err(Error::Invalid(format!(
            "class {class} has {n} measurements but {} outcomes were given",
            outcomes.len()
        )));
    }
    let s: Vec<i32> = outcomes.iter().map(|o| o.to_i32()).collect();
    Ok(match class {
        CliffordClass::Identity => Letter::I,
        CliffordClass::H => times(pow(Letter::Y, up(s[0] * s[1] * s[2])), Letter::X),
        CliffordClass::S => pow(Letter::Z, up(s[0] * s[1] * s[2])),
        CliffordClass::HSH => times(pow(Letter::Y, down(s[0] * s[3])), pow(Letter::X, up(s[1] * s[2]))),
        CliffordClass::SH => times(pow(Letter::Y, down(s[0] * s[2] * s[3])), pow(Letter::Z, down(s[1] * s[2]))),
        CliffordClass::HS => times(pow(Letter::X, up(s[1] * s[2])), pow(Letter::Z, up(s[0] * s[1] * s[3]))),
    })
}

/// Software-tracked Pauli on the computational qubit; signs are dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct PauliFrame {
    letter: Option<Letter>,
}

impl PauliFrame {
    pub fn new() -> PauliFrame {
        PauliFrame::default()
    }

    pub fn letter(&self) -> Letter {
        self.letter.unwrap_or(Letter::I)
    }

    /// Records a further Pauli applied after the current one.
    pub fn push(&mut self, l: Letter) {
        self.letter = Some(times(l, self.letter()));
    }

    /// Moves the frame through a Clifford `u`: afterwards the frame is
    /// `u F u^dagger`.
    pub fn conjugate(&mut self, u: &DenseOperator) {
        let f = crate::operator::pauli_matrix(&PauliString::single(1, 0, self.letter()));
        let g = u.matmul(&f).matmul(&u.dagger());
        let l = Letter::ALL
            .into_iter()
            .find(|&l| {
                let p = crate::operator::pauli_matrix(&PauliString::single(1, 0, l));
                p.inner(&g).norm() > 1.0
            })
            .expect("a Clifford maps Paulis to Paulis");
        self.letter = Some(l);
    }

    /// Whether an outcome of measuring `basis` must be flipped.
    pub fn flips(&self, basis: Letter) -> bool {
        key(self.letter()).anticommutes(key(basis))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub class: CliffordClass,
    pub vectors_checked: usize,
    /// Largest `max |M - c T| / max |M|` over branches with nonzero weight.
    pub max_deviation: f64,
    /// Outcome vectors whose projector product vanishes.
    pub zero_probability: Vec<Vec<Sign>>,
    /// Outcome vectors whose deviation exceeds the tolerance.
    pub failures: Vec<Vec<Sign>>,
}

impl SequenceReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub const SEQUENCE_TOL: f64 = 1e-12;

/// Checks, for every outcome vector, that the product of projectors equals
/// `|x_last><x_first| (x) (correction U)` up to a scalar.
pub fn verify_sequence_identity(class: CliffordClass) -> SequenceReport {
    verify_sequence_with(class, &sequence_for(class), |o| pauli_correction(class, o).expect("length matches"))
}

/// As [`verify_sequence_identity`] with an arbitrary sequence and
/// correction rule.
pub fn verify_sequence_with(
    class: CliffordClass,
    seq: &[PauliString],
    correction: impl Fn(&[Sign]) -> Letter,
) -> SequenceReport {
    let n = seq.len();
    let u = class.unitary();
    let mut report = SequenceReport {
        class,
        vectors_checked: 0,
        max_deviation: 0.0,
        zero_probability: Vec::new(),
        failures: Vec::new(),
    };
    if n == 0 {
        return report;
    }
    for bits in 0u32..(1 << n) {
        let outcomes: Vec<Sign> = (0..n).map(|i| Sign::from_bool_minus(bits >> i & 1 == 1)).collect();
        report.vectors_checked += 1;
        let mut m = DenseOperator::identity(2);
        for (p, s) in seq.iter().zip(&outcomes) {
            m = projector(p, *s).expect("non-identity").matmul(&m);
        }
        let scale = m.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale < 1e-12 {
            report.zero_probability.push(outcomes);
            continue;
        }
        let c = crate::operator::pauli_matrix(&PauliString::single(1, 0, correction(&outcomes)));
        let t = x_ketbra(outcomes[n - 1], outcomes[0]).kron(&c.matmul(&u));
        let k = t.inner(&m) / t.inner(&t);
        let dev = m.sub(&t.scale(k)).matrix().iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
        report.max_deviation = report.max_deviation.max(dev);
        if dev > SEQUENCE_TOL {
            report.failures.push(outcomes);
        }
    }
    report
}

/// `|x_a><x_b|` for X eigenstates with eigenvalues `a`, `b`.
fn x_ketbra(a: Sign, b: Sign) -> DenseOperator {
    let (a, b) = (a.to_f64(), b.to_f64());
    let m = DMatrix::from_row_slice(2, 2, &[1.0, b, a, a * b]).map(|v| C64::new(v / 2.0, 0.0));
    DenseOperator::from_matrix(m).expect("2x2")
}

/// The class sequence as a two-qubit circuit, one measurement per step.
/// Returns the circuit and its slots in measurement order.
pub fn class_circuit(class: CliffordClass) -> (Circuit, Vec<SlotId>) {
    let mut b = CircuitBuilder::new(2);
    let slots = push_sequence(&mut b, class);
    (b.build(Vec::new()).expect("valid"), slots)
}

fn push_sequence(b: &mut CircuitBuilder, class: CliffordClass) -> Vec<SlotId> {
    let mut slots = Vec::new();
    for p in sequence_for(class) {
        b.step();
        let slot = match (p.letter(AUX), p.letter(COMP)) {
            (a, Letter::I) => b.meas1(PauliString::single(1, 0, a), AUX),
            (a, c) => b.meas2(
                PauliString::from_letters(&[a, c], Sign::Plus).expect("two letters"),
                AUX,
                COMP,
            ),
        };
        slots.push(slot);
    }
    slots
}

/// Runs the noisy sequence on `|+><+| (x) P` for each Pauli `P`, applies the
/// outcome-dependent correction, traces out the auxiliary qubit and sums
/// the branches. Returns the transfer matrix on the computational qubit.
pub fn simulate_class(class: CliffordClass, noise: &NoiseParams) -> Result<Superoperator> {
    noise.validate()?;
    if class == CliffordClass::Identity {
        return Ok(Superoperator::identity(1));
    }
    let (circuit, slots) = class_circuit(class);
    let mut m = DMatrix::zeros(4, 4);
    for (j, lj) in Letter::ALL.into_iter().enumerate() {
        let comp = PauliString::single(2, COMP, lj).key();
        let aux_x = PauliString::single(2, AUX, Letter::X).key();
        let input = PauliState::from_coefficients(2, [(comp, 2.0), (comp.mul(aux_x).0, 2.0)]);
        let out = run_circuit(&circuit, noise, TrajectoryEnsemble::from_state(input), RunOptions::default())?;
        let mut total = PauliState::zero(1);
        for (rec, st) in out.branches() {
            let outcomes: Vec<Sign> = slots.iter().map(|s| rec[s]).collect();
            let c = pauli_correction(class, &outcomes)?;
            let mut st = st.clone();
            st.conjugate_pauli(PauliString::single(2, COMP, c).key());
            total.add_assign(&st.trace_out(AUX)?);
        }
        for (i, li) in Letter::ALL.into_iter().enumerate() {
            m[(i, j)] = total.coefficient(key(li)) / 2.0;
        }
    }
    Superoperator::from_matrix(1, m)
}

pub fn class_fidelity(class: CliffordClass, noise: &NoiseParams) -> Result<f64> {
    average_gate_fidelity(
        &simulate_class(class, noise)?,
        &class.unitary(),
        Normalization::RequireTracePreserving,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub p1: f64,
    pub pa: f64,
    pub p2: f64,
    pub class: CliffordClass,
    pub fidelity: f64,
}

/// Average gate fidelity over the grid, `p1` outer and `p_a` inner.
pub fn fidelity_scan(class: CliffordClass, p1_grid: &[f64], pa_grid: &[f64], p2: f64) -> Result<Vec<FidelityPoint>> {
    if p1_grid.is_empty() || pa_grid.is_empty() {
        return Err(Error::Invalid("empty fidelity grid".into()));
    }
    let points: Vec<(f64, f64)> = p1_grid.iter().flat_map(|&p1| pa_grid.iter().map(move |&pa| (p1, pa))).collect();
    points
        .par_iter()
        .map(|&(p1, pa)| {
            let noise = NoiseParams::new(pa, p1, p2, 0.0)?;
            Ok(FidelityPoint {
                p1,
                pa,
                p2,
                class,
                fidelity: class_fidelity(class, &noise)?,
            })
        })
        .collect()
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// One tomography experiment: reset, prepare by measuring `prep`, optionally
/// apply the class, then measure `meas`.
#[derive(Clone, Debug)]
pub struct TomographyCircuit {
    pub circuit: Circuit,
    pub prep: Letter,
    pub meas: Letter,
    pub with_class: bool,
    pub prep_slot: SlotId,
    pub class_slots: Vec<SlotId>,
    pub meas_slot: SlotId,
}

const TOMO_BASES: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

/// The nine experiments with the class followed by the nine without it.
/// The reset is the X-then-Z measurement pair on the computational qubit.
pub fn gateset_experiment_suite(class: CliffordClass) -> Vec<TomographyCircuit> {
    let mut out = Vec::new();
    for with_class in [true, false] {
        for prep in TOMO_BASES {
            for meas in TOMO_BASES {
                let mut b = CircuitBuilder::new(2);
                b.step();
                b.meas1(pauli("X"), COMP);
                b.step();
                b.meas1(pauli("Z"), COMP);
                b.step();
                let prep_slot = b.meas1(PauliString::single(1, 0, prep), COMP);
                let class_slots = if with_class { push_sequence(&mut b, class) } else { Vec::new() };
                b.step();
                let meas_slot = b.meas1(PauliString::single(1, 0, meas), COMP);
                out.push(TomographyCircuit {
                    circuit: b.build(Vec::new()).expect("valid"),
                    prep,
                    meas,
                    with_class,
                    prep_slot,
                    class_slots,
                    meas_slot,
                });
            }
        }
    }
    out
}

/// `Pr(meas = r | prep = s)` for one experiment, with the frame applied to
/// the final outcome. Keys are `(s, r)`.
fn conditional_outcomes(t: &TomographyCircuit, class: CliffordClass, noise: &NoiseParams) -> Result<BTreeMap<(Sign, Sign), f64>> {
    let init = TrajectoryEnsemble::from_state(PauliState::maximally_mixed(2));
    let out = run_circuit(&t.circuit, noise, init, RunOptions::default())?;
    let mut joint: BTreeMap<(Sign, Sign), f64> = BTreeMap::new();
    let mut prep_total: BTreeMap<Sign, f64> = BTreeMap::new();
    for (rec, st) in out.branches() {
        let w = st.trace();
        let s = rec[&t.prep_slot];
        let mut r = rec[&t.meas_slot];
        if t.with_class {
            let outcomes: Vec<Sign> = t.class_slots.iter().map(|x| rec[x]).collect();
            let mut frame = PauliFrame::new();
            frame.push(pauli_correction(class, &outcomes)?);
            if frame.flips(t.meas) {
                r = r.flip();
            }
        }
        *joint.entry((s, r)).or_insert(0.0) += w;
        *prep_total.entry(s).or_insert(0.0) += w;
    }
    let mut cond = BTreeMap::new();
    for ((s, r), w) in joint {
        let n = prep_total[&s];
        if n <= 0.0 {
            return Err(Error::ZeroAcceptance);
        }
        cond.insert((s, r), w / n);
    }
    Ok(cond)
}

/// Runs the suite and inverts it, returning the class map on `(1, x, y, z)`
/// in the gauge of ideal preparations.
pub fn gateset_tomography(class: CliffordClass, noise: &NoiseParams) -> Result<Superoperator> {
    let suite = gateset_experiment_suite(class);
    // Columns (prep, s), rows (meas, r), both ordered X+, X-, Y+, ...
    let col = |l: Letter, s: Sign| 2 * TOMO_BASES.iter().position(|&b| b == l).expect("tomography basis") + usize::from(s.is_minus());
    let mut d = DMatrix::zeros(6, 6);
    let mut d0 = DMatrix::zeros(6, 6);
    for t in &suite {
        let cond = conditional_outcomes(t, class, noise)?;
        let target = if t.with_class { &mut d } else { &mut d0 };
        for ((s, r), p) in cond {
            target[(col(t.meas, r), col(t.prep, s))] = p;
        }
    }
    let mut rho = DMatrix::zeros(4, 6);
    for (i, l) in TOMO_BASES.into_iter().enumerate() {
        for s in [Sign::Plus, Sign::Minus] {
            let c = col(l, s);
            rho[(0, c)] = 1.0;
            rho[(i + 1, c)] = s.to_f64();
        }
    }
    let gst = LinearGst::new(rho, &d0, &["1", "x", "y", "z"])?;
    Superoperator::from_matrix(1, gst.estimate(&d))
}

/// Fidelity of `e^{-i phi Z}|+>` with the T state `(|0> + e^{i pi/4}|1>)/sqrt 2`
/// for a pulse of `phi = pi/8 + phase_error`.
pub fn magic_state_fidelity(phase_error: f64) -> Result<f64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DenseOperator::pure(&[C64::new(r, 0.0), C64::new(r, 0.0)])?;
    let ch = timed_coupling_rotation(&pauli("Z"), std::f64::consts::FRAC_PI_8 + phase_error)?;
    let out = ch.apply_dense(&plus);
    let t = DenseOperator::pure(&[C64::new(r, 0.0), C64::from_polar(r, std::f64::consts::FRAC_PI_4)])?;
    Ok(t.inner(&out).re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signs(v: &[i32]) -> Vec<Sign> {
        v.iter().map(|&s| Sign::from_i32(s).unwrap()).collect()
    }

    #[test]
    fn sequences_use_native_bases() {
        for c in CliffordClass::NONTRIVIAL {
            let seq = sequence_for(c);
            assert_eq!(seq.first().unwrap().to_string(), "XI");
            assert_eq!(seq.last().unwrap().to_string(), "XI");
            for p in seq.iter().filter(|p| p.weight() == 2) {
                assert!(NATIVE_TWO_QUBIT.contains(&p.to_string().as_str()), "{p}");
            }
        }
        let s: Vec<String> = sequence_for(CliffordClass::S).iter().map(|p| p.to_string()).collect();
        assert_eq!(s, ["XI", "ZZ", "YI", "XI"]);
        let h: Vec<String> = sequence_for(CliffordClass::H).iter().map(|p| p.to_string()).collect();
        assert_eq!(h, ["XI", "ZY", "YI", "XI"]);
        assert!(sequence_for(CliffordClass::Identity).is_empty());
    }

    #[test]
    fn correction_exponents() {
        let s = CliffordClass::S;
        assert_eq!(pauli_correction(s, &signs(&[1, 1, 1, 1])).unwrap(), Letter::Z);
        assert_eq!(pauli_correction(s, &signs(&[1, -1, 1, 1])).unwrap(), Letter::I);
        // HSH with s0 = s3 and s1 = -s2: both exponents vanish.
        assert_eq!(pauli_correction(CliffordClass::HSH, &signs(&[1, 1, -1, 1])).unwrap(), Letter::I);
        assert_eq!(pauli_correction(CliffordClass::HSH, &signs(&[1, 1, 1, 1])).unwrap(), Letter::X);
        assert_eq!(pauli_correction(CliffordClass::HSH, &signs(&[1, 1, -1, -1])).unwrap(), Letter::Y);
        assert!(pauli_correction(s, &signs(&[1, 1])).is_err());
    }

    #[test]
    fn sequences_hold_for_every_outcome() {
        for c in CliffordClass::NONTRIVIAL {
            let r = verify_sequence_identity(c);
            assert_eq!(r.vectors_checked, 1 << sequence_for(c).len());
            assert!(r.passed(), "{r:?}");
            assert!(r.max_deviation < SEQUENCE_TOL);
        }
    }

    #[test]
    fn corrupted_correction_is_caught() {
        let c = CliffordClass::S;
        let r = verify_sequence_with(c, &sequence_for(c), |o| {
            let s = o[0].to_i32() * o[1].to_i32() * o[2].to_i32();
            pow(Letter::Z, down(s))
        });
        assert!(!r.passed());
        assert_eq!(r.failures.len(), r.vectors_checked - r.zero_probability.len());
    }

    #[test]
    fn noiseless_simulation_is_the_class_unitary() {
        for c in CliffordClass::ALL {
            let got = simulate_class(c, &NoiseParams::noiseless()).unwrap();
            let want = Superoperator::from_unitary(&c.unitary());
            assert!(got.max_abs_diff(&want) < 1e-10, "{c}");
        }
    }

    #[test]
    fn composition_at_zero_noise() {
        let n = NoiseParams::noiseless();
        let h = simulate_class(CliffordClass::H, &n).unwrap();
        let s = simulate_class(CliffordClass::S, &n).unwrap();
        let hsh = simulate_class(CliffordClass::HSH, &n).unwrap();
        assert!(h.after(&s).after(&h).max_abs_diff(&hsh) < 1e-10);
    }

    #[test]
    fn noisy_simulation_is_a_channel() {
        let n = NoiseParams::new(0.02, 0.05, 0.1, 0.0).unwrap();
        for c in CliffordClass::NONTRIVIAL {
            let g = simulate_class(c, &n).unwrap();
            assert!(g.trace_deviation() < 1e-12);
            let f = class_fidelity(c, &n).unwrap();
            assert!(0.5 < f && f < 1.0, "{c} {f}");
        }
    }

    #[test]
    fn pinned_fidelity() {
        let n = NoiseParams::new(0.02, 0.05, 0.1, 0.0).unwrap();
        let f = class_fidelity(CliffordClass::S, &n).unwrap();
        assert!((f - PINNED_S).abs() < 1e-9, "{f:.15}");
    }

    const PINNED_S: f64 = 0.788941215895168;

    /// Same map built from dense instrument matrices, branch by branch.
    fn dense_class_map(class: CliffordClass, n: &NoiseParams) -> Superoperator {
        use crate::channels::{idle_channel, meas1_channel, meas2_channel};
        use crate::operator::channel_to_superop;
        let seq = sequence_for(class);
        let idle = idle_channel(n.p1, n.theta).unwrap().embed(2, &[COMP]).unwrap();
        channel_to_superop(1, |rho_b| {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let plus = DenseOperator::pure(&[C64::new(r, 0.0), C64::new(r, 0.0)]).unwrap();
            let mut total = DenseOperator::zeros(1);
            for bits in 0u32..(1 << seq.len()) {
                let o: Vec<Sign> = (0..seq.len()).map(|i| Sign::from_bool_minus(bits >> i & 1 == 1)).collect();
                let mut rho = plus.kron(rho_b);
                for (p, s) in seq.iter().zip(&o) {
                    rho = if p.letter(COMP) == Letter::I {
                        let m = meas1_channel(&PauliString::single(1, 0, p.letter(AUX)), *s, n.p_a, n.p1).unwrap();
                        idle.apply_dense(&m.embed(2, &[AUX]).unwrap().apply_dense(&rho))
                    } else {
                        meas2_channel(p, *s, n).unwrap().apply_dense(&rho)
                    };
                }
                let c = crate::operator::pauli_matrix(&PauliString::single(2, COMP, pauli_correction(class, &o).unwrap()));
                total = total.add(&rho.conjugate(&c).partial_trace(&[AUX]).unwrap());
            }
            total
        })
    }

    #[test]
    fn dense_route_agrees() {
        let n = NoiseParams::new(0.02, 0.05, 0.1, 0.0).unwrap();
        for c in CliffordClass::NONTRIVIAL {
            let d = simulate_class(c, &n).unwrap().max_abs_diff(&dense_class_map(c, &n));
            assert!(d < 1e-12, "{c} {d}");
        }
    }

    #[test]
    fn two_qubit_noise_matters_less_than_one_qubit_noise() {
        let base = class_fidelity(CliffordClass::S, &NoiseParams::noiseless()).unwrap();
        let dp2 = class_fidelity(CliffordClass::S, &NoiseParams::new(0.0, 0.0, 0.1, 0.0).unwrap()).unwrap();
        let dp1 = class_fidelity(CliffordClass::S, &NoiseParams::new(0.0, 0.1, 0.0, 0.0).unwrap()).unwrap();
        assert!((base - 1.0).abs() < 1e-12);
        assert!(base - dp2 < base - dp1, "{dp2} {dp1}");
    }

    #[test]
    fn scan_is_ordered_and_monotone() {
        let g = linspace(0.0, 0.2, 4);
        let scan = fidelity_scan(CliffordClass::S, &g, &g, 0.1).unwrap();
        assert_eq!(scan.len(), 16);
        for i in 0..4 {
            for j in 0..4 {
                let p = &scan[4 * i + j];
                assert_eq!((p.p1, p.pa), (g[i], g[j]));
                if i > 0 {
                    assert!(p.fidelity <= scan[4 * (i - 1) + j].fidelity + 1e-12);
                }
                if j > 0 {
                    assert!(p.fidelity <= scan[4 * i + j - 1].fidelity + 1e-12);
                }
            }
        }
    }

    #[test]
    fn suite_shape_and_text_round_trip() {
        let suite = gateset_experiment_suite(CliffordClass::HS);
        assert_eq!(suite.len(), 18);
        assert_eq!(suite.iter().filter(|t| t.with_class).count(), 9);
        for t in &suite {
            let text = t.circuit.to_string();
            let back: Circuit = text.parse().unwrap();
            assert_eq!(back, t.circuit);
        }
    }

    #[test]
    fn noiseless_tomography_recovers_class() {
        for c in CliffordClass::NONTRIVIAL {
            let est = gateset_tomography(c, &NoiseParams::noiseless()).unwrap();
            let want = Superoperator::from_unitary(&c.unitary());
            assert!(est.max_abs_diff(&want) < 1e-8, "{c}");
        }
    }

    #[test]
    fn frame_tracking() {
        let mut f = PauliFrame::new();
        f.push(Letter::X);
        f.push(Letter::Z);
        assert_eq!(f.letter(), Letter::Y);
        assert!(f.flips(Letter::X) && !f.flips(Letter::Y));
        let mut f = PauliFrame::new();
        f.push(Letter::X);
        f.conjugate(&CliffordClass::H.unitary());
        assert_eq!(f.letter(), Letter::Z);
    }

    #[test]
    fn magic_state() {
        for d in [0.0, 0.05, 0.1] {
            let f = magic_state_fidelity(d).unwrap();
            assert!((f - (1.0 - d.sin().powi(2))).abs() < 1e-10, "{d} {f}");
        }
    }
}
