//! Noise model: physical parameters, the derived error rates and the
//! measurement / idle channels built from them.
//!
//! A [`Channel`] is a short list of stages applied left to right. Every stage
//! maps Pauli strings to real combinations of Pauli strings, which is what
//! lets the simulator stay in the sparse Pauli representation; the dense
//! route ([`Channel::apply_dense`]) exists as an independent check.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{channel_to_superop, pauli_matrix, projector, DenseOperator, Superoperator, C64};
use crate::pauli::{Letter, PauliKey, PauliString, Sign};
use crate::state::PauliState;

/// Reduced Planck constant in eV s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;

/// Error rates of the instrument model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Assignment (readout) error probability.
    pub p_a: f64,
    /// Single-qubit depolarizing probability per idle step.
    pub p1: f64,
    /// Correlated two-qubit depolarizing probability per joint measurement.
    pub p2: f64,
    /// Coherent Z over-rotation angle per step.
    pub theta: f64,
}

impl NoiseParams {
    pub fn new(p_a: f64, p1: f64, p2: f64, theta: f64) -> Result<NoiseParams> {
        let n = NoiseParams { p_a, p1, p2, theta };
        n.validate()?;
        Ok(n)
    }

    pub fn noiseless() -> NoiseParams {
        NoiseParams::default()
    }

    pub fn validate(&self) -> Result<()> {
        check_range("p_a", self.p_a, 0.0, 0.5)?;
        check_range("p1", self.p1, 0.0, 0.75)?;
        check_range("p2", self.p2, 0.0, 15.0 / 16.0)?;
        if !(self.theta >= 0.0 && self.theta < std::f64::consts::PI) {
            return Err(Error::OutOfRange {
                name: "theta",
                value: self.theta,
                lo: 0.0,
                hi: std::f64::consts::PI,
            });
        }
        Ok(())
    }

    /// Sets one field by name, as used by `key=value` overrides.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "p_a" | "pa" => self.p_a = value,
            "p1" => self.p1 = value,
            "p2" => self.p2 = value,
            "theta" => self.theta = value,
            _ => return Err(Error::Parse(format!("unknown noise parameter {key:?}"))),
        }
        Ok(())
    }
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !(value >= lo && value <= hi) {
        return Err(Error::OutOfRange { name, value, lo, hi });
    }
    Ok(())
}

/// `key = value` lines, floats in shortest round-trip form.
impl fmt::Display for NoiseParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p_a = {:?}", self.p_a)?;
        writeln!(f, "p1 = {:?}", self.p1)?;
        writeln!(f, "p2 = {:?}", self.p2)?;
        writeln!(f, "theta = {:?}", self.theta)
    }
}

impl FromStr for NoiseParams {
    type Err = Error;

    /// Missing keys default to zero; the result is validated.
    fn from_str(s: &str) -> Result<NoiseParams> {
        let mut n = NoiseParams::default();
        for (i, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::ParseLine {
                line: i + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            let value: f64 = v.trim().parse().map_err(|_| Error::ParseLine {
                line: i + 1,
                msg: format!("bad number {:?}", v.trim()),
            })?;
            n.set(k.trim(), value).map_err(|e| Error::ParseLine {
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        n.validate()?;
        Ok(n)
    }
}

/// Device-level inputs from which [`NoiseParams`] are derived.
///
/// Energies in eV, times in seconds, noise spectral densities in 1/s per
/// squared energy ratio. Every field is optional so that missing inputs can
/// be reported by name.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Readout signal-to-noise ratio.
    pub snr: Option<f64>,
    /// Superconducting gap over temperature, `Delta / k_B T`.
    #[serde(rename = "delta_over_kT", alias = "delta_over_kt")]
    pub delta_over_kt: Option<f64>,
    /// Wire length over coherence length.
    #[serde(rename = "L_over_xi", alias = "l_over_xi")]
    pub l_over_xi: Option<f64>,
    /// Superconducting gap `Delta` in eV.
    #[serde(rename = "delta_eV", alias = "delta_ev")]
    pub delta_ev: Option<f64>,
    /// Electron-phonon time scale in s.
    #[serde(rename = "tau_elph_s", alias = "tau_elph")]
    pub tau_elph: Option<f64>,
    /// Measurement (step) duration in s.
    #[serde(rename = "tau_meas_s", alias = "tau_meas")]
    pub tau_meas: Option<f64>,
    /// Splitting during a measurement, eV.
    #[serde(rename = "eps_mst_eV", alias = "eps_mst")]
    pub eps_mst: Option<f64>,
    /// Residual splitting, eV. Defaults to `Delta e^{-L/xi}`.
    #[serde(rename = "eps_res_eV", alias = "eps_res")]
    pub eps_res: Option<f64>,
    /// Charge-noise spectral density at `+eps_mst`.
    pub psd_plus: Option<f64>,
    /// Charge-noise spectral density at `-eps_mst`.
    pub psd_minus: Option<f64>,
    /// Correlated two-qubit error, not derivable from the inputs above.
    pub p2: Option<f64>,
}

fn need(v: Option<f64>, field: &'static str, needed_for: &'static str) -> Result<f64> {
    let x = v.ok_or(Error::MissingField { field, needed_for })?;
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Invalid(format!("{field} must be finite and nonnegative, got {x}")));
    }
    Ok(x)
}

/// Probability that Gaussian readout noise crosses the threshold,
/// `[1 - erf(SNR / sqrt 2)] / 2`.
pub fn p_a_from_snr(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::Invalid(format!("SNR must be nonnegative, got {snr}")));
    }
    Ok(0.5 * libm::erfc(snr / std::f64::consts::SQRT_2))
}

/// `p1 = (3/4)(1 - e^{-tau / T_life})`; an infinite lifetime gives zero.
pub fn p1_from_lifetime(tau: f64, t_life: f64) -> Result<f64> {
    if !(tau >= 0.0) || !(t_life > 0.0) {
        return Err(Error::Invalid(format!("need tau >= 0 and T_life > 0, got {tau}, {t_life}")));
    }
    Ok(0.75 * -(-tau / t_life).exp_m1())
}

/// Quasiparticle-limited lifetime `tau_elph e^{+Delta / k_B T}`.
pub fn t_life_delta(tau_elph: f64, delta_over_kt: f64) -> f64 {
    tau_elph * delta_over_kt.exp()
}

/// Charge-noise-limited lifetime `(eps_mst / eps_res)^2 / (S_+ + S_-)`.
pub fn t_life_eps(eps_mst: f64, eps_res: f64, psd_plus: f64, psd_minus: f64) -> Result<f64> {
    let s = psd_plus + psd_minus;
    if s <= 0.0 || eps_res <= 0.0 {
        return Err(Error::Invalid(
            "charge-noise lifetime needs a positive residual splitting and spectral density".into(),
        ));
    }
    Ok((eps_mst / eps_res).powi(2) / s)
}

/// Residual splitting of a wire of length `L`: `Delta e^{-L / xi}`.
pub fn eps_res_wire(delta_ev: f64, l_over_xi: f64) -> f64 {
    delta_ev * (-l_over_xi).exp()
}

/// Phase accumulated by a splitting `eps` over `tau`: `eps tau / hbar`.
pub fn theta_from_splitting(eps_ev: f64, tau: f64) -> f64 {
    eps_ev * tau / HBAR_EV_S
}

/// Extra depolarizing probability that a Pauli twirl turns a coherent
/// rotation by `theta` into.
pub fn twirled_p1_increment(theta: f64) -> f64 {
    theta.sin().powi(2)
}

/// The noise rates implied by device parameters. Lifetimes from independent
/// mechanisms combine as parallel rates.
pub fn derive_noise(phys: &PhysicalParams) -> Result<NoiseParams> {
    let snr = need(phys.snr, "snr", "the assignment error p_a")?;
    let p_a = p_a_from_snr(snr)?;

    let tau = need(phys.tau_meas, "tau_meas_s", "the depolarizing rate p1 and the rotation theta")?;
    let tau_elph = need(phys.tau_elph, "tau_elph_s", "the quasiparticle lifetime")?;
    let dkt = need(phys.delta_over_kt, "delta_over_kT", "the quasiparticle lifetime")?;
    let mut rate = 1.0 / t_life_delta(tau_elph, dkt);

    let eps_res = match phys.eps_res {
        Some(e) => need(Some(e), "eps_res_eV", "the residual splitting")?,
        None => {
            let delta = need(phys.delta_ev, "delta_eV", "the residual splitting behind theta")?;
            let lx = need(phys.l_over_xi, "L_over_xi", "the residual splitting behind theta")?;
            eps_res_wire(delta, lx)
        }
    };

    // The charge-noise channel contributes only when its inputs are given.
    if phys.psd_plus.is_some() || phys.psd_minus.is_some() || phys.eps_mst.is_some() {
        let eps_mst = need(phys.eps_mst, "eps_mst_eV", "the charge-noise lifetime")?;
        let sp = phys.psd_plus.unwrap_or(0.0);
        let sm = phys.psd_minus.unwrap_or(0.0);
        rate += 1.0 / t_life_eps(eps_mst, eps_res, sp, sm)?;
    }
    let p1 = if rate > 0.0 { p1_from_lifetime(tau, 1.0 / rate)? } else { 0.0 };
    let theta = theta_from_splitting(eps_res, tau);
    let p2 = phys.p2.unwrap_or(0.0);
    NoiseParams::new(p_a, p1, p2, theta)
}

/// One step of a [`Channel`].
#[derive(Clone, Debug, PartialEq)]
pub enum Stage {
    /// `sum_k w_k P_k rho P_k`.
    PauliMixture(Vec<(f64, PauliString)>),
    /// `e^{i phi A} rho e^{-i phi A}`.
    Rotation { axis: PauliString, phi: f64 },
    /// `(1 - p_a) Pi_s rho Pi_s + p_a Pi_-s rho Pi_-s`.
    Assignment {
        observable: PauliString,
        outcome: Sign,
        p_a: f64,
    },
}

impl Stage {
    fn num_qubits(&self) -> usize {
        match self {
            Stage::PauliMixture(t) => t[0].1.num_qubits(),
            Stage::Rotation { axis, .. } => axis.num_qubits(),
            Stage::Assignment { observable, .. } => observable.num_qubits(),
        }
    }

    fn embed(&self, width: usize, qubits: &[usize]) -> Result<Stage> {
        Ok(match self {
            Stage::PauliMixture(t) => Stage::PauliMixture(
                t.iter()
                    .map(|(w, p)| Ok((*w, p.embed(width, qubits)?)))
                    .collect::<Result<_>>()?,
            ),
            Stage::Rotation { axis, phi } => Stage::Rotation {
                axis: axis.embed(width, qubits)?,
                phi: *phi,
            },
            Stage::Assignment {
                observable,
                outcome,
                p_a,
            } => Stage::Assignment {
                observable: observable.embed(width, qubits)?,
                outcome: *outcome,
                p_a: *p_a,
            },
        })
    }

    pub(crate) fn apply_pauli(&self, state: &mut PauliState) {
        match self {
            Stage::PauliMixture(t) => {
                let terms: Vec<(f64, PauliKey)> = t.iter().map(|(w, p)| (*w, p.key())).collect();
                state.pauli_mixture(&terms);
            }
            Stage::Rotation { axis, phi } => {
                // A negative sign on the axis reverses the rotation.
                state.rotate(axis.key(), phi * axis.sign().to_f64());
            }
            Stage::Assignment {
                observable,
                outcome,
                p_a,
            } => state.assign(observable.key(), *outcome * observable.sign(), *p_a),
        }
    }

    fn apply_dense(&self, rho: &DenseOperator) -> DenseOperator {
        match self {
            Stage::PauliMixture(t) => {
                let mut out = DenseOperator::zeros(rho.num_qubits());
                for (w, p) in t {
                    out = out.add(&rho.conjugate(&pauli_matrix(p)).scale_re(*w));
                }
                out
            }
            Stage::Rotation { axis, phi } => {
                let n = rho.num_qubits();
                let u = DenseOperator::identity(n)
                    .scale_re(phi.cos())
                    .add(&pauli_matrix(axis).scale(C64::new(0.0, phi.sin())));
                rho.conjugate(&u)
            }
            Stage::Assignment {
                observable,
                outcome,
                p_a,
            } => {
                let good = projector(observable, *outcome).expect("non-identity observable");
                let bad = projector(observable, outcome.flip()).expect("non-identity observable");
                rho.conjugate(&good)
                    .scale_re(1.0 - p_a)
                    .add(&rho.conjugate(&bad).scale_re(*p_a))
            }
        }
    }
}

/// Composition of stages on a fixed number of qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    num_qubits: usize,
    stages: Vec<Stage>,
}

impl Channel {
    pub fn identity(num_qubits: usize) -> Channel {
        Channel {
            num_qubits,
            stages: Vec::new(),
        }
    }

    pub fn from_stages(num_qubits: usize, stages: Vec<Stage>) -> Result<Channel> {
        for s in &stages {
            if s.num_qubits() != num_qubits {
                return Err(Error::QubitMismatch {
                    left: s.num_qubits(),
                    right: num_qubits,
                });
            }
        }
        Ok(Channel { num_qubits, stages })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// `next` applied after `self`.
    pub fn then(mut self, next: &Channel) -> Result<Channel> {
        if next.num_qubits != self.num_qubits {
            return Err(Error::QubitMismatch {
                left: self.num_qubits,
                right: next.num_qubits,
            });
        }
        self.stages.extend(next.stages.iter().cloned());
        Ok(self)
    }

    /// The same channel acting on `qubits` of a `width`-qubit register.
    pub fn embed(&self, width: usize, qubits: &[usize]) -> Result<Channel> {
        Ok(Channel {
            num_qubits: width,
            stages: self.stages.iter().map(|s| s.embed(width, qubits)).collect::<Result<_>>()?,
        })
    }

    pub fn apply_pauli(&self, state: &mut PauliState) {
        debug_assert_eq!(state.num_qubits(), self.num_qubits);
        for s in &self.stages {
            s.apply_pauli(state);
        }
    }

    pub fn apply_dense(&self, rho: &DenseOperator) -> DenseOperator {
        let mut out = rho.clone();
        for s in &self.stages {
            out = s.apply_dense(&out);
        }
        out
    }

    /// Splits at the first assignment stage: `(prefix, observable, p_a,
    /// suffix)`. Used to share the pre-measurement noise between outcomes.
    pub(crate) fn split_at_assignment(&self) -> Option<(&[Stage], &PauliString, f64, &[Stage])> {
        let i = self.stages.iter().position(|s| matches!(s, Stage::Assignment { .. }))?;
        match &self.stages[i] {
            Stage::Assignment { observable, p_a, .. } => {
                Some((&self.stages[..i], observable, *p_a, &self.stages[i + 1..]))
            }
            _ => unreachable!(),
        }
    }

    /// Transfer matrix, via the dense route.
    pub fn to_superop(&self) -> Superoperator {
        channel_to_superop(self.num_qubits, |rho| self.apply_dense(rho))
    }

    /// Transfer matrix, via the Pauli route.
    pub fn to_superop_pauli(&self) -> Superoperator {
        let n = self.num_qubits;
        let basis = crate::pauli::pauli_basis(n);
        let d = (1usize << n) as f64;
        let mut m = nalgebra::DMatrix::zeros(basis.len(), basis.len());
        for (j, pj) in basis.iter().enumerate() {
            // rho = P_j has the single coefficient r_{P_j} = d.
            let mut st = PauliState::from_coefficients(n, [(pj.key(), d)]);
            self.apply_pauli(&mut st);
            for (i, pi) in basis.iter().enumerate() {
                // R_ij = tr(P_i E(P_j)) / d and tr(P_i rho) = r_{P_i}.
                m[(i, j)] = st.coefficient(pi.key()) / d;
            }
        }
        Superoperator::from_matrix(n, m).expect("sized from basis")
    }

    /// Smallest eigenvalue of the Choi matrix, normalised to unit trace
    /// input. Negative values mean the map is not completely positive.
    pub fn choi_min_eigenvalue(&self) -> f64 {
        let n = self.num_qubits;
        let d = 1usize << n;
        let mut choi = nalgebra::DMatrix::<C64>::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = nalgebra::DMatrix::<C64>::zeros(d, d);
                e[(i, j)] = C64::new(1.0, 0.0);
                let out = self.apply_dense(&DenseOperator::from_matrix(e).expect("square"));
                for a in 0..d {
                    for b in 0..d {
                        choi[(i * d + a, j * d + b)] = out.matrix()[(a, b)];
                    }
                }
            }
        }
        DenseOperator::from_matrix(choi).expect("square").min_eigenvalue() / d as f64
    }
}

fn check_p(name: &'static str, p: f64) -> Result<()> {
    check_range(name, p, 0.0, 1.0)
}

fn single_qubit(letter: Letter) -> PauliString {
    PauliString::from_letters(&[letter], Sign::Plus).expect("one qubit")
}

/// Depolarizing channel. One qubit: `(1 - p) rho + (p/3) sum_P P rho P`.
/// Two qubits: the correlated form `(1 - p) rho + (p/9) sum_{P,Q != I}
/// (P Q) rho (P Q)` used for joint measurements.
pub fn depolarize(p: f64, num_qubits: usize) -> Result<Channel> {
    check_p("p", p)?;
    let terms = match num_qubits {
        1 => {
            let mut t = vec![(1.0 - p, PauliString::identity(1))];
            for l in Letter::NONTRIVIAL {
                t.push((p / 3.0, single_qubit(l)));
            }
            t
        }
        2 => {
            let mut t = vec![(1.0 - p, PauliString::identity(2))];
            for a in Letter::NONTRIVIAL {
                for b in Letter::NONTRIVIAL {
                    t.push((p / 9.0, PauliString::from_letters(&[a, b], Sign::Plus)?));
                }
            }
            t
        }
        n => return Err(Error::Invalid(format!("depolarize is defined for 1 or 2 qubits, not {n}"))),
    };
    Channel::from_stages(num_qubits, vec![Stage::PauliMixture(terms)])
}

/// `rho -> e^{i phi A} rho e^{-i phi A}`.
pub fn rotation(axis: &PauliString, phi: f64) -> Result<Channel> {
    if axis.is_identity() {
        return Err(Error::Invalid("rotation about the identity".into()));
    }
    Channel::from_stages(
        axis.num_qubits(),
        vec![Stage::Rotation {
            axis: *axis,
            phi,
        }],
    )
}

/// Noisy projective measurement of `observable` reporting `outcome`.
pub fn assignment_channel(observable: &PauliString, outcome: Sign, p_a: f64) -> Result<Channel> {
    check_p("p_a", p_a)?;
    if observable.is_identity() {
        return Err(Error::Invalid("measurement of the identity".into()));
    }
    Channel::from_stages(
        observable.num_qubits(),
        vec![Stage::Assignment {
            observable: *observable,
            outcome,
            p_a,
        }],
    )
}

/// One idle step: the coherent `Z` rotation by `theta`, then depolarizing.
pub fn idle_channel(p1: f64, theta: f64) -> Result<Channel> {
    let mut stages = Vec::new();
    if theta != 0.0 {
        stages.push(Stage::Rotation {
            axis: single_qubit(Letter::Z),
            phi: theta,
        });
    }
    stages.extend(depolarize(p1, 1)?.stages);
    Channel::from_stages(1, stages)
}

/// Single-qubit measurement outcome channel: half the depolarizing on each
/// side of the assignment. The measured qubit does not precess, so no
/// rotation appears.
pub fn meas1_channel(observable: &PauliString, outcome: Sign, p_a: f64, p1: f64) -> Result<Channel> {
    if observable.num_qubits() != 1 {
        return Err(Error::QubitMismatch {
            left: observable.num_qubits(),
            right: 1,
        });
    }
    let half = depolarize(p1 / 2.0, 1)?;
    half.clone()
        .then(&assignment_channel(observable, outcome, p_a)?)?
        .then(&half)
}

/// Two-qubit measurement outcome channel. The same noise sandwich,
/// single-qubit depolarizing on both qubits after correlated depolarizing
/// after half the rotation on both qubits, is applied before and after the
/// assignment.
pub fn meas2_channel(observable: &PauliString, outcome: Sign, noise: &NoiseParams) -> Result<Channel> {
    if observable.num_qubits() != 2 {
        return Err(Error::QubitMismatch {
            left: observable.num_qubits(),
            right: 2,
        });
    }
    let mut sandwich = Channel::identity(2);
    if noise.theta != 0.0 {
        let z = single_qubit(Letter::Z);
        for q in 0..2 {
            sandwich = sandwich.then(&rotation(&z, noise.theta / 2.0)?.embed(2, &[q])?)?;
        }
    }
    sandwich = sandwich.then(&depolarize(noise.p2 / 2.0, 2)?)?;
    let d1 = depolarize(noise.p1 / 2.0, 1)?;
    for q in 0..2 {
        sandwich = sandwich.then(&d1.embed(2, &[q])?)?;
    }
    sandwich
        .clone()
        .then(&assignment_channel(observable, outcome, noise.p_a)?)?
        .then(&sandwich)
}

/// The coupling pulse that implements `U = e^{-i phi A}`; `phi = pi/8` about
/// `Z` takes `|+>` to the magic state.
pub fn timed_coupling_rotation(axis: &PauliString, phi: f64) -> Result<Channel> {
    rotation(axis, -phi)
}
