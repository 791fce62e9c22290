//! Single-qubit benchmarking with X and Z measurements only.
//!
//! A randomized reset `R = (M^X_* M^Z_* + M^Z_* M^X_*) / 2` returns the
//! maximally mixed state. Conditioning a measurement on the one before it
//! then gives the readout error `err_a` (same basis twice) and the basis
//! error `err_b` (different bases). The statistics can be taken from exact
//! instrument maps or counted in a long sampled measurement stream.
//!
//! The rebit is the real part of the qubit, Bloch coordinates `(1, x, z)`,
//! which is all that X and Z measurements can reach.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{idle_channel, meas1_channel, Channel, NoiseParams};
use crate::error::{Error, Result};
use crate::operator::Superoperator;
use crate::pauli::{Letter, PauliString, Sign};
use crate::tomography::LinearGst;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::X, Basis::Z];

    pub fn pauli(self) -> PauliString {
        let l = match self {
            Basis::X => Letter::X,
            Basis::Z => Letter::Z,
        };
        PauliString::from_letters(&[l], Sign::Plus).expect("one qubit")
    }

    pub fn other(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }
}

/// A measurement label: a basis and the index of the physical loop used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliMeasurement {
    pub basis: Basis,
    pub variant: u8,
}

impl From<Basis> for PauliMeasurement {
    fn from(basis: Basis) -> Self {
        PauliMeasurement { basis, variant: 0 }
    }
}

/// A noisy single-qubit measurement. The operator it actually measures need
/// not be the nominal basis, which is how broken instruments are modelled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Instrument {
    pub observable: PauliString,
    pub p_a: f64,
    pub p1: f64,
}

impl Instrument {
    pub fn new(observable: PauliString, p_a: f64, p1: f64) -> Result<Instrument> {
        if observable.num_qubits() != 1 || observable.is_identity() {
            return Err(Error::Invalid(format!("{observable} is not a single-qubit observable")));
        }
        meas1_channel(&observable, Sign::Plus, p_a, p1)?;
        Ok(Instrument { observable, p_a, p1 })
    }

    pub fn channel(&self, outcome: Sign) -> Channel {
        meas1_channel(&self.observable, outcome, self.p_a, self.p1).expect("validated in new")
    }

    pub fn superop(&self, outcome: Sign) -> Superoperator {
        self.channel(outcome).to_superop_pauli()
    }
}

/// The X and Z instruments, with optional per-variant overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct InstrumentPair {
    pub x: Instrument,
    pub z: Instrument,
    pub overrides: BTreeMap<PauliMeasurement, Instrument>,
}

impl InstrumentPair {
    pub fn new(x: Instrument, z: Instrument) -> InstrumentPair {
        InstrumentPair {
            x,
            z,
            overrides: BTreeMap::new(),
        }
    }

    pub fn from_noise(noise: &NoiseParams) -> Result<InstrumentPair> {
        Ok(InstrumentPair::new(
            Instrument::new(Basis::X.pauli(), noise.p_a, noise.p1)?,
            Instrument::new(Basis::Z.pauli(), noise.p_a, noise.p1)?,
        ))
    }

    pub fn instrument(&self, m: PauliMeasurement) -> &Instrument {
        self.overrides.get(&m).unwrap_or(match m.basis {
            Basis::X => &self.x,
            Basis::Z => &self.z,
        })
    }

    fn basis(&self, b: Basis) -> &Instrument {
        self.instrument(b.into())
    }

    /// Outcome-summed map of one basis.
    pub fn summed(&self, b: Basis) -> Superoperator {
        let i = self.basis(b);
        i.superop(Sign::Plus).add(&i.superop(Sign::Minus))
    }
}

/// Which basis the reset measures first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResetOrder {
    XThenZ,
    ZThenX,
}

impl ResetOrder {
    pub const BOTH: [ResetOrder; 2] = [ResetOrder::XThenZ, ResetOrder::ZThenX];

    fn bases(self) -> (Basis, Basis) {
        match self {
            ResetOrder::XThenZ => (Basis::X, Basis::Z),
            ResetOrder::ZThenX => (Basis::Z, Basis::X),
        }
    }

    fn from_bases(first: Basis, second: Basis) -> Option<ResetOrder> {
        match (first, second) {
            (Basis::X, Basis::Z) => Some(ResetOrder::XThenZ),
            (Basis::Z, Basis::X) => Some(ResetOrder::ZThenX),
            _ => None,
        }
    }
}

fn reset_for(pair: &InstrumentPair, order: ResetOrder) -> Superoperator {
    let (a, b) = order.bases();
    pair.summed(b).after(&pair.summed(a))
}

/// The randomized reset, averaged over both orders.
pub fn reset_superop(pair: &InstrumentPair) -> Superoperator {
    reset_for(pair, ResetOrder::XThenZ)
        .add(&reset_for(pair, ResetOrder::ZThenX))
        .scale(0.5)
}

/// `Pr(P r | Q s)` after a reset of the given order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEntry {
    pub order: ResetOrder,
    pub prep: Basis,
    pub prep_outcome: Sign,
    pub meas: Basis,
    pub prob_plus: f64,
    pub prob_minus: f64,
    /// `(count of +, total)` in sampled mode.
    pub counts: Option<(u64, u64)>,
    /// 95% Wilson interval for `prob_plus` in sampled mode.
    pub wilson95: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub entries: Vec<ConditionalEntry>,
}

impl ConditionalTable {
    pub fn get(&self, order: ResetOrder, prep: Basis, s: Sign, meas: Basis) -> Option<&ConditionalEntry> {
        self.entries
            .iter()
            .find(|e| e.order == order && e.prep == prep && e.prep_outcome == s && e.meas == meas)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StatsMode {
    Exact,
    /// Counts over `steps` measurements of the cycled order-4 de Bruijn
    /// sequence, split into `batches` independent streams.
    Sampled { steps: usize, seed: u64, batches: usize },
}

/// The binary de Bruijn sequence of order `k` (length `2^k`), X for 0 and
/// Z for 1, generated by the Lyndon-word construction.
pub fn generate_debruijn(k: usize) -> Vec<Basis> {
    assert!((1..=20).contains(&k), "order must be in 1..=20");
    let mut a = vec![0u8; k + 1];
    let mut out = Vec::with_capacity(1 << k);
    fn db(t: usize, p: usize, k: usize, a: &mut Vec<u8>, out: &mut Vec<u8>) {
        if t > k {
            if k % p == 0 {
                out.extend_from_slice(&a[1..=p]);
            }
        } else {
            a[t] = a[t - p];
            db(t + 1, p, k, a, out);
            if a[t - p] == 0 {
                a[t] = 1;
                db(t + 1, t, k, a, out);
            }
        }
    }
    let mut raw = Vec::new();
    db(1, 1, k, &mut a, &mut raw);
    out.extend(raw.into_iter().map(|b| if b == 0 { Basis::X } else { Basis::Z }));
    out
}

/// Wilson score interval for `k` successes out of `n` at `z` standard
/// deviations.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

fn apply(s: &Superoperator, v: &DVector<f64>) -> DVector<f64> {
    s.matrix() * v
}

fn mixed() -> DVector<f64> {
    DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0])
}

/// Conditional outcome table, exact or sampled.
pub fn subsequence_statistics(pair: &InstrumentPair, mode: StatsMode) -> Result<ConditionalTable> {
    match mode {
        StatsMode::Exact => Ok(exact_table(pair)),
        StatsMode::Sampled { steps, seed, batches } => sampled_table(pair, steps, seed, batches),
    }
}

fn exact_table(pair: &InstrumentPair) -> ConditionalTable {
    let mut entries = Vec::new();
    for order in ResetOrder::BOTH {
        let after_reset = apply(&reset_for(pair, order), &mixed());
        for prep in Basis::BOTH {
            for s in [Sign::Plus, Sign::Minus] {
                let v = apply(&pair.basis(prep).superop(s), &after_reset);
                let norm = v[0];
                for meas in Basis::BOTH {
                    let plus = apply(&pair.basis(meas).superop(Sign::Plus), &v)[0] / norm;
                    let minus = apply(&pair.basis(meas).superop(Sign::Minus), &v)[0] / norm;
                    entries.push(ConditionalEntry {
                        order,
                        prep,
                        prep_outcome: s,
                        meas,
                        prob_plus: plus,
                        prob_minus: minus,
                        counts: None,
                        wilson95: None,
                    });
                }
            }
        }
    }
    ConditionalTable { entries }
}

type Key = (ResetOrder, Basis, Sign, Basis);

fn sampled_table(pair: &InstrumentPair, steps: usize, seed: u64, batches: usize) -> Result<ConditionalTable> {
    const K: usize = 4;
    if batches == 0 || steps < batches * (K + 1) {
        return Err(Error::Invalid(format!("{steps} steps cannot fill {batches} batches")));
    }
    let seq = generate_debruijn(K);
    // Index 2 * basis + outcome, with X = 0, Z = 1 and + = 0, - = 1.
    let maps: Vec<Matrix4<f64>> = Basis::BOTH
        .iter()
        .flat_map(|&b| [Sign::Plus, Sign::Minus].map(|s| Matrix4::from_iterator(pair.basis(b).superop(s).matrix().iter().copied())))
        .collect();
    let index = |b: Basis| if b == Basis::X { 0 } else { 2 };
    let per_batch = steps / batches;
    let counts: Vec<BTreeMap<Key, (u64, u64)>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut v = Vector4::new(1.0, 0.0, 0.0, 0.0);
            let mut hist: Vec<(Basis, Sign)> = Vec::with_capacity(per_batch);
            let mut out: BTreeMap<Key, (u64, u64)> = BTreeMap::new();
            for t in 0..per_batch {
                let basis = seq[t % seq.len()];
                let vp = maps[index(basis)] * v;
                let vm = maps[index(basis) + 1] * v;
                let p_plus = vp[0] / (vp[0] + vm[0]);
                let (s, w) = if rng.gen::<f64>() < p_plus { (Sign::Plus, vp) } else { (Sign::Minus, vm) };
                v = w / w[0];
                hist.push((basis, s));
                // Window (S, R, Q, P) ends here; skip the burn-in.
                if t >= K - 1 + (K - 1) {
                    let w = &hist[t + 1 - K..=t];
                    if let Some(order) = ResetOrder::from_bases(w[0].0, w[1].0) {
                        let e = out.entry((order, w[2].0, w[2].1, w[3].0)).or_insert((0, 0));
                        e.1 += 1;
                        if w[3].1 == Sign::Plus {
                            e.0 += 1;
                        }
                    }
                }
            }
            out
        })
        .collect();
    let mut total: BTreeMap<Key, (u64, u64)> = BTreeMap::new();
    for c in counts {
        for (k, (p, n)) in c {
            let e = total.entry(k).or_insert((0, 0));
            e.0 += p;
            e.1 += n;
        }
    }
    let mut entries = Vec::new();
    for order in ResetOrder::BOTH {
        for prep in Basis::BOTH {
            for s in [Sign::Plus, Sign::Minus] {
                for meas in Basis::BOTH {
                    let (k, n) = total.get(&(order, prep, s, meas)).copied().unwrap_or((0, 0));
                    let p = if n > 0 { k as f64 / n as f64 } else { f64::NAN };
                    entries.push(ConditionalEntry {
                        order,
                        prep,
                        prep_outcome: s,
                        meas,
                        prob_plus: p,
                        prob_minus: 1.0 - p,
                        counts: Some((k, n)),
                        wilson95: Some(wilson_interval(k, n, 1.96)),
                    });
                }
            }
        }
    }
    Ok(ConditionalTable { entries })
}

/// `(err_a, err_b)`: worst-case deviation from perfect repeatability and
/// from unbiasedness across bases, each averaged over the reset orders.
pub fn mbqb_errors(table: &ConditionalTable) -> (f64, f64) {
    let mut err_a = 0.0;
    let mut err_b = 0.0;
    for order in ResetOrder::BOTH {
        let mut a: f64 = 0.0;
        let mut b: f64 = 0.0;
        for e in table.entries.iter().filter(|e| e.order == order) {
            if e.prep == e.meas {
                let ideal = if e.prep_outcome == Sign::Plus { 1.0 } else { 0.0 };
                a = a.max((e.prob_plus - ideal).abs());
            } else {
                b = b.max((e.prob_plus - 0.5).abs());
            }
        }
        err_a += a / 2.0;
        err_b += b / 2.0;
    }
    (err_a, err_b)
}

/// Rebit block `(1, x, z)` of a single-qubit transfer matrix.
pub fn rebit_block(s: &Superoperator) -> DMatrix<f64> {
    let idx = [0usize, 1, 3];
    DMatrix::from_fn(3, 3, |i, j| s.matrix()[(idx[i], idx[j])])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GstMode {
    Exact,
    /// Multinomial sampling with `shots` per experiment.
    Sampled { shots: u64, seed: u64 },
}

/// Reconstructed rebit maps. `maps[i]` belongs to `labels[i]`.
#[derive(Clone, Debug)]
pub struct RebitGateSet {
    pub labels: Vec<String>,
    pub maps: Vec<DMatrix<f64>>,
    pub noop: DMatrix<f64>,
}

/// The four instrument outcome operations `M^X_+, M^X_-, M^Z_+, M^Z_-`.
pub fn instrument_operations(pair: &InstrumentPair) -> Vec<(String, Superoperator)> {
    let mut out = Vec::new();
    for b in Basis::BOTH {
        for s in [Sign::Plus, Sign::Minus] {
            let name = format!("M{:?}{}", b, if s == Sign::Plus { "+" } else { "-" });
            out.push((name, pair.basis(b).superop(s)));
        }
    }
    out
}

const PREPS: [(Basis, Sign); 4] = [
    (Basis::X, Sign::Plus),
    (Basis::X, Sign::Minus),
    (Basis::Z, Sign::Plus),
    (Basis::Z, Sign::Minus),
];

/// Linear GST on the rebit. Preparations are reset-then-measure with
/// post-selection, effects are the measurement outcomes; sixteen
/// experiments per operation plus sixteen with no operation.
pub fn rebit_gst(pair: &InstrumentPair, ops: &[(String, Superoperator)], mode: GstMode) -> Result<RebitGateSet> {
    let reset = reset_superop(pair);
    let preps: Vec<DVector<f64>> = PREPS
        .iter()
        .map(|&(b, s)| {
            let v = apply(&pair.basis(b).superop(s), &apply(&reset, &mixed()));
            &v / v[0]
        })
        .collect();
    let mut rng = match mode {
        GstMode::Sampled { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        GstMode::Exact => None,
    };
    let mut collect = |op: Option<&Superoperator>| -> DMatrix<f64> {
        let mut d = DMatrix::zeros(4, 4);
        for (j, rho) in preps.iter().enumerate() {
            let state = match op {
                Some(g) => apply(g, rho),
                None => rho.clone(),
            };
            for b in Basis::BOTH {
                let p = [Sign::Plus, Sign::Minus].map(|s| apply(&pair.basis(b).superop(s), &state)[0]);
                let row = if b == Basis::X { 0 } else { 2 };
                let est = match (&mut rng, mode) {
                    (Some(rng), GstMode::Sampled { shots, .. }) => sample_pair(rng, shots, p),
                    _ => p,
                };
                d[(row, j)] = est[0];
                d[(row + 1, j)] = est[1];
            }
        }
        d
    };
    let noop_data = collect(None);
    let ideal = DMatrix::from_columns(&[
        DVector::from_column_slice(&[1.0, 1.0, 0.0]),
        DVector::from_column_slice(&[1.0, -1.0, 0.0]),
        DVector::from_column_slice(&[1.0, 0.0, 1.0]),
        DVector::from_column_slice(&[1.0, 0.0, -1.0]),
    ]);
    // Data are in terms of rebit states; drop the y coordinate of the preps
    // by working in the ideal (1, x, z) frame throughout.
    let gst = LinearGst::new(ideal, &noop_data, &["1", "x", "z"])?;
    let noop = gst.estimate(&noop_data);
    let mut labels = Vec::new();
    let mut maps = Vec::new();
    for (name, g) in ops {
        if g.num_qubits() != 1 {
            return Err(Error::QubitMismatch {
                left: g.num_qubits(),
                right: 1,
            });
        }
        labels.push(name.clone());
        maps.push(gst.estimate(&collect(Some(g))));
    }
    Ok(RebitGateSet { labels, maps, noop })
}

/// Multinomial counts over `{+, -, lost}`, returned as frequencies of `+`
/// and `-`.
fn sample_pair(rng: &mut ChaCha8Rng, shots: u64, p: [f64; 2]) -> [f64; 2] {
    use rand_distr::{Binomial, Distribution};
    let p0 = p[0].clamp(0.0, 1.0);
    let n0 = Binomial::new(shots, p0).expect("probability in range").sample(rng);
    let rest = 1.0 - p0;
    let p1 = if rest > 0.0 { (p[1] / rest).clamp(0.0, 1.0) } else { 0.0 };
    let n1 = Binomial::new(shots - n0, p1).expect("probability in range").sample(rng);
    [n0 as f64 / shots as f64, n1 as f64 / shots as f64]
}

/// Fit of repeated-measurement contrast against idle time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LifetimeFit {
    pub lengths: Vec<usize>,
    /// `2 A - 1`, with `A` the probability that two measurements agree.
    pub contrasts: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Per-step decay rate `-slope` of the contrast.
    pub decay_rate: f64,
    /// Per-step flip probability `q`, from `1 - 2q = e^slope`.
    pub flip_rate: f64,
    pub rms_residual: f64,
    /// False when the contrast is not a clean exponential, e.g. when a
    /// coherent rotation makes it oscillate.
    pub exponential: bool,
}

/// Measures `basis`, idles `k` steps, measures again, for every `k` in
/// `lengths`.
pub fn lifetime_experiment(noise: &NoiseParams, basis: Basis, lengths: &[usize]) -> Result<LifetimeFit> {
    if lengths.len() < 2 {
        return Err(Error::Fit("need at least two idle lengths".into()));
    }
    let pair = InstrumentPair::from_noise(noise)?;
    let idle = idle_channel(noise.p1, noise.theta)?.to_superop_pauli();
    let inst = pair.basis(basis);
    let start = apply(&reset_superop(&pair), &mixed());
    let mut contrasts = Vec::new();
    for &k in lengths {
        let mut agree = 0.0;
        for s in [Sign::Plus, Sign::Minus] {
            let mut v = apply(&inst.superop(s), &start);
            for _ in 0..k {
                v = apply(&idle, &v);
            }
            agree += apply(&inst.superop(s), &v)[0];
        }
        contrasts.push(2.0 * agree - 1.0);
    }
    let all_positive = contrasts.iter().all(|&c| c > 0.0);
    let ys: Vec<f64> = contrasts.iter().map(|c| c.abs().max(1e-300).ln()).collect();
    let xs: Vec<f64> = lengths.iter().map(|&k| k as f64).collect();
    let (slope, intercept, rms) = linear_fit(&xs, &ys)?;
    Ok(LifetimeFit {
        lengths: lengths.to_vec(),
        contrasts,
        slope,
        intercept,
        decay_rate: -slope,
        flip_rate: (1.0 - slope.exp()) / 2.0,
        rms_residual: rms,
        exponential: all_positive && rms < 1e-6,
    })
}

/// Ordinary least squares `y = a x + b`: `(a, b, rms residual)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - a * x - b).powi(2)).sum::<f64>() / n).sqrt();
    Ok((a, b, rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{assignment_channel, depolarize, rotation};

    fn pair(p_a: f64, p1: f64) -> InstrumentPair {
        InstrumentPair::from_noise(&NoiseParams::new(p_a, p1, 0.0, 0.0).unwrap()).unwrap()
    }

    #[test]
    fn debruijn_sequences() {
        let s = |k| generate_debruijn(k).iter().map(|b| format!("{b:?}")).collect::<String>();
        assert_eq!(s(1), "XZ");
        assert_eq!(s(3), "XXXZXZZZ");
        for k in 1..=8 {
            let seq = generate_debruijn(k);
            assert_eq!(seq.len(), 1 << k);
            let mut seen = std::collections::BTreeSet::new();
            for i in 0..seq.len() {
                let w: Vec<Basis> = (0..k).map(|j| seq[(i + j) % seq.len()]).collect();
                assert!(seen.insert(w), "window repeats at order {k}");
            }
        }
    }

    #[test]
    fn reset_is_maximally_mixed() {
        for (pa, p1) in [(0.0, 0.0), (0.1, 0.0), (0.0, 0.1), (0.3, 0.4)] {
            let r = reset_superop(&pair(pa, p1));
            let out = r.matrix().column(0).clone_owned();
            assert!((out - mixed()).amax() < 1e-14);
            // Every input lands on I/2.
            for j in 1..4 {
                assert!(r.matrix().column(j).amax() < 1e-14);
            }
        }
    }

    #[test]
    fn ideal_instruments() {
        let (a, b) = mbqb_errors(&exact_table(&pair(0.0, 0.0)));
        assert!(a.abs() < 1e-12 && b.abs() < 1e-12);
    }

    #[test]
    fn readout_flip_gives_binomial_error() {
        for pf in [0.01, 0.05, 0.2] {
            let t = exact_table(&pair(pf, 0.0));
            for e in &t.entries {
                assert!((e.prob_plus + e.prob_minus - 1.0).abs() < 1e-12);
            }
            let (a, b) = mbqb_errors(&t);
            assert!((a - 2.0 * pf * (1.0 - pf)).abs() < 1e-12, "{a}");
            assert!(b.abs() < 1e-12);
        }
    }

    #[test]
    fn random_outcomes_and_identical_instruments() {
        let (a, b) = mbqb_errors(&exact_table(&pair(0.5, 0.0)));
        assert!((a - 0.5).abs() < 1e-12 && b.abs() < 1e-12);
        let x = Instrument::new(Basis::X.pauli(), 0.0, 0.0).unwrap();
        let same = InstrumentPair::new(x, x);
        let (a, b) = mbqb_errors(&exact_table(&same));
        assert!(a.abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn swapping_bases_keeps_errors() {
        let x = Instrument::new(Basis::X.pauli(), 0.07, 0.02).unwrap();
        let z = Instrument::new(Basis::Z.pauli(), 0.01, 0.11).unwrap();
        let a = mbqb_errors(&exact_table(&InstrumentPair::new(x, z)));
        // Relabel: the X instrument now measures Z and vice versa.
        let x2 = Instrument::new(Basis::X.pauli(), 0.01, 0.11).unwrap();
        let z2 = Instrument::new(Basis::Z.pauli(), 0.07, 0.02).unwrap();
        let b = mbqb_errors(&exact_table(&InstrumentPair::new(x2, z2)));
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    }

    #[test]
    fn sampled_agrees_with_exact() {
        let p = pair(0.05, 0.02);
        let exact = exact_table(&p);
        let sampled = subsequence_statistics(
            &p,
            StatsMode::Sampled {
                steps: 200_000,
                seed: 5,
                batches: 4,
            },
        )
        .unwrap();
        for (e, s) in exact.entries.iter().zip(&sampled.entries) {
            let (k, n) = s.counts.unwrap();
            let (lo, hi) = wilson_interval(k, n, 4.0);
            assert!(lo <= e.prob_plus && e.prob_plus <= hi, "{e:?} vs {s:?}");
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = pair(0.05, 0.02);
        let mode = StatsMode::Sampled {
            steps: 20_000,
            seed: 9,
            batches: 3,
        };
        let a = subsequence_statistics(&p, mode).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(2)
            .build()
            .unwrap()
            .install(|| subsequence_statistics(&p, mode).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
    }

    #[test]
    fn gst_recovers_injected_channels() {
        let p = pair(0.0, 0.0);
        let chans = vec![
            ("dep".to_string(), depolarize(0.2, 1).unwrap().to_superop()),
            ("rotz".to_string(), rotation(&Basis::Z.pauli(), 0.3).unwrap().to_superop()),
            (
                "assign".to_string(),
                assignment_channel(&Basis::X.pauli(), Sign::Plus, 0.05).unwrap().to_superop(),
            ),
        ];
        let gs = rebit_gst(&p, &chans, GstMode::Exact).unwrap();
        for ((_, c), est) in chans.iter().zip(&gs.maps) {
            assert!((rebit_block(c) - est).amax() < 1e-12);
        }
        assert!((gs.maps[0][(1, 1)] - (1.0 - 0.8 / 3.0)).abs() < 1e-12);
        assert!((gs.maps[1][(1, 1)] - 0.6f64.cos()).abs() < 1e-12);
        assert!((gs.noop.clone() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn gst_noop_is_identity_with_noisy_spam() {
        let p = pair(0.04, 0.03);
        let gs = rebit_gst(&p, &instrument_operations(&p), GstMode::Exact).unwrap();
        assert!((gs.noop.clone() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn gst_rejects_degenerate_preparations() {
        let x = Instrument::new(Basis::X.pauli(), 0.0, 0.0).unwrap();
        match rebit_gst(&InstrumentPair::new(x, x), &[], GstMode::Exact) {
            Err(Error::DegeneratePreparations(msg)) => assert!(msg.contains("z="), "{msg}"),
            other => panic!("{:?}", other.map(|g| g.noop)),
        }
    }

    #[test]
    fn lifetime_recovers_flip_rate() {
        let n = NoiseParams::new(0.0, 0.01, 0.0, 0.0).unwrap();
        let lengths: Vec<usize> = (0..10).collect();
        let fit = lifetime_experiment(&n, Basis::X, &lengths).unwrap();
        assert!((fit.flip_rate - 2.0 * 0.01 / 3.0).abs() < 1e-12, "{}", fit.flip_rate);
        assert!(fit.exponential);
    }

    #[test]
    fn lifetime_flags_coherent_oscillation() {
        let n = NoiseParams::new(0.0, 0.0, 0.0, 0.2).unwrap();
        let lengths: Vec<usize> = (0..10).collect();
        let fit = lifetime_experiment(&n, Basis::X, &lengths).unwrap();
        for (k, c) in fit.lengths.iter().zip(&fit.contrasts) {
            assert!((c - (0.4 * *k as f64).cos()).abs() < 1e-12);
        }
        assert!(!fit.exponential);
        // The Z basis does not see a Z rotation.
        let fit = lifetime_experiment(&n, Basis::Z, &lengths).unwrap();
        assert!(fit.exponential && fit.flip_rate.abs() < 1e-12);
    }
}
