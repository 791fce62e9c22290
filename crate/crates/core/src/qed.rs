//! Ladder-code error detection and the repetition-code decay experiment.
//!
//! Qubits of an `N x 2` array are numbered `q = 2 row + col`. A logical
//! ladder qubit is a `2 x 2` block: `Z_bar = ZZ` along a row and
//! `X_bar = XX` down a column. The idle circuit alternates an X step
//! (horizontal XX) and a Z step (vertical ZZ). On the `4 x 2` array the
//! logical `Z_bar Z_bar` circuit adds a second X step and a Y step that
//! measures YY across the seam between the two blocks.
//!
//! The decay experiment prepares a repetition-code state on two physical
//! qubits or on two ladder qubits, repeats the (physical or logical) ZZ
//! measurement, keeps only runs where no detector fires and fits the decay
//! of `XX` or `ZI` per round.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::NoiseParams;
use crate::error::{Error, Result};
use crate::mbqb::linear_fit;
use crate::pauli::{pauli, Letter, PauliString, Sign};
use crate::sim::{
    derive_detectors, Circuit, CircuitBuilder, CircuitStep, Detector, RunOptions, Runner, SlotId, StabilizerTracker,
    TrajectoryEnsemble,
};
use crate::state::PauliState;

pub fn qubit(row: usize, col: usize) -> usize {
    2 * row + col
}

/// `rows x 2` array with `2 x 2` logical blocks starting at the listed rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderLayout {
    rows: usize,
    patches: Vec<usize>,
}

impl LadderLayout {
    pub fn new(rows: usize, patches: Vec<usize>) -> Result<LadderLayout> {
        let mut used = BTreeSet::new();
        for &p in &patches {
            if p + 1 >= rows {
                return Err(Error::Invalid(format!("block at row {p} does not fit in {rows} rows")));
            }
            if !used.insert(p) || !used.insert(p + 1) {
                return Err(Error::Invalid(format!("block at row {p} overlaps another block")));
            }
        }
        Ok(LadderLayout { rows, patches })
    }

    /// One block on a `2 x 2` array.
    pub fn single() -> LadderLayout {
        LadderLayout::new(2, vec![0]).expect("valid")
    }

    /// Two blocks stacked on a `4 x 2` array.
    pub fn stacked() -> LadderLayout {
        LadderLayout::new(4, vec![0, 2]).expect("valid")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn patches(&self) -> &[usize] {
        &self.patches
    }

    pub fn width(&self) -> usize {
        2 * self.rows
    }

    fn x_step(&self, b: &mut CircuitBuilder) {
        b.step();
        for &p in &self.patches {
            for row in [p, p + 1] {
                b.meas2(pauli("XX"), qubit(row, 0), qubit(row, 1));
            }
        }
    }

    fn z_step(&self, b: &mut CircuitBuilder) {
        b.step();
        for &p in &self.patches {
            for col in [0, 1] {
                b.meas2(pauli("ZZ"), qubit(p, col), qubit(p + 1, col));
            }
        }
    }
}

/// YY across the seam between the two blocks of the stacked layout.
fn y_step(b: &mut CircuitBuilder) {
    b.step();
    for col in [0, 1] {
        b.meas2(pauli("YY"), qubit(1, col), qubit(2, col));
    }
}

fn idle_round(b: &mut CircuitBuilder, layout: &LadderLayout) {
    layout.x_step(b);
    layout.z_step(b);
}

fn zz_round(b: &mut CircuitBuilder, layout: &LadderLayout) {
    layout.x_step(b);
    layout.z_step(b);
    layout.x_step(b);
    y_step(b);
}

fn build(b: CircuitBuilder, width: usize, initial: &[PauliString]) -> Result<Circuit> {
    let dets = derive_detectors(width, b.steps(), initial)?;
    b.build(dets)
}

/// Idle ladder code on one block. Detectors only use measurement history.
pub fn idle_ladder_circuit(rounds: usize) -> Result<Circuit> {
    if rounds == 0 {
        return Err(Error::Invalid("need at least one round".into()));
    }
    let layout = LadderLayout::single();
    let mut b = CircuitBuilder::new(layout.width());
    for _ in 0..rounds {
        idle_round(&mut b, &layout);
    }
    build(b, layout.width(), &[])
}

/// Logical `Z_bar Z_bar` circuit on the stacked layout. Detectors only use
/// measurement history.
pub fn logical_zz_circuit(rounds: usize) -> Result<Circuit> {
    if rounds == 0 {
        return Err(Error::Invalid("need at least one round".into()));
    }
    let layout = LadderLayout::stacked();
    let mut b = CircuitBuilder::new(layout.width());
    for _ in 0..rounds {
        zz_round(&mut b, &layout);
    }
    build(b, layout.width(), &[])
}

/// `Z Z Z Z` on the four qubits next to the seam, the logical
/// `Z_bar Z_bar` representative inferred by the circuit.
pub fn seam_zz() -> PauliString {
    pauli("IIZZZZII")
}

/// An inferred `Z_bar Z_bar` value: the product of the outcomes in `slots`
/// times `sign`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZzInference {
    /// 0-based step index after which the value is known.
    pub step: usize,
    pub slots: BTreeSet<SlotId>,
    pub sign: Sign,
}

/// Every step after which `Z_bar Z_bar` follows from the outcomes of that
/// step and the one before it, found by tracking the stabilizer group of
/// just those two steps.
pub fn logical_zz_inferences(circuit: &Circuit) -> Result<Vec<ZzInference>> {
    let zz = seam_zz();
    let mut out: Vec<ZzInference> = Vec::new();
    for i in 1..circuit.steps().len() {
        let mut t = StabilizerTracker::new(circuit.width(), &[])?;
        track_step(&mut t, &circuit.steps()[i - 1], circuit.width())?;
        track_step(&mut t, &circuit.steps()[i], circuit.width())?;
        if let Some((slots, sign)) = t.express(&zz) {
            out.push(ZzInference { step: i, slots, sign });
        }
    }
    Ok(out)
}

fn track_step(t: &mut StabilizerTracker, step: &CircuitStep, width: usize) -> Result<()> {
    for op in &step.ops {
        if let (Some(p), Some(slot)) = (op.measured_pauli(width), op.slot()) {
            t.measure(&p?, slot)?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Physical,
    Logical,
}

/// Repetition-code logical Pauli `P` whose decay rate `gamma_P` is
/// measured. `P` errors are invisible to the repetition code and show up in
/// the logical operator that anticommutes with `P`: an `XX` error flips
/// `<ZI>` on `|00>`, a `ZI` error flips `<XX>` on the Bell state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RepObservable {
    XX,
    ZI,
}

/// Initial repetition-code state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RepState {
    /// `(|00> + |11>)/sqrt 2`, sensitive to `ZI` errors through `<XX>`.
    XxEigenstate,
    /// `|00>`, sensitive to `XX` errors through `<ZI>`.
    ZzEigenstate,
}

impl RepObservable {
    pub fn state(self) -> RepState {
        match self {
            RepObservable::XX => RepState::ZzEigenstate,
            RepObservable::ZI => RepState::XxEigenstate,
        }
    }

    /// The logical operator whose expectation decays under `self` errors.
    pub fn probe(self) -> RepObservable {
        match self {
            RepObservable::XX => RepObservable::ZI,
            RepObservable::ZI => RepObservable::XX,
        }
    }
}

impl Level {
    pub fn width(self) -> usize {
        match self {
            Level::Physical => 2,
            Level::Logical => 8,
        }
    }

    pub fn steps_per_round(self) -> usize {
        match self {
            Level::Physical => 1,
            Level::Logical => 4,
        }
    }

    /// Repetition-code stabilizer `ZZ` at this level.
    pub fn stabilizer(self) -> PauliString {
        match self {
            Level::Physical => pauli("ZZ"),
            Level::Logical => seam_zz(),
        }
    }

    pub fn observable(self, o: RepObservable) -> PauliString {
        match (self, o) {
            (Level::Physical, RepObservable::XX) => pauli("XX"),
            (Level::Physical, RepObservable::ZI) => pauli("ZI"),
            (Level::Logical, RepObservable::XX) => pauli("XIXIXIXI"),
            (Level::Logical, RepObservable::ZI) => pauli("ZZIIIIII"),
        }
    }

    fn round(self, b: &mut CircuitBuilder) {
        match self {
            Level::Physical => {
                b.step();
                b.meas2(pauli("ZZ"), 0, 1);
            }
            Level::Logical => zz_round(b, &LadderLayout::stacked()),
        }
    }

    /// Product-state stabilizers every qubit starts from.
    fn initial_generators(self, s: RepState) -> Vec<PauliString> {
        let l = match s {
            RepState::XxEigenstate => Letter::X,
            RepState::ZzEigenstate => Letter::Z,
        };
        (0..self.width()).map(|q| PauliString::single(self.width(), q, l)).collect()
    }
}

/// Preparation round followed by `rounds` noisy rounds, with every
/// detector the schedule admits plus post-selection of the repetition-code
/// stabilizer to `+1` after the preparation round.
#[derive(Clone, Debug)]
pub struct RepcodeCircuit {
    pub level: Level,
    pub state: RepState,
    pub circuit: Circuit,
    pub initial: PauliState,
    pub prep_steps: usize,
}

pub fn repcode_circuit(level: Level, state: RepState, rounds: usize) -> Result<RepcodeCircuit> {
    let width = level.width();
    let gens = level.initial_generators(state);
    let mut b = CircuitBuilder::new(width);
    level.round(&mut b);
    let prep_steps = b.steps().len();
    let mut t = StabilizerTracker::new(width, &gens)?;
    for step in b.steps() {
        track_step(&mut t, step, width)?;
    }
    let (slots, sign) = t
        .express(&level.stabilizer())
        .ok_or_else(|| Error::Invalid("stabilizer not fixed by the preparation round".into()))?;
    for _ in 0..rounds {
        level.round(&mut b);
    }
    let mut dets = derive_detectors(width, b.steps(), &gens)?;
    if !slots.is_empty() {
        dets.push(Detector::fixed(slots.into_iter().collect(), sign));
    }
    Ok(RepcodeCircuit {
        level,
        state,
        circuit: b.build(dets)?,
        initial: PauliState::stabilizer_state(width, &gens)?,
        prep_steps,
    })
}

/// Runs the noiseless preparation round of `rc`, post-selected and
/// renormalised to unit trace. The returned runner continues with noise.
pub fn start_repcode<'a>(rc: &'a RepcodeCircuit, noise: &NoiseParams, opts: RunOptions) -> Result<Runner<'a>> {
    let init = TrajectoryEnsemble::from_state(rc.initial.clone());
    let mut r = Runner::new(&rc.circuit, *noise, init, opts)?;
    for _ in 0..rc.prep_steps {
        r.step_with(&NoiseParams::noiseless())?;
    }
    let acc = r.ensemble().acceptance();
    if acc <= 0.0 {
        return Err(Error::ZeroAcceptance);
    }
    r.rescale(1.0 / acc);
    Ok(r)
}

/// Post-selected preparation of a repetition-code state.
pub fn prepare_repcode_state(state: RepState, level: Level) -> Result<TrajectoryEnsemble> {
    let rc = repcode_circuit(level, state, 0)?;
    let mut r = start_repcode(&rc, &NoiseParams::noiseless(), RunOptions::compressed())?;
    r.run_to_end()?;
    Ok(r.into_ensemble())
}

/// `(<ZZ>, <ZI>, <XX>)` of the repetition code after a noiseless
/// preparation and an optional injected Pauli.
pub fn repcode_expectations(state: RepState, level: Level, error: Option<&PauliString>) -> Result<[f64; 3]> {
    let mut e = prepare_repcode_state(state, level)?;
    if let Some(p) = error {
        e.apply_pauli_error(p)?;
    }
    Ok([
        e.expectation(&level.stabilizer())?,
        e.expectation(&level.observable(RepObservable::ZI))?,
        e.expectation(&level.observable(RepObservable::XX))?,
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    pub level: Level,
    pub observable: RepObservable,
    pub rounds_grid: Vec<usize>,
    pub noise: NoiseParams,
}

impl DecaySpec {
    pub fn new(level: Level, observable: RepObservable, noise: NoiseParams) -> DecaySpec {
        DecaySpec {
            level,
            observable,
            rounds_grid: default_rounds(),
            noise,
        }
    }
}

pub fn default_rounds() -> Vec<usize> {
    vec![2, 4, 6, 8, 10]
}

/// Largest fitted rate below zero that still counts as zero.
pub const RATE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rounds: Vec<usize>,
    /// Post-selected expectation of the probe operator after each number
    /// of rounds.
    pub expectations: Vec<f64>,
    /// Acceptance after each number of rounds, relative to the preparation.
    pub acceptance: Vec<f64>,
    /// Decay rate per round.
    pub rate: f64,
    pub intercept: f64,
    pub residual: f64,
    pub flags: Vec<String>,
}

/// Runs the decay experiment once, taking every snapshot from the same
/// run, and fits `|<probe>| = A e^{-rate N}`.
pub fn decay_experiment(spec: &DecaySpec) -> Result<DecayFit> {
    let mut grid = spec.rounds_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    if grid.len() < 3 {
        return Err(Error::Invalid("the rounds grid needs at least three distinct values".into()));
    }
    let max = *grid.last().expect("nonempty");
    let rc = repcode_circuit(spec.level, spec.observable.state(), max)?;
    let obs = spec.level.observable(spec.observable.probe());
    let mut r = start_repcode(&rc, &spec.noise, RunOptions::compressed())?;
    let mut expectations = Vec::new();
    let mut acceptance = Vec::new();
    let mut flags = Vec::new();
    for round in 1..=max {
        for _ in 0..spec.level.steps_per_round() {
            r.step()?;
        }
        if grid.binary_search(&round).is_ok() {
            let e = r.ensemble();
            let acc = e.acceptance();
            if !acc.is_finite() || acc <= 0.0 {
                return Err(Error::Numerical(format!("acceptance {acc} after {round} rounds")));
            }
            expectations.push(e.expectation(&obs)?);
            acceptance.push(acc);
        }
    }
    let xs: Vec<f64> = grid.iter().map(|&n| n as f64).collect();
    let mut ys = Vec::new();
    for (n, v) in grid.iter().zip(&expectations) {
        if *v <= 0.0 {
            flags.push(format!("non-positive expectation {v} after {n} rounds"));
        }
        ys.push(v.abs().max(f64::MIN_POSITIVE).ln());
    }
    let (slope, intercept, residual) = linear_fit(&xs, &ys)?;
    let rate = -slope;
    if rate < -RATE_TOL {
        flags.push(format!("negative decay rate {rate}"));
    }
    Ok(DecayFit {
        rounds: grid,
        expectations,
        acceptance,
        rate,
        intercept,
        residual,
        flags,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaMetrics {
    pub lambda: f64,
    pub lambda_x: f64,
    pub lambda_z: f64,
    pub flags: Vec<String>,
}

fn ratio(num: f64, den: f64, name: &str, flags: &mut Vec<String>) -> f64 {
    if den <= 0.0 {
        flags.push(format!("{name}: logical rate {den} gives unbounded improvement"));
        f64::INFINITY
    } else {
        num / den
    }
}

/// Improvement ratios from the physical `XX`, physical `ZI`, logical `XX`
/// and logical `ZI` decay rates.
pub fn lambda_metrics(phys_xx: f64, phys_zi: f64, log_xx: f64, log_zi: f64) -> LambdaMetrics {
    let mut flags = Vec::new();
    LambdaMetrics {
        lambda: ratio(phys_xx + phys_zi, log_xx + log_zi, "lambda", &mut flags),
        lambda_x: ratio(phys_xx, log_xx, "lambda_x", &mut flags),
        lambda_z: ratio(phys_zi, log_zi, "lambda_z", &mut flags),
        flags,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovementPoint {
    pub p1: f64,
    pub p2: f64,
    pub pa: f64,
    pub lambda: f64,
    pub lambda_x: f64,
    pub lambda_z: f64,
    /// Mean final acceptance of the two physical experiments.
    pub accept_phys: f64,
    /// Mean final acceptance of the two logical experiments.
    pub accept_log: f64,
    pub flags: Vec<String>,
}

/// The four decay experiments at one noise point.
pub fn improvement_point(noise: &NoiseParams, rounds: &[usize]) -> Result<ImprovementPoint> {
    let fit = |level, o| {
        decay_experiment(&DecaySpec {
            level,
            observable: o,
            rounds_grid: rounds.to_vec(),
            noise: *noise,
        })
    };
    let pxx = fit(Level::Physical, RepObservable::XX)?;
    let pzi = fit(Level::Physical, RepObservable::ZI)?;
    let lxx = fit(Level::Logical, RepObservable::XX)?;
    let lzi = fit(Level::Logical, RepObservable::ZI)?;
    let m = lambda_metrics(pxx.rate, pzi.rate, lxx.rate, lzi.rate);
    let last = |f: &DecayFit| *f.acceptance.last().expect("nonempty");
    let mut flags = m.flags.clone();
    for (name, f) in [("XX", &pxx), ("ZI", &pzi), ("XX_bar", &lxx), ("ZI_bar", &lzi)] {
        flags.extend(f.flags.iter().map(|s| format!("{name}: {s}")));
    }
    Ok(ImprovementPoint {
        p1: noise.p1,
        p2: noise.p2,
        pa: noise.p_a,
        lambda: m.lambda,
        lambda_x: m.lambda_x,
        lambda_z: m.lambda_z,
        accept_phys: (last(&pxx) + last(&pzi)) / 2.0,
        accept_log: (last(&lxx) + last(&lzi)) / 2.0,
        flags,
    })
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

/// The `p1` that admits the largest `p2` on the `Lambda = 1` boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalP1 {
    pub index: usize,
    pub p1: f64,
    /// Largest admissible `p2`, interpolated in `log p2`.
    pub p2_max: f64,
    /// False when the optimum sits on the edge of the `p1` grid.
    pub interior: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovementScan {
    pub p1_grid: Vec<f64>,
    pub p2_grid: Vec<f64>,
    /// Row-major, `p1` outer and `p2` inner.
    pub points: Vec<ImprovementPoint>,
    /// Polylines of `Lambda = 1` as `(p1, p2)`.
    pub contour: Vec<Vec<(f64, f64)>>,
    pub optimal: Option<OptimalP1>,
}

impl ImprovementScan {
    pub fn at(&self, i: usize, j: usize) -> &ImprovementPoint {
        &self.points[i * self.p2_grid.len() + j]
    }
}

pub fn improvement_scan(p1_grid: &[f64], p2_grid: &[f64], p_a: f64, rounds: &[usize]) -> Result<ImprovementScan> {
    if p1_grid.is_empty() || p2_grid.is_empty() {
        return Err(Error::Invalid("empty improvement grid".into()));
    }
    let work: Vec<(f64, f64)> = p1_grid.iter().flat_map(|&a| p2_grid.iter().map(move |&b| (a, b))).collect();
    let points: Vec<ImprovementPoint> = work
        .par_iter()
        .map(|&(p1, p2)| improvement_point(&NoiseParams::new(p_a, p1, p2, 0.0)?, rounds))
        .collect::<Result<_>>()?;
    let lam: Vec<Vec<f64>> = (0..p1_grid.len())
        .map(|i| (0..p2_grid.len()).map(|j| points[i * p2_grid.len() + j].lambda).collect())
        .collect();
    let lx: Vec<f64> = p1_grid.iter().map(|p| p.ln()).collect();
    let ly: Vec<f64> = p2_grid.iter().map(|p| p.ln()).collect();
    let contour = level_set(&lx, &ly, &lam, 1.0)
        .into_iter()
        .map(|line| line.into_iter().map(|(a, b)| (a.exp(), b.exp())).collect())
        .collect();
    Ok(ImprovementScan {
        optimal: optimal_p1(p1_grid, p2_grid, &lam),
        p1_grid: p1_grid.to_vec(),
        p2_grid: p2_grid.to_vec(),
        points,
        contour,
    })
}

/// For each `p1`, follows `p2` upward from the smallest value while
/// `Lambda > 1` and interpolates the crossing; returns the best column.
pub fn optimal_p1(p1_grid: &[f64], p2_grid: &[f64], lam: &[Vec<f64>]) -> Option<OptimalP1> {
    let mut best: Option<OptimalP1> = None;
    for (i, row) in lam.iter().enumerate() {
        if !(row[0] > 1.0) {
            continue;
        }
        let Some(j) = row.iter().position(|&v| !(v > 1.0)) else {
            // Improvement over the whole column: the bound lies off the grid.
            continue;
        };
        let (a, b) = (row[j - 1], row[j]);
        let t = if b.is_finite() { (a - 1.0) / (a - b) } else { 0.0 };
        let p2 = (p2_grid[j - 1].ln() + t * (p2_grid[j].ln() - p2_grid[j - 1].ln())).exp();
        if best.as_ref().map_or(true, |o| p2 > o.p2_max) {
            best = Some(OptimalP1 {
                index: i,
                p1: p1_grid[i],
                p2_max: p2,
                interior: false,
            });
        }
    }
    best.map(|mut o| {
        o.interior = o.index > 0 && o.index + 1 < p1_grid.len();
        o
    })
}

/// Marching squares for `f = level` on a rectilinear grid with values
/// `f[i][j]` at `(x[i], y[j])`; segments are chained into polylines.
pub fn level_set(x: &[f64], y: &[f64], f: &[Vec<f64>], level: f64) -> Vec<Vec<(f64, f64)>> {
    type P = (f64, f64);
    let g = |i: usize, j: usize| {
        let v = f[i][j] - level;
        if v.is_nan() {
            0.0
        } else {
            v
        }
    };
    // Crossing on the edge between two grid nodes, computed from the lower
    // node so both neighbouring cells produce the same point.
    let cross = |a: (usize, usize), b: (usize, usize)| -> P {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let (va, vb) = (g(a.0, a.1), g(b.0, b.1));
        let t = if va.is_finite() && vb.is_finite() && va != vb {
            va / (va - vb)
        } else {
            0.5
        };
        (x[a.0] + t * (x[b.0] - x[a.0]), y[a.1] + t * (y[b.1] - y[a.1]))
    };
    let mut segs: Vec<(P, P)> = Vec::new();
    for i in 0..x.len().saturating_sub(1) {
        for j in 0..y.len().saturating_sub(1) {
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let above: Vec<bool> = c.iter().map(|&(a, b)| g(a, b) > 0.0).collect();
            let mut pts = Vec::new();
            for k in 0..4 {
                if above[k] != above[(k + 1) % 4] {
                    pts.push(cross(c[k], c[(k + 1) % 4]));
                }
            }
            match pts.len() {
                2 => segs.push((pts[0], pts[1])),
                4 => {
                    let centre = c.iter().map(|&(a, b)| g(a, b)).sum::<f64>() / 4.0;
                    // Edges are ordered bottom, right, top, left; pair them so
                    // the centre's side stays connected.
                    if (centre > 0.0) == above[0] {
                        segs.push((pts[0], pts[1]));
                        segs.push((pts[2], pts[3]));
                    } else {
                        segs.push((pts[0], pts[3]));
                        segs.push((pts[1], pts[2]));
                    }
                }
                _ => {}
            }
        }
    }
    chain(segs)
}

fn chain(mut segs: Vec<((f64, f64), (f64, f64))>) -> Vec<Vec<(f64, f64)>> {
    let mut lines = Vec::new();
    while let Some((a, b)) = segs.pop() {
        let mut line = std::collections::VecDeque::from([a, b]);
        loop {
            let tail = *line.back().expect("nonempty");
            let head = *line.front().expect("nonempty");
            if let Some(k) = segs.iter().position(|s| s.0 == tail || s.1 == tail) {
                let s = segs.swap_remove(k);
                line.push_back(if s.0 == tail { s.1 } else { s.0 });
            } else if let Some(k) = segs.iter().position(|s| s.0 == head || s.1 == head) {
                let s = segs.swap_remove(k);
                line.push_front(if s.0 == head { s.1 } else { s.0 });
            } else {
                break;
            }
        }
        lines.push(line.into_iter().collect::<Vec<_>>());
    }
    // Deterministic order: by first point.
    lines.sort_by(|a: &Vec<(f64, f64)>, b| a[0].partial_cmp(&b[0]).unwrap_or(std::cmp::Ordering::Equal));
    lines
}
