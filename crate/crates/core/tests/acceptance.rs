//! Acceptance battery. Prints one line per criterion and exits nonzero if
//! any of them fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tetron_core::braiding::{fidelity_scan, linspace, magic_state_fidelity, verify_sequence_identity, CliffordClass, SEQUENCE_TOL};
use tetron_core::channels::{assignment_channel, depolarize, derive_noise, rotation, NoiseParams, PhysicalParams};
use tetron_core::mbqb::{
    mbqb_errors, rebit_gst, subsequence_statistics, wilson_interval, Basis, GstMode, Instrument, InstrumentPair, StatsMode,
};
use tetron_core::pauli::{Letter, PauliString, Sign};
use tetron_core::qed::{default_rounds, improvement_scan, logspace, repcode_expectations, ImprovementScan, Level, RepObservable, RepState};
use tetron_core::sim::{derive_detectors, Circuit, run_circuit, CircuitBuilder, RunOptions, TrajectoryEnsemble};
use tetron_core::state::PauliState;

type Outcome = (bool, String);

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |n: usize, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let (ok, detail) = f();
        let secs = t.elapsed().as_secs_f64();
        println!("criterion {n:2}: {} ({secs:.1} s) {detail}", if ok { "PASS" } else { "FAIL" });
        all &= ok;
    };
    report(1, &mbqb_triple);
    report(2, &sequence_identities);
    report(3, &fidelity_structure);
    report(6, &noise_chain);
    report(7, &conservation_suite);
    report(8, &expectation_table);
    report(9, &rebit_gst_oracle);
    report(10, &t_state);
    let t = Instant::now();
    let scan = lambda_scan();
    println!("(25x25 improvement scan took {:.1} s)", t.elapsed().as_secs_f64());
    report(4, &|| improvement_structure(&scan));
    report(5, &|| containment(&scan));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn instr(b: Basis, p_a: f64) -> Instrument {
    Instrument::new(b.pauli(), p_a, 0.0).unwrap()
}

fn mbqb_triple() -> Outcome {
    let mut cases: Vec<(String, InstrumentPair, (f64, f64))> = vec![(
        "random outcomes".into(),
        InstrumentPair::new(instr(Basis::X, 0.5), instr(Basis::Z, 0.5)),
        (0.5, 0.0),
    )];
    for pf in [0.05, 0.1, 0.2] {
        cases.push((
            format!("flip {pf}"),
            InstrumentPair::new(instr(Basis::X, pf), instr(Basis::Z, pf)),
            (2.0 * pf * (1.0 - pf), 0.0),
        ));
    }
    cases.push((
        "identical".into(),
        InstrumentPair::new(instr(Basis::X, 0.0), instr(Basis::X, 0.0)),
        (0.0, 0.5),
    ));
    let mut worst_exact = 0.0f64;
    let mut outside = Vec::new();
    let mut min_counts = u64::MAX;
    for (k, (name, pair, want)) in cases.iter().enumerate() {
        let exact = subsequence_statistics(pair, StatsMode::Exact).unwrap();
        let (a, b) = mbqb_errors(&exact);
        worst_exact = worst_exact.max((a - want.0).abs()).max((b - want.1).abs());
        // Half the windows start with a reset.
        let mode = StatsMode::Sampled {
            steps: 2_100_000,
            seed: 1000 + k as u64,
            batches: 8,
        };
        let sampled = subsequence_statistics(pair, mode).unwrap();
        let total: u64 = sampled.entries.iter().map(|e| e.counts.unwrap().1).sum();
        min_counts = min_counts.min(total);
        for (e, s) in exact.entries.iter().zip(&sampled.entries) {
            let (k, n) = s.counts.unwrap();
            let (lo, hi) = wilson_interval(k, n, 3.0);
            if !(lo <= e.prob_plus && e.prob_plus <= hi) {
                outside.push(format!("{name}: {:?} {:?} {:?} {:?}", e.order, e.prep, e.prep_outcome, e.meas));
            }
        }
    }
    let ok = worst_exact < 1e-9 && outside.is_empty() && min_counts >= 1_000_000;
    (
        ok,
        format!(
            "exact max deviation {worst_exact:.1e}; sampled {min_counts}+ counts per case, {} entries outside 3-sigma Wilson {:?}",
            outside.len(),
            outside
        ),
    )
}

fn sequence_identities() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for c in CliffordClass::NONTRIVIAL {
        let r = verify_sequence_identity(c);
        ok &= r.passed() && r.max_deviation < SEQUENCE_TOL;
        parts.push(format!("{}: {} vectors, dev {:.1e}", c.name(), r.vectors_checked, r.max_deviation));
    }
    (ok, parts.join("; "))
}

/// Regression values of F[S] on the default grid at `p2 = 0.1`.
const PINS: [(f64, f64, f64); 3] = [
    (0.05, 0.02, 0.788941215895168),
    (0.1, 0.1, 0.649384848830396),
    (0.2, 0.2, 0.553992717032676),
];

fn fidelity_structure() -> Outcome {
    let grid = linspace(0.0, 0.2, 21);
    let scan = fidelity_scan(CliffordClass::S, &grid, &grid, 0.1).unwrap();
    let f = |i: usize, j: usize| scan[i * grid.len() + j].fidelity;
    let mut monotone = true;
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            if i + 1 < grid.len() && f(i + 1, j) > f(i, j) + 1e-12 {
                monotone = false;
            }
            if j + 1 < grid.len() && f(i, j + 1) > f(i, j) + 1e-12 {
                monotone = false;
            }
        }
    }
    let at = |p1: f64, pa: f64, p2: f64| {
        fidelity_scan(CliffordClass::S, &[p1], &[pa], p2).unwrap()[0].fidelity
    };
    let f0 = at(0.0, 0.0, 0.0);
    let d_p1 = (at(0.01, 0.0, 0.0) - f0) / 0.01;
    let d_p2 = (at(0.0, 0.0, 0.01) - f0) / 0.01;
    let weak = d_p2.abs() < d_p1.abs();
    let mut pins_ok = true;
    let mut pin_text = Vec::new();
    for (p1, pa, want) in PINS {
        let i = grid.iter().position(|&g| (g - p1).abs() < 1e-12).unwrap();
        let j = grid.iter().position(|&g| (g - pa).abs() < 1e-12).unwrap();
        let got = f(i, j);
        pins_ok &= (got - want).abs() < 1e-9;
        pin_text.push(format!("F({p1},{pa})={got:.15}"));
    }
    (
        monotone && weak && pins_ok,
        format!(
            "F(0,0;p2=0.1)={:.12}, monotone={monotone}, dF/dp1={d_p1:.4}, dF/dp2={d_p2:.4}, pins {}",
            f(0, 0),
            pin_text.join(" ")
        ),
    )
}

fn lambda_scan() -> ImprovementScan {
    let grid = logspace(1e-4, 1e-1, 25);
    improvement_scan(&grid, &grid, 0.01, &default_rounds()).unwrap()
}

fn improvement_structure(scan: &ImprovementScan) -> Outcome {
    let n1 = scan.p1_grid.len();
    let n2 = scan.p2_grid.len();
    let mut improved_below = 0;
    let mut flagged = 0;
    let mut diag_max = f64::NEG_INFINITY;
    let mut lambda_max = f64::NEG_INFINITY;
    for i in 0..n1 {
        for j in 0..n2 {
            let p = scan.at(i, j);
            if !p.flags.is_empty() || !p.lambda.is_finite() {
                flagged += 1;
            }
            if p.lambda > 1.0 && p.p2 < p.p1 {
                improved_below += 1;
            }
            lambda_max = lambda_max.max(p.lambda);
            if i == j {
                diag_max = diag_max.max(p.lambda);
            }
        }
    }
    let interior = scan.optimal.as_ref().is_some_and(|o| o.interior);
    let optimum = scan
        .optimal
        .as_ref()
        .map_or("none".to_string(), |o| format!("p1={:.3e} p2_max={:.3e}", o.p1, o.p2_max));
    (
        improved_below > 0 && diag_max <= 1.02 && interior,
        format!(
            "(a) {improved_below} points with Lambda>1 and p2<p1 (max Lambda {lambda_max:.3}); (b) diagonal max {diag_max:.4}; (c) interior={interior}, {optimum}; {flagged} flagged points"
        ),
    )
}

fn containment(scan: &ImprovementScan) -> Outcome {
    let x: Vec<usize> = (0..scan.points.len()).filter(|&k| scan.points[k].lambda_x > 1.0).collect();
    let z: Vec<usize> = (0..scan.points.len()).filter(|&k| scan.points[k].lambda_z > 1.0).collect();
    let subset = z.iter().all(|k| x.contains(k));
    (
        subset && x.len() > z.len(),
        format!("|Lambda_X>1| = {}, |Lambda_Z>1| = {}, subset={subset}", x.len(), z.len()),
    )
}

fn noise_chain() -> Outcome {
    let phys = PhysicalParams {
        snr: Some(3.7),
        delta_over_kt: Some(12.0),
        l_over_xi: Some(20.0),
        delta_ev: Some(50e-6),
        tau_elph: Some(50e-9),
        tau_meas: Some(1e-6),
        ..PhysicalParams::default()
    };
    let n = derive_noise(&phys).unwrap();
    let inside = |v: f64| (0.5e-4..=2e-4).contains(&v);
    (
        inside(n.p_a) && inside(n.p1) && inside(n.theta),
        format!("p_a={:.3e} p1={:.3e} theta={:.3e}", n.p_a, n.p1, n.theta),
    )
}

fn random_pauli(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
    let letters: Vec<Letter> = (0..n).map(|_| [Letter::X, Letter::Y, Letter::Z][rng.gen_range(0..3)]).collect();
    PauliString::from_letters(&letters, Sign::Plus).unwrap()
}

/// One random circuit of the conservation battery: width, circuit steps,
/// initial product state and noise.
struct RandomCase {
    width: usize,
    builder: CircuitBuilder,
    initial: Vec<PauliString>,
    noise: NoiseParams,
    rotations: bool,
}

fn random_case(seed: u64) -> RandomCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = 2 + (seed as usize % 7);
    let rotations = seed % 2 == 1;
    let mut b = CircuitBuilder::new(width);
    let mut measured = 0;
    let steps = rng.gen_range(3..=6);
    for _ in 0..steps {
        b.step();
        let mut qs: Vec<usize> = (0..width).collect();
        qs.shuffle(&mut rng);
        let mut k = 0;
        while k < qs.len() {
            let kind = rng.gen_range(0..4);
            if kind == 0 && k + 1 < qs.len() && measured < 8 {
                b.meas2(random_pauli(&mut rng, 2), qs[k], qs[k + 1]);
                measured += 1;
                k += 2;
                continue;
            }
            if kind == 1 && measured < 8 {
                b.meas1(random_pauli(&mut rng, 1), qs[k]);
                measured += 1;
            } else if kind == 2 && rotations {
                b.rotate(random_pauli(&mut rng, 1), qs[k], rng.gen_range(-1.0..1.0));
            }
            k += 1;
        }
    }
    let initial: Vec<PauliString> = (0..width)
        .map(|q| {
            let l = [Letter::X, Letter::Y, Letter::Z][rng.gen_range(0..3)];
            let s = if rng.gen::<bool>() { Sign::Plus } else { Sign::Minus };
            PauliString::single(width, q, l).with_sign(s)
        })
        .collect();
    let noise = NoiseParams::new(
        rng.gen_range(0.0..0.1),
        rng.gen_range(0.0..0.1),
        rng.gen_range(0.0..0.1),
        rng.gen_range(0.0..0.2),
    )
    .unwrap();
    RandomCase {
        width,
        builder: b,
        initial,
        noise,
        rotations,
    }
}

fn conservation_suite() -> Outcome {
    let mut worst_trace = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    let mut worst_schedule = 0.0f64;
    let mut with_detectors = 0;
    let mut branches_checked = 0;
    for seed in 0..50u64 {
        let case = random_case(seed);
        let state = PauliState::stabilizer_state(case.width, &case.initial).unwrap();
        let init = TrajectoryEnsemble::from_state(state);
        let steps = case.builder.steps().to_vec();

        let circuit = Circuit::new(case.width, steps.clone(), vec![]).unwrap();
        let out = run_circuit(&circuit, &case.noise, init.clone(), RunOptions::default()).unwrap();
        worst_trace = worst_trace.max((out.total_pauli_state().trace() - 1.0).abs());
        // Dense eigenvalues on every branch for small registers, the first
        // sixteen branches in record order for seven and eight qubits.
        let limit = if case.width <= 6 { usize::MAX } else { 16 };
        for (_, s) in out.branches().take(limit) {
            worst_eig = worst_eig.min(s.min_eigenvalue());
            branches_checked += 1;
        }

        // Schedule independence: prune only, against prune plus folding.
        let detectors = if case.rotations {
            vec![]
        } else {
            derive_detectors(case.width, &steps, &case.initial).unwrap()
        };
        if !detectors.is_empty() {
            with_detectors += 1;
        }
        let circuit = Circuit::new(case.width, steps, detectors).unwrap();
        let plain = run_circuit(&circuit, &case.noise, init.clone(), RunOptions::default()).unwrap();
        let folded = run_circuit(&circuit, &case.noise, init, RunOptions::compressed()).unwrap();
        let d = plain.total_pauli_state().max_abs_diff(&folded.total_pauli_state());
        worst_schedule = worst_schedule.max(d).max((plain.acceptance() - folded.acceptance()).abs());
    }
    (
        worst_trace < 1e-9 && worst_eig >= -1e-9 && worst_schedule < 1e-12,
        format!(
            "50 circuits ({with_detectors} with detectors): trace dev {worst_trace:.1e}, min eigenvalue {worst_eig:.1e} over {branches_checked} branches, schedule dev {worst_schedule:.1e}"
        ),
    )
}

fn expectation_table() -> Outcome {
    let mut worst = 0.0f64;
    for level in [Level::Physical, Level::Logical] {
        let z_err = level.observable(RepObservable::ZI);
        let x_err = level.observable(RepObservable::XX);
        let a = repcode_expectations(RepState::XxEigenstate, level, Some(&z_err)).unwrap();
        let b = repcode_expectations(RepState::ZzEigenstate, level, Some(&x_err)).unwrap();
        for (got, want) in a.iter().zip([1.0, 0.0, -1.0]).chain(b.iter().zip([1.0, -1.0, 0.0])) {
            worst = worst.max((got - want).abs());
        }
    }
    (worst < 1e-10, format!("12 values at both levels, max deviation {worst:.1e}"))
}

fn rebit_gst_oracle() -> Outcome {
    let ideal = InstrumentPair::new(instr(Basis::X, 0.0), instr(Basis::Z, 0.0));
    let chans = vec![
        ("dep".to_string(), depolarize(0.2, 1).unwrap().to_superop()),
        ("rotz".to_string(), rotation(&Basis::Z.pauli(), 0.3).unwrap().to_superop()),
        ("assign".to_string(), assignment_channel(&Basis::X.pauli(), Sign::Plus, 0.05).unwrap().to_superop()),
    ];
    // Rebit blocks in (1, x, z), written out by hand.
    let d = 1.0 - 4.0 * 0.2 / 3.0;
    let c = 0.6f64.cos();
    let a = 0.5 * (1.0 - 2.0 * 0.05);
    let truth = [
        DMatrix::from_row_slice(3, 3, &[1., 0., 0., 0., d, 0., 0., 0., d]),
        DMatrix::from_row_slice(3, 3, &[1., 0., 0., 0., c, 0., 0., 0., 1.]),
        DMatrix::from_row_slice(3, 3, &[0.5, a, 0., a, 0.5, 0., 0., 0., 0.]),
    ];
    let mut worst = [0.0f64; 2];
    for (k, mode) in [GstMode::Exact, GstMode::Sampled { shots: 1_000_000, seed: 7 }].into_iter().enumerate() {
        let gs = rebit_gst(&ideal, &chans, mode).unwrap();
        for (est, t) in gs.maps.iter().zip(&truth) {
            worst[k] = worst[k].max((est - t).amax());
        }
    }
    (
        worst[0] < 5e-3 && worst[1] < 5e-3,
        format!("exact max error {:.1e}, sampled (1e6 shots) max error {:.1e}", worst[0], worst[1]),
    )
}

fn t_state() -> Outcome {
    let mut worst = 0.0f64;
    for delta in [0.0, 0.05, 0.1] {
        let f = magic_state_fidelity(delta).unwrap();
        worst = worst.max((f - (1.0 - delta.sin().powi(2))).abs());
    }
    (worst < 1e-10, format!("max deviation from 1 - sin^2(delta) {worst:.1e}"))
}
