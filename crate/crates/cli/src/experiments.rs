//! One runner per subcommand. Each returns its artifacts, the parameters it
//! used (for the manifest) and a one-line summary.

use serde::Serialize;
use serde_json::{json, Value};
use tetron_core::braiding::{fidelity_scan, linspace, magic_state_fidelity, CliffordClass};
use tetron_core::channels::NoiseParams;
use tetron_core::mbqb::{
    instrument_operations, lifetime_experiment, mbqb_errors, rebit_gst, reset_superop, subsequence_statistics, Basis, ConditionalTable,
    GstMode, InstrumentPair, StatsMode,
};
use tetron_core::qed::{default_rounds, improvement_scan, logspace};

use crate::config::{BraidSection, LifetimeSection, MbqbSection, QedSection, TgateSection};
use crate::output::{json, sig12, Artifacts, Csv};
use crate::CliError;

pub struct Outcome {
    pub artifacts: Artifacts,
    pub params: Value,
    pub summary: String,
}

/// How results are estimated: exact probabilities or a number of shots.
#[derive(Clone, Copy, Debug)]
pub enum Mode {
    Exact,
    Shots(u64),
}

fn exact_only(mode: Mode, what: &str) -> Result<(), CliError> {
    match mode {
        Mode::Exact => Ok(()),
        Mode::Shots(_) => Err(CliError::Config(format!("{what} runs in exact mode only; drop --shots"))),
    }
}

#[derive(Serialize)]
struct MbqbRecord<'a> {
    err_a: f64,
    err_b: f64,
    table: &'a ConditionalTable,
    mode: &'static str,
    shots: Option<u64>,
    seed: u64,
    noise: NoiseParams,
    /// Largest transfer-matrix entry by which the reset misses `tr(rho) I/2`.
    reset_distance: f64,
    gst: GstRecord,
}

#[derive(Serialize)]
struct GstRecord {
    coordinates: [&'static str; 3],
    labels: Vec<String>,
    maps: Vec<Vec<Vec<f64>>>,
    noop: Vec<Vec<f64>>,
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn mbqb(noise: &NoiseParams, mode: Mode, seed: u64, section: &MbqbSection) -> Result<Outcome, CliError> {
    let pair = InstrumentPair::from_noise(noise).map_err(CliError::from_core)?;
    let batches = section.batches.unwrap_or(8);
    let (stats_mode, gst_mode, shots) = match mode {
        Mode::Exact => (StatsMode::Exact, GstMode::Exact, None),
        Mode::Shots(n) => (
            StatsMode::Sampled {
                steps: n as usize,
                seed,
                batches,
            },
            GstMode::Sampled {
                shots: n,
                seed: seed.wrapping_add(1),
            },
            Some(n),
        ),
    };
    let table = subsequence_statistics(&pair, stats_mode).map_err(CliError::from_core)?;
    for e in &table.entries {
        if !(e.prob_plus.is_finite() && e.prob_minus.is_finite()) {
            return Err(CliError::Numerical(format!(
                "conditional probability is not finite for {:?} {:?}{:?} -> {:?}",
                e.order, e.prep, e.prep_outcome, e.meas
            )));
        }
    }
    let (err_a, err_b) = mbqb_errors(&table);
    let mut target = nalgebra::DMatrix::zeros(4, 4);
    target[(0, 0)] = 1.0;
    let reset_distance = (reset_superop(&pair).matrix() - target).amax();
    let gs = rebit_gst(&pair, &instrument_operations(&pair), gst_mode).map_err(CliError::from_core)?;
    let record = MbqbRecord {
        err_a,
        err_b,
        table: &table,
        mode: if shots.is_some() { "sampled" } else { "exact" },
        shots,
        seed,
        noise: *noise,
        reset_distance,
        gst: GstRecord {
            coordinates: ["1", "x", "z"],
            labels: gs.labels.clone(),
            maps: gs.maps.iter().map(rows).collect(),
            noop: rows(&gs.noop),
        },
    };
    let mut artifacts = Artifacts::default();
    artifacts.add("mbqb.json", json(&record));
    Ok(Outcome {
        artifacts,
        params: json!({ "mode": record.mode, "shots": shots, "batches": batches }),
        summary: format!("err_a = {}, err_b = {}", sig12(err_a), sig12(err_b)),
    })
}

pub fn braid(section: &BraidSection, mode: Mode) -> Result<Outcome, CliError> {
    exact_only(mode, "braid")?;
    let class = CliffordClass::parse(section.class.as_deref().unwrap_or("S")).map_err(CliError::from_core)?;
    let p2 = section.p2.unwrap_or(0.1);
    let points = section.points.unwrap_or(21);
    if points < 1 {
        return Err(CliError::Config("braid grid needs at least one point".into()));
    }
    let p1_grid = linspace(0.0, section.p1_max.unwrap_or(0.2), points);
    let pa_grid = linspace(0.0, section.pa_max.unwrap_or(0.2), points);
    let scan = fidelity_scan(class, &p1_grid, &pa_grid, p2).map_err(CliError::from_core)?;
    let mut csv = Csv::new(&["p1", "pa", "p2", "class", "fidelity"]);
    for pt in &scan {
        if !pt.fidelity.is_finite() || pt.fidelity > 1.0 + 1e-9 {
            return Err(CliError::Numerical(format!(
                "fidelity {} at p1={}, pa={} is not a fidelity",
                pt.fidelity, pt.p1, pt.pa
            )));
        }
        csv.row(&[sig12(pt.p1), sig12(pt.pa), sig12(pt.p2), pt.class.name().to_string(), sig12(pt.fidelity)]);
    }
    let mut artifacts = Artifacts::default();
    artifacts.add("fidelity.csv", csv.into_string());
    Ok(Outcome {
        artifacts,
        params: json!({ "class": class.name(), "p2": p2, "p1_grid": p1_grid, "pa_grid": pa_grid }),
        summary: format!("F[{}](0, 0; p2 = {}) = {}", class.name(), sig12(p2), sig12(scan[0].fidelity)),
    })
}

pub fn qed(section: &QedSection, mode: Mode) -> Result<Outcome, CliError> {
    exact_only(mode, "qed")?;
    let p_a = section.p_a.unwrap_or(0.01);
    let lo = section.p_min.unwrap_or(1e-4);
    let hi = section.p_max.unwrap_or(1e-1);
    let points = section.points.unwrap_or(25);
    if !(lo > 0.0 && hi >= lo) || points < 1 {
        return Err(CliError::Config(format!("qed grid needs 0 < p_min <= p_max and points >= 1, got {lo}, {hi}, {points}")));
    }
    let rounds = section.rounds.clone().unwrap_or_else(default_rounds);
    let grid = logspace(lo, hi, points);
    let scan = improvement_scan(&grid, &grid, p_a, &rounds).map_err(CliError::from_core)?;
    let mut csv = Csv::new(&["p1", "p2", "pa", "lambda", "lambda_x", "lambda_z", "accept_phys", "accept_log"]);
    for pt in &scan.points {
        for (name, v) in [("lambda", pt.lambda), ("lambda_x", pt.lambda_x), ("lambda_z", pt.lambda_z)] {
            if v.is_nan() {
                return Err(CliError::Numerical(format!("{name} is NaN at p1={}, p2={}", pt.p1, pt.p2)));
            }
        }
        csv.row(&[
            sig12(pt.p1),
            sig12(pt.p2),
            sig12(pt.pa),
            sig12(pt.lambda),
            sig12(pt.lambda_x),
            sig12(pt.lambda_z),
            sig12(pt.accept_phys),
            sig12(pt.accept_log),
        ]);
    }
    let mut contour = Csv::new(&["polyline", "p1", "p2"]);
    for (k, line) in scan.contour.iter().enumerate() {
        for &(x, y) in line {
            contour.row(&[k.to_string(), sig12(x), sig12(y)]);
        }
    }
    let flagged: Vec<Value> = scan
        .points
        .iter()
        .filter(|p| !p.flags.is_empty())
        .map(|p| json!({ "p1": p.p1, "p2": p.p2, "flags": p.flags }))
        .collect();
    let summary = match &scan.optimal {
        Some(o) => format!(
            "optimal p1 = {} admits p2 up to {}{}",
            sig12(o.p1),
            sig12(o.p2_max),
            if o.interior { "" } else { " (edge of grid)" }
        ),
        None => "no grid point with Lambda > 1".to_string(),
    };
    let mut artifacts = Artifacts::default();
    artifacts.add("lambda.csv", csv.into_string());
    artifacts.add("contour.csv", contour.into_string());
    artifacts.add("qed.json", json(&json!({ "optimal": scan.optimal, "flagged": flagged })));
    Ok(Outcome {
        artifacts,
        params: json!({ "p_a": p_a, "grid": grid, "rounds": rounds }),
        summary,
    })
}

pub fn lifetime(noise: &NoiseParams, section: &LifetimeSection, mode: Mode) -> Result<Outcome, CliError> {
    exact_only(mode, "lifetime")?;
    let basis = match section.basis.as_deref().unwrap_or("X") {
        "X" | "x" => Basis::X,
        "Z" | "z" => Basis::Z,
        other => return Err(CliError::Config(format!("basis must be X or Z, got {other:?}"))),
    };
    let lengths = section.lengths.clone().unwrap_or_else(|| (0..=10).collect());
    let fit = lifetime_experiment(noise, basis, &lengths).map_err(CliError::from_core)?;
    let mut csv = Csv::new(&["length", "contrast"]);
    for (l, c) in fit.lengths.iter().zip(&fit.contrasts) {
        csv.row(&[l.to_string(), sig12(*c)]);
    }
    let mut artifacts = Artifacts::default();
    artifacts.add("lifetime.csv", csv.into_string());
    artifacts.add("lifetime.json", json(&fit));
    let mut summary = format!("flip rate per step = {}", sig12(fit.flip_rate));
    if !fit.exponential {
        summary.push_str(" (contrast is not a clean exponential)");
    }
    Ok(Outcome {
        artifacts,
        params: json!({ "basis": format!("{basis:?}"), "lengths": lengths }),
        summary,
    })
}

pub fn tgate(section: &TgateSection, mode: Mode) -> Result<Outcome, CliError> {
    exact_only(mode, "tgate")?;
    let deltas = section.deltas.clone().unwrap_or_else(|| vec![0.0, 0.05, 0.1]);
    let mut csv = Csv::new(&["delta", "fidelity"]);
    let mut worst: f64 = 1.0;
    for &d in &deltas {
        let f = magic_state_fidelity(d).map_err(CliError::from_core)?;
        worst = worst.min(f);
        csv.row(&[sig12(d), sig12(f)]);
    }
    let mut artifacts = Artifacts::default();
    artifacts.add("tgate.csv", csv.into_string());
    Ok(Outcome {
        artifacts,
        params: json!({ "deltas": deltas }),
        summary: format!("lowest T-state fidelity {}", sig12(worst)),
    })
}
