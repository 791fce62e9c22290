//! Drives an ensemble through a circuit, pruning detected branches as soon
//! as their detectors are complete.
//!
//! With compression on, the record is cut down after every measurement to a
//! basis of the parities that pending detectors (and explicitly kept slots)
//! still need. Branches that agree on those parities are summed. That is
//! exact: a later detector only ever looks at a parity of earlier outcomes.

use std::collections::{BTreeMap, BTreeSet};

use super::circuit::{Circuit, ResolvedDetector, SlotId};
use super::ensemble::TrajectoryEnsemble;
use crate::channels::NoiseParams;
use crate::error::{Error, Result};

/// First id handed out for folded parities; circuits number their slots
/// from zero and stay far below this.
const DERIVED_BASE: u32 = 1 << 30;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Fold the record down to the parities still needed.
    pub compress: bool,
    /// Slots that stay individually resolvable when compressing.
    pub keep: BTreeSet<SlotId>,
    /// Drop branches whose state is exactly zero.
    pub drop_zero: bool,
}

impl RunOptions {
    pub fn compressed() -> RunOptions {
        RunOptions {
            compress: true,
            keep: BTreeSet::new(),
            drop_zero: true,
        }
    }
}

pub struct Runner<'a> {
    circuit: &'a Circuit,
    noise: NoiseParams,
    opts: RunOptions,
    ensemble: TrajectoryEnsemble,
    pending: Vec<ResolvedDetector>,
    next_step: usize,
    next_derived: u32,
    peak_branches: usize,
}

impl<'a> Runner<'a> {
    pub fn new(
        circuit: &'a Circuit,
        noise: NoiseParams,
        initial: TrajectoryEnsemble,
        opts: RunOptions,
    ) -> Result<Runner<'a>> {
        noise.validate()?;
        if initial.width() != circuit.width() {
            return Err(Error::QubitMismatch {
                left: initial.width(),
                right: circuit.width(),
            });
        }
        let peak = initial.branch_count();
        Ok(Runner {
            circuit,
            noise,
            opts,
            ensemble: initial,
            pending: circuit.resolved_detectors(),
            next_step: 0,
            next_derived: DERIVED_BASE,
            peak_branches: peak,
        })
    }

    pub fn ensemble(&self) -> &TrajectoryEnsemble {
        &self.ensemble
    }

    pub fn into_ensemble(self) -> TrajectoryEnsemble {
        self.ensemble
    }

    /// Number of steps applied so far.
    pub fn steps_done(&self) -> usize {
        self.next_step
    }

    pub fn is_done(&self) -> bool {
        self.next_step >= self.circuit.steps().len()
    }

    /// Largest branch count seen between operations.
    pub fn peak_branches(&self) -> usize {
        self.peak_branches
    }

    /// Detectors not yet applied.
    pub fn pending(&self) -> &[ResolvedDetector] {
        &self.pending
    }

    /// Applies the next step; returns `false` once the circuit is exhausted.
    pub fn step(&mut self) -> Result<bool> {
        let noise = self.noise;
        self.step_with(&noise)
    }

    /// Applies the next step under different noise, e.g. for a noiseless
    /// preparation stage.
    pub fn step_with(&mut self, noise: &NoiseParams) -> Result<bool> {
        noise.validate()?;
        let Some(step) = self.circuit.steps().get(self.next_step) else {
            return Ok(false);
        };
        let measured = step.measured_qubits();
        for op in &step.ops {
            self.ensemble.apply_operation(op, noise)?;
            self.peak_branches = self.peak_branches.max(self.ensemble.branch_count());
            if op.is_measurement() {
                self.after_measurement()?;
            }
        }
        let idle: Vec<usize> = (0..self.circuit.width()).filter(|q| !measured.contains(q)).collect();
        self.ensemble.apply_idle(&idle, noise)?;
        self.next_step += 1;
        Ok(true)
    }

    /// `P rho P` on every branch before the next step.
    pub fn inject_pauli(&mut self, p: &crate::pauli::PauliString) -> Result<()> {
        self.ensemble.apply_pauli_error(p)
    }

    /// Multiplies every branch by `c`, e.g. to renormalise after a
    /// post-selected preparation.
    pub fn rescale(&mut self, c: f64) {
        self.ensemble.scale(c);
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while self.step()? {}
        Ok(())
    }

    fn after_measurement(&mut self) -> Result<()> {
        let filled = self.ensemble.filled_slots().clone();
        let (ready, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending)
            .into_iter()
            .partition(|d| d.slots.is_subset(&filled));
        self.pending = rest;
        self.ensemble.prune_detected(&ready)?;
        if self.opts.drop_zero {
            self.ensemble.drop_zero_branches();
        }
        if self.opts.compress {
            self.compress()?;
        }
        Ok(())
    }

    fn compress(&mut self) -> Result<()> {
        let filled: Vec<SlotId> = self.ensemble.filled_slots().iter().copied().collect();
        if filled.is_empty() {
            return Ok(());
        }
        let index: BTreeMap<SlotId, usize> = filled.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let words = filled.len().div_ceil(64);
        let to_bits = |slots: &mut dyn Iterator<Item = SlotId>| -> Vec<u64> {
            let mut v = vec![0u64; words];
            for s in slots {
                if let Some(&i) = index.get(&s) {
                    v[i / 64] ^= 1 << (i % 64);
                }
            }
            v
        };
        let mut rows: Vec<Vec<u64>> = Vec::new();
        for d in &self.pending {
            rows.push(to_bits(&mut d.slots.iter().copied()));
        }
        for s in &self.opts.keep {
            if index.contains_key(s) {
                rows.push(to_bits(&mut std::iter::once(*s)));
            }
        }
        let basis = rref(rows, filled.len());
        if basis.len() == filled.len() {
            // Full rank: the current record is already minimal.
            return Ok(());
        }
        let bit = |v: &[u64], i: usize| v[i / 64] >> (i % 64) & 1 == 1;
        let mut groups: Vec<(SlotId, Vec<SlotId>)> = Vec::new();
        for (_, row) in &basis {
            let parts: Vec<SlotId> = (0..filled.len()).filter(|&i| bit(row, i)).map(|i| filled[i]).collect();
            let id = if parts.len() == 1 {
                parts[0]
            } else {
                let id = SlotId(self.next_derived);
                self.next_derived += 1;
                id
            };
            groups.push((id, parts));
        }
        // Rewrite pending detectors in the new coordinates: in reduced form a
        // row-space vector is the sum of the rows whose pivot it contains.
        for d in &mut self.pending {
            let v = to_bits(&mut d.slots.iter().copied());
            let mut slots: BTreeSet<SlotId> = d.slots.iter().filter(|s| !index.contains_key(s)).copied().collect();
            for ((pivot, _), (id, _)) in basis.iter().zip(&groups) {
                if bit(&v, *pivot) {
                    slots.insert(*id);
                }
            }
            d.slots = slots;
        }
        self.ensemble.fold_outcomes(&groups)
    }
}

/// Reduced row echelon form over GF(2): `(pivot column, row)` pairs.
fn rref(mut rows: Vec<Vec<u64>>, ncols: usize) -> Vec<(usize, Vec<u64>)> {
    let bit = |v: &[u64], i: usize| v[i / 64] >> (i % 64) & 1 == 1;
    let mut out: Vec<(usize, Vec<u64>)> = Vec::new();
    for col in 0..ncols {
        let Some(pos) = rows.iter().position(|r| bit(r, col)) else {
            continue;
        };
        let pivot = rows.swap_remove(pos);
        for r in rows.iter_mut().chain(out.iter_mut().map(|(_, r)| r)) {
            if bit(r, col) {
                for (a, b) in r.iter_mut().zip(&pivot) {
                    *a ^= b;
                }
            }
        }
        out.push((col, pivot));
    }
    out
}

/// Runs a whole circuit.
pub fn run_circuit(
    circuit: &Circuit,
    noise: &NoiseParams,
    initial: TrajectoryEnsemble,
    opts: RunOptions,
) -> Result<TrajectoryEnsemble> {
    let mut r = Runner::new(circuit, *noise, initial, opts)?;
    r.run_to_end()?;
    Ok(r.into_ensemble())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::pauli;
    use crate::sim::{derive_detectors, CircuitBuilder};
    use crate::state::PauliState;

    fn ladder(rounds: usize) -> Circuit {
        let mut b = CircuitBuilder::new(4);
        for _ in 0..rounds {
            b.step();
            b.meas2(pauli("XX"), 0, 1);
            b.meas2(pauli("XX"), 2, 3);
            b.step();
            b.meas2(pauli("ZZ"), 0, 2);
            b.meas2(pauli("ZZ"), 1, 3);
        }
        let dets = derive_detectors(4, b.steps(), &[]).unwrap();
        b.build(dets).unwrap()
    }

    #[test]
    fn rref_reduces_fully() {
        let r = rref(vec![vec![0b011], vec![0b110], vec![0b101]], 3);
        assert_eq!(r.len(), 2);
        assert_eq!(r[0], (0, vec![0b101]));
        assert_eq!(r[1], (1, vec![0b110]));
    }

    #[test]
    fn compression_is_exact() {
        let c = ladder(4);
        let noise = NoiseParams::new(0.03, 0.02, 0.05, 0.0).unwrap();
        let init = TrajectoryEnsemble::from_state(PauliState::maximally_mixed(4));
        let plain = run_circuit(&c, &noise, init.clone(), RunOptions::default()).unwrap();
        let mut r = Runner::new(&c, noise, init, RunOptions::compressed()).unwrap();
        r.run_to_end().unwrap();
        let folded = r.ensemble();
        assert!(folded.branch_count() < plain.branch_count());
        assert!(r.peak_branches() <= 64, "{}", r.peak_branches());
        assert!((folded.acceptance() - plain.acceptance()).abs() < 1e-12);
        let d = folded.total_pauli_state().max_abs_diff(&plain.total_pauli_state());
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn kept_slots_survive_compression() {
        let c = ladder(2);
        let noise = NoiseParams::new(0.01, 0.01, 0.0, 0.0).unwrap();
        let init = TrajectoryEnsemble::from_state(PauliState::maximally_mixed(4));
        let keep: BTreeSet<SlotId> = [SlotId(0), SlotId(5)].into_iter().collect();
        let opts = RunOptions {
            keep: keep.clone(),
            ..RunOptions::compressed()
        };
        let folded = run_circuit(&c, &noise, init.clone(), opts).unwrap();
        let plain = run_circuit(&c, &noise, init, RunOptions::default()).unwrap();
        for s in &keep {
            assert!(folded.filled_slots().contains(s));
        }
        let a = folded.parity_distribution(&[SlotId(0), SlotId(5)]).unwrap();
        let b = plain.parity_distribution(&[SlotId(0), SlotId(5)]).unwrap();
        for (k, v) in a {
            assert!((v - b[&k]).abs() < 1e-12);
        }
    }
}
