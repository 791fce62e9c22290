use std::collections::{BTreeMap, BTreeSet};

use super::circuit::{CircuitStep, Operation, ResolvedDetector, SlotId};
use crate::channels::{idle_channel, meas1_channel, meas2_channel, timed_coupling_rotation, Channel, NoiseParams};
use crate::error::{Error, Result};
use crate::operator::DenseOperator;
use crate::pauli::{PauliString, Sign};
use crate::state::PauliState;

/// Outcomes of the slots a branch still distinguishes.
pub type OutcomeRecord = BTreeMap<SlotId, Sign>;

/// Unnormalised states indexed by outcome record. Their traces are the
/// joint probabilities of the records and they sum to the unconditional
/// state.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEnsemble {
    width: usize,
    /// Slots present in every record.
    filled: BTreeSet<SlotId>,
    branches: BTreeMap<OutcomeRecord, PauliState>,
}

/// Single branch holding `rho`, which must be a density matrix.
pub fn init_ensemble(width: usize, rho: &DenseOperator) -> Result<TrajectoryEnsemble> {
    if rho.num_qubits() != width {
        return Err(Error::QubitMismatch {
            left: rho.num_qubits(),
            right: width,
        });
    }
    if (rho.trace().re - 1.0).abs() > 1e-9 || rho.trace().im.abs() > 1e-9 {
        return Err(Error::Invalid(format!("initial state has trace {}", rho.trace())));
    }
    if rho.hermitian_deviation() > 1e-9 {
        return Err(Error::Invalid("initial state is not Hermitian".into()));
    }
    let ev = rho.min_eigenvalue();
    if ev < -1e-9 {
        return Err(Error::Invalid(format!("initial state has eigenvalue {ev}")));
    }
    Ok(TrajectoryEnsemble::from_state(PauliState::from_dense(rho)))
}

impl TrajectoryEnsemble {
    pub fn from_state(state: PauliState) -> TrajectoryEnsemble {
        let width = state.num_qubits();
        let mut branches = BTreeMap::new();
        branches.insert(OutcomeRecord::new(), state);
        TrajectoryEnsemble {
            width,
            filled: BTreeSet::new(),
            branches,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn branches(&self) -> impl Iterator<Item = (&OutcomeRecord, &PauliState)> {
        self.branches.iter()
    }

    pub fn filled_slots(&self) -> &BTreeSet<SlotId> {
        &self.filled
    }

    /// Applies a channel on the whole register to every branch.
    pub fn apply_channel(&mut self, channel: &Channel) {
        for st in self.branches.values_mut() {
            channel.apply_pauli(st);
        }
    }

    /// `P rho P` on every branch, for error injection.
    pub fn apply_pauli_error(&mut self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.width {
            return Err(Error::QubitMismatch {
                left: p.num_qubits(),
                right: self.width,
            });
        }
        for st in self.branches.values_mut() {
            st.conjugate_pauli(p.key());
        }
        Ok(())
    }

    /// Measures with the given outcome-`+1` instrument channel (its
    /// assignment stage is flipped for `-1`), splitting every branch.
    fn measure(&mut self, plus: &Channel, slot: SlotId) -> Result<()> {
        if self.filled.contains(&slot) {
            return Err(Error::SlotCollision(slot));
        }
        let (prefix, observable, p_a, suffix) = plus
            .split_at_assignment()
            .ok_or_else(|| Error::Invalid("instrument channel has no assignment stage".into()))?;
        let obs_key = observable.key();
        let obs_sign = observable.sign();
        let mut out = BTreeMap::new();
        for (rec, mut st) in std::mem::take(&mut self.branches) {
            for stage in prefix {
                stage.apply_pauli(&mut st);
            }
            for s in [Sign::Plus, Sign::Minus] {
                let mut b = st.clone();
                b.assign(obs_key, s * obs_sign, p_a);
                for stage in suffix {
                    stage.apply_pauli(&mut b);
                }
                let mut r = rec.clone();
                r.insert(slot, s);
                out.insert(r, b);
            }
        }
        self.branches = out;
        self.filled.insert(slot);
        Ok(())
    }

    /// Applies one operation without idle noise.
    pub fn apply_operation(&mut self, op: &Operation, noise: &NoiseParams) -> Result<()> {
        match op {
            Operation::Idle { .. } => Ok(()),
            Operation::Meas1 { pauli, qubit, slot } => {
                let ch = meas1_channel(pauli, Sign::Plus, noise.p_a, noise.p1)?.embed(self.width, &[*qubit])?;
                self.measure(&ch, *slot)
            }
            Operation::Meas2 { pauli, qubits, slot } => {
                let ch = meas2_channel(pauli, Sign::Plus, noise)?.embed(self.width, qubits)?;
                self.measure(&ch, *slot)
            }
            Operation::Rotate { axis, qubit, phi } => {
                let ch = timed_coupling_rotation(axis, *phi)?.embed(self.width, &[*qubit])?;
                self.apply_channel(&ch);
                Ok(())
            }
        }
    }

    /// One idle step on each listed qubit.
    pub fn apply_idle(&mut self, qubits: &[usize], noise: &NoiseParams) -> Result<()> {
        if noise.p1 == 0.0 && noise.theta == 0.0 {
            return Ok(());
        }
        let idle = idle_channel(noise.p1, noise.theta)?;
        let mut ch = Channel::identity(self.width);
        for &q in qubits {
            ch = ch.then(&idle.embed(self.width, &[q])?)?;
        }
        self.apply_channel(&ch);
        Ok(())
    }

    /// All operations of a step, then idle noise on every qubit that was not
    /// measured.
    pub fn apply_step(&mut self, step: &CircuitStep, noise: &NoiseParams) -> Result<()> {
        let mut used = BTreeSet::new();
        for op in &step.ops {
            for q in op.qubits() {
                if q >= self.width {
                    return Err(Error::QubitOutOfRange { qubit: q, width: self.width });
                }
                if op.is_measurement() && !used.insert(q) {
                    return Err(Error::Invalid(format!("qubit {q} measured twice in one step")));
                }
            }
        }
        for op in &step.ops {
            self.apply_operation(op, noise)?;
        }
        let idle: Vec<usize> = (0..self.width).filter(|q| !used.contains(q)).collect();
        self.apply_idle(&idle, noise)
    }

    fn check_filled(&self, d: &ResolvedDetector) -> Result<()> {
        for s in &d.slots {
            if !self.filled.contains(s) {
                return Err(Error::UnfilledSlot(*s));
            }
        }
        Ok(())
    }

    /// Discards every branch that violates one of the detectors.
    pub fn prune_detected(&mut self, detectors: &[ResolvedDetector]) -> Result<()> {
        for d in detectors {
            self.check_filled(d)?;
        }
        self.branches.retain(|rec, _| {
            detectors.iter().all(|d| {
                let prod = d.slots.iter().fold(Sign::Plus, |acc, s| acc * rec[s]);
                prod == d.parity
            })
        });
        Ok(())
    }

    /// Sums over the outcomes of `slots`. Fails if a pending detector still
    /// needs one of them.
    pub fn marginalize_outcomes(&mut self, slots: &[SlotId], pending: &[ResolvedDetector]) -> Result<()> {
        for s in slots {
            if !self.filled.contains(s) {
                return Err(Error::UnfilledSlot(*s));
            }
            if pending.iter().any(|d| d.slots.contains(s)) {
                return Err(Error::SlotStillNeeded(*s));
            }
        }
        let drop: BTreeSet<SlotId> = slots.iter().copied().collect();
        self.rekey(|rec| rec.iter().filter(|(s, _)| !drop.contains(s)).map(|(s, v)| (*s, *v)).collect());
        for s in slots {
            self.filled.remove(s);
        }
        Ok(())
    }

    /// Replaces the record by parities of groups of filled slots. Each entry
    /// `(new, parts)` records the product of the outcomes in `parts` under
    /// `new`; slots in no group are summed over.
    pub fn fold_outcomes(&mut self, groups: &[(SlotId, Vec<SlotId>)]) -> Result<()> {
        for (_, parts) in groups {
            for s in parts {
                if !self.filled.contains(s) {
                    return Err(Error::UnfilledSlot(*s));
                }
            }
        }
        self.rekey(|rec| {
            groups
                .iter()
                .map(|(new, parts)| (*new, parts.iter().fold(Sign::Plus, |acc, s| acc * rec[s])))
                .collect()
        });
        self.filled = groups.iter().map(|(s, _)| *s).collect();
        Ok(())
    }

    fn rekey<F: Fn(&OutcomeRecord) -> OutcomeRecord>(&mut self, f: F) {
        let mut out: BTreeMap<OutcomeRecord, PauliState> = BTreeMap::new();
        for (rec, st) in std::mem::take(&mut self.branches) {
            match out.entry(f(&rec)) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(st);
                }
                std::collections::btree_map::Entry::Occupied(mut o) => o.get_mut().add_assign(&st),
            }
        }
        self.branches = out;
    }

    pub fn scale(&mut self, c: f64) {
        for st in self.branches.values_mut() {
            *st = std::mem::replace(st, PauliState::zero(self.width)).scaled(c);
        }
    }

    /// Drops branches whose state is exactly zero (zero-probability records
    /// of noiseless deterministic measurements).
    pub fn drop_zero_branches(&mut self) {
        self.branches.retain(|_, st| !st.is_zero());
    }

    /// Sum of the branches.
    pub fn total_pauli_state(&self) -> PauliState {
        let mut acc = PauliState::zero(self.width);
        for st in self.branches.values() {
            acc.add_assign(st);
        }
        acc
    }

    pub fn total_state(&self) -> DenseOperator {
        self.total_pauli_state().to_dense()
    }

    /// Total probability of the retained records.
    pub fn acceptance(&self) -> f64 {
        self.branches.values().map(|s| s.trace()).sum()
    }

    /// `tr(O rho) / tr(rho)` over the retained branches.
    pub fn expectation(&self, o: &PauliString) -> Result<f64> {
        let acc = self.acceptance();
        if acc <= 0.0 {
            return Err(Error::ZeroAcceptance);
        }
        let mut num = 0.0;
        for st in self.branches.values() {
            num += st.expectation(o)?;
        }
        Ok(num / acc)
    }

    /// Probability of each value of the parity of `slots`, keyed by sign.
    pub fn parity_distribution(&self, slots: &[SlotId]) -> Result<BTreeMap<Sign, f64>> {
        for s in slots {
            if !self.filled.contains(s) {
                return Err(Error::UnfilledSlot(*s));
            }
        }
        let mut out = BTreeMap::new();
        for (rec, st) in &self.branches {
            let p = slots.iter().fold(Sign::Plus, |acc, s| acc * rec[s]);
            *out.entry(p).or_insert(0.0) += st.trace();
        }
        Ok(out)
    }
}
