//! Stabiliser bookkeeping over GF(2), used to derive detectors.
//!
//! Each generator carries the set of outcome slots whose product is its
//! current eigenvalue. Measuring an element of the group is deterministic
//! and yields a detector; measuring anything else is random and updates the
//! group in the standard way.

use std::collections::BTreeSet;

use super::circuit::{CircuitStep, Detector, Operation, ResolvedDetector, SlotId};
use crate::error::{Error, Result};
use crate::pauli::{PauliKey, PauliString, Sign};
use crate::state::PauliState;

#[derive(Clone, Debug)]
struct Generator {
    pauli: PauliString,
    slots: BTreeSet<SlotId>,
}

#[derive(Clone, Debug)]
pub struct StabilizerTracker {
    width: usize,
    gens: Vec<Generator>,
}

/// Result of measuring an operator against the tracked group.
#[derive(Clone, Debug, PartialEq)]
pub enum TrackedMeasurement {
    Random,
    Determined(ResolvedDetector),
}

fn pack(k: PauliKey) -> u64 {
    k.x as u64 | (k.z as u64) << 32
}

/// Finds a subset of `vectors` xor-ing to `target`, as a bitmask.
fn solve_gf2(vectors: &[u64], target: u64) -> Option<u64> {
    // (reduced vector, combination) rows in echelon form by leading bit.
    let mut rows: Vec<(u64, u64)> = Vec::new();
    for (i, &v) in vectors.iter().enumerate() {
        let mut r = (v, 1u64 << i);
        for &(b, c) in &rows {
            if r.0 & (1u64 << (63 - b.leading_zeros())) != 0 {
                r.0 ^= b;
                r.1 ^= c;
            }
        }
        if r.0 != 0 {
            rows.push(r);
            // Highest pivot first, so reduction never reintroduces a handled bit.
            rows.sort_by_key(|r| r.0.leading_zeros());
        }
    }
    let mut t = (target, 0u64);
    for &(b, c) in &rows {
        if t.0 & (1u64 << (63 - b.leading_zeros())) != 0 {
            t.0 ^= b;
            t.1 ^= c;
        }
    }
    (t.0 == 0).then_some(t.1)
}

impl StabilizerTracker {
    /// Starts from a group generated by `initial` (signed), whose eigenvalues
    /// are `+1`. An empty list is the maximally mixed state.
    pub fn new(width: usize, initial: &[PauliString]) -> Result<StabilizerTracker> {
        let mut t = StabilizerTracker { width, gens: Vec::new() };
        for g in initial {
            if g.num_qubits() != width {
                return Err(Error::QubitMismatch {
                    left: g.num_qubits(),
                    right: width,
                });
            }
            if t.gens.iter().any(|h| h.pauli.key().anticommutes(g.key())) {
                return Err(Error::Invalid(format!("initial stabiliser {g} anticommutes with another")));
            }
            if t.express(g).is_some() {
                return Err(Error::Invalid(format!("initial stabiliser {g} is not independent")));
            }
            t.gens.push(Generator {
                pauli: *g,
                slots: BTreeSet::new(),
            });
        }
        Ok(t)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn generators(&self) -> impl Iterator<Item = (&PauliString, &BTreeSet<SlotId>)> {
        self.gens.iter().map(|g| (&g.pauli, &g.slots))
    }

    /// If `p` is in the group, the slots whose outcome product times the
    /// returned sign is the eigenvalue of `p`.
    pub fn express(&self, p: &PauliString) -> Option<(BTreeSet<SlotId>, Sign)> {
        if p.is_identity() {
            return Some((BTreeSet::new(), p.sign()));
        }
        let vecs: Vec<u64> = self.gens.iter().map(|g| pack(g.pauli.key())).collect();
        let combo = solve_gf2(&vecs, pack(p.key()))?;
        let mut prod = PauliString::identity(self.width);
        let mut slots = BTreeSet::new();
        for (i, g) in self.gens.iter().enumerate() {
            if combo >> i & 1 == 1 {
                prod = prod.mul_commuting(&g.pauli).expect("group elements commute");
                slots = slots.symmetric_difference(&g.slots).copied().collect();
            }
        }
        Some((slots, p.sign() * prod.sign()))
    }

    pub fn commutes_with_all(&self, p: &PauliString) -> bool {
        self.gens.iter().all(|g| !g.pauli.key().anticommutes(p.key()))
    }

    pub fn measure(&mut self, p: &PauliString, slot: SlotId) -> Result<TrackedMeasurement> {
        if p.num_qubits() != self.width {
            return Err(Error::QubitMismatch {
                left: p.num_qubits(),
                right: self.width,
            });
        }
        if let Some((mut slots, sign)) = self.express(p) {
            slots.insert(slot);
            return Ok(TrackedMeasurement::Determined(ResolvedDetector { slots, parity: sign }));
        }
        let anti: Vec<usize> = (0..self.gens.len())
            .filter(|&i| self.gens[i].pauli.key().anticommutes(p.key()))
            .collect();
        let fresh = Generator {
            pauli: *p,
            slots: [slot].into_iter().collect(),
        };
        match anti.split_first() {
            None => self.gens.push(fresh),
            Some((&k, rest)) => {
                let pivot = self.gens[k].clone();
                for &j in rest {
                    let g = &mut self.gens[j];
                    g.pauli = g.pauli.mul_commuting(&pivot.pauli)?;
                    g.slots = g.slots.symmetric_difference(&pivot.slots).copied().collect();
                }
                self.gens[k] = fresh;
            }
        }
        Ok(TrackedMeasurement::Random)
    }
}

/// Detectors of a Clifford measurement schedule: one per deterministic
/// measurement, in circuit order.
pub fn derive_detectors(width: usize, steps: &[CircuitStep], initial: &[PauliString]) -> Result<Vec<Detector>> {
    let mut t = StabilizerTracker::new(width, initial)?;
    let mut out = Vec::new();
    for step in steps {
        for op in &step.ops {
            if let Operation::Rotate { .. } = op {
                return Err(Error::Invalid("detector derivation needs a rotation-free schedule".into()));
            }
            let (Some(p), Some(slot)) = (op.measured_pauli(width), op.slot()) else {
                continue;
            };
            if let TrackedMeasurement::Determined(d) = t.measure(&p?, slot)? {
                out.push(Detector::fixed(d.slots.into_iter().collect(), d.parity));
            }
        }
    }
    Ok(out)
}

/// An independent generating set of the stabiliser group of `state`: the
/// signed strings with `|<P>| = 1` up to `tol`.
pub fn stabilizer_generators(state: &PauliState, tol: f64) -> Result<Vec<PauliString>> {
    let tr = state.trace();
    if tr <= 0.0 {
        return Err(Error::ZeroAcceptance);
    }
    let n = state.num_qubits();
    let mut gens: Vec<PauliString> = Vec::new();
    let mut vecs: Vec<u64> = Vec::new();
    for (k, c) in state.coefficients() {
        if k.is_identity() || (c.abs() / tr - 1.0).abs() > tol {
            continue;
        }
        if solve_gf2(&vecs, pack(k)).is_some() {
            continue;
        }
        vecs.push(pack(k));
        gens.push(PauliString::from_key(n, k, Sign::from_bool_minus(c < 0.0)));
    }
    Ok(gens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::pauli;

    #[test]
    fn repeated_measurement_is_a_detector() {
        let mut t = StabilizerTracker::new(2, &[]).unwrap();
        assert_eq!(t.measure(&pauli("XX"), SlotId(0)).unwrap(), TrackedMeasurement::Random);
        assert_eq!(t.measure(&pauli("ZZ"), SlotId(1)).unwrap(), TrackedMeasurement::Random);
        // -YY = XX . ZZ
        match t.measure(&pauli("YY"), SlotId(2)).unwrap() {
            TrackedMeasurement::Determined(d) => {
                assert_eq!(d.slots, [SlotId(0), SlotId(1), SlotId(2)].into_iter().collect());
                assert_eq!(d.parity, Sign::Minus);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn anticommuting_update_keeps_products() {
        let mut t = StabilizerTracker::new(2, &[pauli("ZI"), pauli("IZ")]).unwrap();
        t.measure(&pauli("XX"), SlotId(0)).unwrap();
        // ZZ survives with no slots attached.
        let (slots, sign) = t.express(&pauli("ZZ")).unwrap();
        assert!(slots.is_empty());
        assert_eq!(sign, Sign::Plus);
        assert!(t.express(&pauli("ZI")).is_none());
    }

    #[test]
    fn generators_of_bell_state() {
        let st = PauliState::stabilizer_state(2, &[pauli("XX"), pauli("-ZZ")]).unwrap();
        let g = stabilizer_generators(&st, 1e-12).unwrap();
        assert_eq!(g.len(), 2);
        let t = StabilizerTracker::new(2, &g).unwrap();
        assert_eq!(t.express(&pauli("YY")).unwrap().1, Sign::Plus);
    }

    #[test]
    fn solver_finds_combinations() {
        assert_eq!(solve_gf2(&[0b011, 0b110], 0b101), Some(0b11));
        assert_eq!(solve_gf2(&[0b011, 0b110], 0b100), None);
        assert_eq!(solve_gf2(&[0b1, 0b1], 0b1).map(|c| c.count_ones()), Some(1));
    }
}
