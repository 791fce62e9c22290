//! Sparse real Pauli-coefficient representation of (unnormalised) states.
//!
//! `rho = 2^-n sum_P r_P P` over unsigned Hermitian strings, so `r_I` is the
//! trace and `r_P = tr(P rho)`. Every channel in the noise model maps Pauli
//! strings to real combinations of Pauli strings, and without coherent
//! rotations the support of a stabiliser-like state never leaves a group of
//! at most `2^n` elements. That keeps eight-qubit branches at a few hundred
//! coefficients where a dense matrix would hold 65536.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::operator::{pauli_matrix, DenseOperator, C64};
use crate::pauli::{PauliKey, PauliString, Sign};

#[derive(Clone, Debug, PartialEq)]
pub struct PauliState {
    num_qubits: usize,
    coeffs: BTreeMap<PauliKey, f64>,
}

impl PauliState {
    /// The zero operator.
    pub fn zero(num_qubits: usize) -> PauliState {
        PauliState {
            num_qubits,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds `2^-n sum r_P P` from explicit coefficients.
    pub fn from_coefficients(num_qubits: usize, coeffs: impl IntoIterator<Item = (PauliKey, f64)>) -> PauliState {
        let mut s = PauliState::zero(num_qubits);
        for (k, c) in coeffs {
            debug_assert!(k.support() >> num_qubits == 0);
            *s.coeffs.entry(k).or_insert(0.0) += c;
        }
        s.coeffs.retain(|_, c| *c != 0.0);
        s
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> PauliState {
        let mut s = PauliState::zero(num_qubits);
        s.coeffs.insert(PauliKey::IDENTITY, 1.0);
        s
    }

    /// The pure state stabilised by `generators` (signs included), which must
    /// commute and be independent.
    pub fn stabilizer_state(num_qubits: usize, generators: &[PauliString]) -> Result<PauliState> {
        let mut group: BTreeMap<PauliKey, f64> = BTreeMap::new();
        group.insert(PauliKey::IDENTITY, 1.0);
        for g in generators {
            if g.num_qubits() != num_qubits {
                return Err(Error::QubitMismatch {
                    left: g.num_qubits(),
                    right: num_qubits,
                });
            }
            if group.contains_key(&g.key()) {
                return Err(Error::Invalid(format!("stabiliser {g} is not independent")));
            }
            let mut next = group.clone();
            for (&k, &c) in &group {
                if k.anticommutes(g.key()) {
                    return Err(Error::Invalid(format!("stabiliser {g} anticommutes with the others")));
                }
                let (prod, phase) = k.mul(g.key());
                let re = phase.to_complex().re * c * g.sign().to_f64();
                next.insert(prod, re);
            }
            group = next;
        }
        // prod (I + g) / 2 over k generators, times I / 2^(n - k), is 2^-n times
        // the signed group sum: every coefficient is already +-1.
        Ok(PauliState {
            num_qubits,
            coeffs: group,
        })
    }

    /// `r_P = tr(P rho)` for every `P`; exact for Hermitian input.
    pub fn from_dense(rho: &DenseOperator) -> PauliState {
        let n = rho.num_qubits();
        let mut s = PauliState::zero(n);
        for p in crate::pauli::pauli_basis(n) {
            let c = pauli_matrix(&p).matmul(rho).trace().re;
            if c != 0.0 {
                s.coeffs.insert(p.key(), c);
            }
        }
        s
    }

    pub fn to_dense(&self) -> DenseOperator {
        let n = self.num_qubits;
        let d = 1usize << n;
        let mut m = nalgebra::DMatrix::<C64>::zeros(d, d);
        let rev = |mask: u32| -> usize {
            let mut out = 0usize;
            for q in 0..n {
                out |= (((mask >> q) & 1) as usize) << (n - 1 - q);
            }
            out
        };
        for (&k, &c) in &self.coeffs {
            let (xm, zm) = (rev(k.x), rev(k.z));
            let base = crate::pauli::Phase::from_exponent((k.x & k.z).count_ones() as i64).to_complex() * (c / d as f64);
            for col in 0..d {
                let v = if (zm & col).count_ones() % 2 == 1 { -base } else { base };
                m[(col ^ xm, col)] += v;
            }
        }
        DenseOperator::from_matrix(m).expect("square power of two")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (PauliKey, f64)> + '_ {
        self.coeffs.iter().map(|(&k, &c)| (k, c))
    }

    pub fn coefficient(&self, key: PauliKey) -> f64 {
        self.coeffs.get(&key).copied().unwrap_or(0.0)
    }

    pub fn trace(&self) -> f64 {
        self.coefficient(PauliKey::IDENTITY)
    }

    /// `tr(O rho)` for a signed string `O`.
    pub fn expectation(&self, o: &PauliString) -> Result<f64> {
        if o.num_qubits() != self.num_qubits {
            return Err(Error::QubitMismatch {
                left: o.num_qubits(),
                right: self.num_qubits,
            });
        }
        Ok(self.coefficient(o.key()) * o.sign().to_f64())
    }

    pub fn scaled(mut self, c: f64) -> PauliState {
        for v in self.coeffs.values_mut() {
            *v *= c;
        }
        self
    }

    pub fn add_assign(&mut self, other: &PauliState) {
        debug_assert_eq!(self.num_qubits, other.num_qubits);
        for (&k, &c) in &other.coeffs {
            *self.coeffs.entry(k).or_insert(0.0) += c;
        }
        self.coeffs.retain(|_, c| *c != 0.0);
    }

    /// Largest coefficient difference.
    pub fn max_abs_diff(&self, other: &PauliState) -> f64 {
        let mut d: f64 = 0.0;
        for (&k, &c) in &self.coeffs {
            d = d.max((c - other.coefficient(k)).abs());
        }
        for (&k, &c) in &other.coeffs {
            if !self.coeffs.contains_key(&k) {
                d = d.max(c.abs());
            }
        }
        d
    }

    /// `P rho P` for an unsigned string.
    pub fn conjugate_pauli(&mut self, p: PauliKey) {
        for (k, c) in self.coeffs.iter_mut() {
            if k.anticommutes(p) {
                *c = -*c;
            }
        }
    }

    /// `sum_k w_k P_k rho P_k`.
    pub fn pauli_mixture(&mut self, terms: &[(f64, PauliKey)]) {
        for (k, c) in self.coeffs.iter_mut() {
            let mut f = 0.0;
            for &(w, p) in terms {
                f += if k.anticommutes(p) { -w } else { w };
            }
            *c *= f;
        }
        self.coeffs.retain(|_, c| *c != 0.0);
    }

    /// `e^{i phi A} rho e^{-i phi A}`.
    pub fn rotate(&mut self, axis: PauliKey, phi: f64) {
        let (s, c) = (2.0 * phi).sin_cos();
        // Commuting terms are untouched; anticommuting ones mix in pairs.
        let mut delta: Vec<(PauliKey, f64)> = Vec::new();
        for (&k, v) in self.coeffs.iter_mut() {
            if !k.anticommutes(axis) {
                continue;
            }
            // e^{i phi A} P e^{-i phi A} = cos 2phi P + sin 2phi (i A P) for {A, P} = 0.
            let (ap, phase) = axis.mul(k);
            let factor = phase.exponent() as f64 - 2.0; // i * i^k: k = 1 -> -1, k = 3 -> +1
            delta.push((ap, s * factor * *v));
            *v *= c;
        }
        for (k, d) in delta {
            *self.coeffs.entry(k).or_insert(0.0) += d;
        }
        self.coeffs.retain(|_, c| *c != 0.0);
    }

    /// `(1 - p_a) Pi_s rho Pi_s + p_a Pi_-s rho Pi_-s` with `Pi_s = (I + s M) / 2`.
    ///
    /// `p_a = 0` is the bare projection.
    pub fn assign(&mut self, m: PauliKey, s: Sign, p_a: f64) {
        let w = s.to_f64() * (1.0 - 2.0 * p_a) * 0.5;
        let mut out: BTreeMap<PauliKey, f64> = BTreeMap::new();
        for (&k, &v) in &self.coeffs {
            if k.anticommutes(m) {
                continue;
            }
            let (km, phase) = k.mul(m);
            debug_assert!(phase.is_real());
            let omega = if phase.exponent() == 0 { 1.0 } else { -1.0 };
            *out.entry(k).or_insert(0.0) += 0.5 * v;
            *out.entry(km).or_insert(0.0) += w * omega * v;
        }
        out.retain(|_, c| *c != 0.0);
        self.coeffs = out;
    }

    /// Traces out `qubit`, relabelling higher qubits down by one.
    pub fn trace_out(&self, qubit: usize) -> Result<PauliState> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                width: self.num_qubits,
            });
        }
        let low = (1u32 << qubit) - 1;
        let squeeze = |m: u32| (m & low) | ((m >> 1) & !low);
        let mut out = PauliState::zero(self.num_qubits - 1);
        for (&k, &c) in &self.coeffs {
            if k.support() >> qubit & 1 == 1 {
                continue;
            }
            // tr_q(P (x) I) = 2 P, and the 2^-n prefactor loses one factor of 2.
            out.coeffs.insert(
                PauliKey {
                    x: squeeze(k.x),
                    z: squeeze(k.z),
                },
                c,
            );
        }
        Ok(out)
    }

    /// Smallest eigenvalue, via the dense form.
    pub fn min_eigenvalue(&self) -> f64 {
        self.to_dense().min_eigenvalue()
    }
}
