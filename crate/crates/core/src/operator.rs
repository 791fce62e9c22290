//! Dense operators and Pauli-transfer superoperators.
//!
//! The dense representation is the slow reference route. The simulator runs
//! on [`crate::state::PauliState`] and converts here for eigenvalue checks
//! and reporting.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{pauli_basis, PauliString, Sign};

pub type C64 = Complex64;

/// A `2^n x 2^n` complex matrix tagged with its qubit count.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    num_qubits: usize,
    m: DMatrix<C64>,
}

impl DenseOperator {
    pub fn zeros(num_qubits: usize) -> DenseOperator {
        let d = 1 << num_qubits;
        DenseOperator {
            num_qubits,
            m: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(num_qubits: usize) -> DenseOperator {
        let d = 1 << num_qubits;
        DenseOperator {
            num_qubits,
            m: DMatrix::identity(d, d),
        }
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<DenseOperator> {
        let d = m.nrows();
        if d != m.ncols() || !d.is_power_of_two() || d == 0 {
            return Err(Error::Invalid(format!("{}x{} is not a qubit operator", m.nrows(), m.ncols())));
        }
        Ok(DenseOperator {
            num_qubits: d.trailing_zeros() as usize,
            m,
        })
    }

    /// `|psi><psi|` for an (unnormalised) amplitude vector.
    pub fn pure(amplitudes: &[C64]) -> Result<DenseOperator> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        DenseOperator::from_matrix(&v * v.adjoint())
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(num_qubits: usize) -> DenseOperator {
        let d = (1 << num_qubits) as f64;
        DenseOperator::identity(num_qubits).scale(C64::new(1.0 / d, 0.0))
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn dagger(&self) -> DenseOperator {
        DenseOperator {
            num_qubits: self.num_qubits,
            m: self.m.adjoint(),
        }
    }

    pub fn matmul(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            num_qubits: self.num_qubits,
            m: &self.m * &other.m,
        }
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            num_qubits: self.num_qubits,
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            num_qubits: self.num_qubits,
            m: &self.m - &other.m,
        }
    }

    pub fn scale(&self, c: C64) -> DenseOperator {
        DenseOperator {
            num_qubits: self.num_qubits,
            m: &self.m * c,
        }
    }

    pub fn scale_re(&self, c: f64) -> DenseOperator {
        self.scale(C64::new(c, 0.0))
    }

    /// `A rho A^dagger`.
    pub fn conjugate(&self, a: &DenseOperator) -> DenseOperator {
        a.matmul(self).matmul(&a.dagger())
    }

    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            num_qubits: self.num_qubits + other.num_qubits,
            m: self.m.kronecker(&other.m),
        }
    }

    /// Frobenius distance.
    pub fn distance(&self, other: &DenseOperator) -> f64 {
        (&self.m - &other.m).norm()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// `tr(self^dagger other)`.
    pub fn inner(&self, other: &DenseOperator) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (a, b) in self.m.iter().zip(other.m.iter()) {
            acc += a.conj() * b;
        }
        acc
    }

    pub fn hermitian_deviation(&self) -> f64 {
        (&self.m - self.m.adjoint()).norm()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Traces out the listed qubits.
    pub fn partial_trace(&self, traced: &[usize]) -> Result<DenseOperator> {
        let n = self.num_qubits;
        for &q in traced {
            if q >= n {
                return Err(Error::QubitOutOfRange { qubit: q, width: n });
            }
        }
        let kept: Vec<usize> = (0..n).filter(|q| !traced.contains(q)).collect();
        let tr: Vec<usize> = (0..n).filter(|q| traced.contains(q)).collect();
        let dk = 1 << kept.len();
        let dt = 1 << tr.len();
        let index = |kbits: usize, tbits: usize| -> usize {
            let mut idx = 0;
            for (i, &q) in kept.iter().enumerate() {
                let bit = (kbits >> (kept.len() - 1 - i)) & 1;
                idx |= bit << (n - 1 - q);
            }
            for (i, &q) in tr.iter().enumerate() {
                let bit = (tbits >> (tr.len() - 1 - i)) & 1;
                idx |= bit << (n - 1 - q);
            }
            idx
        };
        let mut out = DMatrix::zeros(dk, dk);
        for a in 0..dk {
            for b in 0..dk {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..dt {
                    acc += self.m[(index(a, t), index(b, t))];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(DenseOperator {
            num_qubits: kept.len(),
            m: out,
        })
    }
}

/// Dense matrix of a signed Pauli string.
pub fn pauli_matrix(p: &PauliString) -> DenseOperator {
    let n = p.num_qubits();
    let d = 1usize << n;
    let key = p.key();
    // Matrix bit for qubit q is bit (n - 1 - q) of the row index.
    let rev = |mask: u32| -> usize {
        let mut out = 0usize;
        for q in 0..n {
            out |= (((mask >> q) & 1) as usize) << (n - 1 - q);
        }
        out
    };
    let xm = rev(key.x);
    let zm = rev(key.z);
    let ny = (key.x & key.z).count_ones() as i64;
    let base = crate::pauli::Phase::from_exponent(ny).to_complex() * p.sign().to_f64();
    let mut m = DMatrix::zeros(d, d);
    // X^x Z^z |c> = (-1)^{z.c} |c ^ x>
    for col in 0..d {
        let row = col ^ xm;
        let s = if (zm & col).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[(row, col)] = base * s;
    }
    DenseOperator { num_qubits: n, m }
}

/// `(I + s P) / 2`.
pub fn projector(p: &PauliString, s: Sign) -> Result<DenseOperator> {
    if p.is_identity() {
        return Err(Error::Invalid("projector onto an identity string".into()));
    }
    let id = DenseOperator::identity(p.num_qubits());
    Ok(id.add(&pauli_matrix(p).scale_re(s.to_f64())).scale_re(0.5))
}

/// Real Pauli-transfer matrix `R_ij = tr(P_i E(P_j)) / 2^n` in the order of
/// [`pauli_basis`].
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    num_qubits: usize,
    m: DMatrix<f64>,
}

impl Superoperator {
    pub fn identity(num_qubits: usize) -> Superoperator {
        let d = 1 << (2 * num_qubits);
        Superoperator {
            num_qubits,
            m: DMatrix::identity(d, d),
        }
    }

    pub fn from_matrix(num_qubits: usize, m: DMatrix<f64>) -> Result<Superoperator> {
        let d = 1 << (2 * num_qubits);
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Invalid(format!("transfer matrix must be {d}x{d}")));
        }
        Ok(Superoperator { num_qubits, m })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `self` applied after `first`.
    pub fn after(&self, first: &Superoperator) -> Superoperator {
        Superoperator {
            num_qubits: self.num_qubits,
            m: &self.m * &first.m,
        }
    }

    pub fn add(&self, other: &Superoperator) -> Superoperator {
        Superoperator {
            num_qubits: self.num_qubits,
            m: &self.m + &other.m,
        }
    }

    pub fn scale(&self, c: f64) -> Superoperator {
        Superoperator {
            num_qubits: self.num_qubits,
            m: &self.m * c,
        }
    }

    pub fn distance(&self, other: &Superoperator) -> f64 {
        (&self.m - &other.m).norm()
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        (&self.m - &other.m).amax()
    }

    /// Largest deviation of the first row from `(1, 0, ..., 0)`.
    pub fn trace_deviation(&self) -> f64 {
        let mut dev = (self.m[(0, 0)] - 1.0).abs();
        for j in 1..self.m.ncols() {
            dev = dev.max(self.m[(0, j)].abs());
        }
        dev
    }

    pub fn apply(&self, rho: &DenseOperator) -> DenseOperator {
        let basis: Vec<DenseOperator> = pauli_basis(self.num_qubits).iter().map(pauli_matrix).collect();
        let d = (1usize << self.num_qubits) as f64;
        let coeffs: Vec<f64> = basis.iter().map(|p| p.matmul(rho).trace().re / d.sqrt()).collect();
        let mut out = DenseOperator::zeros(self.num_qubits);
        for (i, p) in basis.iter().enumerate() {
            let mut c = 0.0;
            for (j, cj) in coeffs.iter().enumerate() {
                c += self.m[(i, j)] * cj;
            }
            out = out.add(&p.scale_re(c / d.sqrt()));
        }
        out
    }

    /// Transfer matrix of `rho -> U rho U^dagger`.
    pub fn from_unitary(u: &DenseOperator) -> Superoperator {
        let n = u.num_qubits();
        channel_to_superop(n, |rho| rho.conjugate(u))
    }
}

/// Tomographs a black-box linear map on `num_qubits` qubits.
pub fn channel_to_superop<F>(num_qubits: usize, channel: F) -> Superoperator
where
    F: Fn(&DenseOperator) -> DenseOperator,
{
    let basis: Vec<DenseOperator> = pauli_basis(num_qubits).iter().map(pauli_matrix).collect();
    let d = (1usize << num_qubits) as f64;
    let k = basis.len();
    let mut m = DMatrix::zeros(k, k);
    for (j, pj) in basis.iter().enumerate() {
        let out = channel(pj);
        for (i, pi) in basis.iter().enumerate() {
            m[(i, j)] = pi.matmul(&out).trace().re / d;
        }
    }
    Superoperator { num_qubits, m }
}

/// How to treat a channel that loses trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Reject channels whose trace deviates from one by more than `1e-9`.
    RequireTracePreserving,
    /// Divide by the average success probability.
    AverageAcceptance,
}

/// Average gate fidelity of a noisy channel against a target unitary,
/// `F = (d F_pro + 1) / (d + 1)`.
pub fn average_gate_fidelity(noisy: &Superoperator, ideal: &DenseOperator, norm: Normalization) -> Result<f64> {
    if noisy.num_qubits() != ideal.num_qubits() {
        return Err(Error::QubitMismatch {
            left: noisy.num_qubits(),
            right: ideal.num_qubits(),
        });
    }
    let dev = noisy.trace_deviation();
    let r00 = noisy.m[(0, 0)];
    if norm == Normalization::RequireTracePreserving && dev > 1e-9 {
        return Err(Error::NotTracePreserving(dev));
    }
    if r00 <= 0.0 {
        return Err(Error::ZeroAcceptance);
    }
    let target = Superoperator::from_unitary(ideal);
    let d = ideal.dim() as f64;
    let f_pro = target.m.component_mul(&noisy.m).sum() / (d * d);
    let f_pro = match norm {
        Normalization::RequireTracePreserving => f_pro,
        Normalization::AverageAcceptance => f_pro / r00,
    };
    Ok((d * f_pro + 1.0) / (d + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::pauli;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_matrices_by_hand() {
        let y = pauli_matrix(&pauli("Y"));
        assert_eq!(y.matrix()[(0, 1)], c(0.0, -1.0));
        assert_eq!(y.matrix()[(1, 0)], c(0.0, 1.0));
        // X on qubit 0 flips the most significant bit.
        let xi = pauli_matrix(&pauli("XI"));
        assert_eq!(xi.matrix()[(2, 0)], c(1.0, 0.0));
        let zx = pauli_matrix(&pauli("-ZX"));
        let expect = pauli_matrix(&pauli("Z")).kron(&pauli_matrix(&pauli("X"))).scale_re(-1.0);
        assert!(zx.distance(&expect) < 1e-15);
    }

    #[test]
    fn projector_properties() {
        let p = projector(&pauli("XZ"), Sign::Minus).unwrap();
        assert!(p.matmul(&p).distance(&p) < 1e-14);
        assert!((p.trace().re - 2.0).abs() < 1e-14);
        assert!(projector(&pauli("II"), Sign::Plus).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = DenseOperator::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = DenseOperator::maximally_mixed(1);
        let ab = a.kron(&b);
        assert!(ab.partial_trace(&[1]).unwrap().distance(&a) < 1e-15);
        assert!(ab.partial_trace(&[0]).unwrap().distance(&b) < 1e-15);
    }

    #[test]
    fn superop_round_trip() {
        let h = DenseOperator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)],
        ))
        .unwrap()
        .scale_re(std::f64::consts::FRAC_1_SQRT_2);
        let s = Superoperator::from_unitary(&h);
        let rho = DenseOperator::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        assert!(s.apply(&rho).distance(&rho.conjugate(&h)) < 1e-14);
        assert!(s.trace_deviation() < 1e-15);
        // H maps X <-> Z and Y -> -Y.
        assert!((s.matrix()[(3, 1)] - 1.0).abs() < 1e-15);
        assert!((s.matrix()[(2, 2)] + 1.0).abs() < 1e-15);
    }

    fn haar_state(rng: &mut ChaCha8Rng, d: usize) -> Vec<C64> {
        use rand_distr::StandardNormal;
        let v: Vec<C64> = (0..d)
            .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|z| z / n).collect()
    }

    #[test]
    fn fidelity_agrees_with_haar_average() {
        // Amplitude damping followed by a small rotation: not unital, so the
        // fidelity depends on the state and the average is non-trivial.
        let g: f64 = 0.2;
        let k0 = DenseOperator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - g).sqrt(), 0.0)],
        ))
        .unwrap();
        let k1 = DenseOperator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(g.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap();
        let t = 0.1f64;
        let u = DenseOperator::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(t.cos(), 0.0), c(0.0, -t.sin()), c(0.0, -t.sin()), c(t.cos(), 0.0)],
        ))
        .unwrap();
        let chan = |r: &DenseOperator| r.conjugate(&k0).add(&r.conjugate(&k1)).conjugate(&u);
        let s = channel_to_superop(1, chan);
        let f = average_gate_fidelity(&s, &DenseOperator::identity(1), Normalization::RequireTracePreserving).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 20_000;
        let mut acc = 0.0;
        for _ in 0..samples {
            let psi = haar_state(&mut rng, 2);
            let rho = DenseOperator::pure(&psi).unwrap();
            acc += rho.matmul(&chan(&rho)).trace().re;
        }
        let mc = acc / samples as f64;
        assert!((f - mc).abs() < 2e-3, "closed form {f} vs Haar {mc}");
    }

    #[test]
    fn fidelity_rejects_lossy_channel() {
        let p = projector(&pauli("Z"), Sign::Plus).unwrap();
        let s = channel_to_superop(1, |r| r.conjugate(&p));
        let id = DenseOperator::identity(1);
        assert!(matches!(
            average_gate_fidelity(&s, &id, Normalization::RequireTracePreserving),
            Err(Error::NotTracePreserving(_))
        ));
        let f = average_gate_fidelity(&s, &id, Normalization::AverageAcceptance).unwrap();
        assert!(f > 0.0 && f <= 1.0);
    }
}
