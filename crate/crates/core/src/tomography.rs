//! Linear-inversion gate-set tomography.
//!
//! With preparation data `D0 = E^T rho` from a no-op experiment and `D = E^T
//! G rho` from the operation of interest, `G_hat = rho_t D0^+ D rho_t^+`
//! recovers `G` in the gauge where the preparations are the ideal ones
//! `rho_t`. With ideal preparations this is `G` itself.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub struct LinearGst {
    ideal_preps: DMatrix<f64>,
    ideal_preps_pinv: DMatrix<f64>,
    noop_pinv: DMatrix<f64>,
}

const RANK_TOL: f64 = 1e-9;

fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().pseudo_inverse(RANK_TOL).expect("nonnegative tolerance")
}

impl LinearGst {
    /// `ideal_preps` is `d x m` (one column per preparation, in the
    /// coordinates named by `coords`), `noop` is `k x m`.
    pub fn new(ideal_preps: DMatrix<f64>, noop: &DMatrix<f64>, coords: &[&str]) -> Result<LinearGst> {
        let d = ideal_preps.nrows();
        if coords.len() != d || noop.ncols() != ideal_preps.ncols() {
            return Err(Error::Invalid("inconsistent tomography dimensions".into()));
        }
        let sv = noop.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > RANK_TOL.max(1e-7 * smax)).count();
        let ideal_preps_pinv = pinv(&ideal_preps);
        if rank < d {
            // The effects seen through the ideal preparations; their null
            // space is the direction no experiment resolves.
            let e = noop * &ideal_preps_pinv;
            let eig = (e.transpose() * &e).symmetric_eigen();
            let (imin, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty");
            let null = eig.eigenvectors.column(imin);
            // Fix the overall sign so the first nonzero entry is positive.
            let flip = null.iter().find(|v| v.abs() > 5e-4).map_or(1.0, |v| v.signum());
            let dir: Vec<String> = coords
                .iter()
                .zip(null.iter())
                .map(|(c, v)| format!("{c}={:+.3}", if v.abs() < 5e-4 { 0.0 } else { flip * v }))
                .collect();
            return Err(Error::DegeneratePreparations(format!(
                "({}); the no-op data has rank {rank} < {d}",
                dir.join(", ")
            )));
        }
        Ok(LinearGst {
            noop_pinv: pinv(noop),
            ideal_preps,
            ideal_preps_pinv,
        })
    }

    /// Estimated `d x d` map from `k x m` data.
    pub fn estimate(&self, data: &DMatrix<f64>) -> DMatrix<f64> {
        &self.ideal_preps * &self.noop_pinv * data * &self.ideal_preps_pinv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_map_with_ideal_preparations() {
        // Rebit preparations X+, X-, Z+, Z- in (1, x, z) coordinates.
        let rho = DMatrix::from_column_slice(3, 4, &[1., 1., 0., 1., -1., 0., 1., 0., 1., 1., 0., -1.]);
        // Effects: probability of + and - for X and Z with 2% flips.
        let f = 0.98 - 0.02;
        let e = DMatrix::from_row_slice(4, 3, &[0.5, 0.5 * f, 0., 0.5, -0.5 * f, 0., 0.5, 0., 0.5 * f, 0.5, 0., -0.5 * f]);
        let g = DMatrix::from_row_slice(3, 3, &[1., 0., 0., 0.1, 0.7, -0.2, 0., 0.3, 0.8]);
        let gst = LinearGst::new(rho.clone(), &(&e * &rho), &["1", "x", "z"]).unwrap();
        let est = gst.estimate(&(&e * &g * &rho));
        assert!((est - g).amax() < 1e-12);
        let noop = gst.estimate(&(&e * &rho));
        assert!((noop - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn names_missing_direction() {
        let rho_t = DMatrix::from_column_slice(3, 4, &[1., 1., 0., 1., -1., 0., 1., 0., 1., 1., 0., -1.]);
        // Every preparation actually lies on the x axis.
        let rho = DMatrix::from_column_slice(3, 4, &[1., 1., 0., 1., -1., 0., 1., 1., 0., 1., -1., 0.]);
        let e = DMatrix::from_row_slice(2, 3, &[0.5, 0.5, 0., 0.5, -0.5, 0.]);
        match LinearGst::new(rho_t, &(&e * &rho), &["1", "x", "z"]) {
            // Data cannot tell x from z: the missing direction is x - z.
            Err(Error::DegeneratePreparations(msg)) => assert!(msg.contains("0.707"), "{msg}"),
            other => panic!("{:?}", other.err()),
        }
    }
}
