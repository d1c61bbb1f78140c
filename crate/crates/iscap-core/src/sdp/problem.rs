//! Problem containers: the Hermitian-block conic form the beamforming
//! layer builds, and the real symmetric standard form the solver consumes.

use crate::numerics::{CMatrix, HermitianMatrix};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
}

/// One linear constraint over Hermitian blocks and the scalar objective
/// variable: `sum_j <coeffs[j], X_j> + theta_coeff * theta  (>= | <=)  rhs`.
#[derive(Debug, Clone)]
pub struct HermitianConstraint {
    pub label: String,
    pub coeffs: Vec<Option<HermitianMatrix>>,
    pub theta_coeff: f64,
    pub rhs: f64,
    pub sense: Sense,
}

/// Conic problem: maximize the free scalar over Hermitian PSD blocks under
/// linear constraints. Coefficient maps are Hermitian, so every constraint
/// value is real.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub block_dims: Vec<usize>,
    pub block_labels: Vec<String>,
    pub constraints: Vec<HermitianConstraint>,
}

impl ConicProblem {
    pub fn validate(&self) -> Result<()> {
        if self.block_dims.is_empty() {
            return Err(Error::Contract("conic problem needs at least one block".into()));
        }
        if self.block_labels.len() != self.block_dims.len() {
            return Err(Error::Contract("block labels/dims mismatch".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != self.block_dims.len() {
                return Err(Error::Contract(format!(
                    "constraint {i} has {} coefficient slots for {} blocks",
                    c.coeffs.len(),
                    self.block_dims.len()
                )));
            }
            for (j, m) in c.coeffs.iter().enumerate() {
                if let Some(m) = m {
                    if m.dim() != self.block_dims[j] {
                        return Err(Error::Contract(format!(
                            "constraint {i} block {j}: dim {} vs {}",
                            m.dim(),
                            self.block_dims[j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluate one constraint's left-hand side on candidate blocks.
    pub fn constraint_lhs(&self, i: usize, blocks: &[HermitianMatrix], theta: f64) -> f64 {
        let c = &self.constraints[i];
        let mut v = c.theta_coeff * theta;
        for (j, m) in c.coeffs.iter().enumerate() {
            if let Some(m) = m {
                v += m.inner(&blocks[j]);
            }
        }
        v
    }

    /// Signed slack of constraint `i`: nonnegative iff satisfied.
    pub fn constraint_slack(&self, i: usize, blocks: &[HermitianMatrix], theta: f64) -> f64 {
        let lhs = self.constraint_lhs(i, blocks, theta);
        match self.constraints[i].sense {
            Sense::Ge => lhs - self.constraints[i].rhs,
            Sense::Le => self.constraints[i].rhs - lhs,
        }
    }

    /// Lower onto the real standard form: Hermitian blocks become real
    /// symmetric PSD blocks through the standard embedding
    /// `T(M) = [[Re M, -Im M], [Im M, Re M]]` (halved so trace inner
    /// products are preserved), each inequality gains a slack variable,
    /// and the objective scalar becomes the single free variable. Rows and
    /// the free column are equilibrated; `LoweringMap` undoes the scaling.
    pub fn lower(&self) -> Result<(StandardForm, LoweringMap)> {
        self.validate()?;
        let nb = self.block_dims.len();
        let m = self.constraints.len();

        // Frobenius norm of each row's combined coefficient map.
        let row_coeff_norm = |c: &HermitianConstraint| -> f64 {
            c.coeffs
                .iter()
                .flatten()
                .map(|h| h.matrix().norm().powi(2))
                .sum::<f64>()
                .sqrt()
        };

        // Column scale for theta: the typical coefficient magnitude of the
        // rows it appears in.
        let mut theta_rows: Vec<f64> = self
            .constraints
            .iter()
            .filter(|c| c.theta_coeff != 0.0)
            .map(|c| row_coeff_norm(c) / c.theta_coeff.abs())
            .filter(|v| *v > 0.0)
            .collect();
        theta_rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let theta_scale = if theta_rows.is_empty() {
            1.0
        } else {
            theta_rows[theta_rows.len() / 2].max(f64::MIN_POSITIVE)
        };

        let mut form = StandardForm {
            psd_dims: self.block_dims.iter().map(|d| 2 * d).collect(),
            nonneg_dim: m,
            free_dim: 1,
            obj_psd: self
                .block_dims
                .iter()
                .map(|d| DMatrix::zeros(2 * d, 2 * d))
                .collect(),
            obj_nonneg: DVector::zeros(m),
            obj_free: DVector::from_vec(vec![-1.0]),
            constraints: Vec::with_capacity(m),
        };

        let mut row_scales = Vec::with_capacity(m);
        for (i, c) in self.constraints.iter().enumerate() {
            let norm = (row_coeff_norm(c).powi(2) + (c.theta_coeff * theta_scale).powi(2)).sqrt();
            let r = if norm > 0.0 { norm } else { 1.0 };
            row_scales.push(r);
            let slack_sign = match c.sense {
                Sense::Ge => -1.0,
                Sense::Le => 1.0,
            };
            let psd: Vec<Option<DMatrix<f64>>> = c
                .coeffs
                .iter()
                .map(|h| {
                    h.as_ref()
                        .map(|h| embed_hermitian(h.matrix()).scale(0.5 / r))
                })
                .collect();
            form.constraints.push(Constraint {
                psd,
                nonneg: vec![(i, slack_sign)],
                free: vec![(0, c.theta_coeff * theta_scale / r)],
                rhs: c.rhs / r,
            });
        }

        Ok((
            form,
            LoweringMap {
                theta_scale,
                row_scales,
                block_dims: self.block_dims.clone(),
            },
        ))
    }
}

/// Bookkeeping to map a lowered solution back to Hermitian blocks and the
/// original units.
#[derive(Debug, Clone)]
pub struct LoweringMap {
    pub theta_scale: f64,
    pub row_scales: Vec<f64>,
    pub block_dims: Vec<usize>,
}

impl LoweringMap {
    pub fn theta(&self, free: &DVector<f64>) -> f64 {
        free[0] * self.theta_scale
    }

    pub fn blocks(&self, psd: &[DMatrix<f64>]) -> Result<Vec<HermitianMatrix>> {
        psd.iter()
            .map(|y| HermitianMatrix::from_solver(extract_hermitian(y)))
            .collect()
    }
}

/// Solution of a conic problem in Hermitian form.
#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub blocks: Vec<HermitianMatrix>,
    pub theta: f64,
}

/// Real symmetric embedding `T(M) = [[Re M, -Im M], [Im M, Re M]]`.
/// For Hermitian `A`, `B`: `Tr(T(A) T(B)) = 2 Tr(A B)`.
pub fn embed_hermitian(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..n {
        for b in 0..n {
            let z = m[(a, b)];
            out[(a, b)] = z.re;
            out[(a, b + n)] = -z.im;
            out[(a + n, b)] = z.im;
            out[(a + n, b + n)] = z.re;
        }
    }
    out
}

/// Inverse of [`embed_hermitian`] extended to arbitrary symmetric input:
/// the orthogonal projection onto the embedded subspace, which preserves
/// PSD-ness and all embedded trace inner products.
pub fn extract_hermitian(y: &DMatrix<f64>) -> CMatrix {
    let n2 = y.nrows();
    debug_assert_eq!(n2 % 2, 0);
    let n = n2 / 2;
    let mut out = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let re = 0.5 * (y[(a, b)] + y[(a + n, b + n)]);
            let im = 0.5 * (y[(a + n, b)] - y[(a, b + n)]);
            out[(a, b)] = Complex64::new(re, im);
        }
    }
    out
}

/// One equality row of the standard form:
/// `sum_j <psd[j], Y_j> + sum nonneg + sum free = rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub psd: Vec<Option<DMatrix<f64>>>,
    pub nonneg: Vec<(usize, f64)>,
    pub free: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// Real standard form consumed by the interior-point solver:
/// minimize `sum_j <C_j, Y_j> + c_n' x + c_f' u` over PSD blocks `Y_j`,
/// `x >= 0`, `u` free, subject to equality rows.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub psd_dims: Vec<usize>,
    pub nonneg_dim: usize,
    pub free_dim: usize,
    pub obj_psd: Vec<DMatrix<f64>>,
    pub obj_nonneg: DVector<f64>,
    pub obj_free: DVector<f64>,
    pub constraints: Vec<Constraint>,
}

impl StandardForm {
    pub fn validate(&self) -> Result<()> {
        if self.obj_psd.len() != self.psd_dims.len() {
            return Err(Error::Contract("objective/psd block mismatch".into()));
        }
        for (j, d) in self.psd_dims.iter().enumerate() {
            if self.obj_psd[j].nrows() != *d || self.obj_psd[j].ncols() != *d {
                return Err(Error::Contract(format!("objective block {j} has wrong shape")));
            }
        }
        if self.obj_nonneg.len() != self.nonneg_dim || self.obj_free.len() != self.free_dim {
            return Err(Error::Contract("objective vector length mismatch".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.psd.len() != self.psd_dims.len() {
                return Err(Error::Contract(format!("constraint {i} psd slots mismatch")));
            }
            for (j, a) in c.psd.iter().enumerate() {
                if let Some(a) = a {
                    if a.nrows() != self.psd_dims[j] || a.ncols() != self.psd_dims[j] {
                        return Err(Error::Contract(format!(
                            "constraint {i} block {j} has wrong shape"
                        )));
                    }
                }
            }
            for &(idx, _) in &c.nonneg {
                if idx >= self.nonneg_dim {
                    return Err(Error::Contract(format!(
                        "constraint {i} touches nonneg index {idx} >= {}",
                        self.nonneg_dim
                    )));
                }
            }
            for &(idx, _) in &c.free {
                if idx >= self.free_dim {
                    return Err(Error::Contract(format!(
                        "constraint {i} touches free index {idx} >= {}",
                        self.free_dim
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
        let mut m = CMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                m[(a, b)] = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
        }
        HermitianMatrix::from_solver(m).unwrap()
    }

    #[test]
    fn embedding_preserves_trace_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [1usize, 2, 3, 5, 8] {
            let a = random_hermitian(n, &mut rng);
            let b = random_hermitian(n, &mut rng);
            let ta = embed_hermitian(a.matrix());
            let tb = embed_hermitian(b.matrix());
            let real_inner = (ta.transpose() * &tb).trace();
            assert_relative_eq!(real_inner, 2.0 * a.inner(&b), max_relative = 1e-12);
            // The halved coefficient map therefore reproduces <A, B>.
            assert_relative_eq!(0.5 * real_inner, a.inner(&b), max_relative = 1e-12);
        }
    }

    #[test]
    fn embedding_round_trip_and_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_hermitian(4, &mut rng);
        let back = extract_hermitian(&embed_hermitian(a.matrix()));
        assert!((a.matrix() - &back).norm() < 1e-14);

        // Eigenvalues of the embedding are the eigenvalues doubled in
        // multiplicity, so PSD maps to PSD.
        let shift = crate::numerics::psd_residual(&a) + 0.1;
        let psd = HermitianMatrix::from_solver(
            a.matrix() + CMatrix::identity(4, 4).scale(shift),
        )
        .unwrap();
        let emb = embed_hermitian(psd.matrix());
        let ev = emb.symmetric_eigenvalues();
        assert!(ev.iter().all(|l| *l >= -1e-12));
    }

    #[test]
    fn extraction_projects_general_symmetric_psd() {
        // A symmetric PSD matrix off the embedded subspace extracts to a
        // Hermitian PSD matrix with the same embedded inner products.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        let mut g = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for a in 0..2 * n {
            for b in 0..2 * n {
                g[(a, b)] = rng.random::<f64>() - 0.5;
            }
        }
        let y = &g * g.transpose();
        let x = extract_hermitian(&y);
        let xh = HermitianMatrix::from_solver(x).unwrap();
        assert!(crate::numerics::psd_residual(&xh) < 1e-12);
        let a = random_hermitian(n, &mut rng);
        let ta = embed_hermitian(a.matrix());
        let direct = 0.5 * (ta.transpose() * &y).trace();
        assert_relative_eq!(direct, a.inner(&xh), max_relative = 1e-10);
    }
}
