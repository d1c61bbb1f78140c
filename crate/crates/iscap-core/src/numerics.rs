//! Shared numerical kernels: complex Hermitian helpers, Gaussian tail
//! functions, PSD diagnostics, unit conversions.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Absolute tolerance on conjugate symmetry of matrix entries.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Hermitian matrix with validated conjugate symmetry.
///
/// Matrices coming back from iterative solvers carry rounding noise, so
/// [`HermitianMatrix::from_solver`] symmetrizes `(M + M^H)/2` on ingestion;
/// [`HermitianMatrix::new`] rejects anything asymmetric beyond
/// [`HERMITIAN_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::Contract(format!(
                "Hermitian matrix must be square with dimension >= 1, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        for a in 0..m.nrows() {
            for b in a..m.ncols() {
                let d = (m[(a, b)] - m[(b, a)].conj()).norm();
                if d > HERMITIAN_TOL * scale.max(1.0) {
                    return Err(Error::Contract(format!(
                        "entry ({a},{b}) deviates from conjugate symmetry by {d:.3e}"
                    )));
                }
            }
        }
        Ok(Self(symmetrize(&m)))
    }

    /// Symmetrize `(M + M^H)/2` and wrap; for matrices produced by solvers.
    pub fn from_solver(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(Error::Contract(format!(
                "Hermitian matrix must be square with dimension >= 1, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(symmetrize(&m)))
    }

    /// Rank-one outer product `v v^H`.
    pub fn outer(v: &CVector) -> Self {
        let m = v * v.adjoint();
        Self(symmetrize(&m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace_re(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    /// Real trace inner product `Re Tr(A B)`; exact inner product for
    /// Hermitian arguments.
    pub fn inner(&self, other: &Self) -> f64 {
        trace_product_re(&self.0, &other.0)
    }

    /// Quadratic form `v^H M v`, real part.
    pub fn quad_form(&self, v: &CVector) -> f64 {
        (v.adjoint() * &self.0 * v)[(0, 0)].re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    /// Numerical rank: eigenvalues above `cutoff_rel * lambda_max` count.
    pub fn numerical_rank(&self, cutoff_rel: f64) -> usize {
        let ev = self.eigenvalues();
        let max = ev.iter().cloned().fold(0.0_f64, f64::max);
        if max <= 0.0 {
            return 0;
        }
        ev.iter().filter(|&&l| l > cutoff_rel * max).count()
    }
}

impl std::ops::Add<&HermitianMatrix> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `Re Tr(A B)` without forming the product matrix.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let p = a[(i, k)] * b[(k, i)];
            acc += p.re;
        }
    }
    acc
}

/// `Tr(A B)` including the imaginary residue, for convention checks.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Gaussian upper-tail probability `Q(x) = 1/sqrt(2 pi) * int_x^inf exp(-t^2/2) dt`.
///
/// Evaluated through the complementary error function; clamped to the
/// smallest positive double in the deep tail so the result stays in (0, 1).
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "q_function requires finite input, got {x}"
        )));
    }
    let q = 0.5 * statrs::function::erf::erfc(x / SQRT_2);
    if q <= 0.0 {
        return Ok(f64::MIN_POSITIVE);
    }
    if q >= 1.0 {
        return Ok(1.0 - f64::EPSILON / 2.0);
    }
    Ok(q)
}

/// Inverse of [`q_function`] on (0, 1).
///
/// Rational-approximation seed (inverse normal CDF) refined by Newton steps
/// on `Q` until the residual is below 1e-12 relative.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "q_inverse requires p in (0,1), got {p}"
        )));
    }
    let mut x = -inverse_normal_cdf(p);
    // Q'(x) = -phi(x); Newton on f(x) = Q(x) - p.
    for _ in 0..8 {
        let q = q_function(x)?;
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf <= f64::MIN_POSITIVE {
            break;
        }
        let step = (q - p) / pdf;
        x += step;
        if step.abs() <= 1e-12 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Acklam-style rational approximation of the standard normal quantile,
/// used only as the Newton seed.
fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Largest eigenvalue and a deterministically-phased unit eigenvector.
///
/// Determinism convention: within the top eigenspace (eigenvalues within
/// 1e-9 relative of the maximum) the vector is the normalized projection of
/// the first standard basis vector with a nonzero projection, then the
/// global phase is fixed so the largest-magnitude entry is real nonnegative
/// (ties broken to the lowest index).
pub fn principal_eigenpair(m: &HermitianMatrix) -> Result<(f64, CVector)> {
    let n = m.dim();
    let eig = m.0.clone().symmetric_eigen();
    let mut max_val = f64::NEG_INFINITY;
    for &l in eig.eigenvalues.iter() {
        if l > max_val {
            max_val = l;
        }
    }
    let scale = eig
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let group_tol = 1e-9 * scale;

    // Projector onto the top eigenspace applied to e_1, e_2, ... until one
    // projection survives; this pins the degenerate case down.
    let cols: Vec<usize> = (0..n)
        .filter(|&i| (eig.eigenvalues[i] - max_val).abs() <= group_tol)
        .collect();
    let mut v = CVector::zeros(n);
    'basis: for b in 0..n {
        let mut proj = CVector::zeros(n);
        for &c in &cols {
            let col = eig.eigenvectors.column(c);
            // <e_b, u_c> u_c
            let coef = col[b].conj();
            for r in 0..n {
                proj[r] += coef * col[r];
            }
        }
        let norm = proj.norm();
        if norm > 1e-8 {
            v = proj.unscale(norm);
            break 'basis;
        }
        if b == n - 1 {
            break 'basis;
        }
    }
    if v.norm() < 0.5 {
        return Err(Error::NumericalFailure(
            "principal eigenspace projection degenerate".into(),
        ));
    }
    fix_phase(&mut v);
    Ok((max_val, v))
}

/// Rotate a vector's global phase so its largest-magnitude entry is real
/// nonnegative; among equal magnitudes the lowest index wins.
pub fn fix_phase(v: &mut CVector) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let phase = v[best] / best_mag;
    let rot = phase.conj();
    for z in v.iter_mut() {
        *z *= rot;
    }
    // Kill the rounding residue on the anchor entry.
    v[best] = Complex64::new(v[best].norm(), 0.0);
}

/// `max(0, -lambda_min(M))`: zero iff `M` is PSD within eigensolver accuracy.
pub fn psd_residual(m: &HermitianMatrix) -> f64 {
    let ev = m.0.clone().symmetric_eigenvalues();
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    (-min).max(0.0)
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * watt.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
