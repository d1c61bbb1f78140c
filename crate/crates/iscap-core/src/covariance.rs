//! Location-averaged ER channel covariance: the region average of
//! `h(p) h(p)^H` for an uncertainty region, via deterministic quadrature,
//! plus a Monte-Carlo estimator used as an independent oracle.

use crate::geometry::{ArrayGeometry, Point2D};
use crate::numerics::{CMatrix, CVector, HermitianMatrix};
use crate::scenario::Scenario;
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::{Read, Write};

/// ER location uncertainty. The density is implied by the kind: a point
/// mass, the uniform density on a disc, or a bivariate Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyRegion {
    Point { center: Point2D },
    UniformDisc { center: Point2D, radius: f64 },
    Gaussian { center: Point2D, cov: [[f64; 2]; 2] },
}

impl UncertaintyRegion {
    pub fn center(&self) -> Point2D {
        match self {
            UncertaintyRegion::Point { center }
            | UncertaintyRegion::UniformDisc { center, .. }
            | UncertaintyRegion::Gaussian { center, .. } => *center,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            UncertaintyRegion::Point { .. } => 0.0,
            UncertaintyRegion::UniformDisc { radius, .. } => {
                std::f64::consts::PI * radius * radius
            }
            // Unbounded support; report the 1-sigma ellipse area.
            UncertaintyRegion::Gaussian { cov, .. } => {
                let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
                std::f64::consts::PI * det.max(0.0).sqrt()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            UncertaintyRegion::Point { center } => {
                if !center.is_finite() {
                    return Err(Error::validation("region.center", "non-finite"));
                }
            }
            UncertaintyRegion::UniformDisc { center, radius } => {
                if !center.is_finite() {
                    return Err(Error::validation("region.center", "non-finite"));
                }
                if !(*radius >= 0.0) || !radius.is_finite() {
                    return Err(Error::validation("region.radius_m", "must be >= 0"));
                }
            }
            UncertaintyRegion::Gaussian { center, cov } => {
                if !center.is_finite() {
                    return Err(Error::validation("region.center", "non-finite"));
                }
                let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
                if cov[0][0] < 0.0 || cov[1][1] < 0.0 || det < 0.0 {
                    return Err(Error::validation("region.cov", "covariance must be PSD"));
                }
                if (cov[0][1] - cov[1][0]).abs() > 1e-12 * cov[0][0].abs().max(1.0) {
                    return Err(Error::validation("region.cov", "covariance must be symmetric"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureReport {
    pub node_count: usize,
    pub estimated_error: f64,
}

/// Region-averaged channel covariance for one (BS, ER) pair.
#[derive(Debug, Clone)]
pub struct CovarianceG {
    pub matrix: HermitianMatrix,
    pub bs_index: usize,
    pub er_index: usize,
    pub report: QuadratureReport,
}

/// Default relative quadrature tolerance: two orders below the harvest
/// constraint tolerances the solvers run at.
pub const DEFAULT_G_TOL: f64 = 1e-7;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and its derivative by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn accumulate_outer(acc: &mut CMatrix, h: &CVector, w: f64) {
    let n = h.len();
    for a in 0..n {
        let ha = h[a];
        for b in 0..n {
            acc[(a, b)] += ha * h[b].conj() * w;
        }
    }
}

/// One quadrature pass at a fixed node count; returns the raw (weighted)
/// integral of `h h^H f(p)`.
fn quadrature_pass(
    g: &ArrayGeometry,
    region: &UncertaintyRegion,
    level: usize,
) -> Result<CMatrix> {
    let n = g.element_count;
    let mut acc = CMatrix::zeros(n, n);
    match region {
        UncertaintyRegion::Point { center } => {
            let h = g.channel_vector(center)?;
            accumulate_outer(&mut acc, &h, 1.0);
        }
        UncertaintyRegion::UniformDisc { center, radius } => {
            let (rn, rw) = gauss_legendre(level);
            let (tn, tw) = gauss_legendre(2 * level);
            let density = 1.0 / (std::f64::consts::PI * radius * radius);
            for (ri, rwi) in rn.iter().zip(&rw) {
                let rho = 0.5 * radius * (ri + 1.0);
                let jac_r = 0.5 * radius * rwi;
                for (ti, twi) in tn.iter().zip(&tw) {
                    let theta = std::f64::consts::PI * (ti + 1.0);
                    let jac_t = std::f64::consts::PI * twi;
                    let p = Point2D::new(
                        center.x + rho * theta.cos(),
                        center.y + rho * theta.sin(),
                    );
                    let h = g.channel_vector(&p)?;
                    accumulate_outer(&mut acc, &h, density * rho * jac_r * jac_t);
                }
            }
        }
        UncertaintyRegion::Gaussian { center, cov } => {
            let (xn, xw) = gauss_legendre(2 * level);
            let (yn, yw) = gauss_legendre(2 * level);
            let sx = cov[0][0].sqrt();
            let sy = cov[1][1].sqrt();
            let det = (cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0]).max(1e-300);
            let inv = [
                [cov[1][1] / det, -cov[0][1] / det],
                [-cov[1][0] / det, cov[0][0] / det],
            ];
            let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
            // 5-sigma box per axis.
            let (hx, hy) = (5.0 * sx, 5.0 * sy);
            for (xi, xwi) in xn.iter().zip(&xw) {
                let dx = hx * xi;
                for (yi, ywi) in yn.iter().zip(&yw) {
                    let dy = hy * yi;
                    let p = Point2D::new(center.x + dx, center.y + dy);
                    let q = inv[0][0] * dx * dx + 2.0 * inv[0][1] * dx * dy + inv[1][1] * dy * dy;
                    let f = norm * (-0.5 * q).exp();
                    let h = g.channel_vector(&p)?;
                    accumulate_outer(&mut acc, &h, f * hx * xwi * hy * ywi);
                }
            }
        }
    }
    Ok(acc)
}

fn region_clear_of_elements(g: &ArrayGeometry, region: &UncertaintyRegion) -> Result<()> {
    let positions = g.element_positions();
    let reach = match region {
        UncertaintyRegion::Point { .. } => 0.0,
        UncertaintyRegion::UniformDisc { radius, .. } => *radius,
        UncertaintyRegion::Gaussian { cov, .. } => {
            (5.0 * cov[0][0].sqrt()).hypot(5.0 * cov[1][1].sqrt())
        }
    };
    let center = region.center();
    for (i, q) in positions.iter().enumerate() {
        if q.distance(&center) <= reach {
            return Err(Error::Singularity(format!(
                "uncertainty region reaches array element {i}"
            )));
        }
    }
    Ok(())
}

/// Region-averaged covariance by Gauss-Legendre tensor quadrature, refined
/// by doubling node counts until the entrywise change drops below
/// `tol * max|G|`.
pub fn compute_g(
    g: &ArrayGeometry,
    region: &UncertaintyRegion,
    tol: f64,
) -> Result<HermitianMatrix> {
    compute_g_indexed(g, region, tol, 0, 0).map(|c| c.matrix)
}

pub fn compute_g_indexed(
    g: &ArrayGeometry,
    region: &UncertaintyRegion,
    tol: f64,
    bs_index: usize,
    er_index: usize,
) -> Result<CovarianceG> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("quadrature tol must be > 0".into()));
    }
    region.validate()?;
    region_clear_of_elements(g, region)?;

    if matches!(region, UncertaintyRegion::Point { .. })
        || matches!(region, UncertaintyRegion::UniformDisc { radius, .. } if *radius == 0.0)
    {
        let h = g.channel_vector(&region.center())?;
        return Ok(CovarianceG {
            matrix: HermitianMatrix::outer(&h),
            bs_index,
            er_index,
            report: QuadratureReport {
                node_count: 1,
                estimated_error: 0.0,
            },
        });
    }

    // Node counts must track the oscillation scale kappa * diameter.
    let diameter = match region {
        UncertaintyRegion::UniformDisc { radius, .. } => 2.0 * radius,
        UncertaintyRegion::Gaussian { cov, .. } => 10.0 * cov[0][0].max(cov[1][1]).sqrt(),
        UncertaintyRegion::Point { .. } => unreachable!(),
    };
    let osc = g.wavenumber() * diameter;
    let mut level = ((osc / 4.0).ceil() as usize).clamp(8, 64);

    let mut prev = quadrature_pass(g, region, level)?;
    let mut nodes = pass_nodes(region, level);
    loop {
        level *= 2;
        let next = quadrature_pass(g, region, level)?;
        nodes += pass_nodes(region, level);
        let scale = next.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let delta = (&next - &prev).iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        if delta <= tol * scale.max(f64::MIN_POSITIVE) {
            return Ok(CovarianceG {
                matrix: HermitianMatrix::from_solver(next)?,
                bs_index,
                er_index,
                report: QuadratureReport {
                    node_count: nodes,
                    estimated_error: delta,
                },
            });
        }
        if level >= 512 {
            return Err(Error::Tolerance {
                requested: tol,
                achieved: delta / scale.max(f64::MIN_POSITIVE),
            });
        }
        prev = next;
    }
}

fn pass_nodes(region: &UncertaintyRegion, level: usize) -> usize {
    match region {
        UncertaintyRegion::Point { .. } => 1,
        UncertaintyRegion::UniformDisc { .. } => level * 2 * level,
        UncertaintyRegion::Gaussian { .. } => 4 * level * level,
    }
}

/// Monte-Carlo estimate of the region-averaged covariance together with a
/// per-entry standard error; deterministic for a fixed seed.
pub fn monte_carlo_g(
    g: &ArrayGeometry,
    region: &UncertaintyRegion,
    samples: usize,
    seed: u64,
) -> Result<(HermitianMatrix, DMatrix<f64>)> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    region.validate()?;
    let n = g.element_count;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = CMatrix::zeros(n, n);
    let mut sumsq = DMatrix::<f64>::zeros(n, n);

    // Cholesky of the 2x2 covariance for the Gaussian case.
    let chol = match region {
        UncertaintyRegion::Gaussian { cov, .. } => {
            let l11 = cov[0][0].sqrt();
            let l21 = if l11 > 0.0 { cov[1][0] / l11 } else { 0.0 };
            let l22 = (cov[1][1] - l21 * l21).max(0.0).sqrt();
            Some((l11, l21, l22))
        }
        _ => None,
    };

    for _ in 0..samples {
        let p = match region {
            UncertaintyRegion::Point { center } => *center,
            UncertaintyRegion::UniformDisc { center, radius } => {
                let r = radius * rng.random::<f64>().sqrt();
                let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                Point2D::new(center.x + r * t.cos(), center.y + r * t.sin())
            }
            UncertaintyRegion::Gaussian { center, .. } => {
                let (l11, l21, l22) = chol.unwrap();
                let z1 = standard_normal(&mut rng);
                let z2 = standard_normal(&mut rng);
                Point2D::new(center.x + l11 * z1, center.y + l21 * z1 + l22 * z2)
            }
        };
        let h = g.channel_vector(&p)?;
        for a in 0..n {
            for b in 0..n {
                let v = h[a] * h[b].conj();
                mean[(a, b)] += v;
                sumsq[(a, b)] += v.norm_sqr();
            }
        }
    }

    let nf = samples as f64;
    mean.iter_mut().for_each(|z| *z /= nf);
    let mut se = DMatrix::<f64>::zeros(n, n);
    if samples > 1 {
        for a in 0..n {
            for b in 0..n {
                let var = (sumsq[(a, b)] / nf - mean[(a, b)].norm_sqr()) * nf / (nf - 1.0);
                se[(a, b)] = (var.max(0.0) / nf).sqrt();
            }
        }
    }
    Ok((HermitianMatrix::from_solver(mean)?, se))
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per normal keeps the stream layout simple.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// All covariance matrices of a scenario, indexed `[bs][er]`.
#[derive(Debug, Clone)]
pub struct GSet {
    pub entries: Vec<Vec<CovarianceG>>,
}

impl GSet {
    /// Compute every (BS, ER) covariance; pairs run in parallel.
    pub fn compute(scenario: &Scenario, tol: f64) -> Result<Self> {
        let k = scenario.cell_count();
        let pairs: Vec<(usize, usize)> = (0..k)
            .flat_map(|l| (0..k).map(move |e| (l, e)))
            .collect();
        let computed: Result<Vec<CovarianceG>> = pairs
            .par_iter()
            .map(|&(l, e)| {
                compute_g_indexed(&scenario.bs[l], &scenario.ers[e].region, tol, l, e)
            })
            .collect();
        let computed = computed?;
        let mut entries: Vec<Vec<Option<CovarianceG>>> = vec![vec![None; k]; k];
        for c in computed {
            entries[c.bs_index][c.er_index] = Some(c);
        }
        Ok(Self {
            entries: entries
                .into_iter()
                .map(|row| row.into_iter().map(Option::unwrap).collect())
                .collect(),
        })
    }

    pub fn get(&self, bs: usize, er: usize) -> &HermitianMatrix {
        &self.entries[bs][er].matrix
    }

    /// Binary cache: little-endian, magic + scenario hash, then per entry
    /// the indices, dimension, and row-major complex doubles. Bit-exact
    /// across runs.
    pub fn save(&self, path: &std::path::Path, scenario_hash: u64) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(b"ISCAPG01");
        buf.extend_from_slice(&scenario_hash.to_le_bytes());
        let total: u32 = self.entries.iter().map(|r| r.len() as u32).sum();
        buf.extend_from_slice(&total.to_le_bytes());
        for row in &self.entries {
            for c in row {
                buf.extend_from_slice(&(c.bs_index as u32).to_le_bytes());
                buf.extend_from_slice(&(c.er_index as u32).to_le_bytes());
                let dim = c.matrix.dim() as u32;
                buf.extend_from_slice(&dim.to_le_bytes());
                buf.extend_from_slice(&(c.report.node_count as u64).to_le_bytes());
                buf.extend_from_slice(&c.report.estimated_error.to_le_bytes());
                for a in 0..c.matrix.dim() {
                    for b in 0..c.matrix.dim() {
                        let z = c.matrix.matrix()[(a, b)];
                        buf.extend_from_slice(&z.re.to_le_bytes());
                        buf.extend_from_slice(&z.im.to_le_bytes());
                    }
                }
            }
        }
        let mut f = std::fs::File::create(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        f.write_all(&buf)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(())
    }

    pub fn load(path: &std::path::Path, expected_hash: u64) -> Result<Self> {
        let mut raw = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut raw))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut at = 0usize;
        let take = |at: &mut usize, n: usize| -> Result<&[u8]> {
            if *at + n > raw.len() {
                return Err(Error::Parse("covariance cache truncated".into()));
            }
            let s = &raw[*at..*at + n];
            *at += n;
            Ok(s)
        };
        if take(&mut at, 8)? != b"ISCAPG01" {
            return Err(Error::Parse("covariance cache has wrong magic".into()));
        }
        let hash = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
        if hash != expected_hash {
            return Err(Error::Parse(format!(
                "covariance cache hash {hash:#x} does not match scenario {expected_hash:#x}"
            )));
        }
        let total = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
        let mut items = Vec::with_capacity(total);
        let mut max_bs = 0usize;
        let mut max_er = 0usize;
        for _ in 0..total {
            let bs = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
            let er = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
            let dim = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
            let nodes = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
            let err = f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
            let mut m = CMatrix::zeros(dim, dim);
            for a in 0..dim {
                for b in 0..dim {
                    let re = f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
                    let im = f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap());
                    m[(a, b)] = Complex64::new(re, im);
                }
            }
            max_bs = max_bs.max(bs);
            max_er = max_er.max(er);
            items.push(CovarianceG {
                matrix: HermitianMatrix::from_solver(m)?,
                bs_index: bs,
                er_index: er,
                report: QuadratureReport {
                    node_count: nodes,
                    estimated_error: err,
                },
            });
        }
        let mut entries: Vec<Vec<Option<CovarianceG>>> =
            vec![vec![None; max_er + 1]; max_bs + 1];
        for c in items {
            entries[c.bs_index][c.er_index] = Some(c);
        }
        let entries: Option<Vec<Vec<CovarianceG>>> = entries
            .into_iter()
            .map(|row| row.into_iter().collect())
            .collect();
        entries
            .map(|entries| Self { entries })
            .ok_or_else(|| Error::Parse("covariance cache has missing (bs, er) pairs".into()))
    }
}

/// FNV-1a over the canonical scenario serialization; stable across runs
/// and toolchains.
pub fn scenario_hash(scenario: &Scenario) -> u64 {
    let text = crate::scenario::scenario_to_toml(scenario);
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin_case;
    use approx::assert_relative_eq;

    fn bs1_n8() -> ArrayGeometry {
        let s = builtin_case(3).unwrap();
        let mut g = s.bs[0].clone();
        g.element_count = 8;
        g
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [2usize, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            let total: f64 = w.iter().sum();
            assert_relative_eq!(total, 2.0, max_relative = 1e-13);
            // Exact for x^2 when n >= 2: integral 2/3.
            let m2: f64 = x.iter().zip(&w).map(|(xi, wi)| xi * xi * wi).sum();
            assert_relative_eq!(m2, 2.0 / 3.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn point_region_is_exact_outer_product() {
        let g = bs1_n8();
        let center = Point2D::new(3.75, 37.5);
        let region = UncertaintyRegion::Point { center };
        let cg = compute_g(&g, &region, 1e-7).unwrap();
        let h = g.channel_vector(&center).unwrap();
        let outer = HermitianMatrix::outer(&h);
        let diff = (cg.matrix() - outer.matrix()).norm();
        assert!(diff == 0.0, "point-region G deviates by {diff:e}");
    }

    #[test]
    fn disc_diagonal_entries_real_positive() {
        let g = bs1_n8();
        let region = UncertaintyRegion::UniformDisc {
            center: Point2D::new(3.75, 37.5),
            radius: 0.5,
        };
        let cg = compute_g(&g, &region, 1e-7).unwrap();
        for a in 0..8 {
            let z = cg.matrix()[(a, a)];
            assert!(z.re > 0.0);
            assert!(z.im.abs() <= 1e-16);
        }
    }

    #[test]
    fn disc_matches_monte_carlo_within_three_se() {
        let g = bs1_n8();
        let region = UncertaintyRegion::UniformDisc {
            center: Point2D::new(3.75, 37.5),
            radius: 1.0,
        };
        let cg = compute_g(&g, &region, 1e-7).unwrap();
        let (mc, se) = monte_carlo_g(&g, &region, 1_000_000, 20240131).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let d = (cg.matrix()[(a, b)] - mc.matrix()[(a, b)]).norm();
                assert!(
                    d <= 3.0 * se[(a, b)],
                    "entry ({a},{b}): |diff| = {d:e}, 3 SE = {:e}",
                    3.0 * se[(a, b)]
                );
            }
        }
    }

    #[test]
    fn monte_carlo_point_single_sample() {
        let g = bs1_n8();
        let center = Point2D::new(3.75, 37.5);
        let (mc, se) = monte_carlo_g(&g, &UncertaintyRegion::Point { center }, 1, 7).unwrap();
        let h = g.channel_vector(&center).unwrap();
        let outer = HermitianMatrix::outer(&h);
        assert!((mc.matrix() - outer.matrix()).norm() < 1e-18);
        assert_eq!(se[(0, 0)], 0.0);
    }

    #[test]
    fn monte_carlo_se_scales_inverse_sqrt() {
        let g = bs1_n8();
        let region = UncertaintyRegion::UniformDisc {
            center: Point2D::new(3.75, 37.5),
            radius: 1.0,
        };
        let (_, se1) = monte_carlo_g(&g, &region, 10_000, 3).unwrap();
        let (_, se4) = monte_carlo_g(&g, &region, 40_000, 4).unwrap();
        // Quadrupling samples should halve the SE within 20%.
        let r = se4[(2, 5)] / se1[(2, 5)];
        assert!((r - 0.5).abs() < 0.1, "SE ratio {r}");
    }

    #[test]
    fn monte_carlo_seed_determinism() {
        let g = bs1_n8();
        let region = UncertaintyRegion::UniformDisc {
            center: Point2D::new(3.75, 37.5),
            radius: 0.5,
        };
        let (a, _) = monte_carlo_g(&g, &region, 5000, 99).unwrap();
        let (b, _) = monte_carlo_g(&g, &region, 5000, 99).unwrap();
        for (x, y) in a.matrix().iter().zip(b.matrix().iter()) {
            assert!(x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
        }
    }

    #[test]
    fn g_is_psd_and_trace_consistent() {
        let g = bs1_n8();
        let region = UncertaintyRegion::UniformDisc {
            center: Point2D::new(3.75, 37.5),
            radius: 1.0,
        };
        let cg = compute_g(&g, &region, 1e-7).unwrap();
        let resid = crate::numerics::psd_residual(&cg);
        assert!(resid <= 1e-9 * cg.trace_re(), "psd residual {resid:e}");
        // Trace vs Monte-Carlo within 3 SE of the summed diagonal.
        let (mc, se) = monte_carlo_g(&g, &region, 200_000, 5).unwrap();
        let tr_mc: f64 = (0..8).map(|a| mc.matrix()[(a, a)].re).sum();
        let se_tr: f64 = (0..8).map(|a| se[(a, a)].powi(2)).sum::<f64>().sqrt();
        assert!((cg.trace_re() - tr_mc).abs() <= 3.0 * se_tr);
    }

    #[test]
    fn shrinking_disc_approaches_point() {
        let g = bs1_n8();
        let center = Point2D::new(3.75, 37.5);
        let h = g.channel_vector(&center).unwrap();
        let point = HermitianMatrix::outer(&h);
        let mut prev = f64::INFINITY;
        for radius in [1.0, 0.5, 0.25, 0.125] {
            let cg = compute_g(
                &g,
                &UncertaintyRegion::UniformDisc { center, radius },
                1e-7,
            )
            .unwrap();
            let dist = (cg.matrix() - point.matrix()).norm();
            assert!(dist <= prev + 1e-15, "radius {radius}: {dist} > {prev}");
            prev = dist;
        }
    }

    #[test]
    fn refinement_self_consistency() {
        let g = bs1_n8();
        let region = UncertaintyRegion::UniformDisc {
            center: Point2D::new(3.75, 37.5),
            radius: 0.7,
        };
        let coarse = compute_g(&g, &region, 1e-6).unwrap();
        let fine = compute_g(&g, &region, 1e-8).unwrap();
        let rel = (coarse.matrix() - fine.matrix()).norm() / fine.matrix().norm();
        assert!(rel < 1e-5, "relative Frobenius {rel:e}");
    }

    #[test]
    fn gaussian_region_matches_monte_carlo() {
        let g = bs1_n8();
        let region = UncertaintyRegion::Gaussian {
            center: Point2D::new(3.75, 37.5),
            cov: [[0.16, 0.02], [0.02, 0.09]],
        };
        let cg = compute_g(&g, &region, 1e-7).unwrap();
        let (mc, se) = monte_carlo_g(&g, &region, 400_000, 11).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let d = (cg.matrix()[(a, b)] - mc.matrix()[(a, b)]).norm();
                assert!(d <= 3.5 * se[(a, b)] + 1e-15, "entry ({a},{b})");
            }
        }
    }

    #[test]
    fn region_overlapping_array_errors() {
        let g = bs1_n8();
        let region = UncertaintyRegion::UniformDisc {
            center: Point2D::new(0.1, 0.0),
            radius: 2.0,
        };
        assert!(matches!(
            compute_g(&g, &region, 1e-7),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn cache_round_trip_bit_exact() {
        let scenario = builtin_case(3).unwrap().with_elements(4);
        let gset = GSet::compute(&scenario, 1e-7).unwrap();
        let hash = scenario_hash(&scenario);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        gset.save(&path, hash).unwrap();
        let loaded = GSet::load(&path, hash).unwrap();
        for k in 0..3 {
            for e in 0..3 {
                let a = gset.get(k, e).matrix();
                let b = loaded.get(k, e).matrix();
                for (x, y) in a.iter().zip(b.iter()) {
                    assert_eq!(x.re.to_bits(), y.re.to_bits());
                    assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
            }
        }
        assert!(GSet::load(&path, hash ^ 1).is_err());
    }
}
