//! Performance functionals of a candidate beamforming solution: per-type
//! SINR, region-averaged harvested power, per-point echo power, and
//! detection probabilities.

use crate::covariance::GSet;
use crate::geometry::Point2D;
use crate::numerics::{
    psd_residual, q_function, q_inverse, trace_product, CMatrix, CVector, HermitianMatrix,
};
use crate::scenario::Scenario;
use crate::sdp::SolveReport;
use crate::{Error, Result};
use num_complex::Complex64;

pub use crate::scenario::CuType;

/// Which pipeline produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Sdr,
    Mrt,
    NonCoordinated,
    WorstCaseRobust,
    Manual,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Sdr => "sdr",
            Provenance::Mrt => "mrt",
            Provenance::NonCoordinated => "non_coordinated",
            Provenance::WorstCaseRobust => "worst_case_robust",
            Provenance::Manual => "manual",
        }
    }
}

/// Per-BS information beam vectors and dual-purpose covariances.
#[derive(Debug, Clone)]
pub struct BeamformingSolution {
    pub info_beams: Vec<CVector>,
    pub dual_covariances: Vec<HermitianMatrix>,
    pub provenance: Provenance,
    pub report: Option<SolveReport>,
}

impl BeamformingSolution {
    pub fn new(
        info_beams: Vec<CVector>,
        dual_covariances: Vec<HermitianMatrix>,
        provenance: Provenance,
    ) -> Self {
        Self {
            info_beams,
            dual_covariances,
            provenance,
            report: None,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.info_beams.len()
    }

    /// Transmit power of BS `k`: `|w_k|^2 + Tr(R_k)`.
    pub fn bs_power(&self, k: usize) -> f64 {
        self.info_beams[k].norm_squared() + self.dual_covariances[k].trace_re()
    }

    /// Total transmit covariance of BS `k`: `w_k w_k^H + R_k`.
    pub fn total_covariance(&self, k: usize) -> HermitianMatrix {
        &HermitianMatrix::outer(&self.info_beams[k]) + &self.dual_covariances[k]
    }

    /// Check the per-BS power budget (1e-6 relative slack) and PSD of each
    /// dual covariance (1e-7 absolute on the minimum eigenvalue).
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        if self.info_beams.len() != scenario.cell_count()
            || self.dual_covariances.len() != scenario.cell_count()
        {
            return Err(Error::Contract(
                "solution size does not match the scenario".into(),
            ));
        }
        let p_max = scenario.params.power_budget;
        for k in 0..self.cell_count() {
            let p = self.bs_power(k);
            if p > p_max * (1.0 + 1e-6) {
                return Err(Error::Contract(format!(
                    "BS {k} power {p:.6e} exceeds budget {p_max:.6e}"
                )));
            }
            let resid = psd_residual(&self.dual_covariances[k]);
            if resid > 1e-7 {
                return Err(Error::Contract(format!(
                    "dual covariance of BS {k} fails PSD by {resid:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// SINR of CU `cu_index` under the given receiver class.
///
/// The denominator keeps, per class: Type I all dual-purpose terms plus
/// inter-cell information beams; Type II drops the intra-cell dual term;
/// Type III drops every dual term.
pub fn sinr(
    sol: &BeamformingSolution,
    scenario: &Scenario,
    cu_index: usize,
    cu_type: CuType,
) -> Result<f64> {
    let k = scenario.cell_count();
    if cu_index >= k {
        return Err(Error::InvalidArgument(format!(
            "cu_index {cu_index} out of range for K = {k}"
        )));
    }
    let cu_pos = scenario.cus[cu_index].position;
    let mut desired = 0.0;
    let mut denom = scenario.params.noise_comm;
    for l in 0..k {
        let h = scenario.bs[l].channel_vector(&cu_pos)?;
        let info = (h.adjoint() * &sol.info_beams[l])[(0, 0)].norm_sqr();
        let dual = sol.dual_covariances[l].quad_form(&h);
        if l == cu_index {
            desired = info;
            match cu_type {
                CuType::TypeI => denom += dual,
                CuType::TypeII | CuType::TypeIII => {}
            }
        } else {
            denom += info;
            match cu_type {
                CuType::TypeI | CuType::TypeII => denom += dual,
                CuType::TypeIII => {}
            }
        }
    }
    Ok(desired / denom)
}

/// Region-averaged harvested power at ER `er_index`:
/// `eta * sum_l Tr(G_{l,e} (w_l w_l^H + R_l))`.
pub fn avg_harvested_power(
    sol: &BeamformingSolution,
    scenario: &Scenario,
    g_set: &GSet,
    er_index: usize,
) -> Result<f64> {
    let k = scenario.cell_count();
    if er_index >= k {
        return Err(Error::InvalidArgument(format!(
            "er_index {er_index} out of range"
        )));
    }
    if g_set.entries.len() < k || g_set.entries[0].len() <= er_index {
        return Err(Error::MissingData(
            "covariance set does not cover this (bs, er) pair".into(),
        ));
    }
    let mut total = 0.0;
    for l in 0..k {
        let g = g_set.get(l, er_index);
        let cov = sol.total_covariance(l);
        total += g.inner(&cov);
    }
    Ok(scenario.params.eh_efficiency * total)
}

/// Round-trip matrix of one BS toward a point: `conj(h) h^T`, the
/// monostatic echo form. Hermitian PSD with principal vector `conj(h)`.
pub fn roundtrip_matrix(h: &CVector) -> HermitianMatrix {
    let n = h.len();
    let mut m = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            m[(a, b)] = h[a].conj() * h[b];
        }
    }
    HermitianMatrix::from_solver(m).expect("conj(h) h^T is Hermitian")
}

/// Per-element round-trip path-loss sum `sum_n lambda^2 / (16 pi^2 r_n^2)`.
pub fn echo_pathloss_sum(scenario: &Scenario, bs: usize, p: &Point2D) -> f64 {
    let lambda = scenario.params.wavelength();
    let c = lambda * lambda / (16.0 * std::f64::consts::PI * std::f64::consts::PI);
    scenario.bs[bs]
        .element_positions()
        .iter()
        .map(|q| c / q.distance(p).powi(2))
        .sum()
}

/// Aggregated direct-link echo power at sensing point `m`:
/// `|zeta|^2 * sum_k Tr(conj(h) h^T (w w^H + R)) * sum_n lambda^2/(16 pi^2 r_n^2)`.
///
/// The transposed-channel form is kept literally; the imaginary residue is
/// checked against 1e-12 relative before being discarded.
pub fn echo_power(sol: &BeamformingSolution, scenario: &Scenario, m: usize) -> Result<f64> {
    if m >= scenario.sample_count() {
        return Err(Error::InvalidArgument(format!(
            "sensing point {m} out of range"
        )));
    }
    let p = scenario.sensing.sample_points[m];
    let zeta2 = scenario.params.rcs_magnitude.powi(2);
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..scenario.cell_count() {
        let h = scenario.bs[k].channel_vector(&p)?;
        let rt = roundtrip_matrix(&h);
        let cov = sol.total_covariance(k);
        let tr = trace_product(rt.matrix(), cov.matrix());
        total += tr * echo_pathloss_sum(scenario, k, &p);
    }
    total *= zeta2;
    if total.im.abs() > 1e-12 * total.re.abs().max(f64::MIN_POSITIVE) && total.re.abs() > 1e-300 {
        return Err(Error::NumericalFailure(format!(
            "echo power has imaginary residue {:.3e} vs real {:.3e}",
            total.im, total.re
        )));
    }
    Ok(total.re.max(0.0))
}

/// Energy-detector detection probability
/// `Q(Q^{-1}(P_FA) - sqrt(2 phi / sigma_s^2))`.
pub fn detection_probability(phi: f64, noise_sense: f64, false_alarm: f64) -> Result<f64> {
    if !(phi >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "echo power must be >= 0, got {phi}"
        )));
    }
    if !(noise_sense > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sensing noise must be > 0, got {noise_sense}"
        )));
    }
    let thr = q_inverse(false_alarm)?;
    q_function(thr - (2.0 * phi / noise_sense).sqrt())
}

/// Worst-case detection probability over the sensing sample points and the
/// index attaining it (ties to the lowest index).
pub fn worst_case_detection(
    sol: &BeamformingSolution,
    scenario: &Scenario,
) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for m in 0..scenario.sample_count() {
        let phi = echo_power(sol, scenario, m)?;
        let pd = detection_probability(phi, scenario.params.noise_sense, scenario.params.false_alarm)?;
        best = match best {
            None => Some((pd, m)),
            Some((b, _)) if pd < b => Some((pd, m)),
            other => other,
        };
    }
    best.ok_or_else(|| Error::InvalidArgument("no sensing points".into()))
}

/// Minimum echo power over the sample points with its argmin; agrees with
/// [`worst_case_detection`] on the argmin since the detector is strictly
/// increasing in the echo power.
pub fn worst_case_echo(sol: &BeamformingSolution, scenario: &Scenario) -> Result<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for m in 0..scenario.sample_count() {
        let phi = echo_power(sol, scenario, m)?;
        best = match best {
            None => Some((phi, m)),
            Some((b, _)) if phi < b => Some((phi, m)),
            other => other,
        };
    }
    best.ok_or_else(|| Error::InvalidArgument("no sensing points".into()))
}
