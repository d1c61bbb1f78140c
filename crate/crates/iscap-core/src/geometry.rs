//! ULA geometry, spherical-wavefront near-field channels, and field-region
//! classification.

use crate::numerics::CVector;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Propagation speed used to derive wavelengths from carrier frequencies.
/// 3.0e8 m/s reproduces the usual link-budget convention (2.4 GHz ->
/// 0.125 m exactly).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Field-region classification relative to one array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRegion {
    Reactive,
    RadiativeNear,
    Far,
}

/// One BS's uniform linear array.
///
/// `boresight_angle` is the direction of the outward array normal, measured
/// counterclockwise from the +x axis; the elements lie along the
/// perpendicular, centered on `reference_center` (the phase center).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub reference_center: Point2D,
    pub boresight_angle: f64,
    pub element_count: usize,
    pub spacing: f64,
    pub wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(
        reference_center: Point2D,
        boresight_angle: f64,
        element_count: usize,
        spacing: f64,
        wavelength: f64,
    ) -> Result<Self> {
        if !reference_center.is_finite() || !boresight_angle.is_finite() {
            return Err(Error::validation("bs", "non-finite geometry"));
        }
        if element_count < 1 {
            return Err(Error::validation("bs.elements", "element count must be >= 1"));
        }
        if !(spacing > 0.0) {
            return Err(Error::validation("bs.spacing_m", "spacing must be > 0"));
        }
        if !(wavelength > 0.0) {
            return Err(Error::validation("bs.wavelength", "wavelength must be > 0"));
        }
        Ok(Self {
            reference_center,
            boresight_angle,
            element_count,
            spacing,
            wavelength,
        })
    }

    /// Effective aperture `D = (N-1) d`.
    pub fn aperture(&self) -> f64 {
        (self.element_count as f64 - 1.0) * self.spacing
    }

    /// Wavenumber `2 pi / lambda`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    /// Element coordinates, uniformly spaced along the perpendicular to the
    /// boresight and centered on the phase center. Ordered along
    /// `(sin b, -cos b)` so a boresight of 90 degrees lists elements in
    /// ascending x.
    pub fn element_positions(&self) -> Vec<Point2D> {
        let tangent = (self.boresight_angle.sin(), -self.boresight_angle.cos());
        let n = self.element_count;
        let half = (n as f64 - 1.0) / 2.0;
        (0..n)
            .map(|i| {
                let offset = (i as f64 - half) * self.spacing;
                Point2D::new(
                    self.reference_center.x + offset * tangent.0,
                    self.reference_center.y + offset * tangent.1,
                )
            })
            .collect()
    }

    /// Near-field channel vector toward `p`: entry `n` is
    /// `exp(-j kappa r_n) / (2 kappa r_n)` with `r_n` the element distance.
    pub fn channel_vector(&self, p: &Point2D) -> Result<CVector> {
        let kappa = self.wavenumber();
        let positions = self.element_positions();
        let mut v = CVector::zeros(self.element_count);
        for (n, q) in positions.iter().enumerate() {
            let r = q.distance(p);
            if r == 0.0 {
                return Err(Error::Singularity(format!(
                    "point ({}, {}) coincides with array element {n}",
                    p.x, p.y
                )));
            }
            let amp = 1.0 / (2.0 * kappa * r);
            v[n] = Complex64::from_polar(amp, -kappa * r);
        }
        Ok(v)
    }

    /// Boundary between the radiative near field and the far field,
    /// `2 D^2 / lambda`.
    pub fn rayleigh_distance(&self) -> f64 {
        let d = self.aperture();
        2.0 * d * d / self.wavelength
    }

    /// Lower edge of the radiative near field, `cbrt(D^4 / (8 lambda))`.
    pub fn reactive_bound(&self) -> f64 {
        let d = self.aperture();
        (d.powi(4) / (8.0 * self.wavelength)).cbrt()
    }

    /// Classify `p` by its distance to the phase center.
    pub fn field_region(&self, p: &Point2D) -> FieldRegion {
        let r = self.reference_center.distance(p);
        if r < self.reactive_bound() {
            FieldRegion::Reactive
        } else if r < self.rayleigh_distance() {
            FieldRegion::RadiativeNear
        } else {
            FieldRegion::Far
        }
    }
}

pub fn wavelength_from_frequency(hz: f64) -> f64 {
    SPEED_OF_LIGHT / hz
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table_geometry(n: usize) -> ArrayGeometry {
        ArrayGeometry::new(Point2D::new(0.0, 0.0), 90f64.to_radians(), n, 0.0625, 0.125).unwrap()
    }

    #[test]
    fn single_element_at_center() {
        let g = ArrayGeometry::new(Point2D::new(2.0, -1.0), 0.3, 1, 0.0625, 0.125).unwrap();
        let pos = g.element_positions();
        assert_eq!(pos.len(), 1);
        assert_relative_eq!(pos[0].x, 2.0);
        assert_relative_eq!(pos[0].y, -1.0);
    }

    #[test]
    fn two_elements_symmetric_about_center() {
        let g =
            ArrayGeometry::new(Point2D::new(0.0, 0.0), 90f64.to_radians(), 2, 1.0, 0.125).unwrap();
        let pos = g.element_positions();
        assert_relative_eq!(pos[0].x, -0.5, epsilon = 1e-12);
        assert_relative_eq!(pos[0].y, 0.0, epsilon = 1e-12);
        assert_relative_eq!(pos[1].x, 0.5, epsilon = 1e-12);
        assert_relative_eq!(pos[1].y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn aperture_is_max_pairwise_distance() {
        let g = table_geometry(64);
        let pos = g.element_positions();
        let mut max = 0.0f64;
        for a in &pos {
            for b in &pos {
                max = max.max(a.distance(b));
            }
        }
        assert_relative_eq!(max, 3.9375, max_relative = 1e-12);
        assert_relative_eq!(max, g.aperture(), max_relative = 1e-12);
    }

    #[test]
    fn channel_steering_modulus_is_unity() {
        let g = table_geometry(16);
        let p = Point2D::new(12.0, 30.0);
        let h = g.channel_vector(&p).unwrap();
        let kappa = g.wavenumber();
        for (n, q) in g.element_positions().iter().enumerate() {
            let r = q.distance(&p);
            assert_relative_eq!(h[n].norm() * 2.0 * kappa * r, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn channel_single_element_amplitude() {
        let g = ArrayGeometry::new(Point2D::new(0.0, 0.0), 0.0, 1, 0.0625, 0.125).unwrap();
        let h = g.channel_vector(&Point2D::new(10.0, 0.0)).unwrap();
        let kappa = 2.0 * std::f64::consts::PI / 0.125;
        assert_relative_eq!(h[0].norm(), 1.0 / (2.0 * kappa * 10.0), max_relative = 1e-12);
        assert_relative_eq!(h[0].norm(), 9.947e-4, max_relative = 1e-3);
    }

    #[test]
    fn equidistant_elements_have_equal_phase() {
        // Array along x, target on the y axis: elements n and N-1-n are
        // equidistant from p.
        let g = table_geometry(8);
        let h = g.channel_vector(&Point2D::new(0.0, 25.0)).unwrap();
        for n in 0..4 {
            let d = (h[n] - h[7 - n]).norm();
            assert!(d < 1e-15, "entries {n} and {} differ by {d:e}", 7 - n);
        }
    }

    #[test]
    fn channel_coincident_point_errors() {
        let g = table_geometry(2);
        let pos = g.element_positions();
        assert!(matches!(
            g.channel_vector(&pos[0]),
            Err(Error::Singularity(_))
        ));
    }

    #[test]
    fn rayleigh_distance_table_values() {
        assert_relative_eq!(table_geometry(64).rayleigh_distance(), 248.0625, epsilon = 1e-9);
        assert!((table_geometry(64).rayleigh_distance() - 248.1).abs() < 0.1);
        assert_relative_eq!(table_geometry(16).rayleigh_distance(), 14.0625, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_aperture_is_all_far() {
        let g = table_geometry(1);
        assert_eq!(g.rayleigh_distance(), 0.0);
        assert_eq!(g.field_region(&Point2D::new(5.0, 5.0)), FieldRegion::Far);
        assert_eq!(g.field_region(&Point2D::new(0.0, 0.0)), FieldRegion::Far);
    }

    #[test]
    fn field_region_classification() {
        let g = table_geometry(64);
        assert_eq!(g.field_region(&Point2D::new(0.0, 3.0)), FieldRegion::Reactive);
        assert_eq!(
            g.field_region(&Point2D::new(0.0, 50.0)),
            FieldRegion::RadiativeNear
        );
        assert_eq!(g.field_region(&Point2D::new(0.0, 300.0)), FieldRegion::Far);
    }

    #[test]
    fn reflection_preserves_entry_magnitudes() {
        // Array along the x axis: reflecting the target across that axis
        // keeps every element distance, so |entries| are unchanged.
        let g = table_geometry(8);
        let h1 = g.channel_vector(&Point2D::new(7.0, 20.0)).unwrap();
        let h2 = g.channel_vector(&Point2D::new(7.0, -20.0)).unwrap();
        for n in 0..8 {
            assert_relative_eq!(h1[n].norm(), h2[n].norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn norm_squared_matches_pathloss_sum() {
        let g = table_geometry(16);
        let p = Point2D::new(-4.0, 33.0);
        let h = g.channel_vector(&p).unwrap();
        let kappa = g.wavenumber();
        let direct: f64 = g
            .element_positions()
            .iter()
            .map(|q| {
                let r = q.distance(&p);
                1.0 / (4.0 * kappa * kappa * r * r)
            })
            .sum();
        assert_relative_eq!(h.norm_squared(), direct, max_relative = 1e-12);
    }

    #[test]
    fn asymptotic_orthogonality_trend() {
        // Two fixed points; correlation must trend down as N doubles and
        // end below 0.05.
        let p1 = Point2D::new(10.0, 60.0);
        let p2 = Point2D::new(-20.0, 75.0);
        let mut corr = Vec::new();
        for n in [16usize, 32, 64, 128, 256] {
            let g = table_geometry(n);
            let h1 = g.channel_vector(&p1).unwrap();
            let h2 = g.channel_vector(&p2).unwrap();
            let c = (h1.adjoint() * &h2)[(0, 0)].norm_sqr()
                / (h1.norm_squared() * h2.norm_squared());
            corr.push(c);
        }
        assert!(
            corr.last().unwrap() < corr.first().unwrap(),
            "corr sequence {corr:?}"
        );
        assert!(*corr.last().unwrap() < 0.05, "corr sequence {corr:?}");
    }
}
