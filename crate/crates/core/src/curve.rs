//! Non-contractible curve data for domains with a hole: the circle Γ, its
//! parametrization γ(θ), the complex chart χ mapping Γ to the unit circle,
//! and the tube radius used by the concentration test functions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DiscreteDomain, DomainSpec};
use num_complex::Complex64;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("domain has no hole: a non-contractible curve requires one")]
    NoHole,
    #[error("curve does not fit: tube radius {0} is not positive")]
    BadTube(f64),
    #[error("chart check failed: {0}")]
    ChartInvariant(String),
}

/// Circle Γ around the hole together with the chart χ(x) = (x − c)/r_Γ.
///
/// χ maps Γ to the unit circle and the hole blocks a disk of radius 2ρ
/// around the origin of the chart, so boundary moments stay away from zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddedCurve {
    pub center: [f64; 2],
    /// radius of Γ
    pub r_gamma: f64,
    /// exclusion radius: |χ| ≥ 2ρ on the domain
    pub rho: f64,
    /// tube radius: B_{ε₀}(γ(θ)) ⊂ Ω for every θ
    pub eps0: f64,
    /// Lipschitz constant of χ
    pub lipschitz: f64,
    /// max |χ| over the domain closure
    pub chi_max: f64,
}

impl EmbeddedCurve {
    /// Canonical curve for the supported hole-bearing shapes.
    ///
    /// For the annulus Γ is the circle of radius √(r₀r₁); for a rectangle
    /// with a circular hole it is the circle midway between the hole and
    /// the nearest outer wall.
    pub fn for_domain(spec: &DomainSpec) -> Result<Self, CurveError> {
        match *spec {
            DomainSpec::Annulus {
                center,
                r_inner,
                r_outer,
                ..
            } => {
                let r_gamma = (r_inner * r_outer).sqrt();
                let eps0 = 0.5 * (r_gamma - r_inner).min(r_outer - r_gamma);
                if eps0 <= 0.0 {
                    return Err(CurveError::BadTube(eps0));
                }
                Ok(EmbeddedCurve {
                    center,
                    r_gamma,
                    rho: r_inner / (2.0 * r_gamma),
                    eps0,
                    lipschitz: 1.0 / r_gamma,
                    chi_max: r_outer / r_gamma,
                })
            }
            DomainSpec::RectangleWithHole {
                bounds,
                hole_center,
                hole_radius,
                ..
            } => {
                let wall = (hole_center[0] - bounds[0])
                    .min(bounds[2] - hole_center[0])
                    .min(hole_center[1] - bounds[1])
                    .min(bounds[3] - hole_center[1]);
                let r_gamma = 0.5 * (hole_radius + wall);
                let eps0 = 0.5 * (r_gamma - hole_radius).min(wall - r_gamma);
                if eps0 <= 0.0 {
                    return Err(CurveError::BadTube(eps0));
                }
                let corner = |x: f64, y: f64| {
                    ((x - hole_center[0]).powi(2) + (y - hole_center[1]).powi(2)).sqrt()
                };
                let chi_max = corner(bounds[0], bounds[1])
                    .max(corner(bounds[0], bounds[3]))
                    .max(corner(bounds[2], bounds[1]))
                    .max(corner(bounds[2], bounds[3]))
                    / r_gamma;
                Ok(EmbeddedCurve {
                    center: hole_center,
                    r_gamma,
                    rho: hole_radius / (2.0 * r_gamma),
                    eps0,
                    lipschitz: 1.0 / r_gamma,
                    chi_max,
                })
            }
            _ => Err(CurveError::NoHole),
        }
    }

    /// γ(θ) on Γ.
    pub fn gamma(&self, theta: f64) -> [f64; 2] {
        [
            self.center[0] + self.r_gamma * theta.cos(),
            self.center[1] + self.r_gamma * theta.sin(),
        ]
    }

    /// χ(x) as a complex number.
    pub fn chi(&self, x: f64, y: f64) -> Complex64 {
        Complex64::new(
            (x - self.center[0]) / self.r_gamma,
            (y - self.center[1]) / self.r_gamma,
        )
    }

    /// Verify the chart invariants against the discretized domain.
    pub fn validate(&self, domain: &DiscreteDomain) -> Result<(), CurveError> {
        for k in 0..64 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let g = self.gamma(theta);
            let on_circle = (self.chi(g[0], g[1]).norm() - 1.0).abs();
            if on_circle > 1e-10 {
                return Err(CurveError::ChartInvariant(format!(
                    "χ(γ(θ)) off the unit circle by {on_circle}"
                )));
            }
            let d = domain.spec().boundary_distance(g[0], g[1]);
            if d < self.eps0 {
                return Err(CurveError::ChartInvariant(format!(
                    "tube radius violated: dist {d} < ε₀ {}",
                    self.eps0
                )));
            }
        }
        for i in 0..domain.num_cells() {
            let (x, y) = domain.cell_center(i);
            if self.chi(x, y).norm() < 2.0 * self.rho {
                return Err(CurveError::ChartInvariant(format!(
                    "|χ| < 2ρ at interior cell ({x}, {y})"
                )));
            }
        }
        Ok(())
    }
}
