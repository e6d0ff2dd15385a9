//! Concentration test-function families and their integrals.
//!
//! A single profile of concentration r around a point p is
//!
//! ```text
//!   v(x) = 0                        |x−p| ≥ ε₀
//!        = 4 log(ε₀/|x−p|)          ε₀(1−r) ≤ |x−p| < ε₀
//!        = 4 log(1/(1−r))           |x−p| < ε₀(1−r)
//! ```
//!
//! and k of them combine through the weighted soft maximum
//! `u = (1/α̃) log Σ t_i e^{α̃ v_i}`.
//!
//! Deep in the concentration regime the core radius ε₀(1−r) drops far
//! below any affordable grid spacing, so all integrals here are evaluated
//! on per-bubble polar node sets with logarithmically graded radii
//! (partitioned by nearest center where bubbles overlap), while grid
//! `Field` construction is guarded by core resolvability and serves as the
//! independent cross-check at moderate r.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::EmbeddedCurve;
use crate::energy;
use crate::grid::{DiscreteDomain, Field};
use crate::measure::IntensityMeasure;
use crate::numeric::linear_fit;
use num_complex::Complex64;

const ANGULAR_NODES: usize = 192;
const LAYER_NODES: usize = 360;
const PLATEAU_NODES: usize = 24;

#[derive(Debug, Error)]
pub enum TestFnError {
    #[error("core radius {core:.3e} unresolvable on grid with h = {h:.3e}")]
    UnresolvableCore { core: f64, h: f64 },
    #[error("invalid family configuration: {0}")]
    BadConfig(String),
    #[error("sweep needs at least 4 ladder entries, got {0}")]
    SweepTooShort(usize),
}

/// Radial profile shapes used by the families.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum RadialShape {
    /// The truncated-log profile above.
    TruncatedLog { eps0: f64, r: f64 },
    /// `log((ε²+r0²)²/(ε²+|x−p|²)²)` inside B_{r0}, zero outside.
    LiouvilleCutoff { r0: f64, eps: f64 },
}

impl RadialShape {
    pub fn support_radius(&self) -> f64 {
        match *self {
            RadialShape::TruncatedLog { eps0, .. } => eps0,
            RadialShape::LiouvilleCutoff { r0, .. } => r0,
        }
    }

    /// Inner radius below which the profile is flat or smooth.
    pub fn core_radius(&self) -> f64 {
        match *self {
            RadialShape::TruncatedLog { eps0, r } => eps0 * (1.0 - r),
            RadialShape::LiouvilleCutoff { eps, .. } => eps,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            RadialShape::TruncatedLog { eps0, r } => {
                if s >= eps0 {
                    0.0
                } else {
                    let core = eps0 * (1.0 - r);
                    if s <= core {
                        4.0 * (1.0 / (1.0 - r)).ln()
                    } else {
                        4.0 * (eps0 / s).ln()
                    }
                }
            }
            RadialShape::LiouvilleCutoff { r0, eps } => {
                if s >= r0 {
                    0.0
                } else {
                    let e2 = eps * eps;
                    2.0 * ((e2 + r0 * r0).ln() - (e2 + s * s).ln())
                }
            }
        }
    }

    /// Radial derivative dv/ds.
    pub fn dvalue(&self, s: f64) -> f64 {
        match *self {
            RadialShape::TruncatedLog { eps0, r } => {
                let core = eps0 * (1.0 - r);
                if s >= eps0 || s <= core {
                    0.0
                } else {
                    -4.0 / s
                }
            }
            RadialShape::LiouvilleCutoff { r0, eps } => {
                if s >= r0 {
                    0.0
                } else {
                    -4.0 * s / (eps * eps + s * s)
                }
            }
        }
    }
}

/// Barycenter-type configuration: k bubbles on the curve with weights
/// t_i summing to one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarycenterConfig {
    pub weights: Vec<f64>,
    pub angles: Vec<f64>,
    pub r: f64,
    pub alpha_tilde: f64,
}

impl BarycenterConfig {
    pub fn validate(&self) -> Result<(), TestFnError> {
        let k = self.weights.len();
        if k == 0 || self.angles.len() != k {
            return Err(TestFnError::BadConfig(
                "weights and angles must be non-empty and match".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(TestFnError::BadConfig(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        if self.weights.iter().any(|t| *t < 0.0 || *t > 1.0) {
            return Err(TestFnError::BadConfig("weights must lie in [0,1]".into()));
        }
        if !(self.alpha_tilde > 0.75 && self.alpha_tilde < 1.0) {
            return Err(TestFnError::BadConfig(format!(
                "alpha_tilde {} outside (3/4, 1)",
                self.alpha_tilde
            )));
        }
        if !(0.0..1.0).contains(&self.r) {
            return Err(TestFnError::BadConfig(format!("r {} outside [0,1)", self.r)));
        }
        Ok(())
    }

    /// Whether λ clears the slope condition (2α̃−1)λ > 8kπ.
    pub fn admits_lambda(&self, lambda: f64) -> bool {
        let k = self.weights.iter().filter(|t| **t > 0.0).count().max(1);
        (2.0 * self.alpha_tilde - 1.0) * lambda > 8.0 * k as f64 * std::f64::consts::PI
    }
}

/// A concrete family member: bubble centers, weights, soft-max exponent,
/// and an overall amplitude factor.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub shape: RadialShape,
    pub centers: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub alpha_tilde: f64,
    /// multiplies the whole function (the min-max cutoff η)
    pub amplitude: f64,
}

impl TestFamily {
    /// Barycenter family member on the curve Γ.
    pub fn barycenter(curve: &EmbeddedCurve, config: &BarycenterConfig) -> Result<Self, TestFnError> {
        config.validate()?;
        let mut centers = Vec::new();
        let mut weights = Vec::new();
        for (t, th) in config.weights.iter().zip(&config.angles) {
            if *t > 0.0 {
                centers.push(curve.gamma(*th));
                weights.push(*t);
            }
        }
        if centers.is_empty() {
            return Err(TestFnError::BadConfig("all weights vanish".into()));
        }
        Ok(TestFamily {
            shape: RadialShape::TruncatedLog {
                eps0: curve.eps0,
                r: config.r,
            },
            centers,
            weights,
            alpha_tilde: config.alpha_tilde,
            amplitude: 1.0,
        })
    }

    /// A single profile at an arbitrary center.
    pub fn single(shape: RadialShape, center: [f64; 2]) -> Self {
        TestFamily {
            shape,
            centers: vec![center],
            weights: vec![1.0],
            alpha_tilde: 1.0,
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// u(x, y).
    pub fn value(&self, x: f64, y: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let at = self.alpha_tilde;
        let mut m = f64::NEG_INFINITY;
        let mut terms = [0.0f64; 8];
        let n = self.centers.len();
        for i in 0..n {
            let c = self.centers[i];
            let s = ((x - c[0]).powi(2) + (y - c[1]).powi(2)).sqrt();
            let e = at * self.shape.value(s) + self.weights[i].ln();
            terms[i] = e;
            m = m.max(e);
        }
        let sum: f64 = terms[..n].iter().map(|e| (e - m).exp()).sum();
        self.amplitude * (m + sum.ln()) / at
    }

    /// ∇u(x, y).
    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        if self.amplitude == 0.0 {
            return [0.0, 0.0];
        }
        let at = self.alpha_tilde;
        let n = self.centers.len();
        let mut exps = [0.0f64; 8];
        let mut m = f64::NEG_INFINITY;
        for i in 0..n {
            let c = self.centers[i];
            let s = ((x - c[0]).powi(2) + (y - c[1]).powi(2)).sqrt();
            exps[i] = at * self.shape.value(s) + self.weights[i].ln();
            m = m.max(exps[i]);
        }
        let mut denom = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for i in 0..n {
            let w = (exps[i] - m).exp();
            denom += w;
            let c = self.centers[i];
            let dx = x - c[0];
            let dy = y - c[1];
            let s = (dx * dx + dy * dy).sqrt();
            if s > 0.0 {
                let dv = self.shape.dvalue(s);
                gx += w * dv * dx / s;
                gy += w * dv * dy / s;
            }
        }
        [
            self.amplitude * gx / denom,
            self.amplitude * gy / denom,
        ]
    }

    /// Visit the polar quadrature nodes of the union of supports with
    /// their weights (nearest-center partition on overlaps).
    fn for_each_node<F: FnMut(f64, f64, f64)>(&self, mut f: F) {
        let support = self.shape.support_radius();
        let core = self.shape.core_radius().min(support * 0.5);
        let dtheta = 2.0 * std::f64::consts::PI / ANGULAR_NODES as f64;
        let tau0 = core.ln();
        let tau1 = support.ln();
        let dtau = (tau1 - tau0) / LAYER_NODES as f64;
        let ds = core / PLATEAU_NODES as f64;
        for (i, c) in self.centers.iter().enumerate() {
            for a in 0..ANGULAR_NODES {
                let th = (a as f64 + 0.5) * dtheta;
                let (ct, st) = (th.cos(), th.sin());
                let mut emit = |s: f64, w: f64| {
                    let x = c[0] + s * ct;
                    let y = c[1] + s * st;
                    // nearest-center ownership
                    let mut own = true;
                    let d2_self = s * s;
                    for (j, cj) in self.centers.iter().enumerate() {
                        if j == i {
                            continue;
                        }
                        let d2 = (x - cj[0]).powi(2) + (y - cj[1]).powi(2);
                        if d2 < d2_self || (d2 == d2_self && j < i) {
                            own = false;
                            break;
                        }
                    }
                    if own {
                        f(x, y, w);
                    }
                };
                // plateau: midpoint rule in s
                for p in 0..PLATEAU_NODES {
                    let s = (p as f64 + 0.5) * ds;
                    emit(s, s * ds * dtheta);
                }
                // layer: trapezoid in τ = log s
                for l in 0..=LAYER_NODES {
                    let tau = tau0 + l as f64 * dtau;
                    let s = tau.exp();
                    let tw = if l == 0 || l == LAYER_NODES { 0.5 } else { 1.0 };
                    emit(s, s * s * dtau * dtheta * tw);
                }
            }
        }
    }

    /// ∫|∇u|² by polar quadrature.
    pub fn dirichlet_energy_quad(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_node(|x, y, w| {
            let g = self.gradient(x, y);
            acc += (g[0] * g[0] + g[1] * g[1]) * w;
        });
        acc
    }

    /// Area of the union of supports as integrated by the node set.
    pub fn covered_area_quad(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_node(|_, _, w| acc += w);
        acc
    }

    /// log ∬ e^{αu} P(dα) dx over the domain.
    pub fn log_mass_quad(&self, domain_area: f64, measure: &IntensityMeasure) -> f64 {
        let mut acc = 0.0;
        let mut covered = 0.0;
        self.for_each_node(|x, y, w| {
            let u = self.value(x, y);
            acc += w * measure.weighted_exp(u, 0).unwrap();
            covered += w;
        });
        ((domain_area - covered).max(0.0) + acc).ln()
    }

    /// log of the α̃-restricted denominator `P([α̃,1]) ∫ e^{α̃ u} dx`:
    /// the lower-bound route whose growth rate in log(1/(1−r)) is exactly
    /// 4α̃−2.
    pub fn restricted_log_mass_quad(&self, domain_area: f64, measure: &IntensityMeasure) -> f64 {
        let at = self.alpha_tilde;
        let tail = measure.tail_mass(1.0 - at);
        let mut acc = 0.0;
        let mut covered = 0.0;
        self.for_each_node(|x, y, w| {
            acc += w * (at * self.value(x, y)).exp();
            covered += w;
        });
        (((domain_area - covered).max(0.0) + acc)).ln() + tail.ln()
    }

    /// J_λ via the polar quadrature.
    pub fn j_lambda_quad(&self, domain_area: f64, lambda: f64, measure: &IntensityMeasure) -> f64 {
        0.5 * self.dirichlet_energy_quad() - lambda * self.log_mass_quad(domain_area, measure)
    }

    /// Moments m_j = ∫ χ^j dμ(u) for j = 1..=j_max, with μ(u) the
    /// normalized exponential mass; the far field is summed on the grid.
    pub fn moments_quad(
        &self,
        domain: &DiscreteDomain,
        curve: &EmbeddedCurve,
        j_max: usize,
        measure: &IntensityMeasure,
    ) -> Vec<Complex64> {
        let h2 = domain.h() * domain.h();
        let sup = self.shape.support_radius();
        let mut num = vec![Complex64::new(0.0, 0.0); j_max];
        let mut den = 0.0;
        // background: u = 0 outside the bubble supports
        for i in 0..domain.num_cells() {
            let (x, y) = domain.cell_center(i);
            let inside = self
                .centers
                .iter()
                .any(|c| (x - c[0]).powi(2) + (y - c[1]).powi(2) < sup * sup);
            if !inside {
                let chi = curve.chi(x, y);
                let mut p = Complex64::new(1.0, 0.0);
                for m in num.iter_mut() {
                    p *= chi;
                    *m += p * h2;
                }
                den += h2;
            }
        }
        self.for_each_node(|x, y, w| {
            let q = measure.weighted_exp(self.value(x, y), 0).unwrap() * w;
            let chi = curve.chi(x, y);
            let mut p = Complex64::new(1.0, 0.0);
            for m in num.iter_mut() {
                p *= chi;
                *m += p * q;
            }
            den += q;
        });
        num.into_iter().map(|m| m / den).collect()
    }

    /// Relative exponential mass carried by the balls B_eps(c_i),
    /// assigned greedily to the first containing ball.
    pub fn ball_mass_fractions(
        &self,
        domain: &DiscreteDomain,
        eps: f64,
        measure: &IntensityMeasure,
    ) -> Vec<f64> {
        let h2 = domain.h() * domain.h();
        let sup = self.shape.support_radius();
        let mut masses = vec![0.0f64; self.centers.len()];
        let mut total = 0.0;
        let assign = |x: f64, y: f64| -> Option<usize> {
            self.centers
                .iter()
                .position(|c| (x - c[0]).powi(2) + (y - c[1]).powi(2) < eps * eps)
        };
        for i in 0..domain.num_cells() {
            let (x, y) = domain.cell_center(i);
            let inside_support = self
                .centers
                .iter()
                .any(|c| (x - c[0]).powi(2) + (y - c[1]).powi(2) < sup * sup);
            if !inside_support {
                total += h2;
                if let Some(b) = assign(x, y) {
                    masses[b] += h2;
                }
            }
        }
        self.for_each_node(|x, y, w| {
            let q = measure.weighted_exp(self.value(x, y), 0).unwrap() * w;
            total += q;
            if let Some(b) = assign(x, y) {
                masses[b] += q;
            }
        });
        masses.into_iter().map(|m| m / total).collect()
    }

    /// Sample the family on the grid; fails when the core is unresolvable.
    pub fn to_field(&self, domain: &DiscreteDomain) -> Result<Field, TestFnError> {
        let core = self.shape.core_radius();
        if core < 4.0 * domain.h() {
            return Err(TestFnError::UnresolvableCore {
                core,
                h: domain.h(),
            });
        }
        Ok(Field::from_fn(domain, |x, y| self.value(x, y)))
    }
}

/// Grid field of a single concentration profile at angle θ on the curve.
pub fn test_bubble_field(
    domain: &DiscreteDomain,
    curve: &EmbeddedCurve,
    theta: f64,
    r: f64,
) -> Result<Field, TestFnError> {
    let fam = TestFamily::single(
        RadialShape::TruncatedLog {
            eps0: curve.eps0,
            r,
        },
        curve.gamma(theta),
    );
    fam.to_field(domain)
}

/// Grid field of the barycenter family member.
pub fn barycenter_field(
    domain: &DiscreteDomain,
    curve: &EmbeddedCurve,
    config: &BarycenterConfig,
) -> Result<Field, TestFnError> {
    TestFamily::barycenter(curve, config)?.to_field(domain)
}

/// Ladder sweep report over r = 1 − 2^{-m}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    /// L = log(1/(1−r)) per rung
    pub log_scale: Vec<f64>,
    pub r_values: Vec<f64>,
    pub dirichlet_energy: Vec<f64>,
    pub log_mass: Vec<f64>,
    pub restricted_log_mass: Vec<f64>,
    pub j_lambda: Vec<f64>,
    pub energy_slope: f64,
    pub log_mass_slope: f64,
    pub restricted_slope: f64,
    pub j_slope: f64,
    pub lambda: f64,
    pub alpha_tilde: f64,
    /// J decreasing without bound along the ladder
    pub j_diverges: bool,
}

/// Evaluate the barycenter family along the ladder and fit growth slopes
/// against L = log(1/(1−r)).
pub fn concentration_sweep(
    curve: &EmbeddedCurve,
    domain_area: f64,
    weights: &[f64],
    angles: &[f64],
    alpha_tilde: f64,
    lambda: f64,
    ladder_m: &[u32],
    measure: &IntensityMeasure,
) -> Result<SweepReport, TestFnError> {
    if ladder_m.len() < 4 {
        return Err(TestFnError::SweepTooShort(ladder_m.len()));
    }
    let mut report = SweepReport {
        log_scale: vec![],
        r_values: vec![],
        dirichlet_energy: vec![],
        log_mass: vec![],
        restricted_log_mass: vec![],
        j_lambda: vec![],
        energy_slope: 0.0,
        log_mass_slope: 0.0,
        restricted_slope: 0.0,
        j_slope: 0.0,
        lambda,
        alpha_tilde,
        j_diverges: false,
    };
    for &m in ladder_m {
        let r = 1.0 - (2.0f64).powi(-(m as i32));
        let cfg = BarycenterConfig {
            weights: weights.to_vec(),
            angles: angles.to_vec(),
            r,
            alpha_tilde,
        };
        let fam = TestFamily::barycenter(curve, &cfg)?;
        let e = fam.dirichlet_energy_quad();
        let lm = fam.log_mass_quad(domain_area, measure);
        let rlm = fam.restricted_log_mass_quad(domain_area, measure);
        report.log_scale.push((1.0 / (1.0 - r)).ln());
        report.r_values.push(r);
        report.dirichlet_energy.push(e);
        report.log_mass.push(lm);
        report.restricted_log_mass.push(rlm);
        report.j_lambda.push(0.5 * e - lambda * lm);
    }
    report.energy_slope = linear_fit(&report.log_scale, &report.dirichlet_energy).0;
    report.log_mass_slope = linear_fit(&report.log_scale, &report.log_mass).0;
    report.restricted_slope = linear_fit(&report.log_scale, &report.restricted_log_mass).0;
    report.j_slope = linear_fit(&report.log_scale, &report.j_lambda).0;
    report.j_diverges = report.j_slope < 0.0
        && report.j_lambda.last().unwrap() < report.j_lambda.first().unwrap();
    Ok(report)
}

/// Sharp-family sweep: the Liouville cutoff profile over an ε-ladder,
/// fitting J_λ against log(1/ε²).
pub fn sharp_family_sweep(
    domain: &DiscreteDomain,
    center: [f64; 2],
    r0: f64,
    eps_ladder: &[f64],
    lambda: f64,
    measure: &IntensityMeasure,
) -> Result<(Vec<f64>, Vec<f64>, f64), TestFnError> {
    if eps_ladder.len() < 4 {
        return Err(TestFnError::SweepTooShort(eps_ladder.len()));
    }
    let mut xs = Vec::new();
    let mut js = Vec::new();
    for &eps in eps_ladder {
        let fam = TestFamily::single(RadialShape::LiouvilleCutoff { r0, eps }, center);
        xs.push((1.0 / (eps * eps)).ln());
        js.push(fam.j_lambda_quad(domain.area(), lambda, measure));
    }
    let slope = linear_fit(&xs, &js).0;
    Ok((xs, js, slope))
}

/// Cross-route check data: grid-quadrature energy of the sampled field vs
/// the polar quadrature, at a resolvable r.
pub fn grid_vs_quadrature_energy(
    domain: &DiscreteDomain,
    fam: &TestFamily,
) -> Result<(f64, f64), TestFnError> {
    let field = fam.to_field(domain)?;
    Ok((
        energy::dirichlet_energy(domain, &field),
        fam.dirichlet_energy_quad(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use std::f64::consts::PI;

    fn annulus() -> (DiscreteDomain, EmbeddedCurve) {
        let spec = DomainSpec::Annulus {
            center: [0.0, 0.0],
            r_inner: 0.5,
            r_outer: 1.0,
            h: 1.0 / 96.0,
        };
        let d = DiscreteDomain::build(&spec).unwrap();
        let c = EmbeddedCurve::for_domain(&spec).unwrap();
        (d, c)
    }

    #[test]
    fn zero_concentration_gives_zero_profile() {
        let (d, c) = annulus();
        let f = test_bubble_field(&d, &c, 0.3, 0.0).unwrap();
        assert_eq!(f.sup_norm(), 0.0);
    }

    #[test]
    fn plateau_value_matches_formula() {
        let (_, c) = annulus();
        let r = 0.99;
        let fam = TestFamily::single(
            RadialShape::TruncatedLog { eps0: c.eps0, r },
            c.gamma(1.0),
        );
        let g = c.gamma(1.0);
        let v = fam.value(g[0], g[1]);
        let expected = 4.0 * (100.0f64).ln();
        assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        assert!((expected - 18.4207).abs() < 1e-3);
    }

    #[test]
    fn profile_continuous_across_interfaces() {
        let (d, c) = annulus();
        let r = 0.5;
        let fam = TestFamily::single(
            RadialShape::TruncatedLog { eps0: c.eps0, r },
            c.gamma(0.0),
        );
        let field = fam.to_field(&d).unwrap();
        // adjacent cells differ at most by the profile's Lipschitz bound
        let lip = 4.0 / (c.eps0 * (1.0 - r));
        let mut worst: f64 = 0.0;
        for i in 0..d.num_cells() {
            for &n in d.neighbors_of(i) {
                if n != u32::MAX {
                    worst = worst.max((field.values[i] - field.values[n as usize]).abs());
                }
            }
        }
        assert!(worst <= lip * d.h() * 1.5, "jump {worst} vs bound");
    }

    #[test]
    fn single_bubble_energy_matches_radial_integral() {
        let (_, c) = annulus();
        for &r in &[0.9, 0.99, 0.999, 1.0 - (2.0f64).powi(-10)] {
            let fam = TestFamily::single(
                RadialShape::TruncatedLog { eps0: c.eps0, r },
                c.gamma(0.7),
            );
            let e = fam.dirichlet_energy_quad();
            let exact = 32.0 * PI * (1.0 / (1.0 - r)).ln();
            assert!(
                (e - exact).abs() <= 0.005 * exact,
                "r={r}: {e} vs exact {exact}"
            );
        }
    }

    #[test]
    fn barycenter_collapses_to_single_bubble() {
        let (d, c) = annulus();
        let r = 0.55;
        let cfg1 = BarycenterConfig {
            weights: vec![1.0],
            angles: vec![1.2],
            r,
            alpha_tilde: 0.95,
        };
        let single = test_bubble_field(&d, &c, 1.2, r).unwrap();
        let bary = barycenter_field(&d, &c, &cfg1).unwrap();
        for i in 0..d.num_cells() {
            assert!((single.values[i] - bary.values[i]).abs() < 1e-12);
        }
        // identical bubbles collapse too
        let cfg2 = BarycenterConfig {
            weights: vec![0.5, 0.5],
            angles: vec![1.2, 1.2],
            r,
            alpha_tilde: 0.95,
        };
        let two = barycenter_field(&d, &c, &cfg2).unwrap();
        for i in 0..d.num_cells() {
            assert!((single.values[i] - two.values[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn barycenter_bounds() {
        let (d, c) = annulus();
        let cfg = BarycenterConfig {
            weights: vec![0.3, 0.7],
            angles: vec![0.5, PI],
            r: 0.5,
            alpha_tilde: 0.9,
        };
        let f = barycenter_field(&d, &c, &cfg).unwrap();
        assert!(f.min() >= -1e-12);
        let vmax = 4.0 * (2.0f64).ln(); // r = 0.5 plateau
        let bound = vmax + (2.0f64).ln() / 0.9;
        assert!(f.max() <= bound + 1e-12);
    }

    #[test]
    fn unresolvable_core_is_rejected() {
        let (d, c) = annulus();
        assert!(matches!(
            test_bubble_field(&d, &c, 0.0, 0.999),
            Err(TestFnError::UnresolvableCore { .. })
        ));
    }

    #[test]
    fn grid_and_polar_energies_agree_at_resolvable_r() {
        let (d, c) = annulus();
        let cfg = BarycenterConfig {
            weights: vec![0.5, 0.5],
            angles: vec![0.0, PI],
            r: 0.45,
            alpha_tilde: 0.95,
        };
        let fam = TestFamily::barycenter(&c, &cfg).unwrap();
        let (grid_e, quad_e) = grid_vs_quadrature_energy(&d, &fam).unwrap();
        let rel = (grid_e - quad_e).abs() / quad_e;
        // the grid route carries O((h/core)^2) error near the bubble cores
        assert!(rel < 0.10, "grid {grid_e} vs quad {quad_e} (rel {rel})");
        // and the masses agree as well
        let lm_grid = energy::log_mass(&d, &fam.to_field(&d).unwrap(), &IntensityMeasure::uniform());
        let lm_quad = fam.log_mass_quad(d.area(), &IntensityMeasure::uniform());
        assert!((lm_grid - lm_quad).abs() < 0.02, "{lm_grid} vs {lm_quad}");
    }

    #[test]
    fn energy_slope_for_single_bubble_near_32pi() {
        let (_, c) = annulus();
        let ms: Vec<u32> = (3..=10).collect();
        let rep = concentration_sweep(
            &c,
            PI * (1.0 - 0.25),
            &[1.0],
            &[0.4],
            0.95,
            0.0,
            &ms,
            &IntensityMeasure::dirac_one(),
        )
        .unwrap();
        let expected = 32.0 * PI;
        assert!(
            (rep.energy_slope - expected).abs() < 0.03 * expected,
            "slope {} vs {expected}",
            rep.energy_slope
        );
        // λ = 0: no log term, J grows; flagged as non-divergent
        assert!(!rep.j_diverges);
        assert!(rep.j_slope > 0.0);
    }

    #[test]
    fn mass_concentrates_in_bubble_balls() {
        let (d, c) = annulus();
        let cfg = BarycenterConfig {
            weights: vec![0.5, 0.5],
            angles: vec![0.0, PI],
            r: 0.999,
            alpha_tilde: 0.95,
        };
        let fam = TestFamily::barycenter(&c, &cfg).unwrap();
        let fr = fam.ball_mass_fractions(&d, c.eps0, &IntensityMeasure::uniform());
        let total: f64 = fr.iter().sum();
        assert!(total >= 0.95, "concentrated fraction {total}");
        assert!((fr[0] - fr[1]).abs() < 0.1 * total);
    }

    #[test]
    fn sweep_too_short_is_rejected() {
        let (_, c) = annulus();
        let r = concentration_sweep(
            &c,
            1.0,
            &[1.0],
            &[0.0],
            0.95,
            0.0,
            &[3, 4, 5],
            &IntensityMeasure::dirac_one(),
        );
        assert!(matches!(r, Err(TestFnError::SweepTooShort(3))));
    }
}
