//! Vortex intensity distribution: a Borel probability measure on [0,1]
//! represented as point atoms plus a piecewise-linear density.
//!
//! All exponential moments `∫ α^m e^{αt} P(dα)` are evaluated exactly for
//! this representation (per-piece closed forms), with a log-space path for
//! amplitudes that would overflow in linear space.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::logsumexp;

/// Amplitude beyond which linear-space evaluation switches to log-space.
pub const LOG_SPACE_THRESHOLD: f64 = 700.0;

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("total mass {0} differs from 1 by more than {MASS_TOL}")]
    MassNotNormalized(f64),
    #[error("atom location {0} outside [0,1]")]
    AtomOutOfRange(f64),
    #[error("atom weight {0} not strictly positive")]
    NonPositiveWeight(f64),
    #[error("density breakpoints must be strictly increasing within [0,1]")]
    BadBreakpoints,
    #[error("density values must be nonnegative and match breakpoints")]
    BadDensityValues,
    #[error("quadrature_nodes must be at least 2, got {0}")]
    TooFewNodes(usize),
    #[error("all mass at alpha = 0: problem degenerates to the linear equation")]
    DegenerateSupport,
    #[error("weighted_exp({t}) overflows linear-space output; use log_weighted_exp")]
    Overflow { t: f64 },
}

/// Configuration form of an atom: location and weight.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AtomSpec {
    pub alpha: f64,
    pub weight: f64,
}

/// Configuration form of the piecewise-linear density.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DensitySpec {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

/// Configuration form of the whole measure.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default)]
    pub density: Option<DensitySpec>,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
}

fn default_nodes() -> usize {
    64
}

/// Validated probability measure on [0,1]: atoms `(α_i, w_i)` sorted with
/// strictly increasing locations, plus an optional piecewise-linear density.
///
/// Immutable after construction; shared freely across concurrent solves.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMeasure {
    atoms: Vec<(f64, f64)>,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    quadrature_nodes: usize,
}

impl IntensityMeasure {
    pub fn from_spec(spec: &MeasureSpec) -> Result<Self, MeasureError> {
        let mut atoms: Vec<(f64, f64)> = spec.atoms.iter().map(|a| (a.alpha, a.weight)).collect();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // merge coincident atoms into canonical form
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (a, w) in atoms {
            match merged.last_mut() {
                Some((la, lw)) if *la == a => *lw += w,
                _ => merged.push((a, w)),
            }
        }
        for &(a, w) in &merged {
            if !(0.0..=1.0).contains(&a) || !a.is_finite() {
                return Err(MeasureError::AtomOutOfRange(a));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(MeasureError::NonPositiveWeight(w));
            }
        }
        let (breakpoints, values) = match &spec.density {
            None => (Vec::new(), Vec::new()),
            Some(d) => {
                if d.breakpoints.len() < 2 || d.breakpoints.len() != d.values.len() {
                    return Err(MeasureError::BadBreakpoints);
                }
                for w in d.breakpoints.windows(2) {
                    if !(w[1] > w[0]) {
                        return Err(MeasureError::BadBreakpoints);
                    }
                }
                let lo = d.breakpoints[0];
                let hi = *d.breakpoints.last().unwrap();
                if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) {
                    return Err(MeasureError::BadBreakpoints);
                }
                if d.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(MeasureError::BadDensityValues);
                }
                (d.breakpoints.clone(), d.values.clone())
            }
        };
        if spec.quadrature_nodes < 2 {
            return Err(MeasureError::TooFewNodes(spec.quadrature_nodes));
        }
        let m = Self {
            atoms: merged,
            breakpoints,
            values,
            quadrature_nodes: spec.quadrature_nodes,
        };
        let mass = m.total_mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(MeasureError::MassNotNormalized(mass));
        }
        Ok(m)
    }

    pub fn to_spec(&self) -> MeasureSpec {
        MeasureSpec {
            atoms: self
                .atoms
                .iter()
                .map(|&(alpha, weight)| AtomSpec { alpha, weight })
                .collect(),
            density: if self.breakpoints.is_empty() {
                None
            } else {
                Some(DensitySpec {
                    breakpoints: self.breakpoints.clone(),
                    values: self.values.clone(),
                })
            },
            quadrature_nodes: self.quadrature_nodes,
        }
    }

    /// The unit atom at α = 1 (the classical single-intensity case).
    pub fn dirac_one() -> Self {
        Self::single_atom(1.0).unwrap()
    }

    /// A single atom of mass 1 at `alpha`.
    pub fn single_atom(alpha: f64) -> Result<Self, MeasureError> {
        Self::from_spec(&MeasureSpec {
            atoms: vec![AtomSpec { alpha, weight: 1.0 }],
            density: None,
            quadrature_nodes: default_nodes(),
        })
    }

    /// Atoms at the given locations/weights, no density.
    pub fn atoms_only(atoms: &[(f64, f64)]) -> Result<Self, MeasureError> {
        Self::from_spec(&MeasureSpec {
            atoms: atoms
                .iter()
                .map(|&(alpha, weight)| AtomSpec { alpha, weight })
                .collect(),
            density: None,
            quadrature_nodes: default_nodes(),
        })
    }

    /// Uniform density on [0,1], no atoms.
    pub fn uniform() -> Self {
        Self::from_spec(&MeasureSpec {
            atoms: vec![],
            density: Some(DensitySpec {
                breakpoints: vec![0.0, 1.0],
                values: vec![1.0, 1.0],
            }),
            quadrature_nodes: default_nodes(),
        })
        .unwrap()
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn has_density(&self) -> bool {
        !self.breakpoints.is_empty()
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.quadrature_nodes
    }

    /// Total mass: atom weights plus the exact density integral.
    pub fn total_mass(&self) -> f64 {
        let atom_mass: f64 = self.atoms.iter().map(|&(_, w)| w).sum();
        atom_mass + self.density_integral_range(f64::NEG_INFINITY, f64::INFINITY)
    }

    /// First moment `∫ α P(dα)`, exact.
    pub fn mean_alpha(&self) -> f64 {
        let atom_part: f64 = self.atoms.iter().map(|&(a, w)| a * w).sum();
        let mut dens = 0.0;
        for (seg, _) in self.pieces() {
            let (a, b, c0, c1) = seg;
            // ∫ α (c0 + c1 α) dα over [a,b]
            dens += c0 * (b * b - a * a) / 2.0 + c1 * (b * b * b - a * a * a) / 3.0;
        }
        atom_part + dens
    }

    /// Mass of the closed interval `[1-eps, 1]`.
    pub fn tail_mass(&self, eps: f64) -> f64 {
        assert!(eps > 0.0 && eps <= 1.0, "eps must lie in (0,1]");
        let lo = 1.0 - eps;
        let atom_part: f64 = self
            .atoms
            .iter()
            .filter(|&&(a, _)| a >= lo)
            .map(|&(_, w)| w)
            .sum();
        atom_part + self.density_integral_range(lo, 1.0)
    }

    /// Exact atom mass sitting at α = 1.
    pub fn mass_at_one(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|&&(a, _)| a == 1.0)
            .map(|&(_, w)| w)
            .sum()
    }

    /// Supremum of the support: rightmost atom or rightmost density
    /// breakpoint adjacent to positive values.
    pub fn sup_support(&self) -> f64 {
        let atom_sup = self.atoms.last().map(|&(a, _)| a).unwrap_or(0.0);
        let mut dens_sup = 0.0;
        for i in (0..self.breakpoints.len().saturating_sub(1)).rev() {
            if self.values[i] > 0.0 || self.values[i + 1] > 0.0 {
                dens_sup = self.breakpoints[i + 1];
                break;
            }
        }
        atom_sup.max(dens_sup)
    }

    /// Rescale locations so that the support supremum becomes 1; the
    /// equation parameter transforms as `λ ↦ ᾱ² λ`.
    pub fn normalize_support(&self, lambda: f64) -> Result<(Self, f64), MeasureError> {
        let bar = self.sup_support();
        if bar <= 0.0 {
            return Err(MeasureError::DegenerateSupport);
        }
        if bar == 1.0 {
            return Ok((self.clone(), lambda));
        }
        let spec = MeasureSpec {
            atoms: self
                .atoms
                .iter()
                .map(|&(a, w)| AtomSpec {
                    alpha: a / bar,
                    weight: w,
                })
                .collect(),
            density: if self.breakpoints.is_empty() {
                None
            } else {
                // pushforward under α ↦ α/ᾱ keeps the total mass
                Some(DensitySpec {
                    breakpoints: self.breakpoints.iter().map(|b| b / bar).collect(),
                    values: self.values.iter().map(|v| v * bar).collect(),
                })
            },
            quadrature_nodes: self.quadrature_nodes,
        };
        Ok((Self::from_spec(&spec)?, bar * bar * lambda))
    }

    /// `∫ α^moment e^{αt} P(dα)` in linear space.
    ///
    /// Fails with `Overflow` when the result exceeds the f64 range; callers
    /// working at blow-up amplitudes should use [`log_weighted_exp`].
    ///
    /// [`log_weighted_exp`]: Self::log_weighted_exp
    pub fn weighted_exp(&self, t: f64, moment: u8) -> Result<f64, MeasureError> {
        assert!(moment <= 1, "moment must be 0 or 1");
        self.moment_exp(t, moment)
    }

    /// `log ∫ α^moment e^{αt} P(dα)`, stable for arbitrarily large |t|.
    pub fn log_weighted_exp(&self, t: f64, moment: u8) -> f64 {
        assert!(moment <= 1, "moment must be 0 or 1");
        self.log_moment_exp(t, moment)
    }

    /// Linear-space moments up to α²; the second moment feeds the solver
    /// Jacobian's local term.
    pub(crate) fn moment_exp(&self, t: f64, moment: u8) -> Result<f64, MeasureError> {
        assert!(moment <= 2);
        assert!(t.is_finite(), "t must be finite");
        if t > LOG_SPACE_THRESHOLD {
            let lv = self.log_moment_exp(t, moment);
            if lv > f64::MAX.ln() {
                return Err(MeasureError::Overflow { t });
            }
            return Ok(lv.exp());
        }
        let mut total = 0.0;
        for &(a, w) in &self.atoms {
            let factor = match moment {
                0 => 1.0,
                1 => a,
                _ => a * a,
            };
            total += w * factor * (a * t).exp();
        }
        for (seg, _) in self.pieces() {
            total += piece_weighted_exp(seg, t, moment);
        }
        Ok(total)
    }

    pub(crate) fn log_moment_exp(&self, t: f64, moment: u8) -> f64 {
        assert!(moment <= 2);
        let mut logs: Vec<f64> = Vec::with_capacity(self.atoms.len() + self.values.len());
        for &(a, w) in &self.atoms {
            if moment >= 1 && a == 0.0 {
                continue;
            }
            let factor = match moment {
                0 => 1.0,
                1 => a,
                _ => a * a,
            };
            logs.push((w * factor).ln() + a * t);
        }
        for (seg, _) in self.pieces() {
            if let Some(lp) = piece_log_weighted_exp(seg, t, moment) {
                logs.push(lp);
            }
        }
        logsumexp(&logs)
    }

    /// Composite-trapezoid integral `∫ f(α) ρ(α) dα` over the density,
    /// with `quadrature_nodes` points per linear piece. Error is
    /// O(spacing²) in the integrand's smoothness.
    pub fn integrate_density_quadrature<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.integrate_density_quadrature_n(self.quadrature_nodes, f)
    }

    /// Same as [`integrate_density_quadrature`] with an explicit node count.
    ///
    /// [`integrate_density_quadrature`]: Self::integrate_density_quadrature
    pub fn integrate_density_quadrature_n<F: Fn(f64) -> f64>(&self, nodes: usize, f: F) -> f64 {
        assert!(nodes >= 2);
        let mut total = 0.0;
        for (seg, _) in self.pieces() {
            let (a, b, c0, c1) = seg;
            let dx = (b - a) / (nodes - 1) as f64;
            let mut acc = 0.0;
            for j in 0..nodes {
                let x = a + dx * j as f64;
                let w = if j == 0 || j == nodes - 1 { 0.5 } else { 1.0 };
                acc += w * (c0 + c1 * x) * f(x);
            }
            total += acc * dx;
        }
        total
    }

    /// Exact density mass over `[lo, hi]` clipped to the density's support.
    fn density_integral_range(&self, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for (seg, _) in self.pieces() {
            let (a, b, c0, c1) = seg;
            let l = a.max(lo);
            let r = b.min(hi);
            if r > l {
                total += c0 * (r - l) + c1 * (r * r - l * l) / 2.0;
            }
        }
        total
    }

    /// Iterate linear pieces as `(a, b, c0, c1)` with ρ(α) = c0 + c1·α on [a,b].
    fn pieces(&self) -> impl Iterator<Item = ((f64, f64, f64, f64), usize)> + '_ {
        (0..self.breakpoints.len().saturating_sub(1)).map(move |i| {
            let a = self.breakpoints[i];
            let b = self.breakpoints[i + 1];
            let va = self.values[i];
            let vb = self.values[i + 1];
            let c1 = (vb - va) / (b - a);
            let c0 = va - c1 * a;
            ((a, b, c0, c1), i)
        })
    }
}

/// `∫_0^L s^k e^{st} ds / L^{k+1}` as a function of x = L·t, k ≤ 3.
/// Series Σ_j x^j/(j!(k+j+1)) near zero, closed forms elsewhere.
fn fk(k: usize, x: f64) -> f64 {
    if x.abs() < 1.0 {
        let mut term = 1.0; // x^j / j!
        let mut acc = 0.0;
        for j in 0..24 {
            acc += term / (k as f64 + j as f64 + 1.0);
            term *= x / (j as f64 + 1.0);
            if term.abs() < 1e-20 {
                break;
            }
        }
        acc
    } else {
        let ex = x.exp();
        match k {
            0 => (ex - 1.0) / x,
            1 => (ex * (x - 1.0) + 1.0) / (x * x),
            2 => (ex * (x * x - 2.0 * x + 2.0) - 2.0) / (x * x * x),
            3 => (ex * (x * x * x - 3.0 * x * x + 6.0 * x - 6.0) + 6.0) / (x * x * x * x),
            _ => unreachable!(),
        }
    }
}

/// Exact ∫_a^b (c0 + c1 α) α^m e^{αt} dα for a linear density piece.
fn piece_weighted_exp(seg: (f64, f64, f64, f64), t: f64, moment: u8) -> f64 {
    let (a, b, c0, c1) = seg;
    let len = b - a;
    // polynomial in s = α - a: ρ(α)·α^m = Σ q_k s^k
    let q = piece_poly(a, c0, c1, moment);
    let x = len * t;
    let mut acc = 0.0;
    let mut lp = len;
    for (k, qk) in q.iter().enumerate() {
        if *qk != 0.0 {
            acc += qk * lp * fk(k, x);
        }
        lp *= len;
    }
    acc * (a * t).exp()
}

/// Log of the piece integral; `None` when the piece integrates to zero.
fn piece_log_weighted_exp(seg: (f64, f64, f64, f64), t: f64, moment: u8) -> Option<f64> {
    let (a, b, c0, c1) = seg;
    let len = b - a;
    if t <= 0.0 {
        let v = piece_weighted_exp(seg, t, moment);
        return if v > 0.0 { Some(v.ln()) } else { None };
    }
    // anchor at the right endpoint: ∫ = e^{bt} ∫_0^L Q(b-σ) e^{-σt} dσ
    let q = piece_poly(a, c0, c1, moment);
    // rewrite Σ q_k s^k with s = L - σ as Σ p_k σ^k
    let mut p = [0.0f64; 4];
    p[0] = q[0] + q[1] * len + q[2] * len * len + q[3] * len * len * len;
    p[1] = -(q[1] + 2.0 * q[2] * len + 3.0 * q[3] * len * len);
    p[2] = q[2] + 3.0 * q[3] * len;
    p[3] = -q[3];
    let x = -len * t;
    let mut acc = 0.0;
    let mut lp = len;
    for (k, pk) in p.iter().enumerate() {
        if *pk != 0.0 {
            acc += pk * lp * fk(k, x);
        }
        lp *= len;
    }
    if acc > 0.0 {
        Some(b * t + acc.ln())
    } else {
        None
    }
}

/// Coefficients of ρ(α)·α^m in powers of s = α − a (degree ≤ 3).
fn piece_poly(a: f64, c0: f64, c1: f64, moment: u8) -> [f64; 4] {
    // ρ(a+s) = (c0 + c1 a) + c1 s
    let r0 = c0 + c1 * a;
    let r1 = c1;
    match moment {
        0 => [r0, r1, 0.0, 0.0],
        // (a+s)(r0 + r1 s)
        1 => [a * r0, r0 + a * r1, r1, 0.0],
        // (a+s)²(r0 + r1 s)
        _ => [
            a * a * r0,
            2.0 * a * r0 + a * a * r1,
            r0 + 2.0 * a * r1,
            r1,
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_on(a: f64, b: f64) -> IntensityMeasure {
        IntensityMeasure::from_spec(&MeasureSpec {
            atoms: vec![],
            density: Some(DensitySpec {
                breakpoints: vec![a, b],
                values: vec![1.0 / (b - a), 1.0 / (b - a)],
            }),
            quadrature_nodes: 64,
        })
        .unwrap()
    }

    #[test]
    fn dirac_weighted_exp_values() {
        let p = IntensityMeasure::dirac_one();
        assert_eq!(p.weighted_exp(0.0, 0).unwrap(), 1.0);
        for &t in &[-3.0, 0.7, 12.0] {
            assert_eq!(p.weighted_exp(t, 1).unwrap(), t.exp());
        }
    }

    #[test]
    fn uniform_weighted_exp_closed_form() {
        // ∫_0^1 e^α dα = e − 1
        let p = IntensityMeasure::uniform();
        let expected = std::f64::consts::E - 1.0;
        assert!((p.weighted_exp(1.0, 0).unwrap() - expected).abs() < 1e-14);
        // ∫_0^1 α e^{αt} dα = (t e^t − e^t + 1)/t²
        let t: f64 = 7.3;
        let expected1 = (t * t.exp() - t.exp() + 1.0) / (t * t);
        assert!((p.weighted_exp(t, 1).unwrap() - expected1).abs() / expected1 < 1e-14);
    }

    #[test]
    fn log_space_matches_linear_and_survives_blowup_amplitudes() {
        let p = IntensityMeasure::from_spec(&MeasureSpec {
            atoms: vec![AtomSpec {
                alpha: 0.9,
                weight: 0.4,
            }],
            density: Some(DensitySpec {
                breakpoints: vec![0.0, 0.5, 1.0],
                values: vec![0.4, 1.0, 0.0],
            }),
            quadrature_nodes: 64,
        })
        .unwrap();
        for &t in &[-20.0, -0.3, 0.0, 1.0, 55.0, 600.0] {
            for m in [0u8, 1u8] {
                let lin = p.weighted_exp(t, m).unwrap();
                let lg = p.log_weighted_exp(t, m);
                assert!(
                    (lg - lin.ln()).abs() < 1e-11,
                    "t={t} m={m}: {lg} vs {}",
                    lin.ln()
                );
            }
        }
        // far beyond f64 range in linear space
        let lg = p.log_weighted_exp(5000.0, 0);
        assert!(lg > 4000.0 && lg.is_finite());
        assert!(matches!(
            p.weighted_exp(5000.0, 0),
            Err(MeasureError::Overflow { .. })
        ));
    }

    #[test]
    fn moment_ordering_and_exp_bound() {
        let measures = [
            IntensityMeasure::dirac_one(),
            IntensityMeasure::uniform(),
            IntensityMeasure::atoms_only(&[(0.5, 0.5), (1.0, 0.5)]).unwrap(),
        ];
        for p in &measures {
            for &t in &[-8.0, -1.0, 0.0, 0.4, 3.0, 40.0] {
                let m0 = p.weighted_exp(t, 0).unwrap();
                let m1 = p.weighted_exp(t, 1).unwrap();
                assert!(m1 <= m0 * (1.0 + 1e-14));
                assert!(m0 <= t.max(0.0).exp() * (1.0 + 1e-14));
                assert!(m0 > 0.0);
            }
        }
    }

    #[test]
    fn tail_mass_cases() {
        let p = IntensityMeasure::dirac_one();
        assert_eq!(p.tail_mass(0.1), 1.0);
        assert_eq!(p.tail_mass(1.0), 1.0);

        let u = IntensityMeasure::uniform();
        assert!((u.tail_mass(0.25) - 0.25).abs() < 1e-15);
        assert!((u.tail_mass(1.0) - 1.0).abs() < 1e-15);

        let two = IntensityMeasure::atoms_only(&[(0.5, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(two.tail_mass(0.1), 0.5);
        assert_eq!(two.tail_mass(0.6), 1.0);
    }

    #[test]
    fn mass_at_one_cases() {
        assert_eq!(IntensityMeasure::dirac_one().mass_at_one(), 1.0);
        assert_eq!(IntensityMeasure::uniform().mass_at_one(), 0.0);
        let two = IntensityMeasure::atoms_only(&[(0.5, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(two.mass_at_one(), 0.5);
    }

    #[test]
    fn normalize_support_examples() {
        let half = IntensityMeasure::single_atom(0.5).unwrap();
        let (p, l) = half.normalize_support(32.0 * std::f64::consts::PI).unwrap();
        assert_eq!(p.atoms(), &[(1.0, 1.0)]);
        assert!((l - 8.0 * std::f64::consts::PI).abs() < 1e-12);

        let one = IntensityMeasure::dirac_one();
        let (q, l2) = one.normalize_support(3.4).unwrap();
        assert_eq!(q, one);
        assert_eq!(l2, 3.4);

        // uniform on [0, 0.5] with λ = 4 → uniform on [0,1] with λ = 1
        let m = uniform_on(0.0, 0.5);
        let (r, l3) = m.normalize_support(4.0).unwrap();
        assert!((l3 - 1.0).abs() < 1e-14);
        assert!((r.tail_mass(0.5) - 0.5).abs() < 1e-13);
        assert!((r.total_mass() - 1.0).abs() < 1e-13);
        assert_eq!(r.sup_support(), 1.0);
    }

    #[test]
    fn normalize_rejects_mass_at_zero_only() {
        let z = IntensityMeasure::single_atom(0.0).unwrap();
        assert!(matches!(
            z.normalize_support(1.0),
            Err(MeasureError::DegenerateSupport)
        ));
    }

    #[test]
    fn sup_support_ignores_trailing_zero_density() {
        let p = IntensityMeasure::from_spec(&MeasureSpec {
            atoms: vec![AtomSpec {
                alpha: 0.2,
                weight: 0.5,
            }],
            density: Some(DensitySpec {
                breakpoints: vec![0.0, 0.5, 0.6, 1.0],
                values: vec![2.0, 0.0, 0.0, 0.0],
            }),
            quadrature_nodes: 64,
        })
        .unwrap();
        assert_eq!(p.sup_support(), 0.5);
    }

    #[test]
    fn coincident_atoms_merge() {
        let p = IntensityMeasure::atoms_only(&[(0.5, 0.25), (0.5, 0.25), (1.0, 0.5)]).unwrap();
        assert_eq!(p.atoms(), &[(0.5, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn constructor_rejects_bad_mass() {
        let r = IntensityMeasure::atoms_only(&[(1.0, 0.9)]);
        assert!(matches!(r, Err(MeasureError::MassNotNormalized(_))));
    }

    #[test]
    fn trapezoid_refinement_is_second_order() {
        let p = IntensityMeasure::uniform();
        let exact = std::f64::consts::E - 1.0;
        let e64 = (p.integrate_density_quadrature_n(65, |a| a.exp()) - exact).abs();
        let e128 = (p.integrate_density_quadrature_n(129, |a| a.exp()) - exact).abs();
        let ratio = e64 / e128;
        assert!(
            (3.3..5.0).contains(&ratio),
            "refinement ratio {ratio} not near 4"
        );
    }

    #[test]
    fn weighted_exp_convex_in_t() {
        let p = IntensityMeasure::from_spec(&MeasureSpec {
            atoms: vec![AtomSpec {
                alpha: 0.7,
                weight: 0.3,
            }],
            density: Some(DensitySpec {
                breakpoints: vec![0.2, 1.0],
                values: vec![0.875, 0.875],
            }),
            quadrature_nodes: 64,
        })
        .unwrap();
        let h = 0.25;
        for i in -20..20 {
            let t = i as f64 * 0.5;
            let second = p.weighted_exp(t + h, 0).unwrap() - 2.0 * p.weighted_exp(t, 0).unwrap()
                + p.weighted_exp(t - h, 0).unwrap();
            assert!(second >= -1e-9, "second difference {second} at t={t}");
        }
    }
}
