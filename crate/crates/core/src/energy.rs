//! The variational energy
//!
//! ```text
//!   J_λ(u) = ½ ∫|∇u|² − λ log ∬ e^{αu} P(dα) dx
//! ```
//!
//! together with its exponential-integrability diagnostics: the inequality
//! gap at coefficient 1/16π against a calibrated constant, and the
//! multi-region improvement where distributed mass lowers the coefficient
//! to 1/(16(ℓ+1)π − ε).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DiscreteDomain, DomainError, Field};
use crate::measure::{IntensityMeasure, LOG_SPACE_THRESHOLD};
use crate::numeric::logsumexp;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("need at least two regions, got {0}")]
    TooFewRegions(usize),
    #[error("regions {0} and {1} are not disjoint")]
    OverlappingRegions(usize, usize),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// ∫|∇u|² by forward differences on cell edges, with cut boundary arms
/// weighted by their fractional length.
///
/// This quadrature is exactly ⟨−Δu, u⟩h² for the domain's Laplacian, so
/// discrete integration by parts holds to machine precision.
pub fn dirichlet_energy(domain: &DiscreteDomain, u: &Field) -> f64 {
    domain.check_field(u).expect("field matches domain");
    let mut acc = 0.0;
    for i in 0..domain.num_cells() {
        let ui = u.values[i];
        let nbrs = domain.neighbors_of(i);
        let thetas = domain.thetas_of(i);
        for d in 0..4 {
            if nbrs[d] == u32::MAX {
                acc += ui * ui / thetas[d];
            } else if d == 0 || d == 2 {
                let diff = ui - u.values[nbrs[d] as usize];
                acc += diff * diff;
            }
        }
    }
    acc
}

/// log ∬ e^{αu} P(dα) dx, evaluated in log space beyond the overflow
/// threshold.
pub fn log_mass(domain: &DiscreteDomain, u: &Field, measure: &IntensityMeasure) -> f64 {
    domain.check_field(u).expect("field matches domain");
    let h2 = domain.h() * domain.h();
    if u.max() <= LOG_SPACE_THRESHOLD {
        let total: f64 = u
            .values
            .iter()
            .map(|&t| measure.weighted_exp(t, 0).unwrap())
            .sum();
        (total * h2).ln()
    } else {
        let logs: Vec<f64> = u
            .values
            .iter()
            .map(|&t| measure.log_weighted_exp(t, 0))
            .collect();
        logsumexp(&logs) + h2.ln()
    }
}

/// J_λ(u) = ½·dirichlet_energy − λ·log_mass.
pub fn j_lambda(
    domain: &DiscreteDomain,
    u: &Field,
    lambda: f64,
    measure: &IntensityMeasure,
) -> f64 {
    0.5 * dirichlet_energy(domain, u) - lambda * log_mass(domain, u, measure)
}

/// Slack in `log ∬ e^{αu} ≤ ∫|∇u|²/16π + log C` for a given constant:
/// returns the left-over `∫|∇u|²/16π + log C − log ∬ e^{αu}`.
pub fn mt_gap(
    domain: &DiscreteDomain,
    u: &Field,
    measure: &IntensityMeasure,
    log_c: f64,
) -> f64 {
    dirichlet_energy(domain, u) / (16.0 * std::f64::consts::PI) + log_c
        - log_mass(domain, u, measure)
}

/// Random smooth test field: low Fourier modes on the bounding box with
/// amplitude-weighted coefficients.
pub fn random_smooth_field<R: Rng>(
    domain: &DiscreteDomain,
    rng: &mut R,
    max_mode: usize,
    amplitude: f64,
) -> Field {
    let (x0, y0) = domain.bbox_origin();
    let (nx, ny) = domain.grid_shape();
    let w = nx as f64 * domain.h();
    let hgt = ny as f64 * domain.h();
    let mut coeffs = Vec::with_capacity(max_mode * max_mode);
    for k in 1..=max_mode {
        for l in 1..=max_mode {
            let a: f64 = rng.gen_range(-1.0..1.0);
            coeffs.push((k as f64, l as f64, a * amplitude / (k + l) as f64));
        }
    }
    Field::from_fn(domain, |x, y| {
        let sx = (x - x0) / w;
        let sy = (y - y0) / hgt;
        coeffs
            .iter()
            .map(|&(k, l, a)| {
                a * (k * std::f64::consts::PI * sx).sin() * (l * std::f64::consts::PI * sy).sin()
            })
            .sum()
    })
}

/// Calibrate the empirical constant of [`mt_gap`] on a random corpus plus
/// the concentrating-profile ladder for the domain; returns log C with the
/// requested headroom.
pub fn calibrate_mt_log_constant(
    domain: &DiscreteDomain,
    measure: &IntensityMeasure,
    seed: u64,
    n_fields: usize,
    margin: f64,
) -> f64 {
    let inv = 1.0 / (16.0 * std::f64::consts::PI);
    let mut worst = domain.area().ln(); // u ≡ 0
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_fields {
        let amp = rng.gen_range(0.5..5.0);
        let u = random_smooth_field(domain, &mut rng, 8, amp);
        let v = log_mass(domain, &u, measure) - inv * dirichlet_energy(domain, &u);
        worst = worst.max(v);
    }
    // concentrating profiles near the sharp constant
    let (cx, cy, r0) = widest_ball(domain);
    let mut eps = r0 / 2.0;
    while eps >= 4.0 * domain.h() {
        let u = liouville_cutoff_field(domain, [cx, cy], r0, eps);
        let v = log_mass(domain, &u, measure) - inv * dirichlet_energy(domain, &u);
        worst = worst.max(v);
        eps *= 0.5;
    }
    worst + margin
}

/// Center and radius of a large interior ball (around the cell farthest
/// from the boundary).
pub fn widest_ball(domain: &DiscreteDomain) -> (f64, f64, f64) {
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..domain.num_cells() {
        let (x, y) = domain.cell_center(i);
        let d = domain.spec().boundary_distance(x, y);
        if d > best.2 {
            best = (x, y, d);
        }
    }
    (best.0, best.1, best.2 * 0.9)
}

/// Compactly supported concentrating profile
/// `log ((ε²+r0²)² / (ε²+|x−c|²)²)` inside B_{r0}(c), zero outside.
pub fn liouville_cutoff_field(
    domain: &DiscreteDomain,
    center: [f64; 2],
    r0: f64,
    eps: f64,
) -> Field {
    Field::from_fn(domain, |x, y| {
        let d2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
        if d2 < r0 * r0 {
            ((eps * eps + r0 * r0).powi(2) / (eps * eps + d2).powi(2)).ln()
        } else {
            0.0
        }
    })
}

/// Circular test region for the multi-region inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionSpec {
    pub center: [f64; 2],
    pub radius: f64,
}

impl RegionSpec {
    fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.center[0]).powi(2) + (y - self.center[1]).powi(2) <= self.radius * self.radius
    }
}

/// Outcome of the multi-region mass-distribution check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImprovedMtReport {
    /// relative exponential mass carried by each region
    pub relative_mass: Vec<f64>,
    /// min distance between regions
    pub separation: f64,
    /// whether every region carries at least `a0`
    pub hypothesis_holds: bool,
    /// log∬e^{αu} − ∫|∇u|²/(16(ℓ+1)π − ε); only meaningful under the
    /// hypothesis
    pub k_constant: f64,
    pub a0: f64,
    pub eps: f64,
}

/// Evaluate the improved-coefficient inequality data for `u` on the given
/// disjoint regions (ℓ+1 = regions.len()).
pub fn improved_mt_check(
    domain: &DiscreteDomain,
    u: &Field,
    measure: &IntensityMeasure,
    regions: &[RegionSpec],
    a0: f64,
    eps: f64,
) -> Result<ImprovedMtReport, EnergyError> {
    if regions.len() < 2 {
        return Err(EnergyError::TooFewRegions(regions.len()));
    }
    let mut separation = f64::INFINITY;
    for i in 0..regions.len() {
        for j in i + 1..regions.len() {
            let d = ((regions[i].center[0] - regions[j].center[0]).powi(2)
                + (regions[i].center[1] - regions[j].center[1]).powi(2))
            .sqrt()
                - regions[i].radius
                - regions[j].radius;
            if d <= 0.0 {
                return Err(EnergyError::OverlappingRegions(i, j));
            }
            separation = separation.min(d);
        }
    }
    domain.check_field(u)?;
    let mut region_mass = vec![0.0f64; regions.len()];
    let mut total = 0.0f64;
    for i in 0..domain.num_cells() {
        let q = measure.weighted_exp(u.values[i], 0).unwrap();
        total += q;
        let (x, y) = domain.cell_center(i);
        for (r, spec) in regions.iter().enumerate() {
            if spec.contains(x, y) {
                region_mass[r] += q;
                break;
            }
        }
    }
    let relative_mass: Vec<f64> = region_mass.iter().map(|m| m / total).collect();
    let hypothesis_holds = relative_mass.iter().all(|m| *m >= a0);
    let ell_plus_1 = regions.len() as f64;
    let coeff = 1.0 / (16.0 * ell_plus_1 * std::f64::consts::PI - eps);
    let k_constant = log_mass(domain, u, measure) - coeff * dirichlet_energy(domain, u);
    Ok(ImprovedMtReport {
        relative_mass,
        separation,
        hypothesis_holds,
        k_constant,
        a0,
        eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use crate::solver::{newton_solve, SolveConfig};
    use std::f64::consts::PI;

    fn square(h: f64) -> DiscreteDomain {
        DiscreteDomain::build(&DomainSpec::unit_square(h)).unwrap()
    }

    #[test]
    fn energy_zero_and_quadratic_scaling() {
        let d = square(1.0 / 32.0);
        assert_eq!(dirichlet_energy(&d, &Field::zeros(&d)), 0.0);
        let u = Field::from_fn(&d, |x, y| x * (1.0 - x) * y);
        let e1 = dirichlet_energy(&d, &u);
        let e2 = dirichlet_energy(&d, &u.scale(2.0));
        assert!(e1 > 0.0);
        assert!((e2 - 4.0 * e1).abs() < 1e-9 * e1);
    }

    #[test]
    fn energy_of_sine_product() {
        // ∫|∇(sin πx sin πy)|² over the unit square = π²/2
        let d = square(1.0 / 64.0);
        let u = Field::from_fn(&d, |x, y| (PI * x).sin() * (PI * y).sin());
        let e = dirichlet_energy(&d, &u);
        let exact = PI * PI / 2.0;
        assert!(
            (e - exact).abs() < 0.02 * exact,
            "energy {e} vs exact {exact}"
        );
    }

    #[test]
    fn integration_by_parts_is_exact() {
        let d = DiscreteDomain::build(&DomainSpec::unit_disk(1.0 / 24.0)).unwrap();
        let u = Field::from_fn(&d, |x, y| (2.0 * x).sin() * y + 0.2 * x);
        let au = d.laplacian_apply(&u).unwrap();
        let h2 = d.h() * d.h();
        let quad: f64 = au
            .values
            .iter()
            .zip(&u.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * h2;
        let e = dirichlet_energy(&d, &u);
        assert!((quad - e).abs() <= 1e-9 * e.max(1.0), "{quad} vs {e}");
    }

    #[test]
    fn energy_gradient_matches_laplacian_by_finite_differences() {
        let d = square(1.0 / 12.0);
        let u = Field::from_fn(&d, |x, y| x * y * (1.0 - x));
        let au = d.laplacian_apply(&u).unwrap();
        let h2 = d.h() * d.h();
        let eps = 1e-6;
        for &i in &[0usize, d.num_cells() / 2, d.num_cells() - 1] {
            let mut up = u.clone();
            up.values[i] += eps;
            let mut um = u.clone();
            um.values[i] -= eps;
            let fd = (dirichlet_energy(&d, &up) - dirichlet_energy(&d, &um)) / (2.0 * eps);
            let analytic = 2.0 * h2 * au.values[i];
            assert!(
                (fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0),
                "dE/du_{i}: fd {fd} vs {analytic}"
            );
        }
    }

    #[test]
    fn j_lambda_at_zero_field() {
        let d = square(1.0 / 32.0);
        let p = IntensityMeasure::dirac_one();
        let lambda = 3.7;
        let j = j_lambda(&d, &Field::zeros(&d), lambda, &p);
        assert!((j - (-lambda * d.area().ln())).abs() < 1e-12);
        // unit square has unit area: J vanishes for every λ
        let j8 = j_lambda(&d, &Field::zeros(&d), 8.0 * PI, &p);
        assert!(j8.abs() < 1e-10, "J at zero field on unit square: {j8}");
    }

    #[test]
    fn j_lambda_reconstructs_from_parts_and_is_affine_in_lambda() {
        let d = square(1.0 / 24.0);
        let p = IntensityMeasure::uniform();
        let u = Field::from_fn(&d, |x, y| (2.0 * PI * x).sin() * y * 2.0);
        for lambda in [0.5, 2.0, 11.0] {
            let j = j_lambda(&d, &u, lambda, &p);
            let rebuilt = 0.5 * dirichlet_energy(&d, &u) - lambda * log_mass(&d, &u, &p);
            assert!((j - rebuilt).abs() <= 1e-12 * j.abs().max(1.0));
        }
        let lm = log_mass(&d, &u, &p);
        let j1 = j_lambda(&d, &u, 1.0, &p);
        let j2 = j_lambda(&d, &u, 2.0, &p);
        assert!(((j2 - j1) - (-lm)).abs() < 1e-10);
        if lm > 0.0 {
            assert!(j2 < j1);
        }
    }

    #[test]
    fn j_gradient_vanishes_at_converged_solution() {
        let d = DiscreteDomain::build(&DomainSpec::unit_disk(1.0 / 24.0)).unwrap();
        let p = IntensityMeasure::dirac_one();
        let cfg = SolveConfig::default();
        let r = newton_solve(&d, &Field::zeros(&d), 5.0, &p, &cfg).unwrap();
        // dJ/du_i = h²(−Δu − λ∫αe^{αu}P/𝓘)_i, assembled from this module's
        // own quantities
        let h2 = d.h() * d.h();
        let au = d.laplacian_apply(&r.u).unwrap();
        let mass = log_mass(&d, &r.u, &p).exp();
        let mut worst = 0.0f64;
        for i in 0..d.num_cells() {
            let g = p.weighted_exp(r.u.values[i], 1).unwrap();
            let grad = h2 * (au.values[i] - r.lambda * g / mass);
            worst = worst.max(grad.abs());
        }
        assert!(worst <= 10.0 * cfg.tol * h2, "gradient sup {worst}");
    }

    #[test]
    fn mt_gap_nonnegative_with_area_constant_at_zero_field() {
        let d = square(1.0 / 32.0);
        let p = IntensityMeasure::dirac_one();
        let gap = mt_gap(&d, &Field::zeros(&d), &p, d.area().ln());
        assert!(gap.abs() < 1e-12);
        let gap2 = mt_gap(&d, &Field::zeros(&d), &p, d.area().ln() + 1.0);
        assert!((gap2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibrated_gap_covers_held_out_corpus() {
        let d = square(1.0 / 32.0);
        let p = IntensityMeasure::dirac_one();
        let log_c = calibrate_mt_log_constant(&d, &p, 11, 60, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut min_gap = f64::INFINITY;
        for _ in 0..120 {
            let amp = rng.gen_range(0.5..5.0);
            let u = random_smooth_field(&d, &mut rng, 8, amp);
            min_gap = min_gap.min(mt_gap(&d, &u, &p, log_c));
        }
        assert!(min_gap >= 0.0, "held-out min gap {min_gap}");
    }

    #[test]
    fn improved_check_zero_field_two_regions() {
        let d = square(1.0 / 32.0);
        let p = IntensityMeasure::dirac_one();
        let regions = vec![
            RegionSpec {
                center: [0.25, 0.5],
                radius: 0.15,
            },
            RegionSpec {
                center: [0.75, 0.5],
                radius: 0.15,
            },
        ];
        let area_fraction = PI * 0.15 * 0.15 / d.area();
        let rep = improved_mt_check(&d, &Field::zeros(&d), &p, &regions, 0.9 * area_fraction, 1.0)
            .unwrap();
        assert!(rep.hypothesis_holds);
        assert!((rep.k_constant - d.area().ln()).abs() < 1e-12);
    }

    #[test]
    fn improved_check_flags_one_sided_concentration() {
        let d = square(1.0 / 48.0);
        let p = IntensityMeasure::dirac_one();
        let u = liouville_cutoff_field(&d, [0.25, 0.5], 0.15, 0.02);
        let regions = vec![
            RegionSpec {
                center: [0.25, 0.5],
                radius: 0.18,
            },
            RegionSpec {
                center: [0.75, 0.5],
                radius: 0.18,
            },
        ];
        let rep = improved_mt_check(&d, &u, &p, &regions, 0.3, 1.0).unwrap();
        assert!(!rep.hypothesis_holds, "mass: {:?}", rep.relative_mass);
        assert!(rep.relative_mass[0] > 0.5);
        assert!(rep.relative_mass[1] < 0.3);
    }

    #[test]
    fn improved_check_rejects_overlap() {
        let d = square(1.0 / 16.0);
        let p = IntensityMeasure::dirac_one();
        let regions = vec![
            RegionSpec {
                center: [0.4, 0.5],
                radius: 0.2,
            },
            RegionSpec {
                center: [0.6, 0.5],
                radius: 0.2,
            },
        ];
        assert!(matches!(
            improved_mt_check(&d, &Field::zeros(&d), &p, &regions, 0.1, 1.0),
            Err(EnergyError::OverlappingRegions(0, 1))
        ));
    }
}
