//! Newton solver for the mean field problem and continuation in λ.
//!
//! The residual is F(u) = −Δu − N(u) with
//!
//! ```text
//!   N(u) = λ ∫ α e^{αu} P(dα) / 𝓘(u),    𝓘(u) = ∬ e^{αu} P(dα) dx.
//! ```
//!
//! The Jacobian splits into a banded part A = −Δ − D (D the local term
//! λ∫α²e^{αu}P/𝓘) plus the positive rank-one coupling from the
//! denominator, λh²·ĝĝᵀ with ĝ = ∫αe^{αu}P/𝓘. A is factored directly and
//! the rank-one handled by the Sherman–Morrison identity, so each Newton
//! step costs one banded factorization and two backsolves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DiscreteDomain, DomainError, Field};
use crate::measure::{IntensityMeasure, LOG_SPACE_THRESHOLD};
use crate::numeric::logsumexp;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("newton did not converge in {iterations} iterations (residual {residual:.3e})")]
    Nonconverged {
        residual: f64,
        iterations: usize,
        best: Box<SolveResult>,
    },
    #[error("newton diverged: residual grew for {0} consecutive damped steps")]
    Diverged(usize),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("lambda range is empty: {0} >= {1}")]
    EmptyRange(f64, f64),
}

/// Newton and continuation tuning knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    /// residual sup-norm target
    pub tol: f64,
    pub max_iter: usize,
    /// smallest damping factor tried in the line search
    pub min_damping: f64,
    /// initial continuation step Δλ
    pub delta_lambda: f64,
    /// step shrink factor applied on failure or fast amplitude growth
    pub shrink: f64,
    /// continuation stops when Δλ falls below this
    pub min_step: f64,
    /// shrink the step when ‖u‖∞ grows by more than this between entries
    pub amplitude_step_limit: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-10,
            max_iter: 50,
            min_damping: (2.0f64).powi(-20),
            delta_lambda: 0.5,
            shrink: 0.5,
            min_step: 1e-6,
            amplitude_step_limit: 1.0,
        }
    }
}

/// Converged solution with its diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: Field,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
    /// 𝓘 = ∬ e^{αu} P(dα) dx (∞ if it overflows linear space)
    pub denominator: f64,
    /// log 𝓘, always finite
    pub log_denominator: f64,
    /// total vortex mass ν(Ω) = λ ∬ α e^{αu} P / 𝓘
    pub vortex_mass: f64,
    pub max_u: f64,
    pub max_location: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    ReachedEnd,
    MinStep { last_good_lambda: f64 },
}

/// Solutions along an increasing λ sweep.
pub struct ContinuationBranch {
    pub entries: Vec<SolveResult>,
    pub terminated: Termination,
}

/// Pointwise nonlinearity data at a given state.
pub(crate) struct NonlinearEval {
    /// N(u) = λ ĝ
    pub n: Vec<f64>,
    /// local Jacobian diagonal λ ∫α²e^{αu}P / 𝓘
    pub d: Vec<f64>,
    /// ĝ = ∫αe^{αu}P / 𝓘
    pub ghat: Vec<f64>,
    pub log_i: f64,
    pub i_lin: f64,
}

pub(crate) fn evaluate_nonlinearity(
    domain: &DiscreteDomain,
    u: &Field,
    lambda: f64,
    measure: &IntensityMeasure,
) -> NonlinearEval {
    let n_cells = domain.num_cells();
    let h2 = domain.h() * domain.h();
    let linear_ok = u.max() <= LOG_SPACE_THRESHOLD;
    if linear_ok {
        let mut q = vec![0.0; n_cells];
        let mut g = vec![0.0; n_cells];
        let mut m2 = vec![0.0; n_cells];
        for i in 0..n_cells {
            let t = u.values[i];
            q[i] = measure.moment_exp(t, 0).unwrap();
            g[i] = measure.moment_exp(t, 1).unwrap();
            m2[i] = measure.moment_exp(t, 2).unwrap();
        }
        let i_lin: f64 = q.iter().sum::<f64>() * h2;
        let ghat: Vec<f64> = g.iter().map(|v| v / i_lin).collect();
        let n = ghat.iter().map(|v| lambda * v).collect();
        let d = m2.iter().map(|v| lambda * v / i_lin).collect();
        NonlinearEval {
            n,
            d,
            ghat,
            log_i: i_lin.ln(),
            i_lin,
        }
    } else {
        let log_q: Vec<f64> = (0..n_cells)
            .map(|i| measure.log_moment_exp(u.values[i], 0))
            .collect();
        let log_i = logsumexp(&log_q) + h2.ln();
        let mut ghat = vec![0.0; n_cells];
        let mut d = vec![0.0; n_cells];
        for i in 0..n_cells {
            let t = u.values[i];
            ghat[i] = (measure.log_moment_exp(t, 1) - log_i).exp();
            d[i] = lambda * (measure.log_moment_exp(t, 2) - log_i).exp();
        }
        let n = ghat.iter().map(|v| lambda * v).collect();
        NonlinearEval {
            n,
            d,
            ghat,
            log_i,
            i_lin: log_i.exp(),
        }
    }
}

/// Right-hand side of the equation at state `u`: λ∫αe^{αu}P / 𝓘, as a field.
pub fn nonlinearity(
    domain: &DiscreteDomain,
    u: &Field,
    lambda: f64,
    measure: &IntensityMeasure,
) -> Result<Field, DomainError> {
    domain.check_field(u)?;
    let eval = evaluate_nonlinearity(domain, u, lambda, measure);
    Ok(Field { values: eval.n })
}

fn residual(
    domain: &DiscreteDomain,
    u: &Field,
    nonlin: &[f64],
) -> Result<(Field, f64), DomainError> {
    let mut lap = domain.laplacian_apply(u)?;
    let mut sup = 0.0f64;
    for (i, v) in lap.values.iter_mut().enumerate() {
        *v -= nonlin[i];
        sup = sup.max(v.abs());
    }
    Ok((lap, sup))
}

fn make_result(
    domain: &DiscreteDomain,
    u: Field,
    lambda: f64,
    res: f64,
    iterations: usize,
    eval: &NonlinearEval,
) -> SolveResult {
    let h2 = domain.h() * domain.h();
    let vortex_mass = lambda * eval.ghat.iter().sum::<f64>() * h2;
    let imax = u.argmax();
    let (mx, my) = domain.cell_center(imax);
    SolveResult {
        max_u: u.values[imax],
        max_location: [mx, my],
        u,
        lambda,
        residual: res,
        iterations,
        denominator: eval.i_lin,
        log_denominator: eval.log_i,
        vortex_mass,
    }
}

/// Damped Newton iteration from `u0`.
pub fn newton_solve(
    domain: &DiscreteDomain,
    u0: &Field,
    lambda: f64,
    measure: &IntensityMeasure,
    config: &SolveConfig,
) -> Result<SolveResult, SolveError> {
    domain.check_field(u0)?;
    let h2 = domain.h() * domain.h();
    let mut u = u0.clone();
    let mut eval = evaluate_nonlinearity(domain, &u, lambda, measure);
    let (mut f, mut res) = residual(domain, &u, &eval.n)?;
    let mut growth_streak = 0usize;
    for it in 0..config.max_iter {
        if res <= config.tol {
            return Ok(make_result(domain, u, lambda, res, it, &eval));
        }
        // banded part A = −Δ − D
        let neg_d: Vec<f64> = eval.d.iter().map(|v| -v).collect();
        let factor = domain
            .assemble_shifted_laplacian(&neg_d)
            .factor()
            .map_err(DomainError::from)?;
        // Sherman–Morrison for J = A + λh² ĝĝᵀ
        let mut y: Vec<f64> = f.values.iter().map(|v| -v).collect();
        factor.solve_in_place(&mut y);
        let z = factor.solve(&eval.ghat);
        let c = lambda * h2;
        let gy: f64 = eval.ghat.iter().zip(&y).map(|(a, b)| a * b).sum();
        let gz: f64 = eval.ghat.iter().zip(&z).map(|(a, b)| a * b).sum();
        let denom = 1.0 + c * gz;
        let coef = c * gy / denom;
        let step: Vec<f64> = y.iter().zip(&z).map(|(yi, zi)| yi - coef * zi).collect();

        // line search: first damping that decreases the residual
        let mut alpha = 1.0;
        let mut accepted: Option<(Field, NonlinearEval, Field, f64)> = None;
        let mut fallback: Option<(Field, NonlinearEval, Field, f64, f64)> = None;
        while alpha >= config.min_damping {
            let mut cand = u.clone();
            for (v, s) in cand.values.iter_mut().zip(&step) {
                *v += alpha * s;
            }
            let cand_eval = evaluate_nonlinearity(domain, &cand, lambda, measure);
            let (cf, cres) = residual(domain, &cand, &cand_eval.n)?;
            if cres < res {
                accepted = Some((cand, cand_eval, cf, cres));
                break;
            }
            if fallback.as_ref().map_or(true, |f| cres < f.3) {
                fallback = Some((cand, cand_eval, cf, cres, alpha));
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((cu, ce, cf, cres)) => {
                u = cu;
                eval = ce;
                f = cf;
                res = cres;
                growth_streak = 0;
            }
            None => {
                // no damping decreased the residual: accept the least bad
                // step and track the growth streak
                let (cu, ce, cf, cres, _) = fallback.expect("line search tried at least one step");
                u = cu;
                eval = ce;
                f = cf;
                res = cres;
                growth_streak += 1;
                if growth_streak >= 5 {
                    return Err(SolveError::Diverged(growth_streak));
                }
            }
        }
    }
    if res <= config.tol {
        let its = config.max_iter;
        return Ok(make_result(domain, u, lambda, res, its, &eval));
    }
    let best = make_result(domain, u, lambda, res, config.max_iter, &eval);
    Err(SolveError::Nonconverged {
        residual: res,
        iterations: config.max_iter,
        best: Box::new(best),
    })
}

/// Sweep λ upward from `lambda_start` to `lambda_end`, warm-starting each
/// solve from the previous solution. The step shrinks on Newton failure
/// and on fast amplitude growth; the branch terminates with a flag when
/// the step underflows `min_step`.
pub fn continue_lambda(
    domain: &DiscreteDomain,
    measure: &IntensityMeasure,
    lambda_start: f64,
    lambda_end: f64,
    config: &SolveConfig,
) -> Result<ContinuationBranch, SolveError> {
    if !(lambda_start < lambda_end) {
        return Err(SolveError::EmptyRange(lambda_start, lambda_end));
    }
    let mut entries: Vec<SolveResult> = Vec::new();
    let first = newton_solve(domain, &Field::zeros(domain), lambda_start, measure, config)?;
    let mut u = first.u.clone();
    let mut prev_max = first.max_u;
    let mut lambda = lambda_start;
    entries.push(first);
    let mut step = config.delta_lambda;
    let terminated = loop {
        if lambda >= lambda_end - 1e-14 {
            break Termination::ReachedEnd;
        }
        let next = (lambda + step).min(lambda_end);
        match newton_solve(domain, &u, next, measure, config) {
            Ok(r) => {
                if r.max_u - prev_max > config.amplitude_step_limit {
                    step = (step * config.shrink).max(config.min_step);
                }
                u = r.u.clone();
                prev_max = r.max_u;
                lambda = next;
                entries.push(r);
            }
            Err(SolveError::Domain(e)) => return Err(SolveError::Domain(e)),
            Err(_) => {
                step *= config.shrink;
                if step < config.min_step {
                    break Termination::MinStep {
                        last_good_lambda: lambda,
                    };
                }
            }
        }
    };
    Ok(ContinuationBranch {
        entries,
        terminated,
    })
}

/// Transfer a field between grids by bilinear interpolation; used to warm
/// start fine-grid solves from coarse solutions.
pub fn interpolate_field(
    coarse: &DiscreteDomain,
    field: &Field,
    fine: &DiscreteDomain,
) -> Field {
    Field::from_fn(fine, |x, y| coarse.interpolate(field, x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DomainSpec;
    use std::f64::consts::PI;

    fn disk(h: f64) -> DiscreteDomain {
        DiscreteDomain::build(&DomainSpec::unit_disk(h)).unwrap()
    }

    #[test]
    fn nonlinearity_constant_at_zero_field() {
        let d = disk(1.0 / 24.0);
        let u = Field::zeros(&d);
        let lambda = 3.0;
        let p = IntensityMeasure::dirac_one();
        let n = nonlinearity(&d, &u, lambda, &p).unwrap();
        let expected = lambda / d.area();
        for v in &n.values {
            assert!((v - expected).abs() < 1e-13);
        }
        // with mean intensity m₁ the constant is λ·m₁/|Ω|
        let q = IntensityMeasure::uniform();
        let nq = nonlinearity(&d, &u, lambda, &q).unwrap();
        let expected_q = lambda * q.mean_alpha() / d.area();
        for v in &nq.values {
            assert!((v - expected_q).abs() < 1e-13);
        }
    }

    #[test]
    fn nonlinearity_total_is_lambda_for_unit_atom() {
        let d = disk(1.0 / 24.0);
        let u = Field::from_fn(&d, |x, y| (1.0 - x * x - y * y) * 2.0);
        let p = IntensityMeasure::dirac_one();
        let n = nonlinearity(&d, &u, 9.0, &p).unwrap();
        let total: f64 = n.values.iter().sum::<f64>() * d.h() * d.h();
        assert!((total - 9.0).abs() < 1e-8);
    }

    #[test]
    fn dirac_one_path_is_bitwise_standard() {
        let d = disk(1.0 / 20.0);
        let u = Field::from_fn(&d, |x, y| (x + 0.3 * y).sin().abs());
        let p = IntensityMeasure::dirac_one();
        let lambda = 5.5;
        let n = nonlinearity(&d, &u, lambda, &p).unwrap();
        let h2 = d.h() * d.h();
        let denom: f64 = u.values.iter().map(|t| t.exp()).sum::<f64>() * h2;
        for (i, t) in u.values.iter().enumerate() {
            let standard = lambda * (t.exp() / denom);
            assert_eq!(n.values[i], standard, "cell {i} differs");
        }
    }

    #[test]
    fn lambda_zero_converges_immediately_to_zero() {
        let d = disk(1.0 / 16.0);
        let p = IntensityMeasure::dirac_one();
        let r = newton_solve(&d, &Field::zeros(&d), 0.0, &p, &SolveConfig::default()).unwrap();
        assert_eq!(r.u.sup_norm(), 0.0);
        assert!(r.iterations <= 1);
        assert!(r.residual <= 1e-15);
    }

    #[test]
    fn small_lambda_amplitude_is_linear_in_lambda() {
        let d = disk(1.0 / 24.0);
        let p = IntensityMeasure::dirac_one();
        let cfg = SolveConfig::default();
        let r1 = newton_solve(&d, &Field::zeros(&d), 0.01, &p, &cfg).unwrap();
        let r2 = newton_solve(&d, &Field::zeros(&d), 0.02, &p, &cfg).unwrap();
        let ratio = r2.u.sup_norm() / r1.u.sup_norm();
        assert!((ratio - 2.0).abs() < 0.05, "amplitude ratio {ratio}");
        assert!(r1.u.sup_norm() < 0.01);
    }

    #[test]
    fn converged_solution_invariants() {
        let d = disk(1.0 / 48.0);
        let p = IntensityMeasure::atoms_only(&[(0.6, 0.5), (1.0, 0.5)]).unwrap();
        let lambda = 6.0;
        let r = newton_solve(&d, &Field::zeros(&d), lambda, &p, &SolveConfig::default()).unwrap();
        assert!(r.residual <= 1e-10);
        assert!(r.u.min() >= -1e-10, "maximum principle: {}", r.u.min());
        assert!(r.vortex_mass <= lambda + 1e-8);
        assert!(r.denominator >= d.area() - 1e-8);
    }

    #[test]
    fn disk_solution_at_four_pi_matches_radial_closed_form() {
        // u(r) = 2 log(2/(1+r²)) solves the unit-intensity problem at λ = 4π
        let d = disk(1.0 / 64.0);
        let p = IntensityMeasure::dirac_one();
        let r = newton_solve(
            &d,
            &Field::zeros(&d),
            4.0 * PI,
            &p,
            &SolveConfig::default(),
        )
        .unwrap();
        let exact = Field::from_fn(&d, |x, y| 2.0 * (2.0 / (1.0 + x * x + y * y)).ln());
        let mut err = 0.0f64;
        for i in 0..d.num_cells() {
            err = err.max((r.u.values[i] - exact.values[i]).abs());
        }
        assert!(err < 2e-3, "sup error vs closed form {err}");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let d = disk(1.0 / 12.0);
        let p = IntensityMeasure::atoms_only(&[(0.4, 0.3), (1.0, 0.7)]).unwrap();
        let lambda = 2.5;
        let u = Field::from_fn(&d, |x, y| 0.5 * (2.0 * x).cos() * (y).sin() + 0.3);
        let v = Field::from_fn(&d, |x, y| (3.0 * x - y).sin());
        let h2 = d.h() * d.h();
        let eval = evaluate_nonlinearity(&d, &u, lambda, &p);
        // J v = −Δv − D v + λh² ĝ (ĝ·v)
        let lap_v = d.laplacian_apply(&v).unwrap();
        let gv: f64 = eval.ghat.iter().zip(&v.values).map(|(a, b)| a * b).sum();
        let jv: Vec<f64> = (0..d.num_cells())
            .map(|i| lap_v.values[i] - eval.d[i] * v.values[i] + lambda * h2 * eval.ghat[i] * gv)
            .collect();
        // central differences of F(u) = −Δu − N(u)
        let eps = 1e-6;
        let mut up = u.clone();
        up.axpy(eps, &v);
        let mut um = u.clone();
        um.axpy(-eps, &v);
        let fp = {
            let e = evaluate_nonlinearity(&d, &up, lambda, &p);
            residual(&d, &up, &e.n).unwrap().0
        };
        let fm = {
            let e = evaluate_nonlinearity(&d, &um, lambda, &p);
            residual(&d, &um, &e.n).unwrap().0
        };
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..d.num_cells() {
            let fd = (fp.values[i] - fm.values[i]) / (2.0 * eps);
            worst = worst.max((fd - jv[i]).abs());
            scale = scale.max(jv[i].abs());
        }
        assert!(
            worst <= 1e-5 * scale.max(1.0),
            "jacobian mismatch {worst} at scale {scale}"
        );
    }

    #[test]
    fn radial_data_stays_radial() {
        let d = disk(1.0 / 32.0);
        let p = IntensityMeasure::dirac_one();
        let r = newton_solve(&d, &Field::zeros(&d), 8.0, &p, &SolveConfig::default()).unwrap();
        // group cells by radius and look at the orbit spread
        let mut orbits: std::collections::BTreeMap<i64, (f64, f64)> = Default::default();
        for i in 0..d.num_cells() {
            let (x, y) = d.cell_center(i);
            let key = ((x * x + y * y).sqrt() / 1e-9).round() as i64;
            let e = orbits.entry(key).or_insert((f64::INFINITY, f64::NEG_INFINITY));
            e.0 = e.0.min(r.u.values[i]);
            e.1 = e.1.max(r.u.values[i]);
        }
        let spread = orbits
            .values()
            .map(|(lo, hi)| hi - lo)
            .fold(0.0f64, f64::max);
        assert!(spread <= 10.0 * d.h(), "orbit spread {spread}");
    }

    #[test]
    fn subcritical_sweep_produces_increasing_branch() {
        let d = disk(1.0 / 32.0);
        let p = IntensityMeasure::dirac_one();
        let mut cfg = SolveConfig::default();
        cfg.delta_lambda = 0.25;
        let b = continue_lambda(&d, &p, 0.0, 1.0, &cfg).unwrap();
        assert_eq!(b.terminated, Termination::ReachedEnd);
        assert!(b.entries.len() >= 2);
        for w in b.entries.windows(2) {
            assert!(w[1].lambda > w[0].lambda);
            assert!(w[1].u.sup_norm() >= w[0].u.sup_norm());
        }
        for e in &b.entries {
            assert!(e.residual <= cfg.tol);
        }
    }
}
