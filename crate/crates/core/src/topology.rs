//! Topological machinery for the min-max construction on domains with a
//! hole: chart moments of the normalized exponential mass, the boundary
//! comparison map Φ_k with its degree computed by regular-value root
//! counting, the weighted power-sum system, and the cutoff family h(z̲)
//! with its level estimates.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::EmbeddedCurve;
use crate::grid::{DiscreteDomain, Field};
use crate::measure::IntensityMeasure;
use crate::testfn::{BarycenterConfig, TestFamily, TestFnError};

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("degree computation inconclusive: signed counts {0:?} across regular values")]
    DegreeInconclusive(Vec<i64>),
    #[error("power-sum solve did not reach residual {target:.1e} (best {best:.3e})")]
    PowerSumNoConvergence { target: f64, best: f64 },
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    TestFn(#[from] TestFnError),
}

/// Chart moments m_j(u) = ∫ χ^j dμ(u), j = 1..=j_max, where μ(u) is the
/// normalized exponential mass of the field.
pub fn moment_map(
    domain: &DiscreteDomain,
    u: &Field,
    curve: &EmbeddedCurve,
    measure: &IntensityMeasure,
    j_max: usize,
) -> Vec<Complex64> {
    domain.check_field(u).expect("field matches domain");
    let mut num = vec![Complex64::new(0.0, 0.0); j_max];
    let mut den = 0.0;
    for i in 0..domain.num_cells() {
        let q = measure.weighted_exp(u.values[i], 0).unwrap();
        let (x, y) = domain.cell_center(i);
        let chi = curve.chi(x, y);
        let mut p = Complex64::new(1.0, 0.0);
        for m in num.iter_mut() {
            p *= chi;
            *m += p * q;
        }
        den += q;
    }
    num.into_iter().map(|m| m / den).collect()
}

/// The boundary comparison map: rows `Σ z_i|z_i|`, `Σ z_i²`, then
/// `Σ z_i²(z_i/|z_i|)^{j−2}`; vanishing entries contribute zero.
pub fn vandermonde_map(z: &[Complex64]) -> Vec<Complex64> {
    let k = z.len();
    let mut out = vec![Complex64::new(0.0, 0.0); k];
    for &zi in z {
        let r = zi.norm();
        if r == 0.0 {
            continue;
        }
        out[0] += zi * r;
        if k >= 2 {
            out[1] += zi * zi;
        }
        let phase = zi / r;
        let mut pw = zi * zi;
        for row in out.iter_mut().skip(2) {
            pw *= phase;
            *row += pw;
        }
    }
    out
}

fn unpack(x: &[f64]) -> Vec<Complex64> {
    x.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// Dense real LU solve for small systems; returns the determinant.
fn lu_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<f64> {
    let n = b.len();
    let mut det = 1.0f64;
    for col in 0..n {
        let mut p = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[p][col].abs() {
                p = r;
            }
        }
        if a[p][col].abs() < 1e-300 {
            return None;
        }
        if p != col {
            a.swap(col, p);
            b.swap(col, p);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * b[c];
        }
        b[r] = s / a[r][r];
    }
    Some(det)
}

/// Signed count of solutions of f(z) = y in the unit ball of ℂ^k for a
/// small regular value y, by Newton from seeded multistarts with
/// finite-difference Jacobians; orientation from the Jacobian determinant.
pub fn degree_by_root_count<F: Fn(&[Complex64]) -> Vec<Complex64>>(
    f: &F,
    k: usize,
    y: &[Complex64],
    rng: &mut ChaCha8Rng,
) -> i64 {
    let dim = 2 * k;
    let ynorm: f64 = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let scale = ynorm.sqrt().max(1e-4);
    let fd = |x: &[f64]| -> Vec<f64> {
        let z = unpack(x);
        let v = f(&z);
        v.iter()
            .zip(y)
            .flat_map(|(a, b)| [a.re - b.re, a.im - b.im])
            .collect()
    };
    let jac = |x: &[f64]| -> Vec<Vec<f64>> {
        let eps = 1e-7 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max));
        let mut cols = Vec::with_capacity(dim);
        for d in 0..dim {
            let mut xp = x.to_vec();
            xp[d] += eps;
            let mut xm = x.to_vec();
            xm[d] -= eps;
            let fp = fd(&xp);
            let fm = fd(&xm);
            cols.push(
                fp.iter()
                    .zip(&fm)
                    .map(|(a, b)| (a - b) / (2.0 * eps))
                    .collect::<Vec<f64>>(),
            );
        }
        (0..dim)
            .map(|r| (0..dim).map(|c| cols[c][r]).collect())
            .collect()
    };
    let mut roots: Vec<Vec<f64>> = Vec::new();
    let mut signed = 0i64;
    let n_starts = 240 * k;
    for _ in 0..n_starts {
        let mut x: Vec<f64> = (0..dim)
            .map(|_| rng.gen_range(-1.0..1.0) * scale * 3.0)
            .collect();
        let mut ok = false;
        for _ in 0..60 {
            let r = fd(&x);
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if rn < 1e-12 {
                ok = true;
                break;
            }
            let mut a = jac(&x);
            let mut b: Vec<f64> = r.iter().map(|v| -v).collect();
            if lu_solve(&mut a, &mut b).is_none() {
                break;
            }
            // keep steps bounded to stay in the small-root regime
            let sn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            let cap = 0.5 * scale.max(1e-3);
            let factor = if sn > cap { cap / sn } else { 1.0 };
            for d in 0..dim {
                x[d] += factor * b[d];
            }
            if x.iter().map(|v| v * v).sum::<f64>() > 1.0 {
                break;
            }
        }
        if !ok {
            continue;
        }
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        if norm2 >= 1.0 {
            continue;
        }
        if roots.iter().any(|r| {
            r.iter()
                .zip(&x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                < 1e-6
        }) {
            continue;
        }
        let mut a = jac(&x);
        let mut dummy = vec![0.0; dim];
        let det = lu_solve(&mut a, &mut dummy).unwrap_or(0.0);
        signed += det.signum() as i64;
        roots.push(x);
    }
    signed
}

/// Degree of the boundary comparison map on the unit ball of ℂ^k, checked
/// for stability across several random regular values.
pub fn brouwer_degree(k: usize, seed: u64) -> Result<i64, TopologyError> {
    degree_of(&|z: &[Complex64]| vandermonde_map(z), k, seed)
}

/// Root-count degree for an arbitrary continuous map (useful as a control
/// experiment against maps of known winding).
pub fn degree_of<F: Fn(&[Complex64]) -> Vec<Complex64>>(
    f: &F,
    k: usize,
    seed: u64,
) -> Result<i64, TopologyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::new();
    for _ in 0..5 {
        let y: Vec<Complex64> = (0..k)
            .map(|_| {
                let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                Complex64::new(phi.cos(), phi.sin()) * 1e-3
            })
            .collect();
        counts.push(degree_by_root_count(f, k, &y, &mut rng));
    }
    let first = counts[0];
    if first != 0 && counts.iter().all(|c| *c == first) {
        Ok(first)
    } else {
        Err(TopologyError::DegreeInconclusive(counts))
    }
}

fn complex_solve(a: &mut [Vec<Complex64>], b: &mut [Complex64]) -> Option<()> {
    let n = b.len();
    for col in 0..n {
        let mut p = col;
        for r in col + 1..n {
            if a[r][col].norm() > a[p][col].norm() {
                p = r;
            }
        }
        if a[p][col].norm() < 1e-300 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = b[col];
            b[r] -= f * v;
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r][c] * b[c];
        }
        b[r] = s / a[r][r];
    }
    Some(())
}

/// Solve the weighted power-sum system Σ β_i z_i^j = y_j, j = 1..ℓ, by
/// Newton multistart; returns the smallest-norm solution found.
///
/// Solutions shrink with the data: the returned ‖z‖ tends to zero along
/// any ladder ‖y‖ → 0.
pub fn vandermonde_solve(
    betas: &[f64],
    y: &[Complex64],
    seed: u64,
) -> Result<Vec<Complex64>, TopologyError> {
    let ell = betas.len();
    if ell == 0 || ell > 4 || y.len() != ell {
        return Err(TopologyError::BadInput(format!(
            "need 1..=4 weights matching data, got {} and {}",
            ell,
            y.len()
        )));
    }
    if betas.iter().any(|b| !(*b > 0.0)) {
        return Err(TopologyError::BadInput("weights must be positive".into()));
    }
    if ell == 1 {
        return Ok(vec![y[0] / betas[0]]);
    }
    let g = |z: &[Complex64]| -> Vec<Complex64> {
        (1..=ell)
            .map(|j| {
                let mut s = Complex64::new(0.0, 0.0);
                for (i, &b) in betas.iter().enumerate() {
                    s += b * z[i].powu(j as u32);
                }
                s - y[j - 1]
            })
            .collect()
    };
    let newton = |start: &[Complex64]| -> Option<Vec<Complex64>> {
        let mut z = start.to_vec();
        for _ in 0..100 {
            let r = g(&z);
            let rn = r.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if rn < 1e-13 {
                return Some(z);
            }
            let mut a: Vec<Vec<Complex64>> = (1..=ell)
                .map(|j| {
                    (0..ell)
                        .map(|i| {
                            Complex64::new(j as f64 * betas[i], 0.0) * z[i].powu(j as u32 - 1)
                        })
                        .collect()
                })
                .collect();
            let mut b: Vec<Complex64> = r.iter().map(|c| -c).collect();
            complex_solve(&mut a, &mut b)?;
            for i in 0..ell {
                z[i] += b[i];
            }
            if z.iter().map(|c| c.norm()).fold(0.0, f64::max) > 1e6 {
                return None;
            }
        }
        let rn = g(&z).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if rn < 1e-10 {
            Some(z)
        } else {
            None
        }
    };
    let scale = y
        .iter()
        .enumerate()
        .map(|(j, c)| c.norm().powf(1.0 / (j as f64 + 1.0)))
        .fold(0.0, f64::max)
        .max(1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    let mut consider = |cand: Option<Vec<Complex64>>| {
        if let Some(z) = cand {
            let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().map_or(true, |(_, bn)| n < *bn) {
                best = Some((z, n));
            }
        }
    };
    // symmetric-configuration starts plus random perturbations
    for m in 0..ell {
        let base: Vec<Complex64> = (0..ell)
            .map(|i| {
                let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.3 * m as f64) / ell as f64;
                Complex64::new(phi.cos(), phi.sin()) * scale
            })
            .collect();
        consider(newton(&base));
    }
    for _ in 0..60 {
        let start: Vec<Complex64> = (0..ell)
            .map(|_| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 2.0 * scale
            })
            .collect();
        consider(newton(&start));
    }
    match best {
        Some((z, _)) => Ok(z),
        None => Err(TopologyError::PowerSumNoConvergence {
            target: 1e-10,
            best: f64::INFINITY,
        }),
    }
}

/// The cutoff η: 0 below 1/3, 1 above 2/3, linear between.
pub fn eta(s: f64) -> f64 {
    (3.0 * s - 1.0).clamp(0.0, 1.0)
}

/// The min-max family member h(z̲) = η(|z̲|)·u_{|z̲|², σ(z̲)} with
/// σ(z̲) = Σ|z_i|²δ_{γ(arg z_i)} / |z̲|².
pub fn family_h(
    curve: &EmbeddedCurve,
    z: &[Complex64],
    alpha_tilde: f64,
) -> Result<TestFamily, TopologyError> {
    let norm2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    let norm = norm2.sqrt();
    if norm >= 1.0 {
        return Err(TopologyError::BadInput(format!(
            "|z| = {norm} outside the open unit ball"
        )));
    }
    if norm2 == 0.0 {
        // η = 0 makes the member identically zero; the weights are moot
        let cfg = BarycenterConfig {
            weights: vec![1.0],
            angles: vec![0.0],
            r: 0.0,
            alpha_tilde,
        };
        return Ok(TestFamily::barycenter(curve, &cfg)?.with_amplitude(0.0));
    }
    let weights: Vec<f64> = z.iter().map(|c| c.norm_sqr() / norm2).collect();
    let angles: Vec<f64> = z
        .iter()
        .map(|c| if c.norm() > 0.0 { c.arg() } else { 0.0 })
        .collect();
    let cfg = BarycenterConfig {
        weights,
        angles,
        r: norm2,
        alpha_tilde,
    };
    Ok(TestFamily::barycenter(curve, &cfg)?.with_amplitude(eta(norm)))
}

/// Samples and level statistics for the min-max family over the ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinmaxReport {
    pub k: usize,
    pub lambda: f64,
    pub alpha_tilde: f64,
    pub n_interior: usize,
    pub n_boundary: usize,
    /// sup of J over the interior sample: the level upper bound
    pub sup_interior: f64,
    /// |z| where the interior sup is attained
    pub argmax_norm: f64,
    pub boundary_max_j: f64,
    /// sup_interior − max boundary J
    pub boundary_drop: f64,
    /// sup over the boundary sample of |m∘h − Φ_k|
    pub moment_mismatch: f64,
    /// per-sample (|z|, J) pairs for plotting
    pub samples: Vec<(f64, f64)>,
}

/// Evaluate sup J_λ(h(z̲)) over a radial-angular sample of the ball, with
/// a near-boundary ring for the escape-to-−∞ and moment-convergence
/// checks.
pub fn minmax_upper_bound(
    domain: &DiscreteDomain,
    curve: &EmbeddedCurve,
    k: usize,
    lambda: f64,
    measure: &IntensityMeasure,
    alpha_tilde: f64,
    boundary_norm: f64,
    n_angular: usize,
) -> Result<MinmaxReport, TopologyError> {
    if k == 0 || k > 2 {
        return Err(TopologyError::BadInput("k must be 1 or 2".into()));
    }
    if (8.0 * k as f64 * std::f64::consts::PI) >= (2.0 * alpha_tilde - 1.0) * lambda {
        return Err(TopologyError::BadInput(format!(
            "lambda {lambda} does not clear the slope condition for k = {k}"
        )));
    }
    let area = domain.area();
    // radial ladder densified toward the boundary
    let mut radii = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.875, 0.95];
    radii.retain(|r| *r < boundary_norm);
    let mut sup_interior = f64::NEG_INFINITY;
    let mut argmax_norm = 0.0;
    let mut n_interior = 0;
    let mut samples = Vec::new();
    for &r in &radii {
        for a in 0..n_angular {
            let th = 2.0 * std::f64::consts::PI * a as f64 / n_angular as f64;
            let zs: Vec<Vec<Complex64>> = if k == 1 {
                vec![vec![Complex64::from_polar(r, th)]]
            } else {
                // split the mass evenly and unevenly across the entries
                vec![
                    vec![
                        Complex64::from_polar(r / (2.0f64).sqrt(), th),
                        Complex64::from_polar(r / (2.0f64).sqrt(), th + std::f64::consts::PI),
                    ],
                    vec![
                        Complex64::from_polar(r * (0.75f64).sqrt(), th),
                        Complex64::from_polar(r * 0.5, th + 2.0),
                    ],
                ]
            };
            for z in zs {
                let fam = family_h(curve, &z, alpha_tilde)?;
                let j = if fam.amplitude == 0.0 {
                    -lambda * area.ln()
                } else {
                    fam.j_lambda_quad(area, lambda, measure)
                };
                let zn = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                samples.push((zn, j));
                n_interior += 1;
                if j > sup_interior {
                    sup_interior = j;
                    argmax_norm = zn;
                }
            }
        }
    }
    // boundary ring
    let mut boundary_max_j = f64::NEG_INFINITY;
    let mut moment_mismatch = 0.0f64;
    let mut n_boundary = 0;
    for a in 0..n_angular {
        let th = 2.0 * std::f64::consts::PI * a as f64 / n_angular as f64;
        let z: Vec<Complex64> = if k == 1 {
            vec![Complex64::from_polar(boundary_norm, th)]
        } else {
            vec![
                Complex64::from_polar(boundary_norm / (2.0f64).sqrt(), th),
                Complex64::from_polar(
                    boundary_norm / (2.0f64).sqrt(),
                    th + std::f64::consts::PI,
                ),
            ]
        };
        let fam = family_h(curve, &z, alpha_tilde)?;
        let j = fam.j_lambda_quad(area, lambda, measure);
        samples.push((boundary_norm, j));
        boundary_max_j = boundary_max_j.max(j);
        n_boundary += 1;
        let moments = fam.moments_quad(domain, curve, k, measure);
        let phi = vandermonde_map(&z);
        let diff = moments
            .iter()
            .zip(&phi)
            .map(|(m, p)| (m - p).norm())
            .fold(0.0, f64::max);
        moment_mismatch = moment_mismatch.max(diff);
    }
    Ok(MinmaxReport {
        k,
        lambda,
        alpha_tilde,
        n_interior,
        n_boundary,
        sup_interior,
        argmax_norm,
        boundary_max_j,
        boundary_drop: sup_interior - boundary_max_j,
        moment_mismatch,
        samples,
    })
}
