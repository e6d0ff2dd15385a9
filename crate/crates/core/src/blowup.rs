//! Concentration diagnostics: vortex density, peak detection with greedy
//! disjoint ball masses, quantization checks along continuation branches,
//! the quadratic identity for limit atoms, peak rescalings and
//! Liouville-profile fits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{DiscreteDomain, DomainError, Field};
use crate::measure::IntensityMeasure;
use crate::numeric::{linear_fit, logsumexp};
use crate::solver::{nonlinearity, ContinuationBranch};

#[derive(Debug, Error)]
pub enum BlowupError {
    #[error("operation requires {0}")]
    WrongRegime(&'static str),
    #[error("rescaling window of scale {sigma:.3e} unresolvable at h = {h:.3e}")]
    UnresolvableWindow { sigma: f64, h: f64 },
    #[error("peak value is zero: rescaling exponent undefined")]
    PeakAtZero,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// ν(u) = λ ∫αe^{αu}P(dα) / 𝓘, the vortex density field.
pub fn vortex_density(
    domain: &DiscreteDomain,
    u: &Field,
    lambda: f64,
    measure: &IntensityMeasure,
) -> Result<Field, DomainError> {
    nonlinearity(domain, u, lambda, measure)
}

/// A detected concentration peak and the density mass of its ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeakMass {
    pub location: [f64; 2],
    pub mass: f64,
}

/// Local maxima above `threshold_fraction·max`, kept pairwise ≥ 2ρ apart
/// in descending height; masses integrate the density over
/// B_ρ(p_i) minus the earlier balls.
pub fn detect_peaks(
    domain: &DiscreteDomain,
    density: &Field,
    threshold_fraction: f64,
    rho: f64,
) -> Vec<PeakMass> {
    let n = domain.num_cells();
    let vmax = density.max();
    if !(vmax > 0.0) {
        return Vec::new();
    }
    let threshold = threshold_fraction * vmax;
    let mut candidates: Vec<usize> = Vec::new();
    for i in 0..n {
        let v = density.values[i];
        if v < threshold {
            continue;
        }
        let mut ge_all = true;
        let mut gt_one = false;
        for &nb in domain.neighbors_of(i) {
            if nb != u32::MAX {
                let w = density.values[nb as usize];
                if v < w {
                    ge_all = false;
                    break;
                }
                if v > w {
                    gt_one = true;
                }
            }
        }
        if ge_all && gt_one {
            candidates.push(i);
        }
    }
    candidates.sort_by(|&a, &b| {
        density.values[b]
            .partial_cmp(&density.values[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut accepted: Vec<usize> = Vec::new();
    'cand: for c in candidates {
        let (cx, cy) = domain.cell_center(c);
        for &a in &accepted {
            let (ax, ay) = domain.cell_center(a);
            if ((cx - ax).powi(2) + (cy - ay).powi(2)).sqrt() < 2.0 * rho {
                continue 'cand;
            }
        }
        accepted.push(c);
    }
    let h2 = domain.h() * domain.h();
    let mut masses = vec![0.0f64; accepted.len()];
    for i in 0..n {
        let (x, y) = domain.cell_center(i);
        for (k, &a) in accepted.iter().enumerate() {
            let (ax, ay) = domain.cell_center(a);
            if (x - ax).powi(2) + (y - ay).powi(2) <= rho * rho {
                masses[k] += density.values[i] * h2;
                break;
            }
        }
    }
    accepted
        .into_iter()
        .zip(masses)
        .map(|(c, mass)| {
            let (x, y) = domain.cell_center(c);
            PeakMass {
                location: [x, y],
                mass,
            }
        })
        .collect()
}

/// 8π·Σζ − (Σαζ)² for an atom list ζ = {(α_j, m_j)}; vanishing is the
/// necessary balance for a limit atom.
pub fn pohozaev_residual(atoms: &[(f64, f64)]) -> f64 {
    let total: f64 = atoms.iter().map(|&(_, m)| m).sum();
    let weighted: f64 = atoms.iter().map(|&(a, m)| a * m).sum();
    8.0 * std::f64::consts::PI * total - weighted * weighted
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum QuantizationVerdict {
    NoBlowup,
    Inconclusive(String),
    Quantized {
        /// relative deviation of each extrapolated peak mass from 8π
        rel_errors: Vec<f64>,
    },
}

/// Limit share of one intensity atom in the peak-ball mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomShare {
    pub alpha: f64,
    /// fitted exponential rate of the ball mass against ‖u‖∞
    pub decay_rate: f64,
    pub last_share: f64,
    /// extrapolated limit share (0 when the mass decays)
    pub limit_share: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantizationReport {
    pub rho: f64,
    pub window_lambdas: Vec<f64>,
    pub window_sup_u: Vec<f64>,
    pub peak_locations: Vec<[f64; 2]>,
    /// per window entry, per peak
    pub peak_masses: Vec<Vec<f64>>,
    pub extrapolated_masses: Vec<f64>,
    pub residual_mass_first: f64,
    pub residual_mass_last: f64,
    pub atom_shares: Vec<AtomShare>,
    pub verdict: QuantizationVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantizationParams {
    /// cluster radius; derived from the peak separation when absent
    pub rho: Option<f64>,
    pub threshold_fraction: f64,
    /// ‖u‖∞ below which the branch counts as compact
    pub min_amplitude: f64,
    /// number of branch-end entries used for extrapolation
    pub window: usize,
}

impl Default for QuantizationParams {
    fn default() -> Self {
        QuantizationParams {
            rho: None,
            threshold_fraction: 0.2,
            min_amplitude: 5.0,
            window: 8,
        }
    }
}

/// Extrapolate peak-ball masses along a branch toward the concentration
/// limit. Masses are fitted linearly against the bubble-scale proxy
/// e^{−‖u‖∞/2} and reported at zero; atom masses that decay exponentially
/// in ‖u‖∞ get limit share zero.
pub fn quantization_check(
    domain: &DiscreteDomain,
    branch: &ContinuationBranch,
    measure: &IntensityMeasure,
    params: &QuantizationParams,
) -> Result<QuantizationReport, BlowupError> {
    let n_entries = branch.entries.len();
    let empty = QuantizationReport {
        rho: 0.0,
        window_lambdas: vec![],
        window_sup_u: vec![],
        peak_locations: vec![],
        peak_masses: vec![],
        extrapolated_masses: vec![],
        residual_mass_first: 0.0,
        residual_mass_last: 0.0,
        atom_shares: vec![],
        verdict: QuantizationVerdict::NoBlowup,
    };
    if n_entries == 0 {
        return Ok(empty);
    }
    let final_sup = branch.entries.last().unwrap().max_u;
    if final_sup < params.min_amplitude {
        return Ok(empty);
    }
    let start = n_entries.saturating_sub(params.window);
    let window = &branch.entries[start..];
    if window.len() < 4 {
        return Ok(QuantizationReport {
            verdict: QuantizationVerdict::Inconclusive(format!(
                "only {} growing entries",
                window.len()
            )),
            ..empty
        });
    }

    // reference peaks from the branch end
    let last = window.last().unwrap();
    let last_density = vortex_density(domain, &last.u, last.lambda, measure)?;
    let probe = detect_peaks(
        domain,
        &last_density,
        params.threshold_fraction,
        8.0 * domain.h(),
    );
    if probe.is_empty() {
        return Ok(QuantizationReport {
            verdict: QuantizationVerdict::Inconclusive("no peaks at branch end".into()),
            ..empty
        });
    }
    let min_sep = if probe.len() >= 2 {
        let mut sep = f64::INFINITY;
        for i in 0..probe.len() {
            for j in i + 1..probe.len() {
                let d = ((probe[i].location[0] - probe[j].location[0]).powi(2)
                    + (probe[i].location[1] - probe[j].location[1]).powi(2))
                .sqrt();
                sep = sep.min(d);
            }
        }
        sep
    } else {
        f64::INFINITY
    };
    let rho = params
        .rho
        .unwrap_or_else(|| (8.0 * domain.h()).max(0.25 * min_sep.min(1e30)));
    let reference = detect_peaks(domain, &last_density, params.threshold_fraction, rho);
    let peak_locations: Vec<[f64; 2]> = reference.iter().map(|p| p.location).collect();

    let mut window_lambdas = Vec::new();
    let mut window_sup = Vec::new();
    let mut peak_masses: Vec<Vec<f64>> = Vec::new();
    let mut residuals = Vec::new();
    let mut kept_entries = Vec::new();
    for entry in window {
        let density = vortex_density(domain, &entry.u, entry.lambda, measure)?;
        let peaks = detect_peaks(domain, &density, params.threshold_fraction, rho);
        // match to the reference set by location
        let mut masses = vec![f64::NAN; peak_locations.len()];
        for p in &peaks {
            let mut best = None;
            for (k, loc) in peak_locations.iter().enumerate() {
                let d = ((p.location[0] - loc[0]).powi(2) + (p.location[1] - loc[1]).powi(2))
                    .sqrt();
                if d <= 2.0 * rho && best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, k));
                }
            }
            if let Some((_, k)) = best {
                masses[k] = p.mass;
            }
        }
        if masses.iter().any(|m| m.is_nan()) {
            continue;
        }
        let total: f64 = density.values.iter().sum::<f64>() * domain.h() * domain.h();
        residuals.push(total - masses.iter().sum::<f64>());
        window_lambdas.push(entry.lambda);
        window_sup.push(entry.max_u);
        peak_masses.push(masses);
        kept_entries.push(entry);
    }
    if peak_masses.len() < 3 {
        return Ok(QuantizationReport {
            verdict: QuantizationVerdict::Inconclusive(
                "peak set unstable across the window".into(),
            ),
            ..empty
        });
    }

    let xs: Vec<f64> = window_sup.iter().map(|s| (-s / 2.0).exp()).collect();
    let mut extrapolated = Vec::new();
    for k in 0..peak_locations.len() {
        let ys: Vec<f64> = peak_masses.iter().map(|m| m[k]).collect();
        let (_, intercept, _) = linear_fit(&xs, &ys);
        extrapolated.push(intercept);
    }

    // per-atom ball masses for atomic measures
    let mut atom_shares = Vec::new();
    if !measure.has_density() && measure.atoms().len() > 1 {
        let h2 = domain.h() * domain.h();
        let in_ball: Vec<bool> = (0..domain.num_cells())
            .map(|i| {
                let (x, y) = domain.cell_center(i);
                peak_locations
                    .iter()
                    .any(|p| (x - p[0]).powi(2) + (y - p[1]).powi(2) <= rho * rho)
            })
            .collect();
        let mut per_atom: Vec<Vec<f64>> = vec![Vec::new(); measure.atoms().len()];
        for entry in &kept_entries {
            for (j, &(alpha, weight)) in measure.atoms().iter().enumerate() {
                // λ w α ∫_balls e^{αu} / 𝓘 in log space
                let logs: Vec<f64> = entry
                    .u
                    .values
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| in_ball[*i])
                    .map(|(_, &ui)| alpha * ui)
                    .collect();
                let log_mass_ball = logsumexp(&logs) + h2.ln();
                let m = entry.lambda
                    * weight
                    * alpha
                    * (log_mass_ball - entry.log_denominator).exp();
                per_atom[j].push(m);
            }
        }
        let mut limits = Vec::new();
        for (j, &(alpha, _)) in measure.atoms().iter().enumerate() {
            let ys = &per_atom[j];
            let logs: Vec<f64> = ys.iter().map(|m| m.max(1e-300).ln()).collect();
            let (rate, _, _) = linear_fit(&window_sup, &logs);
            let limit = if rate < -0.02 {
                0.0
            } else {
                linear_fit(&xs, ys).1.max(0.0)
            };
            limits.push((alpha, rate, *ys.last().unwrap(), limit));
        }
        let total_limit: f64 = limits.iter().map(|l| l.3).sum();
        let total_last: f64 = limits.iter().map(|l| l.2).sum();
        for (alpha, rate, last_m, limit) in limits {
            atom_shares.push(AtomShare {
                alpha,
                decay_rate: rate,
                last_share: if total_last > 0.0 {
                    last_m / total_last
                } else {
                    0.0
                },
                limit_share: if total_limit > 0.0 {
                    limit / total_limit
                } else {
                    0.0
                },
            });
        }
    }

    let target = 8.0 * std::f64::consts::PI;
    let rel_errors: Vec<f64> = extrapolated
        .iter()
        .map(|m| (m - target).abs() / target)
        .collect();
    Ok(QuantizationReport {
        rho,
        window_lambdas,
        window_sup_u: window_sup,
        peak_locations,
        peak_masses,
        extrapolated_masses: extrapolated,
        residual_mass_first: residuals.first().copied().unwrap_or(0.0),
        residual_mass_last: residuals.last().copied().unwrap_or(0.0),
        atom_shares,
        verdict: QuantizationVerdict::Quantized { rel_errors },
    })
}

/// A peak-centered profile sampled on a square window in rescaled
/// coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaledProfile {
    /// samples per side (odd; the center sample sits at y = 0)
    pub n: usize,
    pub window_radius: f64,
    pub sigma: f64,
    /// row-major n×n values
    pub values: Vec<f64>,
}

impl RescaledProfile {
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let i = idx / self.n;
        let j = idx % self.n;
        let step = 2.0 * self.window_radius / (self.n - 1) as f64;
        [
            -self.window_radius + j as f64 * step,
            -self.window_radius + i as f64 * step,
        ]
    }

    pub fn center_value(&self) -> f64 {
        self.values[(self.n / 2) * self.n + self.n / 2]
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(n: usize, window_radius: f64, f: F) -> Self {
        let mut p = RescaledProfile {
            n,
            window_radius,
            sigma: 1.0,
            values: vec![0.0; n * n],
        };
        for idx in 0..n * n {
            let c = p.coords(idx);
            p.values[idx] = f(c[0], c[1]);
        }
        p
    }
}

const WINDOW_SAMPLES: usize = 81;
const WINDOW_RADIUS: f64 = 5.0;

fn sample_window(
    domain: &DiscreteDomain,
    w: &Field,
    center: [f64; 2],
    sigma: f64,
    shift: f64,
) -> RescaledProfile {
    let mut p = RescaledProfile {
        n: WINDOW_SAMPLES,
        window_radius: WINDOW_RADIUS,
        sigma,
        values: vec![0.0; WINDOW_SAMPLES * WINDOW_SAMPLES],
    };
    for idx in 0..p.values.len() {
        let y = p.coords(idx);
        let x = [center[0] + sigma * y[0], center[1] + sigma * y[1]];
        p.values[idx] = domain.interpolate(w, x[0], x[1]) + shift;
    }
    p
}

/// Peak rescaling for measures carrying an atom at α = 1: with
/// w = u − log𝓘 and σ = e^{−w(x*)/2}, returns w̃(y) = w(x*+σy) + 2 log σ.
pub fn rescale_nondegenerate(
    domain: &DiscreteDomain,
    u: &Field,
    measure: &IntensityMeasure,
    log_denominator: f64,
) -> Result<RescaledProfile, BlowupError> {
    if measure.mass_at_one() <= 0.0 {
        return Err(BlowupError::WrongRegime("an atom at alpha = 1"));
    }
    domain.check_field(u)?;
    let imax = u.argmax();
    let (cx, cy) = domain.cell_center(imax);
    let w_max = u.values[imax] - log_denominator;
    let sigma = (-w_max / 2.0).exp();
    if sigma < 2.0 * domain.h() {
        return Err(BlowupError::UnresolvableWindow {
            sigma,
            h: domain.h(),
        });
    }
    let w = Field {
        values: u.values.iter().map(|v| v - log_denominator).collect(),
    };
    Ok(sample_window(domain, &w, [cx, cy], sigma, 2.0 * sigma.ln()))
}

/// Degenerate-regime rescaling data.
#[derive(Debug, Clone)]
pub struct DegenerateRescaling {
    pub profile: RescaledProfile,
    /// the measure-dependent exponent solving e^{αₙ t} = ∫αe^{αt}P(dα)
    pub alpha_n: f64,
    pub sigma: f64,
    /// V at the peak; equals αₙλ by construction
    pub v_at_peak: f64,
    pub sup_v: f64,
}

/// Peak rescaling when P({1}) = 0: the exponent αₙ < 1 is read off the
/// peak amplitude and the effective potential V is reported alongside.
pub fn rescale_degenerate(
    domain: &DiscreteDomain,
    u: &Field,
    lambda: f64,
    measure: &IntensityMeasure,
    log_denominator: f64,
) -> Result<DegenerateRescaling, BlowupError> {
    if measure.mass_at_one() > 0.0 {
        return Err(BlowupError::WrongRegime("no atom at alpha = 1"));
    }
    domain.check_field(u)?;
    let imax = u.argmax();
    let t = u.values[imax];
    if !(t > 0.0) {
        return Err(BlowupError::PeakAtZero);
    }
    let (cx, cy) = domain.cell_center(imax);
    let alpha_n = measure.log_weighted_exp(t, 1) / t;
    let sigma = (0.5 * (-alpha_n * t + log_denominator)).exp();
    if sigma < 2.0 * domain.h() {
        return Err(BlowupError::UnresolvableWindow {
            sigma,
            h: domain.h(),
        });
    }
    // V = αₙλ ∫αe^{αu}P e^{−w}/𝓘 with w = αₙu − log𝓘
    let mut sup_v = 0.0f64;
    let mut v_at_peak = 0.0;
    for (i, &ui) in u.values.iter().enumerate() {
        let v = alpha_n * lambda * (measure.log_weighted_exp(ui, 1) - alpha_n * ui).exp();
        sup_v = sup_v.max(v);
        if i == imax {
            v_at_peak = v;
        }
    }
    let w = Field {
        values: u
            .values
            .iter()
            .map(|v| alpha_n * v - log_denominator)
            .collect(),
    };
    let profile = sample_window(domain, &w, [cx, cy], sigma, 2.0 * sigma.ln());
    Ok(DegenerateRescaling {
        profile,
        alpha_n,
        sigma,
        v_at_peak,
        sup_v,
    })
}

/// Parameters of a fitted entire-solution profile
/// U(y) = log(8δ²/(δ²+|y−ξ|²)²) + offset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BubbleFit {
    pub delta: f64,
    pub xi: [f64; 2],
    pub offset: f64,
    pub rms_residual: f64,
    pub converged: bool,
}

fn bubble_model(delta: f64, xi: [f64; 2], offset: f64, y: [f64; 2]) -> f64 {
    let r2 = (y[0] - xi[0]).powi(2) + (y[1] - xi[1]).powi(2);
    (8.0 * delta * delta).ln() - 2.0 * (delta * delta + r2).ln() + offset
}

/// Nonlinear least squares for (δ, ξ, offset) on a rescaled profile.
pub fn bubble_fit(profile: &RescaledProfile) -> BubbleFit {
    // initial guess: ξ at the window peak, δ from the 2·log2 half-drop
    let mut imax = 0;
    for (i, v) in profile.values.iter().enumerate() {
        if *v > profile.values[imax] {
            imax = i;
        }
    }
    let peak = profile.values[imax];
    let xi0 = profile.coords(imax);
    let mut delta = 1.0;
    let mut best_d = f64::INFINITY;
    for (i, v) in profile.values.iter().enumerate() {
        let c = profile.coords(i);
        let r = ((c[0] - xi0[0]).powi(2) + (c[1] - xi0[1]).powi(2)).sqrt();
        let drop = peak - v;
        let d = (drop - 2.0 * (2.0f64).ln()).abs();
        if d < best_d && r > 0.0 {
            best_d = d;
            delta = r;
        }
    }
    let mut p = [delta.max(1e-3).ln(), xi0[0], xi0[1], 0.0];
    p[3] = peak - bubble_model(delta.max(1e-3), [p[1], p[2]], 0.0, xi0);

    let n = profile.values.len();
    let mut mu = 1e-8;
    let mut last_ss = f64::INFINITY;
    let mut converged = false;
    for _ in 0..80 {
        let delta = p[0].exp();
        let xi = [p[1], p[2]];
        let mut jtj = [[0.0f64; 4]; 4];
        let mut jtr = [0.0f64; 4];
        let mut ss = 0.0;
        for i in 0..n {
            let y = profile.coords(i);
            let r2 = (y[0] - xi[0]).powi(2) + (y[1] - xi[1]).powi(2);
            let d2 = delta * delta + r2;
            let m = (8.0 * delta * delta).ln() - 2.0 * d2.ln() + p[3];
            let res = profile.values[i] - m;
            ss += res * res;
            let g = [
                2.0 - 4.0 * delta * delta / d2,
                4.0 * (y[0] - xi[0]) / d2,
                4.0 * (y[1] - xi[1]) / d2,
                1.0,
            ];
            for a in 0..4 {
                jtr[a] += g[a] * res;
                for b in 0..4 {
                    jtj[a][b] += g[a] * g[b];
                }
            }
        }
        if (last_ss - ss).abs() <= 1e-14 * ss.max(1e-30) {
            converged = true;
            break;
        }
        last_ss = ss;
        let mut step = [0.0f64; 4];
        let mut solved = false;
        while mu < 1e8 {
            let mut a = jtj;
            for d in 0..4 {
                a[d][d] += mu * (1.0 + jtj[d][d]);
            }
            if let Some(s) = solve4(&a, &jtr) {
                step = s;
                solved = true;
                break;
            }
            mu *= 10.0;
        }
        if !solved {
            break;
        }
        let cand = [
            p[0] + step[0],
            p[1] + step[1],
            p[2] + step[2],
            p[3] + step[3],
        ];
        let cd = cand[0].exp();
        let mut cs = 0.0;
        for i in 0..n {
            let y = profile.coords(i);
            let res = profile.values[i] - bubble_model(cd, [cand[1], cand[2]], cand[3], y);
            cs += res * res;
        }
        if cs <= last_ss {
            p = cand;
            mu = (mu * 0.3).max(1e-12);
            if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-12 {
                converged = true;
                break;
            }
        } else {
            mu *= 10.0;
        }
    }
    let delta = p[0].exp();
    let mut ss = 0.0;
    for i in 0..n {
        let y = profile.coords(i);
        let res = profile.values[i] - bubble_model(delta, [p[1], p[2]], p[3], y);
        ss += res * res;
    }
    BubbleFit {
        delta,
        xi: [p[1], p[2]],
        offset: p[3],
        rms_residual: (ss / n as f64).sqrt(),
        converged,
    }
}

/// Quadrature of ∫ e^{U_{δ,ξ}} over |y−ξ| ≤ radius_factor·δ; the entire
/// profile carries total mass 8π.
pub fn bubble_mass_quadrature(fit: &BubbleFit, radius_factor: f64) -> f64 {
    let delta = fit.delta;
    let rmax = radius_factor * delta;
    let nr = 4000;
    let dr = rmax / nr as f64;
    let mut acc = 0.0;
    for i in 0..nr {
        let r = (i as f64 + 0.5) * dr;
        let e = 8.0 * delta * delta / (delta * delta + r * r).powi(2);
        acc += e * r * dr;
    }
    acc * 2.0 * std::f64::consts::PI
}

fn solve4(a: &[[f64; 4]; 4], b: &[f64; 4]) -> Option<[f64; 4]> {
    let mut m = *a;
    let mut x = *b;
    for col in 0..4 {
        let mut p = col;
        for r in col + 1..4 {
            if m[r][col].abs() > m[p][col].abs() {
                p = r;
            }
        }
        if m[p][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, p);
        x.swap(col, p);
        for r in col + 1..4 {
            let f = m[r][col] / m[col][col];
            for c in col..4 {
                m[r][c] -= f * m[col][c];
            }
            x[r] -= f * x[col];
        }
    }
    for r in (0..4).rev() {
        let mut s = x[r];
        for c in r + 1..4 {
            s -= m[r][c] * x[c];
        }
        x[r] = s / m[r][r];
    }
    Some(x)
}

/// Outcome of the k-ball concentration cover.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ClusterOutcome {
    Found {
        points: Vec<[f64; 2]>,
        betas: Vec<f64>,
    },
    NotCovered {
        best_coverage: f64,
    },
}

/// Greedy search for ℓ ≤ k balls of radius r whose exponential mass covers
/// all but ε of the normalized measure; the balls are disjointified in
/// order, mirroring the nested-difference masses of the concentration
/// property.
pub fn concentration_clusters(
    domain: &DiscreteDomain,
    u: &Field,
    measure: &IntensityMeasure,
    k: usize,
    eps: f64,
    r: f64,
) -> Result<ClusterOutcome, BlowupError> {
    assert!(k >= 1 && eps > 0.0 && eps < 1.0 && r > 0.0);
    domain.check_field(u)?;
    let n = domain.num_cells();
    let q: Vec<f64> = u
        .values
        .iter()
        .map(|&t| measure.weighted_exp(t, 0).unwrap())
        .collect();
    let total: f64 = q.iter().sum();
    let mut covered = vec![false; n];
    let mut points = Vec::new();
    let mut betas = Vec::new();
    let mut captured = 0.0;
    for _ in 0..k {
        // center at the strongest uncovered density cell
        let mut best = None;
        for i in 0..n {
            if !covered[i] && best.map_or(true, |(bq, _)| q[i] > bq) {
                best = Some((q[i], i));
            }
        }
        let Some((_, center)) = best else { break };
        let (cx, cy) = domain.cell_center(center);
        let mut mass = 0.0;
        for i in 0..n {
            if covered[i] {
                continue;
            }
            let (x, y) = domain.cell_center(i);
            if (x - cx).powi(2) + (y - cy).powi(2) <= r * r {
                covered[i] = true;
                mass += q[i];
            }
        }
        points.push([cx, cy]);
        betas.push(mass / total);
        captured += mass / total;
        if 1.0 - captured < eps {
            return Ok(ClusterOutcome::Found { points, betas });
        }
    }
    Ok(ClusterOutcome::NotCovered {
        best_coverage: captured,
    })
}
