// temporary numerical probes; removed before release
use mfe_core::blowup::{quantization_check, QuantizationParams};
use mfe_core::grid::{DiscreteDomain, DomainSpec, Field};
use mfe_core::solver::{continue_lambda, newton_solve, SolveConfig};
use mfe_core::IntensityMeasure;
use std::f64::consts::PI;
use std::time::Instant;

#[test]
#[ignore]
fn probe_branch_to_8pi() {
    let t0 = Instant::now();
    let d = DiscreteDomain::build(&DomainSpec::unit_disk(1.0 / 128.0)).unwrap();
    println!("domain build: {:?} cells={} bw={}", t0.elapsed(), d.num_cells(), d.bandwidth());
    let p = IntensityMeasure::dirac_one();
    let mut cfg = SolveConfig::default();
    cfg.tol = 1e-9;
    cfg.delta_lambda = 2.0;
    cfg.min_step = 2e-5;
    let t1 = Instant::now();
    let b = continue_lambda(&d, &p, 1.0, 8.0 * PI, &cfg).unwrap();
    println!(
        "branch: {:?}, {} entries, terminated {:?}",
        t1.elapsed(),
        b.entries.len(),
        b.terminated
    );
    for e in b.entries.iter().rev().take(12).collect::<Vec<_>>().iter().rev() {
        println!(
            "λ/8π = {:.6}  sup u = {:.3}  ν = {:.4}  iters {}  𝓘 = {:.3e}",
            e.lambda / (8.0 * PI),
            e.max_u,
            e.vortex_mass,
            e.iterations,
            e.denominator
        );
    }
    let t2 = Instant::now();
    let q = quantization_check(&d, &b, &p, &QuantizationParams::default()).unwrap();
    println!("quantization: {:?}", t2.elapsed());
    println!(
        "rho={} peaks={:?} extrapolated={:?} (8π = {:.4}) residual {} -> {}",
        q.rho,
        q.peak_locations,
        q.extrapolated_masses,
        8.0 * PI,
        q.residual_mass_first,
        q.residual_mass_last
    );
    println!("window masses: {:?}", q.peak_masses);
    println!("verdict {:?}", q.verdict);
}

#[test]
#[ignore]
fn probe_two_atom_branch() {
    let d = DiscreteDomain::build(&DomainSpec::unit_disk(1.0 / 128.0)).unwrap();
    let p = IntensityMeasure::atoms_only(&[(0.9, 0.5), (1.0, 0.5)]).unwrap();
    let mut cfg = SolveConfig::default();
    cfg.tol = 1e-9;
    cfg.delta_lambda = 2.0;
    cfg.min_step = 2e-5;
    let t1 = Instant::now();
    let b = continue_lambda(&d, &p, 1.0, 8.0 * PI, &cfg).unwrap();
    println!(
        "two-atom branch: {:?}, {} entries, end sup u = {:.3}, terminated {:?}",
        t1.elapsed(),
        b.entries.len(),
        b.entries.last().unwrap().max_u,
        b.terminated
    );
    let q = quantization_check(&d, &b, &p, &QuantizationParams::default()).unwrap();
    println!("extrapolated={:?}", q.extrapolated_masses);
    for s in &q.atom_shares {
        println!(
            "atom α={} rate={:.4} last_share={:.4} limit_share={:.4}",
            s.alpha, s.decay_rate, s.last_share, s.limit_share
        );
    }
}

#[test]
#[ignore]
fn probe_grid_convergence() {
    // closed-form radial solution at λ = 4π
    let exact = |x: f64, y: f64| 2.0 * (2.0 / (1.0 + x * x + y * y)).ln();
    let mut errs = Vec::new();
    for &n in &[64.0, 128.0, 256.0] {
        let t = Instant::now();
        let d = DiscreteDomain::build(&DomainSpec::unit_disk(1.0 / n)).unwrap();
        let p = IntensityMeasure::dirac_one();
        let mut cfg = SolveConfig::default();
        cfg.tol = if n > 200.0 { 1e-8 } else { 1e-10 };
        let r = newton_solve(&d, &Field::zeros(&d), 4.0 * PI, &p, &cfg).unwrap();
        let ex = Field::from_fn(&d, exact);
        let mut err = 0.0f64;
        for i in 0..d.num_cells() {
            err = err.max((r.u.values[i] - ex.values[i]).abs());
        }
        println!(
            "h=1/{n}: err {err:.3e}  iters {}  res {:.2e}  time {:?}",
            r.iterations, r.residual, t.elapsed()
        );
        errs.push(err);
    }
    println!(
        "orders: {:.2}, {:.2}",
        (errs[0] / errs[1]).log2(),
        (errs[1] / errs[2]).log2()
    );
}

#[test]
#[ignore]
fn probe_degenerate_branch() {
    let d = DiscreteDomain::build(&DomainSpec::unit_disk(1.0 / 128.0)).unwrap();
    let p = IntensityMeasure::uniform();
    let mut cfg = SolveConfig::default();
    cfg.tol = 1e-9;
    cfg.delta_lambda = 2.0;
    cfg.min_step = 1e-4;
    let t1 = Instant::now();
    let b = continue_lambda(&d, &p, 1.0, 8.0 * PI, &cfg).unwrap();
    let last = b.entries.last().unwrap();
    println!(
        "degenerate branch: {:?}, {} entries, end λ/8π = {:.5}, sup u = {:.3}",
        t1.elapsed(),
        b.entries.len(),
        last.lambda / (8.0 * PI),
        last.max_u
    );
}
