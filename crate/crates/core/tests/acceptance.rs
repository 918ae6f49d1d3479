use std::f64::consts::PI;
use std::time::{Duration, Instant};

use quantflow::continuum::{
    comparison_diagnostics, eulerian_rhs, evolve_eulerian, run_closeness, stationary_state, u_transform,
    ClosenessSetup, DiagnosticTolerances, EulerianField, EulerianOptions,
};
use quantflow::density::{power_normalize, Density1D};
use quantflow::discrete_flow::{empirical_measure, energy, minimize_energy, voronoi_measure, MinimizerOptions, PointConfig1D};
use quantflow::fit::{exponential_fit, log_log_fit};
use quantflow::hessian::{counterexample_value, CounterexampleSpec};
use quantflow::lattice::{
    evolve_deformation, evolve_points_2d, expansion_check, f_phi, hex_points, perturbed_hex_points, scaling_calibration,
    DeformationField, DeformationOptions, Mat2, PointFlowOptions,
};
use quantflow::manifold::{moment_condition, Curvature, ModelSpace, RadialMeasure, RadialProfile, TailStatus, DEFAULT_R_MAX};
use quantflow::measure::{wasserstein_1d, wasserstein_1d_pow};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(id: usize, name: &str, budget: Duration, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = check();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = result.pass && in_time;
    println!(
        "{} [{id:>2}] {name}: {} ({:.2} s, budget {} s)",
        if pass { "PASS" } else { "FAIL" },
        result.detail,
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn uniform_quantization_constant() -> Outcome {
    let n = 256;
    let cfg = PointConfig1D::equispaced(n, 2.0).unwrap();
    let value = (n * n) as f64 * energy(&cfg, &Density1D::uniform());
    outcome((value - 1.0 / 12.0).abs() <= 1e-4, format!("N^2 F = {value:.10}, target 1/12"))
}

fn asymptotic_density_law() -> Outcome {
    let rho = Density1D::cosine(0.5).unwrap();
    let limit = power_normalize(&rho, 1, 2.0).unwrap();
    let ns = [25usize, 50, 100, 200];
    let mut w = Vec::new();
    for &n in &ns {
        let start = PointConfig1D::equispaced(n, 2.0).unwrap();
        let min = minimize_energy(&start, &rho, &MinimizerOptions::default()).unwrap();
        if min.gradient_norm > 1e-10 {
            return outcome(false, format!("N = {n}: not a rest point, N |grad| = {:e}", min.gradient_norm));
        }
        w.push(wasserstein_1d(&empirical_measure(&min.config), &limit, 1.0).unwrap());
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = log_log_fit(&xs, &w);
    outcome(
        (fit.slope + 1.0).abs() <= 0.2,
        format!("slope {:.4}, W1 = {:?}", fit.slope, w.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()),
    )
}

fn discrete_continuum_closeness() -> Outcome {
    let ns = [16usize, 32, 64, 128];
    let start = |theta: f64| theta + 0.08 * (2.0 * PI * theta).sin() / (2.0 * PI);
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, rho) in [("uniform", Density1D::uniform()), ("cosine 0.05", Density1D::cosine(0.05).unwrap())] {
        let mut sup = Vec::new();
        for &n in &ns {
            match run_closeness(&ClosenessSetup::new(rho.clone(), n), start) {
                Ok(series) => sup.push(series.sup_gronwall()),
                Err(e) => return outcome(false, format!("{label}, N = {n}: {e}")),
            }
        }
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let slope = log_log_fit(&xs, &sup).slope;
        pass &= (slope + 4.0).abs() <= 0.5;
        detail.push(format!("{label} slope {slope:.3}"));
    }
    outcome(pass, detail.join(", "))
}

fn comparison_principle() -> Outcome {
    let rho = Density1D::cosine(0.1).unwrap();
    let m = 256;
    let (_, weight) = u_transform(&EulerianField::from_fn(|_| 1.0, m).unwrap(), &rho, 2.0);
    let h = 1.0 / m as f64;
    let norm: f64 = weight.iter().sum::<f64>() * h;
    let u0 = |x: f64| (1.0 + 0.3 * (2.0 * PI * x).sin() + 0.1 * (6.0 * PI * x).cos()) / norm;
    let f0 = EulerianField::new((0..m).map(|k| u0((k as f64 + 0.5) * h) * weight[k]).collect(), 0.0).unwrap();
    let traj = match evolve_eulerian(
        &f0,
        &rho,
        2.0,
        &EulerianOptions {
            dt: 1.0,
            t_end: 0.1,
            record_every: None,
        },
    ) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("run aborted: {e}")),
    };
    let diag = comparison_diagnostics(&traj, &rho, 2.0, &[0.8, 1.0, 1.2], DiagnosticTolerances::default());
    let worst = diag
        .violations
        .iter()
        .map(|v| v.increase)
        .fold(0.0f64, f64::max);
    outcome(
        diag.is_monotone() && diag.bounds_hold,
        format!(
            "{} steps, {} violations (largest {worst:.1e}), u range [{:.4}, {:.4}] -> [{:.4}, {:.4}]",
            traj.steps,
            diag.violations.len(),
            diag.min_u[0],
            diag.max_u[0],
            diag.min_u.last().unwrap(),
            diag.max_u.last().unwrap()
        ),
    )
}

fn stationary_residual() -> Outcome {
    let rho = Density1D::cosine(0.1).unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for m in [128usize, 256, 512] {
        let f = stationary_state(&rho, 2.0, m).unwrap();
        let sup = eulerian_rhs(&f, &rho, 2.0)
            .unwrap()
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let bound = 10.0 / (m * m) as f64;
        pass &= sup <= bound;
        detail.push(format!("M={m}: {sup:.2e} <= {bound:.2e}"));
    }
    outcome(pass, detail.join(", "))
}

fn hessian_counterexample() -> Outcome {
    let eps = 0.1;
    let mut values = Vec::new();
    for delta in [1e-3, 1e-4, 1e-5] {
        let spec = CounterexampleSpec::new(eps, delta).unwrap();
        match counterexample_value(&spec) {
            Ok(v) => values.push(v),
            Err(e) => return outcome(false, format!("delta = {delta:e}: {e}")),
        }
    }
    let limit = 4.0 * eps - 8.0;
    let last = *values.last().unwrap();
    let rel = ((last - limit) / limit).abs();
    outcome(
        values.iter().all(|v| *v < 0.0) && rel <= 0.05,
        format!("values {values:.4?}, limit {limit}, relative error {rel:.2e}"),
    )
}

fn random_matrix(rng: &mut ChaCha8Rng) -> Mat2 {
    loop {
        let mut m = [[0.0; 2]; 2];
        for row in &mut m {
            for v in row.iter_mut() {
                *v = 2.0 * rng.random::<f64>() - 1.0;
            }
        }
        let cand = Mat2::IDENTITY + Mat2(m).scaled(0.8);
        if cand.det() > 0.2 {
            return cand;
        }
    }
}

fn lattice_forms() -> Outcome {
    let id_value = f_phi(&Mat2::IDENTITY).unwrap();
    let target = 10.0 / (3.0 * 3f64.sqrt());
    let id_ok = (id_value - target).abs() <= 1e-12;

    let y = DeformationField::from_lattice_fn(32, 1.0, |a, b| {
        [
            (2.0 * PI * a).sin() + 0.4 * (2.0 * PI * (a + b)).cos(),
            (2.0 * PI * b).cos() - 0.3 * (2.0 * PI * a).sin(),
        ]
    })
    .unwrap();
    let report = expansion_check(&y, &[0.02, 0.01, 0.005, 0.0025]).unwrap();
    let order = report.fitted_order.unwrap_or(f64::NAN);
    let order_ok = (order - 3.0).abs() <= 0.3;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let rotation_60 = Mat2::rotation(PI / 3.0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = random_matrix(&mut rng);
        let q = Mat2::rotation(2.0 * PI * rng.random::<f64>());
        let base = f_phi(&m).unwrap();
        let scale = base.abs().max(1.0);
        worst = worst
            .max((f_phi(&(q * m)).unwrap() - base).abs() / scale)
            .max((f_phi(&(m * rotation_60)).unwrap() - base).abs() / scale);
    }
    let inv_ok = worst <= 1e-10;
    outcome(
        id_ok && order_ok && inv_ok,
        format!(
            "F(Id) error {:.1e}, expansion order {order:.3}, invariance defect {worst:.1e}",
            (id_value - target).abs()
        ),
    )
}

fn lattice_relaxation() -> Outcome {
    let n = 12;
    let reference = hex_points(n).unwrap();
    let start = perturbed_hex_points(n, 0.2 / n as f64, 1).unwrap();
    let traj = match evolve_points_2d(
        &start,
        &reference,
        &PointFlowOptions {
            max_iterations: 3000,
            ..Default::default()
        },
    ) {
        Ok(t) => t,
        Err(e) => return outcome(false, format!("point flow aborted: {e}")),
    };
    let s = &traj.samples;
    let decreasing = s.windows(2).all(|w| w[1].energy < w[0].energy);
    let ratio = s.last().unwrap().distance / s[0].distance;
    let iters: Vec<f64> = s.iter().map(|p| p.iteration as f64).collect();
    let dist: Vec<f64> = s.iter().map(|p| p.distance).collect();
    let fit = exponential_fit(&iters, &dist);

    let field = DeformationField::from_lattice_fn(64, 1.0, |a, b| {
        [
            (2.0 * PI * a).sin() + 0.3 * (2.0 * PI * (a + b)).cos(),
            (2.0 * PI * b).cos() - 0.2 * (2.0 * PI * a).sin(),
        ]
    })
    .unwrap();
    let opts = DeformationOptions {
        t_end: 0.05,
        record_every: 0.0025,
        ..Default::default()
    };
    let field = DeformationField::new(64, 0.01 / field.max_gradient_deviation(), field.y().to_vec()).unwrap();
    let (window_ok, max_dev) = match evolve_deformation(&field, &opts) {
        Ok(t) => {
            let max_dev = t
                .samples
                .iter()
                .map(|p| p.max_gradient_deviation)
                .fold(0.0f64, f64::max);
            (max_dev <= opts.eta / 4.0, max_dev)
        }
        Err(e) => return outcome(false, format!("deformation flow aborted: {e}")),
    };
    outcome(
        decreasing && ratio <= 1e-3 && fit.r_squared >= 0.9 && window_ok,
        format!(
            "{} iterations, energy strictly decreasing: {decreasing}, distance ratio {ratio:.2e}, fit R^2 {:.4} rate {:.3e}, max |grad X - Id| {max_dev:.4} (limit {})",
            s.len() - 1,
            fit.r_squared,
            -fit.slope,
            opts.eta / 4.0
        ),
    )
}

fn oracle_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rho = Density1D::cosine(0.4).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = rng.random_range(1..=32usize);
        let r = if k % 2 == 0 { 2.0 } else { 3.0 };
        let mut pts: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let cfg = PointConfig1D::new(pts, r).unwrap();
        let w = wasserstein_1d_pow(&voronoi_measure(&cfg, &rho).unwrap(), &rho, r).unwrap();
        worst = worst.max((w - energy(&cfg, &rho)).abs());
    }
    outcome(worst <= 1e-6, format!("largest |W_r^r - F| = {worst:.2e} over 50 configurations"))
}

fn manifold_contrast() -> Outcome {
    let space = ModelSpace::new(Curvature::Hyperbolic, 2).unwrap();
    let slow = RadialMeasure::new(space, RadialProfile::Exponential { rate: 2.0 }, DEFAULT_R_MAX).unwrap();
    let fast = RadialMeasure::new(space, RadialProfile::Exponential { rate: 4.0 }, DEFAULT_R_MAX).unwrap();
    let slow_verdict = moment_condition(&slow, 2.0, 1.0).unwrap().verdict;
    let fast_verdict = moment_condition(&fast, 2.0, 1.0).unwrap().verdict;
    let moments_finite = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .all(|&p| slow.polynomial_moment(p).status == TailStatus::Finite);
    outcome(
        slow_verdict == "divergent (A-term)" && moments_finite && fast_verdict == "finite",
        format!("e^-2R: {slow_verdict}, moments p in {{1,2,4,8}} finite: {moments_finite}; e^-4R: {fast_verdict}"),
    )
}

fn calibration() -> Outcome {
    let report = match scaling_calibration(&[6, 8, 12, 16, 24], Some(512)) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("{e}")),
    };
    println!("       n   points   F_N2(hex)       n^2 ratio     n^4 ratio     grid n^2 ratio");
    for row in &report.rows {
        println!(
            "     {:>3} {:>8}   {:.6e}   {:.6e}  {:.6e}  {}",
            row.n,
            row.points,
            row.energy,
            row.ratio_n2,
            row.ratio_n4,
            row.grid_ratio_n2.map_or("-".into(), |v| format!("{v:.6e}"))
        );
    }
    println!("     {}", report.conclusion);
    let states_discrepancy = report.conclusion.contains("1/n^4");
    outcome(
        (report.fitted_exponent + 2.0).abs() <= 0.05 && states_discrepancy,
        format!("fitted exponent {:.4} (R^2 {:.6})", report.fitted_exponent, report.r_squared),
    )
}

#[test]
fn acceptance_criteria() {
    let results = [
        run(1, "quantization constant 1/12", secs(1), uniform_quantization_constant),
        run(2, "asymptotic density law", secs(120), asymptotic_density_law),
        run(3, "discrete-continuum closeness", secs(300), discrete_continuum_closeness),
        run(4, "comparison principle", secs(30), comparison_principle),
        run(5, "stationary state residual", secs(10), stationary_residual),
        run(6, "Hessian counterexample", secs(30), hessian_counterexample),
        run(7, "lattice form consistency", secs(10), lattice_forms),
        run(8, "lattice relaxation", secs(600), lattice_relaxation),
        run(9, "Wasserstein oracle identity", secs(60), oracle_identity),
        run(10, "manifold sharpness contrast", secs(5), manifold_contrast),
        run(11, "hexagonal calibration", secs(120), calibration),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    assert_eq!(passed, results.len());
}
