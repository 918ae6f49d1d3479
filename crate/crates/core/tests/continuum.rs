use std::f64::consts::PI;

use quantflow::continuum::{
    evolve_eulerian, evolve_lagrangian, pushforward_density, EulerianField, EulerianOptions, LagrangianMap,
    LagrangianOptions,
};
use quantflow::density::Density1D;

fn start(theta: f64) -> f64 {
    theta + 0.2 * (2.0 * PI * theta).sin().powi(3) / (2.0 * PI)
}

#[test]
fn eulerian_run_conserves_mass() {
    let rho = Density1D::cosine(0.1).unwrap();
    let m = 128;
    let f0 = pushforward_density(&LagrangianMap::from_fn(start, 4 * m).unwrap(), m).unwrap();
    let traj = evolve_eulerian(
        &f0,
        &rho,
        2.0,
        &EulerianOptions {
            dt: 1.0,
            t_end: 0.05,
            record_every: Some(0.005),
        },
    )
    .unwrap();
    for s in &traj.samples {
        assert!((s.mass() - 1.0).abs() <= 1e-8, "t = {}: mass {}", s.t(), s.mass());
    }
}

#[test]
fn slopes_stay_bounded_below() {
    let rho = Density1D::cosine(0.05).unwrap();
    let map = LagrangianMap::from_fn(start, 128).unwrap();
    let initial_min = map.slopes().into_iter().fold(f64::INFINITY, f64::min);
    let traj = evolve_lagrangian(
        &map,
        &rho,
        2.0,
        &LagrangianOptions {
            dt: 1.0,
            t_end: 0.1,
            record_every: Some(0.01),
        },
    )
    .unwrap();
    for s in &traj.samples {
        let low = s.slopes().into_iter().fold(f64::INFINITY, f64::min);
        assert!(low >= 0.5 * initial_min, "t = {}: slope {low} vs {initial_min}", s.t());
    }
}

fn l1_gap(m: usize, t_end: f64) -> f64 {
    let rho = Density1D::cosine(0.1).unwrap();
    let map = LagrangianMap::from_fn(start, m).unwrap();
    let lag = evolve_lagrangian(
        &map,
        &rho,
        2.0,
        &LagrangianOptions {
            dt: 1.0,
            t_end,
            record_every: None,
        },
    )
    .unwrap();
    let f0 = pushforward_density(&map, m).unwrap();
    let eul = evolve_eulerian(
        &f0,
        &rho,
        2.0,
        &EulerianOptions {
            dt: 1.0,
            t_end,
            record_every: None,
        },
    )
    .unwrap();
    let pushed = pushforward_density(lag.last(), m).unwrap();
    let last: &EulerianField = eul.last();
    pushed
        .values()
        .iter()
        .zip(last.values())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / m as f64
}

#[test]
fn lagrangian_and_eulerian_flows_agree() {
    let coarse = l1_gap(64, 0.01);
    let fine = l1_gap(128, 0.01);
    assert!(fine < 1e-3, "L1 gap {fine}");
    assert!(fine < 0.7 * coarse, "no decay with M: {coarse} -> {fine}");
}
