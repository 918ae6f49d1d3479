//! Point configurations on the torus `R^2 / L`, `L = Z e1 + Z e2`, with the
//! uniform weight `rho = 1` on the fundamental domain
//! `Pi = {a e1 + b e2 : |a|, |b| <= 1/2}`.
//!
//! Voronoi cells are clipped exactly as polygons; a nearest-point grid
//! quadrature is provided as an independent check.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::deformation::CELL_AREA;
use super::forms::{E1, E2};
use super::mat2::{add, cross, dot, norm2, scale, sub, Mat2, Vec2};
use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn basis() -> Mat2 {
    Mat2::from_columns(E1, E2)
}

fn basis_inverse() -> Mat2 {
    basis().inverse().expect("lattice basis is invertible")
}

fn wrap_unit(v: f64) -> f64 {
    let w = v - v.round();
    // keep the half-open convention [-1/2, 1/2)
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Lattice coordinates `(a, b)` of `x = a e1 + b e2`.
pub fn lattice_coords(x: Vec2) -> Vec2 {
    basis_inverse().apply(x)
}

/// The representative of `x` in `Pi` (lattice coordinates in `[-1/2, 1/2)`).
pub fn reduce(x: Vec2) -> Vec2 {
    let ab = lattice_coords(x);
    basis().apply([wrap_unit(ab[0]), wrap_unit(ab[1])])
}

/// The shortest vector among the nine translates `v + a e1 + b e2`,
/// `a, b in {-1, 0, 1}`, of the reduced difference.
pub fn periodic_difference(v: Vec2) -> Vec2 {
    let r = reduce(v);
    let mut best = r;
    let mut best_d = norm2(r);
    for a in -1..=1 {
        for b in -1..=1 {
            if a == 0 && b == 0 {
                continue;
            }
            let c = add(r, add(scale(a as f64, E1), scale(b as f64, E2)));
            let d = norm2(c);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
    }
    best
}

pub fn periodic_distance(x: Vec2, y: Vec2) -> f64 {
    norm2(periodic_difference(sub(x, y))).sqrt()
}

/// Points reduced to `Pi`, together with the subdivision `n` they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct HexConfig {
    n: usize,
    points: Vec<Vec2>,
}

impl HexConfig {
    pub fn new(n: usize, points: Vec<Vec2>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyConfig);
        }
        if let Some(v) = points.iter().flatten().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { x: *v });
        }
        Ok(Self {
            n,
            points: points.into_iter().map(reduce).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_periodic_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in 0..i {
                best = best.min(periodic_distance(self.points[i], self.points[j]));
            }
        }
        best
    }
}

/// The `n^2` points of `L / n` in `Pi`.
pub fn hex_points(n: usize) -> Result<HexConfig> {
    if n == 0 {
        return Err(Error::EmptyConfig);
    }
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pts.push(basis().apply([i as f64 / n as f64, j as f64 / n as f64]));
        }
    }
    HexConfig::new(n, pts)
}

/// `hex_points(n)` with each point moved uniformly inside a disc of radius
/// `amplitude`.
pub fn perturbed_hex_points(n: usize, amplitude: f64, seed: u64) -> Result<HexConfig> {
    let base = hex_points(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = base
        .points
        .iter()
        .map(|&p| {
            let r = amplitude * rng.random::<f64>().sqrt();
            let angle = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            add(p, [r * angle.cos(), r * angle.sin()])
        })
        .collect();
    HexConfig::new(n, pts)
}

/// Geometry of one periodic Voronoi cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellGeometry {
    pub area: f64,
    /// Centroid, expressed near the generating point (not reduced).
    pub centroid: Vec2,
    /// `∫_cell |x_i - y|^2 dy`
    pub second_moment: f64,
    /// Vertices relative to the generating point, counter-clockwise.
    pub vertices: Vec<Vec2>,
}

fn clip(poly: &[Vec2], normal: Vec2, offset: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for k in 0..poly.len() {
        let p = poly[k];
        let q = poly[(k + 1) % poly.len()];
        let sp = dot(p, normal) - offset;
        let sq = dot(q, normal) - offset;
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push(add(p, scale(t, sub(q, p))));
        }
    }
    out
}

fn unit_hexagon() -> Vec<Vec2> {
    let r = 1.0 / SQRT3;
    (0..6)
        .map(|k| {
            let angle = std::f64::consts::PI / 6.0 + k as f64 * std::f64::consts::PI / 3.0;
            [r * angle.cos(), r * angle.sin()]
        })
        .collect()
}

fn moments(vertices: Vec<Vec2>, origin: Vec2) -> CellGeometry {
    let mut area2 = 0.0;
    let mut first = [0.0, 0.0];
    let mut second = 0.0;
    for k in 0..vertices.len() {
        let p = vertices[k];
        let q = vertices[(k + 1) % vertices.len()];
        let c = cross(p, q);
        area2 += c;
        first = add(first, scale(c, add(p, q)));
        second += c * (norm2(p) + dot(p, q) + norm2(q));
    }
    let area = area2 / 2.0;
    let centroid = if area > 0.0 {
        add(origin, scale(1.0 / (6.0 * area), first))
    } else {
        origin
    };
    CellGeometry {
        area,
        centroid,
        second_moment: second / 12.0,
        vertices,
    }
}

fn max_radius(poly: &[Vec2]) -> f64 {
    poly.iter().map(|&p| norm2(p)).fold(0.0, f64::max).sqrt()
}

fn cell_with_cutoff(points: &[Vec2], i: usize, cutoff: Option<f64>) -> Vec<Vec2> {
    let xi = points[i];
    let mut candidates: Vec<(f64, Vec2)> = Vec::new();
    for (j, &xj) in points.iter().enumerate() {
        let base = sub(xj, xi);
        for a in -2..=2 {
            for b in -2..=2 {
                if j == i {
                    // images of x_i itself are already built into the starting hexagon
                    continue;
                }
                let c = add(base, add(scale(a as f64, E1), scale(b as f64, E2)));
                let d = norm2(c).sqrt();
                if cutoff.is_none_or(|k| d < k) {
                    candidates.push((d, c));
                }
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut poly = unit_hexagon();
    for (d, c) in candidates {
        if d >= 2.0 * max_radius(&poly) {
            break;
        }
        poly = clip(&poly, c, 0.5 * d * d);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Exact periodic Voronoi cell of point `i`.
pub fn voronoi_cell(cfg: &HexConfig, i: usize) -> Result<CellGeometry> {
    let pts = &cfg.points;
    let spacing = (CELL_AREA / pts.len() as f64).sqrt();
    let cutoff = 6.0 * spacing;
    let mut poly = cell_with_cutoff(pts, i, Some(cutoff));
    if poly.is_empty() || 2.0 * max_radius(&poly) >= cutoff {
        poly = cell_with_cutoff(pts, i, None);
    }
    let geometry = moments(poly, pts[i]);
    if !(geometry.area > 0.0) {
        return Err(Error::Resolution(format!("Voronoi cell {i} has no area")));
    }
    Ok(geometry)
}

pub fn voronoi_cells(cfg: &HexConfig) -> Result<Vec<CellGeometry>> {
    (0..cfg.len()).map(|i| voronoi_cell(cfg, i)).collect()
}

/// `F_{N,2} = ∫_Pi min_i |x_i - y|^2 dy` (periodic distance).
pub fn discrete_energy_2d(cfg: &HexConfig) -> Result<f64> {
    Ok(voronoi_cells(cfg)?.iter().map(|c| c.second_moment).sum())
}

/// `grad_i F = 2 |V_i| (x_i - b_i)` with `b_i` the centroid of the cell.
pub fn discrete_gradient_2d(cfg: &HexConfig) -> Result<Vec<Vec2>> {
    Ok(gradient_from_cells(cfg, &voronoi_cells(cfg)?))
}

fn gradient_from_cells(cfg: &HexConfig, cells: &[CellGeometry]) -> Vec<Vec2> {
    cfg.points
        .iter()
        .zip(cells)
        .map(|(&x, c)| scale(2.0 * c.area, sub(x, c.centroid)))
        .collect()
}

/// Nearest-point quadrature of energy, masses and centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct GridVoronoi {
    pub energy: f64,
    pub masses: Vec<f64>,
    /// Centroids, expressed near the generating points.
    pub centroids: Vec<Vec2>,
}

/// Midpoint rule on a `res x res` lattice-coordinate grid over `Pi`; every
/// node is assigned to its nearest point (ties to the lowest index).
pub fn grid_voronoi(cfg: &HexConfig, res: usize) -> Result<GridVoronoi> {
    if res == 0 {
        return Err(Error::InvalidConfig("grid resolution must be positive".into()));
    }
    let pts = &cfg.points;
    let n = pts.len();
    let nb = ((n as f64).sqrt().floor() as usize).max(1);
    let coords: Vec<Vec2> = pts
        .iter()
        .map(|&p| {
            let ab = lattice_coords(p);
            [wrap_unit(ab[0]) + 0.5, wrap_unit(ab[1]) + 0.5]
        })
        .collect();
    let bucket_of = |v: f64| ((v * nb as f64).floor() as usize).min(nb - 1);
    let mut buckets = vec![Vec::new(); nb * nb];
    for (i, c) in coords.iter().enumerate() {
        buckets[bucket_of(c[0]) * nb + bucket_of(c[1])].push(i);
    }
    let reach = 2usize;
    let brute = 2 * reach + 1 >= nb;
    // Euclidean radius guaranteed to be covered by the bucket block
    let covered = reach as f64 / nb as f64 * 0.5f64.sqrt();

    let weight = CELL_AREA / (res * res) as f64;
    let mut energy = 0.0;
    let mut masses = vec![0.0; n];
    let mut first = vec![[0.0; 2]; n];
    let h = 1.0 / res as f64;
    let nearest = |y: Vec2, candidates: &mut dyn Iterator<Item = usize>| {
        let mut best = (f64::INFINITY, usize::MAX, [0.0; 2]);
        for i in candidates {
            let d = periodic_difference(sub(y, pts[i]));
            let dist = norm2(d);
            if dist < best.0 || (dist == best.0 && i < best.1) {
                best = (dist, i, d);
            }
        }
        best
    };
    for ia in 0..res {
        for ib in 0..res {
            let a = (ia as f64 + 0.5) * h;
            let b = (ib as f64 + 0.5) * h;
            let y = basis().apply([a - 0.5, b - 0.5]);
            let mut best = if brute {
                nearest(y, &mut (0..n))
            } else {
                let (ba, bb) = (bucket_of(a), bucket_of(b));
                let mut ids = Vec::new();
                for da in 0..=2 * reach {
                    for db in 0..=2 * reach {
                        let ka = (ba + nb + da - reach) % nb;
                        let kb = (bb + nb + db - reach) % nb;
                        ids.extend_from_slice(&buckets[ka * nb + kb]);
                    }
                }
                ids.sort_unstable();
                nearest(y, &mut ids.into_iter())
            };
            if !brute && best.0.sqrt() > covered {
                best = nearest(y, &mut (0..n));
            }
            let (dist, i, d) = best;
            energy += weight * dist;
            masses[i] += weight;
            // y = x_i + d
            first[i] = add(first[i], scale(weight, d));
        }
    }
    let mut centroids = Vec::with_capacity(n);
    for i in 0..n {
        if masses[i] == 0.0 {
            return Err(Error::Resolution(format!(
                "cell {i} received no quadrature nodes at resolution {res}"
            )));
        }
        centroids.push(add(pts[i], scale(1.0 / masses[i], first[i])));
    }
    Ok(GridVoronoi {
        energy,
        masses,
        centroids,
    })
}

/// Root-mean-square displacement from `reference` (matched by index, minimal
/// periodic images) after removing the mean displacement.
pub fn lattice_distance(cfg: &HexConfig, reference: &HexConfig) -> f64 {
    let n = cfg.len() as f64;
    let disp: Vec<Vec2> = cfg
        .points
        .iter()
        .zip(&reference.points)
        .map(|(&x, &s)| periodic_difference(sub(x, s)))
        .collect();
    let mean = scale(1.0 / n, disp.iter().fold([0.0, 0.0], |acc, &d| add(acc, d)));
    (disp.iter().map(|&d| norm2(sub(d, mean))).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct PointFlowOptions {
    /// Step size; `None` uses `1 / (2 * mean cell area)`, the Lloyd step.
    pub dt: Option<f64>,
    pub max_iterations: usize,
    /// Stop once `max_i |grad_i F|` falls below this.
    pub gradient_tolerance: f64,
    /// Keep a snapshot of the points every this many iterations (0: none).
    pub snapshot_every: usize,
}

impl Default for PointFlowOptions {
    fn default() -> Self {
        Self {
            dt: None,
            max_iterations: 2000,
            gradient_tolerance: 1e-14,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointFlowSample {
    pub iteration: usize,
    pub energy: f64,
    pub distance: f64,
    pub gradient_norm: f64,
}

#[derive(Debug, Clone)]
pub struct PointTrajectory2D {
    pub samples: Vec<PointFlowSample>,
    pub snapshots: Vec<(usize, Vec<Vec2>)>,
    pub last: HexConfig,
    pub rejected: usize,
}

impl PointTrajectory2D {
    pub fn write_series_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "energy", "distance", "gradient_norm"])?;
        for s in &self.samples {
            w.write_record([
                s.iteration.to_string(),
                s.energy.to_string(),
                s.distance.to_string(),
                s.gradient_norm.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_snapshots_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "i", "px", "py"])?;
        for (iter, pts) in &self.snapshots {
            for (i, p) in pts.iter().enumerate() {
                w.write_record([iter.to_string(), i.to_string(), p[0].to_string(), p[1].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn sup_norm(g: &[Vec2]) -> f64 {
    g.iter().map(|v| norm2(*v).sqrt()).fold(0.0, f64::max)
}

/// Gradient descent `x <- x - dt grad F` with step halving whenever the
/// energy fails to decrease strictly. `reference` is the configuration the
/// distance series is measured against.
pub fn evolve_points_2d(
    initial: &HexConfig,
    reference: &HexConfig,
    opts: &PointFlowOptions,
) -> Result<PointTrajectory2D> {
    if reference.len() != initial.len() {
        return Err(Error::InvalidConfig("reference must have as many points as the flow".into()));
    }
    let mut cfg = initial.clone();
    let mut cells = voronoi_cells(&cfg)?;
    let mut energy: f64 = cells.iter().map(|c| c.second_moment).sum();
    let mut grad = gradient_from_cells(&cfg, &cells);
    let mean_area = CELL_AREA / cfg.len() as f64;
    let mut dt = opts.dt.unwrap_or(0.5 / mean_area);
    let mut samples = vec![PointFlowSample {
        iteration: 0,
        energy,
        distance: lattice_distance(&cfg, reference),
        gradient_norm: sup_norm(&grad),
    }];
    let mut snapshots = Vec::new();
    if opts.snapshot_every > 0 {
        snapshots.push((0, cfg.points.clone()));
    }
    let mut rejected = 0;
    for iteration in 1..=opts.max_iterations {
        if sup_norm(&grad) < opts.gradient_tolerance {
            break;
        }
        let mut accepted = false;
        while !accepted {
            let moved: Vec<Vec2> = cfg
                .points
                .iter()
                .zip(&grad)
                .map(|(&x, &g)| reduce(sub(x, scale(dt, g))))
                .collect();
            let trial = HexConfig {
                n: cfg.n,
                points: moved,
            };
            let trial_cells = voronoi_cells(&trial)?;
            let trial_energy: f64 = trial_cells.iter().map(|c| c.second_moment).sum();
            if trial_energy < energy {
                cfg = trial;
                cells = trial_cells;
                energy = trial_energy;
                accepted = true;
            } else {
                rejected += 1;
                dt /= 2.0;
                if dt * sup_norm(&grad) < 1e-16 {
                    // no representable decrease left: the flow has converged
                    return Ok(PointTrajectory2D {
                        samples,
                        snapshots,
                        last: cfg,
                        rejected,
                    });
                }
            }
        }
        grad = gradient_from_cells(&cfg, &cells);
        samples.push(PointFlowSample {
            iteration,
            energy,
            distance: lattice_distance(&cfg, reference),
            gradient_norm: sup_norm(&grad),
        });
        if opts.snapshot_every > 0 && iteration % opts.snapshot_every == 0 {
            snapshots.push((iteration, cfg.points.clone()));
        }
    }
    Ok(PointTrajectory2D {
        samples,
        snapshots,
        last: cfg,
        rejected,
    })
}

/// `∫_{hexagon} |y|^2 dy` for the regular hexagon of inradius `s/2`.
pub fn hexagon_second_moment(s: f64) -> f64 {
    5.0 / (24.0 * SQRT3) * s.powi(4)
}
