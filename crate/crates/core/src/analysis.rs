//! Diagnostics on converged states: segregation, limit equation,
//! subharmonicity, Hölder and Lipschitz estimates, growth away from the free
//! boundary, thin-support decay and the Alt-Caffarelli-Friedman functional.
//!
//! All field-level diagnostics are two-dimensional.

use crate::error::{Error, Result};
use crate::geometry::{oscillation, DomainMask, Grid, NodeClass, Point, ScalarField};
use crate::pucci::{hessian_entries, pucci_minus2, Ellipticity};
use crate::solver::SystemState;

const DIM: i32 = 2;

fn cell_area(g: &Grid) -> f64 {
    g.h() * g.h()
}

/// Area of `∪_{i<j} {u_i > delta} ∩ {u_j > delta}` as node count times `h^2`.
pub fn support_overlap(state: &SystemState, mask: &DomainMask, delta: f64) -> f64 {
    let g = mask.grid();
    let count = (0..g.len())
        .filter(|&k| mask.class(k) != NodeClass::Exterior)
        .filter(|&k| state.fields.iter().filter(|f| f.get(k) > delta).count() >= 2)
        .count();
    count as f64 * cell_area(g)
}

/// `h^2 sum_interior (1/eps) sum_{i<j} u_i u_j`.
pub fn interaction_mass(state: &SystemState, mask: &DomainMask) -> f64 {
    let inv_eps = 1.0 / state.epsilon;
    let total: f64 = mask
        .interior()
        .iter()
        .map(|&k| {
            let mut s = 0.0;
            for i in 0..state.d() {
                for j in i + 1..state.d() {
                    s += state.fields[i].get(k) * state.fields[j].get(k);
                }
            }
            s
        })
        .sum();
    inv_eps * total * cell_area(mask.grid())
}

/// Interior nodes at or below `delta` with a 4-neighbour above it.
pub fn free_boundary_points(field: &ScalarField, mask: &DomainMask, delta: f64) -> Vec<usize> {
    mask.interior()
        .iter()
        .copied()
        .filter(|&k| field.get(k) <= delta)
        .filter(|&k| {
            [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(di, dj)| {
                mask.neighbour(k, di, dj)
                    .is_some_and(|n| mask.class(n) != NodeClass::Exterior && field.get(n) > delta)
            })
        })
        .collect()
}

/// Largest value of `field` over non-exterior nodes in the closed ball.
pub fn ball_sup(field: &ScalarField, mask: &DomainMask, center: Point, radius: f64) -> Option<f64> {
    mask.grid()
        .nodes_in_ball(center, radius)
        .filter(|&k| mask.class(k) != NodeClass::Exterior)
        .map(|k| field.get(k))
        .reduce(f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRow {
    pub radius: f64,
    pub sup: f64,
    pub ratio: f64,
}

/// `sup_{B_R(x0)} u` against `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthProfile {
    pub center: Point,
    pub rows: Vec<GrowthRow>,
    /// Radii whose ball left the disk.
    pub skipped: Vec<f64>,
    /// Largest `sup / R`.
    pub slope: f64,
}

impl GrowthProfile {
    /// `max ratio / min ratio` over the retained radii; `None` when no radius was kept.
    pub fn ratio_spread(&self) -> Option<f64> {
        if self.rows.is_empty() {
            return None;
        }
        let hi = self.rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        let lo = self.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        Some(hi / lo)
    }
}

pub fn linear_growth_profile(field: &ScalarField, mask: &DomainMask, x0: usize, radii: &[f64]) -> Result<GrowthProfile> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Hypothesis("growth radii must be strictly increasing".into()));
    }
    let h = mask.grid().h();
    if radii.iter().any(|&r| r < 2.0 * h - 1e-12) {
        return Err(Error::Hypothesis(format!("growth radii must be >= 2h = {}", 2.0 * h)));
    }
    let center = mask.grid().position_of(x0);
    let reach = center.dist(mask.center());
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &r in radii {
        if reach + r > mask.radius() {
            skipped.push(r);
            continue;
        }
        let sup = ball_sup(field, mask, center, r).unwrap_or(0.0);
        rows.push(GrowthRow { radius: r, sup, ratio: sup / r });
    }
    let slope = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(GrowthProfile { center, rows, skipped, slope })
}

/// Largest difference quotient over 4-adjacent node pairs inside the ball.
pub fn lipschitz_norm_estimate(field: &ScalarField, mask: &DomainMask, center: Point, radius: f64) -> Result<f64> {
    let g = mask.grid();
    let h = g.h();
    let in_ball: Vec<usize> = g
        .nodes_in_ball(center, radius)
        .filter(|&k| mask.class(k) != NodeClass::Exterior)
        .collect();
    if !in_ball.iter().any(|&k| mask.class(k) == NodeClass::Interior) {
        return Err(Error::EmptyBall { x: center.x, y: center.y, radius });
    }
    let inside = |k: usize| g.position_of(k).dist(center) <= radius * (1.0 + 1e-12) && mask.class(k) != NodeClass::Exterior;
    let mut best = 0.0f64;
    for &k in &in_ball {
        for &(di, dj) in &[(1, 0), (0, 1)] {
            if let Some(n) = mask.neighbour(k, di, dj) {
                if inside(n) {
                    best = best.max((field.get(n) - field.get(k)).abs() / h);
                }
            }
        }
    }
    Ok(best)
}

/// Dyadic oscillation fit `osc_{B_r} u ≈ C r^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub center: Point,
    pub radii: Vec<f64>,
    pub oscillations: Vec<f64>,
    pub alpha: f64,
    pub constant: f64,
    /// RMS of the log-log fit residuals.
    pub fit_residual: f64,
    /// Depth actually used after dropping under-resolved balls.
    pub depth: usize,
}

/// Least-squares slope/intercept of `y` against `x`, with RMS residual.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    (slope, icpt, (rss / n).sqrt())
}

pub fn holder_exponent_estimate(field: &ScalarField, mask: &DomainMask, center: Point, k_max: usize) -> Result<HolderEstimate> {
    let h = mask.grid().h();
    let mut depth = 0;
    let mut radii = Vec::new();
    let mut oscillations = Vec::new();
    for k in 1..=k_max {
        let r = 0.5f64.powi(k as i32);
        if 2.0 * r < 4.0 * h - 1e-12 {
            break;
        }
        radii.push(r);
        oscillations.push(oscillation(field, mask, center, r)?);
        depth = k;
    }
    let (lx, ly): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&oscillations)
        .filter(|(_, &o)| o > 0.0)
        .map(|(&r, &o)| (r.ln(), o.ln()))
        .unzip();
    if lx.len() < 2 {
        return Err(Error::Hypothesis(format!(
            "need two resolvable balls with positive oscillation, got {}",
            lx.len()
        )));
    }
    let (alpha, icpt, fit_residual) = line_fit(&lx, &ly);
    Ok(HolderEstimate { center, radii, oscillations, alpha, constant: icpt.exp(), fit_residual, depth })
}

/// Minimum 5-point Laplacian over stencil-complete nodes.
pub fn subharmonicity_check(field: &ScalarField, mask: &DomainMask) -> f64 {
    let g = mask.grid();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let nx = g.nx();
    let v = field.values();
    mask.stencil_complete()
        .map(|k| (v[k + 1] + v[k - 1] + v[k + nx] + v[k - nx] - 4.0 * v[k]) * inv_h2)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinSupportReport {
    pub support_fraction: f64,
    pub sup_outer: f64,
    pub sup_inner: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Checks `sup_{B_1/2} u <= eps0 2^n` for a non-negative `u` with `sup_{B_1} u <= 1`
/// whose support fills at most `eps0` of `B_1`.
pub fn thin_support_decay_check(field: &ScalarField, mask: &DomainMask, center: Point, eps0: f64) -> Result<ThinSupportReport> {
    let g = mask.grid();
    let outer: Vec<usize> = g
        .nodes_in_ball(center, 1.0)
        .filter(|&k| mask.class(k) != NodeClass::Exterior)
        .collect();
    if outer.is_empty() {
        return Err(Error::EmptyBall { x: center.x, y: center.y, radius: 1.0 });
    }
    if let Some(&k) = outer.iter().find(|&&k| field.get(k) < 0.0) {
        return Err(Error::Hypothesis(format!("field is negative at node {k}")));
    }
    let sup_outer = outer.iter().map(|&k| field.get(k)).fold(0.0, f64::max);
    if sup_outer > 1.0 + 1e-12 {
        return Err(Error::Hypothesis(format!("sup over B_1 is {sup_outer} > 1")));
    }
    let support = outer.iter().filter(|&&k| field.get(k) != 0.0).count();
    let support_fraction = support as f64 / outer.len() as f64;
    if support_fraction > eps0 {
        return Err(Error::Hypothesis(format!(
            "support fills {support_fraction:.4} of B_1, more than eps0 = {eps0}"
        )));
    }
    let sup_inner = ball_sup(field, mask, center, 0.5).unwrap_or(0.0);
    let bound = eps0 * 2f64.powi(DIM) * (1.0 + 4.0 * g.h());
    Ok(ThinSupportReport { support_fraction, sup_outer, sup_inner, bound, pass: sup_inner <= bound })
}

/// `J(rho)` per radius with the L^2-based upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfCurve {
    pub center: Point,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub bound: f64,
    /// Radius of the ball on which the L^2 norms were taken.
    pub bound_radius: f64,
}

impl AcfCurve {
    /// Worst relative drop `max(0, J(rho_k) - J(rho_{k+1})) / J(rho_k)`.
    pub fn worst_relative_drop(&self) -> f64 {
        self.values
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| ((w[0] - w[1]) / w[0]).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Fraction of the axis-aligned square of side `h` centred at `c` inside the ball.
fn coverage(c: Point, h: f64, center: Point, radius: f64) -> f64 {
    let half = 0.5 * h * std::f64::consts::SQRT_2;
    let d = c.dist(center);
    if d + half <= radius {
        return 1.0;
    }
    if d - half >= radius {
        return 0.0;
    }
    const SUB: usize = 16;
    let step = h / SUB as f64;
    let r2 = radius * radius;
    let mut hits = 0;
    for a in 0..SUB {
        let x = c.x - 0.5 * h + (a as f64 + 0.5) * step - center.x;
        for b in 0..SUB {
            let y = c.y - 0.5 * h + (b as f64 + 0.5) * step - center.y;
            if x * x + y * y <= r2 {
                hits += 1;
            }
        }
    }
    hits as f64 / (SUB * SUB) as f64
}

/// `∫_{B_rho} |∇u|^2` from squared edge differences, each edge owning the
/// `h x h` cell centred at its midpoint, weighted by the cell's coverage.
fn dirichlet_energy(u: &ScalarField, mask: &DomainMask, center: Point, radius: f64) -> f64 {
    let g = mask.grid();
    let h = g.h();
    let mut total = 0.0;
    for k in g.nodes_in_ball(center, radius + h) {
        if mask.class(k) == NodeClass::Exterior {
            continue;
        }
        let p = g.position_of(k);
        for &(di, dj) in &[(1isize, 0isize), (0, 1)] {
            let Some(n) = mask.neighbour(k, di, dj) else { continue };
            if mask.class(n) == NodeClass::Exterior {
                continue;
            }
            let mid = Point::new(p.x + 0.5 * h * di as f64, p.y + 0.5 * h * dj as f64);
            let w = coverage(mid, h, center, radius);
            if w > 0.0 {
                let d = u.get(n) - u.get(k);
                total += w * d * d;
            }
        }
    }
    total
}

fn l2_squared(u: &ScalarField, mask: &DomainMask, center: Point, radius: f64) -> f64 {
    let g = mask.grid();
    let h2 = cell_area(g);
    g.nodes_in_ball(center, radius)
        .filter(|&k| mask.class(k) != NodeClass::Exterior)
        .map(|k| u.get(k) * u.get(k) * h2)
        .sum()
}

/// Caccioppoli constant: for non-negative subharmonic `u` on `B_R`,
/// `∫_{B_R/2} |∇u|^2 <= (16 / R^2) ∫_{B_R} u^2`, so with monotonicity
/// `J(rho) <= 4096 R^-8 |u|^2 |v|^2 <= 1024 R^-8 |(u, v)|^4` for `rho <= R/2`.
const ACF_BOUND_CONSTANT: f64 = 1024.0;

/// Product of the weighted Dirichlet averages of `u` and `v` on `B_rho(center)`.
///
/// For `n = 2` the weight `|x - center|^{2-n}` is 1. Supports must be disjoint
/// at threshold `h`. The bound uses L^2 norms over the largest ball around
/// `center` inside the disk.
pub fn acf_functional(u: &ScalarField, v: &ScalarField, mask: &DomainMask, center: Point, radii: &[f64]) -> Result<AcfCurve> {
    let g = mask.grid();
    let h = g.h();
    for (name, f) in [("u", u), ("v", v)] {
        if let Some(k) = (0..g.len()).find(|&k| mask.class(k) != NodeClass::Exterior && f.get(k) < 0.0) {
            return Err(Error::Hypothesis(format!("{name} is negative at node {k}")));
        }
    }
    if let Some(k) = (0..g.len()).find(|&k| mask.class(k) != NodeClass::Exterior && u.get(k) > h && v.get(k) > h) {
        return Err(Error::Overlap(format!("u and v both exceed h at node {k}")));
    }
    if radii.iter().any(|&r| r < 4.0 * h - 1e-12) {
        return Err(Error::Hypothesis(format!("ACF radii must be >= 4h = {}", 4.0 * h)));
    }
    let values = radii
        .iter()
        .map(|&r| {
            let eu = dirichlet_energy(u, mask, center, r) / (r * r);
            let ev = dirichlet_energy(v, mask, center, r) / (r * r);
            eu * ev
        })
        .collect();
    let bound_radius = mask.radius() - center.dist(mask.center());
    let norm2 = l2_squared(u, mask, center, bound_radius) + l2_squared(v, mask, center, bound_radius);
    let bound = ACF_BOUND_CONSTANT * bound_radius.powi(-8) * norm2 * norm2;
    Ok(AcfCurve { center, radii: radii.to_vec(), values, bound, bound_radius })
}

/// `((u_i - sum_{k != i} u_k)^+, (sum_{k != i} u_k - u_i)^+)`, the disjointly
/// supported pair standing in for the segregated limit of population `i`.
pub fn segregated_pair(state: &SystemState, i: usize) -> (ScalarField, ScalarField) {
    let g = *state.fields[i].grid();
    let mut others = ScalarField::zeros(g);
    for (j, f) in state.fields.iter().enumerate() {
        if j != i {
            others = others.zip_with(f, |a, b| a + b);
        }
    }
    let diff = state.fields[i].zip_with(&others, |a, b| a - b);
    (diff.map(|w| w.max(0.0)), diff.map(|w| (-w).max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitResidual {
    /// `max_i max |M-(u_i)|` over nodes whose whole stencil has `u_i > delta`.
    pub interior: f64,
    /// `max_i max (1/eps) u_i sum_{j != i} u_j` over the same nodes.
    pub coupling: f64,
    /// `max_i max M-(u_i - sum_{k != i} u_k)` over stencil-complete nodes.
    pub supersolution: f64,
    /// Number of nodes entering `interior`.
    pub nodes: usize,
}

pub fn limit_residual(state: &SystemState, ell: Ellipticity, mask: &DomainMask, delta: f64) -> LimitResidual {
    let g = mask.grid();
    let nx = g.nx();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let inv_eps = 1.0 / state.epsilon;
    let complete: Vec<usize> = mask.stencil_complete().collect();
    let stencil = [0isize, 1, -1, nx as isize, -(nx as isize), nx as isize + 1, nx as isize - 1, -(nx as isize) + 1, -(nx as isize) - 1];
    let mut out = LimitResidual { interior: 0.0, coupling: 0.0, supersolution: f64::NEG_INFINITY, nodes: 0 };
    for i in 0..state.d() {
        let u = state.fields[i].values();
        let mut others = vec![0.0; u.len()];
        for (j, f) in state.fields.iter().enumerate() {
            if j != i {
                for (ok, &v) in others.iter_mut().zip(f.values()) {
                    *ok += v;
                }
            }
        }
        let w: Vec<f64> = u.iter().zip(&others).map(|(a, b)| a - b).collect();
        for &k in &complete {
            if stencil.iter().all(|&s| u[(k as isize + s) as usize] > delta) {
                let (a, b, c) = hessian_entries(u, k, nx, inv_h2);
                out.interior = out.interior.max(pucci_minus2(a, b, c, ell).abs());
                out.coupling = out.coupling.max(inv_eps * u[k] * others[k]);
                out.nodes += 1;
            }
            let (a, b, c) = hessian_entries(&w, k, nx, inv_h2);
            out.supersolution = out.supersolution.max(pucci_minus2(a, b, c, ell));
        }
    }
    if out.supersolution == f64::NEG_INFINITY {
        out.supersolution = 0.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_boundary_data, build_disk_domain, BoundarySegment};
    use crate::pucci::{pucci_field, Sign};
    use crate::solver::{fixed_point_solve, SolveConfig};
    use std::f64::consts::PI;

    fn disk(h: f64) -> DomainMask {
        build_disk_domain(1.0, h, Point::ORIGIN).unwrap().1
    }

    fn state_of(fields: Vec<ScalarField>, eps: f64) -> SystemState {
        let d = fields.len();
        SystemState {
            epsilon: eps,
            fields,
            residuals: vec![0.0; d],
            outer_iters: 0,
            inner_iters: 0,
            converged: true,
            history: Vec::new(),
        }
    }

    #[test]
    fn overlap_counts_nodes() {
        let mask = disk(1.0 / 16.0);
        let g = *mask.grid();
        let left = ScalarField::from_fn(&mask, |p| if p.x < 0.0 { 1.0 } else { 0.0 });
        let right = ScalarField::from_fn(&mask, |p| if p.x > 0.0 { 1.0 } else { 0.0 });
        let s = state_of(vec![left, right], 1.0);
        assert_eq!(support_overlap(&s, &mask, 0.5), 0.0);
        assert_eq!(interaction_mass(&s, &mask), 0.0);

        let patch: Vec<usize> = g.nodes_in_ball(Point::ORIGIN, 0.2).collect();
        let mut a = ScalarField::zeros(g);
        for &k in &patch {
            a.set(k, 1.0);
        }
        let s = state_of(vec![a.clone(), a], 1.0);
        assert!((support_overlap(&s, &mask, 0.5) - patch.len() as f64 * g.h() * g.h()).abs() < 1e-15);
        assert!(support_overlap(&s, &mask, 1.0) == 0.0);
    }

    #[test]
    fn interaction_mass_matches_integrated_operator() {
        let mask = disk(1.0 / 16.0);
        let segs = [BoundarySegment::new(-1.2, 1.2, 1.0, 0), BoundarySegment::new(1.9, 4.4, 1.0, 1)];
        let phi = build_boundary_data(&mask, &segs, 1.0).unwrap();
        let ell = Ellipticity::new(1.0, 2.0).unwrap();
        let cfg = SolveConfig::default();
        let s = fixed_point_solve(&phi, 0.2, ell, &mask, &cfg).unwrap();
        let mass = interaction_mass(&s, &mask);
        let lhs = pucci_field(&s.fields[0], &mask, ell, Sign::Minus);
        let h2 = mask.grid().h().powi(2);
        let integral: f64 = mask.interior().iter().map(|&k| lhs.values.get(k)).sum::<f64>() * h2;
        assert!(mass > 0.0);
        assert!((mass - integral).abs() <= PI * cfg.outer_tol, "{mass} vs {integral}");
    }

    #[test]
    fn free_boundary_of_a_ramp() {
        let h = 1.0 / 32.0;
        let mask = disk(h);
        let g = mask.grid();
        let ramp = ScalarField::from_fn(&mask, |p| p.x.max(0.0));
        let pts = free_boundary_points(&ramp, &mask, h / 10.0);
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|&k| g.position_of(k).x.abs() <= h + 1e-12));
        let positive = ScalarField::from_fn(&mask, |p| 2.0 + p.x);
        assert!(free_boundary_points(&positive, &mask, 0.1).is_empty());
        assert!(free_boundary_points(&ScalarField::zeros(*g), &mask, 0.1).is_empty());
    }

    #[test]
    fn free_boundary_thresholds_are_consistent() {
        let mask = disk(1.0 / 32.0);
        let f = ScalarField::from_fn(&mask, |p| (p.x + 0.3 * p.y).max(0.0).powf(1.5));
        let (lo, hi) = (1e-3, 2e-2);
        let fine = free_boundary_points(&f, &mask, lo);
        for k in free_boundary_points(&f, &mask, hi) {
            assert!(fine.contains(&k) || (f.get(k) > lo && f.get(k) <= hi));
        }
    }

    #[test]
    fn growth_of_cone_square_and_root() {
        let h = 1.0 / 64.0;
        let mask = disk(h);
        let x0 = mask.grid().nearest(Point::ORIGIN);
        let radii = [4.0 * h, 8.0 * h, 16.0 * h, 32.0 * h];
        let cone = ScalarField::from_fn(&mask, |p| p.x.max(0.0));
        let p = linear_growth_profile(&cone, &mask, x0, &radii).unwrap();
        for r in &p.rows {
            assert!((r.ratio - 1.0).abs() <= 2.0 * h / r.radius);
        }
        assert!(p.ratio_spread().unwrap() < 1.5);
        let square = ScalarField::from_fn(&mask, |p| p.x.max(0.0).powi(2));
        let p = linear_growth_profile(&square, &mask, x0, &radii).unwrap();
        for r in &p.rows {
            assert!((r.ratio - r.radius).abs() <= 2.0 * h);
        }
        let root = ScalarField::from_fn(&mask, |p| p.x.max(0.0).sqrt());
        let p = linear_growth_profile(&root, &mask, x0, &radii).unwrap();
        // sup/R = R^-1/2, so the spread over an 8x range of radii is sqrt(8)
        assert!(p.ratio_spread().unwrap() > 2.5);
        assert!(p.rows.windows(2).all(|w| w[1].sup >= w[0].sup));
    }

    #[test]
    fn growth_skips_balls_leaving_the_disk() {
        let h = 1.0 / 32.0;
        let mask = disk(h);
        let x0 = mask.grid().nearest(Point::new(0.8, 0.0));
        let f = ScalarField::from_fn(&mask, |p| p.x.max(0.0));
        let p = linear_growth_profile(&f, &mask, x0, &[0.1, 0.3]).unwrap();
        assert_eq!(p.rows.len(), 1);
        assert_eq!(p.skipped, vec![0.3]);
        let p = linear_growth_profile(&f, &mask, x0, &[0.5]).unwrap();
        assert_eq!(p.ratio_spread(), None);
        assert!(linear_growth_profile(&f, &mask, x0, &[h]).is_err());
    }

    #[test]
    fn lipschitz_of_linear_and_constant() {
        let mask = disk(1.0 / 32.0);
        let f = ScalarField::from_fn(&mask, |p| 3.0 * p.x);
        assert!((lipschitz_norm_estimate(&f, &mask, Point::ORIGIN, 0.5).unwrap() - 3.0).abs() < 1e-12);
        let c = ScalarField::from_fn(&mask, |_| 2.0);
        assert_eq!(lipschitz_norm_estimate(&c, &mask, Point::ORIGIN, 0.5).unwrap(), 0.0);
        assert!(lipschitz_norm_estimate(&c, &mask, Point::new(5.0, 5.0), 0.5).is_err());
    }

    #[test]
    fn holder_recovers_power_laws() {
        let h = 1.0 / 128.0;
        let mask = disk(h);
        assert_eq!(mask.grid().nx(), 257);
        for beta in [0.25, 0.5, 0.75, 1.0] {
            let f = ScalarField::from_fn(&mask, |p| p.dist(Point::ORIGIN).powf(beta));
            let est = holder_exponent_estimate(&f, &mask, Point::ORIGIN, 10).unwrap();
            assert!((est.alpha - beta).abs() < 0.05, "beta {beta}: {}", est.alpha);
            assert_eq!(est.depth, 6);
        }
        let lin = ScalarField::from_fn(&mask, |p| 0.3 * p.x - p.y);
        let est = holder_exponent_estimate(&lin, &mask, Point::ORIGIN, 6).unwrap();
        assert!((est.alpha - 1.0).abs() < 0.05);
        let flat = ScalarField::from_fn(&mask, |_| 1.0);
        assert!(holder_exponent_estimate(&flat, &mask, Point::ORIGIN, 6).is_err());
    }

    #[test]
    fn subharmonicity_examples() {
        let mask = disk(1.0 / 32.0);
        let bowl = ScalarField::from_fn(&mask, |p| p.x * p.x + p.y * p.y);
        let saddle = ScalarField::from_fn(&mask, |p| p.x * p.y);
        let cap = bowl.map(|v| -v);
        assert!((subharmonicity_check(&bowl, &mask) - 4.0).abs() < 1e-10);
        assert!(subharmonicity_check(&saddle, &mask).abs() < 1e-10);
        assert!((subharmonicity_check(&cap, &mask) + 4.0).abs() < 1e-10);
    }

    #[test]
    fn laplacian_dominates_pucci_minus() {
        let mask = disk(1.0 / 32.0);
        let ell = Ellipticity::new(1.0, 3.0).unwrap();
        let f = ScalarField::from_fn(&mask, |p| (3.0 * p.x).sin() * (2.0 * p.y).cos() + p.x * p.y * p.y);
        let m = pucci_field(&f, &mask, ell, Sign::Minus);
        let g = mask.grid();
        let inv_h2 = 1.0 / (g.h() * g.h());
        let v = f.values();
        let nx = g.nx();
        for k in mask.stencil_complete() {
            let lap = (v[k + 1] + v[k - 1] + v[k + nx] + v[k - nx] - 4.0 * v[k]) * inv_h2;
            assert!(ell.lower() * lap >= m.values.get(k) - 1e-8);
        }
    }

    #[test]
    fn thin_support_caps() {
        let mask = disk(1.0 / 64.0);
        for (eps0, t) in [(0.05, 0.15), (0.1, 0.2)] {
            let f = ScalarField::from_fn(&mask, |p| ((p.x - (1.0 - t)) / t).max(0.0));
            let rep = thin_support_decay_check(&f, &mask, Point::ORIGIN, eps0).unwrap();
            assert!(rep.pass && rep.sup_inner == 0.0, "{rep:?}");
            assert!(rep.support_fraction <= eps0);
        }
        let zero = ScalarField::zeros(*mask.grid());
        assert!(thin_support_decay_check(&zero, &mask, Point::ORIGIN, 0.05).unwrap().pass);
        let one = ScalarField::from_fn(&mask, |_| 1.0);
        assert!(matches!(thin_support_decay_check(&one, &mask, Point::ORIGIN, 0.05), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn acf_half_plane_is_constant() {
        let h = 1.0 / 64.0;
        let mask = disk(h);
        let u = ScalarField::from_fn(&mask, |p| p.x.max(0.0));
        let v = ScalarField::from_fn(&mask, |p| (-p.x).max(0.0));
        let radii: Vec<f64> = [8.0, 12.0, 16.0, 24.0, 32.0].iter().map(|m| m * h).collect();
        let curve = acf_functional(&u, &v, &mask, Point::ORIGIN, &radii).unwrap();
        let target = PI * PI / 4.0;
        for j in &curve.values {
            assert!((j / target - 1.0).abs() < 0.02, "{j}");
        }
        assert!(curve.values.iter().all(|&j| j <= curve.bound));
        let zero = ScalarField::zeros(*mask.grid());
        let flat = acf_functional(&zero, &v, &mask, Point::ORIGIN, &radii).unwrap();
        assert!(flat.values.iter().all(|&j| j == 0.0));
        assert!(matches!(acf_functional(&u, &u, &mask, Point::ORIGIN, &radii), Err(Error::Overlap(_))));
        assert!(acf_functional(&u, &v, &mask, Point::ORIGIN, &[h]).is_err());
    }

    #[test]
    fn segregated_pair_is_disjoint() {
        let mask = disk(1.0 / 16.0);
        let a = ScalarField::from_fn(&mask, |p| (1.0 + p.x) * 0.5);
        let b = ScalarField::from_fn(&mask, |p| (1.0 - p.x) * 0.5);
        let s = state_of(vec![a, b], 1.0);
        let (w, z) = segregated_pair(&s, 0);
        for k in 0..mask.grid().len() {
            assert!(w.get(k) >= 0.0 && z.get(k) >= 0.0);
            assert!(w.get(k) * z.get(k) == 0.0);
        }
    }

    #[test]
    fn limit_residual_of_zero_state() {
        let mask = disk(1.0 / 16.0);
        let z = ScalarField::zeros(*mask.grid());
        let s = state_of(vec![z.clone(), z], 1.0);
        let r = limit_residual(&s, Ellipticity::new(1.0, 2.0).unwrap(), &mask, 0.05);
        assert_eq!((r.interior, r.coupling, r.supersolution, r.nodes), (0.0, 0.0, 0.0, 0));
    }
}
