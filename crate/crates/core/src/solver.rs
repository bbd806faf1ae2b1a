//! Coupled segregation system `M-(u_i) = (1/eps) u_i sum_{j != i} u_j`.
//!
//! The outer loop is the fixed-point map: each component is re-solved with
//! the others frozen, then mixed back with weight `damping`. Each inner scalar
//! problem `M-(v) = c(x) v` is relaxed in pseudo-time,
//! `v <- clamp(v + tau (M-(D^2 v) - c v) + beta (v - v_prev), 0, sup phi_i)`,
//! Jacobi style over the stencil-complete interior nodes.

use crate::error::{Error, Result};
use crate::geometry::{DomainMask, NodeClass, ScalarField};
use crate::pucci::{hessian_entries, pucci_minus2, Ellipticity};

/// First zero of the Bessel function `J0`; `j0^2 / R^2` is the lowest Dirichlet
/// eigenvalue of the Laplacian on a disk of radius `R`.
const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// Pseudo-time momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Momentum {
    /// Plain first-order relaxation.
    Off,
    /// Fixed heavy-ball coefficient in `[0, 1)`.
    Fixed(f64),
    /// Coefficient tuned to the lowest Dirichlet mode of the disk,
    /// `beta = (1 - sqrt(tau * lambda * j0^2 / R^2))^2`.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub cfl_safety: f64,
    pub damping: f64,
    pub momentum: Momentum,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-7,
            outer_tol: 1e-6,
            max_inner: 20_000,
            max_outer: 500,
            cfl_safety: 0.9,
            damping: 1.0,
            momentum: Momentum::Auto,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tol > 0.0 && self.outer_tol > 0.0) {
            return Err(Error::Solver("tolerances must be positive".into()));
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(Error::Solver("iteration caps must be >= 1".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Solver(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Solver(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if let Momentum::Fixed(b) = self.momentum {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Solver(format!("momentum must lie in [0, 1), got {b}")));
            }
        }
        Ok(())
    }
}

/// One line of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub epsilon: f64,
    pub outer_iter: usize,
    pub component: usize,
    pub residual: f64,
    pub inner_iters: usize,
}

/// Densities of all populations at one value of `epsilon`.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub epsilon: f64,
    pub fields: Vec<ScalarField>,
    pub residuals: Vec<f64>,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub converged: bool,
    pub history: Vec<ConvergenceRecord>,
}

impl SystemState {
    /// State with interior values 0 and boundary nodes holding `phi`.
    pub fn from_boundary(phi: &[ScalarField], epsilon: f64, mask: &DomainMask) -> Result<Self> {
        validate_phi(phi, mask)?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Solver(format!("epsilon must be positive, got {epsilon}")));
        }
        let fields = phi
            .iter()
            .map(|p| {
                let mut f = ScalarField::zeros(*mask.grid());
                for &k in mask.boundary() {
                    f.set(k, p.get(k));
                }
                f
            })
            .collect();
        Ok(Self {
            epsilon,
            residuals: vec![f64::INFINITY; phi.len()],
            fields,
            outer_iters: 0,
            inner_iters: 0,
            converged: false,
            history: Vec::new(),
        })
    }

    pub fn d(&self) -> usize {
        self.fields.len()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `max_i sup phi_i`, read off the boundary nodes.
    pub fn data_sup(&self, mask: &DomainMask) -> f64 {
        self.fields.iter().map(|f| f.boundary_sup(mask)).fold(0.0, f64::max)
    }
}

fn validate_phi(phi: &[ScalarField], mask: &DomainMask) -> Result<()> {
    if phi.is_empty() {
        return Err(Error::Solver("need at least one population".into()));
    }
    for (i, p) in phi.iter().enumerate() {
        if p.grid() != mask.grid() {
            return Err(Error::Solver(format!("boundary data {i} lives on a different grid")));
        }
        if let Some(&k) = mask.boundary().iter().find(|&&k| !(p.get(k) >= 0.0)) {
            return Err(Error::Solver(format!("boundary data {i} is negative at node {k}")));
        }
    }
    for i in 0..phi.len() {
        for j in i + 1..phi.len() {
            if let Some(&k) = mask.boundary().iter().find(|&&k| phi[i].get(k) * phi[j].get(k) != 0.0) {
                return Err(Error::Solver(format!(
                    "boundary data {i} and {j} share support at node {k}"
                )));
            }
        }
    }
    Ok(())
}

/// Result of one inner relaxation.
#[derive(Debug, Clone)]
pub struct ComponentSolve {
    pub field: ScalarField,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Coupling coefficient `c(x) = (1/eps) sum_{j != i} u_j`.
fn coupling(i: usize, state: &SystemState) -> Vec<f64> {
    let n = state.fields[0].values().len();
    let inv_eps = 1.0 / state.epsilon;
    let mut c = vec![0.0; n];
    for (j, f) in state.fields.iter().enumerate() {
        if j == i {
            continue;
        }
        for (ck, &u) in c.iter_mut().zip(f.values()) {
            *ck += inv_eps * u;
        }
    }
    c
}

fn active_nodes(mask: &DomainMask) -> Vec<usize> {
    mask.stencil_complete().collect()
}

/// Pseudo-time step `cfl_safety / (4 Lambda / h^2 + max c)`.
pub fn time_step(h: f64, ell: Ellipticity, max_coupling: f64, cfl_safety: f64) -> f64 {
    cfl_safety / (4.0 * ell.upper() / (h * h) + max_coupling)
}

fn momentum_coefficient(m: Momentum, tau: f64, ell: Ellipticity, mask: &DomainMask) -> f64 {
    match m {
        Momentum::Off => 0.0,
        Momentum::Fixed(b) => b,
        Momentum::Auto => {
            let r = mask.radius();
            let mu = ell.lower() * BESSEL_J0_FIRST_ZERO * BESSEL_J0_FIRST_ZERO / (r * r);
            let s = (tau * mu).sqrt().min(1.0);
            (1.0 - s) * (1.0 - s)
        }
    }
}

/// Relaxes `M-(v) = c v` from `start`, keeping non-active nodes fixed.
#[allow(clippy::too_many_arguments)]
fn relax(
    start: &ScalarField,
    coef: &[f64],
    active: &[usize],
    ell: Ellipticity,
    cap: f64,
    tau: f64,
    beta: f64,
    tol: f64,
    max_iters: usize,
    clamp: bool,
) -> ComponentSolve {
    let g = *start.grid();
    let nx = g.nx();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let mut cur = start.values().to_vec();
    let mut prev = cur.clone();
    let mut next = cur.clone();
    let mut residual;
    let mut iterations = 0;
    loop {
        let mut res = 0.0f64;
        for &k in active {
            let (a, b, c) = hessian_entries(&cur, k, nx, inv_h2);
            let u = cur[k];
            let f = pucci_minus2(a, b, c, ell) - coef[k] * u;
            res = res.max(f.abs());
            let mut v = u + tau * f + beta * (u - prev[k]);
            if clamp {
                v = v.clamp(0.0, cap);
            }
            next[k] = v;
        }
        residual = if res.is_nan() { f64::INFINITY } else { res };
        if residual <= tol || iterations >= max_iters {
            break;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        iterations += 1;
    }
    ComponentSolve {
        field: ScalarField::from_values(g, cur).unwrap_or_else(|_| start.clone()),
        residual,
        iterations,
        converged: residual <= tol,
    }
}

/// Solves component `i` against the frozen other components of `state`.
///
/// Starts from `state.fields[i]`; boundary values are taken from there.
pub fn solve_component(
    i: usize,
    state: &SystemState,
    ell: Ellipticity,
    mask: &DomainMask,
    cfg: &SolveConfig,
) -> ComponentSolve {
    let coef = coupling(i, state);
    solve_with_coefficient(&state.fields[i], &coef, ell, mask, cfg)
}

/// Inner relaxation for `M-(v) = c v` with an explicit coefficient field.
pub fn solve_with_coefficient(
    start: &ScalarField,
    coef: &[f64],
    ell: Ellipticity,
    mask: &DomainMask,
    cfg: &SolveConfig,
) -> ComponentSolve {
    let active = active_nodes(mask);
    let max_c = active.iter().map(|&k| coef[k]).fold(0.0, f64::max);
    let tau = time_step(mask.grid().h(), ell, max_c, cfg.cfl_safety);
    let beta = momentum_coefficient(cfg.momentum, tau, ell, mask);
    let cap = start.boundary_sup(mask);
    relax(start, coef, &active, ell, cap, tau, beta, cfg.inner_tol, cfg.max_inner, true)
}

/// Per-component max over stencil-complete nodes of `|M-(u_i) - (1/eps) u_i sum_{j != i} u_j|`.
pub fn residual(state: &SystemState, ell: Ellipticity, mask: &DomainMask) -> Vec<f64> {
    let g = *mask.grid();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let active = active_nodes(mask);
    (0..state.d())
        .map(|i| {
            let coef = coupling(i, state);
            let u = state.fields[i].values();
            active
                .iter()
                .map(|&k| {
                    let (a, b, c) = hessian_entries(u, k, g.nx(), inv_h2);
                    (pucci_minus2(a, b, c, ell) - coef[k] * u[k]).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Uncoupled extension of each `phi_i` into the interior (`c = 0`).
pub fn extension(phi: &[ScalarField], ell: Ellipticity, mask: &DomainMask, cfg: &SolveConfig) -> Result<Vec<ScalarField>> {
    let state = SystemState::from_boundary(phi, 1.0, mask)?;
    let zero = vec![0.0; mask.grid().len()];
    Ok(state
        .fields
        .iter()
        .map(|f| solve_with_coefficient(f, &zero, ell, mask, cfg).field)
        .collect())
}

/// Solves the coupled system at one `epsilon`, starting from the uncoupled extension.
pub fn fixed_point_solve(
    phi: &[ScalarField],
    epsilon: f64,
    ell: Ellipticity,
    mask: &DomainMask,
    cfg: &SolveConfig,
) -> Result<SystemState> {
    cfg.validate()?;
    let mut state = SystemState::from_boundary(phi, epsilon, mask)?;
    state.fields = extension(phi, ell, mask, cfg)?;
    Ok(iterate(state, ell, mask, cfg))
}

/// Continues the fixed-point iteration from an existing state at a new `epsilon`.
pub fn fixed_point_solve_from(
    start: &SystemState,
    epsilon: f64,
    ell: Ellipticity,
    mask: &DomainMask,
    cfg: &SolveConfig,
) -> Result<SystemState> {
    cfg.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Solver(format!("epsilon must be positive, got {epsilon}")));
    }
    let state = SystemState {
        epsilon,
        fields: start.fields.clone(),
        residuals: vec![f64::INFINITY; start.d()],
        outer_iters: 0,
        inner_iters: 0,
        converged: false,
        history: Vec::new(),
    };
    Ok(iterate(state, ell, mask, cfg))
}

/// Appends one log row per component; missing inner counts are zero.
fn record(state: &mut SystemState, outer: usize, inner_counts: &[usize]) {
    for i in 0..state.d() {
        state.history.push(ConvergenceRecord {
            epsilon: state.epsilon,
            outer_iter: outer,
            component: i,
            residual: state.residuals[i],
            inner_iters: inner_counts.get(i).copied().unwrap_or(0),
        });
    }
}

fn iterate(mut state: SystemState, ell: Ellipticity, mask: &DomainMask, cfg: &SolveConfig) -> SystemState {
    let mut damping = cfg.damping;
    let mut rising = 0;
    let mut last = f64::INFINITY;
    state.residuals = residual(&state, ell, mask);
    record(&mut state, 0, &[]);
    for outer in 1..=cfg.max_outer {
        if state.max_residual() <= cfg.outer_tol {
            state.converged = true;
            break;
        }
        let frozen = state.clone();
        let mut inner_counts = Vec::with_capacity(state.d());
        for i in 0..state.d() {
            let sol = solve_component(i, &frozen, ell, mask, cfg);
            inner_counts.push(sol.iterations);
            state.inner_iters += sol.iterations;
            let u = &mut state.fields[i];
            for (uk, &vk) in u.values_mut().iter_mut().zip(sol.field.values()) {
                *uk = (1.0 - damping) * *uk + damping * vk;
            }
        }
        state.outer_iters = outer;
        state.residuals = residual(&state, ell, mask);
        record(&mut state, outer, &inner_counts);
        let now = state.max_residual();
        if now > last {
            rising += 1;
            if rising >= 2 {
                damping *= 0.5;
                rising = 0;
            }
        } else {
            rising = 0;
        }
        last = now;
    }
    if state.max_residual() <= cfg.outer_tol {
        state.converged = true;
    }
    state
}

/// Solves along a strictly decreasing `schedule`, warm-starting each step.
pub fn epsilon_continuation(
    phi: &[ScalarField],
    schedule: &[f64],
    ell: Ellipticity,
    mask: &DomainMask,
    cfg: &SolveConfig,
) -> Result<Vec<SystemState>> {
    if schedule.is_empty() {
        return Err(Error::Solver("empty epsilon schedule".into()));
    }
    if schedule.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Solver("epsilon values must be positive".into()));
    }
    if schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Solver("epsilon schedule must be strictly decreasing".into()));
    }
    let mut states: Vec<SystemState> = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let next = match states.last() {
            None => fixed_point_solve(phi, eps, ell, mask, cfg)?,
            Some(prev) => fixed_point_solve_from(prev, eps, ell, mask, cfg)?,
        };
        states.push(next);
    }
    Ok(states)
}

/// Runs `steps` plain relaxation steps per component without clamping,
/// others frozen, and returns the largest movement of any node.
pub fn unclamped_drift(state: &SystemState, ell: Ellipticity, mask: &DomainMask, cfg: &SolveConfig, steps: usize) -> f64 {
    let active = active_nodes(mask);
    (0..state.d())
        .map(|i| {
            let coef = coupling(i, state);
            let max_c = active.iter().map(|&k| coef[k]).fold(0.0, f64::max);
            let tau = time_step(mask.grid().h(), ell, max_c, cfg.cfl_safety);
            let run = relax(&state.fields[i], &coef, &active, ell, f64::INFINITY, tau, 0.0, 0.0, steps, false);
            run.field.max_abs_diff(&state.fields[i], mask)
        })
        .fold(0.0, f64::max)
}

/// Checks `0 <= u_i <= max sup phi` everywhere and exterior nodes at 0.
pub fn satisfies_max_principle(state: &SystemState, mask: &DomainMask) -> bool {
    let cap = state.data_sup(mask);
    state.fields.iter().all(|f| {
        (0..f.values().len()).all(|k| {
            let v = f.get(k);
            match mask.class(k) {
                NodeClass::Exterior => v == 0.0,
                _ => (0.0..=cap).contains(&v),
            }
        })
    })
}
