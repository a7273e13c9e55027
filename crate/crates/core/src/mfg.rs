//! The forward-backward MFG fixed point, the induced value map
//! `U(t0, x, m0)`, and its derivative in the measure argument.
//!
//! The system couples a backward HJB equation for the representative value
//! function with a forward Fokker-Planck equation for the population
//! density, both with homogeneous Dirichlet (absorbing) conditions:
//!
//! ```text
//! -u_t - σ² u_xx + H(Du) = F(t, x, m(t))        u(T) = G(x, m(T)),
//!  m_t - σ² m_xx - (m H_p(Du))_x = 0            m(t0) = m0,
//! ```
//!
//! solved here by damped Picard iteration on the measure flow. The value
//! map is `U(t0, x, m0) = u(t0, x)`.
//!
//! Differentiating the system along a measure perturbation gives the
//! linearized forward-backward system; its backward component `v` started
//! from a Dirac perturbation at `y` evaluates the linear functional
//! derivative `δU/δm(t0, x, m0, y)`, which vanishes for `x` or `y` on the
//! boundary.

use crate::error::{Error, Result};
use crate::measures::{flat_norm_of_difference, SubProbMeasure};
use crate::pde1d::{
    solve_backward_advection, solve_fp_forward, solve_hjb_backward, solve_signed_fp_forward,
    spatial_gradient, Coefficients, Grid1D, SpaceTimeField,
};

pub type RunningCost = Box<dyn Fn(f64, f64, &SubProbMeasure) -> f64 + Send + Sync>;
pub type TerminalCost = Box<dyn Fn(f64, &SubProbMeasure) -> f64 + Send + Sync>;
pub type RunningDerivative = Box<dyn Fn(f64, f64, &SubProbMeasure, f64) -> f64 + Send + Sync>;
pub type TerminalDerivative = Box<dyn Fn(f64, &SubProbMeasure, f64) -> f64 + Send + Sync>;

/// Cost couplings of the game.
///
/// `terminal` is `G(x, m)` and must vanish for `x ∈ {0, 1}` (checked when
/// the HJB march starts). The optional derivatives `δF/δm` and `δG/δm` take
/// the perturbation location `y` as their last argument and must vanish for
/// `y ∈ {0, 1}`; they are required only by the linearized system.
pub struct CouplingSpec {
    pub running: Option<RunningCost>,
    pub terminal: TerminalCost,
    pub delta_running: Option<RunningDerivative>,
    pub delta_terminal: Option<TerminalDerivative>,
}

impl CouplingSpec {
    /// Coupling through the terminal cost only (F ≡ 0).
    pub fn terminal_only(terminal: TerminalCost, delta_terminal: TerminalDerivative) -> Self {
        CouplingSpec {
            running: None,
            terminal,
            delta_running: None,
            delta_terminal: Some(delta_terminal),
        }
    }

    /// Fully decoupled system (F ≡ 0, G ≡ 0).
    pub fn zero() -> Self {
        CouplingSpec {
            running: None,
            terminal: Box::new(|_, _| 0.0),
            delta_running: None,
            delta_terminal: Some(Box::new(|_, _, _| 0.0)),
        }
    }

    pub fn terminal_cost(&self, x: f64, m: &SubProbMeasure) -> f64 {
        (self.terminal)(x, m)
    }
}

/// Damped Picard iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardParams {
    /// Relaxation weight on the new iterate, in (0, 1].
    pub damping: f64,
    /// Joint tolerance: sup-norm on u and sup-over-t flat distance on m.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardParams {
    fn default() -> Self {
        PicardParams { damping: 0.5, tol: 1e-7, max_iter: 200 }
    }
}

impl PicardParams {
    fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::precondition("damping must lie in (0, 1]"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::precondition("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Converged forward-backward pair with fixed-point diagnostics.
#[derive(Debug, Clone)]
pub struct MfgSolution {
    pub u: SpaceTimeField,
    pub m: SpaceTimeField,
    pub mass_trace: Vec<f64>,
    pub iterations: usize,
    /// Joint residual (max of the u sup-gap and the m flat-distance gap)
    /// per iteration.
    pub residual_history: Vec<f64>,
}

impl MfgSolution {
    /// Gradient table of u, one row per time step.
    pub fn value_gradient(&self) -> Vec<Vec<f64>> {
        (0..self.u.grid.n_time)
            .map(|k| spatial_gradient(self.u.slice(k), self.u.grid.dx()))
            .collect()
    }
}

/// Sup-over-t flat distance between two density flows on the same grid.
fn flow_distance(a: &SpaceTimeField, b: &SpaceTimeField) -> f64 {
    let grid = a.grid;
    let dx = grid.dx();
    let mut worst = 0.0f64;
    let mut support = Vec::with_capacity(grid.n_space);
    for k in 0..grid.n_time {
        support.clear();
        let (ra, rb) = (a.slice(k), b.slice(k));
        for i in 1..grid.n_space - 1 {
            let c = dx * (ra[i] - rb[i]);
            if c != 0.0 {
                support.push((grid.x(i), c));
            }
        }
        worst = worst.max(flat_norm_of_difference(&support));
    }
    worst
}

/// Solves the coupled system from `(grid.t0, m0)` by damped Picard
/// iteration on the measure flow.
///
/// Each sweep solves the HJB equation backward against the current flow,
/// then transports `m0` forward with the drift `H_p(Du)`, and relaxes.
/// Convergence requires *both* the u sup-gap and the sup-over-t flat
/// distance between successive flows to drop below `params.tol`.
pub fn solve_mfg(
    m0: &SubProbMeasure,
    coupling: &CouplingSpec,
    grid: &Grid1D,
    coeff: &Coefficients,
    params: &PicardParams,
) -> Result<MfgSolution> {
    params.validate()?;
    if m0.mass() > 1.0 + 1e-9 {
        return Err(Error::precondition("initial measure must have mass at most 1"));
    }
    let n = grid.n_space;
    let last = grid.n_time - 1;

    // Initial guess: the uncontrolled flow.
    let mut m_flow = solve_fp_forward(grid, coeff, |_, _| 0.0, m0)?.field;
    let mut u_prev = SpaceTimeField::zeros(*grid);
    let mut history = Vec::new();

    for iter in 1..=params.max_iter {
        let m_terminal = m_flow.measure_at(last)?;
        let source_table = match &coupling.running {
            Some(f) => {
                let mut table = vec![0.0; grid.n_time * n];
                for k in 0..grid.n_time {
                    let m_k = m_flow.measure_at(k)?;
                    let t = grid.t(k);
                    for i in 0..n {
                        table[k * n + i] = f(t, grid.x(i), &m_k);
                    }
                }
                Some(table)
            }
            None => None,
        };
        let u_new = solve_hjb_backward(
            grid,
            coeff,
            |x| coupling.terminal_cost(x, &m_terminal),
            |t, x| match &source_table {
                Some(table) => table[grid.step_of(t) * n + grid.node_of(x)],
                None => 0.0,
            },
        )?;

        let mut du = vec![0.0; grid.n_time * n];
        for k in 0..grid.n_time {
            du[k * n..(k + 1) * n]
                .copy_from_slice(&spatial_gradient(u_new.slice(k), grid.dx()));
        }
        let ham = coeff.hamiltonian;
        let fp = solve_fp_forward(
            grid,
            coeff,
            |t, x| ham.grad(du[grid.step_of(t) * n + grid.node_of(x)]),
            m0,
        )?;

        let mut m_next = SpaceTimeField::zeros(*grid);
        let theta = params.damping;
        for k in 0..grid.n_time {
            let old = m_flow.slice(k).to_vec();
            let new = fp.field.slice(k);
            let row = m_next.slice_mut(k);
            for i in 0..n {
                row[i] = theta * new[i] + (1.0 - theta) * old[i];
            }
        }

        let value_gap = u_new.sup_distance(&u_prev);
        let measure_gap = flow_distance(&m_next, &m_flow);
        history.push(value_gap.max(measure_gap));

        if value_gap <= params.tol && measure_gap <= params.tol {
            let dx = grid.dx();
            let mass_trace = (0..grid.n_time)
                .map(|k| crate::pde1d::trapezoid(dx, m_next.slice(k)))
                .collect();
            return Ok(MfgSolution {
                u: u_new,
                m: m_next,
                mass_trace,
                iterations: iter,
                residual_history: history,
            });
        }
        u_prev = u_new;
        m_flow = m_next;
    }

    let last_res = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NonConvergence { iterations: params.max_iter, last: last_res, history })
}

/// Grid resolution and solver controls for value-map evaluations that build
/// their own grid from `(t0, t_final)`.
#[derive(Debug, Clone, Copy)]
pub struct MfgConfig {
    pub t_final: f64,
    pub n_space: usize,
    pub n_time: usize,
    pub coeff: Coefficients,
    pub params: PicardParams,
}

impl MfgConfig {
    pub fn grid_from(&self, t0: f64) -> Result<Grid1D> {
        Grid1D::new(self.n_space, self.n_time, t0, self.t_final)
    }
}

/// `U(t0, x, m0)`: solves the system and reads `u(t0, x)` (linear
/// interpolation between nodes). Returns exactly 0 on the spatial boundary;
/// at `t0 = t_final` the value is the terminal cost itself.
pub fn evaluate_u(
    t0: f64,
    x: f64,
    m0: &SubProbMeasure,
    coupling: &CouplingSpec,
    cfg: &MfgConfig,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::precondition(format!("x = {x} outside [0,1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    if t0 > cfg.t_final {
        return Err(Error::precondition("t0 must not exceed t_final"));
    }
    if cfg.t_final - t0 < 1e-12 {
        return Ok(coupling.terminal_cost(x, m0));
    }
    let grid = cfg.grid_from(t0)?;
    let sol = solve_mfg(m0, coupling, &grid, &cfg.coeff, &cfg.params)?;
    Ok(sol.u.interp_space(0, x))
}

/// Unit-mass hat of width `2 dx` centered at `y`, sampled on the grid
/// nodes. Shares that fall on a boundary node are deleted (the measure is
/// absorbed there), so the density vanishes continuously as `y` approaches
/// the boundary and is identically zero at `y ∈ {0, 1}`.
pub fn hat_density(grid: &Grid1D, y: f64) -> Vec<f64> {
    let n = grid.n_space;
    let dx = grid.dx();
    let mut v = vec![0.0; n];
    for (i, vi) in v.iter_mut().enumerate().take(n - 1).skip(1) {
        let w = 1.0 - (grid.x(i) - y).abs() / dx;
        if w > 0.0 {
            *vi = w / dx;
        }
    }
    v
}

/// Extra data of the general linearized system; all components default to
/// zero, which is the pure system used to evaluate measure derivatives.
#[derive(Default)]
pub struct LinearizedData {
    /// Additional backward source h(t, x), per (step, node).
    pub h: Option<Box<dyn Fn(usize, usize) -> f64 + Send + Sync>>,
    /// Additional transported flux c(t, x), per (step, node).
    pub c: Option<Box<dyn Fn(usize, usize) -> f64 + Send + Sync>>,
    /// Additional terminal datum z_T(x), per node.
    pub z_terminal: Option<Vec<f64>>,
}

/// Solves the linearized forward-backward system around a converged base
/// solution:
///
/// ```text
/// -v_t - σ² v_xx + H_p(Du) v_x = <δF/δm(t, x, m(t), ·), μ(t)> + h,
///  μ_t - σ² μ_xx - (μ H_p(Du))_x - (m H_pp v_x + c)_x = 0,
///  v(T) = <δG/δm(x, m(T), ·), μ(T)> + z_T,   μ(t0) = mu0,
/// ```
///
/// both components Dirichlet-zero, by the same damped Picard loop as the
/// nonlinear system. `mu0` is a signed density on the base grid.
pub fn solve_linearized(
    base: &MfgSolution,
    coupling: &CouplingSpec,
    mu0: &[f64],
    coeff: &Coefficients,
    params: &PicardParams,
    extra: &LinearizedData,
) -> Result<(SpaceTimeField, SpaceTimeField)> {
    params.validate()?;
    let grid = base.u.grid;
    let n = grid.n_space;
    let last = grid.n_time - 1;
    if mu0.len() != n {
        return Err(Error::precondition("mu0 must be sampled on the base grid"));
    }
    let delta_g = coupling
        .delta_terminal
        .as_ref()
        .ok_or_else(|| Error::precondition("linearized system needs δG/δm"))?;
    if coupling.running.is_some() && coupling.delta_running.is_none() {
        return Err(Error::precondition("running cost present but δF/δm missing"));
    }

    let dx = grid.dx();
    let hpp = coeff.hamiltonian.second();
    let ham = coeff.hamiltonian;
    let du = base.value_gradient();
    let b = |k: usize, i: usize| ham.grad(du[k][i]);
    // Trapezoid weights for the y-quadrature of the derivative pairings.
    let wq = |j: usize| if j == 0 || j == n - 1 { 0.5 * dx } else { dx };

    let m_terminal = base.m.measure_at(last)?;
    let pair_terminal = |mu_t: &[f64], x: f64| -> f64 {
        let mut acc = 0.0;
        for j in 1..n - 1 {
            acc += wq(j) * delta_g(x, &m_terminal, grid.x(j)) * mu_t[j];
        }
        acc
    };

    // Measures along the base flow, needed only when δF is present.
    let m_slices: Option<Vec<SubProbMeasure>> = if coupling.delta_running.is_some() {
        Some((0..grid.n_time).map(|k| base.m.measure_at(k)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };

    let mut mu_flow = solve_signed_fp_forward(&grid, coeff.sigma, b, |_, _| 0.0, mu0)?;
    let mut v_prev = SpaceTimeField::zeros(grid);
    let mut history = Vec::new();

    for _ in 1..=params.max_iter {
        // Backward equation for v against the current μ flow.
        let mut terminal: Vec<f64> =
            (0..n).map(|i| pair_terminal(mu_flow.slice(last), grid.x(i))).collect();
        if let Some(z_t) = &extra.z_terminal {
            for (t, z) in terminal.iter_mut().zip(z_t) {
                *t += z;
            }
        }
        terminal[0] = 0.0;
        terminal[n - 1] = 0.0;

        let source_table: Vec<f64> = {
            let mut table = vec![0.0; grid.n_time * n];
            if let (Some(df), Some(ms)) = (&coupling.delta_running, &m_slices) {
                for k in 0..grid.n_time {
                    let mu_k = mu_flow.slice(k);
                    let t = grid.t(k);
                    for i in 0..n {
                        let mut acc = 0.0;
                        for j in 1..n - 1 {
                            acc += wq(j) * df(t, grid.x(i), &ms[k], grid.x(j)) * mu_k[j];
                        }
                        table[k * n + i] = acc;
                    }
                }
            }
            if let Some(h) = &extra.h {
                for k in 0..grid.n_time {
                    for i in 0..n {
                        table[k * n + i] += h(k, i);
                    }
                }
            }
            table
        };
        let v = solve_backward_advection(
            &grid,
            coeff.sigma,
            b,
            |k, i| source_table[k * n + i],
            &terminal,
        )?;

        // Forward equation for μ with the coupling flux m H_pp v_x (+ c).
        let mut dv = vec![0.0; grid.n_time * n];
        for k in 0..grid.n_time {
            dv[k * n..(k + 1) * n].copy_from_slice(&spatial_gradient(v.slice(k), dx));
        }
        let flux = |k: usize, i: usize| {
            let mut q = base.m.at(k, i) * hpp * dv[k * n + i];
            if let Some(c) = &extra.c {
                q += c(k, i);
            }
            q
        };
        let mu_new = solve_signed_fp_forward(&grid, coeff.sigma, b, flux, mu0)?;

        let theta = params.damping;
        let mut mu_next = SpaceTimeField::zeros(grid);
        for k in 0..grid.n_time {
            let old = mu_flow.slice(k).to_vec();
            let new = mu_new.slice(k);
            let row = mu_next.slice_mut(k);
            for i in 0..n {
                row[i] = theta * new[i] + (1.0 - theta) * old[i];
            }
        }

        let value_gap = v.sup_distance(&v_prev);
        let measure_gap = flow_distance(&mu_next, &mu_flow);
        history.push(value_gap.max(measure_gap));
        if value_gap <= params.tol && measure_gap <= params.tol {
            return Ok((v, mu_next));
        }
        v_prev = v;
        mu_flow = mu_next;
    }
    let last_res = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NonConvergence { iterations: params.max_iter, last: last_res, history })
}

/// `δU/δm(t0, x, m0, y)` through the pure linearized system started from a
/// unit-mass hat at `y`. Exactly zero when `x` or `y` sits on the boundary
/// (the hat at a boundary point is the zero measure, so the linearized
/// solve itself returns the zero field there).
pub fn delta_u(
    t0: f64,
    x: f64,
    m0: &SubProbMeasure,
    y: f64,
    coupling: &CouplingSpec,
    cfg: &MfgConfig,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::precondition(format!("y = {y} outside [0,1]")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::precondition(format!("x = {x} outside [0,1]")));
    }
    if x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0 {
        return Ok(0.0);
    }
    let grid = cfg.grid_from(t0)?;
    let base = solve_mfg(m0, coupling, &grid, &cfg.coeff, &cfg.params)?;
    let profile = delta_u_profile(&base, coupling, y, &cfg.coeff, &cfg.params)?;
    Ok(interp_nodes(&profile, grid.dx(), x))
}

fn interp_nodes(values: &[f64], dx: f64, x: f64) -> f64 {
    let s = (x / dx).clamp(0.0, (values.len() - 1) as f64);
    let i = (s.floor() as usize).min(values.len() - 2);
    let frac = s - i as f64;
    (1.0 - frac) * values[i] + frac * values[i + 1]
}

/// `δU/δm(t0, ·, m0, y)` on the grid nodes, given a prebuilt base solution.
pub fn delta_u_profile(
    base: &MfgSolution,
    coupling: &CouplingSpec,
    y: f64,
    coeff: &Coefficients,
    params: &PicardParams,
) -> Result<Vec<f64>> {
    let grid = base.u.grid;
    let mu0 = hat_density(&grid, y);
    if mu0.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; grid.n_space]);
    }
    let (v, _) =
        solve_linearized(base, coupling, &mu0, coeff, params, &LinearizedData::default())?;
    Ok(v.slice(0).to_vec())
}

/// Defect of the first-order expansion of U in the measure:
/// `sup_x |U(t0, x, m01) - U(t0, x, m02) - v(t0, x)|`, where `(v, μ)` is the
/// pure linearized solution around the `m02` base with `mu0 = m01 - m02`.
pub fn taylor_residual(
    m01: &SubProbMeasure,
    m02: &SubProbMeasure,
    coupling: &CouplingSpec,
    grid: &Grid1D,
    coeff: &Coefficients,
    params: &PicardParams,
) -> Result<f64> {
    let sol1 = solve_mfg(m01, coupling, grid, coeff, params)?;
    let sol2 = solve_mfg(m02, coupling, grid, coeff, params)?;
    let p1 = m01.grid_project(grid.n_space)?;
    let p2 = m02.grid_project(grid.n_space)?;
    let (SubProbMeasure::Grid { values: v1, .. }, SubProbMeasure::Grid { values: v2, .. }) =
        (p1, p2)
    else {
        unreachable!()
    };
    let mu0: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a - b).collect();
    let (v, _) =
        solve_linearized(&sol2, coupling, &mu0, coeff, params, &LinearizedData::default())?;
    let mut worst = 0.0f64;
    for i in 0..grid.n_space {
        let gap = sol1.u.at(0, i) - sol2.u.at(0, i) - v.at(0, i);
        worst = worst.max(gap.abs());
    }
    Ok(worst)
}
