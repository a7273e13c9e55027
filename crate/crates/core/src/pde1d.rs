//! Finite-difference kernels on [0,1]: backward HJB marches, forward
//! Fokker-Planck with absorbing (homogeneous Dirichlet) boundaries, and the
//! exponential change of variable linking the quadratic-Hamiltonian HJB to
//! the heat equation.
//!
//! All schemes are IMEX and first order in time: diffusion is implicit
//! (one tridiagonal solve per step, unconditionally stable), transport and
//! Hamiltonian terms are explicit. Diffusion is a constant `σ²`, which keeps
//! every stencil an exact tridiagonal.

use crate::error::{Error, Result};
use crate::measures::SubProbMeasure;

/// Uniform space-time grid on [0,1] × [t0, T]. Boundary nodes included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub n_space: usize,
    pub n_time: usize,
    pub t0: f64,
    pub t_final: f64,
}

impl Grid1D {
    pub fn new(n_space: usize, n_time: usize, t0: f64, t_final: f64) -> Result<Self> {
        if n_space < 3 {
            return Err(Error::precondition("n_space must be at least 3"));
        }
        if n_time < 2 {
            return Err(Error::precondition("n_time must be at least 2"));
        }
        if !(t_final > t0) {
            return Err(Error::precondition("t_final must exceed t0"));
        }
        Ok(Grid1D { n_space, n_time, t0, t_final })
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.n_space - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        (self.t_final - self.t0) / (self.n_time - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn t(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt()
    }

    /// Time-step index of `t`, rounded to the nearest node.
    pub fn step_of(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt()).round() as isize;
        k.clamp(0, self.n_time as isize - 1) as usize
    }

    /// Space index of `x`, rounded to the nearest node.
    pub fn node_of(&self, x: f64) -> usize {
        let i = (x / self.dx()).round() as isize;
        i.clamp(0, self.n_space as isize - 1) as usize
    }
}

/// Scalar values on a [`Grid1D`], stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub grid: Grid1D,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: Grid1D) -> Self {
        SpaceTimeField { values: vec![0.0; grid.n_space * grid.n_time], grid }
    }

    pub fn from_rows(grid: Grid1D, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != grid.n_time || rows.iter().any(|r| r.len() != grid.n_space) {
            return Err(Error::precondition("row shape does not match grid"));
        }
        Ok(SpaceTimeField { values: rows.into_iter().flatten().collect(), grid })
    }

    pub fn at(&self, step: usize, node: usize) -> f64 {
        self.values[step * self.grid.n_space + node]
    }

    pub fn slice(&self, step: usize) -> &[f64] {
        let n = self.grid.n_space;
        &self.values[step * n..(step + 1) * n]
    }

    pub fn slice_mut(&mut self, step: usize) -> &mut [f64] {
        let n = self.grid.n_space;
        &mut self.values[step * n..(step + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise map into a new field.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SpaceTimeField {
        SpaceTimeField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &SpaceTimeField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |a, (&u, &v)| a.max((u - v).abs()))
    }

    /// Linear interpolation in space at time step `step`.
    pub fn interp_space(&self, step: usize, x: f64) -> f64 {
        let dx = self.grid.dx();
        let s = (x / dx).clamp(0.0, (self.grid.n_space - 1) as f64);
        let i = (s.floor() as usize).min(self.grid.n_space - 2);
        let frac = s - i as f64;
        (1.0 - frac) * self.at(step, i) + frac * self.at(step, i + 1)
    }

    /// Bilinear interpolation in (t, x).
    pub fn interp(&self, t: f64, x: f64) -> f64 {
        let dt = self.grid.dt();
        let s = ((t - self.grid.t0) / dt).clamp(0.0, (self.grid.n_time - 1) as f64);
        let k = (s.floor() as usize).min(self.grid.n_time - 2);
        let frac = s - k as f64;
        (1.0 - frac) * self.interp_space(k, x) + frac * self.interp_space(k + 1, x)
    }

    /// Wraps the density at `step` as a grid measure (clamping round-off
    /// negatives to zero; the FP scheme is positivity-preserving).
    pub fn measure_at(&self, step: usize) -> Result<SubProbMeasure> {
        let v = self.slice(step).iter().map(|&x| x.max(0.0)).collect();
        SubProbMeasure::from_grid(self.grid.dx(), v)
    }
}

/// Hamiltonian choices. The quadratic one is the model of interest;
/// `Linear` gives plain advection and `None` decouples the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hamiltonian {
    None,
    Linear(f64),
    Quadratic,
}

impl Hamiltonian {
    pub fn value(&self, p: f64) -> f64 {
        match self {
            Hamiltonian::None => 0.0,
            Hamiltonian::Linear(b) => b * p,
            Hamiltonian::Quadratic => 0.5 * p * p,
        }
    }

    /// H_p — this is the FP transport coefficient.
    pub fn grad(&self, p: f64) -> f64 {
        match self {
            Hamiltonian::None => 0.0,
            Hamiltonian::Linear(b) => *b,
            Hamiltonian::Quadratic => p,
        }
    }

    /// H_pp, constant for the supported choices.
    pub fn second(&self) -> f64 {
        match self {
            Hamiltonian::Quadratic => 1.0,
            _ => 0.0,
        }
    }
}

/// Constant diffusion scale and Hamiltonian selection. The generator of the
/// player dynamics `dX = b dt + √2 σ dB` is `σ² ∂²`, so `a = σ²` below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub sigma: f64,
    pub hamiltonian: Hamiltonian,
}

impl Coefficients {
    pub fn new(sigma: f64, hamiltonian: Hamiltonian) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::precondition("sigma must be positive"));
        }
        Ok(Coefficients { sigma, hamiltonian })
    }

    pub fn quadratic(sigma: f64) -> Self {
        Coefficients { sigma, hamiltonian: Hamiltonian::Quadratic }
    }

    pub fn a(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Thomas algorithm for the constant-coefficient system
/// `(1 + 2λ) x_i - λ (x_{i-1} + x_{i+1}) = rhs_i` on the interior nodes,
/// homogeneous Dirichlet data. `rhs` and the returned vector cover interior
/// nodes only.
fn solve_implicit_diffusion(lambda: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let diag = 1.0 + 2.0 * lambda;
    debug_assert!(diag > 2.0 * lambda.abs(), "diffusion matrix must be diagonally dominant");
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag;
    c[0] = -lambda / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag + lambda * c[i - 1];
        c[i] = -lambda / beta;
        d[i] = (rhs[i] + lambda * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

/// Centered gradient with second-order one-sided stencils at the ends.
pub fn spatial_gradient(slice: &[f64], dx: f64) -> Vec<f64> {
    let n = slice.len();
    assert!(n >= 3, "gradient needs at least 3 nodes");
    let mut g = vec![0.0; n];
    g[0] = (-3.0 * slice[0] + 4.0 * slice[1] - slice[2]) / (2.0 * dx);
    for i in 1..n - 1 {
        g[i] = (slice[i + 1] - slice[i - 1]) / (2.0 * dx);
    }
    g[n - 1] = (3.0 * slice[n - 1] - 4.0 * slice[n - 2] + slice[n - 3]) / (2.0 * dx);
    g
}

/// Backward solve of `-u_t - σ² u_xx + H(Du) = F` with `u(T) = terminal`
/// and homogeneous Dirichlet data.
///
/// Diffusion is implicit; the Hamiltonian is evaluated explicitly from the
/// previous (later-time) level's centered gradient, falling back to an
/// upwind one-sided difference wherever the cell Péclet number
/// `|Du| dx / (2σ²)` exceeds 1.
pub fn solve_hjb_backward(
    grid: &Grid1D,
    coeff: &Coefficients,
    terminal: impl Fn(f64) -> f64,
    source: impl Fn(f64, f64) -> f64,
) -> Result<SpaceTimeField> {
    let n = grid.n_space;
    let (dx, dt) = (grid.dx(), grid.dt());
    let term: Vec<f64> = (0..n).map(|i| terminal(grid.x(i))).collect();
    if term[0].abs() > 1e-12 || term[n - 1].abs() > 1e-12 {
        return Err(Error::precondition(
            "terminal condition must vanish at both endpoints",
        ));
    }

    let mut field = SpaceTimeField::zeros(*grid);
    let last = grid.n_time - 1;
    field.slice_mut(last).copy_from_slice(&term);
    field.slice_mut(last)[0] = 0.0;
    field.slice_mut(last)[n - 1] = 0.0;

    let lambda = coeff.a() * dt / (dx * dx);
    let peclet_cap = 2.0 * coeff.a() / dx;
    let mut rhs = vec![0.0; n - 2];
    for k in (0..last).rev() {
        let t = grid.t(k);
        let prev = field.slice(k + 1).to_vec();
        for i in 1..n - 1 {
            let p_centered = (prev[i + 1] - prev[i - 1]) / (2.0 * dx);
            let p = if p_centered.abs() > peclet_cap {
                // Transport-dominated cell: one-sided difference against
                // the characteristic direction H_p.
                if coeff.hamiltonian.grad(p_centered) > 0.0 {
                    (prev[i] - prev[i - 1]) / dx
                } else {
                    (prev[i + 1] - prev[i]) / dx
                }
            } else {
                p_centered
            };
            rhs[i - 1] =
                prev[i] + dt * (source(t, grid.x(i)) - coeff.hamiltonian.value(p));
        }
        let interior = solve_implicit_diffusion(lambda, &rhs);
        let row = field.slice_mut(k);
        row[0] = 0.0;
        row[n - 1] = 0.0;
        row[1..n - 1].copy_from_slice(&interior);
    }
    Ok(field)
}

/// Result of a forward Fokker-Planck solve: the density field and the
/// trapezoid mass at every time step.
#[derive(Debug, Clone)]
pub struct FpSolution {
    pub field: SpaceTimeField,
    pub mass_trace: Vec<f64>,
}

/// Forward solve of `m_t = σ² m_xx + (m · drift)_x` with `m = 0` at both
/// boundary nodes (mass is absorbed, not reflected).
///
/// `drift` is the FP transport coefficient (`H_p(Du)` in the coupled
/// system). Diffusion implicit, transport explicit with conservative
/// upwind fluxes, so the scheme is monotone under the advective CFL
/// condition and the mass trace never increases.
pub fn solve_fp_forward(
    grid: &Grid1D,
    coeff: &Coefficients,
    drift: impl Fn(f64, f64) -> f64,
    m0: &SubProbMeasure,
) -> Result<FpSolution> {
    if m0.mass() > 1.0 + 1e-9 {
        return Err(Error::precondition("initial measure must have mass at most 1"));
    }
    let n = grid.n_space;
    let (dx, dt) = (grid.dx(), grid.dt());
    let projected = m0.grid_project(n)?;
    let SubProbMeasure::Grid { values: m_init, .. } = projected else { unreachable!() };

    let mut field = SpaceTimeField::zeros(*grid);
    field.slice_mut(0).copy_from_slice(&m_init);
    let mut mass_trace = Vec::with_capacity(grid.n_time);
    mass_trace.push(trapezoid(dx, field.slice(0)));

    let lambda = coeff.a() * dt / (dx * dx);
    let mut a_nodes = vec![0.0; n];
    let mut flux = vec![0.0; n - 1];
    let mut rhs = vec![0.0; n - 2];
    for k in 0..grid.n_time - 1 {
        let t = grid.t(k);
        for (i, a) in a_nodes.iter_mut().enumerate() {
            *a = drift(t, grid.x(i));
        }
        let a_max = a_nodes.iter().fold(0.0f64, |acc, &a| acc.max(a.abs()));
        if a_max * dt / dx > 1.0 {
            return Err(Error::precondition(format!(
                "advective CFL violated (|drift| dt/dx = {:.3}); use a smaller dt",
                a_max * dt / dx
            )));
        }
        let m = field.slice(k).to_vec();
        // m_t + ∂_x(-a m) = σ² m_xx: transport velocity is -a.
        for i in 0..n - 1 {
            let w = -0.5 * (a_nodes[i] + a_nodes[i + 1]);
            flux[i] = if w >= 0.0 { w * m[i] } else { w * m[i + 1] };
        }
        for i in 1..n - 1 {
            rhs[i - 1] = m[i] - dt / dx * (flux[i] - flux[i - 1]);
        }
        let interior = solve_implicit_diffusion(lambda, &rhs);
        let row = field.slice_mut(k + 1);
        row[0] = 0.0;
        row[n - 1] = 0.0;
        row[1..n - 1].copy_from_slice(&interior);
        mass_trace.push(trapezoid(dx, row));
    }
    Ok(FpSolution { field, mass_trace })
}

/// Forward solve of the divergence-form equation
/// `μ_t = σ² μ_xx + (μ b)_x + (q)_x` for a *signed* density μ, Dirichlet
/// zero. Transport of μ is upwind as in [`solve_fp_forward`]; the extra
/// flux `q` (node values per step) is averaged onto interfaces. This is the
/// forward half of the linearized system, with `q = m H_pp v_x`.
pub fn solve_signed_fp_forward(
    grid: &Grid1D,
    sigma: f64,
    b: impl Fn(usize, usize) -> f64,
    extra_flux: impl Fn(usize, usize) -> f64,
    mu0: &[f64],
) -> Result<SpaceTimeField> {
    let n = grid.n_space;
    if mu0.len() != n {
        return Err(Error::precondition("initial datum does not match the grid"));
    }
    let (dx, dt) = (grid.dx(), grid.dt());
    let a = sigma * sigma;
    let mut field = SpaceTimeField::zeros(*grid);
    {
        let row = field.slice_mut(0);
        row.copy_from_slice(mu0);
        row[0] = 0.0;
        row[n - 1] = 0.0;
    }
    let lambda = a * dt / (dx * dx);
    let mut flux = vec![0.0; n - 1];
    let mut rhs = vec![0.0; n - 2];
    for k in 0..grid.n_time - 1 {
        let mu = field.slice(k).to_vec();
        for i in 0..n - 1 {
            let w = -0.5 * (b(k, i) + b(k, i + 1));
            let advect = if w >= 0.0 { w * mu[i] } else { w * mu[i + 1] };
            flux[i] = advect - 0.5 * (extra_flux(k, i) + extra_flux(k, i + 1));
        }
        for i in 1..n - 1 {
            rhs[i - 1] = mu[i] - dt / dx * (flux[i] - flux[i - 1]);
        }
        let interior = solve_implicit_diffusion(lambda, &rhs);
        let row = field.slice_mut(k + 1);
        row[0] = 0.0;
        row[n - 1] = 0.0;
        row[1..n - 1].copy_from_slice(&interior);
    }
    Ok(field)
}

/// Backward solve of the linear equation
/// `-z_t - σ² z_xx + b(t,x) z_x = source` with Dirichlet zero; `b` is given
/// per (step, node). This is the backward half of the linearized system
/// (with `b = H_p(Du)`) and the test function equation of the weak FP
/// duality. Centered gradient with the same upwind fallback as the HJB
/// march.
pub fn solve_backward_advection(
    grid: &Grid1D,
    sigma: f64,
    b: impl Fn(usize, usize) -> f64,
    source: impl Fn(usize, usize) -> f64,
    terminal: &[f64],
) -> Result<SpaceTimeField> {
    let n = grid.n_space;
    if terminal.len() != n {
        return Err(Error::precondition("terminal datum does not match the grid"));
    }
    let (dx, dt) = (grid.dx(), grid.dt());
    let a = sigma * sigma;
    let mut field = SpaceTimeField::zeros(*grid);
    let last = grid.n_time - 1;
    {
        let row = field.slice_mut(last);
        row.copy_from_slice(terminal);
        row[0] = 0.0;
        row[n - 1] = 0.0;
    }
    let lambda = a * dt / (dx * dx);
    let peclet_cap = 2.0 * a / dx;
    let mut rhs = vec![0.0; n - 2];
    for k in (0..last).rev() {
        let prev = field.slice(k + 1).to_vec();
        for i in 1..n - 1 {
            let bi = b(k, i);
            let p = if bi.abs() > peclet_cap {
                if bi > 0.0 {
                    (prev[i] - prev[i - 1]) / dx
                } else {
                    (prev[i + 1] - prev[i]) / dx
                }
            } else {
                (prev[i + 1] - prev[i - 1]) / (2.0 * dx)
            };
            rhs[i - 1] = prev[i] + dt * (source(k, i) - bi * p);
        }
        let interior = solve_implicit_diffusion(lambda, &rhs);
        let row = field.slice_mut(k);
        row[0] = 0.0;
        row[n - 1] = 0.0;
        row[1..n - 1].copy_from_slice(&interior);
    }
    Ok(field)
}

/// `w = exp(-u/2)` pointwise; maps boundary u = 0 to boundary w = 1.
pub fn cole_hopf(u: &SpaceTimeField) -> SpaceTimeField {
    u.map(|v| (-0.5 * v).exp())
}

/// Inverse transform `u = -2 ln w`; errors unless w is strictly positive.
pub fn inverse_cole_hopf(w: &SpaceTimeField) -> Result<SpaceTimeField> {
    if w.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::precondition("transform domain violated: w must be positive"));
    }
    Ok(w.map(|v| -2.0 * v.ln()))
}

pub fn trapezoid(dx: f64, values: &[f64]) -> f64 {
    let n = values.len();
    let mut acc = 0.5 * (values[0] + values[n - 1]);
    for v in &values[1..n - 1] {
        acc += v;
    }
    acc * dx
}
