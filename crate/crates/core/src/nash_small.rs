//! Exact two-player Nash system on a 2-D grid, its structural boundary
//! identities, and the comparison against measure-space projections of the
//! value map.
//!
//! For N = 2 the coupled system for the value functions reads
//!
//! ```text
//! -∂_t v1 - σ²(∂²_{x1} + ∂²_{x2}) v1 + H(∂_{x1} v1)
//!     + H_p(∂_{x2} v2) ∂_{x2} v1 = F(t, x1, δ_{x2}),
//! v1(T, x) = G(x1, δ_{x2} 1{x2 interior}),     v1 = 0  on x1 ∈ {0,1},
//! ```
//!
//! and symmetrically for v2. When the co-player sits on the boundary the
//! equation degenerates to the single-player problem with the zero
//! measure; that identity is exact, so the boundary slices are solved as
//! separate 1-D problems and imposed rather than left to the 2-D stencil.
//!
//! The march is IMEX: alternating-direction implicit diffusion (one
//! tridiagonal sweep per line and direction), Hamiltonian and cross terms
//! explicit from the previous time level (one lagged Jacobi sweep per
//! step). The two players are marched with mirrored sweep orders so
//! exchangeability holds to round-off for symmetric couplings.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::SubProbMeasure;
use crate::mfg::{delta_u_profile, solve_mfg, CouplingSpec, MfgSolution, PicardParams};
use crate::pde1d::{
    solve_hjb_backward, spatial_gradient, Coefficients, Grid1D, SpaceTimeField,
};

/// Two-player value functions on the shared per-axis grid, plus the
/// reduced single-player values imposed on the co-player boundary slices.
#[derive(Debug, Clone)]
pub struct NashSolution2 {
    pub grid: Grid1D,
    v1: Vec<f64>,
    v2: Vec<f64>,
    /// Reduced 1-player solution r(t, x) (zero co-player measure), one row
    /// per time step; both boundary slices of each player carry it.
    pub reduced: SpaceTimeField,
}

impl NashSolution2 {
    fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        let n = self.grid.n_space;
        (k * n + i) * n + j
    }

    pub fn v1_at(&self, k: usize, i: usize, j: usize) -> f64 {
        self.v1[self.idx(k, i, j)]
    }

    pub fn v2_at(&self, k: usize, i: usize, j: usize) -> f64 {
        self.v2[self.idx(k, i, j)]
    }

    /// v1 at one time step as an n×n row-major table (x1 index major).
    pub fn v1_slice(&self, k: usize) -> &[f64] {
        let n2 = self.grid.n_space * self.grid.n_space;
        &self.v1[k * n2..(k + 1) * n2]
    }

    pub fn v2_slice(&self, k: usize) -> &[f64] {
        let n2 = self.grid.n_space * self.grid.n_space;
        &self.v2[k * n2..(k + 1) * n2]
    }
}

/// Co-player measure of a 2-player state: a unit atom at the co-player
/// position, or the zero measure when the co-player is absorbed.
fn co_measure(x: f64) -> SubProbMeasure {
    if x > 0.0 && x < 1.0 {
        SubProbMeasure::dirac(x).expect("interior atom")
    } else {
        SubProbMeasure::zero()
    }
}

/// Solves the N = 2 Nash system backward on `grid × grid`.
pub fn solve_nash_two_player(
    coupling: &CouplingSpec,
    grid: &Grid1D,
    coeff: &Coefficients,
) -> Result<NashSolution2> {
    let n = grid.n_space;
    let nt = grid.n_time;
    let (dx, dt) = (grid.dx(), grid.dt());
    let a = coeff.a();
    let lambda = a * dt / (dx * dx);

    // Reduced single-player problem, imposed on the co-player slices.
    let zero = SubProbMeasure::zero();
    let reduced = solve_hjb_backward(
        grid,
        coeff,
        |x| coupling.terminal_cost(x, &zero),
        |t, x| match &coupling.running {
            Some(f) => f(t, x, &zero),
            None => 0.0,
        },
    )?;

    let n2 = n * n;
    let mut v1 = vec![0.0; nt * n2];
    let mut v2 = vec![0.0; nt * n2];

    // Terminal data: G(x_i, δ_{x_j}) with the boundary convention above.
    let co: Vec<SubProbMeasure> = (0..n).map(|j| co_measure(grid.x(j))).collect();
    {
        let last = nt - 1;
        for i in 1..n - 1 {
            for j in 0..n {
                let g = coupling.terminal_cost(grid.x(i), &co[j]);
                v1[(last * n + i) * n + j] = g;
                v2[(last * n + j) * n + i] = g;
            }
        }
    }

    // Running-cost tables are only built when F is present.
    let running_at = |t: f64, x: f64, j: usize| match &coupling.running {
        Some(f) => f(t, x, &co[j]),
        None => 0.0,
    };

    let ham = coeff.hamiltonian;
    let mut own = vec![0.0; n2]; // scratch for the intermediate ADI field
    for k in (0..nt - 1).rev() {
        let t = grid.t(k);
        let r_now = reduced.slice(k).to_vec();
        let prev1 = v1[(k + 1) * n2..(k + 2) * n2].to_vec();
        let prev2 = v2[(k + 1) * n2..(k + 2) * n2].to_vec();

        // CFL guard for the explicit cross transport.
        let mut speed_max = 0.0f64;

        // Player 1: explicit terms, then x1-implicit, then x2-implicit.
        own.iter_mut().for_each(|v| *v = 0.0);
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let p1 = (prev1[(i + 1) * n + j] - prev1[(i - 1) * n + j]) / (2.0 * dx);
                let q1 = (prev1[i * n + j + 1] - prev1[i * n + j - 1]) / (2.0 * dx);
                let q2 = (prev2[i * n + j + 1] - prev2[i * n + j - 1]) / (2.0 * dx);
                let speed = ham.grad(q2);
                speed_max = speed_max.max(speed.abs()).max(ham.grad(p1).abs());
                own[i * n + j] = prev1[i * n + j]
                    + dt * (running_at(t, grid.x(i), j)
                        - ham.value(p1)
                        - speed * q1);
            }
        }
        if speed_max * dt / dx > 1.0 {
            return Err(Error::precondition(format!(
                "explicit transport CFL violated (|H_p| dt/dx = {:.3}); use a smaller dt",
                speed_max * dt / dx
            )));
        }
        // x1-implicit sweep per interior column j (Dirichlet 0 at x1 ends).
        for j in 1..n - 1 {
            let rhs: Vec<f64> = (1..n - 1).map(|i| own[i * n + j]).collect();
            let sol = tridiag_dirichlet(lambda, &rhs, 0.0, 0.0);
            for (off, value) in sol.into_iter().enumerate() {
                own[(off + 1) * n + j] = value;
            }
        }
        // x2-implicit sweep per interior row i (Dirichlet r at x2 ends).
        let out1 = &mut v1[k * n2..(k + 1) * n2];
        for i in 1..n - 1 {
            let rhs: Vec<f64> = (1..n - 1).map(|j| own[i * n + j]).collect();
            let sol = tridiag_dirichlet(lambda, &rhs, r_now[i], r_now[i]);
            for (off, value) in sol.into_iter().enumerate() {
                out1[i * n + off + 1] = value;
            }
        }
        // impose boundary data exactly
        for i in 0..n {
            out1[i * n] = if i == 0 || i == n - 1 { 0.0 } else { r_now[i] };
            out1[i * n + n - 1] = if i == 0 || i == n - 1 { 0.0 } else { r_now[i] };
        }
        for j in 0..n {
            out1[j] = 0.0;
            out1[(n - 1) * n + j] = 0.0;
        }

        // Player 2: mirrored march (x2-implicit first, then x1-implicit).
        own.iter_mut().for_each(|v| *v = 0.0);
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let q2 = (prev2[i * n + j + 1] - prev2[i * n + j - 1]) / (2.0 * dx);
                let p2 = (prev2[(i + 1) * n + j] - prev2[(i - 1) * n + j]) / (2.0 * dx);
                let p1 = (prev1[(i + 1) * n + j] - prev1[(i - 1) * n + j]) / (2.0 * dx);
                own[i * n + j] = prev2[i * n + j]
                    + dt * (running_at(t, grid.x(j), i)
                        - ham.value(q2)
                        - ham.grad(p1) * p2);
            }
        }
        for i in 1..n - 1 {
            let rhs: Vec<f64> = (1..n - 1).map(|j| own[i * n + j]).collect();
            let sol = tridiag_dirichlet(lambda, &rhs, 0.0, 0.0);
            for (off, value) in sol.into_iter().enumerate() {
                own[i * n + off + 1] = value;
            }
        }
        let out2 = &mut v2[k * n2..(k + 1) * n2];
        for j in 1..n - 1 {
            let rhs: Vec<f64> = (1..n - 1).map(|i| own[i * n + j]).collect();
            let sol = tridiag_dirichlet(lambda, &rhs, r_now[j], r_now[j]);
            for (off, value) in sol.into_iter().enumerate() {
                out2[(off + 1) * n + j] = value;
            }
        }
        for j in 0..n {
            out2[j] = if j == 0 || j == n - 1 { 0.0 } else { r_now[j] };
            out2[(n - 1) * n + j] = if j == 0 || j == n - 1 { 0.0 } else { r_now[j] };
        }
        for i in 0..n {
            out2[i * n] = 0.0;
            out2[i * n + n - 1] = 0.0;
        }
    }

    Ok(NashSolution2 { grid: *grid, v1, v2, reduced })
}

/// Solves `(1 + 2λ) x_i - λ(x_{i-1} + x_{i+1}) = rhs_i` over the interior
/// with Dirichlet data `(left, right)`.
fn tridiag_dirichlet(lambda: f64, rhs: &[f64], left: f64, right: f64) -> Vec<f64> {
    let m = rhs.len();
    let mut r = rhs.to_vec();
    r[0] += lambda * left;
    r[m - 1] += lambda * right;
    let diag = 1.0 + 2.0 * lambda;
    let mut c = vec![0.0; m];
    let mut beta = diag;
    c[0] = -lambda / beta;
    r[0] /= beta;
    for i in 1..m {
        beta = diag + lambda * c[i - 1];
        c[i] = -lambda / beta;
        r[i] = (r[i] + lambda * r[i - 1]) / beta;
    }
    for i in (0..m - 1).rev() {
        let next = r[i + 1];
        r[i] -= c[i] * next;
    }
    r
}

/// Projections of the value map at the initial time:
/// `u1[i][j] = U(t0, x_i, δ_{x_j} 1{x_j interior})` and the role-swapped
/// `u2[i][j] = u1[j][i]`, both as n×n row-major tables.
#[derive(Debug, Clone)]
pub struct Projection2 {
    pub grid: Grid1D,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

/// Builds the projection tables. One forward-backward solve per co-player
/// node, on the spatial axis of `grid` with `time_refine`-times finer time
/// steps; solves run in parallel and are collected in node order.
pub fn projection2(
    coupling: &CouplingSpec,
    grid: &Grid1D,
    coeff: &Coefficients,
    params: &PicardParams,
    time_refine: usize,
) -> Result<Projection2> {
    let n = grid.n_space;
    let columns = solve_projection_bases(coupling, grid, coeff, params, time_refine)?;
    let mut u1 = vec![0.0; n * n];
    for (j, base) in columns.iter().enumerate() {
        for i in 0..n {
            u1[i * n + j] = base.u.at(0, i);
        }
    }
    let mut u2 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            u2[i * n + j] = u1[j * n + i];
        }
    }
    Ok(Projection2 { grid: *grid, u1, u2 })
}

/// One base solve per node: the measure is the unit atom at that node
/// (zero measure on the boundary nodes).
fn solve_projection_bases(
    coupling: &CouplingSpec,
    grid: &Grid1D,
    coeff: &Coefficients,
    params: &PicardParams,
    time_refine: usize,
) -> Result<Vec<MfgSolution>> {
    let n = grid.n_space;
    let nt = (grid.n_time - 1) * time_refine.max(1) + 1;
    let fine = Grid1D::new(n, nt, grid.t0, grid.t_final)?;
    (0..n)
        .into_par_iter()
        .map(|j| {
            let m0 = co_measure(grid.x(j));
            solve_mfg(&m0, coupling, &fine, coeff, params)
        })
        .collect()
}

/// Sup-norm gap at the initial time between the Nash values and the
/// projections: `max_{x1,x2} |v1(t0, ·, ·) - u1(·, ·)|`.
pub fn projection_gap(nash: &NashSolution2, proj: &Projection2) -> Result<f64> {
    if nash.grid != proj.grid {
        return Err(Error::precondition("Nash and projection grids differ"));
    }
    let n = nash.grid.n_space;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((nash.v1_at(0, i, j) - proj.u1[i * n + j]).abs());
        }
    }
    Ok(worst)
}

/// Residual of the projections in the N = 2 Nash operator at the initial
/// time, sup over interior nodes.
///
/// The co-player derivative `∂_{x2} u1` is the intrinsic measure
/// derivative: the y-gradient of `δU/δm` around the single-atom measure,
/// obtained from linearized solves at neighboring perturbation points. The
/// time derivative uses a fresh solve shifted by one fine step; the own
/// second derivative comes from the base solve, the co-player second
/// derivative from neighboring projection columns.
pub fn nash_residual(
    proj: &Projection2,
    coupling: &CouplingSpec,
    coeff: &Coefficients,
    params: &PicardParams,
    time_refine: usize,
) -> Result<f64> {
    let grid = proj.grid;
    let n = grid.n_space;
    let dx = grid.dx();
    let nt = (grid.n_time - 1) * time_refine.max(1) + 1;
    let fine = Grid1D::new(n, nt, grid.t0, grid.t_final)?;
    let dt_fine = fine.dt();
    let shifted = Grid1D::new(n, nt - 1, grid.t0 + dt_fine, grid.t_final)?;

    struct NodeData {
        u_now: Vec<f64>,
        u_shift: Vec<f64>,
        du_now: Vec<f64>,
        dmu_minus: Vec<f64>,
        dmu_plus: Vec<f64>,
    }

    let nodes: Vec<NodeData> = (1..n - 1)
        .into_par_iter()
        .map(|p| -> Result<NodeData> {
            let m0 = co_measure(grid.x(p));
            let base = solve_mfg(&m0, coupling, &fine, coeff, params)?;
            let base_shift = solve_mfg(&m0, coupling, &shifted, coeff, params)?;
            let dmu_minus = delta_u_profile(&base, coupling, grid.x(p - 1), coeff, params)?;
            let dmu_plus = delta_u_profile(&base, coupling, grid.x(p + 1), coeff, params)?;
            Ok(NodeData {
                u_now: base.u.slice(0).to_vec(),
                u_shift: base_shift.u.slice(0).to_vec(),
                du_now: spatial_gradient(base.u.slice(0), dx),
                dmu_minus,
                dmu_plus,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ham = coeff.hamiltonian;
    let a = coeff.a();
    let t0 = grid.t0;
    let zero = SubProbMeasure::zero();
    let mut worst = 0.0f64;
    for j in 1..n - 1 {
        let col = &nodes[j - 1];
        for i in 1..n - 1 {
            let dt_u = (col.u_shift[i] - col.u_now[i]) / dt_fine;
            let lap_own = (col.u_now[i - 1] - 2.0 * col.u_now[i] + col.u_now[i + 1]) / (dx * dx);
            let lap_co = (proj.u1[i * n + j - 1] - 2.0 * proj.u1[i * n + j]
                + proj.u1[i * n + j + 1])
                / (dx * dx);
            let grad_own = col.du_now[i];
            let d_m = (col.dmu_plus[i] - col.dmu_minus[i]) / (2.0 * dx);
            // ∂_{x2} u2 = D_x U(t0, x_j, δ_{x_i}): gradient of column i.
            let co_grad = nodes[i - 1].du_now[j];
            let f = match &coupling.running {
                Some(f) => {
                    let m = co_measure(grid.x(j));
                    f(t0, grid.x(i), &m)
                }
                None => {
                    let _ = &zero;
                    0.0
                }
            };
            let residual = -dt_u - a * (lap_own + lap_co)
                + ham.value(grad_own)
                + ham.grad(co_grad) * d_m
                - f;
            worst = worst.max(residual.abs());
        }
    }
    Ok(worst)
}
