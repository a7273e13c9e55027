//! Closed-form benchmark model: quadratic Hamiltonian, unit volatility,
//! terminal coupling `G(x, m) = x(1-x) ∫ z(1-z) dm(z)` and no running cost.
//!
//! For a fixed scalar `c = ∫ z(1-z) dm(T)` the backward equation
//! `-u_t - u_xx + ½(u_x)² = 0`, `u(T) = x(1-x) c`, linearizes under
//! `w = e^{-u/2}` into the heat equation with `w = 1` on the boundary, so
//!
//! ```text
//! U(t0, x) = -2 ln(1 + Σ_k b_k e^{-k²π²(T-t0)} sin(kπx)),
//! b_k = 2 ∫₀¹ (e^{-½ y(1-y) c} - 1) sin(kπy) dy.
//! ```
//!
//! Note the `- 1` in the integrand: the series represents `w - 1`, which
//! vanishes at the boundary; expanding `w` itself (the "literal" variant
//! kept below for comparison) double-counts the constant 1 and fails the
//! terminal condition. The model closes with a scalar fixed point: the
//! drift `u_x` built from `c` transports the population, whose terminal
//! moment must reproduce `c`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measures::SubProbMeasure;
use crate::mfg::{solve_mfg, CouplingSpec, MfgSolution, PicardParams};
use crate::pde1d::{solve_fp_forward, Coefficients, Grid1D, SpaceTimeField};

/// Simpson node count for the coefficient integrals (must be odd).
const QUADRATURE_POINTS: usize = 8193;

/// Mode weights below this relative threshold are dropped from series
/// evaluations.
const MODE_CUTOFF: f64 = 1e-18;

/// Sine coefficients of `w(T, ·) - 1` where `w(T, y) = e^{-½ y(1-y) c}`:
/// `b_k = 2 ∫₀¹ (e^{-½ y(1-y) c} - 1) sin(kπy) dy` by composite Simpson.
///
/// Even-order coefficients vanish by the symmetry of `y(1-y)` about 1/2.
pub fn sine_coefficients(c: f64, k_order: usize) -> Vec<f64> {
    sine_coefficients_of(|g| g - 1.0, c, k_order)
}

/// The coefficient formula without the `- 1` (expanding `w` instead of
/// `w - 1`). Kept only so the discrepancy can be demonstrated; it does not
/// satisfy the terminal condition.
pub fn sine_coefficients_literal(c: f64, k_order: usize) -> Vec<f64> {
    sine_coefficients_of(|g| g, c, k_order)
}

fn sine_coefficients_of(post: impl Fn(f64) -> f64, c: f64, k_order: usize) -> Vec<f64> {
    assert!(k_order >= 1, "need at least one mode");
    assert!(c >= 0.0, "the terminal moment is nonnegative");
    let n = QUADRATURE_POINTS;
    let h = 1.0 / (n - 1) as f64;
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let y = i as f64 * h;
            post((-0.5 * y * (1.0 - y) * c).exp())
        })
        .collect();
    let simpson_weight = |i: usize| -> f64 {
        if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    (1..=k_order)
        .map(|k| {
            let mut acc = 0.0;
            for (i, gi) in g.iter().enumerate() {
                acc += simpson_weight(i) * gi * (k as f64 * PI * i as f64 * h).sin();
            }
            2.0 * acc * h / 3.0
        })
        .collect()
}

/// Largest coefficient magnitude, used to truncate decayed tails without
/// tripping over the exact zeros of the even modes.
fn coefficient_scale(b: &[f64]) -> f64 {
    b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// `w(t, x) - 1 = Σ_k b_k e^{-k²π²τ} sin(kπx)` with `τ = T - t`.
fn series_sum(b: &[f64], tau: f64, x: f64) -> f64 {
    let scale = coefficient_scale(b);
    if scale == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (idx, &bk) in b.iter().enumerate() {
        let k = (idx + 1) as f64;
        let decay = (-k * k * PI * PI * tau).exp();
        if decay * scale < MODE_CUTOFF {
            break;
        }
        acc += bk * decay * (k * PI * x).sin();
    }
    acc
}

/// Series evaluation of the value `U = -2 ln(1 + Σ b_k e^{-k²π²τ} sin(kπx))`
/// at time-to-maturity `tau = T - t`. Exactly zero at `x ∈ {0, 1}`.
pub fn series_u(b: &[f64], tau: f64, x: f64) -> Result<f64> {
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    let arg = 1.0 + series_sum(b, tau, x);
    if arg <= 0.0 {
        return Err(Error::precondition(
            "series truncation too aggressive: argument of ln is nonpositive (increase K)",
        ));
    }
    Ok(-2.0 * arg.ln())
}

/// Term-wise derivative: `u_x = -2 w_x / w`.
pub fn series_u_gradient(b: &[f64], tau: f64, x: f64) -> f64 {
    let scale = coefficient_scale(b);
    if scale == 0.0 {
        return 0.0;
    }
    let mut w = 1.0;
    let mut wx = 0.0;
    for (idx, &bk) in b.iter().enumerate() {
        let k = (idx + 1) as f64;
        let decay = (-k * k * PI * PI * tau).exp();
        if decay * scale < MODE_CUTOFF {
            break;
        }
        w += bk * decay * (k * PI * x).sin();
        wx += bk * decay * k * PI * (k * PI * x).cos();
    }
    -2.0 * wx / w
}

/// Drift table `u_x(t_k, x_i)` for the whole grid, evaluated by trig
/// recurrences per time step with per-step mode truncation.
pub fn drift_table(b: &[f64], grid: &Grid1D) -> Vec<f64> {
    let n = grid.n_space;
    let mut table = vec![0.0; grid.n_time * n];
    let scale = coefficient_scale(b);
    if scale == 0.0 {
        return table;
    }
    let dx = grid.dx();
    let (s1, c1): (Vec<f64>, Vec<f64>) =
        (0..n).map(|i| (PI * i as f64 * dx).sin_cos()).unzip();
    let mut w = vec![0.0; n];
    let mut wx = vec![0.0; n];
    for k_step in 0..grid.n_time {
        let tau = grid.t_final - grid.t(k_step);
        w.iter_mut().for_each(|v| *v = 1.0);
        wx.iter_mut().for_each(|v| *v = 0.0);
        // sin(kπx), cos(kπx) by angle addition from the k-1 values.
        let mut sk = s1.clone();
        let mut ck = c1.clone();
        for (idx, &bk) in b.iter().enumerate() {
            let k = (idx + 1) as f64;
            let decay = (-k * k * PI * PI * tau).exp();
            if decay * scale < MODE_CUTOFF {
                break;
            }
            if idx > 0 {
                for i in 0..n {
                    let s = sk[i] * c1[i] + ck[i] * s1[i];
                    let c = ck[i] * c1[i] - sk[i] * s1[i];
                    sk[i] = s;
                    ck[i] = c;
                }
            }
            let amp = bk * decay;
            let amp_grad = bk * decay * k * PI;
            for i in 0..n {
                w[i] += amp * sk[i];
                wx[i] += amp_grad * ck[i];
            }
        }
        let row = &mut table[k_step * n..(k_step + 1) * n];
        for i in 0..n {
            row[i] = -2.0 * wx[i] / w[i];
        }
    }
    table
}

/// Solution of the scalar fixed point together with its series data and the
/// consistent population flow.
#[derive(Debug, Clone)]
pub struct ToySolution {
    pub c_star: f64,
    pub coefficients: Vec<f64>,
    pub k_order: usize,
    pub t0: f64,
    pub t_final: f64,
    pub m_flow: SpaceTimeField,
    pub mass_trace: Vec<f64>,
    pub iterations: usize,
    pub c_history: Vec<f64>,
}

impl ToySolution {
    /// Series value `U(t, x)` for this solution.
    pub fn value(&self, t: f64, x: f64) -> Result<f64> {
        series_u(&self.coefficients, self.t_final - t, x)
    }
}

/// Terminal moment `c'(c) = ∫ z(1-z) dm(T)` of the flow transported by the
/// drift built from `c`.
fn terminal_moment(c: f64, k_order: usize, m0: &SubProbMeasure, grid: &Grid1D) -> Result<(f64, SpaceTimeField, Vec<f64>, Vec<f64>)> {
    let b = sine_coefficients(c, k_order);
    let table = drift_table(&b, grid);
    let n = grid.n_space;
    let coeff = Coefficients::quadratic(1.0); // the model fixes σ = 1
    let fp = solve_fp_forward(
        grid,
        &coeff,
        |t, x| table[grid.step_of(t) * n + grid.node_of(x)],
        m0,
    )?;
    let m_t = fp.field.measure_at(grid.n_time - 1)?;
    Ok((m_t.moment(|z| z * (1.0 - z)), fp.field, fp.mass_trace, b))
}

/// Damped scalar fixed-point iteration `c ← c + ½ (c'(c) - c)`.
///
/// Every iterate stays in `[0, 0.25 · mass(m0)]` since `0 ≤ z(1-z) ≤ 1/4`
/// and mass only decays.
pub fn toy_fixed_point(
    m0: &SubProbMeasure,
    grid: &Grid1D,
    k_order: usize,
    tol: f64,
    max_iter: usize,
) -> Result<ToySolution> {
    if !(tol > 0.0) {
        return Err(Error::precondition("tolerance must be positive"));
    }
    if m0.mass() > 1.0 + 1e-9 {
        return Err(Error::precondition("initial measure must have mass at most 1"));
    }
    let mut c = m0.moment(|z| z * (1.0 - z)).min(0.25);
    let mut history = vec![c];
    for iter in 1..=max_iter {
        let (c_new, field, trace, b) = terminal_moment(c, k_order, m0, grid)?;
        debug_assert!((0.0..=0.25 + 1e-12).contains(&c_new));
        if (c_new - c).abs() <= tol {
            return Ok(ToySolution {
                c_star: c_new,
                coefficients: b,
                k_order,
                t0: grid.t0,
                t_final: grid.t_final,
                m_flow: field,
                mass_trace: trace,
                iterations: iter,
                c_history: history,
            });
        }
        c += 0.5 * (c_new - c);
        history.push(c);
    }
    let last = *history.last().unwrap();
    Err(Error::NonConvergence { iterations: max_iter, last, history })
}

/// Bisection on `g(c) = c'(c) - c` over `[0, 0.25]`. Monotonicity-free
/// oracle mode certifying the damped iteration.
pub fn toy_fixed_point_bisection(
    m0: &SubProbMeasure,
    grid: &Grid1D,
    k_order: usize,
    tol: f64,
) -> Result<ToySolution> {
    if !(tol > 0.0) {
        return Err(Error::precondition("tolerance must be positive"));
    }
    let finish = |c: f64, iterations: usize, history: Vec<f64>| -> Result<ToySolution> {
        let (c_star, field, trace, b) = terminal_moment(c, k_order, m0, grid)?;
        Ok(ToySolution {
            c_star,
            coefficients: b,
            k_order,
            t0: grid.t0,
            t_final: grid.t_final,
            m_flow: field,
            mass_trace: trace,
            iterations,
            c_history: history,
        })
    };

    if m0.mass() == 0.0 {
        return finish(0.0, 0, vec![0.0]);
    }
    let mut lo = 0.0f64;
    let mut hi = 0.25f64;
    let g = |c: f64| -> Result<f64> { Ok(terminal_moment(c, k_order, m0, grid)?.0 - c) };
    let g_lo = g(lo)?;
    if g_lo <= 0.0 {
        return finish(lo, 1, vec![lo]);
    }
    let mut history = Vec::new();
    let mut iterations = 0;
    while hi - lo > tol {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        history.push(mid);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if iterations > 200 {
            return Err(Error::NonConvergence { iterations, last: hi - lo, history });
        }
    }
    finish(0.5 * (lo + hi), iterations, history)
}

/// The model's coupling for the generic solver: `F ≡ 0`,
/// `G(x, m) = x(1-x) ∫ z(1-z) dm`, `δG/δm(x, m, y) = x(1-x) y(1-y)`
/// (vanishing at `y ∈ {0, 1}` as the boundary conditions require).
pub fn toy_coupling() -> CouplingSpec {
    CouplingSpec::terminal_only(
        Box::new(|x, m: &SubProbMeasure| x * (1.0 - x) * m.moment(|z| z * (1.0 - z))),
        Box::new(|x, _m: &SubProbMeasure, y| x * (1.0 - x) * y * (1.0 - y)),
    )
}

/// Gap report between the series route and the generic fixed-point route
/// on the same grid. The two value computations share no code path: one is
/// the exponential-transform series, the other the finite-difference HJB
/// inside the Picard loop.
#[derive(Debug, Clone)]
pub struct CrossCheck {
    pub sup_value_gap: f64,
    pub c_gap: f64,
    pub c_series: f64,
    pub c_generic: f64,
}

/// Runs both routes and reports the sup-norm gap of `U(t0, ·)` and the gap
/// of the scalar fixed points.
pub fn toy_cross_check(
    m0: &SubProbMeasure,
    grid: &Grid1D,
    k_order: usize,
    params: &PicardParams,
) -> Result<(CrossCheck, ToySolution, MfgSolution)> {
    let series = toy_fixed_point(m0, grid, k_order, 1e-9, 500)?;
    let coupling = toy_coupling();
    let generic = solve_mfg(m0, &coupling, grid, &Coefficients::quadratic(1.0), params)?;
    let c_generic =
        generic.m.measure_at(grid.n_time - 1)?.moment(|z| z * (1.0 - z));
    let mut sup = 0.0f64;
    for i in 0..grid.n_space {
        let s = series.value(grid.t0, grid.x(i))?;
        sup = sup.max((s - generic.u.at(0, i)).abs());
    }
    let report = CrossCheck {
        sup_value_gap: sup,
        c_gap: (series.c_star - c_generic).abs(),
        c_series: series.c_star,
        c_generic,
    };
    Ok((report, series, generic))
}
