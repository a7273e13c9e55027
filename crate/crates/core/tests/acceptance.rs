//! Acceptance suite: every numbered criterion runs at its pinned tolerance
//! and the harness prints one pass/fail line per criterion (the test name
//! carries the criterion number). Criteria are independent and seeded, so
//! the verdicts are reproducible.

use std::f64::consts::PI;

use mfgabsorb_core::harness::fit_rate;
use mfgabsorb_core::measures::{flat_distance, SubProbMeasure};
use mfgabsorb_core::mfg::{
    delta_u_profile, evaluate_u, hat_density, solve_linearized, solve_mfg, CouplingSpec,
    LinearizedData, MfgConfig, PicardParams,
};
use mfgabsorb_core::nash_small::{
    nash_residual, projection2, projection_gap, solve_nash_two_player,
};
use mfgabsorb_core::particles::{evaluate_cost, simulate_n_players, Policy};
use mfgabsorb_core::pde1d::{
    cole_hopf, inverse_cole_hopf, solve_fp_forward, solve_hjb_backward, Coefficients, Grid1D,
    Hamiltonian, SpaceTimeField,
};
use mfgabsorb_core::toy_model::{
    drift_table, series_u, sine_coefficients, sine_coefficients_literal, toy_coupling,
    toy_cross_check, toy_fixed_point, toy_fixed_point_bisection,
};

fn heat() -> Coefficients {
    Coefficients { sigma: 1.0, hamiltonian: Hamiltonian::None }
}

fn quad() -> Coefficients {
    Coefficients::quadratic(1.0)
}

/// Deterministic splitmix64-based uniform draws for the randomized
/// criteria.
struct Draws(u64);

impl Draws {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

fn eigen_density(n_space: usize) -> SubProbMeasure {
    let dx = 1.0 / (n_space - 1) as f64;
    let mut v: Vec<f64> = (0..n_space).map(|i| (PI * i as f64 * dx).sin()).collect();
    v[0] = 0.0;
    v[n_space - 1] = 0.0;
    SubProbMeasure::from_grid(dx, v).unwrap()
}

#[test]
fn criterion_01_mass_dissipation() {
    // 10 randomized (m0, drift) instances: the mass trace never increases
    // and never exceeds mass(m0) <= 1. Exact comparisons.
    let mut rng = Draws(0x01);
    let grid = Grid1D::new(101, 401, 0.0, 0.3).unwrap();
    for instance in 0..10 {
        let n = grid.n_space;
        let dx = grid.dx();
        // random bump mixture, zero at the boundary
        let centers: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| (rng.range(0.15, 0.85), rng.range(0.03, 0.2), rng.unit()))
            .collect();
        let mut density: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * dx;
                centers
                    .iter()
                    .map(|&(c, w, a)| a * (-((x - c) / w).powi(2)).exp())
                    .sum::<f64>()
            })
            .collect();
        density[0] = 0.0;
        density[n - 1] = 0.0;
        let raw_mass: f64 =
            dx * (density.iter().sum::<f64>() - 0.5 * (density[0] + density[n - 1]));
        let target = rng.range(0.2, 1.0);
        for v in &mut density {
            *v *= target / raw_mass;
        }
        let m0 = SubProbMeasure::from_grid(dx, density).unwrap();

        let amp = rng.range(-1.0, 1.0);
        let freq = rng.range(1.0, 4.0);
        let phase = rng.range(0.0, 2.0 * PI);
        let drift =
            move |t: f64, x: f64| amp * (2.0 * PI * freq * (x + 0.5 * t) + phase).sin();

        let sol = solve_fp_forward(&grid, &heat(), drift, &m0).unwrap();
        let mass0 = sol.mass_trace[0];
        assert!(mass0 <= m0.mass() + 1e-12 && mass0 <= 1.0 + 1e-12);
        for w in sol.mass_trace.windows(2) {
            assert!(w[1] <= w[0], "instance {instance}: mass rose {} -> {}", w[0], w[1]);
        }
        assert!(*sol.mass_trace.last().unwrap() <= m0.mass());
    }
    println!("criterion 01 mass dissipation: PASS");
}

#[test]
fn criterion_02_heat_eigenfunction_exactness() {
    let sup_error = |n_space: usize, n_time: usize| {
        let m0 = eigen_density(n_space);
        let grid = Grid1D::new(n_space, n_time, 0.0, 0.25).unwrap();
        let sol = solve_fp_forward(&grid, &heat(), |_, _| 0.0, &m0).unwrap();
        let mut err = 0.0f64;
        for k in 0..grid.n_time {
            let decay = (-PI * PI * grid.t(k)).exp();
            for i in 0..grid.n_space {
                err = err.max((sol.field.at(k, i) - decay * (PI * grid.x(i)).sin()).abs());
            }
        }
        err
    };
    // 401 nodes, dt = 2.5e-5
    let base = sup_error(401, 10001);
    assert!(base <= 5e-4, "sup error {base:.3e} > 5e-4");
    // quartering dx and dt improves the error by at least 3x
    let refined = sup_error(1601, 40001);
    assert!(
        refined <= base / 3.0,
        "refinement gain too small: {base:.3e} -> {refined:.3e}"
    );
    println!("criterion 02 heat eigenfunction: PASS (err {base:.3e} -> {refined:.3e})");
}

#[test]
fn criterion_03_cole_hopf_equivalence() {
    // direct quadratic-Hamiltonian solve vs -2 ln(heat series), c = 0.1
    let c = 0.1;
    let grid = Grid1D::new(401, 2001, 0.0, 0.5).unwrap();
    let direct =
        solve_hjb_backward(&grid, &quad(), |x| x * (1.0 - x) * c, |_, _| 0.0).unwrap();
    let b = sine_coefficients(c, 200);
    let mut err = 0.0f64;
    for k in 0..grid.n_time {
        let tau = grid.t_final - grid.t(k);
        for i in 0..grid.n_space {
            let series = series_u(&b, tau, grid.x(i)).unwrap();
            err = err.max((direct.at(k, i) - series).abs());
        }
    }
    assert!(err <= 1e-3, "sup gap {err:.3e} > 1e-3");
    // the exponential transform itself is an exact involution
    let round = inverse_cole_hopf(&cole_hopf(&direct)).unwrap();
    assert!(round.sup_distance(&direct) < 1e-12);
    println!("criterion 03 exponential-transform equivalence: PASS (sup {err:.3e})");
}

#[test]
fn criterion_04_toy_fixed_point_routes_agree() {
    // bisection oracle on a 2001-node transport grid
    let oracle_grid = Grid1D::new(2001, 2001, 0.0, 0.5).unwrap();
    let m0_fine = SubProbMeasure::uniform_on_grid(2001, 1.0).unwrap();
    let bisect = toy_fixed_point_bisection(&m0_fine, &oracle_grid, 200, 1e-8).unwrap();

    // damped iteration and the generic fixed point at 401 x 401
    let grid = Grid1D::new(401, 401, 0.0, 0.5).unwrap();
    let m0 = SubProbMeasure::uniform_on_grid(401, 1.0).unwrap();
    let damped = toy_fixed_point(&m0, &grid, 200, 1e-9, 500).unwrap();
    assert!(
        (damped.c_star - bisect.c_star).abs() <= 1e-3,
        "damped {} vs bisection {}",
        damped.c_star,
        bisect.c_star
    );

    let (report, _, _) =
        toy_cross_check(&m0, &grid, 200, &PicardParams::default()).unwrap();
    assert!(
        report.sup_value_gap <= 5e-3,
        "series vs generic sup gap {:.3e} > 5e-3",
        report.sup_value_gap
    );
    assert!(
        (report.c_generic - bisect.c_star).abs() <= 1e-3,
        "generic c {} vs oracle {}",
        report.c_generic,
        bisect.c_star
    );
    println!(
        "criterion 04 scalar fixed point: PASS (c* = {:.6e}, sup gap {:.3e})",
        bisect.c_star, report.sup_value_gap
    );
}

#[test]
fn criterion_05_terminal_consistency_and_literal_defect() {
    let c = 0.1;
    let corrected = sine_coefficients(c, 200);
    let mut rng = Draws(0x05);
    let mut worst = 0.0f64;
    let mut xs: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    xs.extend((0..50).map(|_| rng.unit()));
    for &x in &xs {
        let u = series_u(&corrected, 0.0, x).unwrap();
        worst = worst.max((u - x * (1.0 - x) * c).abs());
    }
    assert!(worst <= 1e-6, "terminal defect {worst:.3e} > 1e-6");

    // the coefficients without the -1 expand w instead of w - 1 and miss
    // the terminal condition by order one
    let literal = sine_coefficients_literal(c, 200);
    let defect = (series_u(&literal, 0.0, 0.5).unwrap() - 0.25 * c).abs();
    assert!(defect > 0.1, "literal variant unexpectedly close: {defect:.3e}");
    println!(
        "criterion 05 terminal consistency: PASS (defect {worst:.3e}, literal {defect:.3e})"
    );
}

#[test]
fn criterion_06_flat_metric_against_analytic_values() {
    let mut rng = Draws(0x06);
    // 50 Dirac pairs: d = |x - y|
    for _ in 0..50 {
        let x = rng.range(0.01, 0.99);
        let y = rng.range(0.01, 0.99);
        let d = flat_distance(
            &SubProbMeasure::dirac(x).unwrap(),
            &SubProbMeasure::dirac(y).unwrap(),
        );
        assert!((d - (x - y).abs()).abs() <= 1e-9, "dirac pair ({x},{y}): {d}");
    }
    // mass-deficit cases: distance to the zero measure is the mass, and
    // proportional densities differ by their mass gap
    for _ in 0..20 {
        let atoms: Vec<(f64, f64)> =
            (0..12).map(|_| (rng.range(0.05, 0.95), rng.range(0.001, 0.08))).collect();
        let m = SubProbMeasure::from_atoms(atoms).unwrap();
        let d = flat_distance(&m, &SubProbMeasure::zero());
        assert!((d - m.mass()).abs() <= 1e-9);
    }
    for _ in 0..20 {
        let a = rng.range(0.1, 1.0);
        let b = rng.range(0.1, 1.0);
        let ma = SubProbMeasure::uniform_on_grid(101, a).unwrap();
        let mb = SubProbMeasure::uniform_on_grid(101, b).unwrap();
        let d = flat_distance(&ma, &mb);
        assert!((d - (a - b).abs()).abs() <= 1e-9, "masses ({a},{b}): {d}");
    }
    // metric axioms on 100 random triples
    let random_measure = |rng: &mut Draws| {
        let count = 1 + (rng.next_u64() % 20) as usize;
        let atoms: Vec<(f64, f64)> = (0..count)
            .map(|_| (rng.range(0.02, 0.98), rng.range(0.001, 0.04)))
            .collect();
        SubProbMeasure::from_atoms(atoms).unwrap()
    };
    for _ in 0..100 {
        let m1 = random_measure(&mut rng);
        let m2 = random_measure(&mut rng);
        let m3 = random_measure(&mut rng);
        let d12 = flat_distance(&m1, &m2);
        let d21 = flat_distance(&m2, &m1);
        let d13 = flat_distance(&m1, &m3);
        let d23 = flat_distance(&m2, &m3);
        assert!(flat_distance(&m1, &m1) == 0.0);
        assert!((d12 - d21).abs() <= 1e-9);
        assert!(d13 <= d12 + d23 + 1e-9);
        assert!(d12 >= 0.0);
    }
    println!("criterion 06 flat metric: PASS");
}

#[test]
fn criterion_07_master_boundary_conditions() {
    let coupling = toy_coupling();
    let cfg = MfgConfig {
        t_final: 0.25,
        n_space: 101,
        n_time: 101,
        coeff: quad(),
        params: PicardParams::default(),
    };
    let m0 = SubProbMeasure::uniform_on_grid(101, 1.0).unwrap();
    // value vanishes exactly on the spatial boundary
    assert_eq!(evaluate_u(0.0, 0.0, &m0, &coupling, &cfg).unwrap(), 0.0);
    assert_eq!(evaluate_u(0.0, 1.0, &m0, &coupling, &cfg).unwrap(), 0.0);
    assert_eq!(evaluate_u(0.1, 0.0, &m0, &coupling, &cfg).unwrap(), 0.0);

    // the solved field itself carries exact Dirichlet zeros
    let grid = cfg.grid_from(0.0).unwrap();
    let base = solve_mfg(&m0, &coupling, &grid, &quad(), &cfg.params).unwrap();
    for k in 0..grid.n_time {
        assert_eq!(base.u.at(k, 0), 0.0);
        assert_eq!(base.u.at(k, grid.n_space - 1), 0.0);
    }

    // measure-derivative boundary: the perturbation hat at a boundary node
    // is the deleted (zero) measure; re-verify through the linearized
    // solve rather than the early return
    for y in [0.0, 1.0] {
        let mu0 = hat_density(&grid, y);
        let (v, mu) = solve_linearized(
            &base,
            &coupling,
            &mu0,
            &quad(),
            &cfg.params,
            &LinearizedData::default(),
        )
        .unwrap();
        assert!(v.sup_norm() <= 1e-10, "y = {y}: |v| = {:.3e}", v.sup_norm());
        assert!(mu.sup_norm() <= 1e-10);
    }
    // and the public evaluator imposes the same zeros
    let profile = delta_u_profile(&base, &coupling, 0.0, &quad(), &cfg.params).unwrap();
    assert!(profile.iter().all(|&v| v.abs() <= 1e-10));
    // x-boundary of the derivative: the linearized field is Dirichlet
    let interior = delta_u_profile(&base, &coupling, 0.5, &quad(), &cfg.params).unwrap();
    assert_eq!(interior[0], 0.0);
    assert_eq!(interior[grid.n_space - 1], 0.0);
    println!("criterion 07 boundary conditions: PASS");
}

#[test]
fn criterion_08_measure_derivative_difference_quotient() {
    // (U(m + s(m'-m)) - U(m))/s converges linearly in s to the linearized
    // pairing with mu0 = m' - m; fitted order >= 0.8
    let n = 201;
    let params = PicardParams { tol: 1e-10, ..Default::default() };
    let grid = Grid1D::new(n, 201, 0.0, 0.1).unwrap();
    let coupling = toy_coupling();
    let m = SubProbMeasure::uniform_on_grid(n, 0.3).unwrap();
    let m_prime = SubProbMeasure::uniform_on_grid(n, 0.9).unwrap();
    let (SubProbMeasure::Grid { values: vm, dx }, SubProbMeasure::Grid { values: vp, .. }) =
        (m.clone(), m_prime.clone())
    else {
        unreachable!()
    };

    let base = solve_mfg(&m, &coupling, &grid, &quad(), &params).unwrap();
    let mu0: Vec<f64> = vp.iter().zip(&vm).map(|(p, q)| p - q).collect();
    let (v, _) = solve_linearized(
        &base,
        &coupling,
        &mu0,
        &quad(),
        &params,
        &LinearizedData::default(),
    )
    .unwrap();

    let s_ladder = [0.1, 0.05, 0.025];
    let mut errors = Vec::new();
    for &s in &s_ladder {
        let blend: Vec<f64> =
            vm.iter().zip(&vp).map(|(a, b)| a + s * (b - a)).collect();
        let m_s = SubProbMeasure::from_grid(dx, blend).unwrap();
        let sol_s = solve_mfg(&m_s, &coupling, &grid, &quad(), &params).unwrap();
        let mut sup = 0.0f64;
        for i in 0..n {
            let dq = (sol_s.u.at(0, i) - base.u.at(0, i)) / s;
            sup = sup.max((dq - v.at(0, i)).abs());
        }
        errors.push(sup);
    }
    let fit = fit_rate(&s_ladder, &errors).unwrap();
    assert!(
        fit.slope >= 0.8,
        "fitted order {:.3} < 0.8 (errors {errors:?})",
        fit.slope
    );
    println!(
        "criterion 08 measure-derivative consistency: PASS (order {:.3})",
        fit.slope
    );
}

#[test]
fn criterion_09_taylor_expansion_is_second_order() {
    // residual of the first-order expansion scales like d1^2: fitted
    // exponent >= 1.8 over 4 shrinking pairs
    let n = 201;
    let grid = Grid1D::new(n, 201, 0.0, 0.1).unwrap();
    let coupling = toy_coupling();
    let params = PicardParams { tol: 1e-11, ..Default::default() };
    let eps_ladder = [0.2, 0.1, 0.05, 0.025];
    let mut d1s = Vec::new();
    let mut residuals = Vec::new();
    for &eps in &eps_ladder {
        let m1 = SubProbMeasure::uniform_on_grid(n, 0.5 + eps).unwrap();
        let m2 = SubProbMeasure::uniform_on_grid(n, 0.5).unwrap();
        d1s.push(flat_distance(&m1, &m2));
        residuals.push(
            mfgabsorb_core::mfg::taylor_residual(&m1, &m2, &coupling, &grid, &quad(), &params)
                .unwrap(),
        );
    }
    let fit = fit_rate(&d1s, &residuals).unwrap();
    assert!(
        fit.slope >= 1.8,
        "fitted exponent {:.3} < 1.8 (d1 {d1s:?}, residuals {residuals:?})",
        fit.slope
    );
    // a wide pair stays finite and is merely reported
    let wide = mfgabsorb_core::mfg::taylor_residual(
        &SubProbMeasure::uniform_on_grid(n, 0.8).unwrap(),
        &SubProbMeasure::uniform_on_grid(n, 0.2).unwrap(),
        &coupling,
        &grid,
        &quad(),
        &params,
    )
    .unwrap();
    assert!(wide.is_finite());
    println!(
        "criterion 09 first-order expansion: PASS (exponent {:.3}, wide-pair residual {wide:.3e})",
        fit.slope
    );
}

#[test]
fn criterion_10_empirical_measure_rate() {
    // flat distance between the empirical measure and the transported
    // density at the final time, 20 seeds, N in {16, 64, 256, 1024}:
    // fitted slope in [-0.65, -0.35]
    let grid = Grid1D::new(401, 1001, 0.0, 0.25).unwrap();
    let m0 = SubProbMeasure::uniform_on_grid(401, 1.0).unwrap();
    let toy = toy_fixed_point(&m0, &grid, 200, 1e-8, 500).unwrap();
    let table = drift_table(&toy.coefficients, &grid);
    let drift_field = SpaceTimeField::from_rows(
        grid,
        table.chunks(grid.n_space).map(|c| c.to_vec()).collect(),
    )
    .unwrap();
    let policy = Policy::MeanField(Box::new(move |t, x| -drift_field.interp(t, x)));
    let final_density = toy.m_flow.measure_at(grid.n_time - 1).unwrap();

    let ladder = [16usize, 64, 256, 1024];
    let seeds = 20u64;
    let mut means = Vec::new();
    for &n_players in &ladder {
        let mut acc = 0.0;
        for s in 0..seeds {
            let run = simulate_n_players(
                n_players, &m0, &policy, 1.0, 0.0, 0.25, 1e-5, 1000 + s,
            )
            .unwrap();
            acc += flat_distance(&run.empirical_flow_at(run.n_steps), &final_density);
        }
        means.push(acc / seeds as f64);
    }
    let ns: Vec<f64> = ladder.iter().map(|&n| n as f64).collect();
    let fit = fit_rate(&ns, &means).unwrap();
    assert!(
        (-0.65..=-0.35).contains(&fit.slope),
        "slope {:.3} outside [-0.65, -0.35] (means {means:?})",
        fit.slope
    );
    println!("criterion 10 empirical-measure rate: PASS (slope {:.3})", fit.slope);
}

#[test]
fn criterion_11_verification_principle() {
    // Monte-Carlo mean cost under the mean-field policy matches the value
    // map at the starting point within 3 standard errors, 2000 paths
    let grid = Grid1D::new(401, 1001, 0.0, 0.25).unwrap();
    let m0 = SubProbMeasure::dirac(0.5).unwrap();
    let coupling = toy_coupling();
    let sol = solve_mfg(&m0, &coupling, &grid, &quad(), &PicardParams::default()).unwrap();
    let u_ref = sol.u.interp_space(0, 0.5);

    let policy = Policy::mean_field_from(&sol.u);
    let run =
        simulate_n_players(2000, &m0, &policy, 1.0, 0.0, 0.25, 2.5e-5, 0xACC).unwrap();
    let costs = evaluate_cost(&run, &coupling).unwrap();
    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert!(
        (mean - u_ref).abs() <= 3.0 * se,
        "mean cost {mean:.6e} vs value {u_ref:.6e} (3se {:.3e})",
        3.0 * se
    );
    // positivity: quadratic running cost and nonnegative terminal cost
    assert!(costs.iter().all(|&c| c >= 0.0));
    println!(
        "criterion 11 verification principle: PASS (gap {:.3e} <= 3se {:.3e})",
        (mean - u_ref).abs(),
        3.0 * se
    );
}

#[test]
fn criterion_12_nash_two_player_structure() {
    let params = PicardParams::default();
    let t_final = 0.25;

    // boundary-slice identity with a coupling whose zero-measure data is
    // nontrivial: the slices carry the reduced one-player solution exactly
    let offset_coupling = || -> CouplingSpec {
        CouplingSpec::terminal_only(
            Box::new(|x, m: &SubProbMeasure| {
                x * (1.0 - x) * (0.2 + m.moment(|z| z * (1.0 - z)))
            }),
            Box::new(|x, _m: &SubProbMeasure, y| x * (1.0 - x) * y * (1.0 - y)),
        )
    };
    let grid = Grid1D::new(31, 121, 0.0, t_final).unwrap();
    let nash_off = solve_nash_two_player(&offset_coupling(), &grid, &quad()).unwrap();
    let n = grid.n_space;
    for k in 0..grid.n_time {
        for i in 1..n - 1 {
            let lo = nash_off.v1_at(k, i, 0);
            let hi = nash_off.v1_at(k, i, n - 1);
            let red = nash_off.reduced.at(k, i);
            assert!((lo - hi).abs() <= 1e-12, "slice mismatch {:.3e}", (lo - hi).abs());
            assert!((lo - red).abs() <= 1e-12);
        }
    }
    // re-verify the slice against the reduced implicit step
    {
        let (dx, dt) = (grid.dx(), grid.dt());
        let lambda = dt / (dx * dx);
        let r = &nash_off.reduced;
        for k in 0..grid.n_time - 1 {
            for i in 1..n - 1 {
                let p = (r.at(k + 1, i + 1) - r.at(k + 1, i - 1)) / (2.0 * dx);
                let lhs = (1.0 + 2.0 * lambda) * r.at(k, i)
                    - lambda * (r.at(k, i - 1) + r.at(k, i + 1));
                let rhs = r.at(k + 1, i) - dt * 0.5 * p * p;
                assert!((lhs - rhs).abs() <= 1e-12);
            }
        }
    }

    // exchangeability and exact terminal data for the symmetric coupling
    let coupling = toy_coupling();
    let nash = solve_nash_two_player(&coupling, &grid, &quad()).unwrap();
    let mut exch = 0.0f64;
    for k in 0..grid.n_time {
        for i in 0..n {
            for j in 0..n {
                exch = exch.max((nash.v1_at(k, i, j) - nash.v2_at(k, j, i)).abs());
            }
        }
    }
    assert!(exch <= 1e-10, "exchangeability gap {exch:.3e}");
    let last = grid.n_time - 1;
    let dirac_at = |x: f64| SubProbMeasure::dirac(x).unwrap();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let expected = coupling.terminal_cost(grid.x(i), &dirac_at(grid.x(j)));
            assert_eq!(nash.v1_at(last, i, j), expected);
        }
    }

    // projection gap and operator residual: finite, stable under one grid
    // refinement, and reported into summary.json
    let mut levels = Vec::new();
    for &(ns, nt) in &[(31usize, 121usize), (61, 481)] {
        let g = Grid1D::new(ns, nt, 0.0, t_final).unwrap();
        let nash_l = solve_nash_two_player(&coupling, &g, &quad()).unwrap();
        let proj = projection2(&coupling, &g, &quad(), &params, 4).unwrap();
        let gap = projection_gap(&nash_l, &proj).unwrap();
        let residual = nash_residual(&proj, &coupling, &quad(), &params, 4).unwrap();
        assert!(gap.is_finite() && residual.is_finite());
        levels.push((ns, nt, gap, residual));
    }
    let (g1, g2) = (levels[0].2, levels[1].2);
    let (r1, r2) = (levels[0].3, levels[1].3);
    assert!(
        (g2 - g1).abs() / g1.max(1e-12) < 0.5,
        "projection gap unstable: {g1:.3e} -> {g2:.3e}"
    );
    assert!(
        (r2 - r1).abs() / r1.max(1e-12) < 0.5,
        "nash residual unstable: {r1:.3e} -> {r2:.3e}"
    );
    let summary = serde_json::json!({
        "nash_projection": {
            "levels": levels.iter().map(|&(ns, nt, gap, residual)| serde_json::json!({
                "n_space": ns,
                "n_time": nt,
                "projection_gap": gap,
                "nash_residual": residual,
            })).collect::<Vec<_>>(),
            "exchangeability_gap": exch,
        }
    });
    let out = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summary).unwrap(),
    )
    .unwrap();
    assert!(out.join("summary.json").exists());
    println!(
        "criterion 12 two-player structure: PASS (gap {g1:.3e} -> {g2:.3e}, residual {r1:.3e} -> {r2:.3e})"
    );
}
