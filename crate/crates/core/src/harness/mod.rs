//! Experiment orchestration: JSON-configured runs, rate fitting, and
//! deterministic CSV/JSON/SVG emission.
//!
//! Every experiment takes an [`ExperimentConfig`] (parsed from JSON, see
//! [`example_config`] for the schema by example) and writes its artifacts
//! into an output directory. Outputs contain no timestamps and all floats
//! are printed with 17 significant digits, so reruns with the same config
//! and seeds are byte-identical.

pub mod io;
pub mod svg;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::measures::{flat_distance, SubProbMeasure};
use crate::mfg::{solve_mfg, CouplingSpec, MfgSolution, PicardParams};
use crate::nash_small::{nash_residual, projection2, projection_gap, solve_nash_two_player};
use crate::particles::{evaluate_cost, simulate_n_players, Policy};
use crate::pde1d::{Coefficients, Grid1D, Hamiltonian, SpaceTimeField};
use crate::toy_model::{
    drift_table, series_u, sine_coefficients_literal, toy_fixed_point,
    toy_fixed_point_bisection,
};

/// Least-squares power-law fit through `(ln N, ln err)`.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub n_values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Fitted exponent (slope in log-log coordinates).
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares on `(ln N, ln err)`; needs at least 3 points and
/// strictly positive errors.
pub fn fit_rate(n_values: &[f64], errors: &[f64]) -> Result<RateFit> {
    if n_values.len() != errors.len() {
        return Err(Error::precondition("ladder lengths differ"));
    }
    if n_values.len() < 3 {
        return Err(Error::precondition("rate fit needs at least 3 ladder points"));
    }
    if errors.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::precondition("rate fit needs strictly positive errors"));
    }
    let xs: Vec<f64> = n_values.iter().map(|&v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|&v| v.ln()).collect();
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let syy: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(RateFit {
        n_values: n_values.to_vec(),
        errors: errors.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Mfg,
    Toy,
    Simulate,
    Nash2,
    Converge,
    FlatDistance,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_space: usize,
    pub n_time: usize,
    pub t0: f64,
    pub t_final: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_space: 101, n_time: 101, t0: 0.0, t_final: 0.5 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid1D> {
        Grid1D::new(self.n_space, self.n_time, self.t0, self.t_final)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingChoice {
    /// Product terminal coupling of the benchmark model.
    #[default]
    Toy,
    /// F ≡ 0, G ≡ 0 (decoupled).
    Zero,
}

impl CouplingChoice {
    pub fn build(&self) -> CouplingSpec {
        match self {
            CouplingChoice::Toy => crate::toy_model::toy_coupling(),
            CouplingChoice::Zero => CouplingSpec::zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        let p = PicardParams::default();
        PicardConfig { damping: p.damping, tol: p.tol, max_iter: p.max_iter }
    }
}

impl PicardConfig {
    pub fn build(&self) -> PicardParams {
        PicardParams { damping: self.damping, tol: self.tol, max_iter: self.max_iter }
    }
}

/// Initial (sub)probability measure selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureConfig {
    Uniform { mass: f64 },
    Dirac { x: f64 },
    Atoms(Vec<(f64, f64)>),
    Grid { dx: f64, values: Vec<f64> },
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig::Uniform { mass: 1.0 }
    }
}

impl MeasureConfig {
    pub fn build(&self, n_space: usize) -> Result<SubProbMeasure> {
        match self {
            MeasureConfig::Uniform { mass } => {
                if *mass == 0.0 {
                    Ok(SubProbMeasure::zero())
                } else {
                    SubProbMeasure::uniform_on_grid(n_space, *mass)
                }
            }
            MeasureConfig::Dirac { x } => SubProbMeasure::dirac(*x),
            MeasureConfig::Atoms(atoms) => SubProbMeasure::from_atoms(atoms.clone()),
            MeasureConfig::Grid { dx, values } => {
                SubProbMeasure::from_grid(*dx, values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    pub k_order: usize,
    pub fixed_point_tol: f64,
    pub max_iter: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { k_order: 200, fixed_point_tol: 1e-8, max_iter: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyChoice {
    #[default]
    MeanField,
    Constant,
    Projection,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n_players: usize,
    pub dt: f64,
    pub seed: u64,
    pub policy: PolicyChoice,
    pub constant_drift: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            n_players: 64,
            dt: 1e-3,
            seed: 0,
            policy: PolicyChoice::MeanField,
            constant_drift: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NashConfig {
    /// Time-refinement factor of the measure-space solves relative to the
    /// Nash grid.
    pub time_refine: usize,
    /// Every how many time steps a CSV slice is emitted (0 = auto, about
    /// ten slices).
    pub slice_stride: usize,
}

impl Default for NashConfig {
    fn default() -> Self {
        NashConfig { time_refine: 4, slice_stride: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    /// Player ladder for the empirical-measure rate study.
    pub n_ladder: Vec<usize>,
    pub seeds: u64,
    /// Euler-Maruyama step of the particle runs.
    pub sim_dt: f64,
    /// (n_space, n_time) refinement levels for the two-route value check.
    pub refine_levels: Vec<(usize, usize)>,
    /// Nash comparison grids: base and refined (n_space, n_time).
    pub nash_base: (usize, usize),
    pub nash_refined: (usize, usize),
    /// Monte-Carlo samples of the co-player average.
    pub w_samples: usize,
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            n_ladder: vec![16, 64, 256, 1024],
            seeds: 20,
            sim_dt: 1e-5,
            refine_levels: vec![(101, 101), (201, 201), (401, 401)],
            nash_base: (31, 121),
            nash_refined: (61, 481),
            w_samples: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub coupling: CouplingChoice,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub picard: PicardConfig,
    #[serde(default)]
    pub initial_measure: MeasureConfig,
    #[serde(default)]
    pub toy: ToyConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub nash: NashConfig,
    #[serde(default)]
    pub converge: ConvergeConfig,
    /// Worker-pool size; 0 uses the process default.
    #[serde(default)]
    pub threads: usize,
    /// Operands of the flat-distance experiment.
    #[serde(default)]
    pub m1: Option<MeasureConfig>,
    #[serde(default)]
    pub m2: Option<MeasureConfig>,
}

fn default_sigma() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::precondition("sigma must be positive"));
        }
        if !(self.picard.tol > 0.0) || !(self.toy.fixed_point_tol > 0.0) {
            return Err(Error::precondition("all tolerances must be positive"));
        }
        if !(self.picard.damping > 0.0 && self.picard.damping <= 1.0) {
            return Err(Error::precondition("damping must lie in (0, 1]"));
        }
        if self.kind == ExperimentKind::Converge {
            if self.converge.n_ladder.len() < 3 {
                return Err(Error::precondition("N-ladder needs at least 3 points"));
            }
            if !self.converge.n_ladder.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::precondition("N-ladder must be strictly increasing"));
            }
            if self.converge.seeds == 0 {
                return Err(Error::precondition("need at least one seed"));
            }
            if !(self.converge.sim_dt > 0.0) {
                return Err(Error::precondition("sim_dt must be positive"));
            }
        }
        if self.kind == ExperimentKind::FlatDistance
            && (self.m1.is_none() || self.m2.is_none())
        {
            return Err(Error::precondition(
                "flat-distance needs both m1 and m2 in the config",
            ));
        }
        if !(self.simulate.dt > 0.0) {
            return Err(Error::precondition("simulate.dt must be positive"));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients { sigma: self.sigma, hamiltonian: Hamiltonian::Quadratic }
    }

    /// Runs a closure inside a pool of the configured size. Determinism of
    /// outputs is preserved by collecting parallel results in input order,
    /// never completion order.
    pub fn with_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        if self.threads == 0 {
            f()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.threads)
                .build()
                .expect("worker pool");
            pool.install(f)
        }
    }
}

/// Example configuration for each experiment kind (the `--example-config`
/// emitter).
pub fn example_config(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        kind,
        grid: GridConfig::default(),
        coupling: CouplingChoice::Toy,
        sigma: 1.0,
        picard: PicardConfig::default(),
        initial_measure: MeasureConfig::default(),
        toy: ToyConfig::default(),
        simulate: SimulateConfig::default(),
        nash: NashConfig::default(),
        converge: ConvergeConfig::default(),
        threads: 0,
        m1: None,
        m2: None,
    };
    match kind {
        ExperimentKind::Nash2 => {
            cfg.grid = GridConfig { n_space: 41, n_time: 161, t0: 0.0, t_final: 0.25 };
        }
        ExperimentKind::Converge => {
            cfg.grid = GridConfig { n_space: 401, n_time: 1001, t0: 0.0, t_final: 0.25 };
        }
        ExperimentKind::FlatDistance => {
            cfg.m1 = Some(MeasureConfig::Dirac { x: 0.2 });
            cfg.m2 = Some(MeasureConfig::Dirac { x: 0.7 });
        }
        _ => {}
    }
    cfg
}

fn write(out_dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(name), contents)?;
    Ok(())
}

fn write_json(out_dir: &Path, name: &str, value: &Value) -> Result<()> {
    write(out_dir, name, &format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn config_echo(cfg: &ExperimentConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn solution_manifest(sol: &MfgSolution, cfg: &ExperimentConfig) -> Value {
    json!({
        "iterations": sol.iterations,
        "residual_history": sol.residual_history,
        "final_mass": sol.mass_trace.last().copied().unwrap_or(0.0),
        "config": config_echo(cfg),
    })
}

/// `solve-mfg`: converged fields as CSV plus a JSON manifest.
pub fn run_solve_mfg(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Value> {
    let grid = cfg.grid.build()?;
    let m0 = cfg.initial_measure.build(grid.n_space)?;
    let coupling = cfg.coupling.build();
    let sol = cfg.with_pool(|| {
        solve_mfg(&m0, &coupling, &grid, &cfg.coefficients(), &cfg.picard.build())
    })?;
    write(out_dir, "u.csv", &io::field_to_csv(&sol.u))?;
    write(out_dir, "m.csv", &io::field_to_csv(&sol.m))?;
    let rows: Vec<Vec<f64>> = sol
        .mass_trace
        .iter()
        .enumerate()
        .map(|(k, &m)| vec![grid.t(k), m])
        .collect();
    write(out_dir, "mass_trace.csv", &io::table_to_csv(&["t", "mass"], &rows))?;
    let manifest = solution_manifest(&sol, cfg);
    write_json(out_dir, "manifest.json", &manifest)?;
    Ok(manifest)
}

/// `toy`: scalar fixed point, coefficient table, series value field and a
/// profile plot. With `bk_literal` the coefficient table of the variant
/// without the `-1` is emitted alongside and its terminal defect recorded
/// (it fails the terminal condition; nothing asserts it).
pub fn run_toy(cfg: &ExperimentConfig, out_dir: &Path, bk_literal: bool) -> Result<Value> {
    let grid = cfg.grid.build()?;
    let m0 = cfg.initial_measure.build(grid.n_space)?;
    let sol = cfg.with_pool(|| {
        toy_fixed_point(&m0, &grid, cfg.toy.k_order, cfg.toy.fixed_point_tol, cfg.toy.max_iter)
    })?;

    let rows: Vec<Vec<f64>> = sol
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, &b)| vec![(i + 1) as f64, b])
        .collect();
    write(out_dir, "bk.csv", &io::table_to_csv(&["k", "b_k"], &rows))?;

    let mut u = SpaceTimeField::zeros(grid);
    for k in 0..grid.n_time {
        let tau = grid.t_final - grid.t(k);
        for i in 0..grid.n_space {
            u.slice_mut(k)[i] = series_u(&sol.coefficients, tau, grid.x(i))?;
        }
    }
    write(out_dir, "u_series.csv", &io::field_to_csv(&u))?;
    write(out_dir, "m.csv", &io::field_to_csv(&sol.m_flow))?;
    let mass_rows: Vec<Vec<f64>> = sol
        .mass_trace
        .iter()
        .enumerate()
        .map(|(k, &m)| vec![grid.t(k), m])
        .collect();
    write(out_dir, "mass_trace.csv", &io::table_to_csv(&["t", "mass"], &mass_rows))?;

    let profile = svg::Series {
        label: "U(t0, x)",
        points: (0..grid.n_space).map(|i| (grid.x(i), u.at(0, i))).collect(),
    };
    write(
        out_dir,
        "u_t0.svg",
        &svg::linear_plot("value profile at the initial time", "x", "U", &[profile]),
    )?;

    let terminal_defect = |b: &[f64]| -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..grid.n_space {
            let x = grid.x(i);
            let g = x * (1.0 - x) * sol.c_star;
            worst = worst.max((series_u(b, 0.0, x)? - g).abs());
        }
        Ok(worst)
    };
    let mut manifest = json!({
        "c_star": sol.c_star,
        "iterations": sol.iterations,
        "c_history": sol.c_history,
        "k_order": sol.k_order,
        "terminal_defect": terminal_defect(&sol.coefficients)?,
        "config": config_echo(cfg),
    });
    if bk_literal {
        let literal = sine_coefficients_literal(sol.c_star, cfg.toy.k_order);
        let rows: Vec<Vec<f64>> = literal
            .iter()
            .enumerate()
            .map(|(i, &b)| vec![(i + 1) as f64, b])
            .collect();
        write(out_dir, "bk_literal.csv", &io::table_to_csv(&["k", "b_k"], &rows))?;
        manifest["literal_terminal_defect"] = json!(terminal_defect(&literal)?);
    }
    write_json(out_dir, "toy.json", &manifest)?;
    Ok(manifest)
}

/// `simulate`: one seeded run; paths as CSV, costs and hitting times in
/// JSON.
pub fn run_simulate(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<Value> {
    let grid = cfg.grid.build()?;
    let m0 = cfg.initial_measure.build(grid.n_space)?;
    let coupling = cfg.coupling.build();
    let seed = seed_override.unwrap_or(cfg.simulate.seed);
    let coeff = cfg.coefficients();
    let params = cfg.picard.build();

    let policy = match cfg.simulate.policy {
        PolicyChoice::Constant => Policy::Constant(cfg.simulate.constant_drift),
        PolicyChoice::MeanField => {
            let sol = solve_mfg(&m0, &coupling, &grid, &coeff, &params)?;
            Policy::mean_field_from(&sol.u)
        }
        PolicyChoice::Projection => {
            // decentralized drift through the value map, one full solve per
            // evaluation; viable only for small runs
            let mfg_cfg = crate::mfg::MfgConfig {
                t_final: grid.t_final,
                n_space: grid.n_space,
                n_time: grid.n_time,
                coeff,
                params,
            };
            let choice = cfg.coupling;
            Policy::Projection(Box::new(move |t, x, co| {
                let coupling = choice.build();
                let h = 1.0 / (mfg_cfg.n_space - 1) as f64;
                let up =
                    crate::mfg::evaluate_u(t, (x + h).min(1.0), co, &coupling, &mfg_cfg)?;
                let dn =
                    crate::mfg::evaluate_u(t, (x - h).max(0.0), co, &coupling, &mfg_cfg)?;
                Ok(-(up - dn) / (2.0 * h))
            }))
        }
    };

    let run = cfg.with_pool(|| {
        simulate_n_players(
            cfg.simulate.n_players,
            &m0,
            &policy,
            cfg.sigma,
            grid.t0,
            grid.t_final,
            cfg.simulate.dt,
            seed,
        )
    })?;
    let costs = evaluate_cost(&run, &coupling)?;

    // paths.csv: rows = time steps, columns = players
    let mut text = String::new();
    text.push_str(&format!(
        "# {{\"n_players\":{},\"n_steps\":{},\"dt\":{},\"t0\":{},\"t_final\":{}}}\n",
        run.n_players(),
        run.n_steps,
        io::fmt17(run.dt),
        io::fmt17(run.t0),
        io::fmt17(run.t_final)
    ));
    for k in 0..=run.n_steps {
        let row: Vec<String> = run.paths.iter().map(|p| io::fmt17(p[k])).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write(out_dir, "paths.csv", &text)?;

    let manifest = json!({
        "seed": seed,
        "hitting_times": run.hitting_times,
        "absorbed": run.absorbed,
        "realized_costs": costs,
        "empirical_mass": run.empirical_mass,
        "config": config_echo(cfg),
    });
    write_json(out_dir, "run.json", &manifest)?;
    Ok(manifest)
}

/// `nash2`: solves the two-player system, emits time-slice CSVs and a
/// manifest with the structural diagnostics.
pub fn run_nash2(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Value> {
    let grid = cfg.grid.build()?;
    let coupling = cfg.coupling.build();
    let coeff = cfg.coefficients();
    let nash = cfg.with_pool(|| solve_nash_two_player(&coupling, &grid, &coeff))?;

    let stride = if cfg.nash.slice_stride == 0 {
        ((grid.n_time - 1) / 10).max(1)
    } else {
        cfg.nash.slice_stride
    };
    let n = grid.n_space;
    let mut emitted = Vec::new();
    let mut k = 0;
    loop {
        for (name, slice) in [("v1", nash.v1_slice(k)), ("v2", nash.v2_slice(k))] {
            let mut text = format!(
                "# {{\"n_space\":{},\"time\":{},\"step\":{}}}\n",
                n,
                io::fmt17(grid.t(k)),
                k
            );
            for i in 0..n {
                let row: Vec<String> = (0..n).map(|j| io::fmt17(slice[i * n + j])).collect();
                text.push_str(&row.join(","));
                text.push('\n');
            }
            write(out_dir, &format!("{name}_t{k:05}.csv"), &text)?;
        }
        emitted.push(k);
        if k == grid.n_time - 1 {
            break;
        }
        k = (k + stride).min(grid.n_time - 1);
    }

    let mut exch = 0.0f64;
    for k in 0..grid.n_time {
        for i in 0..n {
            for j in 0..n {
                exch = exch.max((nash.v1_at(k, i, j) - nash.v2_at(k, j, i)).abs());
            }
        }
    }
    let manifest = json!({
        "slices": emitted,
        "slice_stride": stride,
        "exchangeability_gap": exch,
        "config": config_echo(cfg),
    });
    write_json(out_dir, "manifest.json", &manifest)?;
    Ok(manifest)
}

/// `flat-distance`: the metric between the two configured measures.
pub fn run_flat_distance(cfg: &ExperimentConfig) -> Result<f64> {
    let n_default = cfg.grid.n_space;
    let m1 = cfg
        .m1
        .as_ref()
        .ok_or_else(|| Error::precondition("missing m1"))?
        .build(n_default)?;
    let m2 = cfg
        .m2
        .as_ref()
        .ok_or_else(|| Error::precondition("missing m2"))?
        .build(n_default)?;
    Ok(flat_distance(&m1, &m2))
}

/// `converge`: the full study — two-route value gaps under grid
/// refinement, the empirical-measure ladder with its fitted exponent, the
/// N = 2 co-player average against the value map with projection
/// diagnostics, and a two-route uniqueness report. A sub-experiment
/// failure leaves the completed parts on disk and marks the summary before
/// the error propagates.
pub fn run_convergence_study(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> Result<Value> {
    fs::create_dir_all(out_dir)?;
    let seed_base = seed_override.unwrap_or(0);
    let mut summary = json!({ "config": config_echo(cfg) });
    let result =
        cfg.with_pool(|| convergence_parts(cfg, out_dir, seed_base, &mut summary));
    match &result {
        Ok(()) => summary["status"] = json!("ok"),
        Err(e) => summary["status"] = json!(format!("failed: {e}")),
    }
    write_json(out_dir, "summary.json", &summary)?;
    result.map(|()| summary)
}

fn convergence_parts(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    seed_base: u64,
    summary: &mut Value,
) -> Result<()> {
    let coeff = cfg.coefficients();
    let params = cfg.picard.build();
    let conv = &cfg.converge;

    // (a) series route vs generic route under grid refinement
    summary["toy_refinement"] = json!({"status": "pending"});
    let mut gap_rows = Vec::new();
    let mut levels = Vec::new();
    for &(ns, nt) in &conv.refine_levels {
        let grid = Grid1D::new(ns, nt, cfg.grid.t0, cfg.grid.t_final)?;
        let m0 = cfg.initial_measure.build(ns)?;
        let (report, _, _) =
            crate::toy_model::toy_cross_check(&m0, &grid, cfg.toy.k_order, &params)?;
        gap_rows.push(vec![ns as f64, nt as f64, report.sup_value_gap, report.c_gap]);
        levels.push(json!({
            "n_space": ns,
            "n_time": nt,
            "sup_value_gap": report.sup_value_gap,
            "c_gap": report.c_gap,
            "c_series": report.c_series,
            "c_generic": report.c_generic,
        }));
    }
    write(
        out_dir,
        "toy_gaps.csv",
        &io::table_to_csv(&["n_space", "n_time", "sup_value_gap", "c_gap"], &gap_rows),
    )?;
    summary["toy_refinement"] = json!({"status": "ok", "levels": levels});

    // (b) empirical-measure flat-distance ladder with rate fit
    summary["empirical_rate"] = json!({"status": "pending"});
    let grid = cfg.grid.build()?;
    let m0 = cfg.initial_measure.build(grid.n_space)?;
    let toy = toy_fixed_point(
        &m0,
        &grid,
        cfg.toy.k_order,
        cfg.toy.fixed_point_tol,
        cfg.toy.max_iter,
    )?;
    let table = drift_table(&toy.coefficients, &grid);
    let drift_field = SpaceTimeField::from_rows(
        grid,
        table.chunks(grid.n_space).map(|c| c.to_vec()).collect(),
    )?;
    let final_density = toy.m_flow.measure_at(grid.n_time - 1)?;
    let policy = Policy::MeanField(Box::new(move |t, x| -drift_field.interp(t, x)));
    let policy = &policy;
    let mean_distances: Vec<f64> = conv
        .n_ladder
        .iter()
        .map(|&n_players| {
            let distances: Vec<f64> = (0..conv.seeds)
                .into_par_iter()
                .map(|s| -> Result<f64> {
                    let run = simulate_n_players(
                        n_players,
                        &m0,
                        policy,
                        cfg.sigma,
                        grid.t0,
                        grid.t_final,
                        conv.sim_dt,
                        seed_base + s,
                    )?;
                    let empirical = run.empirical_flow_at(run.n_steps);
                    Ok(flat_distance(&empirical, &final_density))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(distances.iter().sum::<f64>() / distances.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = conv.n_ladder.iter().map(|&n| n as f64).collect();
    let fit = fit_rate(&ns, &mean_distances)?;
    let rate_rows: Vec<Vec<f64>> =
        ns.iter().zip(&mean_distances).map(|(&n, &d)| vec![n, d]).collect();
    write(
        out_dir,
        "rates.csv",
        &io::table_to_csv(&["n", "mean_flat_distance"], &rate_rows),
    )?;
    let fitted_points: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| (n, (fit.intercept + fit.slope * n.ln()).exp()))
        .collect();
    write(
        out_dir,
        "rates.svg",
        &svg::loglog_plot(
            "empirical measure vs population density at the final time",
            "N",
            "mean flat distance",
            &[
                svg::Series {
                    label: "measured",
                    points: ns.iter().zip(&mean_distances).map(|(&n, &d)| (n, d)).collect(),
                },
                svg::Series { label: "fit", points: fitted_points },
            ],
        ),
    )?;
    summary["empirical_rate"] = json!({
        "status": "ok",
        "n_ladder": conv.n_ladder,
        "seeds": conv.seeds,
        "sim_dt": conv.sim_dt,
        "mean_distances": mean_distances,
        "fit": {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared},
    });

    // (c) N = 2: co-player average of the Nash values vs the value map,
    // plus projection diagnostics at two grid levels
    summary["nash_projection"] = json!({"status": "pending"});
    let coupling = cfg.coupling.build();
    let mut nash_levels = Vec::new();
    for &(ns2, nt2) in &[conv.nash_base, conv.nash_refined] {
        let ngrid = Grid1D::new(ns2, nt2, cfg.grid.t0, cfg.grid.t_final)?;
        let nash = solve_nash_two_player(&coupling, &ngrid, &coeff)?;
        let proj = projection2(&coupling, &ngrid, &coeff, &params, cfg.nash.time_refine)?;
        let gap = projection_gap(&nash, &proj)?;
        let residual =
            nash_residual(&proj, &coupling, &coeff, &params, cfg.nash.time_refine)?;

        // w(t0, x) = ∫ v1(t0, x, y) m0(dy) by seeded Monte Carlo
        let m0n = cfg.initial_measure.build(ns2)?;
        let samples = crate::particles::sample_many(&m0n, conv.w_samples, seed_base ^ 0x77);
        let nt_fine = (ngrid.n_time - 1) * cfg.nash.time_refine.max(1) + 1;
        let fine = Grid1D::new(ns2, nt_fine, ngrid.t0, ngrid.t_final)?;
        let value_sol = solve_mfg(&m0n, &coupling, &fine, &coeff, &params)?;
        let mass = m0n.mass();
        let mut w_gap_l1 = 0.0;
        if !samples.is_empty() {
            let dxn = ngrid.dx();
            let w_profile: Vec<f64> = (0..ns2)
                .map(|i| {
                    let mut acc = 0.0;
                    for &x2 in &samples {
                        let s = (x2 / dxn).clamp(0.0, (ns2 - 1) as f64);
                        let j = (s.floor() as usize).min(ns2 - 2);
                        let frac = s - j as f64;
                        acc += (1.0 - frac) * nash.v1_at(0, i, j)
                            + frac * nash.v1_at(0, i, j + 1);
                    }
                    mass * acc / samples.len() as f64
                })
                .collect();
            let m0_proj = m0n.grid_project(ns2)?;
            let SubProbMeasure::Grid { values: weights, .. } = m0_proj else {
                unreachable!()
            };
            let integrand: Vec<f64> = (0..ns2)
                .map(|i| (w_profile[i] - value_sol.u.at(0, i)).abs() * weights[i])
                .collect();
            w_gap_l1 = crate::pde1d::trapezoid(dxn, &integrand);
        }
        nash_levels.push(json!({
            "n_space": ns2,
            "n_time": nt2,
            "projection_gap": gap,
            "nash_residual": residual,
            "w_l1_gap": w_gap_l1,
        }));
    }
    summary["nash_projection"] = json!({
        "status": "ok",
        "samples": conv.w_samples,
        "levels": nash_levels,
    });

    // (d) uniqueness report: two independent routes to the scalar fixed
    // point (damped iteration vs bisection)
    summary["uniqueness_multistart"] = json!({"status": "pending"});
    let bisect = toy_fixed_point_bisection(
        &m0,
        &grid,
        cfg.toy.k_order,
        cfg.toy.fixed_point_tol.max(1e-8),
    )?;
    summary["uniqueness_multistart"] = json!({
        "status": "ok",
        "routes": ["damped_iteration", "bisection"],
        "c_values": [toy.c_star, bisect.c_star],
        "max_spread": (toy.c_star - bisect.c_star).abs(),
    });
    Ok(())
}
