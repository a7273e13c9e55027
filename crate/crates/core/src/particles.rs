//! Seeded Monte-Carlo simulation of the absorbed N-player game.
//!
//! Players follow `dX = drift dt + √2 σ dB` by Euler-Maruyama; the first
//! step that lands on or beyond a boundary clamps the position to the
//! crossed endpoint and freezes the path there (the player is absorbed and
//! its mass leaves the empirical measure). Crossing detection is discrete:
//! the post-step sign check carries the usual O(√dt) hitting bias, so
//! consumers pick dt small enough for their tolerances.
//!
//! Noise comes from a counter-based generator with one substream per
//! player derived from `(seed, player index)`, so runs are reproducible
//! independently of scheduling and the population size.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::measures::{
    empirical_measure, empirical_measure_all, flat_distance, EmpiricalState, SubProbMeasure,
};
use crate::mfg::CouplingSpec;
use crate::pde1d::SpaceTimeField;

/// Control policy generating the per-player drift.
pub enum Policy {
    /// Fixed drift (testing).
    Constant(f64),
    /// State-feedback drift `(t, x) -> drift`, typically `-u_x` from a
    /// precomputed solution of the coupled system.
    MeanField(Box<dyn Fn(f64, f64) -> f64 + Send + Sync>),
    /// Decentralized drift `(t, x_i, co-player measure) -> drift`,
    /// evaluated against the live empirical measure each step.
    Projection(Box<dyn Fn(f64, f64, &SubProbMeasure) -> Result<f64> + Send + Sync>),
}

impl Policy {
    /// Mean-field policy from a solved forward-backward pair: the optimal
    /// feedback is `-H_p(Du)`, which for the quadratic Hamiltonian is
    /// `-u_x` interpolated on the solution grid.
    pub fn mean_field_from(u: &SpaceTimeField) -> Policy {
        let grid = u.grid;
        let n = grid.n_space;
        let mut gradients = vec![0.0; grid.n_time * n];
        for k in 0..grid.n_time {
            gradients[k * n..(k + 1) * n]
                .copy_from_slice(&crate::pde1d::spatial_gradient(u.slice(k), grid.dx()));
        }
        let field = SpaceTimeField::from_rows(
            grid,
            gradients.chunks(n).map(|c| c.to_vec()).collect(),
        )
        .expect("gradient table matches the grid");
        Policy::MeanField(Box::new(move |t, x| -field.interp(t, x)))
    }
}

/// One completed simulation: frozen paths, hitting times, realized drifts
/// and the per-step empirical mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GameRun {
    pub t0: f64,
    pub t_final: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    /// positions, `paths[i][k]`; frozen at the boundary value after τ_i.
    pub paths: Vec<Vec<f64>>,
    /// realized drift of each player at each step start (0 after τ_i).
    pub drifts: Vec<Vec<f64>>,
    /// τ_i; equals t_final for players never absorbed.
    pub hitting_times: Vec<f64>,
    /// whether the player hit a boundary strictly before t_final.
    pub absorbed: Vec<bool>,
    /// mass of the full empirical measure (#active / N) per step.
    pub empirical_mass: Vec<f64>,
}

impl GameRun {
    pub fn n_players(&self) -> usize {
        self.paths.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Player activity at step k: a player counts as active while `t < τ`
    /// or when it survived to the final time.
    fn active_at(&self, k: usize, i: usize) -> bool {
        let t = self.time(k);
        !self.absorbed[i] || t < self.hitting_times[i]
    }

    pub fn state_at(&self, k: usize) -> EmpiricalState {
        let positions = self.paths.iter().map(|p| p[k]).collect();
        let active = (0..self.n_players()).map(|i| self.active_at(k, i)).collect();
        EmpiricalState { positions, active }
    }

    /// Empirical measure over active players, weight 1/N each.
    pub fn empirical_flow_at(&self, k: usize) -> SubProbMeasure {
        empirical_measure_all(&self.state_at(k)).expect("state invariants hold")
    }

    /// Co-player measure of player `i` (1-based) at step k.
    pub fn co_measure_at(&self, k: usize, player: usize) -> Result<SubProbMeasure> {
        empirical_measure(&self.state_at(k), player)
    }
}

/// Per-player substream: ChaCha keyed by (seed, player index).
fn substream(seed: u64, player: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&player.to_le_bytes());
    key[16..24].copy_from_slice(&0x6d66_6761_6273_6f72u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Inverse-CDF sample from a normalized measure. For grid densities the
/// CDF is piecewise quadratic (linear density within each cell).
fn sample_position(m: &SubProbMeasure, rng: &mut ChaCha8Rng) -> f64 {
    let total = m.mass();
    debug_assert!(total > 0.0);
    let target: f64 = rng.random::<f64>() * total;
    match m {
        SubProbMeasure::Atoms(atoms) => {
            let mut acc = 0.0;
            for &(x, w) in atoms {
                acc += w;
                if target <= acc {
                    return x;
                }
            }
            atoms.last().expect("nonzero mass").0
        }
        SubProbMeasure::Grid { dx, values } => {
            let mut acc = 0.0;
            for i in 0..values.len() - 1 {
                let cell = 0.5 * (values[i] + values[i + 1]) * dx;
                if target <= acc + cell || i == values.len() - 2 {
                    let r = (target - acc).max(0.0);
                    let (a, b) = (values[i], values[i + 1]);
                    // solve a s + (b-a) s²/2 = r / dx for s in [0,1]
                    let rr = r / dx;
                    let s = if (b - a).abs() < 1e-14 * (a + b).max(1.0) {
                        if a > 0.0 {
                            rr / a
                        } else {
                            0.5
                        }
                    } else {
                        let disc = (a * a + 2.0 * (b - a) * rr).max(0.0);
                        (disc.sqrt() - a) / (b - a)
                    };
                    return ((i as f64 + s.clamp(0.0, 1.0)) * dx).clamp(f64::MIN_POSITIVE, 1.0);
                }
                acc += cell;
            }
            unreachable!()
        }
    }
}

/// Seeded i.i.d. draws from a normalized measure (empty when the measure
/// has no mass). Used by quadrature-by-sampling consumers.
pub fn sample_many(m: &SubProbMeasure, count: usize, seed: u64) -> Vec<f64> {
    if m.mass() == 0.0 {
        return Vec::new();
    }
    let mut rng = substream(seed, u64::MAX);
    (0..count).map(|_| sample_position(m, &mut rng)).collect()
}

/// Single absorbed path: Euler-Maruyama from `x0` with the given drift
/// function, clamped to the crossed endpoint at the first boundary hit.
/// Returns the path on the uniform step grid and the hitting time (equal
/// to `t_final` if the boundary is never reached).
pub fn simulate_absorbed_sde(
    drift: impl Fn(f64, f64) -> f64,
    sigma: f64,
    x0: f64,
    t0: f64,
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(Error::precondition(format!("x0 = {x0} outside [0,1]")));
    }
    if !(dt > 0.0) || !(t_final > t0) {
        return Err(Error::precondition("need dt > 0 and t_final > t0"));
    }
    let n_steps = ((t_final - t0) / dt).round().max(1.0) as usize;
    let dt = (t_final - t0) / n_steps as f64;
    let mut rng = substream(seed, 0);
    let mut path = Vec::with_capacity(n_steps + 1);
    path.push(x0);
    if x0 == 0.0 || x0 == 1.0 {
        // boundary start: absorbed immediately
        path.resize(n_steps + 1, x0);
        return Ok((path, t0));
    }
    let mut x = x0;
    let mut tau = t_final;
    let mut alive = true;
    for k in 0..n_steps {
        if alive {
            let t = t0 + k as f64 * dt;
            let xi: f64 = StandardNormal.sample(&mut rng);
            x += drift(t, x) * dt + (2.0f64).sqrt() * sigma * dt.sqrt() * xi;
            if x <= 0.0 {
                x = 0.0;
                tau = t0 + (k + 1) as f64 * dt;
                alive = false;
            } else if x >= 1.0 {
                x = 1.0;
                tau = t0 + (k + 1) as f64 * dt;
                alive = false;
            }
        }
        path.push(x);
    }
    Ok((path, tau))
}

/// Simulates all N players.
///
/// Initial positions are i.i.d. draws from `m0` normalized; with
/// probability `1 - mass(m0)` a player starts already absorbed at the
/// initial time (the mass deficit is exactly the already-exited players).
/// Within a step every drift is computed from the state left by the
/// previous step (a step barrier, as decentralized policies require), then
/// all active players advance with independent substream noise.
pub fn simulate_n_players(
    n_players: usize,
    m0: &SubProbMeasure,
    policy: &Policy,
    sigma: f64,
    t0: f64,
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<GameRun> {
    if n_players == 0 {
        return Err(Error::precondition("need at least one player"));
    }
    let mass = m0.mass();
    if mass > 1.0 + 1e-9 {
        return Err(Error::precondition("initial measure must have mass at most 1"));
    }
    if !(dt > 0.0) || !(t_final > t0) {
        return Err(Error::precondition("need dt > 0 and t_final > t0"));
    }
    let n_steps = ((t_final - t0) / dt).round().max(1.0) as usize;
    let dt = (t_final - t0) / n_steps as f64;

    let mut rngs: Vec<ChaCha8Rng> =
        (0..n_players).map(|i| substream(seed, i as u64)).collect();
    let mut positions = vec![0.0f64; n_players];
    let mut alive = vec![false; n_players];
    let mut hitting_times = vec![t0; n_players];
    let mut absorbed = vec![true; n_players];
    for i in 0..n_players {
        let coin: f64 = rngs[i].random();
        if coin < mass {
            positions[i] = sample_position(m0, &mut rngs[i]);
            alive[i] = true;
            hitting_times[i] = t_final;
            absorbed[i] = false;
        }
        // players with the losing coin start absorbed at 0 at time t0
    }

    let mut paths: Vec<Vec<f64>> = (0..n_players)
        .map(|i| {
            let mut p = Vec::with_capacity(n_steps + 1);
            p.push(positions[i]);
            p
        })
        .collect();
    let mut drifts: Vec<Vec<f64>> = vec![Vec::with_capacity(n_steps); n_players];
    let mut empirical_mass =
        vec![alive.iter().filter(|a| **a).count() as f64 / n_players as f64];

    let sqrt2 = (2.0f64).sqrt();
    for k in 0..n_steps {
        let t = t0 + k as f64 * dt;
        // step barrier: all drifts read the pre-step state
        let state = EmpiricalState {
            positions: positions.clone(),
            active: alive.clone(),
        };
        let mut step_drifts = vec![0.0f64; n_players];
        for i in 0..n_players {
            if alive[i] {
                step_drifts[i] = match policy {
                    Policy::Constant(b) => *b,
                    Policy::MeanField(f) => f(t, positions[i]),
                    Policy::Projection(f) => {
                        let co = empirical_measure(&state, i + 1)?;
                        f(t, positions[i], &co)?
                    }
                };
            }
        }
        for i in 0..n_players {
            if alive[i] {
                let xi: f64 = StandardNormal.sample(&mut rngs[i]);
                let mut x = positions[i]
                    + step_drifts[i] * dt
                    + sqrt2 * sigma * dt.sqrt() * xi;
                if x <= 0.0 {
                    x = 0.0;
                } else if x >= 1.0 {
                    x = 1.0;
                }
                if x == 0.0 || x == 1.0 {
                    alive[i] = false;
                    hitting_times[i] = t0 + (k + 1) as f64 * dt;
                    absorbed[i] = true;
                }
                positions[i] = x;
            }
            paths[i].push(positions[i]);
            drifts[i].push(step_drifts[i]);
        }
        empirical_mass.push(alive.iter().filter(|a| **a).count() as f64 / n_players as f64);
    }

    Ok(GameRun {
        t0,
        t_final,
        dt,
        n_steps,
        seed,
        paths,
        drifts,
        hitting_times,
        absorbed,
        empirical_mass,
    })
}

/// Realized cost of every player:
///
/// ```text
/// J_i = Σ_{t_k < τ_i} [ ½ drift_i² + F(t_k, X_i, m^{N,i}) ] dt
///       + G(X at τ_i, m^{N,i} at τ_i)
/// ```
///
/// with the co-player empirical measure in both coupling terms. For
/// absorbed players the terminal position sits on the boundary, where
/// admissible `G` vanish.
pub fn evaluate_cost(run: &GameRun, coupling: &CouplingSpec) -> Result<Vec<f64>> {
    let n = run.n_players();
    let mut costs = vec![0.0; n];
    for i in 0..n {
        let tau = run.hitting_times[i];
        let mut j = 0.0;
        for k in 0..run.n_steps {
            let t = run.time(k);
            if t >= tau {
                break;
            }
            let d = run.drifts[i][k];
            let mut step_cost = 0.5 * d * d;
            if let Some(f) = &coupling.running {
                let co = run.co_measure_at(k, i + 1)?;
                step_cost += f(t, run.paths[i][k], &co);
            }
            j += step_cost * run.dt;
        }
        let k_tau = ((tau - run.t0) / run.dt).round() as usize;
        let k_tau = k_tau.min(run.n_steps);
        let co = run.co_measure_at(k_tau, i + 1)?;
        j += coupling.terminal_cost(run.paths[i][k_tau], &co);
        costs[i] = j;
    }
    Ok(costs)
}

/// Flat distances between the run's empirical flow and a density field at
/// the given sample times.
pub fn empirical_vs_fp(
    run: &GameRun,
    fp_field: &SpaceTimeField,
    sample_times: &[f64],
) -> Result<Vec<f64>> {
    let grid = fp_field.grid;
    if (grid.t0 - run.t0).abs() > 1e-12 || (grid.t_final - run.t_final).abs() > 1e-12 {
        return Err(Error::precondition("run and field horizons differ"));
    }
    sample_times
        .iter()
        .map(|&t| {
            let k_sim = ((t - run.t0) / run.dt).round().clamp(0.0, run.n_steps as f64) as usize;
            let k_fp = grid.step_of(t);
            let empirical = run.empirical_flow_at(k_sim);
            let density = fp_field.measure_at(k_fp)?;
            Ok(flat_distance(&empirical, &density))
        })
        .collect()
}
