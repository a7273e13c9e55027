//! Subprobability measures on [0,1] and the generalized Wasserstein
//! (flat / bounded-Lipschitz) metric.
//!
//! A subprobability measure has total mass ≤ 1; the missing mass encodes
//! players already absorbed at the boundary. Absorbed mass is *deleted*,
//! never renormalized, so atoms at 0 or 1 are rejected at construction and
//! grid densities vanish at both boundary nodes.
//!
//! The metric implemented here is
//!
//! ```text
//! d1(m1, m2) = sup { ∫ φ d(m1 - m2) : Lip(φ) ≤ 1, ‖φ‖∞ ≤ 1 }
//! ```
//!
//! computed exactly. On a sorted 1-D support the Lipschitz constraint
//! reduces to adjacent pairs, which makes the supremum a small linear
//! program in the φ values. We solve it with an exact sweep over concave
//! piecewise-linear value functions (see [`flat_distance`]); the LP view is
//! kept as a brute-force oracle in the tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for the `mass ≤ 1` construction check. Quadrature and
/// projection round-off may push a unit-mass measure a few ulps over.
const MASS_SLACK: f64 = 1e-9;

/// A nonnegative measure on [0,1] with total mass ≤ 1.
///
/// Two representations are supported: a list of interior atoms, or a
/// density sampled on a uniform grid (integrated by the trapezoid rule).
/// Serializes as `{"atoms": [[x, w], …]}` or
/// `{"grid": {"dx": h, "values": […]}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubProbMeasure {
    /// Point masses `(position, weight)`, positions strictly inside (0,1).
    Atoms(Vec<(f64, f64)>),
    /// Density values on the uniform grid `0, dx, 2dx, …, 1`; both boundary
    /// values are exactly zero.
    Grid { dx: f64, values: Vec<f64> },
}

impl SubProbMeasure {
    /// The zero measure (no mass anywhere).
    pub fn zero() -> Self {
        SubProbMeasure::Atoms(Vec::new())
    }

    /// Builds an atomic measure, rejecting boundary atoms, nonpositive
    /// weights and total mass above 1.
    pub fn from_atoms(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let mut mass = 0.0;
        for &(x, w) in &atoms {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::precondition(format!(
                    "atom at {x} lies on or outside the boundary; absorbed mass is deleted, not parked"
                )));
            }
            if !(w > 0.0) {
                return Err(Error::precondition(format!("atom weight {w} must be positive")));
            }
            mass += w;
        }
        if mass > 1.0 + MASS_SLACK {
            return Err(Error::precondition(format!("total mass {mass} exceeds 1")));
        }
        Ok(SubProbMeasure::Atoms(atoms))
    }

    /// A single unit atom at `x`.
    pub fn dirac(x: f64) -> Result<Self> {
        Self::from_atoms(vec![(x, 1.0)])
    }

    /// Builds a grid-density measure. `values.len() - 1` cells must tile
    /// [0,1] exactly, values must be nonnegative and zero at both ends.
    pub fn from_grid(dx: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::precondition("grid measure needs at least 3 nodes"));
        }
        let span = dx * (values.len() - 1) as f64;
        if (span - 1.0).abs() > 1e-9 {
            return Err(Error::precondition(format!(
                "grid spacing {dx} with {} nodes does not tile [0,1]",
                values.len()
            )));
        }
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::precondition("grid density must be nonnegative and finite"));
        }
        if values[0] != 0.0 || *values.last().unwrap() != 0.0 {
            return Err(Error::precondition("grid density must vanish at both boundary nodes"));
        }
        let m = trapezoid_mass(dx, &values);
        if m > 1.0 + MASS_SLACK {
            return Err(Error::precondition(format!("total mass {m} exceeds 1")));
        }
        Ok(SubProbMeasure::Grid { dx, values })
    }

    /// Near-uniform measure of the given total mass on an `n_space`-node
    /// grid: constant density on interior nodes, zero at the boundary,
    /// scaled so the trapezoid mass is exactly `mass`.
    pub fn uniform_on_grid(n_space: usize, mass: f64) -> Result<Self> {
        if n_space < 3 {
            return Err(Error::precondition("need at least 3 nodes"));
        }
        let dx = 1.0 / (n_space - 1) as f64;
        let density = mass / (dx * (n_space - 2) as f64);
        let mut values = vec![density; n_space];
        values[0] = 0.0;
        values[n_space - 1] = 0.0;
        Self::from_grid(dx, values)
    }

    /// Total mass.
    pub fn mass(&self) -> f64 {
        match self {
            SubProbMeasure::Atoms(atoms) => atoms.iter().map(|&(_, w)| w).sum(),
            SubProbMeasure::Grid { dx, values } => trapezoid_mass(*dx, values),
        }
    }

    /// ∫ f dm by atom summation or trapezoid quadrature.
    pub fn moment(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            SubProbMeasure::Atoms(atoms) => atoms.iter().map(|&(x, w)| w * f(x)).sum(),
            SubProbMeasure::Grid { dx, values } => {
                let n = values.len();
                let mut acc = 0.5 * (values[0] * f(0.0) + values[n - 1] * f(1.0));
                for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
                    acc += v * f(i as f64 * dx);
                }
                acc * dx
            }
        }
    }

    /// Mass-preserving deposition onto a uniform grid with `n_space` nodes.
    ///
    /// Atoms split linearly between the two nearest nodes (hat functions).
    /// Boundary nodes receive no mass: a share that would land there is
    /// moved to the nearest interior node so the deposited mass matches the
    /// atom mass exactly.
    pub fn grid_project(&self, n_space: usize) -> Result<SubProbMeasure> {
        if n_space < 3 {
            return Err(Error::precondition("need at least 3 nodes"));
        }
        let dx = 1.0 / (n_space - 1) as f64;
        let mut values = vec![0.0; n_space];
        let mut deposit = |x: f64, w: f64| -> Result<()> {
            if x <= 0.0 || x >= 1.0 {
                return Err(Error::precondition(format!(
                    "cannot project mass at boundary position {x}"
                )));
            }
            let s = x / dx;
            let mut k = (s.floor() as usize).min(n_space - 2);
            let mut frac = s - k as f64;
            // Snap to the node when x sits on it up to round-off.
            if frac < 1e-9 {
                frac = 0.0;
            } else if frac > 1.0 - 1e-9 && k + 1 < n_space - 1 {
                k += 1;
                frac = 0.0;
            }
            let mut left = (k, w * (1.0 - frac) / dx);
            let mut right = (k + 1, w * frac / dx);
            // Boundary nodes stay zero; reroute their share inward.
            if left.0 == 0 {
                right.1 += left.1;
                left.1 = 0.0;
            }
            if right.0 == n_space - 1 {
                left.1 += right.1;
                right.1 = 0.0;
            }
            values[left.0] += left.1;
            values[right.0] += right.1;
            Ok(())
        };
        match self {
            SubProbMeasure::Atoms(atoms) => {
                for &(x, w) in atoms {
                    deposit(x, w)?;
                }
            }
            SubProbMeasure::Grid { dx: dx_in, values: v_in } => {
                // Re-deposit node masses as atoms at the node positions.
                let n_in = v_in.len();
                for (i, v) in v_in.iter().enumerate() {
                    let w = trapezoid_weight(*dx_in, n_in, i) * v;
                    if w > 0.0 {
                        deposit(i as f64 * dx_in, w)?;
                    }
                }
            }
        }
        SubProbMeasure::from_grid(dx, values)
    }

    /// Support as sorted `(position, signed weight)` pairs with duplicates
    /// merged and exact zeros dropped. Grid nodes carry trapezoid weights.
    fn weighted_support(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = match self {
            SubProbMeasure::Atoms(atoms) => atoms.clone(),
            SubProbMeasure::Grid { dx, values } => {
                let n = values.len();
                values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i as f64 * dx, trapezoid_weight(*dx, n, i) * v))
                    .filter(|&(_, w)| w != 0.0)
                    .collect()
            }
        };
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }
}

fn trapezoid_mass(dx: f64, values: &[f64]) -> f64 {
    let n = values.len();
    let mut acc = 0.5 * (values[0] + values[n - 1]);
    for v in &values[1..n - 1] {
        acc += v;
    }
    acc * dx
}

fn trapezoid_weight(dx: f64, n: usize, i: usize) -> f64 {
    if i == 0 || i == n - 1 {
        0.5 * dx
    } else {
        dx
    }
}

/// Positions and activity flags of the N players of a finite game.
///
/// Inactive players sit on the boundary (their recorded position is 0 or 1);
/// active players are strictly inside (0,1).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalState {
    pub positions: Vec<f64>,
    pub active: Vec<bool>,
}

impl EmpiricalState {
    pub fn new(positions: Vec<f64>, active: Vec<bool>) -> Result<Self> {
        if positions.len() != active.len() {
            return Err(Error::precondition("positions/active length mismatch"));
        }
        for (&x, &a) in positions.iter().zip(&active) {
            if a && !(x > 0.0 && x < 1.0) {
                return Err(Error::precondition(format!("active player at {x} is not interior")));
            }
            if !a && x != 0.0 && x != 1.0 {
                return Err(Error::precondition(format!(
                    "inactive player position {x} must be recorded at the boundary"
                )));
            }
        }
        Ok(EmpiricalState { positions, active })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Empirical co-player measure of player `excluded` (1-based index):
/// `(1/(N-1)) Σ_{j≠excluded, active} δ_{x_j}`.
///
/// Absorbed co-players are simply missing, so the mass is
/// `#active co-players / (N-1)`.
pub fn empirical_measure(state: &EmpiricalState, excluded: usize) -> Result<SubProbMeasure> {
    let n = state.len();
    if excluded == 0 || excluded > n {
        return Err(Error::precondition(format!("player index {excluded} out of 1..={n}")));
    }
    if n == 1 {
        return Err(Error::precondition("no co-players"));
    }
    let w = 1.0 / (n - 1) as f64;
    let atoms = state
        .positions
        .iter()
        .zip(&state.active)
        .enumerate()
        .filter(|(j, (_, &a))| a && *j != excluded - 1)
        .map(|(_, (&x, _))| (x, w))
        .collect();
    SubProbMeasure::from_atoms(atoms)
}

/// Full empirical measure over all active players with weight 1/N each
/// (mass = #active/N).
pub fn empirical_measure_all(state: &EmpiricalState) -> Result<SubProbMeasure> {
    let n = state.len();
    if n == 0 {
        return Ok(SubProbMeasure::zero());
    }
    let w = 1.0 / n as f64;
    let atoms = state
        .positions
        .iter()
        .zip(&state.active)
        .filter(|(_, &a)| a)
        .map(|(&x, _)| (x, w))
        .collect();
    SubProbMeasure::from_atoms(atoms)
}

/// Generalized Wasserstein (flat) distance between two subprobability
/// measures on [0,1].
///
/// Exact optimum of the linear program over φ values at the (merged, sorted)
/// union of supports, with `|φ_i| ≤ 1` and `|φ_{i+1} - φ_i| ≤ x_{i+1} - x_i`.
/// Solved by a forward sweep that carries the concave piecewise-linear
/// profile `f_i(φ) = max { Σ_{j≤i} c_j φ_j : φ_i = φ }`; the sliding-window
/// maximum of a concave profile keeps it concave, so each support point
/// costs O(vertices). This replaces a dense simplex, which does the same
/// job only for small supports; the simplex formulation survives as the
/// test oracle.
pub fn flat_distance(m1: &SubProbMeasure, m2: &SubProbMeasure) -> f64 {
    let diff = support_difference(m1, m2);
    flat_norm_of_difference(&diff)
}

/// Signed merged support of `m1 - m2`.
fn support_difference(m1: &SubProbMeasure, m2: &SubProbMeasure) -> Vec<(f64, f64)> {
    let a = m1.weighted_support();
    let b = m2.weighted_support();
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i].0 <= b[j].0) {
            let p = a[i];
            i += 1;
            p
        } else {
            let p = b[j];
            j += 1;
            (p.0, -p.1)
        };
        match merged.last_mut() {
            Some(last) if last.0 == next.0 => last.1 += next.1,
            _ => merged.push(next),
        }
    }
    merged.retain(|&(_, c)| c != 0.0);
    merged
}

/// `sup Σ c_i φ(x_i)` over 1-Lipschitz φ with `‖φ‖∞ ≤ 1`, for a signed
/// weighted point set sorted by position. Also used for signed densities
/// (linearized-system iterates), where it acts as a dual norm.
pub(crate) fn flat_norm_of_difference(support: &[(f64, f64)]) -> f64 {
    if support.is_empty() {
        return 0.0;
    }
    let mut profile = ConcavePwl::linear(support[0].1);
    for w in support.windows(2) {
        let gap = w[1].0 - w[0].0;
        profile.spread(gap);
        profile.clamp_domain();
        profile.add_linear(w[1].1);
    }
    profile.max()
}

/// Concave piecewise-linear function on [-1, 1], stored as its vertices.
struct ConcavePwl {
    xs: Vec<f64>,
    vs: Vec<f64>,
}

impl ConcavePwl {
    /// f(φ) = c·φ on [-1, 1].
    fn linear(c: f64) -> Self {
        ConcavePwl { xs: vec![-1.0, 1.0], vs: vec![-c, c] }
    }

    fn argmax_index(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.vs.iter().enumerate() {
            if *v > self.vs[best] {
                best = i;
            }
        }
        best
    }

    /// Replace f by g(φ) = max_{|ψ-φ| ≤ d} f(ψ): branches shift outward by
    /// d and a flat top of width 2d appears at the maximum.
    fn spread(&mut self, d: f64) {
        let imax = self.argmax_index();
        let n = self.xs.len();
        let mut xs = Vec::with_capacity(n + 1);
        let mut vs = Vec::with_capacity(n + 1);
        for i in 0..imax {
            xs.push(self.xs[i] - d);
            vs.push(self.vs[i]);
        }
        xs.push(self.xs[imax] - d);
        vs.push(self.vs[imax]);
        xs.push(self.xs[imax] + d);
        vs.push(self.vs[imax]);
        for i in imax + 1..n {
            xs.push(self.xs[i] + d);
            vs.push(self.vs[i]);
        }
        self.xs = xs;
        self.vs = vs;
    }

    fn eval(&self, x: f64) -> f64 {
        // Domain is guaranteed to contain x when called from clamp_domain.
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.vs[0];
        }
        for i in 1..n {
            if x <= self.xs[i] {
                let t = (x - self.xs[i - 1]) / (self.xs[i] - self.xs[i - 1]);
                return self.vs[i - 1] + t * (self.vs[i] - self.vs[i - 1]);
            }
        }
        self.vs[n - 1]
    }

    /// Restrict the domain back to [-1, 1] (the ‖φ‖∞ bound).
    fn clamp_domain(&mut self) {
        let lo = self.eval(-1.0);
        let hi = self.eval(1.0);
        let mut xs = vec![-1.0];
        let mut vs = vec![lo];
        for i in 0..self.xs.len() {
            if self.xs[i] > -1.0 && self.xs[i] < 1.0 {
                xs.push(self.xs[i]);
                vs.push(self.vs[i]);
            }
        }
        xs.push(1.0);
        vs.push(hi);
        self.xs = xs;
        self.vs = vs;
    }

    fn add_linear(&mut self, c: f64) {
        for (v, x) in self.vs.iter_mut().zip(&self.xs) {
            *v += c * x;
        }
    }

    fn max(&self) -> f64 {
        self.vs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn atom_measure(atoms: &[(f64, f64)]) -> SubProbMeasure {
        SubProbMeasure::from_atoms(atoms.to_vec()).unwrap()
    }

    /// Brute-force LP oracle: maximize c^T φ subject to |φ_i| ≤ 1 and
    /// |φ_{i+1} - φ_i| ≤ x_{i+1} - x_i, via a dense tableau simplex on the
    /// shifted variables ψ = φ + 1 ∈ [0, 2]. Independent of the sweep used
    /// by `flat_distance`; only suitable for small supports.
    fn lp_oracle(m1: &SubProbMeasure, m2: &SubProbMeasure) -> f64 {
        let support = support_difference(m1, m2);
        let n = support.len();
        if n == 0 {
            return 0.0;
        }
        let c: Vec<f64> = support.iter().map(|&(_, w)| w).collect();
        // Constraints Aψ ≤ b: ψ_i ≤ 2, ±(ψ_{i+1} - ψ_i) ≤ d_i.
        let m_rows = n + 2 * (n - 1);
        let mut a = vec![vec![0.0; n]; m_rows];
        let mut b = vec![0.0; m_rows];
        for i in 0..n {
            a[i][i] = 1.0;
            b[i] = 2.0;
        }
        for i in 0..n - 1 {
            let d = support[i + 1].0 - support[i].0;
            a[n + 2 * i][i + 1] = 1.0;
            a[n + 2 * i][i] = -1.0;
            b[n + 2 * i] = d;
            a[n + 2 * i + 1][i + 1] = -1.0;
            a[n + 2 * i + 1][i] = 1.0;
            b[n + 2 * i + 1] = d;
        }
        let opt = simplex_max(&c, &a, &b);
        opt - c.iter().sum::<f64>() // undo the ψ = φ + 1 shift
    }

    /// Textbook dense simplex (Bland's rule) for max c^T x, Ax ≤ b, x ≥ 0,
    /// b ≥ 0. Returns the optimal objective value.
    fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
        let m = a.len();
        let n = c.len();
        let cols = n + m + 1;
        let mut t = vec![vec![0.0; cols]; m + 1];
        for i in 0..m {
            for j in 0..n {
                t[i][j] = a[i][j];
            }
            t[i][n + i] = 1.0;
            t[i][cols - 1] = b[i];
        }
        for j in 0..n {
            t[m][j] = -c[j];
        }
        loop {
            // Bland: first column with negative reduced cost.
            let Some(pivot_col) = (0..cols - 1).find(|&j| t[m][j] < -1e-12) else {
                break;
            };
            let mut pivot_row = None;
            let mut best = f64::INFINITY;
            for (i, row) in t.iter().enumerate().take(m) {
                if row[pivot_col] > 1e-12 {
                    let ratio = row[cols - 1] / row[pivot_col];
                    if ratio < best - 1e-12 {
                        best = ratio;
                        pivot_row = Some(i);
                    }
                }
            }
            let r = pivot_row.expect("LP is bounded by construction");
            let pv = t[r][pivot_col];
            for v in t[r].iter_mut() {
                *v /= pv;
            }
            for i in 0..=m {
                if i != r {
                    let f = t[i][pivot_col];
                    if f != 0.0 {
                        for j in 0..cols {
                            t[i][j] -= f * t[r][j];
                        }
                    }
                }
            }
        }
        t[m][cols - 1]
    }

    #[test]
    fn empirical_measure_excludes_self_and_absorbed() {
        let state =
            EmpiricalState::new(vec![0.2, 0.5, 1.0], vec![true, true, false]).unwrap();
        let m = empirical_measure(&state, 1).unwrap();
        assert_eq!(m, atom_measure(&[(0.5, 0.5)]));
        assert!((m.mass() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empirical_measure_all_co_players_absorbed() {
        let state = EmpiricalState::new(vec![0.5, 0.0], vec![true, false]).unwrap();
        let m = empirical_measure(&state, 1).unwrap();
        assert_eq!(m.mass(), 0.0);
        assert_eq!(m, SubProbMeasure::zero());
    }

    #[test]
    fn empirical_measure_no_absorption() {
        let state = EmpiricalState::new(vec![0.1, 0.2, 0.3, 0.4], vec![true; 4]).unwrap();
        let m = empirical_measure(&state, 2).unwrap();
        let w = 1.0 / 3.0;
        assert_eq!(m, atom_measure(&[(0.1, w), (0.3, w), (0.4, w)]));
        assert!((m.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_measure_single_player_errors() {
        let state = EmpiricalState::new(vec![0.5], vec![true]).unwrap();
        let err = empirical_measure(&state, 1).unwrap_err();
        assert!(err.to_string().contains("no co-players"));
    }

    #[test]
    fn boundary_atoms_rejected() {
        assert!(SubProbMeasure::from_atoms(vec![(0.0, 0.5)]).is_err());
        assert!(SubProbMeasure::from_atoms(vec![(1.0, 0.5)]).is_err());
    }

    #[test]
    fn flat_distance_identical_is_zero() {
        let m = atom_measure(&[(0.25, 0.3), (0.7, 0.2)]);
        assert_eq!(flat_distance(&m, &m), 0.0);
    }

    #[test]
    fn flat_distance_dirac_pair() {
        // min(|x - y|, 2) = 0.5; frozen from the LP oracle below.
        let m1 = SubProbMeasure::dirac(0.2).unwrap();
        let m2 = SubProbMeasure::dirac(0.7).unwrap();
        let d = flat_distance(&m1, &m2);
        assert!((d - 0.5).abs() < 1e-12, "d = {d}");
        assert!((lp_oracle(&m1, &m2) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn flat_distance_to_zero_is_mass() {
        // φ ≡ 1 is feasible and optimal.
        let m = atom_measure(&[(0.3, 0.25), (0.6, 0.15), (0.9, 0.1)]);
        let d = flat_distance(&m, &SubProbMeasure::zero());
        assert!((d - m.mass()).abs() < 1e-12);
        assert!((lp_oracle(&m, &SubProbMeasure::zero()) - m.mass()).abs() < 1e-9);
    }

    #[test]
    fn moment_examples() {
        let f = |z: f64| z * (1.0 - z);
        assert!((SubProbMeasure::dirac(0.5).unwrap().moment(f) - 0.25).abs() < 1e-15);
        assert_eq!(SubProbMeasure::zero().moment(f), 0.0);
        // Grid density exactly 1 on interior of a fine grid: ∫ z(1-z) dz = 1/6.
        let n = 20001;
        let dx = 1.0 / (n - 1) as f64;
        let mut v = vec![1.0; n];
        v[0] = 0.0;
        v[n - 1] = 0.0;
        let m = SubProbMeasure::from_grid(dx, v).unwrap();
        assert!((m.moment(f) - 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn grid_project_on_node_and_midpoint() {
        let n = 11;
        let dx = 0.1;
        let m = atom_measure(&[(0.3, 0.4)]);
        let p = m.grid_project(n).unwrap();
        if let SubProbMeasure::Grid { values, .. } = &p {
            assert!((values[3] - 0.4 / dx).abs() < 1e-12);
            assert_eq!(values.iter().filter(|v| **v != 0.0).count(), 1);
        } else {
            panic!("expected grid form");
        }
        let m = atom_measure(&[(0.35, 0.4)]);
        let p = m.grid_project(n).unwrap();
        if let SubProbMeasure::Grid { values, .. } = &p {
            assert!((values[3] - 0.2 / dx).abs() < 1e-12);
            assert!((values[4] - 0.2 / dx).abs() < 1e-12);
        } else {
            panic!("expected grid form");
        }
    }

    #[test]
    fn grid_project_preserves_mass_for_random_clouds() {
        let mut state = 0x12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let atoms: Vec<(f64, f64)> =
                (0..37).map(|_| (0.001 + 0.998 * next(), 0.02 * next() + 1e-4)).collect();
            let m = SubProbMeasure::from_atoms(atoms).unwrap();
            let p = m.grid_project(101).unwrap();
            assert!((p.mass() - m.mass()).abs() < 1e-12);
            if let SubProbMeasure::Grid { values, .. } = &p {
                assert_eq!(values[0], 0.0);
                assert_eq!(*values.last().unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn grid_project_then_moment_is_second_order() {
        let m = atom_measure(&[(0.237, 0.3), (0.613, 0.5), (0.881, 0.1)]);
        let f = |z: f64| (2.3 * z).sin();
        let exact = m.moment(f);
        let e1 = (m.grid_project(51).unwrap().moment(f) - exact).abs();
        let e2 = (m.grid_project(201).unwrap().moment(f) - exact).abs();
        assert!(e2 < e1 / 8.0, "e1 = {e1:.3e}, e2 = {e2:.3e}");
    }

    #[test]
    fn measure_json_round_trip() {
        let m = atom_measure(&[(0.25, 0.5)]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"atoms":[[0.25,0.5]]}"#);
        let back: SubProbMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let g = SubProbMeasure::uniform_on_grid(11, 0.7).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: SubProbMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }

    fn small_measure_strategy() -> impl Strategy<Value = SubProbMeasure> {
        prop::collection::vec((0.01f64..0.99, 0.001f64..0.05), 0..20)
            .prop_map(|atoms| SubProbMeasure::from_atoms(atoms).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn sweep_matches_lp_oracle(m1 in small_measure_strategy(), m2 in small_measure_strategy()) {
            let fast = flat_distance(&m1, &m2);
            let slow = lp_oracle(&m1, &m2);
            prop_assert!((fast - slow).abs() < 1e-9, "sweep {fast} vs simplex {slow}");
        }

        #[test]
        fn metric_axioms(
            m1 in small_measure_strategy(),
            m2 in small_measure_strategy(),
            m3 in small_measure_strategy(),
        ) {
            let d12 = flat_distance(&m1, &m2);
            let d21 = flat_distance(&m2, &m1);
            let d13 = flat_distance(&m1, &m3);
            let d23 = flat_distance(&m2, &m3);
            prop_assert!(d12 >= 0.0);
            prop_assert!((d12 - d21).abs() < 1e-9);
            prop_assert!(d13 <= d12 + d23 + 1e-9);
            prop_assert_eq!(flat_distance(&m1, &m1), 0.0);
            // ‖φ‖∞ ≤ 1 caps the distance by the total masses.
            prop_assert!(d12 <= m1.mass() + m2.mass() + 1e-12);
        }

        #[test]
        fn dirac_pairs_give_min_distance_two(x in 0.01f64..0.99, y in 0.01f64..0.99) {
            let d = flat_distance(
                &SubProbMeasure::dirac(x).unwrap(),
                &SubProbMeasure::dirac(y).unwrap(),
            );
            prop_assert!((d - (x - y).abs().min(2.0)).abs() < 1e-12);
        }
    }
}
