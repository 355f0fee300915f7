//! Relative motion of the trapped pair.
//!
//! Units: `ħ = m = ω = 1` with `L = 1`. The relative coordinate has reduced
//! mass `1/2`, so the radial equation reads
//! `−u'' + [l(l+1)/r² + r²/4 + V(r)] u = E u` with `u(0) = 0` and a hard wall
//! at `r_max`. It is discretized by second-order finite differences and
//! solved by Sturm bisection plus inverse iteration.

use crate::error::{Error, Result};

use super::PhysicalParams;

/// Isotropic pair interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairPotentialSpec {
    /// No interaction; the relative ground state is the bare oscillator.
    None,
    /// `V(r) = −depth · exp(−r² / (2 range²))`.
    GaussianWell { depth: f64, range: f64 },
}

/// Range of the default well relative to the scattering length.
pub const DEFAULT_RANGE_FRACTION: f64 = 0.5;

impl PairPotentialSpec {
    /// Gaussian well of range `range_fraction · a` whose free-space bound
    /// state sits at `−1/a²`.
    pub fn calibrated(a: f64, range_fraction: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid(format!("scattering length must be positive, got {a}")));
        }
        if !(range_fraction > 0.0) {
            return Err(Error::invalid("range fraction must be positive"));
        }
        let range = range_fraction * a;
        let depth = calibrate_depth(1.0 / (a * a), range)?;
        Ok(PairPotentialSpec::GaussianWell { depth, range })
    }

    pub fn value(&self, r: f64) -> f64 {
        match *self {
            PairPotentialSpec::None => 0.0,
            PairPotentialSpec::GaussianWell { depth, range } => -depth * (-r * r / (2.0 * range * range)).exp(),
        }
    }

    pub fn is_attractive(&self) -> bool {
        matches!(*self, PairPotentialSpec::GaussianWell { depth, .. } if depth > 0.0)
    }

    /// Length scale the grid has to resolve, if any.
    pub fn range(&self) -> Option<f64> {
        match *self {
            PairPotentialSpec::None => None,
            PairPotentialSpec::GaussianWell { range, .. } => Some(range),
        }
    }
}

/// Uniform radial grid `r_i = i·h`, `i = 1..=points`, `h = r_max/(points+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    pub r_max: f64,
    /// Largest accepted relative change of the lowest energy when the
    /// spacing is doubled.
    pub drift_tolerance: f64,
}

impl GridSpec {
    pub fn new(points: usize, r_max: f64) -> Self {
        GridSpec {
            points,
            r_max,
            drift_tolerance: 1e-3,
        }
    }

    /// Grid resolving the potential range with `per_range` points.
    pub fn for_potential(potential: &PairPotentialSpec, r_max: f64, per_range: f64) -> Self {
        let h = match potential.range() {
            Some(r0) => (r0 / per_range).min(0.01),
            None => 0.01,
        };
        GridSpec::new((r_max / h).ceil() as usize, r_max)
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / (self.points as f64 + 1.0)
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..=self.points).map(|i| i as f64 * h).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.points < 4 || !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(Error::invalid(format!(
                "grid needs at least 4 points and positive extent, got {} points to {}",
                self.points, self.r_max
            )));
        }
        Ok(())
    }
}

/// One eigenpair of a radial channel.
#[derive(Debug, Clone)]
pub struct RadialState {
    pub energy: f64,
    /// `u(r_i)` normalized so that `h Σ u² = 1`, positive at its largest
    /// magnitude.
    pub u: Vec<f64>,
}

/// The lowest eigenpairs of channel `l`, sorted by energy.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub l: u32,
    pub grid: GridSpec,
    pub states: Vec<RadialState>,
}

impl RadialSolution {
    pub fn ground(&self) -> &RadialState {
        &self.states[0]
    }

    pub fn nodes(&self) -> Vec<f64> {
        self.grid.nodes()
    }
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl Tridiagonal {
    fn radial(grid: &GridSpec, l: u32, trap: bool, potential: &PairPotentialSpec) -> Self {
        let h = grid.spacing();
        let inv_h2 = 1.0 / (h * h);
        let ll = (l * (l + 1)) as f64;
        let diag = grid
            .nodes()
            .into_iter()
            .map(|r| {
                let trap_term = if trap { r * r / 4.0 } else { 0.0 };
                2.0 * inv_h2 + ll / (r * r) + trap_term + potential.value(r)
            })
            .collect();
        Tridiagonal { diag, off: -inv_h2 }
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let off2 = self.off * self.off;
        let mut count = 0;
        let mut q = 1.0f64;
        for (i, d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - off2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + x.abs()).max(1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn bounds(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().fold(f64::INFINITY, |m, d| m.min(d - r));
        let hi = self.diag.iter().fold(f64::NEG_INFINITY, |m, d| m.max(d + r));
        (lo, hi)
    }

    /// `k`-th smallest eigenvalue (zero-based) by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T − σ) x = b` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        // rows hold (a_i,i-1) (a_i,i) (a_i,i+1) (a_i,i+2) after pivoting
        let mut d: Vec<f64> = self.diag.iter().map(|x| x - sigma).collect();
        let mut du = vec![self.off; n];
        let mut du2 = vec![0.0; n];
        let mut dl = vec![self.off; n];
        let mut rhs = b.to_vec();
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                let f = if d[i] == 0.0 { 0.0 } else { dl[i] / d[i] };
                d[i + 1] -= f * du[i];
                rhs[i + 1] -= f * rhs[i];
                dl[i] = 0.0;
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du2[i];
                }
                du[i] = tmp;
                rhs.swap(i, i + 1);
                rhs[i + 1] -= f * rhs[i];
            }
        }
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= du[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= du2[i] * x[i + 2];
            }
            let piv = if d[i].abs() < tiny { tiny } else { d[i] };
            x[i] = s / piv;
        }
        x
    }

    fn eigenvector(&self, lambda: f64, h: f64) -> Vec<f64> {
        let n = self.diag.len();
        let shift = lambda - 1e-10 * lambda.abs().max(1.0);
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        for _ in 0..3 {
            v = self.shifted_solve(shift, &v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        let scale = 1.0 / h.sqrt();
        let peak = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if peak < 0.0 { -1.0 } else { 1.0 };
        v.iter().map(|x| x * sign * scale).collect()
    }
}

fn lowest_states(
    grid: &GridSpec,
    l: u32,
    trap: bool,
    potential: &PairPotentialSpec,
    count: usize,
) -> Vec<RadialState> {
    let t = Tridiagonal::radial(grid, l, trap, potential);
    let h = grid.spacing();
    (0..count.min(grid.points))
        .map(|k| {
            let energy = t.eigenvalue(k);
            RadialState {
                energy,
                u: t.eigenvector(energy, h),
            }
        })
        .collect()
}

fn lowest_energy(grid: &GridSpec, trap: bool, potential: &PairPotentialSpec) -> f64 {
    Tridiagonal::radial(grid, 0, trap, potential).eigenvalue(0)
}

/// Depth of a Gaussian well of the given range whose free-space `l = 0`
/// ground state has energy `−binding_energy`.
pub fn calibrate_depth(binding_energy: f64, range: f64) -> Result<f64> {
    if !(binding_energy > 0.0 && range > 0.0) {
        return Err(Error::invalid("binding energy and range must be positive"));
    }
    let kappa = binding_energy.sqrt();
    let extent = 30.0 / kappa + 8.0 * range;
    let h = range / 40.0;
    let grid = GridSpec::new((extent / h) as usize, extent);
    let energy = |depth: f64| lowest_energy(&grid, false, &PairPotentialSpec::GaussianWell { depth, range });
    let target = -binding_energy;
    let (mut lo, mut hi) = (0.0, 1.0 / (range * range));
    while energy(hi) > target {
        hi *= 2.0;
        if hi > 1e12 / (range * range) {
            return Err(Error::NumericalInstability("depth calibration diverged".into()));
        }
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if energy(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Number of nodes of the zero-energy `l = 0` solution: the number of
/// free-space bound states supported by the potential.
fn bound_state_count(potential: &PairPotentialSpec) -> usize {
    let Some(range) = potential.range() else {
        return 0;
    };
    let (_, nodes) = zero_energy_solution(potential, range);
    nodes
}

/// Numerov integration of `u'' = V u` to ten ranges; returns
/// `(r − u/u'` at the end, node count)`.
fn zero_energy_solution(potential: &PairPotentialSpec, range: f64) -> (f64, usize) {
    let h = range / 400.0;
    let steps = 4000usize;
    let f = |r: f64| potential.value(r);
    let (mut r0, mut u0) = (0.0, 0.0);
    let (mut r1, mut u1) = (h, h);
    let mut nodes = 0;
    for _ in 1..steps {
        let r2 = r1 + h;
        let (f0, f1, f2) = (f(r0), f(r1), f(r2));
        let h2 = h * h / 12.0;
        let u2 = (2.0 * u1 * (1.0 + 5.0 * h2 * f1) - u0 * (1.0 - h2 * f0)) / (1.0 - h2 * f2);
        if u2 * u1 < 0.0 {
            nodes += 1;
        }
        (r0, u0, r1, u1) = (r1, u1, r2, u2);
    }
    let du = (u1 - u0) / h;
    let r = 0.5 * (r0 + r1);
    let u = 0.5 * (u0 + u1);
    (r - u / du, nodes)
}

/// Zero-energy scattering length of the potential (diagnostic only).
pub fn scattering_length(potential: &PairPotentialSpec) -> f64 {
    match potential.range() {
        None => 0.0,
        Some(range) => zero_energy_solution(potential, range).0,
    }
}

/// Relative-motion eigenpairs of the trapped pair for `l = 0..=l_max`,
/// the lowest `states_per_channel` per channel.
///
/// Fails with [`Error::NoBoundState`] when an attractive potential supports
/// no free-space bound state, and with [`Error::GridTooCoarse`] when the
/// lowest `l = 0` energy moves by more than the grid tolerance when the
/// spacing is doubled.
pub fn solve_two_body(
    params: &PhysicalParams,
    potential: &PairPotentialSpec,
    grid: &GridSpec,
    l_max: u32,
    states_per_channel: usize,
) -> Result<Vec<RadialSolution>> {
    grid.validate()?;
    params.validate()?;
    if states_per_channel == 0 {
        return Err(Error::invalid("need at least one state per channel"));
    }
    let potential = &scaled_potential(potential, params.trap_length);
    if potential.is_attractive() && bound_state_count(potential) == 0 {
        return Err(Error::NoBoundState {
            energy: lowest_energy(grid, true, potential),
        });
    }
    let fine = lowest_energy(grid, true, potential);
    let coarse_grid = GridSpec {
        points: (grid.points + 1) / 2 - 1,
        ..*grid
    };
    if coarse_grid.points >= 2 {
        let coarse = lowest_energy(&coarse_grid, true, potential);
        let drift = (fine - coarse).abs() / fine.abs().max(1.0);
        if drift > grid.drift_tolerance {
            return Err(Error::GridTooCoarse {
                drift,
                tolerance: grid.drift_tolerance,
            });
        }
    }
    Ok((0..=l_max)
        .map(|l| RadialSolution {
            l,
            grid: *grid,
            states: lowest_states(grid, l, true, potential, states_per_channel),
        })
        .collect())
}

/// The solver works with `L = 1`; lengths given in other units are rescaled.
fn scaled_potential(p: &PairPotentialSpec, trap_length: f64) -> PairPotentialSpec {
    match *p {
        PairPotentialSpec::None => PairPotentialSpec::None,
        PairPotentialSpec::GaussianWell { depth, range } => PairPotentialSpec::GaussianWell {
            depth: depth * trap_length * trap_length,
            range: range / trap_length,
        },
    }
}

/// Lowest trapped `l = 0` energy for each point count, with the change from
/// the previous entry (first entry has drift `NaN`).
pub fn ground_energy_drift(potential: &PairPotentialSpec, r_max: f64, points: &[usize]) -> Vec<(usize, f64, f64)> {
    let mut out: Vec<(usize, f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        let e = lowest_energy(&GridSpec::new(p, r_max), true, potential);
        let drift = out.last().map(|&(_, prev, _)| (e - prev).abs()).unwrap_or(f64::NAN);
        out.push((p, e, drift));
    }
    out
}
