//! Estimators over trajectories: occupation histograms, time averages,
//! Lyapunov slopes and the `ln F` drift diagnostic.
//!
//! Between consecutive samples the state is interpolated linearly; the
//! environment is constant there because every jump is recorded twice.

use serde::{Deserialize, Serialize};

use crate::error::{PdmpError, Result};
use crate::model::ModelSpec;
use crate::simulate::Trajectory;

/// Number of batches used for batch-means standard errors.
pub const BATCHES: usize = 20;

/// Default burn-in as a fraction of the horizon.
pub fn default_burn_in(traj: &Trajectory) -> f64 {
    0.1 * traj.t_max
}

/// Rectangular grid with uniform bins in each coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bins: Vec<usize>,
}

impl HistogramGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, bins: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != bins.len() {
            return Err(PdmpError::InvalidConfig("grid bounds and bin counts differ in length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(b > a)) || bins.contains(&0) {
            return Err(PdmpError::InvalidConfig("grid needs hi > lo and at least one bin per axis".into()));
        }
        Ok(Self { lo, hi, bins })
    }

    /// One-dimensional grid.
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], vec![bins])
    }

    pub fn dim(&self) -> usize {
        self.bins.len()
    }

    pub fn cells(&self) -> usize {
        self.bins.iter().product()
    }

    fn width(&self, d: usize) -> f64 {
        (self.hi[d] - self.lo[d]) / self.bins[d] as f64
    }

    fn cell_of(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for d in 0..self.dim() {
            let u = (x[d] - self.lo[d]) / self.width(d);
            if !(u >= 0.0) || x[d] > self.hi[d] {
                return None;
            }
            let b = (u as usize).min(self.bins[d] - 1);
            idx = idx * self.bins[d] + b;
        }
        Some(idx)
    }

    /// Lower and upper corner of a cell.
    pub fn cell_bounds(&self, mut cell: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![0.0; self.dim()];
        let mut hi = vec![0.0; self.dim()];
        for d in (0..self.dim()).rev() {
            let b = cell % self.bins[d];
            cell /= self.bins[d];
            lo[d] = self.lo[d] + b as f64 * self.width(d);
            hi[d] = if b + 1 == self.bins[d] { self.hi[d] } else { self.lo[d] + (b + 1) as f64 * self.width(d) };
        }
        (lo, hi)
    }
}

/// Time spent per (cell, environment) over a window, stored as raw time
/// so that measures over disjoint windows can be merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub grid: HistogramGrid,
    pub n0: usize,
    /// `time[k * cells + c]`.
    pub time: Vec<f64>,
    /// Time outside the grid, per environment.
    pub outside: Vec<f64>,
    pub total_time: f64,
    pub burn_in: f64,
}

impl EmpiricalMeasure {
    pub fn empty(grid: HistogramGrid, n0: usize, burn_in: f64) -> Self {
        let cells = grid.cells();
        Self { grid, n0, time: vec![0.0; cells * n0], outside: vec![0.0; n0], total_time: 0.0, burn_in }
    }

    /// Normalized mass of cell `c` in environment `k`.
    pub fn mass(&self, k: usize, c: usize) -> f64 {
        self.time[k * self.grid.cells() + c] / self.total_time
    }

    /// Per-cell mass summed over environments.
    pub fn combined(&self) -> Vec<f64> {
        let cells = self.grid.cells();
        (0..cells).map(|c| (0..self.n0).map(|k| self.mass(k, c)).sum()).collect()
    }

    /// Fraction of time in each environment (inside and outside the grid).
    pub fn env_marginal(&self) -> Vec<f64> {
        let cells = self.grid.cells();
        (0..self.n0)
            .map(|k| (self.time[k * cells..(k + 1) * cells].iter().sum::<f64>() + self.outside[k]) / self.total_time)
            .collect()
    }

    /// Fraction of time spent outside the grid.
    pub fn deficit(&self) -> f64 {
        self.outside.iter().sum::<f64>() / self.total_time
    }

    /// Sum over disjoint time windows.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid || self.n0 != other.n0 {
            return Err(PdmpError::InvalidConfig("cannot merge measures on different grids".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            n0: self.n0,
            time: self.time.iter().zip(&other.time).map(|(a, b)| a + b).collect(),
            outside: self.outside.iter().zip(&other.outside).map(|(a, b)| a + b).collect(),
            total_time: self.total_time + other.total_time,
            burn_in: self.burn_in.min(other.burn_in),
        })
    }

    /// CSV rows `env,bin_lo_1..n,bin_hi_1..n,mass` (environments 1-based).
    pub fn to_csv(&self) -> String {
        let d = self.grid.dim();
        let mut out = String::from("env");
        for i in 1..=d {
            out.push_str(&format!(",bin_lo_{i}"));
        }
        for i in 1..=d {
            out.push_str(&format!(",bin_hi_{i}"));
        }
        out.push_str(",mass\n");
        for k in 0..self.n0 {
            for c in 0..self.grid.cells() {
                let (lo, hi) = self.grid.cell_bounds(c);
                out.push_str(&(k + 1).to_string());
                for v in lo.iter().chain(&hi) {
                    out.push_str(&format!(",{v}"));
                }
                out.push_str(&format!(",{}\n", self.mass(k, c)));
            }
        }
        out
    }
}

/// Calls `visit(t0, t1, x0, x1, k)` for every sample interval clipped to
/// `[a, b]`, with the end states interpolated linearly.
fn for_each_piece(traj: &Trajectory, a: f64, b: f64, mut visit: impl FnMut(f64, f64, &[f64], &[f64], usize)) {
    let n = traj.n;
    let mut xa = vec![0.0; n];
    let mut xb = vec![0.0; n];
    for s in 0..traj.len().saturating_sub(1) {
        let (t0, t1) = (traj.times[s], traj.times[s + 1]);
        if t1 <= t0 || t1 <= a || t0 >= b {
            continue;
        }
        let (p, q) = (traj.state(s), traj.state(s + 1));
        let lo = t0.max(a);
        let hi = t1.min(b);
        let span = t1 - t0;
        for i in 0..n {
            xa[i] = p[i] + (q[i] - p[i]) * (lo - t0) / span;
            xb[i] = p[i] + (q[i] - p[i]) * (hi - t0) / span;
        }
        visit(lo, hi, &xa, &xb, traj.envs[s]);
    }
}

fn check_window(traj: &Trajectory, burn_in: f64) -> Result<()> {
    if !(burn_in >= 0.0 && burn_in < traj.t_max) {
        return Err(PdmpError::InvalidConfig(format!("burn-in {burn_in} must lie in [0, {})", traj.t_max)));
    }
    Ok(())
}

/// Occupation histogram over `[burn_in, t_max]` with exact attribution of
/// each interpolated segment to the cells it crosses. Only the first
/// `grid.dim()` coordinates are binned.
pub fn occupation_histogram(
    traj: &Trajectory,
    n0: usize,
    grid: &HistogramGrid,
    burn_in: f64,
) -> Result<EmpiricalMeasure> {
    occupation_window(traj, n0, grid, burn_in, traj.t_max)
}

/// Occupation histogram over an arbitrary window `[a, b]`.
pub fn occupation_window(
    traj: &Trajectory,
    n0: usize,
    grid: &HistogramGrid,
    a: f64,
    b: f64,
) -> Result<EmpiricalMeasure> {
    check_window(traj, a)?;
    if grid.dim() > traj.n {
        return Err(PdmpError::DimensionMismatch { expected: traj.n, got: grid.dim() });
    }
    if traj.envs.iter().any(|&k| k >= n0) {
        return Err(PdmpError::EnvOutOfRange { k: n0 + 1, n0 });
    }
    let b = b.min(traj.t_max);
    let mut m = EmpiricalMeasure::empty(grid.clone(), n0, a);
    let cells = grid.cells();
    let d = grid.dim();
    let mut cuts: Vec<f64> = Vec::new();
    let mut mid = vec![0.0; d];
    for_each_piece(traj, a, b, |t0, t1, x0, x1, k| {
        cuts.clear();
        cuts.push(0.0);
        cuts.push(1.0);
        for j in 0..d {
            let (u, v) = (x0[j], x1[j]);
            if u == v {
                continue;
            }
            let w = grid.width(j);
            let (lo, hi) = (u.min(v), u.max(v));
            let first = ((lo - grid.lo[j]) / w).ceil().max(0.0) as i64;
            let last = ((hi - grid.lo[j]) / w).floor().min(grid.bins[j] as f64) as i64;
            for e in first..=last {
                let edge = grid.lo[j] + e as f64 * w;
                let theta = (edge - u) / (v - u);
                if theta > 0.0 && theta < 1.0 {
                    cuts.push(theta);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            if s1 <= s0 {
                continue;
            }
            let sm = 0.5 * (s0 + s1);
            for j in 0..d {
                mid[j] = x0[j] + sm * (x1[j] - x0[j]);
            }
            let dt = (s1 - s0) * (t1 - t0);
            match grid.cell_of(&mid) {
                Some(c) => m.time[k * cells + c] += dt,
                None => m.outside[k] += dt,
            }
        }
        m.total_time += t1 - t0;
    });
    Ok(m)
}

/// Trapezoidal time average of `g(x, k)` over `[burn_in, t_max]`.
pub fn time_average(traj: &Trajectory, burn_in: f64, g: impl Fn(&[f64], usize) -> f64) -> Result<f64> {
    check_window(traj, burn_in)?;
    Ok(window_integral(traj, burn_in, traj.t_max, &g) / (traj.t_max - burn_in))
}

fn window_integral(traj: &Trajectory, a: f64, b: f64, g: &impl Fn(&[f64], usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for_each_piece(traj, a, b, |t0, t1, x0, x1, k| acc += 0.5 * (t1 - t0) * (g(x0, k) + g(x1, k)));
    acc
}

/// Mean and batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Time average with a batch-means standard error over `BATCHES` equal
/// sub-windows of `[burn_in, t_max]`.
pub fn time_average_se(traj: &Trajectory, burn_in: f64, g: impl Fn(&[f64], usize) -> f64) -> Result<Estimate> {
    check_window(traj, burn_in)?;
    let width = (traj.t_max - burn_in) / BATCHES as f64;
    let means: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let a = burn_in + b as f64 * width;
            window_integral(traj, a, a + width, &g) / width
        })
        .collect();
    Ok(mean_se(&means))
}

fn mean_se(v: &[f64]) -> Estimate {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    Estimate { value: mean, se: (var / m).sqrt() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    /// Least-squares slope of `ln x_i(t)`.
    pub value: f64,
    pub se: f64,
    pub window: (f64, f64),
    /// Time average of `f_i` over the same window.
    pub mean_fitness: f64,
    pub mean_fitness_se: f64,
    /// The species was integrated in log coordinates at some point.
    pub log_floor_hit: bool,
}

fn ols_slope(traj: &Trajectory, i: usize, a: f64, b: f64) -> Option<f64> {
    let (mut n, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in 0..traj.len() {
        let t = traj.times[s];
        if t < a || t > b {
            continue;
        }
        let y = traj.ln_state(s)[i];
        n += 1.0;
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    let den = n * stt - st * st;
    (n >= 2.0 && den > 0.0).then(|| (n * sty - st * sy) / den)
}

/// Growth rate of `ln x_i` over `window` (default: last half of the
/// horizon), with the time average of `f_i` as a second estimate.
pub fn lyapunov_slope(
    traj: &Trajectory,
    model: &ModelSpec,
    i: usize,
    window: Option<(f64, f64)>,
) -> Result<SlopeEstimate> {
    if i >= traj.n {
        return Err(PdmpError::DimensionMismatch { expected: traj.n, got: i + 1 });
    }
    if !traj.ln_state(0)[i].is_finite() {
        return Err(PdmpError::InvalidConfig(format!("species {} starts at zero", i + 1)));
    }
    let (a, b) = window.unwrap_or((0.5 * traj.t_max, traj.t_max));
    if !(a >= 0.0 && b <= traj.t_max && b > a) {
        return Err(PdmpError::InvalidConfig(format!("slope window ({a}, {b}) is invalid")));
    }
    let value =
        ols_slope(traj, i, a, b).ok_or_else(|| PdmpError::InvalidConfig("too few samples in slope window".into()))?;
    let width = (b - a) / BATCHES as f64;
    let batch: Vec<f64> =
        (0..BATCHES).filter_map(|j| ols_slope(traj, i, a + j as f64 * width, a + (j + 1) as f64 * width)).collect();
    let fit = |x: &[f64], k: usize| {
        let mut f = vec![0.0; x.len()];
        model.fitness_into(x, k, &mut f);
        f[i]
    };
    let fbatch: Vec<f64> = (0..BATCHES)
        .map(|j| {
            let lo = a + j as f64 * width;
            window_integral(traj, lo, lo + width, &fit) / width
        })
        .collect();
    let fm = mean_se(&fbatch);
    Ok(SlopeEstimate {
        value,
        se: mean_se(&batch).se,
        window: (a, b),
        mean_fitness: fm.value,
        mean_fitness_se: fm.se,
        log_floor_hit: traj.log_mode_used.get(i).copied().unwrap_or(false),
    })
}

/// `L ln F (x, k)`: `grad F . drift / F + sum_l q_kl (ln F_l - ln F_k)`.
pub fn generator_ln_f(model: &ModelSpec, x: &[f64], k: usize) -> Result<f64> {
    let gauge = model.gauge().ok_or_else(|| PdmpError::Unsupported("model has no gauge function".into()))?;
    let mut f = vec![0.0; model.n()];
    model.fitness_into(x, k, &mut f);
    let fk = gauge.eval(x, k);
    let mut v = gauge.drift_derivative(x, &f, k) / fk;
    for l in 0..model.n0() {
        if l != k {
            v += model.switch().rate(x, k, l)? * (gauge.eval(x, l) / fk).ln();
        }
    }
    Ok(v)
}

/// Time average of `L ln F` along the path, which vanishes under any
/// invariant measure.
pub fn ln_f_drift_average(traj: &Trajectory, model: &ModelSpec, burn_in: f64) -> Result<Estimate> {
    if model.gauge().is_none() {
        return Err(PdmpError::Unsupported("ln F drift needs a gauge function".into()));
    }
    time_average_se(traj, burn_in, |x, k| generator_ln_f(model, x, k).unwrap_or(f64::NAN))
}
