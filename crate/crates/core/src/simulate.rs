//! Exact simulation of the switched flow.
//!
//! Within an environment the ODE is integrated with Dormand-Prince 5(4).
//! Components below `log_floor` are advanced as `ln x_i`, so positive
//! components never reach zero. Environment jumps are exponential for a
//! constant rate matrix and sampled by thinning against `rate_bound`
//! otherwise.
//!
//! Random numbers come from ChaCha8 seeded with `seed`; replicate `r` uses
//! stream `r` of that seed. Exponential times are drawn by inversion,
//! `-ln(1 - U) / rate`, and targets by inversion of the cumulative rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PdmpError, Result};
use crate::model::{ModelSpec, SwitchKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub seed: u64,
    pub record_dt: f64,
    pub log_floor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { t_max: 100.0, rtol: 1e-8, atol: 1e-10, h_max: f64::INFINITY, seed: 0, record_dt: 0.1, log_floor: 1e-12 }
    }
}

impl SimConfig {
    pub fn new(t_max: f64, seed: u64) -> Self {
        Self { t_max, seed, ..Self::default() }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(PdmpError::InvalidConfig(format!("{what} must be positive, got {v}")));
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return bad("t_max", self.t_max);
        }
        if !(self.rtol > 0.0) {
            return bad("rtol", self.rtol);
        }
        if !(self.atol > 0.0) {
            return bad("atol", self.atol);
        }
        if !(self.h_max > 0.0) {
            return bad("h_max", self.h_max);
        }
        if !(self.record_dt > 0.0) {
            return bad("record_dt", self.record_dt);
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor", self.log_floor);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub from: usize,
    pub to: usize,
    pub x: Vec<f64>,
}

/// A simulated path.
///
/// Samples are taken on the grid `m * record_dt`, at `t_max`, and twice at
/// every jump time (before and after the switch, same state). `ln_states`
/// keeps `ln x_i` so components that underflow `f64` in `states` still
/// carry their logarithm; zero components have `ln x_i = -inf`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub t_max: f64,
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    pub ln_states: Vec<f64>,
    pub envs: Vec<usize>,
    pub jumps: Vec<JumpEvent>,
    pub seed: u64,
    pub replicate: u64,
    pub fingerprint: String,
    /// Species that were integrated in log coordinates at some point.
    pub log_mode_used: Vec<bool>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, s: usize) -> &[f64] {
        &self.states[s * self.n..(s + 1) * self.n]
    }

    pub fn ln_state(&self, s: usize) -> &[f64] {
        &self.ln_states[s * self.n..(s + 1) * self.n]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn final_ln_state(&self) -> &[f64] {
        self.ln_state(self.len() - 1)
    }

    pub fn final_env(&self) -> usize {
        *self.envs.last().unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Zero,
    Linear,
    Log,
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Adaptive integrator state for one path.
struct Flow<'a> {
    model: &'a ModelSpec,
    cfg: &'a SimConfig,
    y: Vec<f64>,
    modes: Vec<Mode>,
    h: f64,
    stages: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    ynew: Vec<f64>,
    xbuf: Vec<f64>,
    fbuf: Vec<f64>,
    log_used: Vec<bool>,
}

impl<'a> Flow<'a> {
    fn new(model: &'a ModelSpec, cfg: &'a SimConfig, x0: &[f64]) -> Self {
        let n = model.n();
        let mut flow = Self {
            model,
            cfg,
            y: x0.to_vec(),
            modes: vec![Mode::Linear; n],
            h: (1e-3f64).min(cfg.h_max),
            stages: std::array::from_fn(|_| vec![0.0; n]),
            ytmp: vec![0.0; n],
            ynew: vec![0.0; n],
            xbuf: vec![0.0; n],
            fbuf: vec![0.0; n],
            log_used: vec![false; n],
        };
        for i in 0..n {
            if x0[i] == 0.0 {
                flow.modes[i] = Mode::Zero;
            } else if x0[i] < cfg.log_floor {
                flow.modes[i] = Mode::Log;
                flow.y[i] = x0[i].ln();
                flow.log_used[i] = true;
            }
        }
        flow
    }

    fn x_into(modes: &[Mode], y: &[f64], out: &mut [f64]) {
        for ((o, m), v) in out.iter_mut().zip(modes).zip(y) {
            *o = match m {
                Mode::Zero => 0.0,
                Mode::Linear => *v,
                Mode::Log => v.exp(),
            };
        }
    }

    fn x(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.y.len()];
        Self::x_into(&self.modes, &self.y, &mut out);
        out
    }

    fn ln_x(&self) -> Vec<f64> {
        self.modes
            .iter()
            .zip(&self.y)
            .map(|(m, v)| match m {
                Mode::Zero => f64::NEG_INFINITY,
                Mode::Linear => v.ln(),
                Mode::Log => *v,
            })
            .collect()
    }

    fn rhs(
        model: &ModelSpec,
        modes: &[Mode],
        env: usize,
        y: &[f64],
        xbuf: &mut [f64],
        fbuf: &mut [f64],
        out: &mut [f64],
    ) {
        Self::x_into(modes, y, xbuf);
        model.fitness_into(xbuf, env, fbuf);
        for i in 0..out.len() {
            out[i] = match modes[i] {
                Mode::Zero => 0.0,
                Mode::Linear => y[i] * fbuf[i],
                Mode::Log => fbuf[i],
            };
        }
    }

    /// One trial step of size `h`; returns the scaled error norm, or
    /// infinity if the step left the positive orthant.
    fn try_step(&mut self, env: usize, h: f64) -> f64 {
        let n = self.y.len();
        let (model, modes) = (self.model, &self.modes);
        for s in 0..7 {
            for i in 0..n {
                let mut acc = self.y[i];
                for j in 0..s {
                    acc += h * A[s][j] * self.stages[j][i];
                }
                self.ytmp[i] = acc;
            }
            let (_, rest) = self.stages.split_at_mut(s);
            Self::rhs(model, modes, env, &self.ytmp, &mut self.xbuf, &mut self.fbuf, &mut rest[0]);
            if s == 6 {
                self.ynew.copy_from_slice(&self.ytmp);
            }
        }
        let mut err = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            if modes[i] == Mode::Zero {
                continue;
            }
            if !self.ynew[i].is_finite() || (modes[i] == Mode::Linear && self.ynew[i] <= 0.0) {
                return f64::INFINITY;
            }
            let mut e = 0.0;
            for s in 0..7 {
                e += E[s] * self.stages[s][i];
            }
            let sc = self.cfg.atol + self.cfg.rtol * self.y[i].abs().max(self.ynew[i].abs());
            err += (h * e / sc).powi(2);
            count += 1;
        }
        if count == 0 {
            0.0
        } else {
            (err / count as f64).sqrt()
        }
    }

    fn update_modes(&mut self) {
        let floor = self.cfg.log_floor;
        for i in 0..self.y.len() {
            match self.modes[i] {
                Mode::Linear if self.y[i] < floor => {
                    self.modes[i] = Mode::Log;
                    self.y[i] = self.y[i].ln();
                    self.log_used[i] = true;
                }
                Mode::Log if self.y[i] > (10.0 * floor).ln() => {
                    self.modes[i] = Mode::Linear;
                    self.y[i] = self.y[i].exp();
                }
                _ => {}
            }
        }
    }

    /// Integrates in environment `env` from `t0` to exactly `t1`.
    fn advance(&mut self, env: usize, t0: f64, t1: f64) -> Result<()> {
        let mut t = t0;
        while t < t1 {
            let remaining = t1 - t;
            let mut h = self.h.min(self.cfg.h_max);
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            loop {
                let err = self.try_step(env, h);
                if err <= 1.0 {
                    let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                    let suggested = h * factor;
                    self.h = if last { self.h.max(suggested) } else { suggested };
                    t = if last { t1 } else { t + h };
                    std::mem::swap(&mut self.y, &mut self.ynew);
                    self.update_modes();
                    break;
                }
                let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
                h *= factor;
                last = false;
                if h < 1e-14 * t.abs().max(1.0) {
                    return Err(PdmpError::StepUnderflow { t, h, k: env + 1, x: self.x() });
                }
            }
        }
        Ok(())
    }
}

/// Flow of environment `k` for time `tau` from `x0`.
pub fn flow_segment(model: &ModelSpec, x0: &[f64], k: usize, tau: f64, cfg: &SimConfig) -> Result<Vec<f64>> {
    check_start(model, x0, k)?;
    if !(tau >= 0.0) {
        return Err(PdmpError::InvalidConfig(format!("flow duration must be nonnegative, got {tau}")));
    }
    let mut flow = Flow::new(model, cfg, x0);
    flow.advance(k, 0.0, tau)?;
    Ok(flow.x())
}

fn check_start(model: &ModelSpec, x0: &[f64], k0: usize) -> Result<()> {
    model.fitness(x0, k0).map(|_| ())?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(PdmpError::InvalidConfig("initial state must be finite".into()));
    }
    Ok(())
}

fn exp_draw(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Picks `l != k` with probability `rates[l] / total`.
fn pick_target(rng: &mut ChaCha8Rng, rates: &[f64], k: usize, total: f64) -> usize {
    let candidates = rates.iter().enumerate().filter(|&(l, &r)| l != k && r > 0.0).count();
    let fallback =
        rates.iter().enumerate().filter(|&(l, &r)| l != k && r > 0.0).map(|(l, _)| l).next_back().unwrap_or(k);
    if candidates <= 1 {
        return fallback;
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (l, &r) in rates.iter().enumerate() {
        if l == k {
            continue;
        }
        acc += r;
        if u < acc {
            return l;
        }
    }
    fallback
}

/// Holding time and target drawn while flowing the path.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpSample {
    /// Time until the switch; infinite if the environment is absorbing.
    pub dt: f64,
    pub to: usize,
    /// State at the switch.
    pub x: Vec<f64>,
}

struct Path<'a> {
    flow: Flow<'a>,
    k: usize,
    t: f64,
    rates: Vec<f64>,
}

impl<'a> Path<'a> {
    fn new(model: &'a ModelSpec, cfg: &'a SimConfig, x0: &[f64], k0: usize) -> Self {
        Self { flow: Flow::new(model, cfg, x0), k: k0, t: 0.0, rates: vec![0.0; model.n0()] }
    }

    fn fill_rates(&mut self) -> Result<f64> {
        let x = self.flow.x();
        let mut total = 0.0;
        for l in 0..self.rates.len() {
            self.rates[l] = if l == self.k { 0.0 } else { self.flow.model.switch().rate(&x, self.k, l)? };
            total += self.rates[l];
        }
        Ok(total)
    }

    /// Flows until the next switch or `horizon`. Calls `on_grid` at every
    /// recording time passed. Returns the new environment if a switch
    /// happened before `horizon`.
    fn next_jump(
        &mut self,
        rng: &mut ChaCha8Rng,
        horizon: f64,
        grid: &mut Grid,
        on_grid: &mut dyn FnMut(f64, &Flow, usize),
    ) -> Result<Option<usize>> {
        let model = self.flow.model;
        match model.switch().kind() {
            SwitchKind::ConstantMatrix => {
                let total = self.fill_rates()?;
                let t_jump = self.t + exp_draw(rng, total);
                self.flow_to(t_jump.min(horizon), grid, on_grid)?;
                if t_jump >= horizon {
                    return Ok(None);
                }
                Ok(Some(pick_target(rng, &self.rates, self.k, total)))
            }
            SwitchKind::StateDependent => {
                let bound = model.switch().rate_bound().unwrap_or(f64::INFINITY);
                loop {
                    let t_cand = self.t + exp_draw(rng, bound);
                    self.flow_to(t_cand.min(horizon), grid, on_grid)?;
                    if t_cand >= horizon {
                        return Ok(None);
                    }
                    let total = self.fill_rates()?;
                    if total > bound * (1.0 + 1e-12) {
                        return Err(PdmpError::RateBoundViolated { k: self.k + 1, rate: total, bound, t: self.t });
                    }
                    let u: f64 = rng.random();
                    if u * bound < total {
                        return Ok(Some(pick_target(rng, &self.rates, self.k, total)));
                    }
                }
            }
        }
    }

    fn flow_to(&mut self, t_end: f64, grid: &mut Grid, on_grid: &mut dyn FnMut(f64, &Flow, usize)) -> Result<()> {
        while let Some(tg) = grid.next_at_or_before(t_end) {
            if tg > self.t {
                self.flow.advance(self.k, self.t, tg)?;
                self.t = tg;
            }
            on_grid(tg, &self.flow, self.k);
            grid.m += 1;
        }
        if t_end > self.t && t_end.is_finite() {
            self.flow.advance(self.k, self.t, t_end)?;
            self.t = t_end;
        }
        Ok(())
    }
}

/// Recording grid `m * dt` for `m >= 1`, capped at `t_max`.
struct Grid {
    dt: f64,
    m: u64,
    t_max: f64,
}

impl Grid {
    fn next_at_or_before(&self, t: f64) -> Option<f64> {
        let tg = self.m as f64 * self.dt;
        (tg <= t && tg <= self.t_max).then_some(tg)
    }

    fn none() -> Self {
        Self { dt: f64::INFINITY, m: 1, t_max: 0.0 }
    }
}

/// Draws the holding time in environment `k` from `x`, flowing the state to
/// the switch, and the environment switched to.
pub fn sample_jump(
    model: &ModelSpec,
    x: &[f64],
    k: usize,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<JumpSample> {
    check_start(model, x, k)?;
    let mut path = Path::new(model, cfg, x, k);
    let mut grid = Grid::none();
    match path.next_jump(rng, f64::INFINITY, &mut grid, &mut |_, _, _| {})? {
        Some(to) => Ok(JumpSample { dt: path.t, to, x: path.flow.x() }),
        None => Ok(JumpSample { dt: f64::INFINITY, to: k, x: x.to_vec() }),
    }
}

/// RNG for replicate `r` of `seed`.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Simulates one path on `[0, cfg.t_max]` (replicate 0 of `cfg.seed`).
pub fn simulate(model: &ModelSpec, x0: &[f64], k0: usize, cfg: &SimConfig) -> Result<Trajectory> {
    simulate_replicate(model, x0, k0, cfg, 0)
}

pub fn simulate_replicate(
    model: &ModelSpec,
    x0: &[f64],
    k0: usize,
    cfg: &SimConfig,
    replicate: u64,
) -> Result<Trajectory> {
    cfg.check()?;
    check_start(model, x0, k0)?;
    let n = model.n();
    let mut rng = replicate_rng(cfg.seed, replicate);
    let mut traj = Trajectory {
        n,
        t_max: cfg.t_max,
        times: Vec::new(),
        states: Vec::new(),
        ln_states: Vec::new(),
        envs: Vec::new(),
        jumps: Vec::new(),
        seed: cfg.seed,
        replicate,
        fingerprint: model.fingerprint(),
        log_mode_used: Vec::new(),
    };
    let expected = (cfg.t_max / cfg.record_dt).ceil().min(1e8) as usize + 2;
    traj.times.reserve(expected);
    traj.states.reserve(expected * n);
    traj.ln_states.reserve(expected * n);
    traj.envs.reserve(expected);

    fn push(traj: &mut Trajectory, t: f64, flow: &Flow, k: usize) {
        traj.times.push(t);
        traj.states.extend(flow.x());
        traj.ln_states.extend(flow.ln_x());
        traj.envs.push(k);
    }

    let mut path = Path::new(model, cfg, x0, k0);
    push(&mut traj, 0.0, &path.flow, k0);
    let mut grid = Grid { dt: cfg.record_dt, m: 1, t_max: cfg.t_max };
    loop {
        let mut rec = |t: f64, flow: &Flow, k: usize| push(&mut traj, t, flow, k);
        let next = path.next_jump(&mut rng, cfg.t_max, &mut grid, &mut rec)?;
        match next {
            Some(to) => {
                let from = path.k;
                let t = path.t;
                push(&mut traj, t, &path.flow, from);
                path.k = to;
                push(&mut traj, t, &path.flow, to);
                traj.jumps.push(JumpEvent { t, from, to, x: path.flow.x() });
            }
            None => break,
        }
    }
    if *traj.times.last().unwrap() < cfg.t_max {
        push(&mut traj, cfg.t_max, &path.flow, path.k);
    }
    traj.log_mode_used = path.flow.log_used.clone();
    Ok(traj)
}

/// Independent replicates; replicate `r` uses stream `r` of `cfg.seed`, so
/// the result does not depend on scheduling.
pub fn simulate_ensemble(
    model: &ModelSpec,
    x0: &[f64],
    k0: usize,
    cfg: &SimConfig,
    replicates: usize,
) -> Result<Vec<Trajectory>> {
    if replicates == 0 {
        return Err(PdmpError::InvalidConfig("replicates must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..replicates as u64).into_par_iter().map(|r| simulate_replicate(model, x0, k0, cfg, r)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..replicates as u64).map(|r| simulate_replicate(model, x0, k0, cfg, r)).collect()
    }
}

#[cfg(test)]
mod tests;
