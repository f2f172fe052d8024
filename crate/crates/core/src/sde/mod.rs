//! Path integration for the forest system, the one-dimensional comparison
//! process, and the auxiliary linear SDE.

pub mod convergence;
pub mod noise;
pub mod scheme;
pub mod system;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::fmt_f64;
use crate::model::{ModelParams, State};
use crate::regime::m_star;
use noise::{NoiseSource, NoiseStream, SeedRecord};
use scheme::{Scheme, SchemeKind};
use system::{ForestSystem, LinearMultiplicative, SdeSystem, Vec2};

/// Paths longer than this are thinned on storage.
pub const MAX_DENSE_POINTS: usize = 10_000_000;
/// Target size of a thinned path.
pub const THINNED_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClampPolicy {
    #[serde(rename = "clamp-to-zero")]
    ClampToZero,
    #[serde(rename = "reject-path")]
    RejectPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub scheme: SchemeKind,
    pub dt: f64,
    pub t_end: f64,
    pub clamp_policy: ClampPolicy,
    /// Store every `record_stride`-th grid point (the last point is always kept).
    pub record_stride: usize,
}

impl SolverConfig {
    pub fn new(scheme: SchemeKind, dt: f64, t_end: f64) -> Result<Self> {
        let cfg = SolverConfig {
            scheme,
            dt,
            t_end,
            clamp_policy: ClampPolicy::ClampToZero,
            record_stride: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_clamp(mut self, policy: ClampPolicy) -> Self {
        self.clamp_policy = policy;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be finite and > 0, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::param("t_end", format!("must be finite and > 0, got {}", self.t_end)));
        }
        if self.dt > self.t_end {
            return Err(Error::param("dt", format!("must not exceed t_end = {}", self.t_end)));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    fn time_at(&self, i: usize, n: usize) -> f64 {
        if i == n {
            self.t_end
        } else {
            i as f64 * self.dt
        }
    }

    fn effective_stride(&self, n: usize) -> usize {
        let stride = self.record_stride.max(1);
        if n / stride + 1 > MAX_DENSE_POINTS {
            n.div_ceil(THINNED_POINTS)
        } else {
            stride
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub clamp_events: usize,
    pub seed: Option<SeedRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn last(&self) -> State {
        *self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Linear interpolation of the state at time `t`.
    pub fn state_at(&self, t: f64) -> Result<State> {
        let (t0, t1) = (self.times[0], self.t_end());
        if !(t >= t0 && t <= t1) {
            return Err(Error::Sampling(format!(
                "time {t} outside path horizon [{t0}, {t1}]"
            )));
        }
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return Ok(self.states[0]);
        }
        if i >= self.times.len() {
            return Ok(self.last());
        }
        let (ta, tb) = (self.times[i - 1], self.times[i]);
        let (a, b) = (self.states[i - 1], self.states[i]);
        let w = (t - ta) / (tb - ta);
        Ok(State {
            u: a.u + w * (b.u - a.u),
            v: a.v + w * (b.v - a.v),
        })
    }

    /// `t,u,v` rows at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,u,v")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            writeln!(w, "{},{},{}", fmt_f64(*t), fmt_f64(s.u), fmt_f64(s.v))?;
        }
        Ok(())
    }
}

/// A one-dimensional path on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub clamp_events: usize,
}

/// Drift constant of the comparison process `dv = (K - h v) dt + sigma v dw`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ComparisonDrift {
    /// `K = f max(u0, M0)`, which dominates `f u` pathwise.
    #[default]
    Dominating,
    /// `K = max(u0, M0)` as the constant is commonly written.
    Literal,
}

struct Integrator<'a> {
    scheme: &'a dyn Scheme,
    cfg: &'a SolverConfig,
    clamp_events: usize,
}

impl<'a> Integrator<'a> {
    fn new(cfg: &'a SolverConfig) -> Self {
        Integrator {
            scheme: cfg.scheme.scheme(),
            cfg,
            clamp_events: 0,
        }
    }

    fn advance(&mut self, sys: &dyn SdeSystem, x: Vec2, dt: f64, noise: noise::NoisePair, step: usize) -> Result<Vec2> {
        let mut y = self.scheme.step(sys, x, dt, noise);
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::NonFinite { step });
        }
        if y[0] < 0.0 || y[1] < 0.0 {
            match self.cfg.clamp_policy {
                ClampPolicy::RejectPath => {
                    return Err(Error::NegativeState { step, u: y[0], v: y[1] });
                }
                ClampPolicy::ClampToZero => {
                    for c in &mut y {
                        if *c < 0.0 {
                            *c = 0.0;
                            self.clamp_events += 1;
                        }
                    }
                }
            }
        }
        Ok(y)
    }
}

/// Records `(t, x)` on the storage grid.
struct Recorder<T> {
    stride: usize,
    n: usize,
    times: Vec<f64>,
    values: Vec<T>,
}

impl<T> Recorder<T> {
    fn new(cfg: &SolverConfig) -> Self {
        let n = cfg.n_steps();
        let stride = cfg.effective_stride(n);
        let cap = n / stride + 2;
        Recorder {
            stride,
            n,
            times: Vec::with_capacity(cap),
            values: Vec::with_capacity(cap),
        }
    }

    fn offer(&mut self, i: usize, t: f64, value: impl FnOnce() -> T) {
        if i % self.stride == 0 || i == self.n {
            self.times.push(t);
            self.values.push(value());
        }
    }
}

fn step_len(cfg: &SolverConfig, i: usize, n: usize) -> f64 {
    cfg.time_at(i + 1, n) - cfg.time_at(i, n)
}

fn check_init(init: State) -> Result<()> {
    State::new(init.u, init.v).map(|_| ())
}

/// Integrates any [`SdeSystem`] from `x0`, returning the stored grid.
pub fn integrate_system(
    sys: &dyn SdeSystem,
    x0: Vec2,
    cfg: &SolverConfig,
    noise: &mut dyn NoiseSource,
) -> Result<(Vec<f64>, Vec<Vec2>, usize)> {
    cfg.validate()?;
    let mut integ = Integrator::new(cfg);
    let mut rec = Recorder::new(cfg);
    let n = rec.n;
    let mut x = x0;
    rec.offer(0, 0.0, || x);
    for i in 0..n {
        let dt = step_len(cfg, i, n);
        let pair = noise.next_pair(dt);
        x = integ.advance(sys, x, dt, pair, i + 1)?;
        rec.offer(i + 1, cfg.time_at(i + 1, n), || x);
    }
    Ok((rec.times, rec.values, integ.clamp_events))
}

pub fn simulate_path(
    p: &ModelParams,
    init: State,
    cfg: &SolverConfig,
    noise: &mut dyn NoiseSource,
) -> Result<Trajectory> {
    check_init(init)?;
    let sys = ForestSystem { params: *p };
    let (times, xs, clamp_events) = integrate_system(&sys, [init.u, init.v], cfg, noise)?;
    Ok(Trajectory {
        times,
        states: xs.into_iter().map(|[u, v]| State { u, v }).collect(),
        clamp_events,
        seed: None,
    })
}

/// [`simulate_path`] driven by the stream for `(master_seed, path_index)`.
pub fn simulate_seeded(
    p: &ModelParams,
    init: State,
    cfg: &SolverConfig,
    master_seed: u64,
    path_index: u64,
) -> Result<Trajectory> {
    let mut stream = NoiseStream::new(master_seed, path_index);
    let mut traj = simulate_path(p, init, cfg, &mut stream)?;
    traj.seed = Some(stream.record());
    Ok(traj)
}

/// Integrates the forest system and its comparison process under one noise
/// path. The comparison starts from `init.v` with ceiling `max(u0, M0)`.
pub fn simulate_coupled_comparison(
    p: &ModelParams,
    init: State,
    u0: f64,
    cfg: &SolverConfig,
    noise: &mut dyn NoiseSource,
    drift: ComparisonDrift,
) -> Result<(Trajectory, ScalarPath)> {
    check_init(init)?;
    cfg.validate()?;
    let ceiling = m_star(p, u0);
    let forest = ForestSystem { params: *p };
    let comparison = LinearMultiplicative {
        decay: p.h,
        inflow: match drift {
            ComparisonDrift::Dominating => p.f * ceiling,
            ComparisonDrift::Literal => ceiling,
        },
        alpha: p.sigma,
    };

    let mut main = Integrator::new(cfg);
    let mut bar = Integrator::new(cfg);
    let mut rec: Recorder<(Vec2, f64)> = Recorder::new(cfg);
    let n = rec.n;
    let mut x = [init.u, init.v];
    let mut y = [0.0, init.v];
    rec.offer(0, 0.0, || (x, y[1]));
    for i in 0..n {
        let dt = step_len(cfg, i, n);
        let pair = noise.next_pair(dt);
        x = main.advance(&forest, x, dt, pair, i + 1)?;
        y = bar.advance(&comparison, y, dt, pair, i + 1)?;
        rec.offer(i + 1, cfg.time_at(i + 1, n), || (x, y[1]));
    }

    let (states, values): (Vec<State>, Vec<f64>) = rec
        .values
        .into_iter()
        .map(|([u, v], vb)| (State { u, v }, vb))
        .unzip();
    Ok((
        Trajectory {
            times: rec.times.clone(),
            states,
            clamp_events: main.clamp_events,
            seed: None,
        },
        ScalarPath {
            times: rec.times,
            values,
            clamp_events: bar.clamp_events,
        },
    ))
}

/// `dx = (a2 - a1 x) dt + alpha x dw` from `x0 > 0`.
pub fn simulate_aux_1d(
    a1: f64,
    a2: f64,
    alpha: f64,
    x0: f64,
    cfg: &SolverConfig,
    noise: &mut dyn NoiseSource,
) -> Result<ScalarPath> {
    if !(x0.is_finite() && x0 > 0.0) {
        return Err(Error::param("x0", format!("must be finite and > 0, got {x0}")));
    }
    let sys = LinearMultiplicative {
        decay: a1,
        inflow: a2,
        alpha,
    };
    let (times, xs, clamp_events) = integrate_system(&sys, [0.0, x0], cfg, noise)?;
    Ok(ScalarPath {
        times,
        values: xs.into_iter().map(|x| x[1]).collect(),
        clamp_events,
    })
}

/// Runs `n_paths` independent paths in parallel; result `i` is driven by
/// the stream `(master_seed, i)`, so output order and content do not depend
/// on scheduling.
pub fn run_ensemble<T, F>(n_paths: usize, master_seed: u64, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(NoiseStream) -> Result<T> + Sync,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| job(NoiseStream::new(master_seed, i)))
        .collect()
}

/// Seeded forest trajectories for paths `0..n_paths`.
pub fn simulate_ensemble(
    p: &ModelParams,
    init: State,
    cfg: &SolverConfig,
    master_seed: u64,
    n_paths: usize,
) -> Result<Vec<Trajectory>> {
    run_ensemble(n_paths, master_seed, |mut stream| {
        let mut t = simulate_path(p, init, cfg, &mut stream)?;
        t.seed = Some(stream.record());
        Ok(t)
    })
}

/// Like [`simulate_ensemble`], but each path is reduced to its states at
/// `times` as soon as it finishes, so memory scales with `times.len()`.
pub fn simulate_ensemble_at(
    p: &ModelParams,
    init: State,
    cfg: &SolverConfig,
    master_seed: u64,
    n_paths: usize,
    times: &[f64],
) -> Result<Vec<Trajectory>> {
    run_ensemble(n_paths, master_seed, |mut stream| {
        let full = simulate_path(p, init, cfg, &mut stream)?;
        let states = times.iter().map(|&t| full.state_at(t)).collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            times: times.to_vec(),
            states,
            clamp_events: full.clamp_events,
            seed: Some(stream.record()),
        })
    })
}

/// Largest stride that keeps every point of an evenly spaced `samples`-point
/// grid on `[0, t_end]` on the stored integration grid, or 1 if none does.
pub fn aligned_stride(dt: f64, t_end: f64, samples: usize) -> usize {
    if samples < 2 {
        return usize::MAX;
    }
    let k = t_end / (samples - 1) as f64 / dt;
    let r = k.round();
    if r >= 1.0 && (k - r).abs() < 1e-9 * r {
        r as usize
    } else {
        1
    }
}
