//! Path functionals and ensemble estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::State;
use crate::sde::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    U,
    V,
    VSquared,
    /// Indicator of `v >= threshold`.
    VAtLeast(f64),
}

impl Observable {
    pub fn eval(self, s: State) -> f64 {
        match self {
            Observable::U => s.u,
            Observable::V => s.v,
            Observable::VSquared => s.v * s.v,
            Observable::VAtLeast(theta) => {
                if s.v >= theta {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// A time series with optional standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_u: Vec<f64>,
    pub mean_v: Vec<f64>,
    pub se_u: Vec<f64>,
    pub se_v: Vec<f64>,
    pub n_paths: usize,
}

/// Closed rectangle `[u_lo, u_hi] x [v_lo, v_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub u_lo: f64,
    pub u_hi: f64,
    pub v_lo: f64,
    pub v_hi: f64,
}

impl Rect {
    pub fn new(u_lo: f64, u_hi: f64, v_lo: f64, v_hi: f64) -> Result<Self> {
        if !(u_lo <= u_hi && v_lo <= v_hi) {
            return Err(Error::Sampling(format!(
                "rectangle [{u_lo}, {u_hi}] x [{v_lo}, {v_hi}] is not well ordered"
            )));
        }
        Ok(Rect { u_lo, u_hi, v_lo, v_hi })
    }

    pub fn contains(&self, s: State) -> bool {
        s.u >= self.u_lo && s.u <= self.u_hi && s.v >= self.v_lo && s.v <= self.v_hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancySeries {
    pub times: Vec<f64>,
    pub prob: Vec<f64>,
    pub rect: Rect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayEstimate {
    /// Least-squares slope of `log(u + kappa v)` against `t`;
    /// `-inf` when the window touches the origin.
    pub slope: f64,
    pub hit_origin: bool,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

fn mean_and_se(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mut s = CompensatedSum::default();
    xs.clone().for_each(|x| s.add(x));
    let mean = s.total() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let mut q = CompensatedSum::default();
    xs.for_each(|x| q.add((x - mean) * (x - mean)));
    let var = (q.total() / (n - 1) as f64).max(0.0);
    (mean, (var / n as f64).sqrt())
}

/// `(1/t) int_0^t obs ds` by the trapezoidal rule, from the second grid point on.
pub fn time_average(traj: &Trajectory, obs: Observable) -> Result<Series> {
    if traj.len() < 2 {
        return Err(Error::Sampling("time average needs at least two points".to_string()));
    }
    let t0 = traj.times[0];
    let mut acc = CompensatedSum::default();
    let mut prev = obs.eval(traj.states[0]);
    let mut times = Vec::with_capacity(traj.len() - 1);
    let mut values = Vec::with_capacity(traj.len() - 1);
    for i in 1..traj.len() {
        let cur = obs.eval(traj.states[i]);
        acc.add(0.5 * (prev + cur) * (traj.times[i] - traj.times[i - 1]));
        prev = cur;
        times.push(traj.times[i]);
        values.push(acc.total() / (traj.times[i] - t0));
    }
    Ok(Series { times, values })
}

/// States of every path at every sample time; `out[k][i]` is path `i` at time `k`.
fn sample_states(paths: &[Trajectory], sample_times: &[f64]) -> Result<Vec<Vec<State>>> {
    sample_times
        .iter()
        .map(|&t| paths.iter().map(|p| p.state_at(t)).collect())
        .collect()
}

pub fn ensemble_stats(paths: &[Trajectory], sample_times: &[f64]) -> Result<EnsembleStats> {
    let n = paths.len();
    if n < 2 {
        return Err(Error::Sampling(format!("need at least two paths, got {n}")));
    }
    let grid = sample_states(paths, sample_times)?;
    let mut stats = EnsembleStats {
        times: sample_times.to_vec(),
        mean_u: Vec::with_capacity(grid.len()),
        mean_v: Vec::with_capacity(grid.len()),
        se_u: Vec::with_capacity(grid.len()),
        se_v: Vec::with_capacity(grid.len()),
        n_paths: n,
    };
    for states in &grid {
        let (mu, su) = mean_and_se(states.iter().map(|s| s.u), n);
        let (mv, sv) = mean_and_se(states.iter().map(|s| s.v), n);
        stats.mean_u.push(mu);
        stats.se_u.push(su);
        stats.mean_v.push(mv);
        stats.se_v.push(sv);
    }
    Ok(stats)
}

pub fn occupancy(paths: &[Trajectory], rect: Rect, sample_times: &[f64]) -> Result<OccupancySeries> {
    Rect::new(rect.u_lo, rect.u_hi, rect.v_lo, rect.v_hi)?;
    if paths.is_empty() {
        return Err(Error::Sampling("no paths".to_string()));
    }
    let grid = sample_states(paths, sample_times)?;
    let prob = grid
        .iter()
        .map(|states| states.iter().filter(|s| rect.contains(**s)).count() as f64 / paths.len() as f64)
        .collect();
    Ok(OccupancySeries {
        times: sample_times.to_vec(),
        prob,
        rect,
    })
}

/// Ensemble estimate of `E v^theta` at each sample time.
pub fn moment_estimate(paths: &[Trajectory], theta: f64, sample_times: &[f64]) -> Result<Series> {
    if !(theta >= 1.0) {
        return Err(Error::Sampling(format!("moment exponent must be >= 1, got {theta}")));
    }
    if paths.is_empty() {
        return Err(Error::Sampling("no paths".to_string()));
    }
    let grid = sample_states(paths, sample_times)?;
    let values = grid
        .iter()
        .map(|states| mean_and_se(states.iter().map(|s| s.v.powf(theta)), paths.len()).0)
        .collect();
    Ok(Series {
        times: sample_times.to_vec(),
        values,
    })
}

/// Slope of `log(u + kappa v)` over the second half of the horizon.
pub fn log_decay_rate(traj: &Trajectory, kappa: f64) -> DecayEstimate {
    let half = 0.5 * (traj.times[0] + traj.t_end());
    let start = traj.times.partition_point(|&t| t < half);
    let window = start..traj.len();

    let mut pts = Vec::with_capacity(window.len());
    for i in window {
        let s = traj.states[i];
        let w = s.u + kappa * s.v;
        if !(w > 0.0) {
            return DecayEstimate {
                slope: f64::NEG_INFINITY,
                hit_origin: true,
            };
        }
        pts.push((traj.times[i], w.ln()));
    }
    if pts.len() < 2 {
        return DecayEstimate {
            slope: f64::NAN,
            hit_origin: false,
        };
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in &pts {
        sxy += (t - tm) * (y - ym);
        sxx += (t - tm) * (t - tm);
    }
    DecayEstimate {
        slope: sxy / sxx,
        hit_origin: false,
    }
}

/// Every path's state at time `t`.
pub fn snapshot(paths: &[Trajectory], t: f64) -> Result<Vec<(f64, f64)>> {
    paths
        .iter()
        .map(|p| p.state_at(t).map(|s| (s.u, s.v)))
        .collect()
}

/// `n` evenly spaced points on `[t0, t1]`, both ends included.
pub fn uniform_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    t1
                } else {
                    t0 + (t1 - t0) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::sde::scheme::SchemeKind;
    use crate::sde::{simulate_ensemble, simulate_seeded, SolverConfig};

    fn path(times: Vec<f64>, f: impl Fn(f64) -> State) -> Trajectory {
        Trajectory {
            states: times.iter().map(|&t| f(t)).collect(),
            times,
            clamp_events: 0,
            seed: None,
        }
    }

    fn fig2() -> ModelParams {
        ModelParams::new(5.0, 2.0, 1.0, 2.5, 4.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn time_average_exactness() {
        let grid = uniform_times(0.0, 10.0, 101);
        let constant = path(grid.clone(), |_| State { u: 3.5, v: 0.0 });
        let avg = time_average(&constant, Observable::U).unwrap();
        assert_eq!(avg.times[0], 0.1);
        assert!(avg.values.iter().all(|&x| (x - 3.5).abs() < 1e-14));

        let linear = path(grid, |t| State { u: 0.0, v: t });
        let avg = time_average(&linear, Observable::V).unwrap();
        for (t, x) in avg.times.iter().zip(&avg.values) {
            assert!((x - t / 2.0).abs() < 1e-13);
        }
        let short = path(vec![0.0], |_| State::ORIGIN);
        assert!(time_average(&short, Observable::V).is_err());
    }

    #[test]
    fn observables() {
        let s = State { u: 1.0, v: 3.0 };
        assert_eq!(Observable::VSquared.eval(s), 9.0);
        assert_eq!(Observable::VAtLeast(3.0).eval(s), 1.0);
        assert_eq!(Observable::VAtLeast(3.1).eval(s), 0.0);
    }

    #[test]
    fn ensemble_stats_trivial_cases() {
        let grid = uniform_times(0.0, 1.0, 11);
        let p = path(grid.clone(), |t| State { u: t, v: 2.0 * t });
        let st = ensemble_stats(&[p.clone(), p.clone()], &[0.25, 0.5]).unwrap();
        assert_eq!(st.se_u, vec![0.0, 0.0]);
        assert!((st.mean_u[0] - 0.25).abs() < 1e-15);
        assert!((st.mean_v[1] - 1.0).abs() < 1e-15);

        let k = path(grid.clone(), |_| State { u: 0.0, v: 4.0 });
        let st = ensemble_stats(&vec![k; 5], &grid).unwrap();
        assert!(st.mean_v.iter().all(|&m| m == 4.0));

        assert!(ensemble_stats(&[p.clone()], &[0.5]).is_err());
        assert!(ensemble_stats(&[p.clone(), p], &[1.5]).is_err());
    }

    #[test]
    fn ensemble_mean_matches_gbm_expectation() {
        let params = ModelParams {
            rho: 0.0,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            f: 0.0,
            h: 1.0,
            sigma: 0.5,
        };
        let cfg = SolverConfig::new(SchemeKind::StrongTaylor15, 1e-2, 2.0).unwrap();
        let paths = simulate_ensemble(&params, State { u: 0.0, v: 1.0 }, &cfg, 21, 10_000).unwrap();
        let times = [0.5, 1.0, 2.0];
        let st = ensemble_stats(&paths, &times).unwrap();
        for (i, t) in times.iter().enumerate() {
            let exact = (-params.h * t).exp();
            assert!((st.mean_v[i] - exact).abs() < 3.0 * st.se_v[i], "t={t}");
        }
    }

    #[test]
    fn ensemble_mean_permutation_invariant() {
        let cfg = SolverConfig::new(SchemeKind::StrongTaylor15, 1e-2, 2.0).unwrap();
        let mut paths = simulate_ensemble(&fig2(), State { u: 2.0, v: 1.0 }, &cfg, 3, 50).unwrap();
        let times = uniform_times(0.0, 2.0, 9);
        let a = ensemble_stats(&paths, &times).unwrap();
        paths.reverse();
        paths.swap(3, 17);
        let b = ensemble_stats(&paths, &times).unwrap();
        for (x, y) in a.mean_v.iter().zip(&b.mean_v) {
            assert!((x - y).abs() <= 1e-15 * x.abs());
        }
    }

    #[test]
    fn occupancy_properties() {
        let cfg = SolverConfig::new(SchemeKind::StrongTaylor15, 1e-2, 5.0).unwrap();
        let paths = simulate_ensemble(&fig2(), State { u: 2.0, v: 1.0 }, &cfg, 5, 200).unwrap();
        let times = uniform_times(0.0, 5.0, 21);
        let all = occupancy(&paths, Rect::new(0.0, 1e9, 0.0, 1e9).unwrap(), &times).unwrap();
        assert!(all.prob.iter().all(|&p| p == 1.0));

        let small = occupancy(&paths, Rect::new(0.5, 3.0, 0.5, 4.0).unwrap(), &times).unwrap();
        let big = occupancy(&paths, Rect::new(0.2, 30.0, 0.1, 20.0).unwrap(), &times).unwrap();
        for (s, b) in small.prob.iter().zip(&big.prob) {
            assert!((0.0..=1.0).contains(s));
            assert!(s <= b);
        }
        assert!(Rect::new(1.0, 0.0, 0.0, 1.0).is_err());
        let bad = Rect { u_lo: 2.0, u_hi: 1.0, v_lo: 0.0, v_hi: 1.0 };
        assert!(occupancy(&paths, bad, &times).is_err());
    }

    #[test]
    fn moment_estimate_cases() {
        let grid = uniform_times(0.0, 1.0, 5);
        let two = path(grid.clone(), |_| State { u: 0.0, v: 2.0 });
        let m = moment_estimate(&[two.clone(), two.clone()], 3.0, &grid).unwrap();
        assert!(m.values.iter().all(|&x| x == 8.0));
        assert!(moment_estimate(&[two], 0.5, &grid).is_err());

        let cfg = SolverConfig::new(SchemeKind::StrongTaylor15, 1e-2, 3.0).unwrap();
        let paths = simulate_ensemble(&fig2(), State { u: 2.0, v: 1.0 }, &cfg, 8, 30).unwrap();
        let times = uniform_times(0.0, 3.0, 7);
        let m1 = moment_estimate(&paths, 1.0, &times).unwrap();
        let st = ensemble_stats(&paths, &times).unwrap();
        for (a, b) in m1.values.iter().zip(&st.mean_v) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
    }

    #[test]
    fn decay_rate_exact_cases() {
        let grid = uniform_times(0.0, 10.0, 1001);
        let expo = path(grid.clone(), |t| State { u: (-t).exp(), v: (-t).exp() });
        let d = log_decay_rate(&expo, 1.0);
        assert!((d.slope + 1.0).abs() < 1e-9 && !d.hit_origin);
        let flat = path(grid.clone(), |_| State { u: 1.0, v: 2.0 });
        assert!(log_decay_rate(&flat, 1.0).slope.abs() < 1e-9);
        let dead = path(grid, |t| if t > 8.0 { State::ORIGIN } else { State { u: 1.0, v: 1.0 } });
        let d = log_decay_rate(&dead, 1.0);
        assert!(d.hit_origin && d.slope == f64::NEG_INFINITY);
    }

    #[test]
    fn sustained_path_keeps_positive_average() {
        let cfg = SolverConfig::new(SchemeKind::StrongTaylor15, 1e-2, 1000.0).unwrap();
        let t = simulate_seeded(&fig2(), State { u: 2.0, v: 1.0 }, &cfg, 1, 0).unwrap();
        let avg = time_average(&t, Observable::V).unwrap();
        assert!(*avg.values.last().unwrap() > 0.01);
    }
}
