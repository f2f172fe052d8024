//! Strong-order study against the closed-form geometric Brownian motion.
//!
//! With `rho = f = 0` and `u0 = 0` the old-tree equation is
//! `dv = -h v dt + sigma v dw`, solved exactly by
//! `v_T = v0 exp((-h - sigma^2/2) T + sigma w_T)`.
//! Every step size is driven by the same Brownian path: the finest
//! increments are drawn once and merged for coarser grids.

use serde::Serialize;

use super::noise::{NoisePair, NoiseSource, ReplayNoise};
use super::scheme::SchemeKind;
use super::{run_ensemble, simulate_path, SolverConfig};
use crate::error::Result;
use crate::model::{ModelParams, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GbmOracle {
    pub h: f64,
    pub sigma: f64,
    pub v0: f64,
    pub t_end: f64,
}

impl GbmOracle {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            rho: 0.0,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            f: 0.0,
            h: self.h,
            sigma: self.sigma,
        }
    }

    pub fn exact(&self, w_t: f64) -> f64 {
        self.v0 * ((-self.h - 0.5 * self.sigma * self.sigma) * self.t_end + self.sigma * w_t).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub scheme: &'static str,
    pub dt: f64,
    /// Mean absolute terminal error over the ensemble.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Fitted strong order per scheme, in the order requested.
    pub orders: Vec<(&'static str, f64)>,
}

/// Least-squares slope of `log(error)` against `log(dt)`.
pub fn fitted_order(dts: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    sxy / sxx
}

/// Runs `schemes` on step sizes `2^-k` for `k` in `levels` (ascending).
pub fn strong_convergence_study(
    oracle: GbmOracle,
    schemes: &[SchemeKind],
    levels: &[u32],
    n_paths: usize,
    master_seed: u64,
) -> Result<ConvergenceStudy> {
    let finest = *levels.iter().max().expect("at least one level");
    let fine_n = (oracle.t_end * 2f64.powi(finest as i32)).round() as usize;
    let fine_dt = oracle.t_end / fine_n as f64;
    let p = oracle.params();
    let init = State { u: 0.0, v: oracle.v0 };

    // errors[path][scheme][level]
    let per_path = run_ensemble(n_paths, master_seed, |mut stream| {
        let fine: Vec<NoisePair> = (0..fine_n).map(|_| stream.next_pair(fine_dt)).collect();
        let exact = oracle.exact(fine.iter().map(|q| q.dw).sum());
        let mut out = Vec::with_capacity(schemes.len());
        for &kind in schemes {
            let mut row = Vec::with_capacity(levels.len());
            for &k in levels {
                let factor = 1usize << (finest - k);
                let dt = fine_dt * factor as f64;
                let cfg = SolverConfig::new(kind, dt, oracle.t_end)?.with_stride(usize::MAX);
                let mut replay = ReplayNoise::coarsened(&fine, fine_dt, factor);
                let v = simulate_path(&p, init, &cfg, &mut replay)?.last().v;
                row.push((v - exact).abs());
            }
            out.push(row);
        }
        Ok(out)
    })?;

    let dts: Vec<f64> = levels.iter().map(|&k| fine_dt * (1usize << (finest - k)) as f64).collect();
    let mut rows = Vec::new();
    let mut orders = Vec::new();
    for (si, &kind) in schemes.iter().enumerate() {
        let errors: Vec<f64> = (0..levels.len())
            .map(|li| per_path.iter().map(|e| e[si][li]).sum::<f64>() / n_paths as f64)
            .collect();
        for (dt, error) in dts.iter().zip(&errors) {
            rows.push(ConvergenceRow {
                scheme: kind.name(),
                dt: *dt,
                error: *error,
            });
        }
        orders.push((kind.name(), fitted_order(&dts, &errors)));
    }
    Ok(ConvergenceStudy { rows, orders })
}
