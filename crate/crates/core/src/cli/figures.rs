//! Reference experiments, one preset per figure, plus a
//! gnuplot script per figure that plots the emitted CSVs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::CliError;
use crate::analysis::{ensemble_stats, occupancy, time_average, uniform_times, Observable, Rect};
use crate::export::{write_points, write_series};
use crate::model::{ModelParams, State};
use crate::sde::scheme::SchemeKind;
use crate::sde::{aligned_stride, simulate_ensemble_at, simulate_seeded, SolverConfig};

pub const FIGURES: [u8; 7] = [2, 3, 4, 5, 6, 7, 8];

/// Occupancy target set for figure 6.
pub const FIG6_RECT: Rect = Rect {
    u_lo: 0.5,
    u_hi: 30.0,
    v_lo: 0.1,
    v_hi: 20.0,
};

/// Rows kept when a long single path is written out.
const PATH_ROWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FigurePreset {
    pub which: u8,
    pub params: ModelParams,
    pub inits: Vec<State>,
    pub scheme: SchemeKind,
    pub dt: f64,
    pub t_end: f64,
    pub n_paths: usize,
    pub samples: usize,
}

pub fn sustainable_params() -> ModelParams {
    ModelParams::new(5.0, 2.0, 1.0, 2.5, 4.0, 1.0, 0.5).expect("valid preset")
}

pub fn large_noise_params() -> ModelParams {
    ModelParams::new(7.0, 3.0, 4.0, 5.0, 6.0, 2.0, 4.0).expect("valid preset")
}

pub fn high_mortality_params() -> ModelParams {
    ModelParams::new(7.0, 3.0, 4.0, 5.0, 6.0, 3.82, 0.25).expect("valid preset")
}

impl FigurePreset {
    pub fn get(which: u8) -> Option<Self> {
        let base = |params, inits, dt, t_end, n_paths, samples| FigurePreset {
            which,
            params,
            inits,
            scheme: SchemeKind::StrongTaylor15,
            dt,
            t_end,
            n_paths,
            samples,
        };
        let s2 = sustainable_params();
        let i2 = State { u: 2.0, v: 1.0 };
        let i7 = State { u: 4.0, v: 3.0 };
        Some(match which {
            2 => base(s2, vec![i2], 1e-3, 100.0, 1, 0),
            3 => base(s2, vec![i2], 1e-2, 1000.0, 10_000, 1),
            4 => base(s2, vec![i2], 1e-3, 20.0, 1_000, 201),
            5 => base(s2, vec![i2], 1e-3, 100.0, 1, 1001),
            6 => base(s2, vec![i2, State { u: 3.0, v: 4.0 }], 1e-2, 100.0, 20_000, 101),
            7 => base(large_noise_params(), vec![i7], 1e-3, 2.0, 1, 0),
            8 => base(high_mortality_params(), vec![i7], 1e-3, 15.0, 500, 151),
            _ => return None,
        })
    }

    fn solver(&self) -> Result<SolverConfig, CliError> {
        Ok(SolverConfig::new(self.scheme, self.dt, self.t_end)?)
    }
}

struct Emitter<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Emitter<'_> {
    fn file(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut w).map_err(io)?;
        w.flush().map_err(io)?;
        self.written.push(path);
        Ok(())
    }

    fn script(&mut self, which: u8, body: &str) -> Result<(), CliError> {
        let text = format!(
            "set datafile separator ','\nset terminal pngcairo size 1200,500\nset output 'fig{which}.png'\n{body}"
        );
        self.file(&format!("fig{which}.gp"), |w| w.write_all(text.as_bytes()))
    }
}

/// Writes the data files and script for `preset` into `dir`.
pub fn emit_figure(preset: &FigurePreset, seed: u64, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut em = Emitter { dir, written: Vec::new() };
    let p = &preset.params;
    let init = preset.inits[0];
    let n = preset.which;
    match n {
        2 | 7 => {
            let cfg = preset.solver()?;
            let stride = cfg.n_steps().div_ceil(PATH_ROWS).max(1);
            let traj = simulate_seeded(p, init, &cfg.with_stride(stride), seed, 0)?;
            em.file(&format!("fig{n}_path.csv"), |w| traj.write_csv(w))?;
            em.script(
                n,
                &format!(
                    "set multiplot layout 1,2\n\
                     set xlabel 'u'\nset ylabel 'v'\n\
                     plot 'fig{n}_path.csv' every ::1 using 2:3 with lines notitle\n\
                     set xlabel 't'\nunset ylabel\n\
                     plot 'fig{n}_path.csv' every ::1 using 1:2 with lines title 'u', \
                     '' every ::1 using 1:3 with lines title 'v'\n\
                     unset multiplot\n"
                ),
            )?;
        }
        3 => {
            let cfg = preset.solver()?.with_stride(usize::MAX);
            let paths = simulate_ensemble_at(p, init, &cfg, seed, preset.n_paths, &[preset.t_end])?;
            let pts: Vec<(f64, f64)> = paths.iter().map(|t| (t.states[0].u, t.states[0].v)).collect();
            em.file("fig3_points.csv", |w| write_points(w, &pts))?;
            em.script(
                3,
                "set xlabel 'u'\nset ylabel 'v'\n\
                 plot 'fig3_points.csv' every ::1 using 1:2 with dots notitle\n",
            )?;
        }
        4 | 8 => {
            let times = uniform_times(0.0, preset.t_end, preset.samples);
            let cfg = preset.solver()?;
            let cfg = cfg.with_stride(aligned_stride(cfg.dt, cfg.t_end, preset.samples));
            let paths = simulate_ensemble_at(p, init, &cfg, seed, preset.n_paths, &times)?;
            let stats = ensemble_stats(&paths, &times)?;
            em.file(&format!("fig{n}_u.csv"), |w| write_series(w, &stats.times, &stats.mean_u, Some(&stats.se_u)))?;
            em.file(&format!("fig{n}_v.csv"), |w| write_series(w, &stats.times, &stats.mean_v, Some(&stats.se_v)))?;
            em.script(
                n,
                &format!(
                    "set xlabel 't'\n\
                     plot 'fig{n}_u.csv' every ::1 using 1:2 with lines title 'E u', \
                     'fig{n}_v.csv' every ::1 using 1:2 with lines title 'E v'\n"
                ),
            )?;
        }
        5 => {
            let traj = simulate_seeded(p, init, &preset.solver()?, seed, 0)?;
            let keep = |s: crate::analysis::Series| {
                let step = (s.times.len() / (preset.samples - 1)).max(1);
                let idx: Vec<usize> = (0..s.times.len())
                    .filter(|i| i % step == step - 1 || *i + 1 == s.times.len())
                    .collect();
                (
                    idx.iter().map(|&i| s.times[i]).collect::<Vec<_>>(),
                    idx.iter().map(|&i| s.values[i]).collect::<Vec<_>>(),
                )
            };
            let (tu, fu) = keep(time_average(&traj, Observable::U)?);
            let (tv, gv) = keep(time_average(&traj, Observable::V)?);
            em.file("fig5_u_avg.csv", |w| write_series(w, &tu, &fu, None))?;
            em.file("fig5_v_avg.csv", |w| write_series(w, &tv, &gv, None))?;
            em.script(
                5,
                "set xlabel 't'\n\
                 plot 'fig5_u_avg.csv' every ::1 using 1:2 with lines title 'f(t)', \
                 'fig5_v_avg.csv' every ::1 using 1:2 with lines title 'g(t)'\n",
            )?;
        }
        6 => {
            let times = uniform_times(0.0, preset.t_end, preset.samples);
            let cfg = preset.solver()?;
            let cfg = cfg.with_stride(aligned_stride(cfg.dt, cfg.t_end, preset.samples));
            let mut plot = Vec::new();
            for (k, &start) in preset.inits.iter().enumerate() {
                let paths = simulate_ensemble_at(p, start, &cfg, seed, preset.n_paths, &times)?;
                let occ = occupancy(&paths, FIG6_RECT, &times)?;
                let name = format!("fig6_q{}.csv", k + 1);
                em.file(&name, |w| write_series(w, &occ.times, &occ.prob, None))?;
                plot.push(format!(
                    "'{name}' every ::1 using 1:2 with lines title '({}, {})'",
                    start.u, start.v
                ));
            }
            em.script(6, &format!("set xlabel 't'\nset yrange [0:1]\nplot {}\n", plot.join(", ")))?;
        }
        _ => return Err(CliError::Usage(format!("no figure {n}; choose one of {FIGURES:?}"))),
    }
    Ok(em.written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regime::{classify_regime, Verdict};

    #[test]
    fn presets_follow_captions() {
        for n in FIGURES {
            let f = FigurePreset::get(n).unwrap();
            assert_eq!(f.which, n);
        }
        assert!(FigurePreset::get(9).is_none());
        assert_eq!(FigurePreset::get(6).unwrap().inits.len(), 2);
        assert_eq!(FigurePreset::get(7).unwrap().t_end, 2.0);
        assert_eq!(FigurePreset::get(8).unwrap().n_paths, 500);
        assert_eq!(classify_regime(&sustainable_params(), 2.0).verdict, Verdict::Sustainable);
    }

    #[test]
    fn small_figures_write_files() {
        let dir = tempfile::tempdir().unwrap();
        for n in [4, 6, 8] {
            let mut f = FigurePreset::get(n).unwrap();
            f.n_paths = 3;
            let files = emit_figure(&f, 1, dir.path()).unwrap();
            assert!(files.iter().any(|p| p.ends_with(format!("fig{n}.gp"))));
        }
        let text = std::fs::read_to_string(dir.path().join("fig6_q2.csv")).unwrap();
        assert_eq!(text.lines().count(), 102);
    }
}
