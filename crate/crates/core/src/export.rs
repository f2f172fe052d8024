//! CSV formatting shared by the path, series, and sweep writers.

use std::io::{self, Write};

use crate::regime::{RegimeReport, SweepGrid};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// `t,value` rows, or `t,value,se` when standard errors are given.
pub fn write_series<W: Write>(mut w: W, times: &[f64], values: &[f64], se: Option<&[f64]>) -> io::Result<()> {
    match se {
        Some(se) => {
            writeln!(w, "t,value,se")?;
            for ((t, v), e) in times.iter().zip(values).zip(se) {
                writeln!(w, "{},{},{}", fmt_f64(*t), fmt_f64(*v), fmt_f64(*e))?;
            }
        }
        None => {
            writeln!(w, "t,value")?;
            for (t, v) in times.iter().zip(values) {
                writeln!(w, "{},{}", fmt_f64(*t), fmt_f64(*v))?;
            }
        }
    }
    Ok(())
}

/// `u,v` point list, e.g. the ensemble's states at one instant.
pub fn write_points<W: Write>(mut w: W, points: &[(f64, f64)]) -> io::Result<()> {
    writeln!(w, "u,v")?;
    for (u, v) in points {
        writeln!(w, "{},{}", fmt_f64(*u), fmt_f64(*v))?;
    }
    Ok(())
}

pub const SWEEP_HEADER: &str = "axis1_value,axis2_value,verdict,sustainable,kappa_lo,kappa_hi,kappa,epsilon,\
expectation,branch,h_threshold,h1_holds,h1_inf,h1_argmin,h2_holds,h2_sup_f1,h2_inf_f2,large_noise,inconsistent";

fn report_fields(r: &RegimeReport) -> String {
    let s = &r.sustainability;
    let branch = match r.decline.branch {
        Some(b) => format!("{b:?}"),
        None => String::new(),
    };
    [
        r.verdict.as_str().to_string(),
        s.holds.to_string(),
        fmt_opt(s.kappa_lo),
        fmt_opt(s.kappa_hi),
        fmt_opt(s.kappa_witness),
        fmt_opt(s.epsilon_witness),
        r.decline.fires.to_string(),
        branch,
        fmt_f64(r.decline.h_threshold),
        r.hypothesis1.holds.to_string(),
        fmt_f64(r.hypothesis1.inf_value),
        fmt_f64(r.hypothesis1.argmin),
        r.hypothesis2.holds.to_string(),
        fmt_opt(r.hypothesis2.sup_f1),
        fmt_opt(r.hypothesis2.inf_f2),
        r.large_noise.to_string(),
        r.inconsistent.to_string(),
    ]
    .join(",")
}

pub fn write_sweep<W: Write>(mut w: W, grid: &SweepGrid) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for cell in &grid.cells {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(cell.axis1_value),
            fmt_f64(cell.axis2_value),
            report_fields(&cell.report)
        )?;
    }
    Ok(())
}
