//! Decidable predicates for sustainability and decline, the combined
//! classifier, and parameter sweeps over `(h, sigma)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{m0, thresholds, ModelParams};
use crate::poly::Polynomial;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SustainabilityCertificate {
    pub holds: bool,
    /// Open interval of admissible Lyapunov weights `kappa`, when nonempty.
    pub kappa_lo: Option<f64>,
    pub kappa_hi: Option<f64>,
    #[serde(rename = "kappa")]
    pub kappa_witness: Option<f64>,
    #[serde(rename = "epsilon")]
    pub epsilon_witness: Option<f64>,
}

impl SustainabilityCertificate {
    pub fn kappa_interval(&self) -> Option<(f64, f64)> {
        self.kappa_lo.zip(self.kappa_hi)
    }
}

/// Which threshold decided the decline-in-expectation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DeclineBranch {
    /// `rho f / (c + f)`.
    CF,
    /// `f (rho + 2 a b M*) / (a b^2 + c + f)`.
    AB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationDecline {
    #[serde(rename = "expectation")]
    pub fires: bool,
    /// The smaller of the two thresholds; reported whether or not it fired.
    pub branch: Option<DeclineBranch>,
    pub h_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hypothesis1 {
    pub holds: bool,
    #[serde(rename = "inf")]
    pub inf_value: f64,
    pub argmin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hypothesis2 {
    pub holds: bool,
    pub sup_f1: Option<f64>,
    pub inf_f2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Sustainable,
    DeclineInExpectation,
    DeclineAlmostSure,
    Indeterminate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Sustainable => "Sustainable",
            Verdict::DeclineInExpectation => "DeclineInExpectation",
            Verdict::DeclineAlmostSure => "DeclineAlmostSure",
            Verdict::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeReport {
    pub verdict: Verdict,
    pub sustainability: SustainabilityCertificate,
    pub decline: ExpectationDecline,
    pub hypothesis1: Hypothesis1,
    pub hypothesis2: Hypothesis2,
    pub large_noise: bool,
    /// Set when sustainability and a decline predicate fire together.
    pub inconsistent: bool,
}

/// Coefficients of `uu u^2 + uv u v + vv v^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticForm {
    pub uu: f64,
    pub uv: f64,
    pub vv: f64,
}

impl QuadraticForm {
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.uu * u * u + self.uv * u * v + self.vv * v * v
    }

    /// Nonnegativity on the closed quadrant `u, v >= 0`.
    pub fn is_copositive(&self) -> bool {
        self.uu >= 0.0
            && self.vv >= 0.0
            && (self.uv >= 0.0 || self.uv * self.uv <= 4.0 * self.uu * self.vv)
    }
}

/// The form whose nonnegativity on the quadrant is equivalent to
/// `L log(u + kappa v) >= eps / 2` once the curvature term is bounded.
pub fn sustainability_form(p: &ModelParams, kappa: f64, eps: f64) -> QuadraticForm {
    let d = kappa * p.f - p.loss_at_origin();
    let e = p.rho - kappa * p.h;
    QuadraticForm {
        uu: 2.0 * d - eps,
        uv: 2.0 * (kappa * d + e - kappa * eps),
        vv: 2.0 * kappa * e - kappa * kappa * p.sigma * p.sigma - kappa * kappa * eps,
    }
}

pub fn sustainability_check(p: &ModelParams) -> SustainabilityCertificate {
    let h_lower = thresholds(p).h_lower;
    let s2 = p.sigma * p.sigma;
    let holds = p.h < h_lower && s2 < 2.0 * (h_lower - p.h);
    if !holds {
        return SustainabilityCertificate {
            holds,
            kappa_lo: None,
            kappa_hi: None,
            kappa_witness: None,
            epsilon_witness: None,
        };
    }

    let lo = p.loss_at_origin() / p.f;
    // 2 rho / (sigma^2 + 2h) never exceeds rho / h.
    let hi = if s2 + 2.0 * p.h > 0.0 {
        2.0 * p.rho / (s2 + 2.0 * p.h)
    } else {
        f64::INFINITY
    };
    let kappa = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * lo };

    // F loses copositivity once its v^2 coefficient goes negative.
    let mut eps_lo = 0.0;
    let mut eps_hi = 2.0 * (p.rho - kappa * p.h) / kappa;
    let epsilon = if sustainability_form(p, kappa, eps_lo).is_copositive() {
        for _ in 0..200 {
            let mid = 0.5 * (eps_lo + eps_hi);
            if mid <= eps_lo || mid >= eps_hi {
                break;
            }
            if sustainability_form(p, kappa, mid).is_copositive() {
                eps_lo = mid;
            } else {
                eps_hi = mid;
            }
        }
        Some(eps_lo)
    } else {
        None
    };

    SustainabilityCertificate {
        holds,
        kappa_lo: Some(lo),
        kappa_hi: Some(hi),
        kappa_witness: Some(kappa),
        epsilon_witness: epsilon,
    }
}

/// Pathwise ceiling of the young-tree density, `max(u0, M0)`.
pub fn m_star(p: &ModelParams, u0: f64) -> f64 {
    u0.max(m0(p))
}

pub fn decline_expectation_check(p: &ModelParams, u0: f64) -> ExpectationDecline {
    let cf = p.rho * p.f / (p.c + p.f);
    let ab = p.f * (p.rho + 2.0 * p.a * p.b * m_star(p, u0)) / p.loss_at_origin();
    let (branch, h_threshold) = if cf <= ab {
        (DeclineBranch::CF, cf)
    } else {
        (DeclineBranch::AB, ab)
    };
    ExpectationDecline {
        fires: p.h >= h_threshold,
        branch: Some(branch),
        h_threshold,
    }
}

/// The quartic whose sign on `(0, (c+f)/f)` decides almost-sure decline.
pub fn f1_polynomial(p: &ModelParams) -> Polynomial {
    let (c, f, h, rho, s2) = (p.c, p.f, p.h, p.rho, p.sigma * p.sigma);
    let cf = c + f;
    Polynomial::new(vec![
        rho * rho,
        2.0 * rho * (cf - h),
        (cf - h) * (cf - h) - 2.0 * rho * f - 2.0 * cf * s2,
        2.0 * f * (s2 + h - cf),
        f * f,
    ])
}

pub fn f2_polynomial(p: &ModelParams) -> Polynomial {
    Polynomial::new(vec![p.rho, -(p.c + p.f + p.h), p.f])
}

pub fn f1(x: f64, p: &ModelParams) -> f64 {
    f1_polynomial(p).eval(x)
}

pub fn f2(x: f64, p: &ModelParams) -> f64 {
    f2_polynomial(p).eval(x)
}

pub fn hypothesis1_check(p: &ModelParams) -> Hypothesis1 {
    let hi = (p.c + p.f) / p.f;
    let inf = f1_polynomial(p)
        .infimum_on(0.0, hi)
        .expect("(0, (c+f)/f) is never empty");
    Hypothesis1 {
        holds: inf.value < 0.0,
        inf_value: inf.value,
        argmin: inf.arg,
    }
}

/// Open interval `(2 rho / (sigma^2 + 2h), (c+f)/f)`; possibly empty.
pub fn hypothesis2_interval(p: &ModelParams) -> (f64, f64) {
    let denom = p.sigma * p.sigma + 2.0 * p.h;
    let lo = if denom > 0.0 {
        2.0 * p.rho / denom
    } else {
        f64::INFINITY
    };
    (lo, (p.c + p.f) / p.f)
}

pub fn hypothesis2_check(p: &ModelParams) -> Hypothesis2 {
    let (lo, hi) = hypothesis2_interval(p);
    if !(lo < hi) {
        return Hypothesis2 {
            holds: false,
            sup_f1: None,
            inf_f2: None,
        };
    }
    let sup = f1_polynomial(p).supremum_on(lo, hi).map(|e| e.value);
    let inf = f2_polynomial(p).infimum_on(lo, hi).map(|e| e.value);
    Hypothesis2 {
        holds: matches!((sup, inf), (Some(s), Some(i)) if s > 0.0 && i < 0.0),
        sup_f1: sup,
        inf_f2: inf,
    }
}

pub fn large_noise_check(p: &ModelParams) -> bool {
    let r = p.rho + p.c - p.h;
    p.sigma * p.sigma > r * r / (2.0 * p.c)
}

pub fn classify_regime(p: &ModelParams, u0: f64) -> RegimeReport {
    let sustainability = sustainability_check(p);
    let decline = decline_expectation_check(p, u0);
    let hypothesis1 = hypothesis1_check(p);
    let hypothesis2 = hypothesis2_check(p);
    let large_noise = large_noise_check(p);

    let almost_sure = hypothesis1.holds || hypothesis2.holds;
    let inconsistent = sustainability.holds && (almost_sure || decline.fires || large_noise);
    let verdict = if inconsistent {
        Verdict::Indeterminate
    } else if sustainability.holds {
        Verdict::Sustainable
    } else if almost_sure {
        Verdict::DeclineAlmostSure
    } else if decline.fires {
        Verdict::DeclineInExpectation
    } else {
        Verdict::Indeterminate
    };

    RegimeReport {
        verdict,
        sustainability,
        decline,
        hypothesis1,
        hypothesis2,
        large_noise,
        inconsistent,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn new(param: &str, min: f64, max: f64, steps: usize) -> Self {
        SweepAxis {
            param: param.to_string(),
            min,
            max,
            steps,
        }
    }

    /// Evenly spaced values including both ends; a single step yields `min`.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let span = self.max - self.min;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.max
                } else {
                    self.min + span * i as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub axis1_value: f64,
    pub axis2_value: f64,
    pub report: RegimeReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    /// Row-major: `axis1` is the slow index.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn get(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.axis2.steps + j]
    }
}

pub fn sweep(template: &ModelParams, axis1: &SweepAxis, axis2: &SweepAxis, u0: f64) -> Result<SweepGrid> {
    for axis in [axis1, axis2] {
        if axis.param != "h" && axis.param != "sigma" {
            return Err(Error::Sweep(format!(
                "axis parameter must be `h` or `sigma`, got `{}`",
                axis.param
            )));
        }
        if axis.steps == 0 {
            return Err(Error::Sweep(format!("axis `{}` needs at least one step", axis.param)));
        }
        if !(axis.min.is_finite() && axis.max.is_finite()) || axis.min < 0.0 || axis.max < axis.min {
            return Err(Error::Sweep(format!(
                "axis `{}` needs finite 0 <= min <= max",
                axis.param
            )));
        }
    }
    if axis1.param == axis2.param {
        return Err(Error::Sweep("axes must name distinct parameters".to_string()));
    }

    let v1 = axis1.values();
    let v2 = axis2.values();
    let points: Vec<(f64, f64)> = v1
        .iter()
        .flat_map(|&x| v2.iter().map(move |&y| (x, y)))
        .collect();
    let cells = points
        .par_iter()
        .map(|&(x, y)| {
            let p = template.with(&axis1.param, x)?.with(&axis2.param, y)?;
            p.validate()?;
            Ok(SweepCell {
                axis1_value: x,
                axis2_value: y,
                report: classify_regime(&p, u0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid {
        axis1: axis1.clone(),
        axis2: axis2.clone(),
        cells,
    })
}
