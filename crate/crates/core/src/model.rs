//! Model constants, closed-form derived quantities, the deterministic
//! skeleton's stationary points, and the infinitesimal generator.
//!
//! The stochastic system is
//!
//! ```text
//! du = { rho v - [a (v - b)^2 + c + f] u } dt
//! dv = (f u - h v) dt + sigma v dw
//! ```
//!
//! and the deterministic skeleton is the same system with `sigma = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven model constants.
///
/// Fields are public so oracle tests can build degenerate models (for
/// instance `rho = f = 0`, which reduces the old-tree equation to geometric
/// Brownian motion). [`ModelParams::new`] and deserialization enforce the
/// full invariants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", deny_unknown_fields)]
pub struct ModelParams {
    /// Reproduction rate.
    pub rho: f64,
    /// Curvature of the young-tree mortality parabola.
    pub a: f64,
    /// Old-tree density minimizing young-tree mortality.
    pub b: f64,
    /// Baseline young-tree mortality.
    pub c: f64,
    /// Aging rate.
    pub f: f64,
    /// Old-tree mortality.
    pub h: f64,
    /// Noise intensity on the old-tree mortality.
    pub sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    rho: f64,
    a: f64,
    b: f64,
    c: f64,
    f: f64,
    h: f64,
    sigma: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.rho, r.a, r.b, r.c, r.f, r.h, r.sigma)
    }
}

impl ModelParams {
    pub fn new(rho: f64, a: f64, b: f64, c: f64, f: f64, h: f64, sigma: f64) -> Result<Self> {
        let p = ModelParams {
            rho,
            a,
            b,
            c,
            f,
            h,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("f", self.f),
        ];
        for (name, value) in positive {
            if !value.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {value}")));
            }
            if value <= 0.0 {
                return Err(Error::param(name, format!("must be > 0, got {value}")));
            }
        }
        for (name, value) in [("h", self.h), ("sigma", self.sigma)] {
            if !value.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {value}")));
            }
            if value < 0.0 {
                return Err(Error::param(name, format!("must be >= 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Looks up a parameter by its serialized key.
    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "rho" => self.rho,
            "a" => self.a,
            "b" => self.b,
            "c" => self.c,
            "f" => self.f,
            "h" => self.h,
            "sigma" => self.sigma,
            _ => return None,
        })
    }

    /// Returns a copy with one parameter replaced. Unknown names are an error.
    pub fn with(&self, name: &str, value: f64) -> Result<Self> {
        let mut p = *self;
        match name {
            "rho" => p.rho = value,
            "a" => p.a = value,
            "b" => p.b = value,
            "c" => p.c = value,
            "f" => p.f = value,
            "h" => p.h = value,
            "sigma" => p.sigma = value,
            _ => return Err(Error::Domain(format!("unknown parameter `{name}`"))),
        }
        Ok(p)
    }

    /// `a b^2 + c + f`, the young-tree loss rate at zero old-tree density.
    pub(crate) fn loss_at_origin(&self) -> f64 {
        self.a * self.b * self.b + self.c + self.f
    }
}

/// A point of the closed positive quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Young-tree density.
    pub u: f64,
    /// Old-tree density.
    pub v: f64,
}

impl State {
    pub const ORIGIN: State = State { u: 0.0, v: 0.0 };

    pub fn new(u: f64, v: f64) -> Result<Self> {
        for (name, value) in [("u0", u), ("v0", v)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::param(name, format!("must be finite and >= 0, got {value}")));
            }
        }
        Ok(State { u, v })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// `rho f / (a b^2 + c + f)`.
    pub h_lower: f64,
    /// `rho f / (c + f)`.
    pub h_upper: f64,
    /// Supremum of `rho v / (gamma(v) + f)` over `v > 0`.
    pub m0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointLabel {
    O,
    Pminus,
    Pplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
    GloballyAsymptoticallyStable,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub label: PointLabel,
    pub state: State,
    pub stability: Stability,
}

/// Young-tree mortality `a (v - b)^2 + c`.
pub fn gamma(v: f64, p: &ModelParams) -> f64 {
    let d = v - p.b;
    p.a * d * d + p.c
}

pub fn m0(p: &ModelParams) -> f64 {
    let k = p.loss_at_origin().sqrt();
    let sa = p.a.sqrt();
    let gap = k - sa * p.b;
    p.rho * k / (sa * (gap * gap + p.c + p.f))
}

pub fn thresholds(p: &ModelParams) -> Thresholds {
    Thresholds {
        h_lower: p.rho * p.f / p.loss_at_origin(),
        h_upper: p.rho * p.f / (p.c + p.f),
        m0: m0(p),
    }
}

/// Right-hand side of the deterministic skeleton.
pub fn skeleton_rhs(s: State, p: &ModelParams) -> [f64; 2] {
    [
        p.rho * s.v - (gamma(s.v, p) + p.f) * s.u,
        p.f * s.u - p.h * s.v,
    ]
}

/// Jacobian of the skeleton, `j[row][col]` with rows `(du, dv)` and columns `(u, v)`.
pub fn skeleton_jacobian(s: State, p: &ModelParams) -> [[f64; 2]; 2] {
    [
        [
            -(gamma(s.v, p) + p.f),
            p.rho - 2.0 * p.a * (s.v - p.b) * s.u,
        ],
        [p.f, -p.h],
    ]
}

/// Real parts of the two eigenvalues of a 2x2 matrix, largest first.
pub fn eigen_real_parts(m: &[[f64; 2]; 2]) -> [f64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [tr / 2.0 + r, tr / 2.0 - r]
    } else {
        [tr / 2.0, tr / 2.0]
    }
}

/// Local stability read off the Jacobian's eigenvalues. `None` when the
/// leading real part is within `1e-9` of zero.
pub fn linear_stability(s: State, p: &ModelParams) -> Option<Stability> {
    const ZERO_BAND: f64 = 1e-9;
    let lead = eigen_real_parts(&skeleton_jacobian(s, p))[0];
    if lead.abs() <= ZERO_BAND {
        None
    } else if lead < 0.0 {
        Some(Stability::Stable)
    } else {
        Some(Stability::Unstable)
    }
}

/// Nonnegative stationary points of the skeleton with their tabulated stability.
pub fn stationary_points(p: &ModelParams) -> Result<Vec<StationaryPoint>> {
    if p.h <= 0.0 {
        return Err(Error::Domain(
            "stationary points require h > 0".to_string(),
        ));
    }
    let th = thresholds(p);
    let h = p.h;

    // Open intervals of the stability table; boundaries get no label.
    let below = h < th.h_lower;
    let between = h > th.h_lower && h < th.h_upper;
    let above = h > th.h_upper;
    let label = |cond: bool, s: Stability| if cond { s } else { Stability::NotApplicable };

    let o_stability = if below {
        Stability::Unstable
    } else if between {
        Stability::Stable
    } else if above {
        Stability::GloballyAsymptoticallyStable
    } else {
        Stability::NotApplicable
    };
    let mut points = vec![StationaryPoint {
        label: PointLabel::O,
        state: State::ORIGIN,
        stability: o_stability,
    }];

    if h <= th.h_upper {
        let disc = ((p.rho * p.f - h * (p.c + p.f)) / (p.a * h)).max(0.0);
        let s = disc.sqrt();
        let point = |v: f64| State { u: h / p.f * v, v };
        points.push(StationaryPoint {
            label: PointLabel::Pplus,
            state: point(p.b + s),
            stability: label(below || between, Stability::Stable),
        });
        if h >= th.h_lower {
            points.push(StationaryPoint {
                label: PointLabel::Pminus,
                state: point((p.b - s).max(0.0)),
                stability: label(between, Stability::Unstable),
            });
        }
    }
    Ok(points)
}

/// Drift and diffusion of the stochastic system at `s`.
pub fn vector_field(s: State, p: &ModelParams) -> ([f64; 2], [f64; 2]) {
    (skeleton_rhs(s, p), [0.0, p.sigma * s.v])
}

/// Caller-supplied partial derivatives of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partials {
    pub du: f64,
    pub dv: f64,
    pub dvv: f64,
}

/// The generator `L V` from the partials of `V` at `s`.
pub fn apply_generator(s: State, p: &ModelParams, d: Partials) -> f64 {
    let [du, dv] = skeleton_rhs(s, p);
    0.5 * p.sigma * p.sigma * s.v * s.v * d.dvv + du * d.du + dv * d.dv
}

/// Closed form of `L log(u + kappa v)`.
pub fn generator_log_q(s: State, kappa: f64, p: &ModelParams) -> Result<f64> {
    let w = s.u + kappa * s.v;
    if w == 0.0 {
        return Err(Error::Domain("u + kappa v vanishes".to_string()));
    }
    let lin = ((kappa * p.f - p.c - p.f) * s.u + (p.rho - kappa * p.h) * s.v) / w;
    let noise = p.sigma * p.sigma * kappa * kappa * s.v * s.v / (2.0 * w * w);
    let d = s.v - p.b;
    let curv = p.a * s.u * d * d / w;
    Ok(lin - noise - curv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fig2() -> ModelParams {
        ModelParams::new(5.0, 2.0, 1.0, 2.5, 4.0, 1.0, 0.5).unwrap()
    }

    fn fig7() -> ModelParams {
        ModelParams::new(7.0, 3.0, 4.0, 5.0, 6.0, 2.0, 4.0).unwrap()
    }

    /// Grid supremum of `rho v / (gamma(v) + f)` followed by golden-section polish.
    fn m0_grid(p: &ModelParams) -> f64 {
        let g = |v: f64| p.rho * v / (gamma(v, p) + p.f);
        let hi = p.b + 10.0 * ((p.rho + p.c + p.f) / p.a).sqrt();
        let n = 2_000_000usize;
        let step = hi / n as f64;
        let (mut best_v, mut best) = (step, g(step));
        for i in 1..=n {
            let v = i as f64 * step;
            let y = g(v);
            if y > best {
                best = y;
                best_v = v;
            }
        }
        let (mut lo, mut hi) = ((best_v - step).max(0.0), best_v + step);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - phi * (hi - lo);
            let x2 = lo + phi * (hi - lo);
            if g(x1) < g(x2) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        best.max(g(0.5 * (lo + hi)))
    }

    #[test]
    fn gamma_examples() {
        let p = fig2();
        assert_eq!(gamma(p.b, &p), p.c);
        assert_relative_eq!(gamma(0.0, &p), 4.5);
        let q = fig7();
        assert_eq!(gamma(4.0, &q), 5.0);
    }

    #[test]
    fn m0_examples() {
        assert_relative_eq!(m0(&fig2()), 1.17752, max_relative = 1e-5);
        assert_relative_eq!(m0(&fig7()), 2.68379, max_relative = 1e-5);
        let p = fig2();
        let doubled = ModelParams { rho: 2.0 * p.rho, ..p };
        assert_eq!(m0(&doubled), 2.0 * m0(&p));
    }

    #[test]
    fn m0_matches_grid_oracle() {
        for p in [fig2(), fig7()] {
            let oracle = m0_grid(&p);
            assert_relative_eq!(m0(&p), oracle, max_relative = 1e-6);
        }
    }

    #[test]
    fn threshold_examples() {
        let t = thresholds(&fig2());
        assert_relative_eq!(t.h_lower, 20.0 / 8.5, max_relative = 1e-12);
        assert_relative_eq!(t.h_upper, 20.0 / 6.5, max_relative = 1e-12);
        assert_relative_eq!(thresholds(&fig7()).h_upper, 42.0 / 11.0, max_relative = 1e-12);
        assert!(t.h_lower < t.h_upper && t.m0 > 0.0);
    }

    #[test]
    fn stationary_points_fig2() {
        let pts = stationary_points(&fig2()).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].label, PointLabel::O);
        assert_eq!(pts[0].stability, Stability::Unstable);
        assert_eq!(pts[1].label, PointLabel::Pplus);
        assert_eq!(pts[1].stability, Stability::Stable);
        assert_relative_eq!(pts[1].state.u, 0.899519, max_relative = 1e-6);
        assert_relative_eq!(pts[1].state.v, 3.598076, max_relative = 1e-6);
        for pt in &pts {
            let r = skeleton_rhs(pt.state, &fig2());
            assert!(r[0].abs() < 1e-10 && r[1].abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_points_regimes() {
        let p = fig2();
        let th = thresholds(&p);

        let above = stationary_points(&ModelParams { h: th.h_upper * 1.1, ..p }).unwrap();
        assert_eq!(above.len(), 1);
        assert_eq!(above[0].stability, Stability::GloballyAsymptoticallyStable);

        let at = stationary_points(&ModelParams { h: th.h_upper, ..p }).unwrap();
        assert_eq!(at.len(), 3);
        let plus = at.iter().find(|x| x.label == PointLabel::Pplus).unwrap();
        let minus = at.iter().find(|x| x.label == PointLabel::Pminus).unwrap();
        assert_eq!(plus.state, minus.state);
        assert_relative_eq!(plus.state.v, p.b);
        assert_relative_eq!(plus.state.u, th.h_upper / p.f * p.b);
        assert!(at.iter().all(|x| x.stability == Stability::NotApplicable));

        let mid = stationary_points(&ModelParams { h: 0.5 * (th.h_lower + th.h_upper), ..p }).unwrap();
        assert_eq!(mid.len(), 3);
        for pt in &mid {
            let expected = match pt.label {
                PointLabel::O | PointLabel::Pplus => Stability::Stable,
                PointLabel::Pminus => Stability::Unstable,
            };
            assert_eq!(pt.stability, expected);
        }

        assert!(matches!(
            stationary_points(&ModelParams { h: 0.0, ..p }),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn vector_field_examples() {
        let p = fig2();
        let (d, g) = vector_field(State::ORIGIN, &p);
        assert_eq!(d, [0.0, 0.0]);
        assert_eq!(g, [0.0, 0.0]);
        let (d, g) = vector_field(State { u: 2.0, v: 1.0 }, &p);
        assert_eq!(d, [-8.0, 7.0]);
        assert_eq!(g, [0.0, 0.5]);
    }

    #[test]
    fn generator_examples() {
        let p = fig2();
        let s = State { u: 2.0, v: 1.0 };
        assert_eq!(apply_generator(s, &p, Partials::default()), 0.0);
        let lv = apply_generator(s, &p, Partials { du: 0.0, dv: 1.0, dvv: 0.0 });
        assert_eq!(lv, 7.0);

        let one = State { u: 1.0, v: 1.0 };
        let k = 3.0;
        let w: f64 = 4.0;
        let partials = Partials {
            du: 1.0 / w,
            dv: k / w,
            dvv: -k * k / (w * w),
        };
        assert_relative_eq!(apply_generator(one, &p, partials), 1.8046875, max_relative = 1e-14);
        assert_relative_eq!(generator_log_q(one, k, &p).unwrap(), 1.8046875, max_relative = 1e-14);
    }

    #[test]
    fn generator_log_q_large_u_limit() {
        let p = fig2();
        let (k, v) = (3.0, 2.5);
        let got = generator_log_q(State { u: 1e9, v }, k, &p).unwrap();
        let limit = k * p.f - p.c - p.f - p.a * (v - p.b) * (v - p.b);
        assert!((got - limit).abs() < 1e-6);
        assert!(generator_log_q(State::ORIGIN, k, &p).is_err());
    }

    #[test]
    fn generator_log_q_agrees_with_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = fig2();
        for _ in 0..1000 {
            let s = State {
                u: rng.gen_range(1e-3..20.0),
                v: rng.gen_range(1e-3..20.0),
            };
            let k = rng.gen_range(0.1..10.0);
            let w = s.u + k * s.v;
            let d = Partials {
                du: 1.0 / w,
                dv: k / w,
                dvv: -k * k / (w * w),
            };
            let direct = apply_generator(s, &p, d);
            let closed = generator_log_q(s, k, &p).unwrap();
            assert_relative_eq!(direct, closed, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(matches!(
            ModelParams::new(-1.0, 2.0, 1.0, 2.5, 4.0, 1.0, 0.5),
            Err(Error::InvalidParameter { name: "rho", .. })
        ));
        assert!(ModelParams::new(5.0, 2.0, 1.0, 2.5, 4.0, f64::NAN, 0.5).is_err());
        assert!(ModelParams::new(5.0, 2.0, 1.0, 2.5, 4.0, 0.0, 0.0).is_ok());
        let json = r#"{"rho":5,"a":2,"b":1,"c":2.5,"f":4,"h":1,"sigma":0.5}"#;
        let p: ModelParams = serde_json::from_str(json).unwrap();
        assert_eq!(p, fig2());
        assert!(serde_json::from_str::<ModelParams>(&json.replace("\"a\":2", "\"a\":0")).is_err());
    }

    proptest::proptest! {
        #[test]
        fn gamma_bounded_below(v in 0.0..100.0f64, a in 0.01..10.0f64, b in 0.01..10.0f64, c in 0.01..10.0f64) {
            let p = ModelParams::new(1.0, a, b, c, 1.0, 1.0, 0.0).unwrap();
            proptest::prop_assert!(gamma(v, &p) >= c);
        }
    }
}
