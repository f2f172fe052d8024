//! One-step integration schemes behind a common trait, looked up by name.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::noise::NoisePair;
use super::system::{mat_vec, SdeSystem, Vec2};
use crate::error::{Error, Result};

pub trait Scheme: Send + Sync {
    /// Registry key.
    fn name(&self) -> &'static str;

    /// Strong order of convergence for the systems this crate integrates.
    fn strong_order(&self) -> f64;

    fn step(&self, sys: &dyn SdeSystem, x: Vec2, dt: f64, noise: NoisePair) -> Vec2;
}

pub struct EulerMaruyama;

impl Scheme for EulerMaruyama {
    fn name(&self) -> &'static str {
        "euler-maruyama"
    }

    fn strong_order(&self) -> f64 {
        0.5
    }

    fn step(&self, sys: &dyn SdeSystem, x: Vec2, dt: f64, noise: NoisePair) -> Vec2 {
        let a = sys.drift(x);
        let b = sys.diffusion(x);
        [
            x[0] + a[0] * dt + b[0] * noise.dw,
            x[1] + a[1] * dt + b[1] * noise.dw,
        ]
    }
}

pub struct Milstein;

impl Scheme for Milstein {
    fn name(&self) -> &'static str {
        "milstein"
    }

    fn strong_order(&self) -> f64 {
        1.0
    }

    fn step(&self, sys: &dyn SdeSystem, x: Vec2, dt: f64, noise: NoisePair) -> Vec2 {
        let a = sys.drift(x);
        let b = sys.diffusion(x);
        let l1b = mat_vec(&sys.diffusion_jacobian(x), b);
        let ito = 0.5 * (noise.dw * noise.dw - dt);
        [
            x[0] + a[0] * dt + b[0] * noise.dw + l1b[0] * ito,
            x[1] + a[1] * dt + b[1] * noise.dw + l1b[1] * ito,
        ]
    }
}

/// Explicit strong order-1.5 Taylor scheme for scalar noise:
///
/// ```text
/// x' = x + a dt + b dW + 1/2 L1b (dW^2 - dt) + L1a dZ + L0b (dW dt - dZ)
///        + 1/2 L0a dt^2 + 1/2 L1L1b (dW^2/3 - dt) dW
/// ```
///
/// with `L0 = a.grad + 1/2 b b : hess` and `L1 = b.grad`.
pub struct StrongTaylor15;

impl Scheme for StrongTaylor15 {
    fn name(&self) -> &'static str {
        "strong-taylor-1.5"
    }

    fn strong_order(&self) -> f64 {
        1.5
    }

    fn step(&self, sys: &dyn SdeSystem, x: Vec2, dt: f64, noise: NoisePair) -> Vec2 {
        let a = sys.drift(x);
        let b = sys.diffusion(x);
        let ja = sys.drift_jacobian(x);
        let jb = sys.diffusion_jacobian(x);
        let sa = sys.drift_hessian_along_noise(x);
        let sb = sys.diffusion_hessian_along_noise(x);

        let l1a = mat_vec(&ja, b);
        let l1b = mat_vec(&jb, b);
        let ja_a = mat_vec(&ja, a);
        let jb_a = mat_vec(&jb, a);
        let jb_l1b = mat_vec(&jb, l1b);

        let NoisePair { dw, dz } = noise;
        let ito = 0.5 * (dw * dw - dt);
        let triple = 0.5 * (dw * dw / 3.0 - dt) * dw;
        let mixed = dw * dt - dz;

        let mut out = x;
        for k in 0..2 {
            let l0a = ja_a[k] + 0.5 * sa[k];
            let l0b = jb_a[k] + 0.5 * sb[k];
            let l1l1b = jb_l1b[k] + sb[k];
            out[k] += a[k] * dt
                + b[k] * dw
                + l1b[k] * ito
                + l1a[k] * dz
                + l0b * mixed
                + 0.5 * l0a * dt * dt
                + l1l1b * triple;
        }
        out
    }
}

/// Classical Runge–Kutta on the drift alone; the noise is ignored.
pub struct DeterministicRk4;

impl Scheme for DeterministicRk4 {
    fn name(&self) -> &'static str {
        "rk4"
    }

    fn strong_order(&self) -> f64 {
        4.0
    }

    fn step(&self, sys: &dyn SdeSystem, x: Vec2, dt: f64, _noise: NoisePair) -> Vec2 {
        let shift = |x: Vec2, k: Vec2, s: f64| [x[0] + s * k[0], x[1] + s * k[1]];
        let k1 = sys.drift(x);
        let k2 = sys.drift(shift(x, k1, dt / 2.0));
        let k3 = sys.drift(shift(x, k2, dt / 2.0));
        let k4 = sys.drift(shift(x, k3, dt));
        [
            x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }
}

/// Name-keyed collection of schemes.
#[derive(Default)]
pub struct SchemeRegistry {
    schemes: BTreeMap<&'static str, Box<dyn Scheme>>,
}

impl SchemeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_builtin() -> Self {
        let mut r = Self::new();
        r.register(Box::new(EulerMaruyama));
        r.register(Box::new(Milstein));
        r.register(Box::new(StrongTaylor15));
        r.register(Box::new(DeterministicRk4));
        r
    }

    /// Adds a scheme, replacing any previous one with the same name.
    pub fn register(&mut self, scheme: Box<dyn Scheme>) {
        self.schemes.insert(scheme.name(), scheme);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Scheme> {
        self.schemes.get(name).map(|s| s.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.schemes.keys().copied()
    }
}

/// The process-wide registry of built-in schemes.
pub fn registry() -> &'static SchemeRegistry {
    static REGISTRY: OnceLock<SchemeRegistry> = OnceLock::new();
    REGISTRY.get_or_init(SchemeRegistry::with_builtin)
}

/// Built-in scheme selector as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "euler-maruyama")]
    EulerMaruyama,
    #[serde(rename = "milstein")]
    Milstein,
    #[serde(rename = "strong-taylor-1.5")]
    StrongTaylor15,
    #[serde(rename = "rk4")]
    DeterministicRK4,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::EulerMaruyama,
        SchemeKind::Milstein,
        SchemeKind::StrongTaylor15,
        SchemeKind::DeterministicRK4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::EulerMaruyama => "euler-maruyama",
            SchemeKind::Milstein => "milstein",
            SchemeKind::StrongTaylor15 => "strong-taylor-1.5",
            SchemeKind::DeterministicRK4 => "rk4",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownScheme(name.to_string()))
    }

    pub fn scheme(self) -> &'static dyn Scheme {
        registry()
            .get(self.name())
            .expect("built-in schemes are always registered")
    }
}
