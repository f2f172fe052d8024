//! Two-dimensional systems driven by a single Brownian motion,
//! `dx = a(x) dt + b(x) dw`, with the derivatives higher-order schemes need.

use crate::model::{gamma, ModelParams};

pub type Vec2 = [f64; 2];
/// Row-major; `m[k][l] = d(component k) / d(x_l)`.
pub type Mat2 = [[f64; 2]; 2];

pub fn mat_vec(m: &Mat2, x: Vec2) -> Vec2 {
    [
        m[0][0] * x[0] + m[0][1] * x[1],
        m[1][0] * x[0] + m[1][1] * x[1],
    ]
}

pub trait SdeSystem: Sync {
    fn drift(&self, x: Vec2) -> Vec2;
    fn diffusion(&self, x: Vec2) -> Vec2;
    fn drift_jacobian(&self, x: Vec2) -> Mat2;
    fn diffusion_jacobian(&self, x: Vec2) -> Mat2;
    /// `sum_{j,l} b^j b^l d_j d_l a^k` for each component `k`.
    fn drift_hessian_along_noise(&self, x: Vec2) -> Vec2;
    /// `sum_{j,l} b^j b^l d_j d_l b^k` for each component `k`.
    fn diffusion_hessian_along_noise(&self, x: Vec2) -> Vec2;
}

/// The forest model with state `(u, v)`.
#[derive(Debug, Clone, Copy)]
pub struct ForestSystem {
    pub params: ModelParams,
}

impl SdeSystem for ForestSystem {
    fn drift(&self, x: Vec2) -> Vec2 {
        let p = &self.params;
        let [u, v] = x;
        [p.rho * v - (gamma(v, p) + p.f) * u, p.f * u - p.h * v]
    }

    fn diffusion(&self, x: Vec2) -> Vec2 {
        [0.0, self.params.sigma * x[1]]
    }

    fn drift_jacobian(&self, x: Vec2) -> Mat2 {
        let p = &self.params;
        let [u, v] = x;
        [
            [-(gamma(v, p) + p.f), p.rho - 2.0 * p.a * (v - p.b) * u],
            [p.f, -p.h],
        ]
    }

    fn diffusion_jacobian(&self, _x: Vec2) -> Mat2 {
        [[0.0, 0.0], [0.0, self.params.sigma]]
    }

    fn drift_hessian_along_noise(&self, x: Vec2) -> Vec2 {
        // Only d_vv of the young-tree drift survives: -2 a u.
        let p = &self.params;
        let sv = p.sigma * x[1];
        [-2.0 * p.a * x[0] * sv * sv, 0.0]
    }

    fn diffusion_hessian_along_noise(&self, _x: Vec2) -> Vec2 {
        [0.0, 0.0]
    }
}

/// `dx = (inflow - decay x) dt + alpha x dw`, carried in the second
/// component; the first component stays at zero.
#[derive(Debug, Clone, Copy)]
pub struct LinearMultiplicative {
    pub decay: f64,
    pub inflow: f64,
    pub alpha: f64,
}

impl SdeSystem for LinearMultiplicative {
    fn drift(&self, x: Vec2) -> Vec2 {
        [0.0, self.inflow - self.decay * x[1]]
    }

    fn diffusion(&self, x: Vec2) -> Vec2 {
        [0.0, self.alpha * x[1]]
    }

    fn drift_jacobian(&self, _x: Vec2) -> Mat2 {
        [[0.0, 0.0], [0.0, -self.decay]]
    }

    fn diffusion_jacobian(&self, _x: Vec2) -> Mat2 {
        [[0.0, 0.0], [0.0, self.alpha]]
    }

    fn drift_hessian_along_noise(&self, _x: Vec2) -> Vec2 {
        [0.0, 0.0]
    }

    fn diffusion_hessian_along_noise(&self, _x: Vec2) -> Vec2 {
        [0.0, 0.0]
    }
}
