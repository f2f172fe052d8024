//! Brownian increments and their first iterated integral.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

/// Increments of one step of length `dt`:
/// `dw ~ N(0, dt)` and `dz = int_t^{t+dt} (w_s - w_t) ds ~ N(0, dt^3/3)`,
/// with `Cov(dw, dz) = dt^2 / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoisePair {
    pub dw: f64,
    pub dz: f64,
}

impl NoisePair {
    /// Joins the increments of two consecutive steps; `next_dt` is the length
    /// of the second one.
    pub fn concat(self, next: NoisePair, next_dt: f64) -> NoisePair {
        NoisePair {
            dw: self.dw + next.dw,
            dz: self.dz + next.dz + self.dw * next_dt,
        }
    }

    /// Collapses consecutive increments of equal length `dt` into one.
    pub fn aggregate(pairs: &[NoisePair], dt: f64) -> NoisePair {
        pairs
            .iter()
            .fold(NoisePair::default(), |acc, &p| acc.concat(p, dt))
    }
}

pub trait NoiseSource {
    fn next_pair(&mut self, dt: f64) -> NoisePair;
}

/// Identifies the random stream a path was driven by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub path_index: u64,
}

/// Reproducible per-path stream. Paths with different indices draw from
/// disjoint ChaCha streams under the same key.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    record: SeedRecord,
}

impl NoiseStream {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(path_index);
        NoiseStream {
            rng,
            record: SeedRecord {
                master_seed,
                path_index,
            },
        }
    }

    pub fn record(&self) -> SeedRecord {
        self.record
    }
}

pub fn make_noise_stream(master_seed: u64, path_index: u64) -> NoiseStream {
    NoiseStream::new(master_seed, path_index)
}

impl NoiseSource for NoiseStream {
    fn next_pair(&mut self, dt: f64) -> NoisePair {
        let g1: f64 = StandardNormal.sample(&mut self.rng);
        let g2: f64 = StandardNormal.sample(&mut self.rng);
        let dw = dt.sqrt() * g1;
        NoisePair {
            dw,
            dz: 0.5 * dt * (dw + (dt / 3.0).sqrt() * g2),
        }
    }
}

/// Replays pre-drawn increments, ignoring the requested `dt`.
#[derive(Debug, Clone)]
pub struct ReplayNoise {
    pairs: Vec<NoisePair>,
    next: usize,
}

impl ReplayNoise {
    pub fn new(pairs: Vec<NoisePair>) -> Self {
        ReplayNoise { pairs, next: 0 }
    }

    /// Merges consecutive groups of `factor` increments of length `fine_dt`.
    pub fn coarsened(fine: &[NoisePair], fine_dt: f64, factor: usize) -> Self {
        ReplayNoise::new(
            fine.chunks(factor)
                .map(|c| NoisePair::aggregate(c, fine_dt))
                .collect(),
        )
    }

    /// Sum of all increments, i.e. `w_T - w_0`.
    pub fn total_dw(&self) -> f64 {
        self.pairs.iter().map(|p| p.dw).sum()
    }
}

impl NoiseSource for ReplayNoise {
    fn next_pair(&mut self, _dt: f64) -> NoisePair {
        let p = self
            .pairs
            .get(self.next)
            .copied()
            .expect("replayed noise exhausted");
        self.next += 1;
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_reproducible() {
        let mut a = make_noise_stream(42, 7);
        let mut b = make_noise_stream(42, 7);
        let mut c = make_noise_stream(42, 8);
        let mut differs = false;
        for _ in 0..1000 {
            let (x, y, z) = (a.next_pair(0.01), b.next_pair(0.01), c.next_pair(0.01));
            assert_eq!(x.dw.to_bits(), y.dw.to_bits());
            assert_eq!(x.dz.to_bits(), y.dz.to_bits());
            differs |= x != z;
        }
        assert!(differs);
    }

    #[test]
    fn moments_match() {
        let dt = 0.01;
        let n = 1_000_000;
        let mut s = make_noise_stream(1, 0);
        let (mut sw, mut sz, mut sww, mut szz, mut swz) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = s.next_pair(dt);
            sw += p.dw;
            sz += p.dz;
            sww += p.dw * p.dw;
            szz += p.dz * p.dz;
            swz += p.dw * p.dz;
        }
        let nf = n as f64;
        let var_w = sww / nf - (sw / nf).powi(2);
        let var_z = szz / nf - (sz / nf).powi(2);
        let cov = swz / nf - sw * sz / (nf * nf);
        assert!((var_w / dt - 1.0).abs() < 0.01, "{var_w}");
        assert!((var_z / (dt * dt * dt / 3.0) - 1.0).abs() < 0.01, "{var_z}");
        assert!((cov / (dt * dt / 2.0) - 1.0).abs() < 0.02, "{cov}");
    }

    #[test]
    fn aggregation_preserves_moments() {
        // Merging four steps of dt must look like one step of 4 dt.
        let dt = 0.01;
        let big = 4.0 * dt;
        let n = 200_000;
        let mut s = make_noise_stream(2, 0);
        let (mut szz, mut swz) = (0.0, 0.0);
        for _ in 0..n {
            let fine: Vec<_> = (0..4).map(|_| s.next_pair(dt)).collect();
            let p = NoisePair::aggregate(&fine, dt);
            szz += p.dz * p.dz;
            swz += p.dw * p.dz;
        }
        let nf = n as f64;
        assert!((szz / nf / (big * big * big / 3.0) - 1.0).abs() < 0.02);
        assert!((swz / nf / (big * big / 2.0) - 1.0).abs() < 0.02);
    }

    #[test]
    fn replay_coarsens_exactly() {
        let mut s = make_noise_stream(3, 0);
        let fine: Vec<_> = (0..8).map(|_| s.next_pair(0.1)).collect();
        let r = ReplayNoise::coarsened(&fine, 0.1, 4);
        let total: f64 = fine.iter().map(|p| p.dw).sum();
        assert!((r.total_dw() - total).abs() < 1e-15);
        let whole = NoisePair::aggregate(&fine, 0.1);
        let halves = ReplayNoise::coarsened(&fine, 0.1, 4).pairs;
        let joined = halves[0].concat(halves[1], 0.4);
        assert!((whole.dz - joined.dz).abs() < 1e-15);
    }
}
