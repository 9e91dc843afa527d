//! Reproducible Wiener increments and compensated reductions.
//!
//! Trajectory `i` of an ensemble with base seed `s` draws from a ChaCha8
//! stream seeded with `s + i`, and step `n` consumes the `n`-th normal
//! variate of that stream. Results therefore do not depend on how the
//! ensemble is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type TrajectoryRng = ChaCha8Rng;

pub fn trajectory_rng(base_seed: u64, index: u64) -> TrajectoryRng {
    ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(index))
}

/// Source of Wiener increments `dW ~ N(0, dt)`.
#[derive(Debug, Clone)]
pub struct Brownian {
    rng: TrajectoryRng,
    sqrt_dt: f64,
}

impl Brownian {
    pub fn new(rng: TrajectoryRng, dt: f64) -> Self {
        Brownian {
            rng,
            sqrt_dt: dt.sqrt(),
        }
    }

    pub fn seeded(base_seed: u64, index: u64, dt: f64) -> Self {
        Self::new(trajectory_rng(base_seed, index), dt)
    }

    pub fn next_increment(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        z * self.sqrt_dt
    }

    pub fn path(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_increment()).collect()
    }
}

/// Wiener increment over one step together with its area
/// `dz = int_t^{t+h} (W(s) - W(t)) ds`, as needed by order-1.5 schemes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WienerIncrement {
    pub dw: f64,
    pub dz: f64,
}

impl Brownian {
    /// Draws `(dw, dz)` from two normals: `dw = h^(1/2) z1`,
    /// `dz = h^(3/2) (z1 + z2 / sqrt 3) / 2`.
    pub fn next_with_area(&mut self) -> WienerIncrement {
        let z1: f64 = StandardNormal.sample(&mut self.rng);
        let z2: f64 = StandardNormal.sample(&mut self.rng);
        let h = self.sqrt_dt * self.sqrt_dt;
        WienerIncrement {
            dw: z1 * self.sqrt_dt,
            dz: 0.5 * h * self.sqrt_dt * (z1 + z2 / 3f64.sqrt()),
        }
    }

    pub fn path_with_area(&mut self, n: usize) -> Vec<WienerIncrement> {
        (0..n).map(|_| self.next_with_area()).collect()
    }
}

/// Pairwise coarsening of increments with areas; `fine_dt` is the step of
/// the input path.
pub fn coarsen_with_area(fine: &[WienerIncrement], fine_dt: f64) -> Vec<WienerIncrement> {
    fine.chunks_exact(2)
        .map(|w| WienerIncrement {
            dw: w[0].dw + w[1].dw,
            dz: w[0].dz + w[1].dz + fine_dt * w[0].dw,
        })
        .collect()
}

/// Sums consecutive pairs, turning a path sampled at `dt` into the same
/// path sampled at `2 dt`. A trailing odd increment is dropped.
pub fn coarsen(fine: &[f64]) -> Vec<f64> {
    fine.chunks_exact(2).map(|w| w[0] + w[1]).collect()
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().value()
}
