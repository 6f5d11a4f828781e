//! Monte Carlo simulation of terminal wealth and losses.
//!
//! Gaussian draws come from a counter-based stream: sample `i` of stream
//! `label` is a pure function of `(seed, label, i)`, so common random
//! numbers are exact across optimizer iterations and chunks can be filled
//! concurrently without changing the output.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lognormal::{drift_vol, normal_quantile};
use crate::types::{LognormalLaw, MarketParams, Portfolio, Validate};

const CHUNK: usize = 1 << 14;

/// Stream labels derived from one master seed.
pub mod stream {
    pub const LOSS: u64 = 0x4c4f5353;
    pub const WEALTH: u64 = 0x5745414c;
    pub const GARCH: u64 = 0x47415243;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Result<Self> {
        if n_paths < 2 {
            return Err(Error::Input(format!("n_paths must be >= 2, got {n_paths}")));
        }
        Ok(Self { n_paths, seed })
    }
}

/// Standard Gaussian stream keyed by `(seed, label)`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianStream {
    seed: u64,
    label: u64,
}

impl GaussianStream {
    pub fn new(seed: u64, label: u64) -> Self {
        Self { seed, label }
    }

    fn rng_at(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.label);
        // one u64 = two 32-bit words per sample
        rng.set_word_pos(2 * index as u128);
        rng
    }

    /// Uniform on the open interval (0, 1).
    fn to_unit(x: u64) -> f64 {
        ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&self, index: usize) -> f64 {
        Self::to_unit(self.rng_at(index).next_u64())
    }

    pub fn gaussian(&self, index: usize) -> f64 {
        normal_quantile(self.uniform(index)).expect("uniform draw lies in (0,1)")
    }

    /// Samples `start..start + out.len()`.
    pub fn fill(&self, start: usize, out: &mut [f64]) {
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let mut rng = self.rng_at(start + c * CHUNK);
            for v in chunk.iter_mut() {
                let u = Self::to_unit(rng.next_u64());
                *v = normal_quantile(u).expect("uniform draw lies in (0,1)");
            }
        });
    }

    pub fn take(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.fill(0, &mut out);
        out
    }
}

/// Terminal wealth `x0 exp(a + sqrt(s2) xi_i)` of a constant portfolio.
pub fn simulate_terminal_wealth(
    market: &MarketParams,
    portfolio: &Portfolio,
    x0: f64,
    mc: &McConfig,
) -> Result<Vec<f64>> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::Domain {
            what: "x0",
            value: x0,
            domain: "(0, inf)",
        });
    }
    let dv = drift_vol(market, portfolio)?;
    let s = dv.s2.sqrt();
    let mut out = GaussianStream::new(mc.seed, stream::WEALTH).take(mc.n_paths);
    out.par_iter_mut()
        .for_each(|v| *v = x0 * (dv.a + s * *v).exp());
    Ok(out)
}

/// i.i.d. draws from `loss`, on a stream independent of the wealth stream.
pub fn simulate_loss(loss: &LognormalLaw, mc: &McConfig) -> Result<Vec<f64>> {
    loss.check()?;
    let s = loss.sd();
    let mut out = GaussianStream::new(mc.seed, stream::LOSS).take(mc.n_paths);
    out.par_iter_mut().for_each(|v| *v = (loss.m + s * *v).exp());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_depends_only_on_index() {
        let g = GaussianStream::new(7, stream::WEALTH);
        let bulk = g.take(40_000);
        for &i in &[0usize, 1, 16_383, 16_384, 39_999] {
            assert_eq!(bulk[i].to_bits(), g.gaussian(i).to_bits());
        }
        let mut tail = vec![0.0; 100];
        g.fill(20_000, &mut tail);
        assert_eq!(&bulk[20_000..20_100], &tail[..]);
    }

    #[test]
    fn streams_differ() {
        let a = GaussianStream::new(1, stream::LOSS).take(8);
        let b = GaussianStream::new(1, stream::WEALTH).take(8);
        assert_ne!(a, b);
    }

    #[test]
    fn bank_only_wealth_is_deterministic() {
        let m = MarketParams::two_stock_example();
        let mc = McConfig::new(1000, 3).unwrap();
        let w = simulate_terminal_wealth(&m, &Portfolio::zeros(2), 1.0, &mc).unwrap();
        assert!(w.iter().all(|v| *v == 0.01f64.exp()));
    }

    #[test]
    fn point_mass_loss() {
        let mc = McConfig::new(100, 3).unwrap();
        let x = simulate_loss(&LognormalLaw::new(0.0, 0.0).unwrap(), &mc).unwrap();
        assert!(x.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(McConfig::new(1, 0).is_err());
        let m = MarketParams::two_stock_example();
        let mc = McConfig::new(10, 0).unwrap();
        assert!(simulate_terminal_wealth(&m, &Portfolio::zeros(2), 0.0, &mc).is_err());
    }
}
