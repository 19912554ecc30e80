//! Chain efficiency measures: lagged autocorrelations, integrated
//! autocorrelation time and rejection rates.

use std::collections::BTreeMap;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::kernels::KernelStats;
use crate::{Error, Result};

/// Autocorrelations at lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfTable {
    values: Vec<f64>,
}

impl AcfTable {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, lag: usize) -> f64 {
        self.values[lag]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().copied().enumerate()
    }
}

fn mean(chain: &[f64]) -> f64 {
    chain.iter().sum::<f64>() / chain.len() as f64
}

// Centered copy of the chain and its sum of squares; errors on constant input.
fn centered(chain: &[f64]) -> Result<(Vec<f64>, f64)> {
    if chain.is_empty() {
        return Err(Error::Input("chain is empty".into()));
    }
    if let Some(v) = chain.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("chain contains non-finite value {v}")));
    }
    let m = mean(chain);
    let dev: Vec<f64> = chain.iter().map(|v| v - m).collect();
    let ss: f64 = dev.iter().map(|d| d * d).sum();
    let scale = chain.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if ss <= chain.len() as f64 * (1e-14 * scale).powi(2) {
        return Err(Error::Degenerate("chain has zero variance".into()));
    }
    Ok((dev, ss))
}

/// Biased autocorrelation estimate
/// `r(k) = Σ_{t<N−k} (v_t − m)(v_{t+k} − m) / Σ_t (v_t − m)²`.
pub fn autocorrelation(chain: &[f64], max_lag: usize) -> Result<AcfTable> {
    if max_lag >= chain.len() {
        return Err(Error::Input(format!(
            "max_lag {max_lag} must be below the chain length {}",
            chain.len()
        )));
    }
    let (dev, ss) = centered(chain)?;
    let mut values = Vec::with_capacity(max_lag + 1);
    values.push(1.0);
    for k in 1..=max_lag {
        let s: f64 = dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum();
        values.push(s / ss);
    }
    Ok(AcfTable { values })
}

// All lags 0..=max_lag of the same estimator, via zero-padded FFT.
fn autocorrelation_fft(dev: &[f64], ss: f64, max_lag: usize) -> Vec<f64> {
    let len = (2 * dev.len()).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = dev
        .iter()
        .map(|&d| Complex::new(d, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let norm = len as f64 * ss;
    let mut out: Vec<f64> = buf[..=max_lag].iter().map(|c| c.re / norm).collect();
    out[0] = 1.0;
    out
}

/// Integrated autocorrelation time `1 + 2 Σ_{k=1}^{K} r(k)`.
///
/// `K` follows the initial positive sequence rule: lags are added in pairs
/// `(2j, 2j+1)` until the first pair whose sum is negative, and never beyond
/// `N/3`. Needs at least 100 samples.
pub fn integrated_autocorr_time(chain: &[f64]) -> Result<f64> {
    if chain.len() < 100 {
        return Err(Error::Input(format!(
            "need at least 100 samples for an autocorrelation time, got {}",
            chain.len()
        )));
    }
    let (dev, ss) = centered(chain)?;
    let cap = chain.len() / 3;
    let r = autocorrelation_fft(&dev, ss, cap);
    let mut sum = 0.0;
    let mut j = 0;
    while 2 * j < cap {
        let pair = r[2 * j] + r[2 * j + 1];
        if pair < 0.0 {
            break;
        }
        sum += pair;
        j += 1;
    }
    // `sum` includes r(0) = 1
    Ok(2.0 * sum - 1.0)
}

/// `1 + 2 Σ_{k=1}^{window} r(k)` with a fixed window.
pub fn windowed_autocorr_time(chain: &[f64], window: usize) -> Result<f64> {
    let acf = autocorrelation(chain, window)?;
    Ok(1.0 + 2.0 * acf.values[1..].iter().sum::<f64>())
}

/// Which counter pair of [`KernelStats`] to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counter {
    Outer,
    Inner,
}

/// `1 − accepts / proposals` for the selected counters.
pub fn rejection_rate(stats: &KernelStats, which: Counter) -> Result<f64> {
    let (proposals, accepts) = match which {
        Counter::Outer => (stats.outer_proposals, stats.outer_accepts),
        Counter::Inner => (stats.inner_proposals, stats.inner_accepts),
    };
    if proposals == 0 {
        return Err(Error::Degenerate(format!("no {which:?} proposals recorded")));
    }
    Ok(1.0 - accepts as f64 / proposals as f64)
}

/// Diagnostics of one scalar chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub length: usize,
    pub mean: f64,
    /// Population variance (divide by N).
    pub variance: f64,
    pub acf: AcfTable,
    /// Initial-positive-sequence autocorrelation time.
    pub iat: f64,
    /// Autocorrelation time summed over the ACF window only.
    pub iat_windowed: f64,
    pub rejection_rates: BTreeMap<String, f64>,
}

impl ChainSummary {
    pub fn new(chain: &[f64], max_lag: usize, rejection_rates: BTreeMap<String, f64>) -> Result<Self> {
        let acf = autocorrelation(chain, max_lag)?;
        let iat = integrated_autocorr_time(chain)?;
        let m = mean(chain);
        let variance = chain.iter().map(|v| (v - m).powi(2)).sum::<f64>() / chain.len() as f64;
        Ok(Self {
            length: chain.len(),
            mean: m,
            variance,
            iat_windowed: 1.0 + 2.0 * acf.values[1..].iter().sum::<f64>(),
            acf,
            iat,
            rejection_rates,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = seeded_rng(seed);
        let innovation_sd = (1.0 - phi * phi).sqrt();
        let mut v: f64 = rng.sample(StandardNormal);
        (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                v = phi * v + innovation_sd * z;
                v
            })
            .collect()
    }

    #[test]
    fn lag_zero_is_one() {
        let acf = autocorrelation(&[1.0, 3.0, 2.0, 5.0, 4.0], 3).unwrap();
        assert_eq!(acf.at(0), 1.0);
        assert_eq!(acf.max_lag(), 3);
    }

    #[test]
    fn small_hand_computed_acf() {
        // mean 2, deviations (−1, 0, 1): ss = 2, lag-1 sum 0, lag-2 sum −1
        let acf = autocorrelation(&[1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(acf.values(), &[1.0, 0.0, -0.5]);
    }

    #[test]
    fn errors() {
        assert!(matches!(autocorrelation(&[2.0; 10], 3), Err(Error::Degenerate(_))));
        assert!(matches!(autocorrelation(&[1.0, 2.0], 2), Err(Error::Input(_))));
        assert!(integrated_autocorr_time(&[1.0, 2.0, 3.0]).is_err());
        assert!(rejection_rate(&KernelStats::default(), Counter::Outer).is_err());
    }

    #[test]
    fn rejection_rate_examples() {
        let s = KernelStats {
            outer_proposals: 100,
            outer_accepts: 0,
            inner_proposals: 100,
            inner_accepts: 100,
        };
        assert_eq!(rejection_rate(&s, Counter::Outer).unwrap(), 1.0);
        assert_eq!(rejection_rate(&s, Counter::Inner).unwrap(), 0.0);
    }

    #[test]
    fn iid_chain() {
        let mut rng = seeded_rng(1);
        let chain: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let acf = autocorrelation(&chain, 30).unwrap();
        for k in 1..=30 {
            assert!(acf.at(k).abs() < 0.02, "lag {k}: {}", acf.at(k));
        }
        let iat = integrated_autocorr_time(&chain).unwrap();
        assert!((iat - 1.0).abs() < 0.1, "iat = {iat}");
    }

    #[test]
    fn fft_matches_direct() {
        let chain = ar1(0.7, 5000, 4);
        let direct = autocorrelation(&chain, 200).unwrap();
        let (dev, ss) = centered(&chain).unwrap();
        let fft = autocorrelation_fft(&dev, ss, 200);
        for k in 0..=200 {
            assert!((direct.at(k) - fft[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn ar1_closed_forms() {
        let chain = ar1(0.8, 1_000_000, 7);
        let acf = autocorrelation(&chain, 10).unwrap();
        for k in 0..=10 {
            assert!((acf.at(k) - 0.8f64.powi(k as i32)).abs() < 0.01, "lag {k}");
        }
        let chain = ar1(0.5, 1_000_000, 8);
        let iat = integrated_autocorr_time(&chain).unwrap();
        assert!((iat - 3.0).abs() < 0.2, "iat = {iat}");
    }

    #[test]
    fn windowed_time_uses_fixed_window() {
        let chain = ar1(0.5, 200_000, 9);
        let w = windowed_autocorr_time(&chain, 30).unwrap();
        assert!((w - 3.0).abs() < 0.2, "w = {w}");
    }

    #[test]
    fn summary_fields() {
        let chain = ar1(0.5, 10_000, 10);
        let mut rates = BTreeMap::new();
        rates.insert("outer".to_string(), 0.4);
        let s = ChainSummary::new(&chain, 30, rates).unwrap();
        assert_eq!(s.length, 10_000);
        assert_eq!(s.acf.max_lag(), 30);
        assert!(s.variance > 0.8 && s.variance < 1.2);
        assert_eq!(s.rejection_rates["outer"], 0.4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn affine_invariance(seed in 0u64..1000, a in 0.01f64..100.0, b in -100.0f64..100.0) {
            let chain = ar1(0.6, 2000, seed);
            let moved: Vec<f64> = chain.iter().map(|v| a * v + b).collect();
            let r1 = autocorrelation(&chain, 30).unwrap();
            let r2 = autocorrelation(&moved, 30).unwrap();
            for k in 0..=30 {
                prop_assert!((r1.at(k) - r2.at(k)).abs() < 1e-10);
            }
            let t1 = integrated_autocorr_time(&chain).unwrap();
            let t2 = integrated_autocorr_time(&moved).unwrap();
            prop_assert!((t1 - t2).abs() < 1e-6);
        }

        #[test]
        fn reversal_invariance(seed in 0u64..1000) {
            let chain = ar1(0.6, 2000, seed);
            let rev: Vec<f64> = chain.iter().rev().copied().collect();
            let r1 = autocorrelation(&chain, 30).unwrap();
            let r2 = autocorrelation(&rev, 30).unwrap();
            for k in 0..=30 {
                prop_assert!((r1.at(k) - r2.at(k)).abs() < 1e-12);
                prop_assert!(r1.at(k).abs() <= 1.0 + 1e-12);
            }
        }
    }
}
