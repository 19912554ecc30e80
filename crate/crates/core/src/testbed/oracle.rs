//! Quadrature-based reference values for the test problems, and a
//! Kolmogorov–Smirnov test to compare chains against them.
//!
//! Nothing here touches the samplers; these are the independent side of
//! every statistical check.

use crate::testbed::{test1_conditional_sd, test1_energy, test1_marginal_energy, test2_energy};

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals.max(2).next_multiple_of(2);
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m)
        .map(|k| {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            w * f(a + k as f64 * h)
        })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// Moments of `y | x` under the first test energy: normalizing constant of
/// `exp(−E(x, y))` over `y`, mean and standard deviation.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalMoments {
    pub mass: f64,
    pub mean: f64,
    pub sd: f64,
}

/// `∫ exp(−E(x, y)) dy` and the moments of `y`, by quadrature over
/// `sin x ± 12` conditional sds.
pub fn test1_conditional_moments(x: f64) -> ConditionalMoments {
    let c = x.sin();
    let half = 12.0 * test1_conditional_sd(x);
    let (a, b) = (c - half, c + half);
    let n = 4000;
    let w = |y: f64| (-test1_energy(x, y)).exp();
    let mass = simpson(w, a, b, n);
    let mean = simpson(|y| y * w(y), a, b, n) / mass;
    let var = simpson(|y| (y - mean).powi(2) * w(y), a, b, n) / mass;
    ConditionalMoments {
        mass,
        mean,
        sd: var.sqrt(),
    }
}

/// `∫ exp(−E₂(x, y, z)) dz` for the second test energy.
pub fn test2_z_mass(x: f64, y: f64) -> f64 {
    simpson(|z| (-test2_energy(x, (y, z))).exp(), y - 3.0, y + 3.0, 4000)
}

fn marginal_density(x: f64) -> f64 {
    (-test1_marginal_energy(x)).exp()
}

/// Tabulated CDF of the slow-variable marginal `∝ exp(−x² − ln(1+x²))`.
#[derive(Debug, Clone)]
pub struct MarginalCdf {
    lo: f64,
    h: f64,
    cumulative: Vec<f64>,
    total: f64,
}

impl MarginalCdf {
    pub fn new() -> Self {
        let (lo, hi, cells) = (-8.0, 8.0, 16_000usize);
        let h = (hi - lo) / cells as f64;
        let mut cumulative = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 0..cells {
            let a = lo + k as f64 * h;
            acc += simpson(marginal_density, a, a + h, 2);
            cumulative.push(acc);
        }
        Self {
            lo,
            h,
            total: acc,
            cumulative,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        let pos = (x - self.lo) / self.h;
        let k = pos.floor() as usize;
        if k >= self.cumulative.len() - 1 {
            return 1.0;
        }
        let a = self.lo + k as f64 * self.h;
        (self.cumulative[k] + simpson(marginal_density, a, x, 2)) / self.total
    }

    /// Normalizing constant `∫ exp(−x² − ln(1+x²)) dx`.
    pub fn normalizer(&self) -> f64 {
        self.total
    }

    /// Variance of the marginal, by quadrature.
    pub fn variance(&self) -> f64 {
        simpson(|x| x * x * marginal_density(x), -8.0, 8.0, 16_000) / self.total
    }
}

impl Default for MarginalCdf {
    fn default() -> Self {
        Self::new()
    }
}

/// Result of a one-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample two-sided KS test of `sample` against `cdf`, with the
/// asymptotic Kolmogorov distribution (Stephens' small-sample correction).
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    KsResult {
        statistic,
        p_value: kolmogorov_survival(lambda),
    }
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 4);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn marginal_energy_matches_integrated_joint() {
        // −ln ∫ exp(−E) dy − (x² + ln(1+x²)) is a constant
        let offsets: Vec<f64> = (0..20)
            .map(|k| -3.0 + 0.3 * k as f64)
            .map(|x| -test1_conditional_moments(x).mass.ln() - test1_marginal_energy(x))
            .collect();
        let spread = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - offsets.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-6, "spread = {spread}");
    }

    #[test]
    fn conditional_law() {
        for x in [-2.0, -0.7, 0.0, 0.4, 1.0, 2.5] {
            let m = test1_conditional_moments(x);
            assert!((m.mean - f64::sin(x)).abs() < 1e-8, "x={x}");
            assert!((m.sd - test1_conditional_sd(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn test2_marginalizes_to_test1() {
        let pts = [(0.0, 0.0), (0.5, 0.4), (-1.2, -0.9), (2.0, 1.0), (1.0, 0.8)];
        let ratios: Vec<f64> = pts
            .iter()
            .map(|&(x, y)| test2_z_mass(x, y) / (-test1_energy(x, y)).exp())
            .collect();
        let expected = (std::f64::consts::PI / 12.5).sqrt();
        for r in ratios {
            assert!((r / expected - 1.0).abs() < 1e-9, "{r} vs {expected}");
        }
    }

    #[test]
    fn cdf_is_symmetric_and_monotone() {
        let cdf = MarginalCdf::new();
        assert!((cdf.cdf(0.0) - 0.5).abs() < 1e-12);
        for x in [0.1, 0.5, 1.3, 2.0] {
            assert!((cdf.cdf(x) + cdf.cdf(-x) - 1.0).abs() < 1e-12);
        }
        let mut prev = 0.0;
        for k in -100..=100 {
            let c = cdf.cdf(k as f64 * 0.05);
            assert!(c >= prev);
            prev = c;
        }
        assert_eq!(cdf.cdf(-20.0), 0.0);
        assert_eq!(cdf.cdf(20.0), 1.0);
    }

    #[test]
    fn marginal_normalizer_closed_form() {
        // ∫ e^{−x²}/(1+x²) dx = π e erfc(1)
        let erfc1 = 0.157_299_207_050_285_13;
        let exact = std::f64::consts::PI * std::f64::consts::E * erfc1;
        assert!((MarginalCdf::new().normalizer() - exact).abs() < 1e-10);
    }

    #[test]
    fn kolmogorov_tail_values() {
        // tabulated critical values of the Kolmogorov distribution
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }
}
