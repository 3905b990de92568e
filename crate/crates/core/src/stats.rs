//! Distribution summaries used by every analysis: binned densities,
//! regression power-law fits, transaction-time returns and moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::Trade;

/// Binned empirical density. `edges` has one more entry than `counts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    /// Representative abscissa of each bin (geometric for log bins).
    pub centers: Vec<f64>,
    pub counts: Vec<u64>,
    /// `count / (total * width)`.
    pub density: Vec<f64>,
    pub total: u64,
}

impl Histogram {
    pub fn empty() -> Self {
        Self {
            edges: Vec::new(),
            centers: Vec::new(),
            counts: Vec::new(),
            density: Vec::new(),
            total: 0,
        }
    }

    fn from_counts(edges: Vec<f64>, centers: Vec<f64>, counts: Vec<u64>) -> Self {
        let total: u64 = counts.iter().sum();
        let density = counts
            .iter()
            .zip(edges.windows(2))
            .map(|(&c, w)| {
                if total == 0 {
                    0.0
                } else {
                    c as f64 / (total as f64 * (w[1] - w[0]))
                }
            })
            .collect();
        Self {
            edges,
            centers,
            counts,
            density,
            total,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges.windows(2).map(|w| w[1] - w[0])
    }

    /// Center of the most populated bin (first one on ties).
    pub fn mode(&self) -> Option<f64> {
        let mut best: Option<(u64, usize)> = None;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > 0 && best.is_none_or(|(bc, _)| c > bc) {
                best = Some((c, i));
            }
        }
        best.map(|(_, i)| self.centers[i])
    }
}

/// Equal-width bins spanning `[min, max]` of the data.
pub fn linear_histogram(values: &[f64], n_bins: usize) -> Histogram {
    if values.is_empty() || n_bins == 0 {
        return Histogram::empty();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[i] += 1;
    }
    Histogram::from_counts(edges, centers, counts)
}

/// Geometric bins `min * 10^(k / bins_per_decade)` covering `[min, max]`.
pub fn log_bin_histogram(values: &[f64], bins_per_decade: usize) -> Result<Histogram> {
    if bins_per_decade == 0 {
        return Err(Error::Domain("bins_per_decade must be at least 1".into()));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "log binning needs positive values, got {bad}"
        )));
    }
    if values.is_empty() {
        return Ok(Histogram::empty());
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = 1.0 / bins_per_decade as f64;
    let mut edges = vec![lo];
    loop {
        let k = edges.len() as f64;
        let e = lo * 10f64.powf(k * step);
        edges.push(e);
        if e > hi {
            break;
        }
    }
    let n_bins = edges.len() - 1;
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let guess = ((v / lo).log10() / step).floor().max(0.0) as usize;
        let mut i = guess.min(n_bins - 1);
        while i > 0 && v < edges[i] {
            i -= 1;
        }
        while i + 1 < n_bins && v >= edges[i + 1] {
            i += 1;
        }
        counts[i] += 1;
    }
    let centers = edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    Ok(Histogram::from_counts(edges, centers, counts))
}

/// Log bins for positive integer data. Bin boundaries are snapped to
/// integers so every bin holds at least one integer and its width is the
/// number of integers it covers; densities are then per-integer
/// probabilities.
pub fn log_bin_histogram_discrete(values: &[u64], bins_per_decade: usize) -> Result<Histogram> {
    if bins_per_decade == 0 {
        return Err(Error::Domain("bins_per_decade must be at least 1".into()));
    }
    if values.contains(&0) {
        return Err(Error::Domain(
            "log binning needs positive values, got 0".into(),
        ));
    }
    if values.is_empty() {
        return Ok(Histogram::empty());
    }
    let min = *values.iter().min().unwrap();
    let max = *values.iter().max().unwrap();
    // integer lower bounds of consecutive log bins anchored at 1
    let mut starts: Vec<u64> = Vec::new();
    let mut k = 0u32;
    loop {
        let s = 10f64.powf(k as f64 / bins_per_decade as f64).ceil() as u64;
        k += 1;
        if starts.last().is_some_and(|&l| l >= s) {
            continue;
        }
        starts.push(s);
        if s > max {
            break;
        }
    }
    let first = starts.partition_point(|&s| s <= min) - 1;
    let last = starts.partition_point(|&s| s <= max) - 1;
    let starts = &starts[first..=last + 1];
    let edges: Vec<f64> = starts.iter().map(|&s| s as f64 - 0.5).collect();
    let centers = starts
        .windows(2)
        .map(|w| ((w[0] as f64) * ((w[1] - 1) as f64)).sqrt())
        .collect();
    let mut counts = vec![0u64; starts.len() - 1];
    for &v in values {
        let i = starts.partition_point(|&s| s <= v) - 1;
        counts[i] += 1;
    }
    Ok(Histogram::from_counts(edges, centers, counts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub fit_range: [f64; 2],
    pub n_bins: usize,
}

/// Least squares of log10(density) on log10(bin center) over the nonempty
/// bins whose centers fall inside `range` (all bins when `None`).
pub fn fit_power_law(hist: &Histogram, range: Option<[f64; 2]>) -> Result<PowerLawFit> {
    let [lo, hi] = range.unwrap_or([f64::NEG_INFINITY, f64::INFINITY]);
    let points: Vec<(f64, f64)> = hist
        .centers
        .iter()
        .zip(&hist.counts)
        .zip(&hist.density)
        .filter(|((&c, &n), _)| n > 0 && c >= lo && c <= hi)
        .map(|((&c, _), &d)| (c.log10(), d.log10()))
        .collect();
    if points.len() < 3 {
        return Err(Error::Fit {
            found: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit { found: 1 });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = if points.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    let xs = points.iter().map(|p| 10f64.powf(p.0));
    let x_lo = xs.clone().fold(f64::INFINITY, f64::min);
    let x_hi = xs.fold(f64::NEG_INFINITY, f64::max);
    Ok(PowerLawFit {
        exponent: slope,
        stderr,
        r_squared,
        fit_range: [x_lo, x_hi],
        n_bins: points.len(),
    })
}

/// Monte Carlo steps between consecutive trades.
pub fn transaction_intervals(trades: &[Trade]) -> Vec<u64> {
    trades.windows(2).map(|w| w[1].step - w[0].step).collect()
}

/// Lag-`tau` log-price differences in transaction time plus their
/// standardized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub tau: usize,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub mu_tau: f64,
    pub sigma_tau: f64,
}

impl ReturnSeries {
    pub fn from_prices(prices: &[f64], tau: usize) -> Result<Self> {
        let raw = log_returns(prices, tau)?;
        let (normalized, mu_tau, sigma_tau) = normalize_returns(&raw)?;
        Ok(Self {
            tau,
            raw,
            normalized,
            mu_tau,
            sigma_tau,
        })
    }
}

/// `ln p[i + tau] - ln p[i]` for every admissible `i`.
pub fn log_returns(prices: &[f64], tau: usize) -> Result<Vec<f64>> {
    if let Some(bad) = prices.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::Domain(format!(
            "log returns need positive prices, got {bad}"
        )));
    }
    if tau == 0 || prices.len() <= tau {
        return Err(Error::InsufficientData(format!(
            "{} prices cannot give lag-{tau} returns",
            prices.len()
        )));
    }
    let logs: Vec<f64> = prices.iter().map(|p| p.ln()).collect();
    Ok(logs.windows(tau + 1).map(|w| w[tau] - w[0]).collect())
}

/// Population mean and standard deviation.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Standardizes with the population mean and standard deviation.
pub fn normalize_returns(raw: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    if raw.is_empty() {
        return Err(Error::InsufficientData("empty return series".into()));
    }
    let (mu, sigma) = mean_std(raw);
    if !(sigma > 0.0) {
        return Err(Error::Degenerate("return series has zero variance".into()));
    }
    let mut normalized: Vec<f64> = raw.iter().map(|g| (g - mu) / sigma).collect();
    // a second pass removes the rounding left by the first
    let (m2, s2) = mean_std(&normalized);
    if s2 > 0.0 {
        for g in &mut normalized {
            *g = (*g - m2) / s2;
        }
    }
    Ok((normalized, mu, sigma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianFit {
    pub fn density(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    pub fn curve(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&x| self.density(x)).collect()
    }
}

/// Maximum-likelihood normal fit.
pub fn gaussian_fit(samples: &[f64]) -> Result<GaussianFit> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(
            "gaussian fit needs at least 2 samples".into(),
        ));
    }
    let (mu, sigma) = mean_std(samples);
    if !(sigma > 0.0) {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    Ok(GaussianFit { mu, sigma })
}

fn central_moments(samples: &[f64]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

/// Fourth standardized moment minus 3.
pub fn excess_kurtosis(samples: &[f64]) -> Result<f64> {
    if samples.len() < 4 {
        return Err(Error::InsufficientData(
            "kurtosis needs at least 4 samples".into(),
        ));
    }
    let (m2, _, m4) = central_moments(samples);
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

pub fn skewness(samples: &[f64]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(
            "skewness needs at least 3 samples".into(),
        ));
    }
    let (m2, m3, _) = central_moments(samples);
    if !(m2 > 0.0) {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    Ok(m3 / m2.powf(1.5))
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 1.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Nearest-rank percentile, `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q.clamp(0.0, 1.0) * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::rng_from_seed;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn trade_at(step: u64) -> Trade {
        Trade {
            step,
            day: 0,
            buyer_id: 0,
            seller_id: 1,
            bid: 1.0,
            ask: 1.0,
            price: 1.0,
        }
    }

    #[test]
    fn intervals() {
        let trades: Vec<Trade> = [3, 5, 10].into_iter().map(trade_at).collect();
        assert_eq!(transaction_intervals(&trades), vec![2, 5]);
        assert!(transaction_intervals(&trades[..1]).is_empty());
        let every: Vec<Trade> = (0..10).map(trade_at).collect();
        assert!(transaction_intervals(&every).iter().all(|&d| d == 1));
    }

    #[test]
    fn returns_examples() {
        assert!(log_returns(&[5.0; 6], 2).unwrap().iter().all(|&g| g == 0.0));
        let g = log_returns(&[1.0, 2.0, 4.0, 8.0], 1).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g.iter().all(|x| (x - 2f64.ln()).abs() < 1e-15));
        assert!(log_returns(&[1.0, 2.0, 1.0, 2.0, 1.0], 2)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        assert!(matches!(
            log_returns(&[1.0, 0.0, 2.0], 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            log_returns(&[1.0, 2.0], 2),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn normalization_examples() {
        let (g, _, _) = normalize_returns(&[-1.0, 1.0]).unwrap();
        assert_eq!(g, vec![-1.0, 1.0]);
        assert!(matches!(
            normalize_returns(&[2.0, 2.0, 2.0]),
            Err(Error::Degenerate(_))
        ));
        let (g, mu, sigma) = normalize_returns(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(mu, 1.0);
        assert!((sigma - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let z = 1.5f64.sqrt();
        assert!((g[0] + z).abs() < 1e-12 && g[1].abs() < 1e-12 && (g[2] - z).abs() < 1e-12);
    }

    #[test]
    fn gaussian_examples() {
        let fit = gaussian_fit(&[-1.0, 1.0]).unwrap();
        assert_eq!((fit.mu, fit.sigma), (0.0, 1.0));
        assert!((fit.density(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!(gaussian_fit(&[1.0]).is_err());
        assert!(gaussian_fit(&[1.0, 1.0]).is_err());

        let mut rng = rng_from_seed(42);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let fit = gaussian_fit(&xs).unwrap();
        assert!(fit.mu.abs() < 0.01 && (fit.sigma - 1.0).abs() < 0.01);
        assert!(excess_kurtosis(&xs).unwrap().abs() < 0.05);
    }

    #[test]
    fn kurtosis_examples() {
        assert!((excess_kurtosis(&[-1.0, 1.0, -1.0, 1.0]).unwrap() + 2.0).abs() < 1e-15);
        assert!(excess_kurtosis(&[1.0, 2.0, 3.0]).is_err());
        assert!(excess_kurtosis(&[3.0; 5]).is_err());
        // Laplace by inverse CDF; analytic excess kurtosis 3
        let mut rng = rng_from_seed(7);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let u: f64 = rng.random::<f64>() - 0.5;
                -u.signum() * (1.0 - 2.0 * u.abs()).ln()
            })
            .collect();
        let k = excess_kurtosis(&xs).unwrap();
        assert!((k - 3.0).abs() < 0.15, "laplace kurtosis {k}");
    }

    #[test]
    fn log_bins_normalize() {
        let mut rng = rng_from_seed(3);
        let xs: Vec<f64> = (0..5000)
            .map(|_| 1.0 + rng.random::<f64>() * 500.0)
            .collect();
        let h = log_bin_histogram(&xs, 10).unwrap();
        let mass: f64 = h.density.iter().zip(h.widths()).map(|(d, w)| d * w).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert_eq!(h.total, 5000);
        assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn log_bins_single_value() {
        let h = log_bin_histogram(&[7.0; 10], 10).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert!(log_bin_histogram(&[], 10).unwrap().is_empty());
        assert!(matches!(
            log_bin_histogram(&[1.0, -2.0], 10),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn discrete_bins_are_per_integer() {
        let values: Vec<u64> = (1..=100).collect();
        let h = log_bin_histogram_discrete(&values, 10).unwrap();
        // uniform on 1..=100: every bin density is 1/100, except the last
        // bin, which reaches past the maximum
        let n = h.n_bins();
        for (d, c) in h.density.iter().zip(&h.counts).take(n - 1) {
            assert!(*c > 0);
            assert!((d - 0.01).abs() < 1e-12);
        }
        let mass: f64 = h.density.iter().zip(h.widths()).map(|(d, w)| d * w).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(log_bin_histogram_discrete(&[0, 1], 10).is_err());
        let one = log_bin_histogram_discrete(&[4, 4, 4], 10).unwrap();
        assert_eq!(one.n_bins(), 1);
    }

    #[test]
    fn exact_power_law_regression() {
        let edges: Vec<f64> = (0..=20).map(|k| 10f64.powf(k as f64 / 5.0)).collect();
        let centers: Vec<f64> = edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
        let density: Vec<f64> = centers.iter().map(|c| c.powf(-1.5)).collect();
        let h = Histogram {
            counts: vec![1; centers.len()],
            total: centers.len() as u64,
            edges,
            centers,
            density,
        };
        let fit = fit_power_law(&h, None).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.stderr < 1e-9);
    }

    #[test]
    fn fit_needs_three_bins() {
        let h = log_bin_histogram(&[1.0, 1.0, 5.0], 10).unwrap();
        assert!(matches!(
            fit_power_law(&h, None),
            Err(Error::Fit { found: 2 })
        ));
    }

    /// Inverse-CDF draws from p(x) ~ x^-2 on [1, 1000].
    pub(crate) fn inverse_square_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let (a, b) = (1.0f64, 1000.0f64);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                1.0 / (1.0 / a - u * (1.0 / a - 1.0 / b))
            })
            .collect()
    }

    #[test]
    fn recovers_sampled_inverse_square() {
        let xs = inverse_square_samples(1_000_000, 5);
        let h = log_bin_histogram(&xs, 10).unwrap();
        let fit = fit_power_law(&h, None).unwrap();
        assert!((fit.exponent + 2.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn ks_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
        assert!((ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn percentile_and_mode() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.95), Some(95.0));
        assert_eq!(percentile(&[], 0.5), None);
        let h = linear_histogram(&[1.0, 2.0, 2.0, 2.0, 9.0], 4);
        assert_eq!(h.mode(), Some(2.0));
    }
}
