//! Replica ensembles: run a market configuration several times, write every
//! run to disk, pool the observations across runs and fit them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::community::{community_size_histogram, partition_anticommunities};
use crate::engine::{replica_config, simulate};
use crate::error::{Error, Result};
use crate::events::TradeLog;
use crate::market::{MarketConfig, Model};
use crate::netgraph::{
    build_network, classify_marginal, degrees_of_class, tail_bump, MarginalClass, TailBump,
};
use crate::persist::{
    create_dir, read_json, write_communities, write_degrees, write_histogram, write_intervals,
    write_json, write_log_dir, write_network, write_returns, CODE_VERSION,
};
use crate::stats::{
    excess_kurtosis, fit_power_law, gaussian_fit, ks_statistic, linear_histogram,
    log_bin_histogram_discrete, mean_std, skewness, transaction_intervals, GaussianFit, Histogram,
    PowerLawFit, ReturnSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Degree,
    DegreeByClass,
    Community,
    Intervals,
    Returns,
}

impl Analysis {
    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::Degree => "degree",
            Analysis::DegreeByClass => "degree_by_class",
            Analysis::Community => "community",
            Analysis::Intervals => "intervals",
            Analysis::Returns => "returns",
        }
    }
}

/// Names of the pooled histograms, also the keys of `fit_ranges`.
pub const HIST_DEGREE: &str = "degree";
pub const HIST_DEGREE_INTRA: &str = "degree_intramarginal";
pub const HIST_DEGREE_EXTRA: &str = "degree_extramarginal";
pub const HIST_COMMUNITY: &str = "community_sizes";
pub const HIST_INTERVALS: &str = "intervals";

/// Linear bins of the pooled normalized-return histograms.
pub const RETURN_BINS: usize = 101;

fn default_lags() -> Vec<usize> {
    vec![5, 20, 30, 1000]
}

fn default_bins_per_decade() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub market: MarketConfig,
    pub replicas: usize,
    pub analyses: BTreeSet<Analysis>,
    #[serde(default = "default_lags")]
    pub return_lags: Vec<usize>,
    /// Fit range `[x_lo, x_hi]` on bin centers, keyed by histogram name.
    /// Histograms without an entry are fitted over all nonempty bins.
    #[serde(default)]
    pub fit_ranges: BTreeMap<String, [f64; 2]>,
    #[serde(default = "default_bins_per_decade")]
    pub bins_per_decade: usize,
    #[serde(default)]
    pub write_shouts: bool,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        if self.bins_per_decade == 0 {
            return Err(Error::Config("bins_per_decade must be at least 1".into()));
        }
        if self.return_lags.contains(&0) {
            return Err(Error::Config("return lags must be positive".into()));
        }
        for (name, [lo, hi]) in &self.fit_ranges {
            if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo < hi) {
                return Err(Error::Config(format!(
                    "fit range for {name} must satisfy 0 < lo < hi"
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 of the spec without its output directory.
    pub fn config_hash(&self) -> String {
        let mut spec = self.clone();
        spec.output_dir = PathBuf::new();
        let text = serde_json::to_string(&spec).expect("serializable spec");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn gd_forced(&self) -> bool {
        self.market.model == Model::Gd && self.market.gd_forced_trade
    }
}

/// Seed shared by every shipped preset; replica seeds derive from it.
pub const PRESET_SEED: u64 = 20090101;

fn paper_market(model: Model, n_days: u64) -> MarketConfig {
    MarketConfig {
        model,
        n_days,
        seed: PRESET_SEED,
        // every GD step picks a pair that trades whenever one exists
        gd_forced_trade: model == Model::Gd,
        ..MarketConfig::default()
    }
}

fn ranges(entries: &[(&str, [f64; 2])]) -> BTreeMap<String, [f64; 2]> {
    entries.iter().map(|(k, r)| (k.to_string(), *r)).collect()
}

/// The shipped study designs.
pub fn presets() -> Vec<ExperimentSpec> {
    let models = [Model::Zi, Model::Zip, Model::Gd];
    let spec =
        |name: String, market: MarketConfig, replicas: usize, analyses: &[Analysis], fit_ranges| {
            ExperimentSpec {
                output_dir: PathBuf::from("results").join(&name),
                name,
                market,
                replicas,
                analyses: analyses.iter().copied().collect(),
                return_lags: default_lags(),
                fit_ranges,
                bins_per_decade: default_bins_per_decade(),
                write_shouts: false,
            }
        };
    let mut out = Vec::new();
    for model in models {
        out.push(spec(
            format!("paper-degree-{model}"),
            paper_market(model, 200),
            10,
            &[Analysis::Degree, Analysis::DegreeByClass],
            degree_ranges(model, 200),
        ));
    }
    for model in models {
        out.push(spec(
            format!("paper-degree-1000d-{model}"),
            paper_market(model, 1000),
            10,
            &[Analysis::Degree, Analysis::DegreeByClass],
            degree_ranges(model, 1000),
        ));
    }
    for model in models {
        out.push(spec(
            format!("paper-community-{model}"),
            paper_market(model, 200),
            10,
            &[Analysis::Community],
            BTreeMap::new(),
        ));
    }
    for model in models {
        let market = MarketConfig {
            n_days: 1,
            rounds_per_day: 1_000_000,
            ..paper_market(model, 1)
        };
        out.push(spec(
            format!("paper-intervals-{model}"),
            market,
            30,
            &[Analysis::Intervals],
            ranges(&[(HIST_INTERVALS, INTERVAL_RANGE)]),
        ));
    }
    for model in models {
        out.push(spec(
            format!("paper-returns-{model}"),
            paper_market(model, 200),
            10,
            &[Analysis::Returns],
            BTreeMap::new(),
        ));
    }
    out
}

/// Interval fits start past the short-interval plateau and stop before the
/// sparse tail of the pooled histogram.
const INTERVAL_RANGE: [f64; 2] = [10.0, 10_000.0];

/// Degree fits stop before the finite-size roll-off. A trader trades at
/// most once a day, so the roll-off moves out with the number of days; the
/// fit ends at a quarter of it.
fn degree_ranges(model: Model, n_days: u64) -> BTreeMap<String, [f64; 2]> {
    let hi = n_days as f64 / 4.0;
    match model {
        Model::Zi => ranges(&[(HIST_DEGREE, [1.0, hi])]),
        Model::Zip | Model::Gd => ranges(&[(HIST_DEGREE_EXTRA, [1.0, hi])]),
    }
}

pub fn preset(name: &str) -> Result<ExperimentSpec> {
    presets()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown preset {name}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub analysis: String,
    pub reason: String,
}

/// Mean absolute deviation from the equilibrium price and price standard
/// deviation over one day's trades.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayPrices {
    pub day: u64,
    pub trades: usize,
    pub mean_abs_deviation: f64,
    pub price_std: f64,
}

impl DayPrices {
    fn of(log: &TradeLog, day: u64) -> Self {
        let prices: Vec<f64> = log.trades_on_day(day).map(|t| t.price).collect();
        let p_eq = log.market.equilibrium_price;
        let (mean_abs_deviation, price_std) = if prices.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let dev = prices.iter().map(|p| (p - p_eq).abs()).sum::<f64>() / prices.len() as f64;
            (dev, mean_std(&prices).1)
        };
        Self {
            day,
            trades: prices.len(),
            mean_abs_deviation,
            price_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub index: usize,
    pub seed: u64,
    pub run_dir: PathBuf,
    pub trades: usize,
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
    pub equilibrium_price: f64,
    pub first_day: DayPrices,
    pub last_day: DayPrices,
    pub communities: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSummary {
    pub tau: usize,
    pub samples: usize,
    pub excess_kurtosis: f64,
    pub skewness: f64,
    pub gaussian: GaussianFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub first_day_mean_abs_deviation: f64,
    pub last_day_mean_abs_deviation: f64,
    pub first_day_price_std: f64,
    pub last_day_price_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledCounts {
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub model: Model,
    pub code_version: String,
    pub config_hash: String,
    pub replicas: Vec<ReplicaSummary>,
    pub pooled: PooledCounts,
    pub convergence: ConvergenceSummary,
    pub fits: BTreeMap<String, PowerLawFit>,
    pub fit_errors: BTreeMap<String, String>,
    pub tail_bump: Option<TailBump>,
    pub intramarginal_degree_skewness: Option<f64>,
    pub returns: Vec<LagSummary>,
    /// Largest two-sample KS statistic over all pairs of lags.
    pub returns_max_pairwise_ks: Option<f64>,
    pub skipped: Vec<Skipped>,
}

/// Contents of `fits.json`: pooled fits plus one set per replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitsFile {
    pub name: String,
    pub model: Model,
    pub n_days: u64,
    pub pooled: BTreeMap<String, PowerLawFit>,
    pub per_replica: Vec<BTreeMap<String, PowerLawFit>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub output_dir: PathBuf,
    pub summary: Summary,
    pub histograms: BTreeMap<String, Histogram>,
    pub fits: FitsFile,
}

/// What one replica contributes to the pooled analyses.
struct ReplicaData {
    summary: ReplicaSummary,
    degrees: Vec<u64>,
    intramarginal: Vec<usize>,
    extramarginal: Vec<usize>,
    community_sizes: Vec<u64>,
    intervals: Vec<u64>,
    /// Normalized returns per requested lag; `None` if the run was too
    /// short or its returns were degenerate.
    returns: Vec<Option<Vec<f64>>>,
    fits: BTreeMap<String, PowerLawFit>,
}

fn run_replica(spec: &ExperimentSpec, index: usize, dir: &Path) -> Result<ReplicaData> {
    let config = replica_config(&spec.market, spec.market.seed, index as u64);
    let log = simulate(&config)?;
    let run_dir = dir.join(format!("run_{index:03}"));
    write_log_dir(&run_dir, &log, spec.write_shouts)?;

    let net = build_network(&log);
    let classes = classify_marginal(&log.market)?;
    let wants = |a| spec.analyses.contains(&a);
    let bpd = spec.bins_per_decade;
    let mut fits = BTreeMap::new();
    let mut fit_into = |name: &str, hist: &Histogram| {
        if let Ok(fit) = fit_power_law(hist, spec.fit_ranges.get(name).copied()) {
            fits.insert(name.to_string(), fit);
        }
    };

    let degrees: Vec<u64> = net.degrees().into_iter().map(|d| d as u64).collect();
    let intramarginal = degrees_of_class(&net, &classes, MarginalClass::Intramarginal);
    let extramarginal = degrees_of_class(&net, &classes, MarginalClass::Extramarginal);
    if wants(Analysis::Degree) || wants(Analysis::DegreeByClass) {
        write_network(run_dir.join("network.csv"), &net)?;
        write_degrees(run_dir.join("degrees.csv"), &net, &classes)?;
    }
    if wants(Analysis::Degree) {
        fit_into(HIST_DEGREE, &log_bin_histogram_discrete(&degrees, bpd)?);
    }
    if wants(Analysis::DegreeByClass) {
        for (name, values) in [
            (HIST_DEGREE_INTRA, &intramarginal),
            (HIST_DEGREE_EXTRA, &extramarginal),
        ] {
            let values: Vec<u64> = values.iter().map(|&d| d as u64).collect();
            fit_into(name, &log_bin_histogram_discrete(&values, bpd)?);
        }
    }

    let mut community_sizes = Vec::new();
    let mut communities = None;
    if wants(Analysis::Community) && net.n_edges() > 0 {
        let partition = partition_anticommunities(&net)?;
        write_communities(&run_dir, &net, &partition)?;
        fit_into(HIST_COMMUNITY, &community_size_histogram(&partition, bpd)?);
        communities = Some(partition.n_communities());
        community_sizes = partition.sizes.iter().map(|&s| s as u64).collect();
    }

    let mut intervals = Vec::new();
    if wants(Analysis::Intervals) && !spec.gd_forced() {
        intervals = transaction_intervals(&log.trades);
        write_intervals(run_dir.join("intervals.csv"), &intervals)?;
        fit_into(
            HIST_INTERVALS,
            &log_bin_histogram_discrete(&intervals, bpd)?,
        );
    }

    let mut returns = Vec::new();
    if wants(Analysis::Returns) {
        let prices = log.prices();
        let mut series = Vec::new();
        for &tau in &spec.return_lags {
            match ReturnSeries::from_prices(&prices, tau) {
                Ok(s) => {
                    returns.push(Some(s.normalized.clone()));
                    series.push(s);
                }
                Err(Error::InsufficientData(_) | Error::Degenerate(_)) => returns.push(None),
                Err(e) => return Err(e),
            }
        }
        write_returns(run_dir.join("returns.csv"), &series)?;
    }

    let last = log.config.n_days - 1;
    Ok(ReplicaData {
        summary: ReplicaSummary {
            index,
            seed: config.seed,
            run_dir,
            trades: log.trades.len(),
            nodes: net.n_nodes(),
            edges: net.n_edges(),
            mean_degree: net.mean_degree(),
            equilibrium_price: log.market.equilibrium_price,
            first_day: DayPrices::of(&log, 0),
            last_day: DayPrices::of(&log, last),
            communities,
        },
        degrees,
        intramarginal,
        extramarginal,
        community_sizes,
        intervals,
        returns,
        fits,
    })
}

fn mean_finite(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Runs every replica on a pool of `threads` workers, then pools and fits
/// the requested observables and writes all artifacts under
/// `spec.output_dir`.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentResult> {
    spec.validate()?;
    let dir = spec.output_dir.clone();
    create_dir(&dir)?;
    write_json(dir.join("spec.json"), spec)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    let data: Vec<ReplicaData> = pool.install(|| {
        (0..spec.replicas)
            .into_par_iter()
            .map(|i| run_replica(spec, i, &dir))
            .collect::<Result<_>>()
    })?;

    let bpd = spec.bins_per_decade;
    let mut histograms = BTreeMap::new();
    let mut skipped = Vec::new();
    let wants = |a| spec.analyses.contains(&a);

    let all_degrees: Vec<u64> = data
        .iter()
        .flat_map(|d| d.degrees.iter().copied())
        .collect();
    let intramarginal: Vec<usize> = data
        .iter()
        .flat_map(|d| d.intramarginal.iter().copied())
        .collect();
    let extramarginal: Vec<usize> = data
        .iter()
        .flat_map(|d| d.extramarginal.iter().copied())
        .collect();
    if wants(Analysis::Degree) {
        histograms.insert(
            HIST_DEGREE.to_string(),
            log_bin_histogram_discrete(&all_degrees, bpd)?,
        );
    }
    let mut bump = None;
    let mut intra_skew = None;
    if wants(Analysis::DegreeByClass) {
        for (name, values) in [
            (HIST_DEGREE_INTRA, &intramarginal),
            (HIST_DEGREE_EXTRA, &extramarginal),
        ] {
            let values: Vec<u64> = values.iter().map(|&d| d as u64).collect();
            histograms.insert(name.to_string(), log_bin_histogram_discrete(&values, bpd)?);
        }
        bump = tail_bump(&intramarginal, &extramarginal);
        let intra: Vec<f64> = intramarginal.iter().map(|&d| d as f64).collect();
        intra_skew = skewness(&intra).ok();
    }
    if wants(Analysis::Community) {
        let sizes: Vec<u64> = data
            .iter()
            .flat_map(|d| d.community_sizes.iter().copied())
            .collect();
        if sizes.is_empty() {
            skipped.push(Skipped {
                analysis: Analysis::Community.as_str().into(),
                reason: "no replica produced a network with edges".into(),
            });
        } else {
            histograms.insert(
                HIST_COMMUNITY.to_string(),
                log_bin_histogram_discrete(&sizes, bpd)?,
            );
        }
    }
    if wants(Analysis::Intervals) {
        let intervals: Vec<u64> = data
            .iter()
            .flat_map(|d| d.intervals.iter().copied())
            .collect();
        if spec.gd_forced() {
            skipped.push(Skipped {
                analysis: Analysis::Intervals.as_str().into(),
                reason: "GD forced-trade mode transacts whenever a crossing pair exists, so intervals between \
                         transactions are not defined"
                    .into(),
            });
        } else if intervals.is_empty() {
            skipped.push(Skipped {
                analysis: Analysis::Intervals.as_str().into(),
                reason: "fewer than two trades in every replica".into(),
            });
        } else {
            histograms.insert(
                HIST_INTERVALS.to_string(),
                log_bin_histogram_discrete(&intervals, bpd)?,
            );
        }
    }

    let mut returns = Vec::new();
    let mut pooled_returns: Vec<(usize, Vec<f64>)> = Vec::new();
    if wants(Analysis::Returns) {
        for (k, &tau) in spec.return_lags.iter().enumerate() {
            let pooled: Vec<f64> = data
                .iter()
                .filter_map(|d| d.returns[k].as_ref())
                .flatten()
                .copied()
                .collect();
            let stats = (|| -> Result<LagSummary> {
                Ok(LagSummary {
                    tau,
                    samples: pooled.len(),
                    excess_kurtosis: excess_kurtosis(&pooled)?,
                    skewness: skewness(&pooled)?,
                    gaussian: gaussian_fit(&pooled)?,
                })
            })();
            match stats {
                Ok(lag) => {
                    histograms.insert(
                        format!("returns_tau{tau}"),
                        linear_histogram(&pooled, RETURN_BINS),
                    );
                    returns.push(lag);
                    pooled_returns.push((tau, pooled));
                }
                Err(e) => skipped.push(Skipped {
                    analysis: format!("returns_tau{tau}"),
                    reason: e.to_string(),
                }),
            }
        }
    }
    let returns_max_pairwise_ks = (pooled_returns.len() >= 2).then(|| {
        let mut worst = 0.0f64;
        for (i, a) in pooled_returns.iter().enumerate() {
            for b in &pooled_returns[i + 1..] {
                worst = worst.max(ks_statistic(&a.1, &b.1));
            }
        }
        worst
    });

    let mut fits = BTreeMap::new();
    let mut fit_errors = BTreeMap::new();
    for (name, hist) in &histograms {
        write_histogram(dir.join(format!("hist_{name}.csv")), hist)?;
        if name.starts_with("returns_") {
            continue;
        }
        match fit_power_law(hist, spec.fit_ranges.get(name).copied()) {
            Ok(fit) => {
                fits.insert(name.clone(), fit);
            }
            Err(e) => {
                fit_errors.insert(name.clone(), e.to_string());
            }
        }
    }

    let replicas: Vec<ReplicaSummary> = data.iter().map(|d| d.summary.clone()).collect();
    let n = replicas.len() as f64;
    let pooled = PooledCounts {
        nodes: replicas.iter().map(|r| r.nodes).sum(),
        edges: replicas.iter().map(|r| r.edges).sum(),
        mean_degree: replicas.iter().map(|r| r.mean_degree).sum::<f64>() / n,
    };
    let convergence = ConvergenceSummary {
        first_day_mean_abs_deviation: mean_finite(
            replicas.iter().map(|r| r.first_day.mean_abs_deviation),
        ),
        last_day_mean_abs_deviation: mean_finite(
            replicas.iter().map(|r| r.last_day.mean_abs_deviation),
        ),
        first_day_price_std: mean_finite(replicas.iter().map(|r| r.first_day.price_std)),
        last_day_price_std: mean_finite(replicas.iter().map(|r| r.last_day.price_std)),
    };
    let summary = Summary {
        name: spec.name.clone(),
        model: spec.market.model,
        code_version: CODE_VERSION.to_string(),
        config_hash: spec.config_hash(),
        replicas,
        pooled,
        convergence,
        fits: fits.clone(),
        fit_errors,
        tail_bump: bump,
        intramarginal_degree_skewness: intra_skew,
        returns,
        returns_max_pairwise_ks,
        skipped,
    };
    let fits = FitsFile {
        name: spec.name.clone(),
        model: spec.market.model,
        n_days: spec.market.n_days,
        pooled: fits,
        per_replica: data.into_iter().map(|d| d.fits).collect(),
    };
    write_json(dir.join("fits.json"), &fits)?;
    write_json(dir.join("summary.json"), &summary)?;
    Ok(ExperimentResult {
        output_dir: dir,
        summary,
        histograms,
        fits,
    })
}

/// Reference exponents shown as annotation columns by [`summarize`].
fn reference_exponent(model: Model, observable: &str, n_days: u64) -> Option<f64> {
    match (observable, model) {
        (HIST_DEGREE, Model::Zi) => Some(-0.51),
        (HIST_DEGREE_EXTRA, Model::Zip) => Some(-0.83),
        (HIST_DEGREE_EXTRA, Model::Gd) if n_days >= 1000 => Some(-0.78),
        (HIST_COMMUNITY, Model::Zi) => Some(-1.36),
        (HIST_COMMUNITY, Model::Zip) => Some(-1.55),
        (HIST_COMMUNITY, Model::Gd) => Some(-1.50),
        (HIST_INTERVALS, Model::Zi) => Some(-1.36),
        (HIST_INTERVALS, Model::Zip) => Some(-1.84),
        _ => None,
    }
}

/// Exponents measured on the human-trader exchange, for comparison.
fn human_market_exponent(observable: &str) -> Option<f64> {
    match observable {
        HIST_DEGREE => Some(-2.14),
        HIST_COMMUNITY => Some(-1.2),
        HIST_INTERVALS => Some(-1.3),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub source: PathBuf,
    pub experiment: Option<String>,
    pub model: Option<Model>,
    pub observable: Option<String>,
    pub exponent: Option<f64>,
    pub stderr: Option<f64>,
    pub fit_range: Option<[f64; 2]>,
    pub reference: Option<f64>,
    pub human_market: Option<f64>,
    /// `"ok"`, or why the row has no fit.
    pub status: String,
}

/// One row per pooled fit found in each directory's `fits.json`. A
/// directory without a readable `fits.json` yields a single unavailable row.
pub fn summarize(dirs: &[PathBuf]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for dir in dirs {
        let fits: FitsFile = match read_json(dir.join("fits.json")) {
            Ok(f) => f,
            Err(e) => {
                rows.push(SummaryRow {
                    source: dir.clone(),
                    experiment: None,
                    model: None,
                    observable: None,
                    exponent: None,
                    stderr: None,
                    fit_range: None,
                    reference: None,
                    human_market: None,
                    status: format!("unavailable: {e}"),
                });
                continue;
            }
        };
        for (observable, fit) in &fits.pooled {
            rows.push(SummaryRow {
                source: dir.clone(),
                experiment: Some(fits.name.clone()),
                model: Some(fits.model),
                observable: Some(observable.clone()),
                exponent: Some(fit.exponent),
                stderr: Some(fit.stderr),
                fit_range: Some(fit.fit_range),
                reference: reference_exponent(fits.model, observable, fits.n_days),
                human_market: human_market_exponent(observable),
                status: "ok".into(),
            });
        }
    }
    rows
}

/// Renders rows as a fixed-width text table.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:<5} {:<22} {:>16} {:>20} {:>9} {:>9}  status",
        "experiment", "model", "observable", "exponent", "fit range", "reference", "human"
    );
    for r in rows {
        let exponent = match (r.exponent, r.stderr) {
            (Some(e), Some(s)) => format!("{e:.3} ± {s:.3}"),
            _ => "-".into(),
        };
        let range = r
            .fit_range
            .map_or_else(|| "-".into(), |[lo, hi]| format!("[{lo:.3}, {hi:.3}]"));
        let _ = writeln!(
            out,
            "{:<28} {:<5} {:<22} {:>16} {:>20} {:>9} {:>9}  {}",
            r.experiment
                .as_deref()
                .unwrap_or_else(|| r.source.to_str().unwrap_or("?")),
            r.model.map_or("-", |m| m.name()),
            r.observable.as_deref().unwrap_or("-"),
            exponent,
            range,
            opt(r.reference),
            opt(r.human_market),
            r.status
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dir: &Path, model: Model) -> ExperimentSpec {
        ExperimentSpec {
            name: "tiny".into(),
            market: MarketConfig {
                n_traders: 40,
                rounds_per_day: 200,
                n_days: 5,
                model,
                seed: 3,
                ..MarketConfig::default()
            },
            replicas: 2,
            analyses: [
                Analysis::Degree,
                Analysis::DegreeByClass,
                Analysis::Community,
                Analysis::Intervals,
                Analysis::Returns,
            ]
            .into_iter()
            .collect(),
            return_lags: vec![1, 5, 100_000],
            fit_ranges: BTreeMap::new(),
            bins_per_decade: 5,
            write_shouts: true,
            output_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn presets_cover_the_study_designs() {
        let all = presets();
        assert!(all.len() >= 13);
        let names: BTreeSet<_> = all.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names.len(), all.len());
        for m in ["zi", "zip", "gd"] {
            for kind in ["degree", "degree-1000d", "community", "returns"] {
                assert!(names.contains(format!("paper-{kind}-{m}").as_str()));
            }
        }
        assert!(names.contains("paper-intervals-zi") && names.contains("paper-intervals-zip"));
        assert_eq!(preset("paper-degree-1000d-gd").unwrap().market.n_days, 1000);
        for p in &all {
            p.validate().unwrap();
            let text = serde_json::to_string(p).unwrap();
            let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(&back, p);
        }
        assert!(matches!(preset("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = preset("paper-degree-zi").unwrap();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.config_hash(), b.config_hash());
        b.replicas += 1;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn small_experiment_writes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let spec = tiny(dir.path(), Model::Zi);
        let result = run_experiment(&spec, 1).unwrap();
        for f in [
            "spec.json",
            "summary.json",
            "fits.json",
            "hist_degree.csv",
            "hist_intervals.csv",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        for f in [
            "trades.csv",
            "shouts.csv",
            "market.csv",
            "config.json",
            "network.csv",
            "communities.csv",
            "returns.csv",
        ] {
            assert!(dir.path().join("run_001").join(f).exists(), "{f}");
        }
        let s = &result.summary;
        assert_eq!(s.replicas.len(), 2);
        assert!(s.replicas.iter().all(|r| r.trades > 0));
        assert_eq!(
            s.pooled.nodes,
            s.replicas.iter().map(|r| r.nodes).sum::<usize>()
        );
        // lag 100000 exceeds every run's trade count
        assert!(s.skipped.iter().any(|k| k.analysis == "returns_tau100000"));
        assert_eq!(s.returns.len(), 2);
        let back: Summary = read_json(dir.path().join("summary.json")).unwrap();
        assert_eq!(back.config_hash, spec.config_hash());

        let again = run_experiment(&spec, 1).unwrap();
        assert_eq!(again.summary, result.summary);
    }

    #[test]
    fn forced_gd_skips_intervals() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = tiny(dir.path(), Model::Gd);
        spec.market.gd_forced_trade = true;
        spec.analyses = [Analysis::Intervals].into_iter().collect();
        let s = run_experiment(&spec, 1).unwrap().summary;
        assert_eq!(s.skipped.len(), 1);
        assert_eq!(s.skipped[0].analysis, "intervals");
        assert!(!dir.path().join("hist_intervals.csv").exists());
    }

    #[test]
    fn summarize_marks_missing_fits() {
        let dir = tempfile::tempdir().unwrap();
        assert!(summarize(&[]).is_empty());
        let rows = summarize(&[dir.path().to_path_buf()]);
        assert_eq!(rows.len(), 1);
        assert!(rows[0].status.starts_with("unavailable"));
        let table = format_table(&rows);
        assert_eq!(table.lines().count(), 2);
    }
}
