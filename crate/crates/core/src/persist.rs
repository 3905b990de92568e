//! On-disk formats. A run directory holds `config.json`, `trades.csv`,
//! `shouts.csv` and `market.csv`; analyses add their own CSV and JSON files
//! next to them. CSV files use a header row, `.` decimals and LF endings.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::community::Partition;
use crate::error::{Error, Result};
use crate::events::{ShoutEvent, ShoutKind, Trade, TradeLog};
use crate::market::{equilibrium, MarketConfig, MarketInstance, Side, Trader};
use crate::netgraph::{MarginalClass, TransactionNetwork};
use crate::stats::{Histogram, ReturnSeries};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Contents of `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    #[serde(flatten)]
    pub config: MarketConfig,
}

/// Buffered text file writer that reports the path on failure.
pub(crate) struct TextFile {
    path: PathBuf,
    out: BufWriter<File>,
}

impl TextFile {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Self {
            out: BufWriter::new(file),
            path,
        })
    }

    pub fn line(&mut self, args: std::fmt::Arguments) -> Result<()> {
        self.out
            .write_fmt(args)
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn side_str(side: Side) -> &'static str {
    match side {
        Side::Buyer => "buyer",
        Side::Seller => "seller",
    }
}

pub fn write_trades(path: impl AsRef<Path>, trades: &[Trade]) -> Result<()> {
    let mut f = TextFile::create(path)?;
    f.line(format_args!("step,day,buyer_id,seller_id,bid,ask,price"))?;
    for t in trades {
        f.line(format_args!(
            "{},{},{},{},{},{},{}",
            t.step, t.day, t.buyer_id, t.seller_id, t.bid, t.ask, t.price
        ))?;
    }
    f.finish()
}

pub fn write_shouts(path: impl AsRef<Path>, shouts: &[ShoutEvent]) -> Result<()> {
    let mut f = TextFile::create(path)?;
    f.line(format_args!("step,day,trader_id,kind,price,accepted"))?;
    for s in shouts {
        f.line(format_args!(
            "{},{},{},{},{},{}",
            s.step,
            s.day,
            s.trader_id,
            s.kind.as_str(),
            s.price,
            s.accepted
        ))?;
    }
    f.finish()
}

pub fn write_market(path: impl AsRef<Path>, market: &MarketInstance) -> Result<()> {
    let mut f = TextFile::create(path)?;
    f.line(format_args!("trader_id,side,limit"))?;
    for t in &market.traders {
        f.line(format_args!("{},{},{}", t.id, side_str(t.side), t.limit))?;
    }
    f.finish()
}

/// Writes the four files of a run directory. `shouts.csv` is skipped when
/// `with_shouts` is false.
pub fn write_log_dir(dir: impl AsRef<Path>, log: &TradeLog, with_shouts: bool) -> Result<()> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    write_json(
        dir.join("config.json"),
        &RunManifest {
            code_version: CODE_VERSION.to_string(),
            config: log.config.clone(),
        },
    )?;
    write_trades(dir.join("trades.csv"), &log.trades)?;
    if with_shouts {
        write_shouts(dir.join("shouts.csv"), &log.shouts)?;
    }
    write_market(dir.join("market.csv"), &log.market)
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::Reader::from_path(path).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    csv_reader(path)?
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

#[derive(Deserialize)]
struct MarketRow {
    trader_id: usize,
    side: Side,
    limit: f64,
}

#[derive(Deserialize)]
struct ShoutRow {
    step: u64,
    day: u64,
    trader_id: usize,
    kind: ShoutKind,
    price: f64,
    accepted: bool,
}

/// Loads a run directory written by [`write_log_dir`]. A missing
/// `shouts.csv` yields an empty shout list.
pub fn read_log_dir(dir: impl AsRef<Path>) -> Result<TradeLog> {
    let dir = dir.as_ref();
    let manifest: RunManifest = read_json(dir.join("config.json"))?;
    let config = manifest.config;
    let trades: Vec<Trade> = read_rows(&dir.join("trades.csv"))?;
    let shouts_path = dir.join("shouts.csv");
    let shouts = if shouts_path.exists() {
        read_rows::<ShoutRow>(&shouts_path)?
            .into_iter()
            .map(|r| ShoutEvent {
                step: r.step,
                day: r.day,
                trader_id: r.trader_id,
                kind: r.kind,
                price: r.price,
                accepted: r.accepted,
            })
            .collect()
    } else {
        Vec::new()
    };
    let market_path = dir.join("market.csv");
    let traders = read_rows::<MarketRow>(&market_path)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.trader_id != i {
                return Err(Error::Format {
                    path: market_path.clone(),
                    message: format!("row {i} has trader_id {}", r.trader_id),
                });
            }
            Ok(Trader {
                id: r.trader_id,
                side: r.side,
                limit: r.limit,
                traded_today: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (equilibrium_price, equilibrium_quantity) = equilibrium(&config.demand, &config.supply)?;
    Ok(TradeLog {
        market: MarketInstance {
            traders,
            demand: config.demand,
            supply: config.supply,
            equilibrium_price,
            equilibrium_quantity,
        },
        config,
        shouts,
        trades,
    })
}

pub fn write_network(path: impl AsRef<Path>, net: &TransactionNetwork) -> Result<()> {
    let mut f = TextFile::create(path)?;
    f.line(format_args!("u,v,multiplicity"))?;
    for (u, v, m) in net.edges() {
        f.line(format_args!("{u},{v},{m}"))?;
    }
    f.finish()
}

pub fn write_degrees(
    path: impl AsRef<Path>,
    net: &TransactionNetwork,
    classes: &[MarginalClass],
) -> Result<()> {
    let mut f = TextFile::create(path)?;
    f.line(format_args!("trader_id,degree,class"))?;
    for (node, &id) in net.ids().iter().enumerate() {
        f.line(format_args!(
            "{},{},{}",
            id,
            net.degree(node),
            classes[id].as_str()
        ))?;
    }
    f.finish()
}

pub fn write_communities(
    dir: impl AsRef<Path>,
    net: &TransactionNetwork,
    partition: &Partition,
) -> Result<()> {
    let dir = dir.as_ref();
    let mut f = TextFile::create(dir.join("communities.csv"))?;
    f.line(format_args!("trader_id,community_id"))?;
    for (node, &id) in net.ids().iter().enumerate() {
        f.line(format_args!("{},{}", id, partition.assignment[node]))?;
    }
    f.finish()?;
    let mut f = TextFile::create(dir.join("community_sizes.csv"))?;
    f.line(format_args!("community_id,size"))?;
    for (c, s) in partition.sizes.iter().enumerate() {
        f.line(format_args!("{c},{s}"))?;
    }
    f.finish()
}

pub fn write_returns(path: impl AsRef<Path>, series: &[ReturnSeries]) -> Result<()> {
    let mut f = TextFile::create(path)?;
    f.line(format_args!("t,tau,G,g"))?;
    for s in series {
        for (t, (big, small)) in s.raw.iter().zip(&s.normalized).enumerate() {
            f.line(format_args!("{},{},{},{}", t, s.tau, big, small))?;
        }
    }
    f.finish()
}

pub fn write_intervals(path: impl AsRef<Path>, intervals: &[u64]) -> Result<()> {
    let mut f = TextFile::create(path)?;
    f.line(format_args!("interval"))?;
    for d in intervals {
        f.line(format_args!("{d}"))?;
    }
    f.finish()
}

pub fn write_histogram(path: impl AsRef<Path>, hist: &Histogram) -> Result<()> {
    let mut f = TextFile::create(path)?;
    f.line(format_args!("bin_lo,bin_hi,count,density"))?;
    for (i, w) in hist.edges.windows(2).enumerate() {
        f.line(format_args!(
            "{},{},{},{}",
            w[0], w[1], hist.counts[i], hist.density[i]
        ))?;
    }
    f.finish()
}
