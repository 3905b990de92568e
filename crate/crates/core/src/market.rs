//! Market configuration, the Smith-style value mechanism that assigns private
//! limits to traders, and the pairwise matching rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{GdParams, ZipParams};
use crate::error::{Error, Result};

/// Identifier of the only random generator this crate ships. It is written
/// into every serialized config so a log records how it was produced.
pub const RNG_CHACHA8: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[serde(rename = "zi")]
    Zi,
    #[serde(rename = "zip")]
    Zip,
    #[serde(rename = "gd")]
    Gd,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Zi => "zi",
            Model::Zip => "zip",
            Model::Gd => "gd",
        }
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zi" => Ok(Model::Zi),
            "zip" => Ok(Model::Zip),
            "gd" => Ok(Model::Gd),
            other => Err(Error::Config(format!("unknown model {other:?}"))),
        }
    }
}

/// How the execution price is chosen once a bid meets an ask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradePriceRule {
    #[default]
    Midpoint,
    BuyerPrice,
    SellerPrice,
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buyer,
    Seller,
}

/// A straight supply or demand line over the unit quantity domain `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineCurve {
    /// Price at quantity 0.
    pub start: f64,
    /// Price at quantity 1.
    pub end: f64,
}

impl LineCurve {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn at(&self, quantity: f64) -> f64 {
        self.start + (self.end - self.start) * quantity
    }

    fn low(&self) -> f64 {
        self.start.min(self.end)
    }

    fn high(&self) -> f64 {
        self.start.max(self.end)
    }
}

/// Strategy parameter blocks. Both are always serialized so a config file
/// shows every default that was in force.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub zip: ZipParams,
    pub gd: GdParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketConfig {
    pub n_traders: usize,
    pub rounds_per_day: u64,
    pub n_days: u64,
    pub price_min: f64,
    pub price_max: f64,
    pub demand: LineCurve,
    pub supply: LineCurve,
    pub model: Model,
    pub model_params: ModelParams,
    pub trade_price_rule: TradePriceRule,
    pub seed: u64,
    pub gd_forced_trade: bool,
    pub rng: String,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            n_traders: 2500,
            rounds_per_day: 2000,
            n_days: 200,
            price_min: 0.0,
            price_max: 100.0,
            demand: LineCurve::new(100.0, 0.0),
            supply: LineCurve::new(0.0, 100.0),
            model: Model::Zi,
            model_params: ModelParams::default(),
            trade_price_rule: TradePriceRule::Midpoint,
            seed: 0,
            gd_forced_trade: false,
            rng: RNG_CHACHA8.to_string(),
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_traders < 2 || !self.n_traders.is_multiple_of(2) {
            return fail(format!(
                "n_traders must be even and at least 2, got {}",
                self.n_traders
            ));
        }
        if self.rounds_per_day == 0 {
            return fail("rounds_per_day must be at least 1".into());
        }
        if self.n_days == 0 {
            return fail("n_days must be at least 1".into());
        }
        if !(self.price_min.is_finite() && self.price_max.is_finite())
            || self.price_min >= self.price_max
        {
            return fail(format!(
                "price_min ({}) must be below price_max ({})",
                self.price_min, self.price_max
            ));
        }
        if self.demand.end > self.demand.start {
            return fail("demand curve must be non-increasing in quantity".into());
        }
        if self.supply.end < self.supply.start {
            return fail("supply curve must be non-decreasing in quantity".into());
        }
        for (name, curve) in [("demand", self.demand), ("supply", self.supply)] {
            if !(curve.low() >= self.price_min && curve.high() <= self.price_max) {
                return fail(format!(
                    "{name} curve {:?} leaves the price range [{}, {}]",
                    curve, self.price_min, self.price_max
                ));
            }
        }
        if self.rng != RNG_CHACHA8 {
            return fail(format!(
                "unsupported rng {:?}, expected {RNG_CHACHA8:?}",
                self.rng
            ));
        }
        self.model_params.zip.validate()?;
        self.model_params.gd.validate()?;
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        self.rounds_per_day * self.n_days
    }

    pub fn price_span(&self) -> f64 {
        self.price_max - self.price_min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trader {
    pub id: usize,
    pub side: Side,
    pub limit: f64,
    pub traded_today: bool,
}

/// A population of traders drawn from fixed supply and demand lines.
/// The first half of `traders` are buyers, the second half sellers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    pub traders: Vec<Trader>,
    pub demand: LineCurve,
    pub supply: LineCurve,
    pub equilibrium_price: f64,
    pub equilibrium_quantity: f64,
}

impl MarketInstance {
    pub fn n_buyers(&self) -> usize {
        self.traders.len() / 2
    }

    pub fn buyers(&self) -> &[Trader] {
        &self.traders[..self.n_buyers()]
    }

    pub fn sellers(&self) -> &[Trader] {
        &self.traders[self.n_buyers()..]
    }

    pub fn limit(&self, id: usize) -> f64 {
        self.traders[id].limit
    }
}

/// Intersection of a non-increasing demand line and a non-decreasing supply
/// line over the unit quantity domain.
pub fn equilibrium(demand: &LineCurve, supply: &LineCurve) -> Result<(f64, f64)> {
    let demand_slope = demand.end - demand.start;
    let supply_slope = supply.end - supply.start;
    let denom = supply_slope - demand_slope;
    if denom == 0.0 {
        return Err(Error::NoEquilibrium);
    }
    let quantity = (demand.start - supply.start) / denom;
    if !(0.0..=1.0).contains(&quantity) {
        return Err(Error::NoEquilibrium);
    }
    Ok((demand.at(quantity), quantity))
}

/// Draws a market: buyers sit at uniform random quantities on the demand
/// line, sellers on the supply line.
pub fn generate_market<R: Rng + ?Sized>(
    config: &MarketConfig,
    rng: &mut R,
) -> Result<MarketInstance> {
    config.validate()?;
    let (equilibrium_price, equilibrium_quantity) = equilibrium(&config.demand, &config.supply)?;
    let half = config.n_traders / 2;
    let mut traders = Vec::with_capacity(config.n_traders);
    for id in 0..config.n_traders {
        let (side, curve) = if id < half {
            (Side::Buyer, &config.demand)
        } else {
            (Side::Seller, &config.supply)
        };
        let q: f64 = rng.random();
        let limit = curve.at(q).clamp(config.price_min, config.price_max);
        traders.push(Trader {
            id,
            side,
            limit,
            traded_today: false,
        });
    }
    Ok(MarketInstance {
        traders,
        demand: config.demand,
        supply: config.supply,
        equilibrium_price,
        equilibrium_quantity,
    })
}

/// Uniform draw on `[lo, hi]` that tolerates a degenerate interval.
pub(crate) fn uniform_between<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    (lo + (hi - lo) * rng.random::<f64>()).min(hi)
}

/// Returns the execution price when `bid >= ask`, otherwise `None`.
pub fn match_step<R: Rng + ?Sized>(
    bid: f64,
    ask: f64,
    rule: TradePriceRule,
    rng: &mut R,
) -> Option<f64> {
    if bid < ask {
        return None;
    }
    Some(match rule {
        TradePriceRule::Midpoint => 0.5 * (bid + ask),
        TradePriceRule::BuyerPrice => bid,
        TradePriceRule::SellerPrice => ask,
        TradePriceRule::UniformRandom => uniform_between(rng, ask, bid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::rng_from_seed;

    fn bisect_equilibrium(demand: &LineCurve, supply: &LineCurve) -> (f64, f64) {
        // demand - supply is non-increasing in q
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if demand.at(mid) - supply.at(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = 0.5 * (lo + hi);
        (demand.at(q), q)
    }

    #[test]
    fn symmetric_lines_cross_at_fifty() {
        let (p, q) = equilibrium(&LineCurve::new(100.0, 0.0), &LineCurve::new(0.0, 100.0)).unwrap();
        assert_eq!(p, 50.0);
        assert_eq!(q, 0.5);
    }

    #[test]
    fn asymmetric_supply_line_solved_analytically() {
        // 100 - 100q = 20 + 60q  =>  q = 0.5, price 50
        let demand = LineCurve::new(100.0, 0.0);
        let supply = LineCurve::new(20.0, 80.0);
        let (p, q) = equilibrium(&demand, &supply).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
        assert!((p - 50.0).abs() < 1e-12);
        let (bp, bq) = bisect_equilibrium(&demand, &supply);
        assert!((p - bp).abs() < 1e-9 && (q - bq).abs() < 1e-9);
    }

    #[test]
    fn closed_form_matches_bisection() {
        let demand = LineCurve::new(80.0, 40.0);
        let supply = LineCurve::new(10.0, 90.0);
        let (p, q) = equilibrium(&demand, &supply).unwrap();
        let (bp, bq) = bisect_equilibrium(&demand, &supply);
        assert!((p - bp).abs() < 1e-9, "{p} vs {bp}");
        assert!((q - bq).abs() < 1e-9);
        assert!((p - 170.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn identical_lines_have_no_equilibrium() {
        let line = LineCurve::new(100.0, 0.0);
        assert!(matches!(
            equilibrium(&line, &line),
            Err(Error::NoEquilibrium)
        ));
    }

    #[test]
    fn non_crossing_lines_have_no_equilibrium() {
        let demand = LineCurve::new(40.0, 0.0);
        let supply = LineCurve::new(60.0, 100.0);
        assert!(matches!(
            equilibrium(&demand, &supply),
            Err(Error::NoEquilibrium)
        ));
    }

    #[test]
    fn odd_population_is_rejected() {
        let config = MarketConfig {
            n_traders: 3,
            ..MarketConfig::default()
        };
        assert!(matches!(config.validate(), Err(Error::Config(_))));
        let config = MarketConfig {
            price_min: 100.0,
            ..MarketConfig::default()
        };
        assert!(matches!(config.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let config = MarketConfig {
            n_traders: 4,
            seed: 17,
            ..MarketConfig::default()
        };
        let a = generate_market(&config, &mut rng_from_seed(config.seed)).unwrap();
        let b = generate_market(&config, &mut rng_from_seed(config.seed)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.buyers().len(), 2);
        assert!(a.buyers().iter().all(|t| t.side == Side::Buyer));
        assert!(a.sellers().iter().all(|t| t.side == Side::Seller));
        assert_eq!(a.equilibrium_price, 50.0);
    }

    #[test]
    fn limits_stay_on_their_curves() {
        let config = MarketConfig {
            n_traders: 200,
            demand: LineCurve::new(90.0, 30.0),
            supply: LineCurve::new(20.0, 70.0),
            ..MarketConfig::default()
        };
        let m = generate_market(&config, &mut rng_from_seed(3)).unwrap();
        assert!(m.buyers().iter().all(|t| (30.0..=90.0).contains(&t.limit)));
        assert!(m.sellers().iter().all(|t| (20.0..=70.0).contains(&t.limit)));
    }

    #[test]
    fn match_rules() {
        let mut rng = rng_from_seed(1);
        assert_eq!(
            match_step(55.0, 45.0, TradePriceRule::Midpoint, &mut rng),
            Some(50.0)
        );
        assert_eq!(
            match_step(40.0, 60.0, TradePriceRule::Midpoint, &mut rng),
            None
        );
        assert_eq!(
            match_step(50.0, 50.0, TradePriceRule::Midpoint, &mut rng),
            Some(50.0)
        );
        assert_eq!(
            match_step(55.0, 45.0, TradePriceRule::BuyerPrice, &mut rng),
            Some(55.0)
        );
        assert_eq!(
            match_step(55.0, 45.0, TradePriceRule::SellerPrice, &mut rng),
            Some(45.0)
        );
        for _ in 0..1000 {
            let p = match_step(55.0, 45.0, TradePriceRule::UniformRandom, &mut rng).unwrap();
            assert!((45.0..=55.0).contains(&p));
        }
    }
}
