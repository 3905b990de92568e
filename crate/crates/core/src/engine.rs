//! The Monte Carlo schedule: `n_days` sessions of `rounds_per_day` steps, each
//! step pairing one eligible buyer with one eligible seller.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::agents::{CrossingScratch, Population, PriceBounds};
use crate::error::Result;
use crate::events::{ShoutEvent, ShoutKind, Trade, TradeLog};
use crate::market::{generate_market, match_step, MarketConfig, MarketInstance, Model};

pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index`: `splitmix64(base_seed ^ splitmix64(index))`.
pub fn replica_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(index))
}

/// Traders still allowed to trade today, with O(1) removal.
struct EligibleSet {
    ids: Vec<usize>,
    slot: Vec<usize>,
}

impl EligibleSet {
    fn new(range: std::ops::Range<usize>, n_total: usize) -> Self {
        let mut s = Self {
            ids: Vec::with_capacity(range.len()),
            slot: vec![usize::MAX; n_total],
        };
        s.reset(range);
        s
    }

    fn reset(&mut self, range: std::ops::Range<usize>) {
        self.ids.clear();
        for id in range {
            self.slot[id] = self.ids.len();
            self.ids.push(id);
        }
    }

    fn remove(&mut self, id: usize) {
        let at = self.slot[id];
        let last = *self.ids.last().expect("remove from empty set");
        self.ids.swap_remove(at);
        if last != id {
            self.slot[last] = at;
        }
        self.slot[id] = usize::MAX;
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.ids[rng.random_range(0..self.ids.len())]
    }
}

/// Runs the full schedule on an already generated market.
pub fn run_session<R: Rng + ?Sized>(
    market: &MarketInstance,
    config: &MarketConfig,
    rng: &mut R,
) -> Result<TradeLog> {
    config.validate()?;
    let mut market = market.clone();
    let n = market.traders.len();
    let half = market.n_buyers();
    let bounds = PriceBounds::of(config);
    let mut population = Population::new(config, &market, rng);

    let forced = config.model == Model::Gd && config.gd_forced_trade;
    let by_limit = |range: std::ops::Range<usize>| {
        let mut ids: Vec<usize> = range.collect();
        ids.sort_by(|&a, &b| {
            market.traders[a]
                .limit
                .total_cmp(&market.traders[b].limit)
                .then(a.cmp(&b))
        });
        ids
    };
    let (buyers_by_limit, sellers_by_limit) = if forced {
        (by_limit(0..half), by_limit(half..n))
    } else {
        (Vec::new(), Vec::new())
    };
    let mut eligible_flag = vec![true; n];
    let mut scratch = CrossingScratch::default();

    let mut buyers = EligibleSet::new(0..half, n);
    let mut sellers = EligibleSet::new(half..n, n);
    let total_steps = config.total_steps();
    let mut shouts = Vec::with_capacity((2 * total_steps).min(1 << 24) as usize);
    let mut trades = Vec::new();

    for day in 0..config.n_days {
        buyers.reset(0..half);
        sellers.reset(half..n);
        for t in market.traders.iter_mut() {
            t.traded_today = false;
        }
        eligible_flag.iter_mut().for_each(|f| *f = true);
        population.start_day();

        for round in 0..config.rounds_per_day {
            let step = day * config.rounds_per_day + round;
            if buyers.ids.is_empty() || sellers.ids.is_empty() {
                continue;
            }
            let forced_pick = if forced {
                population.gd_crossing_pair(
                    &market,
                    &buyers_by_limit,
                    &sellers_by_limit,
                    &eligible_flag,
                    bounds,
                    &mut scratch,
                    rng,
                )
            } else {
                None
            };
            let (buyer, seller, bid, ask) = match forced_pick {
                Some(pick) => pick,
                None => {
                    let buyer = buyers.pick(rng);
                    let seller = sellers.pick(rng);
                    let bid = population.quote(&market, buyer, bounds, rng);
                    let ask = population.quote(&market, seller, bounds, rng);
                    (buyer, seller, bid, ask)
                }
            };
            let price = match_step(bid, ask, config.trade_price_rule, rng);
            let accepted = price.is_some();
            let events = [
                ShoutEvent {
                    step,
                    day,
                    trader_id: buyer,
                    kind: ShoutKind::Bid,
                    price: bid,
                    accepted,
                },
                ShoutEvent {
                    step,
                    day,
                    trader_id: seller,
                    kind: ShoutKind::Offer,
                    price: ask,
                    accepted,
                },
            ];
            if let Some(price) = price {
                trades.push(Trade {
                    step,
                    day,
                    buyer_id: buyer,
                    seller_id: seller,
                    bid,
                    ask,
                    price,
                });
                for id in [buyer, seller] {
                    market.traders[id].traded_today = true;
                    eligible_flag[id] = false;
                    population.mark_traded(id);
                }
                buyers.remove(buyer);
                sellers.remove(seller);
            }
            for event in &events {
                population.observe(&market, event, bounds, rng);
            }
            shouts.extend_from_slice(&events);
        }
    }
    for t in market.traders.iter_mut() {
        t.traded_today = false;
    }

    Ok(TradeLog {
        config: config.clone(),
        market,
        shouts,
        trades,
    })
}

/// Generates the market and runs the session from `config.seed` alone.
pub fn simulate(config: &MarketConfig) -> Result<TradeLog> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);
    let market = generate_market(config, &mut rng)?;
    run_session(&market, config, &mut rng)
}

/// Config of replica `index`: identical to `config` except for its seed.
pub fn replica_config(config: &MarketConfig, base_seed: u64, index: u64) -> MarketConfig {
    MarketConfig {
        seed: replica_seed(base_seed, index),
        ..config.clone()
    }
}

/// Independent runs, each on a freshly generated market. Replicas are
/// spread over the current rayon pool; output order follows replica index.
pub fn run_replicas(
    config: &MarketConfig,
    n_replicas: usize,
    base_seed: u64,
) -> Result<Vec<TradeLog>> {
    config.validate()?;
    (0..n_replicas as u64)
        .into_par_iter()
        .map(|i| simulate(&replica_config(config, base_seed, i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{Side, TradePriceRule};
    use std::collections::HashSet;

    fn small(model: Model) -> MarketConfig {
        MarketConfig {
            n_traders: 40,
            rounds_per_day: 50,
            n_days: 5,
            model,
            seed: 9,
            ..MarketConfig::default()
        }
    }

    #[test]
    fn seed_mixing_is_stable() {
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_ne!(replica_seed(1, 0), replica_seed(1, 1));
        assert_eq!(replica_seed(5, 3), replica_seed(5, 3));
    }

    #[test]
    fn two_trader_single_step() {
        let config = MarketConfig {
            n_traders: 2,
            rounds_per_day: 1,
            n_days: 1,
            ..MarketConfig::default()
        };
        for seed in 0..200 {
            let mut market = generate_market(&config, &mut rng_from_seed(seed)).unwrap();
            market.traders[0].limit = 100.0;
            market.traders[1].limit = 0.0;
            let log = run_session(&market, &config, &mut rng_from_seed(seed)).unwrap();
            assert!(log.trades.len() <= 1);
            assert_eq!(log.shouts.len(), 2);
            for t in &log.trades {
                assert!((0.0..=100.0).contains(&t.price));
            }
        }
    }

    #[test]
    fn step_count_and_per_day_limits() {
        for model in [Model::Zi, Model::Zip, Model::Gd] {
            let config = small(model);
            let log = simulate(&config).unwrap();
            assert!(log.shouts.len() as u64 <= 2 * config.total_steps());
            for day in 0..config.n_days {
                let mut seen = HashSet::new();
                for t in log.trades_on_day(day) {
                    assert!(
                        seen.insert(t.buyer_id),
                        "{model} buyer traded twice on day {day}"
                    );
                    assert!(seen.insert(t.seller_id));
                }
                assert!(seen.len() / 2 <= config.n_traders / 2);
            }
        }
    }

    #[test]
    fn budget_constraint_and_shout_consistency() {
        for model in [Model::Zi, Model::Zip, Model::Gd] {
            for rule in [
                TradePriceRule::Midpoint,
                TradePriceRule::BuyerPrice,
                TradePriceRule::SellerPrice,
                TradePriceRule::UniformRandom,
            ] {
                let config = MarketConfig {
                    trade_price_rule: rule,
                    ..small(model)
                };
                let log = simulate(&config).unwrap();
                for t in &log.trades {
                    let b = log.market.limit(t.buyer_id);
                    let s = log.market.limit(t.seller_id);
                    assert!(s <= t.ask && t.ask <= t.price && t.price <= t.bid && t.bid <= b);
                    assert_eq!(log.market.traders[t.buyer_id].side, Side::Buyer);
                }
                let accepted: Vec<u64> = log
                    .shouts
                    .iter()
                    .filter(|s| s.accepted)
                    .map(|s| s.step)
                    .collect();
                let traded: Vec<u64> = log.trades.iter().flat_map(|t| [t.step, t.step]).collect();
                assert_eq!(accepted, traded);
                assert!(log.trades.windows(2).all(|w| w[0].step < w[1].step));
            }
        }
    }

    #[test]
    fn paper_schedule_step_count() {
        let config = MarketConfig::default();
        assert_eq!(config.total_steps(), 400_000);
    }

    #[test]
    fn determinism() {
        for model in [Model::Zi, Model::Zip, Model::Gd] {
            let a = simulate(&small(model)).unwrap();
            let b = simulate(&small(model)).unwrap();
            assert_eq!(a, b);
        }
        let a = run_replicas(&small(Model::Zi), 3, 4).unwrap();
        let b = run_replicas(&small(Model::Zi), 3, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].trades, a[1].trades);
    }

    #[test]
    fn forced_gd_trades_whenever_a_crossing_pair_exists() {
        let config = MarketConfig {
            gd_forced_trade: true,
            ..small(Model::Gd)
        };
        let log = simulate(&config).unwrap();
        assert!(!log.trades.is_empty());
        for t in &log.trades {
            assert!(t.bid >= t.ask);
            assert!(
                log.market.limit(t.seller_id) <= t.ask && t.bid <= log.market.limit(t.buyer_id)
            );
        }
    }
}
