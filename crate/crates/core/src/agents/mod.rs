//! Quoting strategies. All agents in a run share one model.

pub mod gd;
pub mod zi;
pub mod zip;

use rand::Rng;

pub use gd::{gd_belief, gd_quote, BeliefTable, GdHistory, GdParams, PriceGrid};
pub use zi::zi_quote;
pub use zip::{zip_direction, zip_quote, zip_update, PriceMove, ZipParams, ZipState};
use zip::{zip_move, ZipAgent};

use crate::events::{ShoutEvent, ShoutKind};
use crate::market::{MarketConfig, MarketInstance, Model, Side};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBounds {
    pub min: f64,
    pub max: f64,
}

impl PriceBounds {
    pub fn of(config: &MarketConfig) -> Self {
        Self {
            min: config.price_min,
            max: config.price_max,
        }
    }

    pub fn clamp(&self, price: f64) -> f64 {
        price.clamp(self.min, self.max)
    }
}

/// ZIP state of the whole population, with every quote cached.
#[derive(Debug, Clone)]
pub(crate) struct ZipAgents {
    params: ZipParams,
    states: Vec<ZipState>,
    agents: Vec<ZipAgent>,
    prices: Vec<f64>,
    /// Quote of each trader that is still active today, NaN otherwise, so a
    /// single comparison tests both conditions.
    keys: Vec<f64>,
    candidates: Vec<usize>,
}

impl ZipAgents {
    fn new<R: Rng + ?Sized>(config: &MarketConfig, market: &MarketInstance, rng: &mut R) -> Self {
        let params = config.model_params.zip.clone();
        let states: Vec<ZipState> = market
            .traders
            .iter()
            .map(|t| ZipState::new(t.side, &params, rng))
            .collect();
        let bounds = PriceBounds::of(config);
        let prices: Vec<f64> = market
            .traders
            .iter()
            .zip(&states)
            .map(|(t, state)| zip_quote(t.limit, state, bounds))
            .collect();
        let agents = market
            .traders
            .iter()
            .map(|t| ZipAgent::new(t.side, t.limit, bounds))
            .collect();
        Self {
            params,
            states,
            agents,
            keys: prices.clone(),
            candidates: vec![0; prices.len()],
            prices,
        }
    }

    /// Same decisions as [`zip_direction`]. A rejected bid can only move
    /// buyers and a rejected offer only sellers, so those passes touch one
    /// side.
    fn observe<R: Rng + ?Sized>(
        &mut self,
        market: &MarketInstance,
        event: &ShoutEvent,
        bounds: PriceBounds,
        rng: &mut R,
    ) {
        let half = market.n_buyers();
        let n = market.traders.len();
        let q = event.price;
        let (prices, keys, cands) = (&self.prices, &self.keys, &mut self.candidates);
        let mut count = 0;
        match (event.accepted, event.kind) {
            (true, kind) => {
                let offer = kind == ShoutKind::Offer;
                count = collect(cands, count, 0..half, |i| {
                    prices[i] >= q || (offer && keys[i] < q)
                });
                count = collect(cands, count, half..n, |i| {
                    prices[i] <= q || (!offer && keys[i] > q)
                });
            }
            (false, ShoutKind::Bid) => count = collect(cands, count, 0..half, |i| keys[i] <= q),
            (false, ShoutKind::Offer) => count = collect(cands, count, half..n, |i| keys[i] >= q),
        }
        for &i in &self.candidates[..count] {
            let t = &market.traders[i];
            if t.limit == 0.0 {
                continue;
            }
            let price = self.prices[i];
            let direction = match (event.accepted, t.side) {
                (true, Side::Buyer) if price >= q => PriceMove::Down,
                (true, Side::Seller) if price <= q => PriceMove::Up,
                (true, Side::Buyer) => PriceMove::Up,
                (true, Side::Seller) => PriceMove::Down,
                (false, Side::Buyer) => PriceMove::Up,
                (false, Side::Seller) => PriceMove::Down,
            };
            zip_move(
                &mut self.states[i],
                &self.agents[i],
                price,
                direction,
                q,
                &self.params,
                bounds,
                rng,
            );
            let new_price = zip_quote(t.limit, &self.states[i], bounds);
            self.prices[i] = new_price;
            if !self.keys[i].is_nan() {
                self.keys[i] = new_price;
            }
        }
    }
}

/// Appends the indices in `range` that satisfy `hit` without branching.
fn collect(
    out: &mut [usize],
    mut count: usize,
    range: std::ops::Range<usize>,
    hit: impl Fn(usize) -> bool,
) -> usize {
    for i in range {
        out[count] = i;
        count += hit(i) as usize;
    }
    count
}

/// Per-run strategy state for the whole population.
#[derive(Debug, Clone)]
pub(crate) enum Population {
    Zi,
    Zip(ZipAgents),
    Gd {
        history: GdHistory,
        table: BeliefTable,
        stale: bool,
    },
}

impl Population {
    pub fn new<R: Rng + ?Sized>(
        config: &MarketConfig,
        market: &MarketInstance,
        rng: &mut R,
    ) -> Self {
        match config.model {
            Model::Zi => Population::Zi,
            Model::Zip => Population::Zip(ZipAgents::new(config, market, rng)),
            Model::Gd => Population::Gd {
                history: GdHistory::new(config.model_params.gd.memory_len),
                table: BeliefTable::default(),
                stale: true,
            },
        }
    }

    pub fn quote<R: Rng + ?Sized>(
        &mut self,
        market: &MarketInstance,
        trader: usize,
        bounds: PriceBounds,
        rng: &mut R,
    ) -> f64 {
        let t = &market.traders[trader];
        match self {
            Population::Zi => zi_quote(t.side, t.limit, bounds, rng),
            Population::Zip(agents) => agents.prices[trader],
            Population::Gd { .. } => self.gd_table(bounds).quote(t.side, t.limit),
        }
    }

    fn gd_table(&mut self, bounds: PriceBounds) -> &BeliefTable {
        match self {
            Population::Gd {
                history,
                table,
                stale,
            } => {
                if *stale {
                    table.rebuild(history, bounds);
                    *stale = false;
                }
                table
            }
            _ => unreachable!("belief table requested for a non-GD population"),
        }
    }

    /// Feeds one shout to every agent that learns from the market stream.
    /// A trader is active while it still has its unit, i.e. until it trades
    /// on the current day.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        market: &MarketInstance,
        event: &ShoutEvent,
        bounds: PriceBounds,
        rng: &mut R,
    ) {
        match self {
            Population::Zi => {}
            Population::Zip(agents) => agents.observe(market, event, bounds, rng),
            Population::Gd { history, stale, .. } => {
                history.push(event);
                *stale = true;
            }
        }
    }

    /// Marks a trader as done for the day.
    pub fn mark_traded(&mut self, trader: usize) {
        if let Population::Zip(agents) = self {
            agents.keys[trader] = f64::NAN;
        }
    }

    pub fn start_day(&mut self) {
        if let Population::Zip(agents) = self {
            agents.keys.copy_from_slice(&agents.prices);
        }
    }

    /// Draws a buyer/seller pair uniformly among eligible pairs whose GD
    /// quotes cross. Returns `(buyer, seller, bid, ask)`, or `None` when no
    /// such pair exists.
    #[allow(clippy::too_many_arguments)]
    pub fn gd_crossing_pair<R: Rng + ?Sized>(
        &mut self,
        market: &MarketInstance,
        buyers_by_limit: &[usize],
        sellers_by_limit: &[usize],
        eligible: &[bool],
        bounds: PriceBounds,
        scratch: &mut CrossingScratch,
        rng: &mut R,
    ) -> Option<(usize, usize, f64, f64)> {
        let table = self.gd_table(bounds);
        let s = scratch;
        for (ids, limits, side) in [
            (&mut s.buyer_ids, &mut s.buyer_limits, Side::Buyer),
            (&mut s.seller_ids, &mut s.seller_limits, Side::Seller),
        ] {
            ids.clear();
            limits.clear();
            let order = if side == Side::Buyer {
                buyers_by_limit
            } else {
                sellers_by_limit
            };
            for &id in order {
                if eligible[id] {
                    ids.push(id);
                    limits.push(market.traders[id].limit);
                }
            }
        }
        table.quotes_sorted(Side::Buyer, &s.buyer_limits, &mut s.bids);
        table.quotes_sorted(Side::Seller, &s.seller_limits, &mut s.asks);

        // quotes are monotone in the limit, so both lists are usually
        // sorted already; ties in floating point can still break that
        s.ask_order.clear();
        s.ask_order.extend(0..s.asks.len());
        if !s.asks.is_sorted() {
            let asks = &s.asks;
            s.ask_order
                .sort_by(|&a, &b| asks[a].total_cmp(&asks[b]).then(a.cmp(&b)));
        }
        s.sorted_asks.clear();
        s.sorted_asks.extend(s.ask_order.iter().map(|&i| s.asks[i]));

        s.counts.clear();
        let mut total: u64 = 0;
        let bids_sorted = s.bids.is_sorted();
        let mut below = 0;
        for &bid in &s.bids {
            let n = if bids_sorted {
                while below < s.sorted_asks.len() && s.sorted_asks[below] <= bid {
                    below += 1;
                }
                below
            } else {
                s.sorted_asks.partition_point(|&a| a <= bid)
            } as u64;
            s.counts.push(n);
            total += n;
        }
        if total == 0 {
            return None;
        }
        let mut r = rng.random_range(0..total);
        for (bi, &n) in s.counts.iter().enumerate() {
            if r < n {
                let si = s.ask_order[r as usize];
                return Some((s.buyer_ids[bi], s.seller_ids[si], s.bids[bi], s.asks[si]));
            }
            r -= n;
        }
        unreachable!("crossing pair index out of range")
    }
}

/// Reusable buffers for the forced-trade pair draw.
#[derive(Debug, Default)]
pub(crate) struct CrossingScratch {
    buyer_ids: Vec<usize>,
    buyer_limits: Vec<f64>,
    seller_ids: Vec<usize>,
    seller_limits: Vec<f64>,
    bids: Vec<f64>,
    asks: Vec<f64>,
    ask_order: Vec<usize>,
    sorted_asks: Vec<f64>,
    counts: Vec<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::rng_from_seed;
    use crate::market::generate_market;

    #[test]
    fn zip_population_matches_per_agent_rule() {
        let config = MarketConfig {
            n_traders: 40,
            model: Model::Zip,
            ..MarketConfig::default()
        };
        let bounds = PriceBounds::of(&config);
        let mut rng = rng_from_seed(5);
        let mut market = generate_market(&config, &mut rng).unwrap();
        let mut agents = ZipAgents::new(&config, &market, &mut rng);
        let mut reference = agents.states.clone();
        let (mut fast_rng, mut ref_rng) = (rng_from_seed(6), rng_from_seed(6));
        let mut events = rng_from_seed(7);
        for step in 0..5000u64 {
            if step % 100 == 0 {
                market
                    .traders
                    .iter_mut()
                    .for_each(|t| t.traded_today = false);
                agents.keys.copy_from_slice(&agents.prices);
            }
            if events.random::<f64>() < 0.05 {
                let id = events.random_range(0..market.traders.len());
                market.traders[id].traded_today = true;
                agents.keys[id] = f64::NAN;
            }
            let event = ShoutEvent {
                step,
                day: step / 100,
                trader_id: 0,
                kind: if events.random::<bool>() {
                    ShoutKind::Bid
                } else {
                    ShoutKind::Offer
                },
                price: 100.0 * events.random::<f64>(),
                accepted: events.random::<f64>() < 0.3,
            };
            agents.observe(&market, &event, bounds, &mut fast_rng);
            for (t, state) in market.traders.iter().zip(reference.iter_mut()) {
                zip_update(
                    state,
                    t.side,
                    t.limit,
                    &event,
                    !t.traded_today,
                    &agents.params,
                    bounds,
                    &mut ref_rng,
                );
            }
            assert_eq!(agents.states, reference, "diverged at step {step}");
            for (t, (p, s)) in market
                .traders
                .iter()
                .zip(agents.prices.iter().zip(&reference))
            {
                assert_eq!(*p, zip_quote(t.limit, s, bounds));
            }
        }
    }
}
