//! Zero-intelligence-plus traders: each agent keeps a profit margin on its
//! limit and nudges it toward a jittered target derived from the most recent
//! shout, using a Widrow-Hoff step with momentum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PriceBounds;
use crate::error::{Error, Result};
use crate::events::{ShoutEvent, ShoutKind};
use crate::market::{uniform_between, Side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZipParams {
    #[serde(rename = "beta_range")]
    pub learning_rate_range: [f64; 2],
    #[serde(rename = "gamma_range")]
    pub momentum_range: [f64; 2],
    /// Multiplicative target jitter used when the shout price moves up.
    pub rel_perturb_up: [f64; 2],
    /// Multiplicative target jitter used when the shout price moves down.
    pub rel_perturb_down: [f64; 2],
    /// Additive target jitter, as a fraction of `price_max - price_min`.
    pub abs_perturb: [f64; 2],
    /// Absolute value of the margin each agent starts with.
    pub initial_margin_range: [f64; 2],
}

impl Default for ZipParams {
    fn default() -> Self {
        Self {
            learning_rate_range: [0.1, 0.5],
            momentum_range: [0.0, 0.1],
            rel_perturb_up: [1.0, 1.05],
            rel_perturb_down: [0.95, 1.0],
            abs_perturb: [0.0, 0.05],
            initial_margin_range: [0.05, 0.35],
        }
    }
}

impl ZipParams {
    pub fn validate(&self) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        let checks = [
            (
                "beta_range",
                self.learning_rate_range,
                self.learning_rate_range[0] > 0.0 && self.learning_rate_range[1] <= 1.0,
            ),
            (
                "gamma_range",
                self.momentum_range,
                self.momentum_range[0] >= 0.0 && self.momentum_range[1] < 1.0,
            ),
            (
                "rel_perturb_up",
                self.rel_perturb_up,
                self.rel_perturb_up[0] >= 1.0,
            ),
            (
                "rel_perturb_down",
                self.rel_perturb_down,
                self.rel_perturb_down[0] > 0.0 && self.rel_perturb_down[1] <= 1.0,
            ),
            ("abs_perturb", self.abs_perturb, self.abs_perturb[0] >= 0.0),
            (
                "initial_margin_range",
                self.initial_margin_range,
                self.initial_margin_range[0] >= 0.0 && self.initial_margin_range[1] <= 1.0,
            ),
        ];
        for (name, range, ok) in checks {
            if !ordered(range) || !ok {
                return Err(Error::Config(format!(
                    "zip {name} {range:?} is out of bounds"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipState {
    /// Sellers keep a margin >= 0, buyers a margin in [-1, 0].
    pub margin: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub momentum_term: f64,
}

impl ZipState {
    pub fn new<R: Rng + ?Sized>(side: Side, params: &ZipParams, rng: &mut R) -> Self {
        let learning_rate = uniform_between(
            rng,
            params.learning_rate_range[0],
            params.learning_rate_range[1],
        );
        let momentum = uniform_between(rng, params.momentum_range[0], params.momentum_range[1]);
        let magnitude = uniform_between(
            rng,
            params.initial_margin_range[0],
            params.initial_margin_range[1],
        );
        let margin = match side {
            Side::Seller => magnitude,
            Side::Buyer => -magnitude,
        };
        Self {
            margin,
            learning_rate,
            momentum,
            momentum_term: 0.0,
        }
    }
}

/// Which way the agent's shout price should move after an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceMove {
    Up,
    Down,
}

pub fn zip_quote(limit: f64, state: &ZipState, bounds: PriceBounds) -> f64 {
    bounds.clamp(limit * (1.0 + state.margin))
}

/// Raise/lower decision from the four factors: whether the agent is still
/// active (has not traded today), the event price, its kind and whether it
/// was accepted.
pub fn zip_direction(
    side: Side,
    own_price: f64,
    event: &ShoutEvent,
    active: bool,
) -> Option<PriceMove> {
    let q = event.price;
    match side {
        Side::Seller => {
            if event.accepted {
                if own_price <= q {
                    Some(PriceMove::Up)
                } else if event.kind == ShoutKind::Bid && active {
                    Some(PriceMove::Down)
                } else {
                    None
                }
            } else if event.kind == ShoutKind::Offer && active && own_price >= q {
                Some(PriceMove::Down)
            } else {
                None
            }
        }
        Side::Buyer => {
            if event.accepted {
                if own_price >= q {
                    Some(PriceMove::Down)
                } else if event.kind == ShoutKind::Offer && active {
                    Some(PriceMove::Up)
                } else {
                    None
                }
            } else if event.kind == ShoutKind::Bid && active && own_price <= q {
                Some(PriceMove::Up)
            } else {
                None
            }
        }
    }
}

fn margin_bounds(side: Side, limit: f64, bounds: PriceBounds) -> (f64, f64) {
    match side {
        Side::Seller => (0.0, (bounds.max / limit - 1.0).max(0.0)),
        Side::Buyer => ((bounds.min / limit - 1.0).clamp(-1.0, 0.0), 0.0),
    }
}

/// Applies one learning step after `event`. Returns `true` if the agent moved.
#[allow(clippy::too_many_arguments)]
pub fn zip_update<R: Rng + ?Sized>(
    state: &mut ZipState,
    side: Side,
    limit: f64,
    event: &ShoutEvent,
    active: bool,
    params: &ZipParams,
    bounds: PriceBounds,
    rng: &mut R,
) -> bool {
    if limit == 0.0 {
        return false;
    }
    let price = zip_quote(limit, state, bounds);
    let Some(direction) = zip_direction(side, price, event, active) else {
        return false;
    };
    let agent = ZipAgent::new(side, limit, bounds);
    zip_move(
        state,
        &agent,
        price,
        direction,
        event.price,
        params,
        bounds,
        rng,
    );
    true
}

const TWO_POW_NEG_32: f64 = 1.0 / 4_294_967_296.0;

fn lerp(range: [f64; 2], u: f64) -> f64 {
    range[0] + (range[1] - range[0]) * u
}

/// Per-agent constants used by every learning step.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ZipAgent {
    pub limit: f64,
    inv_limit: f64,
    margin_lo: f64,
    margin_hi: f64,
}

impl ZipAgent {
    pub fn new(side: Side, limit: f64, bounds: PriceBounds) -> Self {
        let (margin_lo, margin_hi) = margin_bounds(side, limit, bounds);
        Self {
            limit,
            inv_limit: 1.0 / limit,
            margin_lo,
            margin_hi,
        }
    }
}

/// Moves the margin of an agent quoting `price` toward a perturbed target
/// around `event_price`. The agent's limit must be nonzero.
#[allow(clippy::too_many_arguments)]
pub(crate) fn zip_move<R: Rng + ?Sized>(
    state: &mut ZipState,
    agent: &ZipAgent,
    price: f64,
    direction: PriceMove,
    event_price: f64,
    params: &ZipParams,
    bounds: PriceBounds,
    rng: &mut R,
) {
    // both jitters come from one 64-bit draw, 32 bits each
    let bits: u64 = rng.random();
    let u_rel = (bits >> 32) as f64 * TWO_POW_NEG_32;
    let u_abs = (bits & 0xffff_ffff) as f64 * TWO_POW_NEG_32;
    let a = lerp(params.abs_perturb, u_abs) * (bounds.max - bounds.min);
    let target = match direction {
        PriceMove::Up => lerp(params.rel_perturb_up, u_rel) * event_price + a,
        PriceMove::Down => lerp(params.rel_perturb_down, u_rel) * event_price - a,
    };
    let delta = state.learning_rate * (target - price);
    state.momentum_term = state.momentum * state.momentum_term + (1.0 - state.momentum) * delta;
    let unclamped = agent.limit * (1.0 + state.margin);
    let margin = if unclamped == price {
        state.margin + state.momentum_term * agent.inv_limit
    } else {
        (price + state.momentum_term) * agent.inv_limit - 1.0
    };
    state.margin = margin.clamp(agent.margin_lo, agent.margin_hi);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::rng_from_seed;

    const BOUNDS: PriceBounds = PriceBounds {
        min: 0.0,
        max: 100.0,
    };

    fn fixed_params(beta: f64) -> ZipParams {
        ZipParams {
            learning_rate_range: [beta.max(1e-300), beta.max(1e-300)],
            momentum_range: [0.0, 0.0],
            rel_perturb_up: [1.0, 1.0],
            rel_perturb_down: [1.0, 1.0],
            abs_perturb: [0.0, 0.0],
            initial_margin_range: [0.1, 0.1],
        }
    }

    fn event(kind: ShoutKind, price: f64, accepted: bool) -> ShoutEvent {
        ShoutEvent {
            step: 0,
            day: 0,
            trader_id: 0,
            kind,
            price,
            accepted,
        }
    }

    #[test]
    fn quote_formula_and_clamp() {
        let s = |m| ZipState {
            margin: m,
            learning_rate: 0.1,
            momentum: 0.0,
            momentum_term: 0.0,
        };
        assert!((zip_quote(50.0, &s(0.2), BOUNDS) - 60.0).abs() < 1e-12);
        assert!((zip_quote(50.0, &s(-0.2), BOUNDS) - 40.0).abs() < 1e-12);
        assert_eq!(zip_quote(98.0, &s(0.2), BOUNDS), 100.0);
    }

    #[test]
    fn seller_raises_toward_accepted_price() {
        let limit = 50.0;
        let mut state = ZipState {
            margin: 0.2,
            learning_rate: 0.5,
            momentum: 0.0,
            momentum_term: 0.0,
        };
        let mut rng = rng_from_seed(0);
        let moved = zip_update(
            &mut state,
            Side::Seller,
            limit,
            &event(ShoutKind::Bid, 70.0, true),
            false,
            &fixed_params(0.5),
            BOUNDS,
            &mut rng,
        );
        assert!(moved);
        // target 70, delta 0.5 * (70 - 60) = 5, new shout 65
        assert!((zip_quote(limit, &state, BOUNDS) - 65.0).abs() < 1e-12);
        assert!((state.margin - (65.0 / limit - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_leaves_state_unchanged() {
        let mut state = ZipState {
            margin: -0.3,
            learning_rate: 0.0,
            momentum: 0.0,
            momentum_term: 0.0,
        };
        let before = state;
        let mut rng = rng_from_seed(0);
        zip_update(
            &mut state,
            Side::Buyer,
            80.0,
            &event(ShoutKind::Offer, 30.0, true),
            true,
            &ZipParams::default(),
            BOUNDS,
            &mut rng,
        );
        assert_eq!(state.margin, before.margin);
        assert_eq!(state.momentum_term, 0.0);
    }

    #[test]
    fn zero_limit_is_skipped() {
        let mut state = ZipState {
            margin: -0.3,
            learning_rate: 0.4,
            momentum: 0.0,
            momentum_term: 0.0,
        };
        let mut rng = rng_from_seed(0);
        assert!(!zip_update(
            &mut state,
            Side::Buyer,
            0.0,
            &event(ShoutKind::Bid, 30.0, false),
            true,
            &ZipParams::default(),
            BOUNDS,
            &mut rng,
        ));
        assert_eq!(state.margin, -0.3);
    }

    #[test]
    fn decision_table() {
        use PriceMove::*;
        let acc_bid = event(ShoutKind::Bid, 50.0, true);
        let acc_offer = event(ShoutKind::Offer, 50.0, true);
        let rej_bid = event(ShoutKind::Bid, 50.0, false);
        let rej_offer = event(ShoutKind::Offer, 50.0, false);
        // sellers
        assert_eq!(
            zip_direction(Side::Seller, 45.0, &acc_offer, false),
            Some(Up)
        );
        assert_eq!(
            zip_direction(Side::Seller, 55.0, &acc_bid, true),
            Some(Down)
        );
        assert_eq!(zip_direction(Side::Seller, 55.0, &acc_bid, false), None);
        assert_eq!(zip_direction(Side::Seller, 55.0, &acc_offer, true), None);
        assert_eq!(
            zip_direction(Side::Seller, 55.0, &rej_offer, true),
            Some(Down)
        );
        assert_eq!(zip_direction(Side::Seller, 55.0, &rej_offer, false), None);
        assert_eq!(zip_direction(Side::Seller, 55.0, &rej_bid, true), None);
        // buyers
        assert_eq!(
            zip_direction(Side::Buyer, 55.0, &acc_bid, false),
            Some(Down)
        );
        assert_eq!(zip_direction(Side::Buyer, 45.0, &acc_offer, true), Some(Up));
        assert_eq!(zip_direction(Side::Buyer, 45.0, &acc_offer, false), None);
        assert_eq!(zip_direction(Side::Buyer, 45.0, &acc_bid, true), None);
        assert_eq!(zip_direction(Side::Buyer, 45.0, &rej_bid, true), Some(Up));
        assert_eq!(zip_direction(Side::Buyer, 45.0, &rej_offer, true), None);
    }

    #[test]
    fn margins_keep_their_sign_under_random_updates() {
        let mut rng = rng_from_seed(99);
        let params = ZipParams::default();
        for side in [Side::Buyer, Side::Seller] {
            let mut state = ZipState::new(side, &params, &mut rng);
            let limit = 37.0;
            for _ in 0..20_000 {
                let kind = if rng.random::<bool>() {
                    ShoutKind::Bid
                } else {
                    ShoutKind::Offer
                };
                let ev = event(kind, rng.random::<f64>() * 100.0, rng.random::<bool>());
                zip_update(
                    &mut state,
                    side,
                    limit,
                    &ev,
                    rng.random::<bool>(),
                    &params,
                    BOUNDS,
                    &mut rng,
                );
                match side {
                    Side::Buyer => assert!((-1.0..=0.0).contains(&state.margin)),
                    Side::Seller => assert!(state.margin >= 0.0),
                }
                let p = zip_quote(limit, &state, BOUNDS);
                match side {
                    Side::Buyer => assert!(p <= limit),
                    Side::Seller => assert!(p >= limit),
                }
            }
        }
    }
}
