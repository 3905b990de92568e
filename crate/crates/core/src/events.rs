use serde::{Deserialize, Serialize};

use crate::market::{MarketConfig, MarketInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShoutKind {
    Bid,
    Offer,
}

impl ShoutKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ShoutKind::Bid => "bid",
            ShoutKind::Offer => "offer",
        }
    }
}

/// One quote made during a Monte Carlo step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShoutEvent {
    pub step: u64,
    pub day: u64,
    pub trader_id: usize,
    pub kind: ShoutKind,
    pub price: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub step: u64,
    pub day: u64,
    pub buyer_id: usize,
    pub seller_id: usize,
    pub bid: f64,
    pub ask: f64,
    pub price: f64,
}

/// Complete record of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeLog {
    pub config: MarketConfig,
    pub market: MarketInstance,
    pub shouts: Vec<ShoutEvent>,
    pub trades: Vec<Trade>,
}

impl TradeLog {
    /// Executed prices in transaction time, concatenated across days.
    pub fn prices(&self) -> Vec<f64> {
        self.trades.iter().map(|t| t.price).collect()
    }

    pub fn trades_on_day(&self, day: u64) -> impl Iterator<Item = &Trade> {
        self.trades.iter().filter(move |t| t.day == day)
    }

    /// Last day on which at least one trade happened.
    pub fn last_trading_day(&self) -> Option<u64> {
        self.trades.last().map(|t| t.day)
    }
}
