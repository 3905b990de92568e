//! Continuous double auction simulator with zero-intelligence (ZI),
//! zero-intelligence-plus (ZIP) and Gjerstad-Dickhaut (GD) traders, and the
//! statistics used to study the resulting markets: transaction-network
//! degrees, anti-community sizes, inter-trade intervals and normalized
//! returns in transaction time.

// NaN must fail the positivity and tolerance guards
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod community;
pub mod engine;
pub mod error;
pub mod events;
pub mod experiment;
pub mod market;
pub mod netgraph;
pub mod persist;
pub mod stats;

pub use error::{Error, Result};
pub use events::{ShoutEvent, ShoutKind, Trade, TradeLog};
pub use market::{MarketConfig, MarketInstance, Model, Side, TradePriceRule};
