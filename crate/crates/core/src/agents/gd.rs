//! Gjerstad-Dickhaut traders. Every agent reads the same sliding window of
//! recent shouts, turns it into an acceptance belief for each candidate price
//! and quotes the price with the highest belief-weighted surplus.
//!
//! Beliefs are step functions of price whose breakpoints are the observed
//! shout prices, so evaluating them on the observed prices loses no optimum.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::PriceBounds;
use crate::error::{Error, Result};
use crate::events::{ShoutEvent, ShoutKind};
use crate::market::Side;

/// How candidate quote prices are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceGrid {
    /// Every shout price in memory, both ends of the price range, and the
    /// agent's own limit.
    #[default]
    ObservedBoundsLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GdParams {
    pub memory_len: usize,
    pub price_grid: PriceGrid,
}

impl Default for GdParams {
    fn default() -> Self {
        Self {
            memory_len: 2000,
            price_grid: PriceGrid::ObservedBoundsLimit,
        }
    }
}

impl GdParams {
    pub fn validate(&self) -> Result<()> {
        if self.memory_len == 0 {
            return Err(Error::Config("gd memory_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    AcceptedBid = 0,
    RejectedBid = 1,
    AcceptedAsk = 2,
    RejectedAsk = 3,
}

impl Class {
    fn of(kind: ShoutKind, accepted: bool) -> Self {
        match (kind, accepted) {
            (ShoutKind::Bid, true) => Class::AcceptedBid,
            (ShoutKind::Bid, false) => Class::RejectedBid,
            (ShoutKind::Offer, true) => Class::AcceptedAsk,
            (ShoutKind::Offer, false) => Class::RejectedAsk,
        }
    }
}

fn insert_sorted(v: &mut Vec<f64>, x: f64) {
    let at = v.partition_point(|&p| p < x);
    v.insert(at, x);
}

fn remove_sorted(v: &mut Vec<f64>, x: f64) {
    let at = v.partition_point(|&p| p < x);
    debug_assert!(at < v.len() && v[at] == x);
    v.remove(at);
}

/// Sliding window over the last `capacity` shouts, shared by all GD agents.
#[derive(Debug, Clone)]
pub struct GdHistory {
    capacity: usize,
    ring: VecDeque<(f64, Class)>,
    by_class: [Vec<f64>; 4],
    all: Vec<f64>,
}

impl GdHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            ring: VecDeque::with_capacity(capacity.max(1)),
            by_class: Default::default(),
            all: Vec::new(),
        }
    }

    pub fn from_events<'a>(
        capacity: usize,
        events: impl IntoIterator<Item = &'a ShoutEvent>,
    ) -> Self {
        let mut h = Self::new(capacity);
        for e in events {
            h.push(e);
        }
        h
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn push(&mut self, event: &ShoutEvent) {
        self.push_raw(event.price, event.kind, event.accepted);
    }

    pub fn push_raw(&mut self, price: f64, kind: ShoutKind, accepted: bool) {
        if self.ring.len() == self.capacity {
            if let Some((old, class)) = self.ring.pop_front() {
                remove_sorted(&mut self.by_class[class as usize], old);
                remove_sorted(&mut self.all, old);
            }
        }
        let class = Class::of(kind, accepted);
        self.ring.push_back((price, class));
        insert_sorted(&mut self.by_class[class as usize], price);
        insert_sorted(&mut self.all, price);
    }

    /// Events in memory, oldest first, as `(price, kind, accepted)`.
    pub fn iter(&self) -> impl Iterator<Item = (f64, ShoutKind, bool)> + '_ {
        self.ring.iter().map(|&(p, c)| match c {
            Class::AcceptedBid => (p, ShoutKind::Bid, true),
            Class::RejectedBid => (p, ShoutKind::Bid, false),
            Class::AcceptedAsk => (p, ShoutKind::Offer, true),
            Class::RejectedAsk => (p, ShoutKind::Offer, false),
        })
    }

    fn count_le(&self, class: Class, x: f64) -> usize {
        self.by_class[class as usize].partition_point(|&p| p <= x)
    }

    fn count_ge(&self, class: Class, x: f64) -> usize {
        let v = &self.by_class[class as usize];
        v.len() - v.partition_point(|&p| p < x)
    }
}

fn ratio(favourable: usize, unfavourable: usize) -> f64 {
    let total = favourable + unfavourable;
    if total == 0 {
        1.0
    } else {
        favourable as f64 / total as f64
    }
}

/// Probability that a shout at `price` is accepted, as believed by an agent on
/// `side`. An empty count is read optimistically as certainty.
pub fn gd_belief(history: &GdHistory, side: Side, price: f64) -> f64 {
    use Class::*;
    match side {
        Side::Seller => {
            let favourable = history.count_ge(AcceptedAsk, price)
                + history.count_ge(AcceptedBid, price)
                + history.count_ge(RejectedBid, price);
            ratio(favourable, history.count_le(RejectedAsk, price))
        }
        Side::Buyer => {
            let favourable = history.count_le(AcceptedBid, price)
                + history.count_le(AcceptedAsk, price)
                + history.count_le(RejectedAsk, price);
            ratio(favourable, history.count_ge(RejectedBid, price))
        }
    }
}

/// Beliefs of both sides evaluated on every candidate price of a history.
#[derive(Debug, Clone, Default)]
pub struct BeliefTable {
    grid: Vec<f64>,
    buyer: Vec<f64>,
    seller: Vec<f64>,
}

impl BeliefTable {
    pub fn new(history: &GdHistory, bounds: PriceBounds) -> Self {
        let mut t = Self::default();
        t.rebuild(history, bounds);
        t
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn buyer_beliefs(&self) -> &[f64] {
        &self.buyer
    }

    pub fn seller_beliefs(&self) -> &[f64] {
        &self.seller
    }

    pub fn rebuild(&mut self, history: &GdHistory, bounds: PriceBounds) {
        self.grid.clear();
        self.buyer.clear();
        self.seller.clear();
        self.grid.push(bounds.min);
        for &p in &history.all {
            if p > *self.grid.last().unwrap() {
                self.grid.push(p);
            }
        }
        if bounds.max > *self.grid.last().unwrap() {
            self.grid.push(bounds.max);
        }

        let classes = &history.by_class;
        let mut le = [0usize; 4];
        let mut lt = [0usize; 4];
        for &x in &self.grid {
            for c in 0..4 {
                let v = &classes[c];
                while lt[c] < v.len() && v[lt[c]] < x {
                    lt[c] += 1;
                }
                if le[c] < lt[c] {
                    le[c] = lt[c];
                }
                while le[c] < v.len() && v[le[c]] <= x {
                    le[c] += 1;
                }
            }
            let ge = |c: Class| classes[c as usize].len() - lt[c as usize];
            let le_of = |c: Class| le[c as usize];
            use Class::*;
            self.buyer.push(ratio(
                le_of(AcceptedBid) + le_of(AcceptedAsk) + le_of(RejectedAsk),
                ge(RejectedBid),
            ));
            self.seller.push(ratio(
                ge(AcceptedAsk) + ge(AcceptedBid) + ge(RejectedBid),
                le_of(RejectedAsk),
            ));
        }
    }

    pub fn quote(&self, side: Side, limit: f64) -> f64 {
        match side {
            Side::Buyer => self.buyer_quote(limit),
            Side::Seller => self.seller_quote(limit),
        }
    }

    /// Highest belief-weighted surplus over candidates at or below `limit`;
    /// ties go to the candidate nearest the limit.
    pub fn buyer_quote(&self, limit: f64) -> f64 {
        let mut best = (0.0, limit);
        for (&x, &q) in self.grid.iter().zip(&self.buyer) {
            if x > limit {
                break;
            }
            let v = q * (limit - x);
            if v >= best.0 {
                best = (v, x);
            }
        }
        if best.0 > 0.0 {
            best.1
        } else {
            limit
        }
    }

    pub fn seller_quote(&self, limit: f64) -> f64 {
        let mut best = (0.0, limit);
        for (&x, &p) in self.grid.iter().zip(&self.seller).rev() {
            if x < limit {
                break;
            }
            let v = p * (x - limit);
            if v >= best.0 {
                best = (v, x);
            }
        }
        if best.0 > 0.0 {
            best.1
        } else {
            limit
        }
    }

    /// Quotes for many agents of one side at once. `limits` must be sorted
    /// ascending. Uses the upper envelope of the surplus lines, which is
    /// linear in the number of candidates plus agents.
    pub fn quotes_sorted(&self, side: Side, limits: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let envelope = Envelope::build(self, side);
        envelope.query_sorted(limits, side, out);
    }
}

/// Upper envelope of the lines `L -> belief_j * (L - x_j)` (buyers) or
/// `L -> belief_j * (x_j - L)` (sellers), stored in increasing slope order.
struct Envelope {
    slope: Vec<f64>,
    intercept: Vec<f64>,
    price: Vec<f64>,
}

impl Envelope {
    fn build(table: &BeliefTable, side: Side) -> Self {
        let mut env = Envelope {
            slope: Vec::new(),
            intercept: Vec::new(),
            price: Vec::new(),
        };
        let beliefs = match side {
            Side::Buyer => &table.buyer,
            Side::Seller => &table.seller,
        };
        for (&x, &b) in table.grid.iter().zip(beliefs) {
            if b <= 0.0 {
                continue;
            }
            let (m, c) = match side {
                Side::Buyer => (b, -b * x),
                Side::Seller => (-b, b * x),
            };
            env.push(m, c, x);
        }
        env
    }

    fn push(&mut self, m: f64, c: f64, x: f64) {
        if let Some(&last_m) = self.slope.last() {
            if last_m == m {
                if *self.intercept.last().unwrap() >= c {
                    return;
                }
                self.pop();
            }
        }
        while self.slope.len() >= 2 {
            let n = self.slope.len();
            let (m1, c1) = (self.slope[n - 2], self.intercept[n - 2]);
            let (m2, c2) = (self.slope[n - 1], self.intercept[n - 1]);
            // middle line is dominated once the outer two meet left of it
            if (c1 - c) * (m2 - m1) <= (c1 - c2) * (m - m1) {
                self.pop();
            } else {
                break;
            }
        }
        self.slope.push(m);
        self.intercept.push(c);
        self.price.push(x);
    }

    fn pop(&mut self) {
        self.slope.pop();
        self.intercept.pop();
        self.price.pop();
    }

    fn value(&self, i: usize, at: f64) -> f64 {
        self.slope[i] * at + self.intercept[i]
    }

    fn query_sorted(&self, limits: &[f64], side: Side, out: &mut Vec<f64>) {
        let mut i = 0;
        for &limit in limits {
            if self.slope.is_empty() {
                out.push(limit);
                continue;
            }
            while i + 1 < self.slope.len() {
                let (cur, next) = (self.value(i, limit), self.value(i + 1, limit));
                let advance = match side {
                    Side::Buyer => next >= cur,
                    Side::Seller => next > cur,
                };
                if advance {
                    i += 1;
                } else {
                    break;
                }
            }
            out.push(if self.value(i, limit) > 0.0 {
                self.price[i]
            } else {
                limit
            });
        }
    }
}

/// Expected-surplus maximizing quote for one agent.
pub fn gd_quote(side: Side, limit: f64, history: &GdHistory, bounds: PriceBounds) -> f64 {
    BeliefTable::new(history, bounds).quote(side, limit)
}
