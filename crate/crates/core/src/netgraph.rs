//! Transaction networks: traders are nodes, and two traders are linked when
//! they traded with each other at least once.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::events::{Trade, TradeLog};
use crate::market::{equilibrium, MarketInstance, Side};
use crate::stats::{linear_histogram, log_bin_histogram_discrete, percentile, Histogram};

/// Simple undirected graph over trader ids, with per-edge trade counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransactionNetwork {
    ids: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
    multiplicity: BTreeMap<(usize, usize), u64>,
}

impl TransactionNetwork {
    /// Graph on the given trader ids with the given undirected edges
    /// (repeats add multiplicity, self-loops are dropped).
    pub fn from_edges(
        ids: impl IntoIterator<Item = usize>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        let index: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut multiplicity = BTreeMap::new();
        for (a, b) in edges {
            if a == b {
                continue;
            }
            let (a, b) = (index[&a], index[&b]);
            *multiplicity.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
        let mut adjacency = vec![Vec::new(); ids.len()];
        for &(a, b) in multiplicity.keys() {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            ids,
            adjacency,
            multiplicity,
        }
    }

    pub fn from_trades(trades: &[Trade]) -> Self {
        let ids = trades.iter().flat_map(|t| [t.buyer_id, t.seller_id]);
        let edges = trades.iter().map(|t| (t.buyer_id, t.seller_id));
        Self::from_edges(ids, edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn n_edges(&self) -> usize {
        self.multiplicity.len()
    }

    /// Trader id of each node, ascending.
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn node_of(&self, trader_id: usize) -> Option<usize> {
        self.ids.binary_search(&trader_id).ok()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.ids.is_empty() {
            0.0
        } else {
            2.0 * self.n_edges() as f64 / self.n_nodes() as f64
        }
    }

    /// Edges as `(trader_u, trader_v, multiplicity)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.multiplicity
            .iter()
            .map(|(&(a, b), &m)| (self.ids[a], self.ids[b], m))
    }

    /// Node-index edge list.
    pub fn edge_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.multiplicity.keys().copied()
    }

    /// Connected components as sorted lists of node indices, ordered by
    /// their smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut i = 0;
            while i < comp.len() {
                for &v in &self.adjacency[comp[i]] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

pub fn build_network(log: &TradeLog) -> TransactionNetwork {
    TransactionNetwork::from_trades(&log.trades)
}

/// Number of nodes of each degree.
pub fn degree_counts(net: &TransactionNetwork) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for d in net.degrees() {
        *counts.entry(d).or_insert(0) += 1;
    }
    counts
}

fn positive_degrees(degrees: impl Iterator<Item = usize>) -> Vec<u64> {
    degrees.filter(|&d| d > 0).map(|d| d as u64).collect()
}

/// Log-binned degree density of all nodes.
pub fn degree_histogram(net: &TransactionNetwork, bins_per_decade: usize) -> Result<Histogram> {
    log_bin_histogram_discrete(
        &positive_degrees(net.degrees().into_iter()),
        bins_per_decade,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalClass {
    Intramarginal,
    Extramarginal,
}

impl MarginalClass {
    pub fn as_str(self) -> &'static str {
        match self {
            MarginalClass::Intramarginal => "intramarginal",
            MarginalClass::Extramarginal => "extramarginal",
        }
    }
}

/// Labels every trader, indexed by trader id. A buyer is intramarginal when
/// its limit is at or above the equilibrium price, a seller when at or below.
pub fn classify_marginal(market: &MarketInstance) -> Result<Vec<MarginalClass>> {
    let (p_eq, _) = equilibrium(&market.demand, &market.supply)?;
    Ok(market
        .traders
        .iter()
        .map(|t| {
            let intra = match t.side {
                Side::Buyer => t.limit >= p_eq,
                Side::Seller => t.limit <= p_eq,
            };
            if intra {
                MarginalClass::Intramarginal
            } else {
                MarginalClass::Extramarginal
            }
        })
        .collect())
}

/// Full-graph degrees of the nodes in one class.
pub fn degrees_of_class(
    net: &TransactionNetwork,
    classes: &[MarginalClass],
    which: MarginalClass,
) -> Vec<usize> {
    net.ids()
        .iter()
        .enumerate()
        .filter(|(_, &id)| classes[id] == which)
        .map(|(node, _)| net.degree(node))
        .collect()
}

pub fn degree_histogram_by_class(
    net: &TransactionNetwork,
    classes: &[MarginalClass],
    which: MarginalClass,
    bins_per_decade: usize,
) -> Result<Histogram> {
    let degrees = degrees_of_class(net, classes, which);
    log_bin_histogram_discrete(&positive_degrees(degrees.into_iter()), bins_per_decade)
}

/// Separation between the intramarginal and extramarginal degree
/// populations. `separated` holds when the intramarginal mode lies above
/// the extramarginal 95th percentile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBump {
    pub intramarginal_mode: f64,
    pub extramarginal_p95: f64,
    pub separated: bool,
}

/// Bins used to locate the intramarginal mode.
pub const MODE_BINS: usize = 20;

pub fn tail_bump(intramarginal: &[usize], extramarginal: &[usize]) -> Option<TailBump> {
    let intra: Vec<f64> = intramarginal.iter().map(|&d| d as f64).collect();
    let extra: Vec<f64> = extramarginal.iter().map(|&d| d as f64).collect();
    let intramarginal_mode = linear_histogram(&intra, MODE_BINS).mode()?;
    let extramarginal_p95 = percentile(&extra, 0.95)?;
    Some(TailBump {
        intramarginal_mode,
        extramarginal_p95,
        separated: intramarginal_mode > extramarginal_p95,
    })
}
