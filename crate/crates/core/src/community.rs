//! Anti-community detection: recursive spectral bisection that drives
//! modularity down, so that groups end up with fewer internal edges than
//! the degree-preserving null model predicts.
//!
//! Each group `g` is split along the eigenvector of the most negative
//! eigenvalue of its generalized modularity matrix
//! `B(g)_ij = B_ij - delta_ij * sum_{k in g} B_ik`, with `B = A - k k^T / 2m`
//! taken from the whole graph. A split is kept only if it lowers Q by more
//! than [`SPLIT_TOLERANCE`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::TransactionNetwork;
use crate::stats::{log_bin_histogram_discrete, Histogram};

/// Minimum decrease of Q for a split to be accepted.
pub const SPLIT_TOLERANCE: f64 = 1e-9;
/// Convergence threshold on successive Rayleigh quotients.
pub const EIGEN_TOLERANCE: f64 = 1e-9;
pub const EIGEN_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// Community id of every node (node index order).
    pub assignment: Vec<usize>,
    /// Size of each community, indexed by community id.
    pub sizes: Vec<usize>,
}

impl Partition {
    /// Builds a partition from groups of node indices. Community ids follow
    /// the smallest node of each group.
    pub fn from_groups(n_nodes: usize, mut groups: Vec<Vec<usize>>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.retain(|g| !g.is_empty());
        groups.sort_by_key(|g| g[0]);
        let mut assignment = vec![usize::MAX; n_nodes];
        let mut sizes = Vec::with_capacity(groups.len());
        for (c, g) in groups.iter().enumerate() {
            for &v in g {
                assignment[v] = c;
            }
            sizes.push(g.len());
        }
        debug_assert!(assignment.iter().all(|&c| c != usize::MAX));
        Self { assignment, sizes }
    }

    pub fn single(n_nodes: usize) -> Self {
        Self::from_groups(n_nodes, vec![(0..n_nodes).collect()])
    }

    pub fn n_communities(&self) -> usize {
        self.sizes.len()
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.sizes.len()];
        for (v, &c) in self.assignment.iter().enumerate() {
            groups[c].push(v);
        }
        groups
    }
}

/// `Q = sum_c [ e_c / m - (K_c / 2m)^2 ]`.
pub fn modularity(net: &TransactionNetwork, partition: &Partition) -> Result<f64> {
    let m = net.n_edges();
    if m == 0 {
        return Err(Error::UndefinedModularity);
    }
    let m = m as f64;
    let c = partition.n_communities();
    let mut internal = vec![0usize; c];
    let mut degree_sum = vec![0usize; c];
    for (v, &cv) in partition.assignment.iter().enumerate() {
        degree_sum[cv] += net.degree(v);
    }
    for (a, b) in net.edge_indices() {
        if partition.assignment[a] == partition.assignment[b] {
            internal[partition.assignment[a]] += 1;
        }
    }
    Ok(internal
        .iter()
        .zip(&degree_sum)
        .map(|(&e, &k)| e as f64 / m - (k as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Implicit generalized modularity matrix of one group.
struct GroupMatrix<'a> {
    net: &'a TransactionNetwork,
    nodes: &'a [usize],
    /// Position of each graph node inside `nodes`, or `usize::MAX`.
    local: Vec<usize>,
    degree: Vec<f64>,
    /// Diagonal correction `k_i^(g) - k_i K_g / 2m`.
    row_sum: Vec<f64>,
    two_m: f64,
    internal_edges: usize,
}

impl<'a> GroupMatrix<'a> {
    fn new(net: &'a TransactionNetwork, nodes: &'a [usize], local: Vec<usize>) -> Self {
        let two_m = 2.0 * net.n_edges() as f64;
        let degree: Vec<f64> = nodes.iter().map(|&v| net.degree(v) as f64).collect();
        let group_degree: f64 = degree.iter().sum();
        let mut internal_twice = 0;
        let row_sum = nodes
            .iter()
            .zip(&degree)
            .map(|(&v, &k)| {
                let inside = net
                    .neighbors(v)
                    .iter()
                    .filter(|&&u| local[u] != usize::MAX)
                    .count();
                internal_twice += inside;
                inside as f64 - k * group_degree / two_m
            })
            .collect();
        Self {
            net,
            nodes,
            local,
            degree,
            row_sum,
            two_m,
            internal_edges: internal_twice / 2,
        }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let kx: f64 = self.degree.iter().zip(x).map(|(k, x)| k * x).sum::<f64>() / self.two_m;
        for (i, &v) in self.nodes.iter().enumerate() {
            let ax: f64 = self
                .net
                .neighbors(v)
                .iter()
                .filter_map(|&u| {
                    let j = self.local[u];
                    (j != usize::MAX).then(|| x[j])
                })
                .sum();
            out[i] = ax - self.degree[i] * kx - self.row_sum[i] * x[i];
        }
    }

    fn diagonal(&self, i: usize) -> f64 {
        -self.degree[i] * self.degree[i] / self.two_m - self.row_sum[i]
    }

    /// Exact maximum absolute row sum, an upper bound on the spectral radius.
    fn max_row_norm(&self) -> f64 {
        let group_degree: f64 = self.degree.iter().sum();
        let mut best = 0.0f64;
        for (i, &v) in self.nodes.iter().enumerate() {
            let k = self.degree[i];
            let mut neighbor_degree = 0.0;
            let mut norm = 0.0;
            for &u in self.net.neighbors(v) {
                let j = self.local[u];
                if j != usize::MAX {
                    neighbor_degree += self.degree[j];
                    norm += (1.0 - k * self.degree[j] / self.two_m).abs();
                }
            }
            // non-neighbours other than i itself
            norm += k * (group_degree - k - neighbor_degree) / self.two_m;
            norm += self.diagonal(i).abs();
            best = best.max(norm);
        }
        best
    }

    fn quadratic_form(&self, s: &[f64]) -> f64 {
        let mut bs = vec![0.0; s.len()];
        self.apply(s, &mut bs);
        s.iter().zip(&bs).map(|(a, b)| a * b).sum()
    }
}

/// Most negative eigenpair of the group matrix by power iteration on
/// `sigma I - B(g)`.
fn most_negative_eigenpair(matrix: &GroupMatrix) -> Result<(f64, Vec<f64>)> {
    let n = matrix.len();
    let sigma = matrix.max_row_norm().max(1e-12);
    let golden = 0.618_033_988_749_894_9_f64;
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * (((i as f64 + 1.0) * golden).fract() - 0.5))
        .collect();
    normalize(&mut x);
    let mut bx = vec![0.0; n];
    let mut previous = f64::NAN;
    let mut change = f64::INFINITY;
    for _ in 0..EIGEN_MAX_ITERATIONS {
        matrix.apply(&x, &mut bx);
        let rayleigh: f64 = x.iter().zip(&bx).map(|(a, b)| a * b).sum();
        for (xi, bi) in x.iter_mut().zip(&bx) {
            *xi = sigma * *xi - bi;
        }
        normalize(&mut x);
        change = (rayleigh - previous).abs();
        if change <= EIGEN_TOLERANCE * rayleigh.abs().max(1.0) {
            return Ok((rayleigh, x));
        }
        previous = rayleigh;
    }
    Err(Error::Solver {
        iterations: EIGEN_MAX_ITERATIONS,
        last_change: change,
    })
}

fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// Vertex-moving passes on a bisection: every node is flipped once, in the
/// order that lowers `s^T B(g) s` the most at each step, and the best state
/// seen along the way is kept. Passes repeat while they improve.
fn refine(matrix: &GroupMatrix, s: &mut [f64]) {
    let n = s.len();
    let mut bs = vec![0.0; n];
    matrix.apply(s, &mut bs);
    let mut column = vec![0.0; n];
    let mut unit = vec![0.0; n];
    let mut locked = vec![false; n];
    let mut moves = Vec::with_capacity(n);
    loop {
        locked.iter_mut().for_each(|l| *l = false);
        moves.clear();
        let (mut total, mut best_total, mut best_len) = (0.0, 0.0, 0);
        for _ in 0..n {
            // flipping i changes s^T B s by -4 s_i ((Bs)_i - B_ii s_i)
            let mut pick = (f64::INFINITY, usize::MAX);
            for i in (0..n).filter(|&i| !locked[i]) {
                let delta = -4.0 * s[i] * (bs[i] - matrix.diagonal(i) * s[i]);
                if delta < pick.0 {
                    pick = (delta, i);
                }
            }
            let (delta, i) = pick;
            locked[i] = true;
            unit[i] = 1.0;
            matrix.apply(&unit, &mut column);
            unit[i] = 0.0;
            let old = s[i];
            s[i] = -old;
            for (b, c) in bs.iter_mut().zip(&column) {
                *b -= 2.0 * old * c;
            }
            moves.push(i);
            total += delta;
            if total < best_total - 1e-12 {
                best_total = total;
                best_len = moves.len();
            }
        }
        // undo the moves past the best state
        for &i in moves[best_len..].iter().rev() {
            let old = s[i];
            s[i] = -old;
            unit[i] = 1.0;
            matrix.apply(&unit, &mut column);
            unit[i] = 0.0;
            for (b, c) in bs.iter_mut().zip(&column) {
                *b -= 2.0 * old * c;
            }
        }
        if best_len == 0 {
            break;
        }
    }
}

/// Best bisection of `nodes` found from the spectral start and, when given,
/// from `current` (one sign per node). Returns the signs and `s^T B(g) s`.
fn bisect(matrix: &GroupMatrix, current: Option<&[f64]>) -> Result<Option<(Vec<f64>, f64)>> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    let (eigenvalue, vector) = most_negative_eigenpair(matrix)?;
    if eigenvalue < -EIGEN_TOLERANCE {
        let mut s: Vec<f64> = vector
            .iter()
            .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        refine(matrix, &mut s);
        let q = matrix.quadratic_form(&s);
        best = Some((s, q));
    }
    if let Some(current) = current {
        let mut s = current.to_vec();
        refine(matrix, &mut s);
        let q = matrix.quadratic_form(&s);
        if best.as_ref().is_none_or(|b| q < b.1) {
            best = Some((s, q));
        }
    }
    Ok(best)
}

fn sides(nodes: &[usize], s: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let (mut plus, mut minus) = (Vec::new(), Vec::new());
    for (&v, &si) in nodes.iter().zip(s) {
        if si > 0.0 {
            plus.push(v);
        } else {
            minus.push(v);
        }
    }
    (plus, minus)
}

/// Splits one group, or returns `None` when no split lowers Q.
fn split_group(
    net: &TransactionNetwork,
    nodes: &[usize],
    local: Vec<usize>,
) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    let matrix = GroupMatrix::new(net, nodes, local);
    // without internal edges B(g) is positive semidefinite: no split helps
    if matrix.internal_edges == 0 || nodes.len() < 2 {
        return Ok(None);
    }
    let Some((s, form)) = bisect(&matrix, None)? else {
        return Ok(None);
    };
    let delta_q = form / (2.0 * matrix.two_m);
    if !(delta_q < -SPLIT_TOLERANCE) {
        return Ok(None);
    }
    let (plus, minus) = sides(nodes, &s);
    if plus.is_empty() || minus.is_empty() {
        return Ok(None);
    }
    Ok(Some((plus, minus)))
}

/// Re-splits the union of two communities. Returns the new pair when it
/// lowers Q by more than [`SPLIT_TOLERANCE`].
fn resplit_pair(
    net: &TransactionNetwork,
    first: &[usize],
    second: &[usize],
    local: &mut [usize],
) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    let nodes: Vec<usize> = first.iter().chain(second).copied().collect();
    for (i, &v) in nodes.iter().enumerate() {
        local[v] = i;
    }
    let matrix = GroupMatrix::new(net, &nodes, local.to_vec());
    for &v in &nodes {
        local[v] = usize::MAX;
    }
    let current: Vec<f64> = (0..nodes.len())
        .map(|i| if i < first.len() { 1.0 } else { -1.0 })
        .collect();
    let before = matrix.quadratic_form(&current);
    let Some((s, after)) = bisect(&matrix, Some(&current))? else {
        return Ok(None);
    };
    if !((after - before) / (2.0 * matrix.two_m) < -SPLIT_TOLERANCE) {
        return Ok(None);
    }
    Ok(Some(sides(&nodes, &s)))
}

/// Local search over the communities of one component: vertex-moving passes
/// (any community of the component or a fresh one is a destination) and
/// pairwise merges, repeated while Q keeps dropping.
fn polish(
    net: &TransactionNetwork,
    groups: Vec<Vec<usize>>,
    local: &mut [usize],
) -> Vec<Vec<usize>> {
    let nodes: Vec<usize> = groups.iter().flatten().copied().collect();
    let n = nodes.len();
    let m = net.n_edges() as f64;
    let two_m2 = 2.0 * m * m;
    for (i, &v) in nodes.iter().enumerate() {
        local[v] = i;
    }
    let degree: Vec<f64> = nodes.iter().map(|&v| net.degree(v) as f64).collect();
    let mut comm: Vec<usize> = groups
        .iter()
        .enumerate()
        .flat_map(|(c, g)| std::iter::repeat_n(c, g.len()))
        .collect();
    // one spare empty community is always available as a destination
    let mut total: Vec<f64> = vec![0.0; groups.len() + 1];
    for i in 0..n {
        total[comm[i]] += degree[i];
    }
    let mut links = vec![0.0; total.len()];
    let mut touched = Vec::new();
    let mut locked = vec![false; n];
    let mut moves: Vec<(usize, usize)> = Vec::new();

    let ensure_spare = |total: &mut Vec<f64>, links: &mut Vec<f64>| {
        if total.iter().all(|&k| k > 0.0) {
            total.push(0.0);
            links.push(0.0);
        }
    };
    let apply_move = |comm: &mut [usize], total: &mut [f64], i: usize, to: usize| {
        total[comm[i]] -= degree[i];
        total[to] += degree[i];
        comm[i] = to;
    };

    loop {
        let mut improved = false;
        // vertex moving
        loop {
            locked.iter_mut().for_each(|l| *l = false);
            moves.clear();
            let (mut sum, mut best_sum, mut best_len) = (0.0, 0.0, 0);
            for _ in 0..n {
                ensure_spare(&mut total, &mut links);
                let mut pick = (f64::INFINITY, usize::MAX, usize::MAX);
                for i in (0..n).filter(|&i| !locked[i]) {
                    for &u in net.neighbors(nodes[i]) {
                        let c = comm[local[u]];
                        if links[c] == 0.0 {
                            touched.push(c);
                        }
                        links[c] += 1.0;
                    }
                    let a = comm[i];
                    let empty_seen = &mut false;
                    for c in 0..total.len() {
                        if c == a || (total[c] == 0.0 && std::mem::replace(empty_seen, true)) {
                            continue;
                        }
                        let delta = (links[c] - links[a]) / m
                            - degree[i] * (total[c] - total[a] + degree[i]) / two_m2;
                        if delta < pick.0 {
                            pick = (delta, i, c);
                        }
                    }
                    for c in touched.drain(..) {
                        links[c] = 0.0;
                    }
                }
                let (delta, i, to) = pick;
                if i == usize::MAX {
                    break;
                }
                locked[i] = true;
                moves.push((i, comm[i]));
                apply_move(&mut comm, &mut total, i, to);
                sum += delta;
                if sum < best_sum - 1e-12 {
                    best_sum = sum;
                    best_len = moves.len();
                }
            }
            for &(i, from) in moves[best_len..].iter().rev() {
                apply_move(&mut comm, &mut total, i, from);
            }
            if best_len == 0 {
                break;
            }
            improved = true;
        }
        // merges
        loop {
            let c_count = total.len();
            let mut between = vec![0.0; c_count * c_count];
            for (i, &v) in nodes.iter().enumerate() {
                for &u in net.neighbors(v) {
                    between[comm[i] * c_count + comm[local[u]]] += 0.5;
                }
            }
            let mut pick = (-1e-12, usize::MAX, usize::MAX);
            for a in 0..c_count {
                for b in a + 1..c_count {
                    if total[a] == 0.0 || total[b] == 0.0 {
                        continue;
                    }
                    let delta = 2.0 * between[a * c_count + b] / m - total[a] * total[b] / two_m2;
                    if delta < pick.0 {
                        pick = (delta, a, b);
                    }
                }
            }
            let (_, a, b) = pick;
            if a == usize::MAX {
                break;
            }
            for i in 0..n {
                if comm[i] == b {
                    apply_move(&mut comm, &mut total, i, a);
                }
            }
            improved = true;
        }
        if !improved {
            break;
        }
    }
    for &v in &nodes {
        local[v] = usize::MAX;
    }
    let mut out = vec![Vec::new(); total.len()];
    for (i, &v) in nodes.iter().enumerate() {
        out[comm[i]].push(v);
    }
    out.retain(|g| !g.is_empty());
    out
}

/// Alternates [`polish`] with re-splitting single communities and pairs of
/// communities until Q stops dropping.
fn improve(
    net: &TransactionNetwork,
    groups: Vec<Vec<usize>>,
    local: &mut [usize],
) -> Result<Vec<Vec<usize>>> {
    let mut groups = polish(net, groups, local);
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < groups.len() {
            for (j, &v) in groups[i].iter().enumerate() {
                local[v] = j;
            }
            let split = split_group(net, &groups[i], local.to_vec());
            for &v in &groups[i] {
                local[v] = usize::MAX;
            }
            if let Some((a, b)) = split? {
                groups[i] = a;
                groups.push(b);
                changed = true;
            }
            i += 1;
        }
        for a in 0..groups.len() {
            for b in a + 1..groups.len() {
                if let Some((x, y)) = resplit_pair(net, &groups[a], &groups[b], local)? {
                    groups[a] = x;
                    groups[b] = y;
                    changed = true;
                }
            }
        }
        groups.retain(|g| !g.is_empty());
        if !changed {
            return Ok(groups);
        }
        groups = polish(net, groups, local);
    }
}

/// Partitions the network into anti-communities. Connected components are
/// processed independently; isolated nodes become singleton communities.
pub fn partition_anticommunities(net: &TransactionNetwork) -> Result<Partition> {
    let n = net.n_nodes();
    if net.n_edges() == 0 {
        return Ok(Partition::from_groups(n, (0..n).map(|v| vec![v]).collect()));
    }
    let mut leaves = Vec::new();
    let mut local = vec![usize::MAX; n];
    for component in net.components() {
        let mut found = Vec::new();
        let mut stack = vec![component];
        while let Some(group) = stack.pop() {
            for (i, &v) in group.iter().enumerate() {
                local[v] = i;
            }
            let split = split_group(net, &group, local.clone());
            for &v in &group {
                local[v] = usize::MAX;
            }
            match split? {
                Some((a, b)) => {
                    stack.push(b);
                    stack.push(a);
                }
                None => found.push(group),
            }
        }
        if found.len() > 1 || found[0].len() > 1 {
            leaves.extend(improve(net, found, &mut local)?);
        } else {
            leaves.extend(found);
        }
    }
    Ok(Partition::from_groups(n, leaves))
}

/// Number of communities of each size.
pub fn community_size_counts(partition: &Partition) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for &s in &partition.sizes {
        *counts.entry(s).or_insert(0) += 1;
    }
    counts
}

pub fn community_size_histogram(
    partition: &Partition,
    bins_per_decade: usize,
) -> Result<Histogram> {
    let sizes: Vec<u64> = partition.sizes.iter().map(|&s| s as u64).collect();
    log_bin_histogram_discrete(&sizes, bins_per_decade)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::engine::rng_from_seed;
    use rand::Rng;

    fn complete_bipartite(a: usize, b: usize) -> TransactionNetwork {
        let edges = (0..a).flat_map(|i| (0..b).map(move |j| (i, a + j)));
        TransactionNetwork::from_edges(0..a + b, edges)
    }

    /// Minimum Q over every partition whose communities stay inside one
    /// connected component. Q is a sum over communities, so each component
    /// is enumerated on its own (restricted-growth strings).
    pub(crate) fn exhaustive_min_modularity(net: &TransactionNetwork) -> f64 {
        let m = net.n_edges() as f64;
        fn rec(
            net: &TransactionNetwork,
            nodes: &[usize],
            labels: &mut Vec<usize>,
            max_label: usize,
            m: f64,
            best: &mut f64,
        ) {
            let i = labels.len();
            if i == nodes.len() {
                let mut internal = vec![0.0; max_label + 1];
                let mut total = vec![0.0; max_label + 1];
                for (a, &v) in nodes.iter().enumerate() {
                    total[labels[a]] += net.degree(v) as f64;
                    for (b, &u) in nodes.iter().enumerate().skip(a + 1) {
                        if labels[a] == labels[b] && net.neighbors(v).contains(&u) {
                            internal[labels[a]] += 1.0;
                        }
                    }
                }
                let q: f64 = internal
                    .iter()
                    .zip(&total)
                    .map(|(e, k)| e / m - (k / (2.0 * m)).powi(2))
                    .sum();
                *best = best.min(q);
                return;
            }
            for l in 0..=(max_label + 1) {
                labels.push(l);
                rec(net, nodes, labels, max_label.max(l), m, best);
                labels.pop();
            }
        }
        net.components()
            .iter()
            .map(|nodes| {
                let mut best = f64::INFINITY;
                rec(net, nodes, &mut vec![0], 0, m, &mut best);
                best
            })
            .sum()
    }

    pub(crate) fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize) -> TransactionNetwork {
        loop {
            let n = rng.random_range(2..=max_nodes);
            let p = 0.2 + 0.6 * rng.random::<f64>();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            if !edges.is_empty() {
                return TransactionNetwork::from_edges(0..n, edges);
            }
        }
    }

    #[test]
    fn trivial_partition_has_zero_modularity() {
        let net = complete_bipartite(3, 4);
        let q = modularity(&net, &Partition::single(7)).unwrap();
        assert!(q.abs() < 1e-15);
    }

    #[test]
    fn k22_sides_give_minus_half() {
        let net = complete_bipartite(2, 2);
        let p = Partition::from_groups(4, vec![vec![0, 1], vec![2, 3]]);
        assert!((modularity(&net, &p).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn undefined_without_edges() {
        let net = TransactionNetwork::from_edges(0..3, []);
        assert!(matches!(
            modularity(&net, &Partition::single(3)),
            Err(Error::UndefinedModularity)
        ));
        let p = partition_anticommunities(&net).unwrap();
        assert_eq!(p.sizes, vec![1, 1, 1]);
    }

    #[test]
    fn k55_splits_into_its_sides() {
        let net = complete_bipartite(5, 5);
        let p = partition_anticommunities(&net).unwrap();
        let mut sizes = p.sizes.clone();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![5, 5]);
        assert_eq!(
            p.assignment[..5]
                .iter()
                .collect::<std::collections::HashSet<_>>()
                .len(),
            1
        );
        let q = modularity(&net, &p).unwrap();
        assert!((q - exhaustive_min_modularity(&net)).abs() < 1e-12);
        assert_eq!(community_size_counts(&p), BTreeMap::from([(5, 2)]));
    }

    #[test]
    fn sizes_are_conserved_and_q_not_above_trivial() {
        let mut rng = rng_from_seed(31);
        for _ in 0..50 {
            let net = random_graph(&mut rng, 30);
            let p = partition_anticommunities(&net).unwrap();
            assert_eq!(p.sizes.iter().sum::<usize>(), net.n_nodes());
            assert!(p.sizes.iter().all(|&s| s >= 1));
            let q = modularity(&net, &p).unwrap();
            assert!((-1.0..=1e-12).contains(&q));
            assert_eq!(partition_anticommunities(&net).unwrap(), p);
        }
    }

    #[test]
    fn close_to_exhaustive_minimum_on_small_graphs() {
        let mut rng = rng_from_seed(2024);
        let mut matched = 0;
        for _ in 0..60 {
            let net = random_graph(&mut rng, 8);
            let q = modularity(&net, &partition_anticommunities(&net).unwrap()).unwrap();
            let best = exhaustive_min_modularity(&net);
            assert!(q >= best - 1e-12, "q {q} below exhaustive {best}");
            if q - best <= SPLIT_TOLERANCE {
                matched += 1;
            }
        }
        assert!(matched >= 55, "matched {matched} of 60");
    }

    #[test]
    fn disconnected_pairs_become_singletons() {
        let net = TransactionNetwork::from_edges(0..4, [(0, 1), (2, 3)]);
        let p = partition_anticommunities(&net).unwrap();
        assert_eq!(p.sizes, vec![1, 1, 1, 1]);
    }
}
