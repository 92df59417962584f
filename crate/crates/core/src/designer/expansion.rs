//! Subgraph formation by breadth-first expansion from root check nodes.
//!
//! A subgraph is grown from its root check as a PEG-style tree. A check is
//! attached through the variable that discovered it, together with its other
//! variables; an edge to a variable already in the subgraph is kept only if
//! the cycle it closes is longer than the parent girth. Every cycle that
//! survives is therefore longer than the parent girth. Checks left with fewer
//! than two edges are dropped.

use super::DesignError;
use crate::graph::{girth, ParityCheckMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::VecDeque;

const ABSENT: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub root: usize,
    /// Global check ids; position is the local index.
    pub check_ids: Vec<usize>,
    /// Global variable ids; position is the local index.
    pub var_ids: Vec<usize>,
    /// Global `(check, variable)` edges.
    pub edges: Vec<(usize, usize)>,
    /// Girth of the subgraph, `None` if it is a tree.
    pub local_girth: Option<usize>,
}

impl Subgraph {
    /// Number of check nodes L_t.
    pub fn len(&self) -> usize {
        self.check_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.check_ids.is_empty()
    }

    /// The subgraph as a parity-check matrix over local indices.
    pub fn local_matrix(&self) -> ParityCheckMatrix {
        let check_local = local_index(&self.check_ids);
        let var_local = local_index(&self.var_ids);
        let edges = self
            .edges
            .iter()
            .map(|&(c, v)| (check_local[c], var_local[v]));
        ParityCheckMatrix::from_edges(self.check_ids.len(), self.var_ids.len(), edges)
            .expect("subgraph edges are unique and in range")
    }
}

fn local_index(ids: &[usize]) -> Vec<usize> {
    let max = ids.iter().copied().max().unwrap_or(0);
    let mut map = vec![ABSENT; max + 1];
    for (k, &g) in ids.iter().enumerate() {
        map[g] = k;
    }
    map
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphSet {
    pub subgraphs: Vec<Subgraph>,
    /// Number of subgraphs asked for; fewer than `subgraphs.len()` when extra
    /// roots were needed for coverage.
    pub requested: usize,
}

impl SubgraphSet {
    /// Σ_t L_t.
    pub fn total_checks(&self) -> usize {
        self.subgraphs.iter().map(Subgraph::len).sum()
    }

    pub fn covers(&self, m: usize) -> bool {
        let mut seen = vec![false; m];
        for s in &self.subgraphs {
            for &c in &s.check_ids {
                seen[c] = true;
            }
        }
        seen.iter().all(|&b| b)
    }
}

struct Growth {
    check_local: Vec<usize>,
    var_local: Vec<usize>,
    check_ids: Vec<usize>,
    var_ids: Vec<usize>,
    var_depth: Vec<usize>,
    check_adj: Vec<Vec<usize>>,
    var_adj: Vec<Vec<usize>>,
    // scratch for bounded BFS
    seen_check: Vec<u32>,
    seen_var: Vec<u32>,
    stamp: u32,
}

impl Growth {
    fn new(h: &ParityCheckMatrix) -> Self {
        Growth {
            check_local: vec![ABSENT; h.m()],
            var_local: vec![ABSENT; h.n()],
            check_ids: Vec::new(),
            var_ids: Vec::new(),
            var_depth: Vec::new(),
            check_adj: Vec::new(),
            var_adj: Vec::new(),
            seen_check: Vec::new(),
            seen_var: Vec::new(),
            stamp: 0,
        }
    }

    fn add_check(&mut self, c: usize) -> usize {
        let l = self.check_ids.len();
        self.check_local[c] = l;
        self.check_ids.push(c);
        self.check_adj.push(Vec::new());
        self.seen_check.push(0);
        l
    }

    fn add_var(&mut self, v: usize, depth: usize) -> usize {
        let l = self.var_ids.len();
        self.var_local[v] = l;
        self.var_ids.push(v);
        self.var_depth.push(depth);
        self.var_adj.push(Vec::new());
        self.seen_var.push(0);
        l
    }

    fn link(&mut self, c: usize, v: usize) {
        self.check_adj[c].push(v);
        self.var_adj[v].push(c);
    }

    /// Hop distance from local check `c` to local variable `v`, if below `limit`.
    fn distance_below(&mut self, c: usize, v: usize, limit: usize) -> Option<usize> {
        self.stamp += 1;
        let stamp = self.stamp;
        self.seen_check[c] = stamp;
        let mut frontier: Vec<(bool, usize)> = vec![(true, c)];
        let mut next = Vec::new();
        let mut d = 0;
        while !frontier.is_empty() && d + 1 < limit {
            d += 1;
            next.clear();
            for &(is_check, u) in &frontier {
                if is_check {
                    for &w in &self.check_adj[u] {
                        if w == v {
                            return Some(d);
                        }
                        if self.seen_var[w] != stamp {
                            self.seen_var[w] = stamp;
                            next.push((false, w));
                        }
                    }
                } else {
                    for &w in &self.var_adj[u] {
                        if self.seen_check[w] != stamp {
                            self.seen_check[w] = stamp;
                            next.push((true, w));
                        }
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
        }
        None
    }

    fn finish(self, root: usize) -> Subgraph {
        let mut edges = Vec::new();
        for (lc, vars) in self.check_adj.iter().enumerate() {
            for &lv in vars {
                edges.push((self.check_ids[lc], self.var_ids[lv]));
            }
        }
        let mut sub = Subgraph {
            root,
            check_ids: self.check_ids,
            var_ids: self.var_ids,
            edges,
            local_girth: None,
        };
        sub.local_girth = girth(&sub.local_matrix());
        sub
    }
}

/// Grows one subgraph from `root` out to hop distance `d_max`.
///
/// Checks are admitted at even hop distance up to `d_max`; their other
/// variables come along at the next odd distance. `parent_girth` is the girth
/// of `h` (`None` for a forest) and bounds the cycles allowed inside.
pub fn expand_from(
    h: &ParityCheckMatrix,
    root: usize,
    d_max: usize,
    parent_girth: Option<usize>,
) -> Subgraph {
    let g = parent_girth.unwrap_or(0);
    let mut s = Growth::new(h);
    let lr = s.add_check(root);
    let mut queue = VecDeque::new();
    for &v in h.row(root) {
        let lv = s.add_var(v, 1);
        s.link(lr, lv);
        queue.push_back(lv);
    }
    while let Some(lv) = queue.pop_front() {
        let depth = s.var_depth[lv];
        if depth.saturating_add(1) > d_max {
            continue;
        }
        let v = s.var_ids[lv];
        for &c in h.col(v) {
            if s.check_local[c] != ABSENT {
                continue;
            }
            let lc = s.add_check(c);
            s.link(lc, lv);
            let mut fresh = Vec::new();
            for &u in h.row(c) {
                if u == v {
                    continue;
                }
                match s.var_local[u] {
                    ABSENT => {
                        let lu = s.add_var(u, depth + 2);
                        s.link(lc, lu);
                        fresh.push(lu);
                    }
                    lu => {
                        // closing edge: cycle length is distance + 1
                        if s.distance_below(lc, lu, g).is_none() {
                            s.link(lc, lu);
                        }
                    }
                }
            }
            if s.check_adj[lc].len() < 2 {
                // roll back a check that would be a lone leaf
                debug_assert!(fresh.is_empty());
                s.check_adj.pop();
                s.seen_check.pop();
                s.check_ids.pop();
                s.check_local[c] = ABSENT;
                s.var_adj[lv].pop();
                continue;
            }
            queue.extend(fresh);
        }
    }
    s.finish(root)
}

/// Check-to-check hop distances from `root` (one hop = two edges).
fn check_distances(h: &ParityCheckMatrix, root: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; h.m()];
    let mut var_seen = vec![false; h.n()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(c) = queue.pop_front() {
        for &v in h.row(c) {
            if var_seen[v] {
                continue;
            }
            var_seen[v] = true;
            for &c2 in h.col(v) {
                if dist[c2] == usize::MAX {
                    dist[c2] = dist[c] + 1;
                    queue.push_back(c2);
                }
            }
        }
    }
    dist
}

/// Builds `t` subgraphs (more if needed to cover every check).
///
/// The first root is check 0. Each later root is the uncovered check furthest
/// from all previous roots (ties to the lower index); once everything is
/// covered, roots are drawn uniformly at random from `seed`.
pub fn expand_subgraphs(
    h: &ParityCheckMatrix,
    d_max: usize,
    t: usize,
    seed: u64,
) -> Result<SubgraphSet, DesignError> {
    if d_max < 1 || t < 1 {
        return Err(DesignError::Config(format!(
            "need d_max >= 1 and T >= 1 (got {d_max}, {t})"
        )));
    }
    if h.m() == 0 {
        return Err(DesignError::Config("graph has no check nodes".into()));
    }
    let g = girth(h);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut covered = vec![false; h.m()];
    let mut nearest = vec![usize::MAX; h.m()];
    let mut subgraphs = Vec::with_capacity(t);
    loop {
        let uncovered = covered.iter().any(|&c| !c);
        if subgraphs.len() >= t && !uncovered {
            break;
        }
        let root = if subgraphs.is_empty() {
            0
        } else if uncovered {
            // max distance, lowest index on ties
            (0..h.m())
                .filter(|&c| !covered[c])
                .fold(None, |best: Option<usize>, c| match best {
                    Some(b) if nearest[b] >= nearest[c] => Some(b),
                    _ => Some(c),
                })
                .unwrap()
        } else {
            rng.gen_range(0..h.m())
        };
        let sub = expand_from(h, root, d_max, g);
        for &c in &sub.check_ids {
            covered[c] = true;
        }
        for (n, d) in nearest.iter_mut().zip(check_distances(h, root)) {
            *n = (*n).min(d);
        }
        subgraphs.push(sub);
    }
    if subgraphs.len() > t {
        log::info!(
            "subgraph expansion needed {} roots instead of {t} to cover all checks",
            subgraphs.len()
        );
    }
    Ok(SubgraphSet {
        subgraphs,
        requested: t,
    })
}
