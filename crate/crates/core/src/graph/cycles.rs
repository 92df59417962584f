//! Girth and short-cycle census of a Tanner graph.

use super::{GraphError, ParityCheckMatrix};
use std::collections::VecDeque;

/// Node-count limit for [`dfs_cycle_oracle`].
pub const ORACLE_MAX_NODES: usize = 64;

/// Length-g cycle counts through each check node.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleCensus {
    /// Shortest cycle length; `None` for a cycle-free graph.
    pub girth: Option<usize>,
    pub per_check_counts: Vec<u64>,
    /// Mean of `per_check_counts` over all check nodes.
    pub mu_g: f64,
}

impl CycleCensus {
    fn new(girth: Option<usize>, per_check_counts: Vec<u64>) -> Self {
        let mu_g = if per_check_counts.is_empty() {
            0.0
        } else {
            per_check_counts.iter().sum::<u64>() as f64 / per_check_counts.len() as f64
        };
        CycleCensus {
            girth,
            per_check_counts,
            mu_g,
        }
    }
}

/// Length of the shortest cycle, `None` when the graph is a forest.
///
/// Runs a BFS from every variable node; every cycle contains one, and the
/// shortest cycle through a root is found when two BFS branches meet.
pub fn girth(h: &ParityCheckMatrix) -> Option<usize> {
    let n = h.n();
    let total = n + h.m();
    // nodes: variables 0..n, checks n..n+m
    let neighbours = |u: usize| -> &[usize] {
        if u < n {
            h.col(u)
        } else {
            h.row(u - n)
        }
    };
    let offset = |u: usize, w: usize| if u < n { w + n } else { w };
    let mut best = usize::MAX;
    let mut dist = vec![u32::MAX; total];
    let mut parent = vec![usize::MAX; total];
    let mut touched = Vec::new();
    let mut queue = VecDeque::new();
    for root in 0..n {
        for &t in &touched {
            dist[t] = u32::MAX;
            parent[t] = usize::MAX;
        }
        touched.clear();
        queue.clear();
        dist[root] = 0;
        touched.push(root);
        queue.push_back(root);
        'bfs: while let Some(u) = queue.pop_front() {
            let du = dist[u] as usize;
            if 2 * du + 1 >= best {
                break;
            }
            for &w in neighbours(u) {
                let w = offset(u, w);
                if w == parent[u] {
                    continue;
                }
                if dist[w] == u32::MAX {
                    dist[w] = du as u32 + 1;
                    parent[w] = u;
                    touched.push(w);
                    queue.push_back(w);
                } else {
                    let len = du + dist[w] as usize + 1;
                    if len < best {
                        best = len;
                    }
                    if 2 * du + 1 >= best {
                        break 'bfs;
                    }
                }
            }
        }
    }
    (best != usize::MAX).then_some(best)
}

/// Counts length-g cycles through every check node by bounded DFS.
///
/// From check `c` the DFS enumerates simple closed walks of length g that
/// start and end at `c`. Each cycle through `c` is traversed once per
/// direction, so the walk count is halved.
pub fn count_girth_cycles(h: &ParityCheckMatrix) -> CycleCensus {
    let Some(g) = girth(h) else {
        return CycleCensus::new(None, vec![0; h.m()]);
    };
    let mut on_var = vec![false; h.n()];
    let mut on_check = vec![false; h.m()];
    let counts = (0..h.m())
        .map(|c| {
            on_check[c] = true;
            let mut walks = 0u64;
            for &v in h.row(c) {
                on_var[v] = true;
                walks += walks_from_var(h, c, v, g - 1, &mut on_var, &mut on_check);
                on_var[v] = false;
            }
            on_check[c] = false;
            walks / 2
        })
        .collect();
    CycleCensus::new(Some(g), counts)
}

/// Simple paths from variable `v` back to `root` using exactly `remaining` edges.
fn walks_from_var(
    h: &ParityCheckMatrix,
    root: usize,
    v: usize,
    remaining: usize,
    on_var: &mut [bool],
    on_check: &mut [bool],
) -> u64 {
    if remaining == 1 {
        return h.contains(root, v) as u64;
    }
    let mut total = 0;
    for &c in h.col(v) {
        if on_check[c] {
            continue;
        }
        on_check[c] = true;
        for &u in h.row(c) {
            if on_var[u] {
                continue;
            }
            on_var[u] = true;
            total += walks_from_var(h, root, u, remaining - 2, on_var, on_check);
            on_var[u] = false;
        }
        on_check[c] = false;
    }
    total
}

/// Exhaustive simple-cycle enumeration for small graphs.
///
/// Every cycle of the requested length is enumerated exactly once (anchored at
/// its smallest node index, with one orientation kept) and credited to each
/// check node on it. Only intended as an independent reference for
/// [`count_girth_cycles`]; refuses graphs with more than
/// [`ORACLE_MAX_NODES`] nodes.
pub fn dfs_cycle_oracle(h: &ParityCheckMatrix, length: usize) -> Result<Vec<u64>, GraphError> {
    let n = h.n();
    let total = n + h.m();
    if total > ORACLE_MAX_NODES {
        return Err(GraphError::TooLarge {
            nodes: total,
            limit: ORACLE_MAX_NODES,
        });
    }
    if length < 4 || !length.is_multiple_of(2) {
        return Err(GraphError::InvalidCycleLength(length));
    }
    let mut adj = vec![0u64; total];
    for (i, j) in h.edges() {
        adj[j] |= 1 << (n + i);
        adj[n + i] |= 1 << j;
    }
    let mut counts = vec![0u64; h.m()];
    let mut path = Vec::with_capacity(length);
    for start in 0..total {
        path.clear();
        path.push(start);
        extend(
            &adj,
            start,
            1u64 << start,
            length,
            &mut path,
            &mut |cycle| {
                for &u in cycle {
                    if u >= n {
                        counts[u - n] += 1;
                    }
                }
            },
        );
    }
    Ok(counts)
}

fn extend(
    adj: &[u64],
    start: usize,
    visited: u64,
    length: usize,
    path: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    let last = *path.last().unwrap();
    if path.len() == length {
        // close the cycle; keep one of the two orientations
        if adj[last] & (1 << start) != 0 && path[1] < path[length - 1] {
            emit(path);
        }
        return;
    }
    let mut next = adj[last] & !visited;
    while next != 0 {
        let w = next.trailing_zeros() as usize;
        next &= next - 1;
        if w <= start {
            continue;
        }
        path.push(w);
        extend(adj, start, visited | (1 << w), length, path, emit);
        path.pop();
    }
}
