//! Progressive edge-growth construction.
//!
//! Edges are placed one at a time. Each new edge of a variable goes to a check
//! that is as far as possible from the variable in the graph built so far
//! (unreachable checks first), which greedily maximizes the local girth; among
//! those the lowest-degree check wins. Check degrees are capped at
//! `ceil(E / M)`, so codes whose edge count divides evenly come out
//! check-regular.

use super::{GraphError, ParityCheckMatrix};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Builds an `m × n` parity-check matrix with the requested variable degrees.
///
/// Variables are processed in order of nondecreasing degree. Ties between
/// equally good checks are broken uniformly at random from `seed`, so the
/// output is a pure function of the arguments.
pub fn peg_construct(
    n: usize,
    m: usize,
    variable_degrees: &[usize],
    seed: u64,
) -> Result<ParityCheckMatrix, GraphError> {
    if variable_degrees.len() != n {
        return Err(GraphError::LengthMismatch {
            expected: n,
            got: variable_degrees.len(),
        });
    }
    if let Some((j, &d)) = variable_degrees
        .iter()
        .enumerate()
        .find(|(_, &d)| d == 0 || d > m)
    {
        return Err(GraphError::InfeasibleDegrees(format!(
            "variable {j} has degree {d}, must be in 1..={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| variable_degrees[j]);

    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
    let edges: usize = variable_degrees.iter().sum();
    let cap = edges.div_ceil(m);
    let mut depth = vec![usize::MAX; m];
    let mut var_seen = vec![false; n];
    let mut candidates = Vec::new();

    for &j in &order {
        for _ in 0..variable_degrees[j] {
            check_depths(j, &rows, &cols, &mut depth, &mut var_seen);
            // open checks (below the degree cap) not yet adjacent to j
            let open = |c: &usize| rows[*c].len() < cap && depth[*c] != 0;
            let far = (0..m).filter(open).map(|c| depth[c]).max().ok_or_else(|| {
                GraphError::InfeasibleDegrees(format!("no open check left for variable {j}"))
            })?;
            candidates.clear();
            candidates.extend((0..m).filter(|c| open(c) && depth[*c] == far));
            let min_deg = candidates.iter().map(|&c| rows[c].len()).min().unwrap();
            candidates.retain(|&c| rows[c].len() == min_deg);
            let &c = candidates.choose(&mut rng).unwrap();
            rows[c].push(j);
            cols[j].push(c);
        }
    }
    ParityCheckMatrix::from_rows(n, rows)
}

/// BFS level of every check in the tree rooted at variable `root`.
///
/// Checks adjacent to `root` get level 0; unreachable checks keep
/// `usize::MAX`, which ranks them furthest.
fn check_depths(
    root: usize,
    rows: &[Vec<usize>],
    cols: &[Vec<usize>],
    depth: &mut [usize],
    var_seen: &mut [bool],
) {
    depth.fill(usize::MAX);
    var_seen.fill(false);
    var_seen[root] = true;
    let mut frontier = vec![root];
    let mut next = Vec::new();
    let mut level = 0;
    while !frontier.is_empty() {
        next.clear();
        for &v in &frontier {
            for &c in &cols[v] {
                if depth[c] == usize::MAX {
                    depth[c] = level;
                    for &u in &rows[c] {
                        if !var_seen[u] {
                            var_seen[u] = true;
                            next.push(u);
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut frontier, &mut next);
        level += 1;
    }
}
