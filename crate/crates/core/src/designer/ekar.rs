//! Expansion-knowledge-aided reweighting.
//!
//! Each subgraph gets its own conditional-gradient search over reweighting
//! vectors. The objective is `f(ρ) = −ρ·I(ρ)`, where `I_l` is the mutual
//! information carried by check `l` under reweighted BP on an ensemble of
//! synthetic channel LLRs. The linear subproblem picks a maximum-weight
//! acyclic set of checks; the step size comes from a grid line search.

use super::expansion::{expand_subgraphs, Subgraph, SubgraphSet};
use super::DesignError;
use crate::decoder::{MessageState, ReweightVector, ReweightedBp};
use crate::graph::ParityCheckMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Largest check degree for which the joint is enumerated.
pub const MI_MAX_DEGREE: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EkarConfig {
    /// Expansion depth in edges from the root check.
    pub d_max: usize,
    pub subgraphs: usize,
    pub max_recursions: usize,
    pub tol: f64,
    pub grid: usize,
    pub rho_floor: f64,
    pub ensemble_size: usize,
    /// Random-order acyclic vertices averaged into the starting point.
    pub start_vertices: usize,
    /// Eb/N0 (dB) of the BPSK-AWGN ensemble driving the optimization.
    pub design_ebn0_db: f64,
    pub bp_max_iters: usize,
    pub bp_tol: f64,
    pub seed: u64,
}

impl Default for EkarConfig {
    fn default() -> Self {
        EkarConfig {
            d_max: 4,
            subgraphs: 20,
            max_recursions: 600,
            tol: 1e-6,
            grid: 10,
            rho_floor: 0.1,
            ensemble_size: 32,
            start_vertices: 16,
            design_ebn0_db: 1.5,
            bp_max_iters: 50,
            bp_tol: 1e-9,
            seed: 0,
        }
    }
}

impl EkarConfig {
    pub fn validate(&self) -> Result<(), DesignError> {
        let bad = |msg: &str| Err(DesignError::Config(msg.to_string()));
        if self.d_max < 1 {
            return bad("d_max must be at least 1");
        }
        if self.subgraphs < 1 {
            return bad("subgraphs must be at least 1");
        }
        if self.grid < 1 {
            return bad("grid must be at least 1");
        }
        if !(self.rho_floor > 0.0 && self.rho_floor <= 1.0) {
            return bad("rho_floor must lie in (0, 1]");
        }
        if self.ensemble_size < 1 {
            return bad("ensemble_size must be at least 1");
        }
        if self.start_vertices < 1 {
            return bad("start_vertices must be at least 1");
        }
        if !(self.tol >= 0.0) || !(self.bp_tol >= 0.0) {
            return bad("tolerances must be nonnegative");
        }
        if !self.design_ebn0_db.is_finite() {
            return bad("design_ebn0_db must be finite");
        }
        Ok(())
    }

    /// Hex sha256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Messages and beliefs of one ensemble member after reweighted BP.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberInference {
    /// Variable-to-check messages, row-major over the local matrix.
    pub psi: Vec<f64>,
    pub beliefs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphInference {
    pub members: Vec<MemberInference>,
    /// Beliefs averaged over the ensemble.
    pub mean_beliefs: Vec<f64>,
    /// Every member reached a message fixed point within the cap.
    pub settled: bool,
}

/// Runs reweighted BP on `h` for each ensemble member.
pub fn subgraph_beliefs(
    h: &ParityCheckMatrix,
    rho: &[f64],
    ensemble: &[Vec<f64>],
    max_iters: usize,
    tol: f64,
) -> Result<SubgraphInference, DesignError> {
    let bp = ReweightedBp::new(h, ReweightVector::new(rho.to_vec())?)?;
    let mut state = MessageState::new(bp.num_edges());
    let mut members = Vec::with_capacity(ensemble.len());
    let mut mean_beliefs = vec![0.0; h.n()];
    let mut settled = true;
    for llr in ensemble {
        let (_, ok) = bp.run_to_fixed_point(llr, max_iters, tol, &mut state)?;
        if !ok {
            settled = false;
        }
        let mut beliefs = vec![0.0; h.n()];
        bp.beliefs_into(llr, &state, &mut beliefs);
        for (m, b) in mean_beliefs.iter_mut().zip(&beliefs) {
            *m += b;
        }
        members.push(MemberInference {
            psi: state.psi.clone(),
            beliefs,
        });
    }
    if !ensemble.is_empty() {
        let k = ensemble.len() as f64;
        mean_beliefs.iter_mut().for_each(|m| *m /= k);
    }
    Ok(SubgraphInference {
        members,
        mean_beliefs,
        settled,
    })
}

/// `ln P(x)` for a bit with LLR `l = ln P(0)/P(1)`.
fn log_bernoulli(x: u8, l: f64) -> f64 {
    // ln σ(±l) = −softplus(∓l)
    let t = if x == 0 { -l } else { l };
    -(t.max(0.0) + (-t.abs()).exp().ln_1p())
}

/// KL divergence between the parity-constrained joint at one check and the
/// product of variable beliefs.
///
/// `incoming[k]` is the LLR of the message from the check's `k`-th variable,
/// `beliefs[k]` that variable's belief.
pub fn check_mutual_information(incoming: &[f64], beliefs: &[f64]) -> Result<f64, DesignError> {
    let d = incoming.len();
    assert_eq!(d, beliefs.len(), "one belief per incoming message");
    if d > MI_MAX_DEGREE {
        return Err(DesignError::DegreeTooLarge(d));
    }
    if d == 0 {
        return Ok(0.0);
    }
    let configs = 1usize << (d - 1);
    // [ln P(0), ln P(1)] per position, for the message and the belief
    let lj_tab: Vec<[f64; 2]> = incoming
        .iter()
        .map(|&l| [log_bernoulli(0, l), log_bernoulli(1, l)])
        .collect();
    let lp_tab: Vec<[f64; 2]> = beliefs
        .iter()
        .map(|&l| [log_bernoulli(0, l), log_bernoulli(1, l)])
        .collect();
    let mut log_joint = Vec::with_capacity(configs);
    let mut log_prod = Vec::with_capacity(configs);
    for mask in 0..configs {
        // the last bit completes even parity
        let last = (mask.count_ones() & 1) as usize;
        let mut lj = lj_tab[d - 1][last];
        let mut lp = lp_tab[d - 1][last];
        for k in 0..d - 1 {
            let x = (mask >> k) & 1;
            lj += lj_tab[k][x];
            lp += lp_tab[k][x];
        }
        log_joint.push(lj);
        log_prod.push(lp);
    }
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + log_joint.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let kl: f64 = log_joint
        .iter()
        .zip(&log_prod)
        .map(|(&lj, &lp)| {
            let lb = lj - log_z;
            lb.exp() * (lb - lp)
        })
        .sum();
    Ok(kl.max(0.0))
}

/// Per-check mutual information, averaged over ensemble members.
pub fn mutual_information(
    h: &ParityCheckMatrix,
    inference: &SubgraphInference,
) -> Result<Vec<f64>, DesignError> {
    let mut out = vec![0.0; h.m()];
    let mut incoming = Vec::new();
    let mut beliefs = Vec::new();
    for member in &inference.members {
        let mut e = 0;
        for (i, row) in h.rows().iter().enumerate() {
            incoming.clear();
            beliefs.clear();
            incoming.extend_from_slice(&member.psi[e..e + row.len()]);
            beliefs.extend(row.iter().map(|&v| member.beliefs[v]));
            e += row.len();
            out[i] += check_mutual_information(&incoming, &beliefs)?;
        }
    }
    if !inference.members.is_empty() {
        let k = inference.members.len() as f64;
        out.iter_mut().for_each(|x| *x /= k);
    }
    Ok(out)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Greedy maximum-weight acyclic check subset.
///
/// Checks are visited by decreasing `I` (ties to the lower index) and accepted
/// when their variables lie in distinct components of the accepted forest.
/// Accepted checks get 1, the rest `rho_floor`.
pub fn linear_subproblem(mi: &[f64], h: &ParityCheckMatrix, rho_floor: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..h.m()).collect();
    order.sort_by(|&a, &b| mi[b].total_cmp(&mi[a]).then(a.cmp(&b)));
    let mut parent: Vec<usize> = (0..h.n()).collect();
    let mut out = vec![rho_floor; h.m()];
    let mut roots = Vec::new();
    for i in order {
        roots.clear();
        roots.extend(h.row(i).iter().map(|&v| find(&mut parent, v)));
        roots.sort_unstable();
        if roots.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        for w in roots.windows(2) {
            parent[w[1]] = w[0];
        }
        out[i] = 1.0;
    }
    out
}

/// Distinct vertices of the acyclic-subset polytope from `count` random
/// check orders. Their mean is a valid starting point; on a tree every
/// order gives the all-ones vertex.
pub fn start_vertices(
    h: &ParityCheckMatrix,
    rho_floor: f64,
    count: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let weights: Vec<f64> = (0..h.m()).map(|_| rng.gen::<f64>()).collect();
        let v = linear_subproblem(&weights, h, rho_floor);
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// One subgraph's optimization problem: local code plus fixed LLR ensemble.
#[derive(Debug, Clone)]
pub struct SubgraphProblem {
    pub h: ParityCheckMatrix,
    pub ensemble: Vec<Vec<f64>>,
    pub rho_floor: f64,
    pub bp_max_iters: usize,
    pub bp_tol: f64,
}

/// `f(ρ)` together with the `I(ρ)` it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub mi: Vec<f64>,
    pub settled: bool,
}

impl SubgraphProblem {
    /// Consistent Gaussian LLRs for the all-zero codeword over BPSK-AWGN.
    pub fn new(h: ParityCheckMatrix, rate: f64, config: &EkarConfig, seed: u64) -> Self {
        let sigma2 = 8.0 * rate * 10f64.powf(config.design_ebn0_db / 10.0);
        let normal = Normal::new(sigma2 / 2.0, sigma2.sqrt()).expect("finite variance");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ensemble = (0..config.ensemble_size)
            .map(|_| (0..h.n()).map(|_| normal.sample(&mut rng)).collect())
            .collect();
        SubgraphProblem {
            h,
            ensemble,
            rho_floor: config.rho_floor,
            bp_max_iters: config.bp_max_iters,
            bp_tol: config.bp_tol,
        }
    }

    pub fn evaluate(&self, rho: &[f64]) -> Result<Evaluation, DesignError> {
        let inf = subgraph_beliefs(&self.h, rho, &self.ensemble, self.bp_max_iters, self.bp_tol)?;
        let mi = mutual_information(&self.h, &inf)?;
        let objective = -rho.iter().zip(&mi).map(|(r, i)| r * i).sum::<f64>();
        Ok(Evaluation {
            objective,
            mi,
            settled: inf.settled,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearch {
    pub alpha: f64,
    pub rho: Vec<f64>,
    pub eval: Evaluation,
}

fn step(rho: &[f64], target: &[f64], alpha: f64, floor: f64) -> Vec<f64> {
    rho.iter()
        .zip(target)
        .map(|(&r, &t)| (r + alpha * (t - r)).clamp(floor, 1.0))
        .collect()
}

/// Grid search of `f(ρ + α(ρ* − ρ))` over `α ∈ {0, 1/grid, …, 1}`.
///
/// `current` is the already known evaluation at `α = 0`. Ties go to the
/// smaller step.
pub fn line_search_alpha(
    problem: &SubgraphProblem,
    rho: &[f64],
    current: &Evaluation,
    rho_star: &[f64],
    grid: usize,
) -> Result<LineSearch, DesignError> {
    let grid = grid.max(1);
    let mut best = LineSearch {
        alpha: 0.0,
        rho: rho.to_vec(),
        eval: current.clone(),
    };
    if rho == rho_star {
        return Ok(best);
    }
    for k in 1..=grid {
        let alpha = k as f64 / grid as f64;
        let cand = step(rho, rho_star, alpha, problem.rho_floor);
        let eval = problem.evaluate(&cand)?;
        if eval.objective < best.eval.objective {
            best = LineSearch {
                alpha,
                rho: cand,
                eval,
            };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRecord {
    pub recursion: usize,
    /// `f(ρ^(r))`.
    pub upper: f64,
    /// Running lower bound `z^(r+1)`.
    pub lower: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FapOptimState {
    pub rho_t: Vec<f64>,
    pub z_t: f64,
    pub recursion: usize,
    pub upper_bound: f64,
    pub history: Vec<BoundRecord>,
    /// First recursion from which the iterate no longer moved.
    pub stationary_from: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    GapClosed,
    MaxRecursions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphOptimum {
    pub rho: Vec<f64>,
    pub objective: f64,
    pub stop: StopReason,
    pub state: FapOptimState,
    /// Every BP run behind the final objective settled.
    pub settled: bool,
}

/// Conditional-gradient search for one subgraph.
///
/// Starts from `rho_init`. Each recursion uses
/// the better of the greedy vertex and every vertex visited so far. Once the line search
/// returns `α = 0` the iterate is a fixed point of the recursion, so the
/// remaining recursions repeat the last record without recomputation.
pub fn optimize_subgraph_rho(
    problem: &SubgraphProblem,
    start: &[Vec<f64>],
    max_recursions: usize,
    tol: f64,
    grid: usize,
) -> Result<SubgraphOptimum, DesignError> {
    let l = problem.h.m();
    if start.is_empty() || start.iter().any(|v| v.len() != l) {
        return Err(DesignError::Config(format!(
            "need at least one start vertex of length {l}"
        )));
    }
    let mut rho: Vec<f64> = (0..l)
        .map(|i| start.iter().map(|v| v[i]).sum::<f64>() / start.len() as f64)
        .collect();
    let mut vertices: Vec<Vec<f64>> = start.to_vec();
    let mut eval = problem.evaluate(&rho)?;
    let mut state = FapOptimState {
        rho_t: rho.clone(),
        z_t: f64::NEG_INFINITY,
        recursion: 0,
        upper_bound: eval.objective,
        history: Vec::with_capacity(max_recursions),
        stationary_from: None,
    };
    let mut stop = StopReason::MaxRecursions;
    let mut last: Option<(Vec<f64>, f64, LineSearch)> = None;
    for r in 0..max_recursions {
        let (rho_star, f_lin, search) = match &last {
            Some(cached) if state.stationary_from.is_some() => cached.clone(),
            _ => {
                // ∇f = −I, so the linearization at a vertex v is −v·I
                let lin = |v: &[f64]| -v.iter().zip(&eval.mi).map(|(a, b)| a * b).sum::<f64>();
                let greedy = linear_subproblem(&eval.mi, &problem.h, problem.rho_floor);
                // greedy selection is not exact on hypergraphs; the iterate is a
                // mix of visited vertices, so one of them may do better
                let (rho_star, f_lin) = std::iter::once(greedy)
                    .chain(vertices.iter().cloned())
                    .map(|v| {
                        let f = lin(&v);
                        (v, f)
                    })
                    .fold(None, |best: Option<(Vec<f64>, f64)>, (v, f)| match best {
                        Some((bv, bf)) if bf <= f => Some((bv, bf)),
                        _ => Some((v, f)),
                    })
                    .unwrap();
                if !vertices.contains(&rho_star) {
                    vertices.push(rho_star.clone());
                }
                let search = line_search_alpha(problem, &rho, &eval, &rho_star, grid)?;
                (rho_star, f_lin, search)
            }
        };
        state.z_t = state.z_t.max(f_lin);
        state.upper_bound = eval.objective;
        state.recursion = r + 1;
        state.history.push(BoundRecord {
            recursion: r,
            upper: eval.objective,
            lower: state.z_t,
            alpha: search.alpha,
        });
        if state.upper_bound - state.z_t < tol {
            stop = StopReason::GapClosed;
            break;
        }
        if search.alpha == 0.0 && state.stationary_from.is_none() {
            state.stationary_from = Some(r);
        }
        rho = search.rho.clone();
        eval = search.eval.clone();
        last = Some((rho_star, f_lin, search));
    }
    state.rho_t = rho.clone();
    Ok(SubgraphOptimum {
        objective: eval.objective,
        settled: eval.settled,
        rho,
        stop,
        state,
    })
}

/// For each check, the value from the covering subgraph with the lowest
/// objective (ties to the lower subgraph index).
pub fn merge_rho(
    set: &SubgraphSet,
    per_subgraph: &[Vec<f64>],
    objectives: &[f64],
    m: usize,
) -> Result<ReweightVector, DesignError> {
    let mut best: Vec<Option<(f64, f64)>> = vec![None; m];
    for ((sub, rho), &obj) in set.subgraphs.iter().zip(per_subgraph).zip(objectives) {
        for (&c, &r) in sub.check_ids.iter().zip(rho) {
            match best[c] {
                Some((o, _)) if o <= obj => {}
                _ => best[c] = Some((obj, r)),
            }
        }
    }
    let rho = best
        .into_iter()
        .enumerate()
        .map(|(c, b)| {
            b.map(|(_, r)| r).ok_or_else(|| {
                DesignError::Config(format!("check {c} is not covered by any subgraph"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ReweightVector::new(rho)?)
}

#[derive(Debug, Clone)]
pub struct EkarDesign {
    pub rho: ReweightVector,
    pub subgraphs: SubgraphSet,
    pub optima: Vec<SubgraphOptimum>,
}

fn subgraph_seed(seed: u64, t: usize) -> u64 {
    seed ^ (t as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Full pipeline: expansion, per-subgraph optimization (in parallel), merge.
pub fn design_ekar(h: &ParityCheckMatrix, config: &EkarConfig) -> Result<EkarDesign, DesignError> {
    config.validate()?;
    let set = expand_subgraphs(h, config.d_max, config.subgraphs, config.seed)?;
    let rate = 1.0 - h.m() as f64 / h.n() as f64;
    let optima = set
        .subgraphs
        .par_iter()
        .enumerate()
        .map(|(t, sub): (usize, &Subgraph)| {
            let seed = subgraph_seed(config.seed, t);
            let problem = SubgraphProblem::new(sub.local_matrix(), rate, config, seed);
            let start = start_vertices(&problem.h, config.rho_floor, config.start_vertices, seed);
            let opt = optimize_subgraph_rho(
                &problem,
                &start,
                config.max_recursions,
                config.tol,
                config.grid,
            )?;
            log::debug!(
                "subgraph {t}: {} checks, objective {:.6}, {:?} after {} recursions",
                sub.len(),
                opt.objective,
                opt.stop,
                opt.state.recursion
            );
            Ok(opt)
        })
        .collect::<Result<Vec<_>, DesignError>>()?;
    let per: Vec<Vec<f64>> = optima.iter().map(|o| o.rho.clone()).collect();
    let objectives: Vec<f64> = optima.iter().map(|o| o.objective).collect();
    let rho = merge_rho(&set, &per, &objectives, h.m())?;
    Ok(EkarDesign {
        rho,
        subgraphs: set,
        optima,
    })
}
