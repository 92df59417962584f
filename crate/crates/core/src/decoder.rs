//! Reweighted belief propagation over a Tanner graph.
//!
//! All soft values are LLRs `ln P(x=0)/P(x=1)`. The per-check reweighting
//! factor ρ_i scales every message leaving check `i` when it is absorbed at a
//! variable node:
//!
//! ```text
//! Ψ_ji = λ_j + Σ_{i'∈N(j)\i} ρ_i' Λ_i'j − (1 − ρ_i) Λ_ij
//! Λ_ij = 2 atanh( Π_{j'∈N(i)\j} tanh(Ψ_j'i / 2) )
//! b_j  = λ_j + Σ_{i∈N(j)} ρ_i Λ_ij
//! ```
//!
//! With ρ ≡ 1 these are the ordinary sum-product rules, so standard BP, URW,
//! CKAR and EKAR decoding differ only in the [`ReweightVector`] supplied.

use crate::graph::ParityCheckMatrix;
use thiserror::Error;

/// Magnitude limit applied to every LLR and message.
pub const LLR_CLIP: f64 = 50.0;
/// Largest `|tanh|` fed into `atanh`.
pub const TANH_CAP: f64 = 1.0 - 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecoderError {
    #[error("reweighting factor {value} at check {index} is outside (0, 1]")]
    RhoOutOfRange { index: usize, value: f64 },
    #[error("reweighting vector has length {got}, graph has {expected} checks")]
    RhoLength { expected: usize, got: usize },
    #[error("check {0} has degree below 2")]
    DegenerateCheck(usize),
    #[error("no incoming message from neighbour {0}")]
    MissingNeighbour(usize),
    #[error("LLR input has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

#[inline]
pub fn clip_llr(x: f64) -> f64 {
    x.clamp(-LLR_CLIP, LLR_CLIP)
}

/// One factor appearance probability per check node, each in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ReweightVector(Vec<f64>);

impl ReweightVector {
    pub fn new(rho: Vec<f64>) -> Result<Self, DecoderError> {
        if let Some((index, &value)) = rho
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > 0.0 && v <= 1.0))
        {
            return Err(DecoderError::RhoOutOfRange { index, value });
        }
        Ok(ReweightVector(rho))
    }

    /// ρ = 1 everywhere: standard belief propagation.
    pub fn ones(m: usize) -> Self {
        ReweightVector(vec![1.0; m])
    }

    pub fn uniform(m: usize, value: f64) -> Result<Self, DecoderError> {
        Self::new(vec![value; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Variable-to-check message for `target`.
///
/// `incoming` holds `(check, Λ)` for every check neighbour of the variable.
pub fn variable_to_check(
    lambda_in: f64,
    incoming: &[(usize, f64)],
    rho: &ReweightVector,
    target: usize,
) -> Result<f64, DecoderError> {
    let own = incoming
        .iter()
        .find(|(c, _)| *c == target)
        .ok_or(DecoderError::MissingNeighbour(target))?
        .1;
    let mut psi = lambda_in;
    for &(c, l) in incoming {
        if c != target {
            psi += rho.0[c] * l;
        }
    }
    psi -= (1.0 - rho.0[target]) * own;
    Ok(clip_llr(psi))
}

/// Check-to-variable message for `target` via the tanh rule.
///
/// `incoming` holds `(variable, Ψ)` for the check's neighbours; the entry for
/// `target` (if present) is excluded. An empty product is treated as a known
/// parity and yields `+LLR_CLIP`.
pub fn check_to_variable(incoming: &[(usize, f64)], target: usize) -> f64 {
    let mut prod = 1.0;
    let mut any = false;
    for &(v, psi) in incoming {
        if v != target {
            prod *= (psi / 2.0).tanh();
            any = true;
        }
    }
    if !any {
        return LLR_CLIP;
    }
    clip_llr(2.0 * prod.clamp(-TANH_CAP, TANH_CAP).atanh())
}

/// Belief `λ + Σ ρ_i Λ_ij` of one variable.
pub fn compute_belief(lambda_in: f64, incoming: &[(usize, f64)], rho: &ReweightVector) -> f64 {
    let mut b = lambda_in;
    for &(c, l) in incoming {
        b += rho.0[c] * l;
    }
    clip_llr(b)
}

/// Per-edge messages. Edges are numbered row-major: check by check, and
/// within a check by increasing variable index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageState {
    /// Variable-to-check messages Ψ.
    pub psi: Vec<f64>,
    /// Check-to-variable messages Λ.
    pub lambda: Vec<f64>,
    tanh_buf: Vec<f64>,
}

impl MessageState {
    pub fn new(edges: usize) -> Self {
        MessageState {
            psi: vec![0.0; edges],
            lambda: vec![0.0; edges],
            tanh_buf: vec![0.0; edges],
        }
    }

    fn reset(&mut self, llr_in: &[f64], layout: &Layout) {
        let e = layout.edge_var.len();
        self.psi.resize(e, 0.0);
        self.lambda.clear();
        self.lambda.resize(e, 0.0);
        self.tanh_buf.resize(e, 0.0);
        for (p, &v) in self.psi.iter_mut().zip(&layout.edge_var) {
            *p = clip_llr(llr_in[v]);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub hard_bits: Vec<u8>,
    pub beliefs: Vec<f64>,
    /// `Σ_i ρ_i Λ_ij` per variable, clipped. Equals `b − λ_in` unless the
    /// belief itself hit the clip.
    pub extrinsic: Vec<f64>,
    pub iterations_used: usize,
    /// The hard decision has a zero syndrome.
    pub converged: bool,
}

/// Compressed edge layout shared by all decodes on one graph.
#[derive(Debug, Clone)]
struct Layout {
    check_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    edge_check: Vec<usize>,
    var_ptr: Vec<usize>,
    /// Edge ids grouped by variable, checks in increasing order.
    var_edges: Vec<usize>,
}

impl Layout {
    fn new(h: &ParityCheckMatrix) -> Self {
        let mut check_ptr = Vec::with_capacity(h.m() + 1);
        let mut edge_var = Vec::with_capacity(h.num_edges());
        let mut edge_check = Vec::with_capacity(h.num_edges());
        check_ptr.push(0);
        for (i, row) in h.rows().iter().enumerate() {
            edge_var.extend_from_slice(row);
            edge_check.extend(std::iter::repeat_n(i, row.len()));
            check_ptr.push(edge_var.len());
        }
        let mut var_ptr = vec![0usize; h.n() + 1];
        for &v in &edge_var {
            var_ptr[v + 1] += 1;
        }
        for j in 0..h.n() {
            var_ptr[j + 1] += var_ptr[j];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0usize; edge_var.len()];
        // row-major traversal visits each variable's checks in increasing order
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v]] = e;
            fill[v] += 1;
        }
        Layout {
            check_ptr,
            edge_var,
            edge_check,
            var_ptr,
            var_edges,
        }
    }
}

/// The reweighted BP decoder for one code and one reweighting vector.
///
/// Immutable after construction; each decode uses its own [`MessageState`],
/// so one instance can serve many threads.
#[derive(Debug, Clone)]
pub struct ReweightedBp {
    n: usize,
    m: usize,
    layout: Layout,
    rho: ReweightVector,
}

impl ReweightedBp {
    pub fn new(h: &ParityCheckMatrix, rho: ReweightVector) -> Result<Self, DecoderError> {
        if rho.len() != h.m() {
            return Err(DecoderError::RhoLength {
                expected: h.m(),
                got: rho.len(),
            });
        }
        if let Some(i) = (0..h.m()).find(|&i| h.row(i).len() < 2) {
            return Err(DecoderError::DegenerateCheck(i));
        }
        Ok(ReweightedBp {
            n: h.n(),
            m: h.m(),
            layout: Layout::new(h),
            rho,
        })
    }

    pub fn rho(&self) -> &ReweightVector {
        &self.rho
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn num_edges(&self) -> usize {
        self.layout.edge_var.len()
    }

    /// `(check, variable)` of edge `e`.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        (self.layout.edge_check[e], self.layout.edge_var[e])
    }

    pub fn new_state(&self) -> MessageState {
        MessageState::new(self.num_edges())
    }

    fn check_len(&self, llr_in: &[f64]) -> Result<(), DecoderError> {
        if llr_in.len() != self.n {
            return Err(DecoderError::LengthMismatch {
                expected: self.n,
                got: llr_in.len(),
            });
        }
        Ok(())
    }

    /// Loads the zero-message initial state: Λ = 0 and Ψ = λ.
    pub fn init_state(&self, llr_in: &[f64], state: &mut MessageState) -> Result<(), DecoderError> {
        self.check_len(llr_in)?;
        state.reset(llr_in, &self.layout);
        Ok(())
    }

    /// Updates every check-to-variable message from the current Ψ.
    pub fn check_update(&self, state: &mut MessageState) {
        let MessageState {
            psi,
            lambda,
            tanh_buf,
        } = state;
        for (t, &p) in tanh_buf.iter_mut().zip(psi.iter()) {
            *t = (p / 2.0).tanh();
        }
        for w in self.layout.check_ptr.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let t = &tanh_buf[lo..hi];
            for (k, out) in lambda[lo..hi].iter_mut().enumerate() {
                let mut prod = 1.0;
                for (k2, &tk) in t.iter().enumerate() {
                    if k2 != k {
                        prod *= tk;
                    }
                }
                *out = clip_llr(2.0 * prod.clamp(-TANH_CAP, TANH_CAP).atanh());
            }
        }
    }

    /// Updates every variable-to-check message from the current Λ.
    pub fn variable_update(&self, llr_in: &[f64], state: &mut MessageState) {
        let rho = &self.rho.0;
        let l = &self.layout;
        for j in 0..self.n {
            let edges = &l.var_edges[l.var_ptr[j]..l.var_ptr[j + 1]];
            for &e in edges {
                let mut psi = llr_in[j];
                for &e2 in edges {
                    if e2 != e {
                        psi += rho[l.edge_check[e2]] * state.lambda[e2];
                    }
                }
                psi -= (1.0 - rho[l.edge_check[e]]) * state.lambda[e];
                state.psi[e] = clip_llr(psi);
            }
        }
    }

    /// Writes the beliefs for the current Λ into `out`.
    pub fn beliefs_into(&self, llr_in: &[f64], state: &MessageState, out: &mut [f64]) {
        let rho = &self.rho.0;
        let l = &self.layout;
        for (j, b) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = llr_in[j];
            for &e in &l.var_edges[l.var_ptr[j]..l.var_ptr[j + 1]] {
                acc += rho[l.edge_check[e]] * state.lambda[e];
            }
            *b = clip_llr(acc);
        }
    }

    /// Writes `Σ_i ρ_i Λ_ij` for the current Λ into `out`.
    pub fn extrinsic_into(&self, state: &MessageState, out: &mut [f64]) {
        let rho = &self.rho.0;
        let l = &self.layout;
        for (j, x) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for &e in &l.var_edges[l.var_ptr[j]..l.var_ptr[j + 1]] {
                acc += rho[l.edge_check[e]] * state.lambda[e];
            }
            *x = clip_llr(acc);
        }
    }

    /// One flooding iteration: all checks, then all variables.
    pub fn iterate(&self, llr_in: &[f64], state: &mut MessageState) {
        self.check_update(state);
        self.variable_update(llr_in, state);
    }

    fn syndrome_ok(&self, hard: &[u8]) -> bool {
        self.layout.check_ptr.windows(2).all(|w| {
            self.layout.edge_var[w[0]..w[1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ hard[v])
                == 0
        })
    }

    /// Decodes until the hard decision is a codeword or `max_iters` is reached.
    pub fn decode(&self, llr_in: &[f64], max_iters: usize) -> Result<DecodeResult, DecoderError> {
        let mut state = self.new_state();
        self.decode_with(llr_in, max_iters, &mut state)
    }

    /// As [`decode`](Self::decode), reusing caller-provided scratch state.
    pub fn decode_with(
        &self,
        llr_in: &[f64],
        max_iters: usize,
        state: &mut MessageState,
    ) -> Result<DecodeResult, DecoderError> {
        self.init_state(llr_in, state)?;
        let mut beliefs = vec![0.0; self.n];
        let mut hard_bits = vec![0u8; self.n];
        let mut iterations_used = 0;
        let mut converged = false;
        for it in 1..=max_iters.max(1) {
            self.iterate(llr_in, state);
            self.beliefs_into(llr_in, state, &mut beliefs);
            for (h, &b) in hard_bits.iter_mut().zip(&beliefs) {
                *h = (b < 0.0) as u8;
            }
            iterations_used = it;
            if self.syndrome_ok(&hard_bits) {
                converged = true;
                break;
            }
        }
        let mut extrinsic = vec![0.0; self.n];
        self.extrinsic_into(state, &mut extrinsic);
        Ok(DecodeResult {
            hard_bits,
            beliefs,
            extrinsic,
            iterations_used,
            converged,
        })
    }

    /// Iterates until no check-to-variable message moves by more than `tol`,
    /// or `max_iters` iterations. Returns `(iterations, settled)`.
    pub fn run_to_fixed_point(
        &self,
        llr_in: &[f64],
        max_iters: usize,
        tol: f64,
        state: &mut MessageState,
    ) -> Result<(usize, bool), DecoderError> {
        self.init_state(llr_in, state)?;
        let mut prev = state.lambda.clone();
        for it in 1..=max_iters.max(1) {
            self.iterate(llr_in, state);
            let delta = state
                .lambda
                .iter()
                .zip(&prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if delta <= tol {
                return Ok((it, true));
            }
            prev.copy_from_slice(&state.lambda);
        }
        Ok((max_iters.max(1), false))
    }
}

/// Extrinsic LLRs `b − λ_in` handed back to the detector.
pub fn extrinsic_output(result: &DecodeResult, llr_in: &[f64]) -> Vec<f64> {
    result
        .beliefs
        .iter()
        .zip(llr_in)
        .map(|(&b, &l)| clip_llr(b - l))
        .collect()
}
