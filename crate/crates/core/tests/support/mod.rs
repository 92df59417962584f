//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use kabp::decoder::{DecodeResult, DecoderError};
use kabp::graph::ParityCheckMatrix;
use kabp::idd::InnerDecoder;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub const CLIP: f64 = 50.0;
const CAP: f64 = 1.0 - 1e-15;

fn clip(x: f64) -> f64 {
    x.clamp(-CLIP, CLIP)
}

/// Messages keyed by `(check, variable)`.
pub type EdgeMap = BTreeMap<(usize, usize), f64>;

#[derive(Debug, Clone)]
pub struct TextbookIteration {
    pub psi: EdgeMap,
    pub lambda: EdgeMap,
    pub beliefs: Vec<f64>,
    pub hard: Vec<u8>,
}

/// Plain sum-product decoder over a dense matrix, written from the textbook
/// update rules with the same clipping guards as the engine.
pub struct Textbook {
    dense: Vec<Vec<u8>>,
    n: usize,
    m: usize,
}

impl Textbook {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        Textbook {
            dense: h.to_dense(),
            n: h.n(),
            m: h.m(),
        }
    }

    fn checks_of(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.m).filter(move |&i| self.dense[i][j] == 1)
    }

    fn vars_of(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.dense[i][j] == 1)
    }

    fn syndrome_zero(&self, hard: &[u8]) -> bool {
        (0..self.m).all(|i| self.vars_of(i).map(|j| hard[j]).sum::<u8>() % 2 == 0)
    }

    /// Runs exactly `iters` flooding iterations and records each one.
    pub fn trace(&self, llr: &[f64], iters: usize) -> Vec<TextbookIteration> {
        let mut psi = EdgeMap::new();
        let mut lambda = EdgeMap::new();
        for i in 0..self.m {
            for j in self.vars_of(i) {
                psi.insert((i, j), clip(llr[j]));
                lambda.insert((i, j), 0.0);
            }
        }
        let mut out = Vec::with_capacity(iters);
        for _ in 0..iters {
            for i in 0..self.m {
                for j in self.vars_of(i) {
                    let mut prod = 1.0;
                    for j2 in self.vars_of(i) {
                        if j2 != j {
                            prod *= (psi[&(i, j2)] / 2.0).tanh();
                        }
                    }
                    let v = 2.0 * prod.clamp(-CAP, CAP).atanh();
                    lambda.insert((i, j), clip(v));
                }
            }
            for j in 0..self.n {
                for i in self.checks_of(j) {
                    let mut s = llr[j];
                    for i2 in self.checks_of(j) {
                        if i2 != i {
                            s += lambda[&(i2, j)];
                        }
                    }
                    psi.insert((i, j), clip(s));
                }
            }
            let beliefs: Vec<f64> = (0..self.n)
                .map(|j| clip(llr[j] + self.checks_of(j).map(|i| lambda[&(i, j)]).sum::<f64>()))
                .collect();
            let hard = beliefs.iter().map(|&b| (b < 0.0) as u8).collect();
            out.push(TextbookIteration {
                psi: psi.clone(),
                lambda: lambda.clone(),
                beliefs,
                hard,
            });
        }
        out
    }

    /// Decodes with the syndrome stop.
    pub fn decode(&self, llr: &[f64], max_iters: usize) -> DecodeResult {
        let trace = self.trace(llr, max_iters.max(1));
        let mut used = trace.len();
        let mut converged = false;
        for (t, it) in trace.iter().enumerate() {
            if self.syndrome_zero(&it.hard) {
                used = t + 1;
                converged = true;
                break;
            }
        }
        let last = &trace[used - 1];
        let extrinsic = (0..self.n)
            .map(|j| clip(self.checks_of(j).map(|i| last.lambda[&(i, j)]).sum::<f64>()))
            .collect();
        DecodeResult {
            hard_bits: last.hard.clone(),
            beliefs: last.beliefs.clone(),
            extrinsic,
            iterations_used: used,
            converged,
        }
    }
}

impl InnerDecoder for Textbook {
    fn decode_llr(&self, llr_in: &[f64], max_iters: usize) -> Result<DecodeResult, DecoderError> {
        Ok(self.decode(llr_in, max_iters))
    }
}

/// Random sparse matrix; empty columns get one random check and rows are
/// topped up to weight two.
pub fn random_sparse(rng: &mut ChaCha8Rng, n: usize, m: usize, p: f64) -> ParityCheckMatrix {
    assert!(n >= 2 && m >= 1);
    let mut dense = vec![vec![0u8; n]; m];
    for row in dense.iter_mut() {
        for x in row.iter_mut() {
            *x = rng.gen_bool(p) as u8;
        }
    }
    for j in 0..n {
        if dense.iter().all(|r| r[j] == 0) {
            dense[rng.gen_range(0..m)][j] = 1;
        }
    }
    for row in dense.iter_mut() {
        while row.iter().filter(|&&x| x == 1).count() < 2 {
            row[rng.gen_range(0..n)] = 1;
        }
    }
    ParityCheckMatrix::from_dense(&dense).expect("valid random matrix")
}

/// KL divergence of the parity-constrained joint built from incoming LLRs
/// against the product of the given single-variable beliefs, by summing over
/// all `2^d` configurations.
pub fn brute_force_check_mi(incoming: &[f64], beliefs: &[f64]) -> f64 {
    let d = incoming.len();
    let p0 = |l: f64| 1.0 / (1.0 + (-l).exp());
    let mut joint = vec![0.0; 1 << d];
    for (x, w) in joint.iter_mut().enumerate() {
        if (x as u32).count_ones() % 2 == 1 {
            continue;
        }
        *w = (0..d)
            .map(|k| {
                let q = p0(incoming[k]);
                if (x >> k) & 1 == 0 {
                    q
                } else {
                    1.0 - q
                }
            })
            .product();
    }
    let z: f64 = joint.iter().sum();
    let mut kl = 0.0;
    for (x, &w) in joint.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let p = w / z;
        let q: f64 = (0..d)
            .map(|k| {
                let q = p0(beliefs[k]);
                if (x >> k) & 1 == 0 {
                    q
                } else {
                    1.0 - q
                }
            })
            .product();
        kl += p * (p / q).ln();
    }
    kl
}

/// Posterior LLRs of a single parity check with independent inputs, by
/// enumerating all even-weight words.
pub fn single_check_posterior(llr: &[f64]) -> Vec<f64> {
    let d = llr.len();
    let mut num = vec![0.0; d];
    let mut den = vec![0.0; d];
    for x in 0..(1usize << d) {
        if (x as u32).count_ones() % 2 == 1 {
            continue;
        }
        let w: f64 = (0..d)
            .map(|k| {
                let p = 1.0 / (1.0 + (-llr[k]).exp());
                if (x >> k) & 1 == 0 {
                    p
                } else {
                    1.0 - p
                }
            })
            .product();
        for k in 0..d {
            if (x >> k) & 1 == 0 {
                num[k] += w;
            } else {
                den[k] += w;
            }
        }
    }
    num.iter().zip(&den).map(|(a, b)| (a / b).ln()).collect()
}

/// `J(σ)` by the trapezoid rule on a wide uniform grid.
pub fn j_trapezoid(sigma: f64) -> f64 {
    let mean = sigma * sigma / 2.0;
    let (lo, hi) = (mean - 14.0 * sigma, mean + 14.0 * sigma);
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let f = |l: f64| {
        let pdf = (-(l - mean).powi(2) / (2.0 * sigma * sigma)).exp()
            / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
        let loss = if l > 0.0 {
            (-l).exp().ln_1p()
        } else {
            -l + l.exp().ln_1p()
        };
        pdf * loss / std::f64::consts::LN_2
    };
    let mut acc = 0.5 * (f(lo) + f(hi));
    for k in 1..steps {
        acc += f(lo + k as f64 * h);
    }
    1.0 - acc * h
}
