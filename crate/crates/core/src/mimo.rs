//! Flat Rayleigh MIMO channel and the soft-input soft-output PIC-MMSE detector.
//!
//! Per channel use `r = C s + n` with `C` of size `N_R × N_T`. For stream `k`
//! the detector subtracts the soft estimates of all other streams, filters the
//! residual with an MMSE filter that accounts for the remaining estimation
//! error, and converts the filter output into extrinsic bit LLRs.

use crate::decoder::clip_llr;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MimoError {
    #[error("need at least as many receive as transmit antennas (N_R = {nr}, N_T = {nt})")]
    TooFewReceivers { nr: usize, nt: usize },
    #[error("noise power must be positive, got {0}")]
    NonPositiveNoise(f64),
    #[error("bit count {bits} is not a multiple of {chunk}")]
    BitCount { bits: usize, chunk: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("MMSE system for stream {0} is singular")]
    Singular(usize),
}

/// Noise power for a given Eb/N0 with information-bit normalization.
pub fn n0_from_ebn0(ebn0_db: f64, rate: f64, bits_per_symbol: usize, es: f64) -> f64 {
    es / (rate * bits_per_symbol as f64 * 10f64.powf(ebn0_db / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    Qam16,
}

/// Gray-labelled constellation with unit average energy.
///
/// Point `a` carries label `a`; bit `j` of the label (most significant
/// first) is the `j`-th bit of the symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationMap {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
    es: f64,
}

impl ModulationMap {
    pub fn new(kind: Modulation) -> Self {
        match kind {
            Modulation::Qpsk => Self::qpsk(),
            Modulation::Qam16 => Self::qam16(),
        }
    }

    /// Bit pair `(b0, b1)` maps to `((1 − 2 b0) + j (1 − 2 b1)) / √2`.
    pub fn qpsk() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let points = (0..4u32)
            .map(|l| {
                let b0 = (l >> 1) & 1;
                let b1 = l & 1;
                Complex64::new(s * (1.0 - 2.0 * b0 as f64), s * (1.0 - 2.0 * b1 as f64))
            })
            .collect();
        ModulationMap {
            points,
            bits_per_symbol: 2,
            es: 1.0,
        }
    }

    /// Square 16-QAM; per axis the first bit picks the sign and the second
    /// the amplitude (0 → outer, 1 → inner).
    pub fn qam16() -> Self {
        let s = 1.0 / 10f64.sqrt();
        let level = |sign: u32, inner: u32| {
            let amp = if inner == 1 { 1.0 } else { 3.0 };
            if sign == 0 {
                amp
            } else {
                -amp
            }
        };
        let points = (0..16u32)
            .map(|l| {
                let re = level((l >> 3) & 1, (l >> 2) & 1);
                let im = level((l >> 1) & 1, l & 1);
                Complex64::new(s * re, s * im)
            })
            .collect();
        ModulationMap {
            points,
            bits_per_symbol: 4,
            es: 1.0,
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn es(&self) -> f64 {
        self.es
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Bit `j` of label `label`.
    #[inline]
    pub fn bit(&self, label: usize, j: usize) -> u8 {
        ((label >> (self.bits_per_symbol - 1 - j)) & 1) as u8
    }

    pub fn map(&self, bits: &[u8]) -> Complex64 {
        let label = bits
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
        self.points[label]
    }
}

/// One channel matrix with its noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub c: CMatrix,
    pub n0: f64,
    pub es: f64,
}

impl ChannelRealization {
    pub fn new(c: CMatrix, n0: f64, es: f64) -> Result<Self, MimoError> {
        if c.nrows() < c.ncols() {
            return Err(MimoError::TooFewReceivers {
                nr: c.nrows(),
                nt: c.ncols(),
            });
        }
        if !(n0 > 0.0) {
            return Err(MimoError::NonPositiveNoise(n0));
        }
        Ok(ChannelRealization { c, n0, es })
    }

    /// i.i.d. CN(0, 1) entries.
    pub fn sample<R: Rng + ?Sized>(
        nr: usize,
        nt: usize,
        n0: f64,
        rng: &mut R,
    ) -> Result<Self, MimoError> {
        if nr < nt {
            return Err(MimoError::TooFewReceivers { nr, nt });
        }
        let c = CMatrix::from_fn(nr, nt, |_, _| complex_gaussian(rng, 1.0));
        Self::new(c, n0, 1.0)
    }

    pub fn nr(&self) -> usize {
        self.c.nrows()
    }

    pub fn nt(&self) -> usize {
        self.c.ncols()
    }

    /// `r = C s + n` with `n ~ CN(0, N0 I)`.
    pub fn transmit<R: Rng + ?Sized>(&self, s: &CVector, rng: &mut R) -> CVector {
        let mut r = &self.c * s;
        for x in r.iter_mut() {
            *x += complex_gaussian(rng, self.n0);
        }
        r
    }
}

/// Channel with unit-variance entries drawn from a seeded stream.
pub fn sample_channel(nr: usize, nt: usize, seed: u64) -> Result<CMatrix, MimoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ChannelRealization::sample(nr, nt, 1.0, &mut rng)?.c)
}

/// Circularly-symmetric complex Gaussian with total variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Groups bits into symbol vectors of `nt` streams.
pub fn modulate(bits: &[u8], map: &ModulationMap, nt: usize) -> Result<Vec<CVector>, MimoError> {
    let m = map.bits_per_symbol();
    let chunk = m * nt;
    if nt == 0 || !bits.len().is_multiple_of(chunk) {
        return Err(MimoError::BitCount {
            bits: bits.len(),
            chunk,
        });
    }
    Ok(bits
        .chunks(chunk)
        .map(|c| CVector::from_iterator(nt, c.chunks(m).map(|b| map.map(b))))
        .collect())
}

/// Soft estimate of one transmitted symbol from its bit priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftSymbol {
    pub mean: Complex64,
    pub err_var: f64,
}

/// `P(bit = 0)` from an LLR, evaluated without overflow.
#[inline]
fn prob_zero(llr: f64) -> f64 {
    if llr >= 0.0 {
        1.0 / (1.0 + (-llr).exp())
    } else {
        let e = llr.exp();
        e / (1.0 + e)
    }
}

/// Mean and residual variance of a symbol under independent bit priors.
pub fn soft_symbol(apriori: &[f64], map: &ModulationMap) -> SoftSymbol {
    let m = map.bits_per_symbol();
    debug_assert_eq!(apriori.len(), m);
    let p0: Vec<f64> = apriori.iter().map(|&l| prob_zero(l)).collect();
    let mut mean = Complex64::new(0.0, 0.0);
    let mut energy = 0.0;
    for (label, &a) in map.points().iter().enumerate() {
        let mut p = 1.0;
        for (j, &pj) in p0.iter().enumerate() {
            p *= if map.bit(label, j) == 0 { pj } else { 1.0 - pj };
        }
        mean += a * p;
        energy += p * a.norm_sqr();
    }
    let err_var = (energy - mean.norm_sqr()).max(0.0);
    SoftSymbol { mean, err_var }
}

/// `r − Σ_{q≠k} c_q ŷ_q`.
pub fn pic_cancel(r: &CVector, c: &CMatrix, stats: &[SoftSymbol], k: usize) -> CVector {
    let mut out = r.clone();
    for (q, s) in stats.iter().enumerate() {
        if q != k {
            out.axpy(-s.mean, &c.column(q), Complex64::new(1.0, 0.0));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmseFilter {
    pub w: CVector,
    /// μ_k = w^H c_k (real for a Hermitian system).
    pub gain: f64,
    /// σ²_eff = Es μ_k (1 − μ_k).
    pub eff_var: f64,
}

/// Covariance `C Λ̃_k C^H + N0 I` of the residual seen by stream `k`.
pub fn residual_covariance(
    c: &CMatrix,
    stats: &[SoftSymbol],
    k: usize,
    es: f64,
    n0: f64,
) -> CMatrix {
    let nr = c.nrows();
    let mut cov = CMatrix::from_diagonal_element(nr, nr, Complex64::new(n0, 0.0));
    for (q, s) in stats.iter().enumerate() {
        let v = if q == k { es } else { s.err_var };
        if v == 0.0 {
            continue;
        }
        let col = c.column(q);
        cov.ger(
            Complex64::new(v, 0.0),
            &col,
            &col.map(|x| x.conj()),
            Complex64::new(1.0, 0.0),
        );
    }
    cov
}

/// MMSE filter `w_k = Es (C Λ̃_k C^H + N0 I)^{-1} c_k`.
pub fn mmse_filter(
    c: &CMatrix,
    stats: &[SoftSymbol],
    k: usize,
    es: f64,
    n0: f64,
) -> Result<MmseFilter, MimoError> {
    let cov = residual_covariance(c, stats, k, es, n0);
    let ck: CVector = c.column(k).into_owned();
    // pivots this small relative to the largest mean a numerically singular system
    let degenerate = |d: Vec<f64>| {
        let max = d.iter().copied().fold(0.0, f64::max);
        d.iter().any(|&x| !(x > max * 1e-13))
    };
    let lu = cov.lu();
    if degenerate(lu.u().diagonal().iter().map(|x| x.norm()).collect()) {
        return Err(MimoError::Singular(k));
    }
    let sol = lu.solve(&ck).ok_or(MimoError::Singular(k))?;
    if sol.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(MimoError::Singular(k));
    }
    let w = sol * Complex64::new(es, 0.0);
    let gain = w.dotc(&ck).re;
    let eff_var = es * gain * (1.0 - gain);
    Ok(MmseFilter { w, gain, eff_var })
}

/// Extrinsic LLRs of the bits of one symbol from the filtered output `y`.
///
/// The likelihood of candidate `a` is Gaussian around `gain · a` with variance
/// `eff_var`; the prior of bit `j` itself is left out of the sums for bit `j`.
pub fn bit_llr(
    y: Complex64,
    gain: f64,
    eff_var: f64,
    apriori: &[f64],
    map: &ModulationMap,
) -> Vec<f64> {
    let m = map.bits_per_symbol();
    let var = eff_var.max(1e-300);
    let metric: Vec<f64> = map
        .points()
        .iter()
        .map(|&a| -(y - a * gain).norm_sqr() / var)
        .collect();
    (0..m)
        .map(|j| {
            let mut num = f64::NEG_INFINITY;
            let mut den = f64::NEG_INFINITY;
            for (label, &d) in metric.iter().enumerate() {
                let mut t = d;
                for (i, &l) in apriori.iter().enumerate() {
                    if i != j {
                        t += if map.bit(label, i) == 0 {
                            l / 2.0
                        } else {
                            -l / 2.0
                        };
                    }
                }
                if map.bit(label, j) == 0 {
                    num = log_add(num, t);
                } else {
                    den = log_add(den, t);
                }
            }
            clip_llr(num - den)
        })
        .collect()
}

#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Detector output for one channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    /// Extrinsic LLRs, stream-major: bits of stream 0, then stream 1, ...
    pub llr1: Vec<f64>,
    pub eff_gain: Vec<f64>,
    pub eff_var: Vec<f64>,
}

/// PIC-MMSE detection of one received vector.
///
/// `priors` holds `N_T · m` a-priori LLRs in the same stream-major order as
/// the output.
pub fn detect(
    ch: &ChannelRealization,
    r: &CVector,
    priors: &[f64],
    map: &ModulationMap,
) -> Result<DetectorOutput, MimoError> {
    let m = map.bits_per_symbol();
    let nt = ch.nt();
    if priors.len() != nt * m {
        return Err(MimoError::LengthMismatch {
            expected: nt * m,
            got: priors.len(),
        });
    }
    let stats: Vec<SoftSymbol> = priors.chunks(m).map(|p| soft_symbol(p, map)).collect();
    let mut out = DetectorOutput {
        llr1: Vec::with_capacity(nt * m),
        eff_gain: Vec::with_capacity(nt),
        eff_var: Vec::with_capacity(nt),
    };
    for k in 0..nt {
        let residual = pic_cancel(r, &ch.c, &stats, k);
        let f = mmse_filter(&ch.c, &stats, k, ch.es, ch.n0)?;
        let y = f.w.dotc(&residual);
        out.llr1.extend(bit_llr(
            y,
            f.gain,
            f.eff_var,
            &priors[k * m..(k + 1) * m],
            map,
        ));
        out.eff_gain.push(f.gain);
        out.eff_var.push(f.eff_var);
    }
    Ok(out)
}
