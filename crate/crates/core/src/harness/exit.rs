use super::HarnessError;
use crate::decoder::{ReweightedBp, LLR_CLIP};
use crate::graph::SystematicEncoder;
use crate::idd::IddSystem;
use crate::mimo::{detect, ChannelRealization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// `log2(1 + e^{-x})` without overflow.
fn log2_1p_exp_neg(x: f64) -> f64 {
    let sp = if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    };
    sp / std::f64::consts::LN_2
}

/// Mutual information between a bit and a consistent Gaussian LLR with
/// standard deviation `sigma`, by Simpson quadrature.
pub fn j_function(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    if !sigma.is_finite() {
        return 1.0;
    }
    const HALF_WIDTH: f64 = 12.0;
    const STEPS: usize = 4000;
    let h = 2.0 * HALF_WIDTH / STEPS as f64;
    let mean = sigma * sigma / 2.0;
    let f = |z: f64| {
        let pdf = (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        pdf * log2_1p_exp_neg(mean + sigma * z)
    };
    let mut acc = f(-HALF_WIDTH) + f(HALF_WIDTH);
    for i in 1..STEPS {
        let z = -HALF_WIDTH + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(z);
    }
    (1.0 - acc * h / 3.0).clamp(0.0, 1.0)
}

/// `σ` with `J(σ) = i`, by bisection. Returns infinity for `i ≥ 1`.
pub fn j_inverse(i: f64) -> f64 {
    if i <= 0.0 {
        return 0.0;
    }
    if i >= 1.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if j_function(mid) < i {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Time-average estimate `1 − mean log2(1 + e^{−λx})`, `x = +1` for bit 0.
pub fn mutual_info_estimate(llrs: &[f64], bits: &[u8]) -> f64 {
    assert_eq!(llrs.len(), bits.len(), "one LLR per bit");
    if llrs.is_empty() {
        return 0.0;
    }
    let loss: f64 = llrs
        .iter()
        .zip(bits)
        .map(|(&l, &b)| log2_1p_exp_neg(if b == 0 { l } else { -l }))
        .sum();
    (1.0 - loss / llrs.len() as f64).clamp(0.0, 1.0)
}

/// Consistent Gaussian LLRs `(σ²/2 + σ z)·x` for the given bits; infinite
/// `sigma` gives saturated LLRs.
pub fn consistent_llrs<R: Rng + ?Sized>(bits: &[u8], sigma: f64, rng: &mut R) -> Vec<f64> {
    bits.iter()
        .map(|&b| {
            let x = if b == 0 { 1.0 } else { -1.0 };
            if !sigma.is_finite() {
                return LLR_CLIP * x;
            }
            let z: f64 = rng.sample(StandardNormal);
            ((sigma * sigma / 2.0 + sigma * z) * x).clamp(-LLR_CLIP, LLR_CLIP)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitRole {
    Detector,
    Decoder,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitCurve {
    pub label: String,
    pub role: ExitRole,
    /// Eb/N0 of detector curves.
    pub ebn0_db: Option<f64>,
    /// `(I_A, I_E)` sorted by `I_A`.
    pub points: Vec<(f64, f64)>,
}

fn point_rng(seed: u64, idx: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0xA24B_AED4_963E_E407))
}

/// Decoder transfer curve: a-priori LLRs only, extrinsic `Σ ρ Λ` measured.
///
/// Codewords and LLRs depend only on `seed` and the grid index, so curves of
/// different decoders on the same code see the same inputs.
pub fn exit_decoder_curve(
    label: &str,
    decoder: &ReweightedBp,
    encoder: &SystematicEncoder,
    inner_iters: usize,
    grid: &[f64],
    codewords: usize,
    seed: u64,
) -> Result<ExitCurve, HarnessError> {
    let mut points = Vec::with_capacity(grid.len());
    for (idx, &ia) in grid.iter().enumerate() {
        let sigma = j_inverse(ia);
        let mut rng = point_rng(seed, idx);
        let mut all_llr = Vec::with_capacity(codewords * encoder.n());
        let mut all_bits = Vec::with_capacity(codewords * encoder.n());
        for _ in 0..codewords {
            let info: Vec<u8> = (0..encoder.k()).map(|_| rng.gen_range(0..2u8)).collect();
            let cw = encoder.encode(&info)?;
            let llr = consistent_llrs(&cw, sigma, &mut rng);
            let res = decoder
                .decode(&llr, inner_iters)
                .map_err(|e| HarnessError::Idd(e.into()))?;
            all_llr.extend_from_slice(&res.extrinsic);
            all_bits.extend_from_slice(&cw);
        }
        points.push((ia, mutual_info_estimate(&all_llr, &all_bits)));
    }
    Ok(ExitCurve {
        label: label.to_string(),
        role: ExitRole::Decoder,
        ebn0_db: None,
        points,
    })
}

/// Detector transfer curve at `ebn0_db` over fresh random channels.
pub fn exit_detector_curve(
    system: &IddSystem,
    ebn0_db: f64,
    grid: &[f64],
    channel_uses: usize,
    seed: u64,
) -> Result<ExitCurve, HarnessError> {
    let cfg = &system.config;
    let per_use = cfg.nt * system.map.bits_per_symbol();
    let n0 = system.n0(ebn0_db);
    let mut points = Vec::with_capacity(grid.len());
    for (idx, &ia) in grid.iter().enumerate() {
        let sigma = j_inverse(ia);
        let mut rng = point_rng(seed, idx);
        let mut all_llr = Vec::with_capacity(channel_uses * per_use);
        let mut all_bits = Vec::with_capacity(channel_uses * per_use);
        for _ in 0..channel_uses {
            let bits: Vec<u8> = (0..per_use).map(|_| rng.gen_range(0..2u8)).collect();
            let s = crate::mimo::modulate(&bits, &system.map, cfg.nt)
                .map_err(|e| HarnessError::Idd(e.into()))?
                .remove(0);
            let ch = ChannelRealization::sample(cfg.nr, cfg.nt, n0, &mut rng)
                .map_err(|e| HarnessError::Idd(e.into()))?;
            let r = ch.transmit(&s, &mut rng);
            let priors = consistent_llrs(&bits, sigma, &mut rng);
            let out =
                detect(&ch, &r, &priors, &system.map).map_err(|e| HarnessError::Idd(e.into()))?;
            all_llr.extend_from_slice(&out.llr1);
            all_bits.extend_from_slice(&bits);
        }
        points.push((ia, mutual_info_estimate(&all_llr, &all_bits)));
    }
    Ok(ExitCurve {
        label: "detector".to_string(),
        role: ExitRole::Detector,
        ebn0_db: Some(ebn0_db),
        points,
    })
}

#[derive(Serialize)]
struct ExitRow<'a> {
    curve: &'a str,
    role: ExitRole,
    ebn0_db: Option<f64>,
    i_a: f64,
    i_e: f64,
}

pub fn write_exit_csv<W: std::io::Write>(out: W, curves: &[ExitCurve]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for c in curves {
        for &(i_a, i_e) in &c.points {
            w.serialize(ExitRow {
                curve: &c.label,
                role: c.role,
                ebn0_db: c.ebn0_db,
                i_a,
                i_e,
            })?;
        }
    }
    w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
    Ok(())
}
