use super::{HarnessError, SimConfig};
use crate::decoder::ReweightedBp;
use crate::idd::{DecoderKind, FrameResult, IddSystem};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// One CSV row: counts for one (SNR, decoder, outer iteration).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub decoder: String,
    /// 1-based outer iteration.
    pub outer_iter: usize,
    pub frames: usize,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
}

/// A named decoder taking part in a sweep.
pub struct DecoderSpec {
    pub kind: DecoderKind,
    pub decoder: ReweightedBp,
}

/// Seed of frame `frame` at SNR index `snr`; the same for every decoder and
/// independent of the worker count.
pub fn frame_seed(master: u64, snr: usize, frame: u64) -> u64 {
    master.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((snr as u64) << 40) ^ frame
}

/// Runs the frames `first..first + count` on the current rayon pool.
pub fn run_batch(
    system: &IddSystem,
    decoder: &ReweightedBp,
    ebn0_db: f64,
    master: u64,
    snr_idx: usize,
    first: u64,
    count: u64,
) -> Result<Vec<FrameResult>, HarnessError> {
    (first..first + count)
        .into_par_iter()
        .map(|f| Ok(system.run_frame(decoder, ebn0_db, frame_seed(master, snr_idx, f))?))
        .collect()
}

/// BER/FER per SNR point, decoder and outer iteration.
///
/// Each (SNR, decoder) pair runs batches of `batch_frames` frames until the
/// last outer iteration has collected `min_frame_errors` frame errors or
/// `max_frames` frames were simulated. The rule is only checked between
/// batches, so the output does not depend on the worker count.
pub fn ber_sweep(
    cfg: &SimConfig,
    system: &IddSystem,
    decoders: &[DecoderSpec],
) -> Result<Vec<BerRecord>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let outer = system.config.outer_iters;
    let k = system.encoder.k() as f64;
    let mut records = Vec::new();
    for (snr_idx, &snr) in cfg.snr_db.iter().enumerate() {
        for spec in decoders {
            let mut bit_errors = vec![0u64; outer];
            let mut frame_errors = vec![0u64; outer];
            let mut frames = 0usize;
            while frames < cfg.max_frames
                && (frame_errors[outer - 1] as usize) < cfg.min_frame_errors
            {
                let count = cfg.batch_frames.min(cfg.max_frames - frames);
                let batch = pool.install(|| {
                    run_batch(
                        system,
                        &spec.decoder,
                        snr,
                        cfg.master_seed,
                        snr_idx,
                        frames as u64,
                        count as u64,
                    )
                })?;
                for r in &batch {
                    for t in 0..outer {
                        bit_errors[t] += r.bit_errors[t] as u64;
                        frame_errors[t] += r.frame_errors[t] as u64;
                    }
                }
                frames += count;
            }
            log::info!(
                "{snr} dB {}: {frames} frames, {} final frame errors",
                spec.kind,
                frame_errors[outer - 1]
            );
            for t in 0..outer {
                records.push(BerRecord {
                    snr_db: snr,
                    decoder: spec.kind.name().to_string(),
                    outer_iter: t + 1,
                    frames,
                    bit_errors: bit_errors[t],
                    frame_errors: frame_errors[t],
                    ber: bit_errors[t] as f64 / (frames as f64 * k),
                    fer: frame_errors[t] as f64 / frames as f64,
                });
            }
        }
    }
    Ok(records)
}

pub fn write_ber_csv<W: std::io::Write>(out: W, records: &[BerRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io("<csv>", e))?;
    Ok(())
}

/// JSON summary written next to sweep results.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub code_seed: u64,
    pub code_hash: String,
    /// Decoder name and the sha256 (or origin) of its reweighting vector.
    pub rho: Vec<(String, String)>,
    pub workers: usize,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
    }
}
