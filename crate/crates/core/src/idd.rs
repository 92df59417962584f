//! Iterative detection and decoding of one frame.

use crate::decoder::{extrinsic_output, DecodeResult, DecoderError, ReweightVector, ReweightedBp};
use crate::graph::{GraphError, ParityCheckMatrix, SystematicEncoder};
use crate::mimo::{
    detect, modulate, n0_from_ebn0, CVector, ChannelRealization, MimoError, Modulation,
    ModulationMap,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IddError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Mimo(#[from] MimoError),
    #[error("invalid IDD configuration: {0}")]
    Config(String),
}

/// Seeded uniform permutation; `forward(x)[i] = x[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
    inv: Vec<usize>,
}

impl Interleaver {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut inv = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        Interleaver { perm, inv }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn forward<T: Copy>(&self, x: &[T]) -> Result<Vec<T>, IddError> {
        self.apply(&self.perm, x)
    }

    pub fn inverse<T: Copy>(&self, x: &[T]) -> Result<Vec<T>, IddError> {
        self.apply(&self.inv, x)
    }

    fn apply<T: Copy>(&self, map: &[usize], x: &[T]) -> Result<Vec<T>, IddError> {
        if x.len() != map.len() {
            return Err(IddError::Config(format!(
                "interleaver length {} applied to {} values",
                map.len(),
                x.len()
            )));
        }
        Ok(map.iter().map(|&i| x[i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Standard,
    Urw,
    Ckar,
    Ekar,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [
        DecoderKind::Standard,
        DecoderKind::Urw,
        DecoderKind::Ckar,
        DecoderKind::Ekar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Standard => "standard",
            DecoderKind::Urw => "urw",
            DecoderKind::Ckar => "ckar",
            DecoderKind::Ekar => "ekar",
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        DecoderKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown decoder {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadingMode {
    /// A new channel matrix for every channel use.
    Fast,
    /// One channel matrix per frame.
    QuasiStatic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IddConfig {
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub interleaver_seed: u64,
    pub fading: FadingMode,
    pub nt: usize,
    pub nr: usize,
    pub modulation: Modulation,
    /// Feed decoder extrinsics back to the detector.
    pub feedback: bool,
}

impl Default for IddConfig {
    fn default() -> Self {
        IddConfig {
            outer_iters: 3,
            inner_iters: 30,
            interleaver_seed: 0,
            fading: FadingMode::Fast,
            nt: 4,
            nr: 4,
            modulation: Modulation::Qpsk,
            feedback: true,
        }
    }
}

/// Soft-in soft-out channel decoder used inside the outer loop.
pub trait InnerDecoder: Sync {
    fn decode_llr(&self, llr_in: &[f64], max_iters: usize) -> Result<DecodeResult, DecoderError>;
}

impl InnerDecoder for ReweightedBp {
    fn decode_llr(&self, llr_in: &[f64], max_iters: usize) -> Result<DecodeResult, DecoderError> {
        self.decode(llr_in, max_iters)
    }
}

/// Per-frame error accounting, indexed by outer iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameResult {
    pub bit_errors: Vec<usize>,
    pub frame_errors: Vec<bool>,
    pub decoder_converged: Vec<bool>,
    pub info_bits: usize,
}

/// Everything random about one frame, drawn before any processing.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameInput {
    pub info: Vec<u8>,
    pub codeword: Vec<u8>,
    pub channels: Vec<ChannelRealization>,
    pub received: Vec<CVector>,
}

/// Code, encoder, interleaver and detector setup shared by all frames.
#[derive(Debug, Clone)]
pub struct IddSystem {
    pub h: ParityCheckMatrix,
    pub encoder: SystematicEncoder,
    pub interleaver: Interleaver,
    pub map: ModulationMap,
    pub config: IddConfig,
}

impl IddSystem {
    pub fn new(h: ParityCheckMatrix, config: IddConfig) -> Result<Self, IddError> {
        if config.outer_iters < 1 || config.inner_iters < 1 {
            return Err(IddError::Config(
                "outer_iters and inner_iters must be at least 1".into(),
            ));
        }
        if config.nt < 1 || config.nr < config.nt {
            return Err(MimoError::TooFewReceivers {
                nr: config.nr,
                nt: config.nt,
            }
            .into());
        }
        let encoder = SystematicEncoder::new(&h);
        if encoder.k() == 0 {
            return Err(IddError::Config("code has no information bits".into()));
        }
        let interleaver = Interleaver::new(h.n(), config.interleaver_seed);
        Ok(IddSystem {
            map: ModulationMap::new(config.modulation),
            h,
            encoder,
            interleaver,
            config,
        })
    }

    pub fn rate(&self) -> f64 {
        self.encoder.k() as f64 / self.h.n() as f64
    }

    /// Coded bits per frame after padding to whole channel uses.
    pub fn padded_len(&self) -> usize {
        let chunk = self.map.bits_per_symbol() * self.config.nt;
        self.h.n().div_ceil(chunk) * chunk
    }

    pub fn n0(&self, ebn0_db: f64) -> f64 {
        n0_from_ebn0(
            ebn0_db,
            self.rate(),
            self.map.bits_per_symbol(),
            self.map.es(),
        )
    }

    pub fn decoder(&self, rho: ReweightVector) -> Result<ReweightedBp, IddError> {
        Ok(ReweightedBp::new(&self.h, rho)?)
    }

    /// Draws info bits, channels and noise for one frame from `seed`.
    pub fn generate(&self, ebn0_db: f64, seed: u64) -> Result<FrameInput, IddError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n0 = self.n0(ebn0_db);
        let info: Vec<u8> = (0..self.encoder.k())
            .map(|_| rng.gen_range(0..2u8))
            .collect();
        let codeword = self.encoder.encode(&info)?;
        let mut tx = self.interleaver.forward(&codeword)?;
        tx.resize(self.padded_len(), 0);
        let symbols = modulate(&tx, &self.map, self.config.nt)?;
        let mut channels: Vec<ChannelRealization> = Vec::with_capacity(symbols.len());
        let mut received = Vec::with_capacity(symbols.len());
        for (u, s) in symbols.iter().enumerate() {
            let ch = match self.config.fading {
                FadingMode::QuasiStatic if u > 0 => channels[0].clone(),
                _ => ChannelRealization::sample(self.config.nr, self.config.nt, n0, &mut rng)?,
            };
            received.push(ch.transmit(s, &mut rng));
            channels.push(ch);
        }
        Ok(FrameInput {
            info,
            codeword,
            channels,
            received,
        })
    }

    /// Runs the outer detection/decoding loop on a drawn frame.
    pub fn process(
        &self,
        frame: &FrameInput,
        decoder: &dyn InnerDecoder,
    ) -> Result<FrameResult, IddError> {
        let n = self.h.n();
        let chunk = self.map.bits_per_symbol() * self.config.nt;
        let outer = self.config.outer_iters;
        let mut priors = vec![0.0; self.padded_len()];
        let mut result = FrameResult {
            bit_errors: Vec::with_capacity(outer),
            frame_errors: Vec::with_capacity(outer),
            decoder_converged: Vec::with_capacity(outer),
            info_bits: self.encoder.k(),
        };
        for _ in 0..outer {
            let mut llr1 = Vec::with_capacity(priors.len());
            for ((ch, r), p) in frame
                .channels
                .iter()
                .zip(&frame.received)
                .zip(priors.chunks(chunk))
            {
                llr1.extend(detect(ch, r, p, &self.map)?.llr1);
            }
            llr1.truncate(n);
            let llr_in = self.interleaver.inverse(&llr1)?;
            let dec = decoder.decode_llr(&llr_in, self.config.inner_iters)?;
            let decided = self.encoder.extract_info(&dec.hard_bits);
            let errors = decided
                .iter()
                .zip(&frame.info)
                .filter(|(a, b)| a != b)
                .count();
            result.bit_errors.push(errors);
            result.frame_errors.push(errors > 0);
            result.decoder_converged.push(dec.converged);
            if self.config.feedback {
                let llr2 = extrinsic_output(&dec, &llr_in);
                let fed = self.interleaver.forward(&llr2)?;
                priors[..n].copy_from_slice(&fed);
            }
        }
        Ok(result)
    }

    pub fn run_frame(
        &self,
        decoder: &dyn InnerDecoder,
        ebn0_db: f64,
        seed: u64,
    ) -> Result<FrameResult, IddError> {
        let frame = self.generate(ebn0_db, seed)?;
        self.process(&frame, decoder)
    }
}
