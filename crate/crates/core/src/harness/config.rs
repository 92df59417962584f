use super::HarnessError;
use crate::decoder::ReweightVector;
use crate::designer::{ckar_rho, design_ekar, urw_rho, EkarConfig, RhoFile};
use crate::graph::{count_girth_cycles, peg_construct, ParityCheckMatrix};
use crate::idd::{DecoderKind, FadingMode, IddConfig};
use crate::mimo::Modulation;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Flat key-value run configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub code_n: usize,
    pub code_m: usize,
    pub variable_degree: usize,
    pub code_seed: u64,
    /// Read the code from this alist file instead of constructing it.
    pub alist: Option<PathBuf>,

    pub decoders: Vec<DecoderKind>,
    pub rho_urw: Option<PathBuf>,
    pub rho_ckar: Option<PathBuf>,
    pub rho_ekar: Option<PathBuf>,

    pub snr_db: Vec<f64>,
    pub min_frame_errors: usize,
    pub max_frames: usize,
    /// Frames simulated between stop-rule checks.
    pub batch_frames: usize,
    pub master_seed: u64,
    pub workers: usize,
    pub output: PathBuf,

    pub outer_iters: usize,
    pub inner_iters: usize,
    pub nt: usize,
    pub nr: usize,
    pub modulation: Modulation,
    pub fading: FadingMode,
    pub interleaver_seed: u64,
    pub feedback: bool,

    pub exit_ebn0_db: f64,
    pub exit_points: usize,
    /// Codewords per decoder EXIT point.
    pub exit_codewords: usize,
    /// Channel uses per detector EXIT point.
    pub exit_channel_uses: usize,

    pub ekar_d_max: usize,
    pub ekar_subgraphs: usize,
    pub ekar_recursions: usize,
    pub ekar_tol: f64,
    pub ekar_grid: usize,
    pub ekar_rho_floor: f64,
    pub ekar_ensemble: usize,
    pub ekar_start_vertices: usize,
    pub ekar_design_ebn0_db: f64,
    pub ekar_bp_iters: usize,
    pub ekar_bp_tol: f64,
    pub ekar_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let e = EkarConfig::default();
        let idd = IddConfig::default();
        SimConfig {
            code_n: 1000,
            code_m: 500,
            variable_degree: 3,
            code_seed: 0,
            alist: None,
            decoders: DecoderKind::ALL.to_vec(),
            rho_urw: None,
            rho_ckar: None,
            rho_ekar: None,
            snr_db: vec![1.0, 2.0],
            min_frame_errors: 200,
            max_frames: 100_000,
            batch_frames: 64,
            master_seed: 0,
            workers: 1,
            output: PathBuf::from("."),
            outer_iters: idd.outer_iters,
            inner_iters: idd.inner_iters,
            nt: idd.nt,
            nr: idd.nr,
            modulation: idd.modulation,
            fading: idd.fading,
            interleaver_seed: idd.interleaver_seed,
            feedback: idd.feedback,
            exit_ebn0_db: 4.0,
            exit_points: 11,
            exit_codewords: 20,
            exit_channel_uses: 5000,
            ekar_d_max: e.d_max,
            ekar_subgraphs: e.subgraphs,
            ekar_recursions: e.max_recursions,
            ekar_tol: e.tol,
            ekar_grid: e.grid,
            ekar_rho_floor: e.rho_floor,
            ekar_ensemble: e.ensemble_size,
            ekar_start_vertices: e.start_vertices,
            ekar_design_ebn0_db: e.design_ebn0_db,
            ekar_bp_iters: e.bp_max_iters,
            ekar_bp_tol: e.bp_tol,
            ekar_seed: e.seed,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return fail("snr_db must be a non-empty list of finite values");
        }
        if self.min_frame_errors < 1 {
            return fail("min_frame_errors must be at least 1");
        }
        if self.max_frames < 1 || self.batch_frames < 1 {
            return fail("max_frames and batch_frames must be at least 1");
        }
        if self.workers < 1 {
            return fail("workers must be at least 1");
        }
        if self.decoders.is_empty() {
            return fail("decoders must not be empty");
        }
        if self.outer_iters < 1 || self.inner_iters < 1 {
            return fail("outer_iters and inner_iters must be at least 1");
        }
        if self.nt < 1 || self.nr < self.nt {
            return fail("need 1 <= nt <= nr");
        }
        if self.alist.is_none()
            && (self.code_n == 0 || self.code_m == 0 || self.code_m >= self.code_n)
        {
            return fail("need 0 < code_m < code_n");
        }
        if self.exit_points < 2 || self.exit_codewords < 1 || self.exit_channel_uses < 1 {
            return fail("exit_points must be at least 2 and the EXIT sample sizes at least 1");
        }
        self.ekar_config().validate()?;
        Ok(())
    }

    pub fn idd_config(&self) -> IddConfig {
        IddConfig {
            outer_iters: self.outer_iters,
            inner_iters: self.inner_iters,
            interleaver_seed: self.interleaver_seed,
            fading: self.fading,
            nt: self.nt,
            nr: self.nr,
            modulation: self.modulation,
            feedback: self.feedback,
        }
    }

    pub fn ekar_config(&self) -> EkarConfig {
        EkarConfig {
            d_max: self.ekar_d_max,
            subgraphs: self.ekar_subgraphs,
            max_recursions: self.ekar_recursions,
            tol: self.ekar_tol,
            grid: self.ekar_grid,
            rho_floor: self.ekar_rho_floor,
            ensemble_size: self.ekar_ensemble,
            start_vertices: self.ekar_start_vertices,
            design_ebn0_db: self.ekar_design_ebn0_db,
            bp_max_iters: self.ekar_bp_iters,
            bp_tol: self.ekar_bp_tol,
            seed: self.ekar_seed,
        }
    }

    /// Hex sha256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn rho_path(&self, kind: DecoderKind) -> Option<&Path> {
        match kind {
            DecoderKind::Standard => None,
            DecoderKind::Urw => self.rho_urw.as_deref(),
            DecoderKind::Ckar => self.rho_ckar.as_deref(),
            DecoderKind::Ekar => self.rho_ekar.as_deref(),
        }
    }
}

/// The code named by the configuration.
pub fn build_code(cfg: &SimConfig) -> Result<ParityCheckMatrix, HarnessError> {
    if let Some(path) = &cfg.alist {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        return Ok(ParityCheckMatrix::from_alist(&text)?);
    }
    let degrees = vec![cfg.variable_degree; cfg.code_n];
    Ok(peg_construct(
        cfg.code_n,
        cfg.code_m,
        &degrees,
        cfg.code_seed,
    )?)
}

/// Where a decoder's reweighting vector came from.
#[derive(Debug, Clone, PartialEq)]
pub enum RhoSource {
    Builtin,
    File { path: PathBuf, sha256: String },
    Designed { config_digest: String },
}

/// The reweighting vector for `kind`: loaded from its file if configured,
/// otherwise designed on the spot.
pub fn resolve_rho(
    kind: DecoderKind,
    h: &ParityCheckMatrix,
    cfg: &SimConfig,
) -> Result<(ReweightVector, RhoSource), HarnessError> {
    if let Some(path) = cfg.rho_path(kind) {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let file = RhoFile::parse(&text)?;
        file.check_code(h)?;
        let source = RhoSource::File {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        };
        return Ok((file.rho, source));
    }
    let rho = match kind {
        DecoderKind::Standard => return Ok((ReweightVector::ones(h.m()), RhoSource::Builtin)),
        DecoderKind::Urw => urw_rho(h)?,
        DecoderKind::Ckar => ckar_rho(&count_girth_cycles(h), h)?,
        DecoderKind::Ekar => {
            let ec = cfg.ekar_config();
            let design = design_ekar(h, &ec)?;
            return Ok((
                design.rho,
                RhoSource::Designed {
                    config_digest: ec.digest(),
                },
            ));
        }
    };
    Ok((rho, RhoSource::Builtin))
}
