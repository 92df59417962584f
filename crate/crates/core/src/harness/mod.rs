//! Batch experiments: configuration, BER sweeps, EXIT charts and result files.

mod config;
mod exit;
mod sweep;

pub use config::{build_code, resolve_rho, RhoSource, SimConfig};
pub use exit::{
    consistent_llrs, exit_decoder_curve, exit_detector_curve, j_function, j_inverse,
    mutual_info_estimate, write_exit_csv, ExitCurve, ExitRole,
};
pub use sweep::{
    ber_sweep, frame_seed, run_batch, write_ber_csv, BerRecord, DecoderSpec, RunManifest,
};

use crate::designer::DesignError;
use crate::graph::GraphError;
use crate::idd::IddError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Idd(#[from] IddError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Whether the error stems from user configuration.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_)
                | HarnessError::Design(DesignError::Config(_))
                | HarnessError::Design(DesignError::RhoFile(_))
                | HarnessError::Design(DesignError::CodeMismatch { .. })
                | HarnessError::Idd(IddError::Config(_))
        )
    }
}
