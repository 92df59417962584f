//! Offline construction of reweighting vectors.
//!
//! * [`urw_rho`]: one constant factor `2 / n̄_D` for every check.
//! * [`ckar_rho`]: full weight for checks on fewer than the average number of
//!   girth-length cycles, `2 / n̄_D` for the rest.
//! * [`design_ekar`]: per-subgraph conditional-gradient optimization over
//!   expanded subgraphs, merged into one vector.

mod ekar;
mod expansion;
mod rhofile;

pub use ekar::{
    check_mutual_information, design_ekar, line_search_alpha, linear_subproblem, merge_rho,
    mutual_information, optimize_subgraph_rho, start_vertices, subgraph_beliefs, BoundRecord,
    EkarConfig, EkarDesign, Evaluation, FapOptimState, LineSearch, MemberInference, StopReason,
    SubgraphInference, SubgraphOptimum, SubgraphProblem, MI_MAX_DEGREE,
};
pub use expansion::{expand_from, expand_subgraphs, Subgraph, SubgraphSet};
pub use rhofile::RhoFile;

use crate::decoder::{DecoderError, ReweightVector};
use crate::graph::{CycleCensus, GraphError, ParityCheckMatrix};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error("census covers {got} checks, graph has {expected}")]
    CensusMismatch { expected: usize, got: usize },
    #[error("check degree {0} exceeds the enumeration limit")]
    DegreeTooLarge(usize),
    #[error("invalid designer configuration: {0}")]
    Config(String),
    #[error("malformed rho file: {0}")]
    RhoFile(String),
    #[error("rho file was designed for code {found}, current code is {expected}")]
    CodeMismatch { expected: String, found: String },
}

/// The variable-side constant `ρ_v = 2 / n̄_D`, clamped to 1.
pub fn connectivity_rho(h: &ParityCheckMatrix) -> Result<f64, DesignError> {
    let nd = h.degree_profile().average_connectivity()?;
    let rho = 2.0 / nd;
    if rho > 1.0 {
        log::warn!("average connectivity {nd} is below 2; clamping rho to 1");
        return Ok(1.0);
    }
    Ok(rho)
}

/// Uniform reweighting: `ρ_i = 2 / n̄_D` for every check.
pub fn urw_rho(h: &ParityCheckMatrix) -> Result<ReweightVector, DesignError> {
    let rho = connectivity_rho(h)?;
    Ok(ReweightVector::uniform(h.m(), rho)?)
}

/// The cycle-knowledge rule on raw counts: 1 below the mean, `rho_v` otherwise.
pub fn ckar_rule(counts: &[u64], mu_g: f64, rho_v: f64) -> Vec<f64> {
    counts
        .iter()
        .map(|&g| if (g as f64) < mu_g { 1.0 } else { rho_v })
        .collect()
}

/// Cycle-knowledge-aided reweighting from a census of `h`.
pub fn ckar_rho(
    census: &CycleCensus,
    h: &ParityCheckMatrix,
) -> Result<ReweightVector, DesignError> {
    if census.per_check_counts.len() != h.m() {
        return Err(DesignError::CensusMismatch {
            expected: h.m(),
            got: census.per_check_counts.len(),
        });
    }
    if census.girth.is_none() {
        return Ok(ReweightVector::ones(h.m()));
    }
    let rho_v = connectivity_rho(h)?;
    Ok(ReweightVector::new(ckar_rule(
        &census.per_check_counts,
        census.mu_g,
        rho_v,
    ))?)
}
