//! Iterative detection and decoding for LDPC-coded MIMO links with
//! knowledge-aided reweighted belief propagation.
//!
//! * [`graph`]: Tanner graphs, PEG construction, girth and cycle census, encoding.
//! * [`decoder`]: the reweighted belief-propagation engine.
//! * [`designer`]: offline reweighting designers (URW, CKAR, EKAR).
//! * [`mimo`]: Rayleigh MIMO channel and the soft-input soft-output PIC-MMSE detector.
//! * [`idd`]: the outer detection/decoding loop for one frame.
//! * [`harness`]: BER sweeps, EXIT charts, configuration and result files.

pub mod decoder;
pub mod designer;
pub mod graph;
pub mod harness;
pub mod idd;
pub mod mimo;
