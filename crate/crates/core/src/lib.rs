//! Preprocessing for quantified Boolean formulas in prenex CNF.
//!
//! Redundant clauses and universal literals are removed with QBCE, QAT,
//! QRATE+, BLE and QRATU+ until no rule applies. See [`pipeline::run_pipeline`]
//! for the main entry point and [`api::Session`] for an embeddable wrapper.

pub mod api;
pub mod formula;
pub mod oracle;
pub mod pipeline;
pub mod propagation;
pub mod qdimacs;
pub mod redundancy;
pub mod shuffle;

pub use api::{ApiError, Session};
pub use formula::{
    compute_stats, reduction_report, Block, Clause, ClauseId, FormulaStats, Lit, Pcnf, Prefix, Quant, Var,
};
pub use pipeline::{run_pipeline, Config, Counters, PreprocessOutcome, Verdict};
pub use qdimacs::{parse_qdimacs, write_qdimacs, ParseError};
pub use redundancy::CheckMode;
