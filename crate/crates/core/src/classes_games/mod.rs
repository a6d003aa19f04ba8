//! Finite-stage depth certificates, the class of sequences of incompressible
//! string sets, Lebesgue-density extensions and a Banach–Mazur game harness on
//! trees all of whose strings are incompressible.

mod deep;
mod density;
mod frontier;
mod game;

#[cfg(test)]
mod tests;

pub use deep::{depth_certificate_check, kfld_presentation, CertificateRow, DeepClassPresentation, KfldTables};
pub use density::{density_extension_search, DensityExtension, PcApprox};
pub use frontier::Frontier;
pub use game::{
    banach_mazur_round, run_game, seeded_classes, seeded_opponent, verify, Certificate, ClassCheck, ConfinedClass,
    DensitySummary, Failure, GameClass, GameConfig, GameState, MoveKit, MoveRecord, Transcript, Verification,
    WidthCeilingClass,
};

use crate::bitcore::BitString;
use crate::trees::TreeError;

/// Presentations with more codes than this at some level are refused.
pub const MAX_PRESENTATION_CODES: usize = 1 << 18;

#[derive(Debug, thiserror::Error)]
pub enum ClassError {
    #[error("bad parameters: {0}")]
    Params(String),
    #[error("enumeration guard: {0}")]
    Guard(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("illegal move in round {round}: {msg}")]
    IllegalMove { round: usize, msg: String },
    #[error("no density extension above {sigma} within depth {depth}")]
    NoExtension { sigma: BitString, depth: usize },
    #[error("strategy failure in round {round}: {msg}")]
    Strategy { round: usize, msg: String },
}
