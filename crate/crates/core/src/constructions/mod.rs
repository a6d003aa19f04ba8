//! Explicit randomized and deterministic constructions: fat incompressible
//! sets, the perfect-tree sampler, shattered trees and positive trees.

mod fat;
mod positive;
mod sampler;
mod shatter;

use crate::bitcore::BitcoreError;
use crate::functional::FunctionalError;
use crate::trees::TreeError;

pub use fat::{fat_p, fat_set, fat_set_step, fat_solovay_component, fat_use_bound, FatLevel, FatSetState, FatnessRow, SolovayComponent};
pub use positive::{d_set_enumerate, positive_tree, positive_witness, wgt, PositiveTree, WeightedPairSet};
pub use sampler::{
    sample_perfect_tree_step, tree_condition_check, ConditionParams, SamplerLevel, Schedule, TreeSamplerState,
};
pub use shatter::{deficiency_transfer_check, shattered_functional, shattered_level, shattered_tree, ShatterSpec, Transfer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConstructionError {
    #[error("guard: {0}")]
    Guard(String),
    #[error(transparent)]
    Oracle(#[from] BitcoreError),
    #[error("order: {0}")]
    BadOrder(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}
