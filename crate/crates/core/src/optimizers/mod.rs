//! Closed-form BD-RIS solvers, D-RIS baselines and the channel-gain bounds.

mod alignment;
mod bdris;
mod bounds;
mod dris;

use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::network::LoadMatrix;

pub use alignment::{
    alignment_phase, build_alignment, build_alignment_with_phase, min_norm_lstsq, numerical_rank, solve_symmetric,
    solve_symmetric_alignment, solve_tridiagonal, solve_tridiagonal_alignment, stack, symmetric_system,
    tridiagonal_system, AlignmentSolution, AlignmentSystem, RANK_TOLERANCE, RESIDUAL_TOLERANCE,
};
pub use bdris::{
    assumed_coupling, evaluate_under, evaluate_under_with, optimize, optimize_fully_connected, optimize_tree_connected,
    optimize_tree_connected_with,
};
pub use bounds::{upper_bound, upper_bound_fc, upper_bound_tc};
pub use dris::{optimize_dris_aware, optimize_dris_unaware, reactance_from_phase, AscentOptions, AscentTrace, MAX_REACTANCE_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    #[serde(alias = "fc")]
    FullyConnected,
    #[serde(alias = "tc")]
    TreeTridiagonal,
    #[serde(alias = "dris")]
    Diagonal,
}

impl Architecture {
    pub fn label(self) -> &'static str {
        match self {
            Architecture::FullyConnected => "fc",
            Architecture::TreeTridiagonal => "tc",
            Architecture::Diagonal => "dris",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fc" | "fully_connected" | "fully-connected" => Some(Architecture::FullyConnected),
            "tc" | "tree" | "tree_tridiagonal" | "tree-connected" => Some(Architecture::TreeTridiagonal),
            "dris" | "d-ris" | "diagonal" => Some(Architecture::Diagonal),
            _ => None,
        }
    }
}

/// Optimised load together with the gain it achieves under the coupling it
/// was designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfiguration {
    pub architecture: Architecture,
    pub load: LoadMatrix,
    /// `|h|²` under the design coupling.
    pub achieved_gain: f64,
    /// BD-RIS upper bound under the design coupling.
    pub bound_gain: f64,
    /// Relative residual of the alignment solve (0 for the D-RIS baselines).
    pub residual: f64,
    /// `‖Θ̄ ŝ_IT − e^{jφ} ŝ_RI^H‖` for the BD-RIS solvers.
    pub alignment_error: Option<f64>,
    /// Set when a channel vector is zero and every load is optimal.
    pub degenerate: bool,
    /// Load reflection matrix when the load was specified through it; used
    /// for pole-free evaluation of open-circuited elements.
    pub theta: Option<CMatrix>,
    pub trace: Option<AscentTrace>,
}
