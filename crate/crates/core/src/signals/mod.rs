//! Time-series containers, Hankel matrices, persistent-excitation checks and
//! the fundamental-lemma residual.

mod buffer;
mod excitation;
mod hankel;
mod trajectory;

pub use buffer::{BufferMode, DataBuffer};
pub use excitation::{
    behavioral_residual, numerical_rank, persistent_excitation_order,
    persistent_excitation_order_with_tol, projection_residual, DEFAULT_RANK_TOL,
};
pub use hankel::{build_hankel, HankelView};
pub use trajectory::Trajectory;
