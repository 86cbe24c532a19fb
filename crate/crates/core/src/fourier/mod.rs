//! Rotational Fourier analysis: representation matrices `D^l(u)`,
//! per-degree transform blocks of error distributions and their inverses.

mod blocks;
mod model;
mod transform;

pub use blocks::{operator_norm, transform_blocks, TransformBlocks, CONDITION_LIMIT};
pub use model::{ErrorKind, ErrorModel, Scenario, SmoothnessClass};
pub use transform::{big_d_matrices, big_d_matrix, convolve_check, forward_transform};
