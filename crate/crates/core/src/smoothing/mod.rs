//! Kernel weights, bandwidths and local-linear smoothers with the fixed
//! effects concentrated out. Generic over the regressor block, so the
//! instrument stage and both second-stage fits share it.

mod kernel;
mod local;
mod smoother;

pub use kernel::{kernel_eval, kernel_weight_vector, period_weights, rot_bandwidth, Bandwidth, KernelSpec};
pub use local::{
    local_design, local_linear_fit, solve_local_system, solve_with_weights, within_projection_apply,
    within_projection_transpose_apply, LocalSolution, RCOND_FLOOR,
};
pub(crate) use local::equilibrated_inverse;
pub use smoother::{build_smoother, LocalSmoother};
