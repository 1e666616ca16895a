//! Stacked spatial panels: weight matrices, the fixed-effects dummy design,
//! the design-matrix partition and CSV ingestion.

mod data;
mod fixed_effects;
pub mod io;
mod weights;

pub use data::{time_grid, ModelSpec, PanelData};
pub use fixed_effects::{complete_effects, FixedEffectsDesign};
pub use weights::{spatial_lag, Contiguity, SpatialOperator, SpatialWeights};
