//! Model files, PCA projection, SVG rendering, and the command-line front end.

pub mod cli;
pub mod model;
pub mod pca;
pub mod viz;

pub use model::{load_model, parse_model, save_model, Model, ModelError, ModelFormat};
pub use pca::{pca_project, PcaError, PcaFit};
pub use viz::{emit_viz, VizError, VizSpec};
