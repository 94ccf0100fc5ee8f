//! Interactive foreground extraction with neutro-connectedness cut.
//!
//! A polygon ROI seeds background regions outside it. Superpixel regions are linked by
//! truth/indeterminacy measures of connectedness, a lexicographic best-path forest is grown
//! from the background seeds, and the resulting per-region connectedness is combined with
//! GMM color models in an iterated min-cut over pixels.

pub mod config;
pub mod cut;
pub mod error;
pub mod eval;
pub mod forest;
pub mod gmm;
pub mod image;
pub mod imagegraph;
pub mod nc;
pub mod pipeline;

pub use config::Config;
pub use error::{Error, Result};
pub use image::{image_dimensions, load_image, Mask, RgbImage};
