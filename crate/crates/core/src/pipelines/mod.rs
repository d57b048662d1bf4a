//! Application models built on the MRF core.

pub mod stereo;
pub mod segmentation;
