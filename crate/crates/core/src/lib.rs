//! Training-free shadow removal for remote-sensing imagery.
//!
//! Given an RGB image and a binary shadow mask, the pipeline
//!
//! 1. segments shadow and lit areas separately with SLIC ([`superpix`]),
//! 2. scores nearby lit superpixels by Lab-distribution EMD, LBP texture
//!    overlap and a*-mean difference ([`features`]),
//! 3. relights every shadow superpixel with a similarity-weighted
//!    illumination ratio, falling back to an image-wide search when no nearby
//!    region matches ([`relight`]),
//! 4. blends the result across the penumbra band ([`penumbra`]).
//!
//! [`metrics`] holds detection scores (accuracy, F1, BER, IoU) and the
//! region-pair removal scores (SRI, CD); [`detect`] is a simple threshold
//! detector for running without an external mask.

pub mod detect;
pub mod error;
pub mod features;
pub mod imagecore;
pub mod metrics;
pub mod penumbra;
pub mod relight;
pub mod superpix;

pub use error::{Error, Result};
pub use imagecore::{ImageBuffer, ShadowMask};
pub use relight::{remove_shadows, RelightConfig, RelightReport};
