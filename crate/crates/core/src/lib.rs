//! Entropy-guided vector quantization toolkit.
//!
//! * [`vq`]: flat vector quantization (classification, distortion, compression
//!   ratio, entropy-penalized objective, LBG training).
//! * [`see`]: the submerging entropy estimate, a recursive residual
//!   quantization entropy with exhaustive and greedy minimizers.
//! * [`codec`]: PGM I/O, block tiling and the bit-exact SEEQ container.
//! * [`spectral`]: unitary 2-D DFT, fixed-point compression operators and
//!   per-block spectral entropy profiles.
//! * [`object`]: point-set objects, permutation matching and object entropy.

pub mod codec;
pub mod error;
pub mod object;
pub mod see;
pub mod spectral;
pub mod vq;

pub use error::{Error, Result};
