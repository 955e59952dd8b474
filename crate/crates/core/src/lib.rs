//! Projective image warping by inverse mapping.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: homographies, the per-axis scanline decomposition of the
//!   backward map and its analytic Jacobian.
//! - [`kernels`]: nearest, bilinear, bicubic, cubic B-spline and cubic Hermite
//!   spline kernels, their lookup-table approximations and separable 2-D
//!   interpolation.
//! - [`image`]: the 8-bit grayscale raster plus PGM/PNG I/O.
//! - [`pyramids`]: mip-map and rip-map pre-filtered structures.
//! - [`samplers`]: point sampling, supersampling, mip-map and rip-map
//!   pre-filtering and FAST jittered anisotropic sampling.
//! - [`engine`]: the full warp, chained warps and a dense reference resampler.
//! - [`bench`]: PSNR, the composed-triple benchmark and report emission.
//!
//! All math is generic over the scalar type ([`Scalar`], implemented for
//! `f32` and `f64`); the `*64` / `*32` aliases below pin the common choices.

pub mod bench;
pub mod engine;
mod error;
pub mod geometry;
pub mod image;
pub mod kernels;
pub mod pyramids;
pub mod samplers;
mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use engine::{warp, warp_chain, TapStats, WarpRequest};
pub use geometry::{Homography, JacobianEstimate, ScanlineDecomposition};
pub use image::ImageBuffer;
pub use kernels::{Kernel, KernelLut};
pub use pyramids::{MipPyramid, RipMap};
pub use samplers::{FootprintEstimate, SamplerConfig, SamplingMethod};

pub type Homography64 = Homography<f64>;
pub type Homography32 = Homography<f32>;
pub type ScanlineDecomposition64 = ScanlineDecomposition<f64>;
pub type ScanlineDecomposition32 = ScanlineDecomposition<f32>;
pub type JacobianEstimate64 = JacobianEstimate<f64>;
pub type Kernel64 = Kernel<f64>;
pub type Kernel32 = Kernel<f32>;
pub type KernelLut64 = KernelLut<f64>;
pub type KernelLut32 = KernelLut<f32>;
pub type SamplerConfig64<K = Kernel64> = SamplerConfig<K>;
pub type FootprintEstimate64 = FootprintEstimate<f64>;
