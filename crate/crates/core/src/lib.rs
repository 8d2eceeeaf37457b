//! Scale-invariant statistics of image ensembles.
//!
//! The crate measures the power-law Fourier covariance of image sets, draws
//! noise with a matching power law ("cloud noise"), runs the forward
//! diffusion noising process with white or cloud noise, and compares
//! distributions with a power-law weighted Mahalanobis distance.

pub mod dataset;
pub mod diffusion;
pub mod distance;
pub mod error;
pub mod io;
pub mod noise;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use spectral::{fft2_centered, ifft2_centered, irfft2, rfft2, RealSpectralGrid};
pub use tensor::{Grid, SpectralGrid};
