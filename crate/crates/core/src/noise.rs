//! White and power-law ("scale-invariant") Gaussian noise.
//!
//! Power-law noise is made by packing white noise into its real spectrum,
//! multiplying index `p` by `|k_p|^(-delta)` (the zero mode is dropped), and
//! transforming back. The result is periodic on the torus. Cloud noise is the
//! aperiodic variant: the field is drawn at `oversample` times the requested
//! side and the central block is cut out.
//!
//! Output amplitude is fixed by a single constant per (side, delta,
//! oversample) that makes the expected per-pixel variance of the ensemble
//! equal `target_std^2`. For a periodic field of side `M` that variance is
//! `sum_{p != 0} |k_p|^(-2 delta) / M^2`, and the torus is homogeneous so any
//! crop has the same per-pixel variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, NoiseRng};
use crate::spectral::{irfft2, rfft2, RealSpectralGrid};
use crate::stats::pooled_moments;
use crate::tensor::{kmag_map, Grid};

pub const DEFAULT_OVERSAMPLE: usize = 3;

/// Shape of a power-law noise distribution, independent of grid size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudParams {
    pub delta: f64,
    pub oversample: usize,
    pub target_std: f64,
}

impl CloudParams {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            oversample: DEFAULT_OVERSAMPLE,
            target_std: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite and >= 0, got {}",
                self.delta
            )));
        }
        if self.oversample < 1 {
            return Err(Error::InvalidParameter("oversample must be >= 1".into()));
        }
        if !(self.target_std > 0.0 && self.target_std.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "target_std must be positive, got {}",
                self.target_std
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta: f64,
    pub side: usize,
    pub oversample: usize,
    pub target_std: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(side: usize, delta: f64, seed: u64) -> Self {
        Self {
            delta,
            side,
            oversample: DEFAULT_OVERSAMPLE,
            target_std: 1.0,
            seed,
        }
    }

    pub fn params(&self) -> CloudParams {
        CloudParams {
            delta: self.delta,
            oversample: self.oversample,
            target_std: self.target_std,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.side == 0 {
            return Err(Error::EmptyGrid);
        }
        self.params().validate()
    }

    fn validate_aperiodic(&self) -> Result<()> {
        self.validate()?;
        if self.oversample < DEFAULT_OVERSAMPLE {
            return Err(Error::InvalidParameter(format!(
                "aperiodic noise needs oversample >= {DEFAULT_OVERSAMPLE}, got {}",
                self.oversample
            )));
        }
        Ok(())
    }
}

/// I.i.d. standard normal grid drawn from `rng`.
pub fn white_noise_from(rng: &mut NoiseRng, side: usize) -> Grid {
    Grid::from_vec(side, rng::standard_normals(rng, side * side)).expect("normals are finite")
}

pub fn white_noise(side: usize, seed: u64) -> Grid {
    white_noise_from(&mut rng::stream(seed, 0), side)
}

/// `|k|^(-delta)` per shifted index, zero at the zero mode.
pub fn power_law_filter(side: usize, delta: f64) -> Vec<f64> {
    kmag_map(side)
        .into_iter()
        .map(|k| if k == 0.0 { 0.0 } else { k.powf(-delta) })
        .collect()
}

/// Expected per-pixel variance of the unscaled periodic field of side `side`.
pub fn periodic_field_variance(side: usize, delta: f64) -> f64 {
    let sum: f64 = power_law_filter(side, delta).iter().map(|f| f * f).sum();
    sum / (side * side) as f64
}

/// Unscaled periodic power-law field from one white-noise draw.
fn periodic_field(rng: &mut NoiseRng, side: usize, filter: &[f64]) -> Grid {
    let packed = rfft2(&white_noise_from(rng, side));
    irfft2(&packed.filtered(filter).expect("filter matches side"))
}

/// Reusable generator for one (side, params) combination.
#[derive(Clone, Debug)]
pub struct CloudSampler {
    side: usize,
    field_side: usize,
    filter: Vec<f64>,
    scale: f64,
}

impl CloudSampler {
    /// Aperiodic sampler: field at `oversample * side`, central crop.
    pub fn cropped(side: usize, params: CloudParams) -> Result<Self> {
        params.validate()?;
        if side == 0 {
            return Err(Error::EmptyGrid);
        }
        Ok(Self::build(side, side * params.oversample, params))
    }

    /// Periodic sampler at exactly `side`.
    pub fn periodic(side: usize, params: CloudParams) -> Result<Self> {
        params.validate()?;
        if side == 0 {
            return Err(Error::EmptyGrid);
        }
        Ok(Self::build(side, side, params))
    }

    fn build(side: usize, field_side: usize, params: CloudParams) -> Self {
        let var = periodic_field_variance(field_side, params.delta);
        // A 1x1 field has only the zero mode and is identically zero.
        let scale = if var > 0.0 {
            params.target_std / var.sqrt()
        } else {
            0.0
        };
        Self {
            side,
            field_side,
            filter: power_law_filter(field_side, params.delta),
            scale,
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// The constant applied to every raw sample.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sample(&self, rng: &mut NoiseRng) -> Grid {
        let field = periodic_field(rng, self.field_side, &self.filter);
        let block = if self.field_side == self.side {
            field
        } else {
            field.crop_center(self.side).expect("crop fits inside the field")
        };
        block.scaled(self.scale)
    }

    /// `count` samples, sample `n` drawn from stream `n` of `seed`.
    pub fn batch(&self, seed: u64, count: usize) -> Vec<Grid> {
        let draw = |n: usize| self.sample(&mut rng::stream(seed, n as u64));
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(draw).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..count).map(draw).collect()
        }
    }
}

/// Power-law noise with toroidally periodic statistics at `spec.side`.
pub fn scale_invariant_noise_periodic(spec: &NoiseSpec) -> Result<Grid> {
    spec.validate()?;
    let sampler = CloudSampler::periodic(spec.side, spec.params())?;
    Ok(sampler.sample(&mut rng::stream(spec.seed, 0)))
}

/// Aperiodic power-law noise: periodic field at `oversample * side`, center
/// crop, constant rescale to `target_std`.
pub fn cloud_noise(spec: &NoiseSpec) -> Result<Grid> {
    spec.validate_aperiodic()?;
    let sampler = CloudSampler::cropped(spec.side, spec.params())?;
    Ok(sampler.sample(&mut rng::stream(spec.seed, 0)))
}

/// `count` independent cloud-noise samples; sample 0 equals [`cloud_noise`].
pub fn cloud_noise_batch(spec: &NoiseSpec, count: usize) -> Result<Vec<Grid>> {
    spec.validate_aperiodic()?;
    Ok(CloudSampler::cropped(spec.side, spec.params())?.batch(spec.seed, count))
}

pub fn periodic_noise_batch(spec: &NoiseSpec, count: usize) -> Result<Vec<Grid>> {
    spec.validate()?;
    Ok(CloudSampler::periodic(spec.side, spec.params())?.batch(spec.seed, count))
}

pub fn white_noise_batch(side: usize, seed: u64, count: usize) -> Vec<Grid> {
    let draw = |n: usize| white_noise_from(&mut rng::stream(seed, n as u64), side);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(draw).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(draw).collect()
    }
}

/// Multiplies the whole ensemble by one constant so its pooled standard
/// deviation becomes `target_std`.
pub fn renormalize_amplitude(samples: &[Grid], target_std: f64) -> Result<(f64, Vec<Grid>)> {
    if !(target_std > 0.0 && target_std.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target_std must be positive, got {target_std}"
        )));
    }
    let (_, std) = pooled_moments(samples)?;
    if !(std > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let scale = target_std / std;
    Ok((scale, samples.iter().map(|g| g.scaled(scale)).collect()))
}

/// Draw from the idealized reference directly in real-spectrum space:
/// independent `N(0, |k|^(-2 delta))` per index, zero at the zero mode.
pub fn reference_spectrum_sample(rng: &mut NoiseRng, side: usize, delta: f64) -> RealSpectralGrid {
    let g = rng::standard_normals(rng, side * side);
    let values = g
        .into_iter()
        .zip(power_law_filter(side, delta))
        .map(|(g, f)| g * f)
        .collect();
    RealSpectralGrid::from_vec(side, values).expect("finite")
}

/// Mean `|x[i, j] - x[i + 1, j]|` over interior vertical neighbours and the
/// same quantity across the wrap seam (`x[0, j]` against `x[N - 1, j]`),
/// pooled over the ensemble. Returns `(seam, interior)`.
pub fn seam_statistics(samples: &[Grid]) -> (f64, f64) {
    let mut seam = 0.0;
    let mut interior = 0.0;
    let mut n_seam = 0usize;
    let mut n_int = 0usize;
    for g in samples {
        let n = g.side();
        for j in 0..n {
            seam += (g[(0, j)] - g[(n - 1, j)]).abs();
            n_seam += 1;
            for i in 0..n - 1 {
                interior += (g[(i, j)] - g[(i + 1, j)]).abs();
                n_int += 1;
            }
        }
    }
    (seam / n_seam as f64, interior / n_int as f64)
}

/// Lag-1 correlation coefficient along rows and columns, pooled.
pub fn lag1_autocorrelation(samples: &[Grid]) -> (f64, f64) {
    let (mean, std) = pooled_moments(samples).expect("non-empty ensemble");
    let var = std * std;
    let (mut h, mut v, mut nh, mut nv) = (0.0, 0.0, 0usize, 0usize);
    for g in samples {
        let n = g.side();
        for i in 0..n {
            for j in 0..n {
                let a = g[(i, j)] - mean;
                if j + 1 < n {
                    h += a * (g[(i, j + 1)] - mean);
                    nh += 1;
                }
                if i + 1 < n {
                    v += a * (g[(i + 1, j)] - mean);
                    nv += 1;
                }
            }
        }
    }
    (h / nh as f64 / var, v / nv as f64 / var)
}
