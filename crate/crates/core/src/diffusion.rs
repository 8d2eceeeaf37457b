//! Forward noising process of a diffusion model, with white or cloud noise.
//!
//! One step is `x_t = sqrt(alpha_t) x_{t-1} + sqrt(1 - alpha_t) eps`. Because
//! both noise families are closed under linear combination, `t` steps
//! collapse to `x_t = cos(theta_t) x_0 + sin(theta_t) eps` with
//! `cos^2(theta_t) = alpha_bar_t = alpha_1 ... alpha_t`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{white_noise_from, CloudParams, CloudSampler};
use crate::rng::{self, NoiseRng};
use crate::stats::{fit_power_law, radial_profile, spectral_covariance_diag, PowerLawFit, RadialPoint, SpectralCovarianceDiag};
use crate::tensor::Grid;

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;
pub const DEFAULT_COSINE_OFFSET: f64 = 0.008;
/// Upper bound on per-step beta in the cosine schedule.
pub const COSINE_MAX_BETA: f64 = 0.999;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleKind {
    LinearBeta { beta_start: f64, beta_end: f64 },
    Cosine { offset: f64 },
    Custom,
}

/// Per-step retention coefficients and their running products. Timesteps are
/// 1-based; `alpha_bar(0) == 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl Schedule {
    pub fn linear_beta(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("schedule needs at least one step".into()));
        }
        if !(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < beta_start < beta_end < 1, got {beta_start}, {beta_end}"
            )));
        }
        let alphas = (0..steps)
            .map(|s| {
                let frac = if steps == 1 { 0.0 } else { s as f64 / (steps - 1) as f64 };
                1.0 - (beta_start + (beta_end - beta_start) * frac)
            })
            .collect();
        Ok(Self::from_alphas(
            ScheduleKind::LinearBeta {
                beta_start,
                beta_end,
            },
            alphas,
        ))
    }

    /// `alpha_bar_t = f(t) / f(0)` with `f(t) = cos^2(((t / T) + s) / (1 + s) * pi / 2)`,
    /// per-step beta clipped at [`COSINE_MAX_BETA`].
    pub fn cosine(steps: usize, offset: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("schedule needs at least one step".into()));
        }
        if !(offset > 0.0 && offset.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cosine offset must be positive, got {offset}"
            )));
        }
        let f = |t: usize| {
            let x = (t as f64 / steps as f64 + offset) / (1.0 + offset) * FRAC_PI_2;
            x.cos().powi(2)
        };
        let f0 = f(0);
        let alphas = (1..=steps)
            .map(|t| {
                let ratio = (f(t) / f0) / (f(t - 1) / f0);
                ratio.clamp(1.0 - COSINE_MAX_BETA, 1.0)
            })
            .collect();
        Ok(Self::from_alphas(ScheduleKind::Cosine { offset }, alphas))
    }

    /// Arbitrary per-step coefficients in `(0, 1]`.
    pub fn custom(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidParameter("schedule needs at least one step".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "alphas must lie in (0, 1], got {a}"
            )));
        }
        Ok(Self::from_alphas(ScheduleKind::Custom, alphas))
    }

    fn from_alphas(kind: ScheduleKind, alphas: Vec<f64>) -> Self {
        let mut alpha_bars = Vec::with_capacity(alphas.len());
        let mut acc = 1.0;
        for &a in &alphas {
            acc *= a;
            alpha_bars.push(acc);
        }
        Self {
            kind,
            alphas,
            alpha_bars,
        }
    }

    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    fn check_t(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            Err(Error::TimestepOutOfRange {
                t,
                steps: self.steps(),
            })
        } else {
            Ok(())
        }
    }

    pub fn alpha(&self, t: usize) -> Result<f64> {
        self.check_t(t)?;
        Ok(self.alphas[t - 1])
    }

    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Ok(1.0);
        }
        self.check_t(t)?;
        Ok(self.alpha_bars[t - 1])
    }

    /// Angle with `cos^2(theta_t) = alpha_bar_t`.
    pub fn theta(&self, t: usize) -> Result<f64> {
        Ok(theta_from_alpha_bar(self.alpha_bar(t)?))
    }
}

pub fn theta_from_alpha_bar(alpha_bar: f64) -> f64 {
    alpha_bar.sqrt().clamp(0.0, 1.0).acos()
}

/// Where a noising step gets its fresh noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NoiseSource {
    White,
    /// Aperiodic (cropped) power-law noise.
    Cloud(CloudParams),
}

impl NoiseSource {
    pub fn sampler(&self, side: usize) -> Result<SourceSampler> {
        match self {
            NoiseSource::White => Ok(SourceSampler::White { side }),
            NoiseSource::Cloud(p) => Ok(SourceSampler::Cloud(CloudSampler::cropped(side, *p)?)),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseSource::White => "white",
            NoiseSource::Cloud(_) => "cloud",
        }
    }
}

/// A [`NoiseSource`] bound to a grid size.
#[derive(Clone, Debug)]
pub enum SourceSampler {
    White { side: usize },
    Cloud(CloudSampler),
}

impl SourceSampler {
    pub fn side(&self) -> usize {
        match self {
            SourceSampler::White { side } => *side,
            SourceSampler::Cloud(c) => c.side(),
        }
    }

    pub fn sample(&self, rng: &mut NoiseRng) -> Grid {
        match self {
            SourceSampler::White { side } => white_noise_from(rng, *side),
            SourceSampler::Cloud(c) => c.sample(rng),
        }
    }
}

/// `sqrt(alpha) x + sqrt(1 - alpha) eps`.
pub fn corrupt(x: &Grid, alpha: f64, eps: &Grid) -> Result<Grid> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    x.lin_comb(alpha.sqrt(), eps, (1.0 - alpha).sqrt())
}

/// One forward step from `t - 1` to `t` with a fresh noise draw.
pub fn noising_step(
    x_prev: &Grid,
    t: usize,
    schedule: &Schedule,
    source: &SourceSampler,
    rng: &mut NoiseRng,
) -> Result<Grid> {
    let alpha = schedule.alpha(t)?;
    x_prev.check_side(source.side())?;
    corrupt(x_prev, alpha, &source.sample(rng))
}

/// Runs steps `1..=t` one at a time.
pub fn iterate_steps(
    x_0: &Grid,
    t: usize,
    schedule: &Schedule,
    source: &SourceSampler,
    rng: &mut NoiseRng,
) -> Result<Grid> {
    schedule.check_t(t)?;
    let mut x = x_0.clone();
    for s in 1..=t {
        x = noising_step(&x, s, schedule, source, rng)?;
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisyState {
    pub t: usize,
    pub x_t: Grid,
    /// Cumulative noise `eps_{0:t}`.
    pub eps_cum: Grid,
    pub theta_t: f64,
}

/// Closed-form corruption with a given cumulative noise grid.
pub fn jump_with_noise(x_0: &Grid, t: usize, schedule: &Schedule, eps_cum: Grid) -> Result<NoisyState> {
    let theta_t = schedule.theta(t)?;
    let x_t = x_0.lin_comb(theta_t.cos(), &eps_cum, theta_t.sin())?;
    Ok(NoisyState {
        t,
        x_t,
        eps_cum,
        theta_t,
    })
}

/// Jumps from `x_0` straight to timestep `t` with one noise draw.
pub fn jump(
    x_0: &Grid,
    t: usize,
    schedule: &Schedule,
    source: &SourceSampler,
    rng: &mut NoiseRng,
) -> Result<NoisyState> {
    schedule.check_t(t)?;
    x_0.check_side(source.side())?;
    jump_with_noise(x_0, t, schedule, source.sample(rng))
}

/// Spectral statistics of the corrupted ensemble at one timestep.
#[derive(Clone, Debug)]
pub struct TimeProfile {
    pub t: usize,
    pub theta: f64,
    pub diag: SpectralCovarianceDiag,
    pub profile: Vec<RadialPoint>,
    pub fit: PowerLawFit,
}

/// Corrupts every image to each requested timestep via [`jump`] and measures
/// the spectral diagonal. Image `n` at timestep `t` draws its noise from
/// stream `n` of a seed derived from `(seed, t)`.
pub fn covariance_through_time(
    images: &[Grid],
    schedule: &Schedule,
    source: &NoiseSource,
    timesteps: &[usize],
    cross_halfwidth: Option<usize>,
    seed: u64,
) -> Result<Vec<TimeProfile>> {
    let side = images.first().map(Grid::side).ok_or(Error::InsufficientSamples {
        needed: 2,
        got: 0,
    })?;
    for &t in timesteps {
        schedule.check_t(t)?;
    }
    let sampler = source.sampler(side)?;
    timesteps
        .iter()
        .map(|&t| {
            let step_seed = rng::derive_seed(seed, t as u64);
            let corrupt_one = |n: usize| -> Result<Grid> {
                let mut r = rng::stream(step_seed, n as u64);
                Ok(jump(&images[n], t, schedule, &sampler, &mut r)?.x_t)
            };
            #[cfg(feature = "parallel")]
            let noisy: Result<Vec<Grid>> = {
                use rayon::prelude::*;
                (0..images.len()).into_par_iter().map(corrupt_one).collect()
            };
            #[cfg(not(feature = "parallel"))]
            let noisy: Result<Vec<Grid>> = (0..images.len()).map(corrupt_one).collect();
            let noisy = noisy?;
            let diag = spectral_covariance_diag(&noisy, cross_halfwidth)?;
            let profile = radial_profile(&diag)?;
            let fit = fit_power_law(&profile)?;
            Ok(TimeProfile {
                t,
                theta: schedule.theta(t)?,
                diag,
                profile,
                fit,
            })
        })
        .collect()
}

/// Expected spectral diagonal at angle `theta` when a clean ensemble with
/// power law `clean` is mixed with white noise of unit variance per pixel.
/// White noise contributes `side^2` per index under the unnormalized
/// transform.
pub fn white_mixture_diagonal(clean: &PowerLawFit, theta: f64, side: usize, k: f64) -> f64 {
    let (c, s) = (theta.cos(), theta.sin());
    c * c * clean.predict(k) + s * s * (side * side) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pooled_moments;

    #[test]
    fn constant_alpha_product() {
        let s = Schedule::custom(vec![0.9; 50]).unwrap();
        for t in 1..=50 {
            let expected = 0.9f64.powi(t as i32);
            assert!((s.alpha_bar(t).unwrap() - expected).abs() < 1e-14);
        }
        assert_eq!(s.alpha_bar(0).unwrap(), 1.0);
    }

    #[test]
    fn product_identity_is_exact() {
        for s in [
            Schedule::linear_beta(1000, 1e-4, 0.02).unwrap(),
            Schedule::cosine(1000, DEFAULT_COSINE_OFFSET).unwrap(),
        ] {
            let ab = s.alpha_bars();
            for t in 1..ab.len() {
                assert_eq!(ab[t], ab[t - 1] * s.alphas()[t]);
                assert!(ab[t] < ab[t - 1]);
                assert!(ab[t] > 0.0 && ab[t] < 1.0);
            }
            assert!(*ab.last().unwrap() < 0.01);
            for t in 1..=s.steps() {
                let th = s.theta(t).unwrap();
                assert!((th.cos().powi(2) - s.alpha_bar(t).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_schedule_final_alpha_bar() {
        // Oracle: direct product of (1 - beta_t) in extended precision order.
        let s = Schedule::linear_beta(1000, 1e-4, 0.02).unwrap();
        let mut log_sum = 0.0f64;
        for t in 0..1000 {
            let beta = 1e-4 + (0.02 - 1e-4) * t as f64 / 999.0;
            log_sum += (1.0 - beta).ln();
        }
        let last = *s.alpha_bars().last().unwrap();
        assert!((last.ln() - log_sum).abs() < 1e-9);
        assert!(last < 5e-5, "{last}");
    }

    #[test]
    fn quarter_alpha_bar_is_sixty_degrees() {
        assert!((theta_from_alpha_bar(0.25) - std::f64::consts::PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn schedule_parameter_errors() {
        assert!(Schedule::linear_beta(0, 1e-4, 0.02).is_err());
        assert!(Schedule::linear_beta(10, 0.02, 1e-4).is_err());
        assert!(Schedule::cosine(10, 0.0).is_err());
        assert!(Schedule::custom(vec![0.5, 1.5]).is_err());
        assert!(Schedule::custom(vec![0.0]).is_err());
        let s = Schedule::custom(vec![0.5; 3]).unwrap();
        assert!(matches!(s.alpha(0), Err(Error::TimestepOutOfRange { .. })));
        assert!(matches!(s.alpha(4), Err(Error::TimestepOutOfRange { .. })));
    }

    #[test]
    fn unit_alpha_step_is_identity_and_zero_alpha_is_pure_noise() {
        let x = Grid::from_fn(8, |i, j| (i as f64 - j as f64) * 0.1);
        let s = Schedule::custom(vec![1.0]).unwrap();
        let sampler = NoiseSource::White.sampler(8).unwrap();
        let out = noising_step(&x, 1, &s, &sampler, &mut rng::stream(1, 0)).unwrap();
        assert_eq!(out, x);

        let eps = white_noise_from(&mut rng::stream(2, 0), 8);
        assert_eq!(corrupt(&x, 0.0, &eps).unwrap(), eps);
        assert!(corrupt(&x, 1.5, &eps).is_err());
    }

    #[test]
    fn step_preserves_unit_variance() {
        let s = Schedule::custom(vec![0.7]).unwrap();
        let sampler = NoiseSource::White.sampler(4).unwrap();
        let outs: Vec<Grid> = (0..10_000)
            .map(|n| {
                let mut r = rng::stream(3, n);
                let x = white_noise_from(&mut r, 4);
                noising_step(&x, 1, &s, &sampler, &mut r).unwrap()
            })
            .collect();
        let (_, std) = pooled_moments(&outs).unwrap();
        assert!((std * std - 1.0).abs() < 0.02);
    }

    #[test]
    fn jump_reconstruction_and_limits() {
        let s = Schedule::linear_beta(1000, 1e-4, 0.02).unwrap();
        let x0 = Grid::from_fn(16, |i, j| ((i * j) % 7) as f64 * 0.2 - 0.5);
        let sampler = NoiseSource::White.sampler(16).unwrap();
        let st = jump(&x0, 1, &s, &sampler, &mut rng::stream(4, 0)).unwrap();
        let rebuilt = x0.lin_comb(st.theta_t.cos(), &st.eps_cum, st.theta_t.sin()).unwrap();
        assert_eq!(rebuilt, st.x_t);
        assert!((st.theta_t.cos().powi(2) - s.alpha_bar(1).unwrap()).abs() < 1e-12);

        let ab = s.alpha_bar(1).unwrap();
        let diff: f64 = st
            .x_t
            .values()
            .iter()
            .zip(x0.values())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = x0.sum_of_squares().sqrt();
        assert!(diff < (1.0 - ab).sqrt() * 4.0 * (16.0 + norm), "{diff}");
        assert!(jump(&x0, 1001, &s, &sampler, &mut rng::stream(4, 0)).is_err());
    }

    #[test]
    fn jump_is_affine_in_the_clean_image() {
        let s = Schedule::linear_beta(200, 1e-4, 0.02).unwrap();
        let x = Grid::from_fn(8, |i, j| (i + 2 * j) as f64 * 0.1);
        let y = Grid::from_fn(8, |i, j| (3 * i + j) as f64 * -0.05);
        let eps = white_noise_from(&mut rng::stream(5, 0), 8);
        let (a, b) = (0.7, -1.3);
        let t = 120;
        let combined = x.lin_comb(a, &y, b).unwrap();
        let lhs = jump_with_noise(&combined, t, &s, eps.clone()).unwrap().x_t;
        let jx = jump_with_noise(&x, t, &s, eps.clone()).unwrap().x_t;
        let jy = jump_with_noise(&y, t, &s, eps.clone()).unwrap();
        let sin = jy.theta_t.sin();
        let rhs = jx
            .lin_comb(a, &jy.x_t, b)
            .unwrap()
            .lin_comb(1.0, &eps, -(a + b - 1.0) * sin)
            .unwrap();
        for (l, r) in lhs.values().iter().zip(rhs.values()) {
            assert!((l - r).abs() < 1e-12);
        }
    }

    #[test]
    fn cloud_jump_residual_is_cloud_noise() {
        let s = Schedule::linear_beta(1000, 1e-4, 0.02).unwrap();
        let x0 = Grid::from_fn(64, |i, j| ((i * 3 + j * 5) % 11) as f64 / 11.0);
        let sampler = NoiseSource::Cloud(CloudParams::new(1.5)).sampler(64).unwrap();
        for t in [50, 500] {
            let ab = s.alpha_bar(t).unwrap();
            let residuals: Vec<Grid> = (0..256)
                .map(|n| {
                    let st = jump(&x0, t, &s, &sampler, &mut rng::stream(7, n)).unwrap();
                    st.x_t.lin_comb(1.0 / (1.0 - ab).sqrt(), &x0, -(ab / (1.0 - ab)).sqrt()).unwrap()
                })
                .collect();
            let fit = crate::stats::fit_ensemble(&residuals, Some(1)).unwrap();
            assert!((fit.delta - 1.5).abs() < 0.05, "t {t}: {fit:?}");
        }
    }

    #[test]
    fn jump_preserves_unit_variance_for_both_sources() {
        let s = Schedule::linear_beta(1000, 1e-4, 0.02).unwrap();
        let side = 16;
        let clean = crate::noise::cloud_noise_batch(&crate::noise::NoiseSpec::new(side, 1.5, 8), 8000).unwrap();
        for source in [NoiseSource::White, NoiseSource::Cloud(CloudParams::new(1.5))] {
            let sampler = source.sampler(side).unwrap();
            for t in [1, 100, 300, 600, 1000] {
                let out: Vec<Grid> = clean
                    .iter()
                    .enumerate()
                    .map(|(n, x)| jump(x, t, &s, &sampler, &mut rng::stream(9 + t as u64, n as u64)).unwrap().x_t)
                    .collect();
                let (_, std) = pooled_moments(&out).unwrap();
                assert!((std - 1.0).abs() < 0.02, "{} t {t}: {std}", source.label());
            }
        }
    }

    #[test]
    fn white_endpoint_is_flat() {
        let s = Schedule::linear_beta(1000, 1e-4, 0.02).unwrap();
        let images: Vec<Grid> = crate::noise::cloud_noise_batch(&crate::noise::NoiseSpec::new(32, 1.5, 1), 256).unwrap();
        let out = covariance_through_time(&images, &s, &NoiseSource::White, &[1000], Some(1), 2).unwrap();
        assert!(out[0].fit.delta.abs() < 0.05, "{:?}", out[0].fit);
        assert!(covariance_through_time(&images, &s, &NoiseSource::White, &[0], Some(1), 2).is_err());
    }
}
