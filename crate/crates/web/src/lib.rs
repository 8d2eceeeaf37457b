//! Browser bindings for the demo page in `www/`.
//!
//! Images cross the boundary as RGBA byte arrays ready for `ImageData`.

use cloudnoise::diffusion::{jump_with_noise, Schedule, DEFAULT_BETA_END, DEFAULT_BETA_START};
use cloudnoise::io::ByteMapping;
use cloudnoise::noise::{white_noise_from, CloudParams, CloudSampler, NoiseSpec};
use cloudnoise::stats::analyze;
use cloudnoise::{rng, Grid};
use wasm_bindgen::prelude::*;

fn js_err(e: cloudnoise::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn rgba(grid: &Grid) -> Vec<u8> {
    let m = ByteMapping::of(grid);
    grid.values()
        .iter()
        .flat_map(|&v| {
            let b = m.to_byte(v);
            [b, b, b, 255]
        })
        .collect()
}

fn sampler(side: usize, delta: f64, oversample: usize) -> Result<CloudSampler, cloudnoise::Error> {
    let mut params = CloudParams::new(delta);
    params.oversample = oversample;
    if oversample <= 1 {
        params.oversample = 1;
        CloudSampler::periodic(side, params)
    } else {
        CloudSampler::cropped(side, params)
    }
}

/// One noise sample as RGBA. `oversample <= 1` gives the periodic variant.
#[wasm_bindgen]
pub fn noise_rgba(side: usize, delta: f64, oversample: usize, seed: u64) -> Result<Vec<u8>, JsError> {
    let s = sampler(side, delta, oversample).map_err(js_err)?;
    Ok(rgba(&s.sample(&mut rng::stream(seed, 0))))
}

/// Spectral fit of a generated ensemble.
#[wasm_bindgen]
pub struct SpectrumFit {
    delta: f64,
    amplitude: f64,
    r2: f64,
    log_k: Vec<f64>,
    log_gamma: Vec<f64>,
    masked: Vec<u8>,
}

#[wasm_bindgen]
impl SpectrumFit {
    #[wasm_bindgen(getter)]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[wasm_bindgen(getter)]
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    #[wasm_bindgen(getter)]
    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn log_k(&self) -> Vec<f64> {
        self.log_k.clone()
    }

    pub fn log_gamma(&self) -> Vec<f64> {
        self.log_gamma.clone()
    }

    pub fn masked(&self) -> Vec<u8> {
        self.masked.clone()
    }
}

/// Draws `count` samples and fits their spectral diagonal.
#[wasm_bindgen]
pub fn fit_generated(
    side: usize,
    delta: f64,
    oversample: usize,
    count: usize,
    cross_halfwidth: usize,
    seed: u64,
) -> Result<SpectrumFit, JsError> {
    let s = sampler(side, delta, oversample).map_err(js_err)?;
    let samples = s.batch(seed, count);
    let a = analyze(&samples, Some(cross_halfwidth)).map_err(js_err)?;
    Ok(SpectrumFit {
        delta: a.fit.delta,
        amplitude: a.fit.amplitude,
        r2: a.fit.r2,
        log_k: a.profile.iter().map(|p| p.log_k).collect(),
        log_gamma: a.profile.iter().map(|p| p.log_gamma).collect(),
        masked: a.profile.iter().map(|p| p.masked as u8).collect(),
    })
}

/// A clean test image with one white-noise and one cloud-noise draw, rendered
/// at any timestep of a linear-beta schedule.
#[wasm_bindgen]
pub struct NoisingDemo {
    clean: Grid,
    white: Grid,
    cloud: Grid,
    schedule: Schedule,
}

/// Standardized scene with edges at several scales.
fn scene(side: usize) -> Grid {
    let n = side as f64;
    let g = Grid::from_fn(side, |i, j| {
        let (y, x) = (i as f64 / n, j as f64 / n);
        let disc = if (x - 0.35).hypot(y - 0.4) < 0.22 { 1.0 } else { 0.0 };
        let bar = if (0.62..0.8).contains(&x) && y > 0.2 { -0.8 } else { 0.0 };
        let stripes = if y > 0.75 { 0.5 * (x * 40.0).sin() } else { 0.0 };
        disc + bar + stripes + 0.6 * y
    });
    let mean = g.mean();
    let std = (g.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / g.values().len() as f64).sqrt();
    g.map(|v| (v - mean) / std)
}

#[wasm_bindgen]
impl NoisingDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(side: usize, delta: f64, steps: usize, seed: u64) -> Result<NoisingDemo, JsError> {
        let spec = NoiseSpec::new(side, delta, seed);
        let cloud = CloudSampler::cropped(side, spec.params())
            .map_err(js_err)?
            .sample(&mut rng::stream(rng::derive_seed(seed, 1), 0));
        Ok(NoisingDemo {
            clean: scene(side),
            white: white_noise_from(&mut rng::stream(rng::derive_seed(seed, 0), 0), side),
            cloud,
            schedule: Schedule::linear_beta(steps, DEFAULT_BETA_START, DEFAULT_BETA_END).map_err(js_err)?,
        })
    }

    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> usize {
        self.schedule.steps()
    }

    pub fn theta(&self, t: usize) -> Result<f64, JsError> {
        self.schedule.theta(t).map_err(js_err)
    }

    fn state(&self, t: usize, cloud: bool) -> Result<Grid, cloudnoise::Error> {
        if t == 0 {
            return Ok(self.clean.clone());
        }
        let eps = if cloud { &self.cloud } else { &self.white };
        Ok(jump_with_noise(&self.clean, t, &self.schedule, eps.clone())?.x_t)
    }

    /// RGBA frame at timestep `t` (0 is the clean image).
    pub fn frame(&self, t: usize, cloud: bool) -> Result<Vec<u8>, JsError> {
        Ok(rgba(&self.state(t, cloud).map_err(js_err)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_frame_has_rgba_layout() {
        let px = noise_rgba(32, 1.5, 3, 1).unwrap();
        assert_eq!(px.len(), 32 * 32 * 4);
        assert!(px.chunks(4).all(|c| c[0] == c[1] && c[1] == c[2] && c[3] == 255));
        assert_eq!(px, noise_rgba(32, 1.5, 3, 1).unwrap());
        assert_ne!(px, noise_rgba(32, 1.5, 3, 2).unwrap());
        assert_eq!(noise_rgba(32, 1.5, 1, 1).unwrap().len(), 32 * 32 * 4);
    }

    #[test]
    fn generated_fit_recovers_delta() {
        let f = fit_generated(32, 1.5, 1, 128, 1, 3).unwrap();
        assert!((f.delta() - 1.5).abs() < 0.05);
        assert_eq!(f.log_k().len(), 32 * 32 - 1);
        assert!(f.masked().iter().any(|m| *m == 1));
    }

    #[test]
    fn noising_demo_starts_clean() {
        let d = NoisingDemo::new(48, 1.5, 1000, 4).unwrap();
        assert_eq!(d.frame(0, false).unwrap(), d.frame(0, true).unwrap());
        assert_eq!(d.frame(0, false).unwrap(), rgba(&scene(48)));
        assert_ne!(d.frame(500, false).unwrap(), d.frame(500, true).unwrap());
        assert!((d.theta(1000).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 0.01);
        assert_eq!(d.steps(), 1000);
    }
}
