//! Stepwise and jump corruption with cloud noise. Cloud-noise pixels are
//! strongly correlated, so ensemble statistics converge slowly; the
//! ensembles here are large enough to resolve 2% in std and 5% per bin.

use cloudnoise::diffusion::{iterate_steps, jump, NoiseSource, Schedule};
use cloudnoise::noise::{cloud_noise_batch, CloudParams, NoiseSpec};
use cloudnoise::rng;
use cloudnoise::stats::{bin_means, cross_mask, pixelwise_moments, radial_bins, spectral_covariance_diag};
use cloudnoise::Grid;

fn pooled_pixel_std(set: &[Grid]) -> f64 {
    let (_, std) = pixelwise_moments(set).unwrap();
    (std.values().iter().map(|s| s * s).sum::<f64>() / std.values().len() as f64).sqrt()
}

#[test]
fn cloud_stepwise_matches_jump() {
    let side = 16;
    let count = 20_000;
    let t = 10;
    let schedule = Schedule::linear_beta(1000, 1e-4, 0.02).unwrap();
    let x0 = cloud_noise_batch(&NoiseSpec::new(side, 1.5, 1), 1).unwrap().remove(0);
    let sampler = NoiseSource::Cloud(CloudParams::new(1.5)).sampler(side).unwrap();
    let stepwise: Vec<Grid> = (0..count)
        .map(|n| iterate_steps(&x0, t, &schedule, &sampler, &mut rng::stream(2, n)).unwrap())
        .collect();
    let jumped: Vec<Grid> = (0..count)
        .map(|n| jump(&x0, t, &schedule, &sampler, &mut rng::stream(3, n)).unwrap().x_t)
        .collect();

    let (a, b) = (pooled_pixel_std(&stepwise), pooled_pixel_std(&jumped));
    assert!((a - b).abs() / b < 0.02, "{a} vs {b}");
    let expected = schedule.theta(t).unwrap().sin();
    assert!((b - expected).abs() / expected < 0.02, "{b} vs {expected}");

    let bins = radial_bins(side, &cross_mask(side, None), 32);
    let gs = bin_means(spectral_covariance_diag(&stepwise, None).unwrap().values.values(), &bins);
    let gj = bin_means(spectral_covariance_diag(&jumped, None).unwrap().values.values(), &bins);
    for (s, j) in gs.iter().zip(&gj) {
        assert!((s - j).abs() / j < 0.05, "{s} vs {j}");
    }
}
