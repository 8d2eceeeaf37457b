use cloudnoise::noise::{cloud_noise_batch, NoiseSpec};
use cloudnoise::stats::{fit_ensemble, DEFAULT_CROSS_HALFWIDTH};
use cloudnoise::Grid;

const HW: Option<usize> = Some(DEFAULT_CROSS_HALFWIDTH);

#[test]
fn sub_blocks_keep_the_exponent() {
    for delta in [1.0, 1.5] {
        let samples = cloud_noise_batch(&NoiseSpec::new(64, delta, 11), 512).unwrap();
        for (top, left) in [(0, 0), (32, 32), (7, 21), (16, 16)] {
            let blocks: Vec<Grid> = samples.iter().map(|g| g.crop(top, left, 32).unwrap()).collect();
            let d = fit_ensemble(&blocks, HW).unwrap().delta;
            assert!((d - delta).abs() < 0.1, "delta {delta} block ({top}, {left}) -> {d}");
        }
    }
}

#[test]
fn larger_delta_gives_steeper_slope() {
    let deltas = [0.0, 0.5, 1.0, 1.5, 2.0];
    let slopes: Vec<f64> = deltas
        .iter()
        .map(|&d| fit_ensemble(&cloud_noise_batch(&NoiseSpec::new(32, d, 12), 256).unwrap(), HW).unwrap().slope)
        .collect();
    for w in slopes.windows(2) {
        assert!(w[1] < w[0], "{slopes:?}");
    }
}

#[test]
fn cloud_noise_at_96_matches_target() {
    let samples = cloud_noise_batch(&NoiseSpec::new(96, 1.5, 13), 256).unwrap();
    let d = fit_ensemble(&samples, HW).unwrap().delta;
    assert!((d - 1.5).abs() < 0.05, "{d}");
    let (_, std) = cloudnoise::stats::pooled_moments(&samples).unwrap();
    assert!((std - 1.0).abs() < 0.02, "{std}");
}
