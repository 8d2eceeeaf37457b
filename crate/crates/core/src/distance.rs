//! Mahalanobis distances relative to an idealized power-law reference.
//!
//! The reference is the zero-mean Gaussian on real-spectrum space with
//! covariance `|k|^(-2 delta)` per index, so its inverse is the diagonal
//! weight `|k|^(2 delta)`. The zero mode has no finite weight and is left
//! out.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::spectral::{rfft2, RealSpectralGrid};
use crate::tensor::{kmag_map, Grid};

pub const DEFAULT_PAIRS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMetric {
    pub delta: f64,
    pub side: usize,
    /// `|k|^(2 delta)` per shifted index, 0 at the zero mode.
    pub weights: Grid,
}

impl ReferenceMetric {
    pub fn new(side: usize, delta: f64) -> Result<Self> {
        if side == 0 {
            return Err(Error::EmptyGrid);
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be finite, got {delta}")));
        }
        let weights = kmag_map(side)
            .into_iter()
            .map(|k| if k == 0.0 { 0.0 } else { k.powf(2.0 * delta) })
            .collect();
        Ok(Self {
            delta,
            side,
            weights: Grid::from_vec(side, weights)?,
        })
    }

    /// Number of modes with nonzero weight.
    pub fn n_modes(&self) -> usize {
        self.weights.values().iter().filter(|&&w| w > 0.0).count()
    }
}

pub fn maha_point(x: &RealSpectralGrid, y: &RealSpectralGrid, metric: &ReferenceMetric) -> Result<f64> {
    for s in [x.side(), y.side()] {
        if s != metric.side {
            return Err(Error::SideMismatch {
                expected: metric.side,
                actual: s,
            });
        }
    }
    let sum: f64 = x
        .values()
        .iter()
        .zip(y.values())
        .zip(metric.weights.values())
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum();
    Ok(sum.sqrt())
}

fn maha_to_zero(x: &RealSpectralGrid, metric: &ReferenceMetric) -> Result<f64> {
    maha_point(x, &RealSpectralGrid::zeros(metric.side), metric)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// Each sample against the reference center.
    Center,
    /// Independently drawn random pairs.
    Random,
}

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_pairs: usize,
    pub pairing: Pairing,
}

fn estimate(values: &[f64], pairing: Pairing) -> DistanceEstimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    DistanceEstimate {
        mean,
        stderr: (var / n).sqrt(),
        n_pairs: values.len(),
        pairing,
    }
}

/// Real spectra of an ensemble, in order.
pub fn real_spectra(samples: &[Grid]) -> Vec<RealSpectralGrid> {
    crate::stats::map_grids(samples, rfft2)
}

/// Expected distance from a sample to the reference center (taken as 0).
pub fn maha_distribution_to_center(
    samples: &[RealSpectralGrid],
    metric: &ReferenceMetric,
) -> Result<DistanceEstimate> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let d = samples
        .iter()
        .map(|x| maha_to_zero(x, metric))
        .collect::<Result<Vec<_>>>()?;
    Ok(estimate(&d, Pairing::Center))
}

/// Expected distance between independent draws from two ensembles, estimated
/// from `pairs` uniformly random pairs.
pub fn maha_between_distributions(
    a: &[RealSpectralGrid],
    b: &[RealSpectralGrid],
    metric: &ReferenceMetric,
    pairs: usize,
    seed: u64,
) -> Result<DistanceEstimate> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                got: s.len(),
            });
        }
    }
    if pairs == 0 {
        return Err(Error::InvalidParameter("pair count must be positive".into()));
    }
    let mut r = rng::stream(seed, 0);
    let d = (0..pairs)
        .map(|_| {
            let x = &a[r.random_range(0..a.len())];
            let y = &b[r.random_range(0..b.len())];
            maha_point(x, y, metric)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(estimate(&d, Pairing::Random))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceEntry {
    pub from: String,
    pub to: String,
    pub mean: f64,
    pub stderr: f64,
    pub n_pairs: usize,
    pub pairing: Pairing,
}

impl DistanceEntry {
    pub fn new(from: &str, to: &str, est: DistanceEstimate) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            mean: est.mean,
            stderr: est.stderr,
            n_pairs: est.n_pairs,
            pairing: est.pairing,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub reference_delta: f64,
    #[serde(rename = "N")]
    pub side: usize,
    pub entries: Vec<DistanceEntry>,
    /// Whether cloud noise is closer to the images than white noise.
    pub cloud_closer: bool,
}

impl DistanceReport {
    pub fn entry(&self, from: &str, to: &str) -> Option<&DistanceEntry> {
        self.entries.iter().find(|e| e.from == from && e.to == to)
    }
}

/// Full comparison of white noise, cloud noise and an image ensemble (all
/// expected to be standardized), relative to the reference.
pub fn distance_report(
    white: &[Grid],
    cloud: &[Grid],
    images: &[Grid],
    metric: &ReferenceMetric,
    pairs: usize,
    seed: u64,
) -> Result<DistanceReport> {
    let w = real_spectra(white);
    let c = real_spectra(cloud);
    let im = real_spectra(images);
    let sets = [("white", &w), ("cloud", &c), ("images", &im)];
    let mut entries = Vec::new();
    let between = [
        ("white", "images"),
        ("cloud", "images"),
        ("white", "cloud"),
        ("white", "white"),
        ("cloud", "cloud"),
        ("images", "images"),
    ];
    for (k, (from, to)) in between.iter().enumerate() {
        let get = |name: &str| sets.iter().find(|s| s.0 == name).unwrap().1;
        let est = maha_between_distributions(get(from), get(to), metric, pairs, rng::derive_seed(seed, k as u64))?;
        entries.push(DistanceEntry::new(from, to, est));
    }
    for (name, set) in sets {
        entries.push(DistanceEntry::new(name, "center", maha_distribution_to_center(set, metric)?));
    }
    let cloud_closer = entries[1].mean < entries[0].mean;
    Ok(DistanceReport {
        reference_delta: metric.delta,
        side: metric.side,
        entries,
        cloud_closer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{reference_spectrum_sample, white_noise_batch};
    use crate::tensor::FreqIndex;

    fn spectra(side: usize, seed: u64, count: usize) -> Vec<RealSpectralGrid> {
        real_spectra(&white_noise_batch(side, seed, count))
    }

    #[test]
    fn weights_follow_power_law() {
        let m = ReferenceMetric::new(8, 1.5).unwrap();
        assert_eq!(m.weights[(4, 4)], 0.0);
        for i in 0..8 {
            for j in 0..8 {
                let k = FreqIndex::new(i, j, 8).unwrap().kmag;
                if k > 0.0 {
                    assert!((m.weights[(i, j)] - k.powi(3)).abs() < 1e-9 * k.powi(3));
                }
            }
        }
        assert_eq!(m.n_modes(), 63);
    }

    #[test]
    fn point_distance_examples() {
        let m = ReferenceMetric::new(4, 1.5).unwrap();
        let x = &spectra(4, 1, 1)[0];
        assert_eq!(maha_point(x, x, &m).unwrap(), 0.0);

        let mut dc = RealSpectralGrid::zeros(4).values().to_vec();
        dc[2 * 4 + 2] = 5.0;
        let dc = RealSpectralGrid::from_vec(4, dc).unwrap();
        assert_eq!(maha_point(&dc, &RealSpectralGrid::zeros(4), &m).unwrap(), 0.0);

        let mut unit = vec![0.0; 16];
        unit[2 * 4 + 3] = 1.0; // kx = 1, ky = 0
        let unit = RealSpectralGrid::from_vec(4, unit).unwrap();
        assert!((maha_point(&unit, &RealSpectralGrid::zeros(4), &m).unwrap() - 1.0).abs() < 1e-15);

        let other = RealSpectralGrid::zeros(5);
        assert!(matches!(maha_point(&unit, &other, &m), Err(Error::SideMismatch { .. })));
    }

    #[test]
    fn metric_axioms_on_random_triples() {
        let m = ReferenceMetric::new(8, 1.5).unwrap();
        let s = spectra(8, 2, 30);
        for t in s.chunks(3) {
            let (a, b, c) = (&t[0], &t[1], &t[2]);
            let ab = maha_point(a, b, &m).unwrap();
            let ba = maha_point(b, a, &m).unwrap();
            let bc = maha_point(b, c, &m).unwrap();
            let ac = maha_point(a, c, &m).unwrap();
            assert_eq!(ab, ba);
            assert!(ac <= ab + bc + 1e-9);
        }
    }

    #[test]
    fn scaling_samples_scales_distances() {
        let m = ReferenceMetric::new(8, 1.5).unwrap();
        let s = spectra(8, 3, 20);
        let doubled: Vec<_> = s.iter().map(|x| x.scaled(2.0)).collect();
        let d1 = maha_distribution_to_center(&s, &m).unwrap();
        let d2 = maha_distribution_to_center(&doubled, &m).unwrap();
        assert_eq!(d2.mean, 2.0 * d1.mean);
        let b1 = maha_between_distributions(&s, &s, &m, 500, 1).unwrap();
        let b2 = maha_between_distributions(&doubled, &doubled, &m, 500, 1).unwrap();
        assert_eq!(b2.mean, 2.0 * b1.mean);
        let neg: Vec<_> = s.iter().map(|x| x.scaled(-0.5)).collect();
        let d3 = maha_distribution_to_center(&neg, &m).unwrap();
        assert!((d3.mean - 0.5 * d1.mean).abs() < 1e-12 * d1.mean);
    }

    #[test]
    fn zero_ensembles() {
        let m = ReferenceMetric::new(8, 1.5).unwrap();
        let zeros = vec![RealSpectralGrid::zeros(8); 4];
        assert_eq!(maha_distribution_to_center(&zeros, &m).unwrap().mean, 0.0);
        assert_eq!(maha_between_distributions(&zeros, &zeros, &m, 100, 0).unwrap().mean, 0.0);
        assert!(maha_distribution_to_center(&zeros[..1], &m).is_err());
        assert!(maha_between_distributions(&zeros[..1], &zeros, &m, 10, 0).is_err());
    }

    #[test]
    fn identical_ensembles_are_not_at_zero_distance() {
        let m = ReferenceMetric::new(8, 1.5).unwrap();
        let s = spectra(8, 4, 50);
        assert!(maha_between_distributions(&s, &s, &m, 1000, 2).unwrap().mean > 0.0);
    }

    #[test]
    fn reference_samples_follow_chi_distribution() {
        // Oracle: mean of a chi variable with n degrees of freedom,
        // sqrt(2) Gamma((n + 1) / 2) / Gamma(n / 2).
        let side = 16;
        let m = ReferenceMetric::new(side, 1.5).unwrap();
        let n = m.n_modes() as f64;
        assert_eq!(m.n_modes(), side * side - 1);
        let samples: Vec<_> = (0..400)
            .map(|k| reference_spectrum_sample(&mut rng::stream(6, k), side, 1.5))
            .collect();
        let est = maha_distribution_to_center(&samples, &m).unwrap();
        use statrs::function::gamma::ln_gamma;
        let chi_mean = 2f64.sqrt() * (ln_gamma((n + 1.0) / 2.0) - ln_gamma(n / 2.0)).exp();
        assert!((est.mean - chi_mean).abs() < 3.0 * est.stderr, "{est:?} vs {chi_mean}");
        assert!((est.mean - n.sqrt()).abs() < 3.0 * est.stderr);
    }
}
