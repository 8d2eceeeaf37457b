//! Low-order statistics of grid ensembles, in real space and in Fourier space.
//!
//! Ensembles are plain slices of equally sized grids. All moments use the
//! population convention (divide by the ensemble size). Nothing here ever
//! materializes the full `N^4` covariance tensor: real-space covariance is
//! taken one anchored slice at a time, and the Fourier covariance is reduced
//! to its diagonal plus anchored probes.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::fft2_centered;
use crate::tensor::{center, frequency, involute_unchecked, kmag_map, Grid, SpectralGrid};

/// Default half-width of the masked cross around the frequency axes.
pub const DEFAULT_CROSS_HALFWIDTH: usize = 1;

/// Minimum number of unmasked points for a power-law fit.
pub const MIN_FIT_POINTS: usize = 10;

/// Number of grids transformed together before their contributions are
/// folded into the running sums.
const CHUNK: usize = 64;

fn ensemble_side(set: &[Grid], needed: usize) -> Result<usize> {
    if set.len() < needed {
        return Err(Error::InsufficientSamples {
            needed,
            got: set.len(),
        });
    }
    let side = set[0].side();
    for g in set {
        g.check_side(side)?;
    }
    Ok(side)
}

/// Applies `f` to every grid, in parallel when enabled, preserving order.
pub(crate) fn map_grids<T: Send>(set: &[Grid], f: impl Fn(&Grid) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        set.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        set.iter().map(f).collect()
    }
}

/// Pixel-wise mean and population standard deviation.
pub fn pixelwise_moments(set: &[Grid]) -> Result<(Grid, Grid)> {
    let side = ensemble_side(set, 2)?;
    let n = set.len() as f64;
    let mut mean = vec![0.0; side * side];
    for g in set {
        for (m, v) in mean.iter_mut().zip(g.values()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; side * side];
    for g in set {
        for ((s, v), m) in var.iter_mut().zip(g.values()).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
    Ok((Grid::from_vec(side, mean)?, Grid::from_vec(side, std)?))
}

/// Pooled mean and standard deviation over every pixel of every grid.
pub fn pooled_moments(set: &[Grid]) -> Result<(f64, f64)> {
    ensemble_side(set, 1)?;
    let count: usize = set.iter().map(|g| g.values().len()).sum();
    let mean = set.iter().map(|g| g.values().iter().sum::<f64>()).sum::<f64>() / count as f64;
    let var = set
        .iter()
        .map(|g| g.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>())
        .sum::<f64>()
        / count as f64;
    Ok((mean, var.sqrt()))
}

/// Real-space covariance between every pixel and a fixed anchor pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceSlice {
    pub anchor: (usize, usize),
    pub values: Grid,
}

pub fn covariance_slice(set: &[Grid], anchor: (usize, usize)) -> Result<CovarianceSlice> {
    let side = ensemble_side(set, 2)?;
    let (k, l) = anchor;
    if k >= side || l >= side {
        return Err(Error::IndexOutOfRange { i: k, j: l, side });
    }
    let (mean, _) = pixelwise_moments(set)?;
    let n = set.len() as f64;
    let mut acc = vec![0.0; side * side];
    for g in set {
        let da = g[(k, l)] - mean[(k, l)];
        for ((s, v), m) in acc.iter_mut().zip(g.values()).zip(mean.values()) {
            *s += (v - m) * da;
        }
    }
    acc.iter_mut().for_each(|s| *s /= n);
    Ok(CovarianceSlice {
        anchor,
        values: Grid::from_vec(side, acc)?,
    })
}

/// Boolean mask over shifted frequency indices: the zero mode plus, when a
/// half-width is given, every index within that distance of either axis.
pub fn cross_mask(side: usize, halfwidth: Option<usize>) -> Vec<bool> {
    let c = center(side);
    let mut mask = Vec::with_capacity(side * side);
    for i in 0..side {
        let ky = frequency(i, side).unsigned_abs() as usize;
        for j in 0..side {
            let kx = frequency(j, side).unsigned_abs() as usize;
            let on_cross = halfwidth.is_some_and(|w| kx <= w || ky <= w);
            mask.push(on_cross || (i == c && j == c));
        }
    }
    mask
}

/// Diagonal of the Fourier-space covariance of an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCovarianceDiag {
    /// `E[|Z - M|^2]` per shifted frequency index.
    pub values: Grid,
    /// `true` marks excluded indices.
    pub mask: Vec<bool>,
    /// Transform of the pixel-wise mean.
    pub mean_spectrum: SpectralGrid,
    pub cross_halfwidth: Option<usize>,
    pub count: usize,
}

impl SpectralCovarianceDiag {
    /// Wraps a known diagonal (for instance an analytic power law).
    pub fn from_values(values: Grid, cross_halfwidth: Option<usize>) -> Self {
        let side = values.side();
        Self {
            mask: cross_mask(side, cross_halfwidth),
            mean_spectrum: SpectralGrid::zeros(side),
            values,
            cross_halfwidth,
            count: 0,
        }
    }

    /// Single-sample estimate `|Z|^2` of one grid, with no mean removed.
    pub fn periodogram(grid: &Grid, cross_halfwidth: Option<usize>) -> Self {
        let z = fft2_centered(grid);
        let values = Grid::from_vec(grid.side(), z.values().iter().map(|c| c.norm_sqr()).collect())
            .expect("finite spectrum");
        Self {
            mask: cross_mask(grid.side(), cross_halfwidth),
            mean_spectrum: SpectralGrid::zeros(grid.side()),
            values,
            cross_halfwidth,
            count: 1,
        }
    }

    pub fn side(&self) -> usize {
        self.values.side()
    }
}

pub fn spectral_covariance_diag(
    set: &[Grid],
    cross_halfwidth: Option<usize>,
) -> Result<SpectralCovarianceDiag> {
    let side = ensemble_side(set, 2)?;
    let (mean, _) = pixelwise_moments(set)?;
    let m = fft2_centered(&mean);
    let mut acc = vec![0.0; side * side];
    for chunk in set.chunks(CHUNK) {
        let spectra = map_grids(chunk, fft2_centered);
        for z in &spectra {
            for ((s, zv), mv) in acc.iter_mut().zip(z.values()).zip(m.values()) {
                *s += (zv - mv).norm_sqr();
            }
        }
    }
    let n = set.len() as f64;
    acc.iter_mut().for_each(|s| *s /= n);
    Ok(SpectralCovarianceDiag {
        values: Grid::from_vec(side, acc)?,
        mask: cross_mask(side, cross_halfwidth),
        mean_spectrum: m,
        cross_halfwidth,
        count: set.len(),
    })
}

/// Anchored slices of both Fourier covariances,
/// `Gamma[p] = E[(Z_p - M_p) conj(Z_a - M_a)]` and
/// `C[p] = E[(Z_p - M_p) (Z_a - M_a)]`.
pub fn spectral_covariance_offdiag_probe(
    set: &[Grid],
    anchor: (usize, usize),
) -> Result<(SpectralGrid, SpectralGrid)> {
    let side = ensemble_side(set, 2)?;
    let (k, l) = anchor;
    if k >= side || l >= side {
        return Err(Error::IndexOutOfRange { i: k, j: l, side });
    }
    if k == center(side) && l == center(side) {
        return Err(Error::MaskedAnchor { i: k, j: l });
    }
    let (mean, _) = pixelwise_moments(set)?;
    let m = fft2_centered(&mean);
    let a = k * side + l;
    let zero = Complex64::new(0.0, 0.0);
    let mut gamma = vec![zero; side * side];
    let mut c = vec![zero; side * side];
    for chunk in set.chunks(CHUNK) {
        for z in map_grids(chunk, fft2_centered) {
            let da = z.values()[a] - m.values()[a];
            for (p, (zv, mv)) in z.values().iter().zip(m.values()).enumerate() {
                let d = zv - mv;
                gamma[p] += d * da.conj();
                c[p] += d * da;
            }
        }
    }
    let n = set.len() as f64;
    let finish = |v: Vec<Complex64>| SpectralGrid::from_vec(side, v.into_iter().map(|x| x / n).collect());
    Ok((finish(gamma)?, finish(c)?))
}

/// Largest `|C[p] - Gamma'[p]|` where `Gamma'` is the probe at the involuted
/// anchor, relative to the largest `|Gamma'|`.
pub fn involution_identity_residual(
    c_slice: &SpectralGrid,
    gamma_at_involuted_anchor: &SpectralGrid,
) -> f64 {
    let scale = gamma_at_involuted_anchor.max_abs().max(f64::MIN_POSITIVE);
    c_slice
        .values()
        .iter()
        .zip(gamma_at_involuted_anchor.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale
}

/// Involuted anchor helper for probes.
pub fn involuted_anchor(anchor: (usize, usize), side: usize) -> (usize, usize) {
    involute_unchecked(anchor.0, anchor.1, side)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialPoint {
    pub i: usize,
    pub j: usize,
    pub log_k: f64,
    pub log_gamma: f64,
    pub masked: bool,
}

/// One record per nonzero frequency index, in row-major order.
pub fn radial_profile(diag: &SpectralCovarianceDiag) -> Result<Vec<RadialPoint>> {
    let side = diag.side();
    let kmag = kmag_map(side);
    let mut out = Vec::with_capacity(side * side - 1);
    for (p, (&k, &v)) in kmag.iter().zip(diag.values.values()).enumerate() {
        if k == 0.0 {
            continue;
        }
        let masked = diag.mask[p];
        let (i, j) = (p / side, p % side);
        if !masked && v <= 0.0 {
            return Err(Error::NonPositiveSpectrum { i, j, value: v });
        }
        out.push(RadialPoint {
            i,
            j,
            log_k: k.ln(),
            log_gamma: v.ln(),
            masked,
        });
    }
    Ok(out)
}

/// Least-squares line `log_gamma = intercept + slope log_k`, read as
/// `Gamma = A^2 / |k|^(2 delta)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub delta: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_points: usize,
}

impl PowerLawFit {
    /// Model value `A^2 |k|^(-2 delta)` at radius `k`.
    pub fn predict(&self, k: f64) -> f64 {
        (self.intercept + self.slope * k.ln()).exp()
    }
}

/// Ordinary least squares on the unmasked records.
pub fn fit_power_law(profile: &[RadialPoint]) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|p| !p.masked)
        .map(|p| (p.log_k, p.log_gamma))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit(format!(
            "{} unmasked points, need at least {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    if let Some(&(x, y)) = pts.iter().find(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateFit(format!("non-finite point ({x}, {y})")));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx <= 1e-12 * n {
        return Err(Error::DegenerateFit("all points share one radius".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(PowerLawFit {
        amplitude: (intercept / 2.0).exp(),
        delta: -slope / 2.0,
        slope,
        intercept,
        r2,
        n_points: pts.len(),
    })
}

/// Spectral diagonal, radial profile and fit in one call.
pub fn fit_ensemble(set: &[Grid], cross_halfwidth: Option<usize>) -> Result<PowerLawFit> {
    let diag = spectral_covariance_diag(set, cross_halfwidth)?;
    fit_power_law(&radial_profile(&diag)?)
}

/// Summary written by the analysis pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    #[serde(rename = "N")]
    pub side: usize,
    pub count: usize,
    pub delta: f64,
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_points: usize,
    pub cross_halfwidth: Option<usize>,
}

/// Everything the analysis pipeline produces for one ensemble.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub diag: SpectralCovarianceDiag,
    pub profile: Vec<RadialPoint>,
    pub fit: PowerLawFit,
    pub report: StatsReport,
}

pub fn analyze(set: &[Grid], cross_halfwidth: Option<usize>) -> Result<Analysis> {
    let diag = spectral_covariance_diag(set, cross_halfwidth)?;
    if diag.values.values().iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateFit("spectral variance is zero at every frequency".into()));
    }
    let profile = radial_profile(&diag)?;
    let fit = fit_power_law(&profile)?;
    let report = StatsReport {
        side: diag.side(),
        count: diag.count,
        delta: fit.delta,
        amplitude: fit.amplitude,
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        n_points: fit.n_points,
        cross_halfwidth,
    };
    Ok(Analysis {
        diag,
        profile,
        fit,
        report,
    })
}

/// Annulus of shifted indices grouped by radius.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialBin {
    pub k_min: f64,
    pub k_max: f64,
    pub indices: Vec<usize>,
}

/// Groups unmasked indices into annuli of unit width (by rounded `|k|`),
/// merging neighbouring annuli outward until each holds at least
/// `min_count` indices. A short last bin is merged into its predecessor.
pub fn radial_bins(side: usize, mask: &[bool], min_count: usize) -> Vec<RadialBin> {
    let kmag = kmag_map(side);
    let max_shell = kmag.iter().fold(0.0f64, |m, &k| m.max(k)).round() as usize;
    let mut shells: Vec<Vec<usize>> = vec![Vec::new(); max_shell + 1];
    for (p, &k) in kmag.iter().enumerate() {
        if !mask[p] && k > 0.0 {
            shells[k.round() as usize].push(p);
        }
    }
    let mut bins: Vec<RadialBin> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    for shell in shells {
        current.extend(shell);
        if current.len() >= min_count.max(1) {
            bins.push(make_bin(std::mem::take(&mut current), &kmag));
        }
    }
    if !current.is_empty() {
        match bins.last_mut() {
            Some(last) => {
                last.indices.extend(current);
                *last = make_bin(std::mem::take(&mut last.indices), &kmag);
            }
            None => bins.push(make_bin(current, &kmag)),
        }
    }
    bins
}

fn make_bin(indices: Vec<usize>, kmag: &[f64]) -> RadialBin {
    let (k_min, k_max) = indices.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &p| {
        (lo.min(kmag[p]), hi.max(kmag[p]))
    });
    RadialBin {
        k_min,
        k_max,
        indices,
    }
}

/// Mean of `values` over each bin.
pub fn bin_means(values: &[f64], bins: &[RadialBin]) -> Vec<f64> {
    bins.iter()
        .map(|b| b.indices.iter().map(|&p| values[p]).sum::<f64>() / b.indices.len() as f64)
        .collect()
}
