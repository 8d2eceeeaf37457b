//! Center-shifted 2D Fourier transforms and the real-valued spectrum packing.
//!
//! Forward transforms are unnormalized and inverse transforms carry the
//! `1 / N^2` factor, so `sum |Z|^2 = N^2 sum |x|^2`.
//!
//! The real packing splits the spectrum of a real grid into involution pairs.
//! For each canonical index `p` with partner `q`, the packed grid stores
//! `sqrt(2) Re Z[p]` at `p` and `sqrt(2) Im Z[p]` at `q`; fixed points keep
//! `Re Z[p]`. The `sqrt(2)` keeps Parseval exact and makes the per-index
//! variance of the packed grid equal to the diagonal spectral covariance.

use std::cell::RefCell;
use std::f64::consts::SQRT_2;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{involute_unchecked, sector_map, Grid, Sector, SpectralGrid};

/// Relative imaginary residue above which an inverse transform is reported as
/// asymmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-6;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

/// In-place unnormalized 2D FFT of a row-major `side x side` buffer.
fn fft2_in_place(buf: &mut [Complex64], side: usize, direction: Direction) {
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match direction {
            Direction::Forward => p.plan_fft_forward(side),
            Direction::Inverse => p.plan_fft_inverse(side),
        }
    });
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(buf, &mut scratch);
    transpose_square(buf, side);
    fft.process_with_scratch(buf, &mut scratch);
    transpose_square(buf, side);
}

fn transpose_square<T>(buf: &mut [T], side: usize) {
    for i in 0..side {
        for j in (i + 1)..side {
            buf.swap(i * side + j, j * side + i);
        }
    }
}

/// Moves the zero-frequency mode from index 0 to the center.
fn shift<T: Copy>(src: &[T], side: usize) -> Vec<T> {
    let h = side / 2;
    let mut out = Vec::with_capacity(src.len());
    for i in 0..side {
        let u = (i + side - h) % side;
        for j in 0..side {
            let v = (j + side - h) % side;
            out.push(src[u * side + v]);
        }
    }
    out
}

fn unshift<T: Copy>(src: &[T], side: usize) -> Vec<T> {
    let h = side / 2;
    let mut out = Vec::with_capacity(src.len());
    for u in 0..side {
        let i = (u + h) % side;
        for v in 0..side {
            let j = (v + h) % side;
            out.push(src[i * side + j]);
        }
    }
    out
}

pub fn fft2_centered(x: &Grid) -> SpectralGrid {
    let side = x.side();
    let mut buf: Vec<Complex64> = x.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_in_place(&mut buf, side, Direction::Forward);
    SpectralGrid::from_vec(side, shift(&buf, side)).expect("transform of a finite grid is finite")
}

/// Result of an inverse transform back to real space.
#[derive(Clone, Debug)]
pub struct InverseTransform {
    pub grid: Grid,
    /// Largest discarded imaginary part, relative to the largest output
    /// magnitude.
    pub imag_residue: f64,
}

impl InverseTransform {
    /// True when the input spectrum was not conjugate-symmetric beyond
    /// [`SYMMETRY_TOLERANCE`].
    pub fn symmetry_violated(&self) -> bool {
        self.imag_residue > SYMMETRY_TOLERANCE
    }
}

/// Inverse of [`fft2_centered`]. The imaginary part of the result is dropped
/// and its relative size reported.
pub fn ifft2_centered(z: &SpectralGrid) -> InverseTransform {
    let side = z.side();
    let mut buf = unshift(z.values(), side);
    fft2_in_place(&mut buf, side, Direction::Inverse);
    let norm = 1.0 / (side * side) as f64;
    let mut max_abs = 0.0f64;
    let mut max_imag = 0.0f64;
    let values: Vec<f64> = buf
        .iter()
        .map(|c| {
            let c = c * norm;
            max_abs = max_abs.max(c.norm());
            max_imag = max_imag.max(c.im.abs());
            c.re
        })
        .collect();
    let imag_residue = if max_abs > 0.0 { max_imag / max_abs } else { 0.0 };
    InverseTransform {
        grid: Grid::from_vec(side, values).expect("inverse of a finite spectrum is finite"),
        imag_residue,
    }
}

/// Convention used to pack a real spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Packing {
    /// `sqrt(2)`-scaled real/imaginary parts on paired sectors.
    Sqrt2Sectors,
}

/// Real-valued `side x side` spectrum carrying the same information as the
/// complex spectrum of a real grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSpectralGrid {
    side: usize,
    values: Vec<f64>,
    packing: Packing,
}

impl RealSpectralGrid {
    pub fn zeros(side: usize) -> Self {
        assert!(side > 0, "grid side must be positive");
        Self {
            side,
            values: vec![0.0; side * side],
            packing: Packing::Sqrt2Sectors,
        }
    }

    pub fn from_vec(side: usize, values: Vec<f64>) -> Result<Self> {
        let g = Grid::from_vec(side, values)?;
        Ok(Self {
            side,
            values: g.into_values(),
            packing: Packing::Sqrt2Sectors,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn packing(&self) -> Packing {
        self.packing
    }

    /// Multiplies every index by `filter[index]`.
    pub fn filtered(&self, filter: &[f64]) -> Result<Self> {
        if filter.len() != self.values.len() {
            return Err(Error::NotSquare {
                expected: self.values.len(),
                actual: filter.len(),
            });
        }
        Self::from_vec(
            self.side,
            self.values.iter().zip(filter).map(|(v, f)| v * f).collect(),
        )
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            side: self.side,
            values: self.values.iter().map(|v| v * factor).collect(),
            packing: self.packing,
        }
    }
}

/// Packs the complex spectrum of a real grid into a real grid.
pub fn rfft2(x: &Grid) -> RealSpectralGrid {
    let z = fft2_centered(x);
    pack(&z)
}

pub(crate) fn pack(z: &SpectralGrid) -> RealSpectralGrid {
    let side = z.side();
    let zv = z.values();
    let mut out = vec![0.0; side * side];
    for (idx, sector) in sector_map(side).into_iter().enumerate() {
        let (i, j) = (idx / side, idx % side);
        match sector {
            Sector::Stationary => out[idx] = zv[idx].re,
            Sector::Canonical => {
                let (ti, tj) = involute_unchecked(i, j, side);
                out[idx] = SQRT_2 * zv[idx].re;
                out[ti * side + tj] = SQRT_2 * zv[idx].im;
            }
            Sector::Mirrored => {}
        }
    }
    RealSpectralGrid {
        side,
        values: out,
        packing: Packing::Sqrt2Sectors,
    }
}

/// Rebuilds the conjugate-symmetric complex spectrum from a packed grid.
pub fn unpack(x: &RealSpectralGrid) -> SpectralGrid {
    let side = x.side;
    let mut z = SpectralGrid::zeros(side);
    let zv = z.values_mut();
    for (idx, sector) in sector_map(side).into_iter().enumerate() {
        let (i, j) = (idx / side, idx % side);
        match sector {
            Sector::Stationary => zv[idx] = Complex64::new(x.values[idx], 0.0),
            Sector::Canonical => {
                let (ti, tj) = involute_unchecked(i, j, side);
                let q = ti * side + tj;
                let c = Complex64::new(x.values[idx], x.values[q]) / SQRT_2;
                zv[idx] = c;
                zv[q] = c.conj();
            }
            Sector::Mirrored => {}
        }
    }
    z
}

/// Inverse of [`rfft2`].
pub fn irfft2(x: &RealSpectralGrid) -> Grid {
    ifft2_centered(&unpack(x)).grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{canonical_partition, stationary_set};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(side: usize, seed: u64) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid::from_fn(side, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Direct O(N^4) DFT with explicit center shift.
    fn dft_oracle(x: &Grid) -> Vec<Complex64> {
        let n = x.side();
        let h = (n / 2) as f64;
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            let ky = a as f64 - h;
            for b in 0..n {
                let kx = b as f64 - h;
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    for c in 0..n {
                        let phase = -2.0 * std::f64::consts::PI * (ky * r as f64 + kx * c as f64)
                            / n as f64;
                        acc += Complex64::from_polar(x[(r, c)], phase);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    fn max_rel(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn constant_grid_is_dc_only() {
        let c = 0.75;
        let z = fft2_centered(&Grid::filled(4, c));
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i, j) == (2, 2) { 16.0 * c } else { 0.0 };
                assert!((z[(i, j)] - Complex64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut x = Grid::zeros(4);
        x[(0, 0)] = 1.0;
        let z = fft2_centered(&x);
        assert!(z.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn matches_direct_dft() {
        for (side, seed) in [(8, 1), (5, 2), (6, 3)] {
            let x = random_grid(side, seed);
            let z = fft2_centered(&x);
            let oracle = dft_oracle(&x);
            let scale = oracle.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let err = z
                .values()
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err / scale < 1e-10, "side {side}: {err}");
        }
    }

    #[test]
    fn inverse_roundtrip_and_dc_example() {
        let x = random_grid(16, 4);
        let back = ifft2_centered(&fft2_centered(&x));
        assert!(max_rel(back.grid.values(), x.values()) < 1e-9);
        assert!(!back.symmetry_violated());

        let mut z = SpectralGrid::zeros(4);
        z[(2, 2)] = Complex64::new(16.0, 0.0);
        let inv = ifft2_centered(&z);
        assert!(inv.grid.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn symmetrized_spectrum_has_no_residue() {
        let side = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw: Vec<Complex64> = (0..side * side)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut sym = vec![Complex64::new(0.0, 0.0); side * side];
        for i in 0..side {
            for j in 0..side {
                let (ti, tj) = involute_unchecked(i, j, side);
                sym[i * side + j] = (raw[i * side + j] + raw[ti * side + tj].conj()) * 0.5;
            }
        }
        let inv = ifft2_centered(&SpectralGrid::from_vec(side, sym).unwrap());
        assert!(inv.imag_residue < 1e-12, "{}", inv.imag_residue);

        let asym = SpectralGrid::from_vec(side, raw).unwrap();
        assert!(ifft2_centered(&asym).symmetry_violated());
    }

    #[test]
    fn real_spectrum_roundtrip_all_sides() {
        for side in [1, 2, 3, 4, 5, 8, 9, 16, 96] {
            let x = random_grid(side, side as u64);
            let back = irfft2(&rfft2(&x));
            assert!(max_rel(back.values(), x.values()) < 1e-9, "side {side}");
        }
    }

    #[test]
    fn real_spectrum_parseval() {
        for side in [3, 4, 9, 16] {
            let x = random_grid(side, 10 + side as u64);
            let packed = rfft2(&x);
            let lhs: f64 = packed.values().iter().map(|v| v * v).sum();
            let rhs = (side * side) as f64 * x.sum_of_squares();
            assert!((lhs - rhs).abs() / rhs < 1e-9);
        }
    }

    #[test]
    fn zero_grid_packs_to_zero() {
        assert!(rfft2(&Grid::zeros(6)).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stationary_basis_vectors_invert_to_checkerboards() {
        // Oracle: direct inverse DFT of a single real coefficient at the
        // stationary frequency (ky, kx), i.e. cos(2 pi (ky r + kx c) / N) / N^2.
        let side = 4;
        let part = canonical_partition(side);
        assert_eq!(part.stationary, stationary_set(side));
        for &(i, j) in &part.stationary {
            let mut v = vec![0.0; side * side];
            v[i * side + j] = 1.0;
            let g = irfft2(&RealSpectralGrid::from_vec(side, v).unwrap());
            let ky = crate::tensor::frequency(i, side) as f64;
            let kx = crate::tensor::frequency(j, side) as f64;
            for r in 0..side {
                for c in 0..side {
                    let phase =
                        2.0 * std::f64::consts::PI * (ky * r as f64 + kx * c as f64) / side as f64;
                    let expected = phase.cos() / (side * side) as f64;
                    assert!((g[(r, c)] - expected).abs() < 1e-12);
                }
            }
            let (lo, hi) = g.min_max();
            assert!((hi.abs() - lo.abs()).abs() < 1e-12);
        }
    }
}
