//! Square real and complex grids, center-shifted frequency coordinates and
//! the frequency-negation involution on grid indices.
//!
//! Layout is row-major. Row index `i` carries the vertical frequency `ky`
//! and column index `j` the horizontal frequency `kx`; both are integer
//! cycles per image with the zero mode at `(side / 2, side / 2)`.

use std::ops::{Index, IndexMut};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real-valued `side x side` array with finite entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    side: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn zeros(side: usize) -> Self {
        Self::filled(side, 0.0)
    }

    pub fn filled(side: usize, value: f64) -> Self {
        assert!(side > 0, "grid side must be positive");
        assert!(value.is_finite(), "grid values must be finite");
        Self {
            side,
            values: vec![value; side * side],
        }
    }

    pub fn from_vec(side: usize, values: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::EmptyGrid);
        }
        if values.len() != side * side {
            return Err(Error::NotSquare {
                expected: side * side,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                i: pos / side,
                j: pos % side,
            });
        }
        Ok(Self { side, values })
    }

    /// Builds a grid from `f(i, j)`. Panics if `f` yields a non-finite value.
    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(side > 0, "grid side must be positive");
        let mut values = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                let v = f(i, j);
                assert!(v.is_finite(), "non-finite value at ({i}, {j})");
                values.push(v);
            }
        }
        Self { side, values }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        (i < self.side && j < self.side).then(|| self.values[i * self.side + j])
    }

    /// Applies `f` to every value. Panics if the result is non-finite.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Grid {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        assert!(
            values.iter().all(|v| v.is_finite()),
            "map produced a non-finite value"
        );
        Grid {
            side: self.side,
            values,
        }
    }

    pub fn scaled(&self, factor: f64) -> Grid {
        self.map(|v| v * factor)
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Grid, b: f64) -> Result<Grid> {
        self.check_side(other.side)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        Grid::from_vec(self.side, values)
    }

    /// Central `side x side` block cut from the top-left corner `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, side: usize) -> Result<Grid> {
        if side == 0 {
            return Err(Error::EmptyGrid);
        }
        if top + side > self.side || left + side > self.side {
            return Err(Error::IndexOutOfRange {
                i: top + side - 1,
                j: left + side - 1,
                side: self.side,
            });
        }
        let mut values = Vec::with_capacity(side * side);
        for i in top..top + side {
            let row = (i * self.side + left)..(i * self.side + left + side);
            values.extend_from_slice(&self.values[row]);
        }
        Ok(Grid { side, values })
    }

    /// Central crop of the given side (rounded towards the top-left when the
    /// margins are odd).
    pub fn crop_center(&self, side: usize) -> Result<Grid> {
        if side > self.side {
            return Err(Error::SideMismatch {
                expected: self.side,
                actual: side,
            });
        }
        let offset = (self.side - side) / 2;
        self.crop(offset, offset, side)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub(crate) fn check_side(&self, side: usize) -> Result<()> {
        if self.side == side {
            Ok(())
        } else {
            Err(Error::SideMismatch {
                expected: self.side,
                actual: side,
            })
        }
    }
}

impl Index<(usize, usize)> for Grid {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.side && j < self.side);
        &self.values[i * self.side + j]
    }
}

impl IndexMut<(usize, usize)> for Grid {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.side && j < self.side);
        &mut self.values[i * self.side + j]
    }
}

/// Complex `side x side` spectrum with the zero-frequency mode at the center
/// index.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGrid {
    side: usize,
    values: Vec<Complex64>,
}

impl SpectralGrid {
    pub fn zeros(side: usize) -> Self {
        assert!(side > 0, "grid side must be positive");
        Self {
            side,
            values: vec![Complex64::new(0.0, 0.0); side * side],
        }
    }

    pub fn from_vec(side: usize, values: Vec<Complex64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::EmptyGrid);
        }
        if values.len() != side * side {
            return Err(Error::NotSquare {
                expected: side * side,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                i: pos / side,
                j: pos % side,
            });
        }
        Ok(Self { side, values })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Always true: every spectrum in this crate is center-shifted.
    pub fn is_shifted(&self) -> bool {
        true
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max_p |Z[involute(p)] - conj(Z[p])|`; zero for spectra of real grids.
    pub fn involution_residual(&self) -> f64 {
        let n = self.side;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let (ti, tj) = involute_unchecked(i, j, n);
                let d = self.values[ti * n + tj] - self.values[i * n + j].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for SpectralGrid {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.side && j < self.side);
        &self.values[i * self.side + j]
    }
}

impl IndexMut<(usize, usize)> for SpectralGrid {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.side && j < self.side);
        &mut self.values[i * self.side + j]
    }
}

/// Signed frequency of a center-shifted index along one axis.
pub fn frequency(index: usize, side: usize) -> i64 {
    index as i64 - (side / 2) as i64
}

/// Index of the zero-frequency mode along each axis.
pub fn center(side: usize) -> usize {
    side / 2
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreqIndex {
    pub i: usize,
    pub j: usize,
    pub kx: i64,
    pub ky: i64,
    pub kmag: f64,
}

impl FreqIndex {
    pub fn new(i: usize, j: usize, side: usize) -> Result<Self> {
        check_index(i, j, side)?;
        let ky = frequency(i, side);
        let kx = frequency(j, side);
        Ok(Self {
            i,
            j,
            kx,
            ky,
            kmag: ((kx * kx + ky * ky) as f64).sqrt(),
        })
    }
}

/// `|k|` for every index of a `side x side` shifted grid, row-major.
pub fn kmag_map(side: usize) -> Vec<f64> {
    let c = (side / 2) as f64;
    let mut out = Vec::with_capacity(side * side);
    for i in 0..side {
        let ky = i as f64 - c;
        for j in 0..side {
            let kx = j as f64 - c;
            out.push((kx * kx + ky * ky).sqrt());
        }
    }
    out
}

fn check_index(i: usize, j: usize, side: usize) -> Result<()> {
    if i < side && j < side {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { i, j, side })
    }
}

#[inline]
fn involute_axis(i: usize, side: usize) -> usize {
    if side % 2 == 1 {
        side - 1 - i
    } else if i == 0 {
        0
    } else {
        side - i
    }
}

#[inline]
pub(crate) fn involute_unchecked(i: usize, j: usize, side: usize) -> (usize, usize) {
    (involute_axis(i, side), involute_axis(j, side))
}

/// Maps an index to the index of the negated frequency.
///
/// For odd sides this is a half-turn about the center pixel. For even sides
/// the first row and column carry the unpaired Nyquist frequency and map onto
/// themselves, while the remaining `(side - 1)^2` block turns about the center.
pub fn involute(i: usize, j: usize, side: usize) -> Result<(usize, usize)> {
    check_index(i, j, side)?;
    Ok(involute_unchecked(i, j, side))
}

/// All indices fixed by [`involute`].
pub fn stationary_set(side: usize) -> Vec<(usize, usize)> {
    if side == 0 {
        return Vec::new();
    }
    if side % 2 == 1 {
        let c = (side - 1) / 2;
        vec![(c, c)]
    } else {
        let h = side / 2;
        let mut v = vec![(0, 0), (0, h), (h, 0), (h, h)];
        v.dedup();
        v
    }
}

/// Disjoint split of the index set into involution-paired sectors and fixed
/// points. `mirrored[n] == involute(canonical[n])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub canonical: Vec<(usize, usize)>,
    pub mirrored: Vec<(usize, usize)>,
    pub stationary: Vec<(usize, usize)>,
}

/// Canonical members are those that precede their partner in row-major order.
pub fn canonical_partition(side: usize) -> Partition {
    let mut canonical = Vec::new();
    let mut mirrored = Vec::new();
    let mut stationary = Vec::new();
    for i in 0..side {
        for j in 0..side {
            let p = (i, j);
            let q = involute_unchecked(i, j, side);
            if p == q {
                stationary.push(p);
            } else if p < q {
                canonical.push(p);
                mirrored.push(q);
            }
        }
    }
    Partition {
        canonical,
        mirrored,
        stationary,
    }
}

/// Per-index role in the real-spectrum packing, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Sector {
    Canonical,
    Mirrored,
    Stationary,
}

pub(crate) fn sector_map(side: usize) -> Vec<Sector> {
    let mut out = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let p = (i, j);
            let q = involute_unchecked(i, j, side);
            out.push(match p.cmp(&q) {
                std::cmp::Ordering::Equal => Sector::Stationary,
                std::cmp::Ordering::Less => Sector::Canonical,
                std::cmp::Ordering::Greater => Sector::Mirrored,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn involute_examples() {
        assert_eq!(involute(1, 3, 5).unwrap(), (3, 1));
        assert_eq!(involute(0, 1, 4).unwrap(), (0, 3));
        assert_eq!(involute(2, 3, 4).unwrap(), (2, 1));
        assert_eq!(involute(0, 0, 4).unwrap(), (0, 0));
        assert_eq!(involute(2, 2, 4).unwrap(), (2, 2));
        assert!(matches!(
            involute(4, 0, 4),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn involute_negates_frequency() {
        for side in 1..=12 {
            for i in 0..side {
                for j in 0..side {
                    let (ti, tj) = involute(i, j, side).unwrap();
                    let n = side as i64;
                    assert_eq!((frequency(ti, side) + frequency(i, side)).rem_euclid(n), 0);
                    assert_eq!((frequency(tj, side) + frequency(j, side)).rem_euclid(n), 0);
                }
            }
        }
    }

    #[test]
    fn involute_is_an_involution_up_to_256() {
        for side in 1..=256 {
            for i in 0..side {
                for j in 0..side {
                    let (a, b) = involute_unchecked(i, j, side);
                    assert_eq!(involute_unchecked(a, b, side), (i, j));
                }
            }
        }
    }

    #[test]
    fn stationary_examples() {
        let s4: HashSet<_> = stationary_set(4).into_iter().collect();
        assert_eq!(s4, [(0, 0), (0, 2), (2, 0), (2, 2)].into_iter().collect());
        assert_eq!(stationary_set(5), vec![(2, 2)]);
        let s96: HashSet<_> = stationary_set(96).into_iter().collect();
        assert_eq!(
            s96,
            [(0, 0), (0, 48), (48, 0), (48, 48)].into_iter().collect()
        );
        assert_eq!(stationary_set(1), vec![(0, 0)]);
    }

    #[test]
    fn stationary_set_matches_fixed_points() {
        for side in 1..=40 {
            let fixed: HashSet<_> = (0..side)
                .flat_map(|i| (0..side).map(move |j| (i, j)))
                .filter(|&(i, j)| involute_unchecked(i, j, side) == (i, j))
                .collect();
            let listed: HashSet<_> = stationary_set(side).into_iter().collect();
            assert_eq!(fixed, listed, "side {side}");
        }
    }

    #[test]
    fn partition_counts() {
        let p2 = canonical_partition(2);
        assert_eq!(p2.stationary.len(), 4);
        assert!(p2.canonical.is_empty() && p2.mirrored.is_empty());

        let p4 = canonical_partition(4);
        assert_eq!(
            (p4.canonical.len(), p4.mirrored.len(), p4.stationary.len()),
            (6, 6, 4)
        );

        let p5 = canonical_partition(5);
        assert_eq!(
            (p5.canonical.len(), p5.mirrored.len(), p5.stationary.len()),
            (12, 12, 1)
        );

        for side in 1..=64 {
            let p = canonical_partition(side);
            assert_eq!(p.canonical.len(), p.mirrored.len());
            assert_eq!(
                2 * p.canonical.len() + p.stationary.len(),
                side * side,
                "side {side}"
            );
            for (c, m) in p.canonical.iter().zip(&p.mirrored) {
                assert_eq!(involute_unchecked(c.0, c.1, side), *m);
            }
            let all: HashSet<_> = p
                .canonical
                .iter()
                .chain(&p.mirrored)
                .chain(&p.stationary)
                .collect();
            assert_eq!(all.len(), side * side);
        }
    }

    #[test]
    fn freq_index_conventions() {
        let even = FreqIndex::new(0, 3, 4).unwrap();
        assert_eq!((even.ky, even.kx), (-2, 1));
        let odd = FreqIndex::new(0, 4, 5).unwrap();
        assert_eq!((odd.ky, odd.kx), (-2, 2));
        assert_eq!(FreqIndex::new(2, 2, 4).unwrap().kmag, 0.0);
        assert_eq!(FreqIndex::new(2, 2, 5).unwrap().kmag, 0.0);
        assert!(FreqIndex::new(5, 0, 5).is_err());
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(Grid::from_vec(0, vec![]), Err(Error::EmptyGrid)));
        assert!(matches!(
            Grid::from_vec(2, vec![0.0; 3]),
            Err(Error::NotSquare { .. })
        ));
        assert!(matches!(
            Grid::from_vec(2, vec![0.0, 1.0, f64::NAN, 0.0]),
            Err(Error::NonFinite { i: 1, j: 0 })
        ));
    }

    #[test]
    fn crop_center_takes_middle_block() {
        let g = Grid::from_fn(6, |i, j| (i * 6 + j) as f64);
        let c = g.crop_center(2).unwrap();
        assert_eq!(c.values(), &[14.0, 15.0, 20.0, 21.0]);
        assert!(g.crop(5, 5, 2).is_err());
    }
}
