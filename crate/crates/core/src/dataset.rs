//! Image set loading, letterbox rejection and pixel-wise normalization.

use std::fs;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::stats::pixelwise_moments;
use crate::tensor::Grid;

/// Rec. 601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

pub const STL10_SIDE: usize = 96;
pub const STL10_RECORD_LEN: usize = 3 * STL10_SIDE * STL10_SIDE;

pub const DEFAULT_BAND: usize = 4;
pub const DEFAULT_UNIFORMITY_TOL: f64 = 0.01;
/// Band means closer than this to 0 or 1 count as black or white bars.
pub const BAR_EXTREME_TOL: f64 = 0.05;

/// Minimum per-pixel standard deviation accepted by [`normalize`].
pub const MIN_PIXEL_STD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ImageSet {
    images: Vec<Grid>,
    source: String,
    normalized: bool,
}

impl ImageSet {
    pub fn new(images: Vec<Grid>, source: impl Into<String>) -> Result<Self> {
        let side = images.first().map(Grid::side).ok_or(Error::InsufficientSamples {
            needed: 1,
            got: 0,
        })?;
        for g in &images {
            g.check_side(side)?;
        }
        Ok(Self {
            images,
            source: source.into(),
            normalized: false,
        })
    }

    pub fn images(&self) -> &[Grid] {
        &self.images
    }

    pub fn into_images(self) -> Vec<Grid> {
        self.images
    }

    pub fn side(&self) -> usize {
        self.images[0].side()
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }
}

fn luma(r: u8, g: u8, b: u8) -> f64 {
    (LUMA_WEIGHTS[0] * r as f64 + LUMA_WEIGHTS[1] * g as f64 + LUMA_WEIGHTS[2] * b as f64) / 255.0
}

/// Grayscale values in `[0, 1]`; `None` when the image is not square.
fn image_to_grid(img: &DynamicImage, path: &Path) -> Result<Option<Grid>> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| p[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p[0] as f64 / 255.0).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma(p[0], p[1], p[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luma(p[0], p[1], p[2])).collect(),
        other => {
            return Err(Error::Decode {
                path: path.into(),
                message: format!("unsupported pixel format {:?}", other.color()),
            })
        }
    };
    if w != h || w == 0 {
        return Ok(None);
    }
    Grid::from_vec(w, values).map(Some)
}

fn sorted_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| extensions.iter().any(|x| e.eq_ignore_ascii_case(x)))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// PNG files of `dir` in lexicographic order.
pub fn png_files(dir: &Path) -> Result<Vec<PathBuf>> {
    sorted_files(dir, &["png"])
}

fn decode_png(path: &Path) -> Result<(PathBuf, Option<Grid>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png).map_err(|e| {
        Error::Decode {
            path: path.into(),
            message: e.to_string(),
        }
    })?;
    Ok((path.to_path_buf(), image_to_grid(&img, path)?))
}

pub fn load_png_files(files: &[PathBuf], source: impl Into<String>) -> Result<ImageSet> {
    #[cfg(feature = "parallel")]
    let decoded: Vec<Result<(PathBuf, Option<Grid>)>> = {
        use rayon::prelude::*;
        files.par_iter().map(|p| decode_png(p)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let decoded: Vec<Result<(PathBuf, Option<Grid>)>> = files.iter().map(|p| decode_png(p)).collect();

    let decoded = decoded.into_iter().collect::<Result<Vec<_>>>()?;
    let expected = decoded
        .iter()
        .find_map(|(_, g)| g.as_ref().map(Grid::side))
        .unwrap_or(0);
    let offenders: Vec<String> = decoded
        .iter()
        .filter(|(_, g)| g.as_ref().map(Grid::side) != Some(expected))
        .map(|(p, _)| p.display().to_string())
        .collect();
    if !offenders.is_empty() {
        return Err(Error::DimensionMismatch {
            expected,
            offenders,
        });
    }
    ImageSet::new(decoded.into_iter().filter_map(|(_, g)| g).collect(), source)
}

/// Loads every PNG in `dir`.
pub fn load_png_dir(dir: &Path) -> Result<ImageSet> {
    let files = png_files(dir)?;
    if files.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    load_png_files(&files, dir.display().to_string())
}

/// Decodes STL10 binary records: three 96x96 channel planes per record,
/// each stored column by column.
pub fn decode_stl10(bytes: &[u8], limit: Option<usize>) -> Result<Vec<Grid>> {
    if bytes.len() % STL10_RECORD_LEN != 0 {
        let offset = bytes.len() / STL10_RECORD_LEN * STL10_RECORD_LEN;
        return Err(Error::Format {
            offset: offset as u64,
            message: format!(
                "truncated STL10 record ({} of {STL10_RECORD_LEN} bytes)",
                bytes.len() - offset
            ),
        });
    }
    let plane = STL10_SIDE * STL10_SIDE;
    let count = limit.map_or(bytes.len() / STL10_RECORD_LEN, |l| {
        l.min(bytes.len() / STL10_RECORD_LEN)
    });
    Ok(bytes
        .chunks_exact(STL10_RECORD_LEN)
        .take(count)
        .map(|rec| {
            Grid::from_fn(STL10_SIDE, |row, col| {
                let k = col * STL10_SIDE + row;
                luma(rec[k], rec[plane + k], rec[2 * plane + k])
            })
        })
        .collect())
}

pub fn load_stl10(path: &Path, limit: Option<usize>) -> Result<ImageSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let images = decode_stl10(&bytes, limit)?;
    ImageSet::new(images, path.display().to_string())
}

/// Loads an image set from a PNG directory, a directory or file of raw
/// `CLD1` grids, or an STL10 `.bin` file.
pub fn load_dataset(path: &Path, limit: Option<usize>) -> Result<ImageSet> {
    let truncate = |mut set: ImageSet| {
        if let Some(l) = limit {
            set.images.truncate(l.max(1));
        }
        set
    };
    if path.is_dir() {
        let raw = sorted_files(path, &["cld"])?;
        if !raw.is_empty() {
            let mut images = Vec::new();
            for f in &raw {
                images.extend(io::read_raw(f)?);
            }
            return ImageSet::new(images, path.display().to_string()).map(truncate);
        }
        let files = png_files(path)?;
        if files.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        let files = match limit {
            Some(l) => &files[..l.min(files.len())],
            None => &files[..],
        };
        return load_png_files(files, path.display().to_string());
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("cld") => {
            ImageSet::new(io::read_raw(path)?, path.display().to_string()).map(truncate)
        }
        Some(e) if e.eq_ignore_ascii_case("png") => {
            load_png_files(&[path.to_path_buf()], path.display().to_string())
        }
        _ => load_stl10(path, limit),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarCause {
    TopBar,
    BottomBar,
    LeftBar,
    RightBar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub index: usize,
    pub cause: BarCause,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub total: usize,
    pub kept: usize,
    pub rejected: usize,
    pub reasons: Vec<Rejection>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// A band is a bar when every line in it is flat and the band is near black
/// or near white.
fn is_bar(img: &Grid, lines: std::ops::Range<usize>, horizontal: bool, tol: f64) -> bool {
    let n = img.side();
    let line = |l: usize| (0..n).map(move |k| if horizontal { img[(l, k)] } else { img[(k, l)] });
    let flat = lines.clone().all(|l| mean_std(line(l)).1 < tol);
    if !flat {
        return false;
    }
    let band_mean = lines.clone().flat_map(line).sum::<f64>() / (lines.len() * n) as f64;
    band_mean <= BAR_EXTREME_TOL || band_mean >= 1.0 - BAR_EXTREME_TOL
}

/// First letterbox bar found on `img`, checking top, bottom, left, right.
pub fn detect_bar(img: &Grid, band: usize, uniformity_tol: f64) -> Option<BarCause> {
    let n = img.side();
    [
        (BarCause::TopBar, 0..band, true),
        (BarCause::BottomBar, n - band..n, true),
        (BarCause::LeftBar, 0..band, false),
        (BarCause::RightBar, n - band..n, false),
    ]
    .into_iter()
    .find(|(_, lines, horizontal)| is_bar(img, lines.clone(), *horizontal, uniformity_tol))
    .map(|(cause, _, _)| cause)
}

pub fn clean_letterbox(
    set: &ImageSet,
    band: usize,
    uniformity_tol: f64,
) -> Result<(ImageSet, CleaningReport)> {
    let n = set.side();
    if band == 0 || 2 * band >= n {
        return Err(Error::InvalidParameter(format!(
            "band must satisfy 1 <= band < side/2 (band {band}, side {n})"
        )));
    }
    if !(uniformity_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "uniformity tolerance must be positive, got {uniformity_tol}"
        )));
    }
    let mut kept = Vec::new();
    let mut reasons = Vec::new();
    for (index, img) in set.images().iter().enumerate() {
        match detect_bar(img, band, uniformity_tol) {
            Some(cause) => reasons.push(Rejection { index, cause }),
            None => kept.push(img.clone()),
        }
    }
    let report = CleaningReport {
        total: set.len(),
        kept: kept.len(),
        rejected: reasons.len(),
        reasons,
    };
    let cleaned = ImageSet {
        images: kept,
        source: set.source.clone(),
        normalized: set.normalized,
    };
    Ok((cleaned, report))
}

/// Per-pixel standardization `(x - mean) / std` with population statistics.
pub fn normalize(set: &ImageSet) -> Result<(ImageSet, Grid, Grid)> {
    let (mean, std) = pixelwise_moments(set.images())?;
    let n = set.side();
    for i in 0..n {
        for j in 0..n {
            if !(std[(i, j)] > MIN_PIXEL_STD) {
                return Err(Error::DegeneratePixel { i, j });
            }
        }
    }
    let images = set
        .images()
        .iter()
        .map(|img| {
            Grid::from_fn(n, |i, j| (img[(i, j)] - mean[(i, j)]) / std[(i, j)])
        })
        .collect();
    Ok((
        ImageSet {
            images,
            source: set.source.clone(),
            normalized: true,
        },
        mean,
        std,
    ))
}
