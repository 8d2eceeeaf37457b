use std::fs;
use std::io::Write;

use cloudnoise::dataset::{clean_letterbox, load_dataset, load_png_files, normalize, png_files, ImageSet};
use cloudnoise::diffusion::jump_with_noise;
use cloudnoise::distance::{distance_report, ReferenceMetric};
use cloudnoise::io::{panels_image, save_png, write_png, write_raw, ByteMapping};
use cloudnoise::noise::{cloud_noise_batch, periodic_noise_batch, white_noise_batch, white_noise_from, CloudSampler, NoiseSpec};
use cloudnoise::rng;
use cloudnoise::stats::{self, fit_power_law, pixelwise_moments, radial_profile, RadialPoint, SpectralCovarianceDiag};
use cloudnoise::{fft2_centered, Error, Grid};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{
    AnalyzeArgs, CleanArgs, Command, DistanceArgs, FitArgs, GenNoiseArgs, Manifest, NoiseKind, NoisingArgs, RunConfig,
};
use crate::output::{Failure, OutDir};

/// Runs one command, writes its manifest and prints its summary to stdout.
pub fn execute(config: &RunConfig) -> Result<(), Failure> {
    let mut out = OutDir::create(&config.out)?;
    let summary = match &config.command {
        Command::Analyze(a) => analyze(a, &mut out)?,
        Command::Fit(a) => fit(a, &mut out)?,
        Command::GenNoise(a) => gen_noise(a, &mut out)?,
        Command::Noising(a) => noising(a, &mut out)?,
        Command::Distance(a) => distance(a, &mut out)?,
        Command::Clean(a) => clean(a, &mut out)?,
        Command::Replay(_) => unreachable!("replay is resolved before execution"),
    };
    let manifest = Manifest::new(config, out.into_written());
    OutDir::create(&config.out)?.write_json("manifest.json", &manifest)?;
    // A closed pipe on stdout is not a failure of the run.
    let _ = writeln!(std::io::stdout(), "{summary}");
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ProfileRow {
    log_k: f64,
    log_gamma: f64,
    masked: u8,
}

impl From<&RadialPoint> for ProfileRow {
    fn from(p: &RadialPoint) -> Self {
        Self {
            log_k: p.log_k,
            log_gamma: p.log_gamma,
            masked: p.masked as u8,
        }
    }
}

fn log10_map(g: &Grid) -> Grid {
    let floor = g.values().iter().cloned().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1.0 };
    g.map(|v| v.max(floor).log10())
}

fn analyze(a: &AnalyzeArgs, out: &mut OutDir) -> Result<Value, Failure> {
    let mut set = load_dataset(&a.dataset, a.limit)?;
    let mut cleaning = None;
    if a.clean {
        let (kept, report) = clean_letterbox(&set, a.band, a.tol)?;
        set = kept;
        cleaning = Some(report);
    }
    let result = stats::analyze(set.images(), a.mask.halfwidth())?;
    out.write_json("stats.json", &result.report)?;
    out.write_csv("radial.csv", result.profile.iter().map(ProfileRow::from))?;

    let (mean, std) = pixelwise_moments(set.images())?;
    let mean_map = write_png(&out.file("mean.png"), &mean)?;
    let std_map = write_png(&out.file("std.png"), &std)?;
    let gamma_map = write_png(&out.file("gamma_diag.png"), &log10_map(&result.diag.values))?;
    out.write_json(
        "maps.json",
        &json!({
            "mean": mean_map,
            "std": std_map,
            "gamma_diag": { "log10": true, "mapping": gamma_map },
        }),
    )?;
    if let Some(report) = &cleaning {
        out.write_json("cleaning_report.json", report)?;
    }
    Ok(serde_json::to_value(&result.report).expect("report serializes"))
}

fn fit(a: &FitArgs, out: &mut OutDir) -> Result<Value, Failure> {
    let mut reader = csv::Reader::from_path(&a.profile)
        .map_err(|e| Failure::input("io", format!("{}: {e}", a.profile.display())))?;
    let points = reader
        .deserialize::<ProfileRow>()
        .map(|row| {
            let row = row.map_err(|e| Failure::input("format", format!("{}: {e}", a.profile.display())))?;
            Ok(RadialPoint {
                i: 0,
                j: 0,
                log_k: row.log_k,
                log_gamma: row.log_gamma,
                masked: row.masked != 0,
            })
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let result = fit_power_law(&points)?;
    out.write_json("fit.json", &result)?;
    Ok(serde_json::to_value(result).expect("fit serializes"))
}

fn gen_noise(a: &GenNoiseArgs, out: &mut OutDir) -> Result<Value, Failure> {
    if a.count == 0 {
        return Err(Error::InvalidParameter("count must be positive".into()).into());
    }
    let spec = a.spec();
    let samples = match a.kind {
        NoiseKind::Cloud => cloud_noise_batch(&spec, a.count)?,
        NoiseKind::Periodic => periodic_noise_batch(&spec, a.count)?,
        NoiseKind::White => {
            if a.side == 0 {
                return Err(Error::EmptyGrid.into());
            }
            white_noise_batch(a.side, a.seed, a.count)
        }
    };
    write_raw(&out.file("noise.cld"), &samples)?;
    let mut mappings = Vec::with_capacity(samples.len());
    for (k, g) in samples.iter().enumerate() {
        mappings.push(write_png(&out.file(&format!("noise_{k:04}.png")), g)?);
    }
    out.write_json("png_mappings.json", &mappings)?;
    let (mean, std) = stats::pooled_moments(&samples).unwrap_or((samples[0].mean(), 0.0));
    Ok(json!({ "count": samples.len(), "N": a.side, "kind": a.kind, "mean": mean, "std": std }))
}

fn standardized(x: &Grid) -> Result<Grid, Error> {
    let mean = x.mean();
    let std = (x.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.values().len() as f64).sqrt();
    if std == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(x.map(|v| (v - mean) / std))
}

#[derive(Serialize)]
struct NoisingRow<'a> {
    noise: &'a str,
    t: usize,
    log_k: f64,
    log_gamma: f64,
    masked: u8,
}

fn noising(a: &NoisingArgs, out: &mut OutDir) -> Result<Value, Failure> {
    let input = load_dataset(&a.image, Some(1))?.into_images().remove(0);
    let x0 = if a.standardize { standardized(&input)? } else { input };
    let side = x0.side();
    let schedule = a.schedule.build()?;
    for &t in &a.snapshots {
        if t > schedule.steps() {
            return Err(Error::TimestepOutOfRange {
                t,
                steps: schedule.steps(),
            }
            .into());
        }
    }
    let white_eps = white_noise_from(&mut rng::stream(rng::derive_seed(a.seed, 0), 0), side);
    let cloud_eps = CloudSampler::cropped(side, a.noise.params())?.sample(&mut rng::stream(rng::derive_seed(a.seed, 1), 0));
    let hw = a.mask.halfwidth();

    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut trajectories: [(&str, Vec<Grid>); 2] = [("white", Vec::new()), ("cloud", Vec::new())];
    for &t in &a.snapshots {
        let mut panels = Vec::new();
        for (name, eps) in [("white", &white_eps), ("cloud", &cloud_eps)] {
            let x_t = if t == 0 {
                x0.clone()
            } else {
                jump_with_noise(&x0, t, &schedule, eps.clone())?.x_t
            };
            let profile = radial_profile(&SpectralCovarianceDiag::periodogram(&x_t, hw))?;
            let f = fit_power_law(&profile)?;
            rows.extend(profile.iter().map(|p| NoisingRow {
                noise: name,
                t,
                log_k: p.log_k,
                log_gamma: p.log_gamma,
                masked: p.masked as u8,
            }));
            entries.push(json!({
                "noise": name,
                "t": t,
                "alpha_bar": schedule.alpha_bar(t)?,
                "theta": schedule.theta(t)?,
                "delta": f.delta,
                "A": f.amplitude,
                "r2": f.r2,
            }));
            let magnitude = Grid::from_vec(side, fft2_centered(&x_t).values().iter().map(|z| z.norm()).collect())?;
            panels.push(x_t.clone());
            panels.push(log10_map(&magnitude));
            let slot = trajectories.iter_mut().find(|(n, _)| *n == name).expect("known noise");
            slot.1.push(x_t);
        }
        let layout: Vec<(&Grid, ByteMapping)> = panels.iter().map(|g| (g, ByteMapping::of(g))).collect();
        save_png(&out.file(&format!("snapshot_{t:04}.png")), &panels_image(&layout))?;
    }
    for (name, grids) in &trajectories {
        write_raw(&out.file(&format!("{name}.cld")), grids)?;
    }
    out.write_csv("radial.csv", rows)?;
    let summary = json!({ "N": side, "snapshots": a.snapshots, "profiles": entries });
    out.write_json("noising.json", &summary)?;
    Ok(summary)
}

fn distance(a: &DistanceArgs, out: &mut OutDir) -> Result<Value, Failure> {
    let set = load_dataset(&a.dataset, a.limit)?;
    let (data, _, _) = normalize(&set)?;
    let side = data.side();
    let delta = match a.delta {
        Some(d) => d,
        None => stats::fit_ensemble(data.images(), a.mask.halfwidth())?.delta,
    };
    let metric = ReferenceMetric::new(side, delta)?;
    let white = white_noise_batch(side, rng::derive_seed(a.seed, 1), a.samples);
    let spec = NoiseSpec {
        delta,
        side,
        oversample: a.oversample,
        target_std: 1.0,
        seed: rng::derive_seed(a.seed, 2),
    };
    let cloud = if a.samples == 0 {
        Vec::new()
    } else {
        cloud_noise_batch(&spec, a.samples)?
    };
    let report = distance_report(&white, &cloud, data.images(), &metric, a.pairs, rng::derive_seed(a.seed, 3))?;
    out.write_json("distances.json", &report)?;
    Ok(serde_json::to_value(&report).expect("report serializes"))
}

fn clean(a: &CleanArgs, out: &mut OutDir) -> Result<Value, Failure> {
    let files = png_files(&a.input)?;
    let set: ImageSet = load_png_files(&files, a.input.display().to_string())?;
    let (_, report) = clean_letterbox(&set, a.band, a.tol)?;
    let rejected: Vec<usize> = report.reasons.iter().map(|r| r.index).collect();
    let mut kept_files = Vec::new();
    for (k, src) in files.iter().enumerate() {
        if rejected.contains(&k) {
            continue;
        }
        let name = src.file_name().expect("listed files have names").to_string_lossy().into_owned();
        let dst = out.file(&name);
        let same = matches!((fs::canonicalize(src), fs::canonicalize(&dst)), (Ok(x), Ok(y)) if x == y);
        if !same {
            fs::copy(src, &dst).map_err(|e| Error::io(&dst, e))?;
        }
        kept_files.push(name);
    }
    let rejected_files: Vec<Value> = report
        .reasons
        .iter()
        .map(|r| json!({ "file": files[r.index].file_name().map(|n| n.to_string_lossy()), "cause": r.cause }))
        .collect();
    let summary = json!({ "report": report, "kept_files": kept_files, "rejected_files": rejected_files });
    out.write_json("cleaning_report.json", &summary)?;
    Ok(summary)
}
