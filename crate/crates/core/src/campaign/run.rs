use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::analysis::{
    hierarchy_from_correlations, hierarchy_from_counts, CcdAccumulator, CcdCorrelation,
    CountRecord, SetAnalysis,
};
use crate::ccd::{expected_image, write_frames, Frame, FrameMetadata, FrameSampler, FrameStack};
use crate::error::{Error, Result};
use crate::hierarchy::Regime;
use crate::optics::{Interferometer, PhaseGrid};
use crate::seed::{derive_rng, derive_seed, rng_from_seed};
use crate::slits::{Entry, SlitConfiguration, MASK_SLITS};
use crate::spad::{
    merge_channels, read_timetags, simulate_config_run, split_channels, write_timetags, RunPlan,
    TimeTagFile, PS_PER_S,
};

const SEQUENCE_STREAM: u64 = u64::MAX;
const PERTURBATION_STREAM: u64 = 0;
const DETECTION_STREAM: u64 = 1;

pub fn regime_index(regime: Regime) -> u64 {
    match regime {
        Regime::Ideal => 0,
        Regime::PhotonCorrelation => 1,
        Regime::IntensityCorrelation => 2,
    }
}

/// Uniformly random order of the set entries.
pub fn randomize_sequence(template: &[Entry], seed: u64) -> Vec<Entry> {
    let mut v = template.to_vec();
    v.shuffle(&mut rng_from_seed(seed));
    v
}

/// Drift and misalignment drawn for one configuration visit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub entry: Entry,
    pub slot: usize,
    pub intensity_factor: f64,
    /// Amplitude factor `1 - |ε_j|` per slit; closed slits keep 1.
    pub attenuation: [f64; MASK_SLITS],
}

impl Visit {
    pub fn draw(
        config: &ExperimentConfig,
        regime: Regime,
        set: usize,
        slot: usize,
        entry: Entry,
    ) -> Visit {
        let mut rng = derive_rng(
            config.seed,
            &[
                regime_index(regime),
                set as u64,
                slot as u64,
                PERTURBATION_STREAM,
            ],
        );
        let xi: f64 = rng.sample(StandardNormal);
        let open = entry.open_slits();
        let mut attenuation = [1.0; MASK_SLITS];
        for (j, a) in attenuation.iter_mut().enumerate() {
            let eps: f64 = rng.sample(StandardNormal);
            if open.contains(j) {
                *a = 1.0 - (eps * config.imperfections.misalignment_sigma).abs();
            }
        }
        Visit {
            entry,
            slot,
            intensity_factor: (1.0 + xi * config.imperfections.drift_sigma).max(0.0),
            attenuation,
        }
    }

    pub fn apply(&self, setup: &Interferometer) -> Interferometer {
        let mut s = setup.clone();
        for (t, a) in s.source.transmissions.iter_mut().zip(&self.attenuation) {
            *t *= Complex64::new(*a, 0.0);
        }
        s
    }
}

/// Normalized RMS difference of two background-subtracted patterns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCheck {
    pub deviation: f64,
    pub threshold: f64,
    pub passed: bool,
}

pub fn alignment_check(first: &[f64], second: &[f64], threshold: f64) -> Result<AlignmentCheck> {
    if first.len() != second.len() || first.is_empty() {
        return Err(Error::GridMismatch(format!(
            "patterns of length {} and {}",
            first.len(),
            second.len()
        )));
    }
    let diff: f64 = first
        .iter()
        .zip(second)
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    let norm: f64 = first.iter().map(|a| a * a).sum();
    if norm == 0.0 {
        return Err(Error::ZeroDenominator {
            label: "ABCDE".into(),
        });
    }
    let deviation = (diff / norm).sqrt();
    Ok(AlignmentCheck {
        deviation,
        threshold,
        passed: deviation < threshold,
    })
}

/// Raw result of one entry.
#[derive(Debug, Clone, PartialEq)]
pub enum EntryData {
    Photon(CountRecord),
    Intensity(CcdCorrelation),
}

/// One analyzed measurement set.
#[derive(Debug, Clone, PartialEq)]
pub struct SetResult {
    pub regime: Regime,
    pub set_index: usize,
    pub visits: Vec<Visit>,
    pub analysis: SetAnalysis,
    pub alignment: AlignmentCheck,
    /// Coincidences (photon) or line-pair samples per column (intensity)
    /// summed over all entries.
    pub total_counts: f64,
}

/// Paths of raw files for one set.
pub fn raw_dir(root: &Path, regime: Regime, set: usize) -> PathBuf {
    root.join(format!("set_{set:04}")).join(regime.tag())
}

fn raw_file(dir: &Path, regime: Regime, entry: Entry) -> PathBuf {
    let ext = match regime {
        Regime::IntensityCorrelation => "frames",
        _ => "ttag",
    };
    dir.join(format!("{}.{ext}", entry.label()))
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    setup: Interferometer,
    reference_g1: f64,
    exposure: f64,
    raw: Option<PathBuf>,
}

fn simulate_entry(ctx: &Context, regime: Regime, set: usize, visit: &Visit) -> Result<EntryData> {
    let config = ctx.config;
    let seed = derive_seed(
        config.seed,
        &[
            regime_index(regime),
            set as u64,
            visit.slot as u64,
            DETECTION_STREAM,
        ],
    );
    let setup = visit.apply(&ctx.setup);
    let open = visit.entry.open_slits();
    match regime {
        Regime::PhotonCorrelation => {
            let p = &config.photon;
            let plan = RunPlan {
                config: open,
                phase: 0.0,
                duration_s: p.duration,
                peak_rate_hz: p.peak_rate,
                reference_g1: ctx.reference_g1,
                intensity_factor: visit.intensity_factor,
                seed,
            };
            let (a, b) = simulate_config_run(&plan, &setup, &p.detectors)?;
            if let Some(dir) = &ctx.raw {
                let file = TimeTagFile {
                    duration_ps: (p.duration * PS_PER_S).round() as u64,
                    tags: merge_channels(&a, &b),
                };
                write_timetags(&raw_file(dir, regime, visit.entry), &file)?;
            }
            Ok(EntryData::Photon(CountRecord::from_streams(
                open,
                &a,
                &b,
                p.duration,
                p.window_ps,
            )?))
        }
        Regime::IntensityCorrelation => {
            let i = &config.intensity;
            let crop = config.crop()?;
            let scale = ctx.exposure * visit.intensity_factor;
            let expected = expected_image(open, &setup, &i.ccd, &crop, scale)?;
            let sampler = FrameSampler::new(&expected, &i.ccd)?;
            let mut acc = CcdAccumulator::new(crop.cols as usize);
            let mut kept = Vec::new();
            let mut px = Vec::new();
            for k in 0..i.frames {
                sampler.sample_into(&mut derive_rng(seed, &[k as u64]), &mut px);
                acc.add_pixels(crop.cols, crop.rows, &px)?;
                if ctx.raw.is_some() {
                    kept.push(Frame::new(crop.cols, crop.rows, px.clone())?);
                }
            }
            if let Some(dir) = &ctx.raw {
                let label = visit.entry.label();
                let stack = FrameStack::new(label.clone(), seed, kept)?;
                let meta = FrameMetadata {
                    label,
                    seed,
                    frames: i.frames,
                    exposure_scale: scale,
                    crop,
                    ccd: i.ccd,
                    geometry: config.geometry,
                };
                write_frames(&raw_file(dir, regime, visit.entry), &stack, &meta)?;
            }
            Ok(EntryData::Intensity(acc.finish()?))
        }
        Regime::Ideal => Err(Error::InvalidInput(
            "the ideal regime has no detector".into(),
        )),
    }
}

/// Simulates and analyzes one randomized 33-entry set.
pub fn run_measurement_set(
    config: &ExperimentConfig,
    regime: Regime,
    set: usize,
    raw_root: Option<&Path>,
) -> Result<SetResult> {
    let setup = config.interferometer()?;
    let raw = match raw_root {
        Some(root) => {
            let dir = raw_dir(root, regime, set);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            Some(dir)
        }
        None => None,
    };
    let ctx = Context {
        config,
        reference_g1: setup.g1(SlitConfiguration::full_mask(), 0.0)?,
        exposure: match regime {
            Regime::IntensityCorrelation => config.exposure_scale()?,
            _ => 1.0,
        },
        setup,
        raw,
    };
    let sequence = randomize_sequence(
        &Entry::set_template(),
        derive_seed(
            config.seed,
            &[regime_index(regime), set as u64, SEQUENCE_STREAM],
        ),
    );
    let visits: Vec<Visit> = sequence
        .iter()
        .enumerate()
        .map(|(slot, &e)| Visit::draw(config, regime, set, slot, e))
        .collect();
    let data = visits
        .par_iter()
        .map(|v| simulate_entry(&ctx, regime, set, v).map_err(|e| e.in_entry(v.entry.label())))
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<(Entry, EntryData)> = visits.iter().map(|v| v.entry).zip(data).collect();
    let grid = analysis_grid(config, regime)?;
    let mut result = analyze_entries(&entries, regime, &grid, set, config.alignment_threshold)
        .map_err(|e| e.in_set(regime.tag(), set))?;
    result.visits = visits;
    Ok(result)
}

fn analysis_grid(config: &ExperimentConfig, regime: Regime) -> Result<PhaseGrid> {
    match regime {
        Regime::IntensityCorrelation => config
            .crop()?
            .phase_grid(&config.interferometer()?, &config.intensity.ccd),
        _ => PhaseGrid::single(0.0),
    }
}

/// Analysis of one set from per-entry data in any order.
pub fn analyze_entries(
    entries: &[(Entry, EntryData)],
    regime: Regime,
    grid: &PhaseGrid,
    set: usize,
    threshold: f64,
) -> Result<SetResult> {
    let find = |e: Entry| {
        entries
            .iter()
            .find(|(k, _)| *k == e)
            .map(|(_, d)| d)
            .ok_or_else(|| Error::MissingConfiguration { label: e.label() })
    };
    let first = find(Entry::Slits(SlitConfiguration::full_mask()))?;
    let second = find(Entry::SecondReference)?;
    let background = find(Entry::Background)?;
    let hierarchy_entries = entries.iter().filter(|(e, _)| *e != Entry::SecondReference);

    let (analysis, alignment, total_counts) = match regime {
        Regime::PhotonCorrelation => {
            let records: Vec<CountRecord> = hierarchy_entries
                .map(|(e, d)| match d {
                    EntryData::Photon(r) => Ok(CountRecord {
                        config: e.open_slits(),
                        ..*r
                    }),
                    _ => Err(Error::InvalidInput(format!("{e}: expected count data"))),
                })
                .collect::<Result<_>>()?;
            let rate = |d: &EntryData| match d {
                EntryData::Photon(r) => Ok(r.total_singles() as f64 / r.duration_s),
                _ => Err(Error::InvalidInput("expected count data".into())),
            };
            let bg = rate(background)?;
            let alignment =
                alignment_check(&[rate(first)? - bg], &[rate(second)? - bg], threshold)?;
            let total: u64 = records.iter().map(|r| r.coincidences).sum();
            (
                hierarchy_from_counts(&records, Some(set))?,
                alignment,
                total as f64,
            )
        }
        Regime::IntensityCorrelation => {
            let corr: Vec<(SlitConfiguration, CcdCorrelation)> = hierarchy_entries
                .map(|(e, d)| match d {
                    EntryData::Intensity(c) => Ok((e.open_slits(), c.clone())),
                    _ => Err(Error::InvalidInput(format!("{e}: expected frame data"))),
                })
                .collect::<Result<_>>()?;
            let g1 = |d: &EntryData| match d {
                EntryData::Intensity(c) => Ok(c.g1()),
                _ => Err(Error::InvalidInput("expected frame data".into())),
            };
            let bg = g1(background)?;
            let sub = |v: Vec<f64>| -> Vec<f64> { v.iter().zip(&bg).map(|(a, b)| a - b).collect() };
            let alignment = alignment_check(&sub(g1(first)?), &sub(g1(second)?), threshold)?;
            let total: u64 = corr.iter().map(|(_, c)| c.samples()).sum();
            (
                hierarchy_from_correlations(&corr, grid, Some(set))?,
                alignment,
                total as f64,
            )
        }
        Regime::Ideal => return Err(Error::InvalidInput("no data in the ideal regime".into())),
    };
    Ok(SetResult {
        regime,
        set_index: set,
        visits: Vec::new(),
        analysis,
        alignment,
        total_counts,
    })
}

/// Re-analyzes a set from raw files written by a simulation.
pub fn analyze_raw_set(
    root: &Path,
    regime: Regime,
    set: usize,
    config: &ExperimentConfig,
) -> Result<SetResult> {
    let dir = raw_dir(root, regime, set);
    let mut entries = Vec::with_capacity(33);
    let mut grid = None;
    for entry in Entry::set_template() {
        let path = raw_file(&dir, regime, entry);
        let data = match regime {
            Regime::IntensityCorrelation => {
                let (stack, meta) = crate::ccd::read_frames(&path)?;
                if grid.is_none() {
                    let mut setup = config.interferometer()?;
                    setup.geometry = meta.geometry;
                    grid = Some(meta.crop.phase_grid(&setup, &meta.ccd)?);
                }
                EntryData::Intensity(
                    crate::analysis::ccd_autocorrelation(&stack)
                        .map_err(|e| e.in_entry(entry.label()))?,
                )
            }
            _ => {
                let file = read_timetags(&path)?;
                let (a, b) = split_channels(&file.tags);
                EntryData::Photon(CountRecord::from_streams(
                    entry.open_slits(),
                    &a,
                    &b,
                    file.duration_ps as f64 / PS_PER_S,
                    config.photon.window_ps,
                )?)
            }
        };
        entries.push((entry, data));
    }
    let grid = match grid {
        Some(g) => g,
        None => PhaseGrid::single(0.0)?,
    };
    analyze_entries(&entries, regime, &grid, set, config.alignment_threshold)
        .map_err(|e| e.in_set(regime.tag(), set))
}
