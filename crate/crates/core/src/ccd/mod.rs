//! Intensity chain: expected far-field images and noisy 14-bit CCD frames.
//!
//! The vertical structure of the pattern is flat inside the crop window, so
//! an expected image is stored as one horizontal profile shared by all
//! cropped rows.

mod frames;

pub use frames::{read_frames, write_frames, FrameMetadata};

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{phase_at_pixel, Interferometer, PhaseGrid};
use crate::seed::derive_rng;
use crate::slits::SlitConfiguration;

/// Above this mean the photoelectron count is drawn from the normal
/// approximation of the Poisson distribution.
pub const GAUSSIAN_THRESHOLD: f64 = 1000.0;

/// Fraction of full well used by the brightest pattern.
pub const PEAK_FILL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcdModel {
    pub width: u32,
    pub height: u32,
    /// Pixel pitch (m).
    pub pixel_size: f64,
    pub bit_depth: u32,
    pub quantum_efficiency: f64,
    /// Read noise (electrons RMS).
    pub read_noise: f64,
    /// Electrons per count.
    pub gain: f64,
    /// Dark offset (counts).
    pub dark_offset: f64,
    /// Integration time `t_i` (s).
    pub integration_time: f64,
}

impl Default for CcdModel {
    fn default() -> Self {
        CcdModel {
            width: 1392,
            height: 1040,
            pixel_size: 6.45e-6,
            bit_depth: 14,
            quantum_efficiency: 0.40,
            read_noise: 5.0,
            gain: 1.0,
            dark_offset: 20.0,
            integration_time: 2e-3,
        }
    }
}

impl CcdModel {
    pub fn max_count(&self) -> u16 {
        ((1u32 << self.bit_depth) - 1) as u16
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput("sensor must have pixels".into()));
        }
        if !(1..=16).contains(&self.bit_depth) {
            return Err(Error::InvalidInput(format!(
                "bit depth {} outside 1..=16",
                self.bit_depth
            )));
        }
        if !(self.pixel_size > 0.0 && self.pixel_size.is_finite()) {
            return Err(Error::InvalidInput("pixel size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(Error::InvalidInput(
                "quantum efficiency outside [0, 1]".into(),
            ));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::InvalidInput("gain must be positive".into()));
        }
        if !(self.read_noise >= 0.0 && self.dark_offset >= 0.0) {
            return Err(Error::InvalidInput("noise parameters must be >= 0".into()));
        }
        if !(self.integration_time > 0.0 && self.integration_time.is_finite()) {
            return Err(Error::InvalidInput(
                "integration time must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Exposure scale that puts the peak of `setup`'s full-mask pattern at
    /// `PEAK_FILL` of the full well.
    pub fn calibrated_exposure(&self, setup: &Interferometer) -> Result<f64> {
        self.validate()?;
        let peak = setup.g1(SlitConfiguration::full_mask(), 0.0)?;
        let electrons = PEAK_FILL * self.max_count() as f64 * self.gain;
        Ok(electrons / (self.quantum_efficiency * self.integration_time * peak))
    }
}

/// Region of the sensor used for analysis, plus the column at `δ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropWindow {
    pub row_start: u32,
    pub rows: u32,
    pub col_start: u32,
    pub cols: u32,
    pub center_col: u32,
}

impl CropWindow {
    /// `rows` central rows and `cols` columns centered on the sensor middle.
    pub fn centered(ccd: &CcdModel, rows: u32, cols: u32) -> Result<Self> {
        if rows > ccd.height || cols > ccd.width {
            return Err(Error::InvalidInput(format!(
                "crop {rows}x{cols} larger than sensor {}x{}",
                ccd.height, ccd.width
            )));
        }
        let center_col = ccd.width / 2;
        let crop = CropWindow {
            row_start: (ccd.height - rows) / 2,
            rows,
            col_start: center_col.saturating_sub(cols / 2),
            cols,
            center_col,
        };
        crop.validate(ccd)?;
        Ok(crop)
    }

    /// 850 rows by 1001 columns around the sensor center.
    pub fn full_statistics(ccd: &CcdModel) -> Result<Self> {
        Self::centered(ccd, 850, 1001)
    }

    pub fn validate(&self, ccd: &CcdModel) -> Result<()> {
        let fits = self.rows > 0
            && self.cols > 0
            && self.row_start as u64 + self.rows as u64 <= ccd.height as u64
            && self.col_start as u64 + self.cols as u64 <= ccd.width as u64
            && self.center_col < ccd.width;
        if fits {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "crop window {self:?} outside the {}x{} sensor",
                ccd.height, ccd.width
            )))
        }
    }

    pub fn line_pairs(&self) -> u32 {
        self.rows / 2
    }

    /// Optical phase of every cropped column.
    pub fn phases(&self, setup: &Interferometer, ccd: &CcdModel) -> Result<Vec<f64>> {
        (0..self.cols)
            .map(|c| {
                let p = (self.col_start + c) as i64 - self.center_col as i64;
                phase_at_pixel(p, &setup.geometry, ccd.pixel_size)
            })
            .collect()
    }

    pub fn phase_grid(&self, setup: &Interferometer, ccd: &CcdModel) -> Result<PhaseGrid> {
        PhaseGrid::new(self.phases(setup, ccd)?)
    }
}

/// Mean photoelectrons per pixel inside a crop window.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedImage {
    pub rows: u32,
    /// One value per cropped column.
    pub profile: Vec<f64>,
}

impl ExpectedImage {
    pub fn cols(&self) -> usize {
        self.profile.len()
    }

    pub fn at(&self, row: u32, col: usize) -> f64 {
        debug_assert!(row < self.rows);
        self.profile[col]
    }

    pub fn peak(&self) -> f64 {
        self.profile.iter().cloned().fold(0.0, f64::max)
    }
}

/// `η · scale · t_i · G^(1)_S(δ_p)` at every cropped pixel.
pub fn expected_image(
    config: SlitConfiguration,
    setup: &Interferometer,
    ccd: &CcdModel,
    crop: &CropWindow,
    exposure_scale: f64,
) -> Result<ExpectedImage> {
    ccd.validate()?;
    crop.validate(ccd)?;
    if !(exposure_scale > 0.0 && exposure_scale.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "exposure scale {exposure_scale} must be positive"
        )));
    }
    let factor = ccd.quantum_efficiency * exposure_scale * ccd.integration_time;
    let profile = if config.is_empty() {
        vec![0.0; crop.cols as usize]
    } else {
        crop.phases(setup, ccd)?
            .into_iter()
            .map(|d| Ok(factor * setup.g1(config, d)?))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(ExpectedImage {
        rows: crop.rows,
        profile,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    /// Row-major counts.
    pub pixels: Vec<u16>,
}

impl Frame {
    pub fn new(width: u32, height: u32, pixels: Vec<u16>) -> Result<Self> {
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidInput(format!(
                "{} pixels do not fill a {width}x{height} frame",
                pixels.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            pixels,
        })
    }

    pub fn row(&self, r: u32) -> &[u16] {
        let w = self.width as usize;
        &self.pixels[r as usize * w..(r as usize + 1) * w]
    }

    pub fn get(&self, r: u32, c: u32) -> u16 {
        self.pixels[r as usize * self.width as usize + c as usize]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&p| p as f64).sum::<f64>() / self.pixels.len() as f64
    }
}

/// Frames of one configuration that share dimensions and metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    pub label: String,
    pub seed: u64,
    pub frames: Vec<Frame>,
}

impl FrameStack {
    pub fn new(label: impl Into<String>, seed: u64, frames: Vec<Frame>) -> Result<Self> {
        if let Some(first) = frames.first() {
            if frames
                .iter()
                .any(|f| f.width != first.width || f.height != first.height)
            {
                return Err(Error::InvalidInput("frames differ in size".into()));
            }
        }
        Ok(FrameStack {
            label: label.into(),
            seed,
            frames,
        })
    }

    pub fn width(&self) -> u32 {
        self.frames.first().map_or(0, |f| f.width)
    }

    pub fn height(&self) -> u32 {
        self.frames.first().map_or(0, |f| f.height)
    }
}

/// Per-column photoelectron samplers for one expected profile.
#[derive(Debug, Clone)]
pub struct FrameSampler {
    ccd: CcdModel,
    rows: u32,
    columns: Vec<ColumnSampler>,
}

#[derive(Debug, Clone)]
enum ColumnSampler {
    Zero,
    Exact(Poisson<f64>),
    /// Mean and standard deviation of electrons including read noise.
    Normal(f64, f64),
}

impl FrameSampler {
    pub fn new(expected: &ExpectedImage, ccd: &CcdModel) -> Result<Self> {
        ccd.validate()?;
        let columns = expected
            .profile
            .iter()
            .map(|&lambda| {
                if !(lambda >= 0.0 && lambda.is_finite()) {
                    Err(Error::InvalidInput(format!(
                        "expected electrons {lambda} invalid"
                    )))
                } else if lambda == 0.0 {
                    Ok(ColumnSampler::Zero)
                } else if lambda < GAUSSIAN_THRESHOLD {
                    Poisson::new(lambda)
                        .map(ColumnSampler::Exact)
                        .map_err(|e| Error::InvalidInput(e.to_string()))
                } else {
                    let sd = (lambda + ccd.read_noise * ccd.read_noise).sqrt();
                    Ok(ColumnSampler::Normal(lambda, sd))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameSampler {
            ccd: *ccd,
            rows: expected.rows,
            columns,
        })
    }

    pub fn cols(&self) -> u32 {
        self.columns.len() as u32
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    /// Fills `out` (row-major, `rows × cols`) with one noisy frame.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<u16>) {
        let max = self.ccd.max_count() as f64;
        let (gain, offset, read) = (self.ccd.gain, self.ccd.dark_offset, self.ccd.read_noise);
        out.clear();
        out.reserve(self.rows as usize * self.columns.len());
        for _ in 0..self.rows {
            for col in &self.columns {
                let electrons = match col {
                    ColumnSampler::Zero => read_noise(rng, read),
                    ColumnSampler::Exact(p) => p.sample(rng) + read_noise(rng, read),
                    ColumnSampler::Normal(m, sd) => {
                        let z: f64 = rng.sample(StandardNormal);
                        m + sd * z
                    }
                };
                let counts = (electrons / gain).round() + offset;
                out.push(counts.clamp(0.0, max) as u16);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Frame {
        let mut px = Vec::new();
        self.sample_into(rng, &mut px);
        Frame {
            width: self.cols(),
            height: self.rows,
            pixels: px,
        }
    }
}

fn read_noise<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        sigma * z
    } else {
        0.0
    }
}

/// One frame with shot noise, read noise, quantization and 14-bit clipping.
pub fn sample_frame(expected: &ExpectedImage, ccd: &CcdModel, seed: u64) -> Result<Frame> {
    let sampler = FrameSampler::new(expected, ccd)?;
    Ok(sampler.sample(&mut derive_rng(seed, &[0])))
}

/// `count` frames; frame `k` uses the child seed `(seed, k)`.
pub fn sample_stack(
    label: impl Into<String>,
    expected: &ExpectedImage,
    ccd: &CcdModel,
    count: u32,
    seed: u64,
) -> Result<FrameStack> {
    let sampler = FrameSampler::new(expected, ccd)?;
    let frames = (0..count)
        .map(|k| sampler.sample(&mut derive_rng(seed, &[k as u64])))
        .collect();
    FrameStack::new(label, seed, frames)
}
