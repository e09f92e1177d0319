use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ccd::{CcdModel, CropWindow};
use crate::error::{Error, Result};
use crate::hierarchy::Regime;
use crate::optics::{illumination_weights, Interferometer, MaskGeometry, SourceState};
use crate::spad::SpadModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeSelection {
    Photon,
    Intensity,
    Both,
}

impl RegimeSelection {
    pub fn regimes(self) -> Vec<Regime> {
        match self {
            RegimeSelection::Photon => vec![Regime::PhotonCorrelation],
            RegimeSelection::Intensity => vec![Regime::IntensityCorrelation],
            RegimeSelection::Both => {
                vec![Regime::PhotonCorrelation, Regime::IntensityCorrelation]
            }
        }
    }
}

impl std::str::FromStr for RegimeSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "photon" => Ok(RegimeSelection::Photon),
            "intensity" => Ok(RegimeSelection::Intensity),
            "both" => Ok(RegimeSelection::Both),
            _ => Err(Error::Config(format!("unknown regime {s:?}"))),
        }
    }
}

/// Laser beam at the mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    /// Gaussian `1/e` amplitude radius (m); `inf` gives flat illumination.
    pub radius: f64,
    /// Beam center relative to slit C (m).
    pub offset: f64,
    /// Include the single-slit diffraction envelope.
    pub envelope: bool,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            radius: 15e-3,
            offset: 0.0,
            envelope: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhotonSettings {
    /// Measurement time per configuration (s).
    pub duration: f64,
    /// Photon rate at the splitter for ABCDE at `δ = 0` (Hz).
    pub peak_rate: f64,
    /// Coincidence window `t_f` (ps).
    pub window_ps: u64,
    pub detectors: [SpadModel; 2],
}

impl Default for PhotonSettings {
    fn default() -> Self {
        PhotonSettings {
            duration: 10.0,
            peak_rate: 2.5e5,
            window_ps: 1000,
            detectors: [SpadModel::default(); 2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntensitySettings {
    /// Frames per configuration.
    pub frames: u32,
    /// Cropped rows (an even number uses every row in a line pair).
    pub rows: u32,
    /// Cropped columns, centered on `δ = 0`.
    pub cols: u32,
    /// Exposure scale; `None` calibrates the full-mask peak to 90% full well.
    pub exposure_scale: Option<f64>,
    pub ccd: CcdModel,
}

impl Default for IntensitySettings {
    fn default() -> Self {
        IntensitySettings {
            frames: 25,
            rows: 40,
            cols: 1001,
            exposure_scale: None,
            ccd: CcdModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Imperfections {
    /// Relative standard deviation of the intensity per configuration visit.
    pub drift_sigma: f64,
    /// Standard deviation of the per-slit amplitude loss per visit.
    pub misalignment_sigma: f64,
}

impl Default for Imperfections {
    fn default() -> Self {
        Imperfections {
            drift_sigma: 1e-4,
            misalignment_sigma: 2.5e-3,
        }
    }
}

impl Imperfections {
    pub fn none() -> Self {
        Imperfections {
            drift_sigma: 0.0,
            misalignment_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub regime: RegimeSelection,
    pub sets: usize,
    pub seed: u64,
    /// Maximum relative deviation between the two ABCDE patterns of a set.
    pub alignment_threshold: f64,
    pub geometry: MaskGeometry,
    pub beam: BeamConfig,
    pub photon: PhotonSettings,
    pub intensity: IntensitySettings,
    pub imperfections: Imperfections,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            regime: RegimeSelection::Both,
            sets: 100,
            seed: 20_230_615,
            alignment_threshold: 1e-2,
            geometry: MaskGeometry::default(),
            beam: BeamConfig::default(),
            photon: PhotonSettings::default(),
            intensity: IntensitySettings::default(),
            imperfections: Imperfections::default(),
        }
    }
}

impl ExperimentConfig {
    /// Settings sized so a 100-set campaign finishes in minutes.
    pub fn desk() -> Self {
        Self::default()
    }

    /// Statistics of the original experiment: 120 s per configuration and
    /// 250 frames of 850 rows.
    pub fn paper_scale() -> Self {
        let mut c = Self::default();
        c.photon.duration = 120.0;
        c.intensity.frames = 250;
        c.intensity.rows = 850;
        c
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sets == 0 {
            return Err(Error::Config("a campaign needs at least one set".into()));
        }
        let imp = &self.imperfections;
        if !(imp.drift_sigma >= 0.0 && imp.misalignment_sigma >= 0.0) {
            return Err(Error::Config("imperfection sigmas must be >= 0".into()));
        }
        if !(self.alignment_threshold > 0.0) {
            return Err(Error::Config("alignment threshold must be positive".into()));
        }
        if !(self.photon.duration > 0.0 && self.photon.peak_rate > 0.0) {
            return Err(Error::Config(
                "photon duration and rate must be positive".into(),
            ));
        }
        for d in &self.photon.detectors {
            d.validate()?;
        }
        let i = &self.intensity;
        if i.frames == 0 || i.rows < 2 {
            return Err(Error::Config(
                "intensity runs need frames and two rows".into(),
            ));
        }
        if let Some(s) = i.exposure_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config("exposure scale must be positive".into()));
            }
        }
        self.crop()?;
        self.interferometer()?;
        Ok(())
    }

    /// Unperturbed setup: geometry, beam profile and envelope.
    pub fn interferometer(&self) -> Result<Interferometer> {
        let weights = illumination_weights(self.beam.radius, self.beam.offset, &self.geometry)?;
        Interferometer::new(
            self.geometry,
            SourceState::coherent(1.0).with_weights(weights),
            self.beam.envelope,
        )
    }

    pub fn crop(&self) -> Result<CropWindow> {
        CropWindow::centered(
            &self.intensity.ccd,
            self.intensity.rows,
            self.intensity.cols,
        )
    }

    pub fn exposure_scale(&self) -> Result<f64> {
        match self.intensity.exposure_scale {
            Some(s) => Ok(s),
            None => self
                .intensity
                .ccd
                .calibrated_exposure(&self.interferometer()?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_defaults() {
        let c = ExperimentConfig::paper_scale();
        let text = c.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), c);
        let partial = ExperimentConfig::from_toml("sets = 3\n[photon]\nduration = 2.0\n").unwrap();
        assert_eq!(partial.sets, 3);
        assert_eq!(partial.photon.duration, 2.0);
        assert_eq!(partial.photon.window_ps, 1000);
        assert!(ExperimentConfig::from_toml("sets = 0").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("regime = \"photon\"").is_ok());
    }

    #[test]
    fn beam_is_nearly_flat() {
        let c = ExperimentConfig::default();
        let w = c.interferometer().unwrap().source.weights;
        let min = w.iter().cloned().fold(1.0, f64::min);
        assert!(min * min > 0.99);
    }
}
