//! Mask geometry and ideal far-field correlation functions.
//!
//! Slit `j` (A = 0, ..., E = 4) contributes the phase factor `exp(i j δ)`,
//! where `δ = k d sin θ` is the optical phase between adjacent slits. The
//! single-slit diffraction factor `sinc(a δ / 2d)` multiplies the whole
//! amplitude. `G^(1)_S(δ) = |A_S(δ)|²` with the overall proportionality
//! constant fixed to one.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gtable::GTable;
use crate::slits::{SlitConfiguration, MASK_SLITS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskGeometry {
    /// Wavelength (m).
    pub wavelength: f64,
    /// Distance between adjacent slits `d` (m).
    pub slit_pitch: f64,
    /// Slit width `a` (m).
    pub slit_width: f64,
    /// Slit height `b` (m).
    pub slit_height: f64,
    /// Radius `r` of the holes in the blocking mask (m).
    pub hole_radius: f64,
    /// Spacing `Δ` between configurations on the blocking mask (m).
    pub configuration_spacing: f64,
    /// Distance between blocking and base mask `L21` (m).
    pub mask_separation: f64,
    /// Distance from the base mask to the detector `L` (m).
    pub detector_distance: f64,
}

impl Default for MaskGeometry {
    fn default() -> Self {
        MaskGeometry {
            wavelength: 633e-9,
            slit_pitch: 500e-6,
            slit_width: 25e-6,
            slit_height: 200e-6,
            hole_radius: 200e-6,
            configuration_spacing: 1000e-6,
            mask_separation: 1e-3,
            detector_distance: 1.7,
        }
    }
}

impl MaskGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("wavelength", self.wavelength),
            ("slit_pitch", self.slit_pitch),
            ("slit_width", self.slit_width),
            ("slit_height", self.slit_height),
            ("hole_radius", self.hole_radius),
            ("configuration_spacing", self.configuration_spacing),
            ("mask_separation", self.mask_separation),
            ("detector_distance", self.detector_distance),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "geometry: {name} must be finite and positive, got {v}"
                )));
            }
        }
        if self.slit_width >= self.slit_pitch {
            return Err(Error::InvalidInput(format!(
                "geometry: slit width {} must be smaller than the pitch {}",
                self.slit_width, self.slit_pitch
            )));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Position of slit `j` relative to slit A (m).
    pub fn slit_position(&self, j: usize) -> f64 {
        j as f64 * self.slit_pitch
    }

    /// `a b / (L λ)`; far-field detection requires this to be small.
    pub fn detection_fresnel_number(&self) -> Result<f64> {
        fresnel_number(
            self.slit_width * self.slit_height,
            self.detector_distance,
            self.wavelength,
        )
    }

    /// `r² / (L21 λ)` with `r` the blocking-hole radius, evaluated as written.
    pub fn blocking_fresnel_number(&self) -> Result<f64> {
        fresnel_number(
            self.hole_radius * self.hole_radius,
            self.mask_separation,
            self.wavelength,
        )
    }

    /// The same ratio with the hole diameter `2r` in place of `r`.
    ///
    /// With the default geometry this is the parameterization that yields
    /// a value just above 252; the radius form yields a quarter of that.
    pub fn blocking_fresnel_number_diameter(&self) -> Result<f64> {
        let diameter = 2.0 * self.hole_radius;
        fresnel_number(diameter * diameter, self.mask_separation, self.wavelength)
    }

    /// Detector pixels per `2π` of optical phase: `λ L / (d d_pixel)`.
    pub fn pixels_per_period(&self, pixel_size: f64) -> f64 {
        self.wavelength * self.detector_distance / (self.slit_pitch * pixel_size)
    }
}

/// Optical phase `δ_p = (2π/λ) d (p d_pixel) / L` accumulated at pixel `p`,
/// counted from the reference pixel at `δ = 0`.
pub fn phase_at_pixel(pixel: i64, geometry: &MaskGeometry, pixel_size: f64) -> Result<f64> {
    geometry.validate()?;
    if !(pixel_size.is_finite() && pixel_size > 0.0) {
        return Err(Error::InvalidInput(format!(
            "pixel size {pixel_size} must be positive"
        )));
    }
    Ok(
        geometry.wavenumber() * geometry.slit_pitch * (pixel as f64 * pixel_size)
            / geometry.detector_distance,
    )
}

/// Fresnel number `area / (distance λ)`.
pub fn fresnel_number(area: f64, distance: f64, wavelength: f64) -> Result<f64> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "distance {distance} must be positive"
        )));
    }
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::InvalidInput(format!(
            "wavelength {wavelength} must be positive"
        )));
    }
    if !(area.is_finite() && area >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "area {area} must be nonnegative"
        )));
    }
    Ok(area / (distance * wavelength))
}

/// Gaussian amplitude weights `exp(-x²/w²)` at each slit, normalized to a
/// maximum of one. `beam_offset` is the beam center measured from slit C.
/// An infinite `beam_radius` gives flat illumination.
pub fn illumination_weights(
    beam_radius: f64,
    beam_offset: f64,
    geometry: &MaskGeometry,
) -> Result<[f64; MASK_SLITS]> {
    if !(beam_radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "beam radius {beam_radius} must be positive"
        )));
    }
    if !beam_offset.is_finite() {
        return Err(Error::InvalidInput("beam offset must be finite".into()));
    }
    if beam_radius.is_infinite() {
        return Ok([1.0; MASK_SLITS]);
    }
    let center = geometry.slit_position(MASK_SLITS / 2) + beam_offset;
    let mut w = [0.0; MASK_SLITS];
    for (j, wj) in w.iter_mut().enumerate() {
        let x = (geometry.slit_position(j) - center) / beam_radius;
        *wj = (-x * x).exp();
    }
    let max = w.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::InvalidInput("beam misses every slit".into()));
    }
    w.iter_mut().for_each(|v| *v /= max);
    Ok(w)
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Single-slit amplitude factor `sinc(a δ / 2d)`.
pub fn envelope(delta: f64, geometry: &MaskGeometry) -> f64 {
    sinc(geometry.slit_width * delta / (2.0 * geometry.slit_pitch))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Coherent {
        mean_photon_number: f64,
    },
    /// `m` photons coherently distributed over the slits from one mode.
    Fock {
        photons: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    pub kind: SourceKind,
    /// Complex amplitude transmission of each slit, `|t_j| <= 1`.
    pub transmissions: [Complex64; MASK_SLITS],
    /// Real positive illumination amplitude at each slit.
    pub weights: [f64; MASK_SLITS],
}

impl SourceState {
    pub fn coherent(mean_photon_number: f64) -> Self {
        SourceState {
            kind: SourceKind::Coherent { mean_photon_number },
            transmissions: [Complex64::new(1.0, 0.0); MASK_SLITS],
            weights: [1.0; MASK_SLITS],
        }
    }

    pub fn fock(photons: u32) -> Self {
        SourceState {
            kind: SourceKind::Fock { photons },
            ..SourceState::coherent(0.0)
        }
    }

    pub fn with_weights(mut self, weights: [f64; MASK_SLITS]) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_transmissions(mut self, transmissions: [Complex64; MASK_SLITS]) -> Self {
        self.transmissions = transmissions;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SourceKind::Coherent { mean_photon_number } => {
                if !(mean_photon_number.is_finite() && mean_photon_number >= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "mean photon number {mean_photon_number} must be >= 0"
                    )));
                }
            }
            SourceKind::Fock { photons } => {
                if !(1..=2).contains(&photons) {
                    return Err(Error::InvalidInput(format!(
                        "postselected Fock states support 1 or 2 photons, got {photons}"
                    )));
                }
            }
        }
        if self
            .transmissions
            .iter()
            .any(|t| !(t.norm() <= 1.0 + 1e-12))
        {
            return Err(Error::InvalidInput(
                "slit transmissions must satisfy |t| <= 1".into(),
            ));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput(
                "illumination weights must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Poisson probability `p_n` of the `n`-photon component.
    pub fn photon_number_probability(&self, n: u32) -> f64 {
        match self.kind {
            SourceKind::Coherent {
                mean_photon_number: nbar,
            } => {
                let log_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
                (n as f64 * nbar.ln() - nbar - log_fact).exp()
            }
            SourceKind::Fock { photons } => {
                if n == photons {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Ordered sample phases (radians).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    values: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("phase grid must not be empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "phase grid values must be finite".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "phase grid must be strictly increasing".into(),
            ));
        }
        Ok(PhaseGrid { values })
    }

    /// `n` evenly spaced phases from `min` to `max` inclusive. A symmetric
    /// range with odd `n` contains `0.0` exactly at its center.
    pub fn uniform(min: f64, max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(max > min) {
            return Err(Error::InvalidInput(format!(
                "uniform grid needs n >= 2 and max > min (n = {n}, [{min}, {max}])"
            )));
        }
        let last = (n - 1) as f64;
        let values = if min == -max {
            (0..n)
                .map(|i| max * ((2 * i) as f64 - last) / last)
                .collect()
        } else {
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        max
                    } else {
                        min + (max - min) * i as f64 / last
                    }
                })
                .collect()
        };
        PhaseGrid::new(values)
    }

    pub fn single(delta: f64) -> Result<Self> {
        PhaseGrid::new(vec![delta])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the exact `δ = 0` sample, if present.
    pub fn zero_index(&self) -> Option<usize> {
        self.values.iter().position(|&v| v == 0.0)
    }
}

/// Geometry plus source: everything needed to evaluate ideal amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Interferometer {
    pub geometry: MaskGeometry,
    pub source: SourceState,
    pub use_envelope: bool,
}

impl Interferometer {
    pub fn new(geometry: MaskGeometry, source: SourceState, use_envelope: bool) -> Result<Self> {
        geometry.validate()?;
        source.validate()?;
        Ok(Interferometer {
            geometry,
            source,
            use_envelope,
        })
    }

    /// Unit weights and transmissions, no envelope: `A_S(δ) = Σ_{j∈S} e^{ijδ}`.
    pub fn ideal() -> Self {
        Interferometer {
            geometry: MaskGeometry::default(),
            source: SourceState::coherent(1.0),
            use_envelope: false,
        }
    }

    fn check_config(&self, config: SlitConfiguration) -> Result<()> {
        if config.is_empty() {
            return Err(Error::EmptyConfiguration);
        }
        if config.span() > MASK_SLITS {
            return Err(Error::InvalidInput(format!(
                "configuration {config} uses slits beyond the {MASK_SLITS}-slit mask"
            )));
        }
        Ok(())
    }

    /// Far-field amplitude `A_S(δ)` of the open slits.
    pub fn amplitude(&self, config: SlitConfiguration, delta: f64) -> Result<Complex64> {
        self.check_config(config)?;
        let sum: Complex64 = config
            .slits()
            .map(|j| {
                self.source.transmissions[j]
                    * self.source.weights[j]
                    * Complex64::from_polar(1.0, j as f64 * delta)
            })
            .sum();
        Ok(if self.use_envelope {
            sum * envelope(delta, &self.geometry)
        } else {
            sum
        })
    }

    /// First-order correlation `G^(1)_S(δ) = |A_S(δ)|²`.
    pub fn g1(&self, config: SlitConfiguration, delta: f64) -> Result<f64> {
        Ok(self.amplitude(config, delta)?.norm_sqr())
    }

    /// `G^(M)_S(δ_1, ..., δ_M) = Π_i G^(1)_S(δ_i)`.
    ///
    /// An `m`-photon Fock input has no correlations beyond order `m`, so the
    /// product is replaced by zero there.
    pub fn gm_product(&self, config: SlitConfiguration, deltas: &[f64]) -> Result<f64> {
        if deltas.is_empty() {
            return Err(Error::InvalidInput(
                "correlation order M must be >= 1".into(),
            ));
        }
        self.check_config(config)?;
        if let SourceKind::Fock { photons } = self.source.kind {
            if deltas.len() > photons as usize {
                return Ok(0.0);
            }
        }
        deltas
            .iter()
            .try_fold(1.0, |acc, &d| Ok(acc * self.g1(config, d)?))
    }

    /// Autocorrelation `G^(M)_S(δ, ..., δ)`.
    pub fn gm_auto(&self, config: SlitConfiguration, order: u32, delta: f64) -> Result<f64> {
        let deltas = vec![delta; order as usize];
        self.gm_product(config, &deltas)
    }

    /// Table of `G^(M)` on `grid` for every nonempty subset of the mask.
    pub fn gtable(&self, order: u32, grid: &PhaseGrid) -> Result<GTable> {
        let mut table = GTable::new(order, grid.clone())?;
        for config in SlitConfiguration::full_mask().nonempty_subsets() {
            let values = grid
                .values()
                .iter()
                .map(|&d| self.gm_auto(config, order, d))
                .collect::<Result<Vec<_>>>()?;
            table.insert(config, values)?;
        }
        Ok(table)
    }
}
