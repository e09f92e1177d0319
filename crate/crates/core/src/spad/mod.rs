//! Photon-counting chain: Poisson photon streams, a 50:50 fiber splitter and
//! two single-photon avalanche diodes.
//!
//! Timestamps are integer picoseconds from the start of a run. For coherent
//! light the two detectors see independent Poisson processes, so the
//! coincidences between them reproduce the factorized `G^(2)`.

mod ttag;

pub use ttag::{
    merge_channels, read_timetags, split_channels, write_timetags, TimeTag, TimeTagFile,
};

use rand::{Rng, RngCore};
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::Interferometer;
use crate::seed::{derive_rng, rng_from_seed};
use crate::slits::SlitConfiguration;

pub const PS_PER_S: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpadModel {
    pub efficiency: f64,
    pub dead_time_ps: u64,
    pub dark_rate_hz: f64,
    /// Gaussian timing jitter per channel (ps RMS).
    pub jitter_ps: f64,
}

impl Default for SpadModel {
    fn default() -> Self {
        SpadModel {
            efficiency: 0.40,
            dead_time_ps: 77,
            dark_rate_hz: 25.0,
            jitter_ps: 45.0,
        }
    }
}

impl SpadModel {
    /// A detector that records every photon exactly.
    pub fn perfect() -> Self {
        SpadModel {
            efficiency: 1.0,
            dead_time_ps: 0,
            dark_rate_hz: 0.0,
            jitter_ps: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidInput(format!(
                "SPAD efficiency {} outside [0, 1]",
                self.efficiency
            )));
        }
        if !(self.dark_rate_hz.is_finite() && self.dark_rate_hz >= 0.0) {
            return Err(Error::InvalidInput("dark count rate must be >= 0".into()));
        }
        if !(self.jitter_ps.is_finite() && self.jitter_ps >= 0.0) {
            return Err(Error::InvalidInput("timing jitter must be >= 0".into()));
        }
        Ok(())
    }
}

/// One configuration run in the photon-counting regime.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub config: SlitConfiguration,
    /// Detection phase of the collection fiber (rad).
    pub phase: f64,
    pub duration_s: f64,
    /// Photon rate at the splitter for the brightest configuration at `δ = 0` (Hz).
    pub peak_rate_hz: f64,
    /// `G^(1)` that corresponds to `peak_rate_hz`.
    pub reference_g1: f64,
    /// Multiplicative intensity factor for this run (laser drift).
    pub intensity_factor: f64,
    pub seed: u64,
}

impl RunPlan {
    /// A run normalized to the full mask at `δ = 0` of `setup`.
    pub fn new(
        config: SlitConfiguration,
        setup: &Interferometer,
        duration_s: f64,
        peak_rate_hz: f64,
        seed: u64,
    ) -> Result<Self> {
        Ok(RunPlan {
            config,
            phase: 0.0,
            duration_s,
            peak_rate_hz,
            reference_g1: setup.g1(SlitConfiguration::full_mask(), 0.0)?,
            intensity_factor: 1.0,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::InvalidInput(format!(
                "run duration {} must be positive",
                self.duration_s
            )));
        }
        if !(self.peak_rate_hz.is_finite() && self.peak_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "peak rate {} must be positive",
                self.peak_rate_hz
            )));
        }
        if !(self.reference_g1 > 0.0 && self.intensity_factor >= 0.0) {
            return Err(Error::InvalidInput("bad rate normalization".into()));
        }
        Ok(())
    }

    /// Photon rate at the splitter input for `setup` (Hz).
    pub fn photon_rate(&self, setup: &Interferometer) -> Result<f64> {
        if self.config.is_empty() {
            return Ok(0.0);
        }
        let g = setup.g1(self.config, self.phase)?;
        Ok(self.peak_rate_hz * self.intensity_factor * g / self.reference_g1)
    }
}

/// Homogeneous Poisson arrival times in `[0, duration)`, sorted.
pub fn simulate_poisson_stream(rate_hz: f64, duration_s: f64, seed: u64) -> Vec<u64> {
    poisson_stream(rate_hz, duration_s, &mut rng_from_seed(seed))
}

pub fn poisson_stream<R: Rng + ?Sized>(rate_hz: f64, duration_s: f64, rng: &mut R) -> Vec<u64> {
    if !(rate_hz > 0.0 && duration_s > 0.0) {
        return Vec::new();
    }
    let mean_gap = PS_PER_S / rate_hz;
    let end = duration_s * PS_PER_S;
    let expected = rate_hz * duration_s;
    let mut out = Vec::with_capacity((expected + 6.0 * expected.sqrt() + 16.0) as usize);
    let mut t = 0.0f64;
    loop {
        let gap: f64 = rng.sample(Exp1);
        t += gap * mean_gap;
        if t >= end {
            break;
        }
        out.push(t as u64);
    }
    out
}

/// Passes a photon stream through one detector: efficiency thinning, dark
/// counts, timing jitter and a non-paralyzable dead time.
pub fn apply_spad_model(stream: &[u64], model: &SpadModel, duration_s: f64, seed: u64) -> Vec<u64> {
    apply_spad_model_with(stream, model, duration_s, &mut rng_from_seed(seed))
}

pub fn apply_spad_model_with<R: Rng + ?Sized>(
    stream: &[u64],
    model: &SpadModel,
    duration_s: f64,
    rng: &mut R,
) -> Vec<u64> {
    let mut tags: Vec<u64> = if model.efficiency >= 1.0 {
        stream.to_vec()
    } else if model.efficiency <= 0.0 {
        Vec::new()
    } else {
        stream
            .iter()
            .copied()
            .filter(|_| rng.random_bool(model.efficiency))
            .collect()
    };

    if model.dark_rate_hz > 0.0 {
        let dark = poisson_stream(model.dark_rate_hz, duration_s, rng);
        if !dark.is_empty() {
            tags = merge_sorted(&tags, &dark);
        }
    }

    if model.jitter_ps > 0.0 {
        for t in tags.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *t = (*t as f64 + z * model.jitter_ps).round().max(0.0) as u64;
        }
        sort_nearly_sorted(&mut tags);
    }

    dead_time_filter(&mut tags, model.dead_time_ps);
    tags
}

/// Insertion sort for streams with few, short-range inversions (jitter much
/// smaller than the mean gap); falls back to a full sort otherwise.
fn sort_nearly_sorted(v: &mut [u64]) {
    let budget = v.len();
    let mut moves = 0usize;
    for i in 1..v.len() {
        let x = v[i];
        let mut j = i;
        while j > 0 && v[j - 1] > x {
            v[j] = v[j - 1];
            j -= 1;
            moves += 1;
        }
        v[j] = x;
        if moves > budget {
            v.sort_unstable();
            return;
        }
    }
}

/// Drops every event that arrives less than `dead_time_ps` after the last
/// kept event.
pub fn dead_time_filter(tags: &mut Vec<u64>, dead_time_ps: u64) {
    if dead_time_ps == 0 || tags.is_empty() {
        return;
    }
    let mut next_free = 0u64;
    let mut first = true;
    tags.retain(|&t| {
        if first || t >= next_free {
            first = false;
            next_free = t.saturating_add(dead_time_ps);
            true
        } else {
            false
        }
    });
}

fn merge_sorted(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Simulates one configuration: a Poisson photon stream at the rate set by
/// `G^(1)_X(δ)`, routed 50:50 to two detectors that are modeled
/// independently. Returns the two detector streams.
pub fn simulate_config_run(
    plan: &RunPlan,
    setup: &Interferometer,
    detectors: &[SpadModel; 2],
) -> Result<(Vec<u64>, Vec<u64>)> {
    plan.validate()?;
    for d in detectors {
        d.validate()?;
    }
    let rate = plan.photon_rate(setup)?;
    let mut rng = derive_rng(plan.seed, &[0]);

    // Poisson arrivals routed on the fly; the incident stream is never stored.
    let expected = rate * plan.duration_s / 2.0;
    let cap = (expected + 6.0 * expected.sqrt() + 16.0) as usize;
    let mut routed = [Vec::with_capacity(cap), Vec::with_capacity(cap)];
    if rate > 0.0 {
        let mean_gap = PS_PER_S / rate;
        let end = plan.duration_s * PS_PER_S;
        let mut t = 0.0f64;
        let mut bits = 0u64;
        let mut left = 0u32;
        loop {
            let gap: f64 = rng.sample(Exp1);
            t += gap * mean_gap;
            if t >= end {
                break;
            }
            if left == 0 {
                bits = rng.next_u64();
                left = 64;
            }
            routed[(bits & 1) as usize].push(t as u64);
            bits >>= 1;
            left -= 1;
        }
    }

    let [r1, r2] = routed;
    let s1 = apply_spad_model_with(
        &r1,
        &detectors[0],
        plan.duration_s,
        &mut derive_rng(plan.seed, &[1]),
    );
    drop(r1);
    let s2 = apply_spad_model_with(
        &r2,
        &detectors[1],
        plan.duration_s,
        &mut derive_rng(plan.seed, &[2]),
    );
    Ok((s1, s2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::count_coincidences;

    #[test]
    fn zero_rate_is_empty() {
        assert!(simulate_poisson_stream(0.0, 10.0, 1).is_empty());
    }

    #[test]
    fn poisson_count_and_order() {
        let s = simulate_poisson_stream(1e4, 1.0, 5);
        assert!((s.len() as f64 - 1e4).abs() < 5.0 * 100.0);
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
        assert!(*s.last().unwrap() < 1_000_000_000_000);
        assert_eq!(s, simulate_poisson_stream(1e4, 1.0, 5));
    }

    /// Kolmogorov-Smirnov statistic of the gaps against Exp(rate).
    fn ks_exponential(stream: &[u64], rate_hz: f64) -> f64 {
        let mut gaps: Vec<f64> = stream
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 / PS_PER_S)
            .collect();
        gaps.sort_by(f64::total_cmp);
        let n = gaps.len() as f64;
        gaps.iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = 1.0 - (-rate_hz * x).exp();
                (cdf - i as f64 / n).max((i + 1) as f64 / n - cdf)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn exponential_gaps_pass_ks() {
        // Asymptotic 1% critical value of the one-sample KS statistic.
        let mut rejections = 0;
        for seed in 0..20 {
            let s = simulate_poisson_stream(1e5, 0.05, seed);
            let d = ks_exponential(&s, 1e5);
            if d * (s.len() as f64 - 1.0).sqrt() > 1.628 {
                rejections += 1;
            }
        }
        assert!(
            rejections <= 1,
            "{rejections} of 20 seeds rejected at α = 0.01"
        );
    }

    #[test]
    fn nearly_sorted_fixup() {
        let mut v = vec![1, 3, 2, 4, 6, 5, 7];
        sort_nearly_sorted(&mut v);
        assert_eq!(v, vec![1, 2, 3, 4, 5, 6, 7]);
        let mut w: Vec<u64> = (0..1000).rev().collect();
        sort_nearly_sorted(&mut w);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn dead_time_definition() {
        let model = SpadModel {
            efficiency: 1.0,
            dead_time_ps: 77,
            dark_rate_hz: 0.0,
            jitter_ps: 0.0,
        };
        assert_eq!(
            apply_spad_model(&[0, 50, 200], &model, 1e-9, 1),
            vec![0, 200]
        );
        assert_eq!(
            apply_spad_model(&[0, 77, 100, 154], &model, 1e-9, 1),
            vec![0, 77, 154]
        );
    }

    #[test]
    fn blind_detector_is_empty() {
        let model = SpadModel {
            efficiency: 0.0,
            dark_rate_hz: 0.0,
            ..SpadModel::default()
        };
        let s = simulate_poisson_stream(1e5, 0.01, 2);
        assert!(apply_spad_model(&s, &model, 0.01, 3).is_empty());
    }

    #[test]
    fn dark_counts_alone() {
        let model = SpadModel {
            dark_rate_hz: 1e4,
            ..SpadModel::default()
        };
        let s = apply_spad_model(&[], &model, 1.0, 4);
        assert!((s.len() as f64 - 1e4).abs() < 5.0 * 100.0);
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn dead_time_rate_correction() {
        // A non-paralyzable detector measures r / (1 + r τ).
        let r = 2e8;
        let model = SpadModel {
            efficiency: 1.0,
            dead_time_ps: 2000,
            dark_rate_hz: 0.0,
            jitter_ps: 0.0,
        };
        let input = simulate_poisson_stream(r, 0.01, 6);
        let out = apply_spad_model(&input, &model, 0.01, 7);
        let measured = out.len() as f64 / 0.01;
        let expected = r / (1.0 + r * 2000e-12);
        let sigma = (expected * 0.01).sqrt() / 0.01;
        assert!(
            (measured - expected).abs() < 5.0 * sigma,
            "{measured} vs {expected}"
        );
    }

    #[test]
    fn background_run_has_only_dark_counts() {
        let setup = Interferometer::ideal();
        let mut plan = RunPlan::new(SlitConfiguration::EMPTY, &setup, 1.0, 1e5, 11).unwrap();
        plan.phase = 0.0;
        let det = SpadModel {
            dark_rate_hz: 100.0,
            ..SpadModel::default()
        };
        let (a, b) = simulate_config_run(&plan, &setup, &[det, det]).unwrap();
        assert!(a.len() < 200 && b.len() < 200);
        let bad = RunPlan::new("F".parse().unwrap(), &setup, 1.0, 1e5, 1).unwrap();
        assert!(simulate_config_run(&bad, &setup, &[det, det]).is_err());
    }

    #[test]
    fn config_run_is_deterministic_and_symmetric() {
        let setup = Interferometer::ideal();
        let plan = RunPlan::new("ABC".parse().unwrap(), &setup, 0.2, 2.5e5, 99).unwrap();
        let det = [SpadModel::default(); 2];
        let (a, b) = simulate_config_run(&plan, &setup, &det).unwrap();
        let (a2, b2) = simulate_config_run(&plan, &setup, &det).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
        // Expected per channel: 2.5e5 · 9/25 · 0.4 / 2 · 0.2 s = 3600.
        let n = (a.len() + b.len()) as f64 / 2.0;
        assert!((n - 3600.0).abs() < 5.0 * 60.0, "{n}");
        let diff = (a.len() as f64 - b.len() as f64).abs();
        let sigma = ((a.len() + b.len()) as f64).sqrt();
        assert!(diff < 5.0 * sigma);
    }

    #[test]
    fn coincidences_follow_accidental_rate() {
        // r1 = r2 = 50 kHz, t_f = 1 ns: N2 = r1 r2 2 t_f T.
        let setup = Interferometer::ideal();
        let det = [SpadModel::default(); 2];
        let t = 2.0;
        let mut total = 0u64;
        let runs = 10;
        for seed in 0..runs {
            let plan =
                RunPlan::new(SlitConfiguration::full_mask(), &setup, t, 2.5e5, seed).unwrap();
            let (a, b) = simulate_config_run(&plan, &setup, &det).unwrap();
            total += count_coincidences(&a, &b, 1000).unwrap();
        }
        let mean = total as f64 / runs as f64;
        let expected = 5e4 * 5e4 * 2e-9 * t;
        let sigma = (expected / runs as f64).sqrt();
        assert!(
            (mean - expected).abs() < 5.0 * sigma,
            "{mean} vs {expected}"
        );
    }
}
