use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::SetResult;
use crate::analysis::SetAnalysis;
use crate::error::{Error, Result};
use crate::gtable::fmt_f64;
use crate::hierarchy::{prefix_base, InterferenceOrderResult, Regime};
use crate::optics::{Interferometer, PhaseGrid};
use crate::stats::{mean, std_dev, QuantityStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSummary {
    pub m: u32,
    pub n: usize,
    pub base: String,
    /// Normalized order at `δ = 0` across the sets where it is defined.
    pub stats: Option<QuantityStats>,
    /// Ideal value for the unperturbed setup.
    pub theory: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetPoint {
    pub set: usize,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSummary {
    pub regime: Regime,
    pub sets: usize,
    pub kappa1: QuantityStats,
    pub kappa2: QuantityStats,
    pub orders: Vec<OrderSummary>,
    pub alignment_pass_fraction: f64,
    pub max_alignment_deviation: f64,
    /// Mean over sets of the summed counts per set.
    pub mean_total_counts: f64,
    pub kappa2_series: Vec<SetPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub regimes: Vec<RegimeSummary>,
}

impl CampaignSummary {
    pub fn regime(&self, regime: Regime) -> Option<&RegimeSummary> {
        self.regimes.iter().find(|r| r.regime == regime)
    }
}

/// Ideal orders `M = 1, 2` and `N = 2..=5` on `grid`.
pub fn theory_orders(
    setup: &Interferometer,
    grid: &PhaseGrid,
) -> Result<Vec<InterferenceOrderResult>> {
    let mut out = Vec::with_capacity(8);
    for m in 1..=2 {
        let table = setup.gtable(m, grid)?;
        for n in 2..=5 {
            out.push(InterferenceOrderResult::evaluate(prefix_base(n), &table)?);
        }
    }
    Ok(out)
}

fn at_zero(a: &SetAnalysis, m: u32, n: usize) -> Option<(f64, f64)> {
    a.order(m, n).map(|o| o.at(a.zero_index()))
}

pub fn aggregate_campaign(sets: &[SetResult], setup: &Interferometer) -> Result<CampaignSummary> {
    if sets.is_empty() {
        return Err(Error::InvalidInput(
            "cannot aggregate an empty campaign".into(),
        ));
    }
    let theory = theory_orders(setup, &PhaseGrid::single(0.0)?)?;
    let mut regimes: Vec<Regime> = Vec::new();
    for s in sets {
        if !regimes.contains(&s.regime) {
            regimes.push(s.regime);
        }
    }
    let mut out = Vec::new();
    for regime in regimes {
        let rs: Vec<&SetResult> = sets.iter().filter(|s| s.regime == regime).collect();
        let collect = |f: &dyn Fn(&SetResult) -> Option<(f64, f64)>| -> Option<QuantityStats> {
            let (v, s): (Vec<f64>, Vec<f64>) = rs.iter().filter_map(|r| f(r)).unzip();
            (!v.is_empty()).then(|| QuantityStats::from_values(&v, &s))
        };
        let orders = theory
            .iter()
            .map(|t| OrderSummary {
                m: t.order,
                n: t.slits,
                base: t.base.label(),
                stats: collect(&|r: &SetResult| at_zero(&r.analysis, t.order, t.slits)),
                theory: t.normalized[0],
            })
            .collect();
        let kappa = |m: u32| {
            collect(&|r: &SetResult| {
                let k = r.analysis.kappa(m).expect("orders 1 and 2");
                Some((k.value, k.uncertainty))
            })
            .expect("at least one set")
        };
        let passed = rs.iter().filter(|r| r.alignment.passed).count();
        out.push(RegimeSummary {
            regime,
            sets: rs.len(),
            kappa1: kappa(1),
            kappa2: kappa(2),
            orders,
            alignment_pass_fraction: passed as f64 / rs.len() as f64,
            max_alignment_deviation: rs.iter().map(|r| r.alignment.deviation).fold(0.0, f64::max),
            mean_total_counts: mean(&rs.iter().map(|r| r.total_counts).collect::<Vec<_>>()),
            kappa2_series: rs
                .iter()
                .map(|r| SetPoint {
                    set: r.set_index,
                    value: r.analysis.kappa2.value,
                    sigma: r.analysis.kappa2.uncertainty,
                })
                .collect(),
        });
    }
    Ok(CampaignSummary { regimes: out })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `sets.csv`, `kappa.csv`, `hierarchy_curves.csv` and
/// `summary.json` into `dir`, replacing earlier files.
pub fn emit_results(
    summary: &CampaignSummary,
    sets: &[SetResult],
    setup: &Interferometer,
    dir: &Path,
) -> Result<()> {
    if sets.is_empty() || summary.regimes.is_empty() {
        return Err(Error::InvalidInput(
            "refusing to write an empty campaign".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut csv = String::from("set,regime,m,n,base,delta_bin,delta,value,sigma\n");
    let mut kappa =
        String::from("set,regime,kappa1,kappa1_sigma,kappa2,kappa2_sigma,alignment_deviation\n");
    for s in sets {
        let a = &s.analysis;
        let z = a.zero_index();
        let delta = a.grid.values()[z];
        for o in &a.orders {
            let (v, sig) = o.at(z);
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                s.set_index,
                s.regime.tag(),
                o.order,
                o.slits,
                o.base,
                z,
                fmt_f64(delta),
                fmt_f64(v),
                fmt_f64(sig)
            )
            .unwrap();
        }
        writeln!(
            kappa,
            "{},{},{},{},{},{},{}",
            s.set_index,
            s.regime.tag(),
            fmt_f64(a.kappa1.value),
            fmt_f64(a.kappa1.uncertainty),
            fmt_f64(a.kappa2.value),
            fmt_f64(a.kappa2.uncertainty),
            fmt_f64(s.alignment.deviation)
        )
        .unwrap();
    }
    write_file(&dir.join("sets.csv"), &csv)?;
    write_file(&dir.join("kappa.csv"), &kappa)?;
    write_file(&dir.join("hierarchy_curves.csv"), &curves_csv(sets, setup)?)?;

    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::Format(e.to_string()))?;
    write_file(&dir.join("summary.json"), &json)
}

/// Theory curves on 1001 points over `[-3π, 3π]` plus per-regime means of
/// the measured curves.
fn curves_csv(sets: &[SetResult], setup: &Interferometer) -> Result<String> {
    use std::f64::consts::PI;
    let mut out = String::from("source,m,n,base,delta,value,sigma\n");
    let grid = PhaseGrid::uniform(-3.0 * PI, 3.0 * PI, 1001)?;
    for o in theory_orders(setup, &grid)? {
        for (d, v) in grid.values().iter().zip(&o.normalized) {
            writeln!(
                out,
                "theory,{},{},{},{},{},0",
                o.order,
                o.slits,
                o.base,
                fmt_f64(*d),
                fmt_f64(*v)
            )
            .unwrap();
        }
    }
    for regime in [Regime::PhotonCorrelation, Regime::IntensityCorrelation] {
        let rs: Vec<&SetAnalysis> = sets
            .iter()
            .filter(|s| s.regime == regime)
            .map(|s| &s.analysis)
            .collect();
        let Some(first) = rs.first() else { continue };
        for (m, n) in (1..=2).flat_map(|m| (2..=5).map(move |n| (m, n))) {
            let curves: Vec<&[f64]> = rs
                .iter()
                .filter_map(|a| a.order(m, n).map(|o| o.normalized.as_slice()))
                .collect();
            if curves.is_empty() {
                continue;
            }
            for (i, d) in first.grid.values().iter().enumerate() {
                let vals: Vec<f64> = curves.iter().map(|c| c[i]).collect();
                let err = std_dev(&vals).map_or(0.0, |s| s / (vals.len() as f64).sqrt());
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    regime.tag(),
                    m,
                    n,
                    prefix_base(n).label(),
                    fmt_f64(*d),
                    fmt_f64(mean(&vals)),
                    fmt_f64(err)
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}

pub fn read_summary(path: &Path) -> Result<CampaignSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
