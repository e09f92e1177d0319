//! From raw detector data to interference orders: coincidence counting,
//! line-pair autocorrelation, background and count corrections.

mod coincidence;
mod correlation;

pub use coincidence::{correct_nonresolving, count_coincidences, CountRecord};
pub use correlation::{
    ccd_autocorrelation, ccd_autocorrelation_window, CcdAccumulator, CcdCorrelation,
};

use crate::error::{Error, Result};
use crate::gtable::{GRow, GTable};
use crate::hierarchy::{
    prefix_base, sorkin_parameter, InterferenceOrderResult, Regime, SorkinEstimate,
};
use crate::optics::PhaseGrid;
use crate::slits::SlitConfiguration;
use crate::stats::poisson_sigma;

/// Subtracts the background row (configuration `0`) of `background` from
/// every row of `table`. Uncertainties add in quadrature. Negative results
/// are kept.
pub fn background_subtract(table: &GTable, background: &GTable) -> Result<GTable> {
    if table.grid() != background.grid() {
        return Err(Error::GridMismatch(format!(
            "table has {} grid points, background {}",
            table.grid().len(),
            background.grid().len()
        )));
    }
    if table.order() != background.order() {
        return Err(Error::GridMismatch(format!(
            "order {} table with order {} background",
            table.order(),
            background.order()
        )));
    }
    let bg = background.get(SlitConfiguration::EMPTY)?;
    let mut out = GTable::new(table.order(), table.grid().clone())?;
    for (config, row) in table.rows() {
        if config.is_empty() {
            continue;
        }
        let values = row
            .values
            .iter()
            .zip(&bg.values)
            .map(|(v, b)| v - b)
            .collect();
        let sigma = match (&row.sigma, &bg.sigma) {
            (Some(s), Some(b)) => Some(s.iter().zip(b).map(|(s, b)| s.hypot(*b)).collect()),
            (Some(s), None) => Some(s.clone()),
            (None, _) => None,
        };
        out.insert_row(config, GRow { values, sigma })?;
    }
    Ok(out)
}

fn require_all<T>(
    find: impl Fn(SlitConfiguration) -> Option<T>,
) -> Result<Vec<(SlitConfiguration, T)>> {
    let mut configs = vec![SlitConfiguration::EMPTY];
    configs.extend(SlitConfiguration::full_mask().nonempty_subsets());
    configs
        .into_iter()
        .map(|c| {
            find(c)
                .map(|v| (c, v))
                .ok_or_else(|| Error::MissingConfiguration { label: c.label() })
        })
        .collect()
}

/// Background-subtracted `G^(1)` and `G^(2)` rates at `δ = 0` from count
/// records of all 31 configurations and the background.
pub fn photon_tables(records: &[CountRecord], correct: bool) -> Result<(GTable, GTable)> {
    let found = require_all(|c| records.iter().find(|r| r.config == c))?;
    let grid = PhaseGrid::single(0.0)?;
    let mut g1 = GTable::new(1, grid.clone())?;
    let mut g2 = GTable::new(2, grid)?;
    for (config, rec) in found {
        if !(rec.duration_s > 0.0) {
            return Err(Error::InvalidInput(format!(
                "{config}: duration must be positive"
            )));
        }
        let (n1, n2) = rec
            .counts(correct)
            .map_err(|e| e.in_entry(config.label()))?;
        let t = rec.duration_s;
        // Each corrected coincidence stands for two measured ones.
        let s2 = if correct {
            2.0 * poisson_sigma(rec.coincidences as f64)
        } else {
            poisson_sigma(n2 as f64)
        };
        g1.insert_with_sigma(
            config,
            vec![n1 as f64 / t],
            vec![poisson_sigma(rec.total_singles() as f64) / t],
        )?;
        g2.insert_with_sigma(config, vec![n2 as f64 / t], vec![s2 / t])?;
    }
    Ok((
        background_subtract(&g1, &g1)?,
        background_subtract(&g2, &g2)?,
    ))
}

/// Background-corrected `G^(1)` and `G^(2)` on `grid` from per-configuration
/// line-pair correlations. `G^(1)` is corrected by subtraction and `G^(2)`
/// by the offset product `(I_l - o)(I_{l+1} - o)` with `o` the background
/// mean.
pub fn intensity_tables(
    correlations: &[(SlitConfiguration, CcdCorrelation)],
    grid: &PhaseGrid,
) -> Result<(GTable, GTable)> {
    let found = require_all(|c| correlations.iter().find(|(k, _)| *k == c).map(|(_, v)| v))?;
    let background = found[0].1;
    if background.cols() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} columns for a {}-point grid",
            background.cols(),
            grid.len()
        )));
    }
    let offset = background.g1();
    let offset_sigma = background.g1_sigma();
    let mut g1 = GTable::new(1, grid.clone())?;
    let mut g2 = GTable::new(2, grid.clone())?;
    for (config, corr) in found {
        if config.is_empty() {
            g1.insert_with_sigma(config, offset.clone(), offset_sigma.clone())?;
            continue;
        }
        if corr.cols() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{config}: {} columns for a {}-point grid",
                corr.cols(),
                grid.len()
            )));
        }
        g1.insert_with_sigma(config, corr.g1(), corr.g1_sigma())?;
        let (v, s) = corr.offset_g2(&offset, &offset_sigma)?;
        g2.insert_with_sigma(config, v, s)?;
    }
    Ok((background_subtract(&g1, &g1)?, g2))
}

/// Normalized orders and Sorkin parameters of one data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SetAnalysis {
    pub regime: Regime,
    pub set_index: Option<usize>,
    pub grid: PhaseGrid,
    /// `M = 1` and `M = 2`, each for `N = 2..=5` on the prefix bases, minus
    /// orders whose normalization has no events.
    pub orders: Vec<InterferenceOrderResult>,
    /// `κ^(1)` on ABC.
    pub kappa1: SorkinEstimate,
    /// `κ^(2)` on ABCDE.
    pub kappa2: SorkinEstimate,
}

impl SetAnalysis {
    pub fn order(&self, m: u32, n: usize) -> Option<&InterferenceOrderResult> {
        self.orders.iter().find(|o| o.order == m && o.slits == n)
    }

    pub fn zero_index(&self) -> usize {
        self.grid
            .zero_index()
            .expect("analysis grids contain δ = 0")
    }

    pub fn kappa(&self, m: u32) -> Option<&SorkinEstimate> {
        match m {
            1 => Some(&self.kappa1),
            2 => Some(&self.kappa2),
            _ => None,
        }
    }
}

pub fn hierarchy_from_tables(
    g1: &GTable,
    g2: &GTable,
    regime: Regime,
    set_index: Option<usize>,
) -> Result<SetAnalysis> {
    if g1.order() != 1 || g2.order() != 2 {
        return Err(Error::InvalidInput(
            "expected an order-1 and an order-2 table".into(),
        ));
    }
    if g1.grid() != g2.grid() {
        return Err(Error::GridMismatch("G^(1) and G^(2) grids differ".into()));
    }
    let mut orders = Vec::with_capacity(8);
    for table in [g1, g2] {
        for n in 2..=5 {
            // Sparse photon data can leave a small base without events; only
            // that order is undefined then.
            match InterferenceOrderResult::evaluate(prefix_base(n), table) {
                Ok(o) => orders.push(o),
                Err(Error::ZeroDenominator { label }) => {
                    log::debug!(
                        "order {n} of G^({}) undefined: no {label} events",
                        table.order()
                    );
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(SetAnalysis {
        regime,
        set_index,
        grid: g1.grid().clone(),
        orders,
        kappa1: sorkin_parameter(prefix_base(3), g1, regime, set_index)?,
        kappa2: sorkin_parameter(prefix_base(5), g2, regime, set_index)?,
    })
}

pub fn hierarchy_from_counts(
    records: &[CountRecord],
    set_index: Option<usize>,
) -> Result<SetAnalysis> {
    let (g1, g2) = photon_tables(records, true)?;
    hierarchy_from_tables(&g1, &g2, Regime::PhotonCorrelation, set_index)
}

pub fn hierarchy_from_correlations(
    correlations: &[(SlitConfiguration, CcdCorrelation)],
    grid: &PhaseGrid,
    set_index: Option<usize>,
) -> Result<SetAnalysis> {
    let (g1, g2) = intensity_tables(correlations, grid)?;
    hierarchy_from_tables(&g1, &g2, Regime::IntensityCorrelation, set_index)
}
