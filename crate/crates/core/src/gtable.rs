//! Correlation-function tables indexed by slit configuration.
//!
//! A [`GTable`] holds `G^(M)` for a fixed particle order `M`, sampled on one
//! phase grid in the autocorrelation convention (all detector phases equal).
//!
//! # Text format
//!
//! ```text
//! gtable 1
//! order 2
//! grid 3 -1.0000000000000000e0 0.0000000000000000e0 1.0000000000000000e0
//! value A 1.0000000000000000e0 1.0000000000000000e0 1.0000000000000000e0
//! sigma A 1.0000000000000000e-1 1.0000000000000000e-1 1.0000000000000000e-1
//! value AB ...
//! ```
//!
//! Lines are whitespace separated. `#` starts a comment line. Numbers are
//! written with 17 significant digits so every double round-trips exactly.
//! `sigma` rows are optional and follow the matching `value` row.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::optics::PhaseGrid;
use crate::slits::SlitConfiguration;

const FORMAT_VERSION: u32 = 1;

/// Formats a double with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GRow {
    pub values: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GTable {
    order: u32,
    grid: PhaseGrid,
    rows: BTreeMap<SlitConfiguration, GRow>,
}

impl GTable {
    pub fn new(order: u32, grid: PhaseGrid) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("correlation order must be >= 1".into()));
        }
        Ok(GTable {
            order,
            grid,
            rows: BTreeMap::new(),
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, config: SlitConfiguration, values: Vec<f64>) -> Result<()> {
        self.insert_row(
            config,
            GRow {
                values,
                sigma: None,
            },
        )
    }

    pub fn insert_with_sigma(
        &mut self,
        config: SlitConfiguration,
        values: Vec<f64>,
        sigma: Vec<f64>,
    ) -> Result<()> {
        self.insert_row(
            config,
            GRow {
                values,
                sigma: Some(sigma),
            },
        )
    }

    pub fn insert_row(&mut self, config: SlitConfiguration, row: GRow) -> Result<()> {
        let n = self.grid.len();
        if row.values.len() != n {
            return Err(Error::GridMismatch(format!(
                "{config}: {} values for a {n}-point grid",
                row.values.len()
            )));
        }
        if let Some(v) = row.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{config}: non-finite value {v}"
            )));
        }
        if let Some(sigma) = &row.sigma {
            if sigma.len() != n {
                return Err(Error::GridMismatch(format!(
                    "{config}: {} uncertainties for a {n}-point grid",
                    sigma.len()
                )));
            }
            if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "{config}: uncertainties must be finite and nonnegative"
                )));
            }
        }
        self.rows.insert(config, row);
        Ok(())
    }

    pub fn get(&self, config: SlitConfiguration) -> Result<&GRow> {
        self.rows
            .get(&config)
            .ok_or_else(|| Error::MissingConfiguration {
                label: config.label(),
            })
    }

    pub fn contains(&self, config: SlitConfiguration) -> bool {
        self.rows.contains_key(&config)
    }

    pub fn value(&self, config: SlitConfiguration, index: usize) -> Result<f64> {
        let row = self.get(config)?;
        row.values.get(index).copied().ok_or_else(|| {
            Error::InvalidInput(format!("grid index {index} out of range for {config}"))
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = (SlitConfiguration, &GRow)> {
        self.rows.iter().map(|(k, v)| (*k, v))
    }

    pub fn configurations(&self) -> impl Iterator<Item = SlitConfiguration> + '_ {
        self.rows.keys().copied()
    }

    /// True when every row carries uncertainties.
    pub fn has_sigma(&self) -> bool {
        !self.rows.is_empty() && self.rows.values().all(|r| r.sigma.is_some())
    }

    /// Largest absolute value over all rows and grid points.
    pub fn max_abs(&self) -> f64 {
        self.rows
            .values()
            .flat_map(|r| r.values.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Multiplies every value (and uncertainty) by `factor`.
    pub fn scaled(&self, factor: f64) -> GTable {
        let mut out = self.clone();
        for row in out.rows.values_mut() {
            row.values.iter_mut().for_each(|v| *v *= factor);
            if let Some(s) = row.sigma.as_mut() {
                s.iter_mut().for_each(|v| *v *= factor.abs());
            }
        }
        out
    }

    /// Adds `offset` to every value.
    pub fn offset(&self, offset: f64) -> GTable {
        let mut out = self.clone();
        for row in out.rows.values_mut() {
            row.values.iter_mut().for_each(|v| *v += offset);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "gtable {FORMAT_VERSION}").unwrap();
        writeln!(s, "order {}", self.order).unwrap();
        write!(s, "grid {}", self.grid.len()).unwrap();
        for v in self.grid.values() {
            write!(s, " {}", fmt_f64(*v)).unwrap();
        }
        s.push('\n');
        for (config, row) in &self.rows {
            write_row(&mut s, "value", *config, &row.values);
            if let Some(sigma) = &row.sigma {
                write_row(&mut s, "sigma", *config, sigma);
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<GTable> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Format(format!("gtable: missing {what} line")))
        };

        let (_, header) = next("header")?;
        match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["gtable", v] if v.parse::<u32>().ok() == Some(FORMAT_VERSION) => {}
            _ => return Err(Error::Format(format!("gtable: bad header {header:?}"))),
        }
        let (_, order_line) = next("order")?;
        let order = match order_line.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["order", m] => m
                .parse::<u32>()
                .map_err(|_| Error::Format(format!("gtable: bad order {m:?}")))?,
            _ => {
                return Err(Error::Format(format!(
                    "gtable: expected order, got {order_line:?}"
                )))
            }
        };
        let (_, grid_line) = next("grid")?;
        let mut it = grid_line.split_whitespace();
        if it.next() != Some("grid") {
            return Err(Error::Format("gtable: expected grid line".into()));
        }
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Format("gtable: bad grid size".into()))?;
        let grid_values = parse_numbers(it, 2)?;
        if grid_values.len() != n {
            return Err(Error::Format(format!(
                "gtable: grid declares {n} points but lists {}",
                grid_values.len()
            )));
        }
        let mut table = GTable::new(order, PhaseGrid::new(grid_values)?)?;

        let mut pending: Option<(SlitConfiguration, Vec<f64>)> = None;
        for (lineno, line) in lines {
            let mut it = line.split_whitespace();
            let kind = it.next().unwrap_or_default();
            let label = it.next().ok_or_else(|| {
                Error::Format(format!("gtable line {}: missing label", lineno + 1))
            })?;
            let config: SlitConfiguration = label.parse()?;
            let values = parse_numbers(it, lineno + 1)?;
            match kind {
                "value" => {
                    if let Some((c, v)) = pending.take() {
                        table.insert(c, v)?;
                    }
                    if table.contains(config) {
                        return Err(Error::Format(format!("gtable: duplicate row {config}")));
                    }
                    pending = Some((config, values));
                }
                "sigma" => match pending.take() {
                    Some((c, v)) if c == config => table.insert_with_sigma(c, v, values)?,
                    _ => {
                        return Err(Error::Format(format!(
                            "gtable line {}: sigma row for {config} without value row",
                            lineno + 1
                        )))
                    }
                },
                other => {
                    return Err(Error::Format(format!(
                        "gtable line {}: unknown row kind {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        if let Some((c, v)) = pending.take() {
            table.insert(c, v)?;
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<GTable> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GTable::from_text(&text)
    }
}

fn write_row(s: &mut String, kind: &str, config: SlitConfiguration, values: &[f64]) {
    write!(s, "{kind} {}", config.label()).unwrap();
    for v in values {
        write!(s, " {}", fmt_f64(*v)).unwrap();
    }
    s.push('\n');
}

fn parse_numbers<'a>(it: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    it.map(|t| {
        t.parse::<f64>()
            .map_err(|_| Error::Format(format!("gtable line {line}: bad number {t:?}")))
    })
    .collect()
}
