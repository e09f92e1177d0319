//! Interference orders by inclusion-exclusion over slit subsets.
//!
//! For a base configuration `S` with `N` slits,
//!
//! ```text
//! I^(M)_N(δ) = Σ_{∅ ≠ T ⊆ S} (-1)^(N - |T|) G^(M)_T(δ)
//! ```
//!
//! and the normalized order divides by `G^(M)_S` at `δ = 0`. Under the Born
//! rule every `I^(M)_N` with `N >= 2M + 1` vanishes; the normalized
//! `(2M+1)`th order is the Sorkin parameter `κ^(M)`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gtable::GTable;
use crate::slits::SlitConfiguration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Ideal,
    IntensityCorrelation,
    PhotonCorrelation,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::Ideal => "ideal",
            Regime::IntensityCorrelation => "intensity",
            Regime::PhotonCorrelation => "photon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SorkinEstimate {
    pub order: u32,
    pub value: f64,
    pub uncertainty: f64,
    pub regime: Regime,
    pub set_index: Option<usize>,
}

/// Nonempty subsets of `config` in canonical order.
pub fn subconfigurations(config: SlitConfiguration) -> Result<Vec<SlitConfiguration>> {
    if config.is_empty() {
        return Err(Error::EmptyConfiguration);
    }
    Ok(config.nonempty_subsets())
}

/// Signed terms of the inclusion-exclusion sum, in canonical order.
pub fn inclusion_exclusion_terms(base: SlitConfiguration) -> Result<Vec<(i32, SlitConfiguration)>> {
    let n = base.len();
    Ok(subconfigurations(base)?
        .into_iter()
        .map(|t| {
            (
                if (n - t.len()).is_multiple_of(2) {
                    1
                } else {
                    -1
                },
                t,
            )
        })
        .collect())
}

/// `I^(M)_N` for `base` at one grid point of `table`.
pub fn interference_order(base: SlitConfiguration, table: &GTable, index: usize) -> Result<f64> {
    let mut sum = 0.0;
    for (sign, t) in inclusion_exclusion_terms(base)? {
        sum += sign as f64 * table.value(t, index)?;
    }
    Ok(sum)
}

/// `I^(M)_N` over the whole grid, with quadrature uncertainties when every
/// contributing row has them.
pub fn interference_order_curve(
    base: SlitConfiguration,
    table: &GTable,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = table.grid().len();
    let mut values = vec![0.0; n];
    let mut variance = Some(vec![0.0; n]);
    for (sign, t) in inclusion_exclusion_terms(base)? {
        let row = table.get(t)?;
        let s = sign as f64;
        for (acc, v) in values.iter_mut().zip(&row.values) {
            *acc += s * v;
        }
        match (&mut variance, &row.sigma) {
            (Some(var), Some(sigma)) => {
                for (acc, s) in var.iter_mut().zip(sigma) {
                    *acc += s * s;
                }
            }
            _ => variance = None,
        }
    }
    let sigma = variance.map(|v| v.into_iter().map(f64::sqrt).collect());
    Ok((values, sigma))
}

/// Divides a raw order by `G^(M)_S(0, ..., 0)`.
///
/// Returns the normalized values, their first-order uncertainties and the
/// denominator. At `δ = 0` the denominator is the same measurement as the
/// `T = S` term of the numerator, so their covariance is included there.
pub fn normalize_order(
    base: SlitConfiguration,
    raw: &[f64],
    raw_sigma: Option<&[f64]>,
    table: &GTable,
) -> Result<(Vec<f64>, Option<Vec<f64>>, f64)> {
    let zero = table
        .grid()
        .zero_index()
        .ok_or_else(|| Error::GridMismatch("normalization needs a grid containing δ = 0".into()))?;
    let row = table.get(base)?;
    let denom = row.values[zero];
    if denom == 0.0 || !denom.is_finite() {
        return Err(Error::ZeroDenominator {
            label: base.label(),
        });
    }
    let normalized: Vec<f64> = raw.iter().map(|v| v / denom).collect();
    let sigma = match (raw_sigma, &row.sigma) {
        (Some(rs), Some(ds)) => {
            let var_d = ds[zero] * ds[zero];
            Some(
                normalized
                    .iter()
                    .zip(rs)
                    .enumerate()
                    .map(|(i, (&q, &s))| {
                        let cov = if i == zero { var_d } else { 0.0 };
                        let var = s * s - 2.0 * q * cov + q * q * var_d;
                        var.max(0.0).sqrt() / denom.abs()
                    })
                    .collect(),
            )
        }
        _ => None,
    };
    Ok((normalized, sigma, denom))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceOrderResult {
    /// Particle order `M`.
    pub order: u32,
    /// Interference order `N`, the number of slits combined.
    pub slits: usize,
    pub base: SlitConfiguration,
    pub raw: Vec<f64>,
    pub raw_sigma: Option<Vec<f64>>,
    pub normalized: Vec<f64>,
    pub normalized_sigma: Option<Vec<f64>>,
    pub denominator: f64,
}

impl InterferenceOrderResult {
    pub fn evaluate(base: SlitConfiguration, table: &GTable) -> Result<Self> {
        let (raw, raw_sigma) = interference_order_curve(base, table)?;
        let (normalized, normalized_sigma, denominator) =
            normalize_order(base, &raw, raw_sigma.as_deref(), table)?;
        Ok(InterferenceOrderResult {
            order: table.order(),
            slits: base.len(),
            base,
            raw,
            raw_sigma,
            normalized,
            normalized_sigma,
            denominator,
        })
    }

    /// Normalized value and uncertainty at grid index `i`.
    pub fn at(&self, i: usize) -> (f64, f64) {
        let s = self.normalized_sigma.as_ref().map(|s| s[i]).unwrap_or(0.0);
        (self.normalized[i], s)
    }
}

/// `κ^(M) = I^(M)_{2M+1}(0) / G^(M)_S(0, ..., 0)` for a `(2M+1)`-slit base.
pub fn sorkin_parameter(
    base: SlitConfiguration,
    table: &GTable,
    regime: Regime,
    set_index: Option<usize>,
) -> Result<SorkinEstimate> {
    let m = table.order();
    if base.len() != 2 * m as usize + 1 {
        return Err(Error::InvalidInput(format!(
            "the order-{m} Sorkin parameter needs {} slits, got {base}",
            2 * m + 1
        )));
    }
    let result = InterferenceOrderResult::evaluate(base, table)?;
    let zero = table
        .grid()
        .zero_index()
        .expect("checked by normalize_order");
    let (value, uncertainty) = result.at(zero);
    Ok(SorkinEstimate {
        order: m,
        value,
        uncertainty,
        regime,
        set_index,
    })
}

/// Default base configuration for order `N`: the first `N` slits.
pub fn prefix_base(slits: usize) -> SlitConfiguration {
    SlitConfiguration::prefix(slits).expect("slit count within range")
}

/// Human-readable expansion, e.g. `I^(1)_2[AB] = G_AB - G_A - G_B`.
pub fn expanded_formula(order: u32, base: SlitConfiguration) -> Result<String> {
    let mut terms = inclusion_exclusion_terms(base)?;
    // Largest configurations first, matching the usual written form.
    terms.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.1.cmp(&b.1)));
    let mut s = format!("I^({order})_{}[{}] =", base.len(), base.label());
    for (i, (sign, t)) in terms.iter().enumerate() {
        match (i, *sign > 0) {
            (0, true) => write!(s, " G_{}", t.label()),
            (0, false) => write!(s, " -G_{}", t.label()),
            (_, true) => write!(s, " + G_{}", t.label()),
            (_, false) => write!(s, " - G_{}", t.label()),
        }
        .unwrap();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{Interferometer, PhaseGrid};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn cfg(s: &str) -> SlitConfiguration {
        s.parse().unwrap()
    }

    fn ideal_table(order: u32) -> GTable {
        Interferometer::ideal()
            .gtable(order, &PhaseGrid::single(0.0).unwrap())
            .unwrap()
    }

    /// Table of `|Σ_{j∈T} a_j|^{2M}` for every nonempty subset of `base`.
    fn amplitude_table(order: u32, base: SlitConfiguration, a: &[Complex64]) -> GTable {
        let mut t = GTable::new(order, PhaseGrid::single(0.0).unwrap()).unwrap();
        for sub in base.nonempty_subsets() {
            let amp: Complex64 = sub.slits().map(|j| a[j]).sum();
            t.insert(sub, vec![amp.norm_sqr().powi(order as i32)])
                .unwrap();
        }
        t
    }

    #[test]
    fn subconfiguration_counts() {
        assert_eq!(subconfigurations(cfg("ABC")).unwrap().len(), 7);
        assert_eq!(subconfigurations(cfg("ABCDE")).unwrap().len(), 31);
        assert_eq!(subconfigurations(cfg("A")).unwrap(), vec![cfg("A")]);
        assert!(subconfigurations(SlitConfiguration::EMPTY).is_err());
    }

    #[test]
    fn order_examples() {
        let t1 = ideal_table(1);
        let t2 = ideal_table(2);
        assert!((interference_order(cfg("AB"), &t1, 0).unwrap() - 2.0).abs() < 1e-12);
        assert!(interference_order(cfg("ABC"), &t1, 0).unwrap().abs() < 1e-12);
        assert!(interference_order(cfg("ABCDE"), &t2, 0).unwrap().abs() < 1e-10);
        assert!((interference_order(cfg("ABC"), &t2, 0).unwrap() - 36.0).abs() < 1e-10);
    }

    #[test]
    fn two_slit_order_matches_pairwise_formula() {
        let t = ideal_table(1);
        let direct = t.value(cfg("AB"), 0).unwrap()
            - (t.value(cfg("A"), 0).unwrap() + t.value(cfg("B"), 0).unwrap());
        assert_eq!(interference_order(cfg("AB"), &t, 0).unwrap(), direct);
    }

    #[test]
    fn missing_configuration_is_named() {
        let mut t = GTable::new(1, PhaseGrid::single(0.0).unwrap()).unwrap();
        t.insert(cfg("A"), vec![1.0]).unwrap();
        t.insert(cfg("AB"), vec![4.0]).unwrap();
        match interference_order(cfg("AB"), &t, 0) {
            Err(Error::MissingConfiguration { label }) => assert_eq!(label, "B"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn normalized_examples() {
        let t2 = ideal_table(2);
        let r2 = InterferenceOrderResult::evaluate(cfg("AB"), &t2).unwrap();
        assert!((r2.normalized[0] - 0.875).abs() < 1e-12);
        let r3 = InterferenceOrderResult::evaluate(cfg("ABC"), &t2).unwrap();
        assert!((r3.normalized[0] - 4.0 / 9.0).abs() < 1e-12);
        let r4 = InterferenceOrderResult::evaluate(cfg("ABCD"), &t2).unwrap();
        assert!((r4.normalized[0] - 3.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn zero_denominator_rejected() {
        let mut t = ideal_table(1);
        t.insert(cfg("AB"), vec![0.0]).unwrap();
        assert!(matches!(
            InterferenceOrderResult::evaluate(cfg("AB"), &t),
            Err(Error::ZeroDenominator { .. })
        ));
        let grid = PhaseGrid::new(vec![1.0]).unwrap();
        let t = Interferometer::ideal().gtable(1, &grid).unwrap();
        assert!(InterferenceOrderResult::evaluate(cfg("AB"), &t).is_err());
    }

    #[test]
    fn sorkin_parameter_vanishes_for_ideal_input() {
        for m in [1u32, 2] {
            let t = ideal_table(m);
            let k =
                sorkin_parameter(prefix_base(2 * m as usize + 1), &t, Regime::Ideal, None).unwrap();
            assert!(k.value.abs() < 1e-10, "κ^({m}) = {}", k.value);
            assert_eq!(k.order, m);
        }
        assert!(sorkin_parameter(cfg("ABCD"), &ideal_table(2), Regime::Ideal, None).is_err());
    }

    #[test]
    fn formula_expansion() {
        assert_eq!(
            expanded_formula(1, cfg("AB")).unwrap(),
            "I^(1)_2[AB] = G_AB - G_A - G_B"
        );
        assert_eq!(
            expanded_formula(2, cfg("ABC")).unwrap(),
            "I^(2)_3[ABC] = G_ABC - G_AB - G_AC - G_BC + G_A + G_B + G_C"
        );
        let five = expanded_formula(2, cfg("ABCDE")).unwrap();
        assert_eq!(five.matches("G_").count(), 31);
    }

    #[test]
    fn uncertainty_in_quadrature() {
        let mut t = GTable::new(1, PhaseGrid::single(0.0).unwrap()).unwrap();
        t.insert_with_sigma(cfg("A"), vec![1.0], vec![0.3]).unwrap();
        t.insert_with_sigma(cfg("B"), vec![1.0], vec![0.4]).unwrap();
        t.insert_with_sigma(cfg("AB"), vec![4.0], vec![1.2])
            .unwrap();
        let (_, sigma) = interference_order_curve(cfg("AB"), &t).unwrap();
        let expected = (0.3f64 * 0.3 + 0.4 * 0.4 + 1.2 * 1.2).sqrt();
        assert!((sigma.unwrap()[0] - expected).abs() < 1e-15);
    }

    fn arb_amplitudes(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n)
            .prop_map(|v| v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect())
    }

    proptest! {
        #[test]
        fn vanishing_beyond_2m(a in arb_amplitudes(7), m in 1u32..4) {
            for n in (2 * m as usize + 1)..=7 {
                let base = prefix_base(n);
                let t = amplitude_table(m, base, &a);
                let i = interference_order(base, &t, 0).unwrap();
                prop_assert!(i.abs() <= 1e-10 * t.max_abs().max(1.0), "M={m} N={n} I={i}");
            }
        }

        #[test]
        fn locality(a in arb_amplitudes(5), shift in -5.0f64..5.0, u in 1u32..15) {
            // Adding a term tied to a proper subset U (to every T ⊇ U) leaves I_N unchanged.
            let base = prefix_base(4);
            let sub = SlitConfiguration::from_bits(u).unwrap();
            prop_assume!(sub.len() <= 3);
            let t = amplitude_table(2, base, &a);
            let mut shifted = t.clone();
            for c in base.nonempty_subsets() {
                if sub.is_subset_of(c) {
                    let v = t.value(c, 0).unwrap() + shift;
                    shifted.insert(c, vec![v]).unwrap();
                }
            }
            let i0 = interference_order(base, &t, 0).unwrap();
            let i1 = interference_order(base, &shifted, 0).unwrap();
            prop_assert!((i0 - i1).abs() <= 1e-9 * (1.0 + t.max_abs()));
        }

        #[test]
        fn linearity(a in arb_amplitudes(5), b in arb_amplitudes(5), x in -3.0f64..3.0) {
            let base = prefix_base(5);
            let ta = amplitude_table(1, base, &a);
            let tb = amplitude_table(1, base, &b);
            let mut combo = ta.clone();
            for c in base.nonempty_subsets() {
                let v = ta.value(c, 0).unwrap() + x * tb.value(c, 0).unwrap();
                combo.insert(c, vec![v]).unwrap();
            }
            let lhs = interference_order(base, &combo, 0).unwrap();
            let rhs = interference_order(base, &ta, 0).unwrap() + x * interference_order(base, &tb, 0).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + combo.max_abs()));
        }

        #[test]
        fn relabeling_invariance(a in arb_amplitudes(4), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
            let base = prefix_base(4);
            let t = amplitude_table(2, base, &a);
            let mut relabeled = GTable::new(2, t.grid().clone()).unwrap();
            for (c, row) in t.rows() {
                let p = SlitConfiguration::from_slits(c.slits().map(|j| perm[j])).unwrap();
                relabeled.insert(p, row.values.clone()).unwrap();
            }
            let i0 = interference_order(base, &t, 0).unwrap();
            let i1 = interference_order(base, &relabeled, 0).unwrap();
            prop_assert!((i0 - i1).abs() <= 1e-10 * (1.0 + t.max_abs()));
        }
    }

    #[test]
    fn generic_amplitudes_give_nonzero_low_orders() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from_seed(7);
        for _ in 0..200 {
            let a: Vec<Complex64> = (0..4)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            for n in [3usize, 4] {
                let base = prefix_base(n);
                let t = amplitude_table(2, base, &a);
                assert!(interference_order(base, &t, 0).unwrap().abs() > 1e-6);
            }
        }
    }
}
