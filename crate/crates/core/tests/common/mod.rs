//! Independent oracles shared by the integration tests and the acceptance
//! runner.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use sorkin_core::ccd::{Frame, FrameStack};
use sorkin_core::hierarchy::{interference_order, InterferenceOrderResult};
use sorkin_core::seed::rng_from_seed;
use sorkin_core::{GTable, PhaseGrid, SlitConfiguration};

/// O(n²) pair count with `|a - b| <= window`.
pub fn brute_force_coincidences(a: &[u64], b: &[u64], window: u64) -> u64 {
    let mut n = 0;
    for &x in a {
        for &y in b {
            if x.abs_diff(y) <= window {
                n += 1;
            }
        }
    }
    n
}

/// Sorted random stream with clustered and duplicate time stamps.
pub fn random_stream<R: Rng>(rng: &mut R, len: usize, span: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..len).map(|_| rng.random_range(0..span)).collect();
    for i in 1..v.len() {
        if rng.random_bool(0.05) {
            v[i] = v[i - 1];
        }
    }
    v.sort_unstable();
    v
}

/// Per-column line-pair means `⟨(I_l + I_{l+1})/2⟩` and `⟨I_l I_{l+1}⟩`
/// by direct averaging over all pairs of all frames.
pub fn direct_line_pair_means(stack: &FrameStack) -> (Vec<f64>, Vec<f64>) {
    let w = stack.width() as usize;
    let h = stack.height();
    let mut g1 = vec![0.0; w];
    let mut g2 = vec![0.0; w];
    let mut pairs = 0.0;
    for f in &stack.frames {
        for l in (0..h - 1).step_by(2) {
            pairs += 1.0;
            for c in 0..w {
                let a = f.get(l, c as u32) as f64;
                let b = f.get(l + 1, c as u32) as f64;
                g1[c] += a + b;
                g2[c] += a * b;
            }
        }
    }
    (
        g1.iter().map(|s| s / (2.0 * pairs)).collect(),
        g2.iter().map(|s| s / pairs).collect(),
    )
}

pub fn random_stack(seed: u64, frames: usize, rows: u32, cols: u32, max: u16) -> FrameStack {
    let mut rng = rng_from_seed(seed);
    let frames = (0..frames)
        .map(|_| {
            let px = (0..rows * cols)
                .map(|_| rng.random_range(0..=max))
                .collect();
            Frame::new(cols, rows, px).unwrap()
        })
        .collect();
    FrameStack::new("synthetic", seed, frames).unwrap()
}

/// `G^(M)_S = |Σ_{j∈S} a_j|^{2M}` for every nonempty subset of `n` slits.
pub fn random_amplitude_table<R: Rng>(rng: &mut R, m: u32, n: usize) -> GTable {
    let amps: Vec<Complex64> = (0..n)
        .map(|_| {
            Complex64::from_polar(
                rng.random_range(0.05..2.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let mut table = GTable::new(m, PhaseGrid::single(0.0).unwrap()).unwrap();
    for s in SlitConfiguration::prefix(n).unwrap().nonempty_subsets() {
        let a: Complex64 = s.slits().map(|j| amps[j]).sum();
        table.insert(s, vec![a.norm_sqr().powi(m as i32)]).unwrap();
    }
    table
}

/// Largest `|I^(M)_N| / ‖G‖` over `draws` random tables.
pub fn vanishing_worst(seed: u64, m: u32, n: usize, draws: usize) -> f64 {
    let mut rng = rng_from_seed(seed);
    let base = SlitConfiguration::prefix(n).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let t = random_amplitude_table(&mut rng, m, n);
        let i = interference_order(base, &t, 0).unwrap();
        worst = worst.max(i.abs() / t.max_abs());
    }
    worst
}

/// Largest difference between two sets of normalized orders.
pub fn max_order_difference(a: &[InterferenceOrderResult], b: &[InterferenceOrderResult]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            x.normalized
                .iter()
                .zip(&y.normalized)
                .map(|(u, v)| (u - v).abs())
        })
        .fold(0.0, f64::max)
}

pub fn orders_for(table: &GTable) -> Vec<InterferenceOrderResult> {
    (2..=5)
        .map(|n| {
            InterferenceOrderResult::evaluate(SlitConfiguration::prefix(n).unwrap(), table).unwrap()
        })
        .collect()
}
