use crate::ccd::{Frame, FrameStack};
use crate::error::{Error, Result};

/// Running integer moments of the line-pair products of a frame stack.
///
/// Rows `(0, 1), (2, 3), ...` of every frame form disjoint line pairs. Each
/// pair and column contributes one independent sample of
/// `m1 = I_l + I_{l+1}` and `m2 = I_l · I_{l+1}`. All sums are exact
/// integers, so the estimates do not depend on accumulation order.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdAccumulator {
    cols: usize,
    samples: u64,
    s1: Vec<u64>,
    s11: Vec<u128>,
    s2: Vec<u128>,
    s22: Vec<u128>,
    s12: Vec<u128>,
}

impl CcdAccumulator {
    pub fn new(cols: usize) -> Self {
        CcdAccumulator {
            cols,
            samples: 0,
            s1: vec![0; cols],
            s11: vec![0; cols],
            s2: vec![0; cols],
            s22: vec![0; cols],
            s12: vec![0; cols],
        }
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Samples per column so far.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn add_pixels(&mut self, width: u32, height: u32, pixels: &[u16]) -> Result<()> {
        let w = width as usize;
        if w != self.cols {
            return Err(Error::GridMismatch(format!(
                "frame has {w} columns, accumulator {}",
                self.cols
            )));
        }
        if pixels.len() != w * height as usize {
            return Err(Error::InvalidInput(
                "pixel buffer does not match frame size".into(),
            ));
        }
        if height < 2 {
            return Err(Error::InvalidInput(
                "a line pair needs at least two rows".into(),
            ));
        }
        for pair in pixels.chunks_exact(2 * w) {
            let (upper, lower) = pair.split_at(w);
            for c in 0..w {
                let a = upper[c] as u64;
                let b = lower[c] as u64;
                let m1 = a + b;
                let m2 = a * b;
                self.s1[c] += m1;
                self.s11[c] += (m1 * m1) as u128;
                self.s2[c] += m2 as u128;
                self.s22[c] += (m2 as u128) * (m2 as u128);
                self.s12[c] += (m1 as u128) * (m2 as u128);
            }
        }
        self.samples += (height / 2) as u64;
        Ok(())
    }

    pub fn add_frame(&mut self, frame: &Frame) -> Result<()> {
        self.add_pixels(frame.width, frame.height, &frame.pixels)
    }

    pub fn finish(&self) -> Result<CcdCorrelation> {
        if self.samples == 0 {
            return Err(Error::InvalidInput("no line pairs accumulated".into()));
        }
        Ok(CcdCorrelation { acc: self.clone() })
    }
}

/// `G^(1)` and `G^(2)` per column from line-pair products.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdCorrelation {
    acc: CcdAccumulator,
}

/// `(n Σx² - (Σx)²) / (n² (n - 1))`, the variance of the sample mean.
fn mean_variance(n: u64, sum: u128, sum_sq: u128) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let n128 = n as u128;
    let num = n128 * sum_sq - sum * sum;
    let n = n as f64;
    num as f64 / (n * n * (n - 1.0))
}

impl CcdCorrelation {
    pub fn cols(&self) -> usize {
        self.acc.cols
    }

    /// Independent line-pair measurements per column.
    pub fn samples(&self) -> u64 {
        self.acc.samples
    }

    /// Mean count per pixel.
    pub fn g1(&self) -> Vec<f64> {
        let n = 2.0 * self.acc.samples as f64;
        self.acc.s1.iter().map(|&s| s as f64 / n).collect()
    }

    pub fn g1_sigma(&self) -> Vec<f64> {
        (0..self.cols())
            .map(|c| {
                (mean_variance(self.acc.samples, self.acc.s1[c] as u128, self.acc.s11[c]) / 4.0)
                    .sqrt()
            })
            .collect()
    }

    /// Mean neighboring-line product.
    pub fn g2(&self) -> Vec<f64> {
        let n = self.acc.samples as f64;
        self.acc.s2.iter().map(|&s| s as f64 / n).collect()
    }

    pub fn g2_sigma(&self) -> Vec<f64> {
        (0..self.cols())
            .map(|c| mean_variance(self.acc.samples, self.acc.s2[c], self.acc.s22[c]).sqrt())
            .collect()
    }

    /// Mean of `(I_l - o)(I_{l+1} - o)` for a per-column offset `o` with
    /// uncertainty `o_sigma`.
    pub fn offset_g2(&self, offset: &[f64], offset_sigma: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if offset.len() != self.cols() || offset_sigma.len() != self.cols() {
            return Err(Error::GridMismatch(format!(
                "{} offsets for {} columns",
                offset.len(),
                self.cols()
            )));
        }
        let n = self.acc.samples;
        let nf = n as f64;
        let g1 = self.g1();
        let g2 = self.g2();
        let mut values = Vec::with_capacity(self.cols());
        let mut sigma = Vec::with_capacity(self.cols());
        for c in 0..self.cols() {
            let o = offset[c];
            values.push(g2[c] - 2.0 * o * g1[c] + o * o);
            let s1 = self.acc.s1[c] as u128;
            let var1 = mean_variance(n, s1, self.acc.s11[c]);
            let var2 = mean_variance(n, self.acc.s2[c], self.acc.s22[c]);
            let cov = if n < 2 {
                0.0
            } else {
                let num = (n as i128) * (self.acc.s12[c] as i128)
                    - (s1 as i128) * (self.acc.s2[c] as i128);
                num as f64 / (nf * nf * (nf - 1.0))
            };
            let d_o = 2.0 * (o - g1[c]);
            let var =
                var2 - 2.0 * o * cov + o * o * var1 + d_o * d_o * offset_sigma[c] * offset_sigma[c];
            sigma.push(var.max(0.0).sqrt());
        }
        Ok((values, sigma))
    }
}

/// Line-pair autocorrelation of a whole stack.
pub fn ccd_autocorrelation(stack: &FrameStack) -> Result<CcdCorrelation> {
    if stack.frames.is_empty() {
        return Err(Error::InvalidInput(format!(
            "frame stack {} is empty",
            stack.label
        )));
    }
    let mut acc = CcdAccumulator::new(stack.width() as usize);
    for f in &stack.frames {
        acc.add_frame(f)?;
    }
    acc.finish()
}

/// Autocorrelation of a sub-window `rows × cols` starting at `(row0, col0)`.
pub fn ccd_autocorrelation_window(
    stack: &FrameStack,
    row0: u32,
    rows: u32,
    col0: u32,
    cols: u32,
) -> Result<CcdCorrelation> {
    if stack.frames.is_empty() {
        return Err(Error::InvalidInput(format!(
            "frame stack {} is empty",
            stack.label
        )));
    }
    if row0 as u64 + rows as u64 > stack.height() as u64
        || col0 as u64 + cols as u64 > stack.width() as u64
        || rows == 0
        || cols == 0
    {
        return Err(Error::InvalidInput(format!(
            "crop {rows}x{cols} at ({row0}, {col0}) outside {}x{} frames",
            stack.height(),
            stack.width()
        )));
    }
    let mut acc = CcdAccumulator::new(cols as usize);
    let mut buf = Vec::with_capacity(rows as usize * cols as usize);
    for f in &stack.frames {
        buf.clear();
        for r in row0..row0 + rows {
            let row = f.row(r);
            buf.extend_from_slice(&row[col0 as usize..(col0 + cols) as usize]);
        }
        acc.add_pixels(cols, rows, &buf)?;
    }
    acc.finish()
}
