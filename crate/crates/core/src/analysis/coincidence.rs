use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slits::SlitConfiguration;

fn check_sorted(stream: &[u64], id: usize) -> Result<()> {
    match stream.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(Error::UnsortedStream {
            stream: id,
            index: i + 1,
        }),
        None => Ok(()),
    }
}

/// Number of pairs `(t1, t2)` with `|t1 - t2| <= window_ps`. Every
/// in-window pair counts, so one event can take part in several pairs.
pub fn count_coincidences(first: &[u64], second: &[u64], window_ps: u64) -> Result<u64> {
    check_sorted(first, 1)?;
    check_sorted(second, 2)?;
    let mut lo = 0usize;
    let mut total = 0u64;
    for &t in first {
        while lo < second.len() && second[lo].saturating_add(window_ps) < t {
            lo += 1;
        }
        let hi = t.saturating_add(window_ps);
        total += second[lo..].iter().take_while(|&&u| u <= hi).count() as u64;
    }
    Ok(total)
}

/// Corrects for detectors that cannot resolve photon number.
///
/// The splitter sends both photons of a pair to the same detector half of
/// the time, so true two-photon events are twice the measured ones, and
/// each measured coincidence was also counted as a single.
pub fn correct_nonresolving(singles: u64, coincidences: u64) -> Result<(u64, u64)> {
    if singles < coincidences {
        return Err(Error::InconsistentCounts {
            singles,
            coincidences,
        });
    }
    Ok((singles - coincidences, 2 * coincidences))
}

/// Counts of one photon-regime run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub config: SlitConfiguration,
    pub singles: [u64; 2],
    pub coincidences: u64,
    pub duration_s: f64,
    pub window_ps: u64,
}

impl CountRecord {
    pub fn from_streams(
        config: SlitConfiguration,
        first: &[u64],
        second: &[u64],
        duration_s: f64,
        window_ps: u64,
    ) -> Result<Self> {
        Ok(CountRecord {
            config,
            singles: [first.len() as u64, second.len() as u64],
            coincidences: count_coincidences(first, second, window_ps)?,
            duration_s,
            window_ps,
        })
    }

    pub fn total_singles(&self) -> u64 {
        self.singles[0] + self.singles[1]
    }

    /// `(N^(1), N^(2))`, optionally corrected for non-resolving detectors.
    pub fn counts(&self, correct: bool) -> Result<(u64, u64)> {
        if correct {
            correct_nonresolving(self.total_singles(), self.coincidences)
        } else {
            Ok((self.total_singles(), self.coincidences))
        }
    }
}
