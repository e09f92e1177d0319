//! Slit configurations and measurement-set entries.
//!
//! A configuration is a subset of labeled slits `A, B, C, ...` stored as a
//! bitmask. The physical mask has five slits, but the hierarchy engine works
//! with up to [`MAX_SLITS`] so that higher particle orders can be exercised
//! numerically.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest number of slits a configuration can address (labels `A..=P`).
pub const MAX_SLITS: usize = 16;

/// Number of slits on the base mask.
pub const MASK_SLITS: usize = 5;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SlitConfiguration(u32);

impl SlitConfiguration {
    /// The background configuration `0` where every slit is blocked.
    pub const EMPTY: SlitConfiguration = SlitConfiguration(0);

    pub fn from_bits(bits: u32) -> Result<Self> {
        if bits >> MAX_SLITS != 0 {
            return Err(Error::InvalidInput(format!(
                "slit mask {bits:#x} addresses more than {MAX_SLITS} slits"
            )));
        }
        Ok(SlitConfiguration(bits))
    }

    pub fn from_slits<I: IntoIterator<Item = usize>>(slits: I) -> Result<Self> {
        let mut bits = 0u32;
        for s in slits {
            if s >= MAX_SLITS {
                return Err(Error::InvalidInput(format!("slit index {s} out of range")));
            }
            bits |= 1 << s;
        }
        Ok(SlitConfiguration(bits))
    }

    /// The first `n` slits, e.g. `prefix(3)` is `ABC`.
    pub fn prefix(n: usize) -> Result<Self> {
        if n > MAX_SLITS {
            return Err(Error::InvalidInput(format!("cannot open {n} slits")));
        }
        Ok(SlitConfiguration(((1u64 << n) - 1) as u32))
    }

    /// All five slits of the base mask.
    pub fn full_mask() -> Self {
        SlitConfiguration((1 << MASK_SLITS) - 1)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, slit: usize) -> bool {
        slit < MAX_SLITS && self.0 & (1 << slit) != 0
    }

    pub fn is_subset_of(self, other: SlitConfiguration) -> bool {
        self.0 & !other.0 == 0
    }

    /// Highest slit index plus one; zero for the empty configuration.
    pub fn span(self) -> usize {
        (32 - self.0.leading_zeros()) as usize
    }

    /// Open slit indices in ascending order.
    pub fn slits(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..MAX_SLITS).filter(move |&i| bits & (1 << i) != 0)
    }

    /// Every nonempty subset, in canonical order (size, then label).
    pub fn nonempty_subsets(self) -> Vec<SlitConfiguration> {
        let mut out = Vec::with_capacity((1usize << self.len()) - 1);
        let mut sub = self.0;
        while sub != 0 {
            out.push(SlitConfiguration(sub));
            sub = (sub - 1) & self.0;
        }
        out.sort();
        out
    }

    pub fn label(self) -> String {
        if self.is_empty() {
            return "0".to_string();
        }
        self.slits().map(|i| (b'A' + i as u8) as char).collect()
    }
}

impl Ord for SlitConfiguration {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.slits().cmp(other.slits()))
    }
}

impl PartialOrd for SlitConfiguration {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SlitConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl fmt::Debug for SlitConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SlitConfiguration({})", self.label())
    }
}

impl FromStr for SlitConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "0" {
            return Ok(SlitConfiguration::EMPTY);
        }
        if s.is_empty() {
            return Err(Error::Format("empty slit label".into()));
        }
        let mut bits = 0u32;
        for c in s.chars() {
            let idx = match c {
                'A'..='Z' => c as usize - 'A' as usize,
                _ => return Err(Error::Format(format!("bad slit label {s:?}"))),
            };
            if idx >= MAX_SLITS {
                return Err(Error::Format(format!("slit {c} out of range in {s:?}")));
            }
            if bits & (1 << idx) != 0 {
                return Err(Error::Format(format!("duplicate slit {c} in {s:?}")));
            }
            bits |= 1 << idx;
        }
        Ok(SlitConfiguration(bits))
    }
}

impl Serialize for SlitConfiguration {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for SlitConfiguration {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One of the 33 measurements that make up a measurement set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entry {
    /// A hierarchy configuration; `ABCDE` here is the first five-slit pattern.
    Slits(SlitConfiguration),
    /// The duplicate five-slit pattern used for the alignment check.
    SecondReference,
    /// All slits blocked.
    Background,
}

impl Entry {
    pub fn label(&self) -> String {
        match self {
            Entry::Slits(s) => s.label(),
            Entry::SecondReference => "ABCDE-2".to_string(),
            Entry::Background => "0".to_string(),
        }
    }

    /// Slits that transmit light for this entry.
    pub fn open_slits(&self) -> SlitConfiguration {
        match self {
            Entry::Slits(s) => *s,
            Entry::SecondReference => SlitConfiguration::full_mask(),
            Entry::Background => SlitConfiguration::EMPTY,
        }
    }

    /// The canonical 33-entry template: 31 configurations, `ABCDE-2`, `0`.
    pub fn set_template() -> Vec<Entry> {
        let mut v: Vec<Entry> = SlitConfiguration::full_mask()
            .nonempty_subsets()
            .into_iter()
            .map(Entry::Slits)
            .collect();
        v.push(Entry::SecondReference);
        v.push(Entry::Background);
        v
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Entry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ABCDE-2" => Ok(Entry::SecondReference),
            "0" => Ok(Entry::Background),
            _ => {
                let c: SlitConfiguration = s.parse()?;
                if !c.is_subset_of(SlitConfiguration::full_mask()) {
                    return Err(Error::Format(format!("{s} is not a mask configuration")));
                }
                Ok(Entry::Slits(c))
            }
        }
    }
}

impl Serialize for Entry {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_alphabetical() {
        let c = SlitConfiguration::from_slits([3, 1, 2]).unwrap();
        assert_eq!(c.label(), "BCD");
        assert_eq!("DCB".parse::<SlitConfiguration>().unwrap(), c);
        assert_eq!(SlitConfiguration::EMPTY.label(), "0");
        assert_eq!(
            "0".parse::<SlitConfiguration>().unwrap(),
            SlitConfiguration::EMPTY
        );
    }

    #[test]
    fn rejects_bad_labels() {
        assert!("AA".parse::<SlitConfiguration>().is_err());
        assert!("a".parse::<SlitConfiguration>().is_err());
        assert!("".parse::<SlitConfiguration>().is_err());
        assert!("Z".parse::<SlitConfiguration>().is_err());
        assert!("F".parse::<Entry>().is_err());
    }

    #[test]
    fn canonical_order() {
        let subs = SlitConfiguration::prefix(3).unwrap().nonempty_subsets();
        let labels: Vec<String> = subs.iter().map(|s| s.label()).collect();
        assert_eq!(labels, ["A", "B", "C", "AB", "AC", "BC", "ABC"]);
        let ad: SlitConfiguration = "AD".parse().unwrap();
        let bc: SlitConfiguration = "BC".parse().unwrap();
        assert!(ad < bc);
    }

    #[test]
    fn template_has_33_distinct_entries() {
        let t = Entry::set_template();
        assert_eq!(t.len(), 33);
        let mut sorted = t.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 33);
        for e in &t {
            assert_eq!(e.label().parse::<Entry>().unwrap(), *e);
        }
    }
}
