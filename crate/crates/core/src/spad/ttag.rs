//! Binary time-tag files.
//!
//! Layout (little endian): magic `TTAG`, `u16` version, `u64` run duration
//! in ps, `u64` record count, then one 9-byte record per event: `u8`
//! channel (1 or 2) and `u64` timestamp in ps. Records are sorted by time.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"TTAG";
const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TimeTag {
    pub time_ps: u64,
    pub channel: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTagFile {
    pub duration_ps: u64,
    pub tags: Vec<TimeTag>,
}

/// Interleaves two detector streams into one time-ordered record list.
pub fn merge_channels(first: &[u64], second: &[u64]) -> Vec<TimeTag> {
    let mut out = Vec::with_capacity(first.len() + second.len());
    let (mut i, mut j) = (0, 0);
    while i < first.len() || j < second.len() {
        if j >= second.len() || (i < first.len() && first[i] <= second[j]) {
            out.push(TimeTag {
                time_ps: first[i],
                channel: 1,
            });
            i += 1;
        } else {
            out.push(TimeTag {
                time_ps: second[j],
                channel: 2,
            });
            j += 1;
        }
    }
    out
}

pub fn split_channels(tags: &[TimeTag]) -> (Vec<u64>, Vec<u64>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for t in tags {
        if t.channel == 1 {
            a.push(t.time_ps);
        } else {
            b.push(t.time_ps);
        }
    }
    (a, b)
}

pub fn write_timetags(path: &Path, file: &TimeTagFile) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    encode(&mut w, file).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn encode<W: Write>(w: &mut W, file: &TimeTagFile) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&file.duration_ps.to_le_bytes())?;
    w.write_all(&(file.tags.len() as u64).to_le_bytes())?;
    for t in &file.tags {
        w.write_all(&[t.channel])?;
        w.write_all(&t.time_ps.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_timetags(path: &Path) -> Result<TimeTagFile> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(f)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn decode(bytes: &[u8]) -> Result<TimeTagFile> {
    const HEADER: usize = 4 + 2 + 8 + 8;
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return Err(Error::Format("not a time-tag file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported time-tag version {version}"
        )));
    }
    let duration_ps = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
    let body = &bytes[HEADER..];
    if body.len() as u64 != count.saturating_mul(9) {
        return Err(Error::Format(format!(
            "expected {count} records, found {} bytes",
            body.len()
        )));
    }
    let mut tags = Vec::with_capacity(count as usize);
    let mut last = 0u64;
    for (k, rec) in body.chunks_exact(9).enumerate() {
        let channel = rec[0];
        if channel != 1 && channel != 2 {
            return Err(Error::Format(format!("record {k}: bad channel {channel}")));
        }
        let time_ps = u64::from_le_bytes(rec[1..9].try_into().unwrap());
        if time_ps < last {
            return Err(Error::Format(format!("record {k}: timestamps not sorted")));
        }
        last = time_ps;
        tags.push(TimeTag { time_ps, channel });
    }
    Ok(TimeTagFile { duration_ps, tags })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_corruption() {
        let tags = merge_channels(&[1, 5, 9], &[2, 5, 100]);
        assert_eq!(tags.len(), 6);
        assert_eq!(
            tags[2],
            TimeTag {
                time_ps: 5,
                channel: 1
            }
        );
        let file = TimeTagFile {
            duration_ps: 1000,
            tags,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.ttag");
        write_timetags(&p, &file).unwrap();
        let back = read_timetags(&p).unwrap();
        assert_eq!(back, file);
        assert_eq!(split_channels(&back.tags), (vec![1, 5, 9], vec![2, 5, 100]));

        let mut bytes = std::fs::read(&p).unwrap();
        bytes.pop();
        assert!(decode(&bytes).is_err());
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[22] = 7;
        assert!(decode(&bytes).is_err());
        assert!(decode(b"JUNKJUNKJUNKJUNKJUNKJUNK").is_err());
    }
}
