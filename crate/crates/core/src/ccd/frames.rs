//! Binary frame stacks with a TOML metadata sidecar.
//!
//! Layout (little endian): magic `FRAM`, `u16` version, `u32` width, `u32`
//! height, `u32` frame count, `u8` label length and the UTF-8 label, `u64`
//! seed, then the frames as row-major `u16` pixels.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CcdModel, CropWindow, Frame, FrameStack};
use crate::error::{Error, Result};
use crate::optics::MaskGeometry;

const MAGIC: &[u8; 4] = b"FRAM";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetadata {
    pub label: String,
    pub seed: u64,
    pub frames: u32,
    pub exposure_scale: f64,
    pub crop: CropWindow,
    pub ccd: CcdModel,
    pub geometry: MaskGeometry,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".toml");
    PathBuf::from(p)
}

/// Writes `stack` to `path` and its metadata to `path` + `.toml`.
pub fn write_frames(path: &Path, stack: &FrameStack, meta: &FrameMetadata) -> Result<()> {
    if stack.label.len() > u8::MAX as usize {
        return Err(Error::InvalidInput(format!(
            "label {} too long",
            stack.label
        )));
    }
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    encode(&mut w, stack)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let text = toml::to_string(meta).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

fn encode<W: Write>(w: &mut W, stack: &FrameStack) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&stack.width().to_le_bytes())?;
    w.write_all(&stack.height().to_le_bytes())?;
    w.write_all(&(stack.frames.len() as u32).to_le_bytes())?;
    w.write_all(&[stack.label.len() as u8])?;
    w.write_all(stack.label.as_bytes())?;
    w.write_all(&stack.seed.to_le_bytes())?;
    for f in &stack.frames {
        for &p in &f.pixels {
            w.write_all(&p.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a frame file and its sidecar.
pub fn read_frames(path: &Path) -> Result<(FrameStack, FrameMetadata)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(f)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let stack =
        decode(&bytes).map_err(|msg| Error::Format(format!("{}: {msg}", path.display())))?;
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: FrameMetadata =
        toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", side.display())))?;
    if meta.label != stack.label || meta.seed != stack.seed {
        return Err(Error::Format(format!(
            "{} does not describe {}",
            side.display(),
            path.display()
        )));
    }
    Ok((stack, meta))
}

fn decode(bytes: &[u8]) -> std::result::Result<FrameStack, String> {
    let mut pos = 0usize;
    let mut take = |n: usize| -> std::result::Result<&[u8], String> {
        let s = bytes.get(pos..pos + n).ok_or("truncated frame file")?;
        pos += n;
        Ok(s)
    };
    if take(4)? != MAGIC {
        return Err("not a frame file".into());
    }
    let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported frame version {version}"));
    }
    let width = u32::from_le_bytes(take(4)?.try_into().unwrap());
    let height = u32::from_le_bytes(take(4)?.try_into().unwrap());
    let count = u32::from_le_bytes(take(4)?.try_into().unwrap());
    let len = take(1)?[0] as usize;
    let label = String::from_utf8(take(len)?.to_vec()).map_err(|_| "label is not UTF-8")?;
    let seed = u64::from_le_bytes(take(8)?.try_into().unwrap());
    let per_frame = width as usize * height as usize;
    let body = take(per_frame * 2 * count as usize)?;
    if pos != bytes.len() {
        return Err("trailing bytes after last frame".into());
    }
    let frames = if per_frame == 0 {
        Vec::new()
    } else {
        body.chunks_exact(per_frame * 2)
            .map(|chunk| Frame {
                width,
                height,
                pixels: chunk
                    .chunks_exact(2)
                    .map(|b| u16::from_le_bytes([b[0], b[1]]))
                    .collect(),
            })
            .collect()
    };
    Ok(FrameStack {
        label,
        seed,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccd::{sample_stack, ExpectedImage};

    #[test]
    fn roundtrip() {
        let ccd = CcdModel::default();
        let img = ExpectedImage {
            rows: 3,
            profile: vec![10.0, 2000.0, 0.0, 5.0],
        };
        let stack = sample_stack("ABD", &img, &ccd, 4, 77).unwrap();
        let meta = FrameMetadata {
            label: "ABD".into(),
            seed: 77,
            frames: 4,
            exposure_scale: 1.5,
            crop: CropWindow::centered(&ccd, 3, 4).unwrap(),
            ccd,
            geometry: MaskGeometry::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ABD.frames");
        write_frames(&p, &stack, &meta).unwrap();
        let (s2, m2) = read_frames(&p).unwrap();
        assert_eq!(s2, stack);
        assert_eq!(m2, meta);

        let mut bytes = fs::read(&p).unwrap();
        bytes.push(0);
        assert!(decode(&bytes).is_err());
        bytes.truncate(bytes.len() - 3);
        assert!(decode(&bytes).is_err());
    }
}
