//! File plumbing: atomic writes, PNG and CF2D files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fpmforge_core::model::cf2d::{read_cf2d, write_cf2d};
use fpmforge_core::{ComplexField, Space};

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = BufWriter::new(fs::File::create(&tmp).with_context(|| format!("writing {}", tmp.display()))?);
        f.write_all(bytes)?;
        f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn encode_png(width: usize, height: usize, depth: png::BitDepth, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(depth);
        let mut w = enc.write_header()?;
        w.write_image_data(data)?;
    }
    Ok(out)
}

pub fn write_png16(path: &Path, width: usize, height: usize, samples: &[u16]) -> Result<()> {
    let data: Vec<u8> = samples.iter().flat_map(|s| s.to_be_bytes()).collect();
    write_atomic(path, &encode_png(width, height, png::BitDepth::Sixteen, &data)?)
}

pub fn write_png8(path: &Path, width: usize, height: usize, samples: &[u8]) -> Result<()> {
    write_atomic(path, &encode_png(width, height, png::BitDepth::Eight, samples)?)
}

/// Grayscale PNG as `(width, height, samples)` widened to 16 bits.
/// 8-bit files are returned unscaled.
pub fn read_png(path: &Path) -> Result<(usize, usize, Vec<u16>)> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let decoder = png::Decoder::new(std::io::BufReader::new(file));
    let mut reader = decoder.read_info().with_context(|| format!("decoding {}", path.display()))?;
    let mut buf = vec![0; reader.output_buffer_size().context("image too large")?];
    let info = reader.next_frame(&mut buf)?;
    if info.color_type != png::ColorType::Grayscale {
        bail!("{}: expected a grayscale PNG, got {:?}", path.display(), info.color_type);
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let data = &buf[..info.buffer_size()];
    let samples = match info.bit_depth {
        png::BitDepth::Sixteen => data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect(),
        png::BitDepth::Eight => data.iter().map(|&b| b as u16).collect(),
        other => bail!("{}: unsupported bit depth {other:?}", path.display()),
    };
    Ok((w, h, samples))
}

pub fn write_field(path: &Path, field: &ComplexField) -> Result<()> {
    let mut bytes = Vec::new();
    write_cf2d(field, &mut bytes)?;
    write_atomic(path, &bytes)
}

pub fn read_field(path: &Path, space: Space) -> Result<ComplexField> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_cf2d(std::io::BufReader::new(file), space).with_context(|| format!("reading {}", path.display()))
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
    write_atomic(path, &bytes)
}
