//! Binary 8-bit PGM (P5) frames and numbered frame sequences on disk.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::Frame;

pub const MANIFEST_NAME: &str = "manifest.txt";

/// `frame_000042.pgm`
pub fn frame_file_name(index: u64) -> String {
    format!("frame_{index:06}.pgm")
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.luminance());
    out
}

/// Parses a P5 image. Header tokens may be separated by any whitespace and
/// interleaved with `#` comments.
pub fn decode_pgm(bytes: &[u8], index: u64) -> Result<Frame> {
    let mut pos = 0;
    let magic = next_token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::Pgm(format!(
            "expected P5 magic, found {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = parse_number(next_token(bytes, &mut pos)?, "width")?;
    let height = parse_number(next_token(bytes, &mut pos)?, "height")?;
    let maxval = parse_number(next_token(bytes, &mut pos)?, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Pgm(format!("maxval {maxval} is not 8-bit")));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Pgm("missing whitespace after header".into()));
    }
    pos += 1;
    let needed = width * height;
    let raster = &bytes[pos..];
    if raster.len() < needed {
        return Err(Error::Pgm(format!(
            "truncated raster: {} of {needed} bytes",
            raster.len()
        )));
    }
    if let Some(v) = raster[..needed].iter().find(|v| usize::from(**v) > maxval) {
        return Err(Error::Pgm(format!("sample {v} exceeds maxval {maxval}")));
    }
    Frame::new(width, height, index, raster[..needed].to_vec())
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Pgm("unexpected end of header".into()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_number(token: &[u8], what: &str) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Pgm(format!("bad {what} {:?}", String::from_utf8_lossy(token))))
}

pub fn write_pgm(path: &Path, frame: &Frame) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&encode_pgm(frame))?;
    w.flush()?;
    Ok(())
}

pub fn read_pgm(path: &Path, index: u64) -> Result<Frame> {
    decode_pgm(&fs::read(path)?, index)
}

/// Writes `frame_NNNNNN.pgm` files named after each frame's index, plus the
/// manifest text.
pub fn write_sequence(dir: &Path, frames: &[Frame], manifest: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    for f in frames {
        write_pgm(&dir.join(frame_file_name(f.index())), f)?;
    }
    fs::write(dir.join(MANIFEST_NAME), manifest)?;
    Ok(())
}

/// Numbered `.pgm` files in `dir`, sorted by the number at the end of the
/// file stem.
pub fn list_sequence(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if !is_pgm || !path.is_file() {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        let digits: String = stem
            .chars()
            .rev()
            .take_while(char::is_ascii_digit)
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        let index = digits
            .parse()
            .map_err(|_| Error::Pgm(format!("{} has no frame number", path.display())))?;
        out.push((index, path));
    }
    out.sort();
    Ok(out)
}
