//! Image and dataset files: IDX, binary PGM and (optionally) PNG.
//!
//! Grayscale files store `round(255 · clamp(v, 0, 1))` per pixel and read
//! back as `byte / 255`.

use std::fs;
use std::path::Path;

use girli_core::data::{encode_idx_images, encode_idx_labels, parse_idx_images, parse_idx_labels};
use girli_core::GridImage;

use crate::error::{Result, RunError};

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| RunError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| RunError::io(path, e))
}

fn with_path(path: &Path) -> impl FnOnce(girli_core::Error) -> RunError + '_ {
    move |e| RunError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

pub fn read_idx_images(path: &Path) -> Result<Vec<GridImage>> {
    parse_idx_images(&read(path)?).map_err(with_path(path))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    parse_idx_labels(&read(path)?).map_err(with_path(path))
}

pub fn write_idx_images(path: &Path, images: &[GridImage]) -> Result<()> {
    write(path, &encode_idx_images(images)?)
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    write(path, &encode_idx_labels(labels)?)
}

/// Row-major 8-bit pixels of an image.
pub fn to_gray_bytes(image: &GridImage) -> Vec<u8> {
    image
        .values()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

/// Writes a binary (P5) 8-bit PGM.
pub fn write_pgm(path: &Path, image: &GridImage) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    bytes.extend(to_gray_bytes(image));
    write(path, &bytes)
}

/// Reads a binary (P5) PGM with maxval 255.
pub fn read_pgm(path: &Path) -> Result<GridImage> {
    let bytes = read(path)?;
    let fail = |reason: &str| RunError::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if bytes.get(pos) == Some(&b'#') {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(fail("truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(fail("not a binary PGM (P5)"));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| fail("bad PGM header number"))
    };
    let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 255 {
        return Err(fail("only 8-bit PGM (maxval 255) is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    let raster = bytes.get(pos + 1..).ok_or_else(|| fail("missing raster"))?;
    if raster.len() != width * height {
        return Err(fail("raster size does not match the header"));
    }
    let values = raster.iter().map(|&b| f64::from(b) / 255.0).collect();
    GridImage::new(width, height, values).map_err(with_path(path))
}

/// Writes an 8-bit grayscale PNG.
#[cfg(feature = "png")]
pub fn write_png(path: &Path, image: &GridImage) -> Result<()> {
    let buf = image::GrayImage::from_raw(
        image.width() as u32,
        image.height() as u32,
        to_gray_bytes(image),
    )
    .expect("buffer length matches the image size");
    buf.save(path).map_err(|e| RunError::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
