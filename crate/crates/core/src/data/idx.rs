use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, GridImage, Result};

/// Magic number of an unsigned-byte rank-3 IDX file (images).
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
/// Magic number of an unsigned-byte rank-1 IDX file (labels).
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn parse_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        reason: reason.into(),
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    match bytes.get(offset..offset + 4) {
        Some(b) => Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]])),
        None => Err(parse_err(offset, "truncated header")),
    }
}

fn read_header(bytes: &[u8], magic: u32) -> Result<(Vec<usize>, usize)> {
    let found = read_u32(bytes, 0)?;
    if found != magic {
        return Err(parse_err(
            0,
            format!("wrong magic {found:#010x}, expected {magic:#010x}"),
        ));
    }
    let rank = (magic & 0xff) as usize;
    let mut dims = Vec::with_capacity(rank);
    for d in 0..rank {
        dims.push(read_u32(bytes, 4 + 4 * d)? as usize);
    }
    Ok((dims, 4 + 4 * rank))
}

fn payload<'a>(bytes: &'a [u8], dims: &[usize], start: usize) -> Result<&'a [u8]> {
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| parse_err(4, "dimension product overflows"))?;
    let end = start
        .checked_add(len)
        .ok_or_else(|| parse_err(4, "dimension product overflows"))?;
    if bytes.len() < end {
        return Err(parse_err(
            bytes.len(),
            format!("truncated payload: expected {len} bytes after offset {start}"),
        ));
    }
    if bytes.len() > end {
        return Err(parse_err(end, "trailing bytes after payload"));
    }
    Ok(&bytes[start..end])
}

/// Decodes an IDX image file. Pixel bytes are divided by 255.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<GridImage>> {
    let (dims, start) = read_header(bytes, IDX_IMAGES_MAGIC)?;
    let (count, height, width) = (dims[0], dims[1], dims[2]);
    if count > 0 && (height == 0 || width == 0) {
        return Err(parse_err(8, "zero image dimension"));
    }
    let data = payload(bytes, &dims, start)?;
    if count == 0 {
        return Ok(Vec::new());
    }
    data.chunks_exact(height * width)
        .map(|px| {
            GridImage::new(
                width,
                height,
                px.iter().map(|&b| f64::from(b) / 255.0).collect(),
            )
        })
        .collect()
}

/// Decodes an IDX label file.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let (dims, start) = read_header(bytes, IDX_LABELS_MAGIC)?;
    Ok(payload(bytes, &dims, start)?.to_vec())
}

fn quantize(v: f64) -> u8 {
    libm::round(v.clamp(0.0, 1.0) * 255.0) as u8
}

/// Encodes images as an IDX image file, quantizing `[0, 1]` to bytes.
pub fn encode_idx_images(images: &[GridImage]) -> Result<Vec<u8>> {
    let (width, height) = match images.first() {
        Some(img) => (img.width(), img.height()),
        None => (0, 0),
    };
    for img in images {
        if img.width() != width || img.height() != height {
            return Err(Error::GeometryMismatch(format!(
                "IDX images must share one size; found {}x{} and {}x{}",
                width,
                height,
                img.width(),
                img.height()
            )));
        }
        img.check_finite("IDX image")?;
    }
    let to_u32 = |n: usize, what: &'static str| {
        u32::try_from(n).map_err(|_| Error::invalid(what, n as f64, "exceeds the IDX u32 range"))
    };
    let mut out = Vec::with_capacity(16 + images.len() * width * height);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&to_u32(images.len(), "image count")?.to_be_bytes());
    out.extend_from_slice(&to_u32(height, "height")?.to_be_bytes());
    out.extend_from_slice(&to_u32(width, "width")?.to_be_bytes());
    for img in images {
        out.extend(img.values().iter().map(|&v| quantize(v)));
    }
    Ok(out)
}

/// Encodes labels as an IDX label file.
pub fn encode_idx_labels(labels: &[u8]) -> Result<Vec<u8>> {
    let n = u32::try_from(labels.len()).map_err(|_| {
        Error::invalid(
            "label count",
            labels.len() as f64,
            "exceeds the IDX u32 range",
        )
    })?;
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&n.to_be_bytes());
    out.extend_from_slice(labels);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn blob() -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend_from_slice(&[0, 255, 255, 0, 255, 255, 0, 0]);
        b
    }

    #[test]
    fn hand_built_blob() {
        let imgs = parse_idx_images(&blob()).unwrap();
        assert_eq!(imgs.len(), 2);
        assert_eq!(imgs[0].values(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(imgs[1].values(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!((imgs[0].width(), imgs[0].height()), (2, 2));
    }

    #[test]
    fn non_square_dimensions_are_height_then_width() {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3];
        b.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = &parse_idx_images(&b).unwrap()[0];
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.get(1, 0), 4.0 / 255.0);
    }

    #[test]
    fn errors_carry_offsets() {
        assert!(matches!(
            parse_idx_images(&[]),
            Err(Error::Parse { offset: 0, .. })
        ));
        let mut wrong = blob();
        wrong[3] = 1;
        assert!(matches!(
            parse_idx_images(&wrong),
            Err(Error::Parse { offset: 0, .. })
        ));
        let short = &blob()[..18];
        assert!(matches!(
            parse_idx_images(short),
            Err(Error::Parse { offset: 18, .. })
        ));
        let header_only = &blob()[..10];
        assert!(matches!(
            parse_idx_images(header_only),
            Err(Error::Parse { offset: 8, .. })
        ));
        let huge = vec![
            0, 0, 8, 3, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255, 255,
        ];
        assert!(parse_idx_images(&huge).is_err());
    }

    #[test]
    fn labels_round_trip() {
        let enc = encode_idx_labels(&[3, 1, 4]).unwrap();
        assert_eq!(&enc[..4], &IDX_LABELS_MAGIC.to_be_bytes());
        assert_eq!(parse_idx_labels(&enc).unwrap(), vec![3, 1, 4]);
        assert!(parse_idx_labels(&blob()).is_err());
    }

    #[test]
    fn images_round_trip_after_quantization() {
        let a = GridImage::from_fn(3, 2, |r, c| (r * 3 + c) as f64 / 7.0);
        let enc = encode_idx_images(&[a.clone(), a.clone()]).unwrap();
        assert_eq!(&enc[..4], &IDX_IMAGES_MAGIC.to_be_bytes());
        let back = parse_idx_images(&enc).unwrap();
        let again = parse_idx_images(&encode_idx_images(&back).unwrap()).unwrap();
        assert_eq!(back, again);
        for (x, y) in a.values().iter().zip(back[0].values()) {
            assert!((x - y).abs() <= 0.5 / 255.0 + 1e-15);
        }
    }
}
