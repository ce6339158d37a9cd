//! Label-map files.
//!
//! Two encodings are supported:
//!
//! * Binary PGM (`P5`): `P5 <width> <height> <maxval>` header (whitespace
//!   separated, `#` comments allowed), one whitespace byte, then row-major
//!   samples. Samples are one byte when `maxval < 256` and two big-endian bytes
//!   otherwise. The sample value is the label id.
//! * Text: a first line `rows cols`, then `rows·cols` whitespace-separated
//!   labels in row-major order.
//!
//! A directory is read as a multi-frame map: its regular files, sorted by
//! name, are stacked along the frame axis.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::map::{SegmentationMap, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelFormat {
    Pgm,
    Text,
}

impl LabelFormat {
    /// Guesses the format from a file extension (`.pgm` or anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") => LabelFormat::Pgm,
            _ => LabelFormat::Text,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_label_map(path: &Path) -> Result<SegmentationMap> {
    let meta = fs::metadata(path).map_err(io_err(path))?;
    if meta.is_dir() {
        let mut frames: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io_err(path))?
            .map(|entry| entry.map(|e| e.path()).map_err(io_err(path)))
            .collect::<Result<_>>()?;
        frames.retain(|p| p.is_file());
        frames.sort();
        if frames.is_empty() {
            return Err(Error::MalformedData {
                path: path.to_path_buf(),
                reason: "frame directory is empty".into(),
            });
        }
        let frames = frames
            .iter()
            .map(|p| read_label_file(p))
            .collect::<Result<Vec<_>>>()?;
        return SegmentationMap::stack_frames(frames);
    }
    read_label_file(path)
}

fn read_label_file(path: &Path) -> Result<SegmentationMap> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    match bytes.get(..2) {
        Some(b"P5") => decode_pgm(&bytes, path),
        Some([b'P', _]) => Err(Error::UnsupportedFormat(format!(
            "{}: only binary PGM (P5) is supported",
            path.display()
        ))),
        _ if bytes
            .first()
            .is_some_and(|b| b.is_ascii_digit() || b.is_ascii_whitespace()) =>
        {
            let text = std::str::from_utf8(&bytes).map_err(|_| {
                Error::UnsupportedFormat(format!("{}: neither PGM nor UTF-8 text", path.display()))
            })?;
            decode_text(text, path)
        }
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: unrecognised label map encoding",
            path.display()
        ))),
    }
}

pub fn write_label_map(map: &SegmentationMap, path: &Path, format: LabelFormat) -> Result<()> {
    let bytes = match format {
        LabelFormat::Pgm => encode_pgm(map)?,
        LabelFormat::Text => encode_text(map)?.into_bytes(),
    };
    fs::write(path, bytes).map_err(io_err(path))
}

fn single_frame(map: &SegmentationMap) -> Result<Shape> {
    let shape = map.shape();
    if shape.frames != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "multi-frame map {shape} must be written one frame per file"
        )));
    }
    Ok(shape)
}

/// Encodes a single-frame map as binary PGM, using one-byte samples when every
/// label fits.
pub fn encode_pgm(map: &SegmentationMap) -> Result<Vec<u8>> {
    let shape = single_frame(map)?;
    let max = map.max_label();
    if max > u16::MAX as u32 {
        return Err(Error::LabelOutOfRange {
            label: max,
            max: u16::MAX as u32,
        });
    }
    let wide = max > u8::MAX as u32;
    let maxval = if wide { 65535 } else { 255 };
    let mut out = format!("P5\n{} {}\n{}\n", shape.width, shape.height, maxval).into_bytes();
    if wide {
        out.extend(map.labels().iter().flat_map(|&l| (l as u16).to_be_bytes()));
    } else {
        out.extend(map.labels().iter().map(|&l| l as u8));
    }
    Ok(out)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl HeaderCursor<'_> {
    fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::MalformedHeader {
            path: self.path.to_path_buf(),
            reason: reason.into(),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.malformed(format!("missing or invalid {what}")))
    }
}

pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<SegmentationMap> {
    let mut cursor = HeaderCursor { bytes, pos: 0, path };
    if !bytes.starts_with(b"P5") {
        return Err(cursor.malformed("missing P5 magic"));
    }
    cursor.pos = 2;
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(cursor.malformed("zero width or height"));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(cursor.malformed(format!("maxval {maxval} outside 1..=65535")));
    }
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(cursor.malformed("no whitespace after maxval")),
    }

    let payload = &bytes[cursor.pos..];
    let samples = width * height;
    let sample_bytes = if maxval > 255 { 2 } else { 1 };
    if payload.len() < samples * sample_bytes {
        return Err(Error::TruncatedData {
            path: path.to_path_buf(),
            expected: samples,
            got: payload.len() / sample_bytes,
        });
    }
    let labels: Vec<u32> = if sample_bytes == 2 {
        payload[..samples * 2]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as u32)
            .collect()
    } else {
        payload[..samples].iter().map(|&b| b as u32).collect()
    };
    if let Some(&bad) = labels.iter().find(|&&l| l as usize > maxval) {
        return Err(Error::MalformedData {
            path: path.to_path_buf(),
            reason: format!("sample {bad} exceeds maxval {maxval}"),
        });
    }
    SegmentationMap::from_rows(height, width, labels)
}

pub fn encode_text(map: &SegmentationMap) -> Result<String> {
    let shape = single_frame(map)?;
    let mut out = format!("{} {}\n", shape.height, shape.width);
    for row in map.labels().chunks(shape.width) {
        let line: Vec<String> = row.iter().map(u32::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn decode_text(text: &str, path: &Path) -> Result<SegmentationMap> {
    let malformed_header = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.into(),
    };
    let (header, body) = text.split_once('\n').unwrap_or((text, ""));
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| malformed_header("expected `rows cols`"))?;
    let [rows, cols] = dims[..] else {
        return Err(malformed_header("expected `rows cols`"));
    };
    if rows == 0 || cols == 0 {
        return Err(malformed_header("zero rows or columns"));
    }
    let labels: Vec<u32> = body
        .split_whitespace()
        .map(|tok| {
            tok.parse().map_err(|_| Error::MalformedData {
                path: path.to_path_buf(),
                reason: format!("{tok:?} is not a non-negative integer label"),
            })
        })
        .collect::<Result<_>>()?;
    let expected = rows * cols;
    if labels.len() < expected {
        return Err(Error::TruncatedData {
            path: path.to_path_buf(),
            expected,
            got: labels.len(),
        });
    }
    if labels.len() > expected {
        return Err(Error::MalformedData {
            path: path.to_path_buf(),
            reason: format!("{} labels for a {rows}x{cols} map", labels.len()),
        });
    }
    SegmentationMap::from_rows(rows, cols, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn here() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn text_flat_map() {
        let map = decode_text("1 4\n0 0 1 1", here()).unwrap();
        assert_eq!(map.shape(), Shape::image(1, 4));
        assert_eq!(map.labels(), &[0, 0, 1, 1]);
    }

    #[test]
    fn pgm_one_byte_samples() {
        let bytes = b"P5\n2 2\n255\n\x00\x01\x01\x00";
        let map = decode_pgm(bytes, here()).unwrap();
        assert_eq!(map.shape(), Shape::image(2, 2));
        assert_eq!(map.labels(), &[0, 1, 1, 0]);
    }

    #[test]
    fn pgm_header_comments_and_width_order() {
        let bytes = b"P5 # label map\n3 # width\n1\n# maxval next\n9\n\x07\x08\x09";
        let map = decode_pgm(bytes, here()).unwrap();
        assert_eq!(map.shape(), Shape::image(1, 3));
        assert_eq!(map.labels(), &[7, 8, 9]);
    }

    #[test]
    fn pgm_truncated_wide_samples() {
        let mut bytes = b"P5\n2 2\n65535\n".to_vec();
        bytes.extend([0u8; 7]);
        assert!(matches!(
            decode_pgm(&bytes, here()),
            Err(Error::TruncatedData {
                expected: 4,
                got: 3,
                ..
            })
        ));
    }

    #[test]
    fn pgm_encoding_width() {
        let narrow = SegmentationMap::from_rows(1, 2, vec![0, 255]).unwrap();
        assert!(encode_pgm(&narrow).unwrap().starts_with(b"P5\n2 1\n255\n"));

        let wide = SegmentationMap::from_rows(1, 2, vec![0, 300]).unwrap();
        let bytes = encode_pgm(&wide).unwrap();
        assert!(bytes.starts_with(b"P5\n2 1\n65535\n"));
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 0x01, 0x2c]);
        assert_eq!(decode_pgm(&bytes, here()).unwrap(), wide);

        let too_big = SegmentationMap::from_rows(1, 1, vec![70_000]).unwrap();
        assert!(matches!(
            encode_pgm(&too_big),
            Err(Error::LabelOutOfRange {
                label: 70_000,
                max: 65535
            })
        ));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(
            decode_pgm(b"P5\n2\n255\n\x00\x00", here()),
            Err(Error::MalformedHeader { .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n70000\n\x00", here()),
            Err(Error::MalformedHeader { .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n3\n\x05", here()),
            Err(Error::MalformedData { .. })
        ));
        assert!(matches!(
            decode_text("2\n0 1", here()),
            Err(Error::MalformedHeader { .. })
        ));
        assert!(matches!(
            decode_text("2 2\n0 1 1", here()),
            Err(Error::TruncatedData {
                expected: 4,
                got: 3,
                ..
            })
        ));
        assert!(matches!(
            decode_text("1 2\n0 -1", here()),
            Err(Error::MalformedData { .. })
        ));
    }

    #[test]
    fn multi_frame_maps_do_not_encode() {
        let video = SegmentationMap::new(Shape::video(2, 1, 1), vec![0, 1]).unwrap();
        assert!(matches!(encode_pgm(&video), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(encode_text(&video), Err(Error::UnsupportedFormat(_))));
    }
}
