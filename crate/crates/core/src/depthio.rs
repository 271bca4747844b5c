//! Depth-sequence data types and on-disk formats.
//!
//! Three formats are handled here:
//! - `.dseq`, a little-endian container for raw 16-bit depth sequences
//!   (24-byte header, see [`save_dseq`]),
//! - binary PGM (P5) directories, one frame per file, lexicographic order,
//! - 8-bit RGB PNG for pseudo-color output.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::idmm::PseudoColorImage;

pub const DSEQ_MAGIC: &[u8; 4] = b"DSEQ";
pub const DSEQ_VERSION: u16 = 1;
pub const DSEQ_HEADER_LEN: usize = 24;

/// A single depth map. Samples are unsigned 16-bit, row-major; larger means
/// farther. The pipeline treats the values as opaque magnitudes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthFrame {
    width: u32,
    height: u32,
    data: Vec<u16>,
}

impl DepthFrame {
    pub fn new(width: u32, height: u32, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(width, height));
        }
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "frame data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Frame filled with a constant depth.
    pub fn constant(width: u32, height: u32, depth: u16) -> Result<Self> {
        Self::new(width, height, vec![depth; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.data[y as usize * self.width as usize + x as usize]
    }
}

/// An ordered stream of equally sized depth frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthSequence {
    frames: Vec<DepthFrame>,
    source_id: String,
}

impl DepthSequence {
    pub fn new(frames: Vec<DepthFrame>, source_id: impl Into<String>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySequence)?;
        let (w, h) = (first.width, first.height);
        for f in &frames {
            if f.width != w || f.height != h {
                return Err(Error::DimensionMismatch(w, h, f.width, f.height));
            }
        }
        Ok(Self {
            frames,
            source_id: source_id.into(),
        })
    }

    pub fn frames(&self) -> &[DepthFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> u32 {
        self.frames[0].width
    }

    pub fn height(&self) -> u32 {
        self.frames[0].height
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// Sub-sequence over the inclusive 0-based frame range `[start, end]`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end >= self.frames.len() {
            return Err(Error::InvalidParameter(format!(
                "slice {}..={} out of range for {} frames",
                start,
                end,
                self.frames.len()
            )));
        }
        DepthSequence::new(self.frames[start..=end].to_vec(), self.source_id.clone())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a `.dseq` file.
pub fn load_dseq(path: impl AsRef<Path>) -> Result<DepthSequence> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() < DSEQ_HEADER_LEN || &bytes[0..4] != DSEQ_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: "DSEQ",
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != DSEQ_VERSION {
        return Err(Error::BadVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let width = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[10..14].try_into().unwrap());
    let frame_count = u32::from_le_bytes(bytes[14..18].try_into().unwrap());
    let bits = u16::from_le_bytes([bytes[18], bytes[19]]);
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(width, height));
    }
    if bits != 16 {
        return Err(Error::Malformed {
            what: "dseq header",
            path: path.to_path_buf(),
            detail: format!("bits_per_sample {bits}, expected 16"),
        });
    }
    let frame_len = width as usize * height as usize;
    let needed = frame_count as usize * frame_len * 2;
    let payload = &bytes[DSEQ_HEADER_LEN..];
    if payload.len() < needed {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            needed,
            found: payload.len(),
        });
    }
    let mut frames = Vec::with_capacity(frame_count as usize);
    for i in 0..frame_count as usize {
        let base = i * frame_len * 2;
        let data = payload[base..base + frame_len * 2]
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        frames.push(DepthFrame::new(width, height, data)?);
    }
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    DepthSequence::new(frames, source_id)
}

/// Writes a `.dseq` file; [`load_dseq`] inverts it exactly.
pub fn save_dseq(seq: &DepthSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(
        DSEQ_HEADER_LEN + seq.len() * seq.width() as usize * seq.height() as usize * 2,
    );
    out.extend_from_slice(DSEQ_MAGIC);
    out.extend_from_slice(&DSEQ_VERSION.to_le_bytes());
    out.extend_from_slice(&seq.width().to_le_bytes());
    out.extend_from_slice(&seq.height().to_le_bytes());
    out.extend_from_slice(&(seq.len() as u32).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for f in seq.frames() {
        for &s in f.data() {
            out.extend_from_slice(&s.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(&out).map_err(|e| io_err(path, e))
}

/// Loads all binary PGM (P5) files in a directory as one sequence, frames
/// ordered by lexicographic filename. 8-bit samples widen to 16-bit unchanged;
/// 16-bit samples are big-endian per PGM convention.
pub fn load_pgm_dir(dir: impl AsRef<Path>) -> Result<DepthSequence> {
    let dir = dir.as_ref();
    let mut names: Vec<_> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .map(|e| e.eq_ignore_ascii_case("pgm"))
                .unwrap_or(false)
        })
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::Malformed {
            what: "pgm directory",
            path: dir.to_path_buf(),
            detail: "no .pgm files found".into(),
        });
    }
    let mut frames = Vec::with_capacity(names.len());
    for name in &names {
        frames.push(load_pgm(name)?);
    }
    let source_id = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let seq = DepthSequence::new(frames, source_id)?;
    Ok(seq)
}

/// Reads one binary PGM (P5) file with maxval <= 65535.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<DepthFrame> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;
    let malformed = |detail: String| Error::Malformed {
        what: "pgm header",
        path: path.to_path_buf(),
        detail,
    };

    let mut pos = 0usize;
    // Header tokens separated by whitespace; '#' starts a comment to end of line.
    let mut next_token = |bytes: &[u8]| -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("unexpected end of header".into()));
        }
        let end = pos;
        // Exactly one whitespace byte separates the maxval token from payload.
        if pos < bytes.len() {
            pos += 1;
        }
        Ok(String::from_utf8_lossy(&bytes[start..end]).into_owned())
    };

    if next_token(&bytes)? != "P5" {
        return Err(malformed("not a binary PGM (P5)".into()));
    }
    let width: u32 = next_token(&bytes)?
        .parse()
        .map_err(|e| malformed(format!("bad width: {e}")))?;
    let height: u32 = next_token(&bytes)?
        .parse()
        .map_err(|e| malformed(format!("bad height: {e}")))?;
    let maxval: u32 = next_token(&bytes)?
        .parse()
        .map_err(|e| malformed(format!("bad maxval: {e}")))?;
    if maxval == 0 || maxval > 65535 {
        return Err(malformed(format!("maxval {maxval} out of range")));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(width, height));
    }
    let count = width as usize * height as usize;
    let payload = &bytes[pos..];
    let data: Vec<u16> = if maxval < 256 {
        if payload.len() < count {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                needed: count,
                found: payload.len(),
            });
        }
        payload[..count].iter().map(|&b| b as u16).collect()
    } else {
        if payload.len() < count * 2 {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                needed: count * 2,
                found: payload.len(),
            });
        }
        payload[..count * 2]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    DepthFrame::new(width, height, data)
}

/// Writes a pseudo-color image as 8-bit RGB PNG, pixel-exact.
pub fn export_png(img: &PseudoColorImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf: image::RgbImage = image::ImageBuffer::from_fn(img.width(), img.height(), |x, y| {
        let (r, g, b) = img.get(x, y);
        image::Rgb([r, g, b])
    });
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })
}

/// Reads an 8-bit RGB PNG back into a pseudo-color image.
pub fn import_png(path: impl AsRef<Path>) -> Result<PseudoColorImage> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            source: e,
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let data = img
        .pixels()
        .map(|p| (p.0[0], p.0[1], p.0[2]))
        .collect::<Vec<_>>();
    PseudoColorImage::new(w, h, data)
}
