//! Improved depth motion maps and power-rainbow pseudo-coloring.
//!
//! A gesture segment collapses into one image in three stages:
//! accumulate per-pixel absolute depth differences against the segment's
//! first frame ([`build_idmm`]), min-max map the accumulators to
//! intensities in [0, 255] ([`normalize`]), then encode each intensity as
//! an RGB triple with the power rainbow transform ([`colorize`]).

use crate::depthio::{DepthFrame, DepthSequence};
use crate::error::{Error, Result};

/// Accumulated motion energy per pixel. 64-bit so that a segment of any
/// realistic length cannot overflow ((N-1) * 65535 max per entry).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Idmm {
    width: u32,
    height: u32,
    data: Vec<u64>,
}

impl Idmm {
    pub fn new(width: u32, height: u32, data: Vec<u64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(width, height));
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "idmm data length {} != {}x{}",
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

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }
}

/// Real-valued intensities in [0, 255], same layout as the source IDMM.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl IntensityMap {
    pub fn new(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "intensity data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        for &v in &data {
            if !(0.0..=255.0).contains(&v) {
                return Err(Error::IntensityOutOfRange(v));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoColorImage {
    width: u32,
    height: u32,
    data: Vec<(u8, u8, u8)>,
}

impl PseudoColorImage {
    pub fn new(width: u32, height: u32, data: Vec<(u8, u8, u8)>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(width, height));
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "image data length {} != {}x{}",
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

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[(u8, u8, u8)] {
        &self.data
    }

    pub fn get(&self, x: u32, y: u32) -> (u8, u8, u8) {
        self.data[y as usize * self.width as usize + x as usize]
    }
}

/// Builds the motion map of a segment: per pixel, the sum of absolute depth
/// differences between every frame and the segment's first (neutral) frame.
/// No thresholding anywhere.
pub fn build_idmm(segment: &DepthSequence) -> Result<Idmm> {
    build_idmm_with_neutral(segment, &segment.frames()[0])
}

/// Same accumulation against an externally supplied neutral frame.
pub fn build_idmm_with_neutral(segment: &DepthSequence, neutral: &DepthFrame) -> Result<Idmm> {
    if neutral.width() != segment.width() || neutral.height() != segment.height() {
        return Err(Error::DimensionMismatch(
            segment.width(),
            segment.height(),
            neutral.width(),
            neutral.height(),
        ));
    }
    let mut acc = vec![0u64; segment.width() as usize * segment.height() as usize];
    let base = neutral.data();
    for frame in segment.frames() {
        for (a, (&d, &n)) in acc.iter_mut().zip(frame.data().iter().zip(base.iter())) {
            *a += (d as i32 - n as i32).unsigned_abs() as u64;
        }
    }
    Idmm::new(segment.width(), segment.height(), acc)
}

/// Min-max maps IDMM values to intensities in [0, 255]. A constant map
/// (max = min) goes to all zeros.
pub fn normalize(idmm: &Idmm) -> IntensityMap {
    let min = *idmm.data.iter().min().unwrap();
    let max = *idmm.data.iter().max().unwrap();
    let data = if max == min {
        vec![0.0; idmm.data.len()]
    } else {
        let span = (max - min) as f64;
        idmm.data
            .iter()
            .map(|&v| 255.0 * ((v - min) as f64) / span)
            .collect()
    };
    IntensityMap {
        width: idmm.width,
        height: idmm.height,
        data,
    }
}

/// Power rainbow transform: intensity in [0, 255] to a normalized RGB triple
/// in [0, 1]. Each channel is ((1 + cos(theta - phase)) / 2)^2 with
/// theta = 4*pi*I / (3*255) and phases 0, 2*pi/3, 4*pi/3.
pub fn rainbow(intensity: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=255.0).contains(&intensity) {
        return Err(Error::IntensityOutOfRange(intensity));
    }
    let theta = 4.0 * std::f64::consts::PI * intensity / (3.0 * 255.0);
    let channel = |phase: f64| {
        let c = (1.0 + (theta - phase).cos()) / 2.0;
        c * c
    };
    Ok((
        channel(0.0),
        channel(2.0 * std::f64::consts::FRAC_PI_3),
        channel(4.0 * std::f64::consts::FRAC_PI_3),
    ))
}

pub fn quantize(value: f64) -> u8 {
    // round-half-up of 255 * value
    (255.0 * value + 0.5).floor() as u8
}

/// Applies the rainbow transform per pixel and quantizes channels
/// round-half-up to 8 bits.
pub fn colorize(map: &IntensityMap) -> PseudoColorImage {
    let data = map
        .data
        .iter()
        .map(|&i| {
            let (r, g, b) = rainbow(i).expect("IntensityMap invariant keeps values in range");
            (quantize(r), quantize(g), quantize(b))
        })
        .collect();
    PseudoColorImage {
        width: map.width,
        height: map.height,
        data,
    }
}

/// Full encoding of one segment: colorize(normalize(build_idmm(segment))).
pub fn encode_segment(segment: &DepthSequence) -> Result<PseudoColorImage> {
    Ok(colorize(&normalize(&build_idmm(segment)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depthio::DepthFrame;

    fn seq(frames: Vec<DepthFrame>) -> DepthSequence {
        DepthSequence::new(frames, "t").unwrap()
    }

    fn const_frame(w: u32, h: u32, d: u16) -> DepthFrame {
        DepthFrame::constant(w, h, d).unwrap()
    }

    #[test]
    fn idmm_constant_segment_zero() {
        let s = seq(vec![const_frame(3, 2, 500); 4]);
        let m = build_idmm(&s).unwrap();
        assert!(m.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn idmm_two_frames() {
        let s = seq(vec![const_frame(2, 2, 100), const_frame(2, 2, 160)]);
        let m = build_idmm(&s).unwrap();
        assert!(m.data().iter().all(|&v| v == 60));
    }

    #[test]
    fn idmm_matches_double_loop_oracle() {
        let mut frames = Vec::new();
        for i in 0..5u16 {
            let data: Vec<u16> = (0..16).map(|p| (p * 37 + i * 101) % 1000).collect();
            frames.push(DepthFrame::new(4, 4, data).unwrap());
        }
        let s = seq(frames);
        let m = build_idmm(&s).unwrap();
        for p in 0..16 {
            let mut acc = 0u64;
            for i in 0..5 {
                let d = s.frames()[i].data()[p] as i64 - s.frames()[0].data()[p] as i64;
                acc += d.unsigned_abs();
            }
            assert_eq!(m.data()[p], acc);
        }
    }

    #[test]
    fn normalize_endpoints() {
        let m = Idmm::new(2, 1, vec![0, 100]).unwrap();
        assert_eq!(normalize(&m).data(), &[0.0, 255.0]);
    }

    #[test]
    fn normalize_constant_degenerate() {
        let m = Idmm::new(2, 2, vec![7; 4]).unwrap();
        assert!(normalize(&m).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_three_values() {
        let m = Idmm::new(3, 1, vec![10, 20, 30]).unwrap();
        assert_eq!(normalize(&m).data(), &[0.0, 127.5, 255.0]);
    }

    #[test]
    fn rainbow_anchors() {
        let close = |a: (f64, f64, f64), b: (f64, f64, f64)| {
            (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12 && (a.2 - b.2).abs() < 1e-12
        };
        assert!(close(rainbow(0.0).unwrap(), (1.0, 0.0625, 0.0625)));
        assert!(close(rainbow(255.0).unwrap(), (0.0625, 0.0625, 1.0)));
        assert!(close(rainbow(127.5).unwrap(), (0.0625, 1.0, 0.0625)));
        assert!(close(rainbow(191.25).unwrap(), (0.0, 0.5625, 0.5625)));
    }

    #[test]
    fn rainbow_rejects_out_of_range() {
        assert!(rainbow(-0.1).is_err());
        assert!(rainbow(255.1).is_err());
    }

    #[test]
    fn colorize_zero_map() {
        let m = IntensityMap::new(2, 2, vec![0.0; 4]).unwrap();
        let img = colorize(&m);
        assert!(img.data().iter().all(|&p| p == (255, 16, 16)));
    }

    #[test]
    fn colorize_endpoints() {
        let m = IntensityMap::new(2, 1, vec![0.0, 255.0]).unwrap();
        let img = colorize(&m);
        assert_eq!(img.data(), &[(255, 16, 16), (16, 16, 255)]);
    }

    #[test]
    fn encode_constant_segment_uniform() {
        let s = seq(vec![const_frame(4, 4, 777); 3]);
        let img = encode_segment(&s).unwrap();
        assert!(img.data().iter().all(|&p| p == (255, 16, 16)));
        assert_eq!((img.width(), img.height()), (4, 4));
    }

    #[test]
    fn encode_matches_staged_composition() {
        let a = DepthFrame::new(3, 3, (0..9).map(|v| v * 50).collect()).unwrap();
        let b = DepthFrame::new(3, 3, (0..9).map(|v| v * 90 + 10).collect()).unwrap();
        let s = seq(vec![a, b]);
        let staged = colorize(&normalize(&build_idmm(&s).unwrap()));
        assert_eq!(encode_segment(&s).unwrap(), staged);
    }

    #[test]
    fn idmm_translation_invariant() {
        let base: Vec<u16> = (0..16).map(|p| 200 + p * 13).collect();
        let moved: Vec<u16> = base.iter().map(|&v| v + 40).collect();
        let s1 = seq(vec![
            DepthFrame::new(4, 4, base.clone()).unwrap(),
            DepthFrame::new(4, 4, moved.clone()).unwrap(),
        ]);
        let shift = 500u16;
        let s2 = seq(vec![
            DepthFrame::new(4, 4, base.iter().map(|&v| v + shift).collect()).unwrap(),
            DepthFrame::new(4, 4, moved.iter().map(|&v| v + shift).collect()).unwrap(),
        ]);
        assert_eq!(build_idmm(&s1).unwrap(), build_idmm(&s2).unwrap());
    }

    #[test]
    fn idmm_appending_neutral_copy_is_noop() {
        let a = DepthFrame::new(2, 2, vec![5, 10, 15, 20]).unwrap();
        let b = DepthFrame::new(2, 2, vec![50, 10, 90, 20]).unwrap();
        let s1 = seq(vec![a.clone(), b.clone()]);
        let s2 = seq(vec![a.clone(), b, a]);
        assert_eq!(build_idmm(&s1).unwrap(), build_idmm(&s2).unwrap());
    }
}
