//! Nearest-neighbor template classifier over pseudo-colored motion maps.
//!
//! The classifier memorizes bilinear thumbnails of its training images and
//! predicts by minimum Euclidean distance. It sits behind a narrow
//! train / predict / save / load surface so a stronger model can be swapped
//! in without touching the pipeline.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::idmm::PseudoColorImage;

pub const MODEL_MAGIC: &[u8; 4] = b"IDNN";
pub const MODEL_VERSION: u16 = 1;

/// Flattened thumbnail: channel-major (all R, all G, all B), each channel
/// row-major, values in [0, 255].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f32>,
}

/// Label-to-template store for nearest-neighbor prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateModel {
    side: u16,
    templates: Vec<(u32, FeatureVector)>,
}

impl TemplateModel {
    /// Builds a model from raw templates; every feature must have length
    /// 3 * side^2.
    pub fn from_templates(side: u16, templates: Vec<(u32, FeatureVector)>) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidParameter("side must be >= 1".into()));
        }
        if templates.is_empty() {
            return Err(Error::EmptyModel);
        }
        let expected = 3 * side as usize * side as usize;
        for (_, f) in &templates {
            if f.values.len() != expected {
                return Err(Error::InvalidParameter(format!(
                    "feature length {} != {expected}",
                    f.values.len()
                )));
            }
        }
        Ok(Self { side, templates })
    }

    pub fn side(&self) -> u16 {
        self.side
    }

    pub fn templates(&self) -> &[(u32, FeatureVector)] {
        &self.templates
    }

    pub fn label_set(&self) -> Vec<u32> {
        let mut labels: Vec<u32> = self.templates.iter().map(|(l, _)| *l).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}

/// Bilinear resampling to side x side, pixel-center aligned, flattened
/// channel-major then row-major.
pub fn downsample(img: &PseudoColorImage, side: u16) -> Result<FeatureVector> {
    if side == 0 {
        return Err(Error::InvalidParameter("side must be >= 1".into()));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let s = side as usize;
    let scale_x = w as f64 / s as f64;
    let scale_y = h as f64 / s as f64;
    let mut channels = vec![vec![0f32; s * s]; 3];
    for oy in 0..s {
        let sy = ((oy as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for ox in 0..s {
            let sx = ((ox as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f64;
            let p00 = img.get(x0 as u32, y0 as u32);
            let p10 = img.get(x1 as u32, y0 as u32);
            let p01 = img.get(x0 as u32, y1 as u32);
            let p11 = img.get(x1 as u32, y1 as u32);
            let lerp2 = |c00: u8, c10: u8, c01: u8, c11: u8| {
                let top = c00 as f64 * (1.0 - fx) + c10 as f64 * fx;
                let bot = c01 as f64 * (1.0 - fx) + c11 as f64 * fx;
                (top * (1.0 - fy) + bot * fy) as f32
            };
            let idx = oy * s + ox;
            channels[0][idx] = lerp2(p00.0, p10.0, p01.0, p11.0);
            channels[1][idx] = lerp2(p00.1, p10.1, p01.1, p11.1);
            channels[2][idx] = lerp2(p00.2, p10.2, p01.2, p11.2);
        }
    }
    let mut values = Vec::with_capacity(3 * s * s);
    for ch in channels {
        values.extend(ch);
    }
    Ok(FeatureVector { values })
}

/// Builds a memorizing model: one template per training sample, in input
/// order.
pub fn train(samples: &[(PseudoColorImage, u32)], side: u16) -> Result<TemplateModel> {
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut templates = Vec::with_capacity(samples.len());
    for (img, label) in samples {
        templates.push((*label, downsample(img, side)?));
    }
    Ok(TemplateModel { side, templates })
}

fn l2_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Nearest template by Euclidean distance; ties break by smallest label,
/// then earliest template.
pub fn predict(model: &TemplateModel, img: &PseudoColorImage) -> Result<(u32, f64)> {
    let query = downsample(img, model.side)?;
    predict_feature(model, &query)
}

/// Same nearest-neighbor search on an already-extracted feature.
pub fn predict_feature(model: &TemplateModel, query: &FeatureVector) -> Result<(u32, f64)> {
    if model.templates.is_empty() {
        return Err(Error::EmptyModel);
    }
    let mut best: Option<(f64, u32)> = None;
    for (label, feature) in &model.templates {
        let d = l2_distance(&query.values, &feature.values);
        let better = match best {
            None => true,
            Some((bd, bl)) => d < bd || (d == bd && *label < bl),
        };
        if better {
            best = Some((d, *label));
        }
    }
    let (distance, label) = best.unwrap();
    Ok((label, distance))
}

/// Serializes the model: magic "IDNN" | version u16 | side u16 |
/// template_count u32 | (label u32, 3*side^2 f32 values) records,
/// little-endian throughout.
pub fn save_model(model: &TemplateModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let feat_len = 3 * model.side as usize * model.side as usize;
    let mut out =
        Vec::with_capacity(12 + model.templates.len() * (4 + feat_len * 4));
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&model.side.to_le_bytes());
    out.extend_from_slice(&(model.templates.len() as u32).to_le_bytes());
    for (label, feature) in &model.templates {
        out.extend_from_slice(&label.to_le_bytes());
        for v in &feature.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TemplateModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if bytes.len() < 12 || &bytes[0..4] != MODEL_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: "IDNN",
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_VERSION {
        return Err(Error::BadVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let side = u16::from_le_bytes([bytes[6], bytes[7]]);
    if side == 0 {
        return Err(Error::Malformed {
            what: "model header",
            path: path.to_path_buf(),
            detail: "side must be >= 1".into(),
        });
    }
    let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if count == 0 {
        return Err(Error::EmptyModel);
    }
    let feat_len = 3 * side as usize * side as usize;
    let record_len = 4 + feat_len * 4;
    let needed = count * record_len;
    let payload = &bytes[12..];
    if payload.len() < needed {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            needed,
            found: payload.len(),
        });
    }
    let mut templates = Vec::with_capacity(count);
    for i in 0..count {
        let rec = &payload[i * record_len..(i + 1) * record_len];
        let label = u32::from_le_bytes(rec[0..4].try_into().unwrap());
        let values = rec[4..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        templates.push((label, FeatureVector { values }));
    }
    Ok(TemplateModel { side, templates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn uniform(w: u32, h: u32, rgb: (u8, u8, u8)) -> PseudoColorImage {
        PseudoColorImage::new(w, h, vec![rgb; (w * h) as usize]).unwrap()
    }

    #[test]
    fn downsample_identity_at_native_side() {
        let data = vec![
            (10, 20, 30),
            (40, 50, 60),
            (70, 80, 90),
            (100, 110, 120),
        ];
        let img = PseudoColorImage::new(2, 2, data).unwrap();
        let f = downsample(&img, 2).unwrap();
        assert_eq!(
            f.values,
            vec![
                10.0, 40.0, 70.0, 100.0, // R
                20.0, 50.0, 80.0, 110.0, // G
                30.0, 60.0, 90.0, 120.0, // B
            ]
        );
    }

    #[test]
    fn downsample_uniform_stays_uniform() {
        let img = uniform(7, 5, (12, 200, 34));
        let f = downsample(&img, 3).unwrap();
        for i in 0..9 {
            assert_eq!(f.values[i], 12.0);
            assert_eq!(f.values[9 + i], 200.0);
            assert_eq!(f.values[18 + i], 34.0);
        }
    }

    #[test]
    fn downsample_checkerboard_to_mean() {
        let data = vec![(0, 0, 100), (255, 0, 100), (255, 0, 100), (0, 0, 100)];
        let img = PseudoColorImage::new(2, 2, data).unwrap();
        let f = downsample(&img, 1).unwrap();
        assert_eq!(f.values, vec![127.5, 0.0, 100.0]);
    }

    #[test]
    fn downsample_zero_side_rejected() {
        let img = uniform(2, 2, (1, 1, 1));
        assert!(downsample(&img, 0).is_err());
    }

    #[test]
    fn train_memorizes_and_predicts_exactly() {
        let img = uniform(4, 4, (200, 10, 10));
        let model = train(&[(img.clone(), 7)], 2).unwrap();
        assert_eq!(model.templates().len(), 1);
        let (label, d) = predict(&model, &img).unwrap();
        assert_eq!(label, 7);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn train_stores_conflicting_duplicates() {
        let img = uniform(4, 4, (9, 9, 9));
        let model = train(&[(img.clone(), 5), (img.clone(), 2)], 2).unwrap();
        assert_eq!(model.templates().len(), 2);
        // equidistant labels {5, 2}: tie-break to smallest label
        assert_eq!(predict(&model, &img).unwrap().0, 2);
    }

    #[test]
    fn train_empty_rejected() {
        assert!(matches!(train(&[], 2), Err(Error::EmptyTrainingSet)));
    }

    #[test]
    fn predict_picks_strictly_closer_template() {
        let a = uniform(2, 2, (0, 0, 0));
        let b = uniform(2, 2, (100, 100, 100));
        let model = train(&[(a, 1), (b, 2)], 1).unwrap();
        let query = uniform(2, 2, (70, 70, 70));
        let (label, d) = predict(&model, &query).unwrap();
        assert_eq!(label, 2);
        // distance to b: sqrt(3 * 30^2)
        assert!((d - (3.0f64 * 900.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn model_roundtrip_and_size() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.idnn");
        let img = uniform(3, 3, (1, 2, 3));
        let model = train(&[(img, 42)], 2).unwrap();
        save_model(&model, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 12 + 4 + 3 * 4 * 4);
        assert_eq!(load_model(&p).unwrap(), model);
    }

    #[test]
    fn model_empty_file_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("e.idnn");
        fs::write(&p, b"").unwrap();
        assert!(matches!(load_model(&p), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn model_truncated_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("t.idnn");
        let model = train(&[(uniform(2, 2, (5, 5, 5)), 1)], 2).unwrap();
        save_model(&model, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_model(&p), Err(Error::Truncated { .. })));
    }

    #[test]
    fn duplicate_winner_does_not_change_label() {
        let a = uniform(2, 2, (0, 0, 0));
        let b = uniform(2, 2, (200, 200, 200));
        let query = uniform(2, 2, (10, 10, 10));
        let m1 = train(&[(a.clone(), 1), (b.clone(), 2)], 1).unwrap();
        let m2 = train(&[(a.clone(), 1), (b, 2), (a, 1)], 1).unwrap();
        assert_eq!(predict(&m1, &query).unwrap().0, predict(&m2, &query).unwrap().0);
    }
}
