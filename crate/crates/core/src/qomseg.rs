//! Quantity-of-movement profiles and temporal gesture segmentation.
//!
//! The QOM of a frame pair is the count of pixels whose absolute depth
//! difference reaches a threshold. Each frame's global QOM is taken
//! against the very first frame of the sequence, which is assumed to show
//! the shared neutral pose. Frames whose global QOM falls below a
//! data-driven threshold become delimiter candidates, then a tumbling
//! window keeps only the minimum-QOM candidate per windowing session.

use crate::depthio::DepthSequence;
use crate::error::{Error, Result};
use crate::eval::AnnotationSet;

/// Per-frame global QOM values for one sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QomProfile {
    values: Vec<u64>,
}

impl QomProfile {
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Tunables for [`segment`].
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationParams {
    /// Depth-difference threshold for a pixel to count as moved.
    pub pixel_threshold: u16,
    /// Fraction of L taken from each end of the sequence for the
    /// candidate-threshold statistics.
    pub boundary_fraction: f64,
    /// Tumbling window width is L / window_divisor (at least 1).
    pub window_divisor: u32,
    /// Mean gesture length L in frames, from training annotations.
    pub mean_gesture_length: u32,
}

impl SegmentationParams {
    pub fn new(
        pixel_threshold: u16,
        boundary_fraction: f64,
        window_divisor: u32,
        mean_gesture_length: u32,
    ) -> Result<Self> {
        if pixel_threshold < 1 {
            return Err(Error::InvalidParameter("pixel_threshold must be >= 1".into()));
        }
        if !(boundary_fraction > 0.0 && boundary_fraction < 0.5) {
            return Err(Error::InvalidParameter(
                "boundary_fraction must lie in (0, 0.5)".into(),
            ));
        }
        if window_divisor < 1 {
            return Err(Error::InvalidParameter("window_divisor must be >= 1".into()));
        }
        if mean_gesture_length < 2 {
            return Err(Error::InvalidParameter(
                "mean_gesture_length must be >= 2".into(),
            ));
        }
        Ok(Self {
            pixel_threshold,
            boundary_fraction,
            window_divisor,
            mean_gesture_length,
        })
    }

    /// Standard parameter values; only the mean gesture length comes
    /// from data.
    pub fn with_mean_length(mean_gesture_length: u32) -> Result<Self> {
        Self::new(60, 0.125, 2, mean_gesture_length)
    }

    fn boundary_sample_len(&self) -> usize {
        (self.boundary_fraction * self.mean_gesture_length as f64).ceil() as usize
    }

    fn window(&self) -> usize {
        ((self.mean_gesture_length / self.window_divisor) as usize).max(1)
    }
}

/// Delimiter frame indices and the gesture intervals they induce.
/// Delimiters are strictly increasing, starting at frame 0 and ending at the
/// last frame; segment k spans `(delimiters[k], delimiters[k+1])` inclusive,
/// so interior segments share their boundary frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationResult {
    delimiters: Vec<usize>,
    segments: Vec<(usize, usize)>,
}

impl SegmentationResult {
    pub fn delimiters(&self) -> &[usize] {
        &self.delimiters
    }

    pub fn segments(&self) -> &[(usize, usize)] {
        &self.segments
    }
}

/// Counts pixels whose absolute depth difference reaches `pixel_threshold`.
pub fn qom_pair(
    a: &crate::depthio::DepthFrame,
    b: &crate::depthio::DepthFrame,
    pixel_threshold: u16,
) -> Result<u64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(
            a.width(),
            a.height(),
            b.width(),
            b.height(),
        ));
    }
    let t = pixel_threshold as i32;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .filter(|(&x, &y)| (x as i32 - y as i32).abs() >= t)
        .count() as u64)
}

/// QOM of every frame against the sequence's first frame.
pub fn global_qom(seq: &DepthSequence, pixel_threshold: u16) -> QomProfile {
    let first = &seq.frames()[0];
    let values = seq
        .frames()
        .iter()
        .map(|f| qom_pair(f, first, pixel_threshold).expect("uniform dims by invariant"))
        .collect();
    QomProfile { values }
}

/// Candidate threshold: mean + 2 * population std of the global QOMs from the
/// first k and last k frames, k = ceil(boundary_fraction * L).
pub fn candidate_threshold(profile: &QomProfile, params: &SegmentationParams) -> Result<f64> {
    let k = params.boundary_sample_len();
    if profile.len() < 2 * k {
        return Err(Error::DegenerateInput {
            len: profile.len(),
            need: 2 * k,
        });
    }
    let sample: Vec<u64> = profile.values[..k]
        .iter()
        .chain(profile.values[profile.len() - k..].iter())
        .copied()
        .collect();
    Ok(mean_plus_two_std(&sample))
}

fn mean_plus_two_std(sample: &[u64]) -> f64 {
    let n = sample.len() as f64;
    let mean = sample.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = sample
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    mean + 2.0 * var.sqrt()
}

/// Tumbling-window refinement: within each window `[i*w, (i+1)*w)` that holds
/// at least one candidate, only the candidate with minimum profile value is
/// retained (ties go to the smallest index).
pub fn refine_candidates(
    profile: &QomProfile,
    candidates: &[usize],
    window: usize,
) -> Result<Vec<usize>> {
    if window < 1 {
        return Err(Error::InvalidParameter("window must be >= 1".into()));
    }
    for pair in candidates.windows(2) {
        if pair[0] >= pair[1] {
            return Err(Error::InvalidParameter(
                "candidates must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&last) = candidates.last() {
        if last >= profile.len() {
            return Err(Error::InvalidParameter(format!(
                "candidate {last} out of profile range {}",
                profile.len()
            )));
        }
    }
    let mut kept = Vec::new();
    let mut i = 0usize;
    while i < candidates.len() {
        let session = candidates[i] / window;
        let mut best = candidates[i];
        i += 1;
        while i < candidates.len() && candidates[i] / window == session {
            if profile.values[candidates[i]] < profile.values[best] {
                best = candidates[i];
            }
            i += 1;
        }
        kept.push(best);
    }
    Ok(kept)
}

/// Segments a multi-gesture sequence. Frame 0 and the last frame are always
/// delimiters; degenerate segments are merged so every segment spans at
/// least 2 frames.
pub fn segment(seq: &DepthSequence, params: &SegmentationParams) -> Result<SegmentationResult> {
    if seq.len() < 4 {
        return Err(Error::SequenceTooShort {
            got: seq.len(),
            need: 4,
        });
    }
    let profile = global_qom(seq, params.pixel_threshold);
    let threshold = match candidate_threshold(&profile, params) {
        Ok(t) => t,
        // short clip: fall back to whole-profile statistics
        Err(Error::DegenerateInput { .. }) => mean_plus_two_std(&profile.values),
        Err(e) => return Err(e),
    };
    let candidates: Vec<usize> = profile
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| (v as f64) < threshold)
        .map(|(t, _)| t)
        .collect();
    let refined = refine_candidates(&profile, &candidates, params.window())?;

    let last = seq.len() - 1;
    let mut delimiters: Vec<usize> = Vec::with_capacity(refined.len() + 2);
    delimiters.push(0);
    delimiters.extend(refined.iter().copied().filter(|&d| d != 0 && d != last));
    delimiters.push(last);
    delimiters.dedup();

    // Merge any segment shorter than 2 frames into its shorter neighbor by
    // dropping the delimiter it shares with that neighbor.
    loop {
        let mut removed = false;
        for k in 0..delimiters.len() - 1 {
            let (s, e) = (delimiters[k], delimiters[k + 1]);
            if e - s + 1 >= 2 {
                continue;
            }
            let prev_len = if k == 0 { usize::MAX } else { s - delimiters[k - 1] + 1 };
            let next_len = if k + 2 >= delimiters.len() {
                usize::MAX
            } else {
                delimiters[k + 2] - e + 1
            };
            let drop_idx = if prev_len <= next_len { k } else { k + 1 };
            // never drop the sequence endpoints
            let drop_idx = drop_idx.clamp(1, delimiters.len() - 2);
            delimiters.remove(drop_idx);
            removed = true;
            break;
        }
        if !removed {
            break;
        }
    }

    let segments = delimiters
        .windows(2)
        .map(|w| (w[0], w[1]))
        .collect::<Vec<_>>();
    Ok(SegmentationResult {
        delimiters,
        segments,
    })
}

/// Mean gesture length over all annotated intervals, rounded to the nearest
/// integer with ties rounding up.
pub fn mean_gesture_length(annotations: &AnnotationSet) -> Result<u32> {
    let mut sum: u64 = 0;
    let mut n: u64 = 0;
    for intervals in annotations.sequences().values() {
        for iv in intervals {
            sum += (iv.end - iv.start + 1) as u64;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyAnnotations);
    }
    Ok(((2 * sum + n) / (2 * n)) as u32)
}
