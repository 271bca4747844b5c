//! End-to-end composition: segment, encode, classify, emit predictions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classify::{predict, TemplateModel};
use crate::depthio::{load_dseq, DepthSequence};
use crate::error::{Error, Result};
use crate::eval::{AnnotationSet, LabeledInterval};
use crate::idmm::encode_segment;
use crate::qomseg::{segment, SegmentationParams};

/// Predicted intervals for one sequence: every recovered segment, labeled by
/// the classifier, 1-based inclusive. Intervals tile the full frame range.
pub fn process_sequence(
    seq: &DepthSequence,
    params: &SegmentationParams,
    model: &TemplateModel,
) -> Result<Vec<LabeledInterval>> {
    let seg = segment(seq, params)?;
    let mut intervals = Vec::with_capacity(seg.segments().len());
    for &(start, end) in seg.segments() {
        let sub = seq.slice(start, end)?;
        let img = encode_segment(&sub)?;
        let (label, _) = predict(model, &img)?;
        intervals.push(LabeledInterval::new(start as u32 + 1, end as u32 + 1, label)?);
    }
    Ok(intervals)
}

/// Outcome of a batch run. Failed sequences carry a diagnostic and are
/// excluded from the prediction set.
pub struct PipelineOutcome {
    pub predictions: AnnotationSet,
    pub horizons: BTreeMap<String, u32>,
    pub failures: Vec<(String, String)>,
}

/// Collects `.dseq` files: the path itself, or the directory's `.dseq`
/// entries sorted by filename.
pub fn collect_dseq_inputs(path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .map(|e| e.eq_ignore_ascii_case("dseq"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no .dseq files under {}",
            path.display()
        )));
    }
    Ok(files)
}

/// Runs the full pipeline over many sequence files with a bounded worker
/// pool. All stages for one sequence run on one worker; results are gathered
/// in input order, so output is independent of the parallelism degree.
pub fn run_pipeline(
    inputs: &[PathBuf],
    params: &SegmentationParams,
    model: &TemplateModel,
    jobs: usize,
) -> Result<PipelineOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let results: Vec<(String, std::result::Result<(Vec<LabeledInterval>, u32), String>)> = pool
        .install(|| {
            inputs
                .par_iter()
                .map(|path| {
                    let id = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| path.display().to_string());
                    let out = load_dseq(path)
                        .and_then(|seq| {
                            let horizon = seq.len() as u32;
                            process_sequence(&seq, params, model).map(|iv| (iv, horizon))
                        })
                        .map_err(|e| e.to_string());
                    (id, out)
                })
                .collect()
        });
    let mut predictions = AnnotationSet::new();
    let mut horizons = BTreeMap::new();
    let mut failures = Vec::new();
    for (id, res) in results {
        match res {
            Ok((intervals, horizon)) => {
                predictions.insert(id.clone(), intervals);
                horizons.insert(id, horizon);
            }
            Err(msg) => failures.push((id, msg)),
        }
    }
    Ok(PipelineOutcome {
        predictions,
        horizons,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::train;
    use crate::synth::{generate, SynthConfig};

    fn acceptance_synth_config(seed: u64) -> SynthConfig {
        SynthConfig {
            gesture_length_range: (28, 28),
            neutral_gap: 2,
            noise_sigma: 0.0,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn predicted_intervals_tile_full_range() {
        let out = generate(&acceptance_synth_config(5)).unwrap();
        let mut samples = Vec::new();
        for iv in &out.ground_truth {
            let sub = out
                .sequence
                .slice((iv.start - 1) as usize, (iv.end - 1) as usize)
                .unwrap();
            samples.push((encode_segment(&sub).unwrap(), iv.label));
        }
        let model = train(&samples, 32).unwrap();
        let params = SegmentationParams::with_mean_length(28).unwrap();
        let intervals = process_sequence(&out.sequence, &params, &model).unwrap();
        assert_eq!(intervals.first().unwrap().start, 1);
        assert_eq!(
            intervals.last().unwrap().end as usize,
            out.sequence.len()
        );
        for pair in intervals.windows(2) {
            assert_eq!(pair[1].start, pair[0].end);
        }
    }
}
