//! Semi-supervised relaxation labeling and the relaxation matched filter.
//!
//! Excited-labeled training traces whose mean trace value lands inside the
//! circle around the ground-state centroid, with radius half the distance
//! between the two class centroids, are taken to be relaxation traces. The
//! labeling does not distinguish in-window decay from decay before the
//! readout or from preparation errors; all of them are treated alike.

use serde::{Deserialize, Serialize};

use crate::dataset::{TransitionEvent, TransitionKind};
use crate::dsp::{self, FilterKind, MatchedFilter};
use crate::error::{Error, Result};
use crate::trace::{mean_trace_value, IqPoint, Trace};

pub const DEFAULT_MIN_RELAX: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationLabelReport {
    pub centroid_0: IqPoint,
    pub centroid_1: IqPoint,
    pub radius: f64,
    /// Indices into the excited-labeled traces, ascending.
    pub relax_indices: Vec<usize>,
}

fn centroid(points: &[IqPoint]) -> IqPoint {
    let n = points.len() as f64;
    IqPoint::new(
        points.iter().map(|p| p.i).sum::<f64>() / n,
        points.iter().map(|p| p.q).sum::<f64>() / n,
    )
}

/// Labels relaxation traces among `traces_1` for one qubit.
pub fn label_relaxations(traces_0: &[Trace], traces_1: &[Trace]) -> Result<RelaxationLabelReport> {
    for (name, class) in [("ground", traces_0), ("excited", traces_1)] {
        if class.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{name} class has {} traces, need at least 2",
                class.len()
            )));
        }
    }
    let mtv_0 = traces_0.iter().map(mean_trace_value).collect::<Result<Vec<_>>>()?;
    let mtv_1 = traces_1.iter().map(mean_trace_value).collect::<Result<Vec<_>>>()?;
    let centroid_0 = centroid(&mtv_0);
    let centroid_1 = centroid(&mtv_1);
    let separation = centroid_0.distance(&centroid_1);
    if separation < 1e-12 {
        return Err(Error::DegenerateCentroids(separation));
    }
    let radius = separation / 2.0;
    let relax_indices = mtv_1
        .iter()
        .enumerate()
        .filter(|(_, m)| m.distance(&centroid_0) <= radius)
        .map(|(k, _)| k)
        .collect();
    Ok(RelaxationLabelReport {
        centroid_0,
        centroid_1,
        radius,
        relax_indices,
    })
}

/// Trains the relaxation matched filter: labeled relaxation traces against
/// all ground-state traces, with the same estimator as the state filter.
pub fn train_rmf(
    traces_0: &[Trace],
    traces_1: &[Trace],
    report: &RelaxationLabelReport,
    min_relax: usize,
) -> Result<MatchedFilter> {
    let found = report.relax_indices.len();
    if found < min_relax.max(2) {
        return Err(Error::InsufficientRelaxations {
            found,
            required: min_relax.max(2),
        });
    }
    let relax = report
        .relax_indices
        .iter()
        .map(|&k| {
            traces_1.get(k).ok_or_else(|| Error::LengthMismatch {
                expected: k + 1,
                found: traces_1.len(),
            })
        })
        .collect::<Result<Vec<&Trace>>>()?;
    let ground: Vec<&Trace> = traces_0.iter().collect();
    dsp::train_filter(&ground, &relax, FilterKind::Relaxation)
}

/// Agreement of a labeling with simulator ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScore {
    /// Only relaxations earlier than this count as true positives.
    pub window_ns: f64,
    pub true_events: usize,
    pub labeled: usize,
    pub true_positives: usize,
    pub recall: f64,
    pub precision: f64,
    /// Labeled traces with no in-window relaxation at all.
    pub contamination: f64,
}

/// Scores `report` against the ground-truth events of the excited traces.
pub fn score_labels(report: &RelaxationLabelReport, events_1: &[Option<TransitionEvent>], window_ns: f64) -> LabelScore {
    let is_relax = |e: &Option<TransitionEvent>| matches!(e, Some(ev) if ev.kind == TransitionKind::Relaxation);
    let is_true = |e: &Option<TransitionEvent>| is_relax(e) && e.unwrap().time_ns < window_ns;
    let true_events = events_1.iter().filter(|e| is_true(e)).count();
    let labeled = report.relax_indices.len();
    let true_positives = report.relax_indices.iter().filter(|&&k| is_true(&events_1[k])).count();
    let uncaused = report.relax_indices.iter().filter(|&&k| !is_relax(&events_1[k])).count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    LabelScore {
        window_ns,
        true_events,
        labeled,
        true_positives,
        recall: ratio(true_positives, true_events),
        precision: ratio(true_positives, labeled),
        contamination: ratio(uncaused, labeled),
    }
}
