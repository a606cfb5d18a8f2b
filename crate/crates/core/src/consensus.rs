//! Consensus annotations from several annotators' line sets.
//!
//! Pipeline: pool every annotator's lines, agglomerate them under segment
//! Hausdorff distance, keep one line per annotator in each cluster, drop
//! clusters backed by no more than the majority fraction of annotators, and
//! average what is left.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_hausdorff, LineSegment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split `{other}`"))),
        }
    }
}

/// One annotator's complete line set for one case. `lines` may be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Opinion {
    pub case_id: String,
    pub annotator_id: String,
    pub lines: Vec<LineSegment>,
    /// Milliseconds.
    pub timestamp: i64,
    pub split: Split,
}

impl Opinion {
    pub fn new(
        case_id: impl Into<String>,
        annotator_id: impl Into<String>,
        lines: Vec<LineSegment>,
        timestamp: i64,
        split: Split,
    ) -> Self {
        Opinion {
            case_id: case_id.into(),
            annotator_id: annotator_id.into(),
            lines,
            timestamp,
            split,
        }
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    #[default]
    Complete,
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsensusParams {
    pub merge_cutoff: f64,
    pub majority_fraction: f64,
    pub linkage: Linkage,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        ConsensusParams {
            merge_cutoff: 10.0,
            majority_fraction: 0.5,
            linkage: Linkage::Complete,
        }
    }
}

impl ConsensusParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.merge_cutoff.is_finite() && self.merge_cutoff > 0.0) {
            return Err(Error::invalid(format!("merge_cutoff must be > 0, got {}", self.merge_cutoff)));
        }
        if !(self.majority_fraction > 0.0 && self.majority_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "majority_fraction must be in (0, 1], got {}",
                self.majority_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMember {
    pub annotator_id: String,
    pub line: LineSegment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub members: Vec<ClusterMember>,
    pub centroid: LineSegment,
}

impl Cluster {
    /// Panics on an empty member list.
    pub fn from_members(members: Vec<ClusterMember>) -> Self {
        let centroid = LineSegment::mean_of(members.iter().map(|m| &m.line)).expect("cluster needs at least one member");
        Cluster { members, centroid }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusAnnotation {
    pub case_id: String,
    pub lines: Vec<LineSegment>,
    pub contributing_annotators: usize,
}

fn check_single_case(opinions: &[Opinion]) -> Result<()> {
    if let Some(first) = opinions.first() {
        if let Some(other) = opinions.iter().find(|o| o.case_id != first.case_id) {
            return Err(Error::MixedCases {
                first: first.case_id.clone(),
                other: other.case_id.clone(),
            });
        }
    }
    Ok(())
}

/// Pooled lines in canonical order: by annotator id, then line index.
fn pooled_members(opinions: &[Opinion]) -> Vec<ClusterMember> {
    let mut ordered: Vec<&Opinion> = opinions.iter().collect();
    ordered.sort_by(|a, b| a.annotator_id.cmp(&b.annotator_id));
    ordered
        .into_iter()
        .flat_map(|o| {
            o.lines.iter().map(move |&line| ClusterMember {
                annotator_id: o.annotator_id.clone(),
                line,
            })
        })
        .collect()
}

/// Distance between two clusters under `linkage`, from a member distance matrix.
fn linkage_distance(linkage: Linkage, dist: &[f64], n: usize, a: &[usize], b: &[usize]) -> f64 {
    let pairs = a.iter().flat_map(|&i| b.iter().map(move |&j| dist[i * n + j]));
    match linkage {
        Linkage::Single => pairs.fold(f64::INFINITY, f64::min),
        Linkage::Complete => pairs.fold(0.0, f64::max),
        Linkage::Average => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
    }
}

/// Agglomerative clustering of all lines in `opinions`.
///
/// Merges the closest pair of clusters (ties: lowest indices) while that
/// linkage distance is `<= merge_cutoff`. Clusters come back in order of
/// their first member in the canonical (annotator id, line index) order.
pub fn cluster_lines(opinions: &[Opinion], merge_cutoff: f64, linkage: Linkage) -> Result<Vec<Cluster>> {
    check_single_case(opinions)?;
    let members = pooled_members(opinions);
    let n = members.len();
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = segment_hausdorff(&members[i].line, &members[j].line);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut groups: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..groups.len() {
            for b in (a + 1)..groups.len() {
                let d = linkage_distance(linkage, &dist, n, &groups[a], &groups[b]);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, a, b));
                }
            }
        }
        match best {
            Some((d, a, b)) if d <= merge_cutoff => {
                let absorbed = groups.remove(b);
                groups[a].extend(absorbed);
                groups[a].sort_unstable();
            }
            _ => break,
        }
    }

    Ok(groups
        .into_iter()
        .map(|g| Cluster::from_members(g.into_iter().map(|i| members[i].clone()).collect()))
        .collect())
}

/// Keeps one member per annotator: the one nearest the (pre-dedup) centroid,
/// earliest listed on ties. The centroid is left untouched.
pub fn dedup_within_cluster(cluster: &Cluster) -> Cluster {
    let mut best: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for (idx, m) in cluster.members.iter().enumerate() {
        let d = segment_hausdorff(&m.line, &cluster.centroid);
        best.entry(m.annotator_id.as_str())
            .and_modify(|slot| {
                if d < slot.1 {
                    *slot = (idx, d);
                }
            })
            .or_insert((idx, d));
    }
    let mut keep: Vec<usize> = best.values().map(|&(i, _)| i).collect();
    keep.sort_unstable();
    Cluster {
        members: keep.into_iter().map(|i| cluster.members[i].clone()).collect(),
        centroid: cluster.centroid,
    }
}

/// Builds the consensus annotation for one case.
///
/// `N` counts every opinion, including empty ones. A cluster survives only
/// with strictly more than `majority_fraction * N` distinct annotators.
pub fn build_consensus(opinions: &[Opinion], params: &ConsensusParams) -> Result<ConsensusAnnotation> {
    params.validate()?;
    let first = opinions.first().ok_or(Error::NoOpinions)?;
    let n_annotators = opinions.len();
    let threshold = params.majority_fraction * n_annotators as f64;

    let clusters = cluster_lines(opinions, params.merge_cutoff, params.linkage)?;
    let mut lines: Vec<LineSegment> = clusters
        .iter()
        .map(dedup_within_cluster)
        .filter(|c| c.len() as f64 > threshold)
        .filter_map(|c| LineSegment::mean_of(c.members.iter().map(|m| &m.line)))
        .collect();
    lines.sort_by(|a, b| {
        a.coords()
            .iter()
            .zip(b.coords().iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    Ok(ConsensusAnnotation {
        case_id: first.case_id.clone(),
        lines,
        contributing_annotators: n_annotators,
    })
}
