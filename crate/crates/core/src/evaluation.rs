//! Leave-one-out expert concordance, count errors, agreement correlations
//! and learning curves.
//!
//! Each expert is compared with the consensus of the remaining experts; the
//! crowd consensus is compared with the same leave-one-out references, so
//! every figure is an average over one concordance per expert.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::{build_consensus, ConsensusAnnotation, ConsensusParams, Opinion};
use crate::error::{Error, Result};
use crate::geometry::LineSegment;
use crate::metric::{dice_h, SimilarityParams};
use crate::stats::{self, Correlation};

/// Consensus of every expert except `leave_out` (0-based).
pub fn loo_consensus(expert_opinions: &[Opinion], leave_out: usize, params: &ConsensusParams) -> Result<ConsensusAnnotation> {
    let n = expert_opinions.len();
    if n < 3 {
        return Err(Error::invalid(format!("leave-one-out consensus needs at least 3 experts, got {n}")));
    }
    if leave_out >= n {
        return Err(Error::invalid(format!("leave_out index {leave_out} out of range for {n} experts")));
    }
    let rest: Vec<Opinion> = expert_opinions
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != leave_out)
        .map(|(_, o)| o.clone())
        .collect();
    build_consensus(&rest, params)
}

/// Mean line count of the given opinions.
pub fn count_reference(opinions: &[Opinion]) -> Result<f64> {
    if opinions.is_empty() {
        return Err(Error::invalid("count reference needs at least one opinion"));
    }
    Ok(opinions.iter().map(|o| o.line_count() as f64).sum::<f64>() / opinions.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldEvaluation {
    pub leave_out: usize,
    pub expert_id: String,
    #[serde(skip)]
    pub reference: Vec<LineSegment>,
    pub reference_count: f64,
    pub expert_dice: f64,
    pub crowd_dice: f64,
    pub expert_sq_count_err: f64,
    pub crowd_sq_count_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseEvaluation {
    pub case_id: String,
    pub folds: Vec<FoldEvaluation>,
}

impl CaseEvaluation {
    fn fold_mean(&self, f: impl Fn(&FoldEvaluation) -> f64) -> f64 {
        self.folds.iter().map(f).sum::<f64>() / self.folds.len() as f64
    }

    pub fn crowd_mean_dice(&self) -> f64 {
        self.fold_mean(|f| f.crowd_dice)
    }

    pub fn expert_mean_dice(&self) -> f64 {
        self.fold_mean(|f| f.expert_dice)
    }

    pub fn crowd_count_mse(&self) -> f64 {
        self.fold_mean(|f| f.crowd_sq_count_err)
    }

    pub fn expert_count_mse(&self) -> f64 {
        self.fold_mean(|f| f.expert_sq_count_err)
    }
}

/// Inputs for one test case. `experts` need not be ordered.
#[derive(Debug, Clone)]
pub struct ConcordanceInput<'a> {
    pub case_id: &'a str,
    pub experts: Vec<&'a Opinion>,
    pub crowd_consensus: Option<&'a [LineSegment]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCase {
    pub case_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concordance {
    pub cases: Vec<CaseEvaluation>,
    pub skipped: Vec<SkippedCase>,
    pub comparisons: usize,
    pub crowd_mean_dice: f64,
    pub expert_mean_dice: f64,
    pub crowd_count_mse: f64,
    pub expert_count_mse: f64,
}

fn evaluate_case(
    case_id: &str,
    experts: &[Opinion],
    crowd: &[LineSegment],
    consensus: &ConsensusParams,
    metric: SimilarityParams,
) -> Result<CaseEvaluation> {
    let mut folds = Vec::with_capacity(experts.len());
    for (k, left_out) in experts.iter().enumerate() {
        let reference = loo_consensus(experts, k, consensus)?;
        let contributing: Vec<Opinion> = experts
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, o)| o.clone())
            .collect();
        let reference_count = count_reference(&contributing)?;
        let sq = |count: usize| (count as f64 - reference_count).powi(2);
        folds.push(FoldEvaluation {
            leave_out: k,
            expert_id: left_out.annotator_id.clone(),
            expert_dice: dice_h(&left_out.lines, &reference.lines, metric),
            crowd_dice: dice_h(crowd, &reference.lines, metric),
            expert_sq_count_err: sq(left_out.line_count()),
            crowd_sq_count_err: sq(crowd.len()),
            reference: reference.lines,
            reference_count,
        });
    }
    Ok(CaseEvaluation {
        case_id: case_id.to_string(),
        folds,
    })
}

/// Leave-one-out concordance of individual experts and the crowd consensus.
///
/// `roster` lists the expert ids every case must have; folds follow roster
/// order. Cases missing an expert or a crowd consensus are skipped, listed in
/// `skipped`, and excluded from every aggregate. Results are sorted by case
/// id; aggregates are means over all evaluated (case, fold) pairs.
pub fn concordance(
    inputs: &[ConcordanceInput<'_>],
    roster: &[String],
    consensus: &ConsensusParams,
    metric: SimilarityParams,
) -> Result<Concordance> {
    if roster.len() < 3 {
        return Err(Error::invalid(format!("concordance needs at least 3 experts, got {}", roster.len())));
    }
    let outcomes: Vec<std::result::Result<CaseEvaluation, SkippedCase>> = inputs
        .par_iter()
        .map(|input| {
            let skip = |reason: String| SkippedCase {
                case_id: input.case_id.to_string(),
                reason,
            };
            let by_id: BTreeMap<&str, &Opinion> = input.experts.iter().map(|o| (o.annotator_id.as_str(), *o)).collect();
            let mut experts = Vec::with_capacity(roster.len());
            for id in roster {
                match by_id.get(id.as_str()) {
                    Some(o) => experts.push((*o).clone()),
                    None => return Err(skip(format!("missing opinion from expert `{id}`"))),
                }
            }
            let Some(crowd) = input.crowd_consensus else {
                return Err(skip("no crowd consensus".to_string()));
            };
            evaluate_case(input.case_id, &experts, crowd, consensus, metric).map_err(|e| skip(e.to_string()))
        })
        .collect();

    let mut cases = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(c) => cases.push(c),
            Err(s) => skipped.push(s),
        }
    }

    cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    skipped.sort_by(|a, b| a.case_id.cmp(&b.case_id));

    let folds: Vec<&FoldEvaluation> = cases.iter().flat_map(|c| c.folds.iter()).collect();
    let comparisons = folds.len();
    let avg = |f: fn(&FoldEvaluation) -> f64| {
        if comparisons == 0 {
            f64::NAN
        } else {
            folds.iter().map(|x| f(x)).sum::<f64>() / comparisons as f64
        }
    };
    Ok(Concordance {
        crowd_mean_dice: avg(|f| f.crowd_dice),
        expert_mean_dice: avg(|f| f.expert_dice),
        crowd_count_mse: avg(|f| f.crowd_sq_count_err),
        expert_count_mse: avg(|f| f.expert_sq_count_err),
        comparisons,
        cases,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountMatchCase {
    pub crowd_count: usize,
    pub reference_count: f64,
    pub expert_counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountMatchRate {
    /// `None` when no case is discordant.
    pub rate: Option<f64>,
    pub discordant_cases: usize,
    pub matched_cases: usize,
}

/// Among cases where the crowd count differs from the reference count, the
/// fraction where at least one individual expert drew the crowd's count.
pub fn count_match_rate(cases: &[CountMatchCase]) -> CountMatchRate {
    let discordant: Vec<&CountMatchCase> = cases
        .iter()
        .filter(|c| c.crowd_count as f64 != c.reference_count)
        .collect();
    let matched = discordant
        .iter()
        .filter(|c| c.expert_counts.contains(&c.crowd_count))
        .count();
    CountMatchRate {
        rate: (!discordant.is_empty()).then(|| matched as f64 / discordant.len() as f64),
        discordant_cases: discordant.len(),
        matched_cases: matched,
    }
}

/// Mean Dice-H over all unordered pairs of line sets.
pub fn mean_pairwise_dice(sets: &[&[LineSegment]], metric: SimilarityParams) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            sum += dice_h(sets[i], sets[j], metric);
            pairs += 1;
        }
    }
    if pairs == 0 {
        f64::NAN
    } else {
        sum / pairs as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementCorrelation {
    pub correlation: Correlation,
    pub expert_agreement: Vec<f64>,
    pub crowd_agreement: Vec<f64>,
}

/// Correlates per-case expert agreement (mean pairwise Dice-H among experts)
/// with crowd agreement (the same over the selected crowd opinions).
pub fn agreement_correlation(
    cases: &[(Vec<&[LineSegment]>, Vec<&[LineSegment]>)],
    metric: SimilarityParams,
) -> Result<AgreementCorrelation> {
    if cases.len() < 3 {
        return Err(Error::invalid(format!("agreement correlation needs at least 3 cases, got {}", cases.len())));
    }
    if let Some(i) = cases.iter().position(|(e, c)| e.len() < 2 || c.len() < 2) {
        return Err(Error::invalid(format!("case {i} has fewer than 2 expert or crowd opinions")));
    }
    let (expert_agreement, crowd_agreement): (Vec<f64>, Vec<f64>) = cases
        .par_iter()
        .map(|(e, c)| (mean_pairwise_dice(e, metric), mean_pairwise_dice(c, metric)))
        .unzip();
    let correlation = stats::pearson(&crowd_agreement, &expert_agreement)?;
    Ok(AgreementCorrelation {
        correlation,
        expert_agreement,
        crowd_agreement,
    })
}

/// A training opinion's score against its reference standard.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredOpinion {
    pub annotator_id: String,
    pub timestamp: i64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningBin {
    pub bin: usize,
    /// 1-based, inclusive range of per-annotator opinion indices.
    pub first_index: usize,
    pub last_index: usize,
    pub mean: f64,
    pub sem: f64,
    pub n_scores: usize,
    pub n_annotators: usize,
    /// Fewer than two annotators contribute.
    pub flagged: bool,
}

/// Scores binned by each annotator's running opinion index.
///
/// Each annotator's opinions are ordered by timestamp and numbered from 1;
/// bin `b` holds indices `b*width + 1 ..= (b+1)*width`. Mean and SEM pool
/// all scores in the bin across annotators.
pub fn learning_curve(scored: &[ScoredOpinion], bin_width: usize) -> Result<Vec<LearningBin>> {
    if bin_width == 0 {
        return Err(Error::invalid("learning-curve bin width must be >= 1"));
    }
    let mut per_annotator: BTreeMap<&str, Vec<(i64, f64)>> = BTreeMap::new();
    for s in scored {
        per_annotator.entry(&s.annotator_id).or_default().push((s.timestamp, s.score));
    }
    let mut bins: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for list in per_annotator.values_mut() {
        list.sort_by_key(|&(t, _)| t);
        let mut last_bin = None;
        for (idx, &(_, score)) in list.iter().enumerate() {
            let b = idx / bin_width;
            let slot = bins.entry(b).or_default();
            slot.0.push(score);
            if last_bin != Some(b) {
                slot.1 += 1;
                last_bin = Some(b);
            }
        }
    }
    Ok(bins
        .into_iter()
        .map(|(b, (scores, n_annotators))| LearningBin {
            bin: b,
            first_index: b * bin_width + 1,
            last_index: (b + 1) * bin_width,
            mean: stats::mean(&scores),
            sem: stats::sem(&scores),
            n_scores: scores.len(),
            n_annotators,
            flagged: n_annotators < 2,
        })
        .collect())
}
