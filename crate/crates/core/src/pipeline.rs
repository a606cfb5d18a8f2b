//! End-to-end evaluation of a crowd against an expert panel.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::consensus::{build_consensus, ConsensusParams, Opinion, Split};
use crate::error::{Error, Result};
use crate::evaluation::{
    agreement_correlation, concordance, count_match_rate, learning_curve, CaseEvaluation, ConcordanceInput, CountMatchCase,
    CountMatchRate, LearningBin, ScoredOpinion, SkippedCase,
};
use crate::geometry::LineSegment;
use crate::metric::{dice_h, SimilarityParams};
use crate::scoring::{select_top_k, QscoreLedger, Window};
use crate::stats::{self, bca_bootstrap, BcaInterval, Correlation, TTest};

pub const SCHEMA_VERSION: u32 = 1;

/// Where the evaluated opinions came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataOrigin {
    /// `"synthetic"` or `"external"`.
    pub kind: String,
    pub description: String,
    /// Seed that generated synthetic data.
    pub master_seed: Option<u64>,
}

impl DataOrigin {
    pub fn external() -> Self {
        DataOrigin {
            kind: "external".into(),
            description: "opinions supplied by the caller".into(),
            master_seed: None,
        }
    }

    pub fn synthetic(master_seed: u64) -> Self {
        DataOrigin {
            kind: "synthetic".into(),
            description: SYNTHETIC_NOTICE.into(),
            master_seed: Some(master_seed),
        }
    }
}

pub const SYNTHETIC_NOTICE: &str = "Simulated contest. Truth lines, annotator skill, learning and scheduling follow an \
invented generative model (1-5 near-vertical lines per positive frame, Gaussian endpoint noise, exponential learning, \
Poisson spurious lines). Numbers describe the model, not clinical performance.";

/// The all-expert consensus of every case the experts annotated.
pub fn expert_references(experts: &[Opinion], params: &ConsensusParams) -> Result<BTreeMap<String, Vec<LineSegment>>> {
    let mut by_case: BTreeMap<&str, Vec<Opinion>> = BTreeMap::new();
    for o in experts {
        by_case.entry(&o.case_id).or_default().push(o.clone());
    }
    by_case
        .into_par_iter()
        .map(|(case, ops)| Ok((case.to_string(), build_consensus(&ops, params)?.lines)))
        .collect()
}

/// Opinions ordered by timestamp, ties by annotator id.
pub fn stream_order(opinions: &[Opinion]) -> Vec<&Opinion> {
    let mut v: Vec<&Opinion> = opinions.iter().collect();
    v.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.annotator_id.cmp(&b.annotator_id)));
    v
}

/// Replays training feedback: each training opinion with a reference is
/// scored against it and appended to its annotator's ledger. Returns the
/// ledger and the number of training opinions that had no reference.
pub fn build_ledger(
    opinions: &[Opinion],
    references: &BTreeMap<String, Vec<LineSegment>>,
    metric: SimilarityParams,
    window: Window,
) -> Result<(QscoreLedger, usize)> {
    let mut ledger = QscoreLedger::new(window);
    let mut unscored = 0;
    for o in stream_order(opinions) {
        if o.split != Split::Train {
            continue;
        }
        match references.get(&o.case_id) {
            Some(r) => ledger.record_training_score(&o.annotator_id, o.timestamp, dice_h(&o.lines, r, metric))?,
            None => unscored += 1,
        }
    }
    Ok((ledger, unscored))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub experts: usize,
    pub expert_opinions: usize,
    pub crowd_opinions: usize,
    pub crowd_users: usize,
    pub crowd_training_opinions: usize,
    pub unscored_training_opinions: usize,
    pub test_cases: usize,
    pub evaluated_cases: usize,
    pub comparisons: usize,
    pub selected_opinions: usize,
    pub selected_users: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub r: f64,
    pub p: f64,
    pub p_capped: bool,
    pub n: usize,
}

impl From<Correlation> for CorrelationSummary {
    fn from(c: Correlation) -> Self {
        CorrelationSummary {
            r: c.r,
            p: c.p.value,
            p_capped: c.p.capped,
            n: c.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case_id: String,
    pub crowd_count: usize,
    pub selected_annotators: Vec<String>,
    pub crowd_mean_dice: f64,
    pub expert_mean_dice: f64,
    pub crowd_count_mse: f64,
    pub expert_count_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub data_origin: DataOrigin,
    pub config: RunConfig,
    pub counts: Counts,
    pub crowd_mean_dice: f64,
    pub expert_mean_dice: f64,
    pub crowd_count_mse: f64,
    pub expert_count_mse: f64,
    /// Paired t-test over cases: crowd vs expert per-case count MSE.
    pub count_mse_test: Option<TTest>,
    /// BCa interval for the mean per-case (crowd - expert) Dice-H difference.
    pub dice_diff_ci: Option<BcaInterval>,
    /// Paired t-test over cases: crowd vs expert per-case mean Dice-H.
    pub dice_diff_test: Option<TTest>,
    pub agreement_correlation: Option<CorrelationSummary>,
    /// Crowd vs expert Dice-H against the same reference, over (case, fold) pairs.
    pub concordance_correlation: Option<CorrelationSummary>,
    pub count_match: CountMatchRate,
    pub learning_curve: Vec<LearningBin>,
    pub cases: Vec<CaseSummary>,
    pub skipped: Vec<SkippedCase>,
    pub notes: Vec<String>,
}

/// Report plus the per-case detail and bootstrap replicates behind it.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub case_evaluations: Vec<CaseEvaluation>,
    pub bootstrap_replicates: Vec<f64>,
    pub ledger: QscoreLedger,
}

fn note_err<T>(notes: &mut Vec<String>, what: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("{what}: {e}");
            notes.push(format!("{what} not computed: {e}"));
            None
        }
    }
}

/// Runs the full protocol: expert references, training-score ledger,
/// top-k crowd consensus per test case, leave-one-out concordance and the
/// statistics on top of it.
pub fn evaluate(experts: &[Opinion], crowd: &[Opinion], cfg: &RunConfig, origin: DataOrigin) -> Result<Evaluation> {
    cfg.validate()?;
    let eval_metric = cfg.metric.eval_cutoff;
    let roster: Vec<String> = experts
        .iter()
        .map(|o| o.annotator_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if roster.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 experts, found {}", roster.len())));
    }
    let mut seen = BTreeSet::new();
    for o in experts {
        if !seen.insert((o.case_id.as_str(), o.annotator_id.as_str())) {
            return Err(Error::invalid(format!(
                "expert `{}` has more than one opinion on case `{}`",
                o.annotator_id, o.case_id
            )));
        }
    }

    let references = expert_references(experts, &cfg.consensus)?;
    let (ledger, unscored) = build_ledger(crowd, &references, cfg.metric.in_game_cutoff, cfg.selection.window)?;
    if unscored > 0 {
        log::warn!("{unscored} crowd training opinions have no expert reference and were not scored");
    }

    let training: Vec<ScoredOpinion> = crowd
        .iter()
        .filter(|o| o.split == Split::Train)
        .filter_map(|o| {
            references.get(&o.case_id).map(|r| ScoredOpinion {
                annotator_id: o.annotator_id.clone(),
                timestamp: o.timestamp,
                score: dice_h(&o.lines, r, eval_metric),
            })
        })
        .collect();
    let curve = learning_curve(&training, cfg.evaluation.learning_curve_bin_width)?;

    let mut experts_by_case: BTreeMap<&str, Vec<&Opinion>> = BTreeMap::new();
    for o in experts.iter().filter(|o| o.split == Split::Test) {
        experts_by_case.entry(&o.case_id).or_default().push(o);
    }
    let mut crowd_by_case: BTreeMap<&str, Vec<Opinion>> = BTreeMap::new();
    for o in crowd.iter().filter(|o| o.split == Split::Test) {
        crowd_by_case.entry(&o.case_id).or_default().push(o.clone());
    }
    for case in crowd_by_case.keys() {
        if !experts_by_case.contains_key(case) {
            log::warn!("crowd opinions on test case `{case}` have no expert opinions; ignored");
        }
    }

    let policy = cfg.selection_policy();
    let selections: Vec<(&str, Vec<Opinion>, Option<Vec<LineSegment>>)> = experts_by_case
        .par_iter()
        .map(|(case, _)| {
            let selected = crowd_by_case
                .get(case)
                .map(|ops| select_top_k(ops, &ledger, &policy))
                .unwrap_or_default();
            let consensus = if selected.is_empty() {
                None
            } else {
                Some(build_consensus(&selected, &cfg.consensus)?.lines)
            };
            Ok((*case, selected, consensus))
        })
        .collect::<Result<_>>()?;

    let inputs: Vec<ConcordanceInput<'_>> = selections
        .iter()
        .map(|(case, _, consensus)| ConcordanceInput {
            case_id: case,
            experts: experts_by_case[case].clone(),
            crowd_consensus: consensus.as_deref(),
        })
        .collect();
    let mut conc = concordance(&inputs, &roster, &cfg.consensus, eval_metric)?;
    for s in &mut conc.skipped {
        if s.reason == "no crowd consensus" {
            s.reason = "no eligible crowd opinion".into();
        }
    }

    let mut notes = Vec::new();
    let selection_of: BTreeMap<&str, &(&str, Vec<Opinion>, Option<Vec<LineSegment>>)> =
        selections.iter().map(|s| (s.0, s)).collect();

    let crowd_mse: Vec<f64> = conc.cases.iter().map(CaseEvaluation::crowd_count_mse).collect();
    let expert_mse: Vec<f64> = conc.cases.iter().map(CaseEvaluation::expert_count_mse).collect();
    let crowd_dice: Vec<f64> = conc.cases.iter().map(CaseEvaluation::crowd_mean_dice).collect();
    let expert_dice: Vec<f64> = conc.cases.iter().map(CaseEvaluation::expert_mean_dice).collect();
    let diffs: Vec<f64> = crowd_dice.iter().zip(&expert_dice).map(|(c, e)| c - e).collect();

    let count_mse_test = note_err(&mut notes, "count MSE t-test", stats::paired_t(&crowd_mse, &expert_mse));
    let dice_diff_test = note_err(&mut notes, "Dice-H t-test", stats::paired_t(&crowd_dice, &expert_dice));
    let mut dice_diff_ci = note_err(&mut notes, "Dice-H bootstrap", bca_bootstrap(&diffs, stats::mean, &cfg.bootstrap));
    let bootstrap_replicates = dice_diff_ci.as_mut().map(|ci| std::mem::take(&mut ci.replicates)).unwrap_or_default();

    let folds: Vec<_> = conc.cases.iter().flat_map(|c| c.folds.iter()).collect();
    let fold_crowd: Vec<f64> = folds.iter().map(|f| f.crowd_dice).collect();
    let fold_expert: Vec<f64> = folds.iter().map(|f| f.expert_dice).collect();
    let concordance_correlation = note_err(
        &mut notes,
        "concordance correlation",
        stats::pearson(&fold_crowd, &fold_expert),
    )
    .map(CorrelationSummary::from);

    let mut agreement_cases = Vec::new();
    for c in &conc.cases {
        let (_, selected, _) = selection_of[c.case_id.as_str()];
        if selected.len() < 2 {
            continue;
        }
        let e: Vec<&[LineSegment]> = experts_by_case[c.case_id.as_str()].iter().map(|o| o.lines.as_slice()).collect();
        let s: Vec<&[LineSegment]> = selected.iter().map(|o| o.lines.as_slice()).collect();
        agreement_cases.push((e, s));
    }
    if agreement_cases.len() < conc.cases.len() {
        notes.push(format!(
            "agreement correlation uses {} of {} cases (others had fewer than 2 selected crowd opinions)",
            agreement_cases.len(),
            conc.cases.len()
        ));
    }
    let agreement = note_err(
        &mut notes,
        "agreement correlation",
        agreement_correlation(&agreement_cases, eval_metric),
    )
    .map(|a| CorrelationSummary::from(a.correlation));

    let match_cases: Vec<CountMatchCase> = conc
        .cases
        .iter()
        .map(|c| {
            let (_, _, consensus) = selection_of[c.case_id.as_str()];
            CountMatchCase {
                crowd_count: consensus.as_ref().map_or(0, Vec::len),
                reference_count: references[&c.case_id].len() as f64,
                expert_counts: experts_by_case[c.case_id.as_str()].iter().map(|o| o.line_count()).collect(),
            }
        })
        .collect();
    let count_match = count_match_rate(&match_cases);

    let mut selected_users = BTreeSet::new();
    let mut selected_opinions = 0;
    for (_, sel, _) in &selections {
        selected_opinions += sel.len();
        selected_users.extend(sel.iter().map(|o| o.annotator_id.as_str()));
    }

    let cases: Vec<CaseSummary> = conc
        .cases
        .iter()
        .map(|c| {
            let (_, selected, consensus) = selection_of[c.case_id.as_str()];
            CaseSummary {
                case_id: c.case_id.clone(),
                crowd_count: consensus.as_ref().map_or(0, Vec::len),
                selected_annotators: selected.iter().map(|o| o.annotator_id.clone()).collect(),
                crowd_mean_dice: c.crowd_mean_dice(),
                expert_mean_dice: c.expert_mean_dice(),
                crowd_count_mse: c.crowd_count_mse(),
                expert_count_mse: c.expert_count_mse(),
            }
        })
        .collect();

    let report = EvalReport {
        schema_version: SCHEMA_VERSION,
        data_origin: origin,
        config: cfg.clone(),
        counts: Counts {
            experts: roster.len(),
            expert_opinions: experts.len(),
            crowd_opinions: crowd.len(),
            crowd_users: crowd.iter().map(|o| o.annotator_id.as_str()).collect::<BTreeSet<_>>().len(),
            crowd_training_opinions: crowd.iter().filter(|o| o.split == Split::Train).count(),
            unscored_training_opinions: unscored,
            test_cases: experts_by_case.len(),
            evaluated_cases: conc.cases.len(),
            comparisons: conc.comparisons,
            selected_opinions,
            selected_users: selected_users.len(),
        },
        crowd_mean_dice: conc.crowd_mean_dice,
        expert_mean_dice: conc.expert_mean_dice,
        crowd_count_mse: conc.crowd_count_mse,
        expert_count_mse: conc.expert_count_mse,
        count_mse_test,
        dice_diff_ci,
        dice_diff_test,
        agreement_correlation: agreement,
        concordance_correlation,
        count_match,
        learning_curve: curve,
        cases,
        skipped: conc.skipped.clone(),
        notes,
    };
    Ok(Evaluation {
        report,
        case_evaluations: conc.cases,
        bootstrap_replicates,
        ledger,
    })
}
