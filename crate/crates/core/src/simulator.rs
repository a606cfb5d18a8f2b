//! Synthetic contests: ground truth, a fixed expert panel, and a crowd of
//! learning annotators scheduled the way the gamified contest interleaves
//! training and test frames.
//!
//! The generative model is an invention for exercising the pipeline; it is
//! not fitted to clinical data. Every random choice flows from a stream
//! keyed by `(master_seed, label)`, so adding annotators or cases never
//! perturbs existing ones.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::{build_consensus, ConsensusParams, Opinion, Split};
use crate::error::{Error, Result};
use crate::geometry::{segment_hausdorff, LineSegment, Point2, COORD_MAX, COORD_MIN};
use crate::metric::{dice_h, SimilarityParams};
use crate::scoring::{QscoreLedger, Window};

/// Truth lines in one case are at least this far apart (segment Hausdorff).
pub const MIN_TRUTH_SEPARATION: f64 = 12.0;
const PLEURAL_BAND: (f64, f64) = (20.0, 40.0);
const CENTER_RANGE: (f64, f64) = (5.0, 95.0);
const ENDPOINT_JITTER: f64 = 5.0;
const MAX_LINES: usize = 5;

/// Derives an independent RNG for `label` under `master_seed`.
pub fn stream_rng(master_seed: u64, label: &str) -> ChaCha8Rng {
    // FNV-1a over the label, then a splitmix64 finalizer with the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master_seed ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthCase {
    pub case_id: String,
    pub split: Split,
    pub true_lines: Vec<LineSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContestConfig {
    pub n_train_cases: usize,
    pub n_test_cases: usize,
    /// Relative frequency of training to test draws.
    pub train_test_ratio: (u32, u32),
    pub n_experts: usize,
    pub n_crowd: usize,
    pub opinions_per_crowd_user: f64,
    pub master_seed: u64,
    /// Probability that a training case has no lines.
    pub train_empty_fraction: f64,
    /// Probability that a test case has no lines.
    pub test_empty_fraction: f64,
}

impl Default for ContestConfig {
    fn default() -> Self {
        ContestConfig {
            n_train_cases: 200,
            n_test_cases: 200,
            train_test_ratio: (1, 2),
            n_experts: 5,
            n_crowd: 200,
            opinions_per_crowd_user: 98.9,
            master_seed: 2023,
            train_empty_fraction: 0.5,
            test_empty_fraction: 0.2,
        }
    }
}

impl ContestConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [self.n_train_cases, self.n_test_cases, self.n_experts, self.n_crowd];
        if counts.contains(&0) {
            return Err(Error::invalid("contest counts must all be >= 1"));
        }
        if self.train_test_ratio.0 == 0 || self.train_test_ratio.1 == 0 {
            return Err(Error::invalid("train/test ratio components must be >= 1"));
        }
        if !(self.opinions_per_crowd_user >= 1.0) {
            return Err(Error::invalid("opinions_per_crowd_user must be >= 1"));
        }
        for f in [self.train_empty_fraction, self.test_empty_fraction] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid("empty-case fractions must be in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn train_probability(&self) -> f64 {
        let (a, b) = self.train_test_ratio;
        f64::from(a) / f64::from(a + b)
    }
}

/// Skill of one simulated annotator as a function of training cases seen.
///
/// Each skill parameter moves from its initial value toward its asymptote
/// as `exp(-n / learning_rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotatorModel {
    pub detect_prob_initial: f64,
    pub detect_prob_asymptote: f64,
    pub noise_sigma_initial: f64,
    pub noise_sigma_asymptote: f64,
    pub learning_rate: f64,
    pub false_positive_rate: f64,
    pub response_seed: u64,
}

/// The default is the expert panel member: skilled, not flawless, not learning.
impl Default for AnnotatorModel {
    fn default() -> Self {
        AnnotatorModel::fixed(0.9, 1.2, 0.15)
    }
}

impl AnnotatorModel {
    /// A model that does not learn.
    pub fn fixed(detect_prob: f64, noise_sigma: f64, false_positive_rate: f64) -> Self {
        AnnotatorModel {
            detect_prob_initial: detect_prob,
            detect_prob_asymptote: detect_prob,
            noise_sigma_initial: noise_sigma,
            noise_sigma_asymptote: noise_sigma,
            learning_rate: 1.0,
            false_positive_rate,
            response_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !p_ok(self.detect_prob_initial) || !p_ok(self.detect_prob_asymptote) {
            return Err(Error::invalid("detection probabilities must be in [0, 1]"));
        }
        if self.detect_prob_asymptote < self.detect_prob_initial {
            return Err(Error::invalid("detection asymptote must be >= initial"));
        }
        if !(self.noise_sigma_asymptote >= 0.0 && self.noise_sigma_asymptote <= self.noise_sigma_initial) {
            return Err(Error::invalid("noise sigma asymptote must be in [0, initial]"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be > 0"));
        }
        if !(self.false_positive_rate >= 0.0 && self.false_positive_rate.is_finite()) {
            return Err(Error::invalid("false_positive_rate must be >= 0"));
        }
        Ok(())
    }

    fn progress(&self, n_seen: usize) -> f64 {
        (-(n_seen as f64) / self.learning_rate).exp()
    }

    pub fn detect_prob(&self, n_seen: usize) -> f64 {
        let w = self.progress(n_seen);
        self.detect_prob_asymptote + (self.detect_prob_initial - self.detect_prob_asymptote) * w
    }

    pub fn noise_sigma(&self, n_seen: usize) -> f64 {
        let w = self.progress(n_seen);
        self.noise_sigma_asymptote + (self.noise_sigma_initial - self.noise_sigma_asymptote) * w
    }

    /// Lines this annotator draws on `case` after `n_seen` training cases.
    pub fn annotate<R: Rng>(&self, case: &TruthCase, n_seen: usize, rng: &mut R) -> Vec<LineSegment> {
        let p = self.detect_prob(n_seen);
        let sigma = self.noise_sigma(n_seen);
        let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
        let mut lines = Vec::with_capacity(case.true_lines.len() + 1);
        for truth in &case.true_lines {
            if rng.random::<f64>() >= p {
                continue;
            }
            let mut c = truth.coords();
            if let Some(n) = &noise {
                for v in c.iter_mut() {
                    *v = (*v + n.sample(rng)).clamp(COORD_MIN, COORD_MAX);
                }
            }
            let line = LineSegment::from_coords(c[0], c[1], c[2], c[3]);
            if !line.is_degenerate() {
                lines.push(line);
            }
        }
        if self.false_positive_rate > 0.0 {
            let spurious = Poisson::new(self.false_positive_rate).expect("positive rate").sample(rng) as usize;
            for _ in 0..spurious {
                lines.push(random_bline(rng));
            }
        }
        lines
    }
}

/// Range `[lo, hi]` sampled uniformly.
pub type Range = (f64, f64);

/// Distribution of crowd skill.
///
/// Each user draws one latent skill level `s` uniformly from `[0, 1]`; the
/// asymptotic detection probability, asymptotic noise and false-positive
/// rate sit at quantile `s` of their ranges (better for larger `s`), and the
/// user's expected activity is `0.5 + s` times the contest mean. Initial
/// skill and learning rate are drawn independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrowdPopulation {
    pub detect_prob_initial: Range,
    pub detect_prob_asymptote: Range,
    pub noise_sigma_initial: Range,
    pub noise_sigma_asymptote: Range,
    pub learning_rate: Range,
    pub false_positive_rate: Range,
}

impl Default for CrowdPopulation {
    fn default() -> Self {
        CrowdPopulation {
            detect_prob_initial: (0.4, 0.7),
            detect_prob_asymptote: (0.85, 0.97),
            noise_sigma_initial: (3.0, 5.0),
            noise_sigma_asymptote: (0.8, 1.6),
            learning_rate: (5.0, 150.0),
            false_positive_rate: (0.05, 0.3),
        }
    }
}

impl CrowdPopulation {
    fn draw<R: Rng>(&self, rng: &mut R) -> (AnnotatorModel, f64) {
        let skill: f64 = rng.random();
        let at = |r: Range, q: f64| r.0 + (r.1 - r.0) * q;
        let mut u = |r: Range| if r.1 > r.0 { rng.random_range(r.0..=r.1) } else { r.0 };
        let detect_prob_initial = u(self.detect_prob_initial);
        let noise_sigma_initial = u(self.noise_sigma_initial);
        let learning_rate = u(self.learning_rate);
        let model = AnnotatorModel {
            detect_prob_initial,
            detect_prob_asymptote: at(self.detect_prob_asymptote, skill).max(detect_prob_initial),
            noise_sigma_initial,
            noise_sigma_asymptote: at(self.noise_sigma_asymptote, 1.0 - skill).min(noise_sigma_initial),
            learning_rate,
            false_positive_rate: at(self.false_positive_rate, 1.0 - skill),
            response_seed: 0,
        };
        (model, 0.5 + skill)
    }
}

/// One B-line-shaped segment: top in the pleural band, bottom at the field's
/// lower edge, both x within the jitter of a common center.
fn random_bline<R: Rng>(rng: &mut R) -> LineSegment {
    let cx = rng.random_range(CENTER_RANGE.0..=CENTER_RANGE.1);
    let mut jitter = || (cx + rng.random_range(-ENDPOINT_JITTER..=ENDPOINT_JITTER)).clamp(COORD_MIN, COORD_MAX);
    let (tx, bx) = (jitter(), jitter());
    let ty = rng.random_range(PLEURAL_BAND.0..=PLEURAL_BAND.1);
    LineSegment::new(Point2::new(tx, ty), Point2::new(bx, COORD_MAX))
}

fn truth_lines<R: Rng>(rng: &mut R) -> Vec<LineSegment> {
    let want = rng.random_range(1..=MAX_LINES);
    let mut lines: Vec<LineSegment> = Vec::with_capacity(want);
    let mut attempts = 0;
    while lines.len() < want && attempts < 200 {
        attempts += 1;
        let cand = random_bline(rng);
        if lines.iter().all(|l| segment_hausdorff(l, &cand) >= MIN_TRUTH_SEPARATION) {
            lines.push(cand);
        }
    }
    lines.sort_by(|a, b| a.top().x.total_cmp(&b.top().x));
    lines
}

/// Deterministic ground truth for every case in the contest.
pub fn generate_truth(cfg: &ContestConfig) -> Vec<TruthCase> {
    let mut rng = stream_rng(cfg.master_seed, "truth");
    let mut cases = Vec::with_capacity(cfg.n_train_cases + cfg.n_test_cases);
    let make = |split: Split, i: usize, empty_fraction: f64, rng: &mut ChaCha8Rng| {
        let empty = rng.random::<f64>() < empty_fraction;
        TruthCase {
            case_id: format!("{}-{:04}", split.as_str(), i + 1),
            split,
            true_lines: if empty { Vec::new() } else { truth_lines(rng) },
        }
    };
    for i in 0..cfg.n_train_cases {
        cases.push(make(Split::Train, i, cfg.train_empty_fraction, &mut rng));
    }
    // Training must show both kinds of frame whenever there are two or more.
    if cfg.n_train_cases >= 2 {
        let train = &mut cases[..cfg.n_train_cases];
        if train.iter().all(|c| c.true_lines.is_empty()) {
            train[0].true_lines = truth_lines(&mut rng);
        } else if train.iter().all(|c| !c.true_lines.is_empty()) {
            train[0].true_lines.clear();
        }
    }
    for i in 0..cfg.n_test_cases {
        cases.push(make(Split::Test, i, cfg.test_empty_fraction, &mut rng));
    }
    cases
}

pub fn simulate_opinion<R: Rng>(
    model: &AnnotatorModel,
    annotator_id: &str,
    case: &TruthCase,
    n_training_seen: usize,
    timestamp: i64,
    rng: &mut R,
) -> Opinion {
    Opinion::new(
        case.case_id.clone(),
        annotator_id,
        model.annotate(case, n_training_seen, rng),
        timestamp,
        case.split,
    )
}

/// Draws case indices: training with probability `a/(a+b)`, split evenly
/// between training cases with and without lines; test cases uniformly.
#[derive(Debug, Clone)]
pub struct Schedule {
    train_with_lines: Vec<usize>,
    train_without_lines: Vec<usize>,
    test: Vec<usize>,
    train_probability: f64,
}

impl Schedule {
    pub fn new(cases: &[TruthCase], train_probability: f64) -> Self {
        let mut s = Schedule {
            train_with_lines: Vec::new(),
            train_without_lines: Vec::new(),
            test: Vec::new(),
            train_probability,
        };
        for (i, c) in cases.iter().enumerate() {
            match (c.split, c.true_lines.is_empty()) {
                (Split::Train, false) => s.train_with_lines.push(i),
                (Split::Train, true) => s.train_without_lines.push(i),
                (Split::Test, _) => s.test.push(i),
            }
        }
        s
    }

    pub fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let has_train = !(self.train_with_lines.is_empty() && self.train_without_lines.is_empty());
        let train = has_train && (self.test.is_empty() || rng.random::<f64>() < self.train_probability);
        let pool = if !train {
            &self.test
        } else if self.train_without_lines.is_empty() {
            &self.train_with_lines
        } else if self.train_with_lines.is_empty() || rng.random::<bool>() {
            &self.train_without_lines
        } else {
            &self.train_with_lines
        };
        pool[rng.random_range(0..pool.len())]
    }
}

/// Everything a simulated contest produces.
#[derive(Debug, Clone)]
pub struct ContestRun {
    pub truth: Vec<TruthCase>,
    pub expert_opinions: Vec<Opinion>,
    /// Sorted by timestamp, ties by annotator id.
    pub crowd_opinions: Vec<Opinion>,
    /// In-game (training feedback) scores per crowd user.
    pub ledger: QscoreLedger,
    /// All-expert consensus per case; the training feedback reference.
    pub references: BTreeMap<String, Vec<LineSegment>>,
    pub crowd: Vec<CrowdMember>,
}

pub fn expert_id(i: usize) -> String {
    format!("expert-{}", i + 1)
}

pub fn crowd_id(i: usize) -> String {
    format!("user-{:04}", i + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrowdMember {
    pub id: String,
    pub model: AnnotatorModel,
    /// Multiplies the contest's mean opinions per user.
    pub activity: f64,
}

impl CrowdMember {
    pub fn new(id: impl Into<String>, model: AnnotatorModel) -> Self {
        CrowdMember {
            id: id.into(),
            model,
            activity: 1.0,
        }
    }
}

/// Draws `cfg.n_crowd` crowd members, each from its own stream.
pub fn crowd_population(cfg: &ContestConfig, population: &CrowdPopulation) -> Vec<CrowdMember> {
    (0..cfg.n_crowd)
        .map(|i| {
            let id = crowd_id(i);
            let mut rng = stream_rng(cfg.master_seed, &format!("skill/{id}"));
            let (mut model, activity) = population.draw(&mut rng);
            model.response_seed = rng.random();
            CrowdMember { id, model, activity }
        })
        .collect()
}

const CONTEST_SPAN_MS: i64 = 60 * 60 * 60 * 1000;
const MEAN_GAP_MS: f64 = 9_000.0;

/// Runs the contest: experts annotate every case once at fixed skill; each
/// crowd user annotates a scheduled sequence and learns from training
/// feedback scored against the all-expert consensus.
pub fn run_contest(
    cfg: &ContestConfig,
    experts: &[AnnotatorModel],
    crowd: &[CrowdMember],
    consensus: &ConsensusParams,
    in_game: SimilarityParams,
) -> Result<ContestRun> {
    cfg.validate()?;
    for m in experts.iter().chain(crowd.iter().map(|c| &c.model)) {
        m.validate()?;
    }
    if let Some(c) = crowd.iter().find(|c| !(c.activity > 0.0 && c.activity.is_finite())) {
        return Err(Error::invalid(format!("activity of `{}` must be > 0", c.id)));
    }
    let truth = generate_truth(cfg);

    let expert_opinions: Vec<Opinion> = experts
        .par_iter()
        .enumerate()
        .flat_map_iter(|(e, model)| {
            let id = expert_id(e);
            let mut rng = stream_rng(cfg.master_seed, &format!("respond/{id}"));
            truth
                .iter()
                .enumerate()
                .map(|(i, case)| simulate_opinion(model, &id, case, usize::MAX, i as i64 * 1000, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect();

    let mut by_case: BTreeMap<&str, Vec<Opinion>> = BTreeMap::new();
    for o in &expert_opinions {
        by_case.entry(o.case_id.as_str()).or_default().push(o.clone());
    }
    let mut references = BTreeMap::new();
    for (case_id, ops) in &by_case {
        references.insert(case_id.to_string(), build_consensus(ops, consensus)?.lines);
    }

    let schedule = Schedule::new(&truth, cfg.train_probability());
    let per_user: Vec<(Vec<Opinion>, Vec<(i64, f64)>)> = crowd
        .par_iter()
        .map(|member| {
            let (id, model) = (&member.id, &member.model);
            let mut sched_rng = stream_rng(cfg.master_seed, &format!("schedule/{id}"));
            let mut resp_rng = ChaCha8Rng::seed_from_u64(model.response_seed);
            let count = Exp::new(1.0 / (cfg.opinions_per_crowd_user * member.activity))
                .expect("positive mean")
                .sample(&mut sched_rng)
                .round()
                .max(1.0) as usize;
            let gap = Exp::new(1.0 / MEAN_GAP_MS).expect("positive gap");
            let mut t = sched_rng.random_range(0..CONTEST_SPAN_MS);
            let mut seen = 0usize;
            let mut ops = Vec::with_capacity(count);
            let mut scores = Vec::new();
            for _ in 0..count {
                t += 1 + gap.sample(&mut sched_rng) as i64;
                let case = &truth[schedule.draw(&mut sched_rng)];
                let op = simulate_opinion(model, id, case, seen, t, &mut resp_rng);
                if case.split == Split::Train {
                    let reference = &references[&case.case_id];
                    scores.push((t, dice_h(&op.lines, reference, in_game)));
                    seen += 1;
                }
                ops.push(op);
            }
            (ops, scores)
        })
        .collect();

    let mut ledger = QscoreLedger::new(Window::All);
    let mut crowd_opinions = Vec::new();
    for (member, (ops, scores)) in crowd.iter().zip(per_user) {
        for (t, s) in scores {
            ledger.record_training_score(&member.id, t, s)?;
        }
        crowd_opinions.extend(ops);
    }
    crowd_opinions.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.annotator_id.cmp(&b.annotator_id)));

    Ok(ContestRun {
        truth,
        expert_opinions,
        crowd_opinions,
        ledger,
        references,
        crowd: crowd.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ContestConfig {
        ContestConfig {
            n_train_cases: 20,
            n_test_cases: 20,
            n_crowd: 3,
            opinions_per_crowd_user: 30.0,
            ..Default::default()
        }
    }

    #[test]
    fn truth_is_deterministic_and_valid() {
        let cfg = ContestConfig::default();
        let a = generate_truth(&cfg);
        assert_eq!(a, generate_truth(&cfg));
        assert_eq!(a.len(), 400);
        for c in &a {
            for l in &c.true_lines {
                assert!(l.in_bounds());
                assert!(l.top().y <= l.bottom().y);
                assert!((PLEURAL_BAND.0..=PLEURAL_BAND.1).contains(&l.top().y));
                assert_eq!(l.bottom().y, 100.0);
            }
            for i in 0..c.true_lines.len() {
                for j in (i + 1)..c.true_lines.len() {
                    assert!(segment_hausdorff(&c.true_lines[i], &c.true_lines[j]) >= MIN_TRUTH_SEPARATION);
                }
            }
        }
        let train: Vec<_> = a.iter().filter(|c| c.split == Split::Train).collect();
        assert!(train.iter().any(|c| c.true_lines.is_empty()));
        assert!(train.iter().any(|c| !c.true_lines.is_empty()));
    }

    #[test]
    fn training_always_has_both_kinds() {
        for frac in [0.0, 1.0] {
            let cfg = ContestConfig {
                n_train_cases: 5,
                train_empty_fraction: frac,
                ..Default::default()
            };
            let t = generate_truth(&cfg);
            let train: Vec<_> = t.iter().filter(|c| c.split == Split::Train).collect();
            assert!(train.iter().any(|c| c.true_lines.is_empty()));
            assert!(train.iter().any(|c| !c.true_lines.is_empty()));
        }
    }

    #[test]
    fn perfect_annotator_reproduces_truth() {
        let case = &generate_truth(&ContestConfig::default())[1];
        let m = AnnotatorModel::fixed(1.0, 0.0, 0.0);
        let mut rng = stream_rng(1, "x");
        let lines = m.annotate(case, 0, &mut rng);
        assert_eq!(lines, case.true_lines);
        assert_eq!(dice_h(&lines, &case.true_lines, SimilarityParams::evaluation()), 1.0);
    }

    #[test]
    fn blind_annotator_draws_nothing() {
        let m = AnnotatorModel::fixed(0.0, 2.0, 0.0);
        let mut rng = stream_rng(1, "x");
        for case in generate_truth(&ContestConfig::default()).iter().take(50) {
            assert!(m.annotate(case, 0, &mut rng).is_empty());
        }
    }

    #[test]
    fn skill_interpolates() {
        let m = AnnotatorModel {
            detect_prob_initial: 0.5,
            detect_prob_asymptote: 0.9,
            noise_sigma_initial: 4.0,
            noise_sigma_asymptote: 1.0,
            learning_rate: 10.0,
            false_positive_rate: 0.0,
            response_seed: 0,
        };
        assert_eq!(m.detect_prob(0), 0.5);
        assert_eq!(m.noise_sigma(0), 4.0);
        assert!((m.detect_prob(usize::MAX) - 0.9).abs() < 1e-15);
        assert!((m.noise_sigma(10) - (1.0 + 3.0 / std::f64::consts::E)).abs() < 1e-12);
    }

    #[test]
    fn model_validation() {
        let mut m = AnnotatorModel::fixed(0.9, 1.0, 0.1);
        assert!(m.validate().is_ok());
        m.detect_prob_initial = 0.95;
        assert!(m.validate().is_err());
        let mut m = AnnotatorModel::fixed(0.9, 1.0, 0.1);
        m.noise_sigma_asymptote = 2.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn stream_rng_independent_labels() {
        let a: u64 = stream_rng(7, "user-0001").random();
        let b: u64 = stream_rng(7, "user-0002").random();
        let c: u64 = stream_rng(7, "user-0001").random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn schedule_respects_pools() {
        let truth = generate_truth(&small_cfg());
        let s = Schedule::new(&truth, 1.0 / 3.0);
        let mut rng = stream_rng(3, "sched");
        let (mut train_with, mut train_without) = (0, 0);
        for _ in 0..30_000 {
            let c = &truth[s.draw(&mut rng)];
            if c.split == Split::Train {
                if c.true_lines.is_empty() {
                    train_without += 1;
                } else {
                    train_with += 1;
                }
            }
        }
        let ratio = train_with as f64 / (train_with + train_without) as f64;
        assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn single_user_contest() {
        let cfg = ContestConfig {
            n_crowd: 1,
            ..small_cfg()
        };
        let experts = vec![AnnotatorModel::fixed(0.95, 1.0, 0.05); 5];
        let crowd = crowd_population(&cfg, &CrowdPopulation::default());
        let run = run_contest(&cfg, &experts, &crowd, &ConsensusParams::default(), SimilarityParams::in_game()).unwrap();
        assert_eq!(run.ledger.annotators().collect::<Vec<_>>(), vec!["user-0001"]);
        let n_train = run.crowd_opinions.iter().filter(|o| o.split == Split::Train).count();
        assert_eq!(run.ledger.entries("user-0001").len(), n_train);
        assert_eq!(run.expert_opinions.len(), 5 * 40);
    }

    #[test]
    fn contest_is_deterministic_and_additive() {
        let cfg = small_cfg();
        let experts = vec![AnnotatorModel::fixed(0.95, 1.0, 0.05); 5];
        let crowd = crowd_population(&cfg, &CrowdPopulation::default());
        let run = |crowd: &[CrowdMember]| {
            run_contest(&cfg, &experts, crowd, &ConsensusParams::default(), SimilarityParams::in_game()).unwrap()
        };
        let a = run(&crowd);
        let b = run(&crowd);
        assert_eq!(a.crowd_opinions, b.crowd_opinions);
        assert_eq!(a.expert_opinions, b.expert_opinions);

        // adding a user leaves everyone else's opinions untouched
        let bigger = crowd_population(&ContestConfig { n_crowd: 4, ..cfg }, &CrowdPopulation::default());
        assert_eq!(&bigger[..3], &crowd[..]);
        let c = run(&bigger);
        let without_new: Vec<_> = c.crowd_opinions.iter().filter(|o| o.annotator_id != "user-0004").cloned().collect();
        assert_eq!(without_new, a.crowd_opinions);
    }
}
