//! Line-set similarity: the Dice-H score.
//!
//! Two lines are similar to the degree `max(0, 1 - H/cutoff)` where `H` is
//! their segment Hausdorff distance. Two line sets are compared by pairing
//! lines with a maximum-total-similarity assignment and taking twice the
//! matched similarity over the total line count.

use serde::{Deserialize, Serialize};

use crate::assignment::solve_rect;
use crate::error::{Error, Result};
use crate::geometry::{segment_hausdorff, LineSegment};

/// Hausdorff cutoff used for evaluation concordance.
pub const EVAL_CUTOFF: f64 = 5.0;
/// Gentler cutoff used for in-game scoring and Qscores.
pub const IN_GAME_CUTOFF: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SimilarityParams {
    cutoff: f64,
}

impl SimilarityParams {
    pub fn new(cutoff: f64) -> Result<Self> {
        if cutoff.is_finite() && cutoff > 0.0 {
            Ok(SimilarityParams { cutoff })
        } else {
            Err(Error::invalid(format!("similarity cutoff must be > 0, got {cutoff}")))
        }
    }

    pub fn evaluation() -> Self {
        SimilarityParams { cutoff: EVAL_CUTOFF }
    }

    pub fn in_game() -> Self {
        SimilarityParams { cutoff: IN_GAME_CUTOFF }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
}

impl TryFrom<f64> for SimilarityParams {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        SimilarityParams::new(v)
    }
}

impl From<SimilarityParams> for f64 {
    fn from(p: SimilarityParams) -> f64 {
        p.cutoff
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub a: usize,
    pub b: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_a: Vec<usize>,
    pub unmatched_b: Vec<usize>,
}

impl Matching {
    /// Sum of pair similarities, accumulated in ascending index-into-A order.
    pub fn total_similarity(&self) -> f64 {
        self.pairs.iter().map(|p| p.similarity).sum()
    }
}

pub fn pair_similarity(a: &LineSegment, b: &LineSegment, params: SimilarityParams) -> f64 {
    (1.0 - segment_hausdorff(a, b) / params.cutoff).max(0.0)
}

/// Maximum-total-similarity matching of size `min(|A|, |B|)`.
///
/// Pairs with zero similarity are kept so the pair count is always
/// `min(|A|, |B|)`. Pairs are listed in ascending order of their A index.
pub fn optimal_matching(set_a: &[LineSegment], set_b: &[LineSegment], params: SimilarityParams) -> Matching {
    let (na, nb) = (set_a.len(), set_b.len());
    let sim = |i: usize, j: usize| pair_similarity(&set_a[i], &set_b[j], params);

    // Solve with the smaller set as rows.
    let transpose = na > nb;
    let (rows, cols) = if transpose { (nb, na) } else { (na, nb) };
    let mut costs = Vec::with_capacity(rows * cols);
    let mut sims = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let s = if transpose { sim(c, r) } else { sim(r, c) };
            sims.push(s);
            costs.push(1.0 - s);
        }
    }
    let assign = solve_rect(&costs, rows, cols);

    let mut pairs: Vec<MatchedPair> = assign
        .iter()
        .enumerate()
        .map(|(r, &c)| {
            let similarity = sims[r * cols + c];
            if transpose {
                MatchedPair { a: c, b: r, similarity }
            } else {
                MatchedPair { a: r, b: c, similarity }
            }
        })
        .collect();
    pairs.sort_by_key(|p| p.a);

    let mut used_a = vec![false; na];
    let mut used_b = vec![false; nb];
    for p in &pairs {
        used_a[p.a] = true;
        used_b[p.b] = true;
    }
    let unused = |used: &[bool]| used.iter().enumerate().filter(|(_, &u)| !u).map(|(i, _)| i).collect();
    Matching {
        unmatched_a: unused(&used_a),
        unmatched_b: unused(&used_b),
        pairs,
    }
}

/// Dice-H score in `[0, 1]`. Two empty sets score 1.0.
pub fn dice_h(set_a: &[LineSegment], set_b: &[LineSegment], params: SimilarityParams) -> f64 {
    let total = set_a.len() + set_b.len();
    if total == 0 {
        return 1.0;
    }
    let matched = optimal_matching(set_a, set_b, params).total_similarity();
    (2.0 * matched / total as f64).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vline(x: f64) -> LineSegment {
        LineSegment::from_coords(x, 30.0, x, 100.0)
    }

    #[test]
    fn similarity_examples() {
        let p = SimilarityParams::evaluation();
        assert_eq!(pair_similarity(&vline(50.0), &vline(50.0), p), 1.0);
        assert_eq!(pair_similarity(&vline(50.0), &vline(55.0), p), 0.0);
        assert_eq!(pair_similarity(&vline(50.0), &vline(52.5), p), 0.5);
        assert_eq!(pair_similarity(&vline(50.0), &vline(90.0), p), 0.0);
    }

    #[test]
    fn rejects_bad_cutoff() {
        assert!(SimilarityParams::new(0.0).is_err());
        assert!(SimilarityParams::new(-1.0).is_err());
        assert!(SimilarityParams::new(f64::NAN).is_err());
    }

    #[test]
    fn matching_empty_and_single() {
        let p = SimilarityParams::evaluation();
        let b = [vline(10.0), vline(20.0)];
        let m = optimal_matching(&[], &b, p);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_b, vec![0, 1]);

        let m = optimal_matching(&[vline(10.0)], &[vline(11.0)], p);
        assert_eq!(m.pairs.len(), 1);
        assert!((m.pairs[0].similarity - 0.8).abs() < 1e-12);
    }

    #[test]
    fn matching_keeps_zero_pairs() {
        let p = SimilarityParams::evaluation();
        let m = optimal_matching(&[vline(10.0), vline(80.0)], &[vline(40.0), vline(60.0), vline(10.5)], p);
        assert_eq!(m.pairs.len(), 2);
        assert_eq!(m.unmatched_b.len(), 1);
        assert!((m.total_similarity() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn dice_examples() {
        let p = SimilarityParams::evaluation();
        let a = [vline(20.0), vline(70.0)];
        assert_eq!(dice_h(&a, &a, p), 1.0);
        assert_eq!(dice_h(&a, &[], p), 0.0);
        assert_eq!(dice_h(&[], &[], p), 1.0);
        let d = dice_h(&a, &[vline(20.0)], p);
        assert!((d - 2.0 / 3.0).abs() < 1e-12);
    }

    fn arb_line() -> impl Strategy<Value = LineSegment> {
        (0.0..=100.0f64, 0.0..=100.0f64, 0.0..=100.0f64, 0.0..=100.0f64)
            .prop_map(|(a, b, c, d)| LineSegment::from_coords(a, b, c, d))
    }

    proptest! {
        #[test]
        fn matching_shape(a in prop::collection::vec(arb_line(), 0..7),
                          b in prop::collection::vec(arb_line(), 0..7)) {
            let m = optimal_matching(&a, &b, SimilarityParams::in_game());
            prop_assert_eq!(m.pairs.len(), a.len().min(b.len()));
            prop_assert_eq!(m.pairs.len() + m.unmatched_a.len(), a.len());
            prop_assert_eq!(m.pairs.len() + m.unmatched_b.len(), b.len());
            let mut seen_b: Vec<usize> = m.pairs.iter().map(|p| p.b).chain(m.unmatched_b.iter().copied()).collect();
            seen_b.sort();
            seen_b.dedup();
            prop_assert_eq!(seen_b.len(), b.len());
        }
    }
}
