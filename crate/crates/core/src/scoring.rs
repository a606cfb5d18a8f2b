//! Qscores: trailing averages of each annotator's training-case Dice-H,
//! and top-k opinion selection on test cases.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::consensus::Opinion;
use crate::error::{Error, Result};
use crate::metric::SimilarityParams;

/// How many of the most recent training scores enter a Qscore.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    All,
    Last(usize),
}

impl Serialize for Window {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Window::All => s.serialize_str("all"),
            Window::Last(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Count(u64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) if t == "all" => Ok(Window::All),
            Raw::Count(n) if n > 0 => Ok(Window::Last(n as usize)),
            _ => Err(serde::de::Error::custom("window must be \"all\" or a positive count")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Qscore {
    Eligible(f64),
    Ineligible,
}

impl Qscore {
    pub fn value(self) -> Option<f64> {
        match self {
            Qscore::Eligible(v) => Some(v),
            Qscore::Ineligible => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub timestamp: i64,
    pub score: f64,
}

/// Per-annotator, time-ordered training scores.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QscoreLedger {
    window: Window,
    entries: BTreeMap<String, Vec<LedgerEntry>>,
}

impl QscoreLedger {
    pub fn new(window: Window) -> Self {
        QscoreLedger {
            window,
            entries: BTreeMap::new(),
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Appends a training score. Timestamps must strictly increase per annotator.
    pub fn record_training_score(&mut self, annotator_id: &str, timestamp: i64, score: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid(format!("training score {score} outside [0, 1]")));
        }
        let list = self.entries.entry(annotator_id.to_string()).or_default();
        if let Some(last) = list.last() {
            if timestamp <= last.timestamp {
                return Err(Error::NonMonotonicTimestamp {
                    annotator: annotator_id.to_string(),
                    timestamp,
                    last: last.timestamp,
                });
            }
        }
        list.push(LedgerEntry { timestamp, score });
        Ok(())
    }

    pub fn entries(&self, annotator_id: &str) -> &[LedgerEntry] {
        self.entries.get(annotator_id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn annotators(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Mean of the last `window` scores strictly before `at_time`;
    /// ineligible with fewer than `min_entries` such scores.
    pub fn qscore(&self, annotator_id: &str, at_time: i64, min_entries: usize) -> Qscore {
        let list = self.entries(annotator_id);
        let prior = list.partition_point(|e| e.timestamp < at_time);
        if prior == 0 || prior < min_entries {
            return Qscore::Ineligible;
        }
        let start = match self.window {
            Window::All => 0,
            Window::Last(n) => prior.saturating_sub(n),
        };
        let used = &list[start..prior];
        Qscore::Eligible(used.iter().map(|e| e.score).sum::<f64>() / used.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionPolicy {
    pub k: usize,
    pub window: Window,
    pub min_training_opinions: usize,
    pub qscore_cutoff: SimilarityParams,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        SelectionPolicy {
            k: 5,
            window: Window::All,
            min_training_opinions: 10,
            qscore_cutoff: SimilarityParams::in_game(),
        }
    }
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("selection k must be >= 1"));
        }
        Ok(())
    }
}

/// Most recent opinion per annotator; equal timestamps keep the later-listed one.
pub fn most_recent_per_annotator<'a, I>(opinions: I) -> Vec<&'a Opinion>
where
    I: IntoIterator<Item = &'a Opinion>,
{
    let mut latest: BTreeMap<&str, &Opinion> = BTreeMap::new();
    for o in opinions {
        latest
            .entry(o.annotator_id.as_str())
            .and_modify(|cur| {
                if o.timestamp >= cur.timestamp {
                    *cur = o;
                }
            })
            .or_insert(o);
    }
    latest.into_values().collect()
}

/// The top-`k` opinions on one test case by Qscore at submission time.
///
/// Ranking ties go to the later submission, then the smaller annotator id.
pub fn select_top_k(opinions_on_case: &[Opinion], ledger: &QscoreLedger, policy: &SelectionPolicy) -> Vec<Opinion> {
    let mut ranked: Vec<(f64, &Opinion)> = most_recent_per_annotator(opinions_on_case)
        .into_iter()
        .filter_map(|o| {
            ledger
                .qscore(&o.annotator_id, o.timestamp, policy.min_training_opinions)
                .value()
                .map(|q| (q, o))
        })
        .collect();
    ranked.sort_by(|(qa, a), (qb, b)| {
        qb.total_cmp(qa)
            .then_with(|| b.timestamp.cmp(&a.timestamp))
            .then_with(|| a.annotator_id.cmp(&b.annotator_id))
    });
    ranked.truncate(policy.k);
    ranked.into_iter().map(|(_, o)| o.clone()).collect()
}
