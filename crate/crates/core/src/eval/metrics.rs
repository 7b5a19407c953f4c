use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// How per-buffer outcomes combine into one verdict per sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// More than half of the buffers are correct.
    #[default]
    Majority,
    All,
    Any,
}

impl Aggregation {
    pub fn verdict(self, correct: usize, total: usize) -> bool {
        match self {
            Aggregation::Majority => 2 * correct > total,
            Aggregation::All => total > 0 && correct == total,
            Aggregation::Any => correct > 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    /// Some ground-truth object produced no classification spike.
    MissedClassification,
    /// Every object was found but the instances were merged or split wrongly.
    WrongGrouping,
    /// An object was reported away from every ground-truth object.
    Spurious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BufferOutcome {
    pub sequence: usize,
    pub buffer: usize,
    pub expected: usize,
    pub reported: usize,
    pub correct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOutcome {
    pub seed: u64,
    /// Buffer just before the two objects start to overlap, and its id.
    pub before: Option<(usize, u64)>,
    /// First buffer after they separate, and the id found there.
    pub after: Option<(usize, u64)>,
    pub recovered: bool,
    /// Most objects reported in any fully overlapped buffer.
    pub max_objects_while_hidden: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    pub k: usize,
    pub rate: f64,
}

/// Percentages are in [0, 100]; sections that were not run are absent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_input_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_sequence_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery_rate: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub self_match: Vec<TopK>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub missed_classification: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wrong_grouping: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spurious: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub buffers: Vec<BufferOutcome>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub recoveries: Vec<RecoveryOutcome>,
}

pub(crate) fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl MetricsReport {
    /// Detection summary from per-buffer outcomes.
    pub fn from_detection(scenario: String, buffers: Vec<BufferOutcome>, aggregation: Aggregation) -> Self {
        let correct = buffers.iter().filter(|b| b.correct).count();
        let sequences = buffers.iter().map(|b| b.sequence).max().map_or(0, |m| m + 1);
        let good = (0..sequences)
            .filter(|&s| {
                let seq: Vec<_> = buffers.iter().filter(|b| b.sequence == s).collect();
                aggregation.verdict(seq.iter().filter(|b| b.correct).count(), seq.len())
            })
            .count();
        let count = |f: Failure| buffers.iter().filter(|b| b.failure == Some(f)).count();
        Self {
            scenario,
            per_input_accuracy: Some(percent(correct, buffers.len())),
            per_sequence_accuracy: Some(percent(good, sequences)),
            missed_classification: Some(count(Failure::MissedClassification)),
            wrong_grouping: Some(count(Failure::WrongGrouping)),
            spurious: Some(count(Failure::Spurious)),
            buffers,
            ..Self::default()
        }
    }

    /// Merge the sections of several reports under one name.
    pub fn combine(scenario: String, parts: Vec<MetricsReport>) -> Self {
        let mut out = Self {
            scenario,
            ..Self::default()
        };
        for p in parts {
            out.per_input_accuracy = out.per_input_accuracy.or(p.per_input_accuracy);
            out.per_sequence_accuracy = out.per_sequence_accuracy.or(p.per_sequence_accuracy);
            out.recovery_rate = out.recovery_rate.or(p.recovery_rate);
            out.missed_classification = out.missed_classification.or(p.missed_classification);
            out.wrong_grouping = out.wrong_grouping.or(p.wrong_grouping);
            out.spurious = out.spurious.or(p.spurious);
            out.self_match.extend(p.self_match);
            out.buffers.extend(p.buffers);
            out.recoveries.extend(p.recoveries);
        }
        out
    }

    /// Plain-text table with one section per experiment family.
    pub fn table(reports: &[MetricsReport]) -> String {
        let mut s = String::new();
        let row = |s: &mut String, name: &str, v: String| {
            let _ = writeln!(s, "  {name:<40}{v:>10}");
        };
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.2}"));
        let sections: [(&str, fn(&str) -> bool); 4] = [
            ("Multi-stream detection", |n| n.starts_with("multistream")),
            ("Occlusion", |n| n.starts_with("occlusion")),
            ("Occlusion recovery", |n| n.starts_with("recovery")),
            ("Self-match", |n| n.starts_with("self_match")),
        ];
        for (title, member) in sections {
            let rs: Vec<_> = reports.iter().filter(|r| member(&r.scenario)).collect();
            if rs.is_empty() {
                continue;
            }
            let _ = writeln!(s, "{title}");
            for r in rs {
                if r.per_input_accuracy.is_some() {
                    row(
                        &mut s,
                        &format!("{} per input (%)", r.scenario),
                        pct(r.per_input_accuracy),
                    );
                    row(
                        &mut s,
                        &format!("{} per sequence (%)", r.scenario),
                        pct(r.per_sequence_accuracy),
                    );
                }
                if let (Some(m), Some(w), Some(f)) = (r.missed_classification, r.wrong_grouping, r.spurious) {
                    row(
                        &mut s,
                        &format!("{} missed/grouping/spurious", r.scenario),
                        format!("{m}/{w}/{f}"),
                    );
                }
                if r.recovery_rate.is_some() {
                    row(&mut s, &format!("{} rate (%)", r.scenario), pct(r.recovery_rate));
                }
                for t in &r.self_match {
                    row(
                        &mut s,
                        &format!("{} top {} (%)", r.scenario, t.k),
                        format!("{:.2}", t.rate),
                    );
                }
            }
        }
        s
    }
}
