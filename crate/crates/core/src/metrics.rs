//! Dialogue-state metrics: Slot Accuracy, Joint Goal, micro Slot F1 and
//! micro Action F1, plus rule-set agreement between designers.
//!
//! An absent slot is read as the value `none` on both sides, so every turn
//! is scored over the full ontology slot list.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::semilogic::{canonicalize_rule, ActItem, BeliefState, TransitionRule};
use crate::tracker::{ActionSource, BeliefSource, TrackerConfig};

/// Number of ontology slots on which `pred` and `gold` agree.
fn slots_correct(pred: &BeliefState, gold: &BeliefState, onto: &Ontology) -> usize {
    onto.slots
        .iter()
        .filter(|s| pred.get(s) == gold.get(s))
        .count()
}

/// Fraction of ontology slots whose predicted value equals the gold value.
pub fn slot_accuracy(pred: &BeliefState, gold: &BeliefState, onto: &Ontology) -> Result<f64> {
    if onto.slots.is_empty() {
        return Err(Error::EmptyOntology);
    }
    Ok(slots_correct(pred, gold, onto) as f64 / onto.slots.len() as f64)
}

/// Fraction of turns whose predicted belief is correct on every slot.
pub fn joint_goal(turns: &[(BeliefState, BeliefState)], onto: &Ontology) -> Result<f64> {
    if turns.is_empty() {
        return Err(Error::NoTurns);
    }
    if onto.slots.is_empty() {
        return Err(Error::EmptyOntology);
    }
    let hits = turns
        .iter()
        .filter(|(pred, gold)| slots_correct(pred, gold, onto) == onto.slots.len())
        .count();
    Ok(hits as f64 / turns.len() as f64)
}

/// True positive, false positive and false negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prf {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Prf {
    pub fn count<T: Ord>(pred: &BTreeSet<T>, gold: &BTreeSet<T>) -> Self {
        let tp = pred.intersection(gold).count() as u64;
        Prf {
            tp,
            fp: pred.len() as u64 - tp,
            fn_: gold.len() as u64 - tp,
        }
    }

    pub fn merge(self, other: Prf) -> Prf {
        Prf {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }

    /// 1.0 when there was nothing to predict and nothing was predicted,
    /// 0.0 when nothing predicted was right.
    pub fn f1(&self) -> f64 {
        if self.tp == 0 {
            return if self.fp == 0 && self.fn_ == 0 {
                1.0
            } else {
                0.0
            };
        }
        let tp = self.tp as f64;
        // 2PR/(P+R) simplifies to 2tp / (2tp + fp + fn).
        2.0 * tp / (2.0 * tp + self.fp as f64 + self.fn_ as f64)
    }
}

fn belief_pairs(b: &BeliefState) -> BTreeSet<(String, String)> {
    b.iter()
        .map(|(s, v)| (s.to_string(), v.as_str().to_string()))
        .collect()
}

/// Micro-averaged F1 over (slot, value) pairs of all turns.
pub fn slot_f1(turns: &[(BeliefState, BeliefState)]) -> Result<f64> {
    if turns.is_empty() {
        return Err(Error::NoTurns);
    }
    let total = turns
        .iter()
        .map(|(pred, gold)| Prf::count(&belief_pairs(pred), &belief_pairs(gold)))
        .fold(Prf::default(), Prf::merge);
    Ok(total.f1())
}

/// Micro-averaged F1 over full (act, slot, value) items of all turns.
pub fn action_f1(turns: &[(BTreeSet<ActItem>, BTreeSet<ActItem>)]) -> Result<f64> {
    if turns.is_empty() {
        return Err(Error::NoTurns);
    }
    let total = turns
        .iter()
        .map(|(pred, gold)| Prf::count(pred, gold))
        .fold(Prf::default(), Prf::merge);
    Ok(total.f1())
}

/// Mergeable running totals for all four metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MetricCounts {
    pub turns: u64,
    pub slot_hits: u64,
    pub slot_total: u64,
    pub joint_hits: u64,
    pub slot: Prf,
    pub action: Prf,
}

/// Per-turn comparison against gold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurnScore {
    pub slots_correct: usize,
    pub joint: bool,
    pub slot: Prf,
    pub action: Prf,
}

impl MetricCounts {
    pub fn score_turn(
        pred_belief: &BeliefState,
        gold_belief: &BeliefState,
        pred_action: &BTreeSet<ActItem>,
        gold_action: &BTreeSet<ActItem>,
        onto: &Ontology,
    ) -> TurnScore {
        let correct = slots_correct(pred_belief, gold_belief, onto);
        TurnScore {
            slots_correct: correct,
            joint: correct == onto.slots.len(),
            slot: Prf::count(&belief_pairs(pred_belief), &belief_pairs(gold_belief)),
            action: Prf::count(pred_action, gold_action),
        }
    }

    pub fn add(&mut self, score: &TurnScore, slot_count: usize) {
        self.turns += 1;
        self.slot_hits += score.slots_correct as u64;
        self.slot_total += slot_count as u64;
        self.joint_hits += u64::from(score.joint);
        self.slot = self.slot.merge(score.slot);
        self.action = self.action.merge(score.action);
    }

    pub fn merge(self, o: MetricCounts) -> MetricCounts {
        MetricCounts {
            turns: self.turns + o.turns,
            slot_hits: self.slot_hits + o.slot_hits,
            slot_total: self.slot_total + o.slot_total,
            joint_hits: self.joint_hits + o.joint_hits,
            slot: self.slot.merge(o.slot),
            action: self.action.merge(o.action),
        }
    }

    pub fn slot_accuracy(&self) -> Result<f64> {
        if self.turns == 0 {
            return Err(Error::NoTurns);
        }
        Ok(self.slot_hits as f64 / self.slot_total as f64)
    }

    pub fn joint_goal(&self) -> Result<f64> {
        if self.turns == 0 {
            return Err(Error::NoTurns);
        }
        Ok(self.joint_hits as f64 / self.turns as f64)
    }
}

/// The four reported metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ActionF1,
    JointGoal,
    SlotAcc,
    SlotF1,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::ActionF1,
        Metric::JointGoal,
        Metric::SlotAcc,
        Metric::SlotF1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ActionF1 => "action_f1",
            Metric::JointGoal => "joint_goal",
            Metric::SlotAcc => "slot_acc",
            Metric::SlotF1 => "slot_f1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown metric {s:?} (expected action_f1, joint_goal, slot_acc or slot_f1)"
                )
            })
    }
}

/// Per-turn provenance stored in a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnDetail {
    pub dialogue_id: String,
    pub turn: usize,
    pub belief_source: BeliefSource,
    pub action_source: ActionSource,
    pub fired_rules: Vec<String>,
    pub joint_correct: bool,
    pub slots_correct: usize,
}

/// Metric bundle of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<TrackerConfig>,
    #[serde(serialize_with = "six_places")]
    pub action_f1: f64,
    #[serde(serialize_with = "six_places")]
    pub joint_goal: f64,
    #[serde(serialize_with = "six_places")]
    pub slot_accuracy: f64,
    #[serde(serialize_with = "six_places")]
    pub slot_f1: f64,
    pub turn_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turns: Option<Vec<TurnDetail>>,
}

fn six_places<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    let raw = serde_json::value::RawValue::from_string(format!("{x:.6}"))
        .map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

impl EvalReport {
    pub fn from_counts(label: impl Into<String>, counts: &MetricCounts) -> Result<Self> {
        Ok(EvalReport {
            label: label.into(),
            seed: None,
            config: None,
            action_f1: counts.action.f1(),
            joint_goal: counts.joint_goal()?,
            slot_accuracy: counts.slot_accuracy()?,
            slot_f1: counts.slot.f1(),
            turn_count: counts.turns,
            turns: None,
        })
    }

    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::ActionF1 => self.action_f1,
            Metric::JointGoal => self.joint_goal,
            Metric::SlotAcc => self.slot_accuracy,
            Metric::SlotF1 => self.slot_f1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::schema(format!("report {}:{}", e.line(), e.column()), e))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Schema { location, message } => Error::Schema {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }
}

/// Jaccard overlap of two rule lists of the same kind, comparing rules by
/// canonical form. Two empty lists agree fully.
pub fn agr(a: &[TransitionRule], b: &[TransitionRule]) -> f64 {
    let ca: BTreeSet<String> = a.iter().map(canonicalize_rule).collect();
    let cb: BTreeSet<String> = b.iter().map(canonicalize_rule).collect();
    let union = ca.union(&cb).count();
    if union == 0 {
        return 1.0;
    }
    ca.intersection(&cb).count() as f64 / union as f64
}
