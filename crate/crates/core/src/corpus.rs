//! Annotated dialogue corpora, external prediction streams and seeded
//! subsampling.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::ontology::Ontology;
use crate::rng::{partial_shuffle, SplitMix64};
use crate::semilogic::{ActItem, BeliefState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DialogueTurn {
    pub turn: usize,
    pub user_acts: BTreeSet<ActItem>,
    pub gold_belief: BeliefState,
    pub gold_action: BTreeSet<ActItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dialogue {
    pub id: String,
    pub turns: Vec<DialogueTurn>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    pub domain: String,
    pub dialogues: Vec<Dialogue>,
}

impl Corpus {
    pub fn from_json(text: &str, onto: &Ontology) -> Result<Self> {
        let corpus: Corpus = serde_json::from_str(text)
            .map_err(|e| Error::schema(format!("corpus {}:{}", e.line(), e.column()), e))?;
        corpus.validate(onto)?;
        Ok(corpus)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serializes")
    }

    /// Checks ids, turn numbering and every act and slot against `onto`.
    pub fn validate(&self, onto: &Ontology) -> Result<()> {
        let mut ids = BTreeSet::new();
        for d in &self.dialogues {
            if !ids.insert(d.id.as_str()) {
                return Err(Error::DuplicateDialogueId(d.id.clone()));
            }
            if d.turns.is_empty() {
                return Err(Error::schema(
                    format!("dialogue {}", d.id),
                    "dialogue has no turns",
                ));
            }
            for (i, t) in d.turns.iter().enumerate() {
                let here = format!("dialogue {} / turn {i}", d.id);
                if t.turn != i {
                    return Err(Error::schema(
                        here,
                        format!("turn index {} out of sequence (expected {i})", t.turn),
                    ));
                }
                for (k, a) in t.user_acts.iter().enumerate() {
                    a.validate(onto, || {
                        Location::Record(format!("{here} / user_acts[{k}]"))
                    })?;
                }
                for (k, a) in t.gold_action.iter().enumerate() {
                    a.validate(onto, || {
                        Location::Record(format!("{here} / gold_action[{k}]"))
                    })?;
                }
                t.gold_belief
                    .validate(onto, || Location::Record(format!("{here} / gold_belief")))?;
            }
        }
        Ok(())
    }

    pub fn turn_count(&self) -> usize {
        self.dialogues.iter().map(|d| d.turns.len()).sum()
    }

    pub fn get(&self, id: &str) -> Option<&Dialogue> {
        self.dialogues.iter().find(|d| d.id == id)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Schema { location, message } => Error::Schema {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    }
}

pub fn load_corpus(path: impl AsRef<Path>, onto: &Ontology) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Corpus::from_json(&text, onto).map_err(|e| with_path(path, e))
}

/// Draws `n` dialogues: ids sorted, partial Fisher–Yates under SplitMix64
/// seeded with `seed`, first `n` kept, result sorted by id.
pub fn sample_corpus(corpus: &Corpus, n: usize, seed: u64) -> Result<Corpus> {
    let size = corpus.dialogues.len();
    if n > size {
        return Err(Error::SampleTooLarge { n, size });
    }
    let mut pool: Vec<&Dialogue> = corpus.dialogues.iter().collect();
    pool.sort_by(|a, b| a.id.cmp(&b.id));
    partial_shuffle(&mut pool, n, &mut SplitMix64::new(seed));
    let mut chosen: Vec<Dialogue> = pool[..n].iter().map(|d| (*d).clone()).collect();
    chosen.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Corpus {
        domain: corpus.domain.clone(),
        dialogues: chosen,
    })
}

/// One external tracker output for one turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub dialogue_id: String,
    pub turn: usize,
    pub belief: BeliefState,
    pub action: BTreeSet<ActItem>,
}

pub type Predictions = BTreeMap<(String, usize), PredictionRecord>;

/// Parses a JSON-lines prediction stream. Blank lines are skipped.
pub fn parse_predictions(text: &str, onto: &Ontology) -> Result<Predictions> {
    let mut out = Predictions::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let here = format!("line {}", n + 1);
        let rec: PredictionRecord =
            serde_json::from_str(line).map_err(|e| Error::schema(&here, e))?;
        for (k, a) in rec.action.iter().enumerate() {
            a.validate(onto, || Location::Record(format!("{here} / action[{k}]")))?;
        }
        rec.belief
            .validate(onto, || Location::Record(format!("{here} / belief")))?;
        let key = (rec.dialogue_id.clone(), rec.turn);
        if out.contains_key(&key) {
            return Err(Error::DuplicatePrediction {
                dialogue: key.0,
                turn: key.1,
            });
        }
        out.insert(key, rec);
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>, onto: &Ontology) -> Result<Predictions> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text, onto).map_err(|e| with_path(path, e))
}

/// One JSON object per line, ordered by (dialogue, turn).
pub fn predictions_to_jsonl(preds: &Predictions) -> String {
    let mut out = String::new();
    for rec in preds.values() {
        out.push_str(&serde_json::to_string(rec).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

/// Predictions that copy the gold annotations of every turn.
pub fn gold_predictions(corpus: &Corpus) -> Predictions {
    corpus
        .dialogues
        .iter()
        .flat_map(|d| {
            d.turns.iter().map(move |t| {
                (
                    (d.id.clone(), t.turn),
                    PredictionRecord {
                        dialogue_id: d.id.clone(),
                        turn: t.turn,
                        belief: t.gold_belief.clone(),
                        action: t.gold_action.clone(),
                    },
                )
            })
        })
        .collect()
}
