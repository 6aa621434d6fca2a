//! Slot ontology and dialogue-act catalogue.
//!
//! Every act, slot and belief fact that enters the system is checked against
//! an [`Ontology`]. The built-in default is the restaurant domain.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};

const RESTAURANT_SLOTS: &[&str] = &[
    "food",
    "area",
    "pricerange",
    "name",
    "day",
    "time",
    "people",
];
const RESTAURANT_DB_SLOTS: &[&str] = &["food", "area", "pricerange", "name"];
const RESTAURANT_ACTS: &[&str] = &[
    "inform",
    "request",
    "nooffer",
    "recommend",
    "select",
    "offerbook",
    "offerbooked",
    "nobook",
    "bye",
    "greet",
    "reqmore",
    "welcome",
    "getrecommend",
    "acceptance",
    "rejection",
    "alternatives",
];
const RESTAURANT_REQUESTABLE: &[&str] = &["address", "phone", "postcode", "price", "reference"];

/// Domain configuration, loaded from JSON.
///
/// `slots` are the belief slots (the `n` of slot accuracy). `requestable`
/// lists extra attribute names that may appear inside act items only, such
/// as `request(address)`; they never enter a belief state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    pub domain: String,
    pub slots: Vec<String>,
    pub db_slots: Vec<String>,
    pub acts: Vec<String>,
    #[serde(default = "default_requestable")]
    pub requestable: Vec<String>,
}

fn default_requestable() -> Vec<String> {
    RESTAURANT_REQUESTABLE
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn owned(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

impl Default for Ontology {
    fn default() -> Self {
        Self::restaurant()
    }
}

impl Ontology {
    pub fn restaurant() -> Self {
        Ontology {
            domain: "restaurant".to_string(),
            slots: owned(RESTAURANT_SLOTS),
            db_slots: owned(RESTAURANT_DB_SLOTS),
            acts: owned(RESTAURANT_ACTS),
            requestable: owned(RESTAURANT_REQUESTABLE),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut onto: Ontology = serde_json::from_str(text)
            .map_err(|e| Error::schema(format!("config {}:{}", e.line(), e.column()), e))?;
        for list in [
            &mut onto.slots,
            &mut onto.db_slots,
            &mut onto.acts,
            &mut onto.requestable,
        ] {
            for name in list.iter_mut() {
                *name = name.trim().to_lowercase();
            }
        }
        onto.check()?;
        Ok(onto)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::EmptyOntology);
        }
        let slots: BTreeSet<_> = self.slots.iter().collect();
        if slots.len() != self.slots.len() {
            return Err(Error::schema("config.slots", "duplicate slot name"));
        }
        for s in &self.db_slots {
            if !slots.contains(s) {
                return Err(Error::schema(
                    "config.db_slots",
                    format!("db slot {s:?} is not a belief slot"),
                ));
            }
        }
        if self.acts.is_empty() {
            return Err(Error::schema("config.acts", "act catalogue is empty"));
        }
        Ok(())
    }

    pub fn is_slot(&self, name: &str) -> bool {
        self.slots.iter().any(|s| s == name)
    }

    pub fn is_act(&self, name: &str) -> bool {
        self.acts.iter().any(|a| a == name)
    }

    /// Whether `name` may appear as the slot of an act item.
    pub fn is_act_slot(&self, name: &str) -> bool {
        self.is_slot(name) || self.requestable.iter().any(|r| r == name)
    }

    pub fn is_db_slot(&self, name: &str) -> bool {
        self.db_slots.iter().any(|s| s == name)
    }

    pub fn check_slot(&self, name: &str, at: impl FnOnce() -> Location) -> Result<()> {
        if self.is_slot(name) {
            Ok(())
        } else {
            Err(Error::UnknownSlot {
                slot: name.to_string(),
                at: at(),
            })
        }
    }

    pub fn check_act_slot(&self, name: &str, at: impl FnOnce() -> Location) -> Result<()> {
        if self.is_act_slot(name) {
            Ok(())
        } else {
            Err(Error::UnknownSlot {
                slot: name.to_string(),
                at: at(),
            })
        }
    }

    pub fn check_act(&self, name: &str, at: impl FnOnce() -> Location) -> Result<()> {
        if self.is_act(name) {
            Ok(())
        } else {
            Err(Error::UnknownAct {
                act: name.to_string(),
                at: at(),
            })
        }
    }
}
