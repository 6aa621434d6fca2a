//! The textual rule language.
//!
//! ```text
//! # R1: fill food and area after the system asked for food
//! rule r1: belief {
//!   user { inform(food(?X)) }
//!   belief { area(?Y) }
//!   prev_action { request(food) }
//!   => { area(?Y), food(?X) }
//! }
//! ```
//!
//! Sections may be omitted (unconstrained) or given explicitly empty
//! (`user { }`, the state section must be empty). Act and slot names are
//! case-insensitive and normalized to lowercase; values containing anything
//! other than letters, digits, `_`, `-` or `.` must be double-quoted.

mod lexer;
mod parser;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::semilogic::{Effect, Pattern, RuleKind, TransitionRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

/// Rules of one source file, split by kind, each list in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub belief_rules: Vec<TransitionRule>,
    pub action_rules: Vec<TransitionRule>,
    pub source_name: String,
}

impl RuleSet {
    pub fn parse(source: &str, onto: &Ontology) -> Result<Self> {
        parse_rules(source, onto)
    }

    pub fn load(path: impl AsRef<Path>, onto: &Ontology) -> Result<(Self, Vec<ParseDiagnostic>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (mut rules, warnings) = parse_rules_with_warnings(&text, onto)?;
        rules.source_name = path.display().to_string();
        Ok((rules, warnings))
    }

    pub fn rules(&self, kind: RuleKind) -> &[TransitionRule] {
        match kind {
            RuleKind::Belief => &self.belief_rules,
            RuleKind::Action => &self.action_rules,
        }
    }

    pub fn len(&self) -> usize {
        self.belief_rules.len() + self.action_rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All rules in source order.
    pub fn iter(&self) -> impl Iterator<Item = &TransitionRule> {
        let mut all: Vec<&TransitionRule> =
            self.belief_rules.iter().chain(&self.action_rules).collect();
        all.sort_by_key(|r| r.order_index);
        all.into_iter()
    }

    pub fn to_source(&self) -> String {
        self.iter()
            .map(serialize_rule)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn parse_rules(source: &str, onto: &Ontology) -> Result<RuleSet> {
    parse_rules_with_warnings(source, onto).map(|(rules, _)| rules)
}

/// Like [`parse_rules`], also returning non-fatal diagnostics.
pub fn parse_rules_with_warnings(
    source: &str,
    onto: &Ontology,
) -> Result<(RuleSet, Vec<ParseDiagnostic>)> {
    let toks = lexer::tokenize(source).map_err(Error::Syntax)?;
    let mut p = parser::Parser::new(toks, onto);
    let mut set = RuleSet {
        source_name: "<input>".to_string(),
        ..RuleSet::default()
    };
    let mut ids: BTreeMap<String, ()> = BTreeMap::new();
    let mut index = 0;
    while !p.at_eof() {
        let (rule, id_tok) = p.rule(index)?;
        if ids.insert(rule.id.clone(), ()).is_some() {
            return Err(Error::DuplicateRuleId {
                id: rule.id,
                line: id_tok.line,
                column: id_tok.column,
            });
        }
        rule.check_range_restriction()?;
        match rule.kind() {
            RuleKind::Belief => set.belief_rules.push(rule),
            RuleKind::Action => set.action_rules.push(rule),
        }
        index += 1;
    }
    Ok((set, p.warnings))
}

fn join<P: Pattern>(items: &[P]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders a rule as source text that parses back to an equivalent rule.
pub fn serialize_rule(rule: &TransitionRule) -> String {
    let mut out = format!("rule {}: {} {{\n", rule.id, rule.kind());
    let mut section = |name: &str, body: Option<String>| {
        if let Some(body) = body {
            if body.is_empty() {
                out.push_str(&format!("  {name} {{ }}\n"));
            } else {
                out.push_str(&format!("  {name} {{ {body} }}\n"));
            }
        }
    };
    section("user", rule.pre_user.as_deref().map(join));
    section("belief", rule.pre_belief.as_deref().map(join));
    section("prev_action", rule.pre_prev_action.as_deref().map(join));
    section("db", rule.pre_db.map(|p| p.to_string()));
    let effect = match &rule.effect {
        Effect::Belief(v) => join(v),
        Effect::Action(v) => join(v),
    };
    if effect.is_empty() {
        out.push_str("  => { }\n}\n");
    } else {
        out.push_str(&format!("  => {{ {effect} }}\n}}\n"));
    }
    out
}
