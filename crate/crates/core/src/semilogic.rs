//! Ground and pattern-level data model for dialogue states and transition
//! rules.
//!
//! Ground atoms come in two shapes: belief facts `slot(value)` and act items
//! `act(slot(value))`, `act(slot)` or `act()`. Patterns have the same shape
//! but their value position holds a [`Term`], which may be a variable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::ontology::Ontology;

/// A normalized attribute value: trimmed, lowercased, non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Value(String);

impl Value {
    pub fn new(text: impl AsRef<str>) -> Result<Self> {
        let norm = text.as_ref().trim().to_lowercase();
        if norm.is_empty() {
            return Err(Error::InvalidValue(text.as_ref().to_string()));
        }
        Ok(Value(norm))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Value {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Value::new(s)
    }
}

impl TryFrom<&str> for Value {
    type Error = Error;
    fn try_from(s: &str) -> Result<Self> {
        Value::new(s)
    }
}

impl From<Value> for String {
    fn from(v: Value) -> String {
        v.0
    }
}

/// Characters allowed in an unquoted word of the rule language.
pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '.'
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Value {
    /// Renders the value as rule-language source: bare when every character
    /// is a word character, double-quoted otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.chars().all(is_word_char) {
            return f.write_str(&self.0);
        }
        f.write_str("\"")?;
        for c in self.0.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\t' => f.write_str("\\t")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("\"")
    }
}

/// A belief fact `slot(value)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactItem {
    pub slot: String,
    pub value: Value,
}

impl FactItem {
    pub fn new(slot: &str, value: &str) -> Result<Self> {
        Ok(FactItem {
            slot: slot.trim().to_lowercase(),
            value: Value::new(value)?,
        })
    }
}

impl fmt::Display for FactItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.slot, self.value)
    }
}

/// A dialogue act, optionally carrying a slot and a value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawActItem")]
pub struct ActItem {
    pub act: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slot: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawActItem {
    act: String,
    #[serde(default)]
    slot: Option<String>,
    #[serde(default)]
    value: Option<Value>,
}

impl TryFrom<RawActItem> for ActItem {
    type Error = Error;
    fn try_from(raw: RawActItem) -> Result<Self> {
        if raw.value.is_some() && raw.slot.is_none() {
            return Err(Error::MalformedAct(format!(
                "act {:?} carries a value but no slot",
                raw.act
            )));
        }
        let act = raw.act.trim().to_lowercase();
        if act.is_empty() {
            return Err(Error::MalformedAct("empty act name".to_string()));
        }
        Ok(ActItem {
            act,
            slot: raw.slot.map(|s| s.trim().to_lowercase()),
            value: raw.value,
        })
    }
}

impl ActItem {
    /// `act()`
    pub fn bare(act: &str) -> Self {
        ActItem {
            act: act.trim().to_lowercase(),
            slot: None,
            value: None,
        }
    }

    /// `act(slot)`
    pub fn with_slot(act: &str, slot: &str) -> Self {
        ActItem {
            slot: Some(slot.trim().to_lowercase()),
            ..Self::bare(act)
        }
    }

    /// `act(slot(value))`
    pub fn with_value(act: &str, slot: &str, value: &str) -> Result<Self> {
        Ok(ActItem {
            value: Some(Value::new(value)?),
            ..Self::with_slot(act, slot)
        })
    }

    pub fn validate(&self, onto: &Ontology, at: impl Fn() -> Location) -> Result<()> {
        onto.check_act(&self.act, &at)?;
        if let Some(slot) = &self.slot {
            onto.check_act_slot(slot, &at)?;
        }
        Ok(())
    }
}

impl fmt::Display for ActItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.slot, &self.value) {
            (Some(slot), Some(value)) => write!(f, "{}({}({}))", self.act, slot, value),
            (Some(slot), None) => write!(f, "{}({})", self.act, slot),
            _ => write!(f, "{}()", self.act),
        }
    }
}

/// A belief state: at most one value per slot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefState(BTreeMap<String, Value>);

impl BeliefState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, slot: &str) -> Option<&Value> {
        self.0.get(slot)
    }

    pub fn insert(&mut self, slot: impl Into<String>, value: Value) -> Option<Value> {
        self.0.insert(slot.into(), value)
    }

    pub fn remove(&mut self, slot: &str) -> Option<Value> {
        self.0.remove(slot)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// The state as a set of ground belief facts.
    pub fn facts(&self) -> Vec<FactItem> {
        self.0
            .iter()
            .map(|(slot, value)| FactItem {
                slot: slot.clone(),
                value: value.clone(),
            })
            .collect()
    }

    pub fn validate(&self, onto: &Ontology, at: impl Fn() -> Location) -> Result<()> {
        for slot in self.0.keys() {
            onto.check_slot(slot, &at)?;
        }
        Ok(())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut b = BeliefState::new();
        for (slot, value) in pairs {
            b.insert(slot.trim().to_lowercase(), Value::new(value)?);
        }
        Ok(b)
    }
}

impl fmt::Display for BeliefState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, fact) in self.facts().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{fact}")?;
        }
        f.write_str("}")
    }
}

/// Writes `{a, b, c}` for any sequence of displayable items.
/// Renders items as `{a, b, c}`.
pub fn fmt_set<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = items.into_iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}

/// Applies ground belief facts: later facts win per slot, untouched slots
/// keep their prior value.
pub fn belief_apply(
    belief: &BeliefState,
    facts: &[FactItem],
    onto: &Ontology,
) -> Result<BeliefState> {
    let mut next = belief.clone();
    for fact in facts {
        onto.check_slot(&fact.slot, || Location::Unknown)?;
        next.insert(fact.slot.clone(), fact.value.clone());
    }
    Ok(next)
}

/// Variable bindings produced by matching.
pub type Substitution = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Constant(Value),
    Variable(String),
}

impl Term {
    pub fn var(name: &str) -> Result<Self> {
        if is_identifier(name) {
            Ok(Term::Variable(name.to_string()))
        } else {
            Err(Error::InvalidVariable(name.to_string()))
        }
    }

    pub fn constant(value: &str) -> Result<Self> {
        Ok(Term::Constant(Value::new(value)?))
    }

    fn resolve(&self, subst: &Substitution) -> Result<Value> {
        match self {
            Term::Constant(v) => Ok(v.clone()),
            Term::Variable(name) => subst
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnboundVariable(name.clone())),
        }
    }

    /// Unifies this term with a ground value, extending `subst`. Newly bound
    /// variable names are pushed onto `trail` so the caller can undo them.
    pub(crate) fn bind(
        &self,
        value: &Value,
        subst: &mut Substitution,
        trail: &mut Vec<String>,
    ) -> bool {
        match self {
            Term::Constant(c) => c == value,
            Term::Variable(name) => match subst.get(name) {
                Some(bound) => bound == value,
                None => {
                    subst.insert(name.clone(), value.clone());
                    trail.push(name.clone());
                    true
                }
            },
        }
    }

    fn render(&self, names: &dyn Fn(&str) -> String) -> String {
        match self {
            Term::Constant(v) => v.to_string(),
            Term::Variable(name) => format!("?{}", names(name)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|n| n.to_string()))
    }
}

/// Common surface of the two pattern shapes.
pub trait Pattern: Clone + fmt::Display {
    type Ground: Clone + Ord + fmt::Display;

    /// Replaces every variable through `subst`.
    fn substitute(&self, subst: &Substitution) -> Result<Self::Ground>;

    /// Unifies against a ground item, extending `subst` and recording new
    /// bindings in `trail`. On failure `subst` may hold partial bindings that
    /// the caller must roll back from the trail.
    fn bind(&self, item: &Self::Ground, subst: &mut Substitution, trail: &mut Vec<String>) -> bool;

    fn term(&self) -> Option<&Term>;

    fn variable(&self) -> Option<&str> {
        match self.term() {
            Some(Term::Variable(name)) => Some(name),
            _ => None,
        }
    }

    /// Source text with variables renamed through `names`.
    fn render_with(&self, names: &dyn Fn(&str) -> String) -> String;

    fn map_variables(&self, f: &dyn Fn(&str) -> String) -> Self;
}

/// Grounds `pattern` under `subst`.
pub fn substitute<P: Pattern>(pattern: &P, subst: &Substitution) -> Result<P::Ground> {
    pattern.substitute(subst)
}

/// `slot(term)`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactPattern {
    pub slot: String,
    pub term: Term,
}

impl FactPattern {
    pub fn new(slot: &str, term: Term) -> Self {
        FactPattern {
            slot: slot.trim().to_lowercase(),
            term,
        }
    }
}

impl Pattern for FactPattern {
    type Ground = FactItem;

    fn substitute(&self, subst: &Substitution) -> Result<FactItem> {
        Ok(FactItem {
            slot: self.slot.clone(),
            value: self.term.resolve(subst)?,
        })
    }

    fn bind(&self, item: &FactItem, subst: &mut Substitution, trail: &mut Vec<String>) -> bool {
        self.slot == item.slot && self.term.bind(&item.value, subst, trail)
    }

    fn term(&self) -> Option<&Term> {
        Some(&self.term)
    }

    fn render_with(&self, names: &dyn Fn(&str) -> String) -> String {
        format!("{}({})", self.slot, self.term.render(names))
    }

    fn map_variables(&self, f: &dyn Fn(&str) -> String) -> Self {
        FactPattern {
            slot: self.slot.clone(),
            term: map_term(&self.term, f),
        }
    }
}

impl fmt::Display for FactPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|n| n.to_string()))
    }
}

fn map_term(term: &Term, f: &dyn Fn(&str) -> String) -> Term {
    match term {
        Term::Variable(name) => Term::Variable(f(name)),
        c => c.clone(),
    }
}

/// `act(slot(term))`, `act(slot)` or `act()`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActPattern {
    pub act: String,
    pub slot: Option<String>,
    pub term: Option<Term>,
}

impl ActPattern {
    pub fn bare(act: &str) -> Self {
        ActPattern {
            act: act.trim().to_lowercase(),
            slot: None,
            term: None,
        }
    }

    pub fn with_slot(act: &str, slot: &str) -> Self {
        ActPattern {
            slot: Some(slot.trim().to_lowercase()),
            ..Self::bare(act)
        }
    }

    pub fn with_term(act: &str, slot: &str, term: Term) -> Self {
        ActPattern {
            term: Some(term),
            ..Self::with_slot(act, slot)
        }
    }
}

impl Pattern for ActPattern {
    type Ground = ActItem;

    fn substitute(&self, subst: &Substitution) -> Result<ActItem> {
        Ok(ActItem {
            act: self.act.clone(),
            slot: self.slot.clone(),
            value: self.term.as_ref().map(|t| t.resolve(subst)).transpose()?,
        })
    }

    fn bind(&self, item: &ActItem, subst: &mut Substitution, trail: &mut Vec<String>) -> bool {
        if self.act != item.act || self.slot != item.slot {
            return false;
        }
        match (&self.term, &item.value) {
            (None, None) => true,
            (Some(term), Some(value)) => term.bind(value, subst, trail),
            _ => false,
        }
    }

    fn term(&self) -> Option<&Term> {
        self.term.as_ref()
    }

    fn render_with(&self, names: &dyn Fn(&str) -> String) -> String {
        match (&self.slot, &self.term) {
            (Some(slot), Some(term)) => format!("{}({}({}))", self.act, slot, term.render(names)),
            (Some(slot), None) => format!("{}({})", self.act, slot),
            _ => format!("{}()", self.act),
        }
    }

    fn map_variables(&self, f: &dyn Fn(&str) -> String) -> Self {
        ActPattern {
            act: self.act.clone(),
            slot: self.slot.clone(),
            term: self.term.as_ref().map(|t| map_term(t, f)),
        }
    }
}

impl fmt::Display for ActPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|n| n.to_string()))
    }
}

/// Constraint on the number of database entities matching the belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DbPredicate {
    /// Inclusive on both ends.
    Between(u64, u64),
    Eq(u64),
    Any,
}

impl fmt::Display for DbPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DbPredicate::Between(lo, hi) => write!(f, "between({lo},{hi})"),
            DbPredicate::Eq(n) => write!(f, "eq({n})"),
            DbPredicate::Any => f.write_str("any"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Belief,
    Action,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Belief => "belief",
            RuleKind::Action => "action",
        })
    }
}

/// Precondition sections of a rule, in matching order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Section {
    User,
    Belief,
    PrevAction,
    Db,
}

impl Section {
    pub const ALL: [Section; 4] = [
        Section::User,
        Section::Belief,
        Section::PrevAction,
        Section::Db,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Section::User => "user",
            Section::Belief => "belief",
            Section::PrevAction => "prev_action",
            Section::Db => "db",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Effect {
    Belief(Vec<FactPattern>),
    Action(Vec<ActPattern>),
}

/// A precondition → effect rule. A section set to `None` is unconstrained;
/// `Some(vec![])` requires the corresponding state section to be empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransitionRule {
    pub id: String,
    pub pre_user: Option<Vec<ActPattern>>,
    pub pre_belief: Option<Vec<FactPattern>>,
    pub pre_prev_action: Option<Vec<ActPattern>>,
    pub pre_db: Option<DbPredicate>,
    pub effect: Effect,
    pub order_index: usize,
}

impl TransitionRule {
    pub fn kind(&self) -> RuleKind {
        match self.effect {
            Effect::Belief(_) => RuleKind::Belief,
            Effect::Action(_) => RuleKind::Action,
        }
    }

    /// Variables occurring in one precondition section.
    pub fn section_variables(&self, section: Section) -> BTreeSet<&str> {
        match section {
            Section::User => vars_of(self.pre_user.iter().flatten()),
            Section::Belief => vars_of(self.pre_belief.iter().flatten()),
            Section::PrevAction => vars_of(self.pre_prev_action.iter().flatten()),
            Section::Db => BTreeSet::new(),
        }
    }

    pub fn effect_variables(&self) -> BTreeSet<&str> {
        match &self.effect {
            Effect::Belief(facts) => vars_of(facts),
            Effect::Action(acts) => vars_of(acts),
        }
    }

    /// The first effect variable not bound by any of `sections`, if any.
    pub fn unbound_effect_variable(&self, sections: &[Section]) -> Option<&str> {
        let bound: BTreeSet<&str> = sections
            .iter()
            .flat_map(|s| self.section_variables(*s))
            .collect();
        self.effect_variables()
            .into_iter()
            .find(|v| !bound.contains(v))
    }

    /// Checks that every effect variable occurs in some precondition.
    pub fn check_range_restriction(&self) -> Result<()> {
        match self.unbound_effect_variable(&Section::ALL) {
            Some(v) => Err(Error::RangeRestriction {
                rule: self.id.clone(),
                variable: v.to_string(),
            }),
            None => Ok(()),
        }
    }

    /// Renames every variable through `f`.
    pub fn rename_variables(&self, f: &dyn Fn(&str) -> String) -> Self {
        fn map_all<P: Pattern>(
            items: &Option<Vec<P>>,
            f: &dyn Fn(&str) -> String,
        ) -> Option<Vec<P>> {
            items
                .as_ref()
                .map(|v| v.iter().map(|p| p.map_variables(f)).collect())
        }
        TransitionRule {
            id: self.id.clone(),
            pre_user: map_all(&self.pre_user, f),
            pre_belief: map_all(&self.pre_belief, f),
            pre_prev_action: map_all(&self.pre_prev_action, f),
            pre_db: self.pre_db,
            effect: match &self.effect {
                Effect::Belief(v) => Effect::Belief(v.iter().map(|p| p.map_variables(f)).collect()),
                Effect::Action(v) => Effect::Action(v.iter().map(|p| p.map_variables(f)).collect()),
            },
            order_index: self.order_index,
        }
    }
}

fn vars_of<'a, P: Pattern + 'a>(items: impl IntoIterator<Item = &'a P>) -> BTreeSet<&'a str> {
    items.into_iter().filter_map(|p| p.variable()).collect()
}

// Canonical form.
//
// Items are first ordered by their variable-blind shape (`inform(food(?))`),
// variables are renamed ?V1, ?V2, ... in order of first occurrence over that
// ordering, and each section's rendered items are sorted. Items sharing a
// shape can be permuted without changing the rule, so every permutation of
// such ties is tried and the smallest rendering wins.

const MAX_TIE_ORDERINGS: usize = 40_320;

enum Slot<'a> {
    Acts(Option<&'a [ActPattern]>),
    Facts(Option<&'a [FactPattern]>),
    Db(Option<DbPredicate>),
}

/// Renders an item given a variable-naming function.
type Renderer = Box<dyn Fn(&dyn Fn(&str) -> String) -> String>;

/// One section of the canonical form: keyword, items, db predicate.
type CanonSection<'a> = (&'a str, Option<Vec<CanonItem>>, Option<DbPredicate>);

struct CanonItem {
    shape: String,
    var: Option<String>,
    render: Renderer,
}

fn canon_items<P: Pattern + 'static>(items: &[P]) -> Vec<CanonItem> {
    let mut out: Vec<CanonItem> = items
        .iter()
        .map(|p| {
            let p = p.clone();
            CanonItem {
                shape: p.render_with(&|_| String::new()),
                var: p.variable().map(str::to_string),
                render: Box::new(move |names| p.render_with(names)),
            }
        })
        .collect();
    out.sort_by(|a, b| a.shape.cmp(&b.shape));
    out
}

/// Deterministic string identifying a rule up to variable renaming and item
/// order. Rule id and position are not part of it.
pub fn canonicalize_rule(rule: &TransitionRule) -> String {
    let sections = [
        ("user", Slot::Acts(rule.pre_user.as_deref())),
        ("belief", Slot::Facts(rule.pre_belief.as_deref())),
        ("prev_action", Slot::Acts(rule.pre_prev_action.as_deref())),
        ("db", Slot::Db(rule.pre_db)),
        (
            "=>",
            match &rule.effect {
                Effect::Belief(v) => Slot::Facts(Some(v)),
                Effect::Action(v) => Slot::Acts(Some(v)),
            },
        ),
    ];

    // Per section: None when omitted, otherwise shape-sorted items.
    let mut lists: Vec<CanonSection> = Vec::new();
    for (name, slot) in sections {
        match slot {
            Slot::Acts(items) => lists.push((name, items.map(canon_items), None)),
            Slot::Facts(items) => lists.push((name, items.map(canon_items), None)),
            Slot::Db(pred) => lists.push((name, None, pred)),
        }
    }

    // Tie groups: maximal runs of equal shape that contain a variable.
    let mut groups: Vec<(usize, usize, usize)> = Vec::new(); // (list, start, len)
    for (li, (_, items, _)) in lists.iter().enumerate() {
        let Some(items) = items else { continue };
        let mut start = 0;
        while start < items.len() {
            let mut end = start + 1;
            while end < items.len() && items[end].shape == items[start].shape {
                end += 1;
            }
            if end - start > 1 && items[start..end].iter().any(|i| i.var.is_some()) {
                groups.push((li, start, end - start));
            }
            start = end;
        }
    }

    let total: usize = groups
        .iter()
        .map(|&(_, _, n)| (1..=n).product::<usize>())
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);

    let render = |orders: &[Vec<usize>]| -> String {
        let mut order_for: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (g, &(li, start, _)) in groups.iter().enumerate() {
            for (k, &p) in orders[g].iter().enumerate() {
                order_for.insert((li, start + k), start + p);
            }
        }
        let perm = |li: usize, i: usize| order_for.get(&(li, i)).copied().unwrap_or(i);

        let mut names: BTreeMap<String, String> = BTreeMap::new();
        for (li, (_, items, _)) in lists.iter().enumerate() {
            if let Some(items) = items {
                for i in 0..items.len() {
                    if let Some(v) = &items[perm(li, i)].var {
                        let next = format!("V{}", names.len() + 1);
                        names.entry(v.clone()).or_insert(next);
                    }
                }
            }
        }
        let lookup = |v: &str| names.get(v).cloned().unwrap_or_else(|| v.to_string());

        let mut out = rule.kind().to_string();
        for (name, items, pred) in &lists {
            out.push('|');
            out.push_str(name);
            match (items, pred) {
                (Some(items), _) => {
                    let mut rendered: Vec<String> =
                        items.iter().map(|i| (i.render)(&lookup)).collect();
                    rendered.sort();
                    out.push('{');
                    out.push_str(&rendered.join(","));
                    out.push('}');
                }
                (None, Some(pred)) => out.push_str(&format!("{{{pred}}}")),
                (None, None) => out.push('*'),
            }
        }
        out
    };

    if groups.is_empty() || total > MAX_TIE_ORDERINGS {
        let identity: Vec<Vec<usize>> = groups.iter().map(|&(_, _, n)| (0..n).collect()).collect();
        return render(&identity);
    }

    let mut best: Option<String> = None;
    let mut orders: Vec<Vec<usize>> = groups.iter().map(|&(_, _, n)| (0..n).collect()).collect();
    loop {
        let candidate = render(&orders);
        if best.as_ref().is_none_or(|b| candidate < *b) {
            best = Some(candidate);
        }
        // Odometer over per-group permutations.
        let mut g = 0;
        loop {
            if g == orders.len() {
                return best.unwrap_or_default();
            }
            if next_permutation(&mut orders[g]) {
                break;
            }
            orders[g].sort_unstable();
            g += 1;
        }
    }
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}
