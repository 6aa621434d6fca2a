//! Unification of rule preconditions against one turn's state.
//!
//! Search order is pinned: sections user → belief → prev_action, patterns in
//! declaration order, candidate items in ascending order of their source
//! rendering, first solution wins. Each pattern of a section must take a
//! distinct item of that section; variables are shared across sections.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsl::RuleSet;
use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::semilogic::{
    fmt_set, ActItem, BeliefState, DbPredicate, Effect, FactItem, Pattern, RuleKind, Section,
    Substitution, TransitionRule, Value,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApplyMode {
    /// Every precondition section is checked.
    #[default]
    Full,
    /// Belief rules ignore `prev_action`; action rules ignore `belief`.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// Every pattern equals a distinct item; extra items are allowed.
    #[default]
    Subset,
    /// As `Subset`, and the section must have exactly as many items as patterns.
    ExactSet,
}

/// Precondition sections consulted for a rule kind under an apply mode.
pub fn active_sections(kind: RuleKind, mode: ApplyMode) -> &'static [Section] {
    match (kind, mode) {
        (_, ApplyMode::Full) => &[
            Section::User,
            Section::Belief,
            Section::PrevAction,
            Section::Db,
        ],
        (RuleKind::Belief, ApplyMode::Free) => &[Section::User, Section::Belief, Section::Db],
        (RuleKind::Action, ApplyMode::Free) => &[Section::User, Section::PrevAction, Section::Db],
    }
}

/// One turn's matchable state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchContext {
    /// U_t
    pub user: BTreeSet<ActItem>,
    /// B_{t-1} for belief rules, B_t for action rules.
    pub belief: BeliefState,
    /// A_{t-1}
    pub prev_action: BTreeSet<ActItem>,
    /// DB_t
    pub db_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroundEffect {
    Belief(Vec<FactItem>),
    Action(Vec<ActItem>),
}

impl std::fmt::Display for GroundEffect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroundEffect::Belief(facts) => f.write_str(&fmt_set(facts)),
            GroundEffect::Action(acts) => f.write_str(&fmt_set(acts)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FireResult {
    pub rule_id: String,
    pub substitution: Substitution,
    pub effect: GroundEffect,
}

/// One section of a matching problem, erased over the pattern type.
trait SectionProblem {
    fn pattern_count(&self) -> usize;
    fn item_count(&self) -> usize;
    fn bind(
        &self,
        pattern: usize,
        item: usize,
        subst: &mut Substitution,
        trail: &mut Vec<String>,
    ) -> bool;
}

struct Problem<'a, P: Pattern> {
    patterns: &'a [P],
    items: Vec<&'a P::Ground>,
}

impl<'a, P: Pattern> Problem<'a, P> {
    fn new(patterns: &'a [P], items: impl IntoIterator<Item = &'a P::Ground>) -> Self {
        let mut keyed: Vec<(String, &P::Ground)> =
            items.into_iter().map(|i| (i.to_string(), i)).collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        Problem {
            patterns,
            items: keyed.into_iter().map(|(_, i)| i).collect(),
        }
    }
}

impl<P: Pattern> SectionProblem for Problem<'_, P> {
    fn pattern_count(&self) -> usize {
        self.patterns.len()
    }

    fn item_count(&self) -> usize {
        self.items.len()
    }

    fn bind(
        &self,
        pattern: usize,
        item: usize,
        subst: &mut Substitution,
        trail: &mut Vec<String>,
    ) -> bool {
        self.patterns[pattern].bind(self.items[item], subst, trail)
    }
}

fn admissible(section: &dyn SectionProblem, mode: MatchMode) -> bool {
    match mode {
        MatchMode::Subset => section.pattern_count() <= section.item_count(),
        MatchMode::ExactSet => section.pattern_count() == section.item_count(),
    }
}

/// Depth-first search over (section, pattern) goals with per-section
/// injectivity.
fn solve(
    sections: &[&dyn SectionProblem],
    mode: MatchMode,
    seed: &Substitution,
) -> Option<Substitution> {
    if !sections.iter().all(|s| admissible(*s, mode)) {
        return None;
    }
    let goals: Vec<(usize, usize)> = sections
        .iter()
        .enumerate()
        .flat_map(|(s, sec)| (0..sec.pattern_count()).map(move |p| (s, p)))
        .collect();
    let mut used: Vec<Vec<bool>> = sections
        .iter()
        .map(|s| vec![false; s.item_count()])
        .collect();
    let mut subst = seed.clone();

    fn go(
        k: usize,
        goals: &[(usize, usize)],
        sections: &[&dyn SectionProblem],
        used: &mut [Vec<bool>],
        subst: &mut Substitution,
    ) -> bool {
        let Some(&(s, p)) = goals.get(k) else {
            return true;
        };
        for i in 0..sections[s].item_count() {
            if used[s][i] {
                continue;
            }
            let mut trail = Vec::new();
            if sections[s].bind(p, i, subst, &mut trail) {
                used[s][i] = true;
                if go(k + 1, goals, sections, used, subst) {
                    return true;
                }
                used[s][i] = false;
            }
            for name in trail {
                subst.remove(&name);
            }
        }
        false
    }

    go(0, &goals, sections, &mut used, &mut subst).then_some(subst)
}

/// Matches one section's patterns against its ground items, returning the
/// first substitution (extending `seed`) in the pinned search order.
pub fn match_section<P: Pattern>(
    patterns: &[P],
    items: &[P::Ground],
    mode: MatchMode,
    seed: &Substitution,
) -> Option<Substitution> {
    let problem = Problem::new(patterns, items);
    solve(&[&problem], mode, seed)
}

/// Tries one rule against a context. `Ok(None)` means the rule does not fire.
pub fn rule_fires(
    rule: &TransitionRule,
    ctx: &MatchContext,
    apply: ApplyMode,
    mode: MatchMode,
) -> Result<Option<FireResult>> {
    let active = active_sections(rule.kind(), apply);

    if let Some(pred) = rule.pre_db {
        let count = ctx.db_count.ok_or_else(|| Error::MissingDbCount {
            rule: rule.id.clone(),
        })?;
        if !db_pred_eval(pred, count) {
            return Ok(None);
        }
    }

    let belief_facts = ctx.belief.facts();
    let user = rule
        .pre_user
        .as_deref()
        .filter(|_| active.contains(&Section::User))
        .map(|p| Problem::new(p, &ctx.user));
    let belief = rule
        .pre_belief
        .as_deref()
        .filter(|_| active.contains(&Section::Belief))
        .map(|p| Problem::new(p, &belief_facts));
    let prev = rule
        .pre_prev_action
        .as_deref()
        .filter(|_| active.contains(&Section::PrevAction))
        .map(|p| Problem::new(p, &ctx.prev_action));

    let mut sections: Vec<&dyn SectionProblem> = Vec::with_capacity(3);
    if let Some(s) = &user {
        sections.push(s);
    }
    if let Some(s) = &belief {
        sections.push(s);
    }
    if let Some(s) = &prev {
        sections.push(s);
    }
    // An explicitly empty section only matches an empty state section.
    if sections
        .iter()
        .any(|s| s.pattern_count() == 0 && s.item_count() > 0)
    {
        return Ok(None);
    }

    let Some(substitution) = solve(&sections, mode, &Substitution::new()) else {
        return Ok(None);
    };

    let unbound = |e: Error| match e {
        Error::UnboundVariable(variable) => Error::UnboundEffectVariable {
            rule: rule.id.clone(),
            variable,
        },
        other => other,
    };
    let effect = match &rule.effect {
        Effect::Belief(facts) => GroundEffect::Belief(
            facts
                .iter()
                .map(|f| f.substitute(&substitution))
                .collect::<Result<_>>()
                .map_err(unbound)?,
        ),
        Effect::Action(acts) => GroundEffect::Action(
            acts.iter()
                .map(|a| a.substitute(&substitution))
                .collect::<Result<_>>()
                .map_err(unbound)?,
        ),
    };
    Ok(Some(FireResult {
        rule_id: rule.id.clone(),
        substitution,
        effect,
    }))
}

/// The result of the lowest-`order_index` rule that fires.
pub fn select_rule(
    rules: &[TransitionRule],
    ctx: &MatchContext,
    apply: ApplyMode,
    mode: MatchMode,
) -> Result<Option<FireResult>> {
    let mut ordered: Vec<&TransitionRule> = rules.iter().collect();
    ordered.sort_by_key(|r| r.order_index);
    for rule in ordered {
        if let Some(fired) = rule_fires(rule, ctx, apply, mode)? {
            return Ok(Some(fired));
        }
    }
    Ok(None)
}

/// Rules that can run under `apply`, plus one warning per excluded rule.
///
/// Under `Free`, a rule whose effect variable is bound only in a dropped
/// section has nothing to bind it from, so it is left out.
pub fn retain_for_mode(rules: &RuleSet, apply: ApplyMode) -> (RuleSet, Vec<String>) {
    let mut warnings = Vec::new();
    let mut keep = |list: &[TransitionRule]| -> Vec<TransitionRule> {
        list.iter()
            .filter(
                |r| match r.unbound_effect_variable(active_sections(r.kind(), apply)) {
                    Some(v) => {
                        warnings.push(format!(
                        "rule {} excluded in free mode: ?{v} is only bound in a dropped section",
                        r.id
                    ));
                        false
                    }
                    None => true,
                },
            )
            .cloned()
            .collect()
    };
    let belief_rules = keep(&rules.belief_rules);
    let action_rules = keep(&rules.action_rules);
    (
        RuleSet {
            belief_rules,
            action_rules,
            source_name: rules.source_name.clone(),
        },
        warnings,
    )
}

pub fn db_pred_eval(pred: DbPredicate, count: u64) -> bool {
    match pred {
        DbPredicate::Between(lo, hi) => lo <= count && count <= hi,
        DbPredicate::Eq(n) => count == n,
        DbPredicate::Any => true,
    }
}

/// The restaurant database: one attribute map per venue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestaurantDb {
    entities: Vec<BTreeMap<String, Value>>,
    db_slots: Vec<String>,
}

impl RestaurantDb {
    pub fn new(entities: Vec<BTreeMap<String, Value>>, onto: &Ontology) -> Result<Self> {
        let mut names = BTreeSet::new();
        for (i, e) in entities.iter().enumerate() {
            let name = e
                .get("name")
                .ok_or_else(|| Error::schema(format!("db[{i}]"), "entity has no name"))?;
            if !names.insert(name.clone()) {
                return Err(Error::DuplicateEntity(name.as_str().to_string()));
            }
        }
        Ok(RestaurantDb {
            entities,
            db_slots: onto.db_slots.clone(),
        })
    }

    pub fn from_json(text: &str, onto: &Ontology) -> Result<Self> {
        let raw: Vec<BTreeMap<String, String>> = serde_json::from_str(text)
            .map_err(|e| Error::schema(format!("db {}:{}", e.line(), e.column()), e))?;
        let mut entities = Vec::with_capacity(raw.len());
        for (i, obj) in raw.into_iter().enumerate() {
            let mut e = BTreeMap::new();
            for (k, v) in obj {
                let key = k.trim().to_lowercase();
                let value =
                    Value::new(&v).map_err(|err| Error::schema(format!("db[{i}].{key}"), err))?;
                e.insert(key, value);
            }
            entities.push(e);
        }
        Self::new(entities, onto)
    }

    pub fn load(path: impl AsRef<Path>, onto: &Ontology) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, onto).map_err(|e| match e {
            Error::Schema { location, message } => Error::Schema {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn entities(&self) -> &[BTreeMap<String, Value>] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Entities agreeing with `belief` on every db slot the belief constrains.
    pub fn matching<'a>(
        &'a self,
        belief: &'a BeliefState,
    ) -> impl Iterator<Item = &'a BTreeMap<String, Value>> {
        let constraints: Vec<(&str, &Value)> = belief
            .iter()
            .filter(|(slot, _)| self.db_slots.iter().any(|s| s == slot))
            .collect();
        self.entities
            .iter()
            .filter(move |e| constraints.iter().all(|(slot, v)| e.get(*slot) == Some(*v)))
    }

    pub fn to_json(&self) -> String {
        let plain: Vec<BTreeMap<&str, &str>> = self
            .entities
            .iter()
            .map(|e| e.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect())
            .collect();
        serde_json::to_string_pretty(&plain).unwrap_or_default()
    }
}

/// Number of entities consistent with the belief's db-slot constraints.
pub fn db_count(db: &RestaurantDb, belief: &BeliefState) -> u64 {
    db.matching(belief).count() as u64
}
