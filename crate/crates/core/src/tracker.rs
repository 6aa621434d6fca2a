//! Turn-by-turn state evolution driven by transition rules.
//!
//! `Base` evolves only through rules. `Hybrid` takes an external tracker's
//! per-turn prediction and replaces the belief and/or action whenever a rule
//! of that type fires. With `Oracle` context every turn is matched against
//! the gold state of the previous turn instead of the tracker's own output.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialogue, DialogueTurn, PredictionRecord, Predictions};
use crate::dsl::RuleSet;
use crate::error::{Error, Result};
use crate::matcher::{
    db_count, retain_for_mode, rule_fires, ApplyMode, FireResult, GroundEffect, MatchContext,
    MatchMode, RestaurantDb,
};
use crate::metrics::{EvalReport, MetricCounts, TurnDetail};
use crate::ontology::Ontology;
use crate::semilogic::{belief_apply, fmt_set, ActItem, BeliefState, TransitionRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Rules only.
    #[default]
    Base,
    /// Rules override an external prediction stream.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextSource {
    /// The previous turn's output feeds the next turn.
    #[default]
    Tracked,
    /// The previous turn's gold annotation feeds the next turn.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub engine: Engine,
    pub apply_mode: ApplyMode,
    pub match_mode: MatchMode,
    pub context_source: ContextSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeliefSource {
    Rule,
    External,
    Carry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionSource {
    Rule,
    External,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TurnOutcome {
    pub dialogue_id: String,
    pub turn: usize,
    pub belief: BeliefState,
    pub action: BTreeSet<ActItem>,
    pub belief_source: BeliefSource,
    pub action_source: ActionSource,
    pub fired_rule_ids: Vec<String>,
}

/// Previous-turn state (B_{t-1}, A_{t-1}).
pub type PriorState = (BeliefState, BTreeSet<ActItem>);

/// One rule evaluation recorded by a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleAttempt {
    pub rule_id: String,
    pub fired: bool,
}

/// Everything the tracker looked at and decided during one turn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnTrace {
    pub belief_context: MatchContext,
    pub belief_attempts: Vec<RuleAttempt>,
    pub belief_fired: Option<FireResult>,
    pub action_context: MatchContext,
    pub action_attempts: Vec<RuleAttempt>,
    pub action_fired: Option<FireResult>,
    pub outcome: TurnOutcome,
}

/// A rule set bound to a database, ontology and configuration.
#[derive(Debug, Clone)]
pub struct Tracker<'a> {
    rules: RuleSet,
    db: &'a RestaurantDb,
    onto: &'a Ontology,
    config: TrackerConfig,
    warnings: Vec<String>,
}

impl<'a> Tracker<'a> {
    /// Under `Free` apply mode, rules that cannot bind their effect without
    /// a dropped section are excluded; see [`Tracker::warnings`].
    pub fn new(
        rules: &RuleSet,
        db: &'a RestaurantDb,
        onto: &'a Ontology,
        config: TrackerConfig,
    ) -> Self {
        let (rules, warnings) = retain_for_mode(rules, config.apply_mode);
        Tracker {
            rules,
            db,
            onto,
            config,
            warnings,
        }
    }

    pub fn config(&self) -> TrackerConfig {
        self.config
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn select(
        &self,
        rules: &[TransitionRule],
        ctx: &MatchContext,
        mut attempts: Option<&mut Vec<RuleAttempt>>,
    ) -> Result<Option<FireResult>> {
        let mut ordered: Vec<&TransitionRule> = rules.iter().collect();
        ordered.sort_by_key(|r| r.order_index);
        for rule in ordered {
            let fired = rule_fires(rule, ctx, self.config.apply_mode, self.config.match_mode)?;
            if let Some(a) = attempts.as_deref_mut() {
                a.push(RuleAttempt {
                    rule_id: rule.id.clone(),
                    fired: fired.is_some(),
                });
            }
            if fired.is_some() {
                return Ok(fired);
            }
        }
        Ok(None)
    }

    /// Advances one turn from `prior`.
    pub fn step(
        &self,
        dialogue_id: &str,
        prior: &PriorState,
        turn: &DialogueTurn,
        prediction: Option<&PredictionRecord>,
    ) -> Result<TurnOutcome> {
        self.step_inner(dialogue_id, prior, turn, prediction, None)
            .map(|(outcome, _)| outcome)
    }

    /// Like [`Tracker::step`], also returning the matching trace.
    pub fn step_traced(
        &self,
        dialogue_id: &str,
        prior: &PriorState,
        turn: &DialogueTurn,
        prediction: Option<&PredictionRecord>,
    ) -> Result<TurnTrace> {
        let mut attempts = (Vec::new(), Vec::new());
        let (outcome, ctx) =
            self.step_inner(dialogue_id, prior, turn, prediction, Some(&mut attempts))?;
        let (belief_context, belief_fired, action_context, action_fired) =
            ctx.expect("traced step keeps contexts");
        Ok(TurnTrace {
            belief_context,
            belief_attempts: attempts.0,
            belief_fired,
            action_context,
            action_attempts: attempts.1,
            action_fired,
            outcome,
        })
    }

    #[allow(clippy::type_complexity)]
    fn step_inner(
        &self,
        dialogue_id: &str,
        prior: &PriorState,
        turn: &DialogueTurn,
        prediction: Option<&PredictionRecord>,
        mut attempts: Option<&mut (Vec<RuleAttempt>, Vec<RuleAttempt>)>,
    ) -> Result<(
        TurnOutcome,
        Option<(
            MatchContext,
            Option<FireResult>,
            MatchContext,
            Option<FireResult>,
        )>,
    )> {
        let (prev_belief, prev_action) = prior;
        let prediction = match self.config.engine {
            Engine::Hybrid => Some(prediction.ok_or_else(|| Error::MissingPrediction {
                dialogue: dialogue_id.to_string(),
                turn: turn.turn,
            })?),
            Engine::Base => None,
        };
        let mut fired_rule_ids = Vec::new();

        // Belief phase, matched against B_{t-1}.
        let belief_ctx = MatchContext {
            user: turn.user_acts.clone(),
            belief: prev_belief.clone(),
            prev_action: prev_action.clone(),
            db_count: Some(db_count(self.db, prev_belief)),
        };
        let belief_fired = self.select(
            &self.rules.belief_rules,
            &belief_ctx,
            attempts.as_deref_mut().map(|a| &mut a.0),
        )?;
        let (belief, belief_source) = match (&belief_fired, prediction) {
            (Some(fire), _) => {
                fired_rule_ids.push(fire.rule_id.clone());
                let GroundEffect::Belief(facts) = &fire.effect else {
                    unreachable!("belief list holds belief rules only")
                };
                (
                    belief_apply(prev_belief, facts, self.onto)?,
                    BeliefSource::Rule,
                )
            }
            (None, Some(p)) => (p.belief.clone(), BeliefSource::External),
            (None, None) => (prev_belief.clone(), BeliefSource::Carry),
        };

        // Action phase, matched against B_t and DB_t.
        let action_ctx = MatchContext {
            user: turn.user_acts.clone(),
            belief: belief.clone(),
            prev_action: prev_action.clone(),
            db_count: Some(db_count(self.db, &belief)),
        };
        let action_fired = self.select(
            &self.rules.action_rules,
            &action_ctx,
            attempts.as_deref_mut().map(|a| &mut a.1),
        )?;
        let (action, action_source) = match (&action_fired, prediction) {
            (Some(fire), _) => {
                fired_rule_ids.push(fire.rule_id.clone());
                let GroundEffect::Action(acts) = &fire.effect else {
                    unreachable!("action list holds action rules only")
                };
                (acts.iter().cloned().collect(), ActionSource::Rule)
            }
            (None, Some(p)) => (p.action.clone(), ActionSource::External),
            (None, None) => (BTreeSet::new(), ActionSource::Empty),
        };

        let outcome = TurnOutcome {
            dialogue_id: dialogue_id.to_string(),
            turn: turn.turn,
            belief,
            action,
            belief_source,
            action_source,
            fired_rule_ids,
        };
        let trace = attempts.map(|_| (belief_ctx, belief_fired, action_ctx, action_fired));
        Ok((outcome, trace))
    }

    fn next_prior(&self, outcome: &TurnOutcome, turn: &DialogueTurn) -> PriorState {
        match self.config.context_source {
            ContextSource::Tracked => (outcome.belief.clone(), outcome.action.clone()),
            ContextSource::Oracle => (turn.gold_belief.clone(), turn.gold_action.clone()),
        }
    }

    /// Runs every turn of a dialogue, starting from an empty state.
    pub fn replay_dialogue(
        &self,
        dialogue: &Dialogue,
        predictions: &Predictions,
    ) -> Result<Vec<TurnOutcome>> {
        let mut prior: PriorState = Default::default();
        let mut out = Vec::with_capacity(dialogue.turns.len());
        for turn in &dialogue.turns {
            let pred = predictions.get(&(dialogue.id.clone(), turn.turn));
            let outcome = self.step(&dialogue.id, &prior, turn, pred)?;
            prior = self.next_prior(&outcome, turn);
            out.push(outcome);
        }
        Ok(out)
    }

    pub fn trace_dialogue(
        &self,
        dialogue: &Dialogue,
        predictions: &Predictions,
    ) -> Result<Vec<TurnTrace>> {
        let mut prior: PriorState = Default::default();
        let mut out = Vec::with_capacity(dialogue.turns.len());
        for turn in &dialogue.turns {
            let pred = predictions.get(&(dialogue.id.clone(), turn.turn));
            let trace = self.step_traced(&dialogue.id, &prior, turn, pred)?;
            prior = self.next_prior(&trace.outcome, turn);
            out.push(trace);
        }
        Ok(out)
    }

    /// Replays every dialogue (in parallel on the current rayon pool) and
    /// scores the outcomes against gold. Dialogues are reported in id order
    /// whatever the pool size.
    pub fn run_corpus(
        &self,
        corpus: &Corpus,
        predictions: &Predictions,
        label: &str,
    ) -> Result<EvalReport> {
        if corpus.dialogues.is_empty() {
            return Err(Error::CorpusEmpty);
        }
        let mut dialogues: Vec<&Dialogue> = corpus.dialogues.iter().collect();
        dialogues.sort_by(|a, b| a.id.cmp(&b.id));

        let replayed: Vec<Vec<TurnOutcome>> = dialogues
            .par_iter()
            .map(|d| self.replay_dialogue(d, predictions))
            .collect::<Result<_>>()?;

        let slot_count = self.onto.slots.len();
        let mut counts = MetricCounts::default();
        let mut details = Vec::with_capacity(corpus.turn_count());
        for (dialogue, outcomes) in dialogues.iter().zip(&replayed) {
            for (turn, out) in dialogue.turns.iter().zip(outcomes) {
                let score = MetricCounts::score_turn(
                    &out.belief,
                    &turn.gold_belief,
                    &out.action,
                    &turn.gold_action,
                    self.onto,
                );
                counts.add(&score, slot_count);
                details.push(TurnDetail {
                    dialogue_id: dialogue.id.clone(),
                    turn: turn.turn,
                    belief_source: out.belief_source,
                    action_source: out.action_source,
                    fired_rules: out.fired_rule_ids.clone(),
                    joint_correct: score.joint,
                    slots_correct: score.slots_correct,
                });
            }
        }
        let mut report = EvalReport::from_counts(label, &counts)?;
        report.config = Some(self.config);
        report.turns = Some(details);
        Ok(report)
    }
}

fn fmt_acts(items: &BTreeSet<ActItem>) -> String {
    fmt_set(items)
}

fn fmt_subst(fire: &FireResult) -> String {
    let parts: Vec<String> = fire
        .substitution
        .iter()
        .map(|(k, v)| format!("{k}: {}", v.as_str()))
        .collect();
    format!("{{{}}}", parts.join(", "))
}

fn fmt_context(ctx: &MatchContext) -> String {
    let db = ctx.db_count.map_or("-".to_string(), |c| c.to_string());
    format!(
        "user={} belief={} prev_action={} db={db}",
        fmt_acts(&ctx.user),
        ctx.belief,
        fmt_acts(&ctx.prev_action)
    )
}

/// Human-readable rendering of a dialogue trace.
pub fn render_trace(dialogue_id: &str, traces: &[TurnTrace]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dialogue {dialogue_id}");
    for t in traces {
        let o = &t.outcome;
        let _ = writeln!(out, "turn {}", o.turn);
        for (name, ctx, attempts, fired) in [
            (
                "belief",
                &t.belief_context,
                &t.belief_attempts,
                &t.belief_fired,
            ),
            (
                "action",
                &t.action_context,
                &t.action_attempts,
                &t.action_fired,
            ),
        ] {
            let _ = writeln!(out, "  {name} context: {}", fmt_context(ctx));
            for a in attempts {
                let _ = writeln!(
                    out,
                    "    try {:<16} {}",
                    a.rule_id,
                    if a.fired { "fires" } else { "no" }
                );
            }
            match fired {
                Some(f) => {
                    let _ = writeln!(out, "  {name} rule: {} {}", f.rule_id, fmt_subst(f));
                }
                None => {
                    let _ = writeln!(out, "  {name} rule: none");
                }
            }
        }
        let _ = writeln!(
            out,
            "  => belief {} ({}) action {} ({})",
            o.belief,
            format!("{:?}", o.belief_source).to_lowercase(),
            fmt_acts(&o.action),
            format!("{:?}", o.action_source).to_lowercase()
        );
    }
    out
}
