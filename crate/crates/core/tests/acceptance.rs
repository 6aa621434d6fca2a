//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use clinn::corpus::gold_predictions;
use clinn::dsl::{parse_rules, RuleSet};
use clinn::matcher::{
    retain_for_mode, rule_fires, ApplyMode, MatchContext, MatchMode, RestaurantDb,
};
use clinn::metrics::{action_f1, agr, slot_accuracy, slot_f1, EvalReport, MetricCounts};
use clinn::ontology::Ontology;
use clinn::rng::SplitMix64;
use clinn::semilogic::{
    ActItem, ActPattern, BeliefState, DbPredicate, Effect, FactPattern, Substitution, Term,
    TransitionRule, Value,
};
use clinn::significance::sign_test;
use clinn::synth::{corrupt_beliefs, gen_synthetic, oracle_rules};
use clinn::tracker::{Engine, Tracker, TrackerConfig};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:?}, limit {limit:?}")
    })
}

// ---------------------------------------------------------------- 1

fn worked_example() -> Outcome {
    let start = Instant::now();
    let onto = Ontology::restaurant();
    let text = std::fs::read_to_string(data("worked_example.rules")).map_err(|e| e.to_string())?;
    let rules = parse_rules(&text, &onto).map_err(|e| e.to_string())?;
    // Seven west thai venues and one elsewhere: DB count 7 for the updated belief.
    let mut venues: Vec<String> = (0..7)
        .map(|i| format!(r#"{{"name":"w{i}","food":"thai","area":"west","pricerange":"cheap"}}"#))
        .collect();
    venues.push(r#"{"name":"e","food":"thai","area":"east"}"#.to_string());
    let db = RestaurantDb::from_json(&format!("[{}]", venues.join(",")), &onto)
        .map_err(|e| e.to_string())?;
    let act = |a: &str, s: &str, v: &str| ActItem::with_value(a, s, v).unwrap();
    let user: BTreeSet<ActItem> = [
        act("inform", "food", "thai"),
        act("inform", "time", "15:00"),
        ActItem::with_slot("request", "name"),
        ActItem::with_slot("request", "address"),
    ]
    .into();
    let prior = (
        BeliefState::from_pairs([("area", "west")]).unwrap(),
        [ActItem::with_slot("request", "food")].into(),
    );
    let turn = clinn::corpus::DialogueTurn {
        turn: 0,
        user_acts: user,
        gold_belief: BeliefState::new(),
        gold_action: BTreeSet::new(),
        utterance: None,
    };
    let tracker = Tracker::new(&rules, &db, &onto, TrackerConfig::default());
    let trace = tracker
        .step_traced("d", &prior, &turn, None)
        .map_err(|e| e.to_string())?;
    let out = &trace.outcome;

    ensure(trace.action_context.db_count == Some(7), || {
        format!("db count {:?}", trace.action_context.db_count)
    })?;
    let want_belief = BeliefState::from_pairs([("area", "west"), ("food", "thai")]).unwrap();
    ensure(out.belief == want_belief, || {
        format!("B_t = {}", out.belief)
    })?;
    let want_action: BTreeSet<ActItem> = [
        ActItem::with_slot("inform", "address"),
        ActItem::with_slot("request", "price"),
    ]
    .into();
    ensure(out.action == want_action, || {
        format!("A_t = {:?}", out.action)
    })?;
    let want_subst: Substitution = [
        ("X".to_string(), Value::new("thai").unwrap()),
        ("Y".to_string(), Value::new("west").unwrap()),
    ]
    .into();
    for fired in [&trace.belief_fired, &trace.action_fired] {
        let f = fired.as_ref().ok_or("a rule did not fire")?;
        ensure(f.substitution == want_subst, || {
            format!("{}: {:?}", f.rule_id, f.substitution)
        })?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "B_t={} A_t={{inform(address), request(price)}} {{X: thai, Y: west}}",
        out.belief
    ))
}

// ---------------------------------------------------------------- random instances

const VARS: [&str; 3] = ["X", "Y", "Z"];
const ACT_SLOTS: [&str; 2] = ["food", "area"];
const FACT_SLOTS: [&str; 4] = ["food", "area", "pricerange", "name"];

struct Gen {
    rng: SplitMix64,
    vars: usize,
    universe: usize,
}

impl Gen {
    fn value(&mut self) -> Value {
        Value::new(format!("v{}", self.rng.below(self.universe))).unwrap()
    }

    fn term(&mut self) -> Term {
        if self.vars > 0 && self.rng.chance(60) {
            Term::Variable(VARS[self.rng.below(self.vars)].to_string())
        } else {
            Term::Constant(self.value())
        }
    }

    fn act_pattern(&mut self) -> ActPattern {
        let slot = *self.rng.pick(&ACT_SLOTS);
        if self.rng.chance(25) {
            ActPattern::with_slot("request", slot)
        } else {
            let t = self.term();
            ActPattern::with_term("inform", slot, t)
        }
    }

    fn fact_pattern(&mut self) -> FactPattern {
        let slot = *self.rng.pick(&FACT_SLOTS);
        let t = self.term();
        FactPattern::new(slot, t)
    }

    fn section<P>(
        &mut self,
        budget: &mut usize,
        mut make: impl FnMut(&mut Self) -> P,
    ) -> Option<Vec<P>> {
        if self.rng.chance(30) {
            return None;
        }
        let n = self.rng.below(*budget + 1).min(*budget);
        *budget -= n;
        Some((0..n).map(|_| make(self)).collect())
    }

    fn rule(&mut self) -> TransitionRule {
        self.vars = self.rng.below(VARS.len() + 1);
        self.universe = 1 + self.rng.below(5);
        let mut budget = 4;
        let pre_user = self.section(&mut budget, Self::act_pattern);
        let pre_belief = self.section(&mut budget, Self::fact_pattern);
        let pre_prev_action = self.section(&mut budget, Self::act_pattern);
        let pre_db = match self.rng.below(4) {
            0 => None,
            1 => Some(DbPredicate::Any),
            2 => Some(DbPredicate::Eq(self.rng.below(4) as u64)),
            _ => {
                let lo = self.rng.below(5) as u64;
                Some(DbPredicate::Between(lo, lo + self.rng.below(5) as u64))
            }
        };
        let mut rule = TransitionRule {
            id: "r".into(),
            pre_user,
            pre_belief,
            pre_prev_action,
            pre_db,
            effect: Effect::Belief(vec![]),
            order_index: 0,
        };
        let bound: Vec<String> = [
            clinn::semilogic::Section::User,
            clinn::semilogic::Section::Belief,
            clinn::semilogic::Section::PrevAction,
        ]
        .iter()
        .flat_map(|s| {
            rule.section_variables(*s)
                .into_iter()
                .map(str::to_string)
                .collect::<Vec<_>>()
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
        rule.effect = if self.rng.chance(50) {
            Effect::Belief(
                bound
                    .iter()
                    .map(|v| FactPattern::new("food", Term::Variable(v.clone())))
                    .collect(),
            )
        } else {
            Effect::Action(
                bound
                    .iter()
                    .map(|v| ActPattern::with_term("inform", "food", Term::Variable(v.clone())))
                    .collect(),
            )
        };
        rule
    }

    fn ground_act(&mut self, p: &ActPattern, sigma: &BTreeMap<String, Value>) -> ActItem {
        let value = p.term.as_ref().map(|t| ground(t, sigma));
        ActItem {
            act: p.act.clone(),
            slot: p.slot.clone(),
            value,
        }
    }

    fn random_act(&mut self) -> ActItem {
        let slot = *self.rng.pick(&ACT_SLOTS);
        if self.rng.chance(25) {
            ActItem::with_slot("request", slot)
        } else {
            ActItem {
                act: "inform".into(),
                slot: Some(slot.into()),
                value: Some(self.value()),
            }
        }
    }

    /// Mostly-matching context: patterns grounded under a random σ, plus noise.
    fn context(&mut self, rule: &TransitionRule) -> MatchContext {
        let sigma: BTreeMap<String, Value> =
            VARS.iter().map(|v| (v.to_string(), self.value())).collect();
        let seeded = self.rng.chance(60);
        let noisy = !seeded || self.rng.chance(50);
        let acts = |g: &mut Self, pats: &Option<Vec<ActPattern>>| {
            let mut set = BTreeSet::new();
            if seeded {
                for p in pats.iter().flatten() {
                    set.insert(g.ground_act(p, &sigma));
                }
            }
            let extra = if noisy { g.rng.below(4) } else { 0 };
            for _ in 0..extra {
                if set.len() < 6 {
                    set.insert(g.random_act());
                }
            }
            set
        };
        let user = acts(self, &rule.pre_user);
        let prev_action = acts(self, &rule.pre_prev_action);
        let mut belief = BeliefState::new();
        if seeded {
            for p in rule.pre_belief.iter().flatten() {
                belief.insert(p.slot.clone(), ground(&p.term, &sigma));
            }
        }
        for _ in 0..if noisy { self.rng.below(3) } else { 0 } {
            let slot = *self.rng.pick(&FACT_SLOTS);
            let v = self.value();
            belief.insert(slot, v);
        }
        MatchContext {
            user,
            belief,
            prev_action,
            db_count: Some(match (seeded, rule.pre_db) {
                (true, Some(DbPredicate::Eq(n))) => n,
                (true, Some(DbPredicate::Between(lo, hi))) => {
                    lo + self.rng.below((hi - lo) as usize + 1) as u64
                }
                _ => self.rng.below(10) as u64,
            }),
        }
    }
}

fn ground(t: &Term, sigma: &BTreeMap<String, Value>) -> Value {
    match t {
        Term::Constant(v) => v.clone(),
        Term::Variable(x) => sigma[x].clone(),
    }
}

fn gen(seed: u64) -> Gen {
    Gen {
        rng: SplitMix64::new(seed),
        vars: 0,
        universe: 1,
    }
}

// ---------------------------------------------------------------- brute-force matcher

/// A pattern or item flattened to (head, slot, argument) for structural comparison.
#[derive(Clone)]
struct Flat {
    head: String,
    slot: Option<String>,
    arg: Option<Term>,
}

fn flat_act_pattern(p: &ActPattern) -> Flat {
    Flat {
        head: p.act.clone(),
        slot: p.slot.clone(),
        arg: p.term.clone(),
    }
}

fn flat_fact_pattern(p: &FactPattern) -> Flat {
    Flat {
        head: String::new(),
        slot: Some(p.slot.clone()),
        arg: Some(p.term.clone()),
    }
}

struct Sec {
    patterns: Vec<Flat>,
    /// Items sorted by their rendered text, as ground flats.
    items: Vec<Flat>,
}

fn sections(rule: &TransitionRule, ctx: &MatchContext) -> Vec<Sec> {
    let mut out = Vec::new();
    let sorted_acts = |set: &BTreeSet<ActItem>| {
        let mut v: Vec<(String, Flat)> = set
            .iter()
            .map(|a| {
                (
                    a.to_string(),
                    Flat {
                        head: a.act.clone(),
                        slot: a.slot.clone(),
                        arg: a.value.clone().map(Term::Constant),
                    },
                )
            })
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v.into_iter().map(|(_, f)| f).collect::<Vec<_>>()
    };
    if let Some(p) = &rule.pre_user {
        out.push(Sec {
            patterns: p.iter().map(flat_act_pattern).collect(),
            items: sorted_acts(&ctx.user),
        });
    }
    if let Some(p) = &rule.pre_belief {
        let mut facts: Vec<(String, Flat)> = ctx
            .belief
            .facts()
            .iter()
            .map(|f| {
                (
                    f.to_string(),
                    Flat {
                        head: String::new(),
                        slot: Some(f.slot.clone()),
                        arg: Some(Term::Constant(f.value.clone())),
                    },
                )
            })
            .collect();
        facts.sort_by(|a, b| a.0.cmp(&b.0));
        out.push(Sec {
            patterns: p.iter().map(flat_fact_pattern).collect(),
            items: facts.into_iter().map(|(_, f)| f).collect(),
        });
    }
    if let Some(p) = &rule.pre_prev_action {
        out.push(Sec {
            patterns: p.iter().map(flat_act_pattern).collect(),
            items: sorted_acts(&ctx.prev_action),
        });
    }
    out
}

fn db_ok(pred: Option<DbPredicate>, count: u64) -> bool {
    match pred {
        None | Some(DbPredicate::Any) => true,
        Some(DbPredicate::Eq(n)) => count == n,
        Some(DbPredicate::Between(lo, hi)) => lo <= count && count <= hi,
    }
}

fn size_ok(sec: &Sec, mode: MatchMode) -> bool {
    let (p, i) = (sec.patterns.len(), sec.items.len());
    if p == 0 {
        return i == 0;
    }
    match mode {
        MatchMode::Subset => p <= i,
        MatchMode::ExactSet => p == i,
    }
}

/// All injective maps pattern index → item index, in lexicographic order.
fn injections(p: usize, i: usize) -> Vec<Vec<usize>> {
    fn go(k: usize, p: usize, i: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p {
            out.push(cur.clone());
            return;
        }
        for j in 0..i {
            if !cur.contains(&j) {
                cur.push(j);
                go(k + 1, p, i, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(0, p, i, &mut Vec::new(), &mut out);
    out
}

/// Collects variable values over all (pattern, item) pairs; None on any clash.
fn consistent(pairs: &[(&Flat, &Flat)]) -> Option<Substitution> {
    let mut seen: BTreeMap<String, BTreeSet<Value>> = BTreeMap::new();
    for (p, it) in pairs {
        if p.head != it.head || p.slot != it.slot || p.arg.is_some() != it.arg.is_some() {
            return None;
        }
        let Some(Term::Constant(value)) = &it.arg else {
            continue;
        };
        match p.arg.as_ref().unwrap() {
            Term::Constant(c) if c != value => return None,
            Term::Constant(_) => {}
            Term::Variable(x) => {
                seen.entry(x.clone()).or_default().insert(value.clone());
            }
        }
    }
    seen.into_iter()
        .map(|(k, vs)| (vs.len() == 1).then(|| (k, vs.into_iter().next().unwrap())))
        .collect()
}

/// First consistent joint assignment in section-major lexicographic order.
fn oracle_by_assignment(
    rule: &TransitionRule,
    ctx: &MatchContext,
    mode: MatchMode,
) -> Option<Substitution> {
    if !db_ok(rule.pre_db, ctx.db_count.unwrap()) {
        return None;
    }
    let secs = sections(rule, ctx);
    if !secs.iter().all(|s| size_ok(s, mode)) {
        return None;
    }
    let choices: Vec<Vec<Vec<usize>>> = secs
        .iter()
        .map(|s| injections(s.patterns.len(), s.items.len()))
        .collect();
    let mut idx = vec![0usize; secs.len()];
    loop {
        let mut pairs = Vec::new();
        for (s, sec) in secs.iter().enumerate() {
            for (p, &i) in choices[s][idx[s]].iter().enumerate() {
                pairs.push((&sec.patterns[p], &sec.items[i]));
            }
        }
        if let Some(sub) = consistent(&pairs) {
            return Some(sub);
        }
        // Odometer with the last section fastest.
        let mut k = secs.len();
        loop {
            if k == 0 {
                return None;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Whether some substitution over the value universe grounds every section
/// to |patterns| distinct items of that section.
fn oracle_by_substitution(rule: &TransitionRule, ctx: &MatchContext, mode: MatchMode) -> bool {
    if !db_ok(rule.pre_db, ctx.db_count.unwrap()) {
        return false;
    }
    let secs = sections(rule, ctx);
    if !secs.iter().all(|s| size_ok(s, mode)) {
        return false;
    }
    let vars: Vec<String> = secs
        .iter()
        .flat_map(|s| s.patterns.iter())
        .filter_map(|p| match &p.arg {
            Some(Term::Variable(x)) => Some(x.clone()),
            _ => None,
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let universe: Vec<Value> = secs
        .iter()
        .flat_map(|s| s.items.iter())
        .filter_map(|i| match &i.arg {
            Some(Term::Constant(v)) => Some(v.clone()),
            _ => None,
        })
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if universe.is_empty() && !vars.is_empty() {
        return false;
    }
    let key = |f: &Flat, sigma: &BTreeMap<&str, &Value>| {
        let arg = match &f.arg {
            None => String::new(),
            Some(Term::Constant(v)) => v.as_str().to_string(),
            Some(Term::Variable(x)) => sigma[x.as_str()].as_str().to_string(),
        };
        format!("{}|{:?}|{}|{}", f.head, f.slot, f.arg.is_some(), arg)
    };
    let total = universe.len().pow(vars.len() as u32);
    (0..total).any(|mut code| {
        let sigma: BTreeMap<&str, &Value> = vars
            .iter()
            .map(|v| {
                let val = &universe[code % universe.len()];
                code /= universe.len();
                (v.as_str(), val)
            })
            .collect();
        secs.iter().all(|s| {
            let items: BTreeSet<String> = s.items.iter().map(|i| key(i, &sigma)).collect();
            let ground: BTreeSet<String> = s.patterns.iter().map(|p| key(p, &sigma)).collect();
            ground.len() == s.patterns.len() && ground.is_subset(&items)
        })
    })
}

fn matcher_oracle() -> Outcome {
    let start = Instant::now();
    let mut g = gen(0xA11CE);
    let (mut fired, mut disagreements) = (0, Vec::new());
    for n in 0..1000 {
        let rule = g.rule();
        let ctx = g.context(&rule);
        let mode = if g.rng.chance(50) {
            MatchMode::Subset
        } else {
            MatchMode::ExactSet
        };
        let got = rule_fires(&rule, &ctx, ApplyMode::Full, mode)
            .map_err(|e| format!("instance {n}: {e}"))?
            .map(|f| f.substitution);
        let want = oracle_by_assignment(&rule, &ctx, mode);
        let exists = oracle_by_substitution(&rule, &ctx, mode);
        if got != want || want.is_some() != exists {
            disagreements.push(n);
        }
        fired += usize::from(got.is_some());
    }
    ensure(disagreements.is_empty(), || {
        format!(
            "{} disagreements, first at instances {:?}",
            disagreements.len(),
            &disagreements[..disagreements.len().min(5)]
        )
    })?;
    ensure(fired > 100 && fired < 900, || {
        format!("degenerate sample: {fired} of 1000 fired")
    })?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("1000 instances, {fired} firing, 0 disagreements"))
}

// ---------------------------------------------------------------- 3

fn full_to_free() -> Outcome {
    let mut g = gen(0xF4EE);
    let (mut checked, mut full_fired, mut violations) = (0, 0, 0);
    while checked < 1000 {
        let rule = g.rule();
        let set = RuleSet {
            belief_rules: matches!(rule.effect, Effect::Belief(_))
                .then(|| rule.clone())
                .into_iter()
                .collect(),
            action_rules: matches!(rule.effect, Effect::Action(_))
                .then(|| rule.clone())
                .into_iter()
                .collect(),
            source_name: String::new(),
        };
        if retain_for_mode(&set, ApplyMode::Free).0.is_empty() {
            continue;
        }
        checked += 1;
        let ctx = g.context(&rule);
        let mode = if g.rng.chance(50) {
            MatchMode::Subset
        } else {
            MatchMode::ExactSet
        };
        let full = rule_fires(&rule, &ctx, ApplyMode::Full, mode).map_err(|e| e.to_string())?;
        let free = rule_fires(&rule, &ctx, ApplyMode::Free, mode).map_err(|e| e.to_string())?;
        if full.is_some() {
            full_fired += 1;
            if free.is_none() {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    ensure(full_fired > 50, || {
        format!("only {full_fired} Full firings")
    })?;
    Ok(format!(
        "1000 pairs, {full_fired} Full firings, 0 violations"
    ))
}

// ---------------------------------------------------------------- 4

fn metric_fixtures() -> Outcome {
    let onto = Ontology::restaurant();
    let b = |p: &[(&str, &str)]| BeliefState::from_pairs(p.iter().copied()).unwrap();
    let pred = b(&[("food", "thai"), ("area", "centre")]);
    let gold = b(&[("food", "thai"), ("area", "west")]);
    let sa = slot_accuracy(&pred, &gold, &onto).map_err(|e| e.to_string())?;
    ensure((sa - 6.0 / 7.0).abs() < 1e-9, || {
        format!("slot_accuracy {sa}")
    })?;
    let sf = slot_f1(&[(pred, gold)]).map_err(|e| e.to_string())?;
    ensure((sf - 0.5).abs() < 1e-9, || format!("slot_f1 {sf}"))?;
    let req = |s: &str| ActItem::with_slot("request", s);
    let af = action_f1(&[([req("food")].into(), [req("food"), req("area")].into())])
        .map_err(|e| e.to_string())?;
    ensure((af - 2.0 / 3.0).abs() < 1e-9, || format!("action_f1 {af}"))?;

    let mut rng = SplitMix64::new(4);
    let values = ["a", "b", "c"];
    for c in 0..100 {
        let mut counts = MetricCounts::default();
        let turns = 1 + rng.below(30);
        let random_belief = |rng: &mut SplitMix64| {
            let mut s = BeliefState::new();
            for slot in &onto.slots {
                if rng.chance(40) {
                    s.insert(slot.clone(), Value::new(*rng.pick(&values)).unwrap());
                }
            }
            s
        };
        for _ in 0..turns {
            let gold = random_belief(&mut rng);
            let pred = if rng.chance(30) {
                gold.clone()
            } else {
                random_belief(&mut rng)
            };
            let score =
                MetricCounts::score_turn(&pred, &gold, &BTreeSet::new(), &BTreeSet::new(), &onto);
            counts.add(&score, onto.slots.len());
        }
        let report = EvalReport::from_counts("r", &counts).map_err(|e| e.to_string())?;
        ensure(report.joint_goal <= report.slot_accuracy, || {
            format!(
                "corpus {c}: JG {} > SA {}",
                report.joint_goal, report.slot_accuracy
            )
        })?;
    }
    Ok("slot_acc 6/7, slot_f1 0.5, action_f1 2/3; JG ≤ SA on 100 corpora".into())
}

// ---------------------------------------------------------------- 5, 9 (through the binary)

fn clinn(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_clinn"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "clinn {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

struct Workdir(PathBuf);

impl Workdir {
    fn new(tag: &str) -> Self {
        let dir =
            std::env::temp_dir().join(format!("clinn-acceptance-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Workdir(dir)
    }

    fn path(&self, name: &str) -> String {
        self.0.join(name).to_string_lossy().into_owned()
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn oracle_end_to_end() -> Outcome {
    let start = Instant::now();
    let w = Workdir::new("e2e");
    let db = data("restaurant_db.json");
    let db = db.to_str().unwrap();
    clinn(&[
        "gen",
        "--n",
        "50",
        "--seed",
        "7",
        "--db",
        db,
        "--out-corpus",
        &w.path("c.json"),
        "--out-rules",
        &w.path("o.rules"),
    ])?;
    clinn(&[
        "replay",
        "--rules",
        &w.path("o.rules"),
        "--corpus",
        &w.path("c.json"),
        "--db",
        db,
        "--engine",
        "base",
        "--out",
        &w.path("r.json"),
    ])?;
    let text = std::fs::read_to_string(w.path("r.json")).map_err(|e| e.to_string())?;
    for field in ["\"joint_goal\": 1.000000", "\"action_f1\": 1.000000"] {
        ensure(text.contains(field), || format!("report lacks {field}"))?;
    }
    let report = EvalReport::from_json(&text).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "{} turns, joint_goal 1.000000, action_f1 1.000000",
        report.turn_count
    ))
}

fn determinism() -> Outcome {
    let w = Workdir::new("det");
    let db = data("restaurant_db.json");
    let db = db.to_str().unwrap();
    clinn(&[
        "gen",
        "--n",
        "200",
        "--seed",
        "3",
        "--db",
        db,
        "--out-corpus",
        &w.path("c.json"),
        "--out-rules",
        &w.path("o.rules"),
    ])?;
    // A partial rule set gives non-trivial metrics and mixed sources.
    let partial: String = std::fs::read_to_string(w.path("o.rules"))
        .map_err(|e| e.to_string())?
        .split("\nrule ")
        .filter(|r| !r.starts_with("inform_fa") && !r.starts_with("recommend"))
        .collect::<Vec<_>>()
        .join("\nrule ");
    std::fs::write(w.path("p.rules"), partial).map_err(|e| e.to_string())?;
    let replay = |out: &str, jobs: Option<&str>| {
        let mut args = vec![
            "replay",
            "--rules",
            &w.path("p.rules"),
            "--corpus",
            &w.path("c.json"),
            "--db",
            db,
            "--out",
            out,
            "--seed-label",
            "11",
        ]
        .into_iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
        if let Some(j) = jobs {
            args.extend(["--jobs".to_string(), j.to_string()]);
        }
        clinn(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let runs = [
        ("a.json", None),
        ("b.json", None),
        ("c1.json", Some("1")),
        ("c4.json", Some("4")),
    ];
    let mut stdouts = Vec::new();
    for (file, jobs) in runs {
        stdouts.push(replay(&w.path(file), jobs)?);
    }
    let bytes: Vec<Vec<u8>> = runs
        .iter()
        .map(|(f, _)| std::fs::read(w.path(f)).unwrap())
        .collect();
    ensure(bytes.windows(2).all(|p| p[0] == p[1]), || {
        "report files differ".into()
    })?;
    ensure(stdouts.windows(2).all(|p| p[0] == p[1]), || {
        "stdout differs".into()
    })?;
    let report = EvalReport::from_json(std::str::from_utf8(&bytes[0]).unwrap())
        .map_err(|e| e.to_string())?;
    ensure(report.joint_goal < 1.0, || {
        "partial rules should not be perfect".into()
    })?;
    Ok(format!(
        "4 runs (default, default, 1 and 4 workers) byte-identical, {} bytes",
        bytes[0].len()
    ))
}

// ---------------------------------------------------------------- 6

fn hybrid_override() -> Outcome {
    let onto = Ontology::restaurant();
    let db = RestaurantDb::load(data("restaurant_db.json"), &onto).map_err(|e| e.to_string())?;
    let (corpus, rules) = gen_synthetic(50, 7, &db, &onto).map_err(|e| e.to_string())?;
    let preds = corrupt_beliefs(&gold_predictions(&corpus), 30, 2024, &db);
    let hybrid = TrackerConfig {
        engine: Engine::Hybrid,
        ..Default::default()
    };
    let only = Tracker::new(&RuleSet::default(), &db, &onto, hybrid)
        .run_corpus(&corpus, &preds, "predictions")
        .map_err(|e| e.to_string())?;
    let with_rules = Tracker::new(&rules, &db, &onto, hybrid)
        .run_corpus(&corpus, &preds, "hybrid")
        .map_err(|e| e.to_string())?;
    ensure(only.joint_goal < 1.0, || {
        format!("prediction-only JG {}", only.joint_goal)
    })?;
    ensure(with_rules.joint_goal == 1.0, || {
        format!("hybrid JG {}", with_rules.joint_goal)
    })?;
    ensure(
        oracle_rules(&onto).map_err(|e| e.to_string())? == rules,
        || "rules differ from oracle".into(),
    )?;
    Ok(format!(
        "prediction-only JG {:.6}, hybrid JG {:.6}",
        only.joint_goal, with_rules.joint_goal
    ))
}

// ---------------------------------------------------------------- 7

fn sign_test_exact() -> Outcome {
    let pairs = |w: usize, l: usize, t: usize| {
        let mut v = vec![(1.0, 0.0); w];
        v.extend(vec![(0.0, 1.0); l]);
        v.extend(vec![(0.5, 0.5); t]);
        v
    };
    for (w, l, t, p, markers) in [
        (6, 0, 0, 0.015625, "†◇"),
        (5, 1, 0, 0.109375, ""),
        (4, 0, 2, 0.0625, "†"),
    ] {
        let r = sign_test(&pairs(w, l, t)).map_err(|e| e.to_string())?;
        ensure(r.p_value == p && r.markers() == markers, || {
            format!(
                "({w}W,{l}L,{t}T): p={} markers={:?}",
                r.p_value,
                r.markers()
            )
        })?;
    }
    Ok("(6W,0L) 0.015625 †◇; (5W,1L) 0.109375; (4W,0L,2T) 0.0625 †".into())
}

// ---------------------------------------------------------------- 8

fn agreement() -> Outcome {
    let onto = Ontology::restaurant();
    let rules = |src: &str| {
        parse_rules(src, &onto)
            .map(|r| r.belief_rules)
            .map_err(|e| e.to_string())
    };
    let r1 = "rule a: belief { user { inform(food(?X)) } => { food(?X) } }";
    let r2 = "rule b: belief { user { inform(area(?X)) } belief { food(?F) } => { area(?X) } }";
    let r3 = "rule c: belief { user { inform(pricerange(?P)) } => { pricerange(?P) } }";
    let r2_alpha =
        "rule z: belief { belief { food(?Q) } user { inform(area(?W)) } => { area(?W) } }";
    let a = rules(&format!("{r1}\n{r2}"))?;
    let b = rules(r1)?;
    let c = rules(r3)?;
    ensure(agr(&a, &b) == agr(&b, &a), || "not symmetric".into())?;
    ensure(agr(&a, &a) == 1.0, || "not reflexive".into())?;
    ensure(agr(&b, &c) == 0.0, || "disjoint sets overlap".into())?;
    ensure(agr(&a, &b) == 0.5, || {
        format!("jaccard fixture {}", agr(&a, &b))
    })?;
    ensure(agr(&rules(r2)?, &rules(r2_alpha)?) == 1.0, || {
        "alpha-variants differ".into()
    })?;
    let (va, vb) = (
        rules(&format!("{r1}\n{r2}"))?,
        rules(&format!("{r1}\n{r2_alpha}"))?,
    );
    ensure(agr(&va, &vb) == 1.0, || "alpha-variant sets differ".into())?;
    Ok("symmetric, reflexive, disjoint 0, jaccard 0.5, alpha-variants equal".into())
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("worked example step", worked_example),
        ("matcher vs brute-force oracle", matcher_oracle),
        ("full-to-free monotonicity", full_to_free),
        ("metric fixtures", metric_fixtures),
        ("oracle end-to-end", oracle_end_to_end),
        ("hybrid override", hybrid_override),
        ("sign test exactness", sign_test_exact),
        ("agreement suite", agreement),
        ("replay determinism", determinism),
    ];
    // Keep panics from individual checks out of the report lines.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
