//! Scripted restaurant-search dialogues and the rule set that reproduces
//! their annotations.
//!
//! The user wants one entity of the database. They give its food, area and
//! price range over one to three turns, sometimes starting with a wrong food
//! that they correct once the system answers. After an offer they may ask for
//! the address and/or phone number, then say goodbye. The system policy is
//! written out procedurally in [`system_policy`] and as rules in
//! [`ORACLE_RULES`]; replaying the corpus with those rules must reproduce
//! every gold state.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{Corpus, Dialogue, DialogueTurn, Predictions};
use crate::dsl::{parse_rules, RuleSet};
use crate::error::Result;
use crate::matcher::{db_count, RestaurantDb};
use crate::ontology::Ontology;
use crate::rng::{partial_shuffle, SplitMix64};
use crate::semilogic::{ActItem, BeliefState, Value};

/// Constraint slots the simulated user informs, in policy order.
pub const CONSTRAINTS: [&str; 3] = ["food", "area", "pricerange"];

/// Rules that reproduce [`system_policy`] and the cumulative belief update.
pub const ORACLE_RULES: &str = "\
# Belief: write every informed constraint, larger informs first.
rule inform_fap: belief { user { inform(food(?F)), inform(area(?A)), inform(pricerange(?P)) } => { food(?F), area(?A), pricerange(?P) } }
rule inform_fa: belief { user { inform(food(?F)), inform(area(?A)) } => { food(?F), area(?A) } }
rule inform_fp: belief { user { inform(food(?F)), inform(pricerange(?P)) } => { food(?F), pricerange(?P) } }
rule inform_ap: belief { user { inform(area(?A)), inform(pricerange(?P)) } => { area(?A), pricerange(?P) } }
rule inform_f: belief { user { inform(food(?F)) } => { food(?F) } }
rule inform_a: belief { user { inform(area(?A)) } => { area(?A) } }
rule inform_p: belief { user { inform(pricerange(?P)) } => { pricerange(?P) } }
rule carry: belief { => { } }

# Action: answer requests, then offers, then ask for the next constraint.
rule goodbye: action { user { bye() } => { bye() } }
rule give_both: action { user { request(address), request(phone) } => { inform(address), inform(phone) } }
rule give_address: action { user { request(address) } => { inform(address) } }
rule give_phone: action { user { request(phone) } => { inform(phone) } }
rule no_match: action { db { eq(0) } => { nooffer() } }
rule unique: action { db { eq(1) } => { inform(name) } }
rule recommend: action { belief { food(?F), area(?A), pricerange(?P) } => { recommend(name) } }
rule ask_price: action { belief { food(?F), area(?A) } => { request(pricerange) } }
rule ask_area_fp: action { belief { food(?F), pricerange(?P) } => { request(area) } }
rule ask_food_ap: action { belief { area(?A), pricerange(?P) } => { request(food) } }
rule ask_area: action { belief { food(?F) } => { request(area) } }
rule ask_food_a: action { belief { area(?A) } => { request(food) } }
rule ask_food_p: action { belief { pricerange(?P) } => { request(food) } }
rule ask_food: action { => { request(food) } }
";

/// Parses [`ORACLE_RULES`] against `onto`.
pub fn oracle_rules(onto: &Ontology) -> Result<RuleSet> {
    let mut rules = parse_rules(ORACLE_RULES, onto)?;
    rules.source_name = "oracle".into();
    Ok(rules)
}

fn act(name: &str, slot: &str) -> ActItem {
    ActItem::with_slot(name, slot)
}

/// The system's reply given this turn's user acts and the updated belief.
pub fn system_policy(
    user: &BTreeSet<ActItem>,
    belief: &BeliefState,
    db: &RestaurantDb,
) -> BTreeSet<ActItem> {
    let asked = |slot| user.contains(&act("request", slot));
    if user.contains(&ActItem::bare("bye")) {
        return [ActItem::bare("bye")].into();
    }
    let mut answers = BTreeSet::new();
    for slot in ["address", "phone"] {
        if asked(slot) {
            answers.insert(act("inform", slot));
        }
    }
    if !answers.is_empty() {
        return answers;
    }
    match db_count(db, belief) {
        0 => return [ActItem::bare("nooffer")].into(),
        1 => return [act("inform", "name")].into(),
        _ => {}
    }
    match CONSTRAINTS.iter().find(|s| belief.get(s).is_none()) {
        None => [act("recommend", "name")].into(),
        // Missing food is asked first, then area, then price range.
        Some(missing) => [act("request", missing)].into(),
    }
}

fn is_offer(action: &BTreeSet<ActItem>) -> bool {
    action.contains(&act("inform", "name")) || action.contains(&act("recommend", "name"))
}

fn utterance(user: &BTreeSet<ActItem>) -> String {
    let mut parts = Vec::new();
    for a in user {
        let text = match (a.act.as_str(), a.slot.as_deref(), a.value.as_ref()) {
            ("greet", ..) => "hello".to_string(),
            ("bye", ..) => "thanks, goodbye".to_string(),
            ("inform", Some("food"), Some(v)) => format!("i want {v} food"),
            ("inform", Some("area"), Some(v)) => format!("in the {v}"),
            ("inform", Some("pricerange"), Some(v)) => format!("something {v}"),
            ("request", Some(slot), None) => format!("what is the {slot}"),
            _ => a.to_string(),
        };
        parts.push(text);
    }
    parts.join(", ")
}

struct Script<'a> {
    db: &'a RestaurantDb,
    belief: BeliefState,
    turns: Vec<DialogueTurn>,
}

impl Script<'_> {
    fn say(&mut self, user: BTreeSet<ActItem>) -> BTreeSet<ActItem> {
        for a in &user {
            if let (true, Some(slot), Some(v)) = (a.act == "inform", &a.slot, &a.value) {
                self.belief.insert(slot.clone(), v.clone());
            }
        }
        let action = system_policy(&user, &self.belief, self.db);
        self.turns.push(DialogueTurn {
            turn: self.turns.len(),
            utterance: Some(utterance(&user)),
            user_acts: user,
            gold_belief: self.belief.clone(),
            gold_action: action.clone(),
        });
        action
    }
}

fn distinct_values(db: &RestaurantDb, slot: &str) -> Vec<Value> {
    let set: BTreeSet<&Value> = db.entities().iter().filter_map(|e| e.get(slot)).collect();
    set.into_iter().cloned().collect()
}

fn inform(slot: &str, value: &Value) -> ActItem {
    ActItem {
        act: "inform".into(),
        slot: Some(slot.into()),
        value: Some(value.clone()),
    }
}

/// Generates `n` scripted dialogues (ids `syn0000`, `syn0001`, …) and the
/// fixed oracle rule set. Entities lacking any of [`CONSTRAINTS`] are never
/// chosen as targets; with no usable entity the corpus is empty.
pub fn gen_synthetic(
    n: usize,
    seed: u64,
    db: &RestaurantDb,
    onto: &Ontology,
) -> Result<(Corpus, RuleSet)> {
    let rules = oracle_rules(onto)?;
    let targets: Vec<&BTreeMap<String, Value>> = db
        .entities()
        .iter()
        .filter(|e| CONSTRAINTS.iter().all(|s| e.contains_key(*s)))
        .collect();
    let foods = distinct_values(db, "food");
    let mut rng = SplitMix64::new(seed);
    let mut dialogues = Vec::with_capacity(n);

    for i in 0..if targets.is_empty() { 0 } else { n } {
        let target = *rng.pick(&targets);
        let true_food = &target["food"];
        let decoys: Vec<&Value> = foods.iter().filter(|f| *f != true_food).collect();
        let decoy = (!decoys.is_empty() && rng.chance(30)).then(|| (*rng.pick(&decoys)).clone());

        let mut order = CONSTRAINTS.to_vec();
        partial_shuffle(&mut order, 3, &mut rng);
        let chunks = 1 + rng.below(3);
        // Split points for `chunks` non-empty groups out of three slots.
        let groups: Vec<Vec<&str>> = match chunks {
            1 => vec![order.clone()],
            2 => {
                let cut = 1 + rng.below(2);
                vec![order[..cut].to_vec(), order[cut..].to_vec()]
            }
            _ => order.iter().map(|s| vec![*s]).collect(),
        };

        let mut script = Script {
            db,
            belief: BeliefState::new(),
            turns: Vec::new(),
        };
        let greet = rng.chance(50);
        let mut last = BTreeSet::new();
        for (g, group) in groups.iter().enumerate() {
            let mut user = BTreeSet::new();
            if g == 0 && greet {
                user.insert(ActItem::bare("greet"));
            }
            for slot in group {
                let value = match (&decoy, *slot) {
                    (Some(d), "food") => d,
                    _ => &target[*slot],
                };
                user.insert(inform(slot, value));
            }
            last = script.say(user);
        }
        if decoy.is_some() {
            last = script.say([inform("food", true_food)].into());
        }
        debug_assert!(is_offer(&last), "all true constraints lead to an offer");
        let mut wants = Vec::new();
        for slot in ["address", "phone"] {
            if rng.chance(50) {
                wants.push(slot);
            }
        }
        if !wants.is_empty() {
            let together = wants.len() == 2 && rng.chance(50);
            if together {
                script.say(wants.iter().map(|s| act("request", s)).collect());
            } else {
                for slot in &wants {
                    script.say([act("request", slot)].into());
                }
            }
        }
        script.say([ActItem::bare("bye")].into());

        dialogues.push(Dialogue {
            id: format!("syn{i:04}"),
            turns: script.turns,
        });
    }

    let corpus = Corpus {
        domain: onto.domain.clone(),
        dialogues,
    };
    corpus.validate(onto)?;
    Ok((corpus, rules))
}

/// Replaces the belief of roughly `percent`% of the records (chosen in key
/// order under `seed`) with a different, wrong state: one slot gets another
/// value seen in the database, or an empty belief gains an area.
pub fn corrupt_beliefs(
    preds: &Predictions,
    percent: u64,
    seed: u64,
    db: &RestaurantDb,
) -> Predictions {
    let mut rng = SplitMix64::new(seed);
    let mut out = preds.clone();
    for rec in out.values_mut() {
        if !rng.chance(percent) {
            continue;
        }
        let slots: Vec<String> = rec.belief.iter().map(|(s, _)| s.to_string()).collect();
        let slot = if slots.is_empty() {
            "area".to_string()
        } else {
            rng.pick(&slots).clone()
        };
        let current = rec.belief.get(&slot).cloned();
        let others: Vec<Value> = distinct_values(db, &slot)
            .into_iter()
            .filter(|v| Some(v) != current.as_ref())
            .collect();
        match others.is_empty() {
            false => {
                rec.belief.insert(slot, rng.pick(&others).clone());
            }
            true => {
                rec.belief.remove(&slot);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::gold_predictions;
    use crate::tracker::{Tracker, TrackerConfig};

    fn db() -> RestaurantDb {
        RestaurantDb::from_json(
            include_str!("../data/restaurant_db.json"),
            &Ontology::restaurant(),
        )
        .unwrap()
    }

    #[test]
    fn zero_dialogues_still_yield_the_rules() {
        let onto = Ontology::restaurant();
        let (corpus, rules) = gen_synthetic(0, 7, &db(), &onto).unwrap();
        assert!(corpus.dialogues.is_empty());
        assert_eq!(rules, oracle_rules(&onto).unwrap());
        assert_eq!(rules.belief_rules.len(), 8);
        assert_eq!(rules.action_rules.len(), 14);
    }

    #[test]
    fn generation_is_deterministic() {
        let onto = Ontology::restaurant();
        let a = gen_synthetic(20, 3, &db(), &onto).unwrap().0;
        let b = gen_synthetic(20, 3, &db(), &onto).unwrap().0;
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a, gen_synthetic(20, 4, &db(), &onto).unwrap().0);
    }

    #[test]
    fn oracle_rules_reproduce_gold() {
        let onto = Ontology::restaurant();
        let db = db();
        let (corpus, rules) = gen_synthetic(5, 7, &db, &onto).unwrap();
        let report = Tracker::new(&rules, &db, &onto, TrackerConfig::default())
            .run_corpus(&corpus, &Predictions::new(), "oracle")
            .unwrap();
        assert_eq!(report.joint_goal, 1.0);
        assert_eq!(report.action_f1, 1.0);
    }

    #[test]
    fn beliefs_only_grow_or_revise() {
        let onto = Ontology::restaurant();
        let (corpus, _) = gen_synthetic(40, 11, &db(), &onto).unwrap();
        for d in &corpus.dialogues {
            for w in d.turns.windows(2) {
                for (slot, _) in w[0].gold_belief.iter() {
                    assert!(
                        w[1].gold_belief.get(slot).is_some(),
                        "{} dropped {slot}",
                        d.id
                    );
                }
            }
            assert_eq!(
                d.turns.last().unwrap().gold_action,
                [ActItem::bare("bye")].into()
            );
        }
    }

    #[test]
    fn corruption_changes_about_the_requested_share() {
        let onto = Ontology::restaurant();
        let db = db();
        let (corpus, _) = gen_synthetic(30, 5, &db, &onto).unwrap();
        let gold = gold_predictions(&corpus);
        let bad = corrupt_beliefs(&gold, 30, 99, &db);
        let changed = gold
            .iter()
            .filter(|(k, v)| bad[*k].belief != v.belief)
            .count();
        assert!(changed > 0);
        assert!(
            changed * 100 < gold.len() * 50,
            "{changed} of {}",
            gold.len()
        );
        assert_eq!(bad, corrupt_beliefs(&gold, 30, 99, &db));
    }
}
