//! An external tracker gets 30% of its beliefs wrong. Rules that fire
//! replace its prediction for that turn. The complete rule set recovers every
//! error. A lone food rule does worse than no rules at all: it fires on turns
//! that also inform area or price range, and its update overwrites a correct
//! prediction with one that misses those slots.

use clinn::corpus::gold_predictions;
use clinn::dsl::RuleSet;
use clinn::matcher::RestaurantDb;
use clinn::ontology::Ontology;
use clinn::synth::{corrupt_beliefs, gen_synthetic};
use clinn::tracker::{BeliefSource, Engine, Tracker, TrackerConfig};

fn main() -> clinn::Result<()> {
    let onto = Ontology::restaurant();
    let db = RestaurantDb::load(
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/restaurant_db.json"),
        &onto,
    )?;
    let (corpus, rules) = gen_synthetic(50, 7, &db, &onto)?;
    let predictions = corrupt_beliefs(&gold_predictions(&corpus), 30, 2024, &db);

    let mut food_only = rules.clone();
    food_only.belief_rules.retain(|r| r.id == "inform_f");
    food_only.action_rules.clear();

    let config = TrackerConfig {
        engine: Engine::Hybrid,
        ..Default::default()
    };
    for (label, set) in [
        ("predictions only", RuleSet::default()),
        ("food rule", food_only),
        ("all rules", rules),
    ] {
        let report =
            Tracker::new(&set, &db, &onto, config).run_corpus(&corpus, &predictions, label)?;
        let overridden = report
            .turns
            .iter()
            .flatten()
            .filter(|t| t.belief_source == BeliefSource::Rule)
            .count();
        println!(
            "{label:<17} joint_goal {:.6}  beliefs from rules {overridden}/{}",
            report.joint_goal, report.turn_count
        );
    }
    Ok(())
}
