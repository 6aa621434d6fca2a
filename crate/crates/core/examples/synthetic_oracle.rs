//! Generate a scripted corpus, replay it with the rules that produced it,
//! then see what happens when a designer forgets a couple of rules.

use clinn::corpus::Predictions;
use clinn::matcher::RestaurantDb;
use clinn::ontology::Ontology;
use clinn::semilogic::fmt_set;
use clinn::synth::gen_synthetic;
use clinn::tracker::{Tracker, TrackerConfig};

fn main() -> clinn::Result<()> {
    let onto = Ontology::restaurant();
    let db = RestaurantDb::load(
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/restaurant_db.json"),
        &onto,
    )?;
    let (corpus, rules) = gen_synthetic(100, 7, &db, &onto)?;
    println!(
        "{} dialogues, {} turns",
        corpus.dialogues.len(),
        corpus.turn_count()
    );
    let first = &corpus.dialogues[0];
    for t in &first.turns {
        println!(
            "  {}: {:<32} -> {}",
            t.turn,
            t.utterance.as_deref().unwrap_or(""),
            fmt_set(&t.gold_action)
        );
    }

    let mut partial = rules.clone();
    partial.belief_rules.retain(|r| r.id != "inform_fa");
    partial.action_rules.retain(|r| r.id != "unique");

    for (label, set) in [("oracle", &rules), ("partial", &partial)] {
        let report = Tracker::new(set, &db, &onto, TrackerConfig::default()).run_corpus(
            &corpus,
            &Predictions::new(),
            label,
        )?;
        println!(
            "{label:<8} joint_goal {:.6}  slot_acc {:.6}  slot_f1 {:.6}  action_f1 {:.6}",
            report.joint_goal, report.slot_accuracy, report.slot_f1, report.action_f1
        );
    }
    Ok(())
}
