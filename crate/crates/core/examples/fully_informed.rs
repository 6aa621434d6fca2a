//! Tracked context feeds each turn the tracker's own previous output, so one
//! mistake propagates. Oracle context feeds the gold previous state instead,
//! which isolates how good each individual rule application is.

use clinn::corpus::Predictions;
use clinn::matcher::RestaurantDb;
use clinn::ontology::Ontology;
use clinn::synth::gen_synthetic;
use clinn::tracker::{ContextSource, Tracker, TrackerConfig};

fn main() -> clinn::Result<()> {
    let onto = Ontology::restaurant();
    let db = RestaurantDb::load(
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/restaurant_db.json"),
        &onto,
    )?;
    let (corpus, rules) = gen_synthetic(100, 21, &db, &onto)?;

    // Without the single-slot area rule, a turn that only gives the area is
    // missed, and the tracked belief stays wrong until the end of the dialogue.
    let mut weak = rules.clone();
    weak.belief_rules.retain(|r| r.id != "inform_a");

    for context in [ContextSource::Tracked, ContextSource::Oracle] {
        let config = TrackerConfig {
            context_source: context,
            ..Default::default()
        };
        let report = Tracker::new(&weak, &db, &onto, config).run_corpus(
            &corpus,
            &Predictions::new(),
            "weak",
        )?;
        println!(
            "{:<8} joint_goal {:.6}  action_f1 {:.6}",
            format!("{context:?}"),
            report.joint_goal,
            report.action_f1
        );
    }
    Ok(())
}
