//! One tracker step with the two reference rules: a belief rule that adds the
//! food the user just gave, and an action rule that answers an address
//! request and asks for the price while 4 to 10 venues match.

use std::collections::BTreeSet;

use clinn::corpus::DialogueTurn;
use clinn::dsl::RuleSet;
use clinn::matcher::RestaurantDb;
use clinn::ontology::Ontology;
use clinn::semilogic::{ActItem, BeliefState};
use clinn::tracker::{render_trace, Tracker, TrackerConfig};

fn main() -> clinn::Result<()> {
    let onto = Ontology::restaurant();
    let (rules, _) = RuleSet::load(
        concat!(env!("CARGO_MANIFEST_DIR"), "/data/worked_example.rules"),
        &onto,
    )?;

    // Seven thai places in the west, so the db count after the update is 7.
    let venues: Vec<String> = (0..7)
        .map(|i| format!(r#"{{"name":"west thai {i}","food":"thai","area":"west"}}"#))
        .chain([r#"{"name":"east thai","food":"thai","area":"east"}"#.to_string()])
        .collect();
    let db = RestaurantDb::from_json(&format!("[{}]", venues.join(",")), &onto)?;

    let turn = DialogueTurn {
        turn: 0,
        user_acts: [
            ActItem::with_value("inform", "food", "thai")?,
            ActItem::with_value("inform", "time", "15:00")?,
            ActItem::with_slot("request", "name"),
            ActItem::with_slot("request", "address"),
        ]
        .into(),
        gold_belief: BeliefState::new(),
        gold_action: BTreeSet::new(),
        utterance: Some("thai food at 15:00 please, what is it called and where is it".into()),
    };
    let prior = (
        BeliefState::from_pairs([("area", "west")])?,
        [ActItem::with_slot("request", "food")].into(),
    );

    let tracker = Tracker::new(&rules, &db, &onto, TrackerConfig::default());
    let trace = tracker.step_traced("example", &prior, &turn, None)?;
    print!("{}", render_trace("example", &[trace]));
    Ok(())
}
