//! Agreement between two designers' rule sets: Jaccard overlap of rules up
//! to variable renaming and item order.

use clinn::dsl::parse_rules;
use clinn::metrics::agr;
use clinn::ontology::Ontology;
use clinn::semilogic::RuleKind;

const ALICE: &str = "
rule food: belief { user { inform(food(?F)) } => { food(?F) } }
rule area: belief { user { inform(area(?A)) } => { area(?A) } }
rule both: belief { user { inform(food(?F)), inform(area(?A)) } => { food(?F), area(?A) } }
rule bye: action { user { bye() } => { bye() } }
rule none: action { db { eq(0) } => { nooffer() } }
";

const BOB: &str = "
rule f: belief { user { inform(food(?x)) } => { food(?x) } }
rule fa: belief { user { inform(area(?y)), inform(food(?x)) } => { area(?y), food(?x) } }
rule p: belief { user { inform(pricerange(?p)) } => { pricerange(?p) } }
rule goodbye: action { user { bye() } => { bye() } }
rule ask: action { belief { } => { request(food) } }
";

fn main() -> clinn::Result<()> {
    let onto = Ontology::restaurant();
    let alice = parse_rules(ALICE, &onto)?;
    let bob = parse_rules(BOB, &onto)?;
    for kind in [RuleKind::Belief, RuleKind::Action] {
        println!(
            "{kind:<6} agreement {:.6}",
            agr(alice.rules(kind), bob.rules(kind))
        );
    }
    Ok(())
}
