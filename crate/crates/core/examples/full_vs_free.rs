//! Full mode checks every precondition section. Free mode drops the
//! previous-action section from belief rules and the belief section from
//! action rules, so rules fire in more contexts.

use clinn::dsl::parse_rules;
use clinn::matcher::{retain_for_mode, rule_fires, ApplyMode, MatchContext, MatchMode};
use clinn::ontology::Ontology;
use clinn::semilogic::{ActItem, BeliefState};

const RULES: &str = "
rule food_after_question: belief {
  user { inform(food(?X)) }
  prev_action { request(food) }
  => { food(?X) }
}
rule confirm_area: action {
  user { request(address) }
  belief { area(?A) }
  => { inform(address) }
}
rule echo_area: action {
  belief { area(?A) }
  => { inform(area(?A)) }
}
";

fn main() -> clinn::Result<()> {
    let onto = Ontology::restaurant();
    let rules = parse_rules(RULES, &onto)?;
    // The system last asked about the price, and nothing is believed yet.
    let ctx = MatchContext {
        user: [
            ActItem::with_value("inform", "food", "thai")?,
            ActItem::with_slot("request", "address"),
        ]
        .into(),
        belief: BeliefState::new(),
        prev_action: [ActItem::with_slot("request", "pricerange")].into(),
        db_count: Some(12),
    };

    let (free_rules, warnings) = retain_for_mode(&rules, ApplyMode::Free);
    for w in &warnings {
        println!("note: {w}");
    }
    println!("{:<22} {:<6} free", "rule", "full");
    for rule in rules.iter() {
        let full = rule_fires(rule, &ctx, ApplyMode::Full, MatchMode::Subset)?;
        let free = match free_rules.iter().any(|r| r.id == rule.id) {
            true => rule_fires(rule, &ctx, ApplyMode::Free, MatchMode::Subset)?
                .map_or("no".to_string(), |f| f.effect.to_string()),
            false => "excluded".to_string(),
        };
        println!(
            "{:<22} {:<6} {free}",
            rule.id,
            if full.is_some() { "fires" } else { "no" }
        );
    }
    Ok(())
}
