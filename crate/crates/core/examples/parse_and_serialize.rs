//! Parsing rule files: pretty printing, canonical forms and diagnostics.

use clinn::dsl::{parse_rules, parse_rules_with_warnings};
use clinn::ontology::Ontology;
use clinn::semilogic::canonicalize_rule;

const SOURCE: &str = r#"
# Two designers wrote the same rule with different variable names.
rule mine: belief { user { inform(food(?Food)), inform(area(?Area)) } => { food(?Food), area(?Area) } }
rule theirs: BELIEF { USER { Inform(area(?a)), inform(food(?f)) } => { area(?a), food(?f) } }

rule quoted: belief { user { inform(area("new york")) } => { area("new york") } }
rule ask: action { belief { } db { between(2, 9) } => { request(food) } }
"#;

fn main() -> clinn::Result<()> {
    let onto = Ontology::restaurant();
    let rules = parse_rules(SOURCE, &onto)?;
    println!(
        "{} belief, {} action\n",
        rules.belief_rules.len(),
        rules.action_rules.len()
    );
    print!("{}", rules.to_source());

    println!("\ncanonical forms:");
    for rule in rules.iter() {
        println!("  {:<7} {}", rule.id, canonicalize_rule(rule));
    }

    println!("\ndiagnostics:");
    let broken = [
        "rule a: belief { user { inform(food(?X)) } => { food(?Y) } }",
        "rule b: action { user { teleport() } => { bye() } }",
        "rule c: action { user { bye() }\n  => { bye() }",
    ];
    for src in broken {
        match parse_rules(src, &onto) {
            Ok(_) => println!("  unexpectedly parsed: {src}"),
            Err(e) => println!("  {e}"),
        }
    }
    let (_, warnings) = parse_rules_with_warnings(
        "rule d: action { user { bye(), bye() } => { bye() } }",
        &onto,
    )?;
    for w in warnings {
        println!("  {w}");
    }
    Ok(())
}
