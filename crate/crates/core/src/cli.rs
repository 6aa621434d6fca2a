//! The `clinn` command line: validate, replay, trace, agree, sample, gen and
//! compare.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or schema error, 3 runtime
//! error. Every non-zero exit prints a diagnostic to the error stream.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::corpus::{load_corpus, load_predictions, sample_corpus, Predictions};
use crate::dsl::RuleSet;
use crate::error::{Error, Result};
use crate::matcher::{ApplyMode, MatchMode, RestaurantDb};
use crate::metrics::{agr, EvalReport, Metric};
use crate::ontology::Ontology;
use crate::semilogic::RuleKind;
use crate::significance::{sign_test, RunGroup};
use crate::synth::gen_synthetic;
use crate::tracker::{render_trace, ContextSource, Engine, Tracker, TrackerConfig};

#[derive(Debug, Parser)]
#[command(
    name = "clinn",
    version,
    about = "Rule-based dialogue state tracking toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Free,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatchArg {
    Subset,
    Exactset,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Base,
    Hybrid,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ContextArg {
    Tracked,
    Oracle,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Belief,
    Action,
}

#[derive(Debug, clap::Args)]
struct TrackerArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    db: PathBuf,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    #[arg(long = "match", value_enum, default_value = "subset")]
    match_mode: MatchArg,
    #[arg(long, value_enum, default_value = "base")]
    engine: EngineArg,
    /// JSON-lines prediction stream; required by the hybrid engine.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tracked")]
    context: ContextArg,
    /// Ontology file; the built-in restaurant ontology when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl TrackerArgs {
    fn tracker_config(&self) -> TrackerConfig {
        TrackerConfig {
            engine: match self.engine {
                EngineArg::Base => Engine::Base,
                EngineArg::Hybrid => Engine::Hybrid,
            },
            apply_mode: match self.mode {
                ModeArg::Full => ApplyMode::Full,
                ModeArg::Free => ApplyMode::Free,
            },
            match_mode: match self.match_mode {
                MatchArg::Subset => MatchMode::Subset,
                MatchArg::Exactset => MatchMode::ExactSet,
            },
            context_source: match self.context {
                ContextArg::Tracked => ContextSource::Tracked,
                ContextArg::Oracle => ContextSource::Oracle,
            },
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a rule file and report its size.
    Validate {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a rule set over a corpus and write an evaluation report.
    Replay {
        #[command(flatten)]
        tracker: TrackerArgs,
        #[arg(long)]
        out: PathBuf,
        /// Run label; a numeric label is also recorded as the run's seed.
        #[arg(long)]
        seed_label: Option<String>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print every matching decision for one dialogue.
    Trace {
        #[command(flatten)]
        tracker: TrackerArgs,
        #[arg(long)]
        dialogue: String,
    },
    /// Agreement between two rule files.
    Agree {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Draw a seeded subsample of a corpus.
    Sample {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a scripted corpus with its oracle rule set.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        out_corpus: PathBuf,
        #[arg(long)]
        out_rules: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare two groups of seed-aligned reports.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        a: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        b: Vec<PathBuf>,
        #[arg(long)]
        metric: Metric,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Runs the CLI with process stdout/stderr and returns the exit code.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`run_command`], writing to the given streams. `argv[0]` is the
/// program name.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn ontology(path: &Option<PathBuf>) -> Result<Ontology> {
    match path {
        Some(p) => Ontology::load(p),
        None => Ok(Ontology::restaurant()),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_rules(path: &Path, onto: &Ontology, err: &mut dyn Write) -> Result<RuleSet> {
    let (rules, warnings) = RuleSet::load(path, onto)?;
    for w in warnings {
        let _ = writeln!(err, "{}: {w}", path.display());
    }
    Ok(rules)
}

struct Loaded {
    onto: Ontology,
    rules: RuleSet,
    corpus: crate::corpus::Corpus,
    db: RestaurantDb,
    predictions: Predictions,
}

fn load_tracker_inputs(args: &TrackerArgs, err: &mut dyn Write) -> Result<Loaded> {
    let onto = ontology(&args.config)?;
    let rules = load_rules(&args.rules, &onto, err)?;
    let corpus = load_corpus(&args.corpus, &onto)?;
    let db = RestaurantDb::load(&args.db, &onto)?;
    let predictions = match &args.predictions {
        Some(p) => load_predictions(p, &onto)?,
        None => Predictions::new(),
    };
    Ok(Loaded {
        onto,
        rules,
        corpus,
        db,
        predictions,
    })
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match command {
        Command::Validate { rules, config } => {
            let onto = ontology(&config)?;
            let rules = load_rules(&rules, &onto, err)?;
            let _ = writeln!(
                out,
                "{} rules ({} belief, {} action)",
                rules.len(),
                rules.belief_rules.len(),
                rules.action_rules.len()
            );
        }
        Command::Replay {
            tracker,
            out: out_path,
            seed_label,
            jobs,
        } => {
            let inputs = load_tracker_inputs(&tracker, err)?;
            let t = Tracker::new(
                &inputs.rules,
                &inputs.db,
                &inputs.onto,
                tracker.tracker_config(),
            );
            for w in t.warnings() {
                let _ = writeln!(err, "warning: {w}");
            }
            let label = seed_label.clone().unwrap_or_else(|| "run".to_string());
            let run = || t.run_corpus(&inputs.corpus, &inputs.predictions, &label);
            let mut report = match jobs
                .and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok())
            {
                Some(pool) => pool.install(run)?,
                None => run()?,
            };
            report.seed = seed_label.and_then(|s| s.parse().ok());
            write_file(&out_path, &report.to_json())?;
            for m in Metric::ALL {
                let _ = writeln!(out, "{:<10} {:.6}", m.name(), report.metric(m));
            }
            let _ = writeln!(out, "turns      {}", report.turn_count);
        }
        Command::Trace { tracker, dialogue } => {
            let inputs = load_tracker_inputs(&tracker, err)?;
            let d = inputs.corpus.get(&dialogue).ok_or_else(|| {
                Error::schema(
                    tracker.corpus.display().to_string(),
                    format!("no dialogue {dialogue:?}"),
                )
            })?;
            let t = Tracker::new(
                &inputs.rules,
                &inputs.db,
                &inputs.onto,
                tracker.tracker_config(),
            );
            for w in t.warnings() {
                let _ = writeln!(err, "warning: {w}");
            }
            let traces = t.trace_dialogue(d, &inputs.predictions)?;
            let _ = out.write_all(render_trace(&d.id, &traces).as_bytes());
        }
        Command::Agree { a, b, kind, config } => {
            let onto = ontology(&config)?;
            let ra = load_rules(&a, &onto, err)?;
            let rb = load_rules(&b, &onto, err)?;
            let kind = match kind {
                KindArg::Belief => RuleKind::Belief,
                KindArg::Action => RuleKind::Action,
            };
            let _ = writeln!(out, "{:.6}", agr(ra.rules(kind), rb.rules(kind)));
        }
        Command::Sample {
            corpus,
            n,
            seed,
            out: out_path,
            config,
        } => {
            let onto = ontology(&config)?;
            let sample = sample_corpus(&load_corpus(&corpus, &onto)?, n, seed)?;
            write_file(&out_path, &(sample.to_json() + "\n"))?;
            let _ = writeln!(out, "{} dialogues", sample.dialogues.len());
        }
        Command::Gen {
            n,
            seed,
            db,
            out_corpus,
            out_rules,
            config,
        } => {
            let onto = ontology(&config)?;
            let db = RestaurantDb::load(&db, &onto)?;
            let (corpus, rules) = gen_synthetic(n, seed, &db, &onto)?;
            write_file(&out_corpus, &(corpus.to_json() + "\n"))?;
            write_file(&out_rules, &rules.to_source())?;
            let _ = writeln!(
                out,
                "{} dialogues, {} turns, {} rules",
                corpus.dialogues.len(),
                corpus.turn_count(),
                rules.len()
            );
        }
        Command::Compare {
            a,
            b,
            metric,
            config: _,
        } => {
            let load = |paths: &[PathBuf]| -> Result<RunGroup> {
                RunGroup::new(paths.iter().map(EvalReport::load).collect::<Result<_>>()?)
            };
            let (ga, gb) = (load(&a)?, load(&b)?);
            if a.len() != b.len() {
                return Err(Error::RunGroup(format!(
                    "groups are paired by position but have {} and {} reports",
                    a.len(),
                    b.len()
                )));
            }
            let (va, vb) = (ga.values(metric), gb.values(metric));
            let (sa, sb) = (ga.summary(metric), gb.summary(metric));
            let pairs: Vec<(f64, f64)> = va.into_iter().zip(vb).collect();
            let test = sign_test(&pairs)?;
            let _ = writeln!(out, "metric {}", metric.name());
            let _ = writeln!(out, "a {:.6} ± {:.6} (n={})", sa.mean, sa.std, a.len());
            let _ = writeln!(out, "b {:.6} ± {:.6} (n={})", sb.mean, sb.std, b.len());
            let markers = test.markers();
            let _ = writeln!(
                out,
                "sign test: {} wins, {} losses, {} ties, p = {:.6}{}{}",
                test.wins,
                test.losses,
                test.ties,
                test.p_value,
                if markers.is_empty() { "" } else { " " },
                markers
            );
        }
    }
    Ok(())
}
