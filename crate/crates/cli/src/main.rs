use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use certplc_core::certificate::{check, emit};
use certplc_core::lia::LiaOptions;
use certplc_core::model::canonical_text;
use certplc_core::semantics::{ExploreError, ExploreOptions, InitActions, Machine, Scheduler};
use certplc_core::syntax::{parse_formula, parse_model, parse_properties};
use certplc_core::verifier::{
    check_determined_successor, check_guard_unreachable, describe, gen_basic_lemmas, verify_invariant, Determined,
    VerifyOptions, VerifyResult,
};
use certplc_core::{Formula, Property, SfcModel};

#[derive(Parser)]
#[command(name = "certplc", version, about = "Verify and certify invariants of sequential function charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model and print its canonical form.
    Parse {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
    },
    /// Run one execution path.
    Simulate {
        model: PathBuf,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[command(flatten)]
        sem: SemArgs,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
    },
    /// Bounded breadth-first exploration, optionally checking assertions.
    Explore {
        model: PathBuf,
        #[arg(long = "assert", value_name = "FORMULA")]
        asserts: Vec<String>,
        #[command(flatten)]
        sem: SemArgs,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
    },
    /// Prove invariants by induction.
    Verify {
        model: PathBuf,
        #[command(flatten)]
        props: PropArgs,
        /// Also prove that only declared steps and actions are ever active.
        #[arg(long)]
        basic_lemmas: bool,
        /// Prove STEP never active, using the properties as context.
        #[arg(long, value_name = "STEP")]
        unreachable: Option<String>,
        /// Prove that TRIGGER always leads to STEP, using the properties as context.
        #[arg(long, value_name = "STEP", requires = "trigger")]
        successor: Option<String>,
        #[arg(long, value_name = "FORMULA")]
        trigger: Option<String>,
        #[command(flatten)]
        sem: SemArgs,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
    },
    /// Prove one invariant and write its certificate.
    Certify {
        model: PathBuf,
        #[command(flatten)]
        props: PropArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        sem: SemArgs,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
    },
    /// Check a certificate.
    CheckCert {
        cert: PathBuf,
        #[arg(long, value_enum, default_value_t = Report::Text)]
        report: Report,
    },
}

#[derive(Args)]
struct PropArgs {
    /// File of `invariant NAME : always (...);` declarations.
    #[arg(long)]
    prop: Option<PathBuf>,
    /// Only the property with this name.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args, Clone)]
struct SemArgs {
    #[arg(long, default_value_t = 40)]
    depth: usize,
    #[arg(long, default_value_t = 200_000)]
    state_budget: usize,
    #[arg(long, value_enum, default_value_t = Sched::Priority)]
    scheduler: Sched,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Init::FromSteps)]
    init_actions: Init,
    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sched {
    Priority,
    Fixed,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    FromSteps,
    Empty,
}

impl SemArgs {
    fn init(&self) -> InitActions {
        match self.init_actions {
            Init::FromSteps => InitActions::FromSteps,
            Init::Empty => InitActions::Empty,
        }
    }

    fn scheduler(&self) -> Scheduler {
        match self.scheduler {
            Sched::Priority => Scheduler::Priority,
            Sched::Fixed => Scheduler::Fixed,
            Sched::Random => Scheduler::Random(self.seed),
        }
    }

    fn verify_options(&self) -> VerifyOptions {
        VerifyOptions { lia: LiaOptions::default(), init_actions: self.init(), parallel: self.jobs != Some(1) }
    }
}

/// Exit status with the text already written to stdout.
enum Failure {
    /// Refuted, undecided, rejected or inconclusive.
    Negative,
    /// Bad input.
    Usage(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<SfcModel, Failure> {
    parse_model(&read(path)?).map_err(|e| usage(format!("{}:{e}", path.display())))
}

fn load_props(model: &SfcModel, args: &PropArgs) -> Result<Vec<Property>, Failure> {
    let Some(path) = &args.prop else { return Err(usage("--prop is required")) };
    let mut props = parse_properties(&read(path)?, model).map_err(|e| usage(format!("{}:{e}", path.display())))?;
    if let Some(name) = &args.name {
        props.retain(|p| &p.name == name);
        if props.is_empty() {
            return Err(usage(format!("no property named `{name}`")));
        }
    }
    Ok(props)
}

fn emit_report(report: Report, text: &str, json: Json) {
    match report {
        Report::Text => print!("{text}"),
        Report::Json => println!("{}", serde_json::to_string_pretty(&json).expect("serializable report")),
    }
}

fn verdict_json(name: &str, r: &VerifyResult) -> Json {
    match r {
        VerifyResult::Proved(t) => json!({"name": name, "verdict": "Proved", "obligations": t.obligations()}),
        other => json!({"name": name, "verdict": other.verdict(), "detail": describe(other)}),
    }
}

fn verdict_line(name: &str, r: &VerifyResult) -> String {
    match r {
        VerifyResult::Proved(t) => format!("{name}: Proved ({} obligations)\n", t.obligations()),
        other => format!("{name}: {} ({})\n", other.verdict(), describe(other)),
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Parse { model, report } => {
            let m = load_model(&model)?;
            let text = canonical_text(&m);
            emit_report(
                report,
                &text,
                json!({
                    "digest": m.digest(),
                    "steps": m.steps,
                    "initial": m.initial,
                    "actions": m.actions.iter().map(|a| &a.id).collect::<Vec<_>>(),
                    "transitions": m.transitions.len(),
                    "variables": m.vars.iter().map(|v| &v.name).collect::<Vec<_>>(),
                }),
            );
            Ok(())
        }
        Command::Simulate { model, steps, sem, report } => {
            let m = load_model(&model)?;
            let machine = Machine::new(&m).map_err(usage)?.with_init_actions(sem.init());
            let trace = machine.run_trace(sem.scheduler(), steps).map_err(usage)?;
            let json = json!({
                "initial": trace.initial.to_string(),
                "steps": trace.steps.iter().map(|(r, s)| json!({"rule": r.to_string(), "state": s.to_string()})).collect::<Vec<_>>(),
            });
            emit_report(report, &trace.to_string(), json);
            Ok(())
        }
        Command::Explore { model, asserts, sem, report } => {
            let m = load_model(&model)?;
            let formulas: Vec<(String, Formula)> = asserts
                .iter()
                .map(|a| {
                    parse_formula(a, &m).map(|f| (a.clone(), f)).map_err(|e| usage(format!("--assert `{a}`: {e}")))
                })
                .collect::<Result<_, _>>()?;
            let machine = Machine::new(&m).map_err(usage)?.with_init_actions(sem.init());
            let opts = ExploreOptions { depth: sem.depth, state_budget: sem.state_budget };
            let (ex, complete) = match machine.reachable_bounded(opts) {
                Ok(ex) => (ex, true),
                Err(ExploreError::BudgetExceeded { partial, .. }) => (*partial, false),
                Err(e) => return Err(usage(e)),
            };
            let mut text = format!(
                "{} states, depth {}, {}\n",
                ex.states.len(),
                ex.depth.last().copied().unwrap_or(0),
                if !complete {
                    "state budget exceeded"
                } else if ex.saturated {
                    "saturated"
                } else {
                    "depth bound reached"
                }
            );
            let mut checks = Vec::new();
            let mut violated = false;
            for (src, f) in &formulas {
                let v = machine.find_violation(&ex, f).map_err(usage)?;
                match v {
                    Some(s) => {
                        violated = true;
                        writeln!(text, "assert {src}: violated in {s}").unwrap();
                        checks.push(json!({"assert": src, "holds": false, "state": s.to_string()}));
                    }
                    None => {
                        writeln!(text, "assert {src}: holds on all explored states").unwrap();
                        checks.push(json!({"assert": src, "holds": true}));
                    }
                }
            }
            let json = json!({
                "states": ex.states.len(),
                "saturated": ex.saturated,
                "budget_exceeded": !complete,
                "asserts": checks,
            });
            emit_report(report, &text, json);
            if violated || (!complete && !formulas.is_empty()) {
                Err(Failure::Negative)
            } else {
                Ok(())
            }
        }
        Command::Verify { model, props, basic_lemmas, unreachable, successor, trigger, sem, report } => {
            let m = load_model(&model)?;
            let opts = sem.verify_options();
            let props = if props.prop.is_some() { load_props(&m, &props)? } else { Vec::new() };
            if props.is_empty() && !basic_lemmas && unreachable.is_none() && successor.is_none() {
                return Err(usage("nothing to verify: give --prop, --basic-lemmas, --unreachable or --successor"));
            }
            let mut text = String::new();
            let mut results = Vec::new();
            let mut ok = true;
            let mut record = |name: &str, r: &VerifyResult, text: &mut String| {
                ok &= r.is_proved();
                text.push_str(&verdict_line(name, r));
                results.push(verdict_json(name, r));
            };
            if basic_lemmas {
                for (p, r) in gen_basic_lemmas(&m, opts) {
                    record(&p.name, &r, &mut text);
                }
            }
            let context: Vec<Formula> = props.iter().map(|p| p.formula.clone()).collect();
            if unreachable.is_none() && successor.is_none() {
                for p in &props {
                    let r = verify_invariant(&m, &p.formula, opts);
                    record(&p.name, &r, &mut text);
                }
            }
            if let Some(step) = &unreachable {
                let d = check_guard_unreachable(&m, step, &context, opts).map_err(usage)?;
                record(&format!("unreachable {step}"), &d.result, &mut text);
            }
            if let (Some(step), Some(trig)) = (&successor, &trigger) {
                let f = parse_formula(trig, &m).map_err(|e| usage(format!("--trigger: {e}")))?;
                let name = format!("successor {step}");
                let (line, j) = match check_determined_successor(&m, &f, step, &context, opts).map_err(usage)? {
                    Determined::Proved { checked } => {
                        (format!("{name}: Proved ({checked} cases)\n"), json!({"name": name, "verdict": "Proved"}))
                    }
                    Determined::Refuted { transitions, state } => {
                        ok = false;
                        (
                            format!("{name}: Refuted (enabled transitions {transitions:?} in {state})\n"),
                            json!({"name": name, "verdict": "Refuted", "transitions": transitions, "state": state.to_string()}),
                        )
                    }
                    Determined::Undecided(u) => {
                        ok = false;
                        (
                            format!("{name}: Undecided ({u})\n"),
                            json!({"name": name, "verdict": "Undecided", "detail": u.to_string()}),
                        )
                    }
                };
                text.push_str(&line);
                results.push(j);
            }
            emit_report(report, &text, json!({ "results": results }));
            if ok {
                Ok(())
            } else {
                Err(Failure::Negative)
            }
        }
        Command::Certify { model, props, out, sem, report } => {
            let m = load_model(&model)?;
            let opts = sem.verify_options();
            let props = load_props(&m, &props)?;
            let [p] = props.as_slice() else {
                return Err(usage(format!("{} properties given; select one with --name", props.len())));
            };
            let r = verify_invariant(&m, &p.formula, opts);
            let cert = match emit(&m, p, &r, sem.init()) {
                Ok(c) => c.to_text(),
                Err(e) => {
                    let text = format!("{}{e}\n", verdict_line(&p.name, &r));
                    emit_report(report, &text, verdict_json(&p.name, &r));
                    return Err(Failure::Negative);
                }
            };
            match &out {
                Some(path) => {
                    std::fs::write(path, &cert).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                    let text = format!("{}wrote {}\n", verdict_line(&p.name, &r), path.display());
                    let mut j = verdict_json(&p.name, &r);
                    j["certificate"] = json!(path.display().to_string());
                    emit_report(report, &text, j);
                }
                None => print!("{cert}"),
            }
            Ok(())
        }
        Command::CheckCert { cert, report } => {
            let bytes = std::fs::read(&cert).map_err(|e| usage(format!("{}: {e}", cert.display())))?;
            let v = check(&bytes);
            let j = match &v {
                certplc_core::CheckVerdict::Accepted(s) => json!({
                    "verdict": "Accepted", "cases": s.cases, "leaves": s.leaves, "replay_steps": s.replay_steps,
                }),
                certplc_core::CheckVerdict::Rejected { code, path, detail } => json!({
                    "verdict": "Rejected", "code": code.to_string(), "path": path, "detail": detail,
                }),
            };
            emit_report(report, &format!("{v}\n"), j);
            if v.is_accepted() {
                Ok(())
            } else {
                Err(Failure::Negative)
            }
        }
    }
}

fn jobs_of(cmd: &Command) -> Option<usize> {
    match cmd {
        Command::Simulate { sem, .. }
        | Command::Explore { sem, .. }
        | Command::Verify { sem, .. }
        | Command::Certify { sem, .. } => sem.jobs,
        Command::Parse { .. } | Command::CheckCert { .. } => None,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match jobs_of(&cli.command) {
        Some(0) => Err(usage("--jobs must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(usage(e)),
        },
        None => run(cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
