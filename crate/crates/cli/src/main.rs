use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use malcat_core::congruence::{all_congruences, Congruence, DEFAULT_LATTICE_BUDGET};
use malcat_core::connector::{self, DEFAULT_SEARCH_BUDGET};
use malcat_core::constructions::{decompose, hypotheses};
use malcat_core::extensions::{self, Action, GroupView, DEFAULT_COCHAIN_BUDGET};
use malcat_core::io::{self, Report};
use malcat_core::maltsev_ops::{tally_maltsev, OpProperty, TernaryOp};
use malcat_core::power::DEFAULT_CLOSURE_BUDGET;
use malcat_core::suite::{self, SuiteBudget};
use malcat_core::term_search::{self, IdentityFamily, Verdict};
use malcat_core::{Error, FiniteAlgebra, Result};

#[derive(Parser)]
#[command(name = "malcat", version, about = "Finite algebra workbench: Mal'tsev conditions, commutators, extensions")]
struct Cli {
    /// Element/step budget for closures and searches.
    #[arg(long, global = true)]
    budget: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1000)]
    samples: usize,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit JSON (the only output format).
    #[arg(long, global = true, default_value_t = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Carrier size and signature.
    Info { file: PathBuf },
    /// The congruence lattice.
    Congruences { file: PathBuf },
    /// Search for a Mal'tsev term.
    MaltsevTerm { file: PathBuf },
    /// Search for the two quaternary Goursat terms.
    GoursatTerms { file: PathBuf },
    /// Check RS = SR (and RSR = SRS) for all congruence pairs.
    Permutability { file: PathBuf },
    /// Smith commutator [R, S].
    Commutator {
        file: PathBuf,
        #[arg(long)]
        r: String,
        #[arg(long)]
        s: String,
    },
    /// Connector between R and S.
    Connector {
        file: PathBuf,
        #[arg(long)]
        r: String,
        #[arg(long)]
        s: String,
    },
    /// Direction of an affine algebra.
    Direction {
        file: PathBuf,
        /// Ternary operation symbol; defaults to the connector of (∇, ∇).
        #[arg(long)]
        op: Option<String>,
    },
    /// Decompose X as X/R × X/S.
    Decompose {
        file: PathBuf,
        #[arg(long)]
        r: String,
        #[arg(long)]
        s: String,
    },
    /// Term search, permutability and sampled relations on A and A².
    Check { file: PathBuf },
    /// Random split squares and 3x3 diagrams.
    CheckSquares {
        file: PathBuf,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 50)]
        diagrams: usize,
    },
    /// Baer sum of two extensions.
    BaerSum { e1: PathBuf, e2: PathBuf },
    /// Extension classes of Q by A for an action.
    ExtClasses {
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        a: PathBuf,
        /// `trivial` or an action file.
        #[arg(long, default_value = "trivial")]
        action: String,
    },
    /// Enumerate all Mal'tsev operations on n elements.
    EnumMaltsev {
        #[arg(long)]
        size: usize,
        /// Comma-separated: assoc, autonomous, cancellation, symmetry.
        #[arg(long, default_value = "assoc,autonomous,cancellation")]
        check: String,
    },
}

/// Output plus exit status for a successful run.
struct Outcome {
    body: Value,
    seeded: bool,
    pass: bool,
    /// Printed to stderr after the report when `pass` is false.
    error: Option<Error>,
}

impl Outcome {
    fn ok(body: Value) -> Self {
        Outcome {
            body,
            seeded: false,
            pass: true,
            error: None,
        }
    }

    fn verdict(body: Value, pass: bool) -> Self {
        Outcome {
            body,
            seeded: false,
            pass,
            error: None,
        }
    }

    fn seeded(mut self) -> Self {
        self.seeded = true;
        self
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        e if e.is_budget() => 3,
        Error::HypothesisFailed { .. }
        | Error::NoLeastElement
        | Error::NonMaltsevAmbiguity
        | Error::InternalAxiomFailure(_)
        | Error::GroupAxiomFailure(_) => 1,
        _ => 2,
    }
}

fn emit_error(err: &Error) {
    eprintln!("{}", serde_json::to_string(&io::error_json(err)).expect("serializes"));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let obj = json!({"error": "UsageError", "message": e.to_string().trim_end()});
            eprintln!("{}", serde_json::to_string(&obj).expect("serializes"));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            emit_error(&Error::Validation(format!("--threads: {e}")));
            return ExitCode::from(2);
        }
    }
    let echo: Vec<String> = std::env::args().skip(1).collect();
    match run(&cli) {
        Ok(out) => {
            let report = Report::new(echo, out.seeded.then_some(cli.seed), out.body);
            print!("{}", report.render());
            if let Some(err) = &out.error {
                emit_error(err);
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(out.error.as_ref().map_or(1, exit_code))
            }
        }
        Err(err) => {
            emit_error(&err);
            ExitCode::from(exit_code(&err))
        }
    }
}

fn load(path: &Path) -> Result<Arc<FiniteAlgebra>> {
    Ok(Arc::new(io::parse_algebra(path)?))
}

fn load_group(path: &Path) -> Result<GroupView> {
    GroupView::new(load(path)?).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

fn verdict_json<T>(v: &Verdict<T>, some: impl FnOnce(&T) -> Value) -> Value {
    match v {
        Verdict::Some(t) => some(t),
        Verdict::None => json!({"verdict": "none"}),
        Verdict::Budget(b) => json!({"verdict": "budget", "budget": b}),
    }
}

fn budget_error<T>(v: &Verdict<T>) -> Option<Error> {
    match v {
        Verdict::Budget(b) => Some(Error::ClosureBudgetExceeded { budget: *b }),
        _ => None,
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let closure_budget = cli.budget.unwrap_or(DEFAULT_CLOSURE_BUDGET);
    let search_budget = cli.budget.unwrap_or(DEFAULT_SEARCH_BUDGET);
    let lattice_budget = cli.budget.unwrap_or(DEFAULT_LATTICE_BUDGET);
    let suite_budget = SuiteBudget {
        closure: closure_budget,
        lattice: lattice_budget,
    };
    match &cli.command {
        Command::Info { file } => {
            let alg = load(file)?;
            let ops: Vec<Value> = (0..alg.op_count())
                .map(|op| json!({"symbol": alg.symbol(op), "arity": alg.arity(op)}))
                .collect();
            let group = GroupView::new(alg.clone()).ok();
            Ok(Outcome::ok(json!({
                "name": alg.name(),
                "size": alg.size(),
                "operations": ops,
                "group": group.is_some(),
                "abelian_group": group.is_some_and(|g| g.is_abelian()),
            })))
        }
        Command::Congruences { file } => {
            let alg = load(file)?;
            let lattice = all_congruences(&alg, lattice_budget)?;
            let names: Vec<String> = lattice.iter().map(|c| c.partition().to_string()).collect();
            Ok(Outcome::ok(json!({"count": names.len(), "congruences": names})))
        }
        Command::MaltsevTerm { file } => {
            let alg = load(file)?;
            let v = term_search::maltsev_verdict(&alg, closure_budget)?;
            let mut check = true;
            let body = verdict_json(&v, |w| {
                check = term_search::verify_witness(&alg, w, IdentityFamily::Maltsev).unwrap_or(false);
                json!({"verdict": "some", "term": w.term.to_string(), "table_check": check})
            });
            Ok(Outcome {
                error: budget_error(&v),
                pass: check && !matches!(v, Verdict::Budget(_)),
                ..Outcome::ok(body)
            })
        }
        Command::GoursatTerms { file } => {
            let alg = load(file)?;
            let v = term_search::goursat_verdict(&alg, closure_budget)?;
            let mut check = true;
            let body = verdict_json(&v, |(p, q)| {
                check = term_search::verify_goursat_pair(&alg, p, q).unwrap_or(false);
                json!({"verdict": "some", "p": p.term.to_string(), "q": q.term.to_string(), "table_check": check})
            });
            Ok(Outcome {
                error: budget_error(&v),
                pass: check && !matches!(v, Verdict::Budget(_)),
                ..Outcome::ok(body)
            })
        }
        Command::Permutability { file } => {
            let alg = load(file)?;
            let two = suite::permutability(&alg, lattice_budget)?;
            let lattice = all_congruences(&alg, lattice_budget)?;
            let mut three = None;
            'outer: for (i, a) in lattice.iter().enumerate() {
                for b in &lattice[i + 1..] {
                    if !a.three_permutes_with(b)? {
                        three = Some(json!({"r": a.partition().to_string(), "s": b.partition().to_string()}));
                        break 'outer;
                    }
                }
            }
            Ok(Outcome::ok(json!({
                "congruences": two.congruences,
                "pairs": two.pairs,
                "permute": two.all_permute,
                "permute_counterexample": two.counterexample.map(|(r, s)| json!({"r": r, "s": s})),
                "three_permute": three.is_none(),
                "three_permute_counterexample": three,
            })))
        }
        Command::Commutator { file, r, s } => {
            let alg = load(file)?;
            let (rc, sc) = (Congruence::parse(alg.clone(), r)?, Congruence::parse(alg.clone(), s)?);
            let comm = connector::smith_commutator(&alg, &rc, &sc, search_budget)?;
            let oracle = connector::commutator_via_delta(&alg, &rc, &sc)?;
            let agree = comm == oracle;
            Ok(Outcome::verdict(
                json!({
                    "r": rc.partition().to_string(),
                    "s": sc.partition().to_string(),
                    "commutator": comm.partition().to_string(),
                    "delta_oracle": oracle.partition().to_string(),
                    "agree": agree,
                }),
                agree,
            ))
        }
        Command::Connector { file, r, s } => {
            let alg = load(file)?;
            let (rc, sc) = (Congruence::parse(alg.clone(), r)?, Congruence::parse(alg.clone(), s)?);
            let span = connector::build_span(&alg, &rc, &sc)?;
            let found = connector::find_connector(&span, search_budget)?;
            let verified = found.as_ref().map(|c| connector::verify_connector(c).is_ok());
            Ok(Outcome::verdict(
                json!({
                    "r": rc.partition().to_string(),
                    "s": sc.partition().to_string(),
                    "triples": span.len(),
                    "exists": found.is_some(),
                    "table": found.as_ref().map(|c| c.table()),
                    "verified": verified,
                }),
                verified.unwrap_or(true),
            ))
        }
        Command::Direction { file, op } => {
            let alg = load(file)?;
            let p = match op {
                Some(sym) => TernaryOp::of_algebra(&alg, sym)?,
                None => {
                    let nabla = Congruence::nabla(alg.clone());
                    let span = connector::build_span(&alg, &nabla, &nabla)?;
                    connector::find_connector(&span, search_budget)?
                        .and_then(|c| c.as_ternary())
                        .ok_or(Error::NotInternalOperation)?
                }
            };
            let d = connector::direction(&alg, &p)?;
            let n = alg.size();
            let q: Vec<&[u32]> = d.q.chunks(n.max(1)).collect();
            Ok(Outcome::ok(json!({
                "group": io::algebra_to_json(&d.group),
                "q": q,
                "chasles": d.chasles.partition().to_string(),
            })))
        }
        Command::Decompose { file, r, s } => {
            let alg = load(file)?;
            let (rc, sc) = (Congruence::parse(alg.clone(), r)?, Congruence::parse(alg.clone(), s)?);
            let hyps: serde_json::Map<String, Value> = hypotheses(&rc, &sc)?
                .into_iter()
                .map(|(h, ok)| (h.to_string(), ok.into()))
                .collect();
            match decompose(&alg, &rc, &sc) {
                Ok(d) => Ok(Outcome::ok(json!({
                    "hypotheses": hyps,
                    "decomposed": true,
                    "iso": d.iso.map,
                    "left": io::algebra_to_json(&d.left),
                    "right": io::algebra_to_json(&d.right),
                }))),
                Err(err @ Error::HypothesisFailed { which }) => Ok(Outcome {
                    error: Some(err.clone()),
                    ..Outcome::verdict(
                        json!({"hypotheses": hyps, "decomposed": false, "failed": which.to_string()}),
                        false,
                    )
                }),
                Err(e) => Err(e),
            }
        }
        Command::Check { file } => {
            let alg = load(file)?;
            let r = suite::run_check_suite(&alg, cli.seed, cli.samples, suite_budget)?;
            Ok(Outcome::verdict(r.to_json(), r.pass()).seeded())
        }
        Command::CheckSquares { file, count, diagrams } => {
            let alg = load(file)?;
            let r = suite::check_squares(&alg, cli.seed, *count, *diagrams, suite_budget)?;
            Ok(Outcome::verdict(r.to_json(), r.pass()).seeded())
        }
        Command::BaerSum { e1, e2 } => {
            let (e1, e2) = (io::parse_extension(e1)?, io::parse_extension(e2)?);
            let sum = extensions::baer_sum(&e1, &e2)?;
            let c = extensions::cocycle_oracle(&sum)?;
            let rows: Vec<&[u32]> = c.table.chunks(c.q.size().max(1)).collect();
            Ok(Outcome::ok(json!({
                "sum": io::extension_to_json(&sum),
                "action": c.action.to_json(),
                "cocycle": rows,
            })))
        }
        Command::ExtClasses { q, a, action } => {
            let (q, a) = (load_group(q)?, load_group(a)?);
            let act = if action == "trivial" {
                Action::trivial(&q, &a)
            } else {
                io::parse_action(&q, &a, action)?
            };
            let classes = extensions::ext_classes(&q, &a, &act, cli.budget.unwrap_or(DEFAULT_COCHAIN_BUDGET))?;
            Ok(Outcome::ok(classes.to_json()))
        }
        Command::EnumMaltsev { size, check } => {
            let names: Vec<&str> = check.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            for name in &names {
                let known = matches!(*name, "assoc" | "autonomous" | "cancellation" | "symmetry")
                    || OpProperty::parse(name).is_some();
                if !known {
                    return Err(Error::Validation(format!("unknown check `{name}`")));
                }
            }
            let tally = tally_maltsev(*size)?;
            let mut failures = serde_json::Map::new();
            for name in &names {
                let exceptions = match *name {
                    "assoc" => tally.assoc_exceptions,
                    "autonomous" => tally.autonomous_exceptions,
                    "cancellation" => tally.cancellation_exceptions,
                    "symmetry" => tally.symmetry_exceptions,
                    _ => 0,
                };
                failures.insert(name.to_string(), exceptions.into());
            }
            let pass = failures.values().all(|v| v.as_u64() == Some(0));
            Ok(Outcome::verdict(
                json!({
                    "tally": serde_json::to_value(&tally).expect("tally serializes"),
                    "exceptions": failures,
                    "pass": pass,
                }),
                pass,
            ))
        }
    }
}
