//! Command-line front end. Every subcommand prints one canonical JSON
//! document on stdout. Exit status: 0 when the property holds or the value
//! was computed, 1 when it fails or a counterexample was found, 2 on bad
//! input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qdes::automata::Automaton;
use qdes::blm::{compile_mm_to_rblm, compile_qfac_to_rblm};
use qdes::composition::{parallel_classical, parallel_mo, parallel_qfac, ClassicalMatrixAutomaton};
use qdes::equivalence::{equiv_rblm, k_equiv_bruteforce, DEFAULT_EQUIV_TOL};
use qdes::fixtures::{self, AfSearch};
use qdes::io;
use qdes::language::Reindexed;
use qdes::supervisory::{
    check_controllability_exhaustive, check_decision_preconditions, check_marking_conditions, cutpoint_member,
    decide_controllability, find_blocking, synthesize_supervisor, ClosedLoop, ControlSpec, ControllabilityVerdict,
    QfaModel, Supervisor,
};
use qdes::{Alphabet, QdesError, QuantumLanguage, Qfac, Result};

/// Environment variable overriding the default numerical tolerance.
const TOL_ENV: &str = "QDES_TOL";

#[derive(Parser)]
#[command(name = "qdes", version, about = "Quantum discrete event systems toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a document's invariants.
    Validate { file: PathBuf },
    /// Acceptance probability of a word.
    Prob {
        file: PathBuf,
        word: String,
        /// Recompute through every available evaluation form and compare.
        #[arg(long)]
        model_check: bool,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Decide whether two automata have the same word function.
    Equiv {
        file1: PathBuf,
        file2: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        /// Also compare every word up to this length.
        #[arg(long)]
        brute_k: Option<usize>,
    },
    /// Parallel composition.
    Compose {
        file1: PathBuf,
        file2: PathBuf,
        /// Classical composition of two DFAs over possibly different alphabets.
        #[arg(long)]
        classical: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact controllability decision for a target against a plant.
    DecideControllability {
        plant: PathBuf,
        target: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        uncontrollable: Vec<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// Cross-check against brute force over words up to this length.
        #[arg(long)]
        oracle_horizon: Option<usize>,
    },
    /// Step the synthesized supervisor along a word.
    SimulateLoop {
        plant: PathBuf,
        target: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        uncontrollable: Vec<String>,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = fixtures::EXAMPLE_LAMBDA)]
        lambda: f64,
    },
    /// Marking conditions and nonblocking for a marked target.
    CheckMarking {
        plant: PathBuf,
        spec: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        horizon: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        uncontrollable: Vec<String>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Build a fixture automaton.
    Example {
        #[arg(value_enum)]
        which: Fixture,
        /// Size parameter; the modulus for `af-modp`.
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = fixtures::EXAMPLE_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = fixtures::EXAMPLE_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = fixtures::DEFAULT_SEED)]
        seed: u64,
        /// Emit the control target for the fixture instead of the plant.
        #[arg(long)]
        target: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Number of states of the minimal equivalent DFA.
    MinimizeDfa { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Eg1,
    Egadd,
    Eg2,
    AfModp,
}

/// A result document and whether the checked property holds.
struct Report {
    doc: Value,
    holds: bool,
}

impl Report {
    fn computed(doc: Value) -> Self {
        Report { doc, holds: true }
    }
}

fn default_tol() -> Result<f64> {
    match std::env::var(TOL_ENV) {
        Ok(s) => s
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|t| t.is_finite() && *t >= 0.0)
            .ok_or_else(|| QdesError::InvalidParameter(format!("{TOL_ENV}={s} is not a tolerance"))),
        Err(_) => Ok(DEFAULT_EQUIV_TOL),
    }
}

fn tol_or_default(t: Option<f64>) -> Result<f64> {
    match t {
        Some(t) if !(t.is_finite() && t >= 0.0) => Err(QdesError::InvalidParameter(format!("tolerance {t}"))),
        Some(t) => Ok(t),
        None => default_tol(),
    }
}

fn load_model(path: &Path) -> Result<QfaModel> {
    Ok(io::load(path)?.into())
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable result")
}

fn validate(file: &Path) -> Result<Report> {
    let v = io::parse_json(&std::fs::read_to_string(file)?)?;
    match io::from_value(&v) {
        Ok(a) => Ok(Report::computed(json!({
            "valid": true,
            "kind": a.kind(),
            "alphabet": a.alphabet().symbols(),
        }))),
        Err(QdesError::Invalid(vs)) => Ok(Report {
            doc: json!({ "valid": false, "violations": violations(&vs) }),
            holds: false,
        }),
        Err(e) => Err(e),
    }
}

fn violations(vs: &[qdes::Violation]) -> Value {
    vs.iter()
        .map(|v| json!({ "kind": v.kind.to_string(), "component": v.component, "detail": v.detail }))
        .collect()
}

fn prob(file: &Path, text: &str, model_check: bool, tol: Option<f64>) -> Result<Report> {
    let a = io::load(file)?;
    let w = a.alphabet().parse_word(text)?;
    let idx = a.alphabet().encode(&w)?;
    let value = match &a {
        Automaton::Rblm(b) => b.eval(&w)?,
        other => QfaModel::from(other.clone()).eval(&w)?,
    };
    let mut doc = json!({ "kind": a.kind(), "word": w, "value": value });
    if !model_check {
        return Ok(Report::computed(doc));
    }
    let tol = tol_or_default(tol)?;
    let forms: Vec<(&str, f64)> = match &a {
        Automaton::Mm(m) => vec![
            ("running", m.accept_prob_running(&idx)),
            ("prefixwise", m.accept_prob_prefixwise(&idx)),
            ("bilinear", compile_mm_to_rblm(m)?.eval(&w)?),
        ],
        Automaton::Qfac(q) => vec![("direct", q.prob(&idx)), ("bilinear", compile_qfac_to_rblm(q)?.eval(&w)?)],
        Automaton::Mo(m) => vec![
            ("direct", m.prob(&idx)),
            ("bilinear", compile_qfac_to_rblm(&Qfac::from_mo(m))?.eval(&w)?),
        ],
        Automaton::Dfa(d) => vec![
            ("direct", d.prob(&idx)),
            ("bilinear", compile_qfac_to_rblm(&d.to_qfac())?.eval(&w)?),
        ],
        Automaton::Rblm(b) => vec![("direct", b.eval(&w)?)],
    };
    let gap = forms.iter().map(|(_, x)| (x - value).abs()).fold(0.0, f64::max);
    let agree = gap <= tol;
    doc["forms"] = forms.iter().map(|(k, x)| ((*k).to_string(), json!(x))).collect::<serde_json::Map<_, _>>().into();
    doc["max_gap"] = json!(gap);
    doc["agree"] = json!(agree);
    Ok(Report { doc, holds: agree })
}

fn equiv(f1: &Path, f2: &Path, tol: Option<f64>, brute_k: Option<usize>) -> Result<Report> {
    let tol = tol_or_default(tol)?;
    let a = load_model(f1)?;
    let b = load_model(f2)?;
    let b1 = a.compile()?;
    let b2 = b.compile()?.aligned_to(b1.alphabet())?;
    let verdict = equiv_rblm(&b1, &b2, tol)?;
    let mut doc = to_json(&verdict);
    if let Some(k) = brute_k {
        let brute = k_equiv_bruteforce(&b1, &b2, k, tol)?;
        doc["brute_force"] = json!({
            "k": k,
            "equivalent": brute.equivalent,
            "counterexample": brute.counterexample,
        });
    }
    Ok(Report {
        holds: verdict.equivalent,
        doc,
    })
}

fn lift_qfac(a: &Automaton) -> Result<Qfac> {
    match a {
        Automaton::Qfac(q) => Ok(q.clone()),
        Automaton::Mo(m) => Ok(Qfac::from_mo(m)),
        Automaton::Dfa(d) => Ok(d.to_qfac()),
        other => Err(QdesError::InvalidParameter(format!(
            "{} automata have no tensor composition",
            other.kind()
        ))),
    }
}

fn compose(f1: &Path, f2: &Path, classical: bool, output: Option<&Path>) -> Result<Report> {
    let a = io::load(f1)?;
    let b = io::load(f2)?;
    let composed = if classical {
        let (Automaton::Dfa(d1), Automaton::Dfa(d2)) = (&a, &b) else {
            return Err(QdesError::InvalidParameter("--classical needs two DFAs".into()));
        };
        let g = parallel_classical(
            &ClassicalMatrixAutomaton::from_dfa(d1),
            &ClassicalMatrixAutomaton::from_dfa(d2),
        );
        Automaton::Dfa(g.to_dfa().expect("composition of DFAs is deterministic"))
    } else {
        match (&a, &b) {
            (Automaton::Mo(m1), Automaton::Mo(m2)) => Automaton::Mo(parallel_mo(m1, m2)?),
            _ => Automaton::Qfac(parallel_qfac(&lift_qfac(&a)?, &lift_qfac(&b)?)?),
        }
    };
    if let Some(path) = output {
        io::save(&composed, path)?;
    }
    Ok(Report::computed(io::to_value(&composed)))
}

fn spec_for(alphabet: &Alphabet, uncontrollable: &[String], lambda: f64) -> Result<ControlSpec> {
    ControlSpec::new(alphabet.clone(), uncontrollable, lambda)
}

fn counterexample(v: &ControllabilityVerdict) -> Value {
    match v {
        ControllabilityVerdict::Holds => Value::Null,
        ControllabilityVerdict::CounterexampleAt { word, sigma, lhs, rhs } => {
            json!({ "word": word, "sigma": sigma, "lhs": lhs, "rhs": rhs })
        }
    }
}

fn decide(
    plant: &Path,
    target: &Path,
    uncontrollable: &[String],
    tol: Option<f64>,
    oracle_horizon: Option<usize>,
) -> Result<Report> {
    let tol = tol_or_default(tol)?;
    let p = load_model(plant)?;
    let t = load_model(target)?;
    // The cut-point plays no part in the decision.
    let spec = spec_for(p.alphabet(), uncontrollable, fixtures::EXAMPLE_LAMBDA)?;
    let verdict = decide_controllability(&t, &p, &spec, tol)?;
    let mut doc = json!({ "holds": verdict.holds(), "counterexample": counterexample(&verdict) });
    if let Some(h) = oracle_horizon {
        let tr = Reindexed::new(&t, spec.alphabet().clone())?;
        let oracle = check_controllability_exhaustive(&tr, &p, &spec, h, tol)?;
        let pre = check_decision_preconditions(&tr, &p, &spec, h, tol)?;
        doc["oracle"] = json!({
            "horizon": h,
            "holds": oracle.holds(),
            "counterexample": counterexample(&oracle),
            "agrees": oracle.holds() == verdict.holds(),
            "precondition_failure": pre.as_ref().map(to_json),
        });
    }
    Ok(Report {
        holds: verdict.holds(),
        doc,
    })
}

fn simulate(plant: &Path, target: &Path, uncontrollable: &[String], text: &str, lambda: f64) -> Result<Report> {
    let p = load_model(plant)?;
    let t = load_model(target)?;
    let alphabet = p.alphabet().clone();
    let spec = spec_for(&alphabet, uncontrollable, lambda)?;
    let tr = Reindexed::new(&t, alphabet.clone())?;
    let w = alphabet.parse_word(text)?;
    let idx = alphabet.encode(&w)?;
    let sup = synthesize_supervisor(&p, &tr, &spec)?;
    let cl = ClosedLoop::new(&p, sup)?;
    let entry = |k: usize| {
        let v = cl.eval_indices(&idx[..k]);
        json!({
            "prefix": alphabet.decode(&idx[..k]),
            "closed_loop": v,
            "plant": p.prob(&idx[..k]),
            "target": tr.prob(&idx[..k]),
            "in_cutpoint_language": v > lambda,
        })
    };
    let steps: Vec<Value> = (0..idx.len())
        .map(|k| {
            json!({
                "prefix": alphabet.decode(&idx[..k]),
                "sigma": alphabet.symbol(idx[k]),
                "controllable": !spec.is_uncontrollable(idx[k]),
                "enable": cl.supervisor().enable(&idx[..k], idx[k]),
            })
        })
        .collect();
    let prefixes: Vec<Value> = (0..=idx.len()).map(entry).collect();
    let member = cutpoint_member(&cl, &w, lambda)?;
    Ok(Report::computed(json!({
        "word": w,
        "lambda": lambda,
        "steps": steps,
        "prefixes": prefixes,
        "in_cutpoint_language": member,
    })))
}

#[allow(clippy::too_many_arguments)]
fn check_marking(
    plant: &Path,
    spec_file: &Path,
    lambda: f64,
    rho: f64,
    horizon: usize,
    uncontrollable: &[String],
    tol: Option<f64>,
) -> Result<Report> {
    let tol = tol_or_default(tol)?;
    let p = load_model(plant)?;
    let k = load_model(spec_file)?;
    let spec = spec_for(p.alphabet(), uncontrollable, lambda)?.with_rho(rho)?;
    let kr = Reindexed::new(&k, spec.alphabet().clone())?;
    let verdict = check_marking_conditions(&kr, &p, &spec, horizon, tol)?;
    let sup = synthesize_supervisor(&p, &kr, &spec)?;
    let cl = ClosedLoop::new(&p, sup)?;
    let blocking = find_blocking(&cl, lambda, rho, horizon, tol)?;
    let holds = verdict.holds() && blocking.is_none();
    Ok(Report {
        holds,
        doc: json!({
            "horizon": horizon,
            "marking_conditions_hold": verdict.holds(),
            "marking": to_json(&verdict),
            "nonblocking": blocking.is_none(),
            "blocking_witness": blocking.as_ref().map(to_json),
        }),
    })
}

struct ExampleArgs<'a> {
    which: Fixture,
    n: usize,
    epsilon: f64,
    lambda: f64,
    seed: u64,
    target: bool,
    output: Option<&'a Path>,
}

fn example(args: ExampleArgs<'_>) -> Result<Report> {
    let ExampleArgs {
        which,
        n,
        epsilon,
        lambda,
        seed,
        target,
        output,
    } = args;
    let search = AfSearch {
        seed,
        ..AfSearch::default()
    };
    let (automaton, mut doc) = match which {
        Fixture::Eg1 | Fixture::Egadd => {
            let f = match which {
                Fixture::Eg1 => fixtures::build_eg1_with(n, epsilon, &search)?,
                _ => fixtures::build_egadd_with(n, epsilon, &search)?,
            };
            let doc = json!({
                "N": n,
                "classical_states": f.automaton.classical_states(),
                "dim": f.automaton.dim(),
                "certificate": to_json(&f.certificate),
            });
            let a = if target {
                let dead = match which {
                    Fixture::Eg1 => 2 * n + 1,
                    _ => n + 1,
                };
                fixtures::build_spec_variant(&f.automaton, dead)?
            } else {
                f.automaton
            };
            (Automaton::Qfac(a), doc)
        }
        Fixture::Eg2 => {
            let (lo, hi) = fixtures::eg2_interval(n, lambda);
            let mut m = fixtures::build_eg2(n, lambda)?;
            if target {
                m = fixtures::build_eg2_spec(&m)?;
            }
            let doc = json!({ "N": n, "lambda": lambda, "r": fixtures::eg2_r(n, lambda), "r_interval": [lo, hi] });
            (Automaton::Mm(m), doc)
        }
        Fixture::AfModp => {
            if target {
                return Err(QdesError::InvalidParameter("af-modp has no control target".into()));
            }
            let (m, cert) = fixtures::build_af_modp_certified(n as u64, epsilon, &search)?;
            let doc = json!({ "p": n, "dim": m.dim(), "certificate": to_json(&cert) });
            (Automaton::Mo(m), doc)
        }
    };
    doc["kind"] = json!(automaton.kind());
    doc["target"] = json!(target);
    doc["seed"] = json!(seed);
    match output {
        Some(path) => {
            io::save(&automaton, path)?;
            doc["file"] = json!(path.display().to_string());
        }
        None => doc["automaton"] = io::to_value(&automaton),
    }
    Ok(Report::computed(doc))
}

fn minimize(file: &Path) -> Result<Report> {
    match io::load(file)? {
        Automaton::Dfa(d) => Ok(Report::computed(json!({
            "states": d.states(),
            "minimal_states": d.minimal_size(),
        }))),
        other => Err(QdesError::InvalidParameter(format!("expected a dfa, found {}", other.kind()))),
    }
}

fn run(cli: Cli) -> Result<Report> {
    match cli.command {
        Command::Validate { file } => validate(&file),
        Command::Prob {
            file,
            word,
            model_check,
            tol,
        } => prob(&file, &word, model_check, tol),
        Command::Equiv {
            file1,
            file2,
            tol,
            brute_k,
        } => equiv(&file1, &file2, tol, brute_k),
        Command::Compose {
            file1,
            file2,
            classical,
            output,
        } => compose(&file1, &file2, classical, output.as_deref()),
        Command::DecideControllability {
            plant,
            target,
            uncontrollable,
            tol,
            oracle_horizon,
        } => decide(&plant, &target, &uncontrollable, tol, oracle_horizon),
        Command::SimulateLoop {
            plant,
            target,
            uncontrollable,
            word,
            lambda,
        } => simulate(&plant, &target, &uncontrollable, &word, lambda),
        Command::CheckMarking {
            plant,
            spec,
            lambda,
            rho,
            horizon,
            uncontrollable,
            tol,
        } => check_marking(&plant, &spec, lambda, rho, horizon, &uncontrollable, tol),
        Command::Example {
            which,
            n,
            epsilon,
            lambda,
            seed,
            target,
            output,
        } => example(ExampleArgs {
            which,
            n,
            epsilon,
            lambda,
            seed,
            target,
            output: output.as_deref(),
        }),
        Command::MinimizeDfa { file } => minimize(&file),
    }
}

fn error_doc(e: &QdesError) -> Value {
    let mut doc = json!({ "error": e.to_string() });
    match e {
        QdesError::Parse { line, column, .. } => {
            doc["line"] = json!(line);
            doc["column"] = json!(column);
        }
        QdesError::Invalid(vs) => doc["violations"] = violations(vs),
        _ => {}
    }
    doc
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            print!("{}", io::canonical(&report.doc));
            ExitCode::from(if report.holds { 0 } else { 1 })
        }
        Err(e) => {
            eprint!("{}", io::canonical(&error_doc(&e)));
            ExitCode::from(2)
        }
    }
}
