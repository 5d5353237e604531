use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde_json::{json, Value};

use wiredsys::behavior::{Simulate, System};
use wiredsys::contracts::{contract_apply, satisfies, StaticContract};
use wiredsys::dsl::report::{self, Candidate, TrajectoryData};
use wiredsys::dsl::{has_errors, load_model, Diagnostic, Elaborator, Kind, Model};
use wiredsys::security::{run_tests, system_equiv, yoneda_filter};
use wiredsys::Interface;

/// Compositional systems modeling over wiring diagrams.
#[derive(Parser)]
#[command(name = "wiredsys", version)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and typecheck a model.
    Check { file: PathBuf },
    /// Substitute implementing wirings for inner boxes.
    Flatten {
        file: PathBuf,
        #[arg(long)]
        wiring: String,
        /// Levels to open up; all of them by default.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Composite system of a wiring with one behavior per inner box.
    Compose {
        file: PathBuf,
        #[arg(long)]
        wiring: String,
        #[arg(long, value_delimiter = ',', required = true)]
        behaviors: Vec<String>,
    },
    /// Run a behavior or wiring composite on inputs read from CSV.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        system: String,
        /// A state label, or comma-separated coordinates for a linear system.
        #[arg(long)]
        init: String,
        /// CSV with columns in0, in1, ...
        #[arg(long)]
        inputs: Option<PathBuf>,
        #[arg(long)]
        steps: usize,
    },
    /// Composite contract of a wiring with one contract per inner box.
    Contract {
        file: PathBuf,
        #[arg(long)]
        wiring: String,
        #[arg(long, value_delimiter = ',', required = true)]
        contracts: Vec<String>,
    },
    /// Whether a recorded trajectory meets a static or time contract.
    Satisfies {
        file: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        contract: String,
    },
    /// Knowledge-database entries indistinguishable from a target under tests.
    Probe {
        file: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        kb: String,
        #[arg(long, value_delimiter = ',', required = true)]
        tests: Vec<String>,
    },
    /// Apply an attack plan and compare the composites.
    Attack {
        file: PathBuf,
        #[arg(long)]
        plan: String,
        #[arg(long)]
        verify_equiv: bool,
    },
}

/// Exit status for a verification that ran but did not hold.
const FAILED: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn print_diagnostics(file: &Path, ds: &[Diagnostic]) {
    for d in ds {
        eprintln!("{}:{d}", file.display());
    }
}

fn diagnostics_error(ds: Vec<Diagnostic>) -> anyhow::Error {
    let lines: Vec<String> = ds.iter().map(ToString::to_string).collect();
    anyhow!("{}", lines.join("\n"))
}

/// Loads a model for an analysis command. Invalid models stop here with
/// status 2.
fn load(file: &Path) -> Result<std::result::Result<Model, u8>> {
    let text = read(file)?;
    let (model, ds) = load_model(&text);
    print_diagnostics(file, &ds);
    match model {
        Some(m) if !has_errors(&ds) => Ok(Ok(m)),
        _ => {
            eprintln!("{}: model has errors; run `wiredsys check` for details", file.display());
            Ok(Err(FAILED))
        }
    }
}

fn emit(json_mode: bool, value: impl FnOnce() -> Value, text: impl FnOnce() -> String) {
    if json_mode {
        println!("{}", report::to_json(&value()));
    } else {
        print!("{}", text());
    }
}

fn run(cli: &Cli) -> Result<u8> {
    if let Command::Check { file } = &cli.command {
        return check(file, cli.json);
    }
    let file = match &cli.command {
        Command::Check { file }
        | Command::Flatten { file, .. }
        | Command::Compose { file, .. }
        | Command::Simulate { file, .. }
        | Command::Contract { file, .. }
        | Command::Satisfies { file, .. }
        | Command::Probe { file, .. }
        | Command::Attack { file, .. } => file,
    };
    let model = match load(file)? {
        Ok(m) => m,
        Err(code) => return Ok(code),
    };
    let el = Elaborator::new(&model);
    let j = cli.json;
    match &cli.command {
        Command::Check { .. } => unreachable!("handled above"),
        Command::Flatten { wiring, depth, .. } => {
            let flat = el.flatten(wiring, *depth).map_err(diagnostics_error)?;
            emit(j, || report::wiring_json(&flat), || report::wiring_text(&flat));
            Ok(0)
        }
        Command::Compose { wiring, behaviors, .. } => {
            let s = el.compose(wiring, behaviors).map_err(diagnostics_error)?;
            emit(j, || report::system_json(&s), || report::system_text(&s));
            Ok(0)
        }
        Command::Simulate { system, init, inputs, steps, .. } => {
            simulate(&el, system, init, inputs.as_deref(), *steps, j)
        }
        Command::Contract { wiring, contracts, .. } => {
            let flat = el.wiring(wiring).map_err(diagnostics_error)?;
            if contracts.len() != flat.diagram.inner.len() {
                bail!(
                    "wiring `{wiring}` has {} inner boxes, but {} contracts were given",
                    flat.diagram.inner.len(),
                    contracts.len()
                );
            }
            let cs = contracts
                .iter()
                .map(|c| el.contract(c).map_err(diagnostics_error))
                .collect::<Result<Vec<StaticContract>>>()?;
            let out = contract_apply(&flat.diagram, &cs)?;
            emit(j, || report::contract_json(&out), || report::contract_text(&out));
            Ok(0)
        }
        Command::Satisfies { trajectory, contract, .. } => satisfies_cmd(&el, &model, &read(trajectory)?, contract, j),
        Command::Probe { target, kb, tests, .. } => {
            let target_sys = el.system(target).map_err(diagnostics_error)?;
            let kb = el.kb(kb).map_err(diagnostics_error)?;
            let tests = tests.iter().map(|t| el.test(t).map_err(diagnostics_error)).collect::<Result<Vec<_>>>()?;
            let seen = run_tests(&target_sys, &tests)?;
            let cands: Vec<Candidate> = yoneda_filter(&seen, &kb, &tests)
                .into_iter()
                .map(|name| {
                    let entry = kb.get(&name).expect("filter returns entry names");
                    Candidate { bisimilar: system_equiv(entry, &target_sys).ok(), name }
                })
                .collect();
            emit(j, || report::probe_json(&cands), || report::probe_text(&cands));
            Ok(0)
        }
        Command::Attack { plan, verify_equiv, .. } => {
            let plan = el.attack(plan).map_err(diagnostics_error)?;
            let outcome = plan.run()?;
            let verdict = if *verify_equiv { Some(report::attack_verdict(&outcome)?) } else { None };
            emit(
                j,
                || report::attack_json(&plan.name, &outcome, verdict.as_ref()),
                || report::attack_text(&plan.name, &outcome, verdict.as_ref()),
            );
            Ok(0)
        }
    }
}

fn check(file: &Path, json_mode: bool) -> Result<u8> {
    let text = read(file)?;
    let (_, ds) = load_model(&text);
    let bad = has_errors(&ds);
    if json_mode {
        println!("{}", report::to_json(&report::diagnostics_json(&ds)));
    } else {
        for d in &ds {
            println!("{}:{d}", file.display());
        }
        let errors = ds.iter().filter(|d| d.is_error()).count();
        let warnings = ds.len() - errors;
        if bad {
            println!("{}: {errors} error(s), {warnings} warning(s)", file.display());
        } else {
            println!("{}: ok ({warnings} warning(s))", file.display());
        }
    }
    Ok(if bad { FAILED } else { 0 })
}

/// Input rows from a CSV with `in0, in1, ...` columns. Reading stops at the
/// first row whose input cells are all empty.
fn read_inputs(path: &Path, width: usize) -> Result<Vec<Vec<String>>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let header = r.headers()?.clone();
    let cols = (0..width)
        .map(|k| {
            header
                .iter()
                .position(|h| h == format!("in{k}"))
                .ok_or_else(|| anyhow!("{} has no column in{k}", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row: Vec<String> = cols.iter().map(|&c| rec.get(c).unwrap_or("").to_string()).collect();
        if width > 0 && row.iter().all(String::is_empty) {
            break;
        }
        rows.push(row);
    }
    Ok(rows)
}

fn take_steps(rows: Vec<Vec<String>>, steps: usize, width: usize) -> Result<Vec<Vec<String>>> {
    if width == 0 {
        return Ok(vec![Vec::new(); steps]);
    }
    if rows.len() < steps {
        bail!("{steps} steps requested but only {} input rows given", rows.len());
    }
    Ok(rows.into_iter().take(steps).collect())
}

fn csv_json(text: &str) -> Result<Value> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let rows =
        r.records().map(|rec| Ok(rec?.iter().map(str::to_string).collect::<Vec<_>>())).collect::<Result<Vec<_>>>()?;
    Ok(json!({"header": header, "rows": rows}))
}

fn simulate(el: &Elaborator, name: &str, init: &str, inputs: Option<&Path>, steps: usize, j: bool) -> Result<u8> {
    let sys = el.system(name).map_err(diagnostics_error)?;
    let iface = sys.interface().clone();
    let width = match &sys {
        System::Moore(_) => iface.inputs.len(),
        System::Lti(_) => iface.input_dim(),
    };
    let rows = match inputs {
        Some(p) => read_inputs(p, width)?,
        None if width == 0 => Vec::new(),
        None => bail!("system `{name}` has inputs; pass them with --inputs"),
    };
    let rows = take_steps(rows, steps, width)?;
    let text = match &sys {
        System::Moore(m) => {
            let s0 = m
                .state_index(init)
                .ok_or_else(|| anyhow!("`{name}` has no state `{init}`; states are {}", m.states().join(", ")))?;
            let xs = rows
                .iter()
                .enumerate()
                .map(|(t, row)| {
                    row.iter()
                        .zip(&iface.inputs)
                        .map(|(v, p)| {
                            let set = p.as_finite().expect("finite machine");
                            set.index_of(v)
                                .ok_or_else(|| anyhow!("step {t}: `{v}` is not a value of type {}", set.name))
                        })
                        .collect::<Result<Vec<usize>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            report::moore_trajectory_csv(m, &m.simulate(s0, &xs)?)
        }
        System::Lti(l) => {
            let s0 = parse_vector(init, l.state_dim()).context("--init")?;
            let xs = rows
                .iter()
                .enumerate()
                .map(|(t, row)| parse_vector(&row.join(","), width).with_context(|| format!("step {t}")))
                .collect::<Result<Vec<_>>>()?;
            report::lti_trajectory_csv(l, &l.simulate(s0, &xs)?)
        }
    };
    if j {
        println!("{}", report::to_json(&csv_json(&text)?));
    } else {
        print!("{text}");
    }
    Ok(0)
}

/// Comma-separated coordinates; a lone `0` stands for the zero vector.
fn parse_vector(s: &str, n: usize) -> Result<DVector<f64>> {
    if s.trim() == "0" || (n == 0 && s.trim().is_empty()) {
        return Ok(DVector::zeros(n));
    }
    let xs = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| anyhow!("`{p}` is not a number")))
        .collect::<Result<Vec<_>>>()?;
    if xs.len() != n {
        bail!("expected {n} coordinates, got {}", xs.len());
    }
    Ok(DVector::from_vec(xs))
}

fn satisfies_cmd(el: &Elaborator, model: &Model, csv_text: &str, name: &str, j: bool) -> Result<u8> {
    let (holds, first_violation, iface): (bool, Option<usize>, Interface);
    if model.find(Kind::Contract, name).is_some() {
        let c = el.contract(name).map_err(diagnostics_error)?;
        let t = report::parse_trajectory(csv_text, c.interface())?;
        let s = match &t {
            TrajectoryData::Finite(t) => satisfies(t, &c)?,
            TrajectoryData::Linear(t) => satisfies(t, &c)?,
        };
        (holds, first_violation, iface) = (s.holds, s.first_violation, c.interface().clone());
    } else if model.find(Kind::TimeContract, name).is_some() {
        let c = el.time_contract(name).map_err(diagnostics_error)?;
        let t = report::parse_trajectory(csv_text, c.interface())?;
        first_violation = report::time_contract_violation(&c, &t)?;
        (holds, iface) = (first_violation.is_none(), c.interface().clone());
    } else {
        bail!("the model has no contract or time contract named `{name}`");
    }
    emit(
        j,
        || json!({"contract": name, "box": iface.name, "holds": holds, "first_violation": first_violation}),
        || match (holds, first_violation) {
            (true, _) => format!("trajectory satisfies `{name}`\n"),
            (false, Some(k)) => format!("trajectory violates `{name}` at step {k}\n"),
            (false, None) => format!("trajectory violates `{name}`\n"),
        },
    );
    Ok(if holds { 0 } else { FAILED })
}
