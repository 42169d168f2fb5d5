use std::error::Error;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use deltaguard::binder::binding_dump;
use deltaguard::contract::{parse_contract, parse_instrumented, pretty_print, Program};
use deltaguard::harness::{bench_compare, differential_test, gen_trace, TraceKind, TraceSpec};
use deltaguard::instrument::{compile, InstrumentMode, Options};
use deltaguard::spec_lang::{check_spec, parse_spec, TypedSpec};
use deltaguard::vm::{read_trace, run_trace, write_trace, IntMode, StateStore, VmConfig, Weights};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "deltaguard", version, about = "Instrument mini contracts with runtime invariant checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Instrument a contract against an invariant spec.
    Instrument {
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "delta")]
        mode: InstrumentMode,
        #[arg(long)]
        prune: bool,
        #[arg(long)]
        cache: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Execute a trace and report per-transaction outcomes.
    Run {
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        vm: VmArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a seeded random trace.
    GenTrace {
        #[arg(long)]
        kind: TraceKind,
        #[arg(long, default_value_t = 10)]
        accounts: usize,
        #[arg(long, default_value_t = 100)]
        txs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        fault_rate: f64,
        /// Contract whose entry functions a `custom` trace calls.
        #[arg(long)]
        contract: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare naive and delta instrumentation against the oracle.
    Difftest {
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        vm: VmArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Report costs of every mode on a trace.
    Bench {
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        vm: VmArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Dump the free-variable bindings of every store.
    Bindings {
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Args)]
struct VmArgs {
    #[arg(long, default_value = "bigint")]
    int_mode: IntMode,
    /// e.g. `sload=100,arith=1`
    #[arg(long)]
    weights: Option<Weights>,
    #[arg(long, default_value_t = 64)]
    depth_limit: usize,
}

impl VmArgs {
    fn config(&self) -> VmConfig {
        VmConfig {
            int_mode: self.int_mode,
            weights: self.weights.unwrap_or_default(),
            depth_limit: self.depth_limit,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load(contract: &Path, spec: &Path) -> Result<(Program, TypedSpec)> {
    let program = parse_contract(&read(contract)?)?;
    let spec = check_spec(&parse_spec(&read(spec)?)?, &program)?;
    Ok((program, spec))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display()).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, v: &Value) -> Result<()> {
    emit(out, &format!("{}\n", serde_json::to_string_pretty(v)?))
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Instrument {
            contract,
            spec,
            mode,
            prune,
            cache,
            out,
            stats,
        } => {
            let (program, spec) = load(&contract, &spec)?;
            let r = compile(&program, &spec, &Options { mode, prune, cache })?;
            emit(out.as_deref(), &pretty_print(&r.program))?;
            if let Some(p) = stats {
                emit_json(Some(&p), &r.stats.to_json())?;
            }
        }
        Cmd::Run {
            contract,
            trace,
            vm,
            report,
        } => {
            let program = parse_instrumented(&read(&contract)?)?;
            let trace = read_trace(&read(&trace)?)?;
            let config = vm.config();
            let mut state = StateStore::new(&program);
            let run = run_trace(&mut state, &program, &trace, &config);
            let mut total = run.total.to_json();
            total["weighted"] = json!(run.total.weighted(&config.weights));
            let v = json!({
                "int_mode": config.int_mode.to_string(),
                "outcomes": run.outcomes.iter().map(|o| o.to_json()).collect::<Vec<_>>(),
                "total": total,
                "final_state": state.snapshot(),
            });
            let accepted = run.outcomes.iter().filter(|o| o.status.is_accepted()).count();
            eprintln!("{accepted}/{} accepted", trace.len());
            emit_json(report.as_deref(), &v)?;
        }
        Cmd::GenTrace {
            kind,
            accounts,
            txs,
            seed,
            fault_rate,
            contract,
            out,
        } => {
            let mut spec = match (&contract, kind) {
                (Some(c), TraceKind::Custom) => {
                    TraceSpec::custom(&parse_instrumented(&read(c)?)?, accounts, txs, seed)
                }
                _ => TraceSpec::new(kind, accounts, txs, seed),
            };
            spec.fault_rate = fault_rate;
            emit(out.as_deref(), &write_trace(&gen_trace(&spec)?))?;
        }
        Cmd::Difftest {
            contract,
            spec,
            trace,
            vm,
            report,
        } => {
            let (program, spec) = load(&contract, &spec)?;
            let trace = read_trace(&read(&trace)?)?;
            let r = differential_test(&program, &spec, &trace, &vm.config())?;
            eprint!("{}", r.to_table());
            for m in r.mismatches.iter().take(20) {
                eprintln!("{}", m.to_json());
            }
            if let Some(p) = report {
                emit_json(Some(&p), &r.to_json())?;
            }
            if !r.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Cmd::Bench {
            contract,
            spec,
            trace,
            vm,
            report,
        } => {
            let (program, spec) = load(&contract, &spec)?;
            let trace = read_trace(&read(&trace)?)?;
            let r = bench_compare(&program, &spec, &trace, &vm.config())?;
            print!("{}", r.to_table());
            if let Some(p) = report {
                emit_json(Some(&p), &r.to_json())?;
            }
        }
        Cmd::Bindings { contract, spec } => {
            let program = parse_contract(&read(&contract)?)?;
            let spec = parse_spec(&read(&spec)?)?;
            check_spec(&spec, &program)?;
            emit_json(None, &binding_dump(&program, &spec))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
