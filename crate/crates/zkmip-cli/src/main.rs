//! Command-line front end: robustify circuits, simulate referee
//! transcripts, run the acceptance checks and dump simulator internals.
//!
//! Exit codes: 0 on success (an aborted transcript is a success), 1 when a
//! check fails or a computation cannot be completed, 2 on usage or input
//! format errors.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zkmip::encoding::InnerCode;
use zkmip::error::Error;
use zkmip::history::{HistoryStateSpec, LogicalReg};
use zkmip::honest::{QuestionTuple, Slot};
use zkmip::oracle::HonestOracle;
use zkmip::protocol::{robustify, ProtocolCircuit, ProverStrategy, RobustifyConfig, Robustified};
use zkmip::simulator::adaptive::{RefereeScript, Session};
use zkmip::simulator::Simulator;
use zkmip::suite::{self, Arithmetic, Fault, SuiteConfig};

#[derive(Parser, Debug)]
#[command(name = "zkmip", version, about = "Robustified protocol circuits and their zero-knowledge simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode a circuit in the inner code and write it with its micro-phase sidecar.
    Robustify {
        circuit: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
        /// Output path; the sidecar goes to <output>.phases. Prints to stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a referee script against the simulator and write the transcript.
    Simulate {
        circuit: PathBuf,
        referee: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Answer with the honest players of this strategy instead of the simulator.
        #[arg(long)]
        honest: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the acceptance checks and print one PASS/FAIL line per check.
    Verify {
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(long)]
        strategy: Option<PathBuf>,
        #[arg(long)]
        referee: Option<PathBuf>,
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        mode: ModeArgs,
        /// Comma-separated check numbers; all when absent.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        /// Direct honest runs for the transcript check.
        #[arg(long, default_value_t = 100_000)]
        runs: usize,
        /// Negate stabilizer generator I (1-based) of the code under test.
        #[arg(long, value_name = "I")]
        flip_generator: Option<usize>,
    },
    /// Print a reduced snapshot or the simulated density for a question tuple.
    Trace {
        circuit: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
        /// Question tuple, e.g. "PV1: Z3I1,I1I2,I1I2,I1I2,I1I2,I1I2 | PP1: STAR".
        #[arg(long, conflicts_with = "registers")]
        question: Option<String>,
        /// Verifier and message registers such as v1,m1.1 for a snapshot.
        #[arg(long, value_delimiter = ',')]
        registers: Vec<String>,
        /// Timestep of the snapshot.
        #[arg(long, short, default_value_t = 0)]
        t: usize,
    },
}

#[derive(Args, Debug, Clone)]
struct CodeArgs {
    /// Inner code: trivial or steane:K.
    #[arg(long, default_value = "steane:1")]
    code: String,
    /// Simulatability budget s.
    #[arg(long, default_value_t = 2)]
    budget: usize,
    /// Idle steps on each side of a prover gate.
    #[arg(long)]
    padding: Option<usize>,
}

#[derive(Args, Debug, Clone)]
#[group(multiple = false)]
struct ModeArgs {
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    float: bool,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Parse { .. }
            | Error::Format(_)
            | Error::InvalidArgument(_)
            | Error::InvalidCircuit { .. }
            | Error::PhaseViolation { .. }
            | Error::UnsupportedGate(_)
            | Error::InvalidCode(_) => 2,
            _ => 1,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure { code: 1, msg: format!("{}: {e}", path.display()) })
}

fn with_path<T>(path: &Path, r: zkmip::error::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.msg = format!("{}: {}", path.display(), f.msg);
        f
    })
}

fn load_circuit(path: &Path) -> Result<ProtocolCircuit, Failure> {
    with_path(path, ProtocolCircuit::parse(&read(path)?))
}

fn inner_code(code: &CodeArgs) -> Result<InnerCode, Failure> {
    if code.code == "trivial" {
        return Ok(InnerCode::trivial());
    }
    let k: usize = code
        .code
        .strip_prefix("steane:")
        .and_then(|k| k.parse().ok())
        .ok_or_else(|| usage(format!("unknown code {:?}; expected trivial or steane:K", code.code)))?;
    Ok(InnerCode::steane(k)?)
}

/// Encoded Toffoli gates hide their data only for s < d - 3.
fn check_budget(c: &ProtocolCircuit, inner: &InnerCode, s: usize) -> Result<(), Failure> {
    let gadget = c.steps.iter().any(|st| matches!(st, zkmip::protocol::Step::Gate(zkmip::gates::Gate::Toffoli(..))));
    if gadget && inner.level() > 0 && s + 3 >= inner.distance() {
        return Err(usage(format!(
            "budget s = {s} needs s < {} for Toffoli gadgets with distance {}",
            inner.distance().saturating_sub(3),
            inner.distance()
        )));
    }
    Ok(())
}

fn robustified(c: &ProtocolCircuit, code: &CodeArgs) -> Result<Robustified, Failure> {
    let inner = inner_code(code)?;
    check_budget(c, &inner, code.budget)?;
    let cfg = RobustifyConfig { padding: code.padding, ..RobustifyConfig::default() };
    Ok(robustify(c, &inner, &cfg)?)
}

fn cmd_robustify(circuit: &Path, code: &CodeArgs, output: Option<&Path>) -> Result<(), Failure> {
    let r = robustified(&load_circuit(circuit)?, code)?;
    match output {
        Some(out) => {
            write_out(out, &r.circuit.to_text())?;
            let mut side = out.as_os_str().to_owned();
            side.push(".phases");
            write_out(Path::new(&side), &r.annotations())?;
        }
        None => {
            print!("{}", r.circuit.to_text());
            print!("{}", r.annotations());
        }
    }
    Ok(())
}

fn input_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

fn cmd_simulate(
    circuit: &Path,
    referee: &Path,
    code: &CodeArgs,
    seed: u64,
    honest: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let c = load_circuit(circuit)?;
    let script = with_path(referee, RefereeScript::parse(&read(referee)?))?;
    let r = robustified(&c, code)?;
    let name = input_name(circuit);
    let transcript = match honest {
        Some(sp) => {
            let s = with_path(sp, ProverStrategy::parse(&read(sp)?))?;
            let spec = HistoryStateSpec::new(&r.circuit, &r.wrap_strategy(&s)?)?;
            let oracle = HonestOracle::new(&spec)?;
            Session::new(&oracle, name).run(&script, seed)?
        }
        None => {
            let sim = Simulator::new(r)?;
            Session::new(&sim, name).run(&script, seed)?
        }
    };
    match output {
        Some(out) => write_out(out, &transcript.to_string()),
        None => {
            print!("{transcript}");
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    circuit: Option<&Path>,
    strategy: Option<&Path>,
    referee: Option<&Path>,
    code: &CodeArgs,
    seed: u64,
    mode: &ModeArgs,
    only: &[usize],
    runs: usize,
    flip: Option<usize>,
) -> Result<bool, Failure> {
    let mut cfg = SuiteConfig::bundled()?;
    if let Some(p) = circuit {
        cfg.circuit = load_circuit(p)?;
    }
    if let Some(p) = strategy {
        cfg.strategy = with_path(p, ProverStrategy::parse(&read(p)?))?;
    }
    if let Some(p) = referee {
        cfg.referee = with_path(p, RefereeScript::parse(&read(p)?))?;
    }
    let inner = inner_code(code)?;
    check_budget(&cfg.circuit, &inner, code.budget)?;
    cfg.level = inner.level();
    cfg.padding = code.padding;
    cfg.budget = code.budget;
    cfg.seed = seed;
    cfg.arithmetic = if mode.float { Arithmetic::Float } else { Arithmetic::Exact };
    cfg.monte_carlo_runs = runs;
    if let Some(i) = flip {
        if i == 0 {
            return Err(usage("generators are numbered from 1"));
        }
        cfg.fault = Some(Fault::FlipGeneratorSign(i - 1));
    }
    let ids: Vec<usize> = if only.is_empty() { (1..=suite::CRITERIA).collect() } else { only.to_vec() };
    let mut all = true;
    for id in ids {
        let r = suite::run_criterion(id, &cfg).map_err(|_| usage(format!("no check numbered {id}")))?;
        println!("{r}");
        all &= r.pass;
    }
    Ok(all)
}

fn parse_register(s: &str) -> Result<LogicalReg, Failure> {
    let bad = || usage(format!("bad register {s:?}; expected v<i> or m<i>.<j>"));
    let num = |x: &str| x.parse::<usize>().ok().filter(|&v| v > 0).map(|v| v - 1);
    if let Some(v) = s.strip_prefix('v') {
        return num(v).map(LogicalReg::Verifier).ok_or_else(bad);
    }
    let (p, j) = s.strip_prefix('m').and_then(|r| r.split_once('.')).ok_or_else(bad)?;
    Ok(LogicalReg::Message { prover: num(p).ok_or_else(bad)?, j: num(j).ok_or_else(bad)? })
}

fn cmd_trace(circuit: &Path, code: &CodeArgs, question: Option<&str>, registers: &[String], t: usize) -> Result<(), Failure> {
    let sim = Simulator::new(robustified(&load_circuit(circuit)?, code)?)?;
    let mut out = String::new();
    match question {
        Some(q) => {
            let w: QuestionTuple = q.parse()?;
            w.check(&sim.map)?;
            let rho = sim.sim_density(&w)?;
            let names: Vec<String> = rho.universe.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(out, "DENSITY T={} denom={} terms={} width={}", sim.len(), rho.denom, rho.len(), rho.width());
            let _ = writeln!(out, "REGISTERS {}", names.join(" "));
            for (i, term) in rho.terms.iter().enumerate() {
                let _ = writeln!(out, "TERM {} coef={}", i + 1, term.coef);
                for b in &term.blocks {
                    if b.matrix.is_identity() {
                        continue;
                    }
                    let regs: Vec<&str> = b.regs.iter().map(|&r| names[r].as_str()).collect();
                    let _ = write!(out, "BLOCK {}\n{}", regs.join(" "), b.matrix);
                }
            }
            let d = sim.distribution_from_rep(&w, &rho)?;
            let slots: Vec<String> = d
                .slots
                .iter()
                .map(|s| match *s {
                    Slot::Verifier(r, j) => format!("PV{}.{}", r + 1, j + 1),
                    Slot::Prover(i) => format!("PP{}", i + 1),
                })
                .collect();
            let _ = writeln!(out, "ANSWERS {}", slots.join(" "));
            for (x, p) in d.table.iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let bits: String = (0..d.slots.len()).map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect();
                let _ = writeln!(out, "{bits} {p}/{}", d.denom);
            }
        }
        None => {
            if registers.is_empty() {
                return Err(usage("trace needs --question or --registers"));
            }
            let y = registers.iter().map(|s| parse_register(s)).collect::<Result<Vec<_>, _>>()?;
            let rho = sim.sim_snapshot(&y, t)?;
            let names: Vec<String> = y.iter().map(|r| r.to_string()).collect();
            let _ = write!(out, "SNAPSHOT t={t} registers={}\n{rho}", names.join(" "));
        }
    }
    print!("{out}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Robustify { circuit, code, output } => cmd_robustify(circuit, code, output.as_deref()).map(|_| true),
        Command::Simulate { circuit, referee, code, seed, honest, output } => {
            cmd_simulate(circuit, referee, code, *seed, honest.as_deref(), output.as_deref()).map(|_| true)
        }
        Command::Verify { circuit, strategy, referee, code, seed, mode, only, runs, flip_generator } => cmd_verify(
            circuit.as_deref(),
            strategy.as_deref(),
            referee.as_deref(),
            code,
            *seed,
            mode,
            only,
            *runs,
            *flip_generator,
        ),
        Command::Trace { circuit, code, question, registers, t } => {
            cmd_trace(circuit, code, question.as_deref(), registers, *t).map(|_| true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
