//! `compacts`: check compact files, run scenarios through the simulated
//! network, evaluate chains and summarize trust.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use compacts::eval::{evaluate, CompiledSpec, EvalError};
use compacts::lang::{check_observability, check_well_formedness, has_errors, parse_compact, pretty_print, CompactSpec};
use compacts::ledger::{parse_scenario, verify_chain, Chain, ChainPolicy, NetworkConfig};
use compacts::pipeline::{run_scenario, PipelineError};
use compacts::report::{trust_from_records, Report};
use compacts::validator::IntegrityRuleSet;

// Exit statuses, following sysexits where one fits.
const PARSE: u8 = 1;
const ILL_FORMED: u8 = 2;
const UNVERIFIED: u8 = 3;
const USAGE: u8 = 64;
const DATA: u8 = 65;
const SOFTWARE: u8 = 70;
const CANT_CREATE: u8 = 73;

#[derive(Parser)]
#[command(name = "compacts", version, about = "Violable contracts over a simulated permissioned ledger")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a compact file.
    Parse {
        spec: PathBuf,
        /// Print the canonical form on stdout.
        #[arg(long)]
        print: bool,
    },
    /// Gossip a scenario through the network, then evaluate the agreed chain.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        net: PathBuf,
        /// Gossip seed; defaults to the one in the network file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the active chain here.
        #[arg(long)]
        chain_out: Option<PathBuf>,
    },
    /// Evaluate a compact over a chain file.
    Eval {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a chain file. Structure only, unless a network file (proof of
    /// work and signatures) or a compact (event admission) is given.
    VerifyChain {
        chain: PathBuf,
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Recompute the trust table from a report's instances.
    Trust {
        #[arg(long)]
        report: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Display) -> Failure {
    Failure { code, message: message.to_string() }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(USAGE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| fail(CANT_CREATE, format!("{}: {e}", path.display())))
}

fn json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| fail(DATA, format!("{}: {e}", path.display())))
}

/// Parses and checks a compact, reporting diagnostics on stderr.
fn load_spec(path: &Path) -> Result<CompactSpec, Failure> {
    let name = path.display().to_string();
    let spec = parse_compact(&read(path)?).map_err(|e| fail(PARSE, format!("{name}:{e}")))?;
    let diags = check_well_formedness(&spec);
    for d in &diags {
        eprintln!("{}", d.render(&name));
    }
    if has_errors(&diags) {
        return Err(fail(ILL_FORMED, format!("{name}: compact is ill-formed")));
    }
    Ok(spec)
}

fn pipeline_failure(e: PipelineError) -> Failure {
    let code = match &e {
        PipelineError::Verify(_) | PipelineError::Eval(EvalError::ChainInvalid(_)) => UNVERIFIED,
        PipelineError::Rules(_) | PipelineError::Eval(EvalError::SpecIllFormed(_)) => ILL_FORMED,
        PipelineError::Ledger(_) | PipelineError::ContextNotRostered(_) => DATA,
        PipelineError::Eval(_) => SOFTWARE,
    };
    fail(code, e)
}

fn write_report(path: &Path, report: &Report) -> Outcome {
    write(path, &format!("{}\n", report.to_json()))?;
    println!(
        "{}: {} instances, {} facts, {} trust rows, tip {}",
        path.display(),
        report.instances.len(),
        report.facts.len(),
        report.trust.len(),
        report.chain_tip
    );
    Ok(())
}

fn parse(path: &Path, print: bool) -> Outcome {
    let spec = load_spec(path)?;
    for gap in check_observability(&spec, &spec.channels) {
        let unseen: Vec<&str> = gap.unseen.iter().map(String::as_str).collect();
        eprintln!(
            "{}: warning: role `{}` in `{}` is on no channel carrying {}",
            path.display(),
            gap.role,
            gap.norm_id,
            unseen.join(", ")
        );
    }
    if print {
        print!("{}", pretty_print(&spec));
    }
    Ok(())
}

fn run(
    spec: &Path,
    scenario: &Path,
    net: &Path,
    seed: Option<u64>,
    out: &Path,
    chain_out: Option<&Path>,
) -> Outcome {
    let compact = load_spec(spec)?;
    let submissions =
        parse_scenario(&read(scenario)?).map_err(|e| fail(DATA, format!("{}: {e}", scenario.display())))?;
    let mut config: NetworkConfig = json(net)?;
    if let Some(seed) = seed {
        config.gossip_seed = seed;
    }
    let outcome = run_scenario(&compact, &submissions, &config).map_err(pipeline_failure)?;
    if !outcome.network.converged {
        eprintln!("warning: peers had not converged after {} rounds", outcome.network.rounds_used);
    }
    if let Some(path) = chain_out {
        let text = serde_json::to_string_pretty(&outcome.chain).map_err(|e| fail(SOFTWARE, e))?;
        write(path, &format!("{text}\n"))?;
    }
    write_report(out, &outcome.report)
}

fn eval(chain: &Path, spec: &Path, out: &Path) -> Outcome {
    let compact = load_spec(spec)?;
    let chain: Chain = json(chain)?;
    let compiled = CompiledSpec::new(&compact).map_err(|e| pipeline_failure(e.into()))?;
    let state = evaluate(&chain, &compiled).map_err(|e| pipeline_failure(e.into()))?;
    write_report(out, &Report::build(&compact.name, &state))
}

fn verify(chain: &Path, net: Option<&Path>, spec: Option<&Path>) -> Outcome {
    let chain: Chain = json(chain)?;
    let mut policy = match net {
        Some(p) => {
            let config: NetworkConfig = json(p)?;
            ChainPolicy::new(config.target, config.principals)
        }
        None => ChainPolicy::structural(),
    };
    if let Some(p) = spec {
        let rules = IntegrityRuleSet::from_spec(&load_spec(p)?).map_err(|e| fail(ILL_FORMED, e))?;
        policy = policy.with_integrity(rules);
    }
    match verify_chain(&chain, &policy) {
        Ok(()) => {
            println!("ok: {} blocks, tip {}", chain.len(), chain.tip_hash().to_hex());
            Ok(())
        }
        Err(bad) => Err(fail(UNVERIFIED, format!("first bad block {}: {}", bad.index, bad.reason))),
    }
}

fn trust(report: &Path) -> Outcome {
    let r: Report = json(report)?;
    let rows = trust_from_records(&r.instances).map_err(|e| fail(DATA, format!("{}: {e}", report.display())))?;
    println!("{:<16} {:<16} {:>9} {:>8} {:>9}", "principal", "norm", "satisfied", "violated", "score");
    for t in &rows {
        println!("{:<16} {:<16} {:>9} {:>8} {:>9.6}", t.principal, t.norm_id, t.satisfied, t.violated, t.score);
    }
    if rows != r.trust {
        return Err(fail(DATA, format!("{}: trust section disagrees with the instance table", report.display())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    let result = match &cli.command {
        Command::Parse { spec, print } => parse(spec, *print),
        Command::Run { spec, scenario, net, seed, out, chain_out } => {
            run(spec, scenario, net, *seed, out, chain_out.as_deref())
        }
        Command::Eval { chain, spec, out } => eval(chain, spec, out),
        Command::VerifyChain { chain, net, spec } => verify(chain, net.as_deref(), spec.as_deref()),
        Command::Trust { report } => trust(report),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
