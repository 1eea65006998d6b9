use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use consensus_core::engine::{run_dialogue, Scenario, StageBudget};
use consensus_core::harness::{run_property_suite, SuiteOptions, DEFAULT_CASES, DEFAULT_SEED, SUITES};
use consensus_core::lattice::Partition;
use consensus_core::messages::{check_union_consistency, UnionConsistency};
use consensus_core::ordinal::Ordinal;
use consensus_core::scenario::{
    bundled, finite_trace_lines, parse_scenario, symbolic_trace_lines, LoadedScenario, BUNDLED,
};
use consensus_core::symbolic::{run_transfinite, truncation_oracle, transfinite::MAX_LIMIT_JUMPS};
use consensus_core::Error;

const EXIT_ERROR: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_NO_CONSENSUS: u8 = 3;
const EXIT_BUDGET: u8 = 4;

/// Run dialogues between agents who share information partitions.
#[derive(Parser)]
#[command(name = "consensus", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check union consistency, reciprocity and partition validity.
    Check {
        /// Scenario file, or the name of a bundled scenario.
        scenario: String,
    },
    /// Run the dialogue to a fixed point.
    Run {
        scenario: String,
        /// True state: a state label, or a positive integer for symbolic scenarios.
        #[arg(long)]
        true_state: Option<String>,
        /// Successor-step budget for finite scenarios (default n·N + 1).
        #[arg(long)]
        budget: Option<usize>,
        /// Ordinal budget for symbolic scenarios, written `w*A+B`.
        #[arg(long)]
        ordinal_budget: Option<String>,
        /// Write one JSON line per stage here (`-` for stdout).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare symbolic stages with finite truncations.
    Oracle {
        scenario: String,
        #[arg(long, default_value_t = 20)]
        window: u64,
        #[arg(long, default_value_t = 8)]
        stages: usize,
        /// Corrupt one symbolic stage to exercise the mismatch path.
        #[arg(long, hide = true)]
        corrupt_stage: Option<usize>,
    },
    /// Export the communication graph.
    Export {
        scenario: String,
        /// DOT output path (`-` for stdout).
        #[arg(long)]
        dot: PathBuf,
    },
    /// Run a property suite (or `all`).
    Suite {
        name: String,
        #[arg(long, default_value_t = DEFAULT_CASES)]
        cases: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Use the message function of this finite scenario instead of the random families.
        #[arg(long)]
        inject: Option<String>,
    },
    /// List the bundled scenarios.
    Fixtures,
}

fn load(source: &str) -> Result<LoadedScenario, String> {
    let path = Path::new(source);
    let text = if path.exists() {
        fs::read_to_string(path).map_err(|e| format!("{source}: {e}"))?
    } else if let Some(text) = bundled(source) {
        text.to_string()
    } else {
        return Err(format!("{source}: no such file or bundled scenario"));
    };
    parse_scenario(&text).map_err(|e| format!("{source}: {e}"))
}

fn write_out(path: &Path, content: &str) -> Result<(), String> {
    if path == Path::new("-") {
        std::io::stdout().write_all(content.as_bytes()).map_err(|e| e.to_string())
    } else {
        fs::write(path, content).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn show_partition(p: &Partition, labels: &[String]) -> String {
    let blocks: Vec<String> = p
        .blocks()
        .iter()
        .map(|b| format!("{{{}}}", b.iter().map(|&x| labels[x].as_str()).collect::<Vec<_>>().join(",")))
        .collect();
    format!("{{{}}}", blocks.join(","))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn cmd_check(source: &str) -> Result<u8, String> {
    let sc = load(source)?;
    let mut ok = true;
    match &sc {
        LoadedScenario::Finite(f) => {
            match check_union_consistency(&f.message_function, f.num_states()).map_err(|e| e.to_string())? {
                UnionConsistency::Holds { exhaustive, pairs_checked } => println!(
                    "union consistency: holds ({} over {pairs_checked} disjoint pairs)",
                    if exhaustive { "exhaustive" } else { "sampled" }
                ),
                UnionConsistency::Fails { left, right } => {
                    ok = false;
                    let show = |v: &[usize]| v.iter().map(|&x| f.state_labels[x].as_str()).collect::<Vec<_>>().join(",");
                    println!("union consistency: fails: f({{{}}}) = f({{{}}}) but their union differs", show(&left), show(&right));
                }
            }
            println!("partitions: valid ({} agents over {} states)", f.num_agents(), f.num_states());
        }
        LoadedScenario::Symbolic(s) => {
            println!("union consistency: holds (known_state)");
            for (a, p) in s.agents.iter().zip(s.initial.parts()) {
                let cert = p.validate().map_err(|e| format!("{a}: {e}"))?;
                println!("partition {a}: valid (checked on [1, {}])", cert.window);
            }
        }
    }
    let graph = sc.graph();
    let agents = sc.agents();
    match graph.satisfies_reciprocity() {
        consensus_core::graph::Reciprocity::Holds { witness } => {
            let edges: Vec<String> =
                witness.edges().iter().map(|&(i, j)| format!("{}->{}", agents[i], agents[j])).collect();
            println!("reciprocity: holds (witness {})", edges.join(" "));
        }
        consensus_core::graph::Reciprocity::Fails { reason } => {
            ok = false;
            println!("reciprocity: fails ({reason})");
        }
    }
    Ok(if ok { 0 } else { EXIT_CHECK_FAILED })
}

fn run_finite(
    mut sc: Scenario,
    true_state: Option<String>,
    budget: Option<usize>,
    trace_out: Option<PathBuf>,
) -> Result<u8, String> {
    if let Some(label) = true_state {
        let x = sc
            .state_labels
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| format!("unknown state label `{label}`"))?;
        sc.true_state = Some(x);
    }
    let budget = budget.map_or_else(|| StageBudget::for_scenario(&sc), StageBudget);
    let trace = match run_dialogue(&sc, budget) {
        Ok(t) => t,
        Err(e @ Error::BudgetExceeded(_)) => {
            println!("{e}");
            return Ok(EXIT_BUDGET);
        }
        Err(e) => return Err(e.to_string()),
    };
    if let Some(out) = trace_out {
        write_out(&out, &(finite_trace_lines(&sc, &trace).join("\n") + "\n"))?;
    }
    let last = trace.last();
    println!("final ordinal: {}", last.ordinal);
    println!("consensus: {}", yes(last.flags.consensus));
    for (a, p) in sc.agents.iter().zip(last.state.profile.parts()) {
        println!("{a}: {}", show_partition(p, &sc.state_labels));
    }
    Ok(if last.flags.consensus { 0 } else { EXIT_NO_CONSENSUS })
}

fn cmd_run(
    source: &str,
    true_state: Option<String>,
    budget: Option<usize>,
    ordinal_budget: Option<String>,
    trace_out: Option<PathBuf>,
) -> Result<u8, String> {
    match load(source)? {
        LoadedScenario::Finite(sc) => run_finite(sc, true_state, budget, trace_out),
        LoadedScenario::Symbolic(mut sc) => {
            if let Some(x) = true_state {
                let x: u64 = x.parse().map_err(|_| format!("true state `{x}` is not a positive integer"))?;
                if x == 0 {
                    return Err("states start at 1".into());
                }
                sc.true_state = Some(x);
            }
            let budget = match ordinal_budget {
                Some(s) => s.parse::<Ordinal>().map_err(|e| e.to_string())?,
                None => Ordinal::new(MAX_LIMIT_JUMPS, 0),
            };
            let trace = match run_transfinite(&sc, budget) {
                Ok(t) => t,
                Err(e @ (Error::OrdinalBudgetExceeded(_) | Error::NoCertificateFound(_))) => {
                    println!("{e}");
                    return Ok(EXIT_BUDGET);
                }
                Err(e) => return Err(e.to_string()),
            };
            if let Some(out) = trace_out {
                write_out(&out, &(symbolic_trace_lines(&sc, &trace).join("\n") + "\n"))?;
            }
            let last = trace.last();
            println!("final ordinal: {}", last.ordinal);
            println!("consensus: {}", yes(last.flags.consensus));
            for (a, p) in sc.agents.iter().zip(last.state.profile.parts()) {
                println!("{a}: {p}");
            }
            Ok(if last.flags.consensus { 0 } else { EXIT_NO_CONSENSUS })
        }
    }
}

fn cmd_oracle(source: &str, window: u64, stages: usize, corrupt: Option<usize>) -> Result<u8, String> {
    let LoadedScenario::Symbolic(sc) = load(source)? else {
        return Err(Error::Kind { expected: "symbolic" }.to_string());
    };
    match truncation_oracle(&sc, window, stages, corrupt) {
        Ok(r) => {
            println!(
                "agreement on [1, {}] for {} stages (truncated to {} states)",
                r.window, r.stages_compared, r.truncated_size
            );
            Ok(0)
        }
        Err(e @ Error::Mismatch { .. }) => {
            println!("{e}");
            Ok(EXIT_CHECK_FAILED)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn cmd_export(source: &str, dot: &Path) -> Result<u8, String> {
    let sc = load(source)?;
    let text = sc.graph().export_dot(sc.agents()).map_err(|e| e.to_string())?;
    write_out(dot, &text)?;
    Ok(0)
}

fn cmd_suite(name: &str, cases: usize, seed: u64, inject: Option<String>) -> Result<u8, String> {
    let injected = match inject {
        Some(source) => match load(&source)? {
            LoadedScenario::Finite(sc) => Some(sc.message_function),
            LoadedScenario::Symbolic(_) => return Err(Error::Kind { expected: "finite" }.to_string()),
        },
        None => None,
    };
    let opts = SuiteOptions { cases, seed, injected, ..SuiteOptions::default() };
    let names: Vec<&str> = if name == "all" { SUITES.to_vec() } else { vec![name] };
    let mut ok = true;
    for n in names {
        let report = run_property_suite(n, &opts).map_err(|e| e.to_string())?;
        for line in report.to_lines() {
            println!("{line}");
        }
        ok &= report.passed() != report.expected_failure;
    }
    Ok(if ok { 0 } else { EXIT_CHECK_FAILED })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_ERROR);
        }
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Check { scenario } => cmd_check(&scenario),
        Command::Run { scenario, true_state, budget, ordinal_budget, trace } => {
            cmd_run(&scenario, true_state, budget, ordinal_budget, trace)
        }
        Command::Oracle { scenario, window, stages, corrupt_stage } => {
            cmd_oracle(&scenario, window, stages, corrupt_stage)
        }
        Command::Export { scenario, dot } => cmd_export(&scenario, &dot),
        Command::Suite { name, cases, seed, inject } => cmd_suite(&name, cases, seed, inject),
        Command::Fixtures => {
            for (name, _) in BUNDLED {
                println!("{name}");
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
