use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use patsat::analysis::{
    exact_complete_tree, growth_table, model_count, read_growth_csv, tree_depth_bound, tree_report,
    write_growth_csv,
};
use patsat::circuits::{gen_factorization, gen_multiplier, gen_random_kcnf};
use patsat::oracle::{brute_count, pattern_domain, plr};
use patsat::{
    build_pr, build_pr_prime, cra_plus, is_sat, parse_dimacs, serialize_dimacs, slo_check,
    BuildStats, ClauseSet, FbddGraph, OrderingPolicy, PrimeMode, RenamingMap,
};
use serde_json::json;

const EXIT_UNSAT: u8 = 2;
const EXIT_USAGE: u8 = 3;
const MAX_VERIFY_VARS: usize = 12;

#[derive(Parser, Debug)]
#[command(
    name = "patsat",
    version,
    about = "Clause renaming and FBDD construction for CNF"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate DIMACS instances.
    #[command(subcommand)]
    Gen(Gen),
    /// Apply CRA+ and write the s.l.o. set and its renaming map.
    Rename {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Report s.l.o. violations as JSON; exit 0 iff the set is s.l.o.
    CheckSlo { input: PathBuf },
    /// Build a decision graph and print its statistics as JSON.
    Build {
        input: PathBuf,
        #[command(flatten)]
        proc: ProcArgs,
        /// Write the graph in Graphviz dot format.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Write the graph as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Count models through the graph.
    Count {
        input: PathBuf,
        #[command(flatten)]
        proc: ProcArgs,
        /// Cross-check against truth-table enumeration (N <= 12).
        #[arg(long)]
        verify: bool,
    },
    #[command(subcommand)]
    Analyze(Analyze),
    /// Truth-table ground truth for small sets.
    Oracle {
        input: PathBuf,
        /// Print the pattern domain.
        #[arg(long)]
        pd: bool,
        /// Print the model count.
        #[arg(long)]
        count: bool,
        /// Print the period length and repetitions.
        #[arg(long)]
        plr: bool,
    },
}

#[derive(Subcommand, Debug)]
enum Gen {
    /// Multiplier circuit, optionally pinned to a product.
    Mult {
        #[arg(long)]
        ibits: usize,
        #[arg(long)]
        target: Option<u64>,
        /// Remove the product-pinning unit clauses again.
        #[arg(long, requires = "target")]
        drop_units: bool,
    },
    /// Uniform random k-CNF with distinct clauses.
    Random {
        #[arg(long)]
        vars: usize,
        #[arg(long)]
        clauses: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
enum Analyze {
    /// Complete-subtree depth bound and exact check at depth M.
    Tree {
        input: PathBuf,
        #[command(flatten)]
        proc: ProcArgs,
        #[arg(long)]
        m: usize,
    },
    /// Exponential base estimates from a label,n_vars,node_count CSV.
    Growth { records: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Proc {
    Pr,
    PrPrime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Upfront,
    PerNode,
}

#[derive(Args, Debug)]
struct ProcArgs {
    #[arg(long = "proc", value_enum)]
    procedure: Proc,
    /// PR' only.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// PR only: canonical, random:SEED or a comma list of variables.
    #[arg(long)]
    order: Option<String>,
}

struct Built {
    graph: FbddGraph,
    stats: BuildStats,
    map: RenamingMap,
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_order(text: &str) -> Result<OrderingPolicy> {
    if text == "canonical" {
        return Ok(OrderingPolicy::Canonical);
    }
    if let Some(seed) = text.strip_prefix("random:") {
        let seed = seed
            .parse()
            .map_err(|_| usage(format!("bad random seed in --order {text}")))?;
        return Ok(OrderingPolicy::Random(seed));
    }
    let vars = text
        .split(',')
        .map(|v| v.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| {
            usage(format!(
                "--order expects canonical, random:SEED or a list, got {text}"
            ))
        })?;
    Ok(OrderingPolicy::Explicit(vars))
}

impl ProcArgs {
    fn build(&self, s: &ClauseSet) -> Result<Built> {
        match self.procedure {
            Proc::Pr => {
                if self.mode.is_some() {
                    return Err(usage("--mode applies to --proc pr-prime only"));
                }
                let policy = match &self.order {
                    Some(text) => parse_order(text)?,
                    None => OrderingPolicy::Canonical,
                };
                let (graph, stats) = build_pr(s, &policy)?;
                let map = RenamingMap::identity(s.occurring_vars());
                Ok(Built { graph, stats, map })
            }
            Proc::PrPrime => {
                if self.order.is_some() {
                    return Err(usage("--order applies to --proc pr only"));
                }
                let mode = match self.mode.unwrap_or(Mode::PerNode) {
                    Mode::Upfront => PrimeMode::Upfront,
                    Mode::PerNode => PrimeMode::PerNode,
                };
                let (graph, stats, map) = build_pr_prime(s, mode)?;
                Ok(Built { graph, stats, map })
            }
        }
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        return Ok(text);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_cnf(path: &Path) -> Result<ClauseSet> {
    parse_dimacs(&read_input(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Gen(Gen::Mult {
            ibits,
            target,
            drop_units,
        }) => {
            let inst = match target {
                Some(t) => gen_factorization(ibits, t)?,
                None => gen_multiplier(ibits)?,
            };
            let inst = if drop_units { inst.drop_units() } else { inst };
            print!("{}", inst.to_dimacs());
        }
        Command::Gen(Gen::Random {
            vars,
            clauses,
            k,
            seed,
        }) => print!(
            "{}",
            serialize_dimacs(&gen_random_kcnf(vars, clauses, k, seed)?)
        ),
        Command::Rename { input, out, map } => {
            let closed = cra_plus(&read_cnf(&input)?.normalize())?;
            if closed.cycled {
                log::warn!("renaming cycled; the smallest set on the cycle was kept");
            }
            let text = serialize_dimacs(&closed.set);
            match out {
                Some(path) => write_file(&path, &text)?,
                None => print!("{text}"),
            }
            if let Some(path) = map {
                write_file(&path, &closed.map.to_json())?;
            }
        }
        Command::CheckSlo { input } => {
            let report = slo_check(&read_cnf(&input)?);
            print_json(&serde_json::to_value(&report)?)?;
            return Ok(if report.holds { 0 } else { 1 });
        }
        Command::Build {
            input,
            proc,
            dot,
            json,
        } => {
            let s = read_cnf(&input)?;
            let built = proc.build(&s)?;
            if let Some(path) = dot {
                write_file(&path, &built.graph.to_dot())?;
            }
            if let Some(path) = json {
                write_file(&path, &built.graph.to_json())?;
            }
            let sat = is_sat(&built.graph);
            let st = &built.stats;
            let mut out = json!({
                "nodes": st.unique_nonterminal_nodes,
                "drawn_nodes": st.drawn_nodes,
                "store_hits": st.store_hits,
                "calls": st.recursive_calls,
                "cra_plus_invocations": st.cra_plus_invocations,
                "sat": sat,
            });
            if !built.map.is_identity() {
                out["renaming"] = serde_json::from_str(&built.map.to_json())?;
            }
            print_json(&out)?;
            return Ok(if sat { 0 } else { EXIT_UNSAT });
        }
        Command::Count {
            input,
            proc,
            verify,
        } => {
            let s = read_cnf(&input)?;
            let built = proc.build(&s)?;
            let count = model_count(&built.graph, s.num_vars)?;
            println!("{count}");
            if verify {
                if s.num_vars > MAX_VERIFY_VARS {
                    bail!(
                        "--verify needs N <= {MAX_VERIFY_VARS}, the input has {}",
                        s.num_vars
                    );
                }
                let oracle = brute_count(&s)?;
                if oracle != count {
                    bail!("graph count {count} differs from truth-table count {oracle}");
                }
                println!("verified");
            }
        }
        Command::Analyze(Analyze::Tree { input, proc, m }) => {
            let s = read_cnf(&input)?;
            let built = proc.build(&s)?;
            let report = tree_report(&built.graph);
            let bound = tree_depth_bound(&built.graph);
            let at_m = if m > bound {
                json!(false)
            } else {
                match exact_complete_tree(&built.graph, m) {
                    Ok(found) => json!(found),
                    Err(e) => {
                        log::warn!("exact search skipped: {e}");
                        json!("not computed")
                    }
                }
            };
            let mut out = report.to_json();
            out["m"] = json!(m);
            out["complete_tree_at_m"] = at_m;
            out["nodes"] = json!(built.graph.nodes.len());
            print_json(&out)?;
        }
        Command::Analyze(Analyze::Growth { records }) => {
            let rows = read_growth_csv(read_input(&records)?.as_bytes())?;
            let table = growth_table(&rows)?;
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_growth_csv(&table, &mut lock)?;
            lock.flush()?;
        }
        Command::Oracle {
            input,
            pd,
            count,
            plr: want_plr,
        } => {
            let s = read_cnf(&input)?;
            let count = count || !(pd || want_plr);
            let mut out = json!({});
            if pd {
                out["pattern_domain"] = json!(pattern_domain(&s)?.to_string());
            }
            if count {
                out["count"] = json!(brute_count(&s)?.to_string());
            }
            if want_plr {
                let info = plr(&s)?;
                out["plr"] = json!({
                    "var": info.var,
                    "period_length": info.period_length.to_string(),
                    "repetitions": info.repetitions.to_string(),
                });
            }
            print_json(&out)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
