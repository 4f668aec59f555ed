use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use effort_alloc::instances::{self, FIVE_INSTANCES};
use effort_alloc::mcts::{Budget, MctsConfig, DEFAULT_EXPLORATION};
use effort_alloc::mdp::{exact_value, DEFAULT_STATE_CAP};
use effort_alloc::model::{estimate_dist, json};
use effort_alloc::prob::{format_rational, parse_rational};
use effort_alloc::reduction::{reduce, KnapsackInstance};
use effort_alloc::sim::Simulator;
use effort_alloc::{PolicyKind, ProblemInstance, Rational};

/// `println!` that reports write failures instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(io::stdout(), $($arg)*)?
    };
}

const EVAL_HEADER: &str = "instance,policy,runs,seed,success_rate,ci95,elapsed_ms";
const BENCH_HEADER: &str = "instance,policy,runs,seed,success_rate,ci95,mean_decision_ms,elapsed_ms";

#[derive(Parser)]
#[command(name = "effort-alloc", version, about = "Allocate planning effort among plan skeletons under a deadline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and report every violation.
    Validate(Source),
    /// Monte Carlo evaluation of one policy; prints one CSV row.
    Evaluate(EvaluateArgs),
    /// Policy x instance grid with decision timing; prints CSV.
    Bench(BenchArgs),
    /// Optimal success probability by exhaustive expectimax.
    Exact(ExactArgs),
    /// Built-in instances.
    #[command(subcommand)]
    Instances(InstancesCommand),
    /// Write the effort-allocation instance for a knapsack problem.
    GenerateKnapsack(KnapsackArgs),
    /// Fit a duration distribution from a newline-delimited log.
    Estimate(EstimateArgs),
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
struct Source {
    /// Instance JSON file.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Built-in instance name (see `instances list`).
    #[arg(long)]
    builtin: Option<String>,
}

impl Source {
    fn load(&self) -> Result<(String, ProblemInstance)> {
        match (&self.instance, &self.builtin) {
            (Some(path), _) => load_file(path),
            (None, Some(name)) => Ok((name.clone(), instances::builtin(name)?.instance)),
            (None, None) => bail!("no instance given"),
        }
    }
}

fn load_file(path: &Path) -> Result<(String, ProblemInstance)> {
    let inst = json::read_instance(path).with_context(|| format!("reading {}", path.display()))?;
    let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok((name, inst.validated()?))
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// MCTS iterations per decision.
    #[arg(long, conflicts_with = "mcts_time_ms")]
    mcts_iters: Option<String>,
    /// MCTS wall time per decision in milliseconds.
    #[arg(long)]
    mcts_time_ms: Option<String>,
    /// UCT exploration constant.
    #[arg(long, default_value_t = DEFAULT_EXPLORATION)]
    uct_c: f64,
    /// Search every decision afresh instead of caching per state.
    #[arg(long)]
    no_mcts_cache: bool,
}

impl SearchArgs {
    fn budgets(&self) -> Result<Vec<Budget>> {
        let parse_list = |s: &str, f: &dyn Fn(&str) -> Result<Budget>| -> Result<Vec<Budget>> {
            s.split(',').filter(|x| !x.trim().is_empty()).map(f).collect()
        };
        match (&self.mcts_iters, &self.mcts_time_ms) {
            (Some(s), _) => parse_list(s, &|x| Ok(x.parse::<Budget>()?)),
            (None, Some(s)) => parse_list(s, &|x| {
                let ms: u64 = x.trim().parse().with_context(|| format!("bad milliseconds `{x}`"))?;
                Ok(Budget::WallTime(Duration::from_millis(ms)))
            }),
            (None, None) => Ok(vec![MctsConfig::default().budget]),
        }
    }

    fn config(&self, budget: Budget, seed: u64) -> MctsConfig {
        MctsConfig { budget, c: self.uct_c, seed, cache: !self.no_mcts_cache }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    policy: String,
    #[arg(long, default_value_t = 1000)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    search: SearchArgs,
    /// Worker threads (capped by EFFORT_ALLOC_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Omit the CSV header.
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance JSON files.
    #[arg(long, num_args = 1..)]
    instance: Vec<PathBuf>,
    /// Built-in instance names.
    #[arg(long, num_args = 1..)]
    builtin: Vec<String>,
    /// `five-instances`, `domains` or `all`.
    #[arg(long)]
    builtin_set: Option<String>,
    /// Comma-separated policy names.
    #[arg(long, default_value = "dp,dp-rerun,greedy,round-robin")]
    policies: String,
    #[arg(long, default_value_t = 100)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    source: Source,
    /// Use floating point instead of exact rationals.
    #[arg(long)]
    float: bool,
    /// Maximum number of memoised states.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: usize,
}

#[derive(Subcommand)]
enum InstancesCommand {
    List,
    Dump {
        #[arg(long)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct KnapsackArgs {
    /// Items as `weight:value` pairs, e.g. `2:3,3:4,4:5`.
    #[arg(long)]
    items: String,
    #[arg(long)]
    capacity: u32,
    /// Constant execution time of every action.
    #[arg(long, default_value_t = 0)]
    exec_time: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// One observed duration per line; `-` reads standard input.
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    deadline: u32,
    /// Laplace smoothing weight.
    #[arg(long, default_value = "0")]
    alpha: String,
}

fn threads(requested: Option<usize>) -> usize {
    let auto = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut n = requested.unwrap_or(auto).max(1);
    if let Some(cap) = std::env::var("EFFORT_ALLOC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        n = n.min(cap.max(1));
    }
    n
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn validate(src: &Source) -> Result<()> {
    let (name, inst) = match (&src.instance, &src.builtin) {
        (Some(path), _) => {
            let inst = json::read_instance(path).with_context(|| format!("reading {}", path.display()))?;
            (path.display().to_string(), inst)
        }
        _ => src.load()?,
    };
    let violations = inst.validate();
    if !violations.is_empty() {
        let mut msg = format!("{name}: {} violation(s)", violations.len());
        for v in &violations {
            msg.push_str(&format!("\n  - {v}"));
        }
        bail!(msg);
    }
    out!(
        "{name}: ok (skeletons={}, actions={}, deadline={}, shared_prefix_ok={})",
        inst.num_skeletons(),
        inst.catalog().len(),
        inst.deadline(),
        inst.shared_prefix_ok()
    );
    Ok(())
}

fn policy_kinds(list: &str, search: &SearchArgs, seed: u64) -> Result<Vec<PolicyKind>> {
    let mut kinds = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match name.parse::<PolicyKind>()? {
            PolicyKind::Mcts(_) => {
                for b in search.budgets()? {
                    kinds.push(PolicyKind::Mcts(search.config(b, seed)));
                }
            }
            other => kinds.push(other),
        }
    }
    if kinds.is_empty() {
        bail!("no policies given");
    }
    Ok(kinds)
}

struct Row {
    instance: String,
    policy: String,
    runs: u64,
    seed: u64,
    success_rate: f64,
    ci95: f64,
    mean_decision_ms: f64,
    elapsed_ms: f64,
}

fn run_one(name: &str, inst: &ProblemInstance, kind: &PolicyKind, runs: u64, seed: u64, workers: usize) -> Result<Row> {
    let start = Instant::now();
    let policy = kind.build(inst)?;
    let report = Simulator::new(inst)?.evaluate(policy.as_ref(), runs, seed, workers)?;
    Ok(Row {
        instance: name.to_string(),
        policy: policy.name(),
        runs,
        seed,
        success_rate: report.success_rate,
        ci95: report.ci95_halfwidth,
        mean_decision_ms: report.mean_decision_ms(),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let (name, inst) = args.source.load()?;
    let kinds = policy_kinds(&args.policy, &args.search, args.seed)?;
    if !args.no_header {
        out!("{EVAL_HEADER}");
    }
    for kind in &kinds {
        let r = run_one(&name, &inst, kind, args.runs, args.seed, threads(args.threads))?;
        out!(
            "{},{},{},{},{:.6},{:.6},{:.3}",
            r.instance, r.policy, r.runs, r.seed, r.success_rate, r.ci95, r.elapsed_ms
        );
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let mut sources: Vec<(String, ProblemInstance)> = Vec::new();
    if let Some(set) = &args.builtin_set {
        let names: Vec<&str> = match set.as_str() {
            "five-instances" => FIVE_INSTANCES.to_vec(),
            "domains" => vec!["navigation", "manipulation"],
            "all" => instances::names().to_vec(),
            other => bail!("unknown builtin set `{other}` (expected five-instances, domains or all)"),
        };
        for n in names {
            sources.push((n.to_string(), instances::builtin(n)?.instance));
        }
    }
    for n in &args.builtin {
        sources.push((n.clone(), instances::builtin(n)?.instance));
    }
    for path in &args.instance {
        sources.push(load_file(path)?);
    }
    if sources.is_empty() {
        bail!("no instances given (use --builtin, --builtin-set or --instance)");
    }
    let kinds = policy_kinds(&args.policies, &args.search, args.seed)?;
    let workers = threads(args.threads);
    out!("{BENCH_HEADER}");
    for (name, inst) in &sources {
        for kind in &kinds {
            let r = run_one(name, inst, kind, args.runs, args.seed, workers)?;
            out!(
                "{},{},{},{},{:.6},{:.6},{:.6},{:.3}",
                r.instance, r.policy, r.runs, r.seed, r.success_rate, r.ci95, r.mean_decision_ms, r.elapsed_ms
            );
        }
    }
    Ok(())
}

fn exact(args: &ExactArgs) -> Result<()> {
    let (name, inst) = args.source.load()?;
    let start = Instant::now();
    let (value, decimal, root, explored) = if args.float {
        let sol = exact_value::<f64>(&inst, args.cap)?;
        (format!("{}", sol.value), sol.value, sol.root_action, sol.explored)
    } else {
        let sol = exact_value::<Rational>(&inst, args.cap)?;
        let decimal = effort_alloc::Prob::to_f64(&sol.value);
        (format_fraction(&sol.value), decimal, sol.root_action, sol.explored)
    };
    out!("instance: {name}");
    out!("value: {value} ({decimal})");
    match root {
        Some(k) => out!("root action: a_{}", k + 1),
        None => out!("root action: none"),
    }
    out!("states: {explored}");
    out!("elapsed_ms: {:.3}", start.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

fn format_fraction(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn instances_cmd(cmd: &InstancesCommand) -> Result<()> {
    match cmd {
        InstancesCommand::List => {
            for n in instances::names() {
                let b = instances::builtin(n)?;
                out!(
                    "{}\t{}\tK={}\tD={}\t{}",
                    b.name,
                    b.provenance,
                    b.instance.num_skeletons(),
                    b.instance.deadline(),
                    b.summary
                );
            }
            Ok(())
        }
        InstancesCommand::Dump { name, out } => {
            let b = instances::builtin(name)?;
            emit(out.as_deref(), &json::to_json_string(&b.instance))
        }
    }
}

fn generate_knapsack(args: &KnapsackArgs) -> Result<()> {
    let ks = KnapsackInstance::new(KnapsackInstance::parse_items(&args.items)?, args.capacity)?;
    let red = reduce(&ks, args.exec_time)?;
    emit(args.out.as_deref(), &json::to_json_string(&red.instance))?;
    eprintln!("epsilon = {}", format_rational(&red.epsilon));
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let reader: Box<dyn BufRead> = if args.log.as_os_str() == "-" {
        Box::new(io::BufReader::new(io::stdin()))
    } else {
        let f = std::fs::File::open(&args.log).with_context(|| format!("opening {}", args.log.display()))?;
        Box::new(io::BufReader::new(f))
    };
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        samples.push(t.parse::<u32>().with_context(|| format!("line {}: bad duration `{t}`", i + 1))?);
    }
    let alpha = parse_rational(&args.alpha)?;
    let dist = estimate_dist(&samples, args.deadline, &alpha)?;
    let mut text = serde_json::to_string_pretty(&json::dist_to_value(&dist))?;
    text.push('\n');
    emit(None, &text)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Validate(src) => validate(src),
        Command::Evaluate(args) => evaluate(args),
        Command::Bench(args) => bench(args),
        Command::Exact(args) => exact(args),
        Command::Instances(cmd) => instances_cmd(cmd),
        Command::GenerateKnapsack(args) => generate_knapsack(args),
        Command::Estimate(args) => estimate(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
