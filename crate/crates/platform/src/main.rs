use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use holdem_core::abstraction::{BetMenu, BucketConfig, BucketMap, EquityMethod};
use holdem_core::agents::Agent;
use holdem_core::engine::{Deal, GameSpec, Variant};
use holdem_core::evaluation::{
    agent_exploitability, aivat_estimate, deal_seed, elo_update, lbr_evaluate, report_from_histories, run_match_with,
    AivatConfig, EloTable, ExactTreeBaseline, LbrConfig, MatchMode, MatchPlan, Outcome,
};
use holdem_core::gametree::{build_tree, CardAbstraction, TreeConfig};
use holdem_core::solver::{solve, Averaging, Mode, SolverConfig, Update};
use holdem_platform::config::{IllegalActionPolicy, ServerConfig, DATA_DIR_ENV, LISTEN_ENV};
use holdem_platform::roster::{sidecar_path, TreeSidecar};
use holdem_platform::{builtin_agent, read_history, Server};

#[derive(Parser)]
#[command(
    name = "holdem",
    version,
    about = "Heads-up hold'em agents: match server, solver and evaluation tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the match server.
    Serve(ServeArgs),
    /// Play two built-in agents against each other locally.
    Match(MatchArgs),
    /// Build an abstraction, run CFR+ and write the average strategy.
    Solve(SolveArgs),
    /// Local best response against a built-in agent or blueprint.
    EvalLbr(LbrArgs),
    /// Check that every line of history files parses and replays.
    Replay {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Evaluation report from history files.
    Report(ReportArgs),
    /// Round-robin ELO ratings for a set of agents.
    Elo(EloArgs),
}

#[derive(Args)]
struct ServeArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = LISTEN_ENV)]
    listen: Option<String>,
    /// Websocket gateway address (serves /ws).
    #[arg(long)]
    ws_listen: Option<String>,
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long)]
    decision_timeout_ms: Option<u64>,
    #[arg(long, value_enum)]
    illegal_action: Option<IllegalArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IllegalArg {
    RejectAndRetry,
    Forfeit,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    SampleMean,
    Duplicate,
    Aivat,
}

#[derive(Args)]
struct MatchArgs {
    /// First agent: a roster name or blueprint:<profile>.
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long, default_value = "hunl")]
    game: Variant,
    /// Hands, or deals in duplicate mode (each dealt twice).
    #[arg(long, default_value_t = 1000)]
    hands: u64,
    #[arg(long)]
    duplicate: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "sample-mean")]
    estimator: EstimatorArg,
    /// Write the hand history here.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Write the running estimate as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    game: Variant,
    #[arg(long, default_value_t = 1000)]
    iters: u64,
    #[arg(long)]
    out: PathBuf,
    /// Record exploitability every this many iterations (toy games).
    #[arg(long, default_value_t = 0)]
    checkpoint: u64,
    #[arg(long)]
    linear: bool,
    #[arg(long)]
    alternating: bool,
    /// Pot fractions of the hold'em action abstraction.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    fractions: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    raise_cap: u32,
    /// Sampled hold'em deals the abstract tree is built on.
    #[arg(long, default_value_t = 8)]
    deals: usize,
    /// Buckets per round for hold'em (preflop is always the 169 classes).
    #[arg(long, value_delimiter = ',', default_value = "169,8,8,8")]
    buckets: Vec<usize>,
    /// Deals sampled per round to fit the buckets.
    #[arg(long, default_value_t = 100)]
    bucket_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct LbrArgs {
    /// Roster name or blueprint:<profile>.
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "hunl")]
    game: Variant,
    #[arg(long, default_value_t = 2000)]
    hands: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also compute the exact exploitability (toy games only).
    #[arg(long)]
    exact_exploitability: bool,
    #[arg(long, default_value_t = 200)]
    max_boards: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EloArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    agents: Vec<String>,
    #[arg(long, default_value = "hunl")]
    game: Variant,
    /// Deals per pairing, played in duplicate.
    #[arg(long, default_value_t = 200)]
    hands: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Serve(a) => serve(a),
        Command::Match(a) => play_match(a),
        Command::Solve(a) => run_solve(a),
        Command::EvalLbr(a) => eval_lbr(a),
        Command::Replay { files } => replay(&files),
        Command::Report(a) => report(a),
        Command::Elo(a) => elo(a),
    }
}

fn serve(a: ServeArgs) -> Result<()> {
    let mut config = ServerConfig::load(a.config.as_deref())?;
    if let Some(l) = a.listen {
        config.listen = l;
    }
    if let Some(d) = a.data_dir {
        config.data_dir = d;
    }
    if a.ws_listen.is_some() {
        config.ws_listen = a.ws_listen;
    }
    if let Some(c) = a.capacity {
        config.capacity = c;
    }
    if let Some(t) = a.decision_timeout_ms {
        config.decision_timeout_ms = t;
    }
    if let Some(p) = a.illegal_action {
        config.illegal_action = match p {
            IllegalArg::RejectAndRetry => IllegalActionPolicy::RejectAndRetry,
            IllegalArg::Forfeit => IllegalActionPolicy::Forfeit,
        };
    }
    config.validate()?;
    let server = Server::start(config)?;
    println!("listening on {}", server.local_addr());
    if let Some(ws) = server.ws_addr() {
        println!("websocket gateway on ws://{ws}/ws");
    }
    server.join();
    Ok(())
}

fn agent_seed(seed: u64, index: u64) -> u64 {
    deal_seed(seed, u64::MAX - index)
}

fn play_match(a: MatchArgs) -> Result<()> {
    let spec = GameSpec::for_variant(a.game);
    let duplicate = a.duplicate || a.estimator == EstimatorArg::Duplicate;
    let mode = if duplicate {
        MatchMode::Duplicate
    } else {
        MatchMode::Plain
    };
    let plan = MatchPlan::new(spec, a.hands, mode, a.seed);
    let mut first = builtin_agent(&a.a, &spec, agent_seed(a.seed, 0))?;
    let mut second = builtin_agent(&a.b, &spec, agent_seed(a.seed, 1))?;
    let mut writer = match &a.history {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => None,
    };
    let mut records = Vec::new();
    let started = Instant::now();
    run_match_with(&plan, &mut *first, &mut *second, |r| {
        if let Some(w) = writer.as_mut() {
            writeln!(w, "{}", r.to_line()).map_err(|e| holdem_core::evaluation::EvalError::Invalid(e.to_string()))?;
        }
        records.push(r.clone());
        Ok(())
    })?;
    if let Some(mut w) = writer {
        w.flush()?;
    }
    let elapsed = started.elapsed().as_secs_f64();
    let report = if a.estimator == EstimatorArg::Aivat {
        let mut fa = builtin_agent(&a.a, &spec, agent_seed(a.seed, 0))?;
        let mut fb = builtin_agent(&a.b, &spec, agent_seed(a.seed, 1))?;
        let cfg = AivatConfig {
            seed: a.seed,
            ..AivatConfig::default()
        };
        aivat_estimate(&records, &mut *fa, &mut *fb, &mut ExactTreeBaseline::new(), &cfg)?.report
    } else {
        report_from_histories(&records)?
    };
    if let Some(p) = &a.csv {
        std::fs::write(p, report.to_csv())?;
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.to_text());
        println!(
            "throughput     {:.0} hands/min",
            records.len() as f64 / elapsed.max(1e-9) * 60.0
        );
    }
    Ok(())
}

fn run_solve(a: SolveArgs) -> Result<()> {
    let spec = GameSpec::for_variant(a.game);
    let mut side = TreeSidecar {
        game: format!("{:?}", a.game).to_lowercase(),
        ..TreeSidecar::default()
    };
    let tree = if a.game == Variant::Hunl {
        let mut bc = BucketConfig::for_game(&spec);
        bc.buckets = a.buckets.clone();
        bc.samples_per_round = a.bucket_samples;
        bc.seed = a.seed;
        bc.histogram.continuations = Some(8);
        bc.histogram.equity = EquityMethod::MonteCarlo {
            samples: 50,
            seed: a.seed,
        };
        eprintln!("fitting buckets {:?}", bc.buckets);
        let map = BucketMap::build(&spec, bc)?;
        let mut bucket_path = a.out.as_os_str().to_owned();
        bucket_path.push(".buckets");
        let bucket_path = PathBuf::from(bucket_path);
        map.save(&bucket_path)?;
        side.pot_fractions = Some(a.fractions.clone());
        side.raise_cap = Some(a.raise_cap);
        side.buckets = bucket_path.file_name().map(PathBuf::from);
        TreeConfig {
            menu: Some(BetMenu::with_fractions(&a.fractions)),
            cards: Some(Arc::new(map) as Arc<dyn CardAbstraction>),
            deals: Some(
                (0..a.deals as u64)
                    .map(|i| Deal::from_seed(&spec, deal_seed(a.seed, i)))
                    .collect(),
            ),
            raise_cap: Some(a.raise_cap),
            ..TreeConfig::default()
        }
    } else {
        TreeConfig::default()
    };
    let game = build_tree(&spec, &tree)?;
    let stats = game.stats();
    eprintln!("tree: {} nodes, {:?} information sets", stats.nodes, stats.infosets);
    let config = SolverConfig {
        iterations: a.iters,
        mode: Mode::CfrPlus,
        averaging: if a.linear {
            Averaging::Linear
        } else {
            Averaging::Uniform
        },
        update: if a.alternating {
            Update::Alternating
        } else {
            Update::Simultaneous
        },
        exploitability_every: a.checkpoint,
    };
    let result = solve(&game, config)?;
    for p in &result.curve {
        println!("iteration {:>8}  exploitability {:.6e}", p.iteration, p.exploitability);
    }
    result.profile.save(&side.game, &a.out)?;
    if a.game == Variant::Hunl {
        side.save(&a.out)?;
        println!("wrote {} and {}", a.out.display(), sidecar_path(&a.out).display());
    } else {
        let e = game.exploitability(&result.average);
        println!("exploitability {e:.6e} chips ({:.3} mbb/h)", spec.to_mbb(e));
        println!("wrote {}", a.out.display());
    }
    Ok(())
}

fn eval_lbr(a: LbrArgs) -> Result<()> {
    let spec = GameSpec::for_variant(a.game);
    let mut target = builtin_agent(&a.target, &spec, agent_seed(a.seed, 0))?;
    let cfg = LbrConfig {
        hands: a.hands,
        seed: a.seed,
        max_boards: a.max_boards,
        ..LbrConfig::default()
    };
    let lbr = lbr_evaluate(&spec, &mut *target, &cfg)?;
    print!("{}", lbr.report.to_text());
    println!("lbr bound      {:.3} mbb/h", lbr.lower_bound_mbb);
    if a.exact_exploitability {
        let exact = agent_exploitability(&spec, &*target)?;
        println!("exact          {:.3} mbb/h", exact.mbb);
    }
    Ok(())
}

fn replay(files: &[PathBuf]) -> Result<()> {
    for f in files {
        let n = read_history(f)?.len();
        println!("{}: {n} hands replay exactly", f.display());
    }
    Ok(())
}

fn load_all(files: &[PathBuf]) -> Result<Vec<holdem_core::evaluation::HandHistoryRecord>> {
    let mut all = Vec::new();
    for f in files {
        all.extend(read_history(Path::new(f))?);
    }
    Ok(all)
}

fn report(a: ReportArgs) -> Result<()> {
    let records = load_all(&a.files)?;
    let report = report_from_histories(&records)?;
    if let Some(p) = &a.csv {
        std::fs::write(p, report.to_csv())?;
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn elo(a: EloArgs) -> Result<()> {
    if a.agents.len() < 2 {
        bail!("elo needs at least two agents");
    }
    let spec = GameSpec::for_variant(a.game);
    let mut outcomes = Vec::new();
    let mut pairing = 0;
    for i in 0..a.agents.len() {
        for j in i + 1..a.agents.len() {
            let seed = deal_seed(a.seed, pairing);
            pairing += 1;
            let mut x: Box<dyn Agent> = builtin_agent(&a.agents[i], &spec, agent_seed(seed, 0))?;
            let mut y: Box<dyn Agent> = builtin_agent(&a.agents[j], &spec, agent_seed(seed, 1))?;
            let plan = MatchPlan::new(spec, a.hands, MatchMode::Duplicate, seed);
            let mut records = Vec::new();
            run_match_with(&plan, &mut *x, &mut *y, |r| {
                records.push(r.clone());
                Ok(())
            })?;
            let r = report_from_histories(&records)?;
            println!(
                "{:>24} vs {:<24} {:>10.1} mbb/h",
                a.agents[i], a.agents[j], r.mean_mbb[0]
            );
            outcomes.push(Outcome::from_winnings(&a.agents[i], &a.agents[j], r.mean_mbb[0]));
        }
    }
    let mut table = EloTable::default();
    for name in &a.agents {
        table.ratings.insert(name.clone(), table.initial);
    }
    elo_update(&mut table, &outcomes);
    for (name, rating) in table.ranking() {
        println!("{name:<24} {rating:.1}");
    }
    Ok(())
}
