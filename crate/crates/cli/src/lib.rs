//! The `interplay` command line.
//!
//! Exit codes: 0 success, 2 configuration error (bad flags, missing or
//! unreadable files, invalid game configs), 3 runtime error.

pub mod numfmt;

use std::collections::HashMap;
use std::fs;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use interplay_core::explain::{rank_relations, sica};
use interplay_core::{ActionSet, AgentId, GameAction, Parallelism, SeededRng};
use interplay_eval::annotation::{evaluate_rankings, inter_annotator, random_expectation, ListScores, RelationList};
use interplay_eval::convergence::{sbue_convergence, sica_convergence, ConvergenceReport};
use interplay_eval::ranking::{baseline_ranking, BaselineMode};
use interplay_eval::report::{convergence_table, ranking_table, RankingRow};
use interplay_eval::strata::{entropy_bands, shares, strength_entropy};
use interplay_eval::{read_annotations, AnnotationRecord};
use interplay_games::dynamic::{AnyGame, Limits, Live, PinWire, WireGame};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<interplay_core::Error> for CliError {
    fn from(e: interplay_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Bad arguments or actions in a request are the caller's configuration.
fn request_err(e: interplay_core::Error) -> CliError {
    match e {
        interplay_core::Error::InvalidArgument(_) | interplay_core::Error::IllegalAction { .. } => config_err(e),
        e => runtime_err(e),
    }
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "interplay", version, about = "Explainable simulation of mixed-motive multi-agent games")]
pub struct Cli {
    /// Rollout worker threads (0 = all cores, 1 = sequential).
    #[arg(long, global = true, env = "INTERPLAY_WORKERS", default_value_t = 0)]
    pub workers: usize,

    /// Write the main artifact here instead of stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run constrained rollouts and emit the utility matrix.
    Simulate(SimulateArgs),
    /// Utility, relation-matrix, probable-action or trajectory explanation.
    Explain(ExplainArgs),
    /// Alternative actions satisfying a partial query.
    Counterfactual(CounterfactualArgs),
    /// Estimator convergence over sample sizes.
    Converge(ConvergeArgs),
    /// MAP@K of relation rankings against annotations.
    EvalMap(EvalMapArgs),
    /// Play a game to the end with every seat on its policy.
    Play(PlayArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GameArgs {
    /// matrix, cop or skirmish.
    #[arg(long, default_value = "matrix")]
    pub game: String,
    /// Game config file (JSON); for skirmish, the board file.
    #[arg(long, alias = "board")]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// AGENT=ACTION[@DEPTH]; repeatable.
    #[arg(long = "pin")]
    pub pins: Vec<String>,
    /// Also write the utility matrix as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write one JSON line per rollout step.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExplainOp {
    Sbue,
    Sica,
    Probable,
    Trajectory,
}

impl ExplainOp {
    fn name(self) -> &'static str {
        match self {
            ExplainOp::Sbue => "sbue",
            ExplainOp::Sica => "sica",
            ExplainOp::Probable => "probable",
            ExplainOp::Trajectory => "trajectory",
        }
    }
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, value_enum)]
    pub op: ExplainOp,
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// AGENT=ACTION[@DEPTH]; repeatable.
    #[arg(long = "pin")]
    pub pins: Vec<String>,
    /// Add z-standardized utilities (sbue).
    #[arg(long)]
    pub standardize: bool,
    #[arg(long)]
    pub baseline_k: Option<usize>,
    /// Turns of a probable trajectory.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Also write the matrix (sica) or value row (sbue) as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CounterfactualArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long)]
    pub agent: usize,
    /// The action being questioned (canonical text or JSON).
    #[arg(long)]
    pub reference: String,
    /// UNIT:ORDER that alternatives must contain; repeatable.
    #[arg(long)]
    pub require: Vec<String>,
    /// UNIT:ORDER that alternatives must not contain; repeatable.
    #[arg(long)]
    pub forbid: Vec<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub utility_samples: Option<usize>,
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Score candidates by exhaustive expectation instead of rollouts.
    #[arg(long)]
    pub exact_utility: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ConvergeOp {
    Sbue,
    Sica,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, value_enum)]
    pub op: ConvergeOp,
    #[arg(long, value_delimiter = ',', default_value = "100,400,1600")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 2500)]
    pub truth_k: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Pinned action for sbue (default: agent 0's first legal action).
    #[arg(long = "pin")]
    pub pins: Vec<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct EvalMapArgs {
    /// matrix, cop or skirmish.
    #[arg(long, default_value = "skirmish")]
    pub game: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Annotation records (JSON lines).
    #[arg(long)]
    pub annotations: PathBuf,
    /// A second annotator's records, for agreement bounds.
    #[arg(long)]
    pub second: Option<PathBuf>,
    /// Game states (JSON lines of `{state_id, config}`).
    #[arg(long)]
    pub states: PathBuf,
    #[arg(long = "map-k", default_value_t = 2)]
    pub map_k: usize,
    /// Rollouts per relation matrix.
    #[arg(long, default_value_t = 1000)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct PlayArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[arg(long, default_value_t = 1000)]
    pub max_steps: usize,
    /// Step records as JSON lines.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, env = "INTERPLAY_ADDR", default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Largest k an explanation request may use.
    #[arg(long, env = "INTERPLAY_MAX_K", default_value_t = 5000)]
    pub max_k: usize,
    /// Directory for per-session event logs.
    #[arg(long, env = "INTERPLAY_LOG_DIR")]
    pub log_dir: Option<PathBuf>,
    /// Browser origin allowed by CORS (default: any).
    #[arg(long, env = "INTERPLAY_CORS_ORIGIN")]
    pub cors_origin: Option<String>,
}

macro_rules! with_live {
    ($game:expr, $g:ident => $body:expr) => {
        match $game {
            AnyGame::Matrix($g) => $body,
            AnyGame::Cop($g) => $body,
            AnyGame::Skirmish($g) => $body,
        }
    };
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> CliResult<Value> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn default_config(game: &str) -> Value {
    match game {
        "matrix" => json!({"random": {"actions_per_agent": [2, 2, 2]}, "policies": "random"}),
        "skirmish" => json!({"ring": {"agents": 3, "per_agent": 2}}),
        _ => json!({}),
    }
}

fn load_game(args: &GameArgs, workers: usize) -> CliResult<AnyGame> {
    let config = match &args.config {
        Some(path) => read_json(path)?,
        None => default_config(&args.game),
    };
    let mut game = AnyGame::create(&args.game, &config, args.seed).map_err(config_err)?;
    game.set_parallelism(Parallelism::workers(workers));
    Ok(game)
}

/// `AGENT=ACTION[@DEPTH]`; ACTION may be JSON.
pub fn parse_pin(text: &str) -> CliResult<PinWire> {
    let bad = || CliError::Config(format!("bad --pin `{text}` (expected AGENT=ACTION[@DEPTH])"));
    let (agent, rest) = text.split_once('=').ok_or_else(bad)?;
    let agent: usize = agent.trim().parse().map_err(|_| bad())?;
    let (action, depth) = match rest.rsplit_once('@') {
        Some((a, d)) if !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()) => (a, d.parse().map_err(|_| bad())?),
        _ => (rest, 0),
    };
    Ok(PinWire {
        agent,
        action: action_value(action),
        depth,
    })
}

fn action_value(text: &str) -> Value {
    let t = text.trim();
    if t.starts_with('{') || t.starts_with('[') {
        if let Ok(v) = serde_json::from_str(t) {
            return v;
        }
    }
    Value::String(t.to_string())
}

fn parse_pins(pins: &[String]) -> CliResult<Vec<PinWire>> {
    pins.iter().map(|p| parse_pin(p)).collect()
}

fn emit(path: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| runtime_err(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| runtime_err(format!("{}: {e}", path.display())))
}

fn json_text<T: Serialize + ?Sized>(v: &T) -> CliResult<String> {
    numfmt::to_json(v).map_err(runtime_err)
}

fn csv_text(header: &[String], rows: Vec<Vec<f64>>) -> CliResult<String> {
    numfmt::to_csv(header, rows).map_err(runtime_err)
}

fn rows_of(v: &Value) -> Option<Vec<Vec<f64>>> {
    v.as_array()?
        .iter()
        .map(|row| row.as_array()?.iter().map(Value::as_f64).collect())
        .collect()
}

fn no_cap() -> Limits {
    Limits { max_k: usize::MAX }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let workers = cli.workers;
    match cli.command {
        Command::Simulate(a) => simulate(a, workers, &cli.out),
        Command::Explain(a) => explain(a, workers, &cli.out),
        Command::Counterfactual(a) => counterfactual(a, workers, &cli.out),
        Command::Converge(a) => converge(a, workers, &cli.out),
        Command::EvalMap(a) => eval_map(a, workers, &cli.out),
        Command::Play(a) => play(a, workers, &cli.out),
        Command::Serve(a) => serve(a, workers),
    }
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn simulate(a: SimulateArgs, workers: usize, out: &Option<PathBuf>) -> CliResult<()> {
    let game = load_game(&a.game, workers)?;
    let pins = parse_pins(&a.pins)?;
    let (x, trace) = game.simulate(a.k, a.d, &pins, a.game.seed, a.trace.is_some()).map_err(request_err)?;
    let agents = game.agent_names();
    let rows: Vec<Vec<f64>> = (0..x.rows()).map(|i| x.row(i).to_vec()).collect();
    if let Some(path) = &a.csv {
        write_file(path, &csv_text(&agents, rows.clone())?)?;
    }
    if let (Some(path), Some(trace)) = (&a.trace, trace) {
        let mut text = String::new();
        for r in &trace {
            text.push_str(&numfmt::to_json_line(r).map_err(runtime_err)?);
        }
        write_file(path, &text)?;
    }
    let report = json!({
        "agents": agents,
        "k": a.k,
        "d": a.d,
        "seed": a.game.seed,
        "pins": pins,
        "utilities": rows,
    });
    emit(out, &json_text(&report)?)
}

fn explain(a: ExplainArgs, workers: usize, out: &Option<PathBuf>) -> CliResult<()> {
    let game = load_game(&a.game, workers)?;
    let pins = parse_pins(&a.pins)?;
    let params = json!({
        "k": a.k,
        "d": a.d,
        "seed": a.game.seed,
        "pins": pins,
        "standardize": a.standardize,
        "baseline_k": a.baseline_k,
        "horizon": a.horizon,
    });
    let wire = game.explain(a.op.name(), &params, no_cap()).map_err(request_err)?;
    if let Some(path) = &a.csv {
        let rows = rows_of(&wire["matrix"])
            .or_else(|| wire["values"].as_array().and_then(|_| rows_of(&json!([wire["values"]]))))
            .ok_or_else(|| CliError::Config(format!("--csv is not available for {}", a.op.name())))?;
        write_file(path, &csv_text(&game.agent_names(), rows)?)?;
    }
    emit(out, &json_text(&wire)?)
}

fn constraint(polarity: &str, text: &str) -> CliResult<Value> {
    let (unit, order) = text
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("bad constraint `{text}` (expected UNIT:ORDER)")))?;
    Ok(json!({"polarity": polarity, "unit": unit, "order": order}))
}

fn counterfactual(a: CounterfactualArgs, workers: usize, out: &Option<PathBuf>) -> CliResult<()> {
    let game = load_game(&a.game, workers)?;
    let mut constraints = Vec::new();
    for r in &a.require {
        constraints.push(constraint("require", r)?);
    }
    for f in &a.forbid {
        constraints.push(constraint("forbid", f)?);
    }
    let mut params = Map::new();
    params.insert("agent".into(), json!(a.agent));
    params.insert("reference_action".into(), action_value(&a.reference));
    params.insert("constraints".into(), Value::Array(constraints));
    params.insert("seed".into(), json!(a.game.seed));
    params.insert("exact_utility".into(), json!(a.exact_utility));
    let optional = [
        ("kappa", a.kappa.map(|v| json!(v))),
        ("alpha", a.alpha.map(|v| json!(v))),
        ("beta", a.beta.map(|v| json!(v))),
        ("samples", a.samples.map(|v| json!(v))),
        ("utility_samples", a.utility_samples.map(|v| json!(v))),
        ("top_n", a.top_n.map(|v| json!(v))),
    ];
    for (key, v) in optional {
        if let Some(v) = v {
            params.insert(key.into(), v);
        }
    }
    let wire = game.explain("counterfactual", &Value::Object(params), no_cap()).map_err(request_err)?;
    emit(out, &json_text(&wire)?)
}

fn default_pin<E: WireGame>(g: &Live<E>, seed: u64) -> CliResult<PinWire>
where
    E::Action: Serialize,
{
    let agent = AgentId(0);
    let action = match g.env.legal_actions(&g.state, agent) {
        ActionSet::Enumerated(list) => list.into_iter().next(),
        ActionSet::Sampled => g.env.sample_legal(&g.state, agent, &mut SeededRng::new(seed).derive(7).stream(0)),
    }
    .ok_or_else(|| CliError::Config("agent 0 has no legal action to pin; pass --pin".into()))?;
    Ok(PinWire {
        agent: 0,
        action: Value::String(action.canonical()),
        depth: 0,
    })
}

fn converge_live<E: WireGame>(g: &Live<E>, a: &ConvergeArgs) -> CliResult<ConvergenceReport>
where
    E::Action: Serialize,
{
    let sim = g.simulator()?;
    let seed = SeededRng::new(a.game.seed);
    match a.op {
        ConvergeOp::Sbue => {
            let mut pins = parse_pins(&a.pins)?;
            if pins.is_empty() {
                pins.push(default_pin(g, a.game.seed)?);
            }
            let pins = g.pins(&pins).map_err(config_err)?;
            Ok(sbue_convergence(&sim, &g.state, &pins, &a.sizes, a.reps, a.truth_k, seed)?)
        }
        ConvergeOp::Sica => Ok(sica_convergence(&sim, &g.state, a.d, &a.sizes, a.reps, seed)?),
    }
}

fn converge(a: ConvergeArgs, workers: usize, out: &Option<PathBuf>) -> CliResult<()> {
    if a.sizes.is_empty() || a.sizes.contains(&0) {
        return Err(CliError::Config("--sizes needs positive sample sizes".into()));
    }
    let game = load_game(&a.game, workers)?;
    let report = with_live!(&game, g => converge_live(g, &a))?;
    match a.format {
        Format::Json => emit(out, &json_text(&report)?),
        Format::Table => emit(out, &convergence_table(&report).render()),
    }
}

fn read_jsonl(path: &Path) -> CliResult<Vec<Value>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| CliError::Config(format!("{} line {}: {e}", path.display(), n + 1))))
        .collect()
}

fn load_annotations(path: &Path, num_agents: usize) -> CliResult<Vec<AnnotationRecord>> {
    let file = fs::File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    read_annotations(BufReader::new(file), num_agents).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct ListReport {
    random: f64,
    strength: Option<interplay_eval::MapScore>,
    sica: interplay_eval::MapScore,
    iaa: Option<interplay_eval::MapScore>,
}

#[derive(Serialize)]
struct StateReport {
    state_id: String,
    entropy: Option<f64>,
    band: Option<usize>,
}

fn eval_map(a: EvalMapArgs, workers: usize, out: &Option<PathBuf>) -> CliResult<()> {
    let mut games: HashMap<String, AnyGame> = HashMap::new();
    let mut order = Vec::new();
    for line in read_jsonl(&a.states)? {
        let id = line["state_id"]
            .as_str()
            .ok_or_else(|| CliError::Config(format!("{}: every state needs a state_id", a.states.display())))?
            .to_string();
        let mut g = AnyGame::create(&a.game, &line["config"], a.seed)
            .map_err(|e| CliError::Config(format!("state {id}: {e}")))?;
        g.set_parallelism(Parallelism::workers(workers));
        order.push(id.clone());
        games.insert(id, g);
    }
    let p = games
        .values()
        .next()
        .map(AnyGame::num_agents)
        .ok_or_else(|| CliError::Config(format!("{}: no states", a.states.display())))?;
    if games.values().any(|g| g.num_agents() != p) {
        return Err(CliError::Config("all states must have the same number of agents".into()));
    }
    let records = load_annotations(&a.annotations, p)?;
    for r in &records {
        if !games.contains_key(&r.state_id) {
            return Err(CliError::Config(format!("annotation refers to unknown state `{}`", r.state_id)));
        }
    }

    let mut matrices = HashMap::new();
    for id in &order {
        let m = with_live!(&games[id], g => sica(&g.simulator()?, &g.state, a.k, a.d, SeededRng::new(a.seed))?);
        matrices.insert(id.clone(), m);
    }
    let sica_scores = evaluate_rankings(&records, a.map_k, |r| rank_relations(&matrices[&r.state_id], r.agent))?;
    let strength_scores: Option<ListScores> = evaluate_rankings(&records, a.map_k, |r| {
        with_live!(&games[&r.state_id], g => baseline_ranking(&g.env, &g.state, r.agent, BaselineMode::Strength, SeededRng::new(a.seed)))
    })
    .ok();
    let (random_f, random_e) = random_expectation(&records, a.map_k, p)?;
    let iaa = match &a.second {
        Some(path) => Some(inter_annotator(&records, &load_annotations(path, p)?, a.map_k, p)?),
        None => None,
    };

    let entropies: Vec<Option<f64>> = order
        .iter()
        .map(|id| games[id].strength().and_then(|s| shares(&s).and_then(|x| strength_entropy(&x)).ok()))
        .collect();
    let bands = if entropies.len() >= 3 && entropies.iter().all(Option::is_some) {
        let values: Vec<f64> = entropies.iter().flatten().copied().collect();
        Some(entropy_bands(&values)?.band)
    } else {
        None
    };
    let states: Vec<StateReport> = order
        .iter()
        .enumerate()
        .map(|(i, id)| StateReport {
            state_id: id.clone(),
            entropy: entropies[i],
            band: bands.as_ref().map(|b| b[i]),
        })
        .collect();

    let list = |l: RelationList, random: f64| ListReport {
        random,
        strength: strength_scores.as_ref().map(|s| s.get(l).clone()),
        sica: sica_scores.get(l).clone(),
        iaa: iaa.as_ref().map(|s| s.get(l).clone()),
    };
    let enemies = list(RelationList::Enemies, random_e);
    let friends = list(RelationList::Friends, random_f);
    match a.format {
        Format::Json => {
            let report = json!({
                "map_k": a.map_k,
                "n": records.len(),
                "k": a.k,
                "d": a.d,
                "seed": a.seed,
                "enemies": enemies,
                "friends": friends,
                "states": states,
            });
            emit(out, &json_text(&report)?)
        }
        Format::Table => {
            let row = |category: &str, l: &ListReport| RankingRow {
                category: category.into(),
                random: Some(l.random),
                strength: l.strength.as_ref().map(|s| s.value),
                sica: Some(l.sica.value),
                iaa: l.iaa.as_ref().and_then(|s| s.bounds),
                n: records.len(),
            };
            emit(out, &ranking_table(&[row("E", &enemies), row("F", &friends)]).render())
        }
    }
}

fn play(a: PlayArgs, workers: usize, out: &Option<PathBuf>) -> CliResult<()> {
    let mut game = load_game(&a.game, workers)?;
    let mut log = String::new();
    let mut totals = vec![0.0; game.num_agents()];
    let mut steps = 0;
    while !game.is_terminal() && steps < a.max_steps {
        let record = game.act(&[])?;
        for (t, r) in totals.iter_mut().zip(&record.rewards) {
            *t += r;
        }
        log.push_str(&numfmt::to_json_line(&record).map_err(runtime_err)?);
        steps += 1;
    }
    if let Some(path) = &a.log {
        write_file(path, &log)?;
    }
    let summary = json!({
        "game": game.name(),
        "seed": a.game.seed,
        "steps": steps,
        "terminal": game.is_terminal(),
        "total_rewards": totals,
        "state": game.view(),
    });
    emit(out, &json_text(&summary)?)
}

fn serve(a: ServeArgs, workers: usize) -> CliResult<()> {
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let config = interplay_service::ServiceConfig {
        addr: a.addr,
        max_k: a.max_k,
        workers,
        log_dir: a.log_dir,
        cors_origin: a.cors_origin,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(runtime_err)?;
    runtime.block_on(interplay_service::serve(config)).map_err(runtime_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pins_parse() {
        let p = parse_pin("1=a0").unwrap();
        assert_eq!((p.agent, p.action.clone(), p.depth), (1, json!("a0"), 0));
        let p = parse_pin("0=R1:attack(N1) R2:hold@2").unwrap();
        assert_eq!((p.action.as_str().unwrap(), p.depth), ("R1:attack(N1) R2:hold", 2));
        let p = parse_pin(r#"2={"kind":"announce","a":"guilty","b":"guilty"}"#).unwrap();
        assert_eq!(p.action["kind"], "announce");
        assert!(parse_pin("x=a0").is_err());
        assert!(parse_pin("a0").is_err());
    }

    #[test]
    fn missing_config_is_a_config_error() {
        let args = GameArgs {
            game: "skirmish".into(),
            config: Some("/nonexistent/board.json".into()),
            seed: 0,
        };
        let err = load_game(&args, 1).err().unwrap();
        assert_eq!(err.code(), EXIT_CONFIG);
        assert!(err.message().contains("/nonexistent/board.json"));
    }
}
