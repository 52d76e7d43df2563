mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relplan::bench::{emit_report, run_corpus, summary_table, Corpus, ReportFormat, RunConfig};
use relplan::datagen::{gen_blocks, gen_household, label_greedy, label_regression, load_dataset, save_dataset, BlocksSpec, Category, GreedyConfig, LabeledProblem};
use relplan::fixtures::{BLOCKS_DOMAIN, HOUSEHOLD_DOMAIN};
use relplan::guidance::{encode_problem, example_program, plan_with_guidance, train, AbstractionConfig, Coords, EncoderKind, FeatureSchema, GuidanceModel, SpatialMode, TrainConfig, TrainingExample};
use relplan::nnet::grad_check;
use relplan::pddl::{load_task, validate_problem, GroundTask, PddlError};
use relplan::planner::{search, Heuristic, Outcome, SearchConfig, SearchResult, Strategy};
use relplan::regress::{regression_search_with, RegressConfig};

const EXIT_UNSOLVABLE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_INTERNAL: u8 = 70;

/// A bad flag or config value.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Input that could not be read or understood.
#[derive(Debug)]
struct DataError(String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

fn data<E: fmt::Display>(e: E) -> anyhow::Error {
    DataError(e.to_string()).into()
}

#[derive(Parser)]
#[command(name = "relplan", version, about = "Heuristic planning with learned object-importance abstractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and ground a task and print its size and status.
    Parse(TaskArgs),
    /// Forward heuristic search.
    Plan(PlanArgs),
    /// Backward best-first regression search.
    Regress(RegressArgs),
    /// Generate problem files and a corpus manifest.
    Gen(GenArgs),
    /// Label the tasks of a corpus with sufficient object sets.
    Label(LabelArgs),
    /// Train an importance model on a labelled dataset.
    Train(TrainArgs),
    /// Plan on one task with a trained model and threshold backoff.
    Guide(GuideArgs),
    /// Run configurations over a corpus and write a report.
    Bench(BenchArgs),
    /// Compare analytic and finite-difference gradients on random graphs.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct TaskArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long, default_value = "gbfs")]
    strategy: String,
    #[arg(long, default_value = "hff")]
    heuristic: String,
    /// Seconds; defaults to $RELPLAN_TIMEOUT or 10.
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    helpful: bool,
    #[arg(long)]
    exploration: bool,
    #[arg(long)]
    lazy: bool,
    /// Shorthand for --helpful --exploration --lazy.
    #[arg(long)]
    enhanced: bool,
    #[arg(long)]
    max_expansions: Option<u64>,
}

#[derive(Args)]
struct RegressArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    max_expansions: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenDomain {
    Blocks,
    Household,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    domain: GenDomain,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Blocks: core blocks.
    #[arg(long, default_value_t = 10)]
    blocks: usize,
    /// Blocks: goal blocks.
    #[arg(long, default_value_t = 5)]
    goal: usize,
    /// Blocks: blocks kept out of the goal, in towers of their own.
    #[arg(long, default_value_t = 0)]
    distractors: usize,
    #[arg(long, default_value_t = relplan::datagen::DEFAULT_MAX_GOAL_HEIGHT)]
    max_goal_height: usize,
    /// Household: task category.
    #[arg(long, default_value = "PaP")]
    category: String,
    #[arg(long, default_value_t = 4)]
    receptacles: usize,
    #[arg(long, default_value_t = 5)]
    objects: usize,
    /// Split tag written to the manifest.
    #[arg(long, default_value = "")]
    split: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelMethod {
    Greedy,
    Regression,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "greedy")]
    method: LabelMethod,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stop_at: Option<usize>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long)]
    first_failure: bool,
    /// Validating planner timeout per call.
    #[arg(long)]
    timeout: Option<f64>,
    /// Regression: label greedily when regression fails.
    #[arg(long)]
    fallback: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoder {
    Ploi,
    Gat,
}

impl From<Encoder> for EncoderKind {
    fn from(e: Encoder) -> Self {
        match e {
            Encoder::Ploi => EncoderKind::PloiMP,
            Encoder::Gat => EncoderKind::Gat,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Spatial {
    Off,
    All,
    Goal,
}

impl From<Spatial> for SpatialMode {
    fn from(s: Spatial) -> Self {
        match s {
            Spatial::Off => SpatialMode::Off,
            Spatial::All => SpatialMode::AllEdges,
            Spatial::Goal => SpatialMode::GoalEdges,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "ploi")]
    encoder: Encoder,
    #[arg(long, value_enum, default_value = "all")]
    spatial: Spatial,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long, default_value_t = relplan::nnet::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = relplan::nnet::DEFAULT_LEARNING_RATE)]
    lr: f64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the per-epoch loss, one value per line.
    #[arg(long)]
    loss_trace: Option<PathBuf>,
}

#[derive(Args)]
struct GuideArgs {
    #[command(flatten)]
    task: TaskArgs,
    #[arg(long)]
    model: PathBuf,
    /// JSON object of object name to [x, y].
    #[arg(long)]
    coords: Option<PathBuf>,
    #[arg(long)]
    timeout: Option<f64>,
    #[arg(long)]
    one_shot: bool,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    theta_obj: Option<f64>,
    #[arg(long)]
    theta_rel: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Plain GBFS with h_FF instead of the enhanced variant.
    #[arg(long)]
    plain: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Run configuration file; repeat for several.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for every config (overrides the files).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output prefix; writes PREFIX.jsonl and PREFIX.tsv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timeout: Option<f64>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, value_enum, default_value = "ploi")]
    encoder: Encoder,
    #[arg(long, default_value_t = 10)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
}

fn default_timeout(flag: Option<f64>) -> Result<f64> {
    let t = match flag {
        Some(t) => t,
        None => match std::env::var("RELPLAN_TIMEOUT") {
            Ok(v) => v.trim().parse().map_err(|_| Usage(format!("RELPLAN_TIMEOUT: cannot parse '{v}'")))?,
            Err(_) => relplan::planner::DEFAULT_TIMEOUT,
        },
    };
    if !(t > 0.0 && t.is_finite()) {
        bail!(Usage(format!("--timeout must be positive, got {t}")));
    }
    Ok(t)
}

fn load(args: &TaskArgs) -> Result<GroundTask> {
    let (_, _, task) = load_task(&args.domain, &args.problem).map_err(|e: PddlError| data(format!("{}: {e}", args.problem.display())))?;
    Ok(task)
}

fn outcome_code(o: &Outcome) -> u8 {
    match o {
        Outcome::Solved(_) => 0,
        Outcome::Unsolvable => EXIT_UNSOLVABLE,
        Outcome::Timeout => EXIT_TIMEOUT,
    }
}

fn print_result(task: &GroundTask, r: &SearchResult) {
    if let Some(p) = r.plan() {
        print!("{}", p.to_text(task));
    }
    let len = r.plan().map_or_else(|| "-".to_string(), |p| p.len().to_string());
    println!(
        "; status {} length {} expanded {} generated {} evaluations {} seconds {:.3}",
        r.status_label(),
        len,
        r.stats.expanded,
        r.stats.generated,
        r.stats.evaluations,
        r.stats.wall_seconds
    );
}

fn cmd_parse(a: &TaskArgs) -> Result<u8> {
    let task = load(a)?;
    let status = validate_problem(&task);
    println!("task {}", task.name);
    println!("objects {}", task.objects.len());
    println!("atoms {}", task.num_atoms());
    println!("actions {}", task.actions.len());
    println!("goal objects {}", task.goal_objects().len());
    println!("status {}", status.label());
    Ok(0)
}

fn cmd_plan(a: &PlanArgs) -> Result<u8> {
    let strategy: Strategy = a.strategy.parse().map_err(|e: String| Usage(format!("--strategy: {e}")))?;
    let heuristic: Heuristic = a.heuristic.parse().map_err(|e: String| Usage(format!("--heuristic: {e}")))?;
    let cfg = SearchConfig {
        strategy,
        heuristic,
        helpful_actions: a.helpful || a.enhanced,
        exploration: a.exploration || a.enhanced,
        lazy: a.lazy || a.enhanced,
        timeout: default_timeout(a.timeout)?,
        max_expansions: a.max_expansions,
        ..Default::default()
    };
    cfg.validate().map_err(|e| Usage(format!("--strategy/--heuristic: {e}")))?;
    let task = load(&a.task)?;
    let r = search(&task, &cfg);
    print_result(&task, &r);
    Ok(outcome_code(&r.outcome))
}

fn cmd_regress(a: &RegressArgs) -> Result<u8> {
    let mut cfg = RegressConfig { timeout: default_timeout(a.timeout)?, ..Default::default() };
    if let Some(m) = a.max_expansions {
        cfg.max_expansions = m;
    }
    let task = load(&a.task)?;
    let r = regression_search_with(&task, &cfg);
    print_result(&task, &r);
    Ok(outcome_code(&r.outcome))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cmd_gen(a: &GenArgs) -> Result<u8> {
    let category: Option<Category> = match a.domain {
        GenDomain::Household => Some(a.category.parse().map_err(|e: String| Usage(format!("--category: {e}")))?),
        GenDomain::Blocks => None,
    };
    if matches!(a.domain, GenDomain::Blocks) && (a.goal > a.blocks || a.goal == 0) {
        bail!(Usage(format!("--goal must be in 1..={} (the --blocks count)", a.blocks)));
    }
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let domain_text = match a.domain {
        GenDomain::Blocks => BLOCKS_DOMAIN,
        GenDomain::Household => HOUSEHOLD_DOMAIN,
    };
    write(&a.out.join("domain.pddl"), domain_text)?;
    let mut manifest = String::new();
    for i in 0..a.count {
        let seed = a.seed.wrapping_add(i as u64);
        let (g, tag) = match category {
            None => {
                let spec = BlocksSpec { max_goal_height: a.max_goal_height, ..BlocksSpec::new(a.blocks, a.goal, a.distractors, seed) };
                (gen_blocks(&spec), "blocks".to_string())
            }
            Some(c) => {
                let spec = relplan::datagen::HouseholdSpec::new(c, a.receptacles, a.objects, seed);
                (gen_household(&spec).map_err(|e| Usage(e.to_string()))?, c.to_string())
            }
        };
        let id = format!("p{i:03}");
        write(&a.out.join(format!("{id}.pddl")), &g.problem.to_string())?;
        let mut line = format!("{id} domain.pddl {id}.pddl {tag}");
        if !a.split.is_empty() {
            line.push_str(&format!(" {}", a.split));
        }
        if let Some(c) = &g.coords {
            write(&a.out.join(format!("{id}.coords")), &serde_json::to_string(c)?)?;
            line.push_str(&format!(" coords={id}.coords"));
        }
        manifest.push_str(&line);
        manifest.push('\n');
    }
    write(&a.out.join("corpus.txt"), &manifest)?;
    println!("wrote {} problems to {}", a.count, a.out.display());
    Ok(0)
}

fn cmd_label(a: &LabelArgs) -> Result<u8> {
    let timeout = default_timeout(a.timeout)?;
    let corpus = Corpus::load(&a.corpus).map_err(data)?;
    let greedy = GreedyConfig { search: SearchConfig::enhanced_gbfs(timeout), first_failure: a.first_failure, repeats: a.repeats.max(1) };
    let mut out = Vec::new();
    for (i, e) in corpus.entries().iter().enumerate() {
        let (d, p) = e.source.texts().map_err(data)?;
        let task = relplan::pddl::load_task_text(&d, &p).map_err(|err| data(format!("{}: {err}", e.id)))?.2;
        let seed = a.seed.wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labeling = match a.method {
            LabelMethod::Greedy => label_greedy(&task, &greedy, &mut rng, seed, a.stop_at),
            LabelMethod::Regression => match label_regression(&task, &RegressConfig { timeout, ..Default::default() }) {
                Err(err) if a.fallback => {
                    eprintln!("{}: {err}; using greedy labels", e.id);
                    label_greedy(&task, &greedy, &mut rng, seed, a.stop_at).map(|mut l| {
                        if let relplan::datagen::Provenance::GreedyRandom { regression_fallback, .. } = &mut l.provenance {
                            *regression_fallback = true;
                        }
                        l
                    })
                }
                r => r,
            },
        };
        match labeling {
            Ok(l) => {
                println!("{} positives {} of {}", e.id, l.positives().len(), task.objects.len());
                out.push(LabeledProblem::new(d, p, l, e.coords.clone()));
            }
            Err(err) => eprintln!("{}: skipped: {err}", e.id),
        }
    }
    save_dataset(&a.out, &out).map_err(data)?;
    println!("wrote {} labelled problems to {}", out.len(), a.out.display());
    Ok(0)
}

fn cmd_train(a: &TrainArgs) -> Result<u8> {
    let data_set = load_dataset(&a.dataset).map_err(data)?;
    if data_set.is_empty() {
        bail!(DataError(format!("{} holds no problems", a.dataset.display())));
    }
    let spatial: SpatialMode = a.spatial.into();
    let first = data_set[0].task().map_err(data)?;
    let schema = FeatureSchema::from_task(&first, spatial);
    let mut examples = Vec::new();
    for p in &data_set {
        let task = p.task().map_err(data)?;
        let graph = encode_problem(&task, &schema, p.coords.as_ref()).map_err(data)?;
        examples.push(TrainingExample { graph, labels: p.label_vector(&task) });
    }
    let kind: EncoderKind = a.encoder.into();
    let d = GuidanceModel::default_for(kind, schema.clone(), a.seed);
    let model = GuidanceModel::new(kind, schema, a.rounds.unwrap_or(d.rounds), a.hidden.unwrap_or(d.hidden), a.seed);
    let cfg = TrainConfig { epochs: a.epochs, lr: a.lr, lambda: a.lambda };
    let (trained, trace) = train(model, &examples, &cfg).map_err(data)?;
    trained.save(&a.out).map_err(data)?;
    if let Some(path) = &a.loss_trace {
        let text: String = trace.iter().map(|l| format!("{l}\n")).collect();
        write(path, &text)?;
    }
    println!("trained {} on {} problems: loss {:.4} -> {:.4}", kind.name(), examples.len(), trace.first().unwrap_or(&0.0), trace.last().unwrap_or(&0.0));
    Ok(0)
}

fn cmd_guide(a: &GuideArgs) -> Result<u8> {
    let timeout = default_timeout(a.timeout)?;
    let d = AbstractionConfig::default();
    let acfg = AbstractionConfig {
        theta_obj: a.theta_obj.unwrap_or(d.theta_obj),
        theta_rel: a.theta_rel.unwrap_or(d.theta_rel),
        gamma: a.gamma.unwrap_or(d.gamma),
        one_shot: a.one_shot,
        top_k: a.top_k,
        ..d
    };
    acfg.validate().map_err(|e| Usage(e.to_string()))?;
    let task = load(&a.task)?;
    let model = GuidanceModel::load(&a.model).map_err(data)?;
    let coords: Option<Coords> = match &a.coords {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| data(format!("{}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let cfg = if a.plain { SearchConfig::gbfs_ff(timeout) } else { SearchConfig::enhanced_gbfs(timeout) };
    let g = match plan_with_guidance(&task, &model, coords.as_ref(), &cfg, &acfg) {
        Ok(g) => g,
        Err(relplan::guidance::GuidanceError::KTooSmall { k, goal_objects }) => {
            bail!(Usage(format!("--top-k {k} is below the {goal_objects} goal objects")))
        }
        Err(e) => return Err(data(e)),
    };
    print_result(&task, &g.result);
    let line = serde_json::json!({
        "status": g.result.status_label(),
        "plan_length": g.result.plan().map(|p| p.len()),
        "rounds": g.rounds_used,
        "objects_kept": g.objects_kept,
        "fell_back": g.fell_back,
        "seconds": g.result.stats.wall_seconds,
    });
    println!("{line}");
    Ok(outcome_code(&g.result.outcome))
}

fn cmd_bench(a: &BenchArgs) -> Result<u8> {
    let timeout = default_timeout(a.timeout)?;
    let mut configs: Vec<RunConfig> = Vec::new();
    for path in &a.configs {
        let mut c = config::load_run_config(path, timeout)?;
        if let Some(j) = a.jobs {
            if j == 0 {
                bail!(Usage("--jobs must be at least 1".into()));
            }
            c.parallelism = j;
        }
        if configs.iter().any(|o| o.name == c.name) {
            c.name = format!("{}#{}", c.name, configs.len());
        }
        configs.push(c);
    }
    let corpus = Corpus::load(&a.corpus).map_err(data)?;
    let report = run_corpus(&corpus, &configs, a.seed);
    if let Some(prefix) = &a.out {
        let jsonl = prefix.with_extension("jsonl");
        emit_report(&report, &jsonl, ReportFormat::Jsonl).map_err(data)?;
        emit_report(&report, &prefix.with_extension("tsv"), ReportFormat::Tsv).map_err(data)?;
    }
    for r in &report.results {
        println!("{}\t{}\t{}\t{}\t{:.3}", r.config, r.id, r.status.label(), r.plan_length.map_or("-".to_string(), |l| l.to_string()), r.wall_seconds);
    }
    print!("{}", summary_table(&report));
    Ok(0)
}

fn cmd_gradcheck(a: &GradcheckArgs) -> Result<u8> {
    if a.samples == 0 || !(a.eps > 0.0) {
        bail!(Usage("--samples must be positive and --eps > 0".into()));
    }
    let kind: EncoderKind = a.encoder.into();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..a.samples {
        let n = rng.gen_range(3..=10);
        let spec = BlocksSpec::new(n, rng.gen_range(1..=n), 0, rng.gen());
        let g = gen_blocks(&spec);
        let task = relplan::pddl::load_task_text(BLOCKS_DOMAIN, &g.problem.to_string()).map_err(|e| anyhow::anyhow!(e))?.2;
        let schema = FeatureSchema::from_task(&task, SpatialMode::AllEdges);
        let graph = encode_problem(&task, &schema, g.coords.as_ref())?;
        let labels = (0..graph.n_nodes).map(|_| f64::from(rng.gen_bool(0.5))).collect();
        let model = GuidanceModel::new(kind, schema, 2, 8, rng.gen());
        let ex = TrainingExample { graph, labels };
        let r = grad_check(example_program(&model, &ex, rng.gen_range(0.1..0.9)), &model.params, a.eps)?;
        worst = worst.max(r.max_rel_error);
        checked += r.checked;
    }
    println!("{} samples {} parameters checked max relative error {worst:e}", kind.name(), checked);
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Parse(a) => cmd_parse(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Regress(a) => cmd_regress(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Label(a) => cmd_label(a),
        Command::Train(a) => cmd_train(a),
        Command::Guide(a) => cmd_guide(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.chain().any(|c| c.is::<Usage>()) {
                EXIT_USAGE
            } else if e.chain().any(|c| c.is::<DataError>()) {
                EXIT_DATA
            } else {
                EXIT_INTERNAL
            };
            ExitCode::from(code)
        }
    }
}
