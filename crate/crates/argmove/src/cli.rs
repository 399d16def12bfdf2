//! The `argmove` command line.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use argmove_core::corpus::{split_corpus, SplitRatios, SplitStrategy};
use argmove_core::evaluation::{
    candidate_rows, evaluate_candidate_labels, match_moves, move_rows, prf, MatchCounts,
};
use argmove_core::labeler::{train_baseline, TrainConfig, TrainingExample};
use argmove_core::pipeline::{annotate, prepare_example};
use argmove_core::segmenter::{align_gold, segment_candidates, AlignOptions};
use argmove_core::stats::analysis::{analyze_development, analyze_quality};
use argmove_core::stats::{EstimationMethod, RatioScale};
use argmove_core::synthgen::{generate_corpus, GeneratorConfig};
use argmove_core::text::CharIndex;
use argmove_core::{AnnotatedEssay, Essay, SegmentationRules};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::backend::{self, resolve_endpoint, BackendDescriptor};
use crate::config::RunConfig;
use crate::format;
use crate::report::{development_table, eval_table, quality_table, ReportFormat, Table};
use crate::run::par_map;

#[derive(Debug, Parser)]
#[command(name = "argmove", version, about = "Annotate argumentative moves in essays and analyse them")]
pub struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for per-essay stages (0 = all cores).
    #[arg(long, short = 'j', global = true)]
    pub jobs: Option<usize>,
    /// Report format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<ReportFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a gold-annotated synthetic corpus.
    GenSynth(GenSynthArgs),
    /// Split a corpus into training, validation and application sets.
    Split(SplitArgs),
    /// Print candidate moves of each essay.
    Segment(SegmentArgs),
    /// Segment gold essays and label candidates for training.
    PrepareTrain(PrepareArgs),
    /// Train the baseline classifier.
    TrainBaseline(TrainArgs),
    /// Segment, classify and merge: emits model annotations.
    Annotate(AnnotateArgs),
    /// Score predicted annotations against gold.
    Evaluate(EvaluateArgs),
    /// Move ratios by writing quality: ANOVA, Bonferroni, MANOVA.
    AnalyzeQuality(QualityArgs),
    /// Move ratios over waves: random-intercept regressions.
    AnalyzeDevelopment(DevelopmentArgs),
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    /// Generator configuration (TOML).
    #[arg(long, value_name = "FILE")]
    pub synth_config: Option<PathBuf>,
    #[arg(long)]
    pub learners: Option<usize>,
    #[arg(long)]
    pub waves: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop time trends and the quality effect.
    #[arg(long)]
    pub null: bool,
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    ByEssay,
    ByLearner,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Receives training.jsonl, validation.jsonl and application.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Training, validation and application shares.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub ratios: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
    /// Move gold boundaries inside a candidate to its end.
    #[arg(long)]
    pub snap: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training file from prepare-train.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Model file to write.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    Baseline,
    Remote,
    Oracle,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Baseline model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Classifier service URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Gold corpus for the oracle backend.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Classify in windows of at most this many characters.
    #[arg(long)]
    pub char_budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalLevel {
    Moves,
    Candidates,
    Both,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted annotations.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub level: EvalLevel,
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Fraction,
    Percent,
}

impl From<ScaleArg> for RatioScale {
    fn from(s: ScaleArg) -> RatioScale {
        match s {
            ScaleArg::Fraction => RatioScale::Fraction,
            ScaleArg::Percent => RatioScale::Percent,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Ml,
    Reml,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Default: fraction.
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DevelopmentArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    /// Default: percent.
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, short, default_value = "-")]
    pub out: PathBuf,
}

/// Exit status 2 for usage errors, 1 for data errors.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

/// Writes to a file, or to `stdout` for `-`.
fn emit(path: &Path, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    if path == Path::new("-") {
        match f(stdout).and_then(|_| stdout.flush()) {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(data(e)),
            _ => Ok(()),
        }
    } else {
        let mut w = format::create(path).map_err(|e| data(e.in_file(path)))?;
        f(&mut w).and_then(|_| w.flush()).map_err(|e| data(format!("{}: {e}", path.display())))
    }
}

struct Ctx<'a> {
    config: RunConfig,
    jobs: usize,
    format: ReportFormat,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn align(&self) -> AlignOptions {
        AlignOptions { snap: self.config.align.snap }
    }

    fn rules(&self) -> &SegmentationRules {
        &self.config.segmentation
    }

    fn table(&mut self, path: &Path, tables: &[Table]) -> Result<(), CliError> {
        let text: Vec<String> = tables.iter().map(|t| t.render(self.format)).collect();
        emit(path, self.stdout, |w| w.write_all(text.join("\n").as_bytes()))
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return if code == 0 { 0 } else { 2 };
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "argmove: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| CliError::Usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    let jobs = cli.jobs.unwrap_or(config.jobs);
    let format = cli.format.unwrap_or(config.format);
    let mut ctx = Ctx { config, jobs, format, stdout, stderr };
    match cli.command {
        Command::GenSynth(a) => gen_synth(&mut ctx, a),
        Command::Split(a) => split(&mut ctx, a),
        Command::Segment(a) => segment(&mut ctx, a),
        Command::PrepareTrain(a) => prepare_train(&mut ctx, a),
        Command::TrainBaseline(a) => train(&mut ctx, a),
        Command::Annotate(a) => annotate_cmd(&mut ctx, a),
        Command::Evaluate(a) => evaluate(&mut ctx, a),
        Command::AnalyzeQuality(a) => quality(&mut ctx, a),
        Command::AnalyzeDevelopment(a) => development(&mut ctx, a),
    }
}

fn gen_synth(ctx: &mut Ctx<'_>, a: GenSynthArgs) -> Result<(), CliError> {
    let mut cfg = match &a.synth_config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            toml::from_str::<GeneratorConfig>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => GeneratorConfig::default(),
    };
    if let Some(n) = a.learners {
        cfg.learners = n;
    }
    if let Some(w) = a.waves {
        cfg.waves = w;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.null {
        cfg = cfg.null();
    }
    let corpus = generate_corpus(&cfg).map_err(|e| CliError::Usage(format!("generator config: {e}")))?;
    emit(&a.out, ctx.stdout, |w| format::write_corpus(w, &corpus))?;
    let _ = writeln!(ctx.stderr, "generated {} essays", corpus.len());
    Ok(())
}

fn split(ctx: &mut Ctx<'_>, a: SplitArgs) -> Result<(), CliError> {
    let corpus = format::read_corpus_file(&a.input).map_err(data)?;
    let r = a.ratios.unwrap_or_else(|| ctx.config.split.ratios.to_vec());
    let ratios = SplitRatios::new(r[0], r[1], r[2]);
    let seed = a.seed.unwrap_or(ctx.config.split.seed);
    let strategy = match a.strategy {
        Some(StrategyArg::ByEssay) => SplitStrategy::ByEssay,
        Some(StrategyArg::ByLearner) => SplitStrategy::ByLearner,
        None => ctx.config.split.strategy,
    };
    let s = split_corpus(corpus, ratios, seed, strategy).map_err(data)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| data(format!("{}: {e}", a.out_dir.display())))?;
    let mut out = io::sink();
    emit(&a.out_dir.join("training.jsonl"), &mut out, |w| format::write_corpus(w, &s.training))?;
    emit(&a.out_dir.join("validation.jsonl"), &mut out, |w| format::write_corpus(w, &s.validation))?;
    emit(&a.out_dir.join("application.jsonl"), &mut out, |w| format::write_essays(w, &s.application))?;
    let _ = writeln!(
        ctx.stdout,
        "training\t{}\nvalidation\t{}\napplication\t{}",
        s.training.len(),
        s.validation.len(),
        s.application.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct CandidateRecord<'a> {
    start: usize,
    end: usize,
    text: &'a str,
}

#[derive(Serialize)]
struct SegmentRecord<'a> {
    essay_id: &'a str,
    candidates: Vec<CandidateRecord<'a>>,
}

fn essays_of(path: &Path) -> Result<Vec<Essay>, CliError> {
    Ok(format::read_documents_file(path).map_err(data)?.into_iter().map(|d| d.into_essay()).collect())
}

fn segment(ctx: &mut Ctx<'_>, a: SegmentArgs) -> Result<(), CliError> {
    let essays = essays_of(&a.input)?;
    let rules = ctx.rules().clone();
    let lines = par_map(ctx.jobs, &essays, |e| {
        let idx = CharIndex::new(e.text());
        let candidates = segment_candidates(e.text(), &rules)
            .iter()
            .map(|c| CandidateRecord { start: c.span.start, end: c.span.end, text: idx.slice(c.span) })
            .collect();
        serde_json::to_string(&SegmentRecord { essay_id: e.essay_id(), candidates }).expect("records serialize")
    })
    .map_err(data)?;
    emit(&a.out, ctx.stdout, |w| lines.iter().try_for_each(|l| writeln!(w, "{l}")))
}

fn prepare_train(ctx: &mut Ctx<'_>, a: PrepareArgs) -> Result<(), CliError> {
    let corpus = format::read_corpus_file(&a.input).map_err(data)?;
    let rules = ctx.rules().clone();
    let align = AlignOptions { snap: a.snap || ctx.config.align.snap };
    let examples: Vec<TrainingExample> = par_map(ctx.jobs, &corpus, |e| prepare_example(e, &rules, align))
        .map_err(data)?
        .into_iter()
        .map(|r| r.map(|p| p.example))
        .collect::<Result<_, _>>()
        .map_err(data)?;
    emit(&a.out, ctx.stdout, |w| format::write_training(w, &examples))?;
    let candidates: usize = examples.iter().map(|e| e.labels.len()).sum();
    let _ = writeln!(ctx.stderr, "prepared {} essays, {candidates} candidates", examples.len());
    Ok(())
}

fn train(ctx: &mut Ctx<'_>, a: TrainArgs) -> Result<(), CliError> {
    let examples = format::open(&a.input).and_then(format::parse_training).map_err(|e| data(e.in_file(&a.input)))?;
    let base = ctx.config.train.clone();
    let cfg = TrainConfig {
        epochs: a.epochs.unwrap_or(base.epochs),
        learning_rate: a.learning_rate.unwrap_or(base.learning_rate),
        l2: a.l2.unwrap_or(base.l2),
        batch_size: a.batch_size.or(base.batch_size),
        seed: a.seed.unwrap_or(base.seed),
        features: base.features,
    };
    let model = train_baseline(&examples, &cfg).map_err(|e| match e {
        argmove_core::labeler::TrainError::InvalidConfig(_) => CliError::Usage(e.to_string()),
        _ => data(e),
    })?;
    emit(&a.out, ctx.stdout, |w| format::write_model(w, &model))?;
    let _ = writeln!(ctx.stderr, "trained {} epochs, final loss {:.6}", cfg.epochs, model.metadata.final_loss);
    Ok(())
}

fn descriptor(ctx: &Ctx<'_>, a: &AnnotateArgs) -> Result<BackendDescriptor, CliError> {
    let configured = ctx.config.backend.clone();
    let kind = a.backend.or(match &configured {
        Some(BackendDescriptor::Baseline { .. }) => Some(BackendKind::Baseline),
        Some(BackendDescriptor::Remote { .. }) => Some(BackendKind::Remote),
        Some(BackendDescriptor::Oracle { .. }) => Some(BackendKind::Oracle),
        None => None,
    });
    let missing = |what: &str| CliError::Usage(format!("{what} required for this backend"));
    let mut d = match (kind, configured) {
        (None, _) => return Err(CliError::Usage("no backend: pass --backend or set [backend] in the config".into())),
        (Some(BackendKind::Baseline), c) => {
            let from_config = match c {
                Some(BackendDescriptor::Baseline { model, char_budget }) => Some((model, char_budget)),
                _ => None,
            };
            let model = a.model.clone().or(from_config.as_ref().map(|c| c.0.clone())).ok_or_else(|| missing("--model"))?;
            BackendDescriptor::Baseline { model, char_budget: from_config.and_then(|c| c.1) }
        }
        (Some(BackendKind::Remote), Some(d @ BackendDescriptor::Remote { .. })) => d,
        (Some(BackendKind::Remote), _) => BackendDescriptor::remote(None),
        (Some(BackendKind::Oracle), c) => {
            let configured = match c {
                Some(BackendDescriptor::Oracle { gold }) => Some(gold),
                _ => None,
            };
            BackendDescriptor::Oracle { gold: a.gold.clone().or(configured).ok_or_else(|| missing("--gold"))? }
        }
    };
    match &mut d {
        BackendDescriptor::Remote { endpoint, char_budget, .. } => {
            *endpoint = resolve_endpoint(a.endpoint.clone(), endpoint.take());
            if a.char_budget.is_some() {
                *char_budget = a.char_budget;
            }
            if endpoint.is_none() {
                return Err(missing("--endpoint or ARGMOVE_BACKEND_URL"));
            }
        }
        BackendDescriptor::Baseline { char_budget, .. } if a.char_budget.is_some() => *char_budget = a.char_budget,
        _ => {}
    }
    Ok(d)
}

fn annotate_cmd(ctx: &mut Ctx<'_>, a: AnnotateArgs) -> Result<(), CliError> {
    let d = descriptor(ctx, &a)?;
    let essays = essays_of(&a.input)?;
    let backend = backend::load(&d, ctx.rules(), ctx.align()).map_err(data)?;
    let rules = ctx.rules().clone();
    let budget = d.char_budget();
    let results = par_map(ctx.jobs, &essays, |e| annotate(e, &rules, &backend, budget)).map_err(data)?;
    let mut out = Vec::with_capacity(essays.len());
    for (e, r) in essays.into_iter().zip(results) {
        out.push(r.map_err(data)?.into_essay(e).map_err(data)?);
    }
    emit(&a.out, ctx.stdout, |w| format::write_corpus(w, &out))?;
    let _ = writeln!(ctx.stderr, "annotated {} essays", out.len());
    Ok(())
}

fn evaluate(ctx: &mut Ctx<'_>, a: EvaluateArgs) -> Result<(), CliError> {
    let pred = format::read_corpus_file(&a.pred).map_err(data)?;
    let gold = format::read_corpus_file(&a.gold).map_err(data)?;
    let by_id: HashMap<&str, &AnnotatedEssay> = pred.iter().map(|p| (p.essay().essay_id(), p)).collect();
    let mut pairs = Vec::with_capacity(gold.len());
    for g in &gold {
        let id = g.essay().essay_id();
        let p = by_id.get(id).ok_or_else(|| data(format!("essay {id}: no prediction")))?;
        if p.essay().text() != g.essay().text() {
            return Err(data(format!("essay {id}: predicted and gold texts differ")));
        }
        pairs.push((*p, g));
    }
    if pairs.len() != pred.len() {
        return Err(data(format!("{} predicted essays have no gold annotation", pred.len() - pairs.len())));
    }
    let rules = ctx.rules().clone();
    let align = ctx.align();
    let level = a.level;
    let counts = par_map(ctx.jobs, &pairs, |(p, g)| -> Result<(MatchCounts, MatchCounts), String> {
        let moves = match_moves(p.moves(), g.moves()).map_err(|e| format!("essay {}: {e}", g.essay().essay_id()))?;
        if level == EvalLevel::Moves {
            return Ok((moves, MatchCounts::default()));
        }
        let candidates = segment_candidates(g.essay().text(), &rules);
        let id = g.essay().essay_id();
        let gl = align_gold(&candidates, g.moves(), align).map_err(|e| format!("essay {id} gold: {e}"))?;
        let pl = align_gold(&candidates, p.moves(), align).map_err(|e| format!("essay {id} prediction: {e}"))?;
        let cands = evaluate_candidate_labels(&pl, &gl).map_err(|e| format!("essay {id}: {e}"))?;
        Ok((moves, cands))
    })
    .map_err(data)?;
    let (mut moves, mut cands) = (MatchCounts::default(), MatchCounts::default());
    for c in counts {
        let (m, k) = c.map_err(CliError::Data)?;
        moves += m;
        cands += k;
    }
    let mut tables = Vec::new();
    if level != EvalLevel::Candidates {
        tables.push(eval_table(&prf(&moves, &move_rows()), "Moves (exact span and label)"));
    }
    if level != EvalLevel::Moves {
        tables.push(eval_table(&prf(&cands, &candidate_rows()), "Candidates"));
    }
    ctx.table(&a.out, &tables)
}

fn quality(ctx: &mut Ctx<'_>, a: QualityArgs) -> Result<(), CliError> {
    let corpus = format::read_corpus_file(&a.input).map_err(data)?;
    let scale = a.scale.map(RatioScale::from).or(ctx.config.analysis.scale).unwrap_or(RatioScale::Fraction);
    let report = analyze_quality(&corpus, scale).map_err(data)?;
    ctx.table(&a.out, &[quality_table(&report)])
}

fn development(ctx: &mut Ctx<'_>, a: DevelopmentArgs) -> Result<(), CliError> {
    let corpus = format::read_corpus_file(&a.input).map_err(data)?;
    let scale = a.scale.map(RatioScale::from).or(ctx.config.analysis.scale).unwrap_or(RatioScale::Percent);
    let method = match a.method {
        Some(MethodArg::Ml) => EstimationMethod::Ml,
        Some(MethodArg::Reml) => EstimationMethod::Reml,
        None => ctx.config.analysis.method,
    };
    let report = analyze_development(&corpus, scale, method).map_err(data)?;
    ctx.table(&a.out, &[development_table(&report)])
}
