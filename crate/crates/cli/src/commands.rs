use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, Args, Parser, Subcommand, ValueEnum};
use log::info;

use sent2vec::config::default_threads;
use sent2vec::eval::{read_similarity_tsv, NormProfile};
use sent2vec::io::format_g6;
use sent2vec::sampling::DEFAULT_TABLE_SIZE;
use sent2vec::{
    embed_sentence, evaluate_similarity, export_text_vectors, load_model, norm_profile, pair_features, save_model,
    train, Error, Model, Preset, TrainConfig,
};

#[derive(Parser, Debug)]
#[command(name = "sent2vec", version, about = "Train and evaluate unsupervised sentence embeddings")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model on a newline-delimited corpus (one sentence per line)
    Train(TrainArgs),
    /// Embed sentences read from standard input, one per line
    Embed(EmbedArgs),
    /// Correlate model cosines with gold scores of a similarity dataset
    EvalSim(EvalArgs),
    /// Write (log frequency, vector norm) for every vocabulary word
    NormProfile(ProfileArgs),
    /// Export unigram source vectors in word2vec text format
    ExportVec(ExportArgs),
    /// Write |a−b| and a⊙b features for every sentence pair
    PairFeatures(PairArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PresetArg {
    BooksUni,
    BooksBi,
    WikiUni,
    WikiBi,
    TwitterUni,
    TwitterBi,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::BooksUni => Preset::BooksUni,
            PresetArg::BooksBi => Preset::BooksBi,
            PresetArg::WikiUni => Preset::WikiUni,
            PresetArg::WikiBi => Preset::WikiBi,
            PresetArg::TwitterUni => Preset::TwitterUni,
            PresetArg::TwitterBi => Preset::TwitterBi,
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training corpus (".gz" is decompressed)
    #[arg(long)]
    input: PathBuf,
    /// Model file to write
    #[arg(long)]
    output: PathBuf,
    /// Published configuration; explicit flags override its values
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long, default_value_t = 100)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    min_count: u64,
    #[arg(long, default_value_t = 5)]
    min_target_count: u64,
    #[arg(long, default_value_t = 0.2)]
    lr: f64,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    /// Subsampling threshold
    #[arg(long, default_value_t = 1e-4)]
    t: f64,
    #[arg(long, default_value_t = 2)]
    word_ngrams: usize,
    #[arg(long, default_value_t = 2_000_000)]
    buckets: u32,
    /// N-grams dropped per sentence
    #[arg(long, default_value_t = 2)]
    dropout_k: usize,
    /// Negatives per target
    #[arg(long, default_value_t = 10)]
    neg: usize,
    /// L1 regularization strength (0 disables)
    #[arg(long, default_value_t = 0.0)]
    l1: f64,
    #[arg(long, env = "SENT2VEC_THREADS", default_value_t = default_threads())]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    lowercase: bool,
    #[arg(long, default_value_t = DEFAULT_TABLE_SIZE)]
    table_size: usize,
    /// Targets per reported loss value
    #[arg(long, default_value_t = 1_000_000)]
    report_every: u64,
    /// Write the model after every epoch
    #[arg(long)]
    checkpoint: bool,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    lowercase: bool,
    /// Append a column that is 1 for lines without any known token, else 0
    #[arg(long)]
    oov_flag: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// TSV lines: score<TAB>sentence_a<TAB>sentence_b
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    lowercase: bool,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long)]
    model: PathBuf,
    /// Add a third column a/(a+f_w), e.g. 0.001
    #[arg(long)]
    a: Option<f64>,
    /// Output file (default: standard output)
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct PairArgs {
    #[arg(long)]
    model: PathBuf,
    /// TSV lines: sentence_a<TAB>sentence_b, or label<TAB>sentence_a<TAB>sentence_b
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    lowercase: bool,
    /// Output file (default: standard output)
    #[arg(long)]
    output: Option<PathBuf>,
}

pub fn run(cli: Cli, matches: &ArgMatches) -> Result<()> {
    match cli.command {
        Command::Train(args) => {
            let sub = matches.subcommand_matches("train").expect("train matches");
            cmd_train(args, sub)
        }
        Command::Embed(args) => cmd_embed(args),
        Command::EvalSim(args) => cmd_eval_sim(args),
        Command::NormProfile(args) => cmd_norm_profile(args),
        Command::ExportVec(args) => cmd_export_vec(args),
        Command::PairFeatures(args) => cmd_pair_features(args),
    }
}

fn explicit(matches: &ArgMatches, id: &str) -> bool {
    matches!(
        matches.value_source(id),
        Some(ValueSource::CommandLine | ValueSource::EnvVariable)
    )
}

fn train_config(args: &TrainArgs, matches: &ArgMatches) -> TrainConfig {
    let mut config = TrainConfig {
        dim: args.dim,
        min_count: args.min_count,
        min_target_count: args.min_target_count,
        lr: args.lr,
        epochs: args.epochs,
        subsample: args.t,
        word_ngrams: args.word_ngrams,
        buckets: args.buckets,
        dropout_k: args.dropout_k,
        negatives: args.neg,
        l1_tau: args.l1,
        threads: args.threads,
        seed: args.seed,
        lowercase: args.lowercase,
        negative_table_size: args.table_size,
        report_every: args.report_every,
        checkpoint: args.checkpoint.then(|| args.output.clone()),
    };
    if let Some(preset) = args.preset {
        let p = Preset::from(preset).config();
        let keep = |id: &str| explicit(matches, id);
        if !keep("dim") {
            config.dim = p.dim;
        }
        if !keep("min_count") {
            config.min_count = p.min_count;
        }
        if !keep("min_target_count") {
            config.min_target_count = p.min_target_count;
        }
        if !keep("lr") {
            config.lr = p.lr;
        }
        if !keep("epochs") {
            config.epochs = p.epochs;
        }
        if !keep("t") {
            config.subsample = p.subsample;
        }
        if !keep("word_ngrams") {
            config.word_ngrams = p.word_ngrams;
        }
        if !keep("dropout_k") {
            config.dropout_k = p.dropout_k;
        }
        if !keep("neg") {
            config.negatives = p.negatives;
        }
        if !keep("l1") {
            config.l1_tau = p.l1_tau;
        }
    }
    config
}

fn cmd_train(args: TrainArgs, matches: &ArgMatches) -> Result<()> {
    let config = train_config(&args, matches);
    info!("training with {config:?}");
    let out = train(&args.input, &config).with_context(|| format!("training on {}", args.input.display()))?;
    info!(
        "{} targets in {:.1}s",
        out.report.targets,
        out.report.elapsed.as_secs_f64()
    );
    save_model(&out.model, &args.output).with_context(|| format!("writing {}", args.output.display()))?;
    info!("model written to {}", args.output.display());
    Ok(())
}

fn load(path: &Path, lowercase: bool) -> Result<Model> {
    let mut model = load_model(path).with_context(|| format!("loading model {}", path.display()))?;
    model.lowercase = lowercase;
    Ok(model)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_floats(w: &mut dyn Write, values: &[f32], sep: char) -> io::Result<()> {
    for (i, &x) in values.iter().enumerate() {
        if i > 0 {
            write!(w, "{sep}")?;
        }
        write!(w, "{}", format_g6(x))?;
    }
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    let model = load(&args.model, args.lowercase)?;
    let mut out = output(None)?;
    for line in io::stdin().lock().lines() {
        let line = line.context("reading standard input")?;
        let e = embed_sentence(&model, &line);
        write_floats(&mut out, &e.vector, ' ')?;
        if args.oov_flag {
            write!(out, " {}", u8::from(e.oov))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_eval_sim(args: EvalArgs) -> Result<()> {
    let model = load(&args.model, args.lowercase)?;
    let file = File::open(&args.dataset).with_context(|| format!("opening {}", args.dataset.display()))?;
    let records = read_similarity_tsv(BufReader::new(file)).with_context(|| format!("parsing {}", args.dataset.display()))?;
    let report = match evaluate_similarity(&model, &records) {
        Ok(r) => r,
        Err(e @ Error::InsufficientRecords { .. }) => bail!(e),
        Err(e) => return Err(e).context("evaluating similarity"),
    };
    println!(
        "pearson={} spearman={} n={} excluded={}",
        format_g6(report.pearson),
        format_g6(report.spearman),
        report.used,
        report.excluded
    );
    Ok(())
}

fn cmd_norm_profile(args: ProfileArgs) -> Result<()> {
    let model = load(&args.model, false)?;
    let profile: NormProfile = norm_profile(&model);
    profile.write(output(args.output.as_deref())?, args.a)?;
    Ok(())
}

fn cmd_export_vec(args: ExportArgs) -> Result<()> {
    let model = load(&args.model, false)?;
    export_text_vectors(&model, &args.output).with_context(|| format!("writing {}", args.output.display()))?;
    Ok(())
}

fn cmd_pair_features(args: PairArgs) -> Result<()> {
    let model = load(&args.model, args.lowercase)?;
    let file = File::open(&args.dataset).with_context(|| format!("opening {}", args.dataset.display()))?;
    let mut out = output(args.output.as_deref())?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("reading line {}", i + 1))?;
        let fields: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
        let (a, b) = match fields.as_slice() {
            [a, b] | [_, a, b] => (*a, *b),
            _ => bail!("line {}: expected 2 or 3 tab-separated fields", i + 1),
        };
        let va = embed_sentence(&model, a).vector;
        let vb = embed_sentence(&model, b).vector;
        write_floats(&mut out, &pair_features(&va, &vb)?, '\t')?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
