use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::info;
use topic_image::benchmark::{benchmark_scaling, BenchmarkConfig, Measure};
use topic_image::config::RunConfig;
use topic_image::harness::{
    fold_examples, load_inputs, parse_methods, run_cross_validation, score_pair, train_full, vocabulary_coverage, Method,
};
use topic_image::io::load_embeddings;
use topic_image::model_file::ModelFile;
use topic_image::report::ReportDocument;
use topic_image::synth::{generate, write_corpus, SynthConfig};
use topic_image::Error;
use topic_image_core::features::FeatureDims;

#[derive(Parser)]
#[command(name = "topic-image", version, about = "Rank candidate images as labels for topics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check input files and print corpus and fold counts.
    Validate(RunArgs),
    /// Train one network on the whole corpus and save it.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate the selected methods and write a report.
    Cv {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated methods, e.g. `dnn-topic+caption+vgg,local-ppr`.
        #[arg(long, default_value = "global-ppr,local-ppr,linear,random,dnn-topic+caption,dnn-topic+vgg,dnn-topic+caption+vgg")]
        methods: String,
        /// TSV report path.
        #[arg(long, visible_alias = "out")]
        report: Option<PathBuf>,
    },
    /// Score one topic/image pair with a saved model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        /// Topic terms, separated by commas or spaces.
        #[arg(long)]
        terms: String,
        #[arg(long, default_value = "")]
        caption: String,
        /// Visual vector, separated by commas or spaces.
        #[arg(long, conflicts_with = "visual_file")]
        visual: Option<String>,
        /// File holding the visual vector as whitespace-separated numbers.
        #[arg(long)]
        visual_file: Option<PathBuf>,
    },
    /// Cross-validate a single baseline.
    Baseline {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_parser = ["local-ppr", "global-ppr", "linear", "random"])]
        method: String,
        #[arg(long, visible_alias = "out")]
        report: Option<PathBuf>,
    },
    /// Time DNN scoring against Global PPR as the pool grows.
    Benchmark {
        #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 2000, 4000, 8000, 16000])]
        dnn_sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [250usize, 500, 1000, 2000, 4000])]
        ppr_sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        embedding_dim: usize,
        #[arg(long, default_value_t = 1000)]
        visual_dim: usize,
        /// Raw timing TSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a saved TSV report as an aligned table.
    Report {
        #[arg(long)]
        report: PathBuf,
    },
    /// Write a synthetic corpus with a known relevance signal.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 300)]
        topics: usize,
        #[arg(long, default_value_t = 300)]
        embedding_dim: usize,
        #[arg(long, default_value_t = 1000)]
        visual_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    topics: Option<PathBuf>,
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    visuals: Option<PathBuf>,
    /// topic+caption+vgg, topic+caption or topic+vgg.
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    visual_dim: Option<usize>,
    /// linear or exponential.
    #[arg(long)]
    gain: Option<String>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Allow topics with other than 10 terms or 20 candidates.
    #[arg(long)]
    lenient: bool,
}

impl RunArgs {
    fn config(&self) -> topic_image::Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some(p) = &self.config {
            c.apply_file(p)?;
        }
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let overrides = [
            ("embeddings", path(&self.embeddings)),
            ("topics", path(&self.topics)),
            ("candidates", path(&self.candidates)),
            ("visuals", path(&self.visuals)),
            ("features", self.features.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("folds", self.folds.map(|v| v.to_string())),
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("batch_size", self.batch_size.map(|v| v.to_string())),
            ("dropout", self.dropout.map(|v| v.to_string())),
            ("lr", self.lr.map(|v| v.to_string())),
            ("negatives", self.negatives.map(|v| v.to_string())),
            ("embedding_dim", self.embedding_dim.map(|v| v.to_string())),
            ("visual_dim", self.visual_dim.map(|v| v.to_string())),
            ("gain", self.gain.clone()),
            ("damping", self.damping.map(|v| v.to_string())),
            ("tol", self.tol.map(|v| v.to_string())),
            ("strict", self.lenient.then(|| "false".to_string())),
        ];
        for (k, v) in overrides {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_floats(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("invalid number '{s}'")))
        .collect()
}

fn split_terms(text: &str) -> Vec<String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cross_validate(run: &RunArgs, methods: &[Method], report: Option<&Path>) -> anyhow::Result<()> {
    let config = run.config()?;
    let (dataset, table) = load_inputs(&config)?;
    let eval = run_cross_validation(&config, &dataset, &table, methods)?;
    let doc = ReportDocument::from_evaluation(&eval);
    if let Some(p) = report {
        write_text(p, &doc.to_tsv())?;
        info!("report written to {}", p.display());
    }
    print!("{}", doc.to_table());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Validate(run) => {
            let config = run.config()?;
            let (dataset, table) = load_inputs(&config)?;
            let s = dataset.stats();
            println!("topics\t{}", s.topics);
            println!("candidates\t{}", s.candidates);
            println!("distinct_images\t{}", s.distinct_images);
            println!("unrated\t{}", s.unrated);
            println!("embedding_tokens\t{}", table.len());
            println!("vocabulary_coverage\t{:.4}", vocabulary_coverage(&dataset, &table));
            for (split, ex) in fold_examples(&config, &dataset)? {
                println!(
                    "fold {}\ttrain_topics {}\ttest_topics {}\ttrain_pairs {}\ttest_pairs {}",
                    split.fold_index,
                    split.train_topics.len(),
                    split.test_topics.len(),
                    ex.train.len(),
                    ex.test.len()
                );
            }
            println!("ok");
        }
        Command::Train { run, out } => {
            let config = run.config()?;
            let (dataset, table) = load_inputs(&config)?;
            let model = train_full(&config, &dataset, &table)?;
            model.save(&out)?;
            println!("model written to {}", out.display());
        }
        Command::Cv { run, methods, report } => {
            cross_validate(&run, &parse_methods(&methods)?, report.as_deref())?;
        }
        Command::Baseline { run, method, report } => {
            cross_validate(&run, &[method.parse()?], report.as_deref())?;
        }
        Command::Score {
            model,
            embeddings,
            terms,
            caption,
            visual,
            visual_file,
        } => {
            let model = ModelFile::load(&model)?;
            let table = load_embeddings(&embeddings, model.dims.text)?;
            let visual = match (visual, visual_file) {
                (Some(v), _) => Some(parse_floats(&v)?),
                (None, Some(p)) => Some(parse_floats(
                    &std::fs::read_to_string(&p).map_err(|e| Error::Io { path: p.clone(), source: e })?,
                )?),
                (None, None) => None,
            };
            let terms = split_terms(&terms);
            if terms.is_empty() {
                bail!(Error::Config("--terms must name at least one term".into()));
            }
            let score = score_pair(&model, &table, &terms, &caption, visual.as_deref())?;
            println!("{score}");
        }
        Command::Benchmark {
            dnn_sizes,
            ppr_sizes,
            trials,
            seed,
            embedding_dim,
            visual_dim,
            out,
        } => {
            let config = BenchmarkConfig {
                dnn_sizes,
                ppr_sizes,
                trials,
                seed,
                dims: FeatureDims {
                    text: embedding_dim,
                    visual: visual_dim,
                },
                ..BenchmarkConfig::default()
            };
            let result = benchmark_scaling(&config)?;
            let tsv = result.to_tsv(seed);
            if let Some(p) = out {
                write_text(&p, &tsv)?;
            }
            println!("measure\tsize\tmedian_seconds");
            for m in [Measure::DnnScoring, Measure::PprGraphBuild, Measure::PprTotal] {
                for (n, t) in result.medians(m) {
                    println!("{}\t{n}\t{t:.6}", m.name());
                }
            }
            for (m, s) in &result.slopes {
                println!("slope\t{}\t{s:.3}", m.name());
            }
        }
        Command::Report { report } => {
            let text = std::fs::read_to_string(&report).map_err(|e| Error::Io {
                path: report.clone(),
                source: e,
            })?;
            print!("{}", ReportDocument::parse_tsv(&text, &report)?.to_table());
        }
        Command::Synth {
            out,
            topics,
            embedding_dim,
            visual_dim,
            seed,
        } => {
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            let corpus = generate(&SynthConfig {
                topics,
                text_dim: embedding_dim,
                visual_dim,
                seed,
                ..SynthConfig::default()
            })?;
            let files = write_corpus(&out, &corpus)?;
            println!("embeddings\t{}", files.embeddings.display());
            println!("topics\t{}", files.topics.display());
            println!("candidates\t{}", files.candidates.display());
            println!("visuals\t{}", files.visuals.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .chain()
                .find_map(|c| c.downcast_ref::<Error>())
                .is_some_and(Error::is_validation);
            ExitCode::from(if validation { 1 } else { 2 })
        }
    }
}
