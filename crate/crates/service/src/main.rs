use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use corrobe_core::corruption::{corrupt_dataset, enumerate_corruptions, CorruptionSpec, Corruptor};
use corrobe_core::graphs::GraphProvider;
use corrobe_core::judgment::{required_probes, MissingProbePolicy};
use corrobe_core::metrics::{evaluate, Evaluation};
use corrobe_core::patterns::ClusterParams;
use corrobe_core::sg::SynonymLexicon;
use corrobe_core::store::{DatasetManifest, PipelineConfig};
use corrobe_core::synthetic::{fixture_cluster_params, SyntheticDataset};
use corrobe_service::api::{self, AppState};
use corrobe_service::session::{Session, SessionFile};
use corrobe_service::stages::{self, Embeddings};

#[derive(Parser, Debug)]
#[command(name = "corrobe", version, about = "Corruption robustness analysis for image captioning")]
struct Cli {
    /// Directory holding the session file, results cache and exports.
    #[arg(long, global = true, env = "CORROBE_DATA_DIR", default_value = "corrobe-data")]
    data_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the procedural 20-image dataset and start a session on it.
    Synth {
        /// Where to write images, manifest and embeddings.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Start a session over existing dataset files.
    Init(InitArgs),
    /// List the probe sentences judgment will look up, one per line.
    Probes {
        #[arg(long, default_value = "all")]
        key: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write corrupted copies of every image.
    Corrupt {
        /// Defaults to the session manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Defaults to `{data_dir}/corrupted`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `all` or a comma-separated list of keys such as `snow_4,fog_2`.
        #[arg(long, default_value = "all")]
        specs: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score captions against ground truths.
    Evaluate {
        /// Evaluate this manifest with default settings instead of the session.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// `all` or a comma-separated list of corruption keys.
        #[arg(long, default_value = "all")]
        key: String,
        /// Also write corpus and instance reports as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Match, judge and aggregate per-task error metrics.
    AnalyzeTasks {
        #[arg(long, default_value = "all")]
        key: String,
    },
    /// Cluster attempting instances for a task and lay them out in 2-D.
    Discover {
        /// A task name or `all`.
        #[arg(long)]
        task: String,
        /// `all` or a comma-separated list of corruption keys.
        #[arg(long)]
        key: String,
    },
    /// Run evaluate, analyze-tasks and discover for every available key.
    Run,
    /// Serve the HTTP API and dashboard assets.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Built dashboard assets; served for paths outside the API.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InitArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    image_embeddings: PathBuf,
    #[arg(long)]
    text_embeddings: PathBuf,
    #[arg(long)]
    probe_embeddings: PathBuf,
    /// Ingested scene graphs; the template parser is used otherwise.
    #[arg(long)]
    scene_graphs: Option<PathBuf>,
    /// 2-D layout computed elsewhere, as `{id, x, y}` JSON lines.
    #[arg(long)]
    external_layout: Option<PathBuf>,
    #[arg(long)]
    corruption_params: Option<PathBuf>,
    #[arg(long)]
    synonyms: Option<PathBuf>,
    #[arg(long, default_value_t = PipelineConfig::default().alpha)]
    alpha: f64,
    #[arg(long, default_value_t = PipelineConfig::default().threshold)]
    threshold: f64,
    #[arg(long, default_value_t = ClusterParams::default().min_cluster_size)]
    min_cluster_size: usize,
    #[arg(long, default_value_t = ClusterParams::default().min_samples)]
    min_samples: usize,
    /// `strict` fails on a missing probe; `keep-fp` leaves the element unjudged.
    #[arg(long, default_value = "strict")]
    missing_probe: MissingProbePolicy,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let data_dir = cli.data_dir;
    match cli.command {
        Command::Synth { out, seed } => synth(&data_dir, &out, seed),
        Command::Init(args) => init(&data_dir, args),
        Command::Probes { key, out } => probes(&data_dir, &key, out.as_deref()),
        Command::Corrupt {
            manifest,
            out,
            specs,
            seed,
        } => corrupt(&data_dir, manifest, out, &specs, seed),
        Command::Evaluate { manifest, key, out } => match manifest {
            Some(m) => evaluate_standalone(&m, &key, out.as_deref()),
            None => evaluate_session(&data_dir, &key, out.as_deref()),
        },
        Command::AnalyzeTasks { key } => analyze(&data_dir, &key),
        Command::Discover { task, key } => discover(&data_dir, &task, &key),
        Command::Run => run_all(&data_dir),
        Command::Serve { port, host, static_dir } => serve(&data_dir, SocketAddr::new(host, port), static_dir),
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))
}

fn synth(data_dir: &Path, out: &Path, seed: u64) -> Result<()> {
    let dataset = SyntheticDataset::generate(seed)?;
    let paths = dataset.write(out)?;
    let mut file = SessionFile::new(
        absolute(&paths.manifest)?,
        absolute(&paths.image_embeddings)?,
        absolute(&paths.text_embeddings)?,
        absolute(&paths.probe_embeddings)?,
    );
    file.clustering = fixture_cluster_params();
    file.write(data_dir)?;
    println!(
        "wrote {} instances to {}; session in {}",
        dataset.manifest.len(),
        out.display(),
        data_dir.display()
    );
    Ok(())
}

fn init(data_dir: &Path, a: InitArgs) -> Result<()> {
    let mut file = SessionFile::new(
        absolute(&a.manifest)?,
        absolute(&a.image_embeddings)?,
        absolute(&a.text_embeddings)?,
        absolute(&a.probe_embeddings)?,
    );
    let opt = |p: Option<PathBuf>| p.map(|p| absolute(&p)).transpose();
    file.scene_graphs = opt(a.scene_graphs)?;
    file.external_layout = opt(a.external_layout)?;
    file.corruption_params = opt(a.corruption_params)?;
    file.synonyms = opt(a.synonyms)?;
    file.alpha = a.alpha;
    file.threshold = a.threshold;
    file.clustering = ClusterParams {
        min_cluster_size: a.min_cluster_size,
        min_samples: a.min_samples,
    };
    file.missing_probe = a.missing_probe;
    // validate before persisting
    let session = Session::from_file(data_dir, file.clone())?;
    file.write(data_dir)?;
    println!("session over {} instances, config {}", session.manifest.len(), session.config_hash);
    Ok(())
}

fn probes(data_dir: &Path, key: &str, out: Option<&Path>) -> Result<()> {
    let session = Session::open(data_dir)?;
    let keys = stages::resolve_keys(&session, key)?;
    let mut graphs = Vec::new();
    for inst in session.manifest.instances() {
        graphs.extend(session.graphs.references(inst)?);
        for k in &keys {
            graphs.push(session.graphs.candidate(k, inst)?);
        }
    }
    let sentences = required_probes(&graphs, &session.lexicon);
    let mut text = String::new();
    for s in &sentences {
        text.push_str(s);
        text.push('\n');
    }
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    log::info!("{} probe sentences", sentences.len());
    Ok(())
}

fn parse_specs(specs: &str) -> Result<Vec<CorruptionSpec>> {
    if specs.trim() == "all" {
        return Ok(enumerate_corruptions());
    }
    specs
        .split(',')
        .map(|s| s.trim().parse::<CorruptionSpec>().map_err(anyhow::Error::from))
        .collect()
}

fn corrupt(data_dir: &Path, manifest: Option<PathBuf>, out: Option<PathBuf>, specs: &str, seed: u64) -> Result<()> {
    let specs = parse_specs(specs)?;
    let out = out.unwrap_or_else(|| data_dir.join("corrupted"));
    let session_file = SessionFile::read(data_dir).ok();
    let from_session = manifest.is_none();
    let (manifest, corruptor) = match (&manifest, &session_file) {
        (Some(m), _) => (DatasetManifest::load(m)?, Corruptor::default()),
        (None, Some(file)) => {
            let session = Session::from_file(data_dir, file.clone())?;
            (session.manifest, Corruptor::new(session.config.param_table()?))
        }
        (None, None) => bail!("no --manifest given and no session in {}", data_dir.display()),
    };
    let report = corrupt_dataset(&corruptor, &manifest, &specs, seed, &out)?;
    let report_path = out.join("report.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("writing {}", report_path.display()))?;
    for f in &report.failures {
        log::warn!("{}: {}", f.image_id, f.message);
    }
    if let (true, Some(mut file)) = (from_session, session_file) {
        file.corrupted_images = Some(absolute(&out)?);
        file.write(data_dir)?;
    }
    println!(
        "{} files for {} images x {} specs in {:.1}s, {} failure(s)",
        report.files_written,
        report.images,
        report.specs,
        report.wall_time_secs,
        report.failures.len()
    );
    Ok(())
}

fn write_reports(out: &Path, evals: &[Evaluation]) -> Result<()> {
    let mut text = String::new();
    for e in evals {
        for r in std::iter::once(&e.corpus).chain(&e.instances) {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
    }
    std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))
}

fn print_corpus(e: &Evaluation) {
    let c = &e.corpus;
    println!(
        "{:<24} bleu1 {:.4}  bleu4 {:.4}  meteor {:.4}  rouge_l {:.4}  cider {:.4}  spice {:.4}",
        c.corruption_key, c.bleu1, c.bleu4, c.meteor, c.rouge_l, c.cider, c.spice
    );
}

fn evaluate_standalone(manifest: &Path, key: &str, out: Option<&Path>) -> Result<()> {
    let manifest = DatasetManifest::load(manifest)?;
    let keys: Vec<String> = if key == "all" {
        manifest.complete_keys()
    } else {
        key.split(',').map(|k| k.trim().to_owned()).collect()
    };
    let cfg = PipelineConfig::default();
    let lex = SynonymLexicon::builtin();
    let graphs = GraphProvider::default();
    let evals = keys
        .iter()
        .map(|k| Ok(evaluate(&manifest, k, &graphs, &lex, &cfg.metrics)?))
        .collect::<Result<Vec<_>>>()?;
    evals.iter().for_each(print_corpus);
    if let Some(out) = out {
        write_reports(out, &evals)?;
    }
    Ok(())
}

fn evaluate_session(data_dir: &Path, key: &str, out: Option<&Path>) -> Result<()> {
    let session = Session::open(data_dir)?;
    let evals = stages::resolve_keys(&session, key)?
        .iter()
        .map(|k| Ok(stages::run_evaluate(&session, k)?))
        .collect::<Result<Vec<_>>>()?;
    evals.iter().for_each(print_corpus);
    if let Some(out) = out {
        write_reports(out, &evals)?;
    }
    Ok(())
}

fn analyze(data_dir: &Path, key: &str) -> Result<()> {
    let session = Session::open(data_dir)?;
    let emb = Embeddings::load(&session)?;
    for k in stages::resolve_keys(&session, key)? {
        let a = stages::run_analyze(&session, &k, &emb)?;
        for s in &a.summaries {
            println!(
                "{:<24} {:<9} cnt {:>5}  err {}  sf {}  sen {:.4}",
                k,
                s.task.as_str(),
                s.cnt,
                fmt_opt(s.err),
                fmt_opt(s.sf),
                s.sen
            );
        }
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "  -   ".to_owned(), |v| format!("{v:.4}"))
}

fn discover(data_dir: &Path, task: &str, key: &str) -> Result<()> {
    let session = Session::open(data_dir)?;
    let emb = Embeddings::load(&session)?;
    let tasks = stages::resolve_tasks(task)?;
    for k in stages::resolve_keys(&session, key)? {
        for &t in &tasks {
            let rec = stages::run_discover(&session, &k, t, &emb)?;
            match &rec.model {
                None => println!("{k:<24} {:<9} no attempting instances", t.as_str()),
                Some(m) => {
                    let noise = m.labels.iter().filter(|&&l| l < 0).count();
                    println!(
                        "{k:<24} {:<9} {} points, {} clusters, {} outliers",
                        t.as_str(),
                        m.ids.len(),
                        m.clusters.len(),
                        noise
                    );
                }
            }
        }
    }
    Ok(())
}

fn run_all(data_dir: &Path) -> Result<()> {
    let started = Instant::now();
    evaluate_session(data_dir, "all", None)?;
    analyze(data_dir, "all")?;
    discover(data_dir, "all", "all")?;
    println!("pipeline finished in {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn serve(data_dir: &Path, addr: SocketAddr, static_dir: Option<PathBuf>) -> Result<()> {
    let session = Session::open(data_dir)?;
    let state = AppState::new(session);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(api::serve(state, addr, static_dir))?;
    Ok(())
}
