use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use narrative_atlas::corpus::{filter_corpus, load_submissions, LoadOptions};
use narrative_atlas::embedding::load_embeddings;
use narrative_atlas::mapgraph::{to_dot, to_json, RouteCriterion};
use narrative_atlas::pipeline::ClusterCount;
use narrative_atlas::strength::SuccessorLimit;
use narrative_atlas::{Corpus, Error, ExtractionConfig, NarrativeMap};
use narrative_atlas_cli::service::{router, ServiceConfig};
use narrative_atlas_cli::store::community_counts;
use narrative_atlas_cli::{
    run_extraction, to_document, AppError, AppResult, ExtractRequest, ExtractResponse, Kind, Store,
    STORE_ENV,
};

#[derive(Parser)]
#[command(
    name = "narrative-atlas",
    version,
    about = "Extract narrative maps from scored posts"
)]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = STORE_ENV, default_value = ".narrative-atlas")]
    store: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load submission dumps into the store and print the corpus id.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        keyword: Option<String>,
        #[arg(long)]
        from: Option<i64>,
        #[arg(long)]
        to: Option<i64>,
    },
    /// Attach an embeddings file to a stored corpus.
    EmbedImport { corpus: String, path: PathBuf },
    /// Extract a narrative map from a stored corpus.
    Extract {
        #[arg(required_unless_present = "print_config")]
        corpus: Option<String>,
        #[command(flatten)]
        flags: Box<ConfigFlags>,
        #[arg(long, value_enum, default_value_t = Format::Doc)]
        format: Format,
        /// Directory for map.json and map.dot; stdout gets `--format` otherwise.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Print the effective configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Render a stored map.
    Export {
        map: String,
        #[arg(long, value_enum, default_value_t = Format::Doc)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Per-request extraction timeout in seconds.
        #[arg(long, default_value_t = 60)]
        timeout: u64,
        #[arg(long, default_value_t = 64)]
        cache_size: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Doc,
    Dot,
}

#[derive(Args)]
struct ConfigFlags {
    /// TOML (or .json) file with configuration keys; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    keyword: Option<String>,
    #[arg(long)]
    from: Option<i64>,
    #[arg(long)]
    to: Option<i64>,
    #[arg(long)]
    community: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    mincover: Option<f64>,
    #[arg(long)]
    minscore: Option<f64>,
    /// A count or `auto`.
    #[arg(long)]
    num_clusters: Option<ClusterCount>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    temperature: Option<f64>,
    /// A count or `all`.
    #[arg(long)]
    max_successors: Option<SuccessorLimit>,
    #[arg(long)]
    tau: Option<f64>,
    /// `bottleneck` or `product`.
    #[arg(long)]
    main_route: Option<RouteCriterion>,
}

impl ConfigFlags {
    fn resolve(&self) -> AppResult<ExtractionConfig> {
        let mut c = match &self.config {
            None => ExtractionConfig::default(),
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
                let parsed = if path.extension().is_some_and(|x| x == "json") {
                    serde_json::from_str(&text).map_err(|e| e.to_string())
                } else {
                    toml::from_str(&text).map_err(|e| e.to_string())
                };
                parsed.map_err(|e| AppError::invalid(format!("{}: {e}", path.display())))?
            }
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(
            k,
            mincover,
            minscore,
            num_clusters,
            seed,
            temperature,
            max_successors,
            tau,
            main_route
        );
        for (slot, flag) in [
            (&mut c.keyword, &self.keyword),
            (&mut c.community, &self.community),
        ] {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        c.from = self.from.or(c.from);
        c.to = self.to.or(c.to);
        c.validate()?;
        Ok(c)
    }
}

fn write_output(path: Option<&Path>, text: &str) -> AppResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| AppError::io(p, e)),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(AppError::new(Kind::Internal, e.to_string()))
            }
            _ => Ok(()),
        },
    }
}

fn render(map: &NarrativeMap, format: Format) -> AppResult<String> {
    Ok(match format {
        Format::Doc => to_json(map)?,
        Format::Dot => to_dot(map),
    })
}

fn ingest(
    store: &Store,
    paths: &[PathBuf],
    keyword: Option<String>,
    from: Option<i64>,
    to: Option<i64>,
) -> AppResult<()> {
    let filter_config = ExtractionConfig {
        keyword,
        from,
        to,
        ..ExtractionConfig::default()
    };
    filter_config.validate()?;
    let filter = filter_config.filter();

    let mut merged: BTreeMap<String, Vec<narrative_atlas::Submission>> = BTreeMap::new();
    for path in paths {
        let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
        let report = load_submissions(BufReader::new(file), LoadOptions::default())
            .map_err(|e| AppError::from(e).with_context(path))?;
        for bad in &report.malformed {
            eprintln!("{}:{}: skipped: {}", path.display(), bad.line, bad.reason);
        }
        for (name, corpus) in report.corpora {
            merged
                .entry(name)
                .or_default()
                .extend(corpus.submissions().iter().cloned());
        }
    }
    let mut corpora = BTreeMap::new();
    for (name, subs) in merged {
        let corpus = Corpus::new(name.clone(), subs)?;
        match filter_corpus(&corpus, &filter) {
            Ok(kept) => {
                corpora.insert(name, kept);
            }
            Err(Error::EmptyFilteredCorpus) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if corpora.is_empty() {
        return Err(Error::EmptyFilteredCorpus.into());
    }
    let (meta, created) = store.ingest(&corpora)?;
    if !created {
        eprintln!("corpus {} already stored", meta.id);
    }
    let mut out = format!("{}\n", meta.id);
    for c in community_counts(&corpora) {
        out.push_str(&format!("{}\t{}\n", c.name, c.count));
    }
    write_output(None, &out)
}

fn serve(store: Store, host: &str, port: u16, config: ServiceConfig) -> AppResult<()> {
    let internal = |e: std::io::Error| AppError::new(Kind::Internal, e.to_string());
    let runtime = tokio::runtime::Runtime::new().map_err(internal)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(internal)?;
        eprintln!(
            "listening on http://{}",
            listener.local_addr().map_err(internal)?
        );
        axum::serve(listener, router(store, config))
            .await
            .map_err(internal)
    })
}

fn run(cli: Cli) -> AppResult<()> {
    let store = Store::new(cli.store);
    match cli.command {
        Command::Ingest {
            paths,
            keyword,
            from,
            to,
        } => ingest(&store, &paths, keyword, from, to),
        Command::EmbedImport { corpus, path } => {
            let file = fs::File::open(&path).map_err(|e| AppError::io(&path, e))?;
            let table = load_embeddings(BufReader::new(file))
                .map_err(|e| AppError::from(e).with_context(&path))?;
            let kept = store.import_embeddings(&corpus, &table)?;
            let events = store.meta(&corpus)?.records;
            write_output(None, &format!("{kept} of {events} events embedded\n"))
        }
        Command::Extract {
            corpus,
            flags,
            format,
            output,
            print_config,
        } => {
            let config = flags.resolve()?;
            if print_config {
                return write_output(None, &to_document(&config)?);
            }
            let request = ExtractRequest {
                corpus: corpus.expect("required by clap"),
                config,
            };
            let response = run_extraction(&store, &request)?;
            store.save_map(&response.map_id, &to_document(&response)?)?;
            let map = &response.map;
            eprintln!(
                "map {}: {} nodes, {} edges, {} storylines",
                response.map_id,
                map.nodes.len(),
                map.edges.len(),
                map.storylines.len()
            );
            match output {
                Some(dir) => {
                    fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
                    write_output(Some(&dir.join("map.json")), &render(map, Format::Doc)?)?;
                    write_output(Some(&dir.join("map.dot")), &render(map, Format::Dot)?)
                }
                None => write_output(None, &render(map, format)?),
            }
        }
        Command::Export {
            map,
            format,
            output,
        } => {
            let response: ExtractResponse =
                serde_json::from_str(&store.load_map(&map)?).map_err(Error::from)?;
            write_output(output.as_deref(), &render(&response.map, format)?)
        }
        Command::Serve {
            port,
            host,
            timeout,
            cache_size,
        } => serve(
            store,
            &host,
            port,
            ServiceConfig {
                timeout: Duration::from_secs(timeout),
                cache_capacity: cache_size,
            },
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
