use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use stancetopic::config::PipelineConfig;
use stancetopic::error::{Error, Result};
use stancetopic::pipeline::Pipeline;
use stancetopic::synth;

#[derive(Parser)]
#[command(name = "stancetopic", version, about = "Stance-coded topic analysis of tweet collections")]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; overrides the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter raw JSONL tweets into the corpus store.
    Ingest,
    /// Draw the training and held-out samples.
    Sample,
    /// Train the topic model on the training sample.
    Train,
    /// Score a grid of topic counts and priors on the held-out sample.
    Sweep,
    /// Infer topic proportions for every stored tweet.
    Infer,
    /// Assign hashtag stance labels.
    Label,
    /// Resolve profile locations to states.
    Geocode,
    /// Count tweets per stance per day or week.
    Trends,
    /// Flag weekly activity spikes.
    Spikes,
    /// Rank topics per stance.
    Topics,
    /// Topic profiles around listed events.
    Events,
    /// Correlate state Control shares with poll support.
    Correlate,
    /// Run label through correlate in one go.
    Report,
    /// Write a synthetic corpus with its config into the output directory.
    Synth {
        #[arg(long, value_enum, default_value_t = SynthKind::Pipeline)]
        kind: SynthKind,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// Stance-coded tweets over polled states, with polls and events.
    Pipeline,
    /// Two topics with disjoint vocabularies.
    Separable,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = &cli.output {
        cfg.output = o.clone();
    }
    Ok(cfg)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, bytes).map_err(|source| Error::Path { path: p, source })
}

fn synth_command(out: &Path, kind: SynthKind, seed: Option<u64>) -> Result<Vec<String>> {
    fs::create_dir_all(out).map_err(|source| Error::Path {
        path: out.to_owned(),
        source,
    })?;
    let mut tweets = Vec::new();
    let config = match kind {
        SynthKind::Pipeline => {
            let spec = synth::PipelineSpec {
                seed: seed.unwrap_or(synth::PipelineSpec::default().seed),
                ..Default::default()
            };
            let s = synth::synthetic_pipeline(&spec)?;
            synth::write_jsonl(&s.tweets, &mut tweets)?;
            let mut polls = Vec::new();
            synth::write_polls_csv(&s.polls, &mut polls)?;
            write_file(out, "polls.csv", &polls)?;
            let mut events = Vec::new();
            synth::write_events_tsv(&s.events, &mut events)?;
            write_file(out, "events.tsv", &events)?;
            "output = \"results\"\n\n[paths]\ninputs = [\"tweets.jsonl\"]\npolls = \"polls.csv\"\nevents = \"events.tsv\"\n\n\
             [sample]\nfraction = 0.5\nheldout_fraction = 0.2\nseed = 1\n\n\
             [lda]\ntopics = 4\nburn_in = 50\ntotal_iterations = 200\nhyperopt_interval = 10\nseed = 1\ninfer_iterations = 50\n\
             grid_topics = [2, 4]\ngrid_alpha = [1.0]\n\n[analytics]\ntop_n = 3\n"
        }
        SynthKind::Separable => {
            let spec = synth::SeparableSpec {
                seed: seed.unwrap_or(1),
                ..Default::default()
            };
            let c = synth::separable_corpus(&spec);
            synth::write_jsonl(&c.to_tweets(1), &mut tweets)?;
            "output = \"results\"\n\n[paths]\ninputs = [\"tweets.jsonl\"]\n\n\
             [corpus]\nwindow_start = 2013-01-01T00:00:00Z\nwindow_end = 2013-12-31T23:59:59Z\n\n\
             [sample]\nfraction = 0.8\nheldout_fraction = 1.0\nseed = 1\n\n\
             [lda]\ntopics = 2\nburn_in = 50\ntotal_iterations = 200\nhyperopt_interval = 10\nseed = 1\n\
             grid_topics = [1, 2, 5]\ngrid_alpha = [1.0]\n"
        }
    };
    write_file(out, "tweets.jsonl", &tweets)?;
    write_file(out, "config.toml", config.as_bytes())?;
    Ok(vec![format!("wrote synthetic corpus to {}", out.display())])
}

fn run(cli: &Cli) -> Result<Vec<String>> {
    if let Command::Synth { kind, seed } = &cli.command {
        let out = cli.output.clone().unwrap_or_else(|| PathBuf::from("synthetic"));
        return synth_command(&out, *kind, *seed);
    }
    let p = Pipeline::new(load_config(cli)?)?;
    Ok(match &cli.command {
        Command::Ingest => {
            let r = p.ingest()?;
            vec![format!(
                "ingest: {} lines, {} accepted, {} without keyword, {} outside window, {} malformed",
                r.lines, r.accepted, r.no_keyword, r.outside_window, r.malformed
            )]
        }
        Command::Sample => {
            let (t, h) = p.sample()?;
            vec![format!("sample: {t} train, {h} held out")]
        }
        Command::Train => {
            let out = p.train()?;
            let ll = out.log.last().map(|r| r.log_likelihood).unwrap_or(f64::NAN);
            let mut lines = vec![format!("train: {} topics, final log-likelihood {ll}", out.model.topics())];
            lines.extend(out.warnings.iter().map(|w| format!("warning: {w}")));
            lines
        }
        Command::Sweep => {
            let o = p.sweep()?;
            vec![format!("sweep: best topics={} alpha_init={}", o.best.topics, o.best.alpha_init)]
        }
        Command::Infer => {
            let t = p.infer()?;
            vec![format!("infer: {} documents", t.rows.len())]
        }
        Command::Label => {
            let s = p.label()?.summary;
            vec![format!("label: control={} rights={} unlabeled={}", s.control, s.rights, s.unlabeled)]
        }
        Command::Geocode => {
            let g = p.geocode()?;
            vec![format!("geocode: resolved={} of {}", g.resolved, g.total)]
        }
        Command::Trends => vec![format!("trends: {} buckets", p.trends()?.len())],
        Command::Spikes => p
            .spikes()?
            .iter()
            .map(|s| format!("spike: {} {} count={} z={:.2}", s.bucket, s.stance, s.count, s.z))
            .collect(),
        Command::Topics => p
            .topics()?
            .iter()
            .map(|(s, prof)| format!("topics: {s} {:?}", prof.topic_ids))
            .collect(),
        Command::Events => vec![format!("events: {} rows", p.events()?.len())],
        Command::Correlate => vec![p.correlate()?.summary()],
        Command::Report => p.report()?,
        Command::Synth { .. } => unreachable!("handled above"),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut logger = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"));
    if std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty()) {
        logger.write_style(env_logger::WriteStyle::Never);
    }
    logger.init();
    match run(&cli) {
        Ok(lines) => {
            let mut out = std::io::stdout().lock();
            for l in lines {
                let _ = writeln!(out, "{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
