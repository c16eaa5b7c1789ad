use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use canvastune::data::{make_synthetic_set, split, DatasetManifest, LabelKey, StyleSet, SynthKind};
use canvastune::eval::{accuracy_by_name, parse_label_lines, parse_ratings, study_report, RatingStore, DEFAULT_ALPHA};
use canvastune::metadata::{build_query, KeywordPick, KeywordTable, Recommendation, StyleKeywordMap};
use canvastune::pipeline::fixtures::{build_fixture_registry, FixtureConfig};
use canvastune::pipeline::{analyze_file, ModelRegistry};
use canvastune::provider::{Catalog, MusicProvider, DEFAULT_LIMIT};
use canvastune_service::{
    provider_router, serve_blocking, study_router, write_demo_pool, HttpProvider, StudyConfig, StudyState,
};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "canvastune", version, about = "Image-suited music recommendation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset manifests and synthetic sets.
    #[command(subcommand)]
    Data(DataCmd),
    /// Train small seeded models for every registry slot.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 240)]
        images: usize,
        #[arg(long, default_value_t = 6)]
        epochs: usize,
    },
    /// Print one analysis record per image.
    Classify {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        models: PathBuf,
    },
    /// Classify images and search music for them, one line per image.
    Recommend {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long)]
        models: PathBuf,
        /// matched, emotion-only or mismatched.
        #[arg(long, default_value = "matched")]
        strategy: String,
        #[command(flatten)]
        music: MusicArgs,
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: usize,
        /// Seed for the mismatched quadrant draw.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve the mock provider's /v1/search.
    ServeProvider {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    #[command(subcommand)]
    Eval(EvalCmd),
    #[command(subcommand)]
    Study(StudyCmd),
}

#[derive(Args)]
struct MusicArgs {
    /// Catalog JSON searched in-process. Defaults to the bundled demo catalog.
    #[arg(long, conflicts_with = "provider")]
    catalog: Option<PathBuf>,
    /// Base URL of a remote provider.
    #[arg(long)]
    provider: Option<String>,
    #[arg(long)]
    emotion_keywords: Option<PathBuf>,
    #[arg(long)]
    style_keywords: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DataCmd {
    /// Parse a manifest and report label counts.
    Validate {
        manifest: PathBuf,
        #[arg(long)]
        styles: Option<PathBuf>,
        /// Also require every image path to exist (relative to the manifest).
        #[arg(long)]
        check_files: bool,
    },
    /// Stratified train/test split.
    Split {
        manifest: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// media, valence, arousal, style or emotion; all labels when omitted.
        #[arg(long)]
        by: Option<String>,
        #[arg(long)]
        styles: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Write a synthetic labelled set as PNGs plus manifest.tsv.
    Synth {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 32)]
        side: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Accuracy and confusion matrix from two label files.
    Accuracy {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
}

#[derive(Subcommand)]
enum StudyCmd {
    /// Serve sessions, images, clips and ratings (plus /v1/search).
    Serve {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value_t = 8090)]
        port: u16,
        #[arg(long, default_value = "ratings.jsonl")]
        ratings: PathBuf,
        #[arg(long, default_value_t = 74)]
        subjects: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// MOS table and paired t-tests from a ratings file.
    Report {
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Write mos.csv and ttests.csv here.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
    },
    /// Write a synthetic annotated image pool.
    DemoPool {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        per_cell: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_styles(path: Option<&Path>) -> Result<StyleSet> {
    Ok(match path {
        Some(p) => StyleSet::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => StyleSet::default(),
    })
}

fn load_catalog(path: Option<&Path>) -> Result<Catalog> {
    Ok(match path {
        Some(p) => Catalog::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Catalog::bundled(),
    })
}

fn data(cmd: DataCmd) -> Result<()> {
    match cmd {
        DataCmd::Validate {
            manifest,
            styles,
            check_files,
        } => {
            let styles = load_styles(styles.as_deref())?;
            let m = DatasetManifest::load(&manifest, &styles).with_context(|| manifest.display().to_string())?;
            if check_files {
                let base = manifest.parent().unwrap_or(Path::new("."));
                for r in &m.records {
                    if !base.join(&r.path).is_file() {
                        bail!("missing image {}", r.path);
                    }
                }
            }
            println!("ok: {} records", m.len());
            for key in [LabelKey::Media, LabelKey::Valence, LabelKey::Arousal, LabelKey::Style, LabelKey::Emotion] {
                let mut counts: BTreeMap<String, usize> = BTreeMap::new();
                for r in &m.records {
                    if let Some(c) = r.class_of(key) {
                        *counts.entry(c).or_default() += 1;
                    }
                }
                if !counts.is_empty() {
                    let parts: Vec<String> = counts.iter().map(|(c, n)| format!("{c}={n}")).collect();
                    println!("{key:?}: {}", parts.join(" ").to_lowercase());
                }
            }
        }
        DataCmd::Split {
            manifest,
            fraction,
            seed,
            by,
            styles,
            train,
            test,
        } => {
            let styles = load_styles(styles.as_deref())?;
            let m = DatasetManifest::load(&manifest, &styles).with_context(|| manifest.display().to_string())?;
            let key = by.as_deref().map(str::parse::<LabelKey>).transpose()?;
            let (tr, te) = split(&m, fraction, seed, key)?;
            let train = train.unwrap_or_else(|| manifest.with_extension("train.tsv"));
            let test = test.unwrap_or_else(|| manifest.with_extension("test.tsv"));
            tr.save(&train)?;
            te.save(&test)?;
            println!("train {} -> {}", tr.len(), train.display());
            println!("test {} -> {}", te.len(), test.display());
        }
        DataCmd::Synth {
            kind,
            n,
            side,
            seed,
            out,
        } => {
            let kind: SynthKind = kind.parse()?;
            let set = make_synthetic_set(kind, n, side, seed)?;
            std::fs::create_dir_all(&out)?;
            let mut manifest = format!("# name: synthetic-{kind}\n# source: canvastune data synth --seed {seed}\n");
            for (i, (img, label)) in set.iter().enumerate() {
                let file = format!("{kind}-{i:04}.png");
                img.save_png(out.join(&file))?;
                let class = &set.classes[label];
                let (media, labels) = match kind {
                    SynthKind::Media => (class.as_str(), String::new()),
                    SynthKind::Color => ("artwork", format!("valence={class}")),
                    SynthKind::Geometry => ("artwork", format!("arousal={class}")),
                    SynthKind::Style => ("artwork", format!("style={class}")),
                };
                manifest.push_str(&format!("{file}\t{media}\t{labels}\n"));
            }
            std::fs::write(out.join("manifest.tsv"), manifest)?;
            println!("wrote {} images to {}", set.len(), out.display());
        }
    }
    Ok(())
}

fn recommend(
    images: &[PathBuf],
    models: &Path,
    strategy: &str,
    music: &MusicArgs,
    limit: usize,
    seed: u64,
) -> Result<()> {
    let registry = ModelRegistry::load(models)?;
    let rec: Recommendation = strategy.parse()?;
    let table = match &music.emotion_keywords {
        Some(p) => KeywordTable::load(p)?,
        None => KeywordTable::default(),
    };
    let style_map = match &music.style_keywords {
        Some(p) => StyleKeywordMap::load(p, registry.styles())?,
        None => StyleKeywordMap::default(),
    };
    let provider: Box<dyn MusicProvider> = match &music.provider {
        Some(url) => Box::new(HttpProvider::new(url)?),
        None => Box::new(load_catalog(music.catalog.as_deref())?),
    };
    for path in images {
        let analysis = analyze_file(path, &registry).with_context(|| path.display().to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strategy = rec.strategy_for(analysis.media_type);
        let query = build_query(&analysis, strategy, &table, &style_map, KeywordPick::First, &mut rng)?;
        let playlist = provider.search(&query, limit)?;
        let record: serde_json::Value = serde_json::from_str(&analysis.to_record())?;
        let line = serde_json::json!({
            "image": path.file_name().map(|f| f.to_string_lossy().into_owned()),
            "analysis": record,
            "query": playlist.query,
            "tracks": playlist.tracks.iter().map(|t| &t.id).collect::<Vec<_>>(),
        });
        println!("{line}");
    }
    Ok(())
}

fn study(cmd: StudyCmd) -> Result<()> {
    match cmd {
        StudyCmd::Serve {
            images,
            catalog,
            port,
            ratings,
            subjects,
            seed,
        } => {
            let catalog = Arc::new(load_catalog(catalog.as_deref())?);
            let store = RatingStore::open(&ratings).with_context(|| ratings.display().to_string())?;
            let state = StudyState::new(
                &images,
                catalog.as_ref(),
                &KeywordTable::default(),
                &StyleKeywordMap::default(),
                store,
                &StudyConfig::numbered(subjects, seed),
            )?;
            let app = study_router(Arc::new(state)).merge(provider_router(catalog));
            let addr = SocketAddr::from(([127, 0, 0, 1], port));
            eprintln!("study service on http://{addr} ({subjects} subjects, ratings in {})", ratings.display());
            serve_blocking(app, addr)?;
        }
        StudyCmd::Report { ratings, alpha, csv_dir } => {
            let text = std::fs::read_to_string(&ratings).with_context(|| ratings.display().to_string())?;
            let records: Vec<_> = parse_ratings(&text)?.into_values().collect();
            let report = study_report(&records, alpha)?;
            print!("{}", report.to_text());
            if let Some(dir) = csv_dir {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("mos.csv"), report.mos_csv())?;
                std::fs::write(dir.join("ttests.csv"), report.tests_csv())?;
            } else {
                println!();
                print!("{}", report.mos_csv());
                println!();
                print!("{}", report.tests_csv());
            }
        }
        StudyCmd::DemoPool { out, per_cell, seed } => {
            let n = write_demo_pool(&out, per_cell, seed)?;
            println!("wrote {n} images to {}", out.display());
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Data(cmd) => data(cmd),
        Command::Fixtures {
            out,
            seed,
            images,
            epochs,
        } => {
            let config = FixtureConfig {
                seed,
                images,
                epochs,
                ..FixtureConfig::default()
            };
            let (_, accuracy) = build_fixture_registry(&out, &config)?;
            let named: BTreeMap<String, f64> = accuracy.iter().map(|(s, a)| (s.to_string(), *a)).collect();
            std::fs::write(out.join("accuracy.json"), serde_json::to_string_pretty(&named)? + "\n")?;
            for (slot, acc) in &named {
                println!("{slot}\t{acc:.4}");
            }
            Ok(())
        }
        Command::Classify { images, models } => {
            let registry = ModelRegistry::load(&models)?;
            for path in &images {
                let a = analyze_file(path, &registry).with_context(|| path.display().to_string())?;
                println!("{}", a.to_record());
            }
            Ok(())
        }
        Command::Recommend {
            images,
            models,
            strategy,
            music,
            limit,
            seed,
        } => recommend(&images, &models, &strategy, &music, limit, seed),
        Command::ServeProvider { catalog, port } => {
            let catalog = load_catalog(catalog.as_deref())?;
            let addr = SocketAddr::from(([127, 0, 0, 1], port));
            eprintln!("provider on http://{addr} ({} tracks)", catalog.len());
            serve_blocking(provider_router(Arc::new(catalog)), addr)?;
            Ok(())
        }
        Command::Eval(EvalCmd::Accuracy { pred, labels }) => {
            let p = parse_label_lines(&std::fs::read_to_string(&pred).with_context(|| pred.display().to_string())?);
            let l =
                parse_label_lines(&std::fs::read_to_string(&labels).with_context(|| labels.display().to_string())?);
            let m = accuracy_by_name(&p, &l)?;
            println!("accuracy {:.4} ({}/{})", m.accuracy(), m.correct(), m.total());
            print!("{}", m.to_csv());
            Ok(())
        }
        Command::Study(cmd) => study(cmd),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
