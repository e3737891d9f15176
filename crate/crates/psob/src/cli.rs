//! Command-line dispatch. Machine-readable output goes to the supplied
//! writer (stdout in the binary); diagnostics go to the log on stderr.
//! Exit codes: 0 success, 1 domain error, 2 usage error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use psob_core::attention::{attention_file_name, rasterize, AttentionMap, DEFAULT_THICKNESS};
use psob_core::augment::{augment_batch, sample_seed, AugConfig, Sample};
use psob_core::dataset::{corpus_stats, load_split, save_split, DatasetSplit, ImageInfo};
use psob_core::eval::{eval_set_from_split, evaluate, parse_detections};
use psob_core::netprep::{adapt_first_conv, Tensor4};
use psob_core::raster::{decode_gray_png, encode_rgb_png, Raster};
use psob_core::sim::{simulate_sketch, simulate_timing, SimConfig, DEFAULT_LATENCY, DEFAULT_SPEED};
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "psob", version, about = "Partial-sketch boundary annotation tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a split; prints its sizes as JSON.
    Validate { split: PathBuf },
    /// Per-split averages: times, curvature, perimeter, LS/PP, strokes.
    Stats {
        split: PathBuf,
        /// Emit JSON instead of the text block.
        #[arg(long)]
        json: bool,
    },
    /// Replace every annotation's strokes with simulated partial sketches.
    Simulate(SimulateArgs),
    /// Flip, jitter, crop and copy-paste a split with its images.
    Augment(AugmentArgs),
    /// Write one attention-map PNG per image.
    Rasterize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THICKNESS)]
        thickness: usize,
    },
    /// Widen a (64, 3, 7, 7) stem tensor to four input channels.
    AdaptWeights {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// COCO-style AP with scale, curvature and assistance strata.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        dt: PathBuf,
        /// Emit the aligned text table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Run the local annotation service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output split; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub coverage: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub points_per_arc: usize,
    /// Pen speed in pixels per second.
    #[arg(long, default_value_t = DEFAULT_SPEED)]
    pub speed: f64,
    /// Seconds of non-drawing time per object.
    #[arg(long, default_value_t = DEFAULT_LATENCY)]
    pub latency: f64,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// JSON augmentation config; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Directory holding the images named by `file_name`.
    #[arg(long)]
    pub images: PathBuf,
    /// Directory with `<id>_attn.png` maps; rasterised from strokes otherwise.
    #[arg(long)]
    pub attention: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[arg(long, env = "PSOB_DATA_ROOT", default_value = ".")]
    pub data_root: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            EXIT_DOMAIN
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::Validate { split } => {
            let s = load(&split)?;
            let summary = json!({
                "images": s.images.len(),
                "annotations": s.annotations.len(),
                "categories": s.categories.len(),
            });
            writeln!(out, "{summary}")?;
        }
        Command::Stats { split, json } => {
            let stats = corpus_stats(&load(&split)?);
            if stats.empty {
                log::warn!("split has no annotations; averages are undefined");
            }
            if json {
                writeln!(out, "{}", serde_json::to_string(&stats)?)?;
            } else {
                writeln!(out, "{stats}")?;
            }
        }
        Command::Simulate(args) => simulate(args, out)?,
        Command::Augment(args) => augment(args, out)?,
        Command::Rasterize { input, out_dir, thickness } => {
            let split = load(&input)?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for img in &split.images {
                let map = image_attention(&split, img, thickness)?;
                let path = out_dir.join(attention_file_name(img.id));
                fs::write(&path, map.to_png()?).with_context(|| format!("writing {}", path.display()))?;
            }
            writeln!(out, "{}", json!({ "written": split.images.len() }))?;
        }
        Command::AdaptWeights { input, out: path, seed } => {
            let bytes = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let wide = adapt_first_conv(&Tensor4::from_bytes(&bytes)?, seed)?;
            fs::write(&path, wide.to_bytes()).with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "{}", json!({ "dims": wide.dims() }))?;
        }
        Command::Evaluate { gt, dt, table } => {
            let mut set = eval_set_from_split(&load(&gt)?)?;
            let text = fs::read_to_string(&dt).with_context(|| format!("reading {}", dt.display()))?;
            set.detections = parse_detections(&text, &set).with_context(|| format!("in {}", dt.display()))?;
            let report = evaluate(&set)?;
            if table {
                writeln!(out, "{report}")?;
            } else {
                writeln!(out, "{}", serde_json::to_string(&report)?)?;
            }
        }
        Command::Serve(args) => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::service::serve(args.bind, args.data_root, args.seed))?;
        }
    }
    Ok(())
}

fn load(path: &Path) -> anyhow::Result<DatasetSplit> {
    load_split(path).with_context(|| format!("loading {}", path.display()))
}

fn image_attention(split: &DatasetSplit, img: &ImageInfo, thickness: usize) -> anyhow::Result<AttentionMap> {
    let strokes: Vec<_> = split.annotations_for(img.id).flat_map(|a| a.strokes.iter().cloned()).collect();
    Ok(rasterize(&strokes, img.width as usize, img.height as usize, thickness)?)
}

fn simulate(args: SimulateArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut split = load(&args.input)?;
    for (i, ann) in split.annotations.iter_mut().enumerate() {
        let mut strokes = Vec::new();
        for (k, ring) in ann.rings.iter().enumerate() {
            let config = SimConfig {
                target_coverage: args.coverage,
                jitter_sigma: args.jitter,
                seed: sample_seed(sample_seed(args.seed, i), k),
                points_per_arc: args.points_per_arc,
            };
            strokes.extend(simulate_sketch(ring, &config)?.strokes);
        }
        let timed = simulate_timing(&strokes, args.speed, args.latency)?;
        ann.strokes = timed.strokes;
        ann.sketch_time = timed.sketch_time;
        ann.interaction_time = timed.interaction_time;
    }
    split.validate()?;
    match args.out {
        Some(path) => {
            save_split(&split, &path).with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "{}", json!({ "annotations": split.annotations.len() }))?;
        }
        None => writeln!(out, "{}", split.to_canonical_json())?,
    }
    Ok(())
}

fn read_rgb(path: &Path) -> anyhow::Result<Raster> {
    let img = image::open(path).with_context(|| format!("reading {}", path.display()))?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Raster::from_vec(w as usize, h as usize, 3, img.into_raw())?)
}

fn augment(args: AugmentArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let config: AugConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => AugConfig::default(),
    };
    config.validate()?;
    let split = load(&args.input)?;
    let mut samples = Vec::with_capacity(split.images.len());
    for img in &split.images {
        let image = read_rgb(&args.images.join(&img.file_name))?;
        if (image.width(), image.height()) != (img.width as usize, img.height as usize) {
            bail!(
                "image {} is {}x{} on disk but {}x{} in the split",
                img.file_name,
                image.width(),
                image.height(),
                img.width,
                img.height
            );
        }
        let attention = match &args.attention {
            Some(dir) => {
                let path = dir.join(attention_file_name(img.id));
                let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
                AttentionMap::from_raster(decode_gray_png(&bytes)?)?
            }
            None => image_attention(&split, img, DEFAULT_THICKNESS)?,
        };
        samples.push(Sample {
            image_id: img.id,
            image,
            attention,
            annotations: split.annotations_for(img.id).cloned().collect(),
        });
    }

    let results = augment_batch(&samples, &config)?;
    let image_dir = args.out.join("images");
    let attn_dir = args.out.join("attention");
    fs::create_dir_all(&image_dir)?;
    fs::create_dir_all(&attn_dir)?;
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut traces = BTreeMap::new();
    for ((sample, trace), src) in results.into_iter().zip(&split.images) {
        let file_name = format!("{}.png", sample.image_id);
        fs::write(image_dir.join(&file_name), encode_rgb_png(&sample.image)?)?;
        fs::write(attn_dir.join(attention_file_name(sample.image_id)), sample.attention.to_png()?)?;
        images.push(ImageInfo {
            id: sample.image_id,
            file_name,
            width: sample.width() as u32,
            height: sample.height() as u32,
            extra: src.extra.clone(),
        });
        // pasted objects keep their source ids, so ids are reassigned
        for mut ann in sample.annotations {
            ann.extra.insert("source_id".into(), ann.id.into());
            ann.id = annotations.len() as u64 + 1;
            annotations.push(ann);
        }
        traces.insert(sample.image_id, trace);
    }
    let result = DatasetSplit { images, annotations, ..split };
    result.validate()?;
    save_split(&result, args.out.join("split.json"))?;
    fs::write(args.out.join("trace.json"), serde_json::to_string_pretty(&traces)?)?;
    writeln!(
        out,
        "{}",
        json!({ "images": result.images.len(), "annotations": result.annotations.len() })
    )?;
    Ok(())
}
