use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use seequant_core::codec::{self, BlockSpec, Container, ImageGrid};
use seequant_core::object::{self, MatchParams, PointObject};
use seequant_core::see::{see_estimate, SeeConfig};
use seequant_core::spectral::{self, SpectrumQuantizer};
use seequant_core::vq::{entropy_objective, Codebook, EntropyObjectiveParams};

/// Entropy-guided residual vector quantization toolkit.
#[derive(Parser)]
#[command(name = "seequant", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a binary PGM into a SEEQ container.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        blocks: BlockArgs,
        /// Keep at most this many levels (lossy when the tree is deeper).
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decode a SEEQ container into a binary PGM.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use only the first D levels.
        #[arg(long)]
        depth: Option<usize>,
    },
    /// Encode in memory and report ratios, distortion and entropy.
    Analyze {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        blocks: BlockArgs,
        /// Weight of the coverage radius in the flat objective.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Weight of the class entropy in the flat objective.
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the entropy tree as JSON.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-block entropy profile of the centered spectrum.
    Spectrum {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        blocks: BlockArgs,
        #[arg(long)]
        out: PathBuf,
        /// Quantization step for real and imaginary parts.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Point-set object matching and entropy.
    #[command(subcommand)]
    Object(ObjectCommand),
}

#[derive(Args)]
struct BlockArgs {
    /// Block size as WxH.
    #[arg(long, default_value = "4x4")]
    block: String,
    /// Sample value used to pad partial edge blocks.
    #[arg(long, default_value_t = 0)]
    pad: u16,
}

impl BlockArgs {
    fn spec(&self) -> Result<BlockSpec> {
        Ok(self.block.parse::<BlockSpec>()?.with_pad(self.pad))
    }
}

#[derive(Subcommand)]
enum ObjectCommand {
    /// χ distance between two point CSVs.
    Chi {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, conflicts_with = "search")]
        alpha: Option<f64>,
        #[arg(long, conflicts_with = "search")]
        gamma: Option<u64>,
        /// Minimize over every permutation and scale.
        #[arg(long)]
        search: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy of a JSON array of objects (each an array of points).
    See {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best partition of a point CSV into cells.
    Partition {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "max-cell")]
        max_cell: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A malformed input file or argument (exit code 2).
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_image(path: &Path) -> Result<ImageGrid> {
    codec::load_pgm(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_points(path: &Path) -> Result<PointObject> {
    let bytes = read(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| usage(format!("{} row {}: {e}", path.display(), line + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(usage(format!("{}: no points", path.display())));
    }
    Ok(PointObject::from_points(&rows)?)
}

fn csv_table(rows: &[(&str, String)]) -> String {
    let mut out = String::from("metric,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode { input, out, blocks, depth, seed } => {
            let image = load_image(&input)?;
            let config = SeeConfig::greedy().with_seed(seed).with_max_depth(depth);
            let container = codec::encode(&image, &blocks.spec()?, &config)?;
            write(&out, container.to_bytes()?)
        }
        Command::Decode { input, out, depth } => {
            let container = Container::from_bytes(&read(&input)?)?;
            let image = codec::decode_depth(&container, depth)?;
            write(&out, codec::write_pgm(&image))
        }
        Command::Analyze { input, blocks, a, b, out, tree, seed } => {
            let image = load_image(&input)?;
            let spec = blocks.spec()?;
            let config = SeeConfig::greedy().with_seed(seed);
            let container = codec::encode(&image, &spec, &config)?;
            let report = codec::report(&image, &container)?;
            let set = codec::extract_blocks(&image, &spec)?;
            let level0 = &container.levels[0].codebook;
            let book = Codebook::new(spec.k(), level0.iter().map(|&v| v as f64).collect())?;
            let objective = entropy_objective(&set, &book, EntropyObjectiveParams::new(a, b)?)?;
            let mut rows: Vec<(&str, String)> = report.rows().into_iter().map(|(k, v)| (k, v.to_string())).collect();
            rows.push(("level0_codebook_size", book.len().to_string()));
            rows.push(("objective", objective.to_string()));
            write(&out, csv_table(&rows))?;
            if let Some(path) = tree {
                let (_, see_tree) = see_estimate(&set, &config)?;
                write(&path, serde_json::to_string_pretty(&see_tree.to_json())? + "\n")?;
            }
            Ok(())
        }
        Command::Spectrum { input, blocks, out, step, seed } => {
            let image = load_image(&input)?;
            let quant = match step {
                Some(s) => SpectrumQuantizer::with_step(s)?,
                None => SpectrumQuantizer::default(),
            };
            let config = SeeConfig::greedy().with_seed(seed);
            let rows = spectral::spectrum_block_see(&image, &blocks.spec()?, &quant, &config)?;
            write(&out, spectral::profile_csv(&rows))
        }
        Command::Object(cmd) => run_object(cmd),
    }
}

fn run_object(cmd: ObjectCommand) -> Result<()> {
    match cmd {
        ObjectCommand::Chi { a, b, alpha, gamma, search, out } => {
            let (oa, ob) = (read_points(&a)?, read_points(&b)?);
            let (params, chi) = if search {
                object::best_match(&oa, &ob)?
            } else {
                let params = MatchParams::new(alpha.unwrap_or(1.0), gamma.unwrap_or(0))?;
                (params, object::chi_distance(&oa, &ob, params)?)
            };
            let rows = [
                ("chi", chi.to_string()),
                ("alpha", params.alpha.to_string()),
                ("gamma", params.gamma.to_string()),
            ];
            emit(out.as_deref(), &csv_table(&rows))
        }
        ObjectCommand::See { input, out } => {
            let raw: Vec<Vec<Vec<f64>>> = serde_json::from_slice(&read(&input)?)
                .map_err(|e| usage(format!("{}: {e}", input.display())))?;
            let objects = raw.iter().map(|o| PointObject::from_points(o)).collect::<Result<Vec<_>, _>>()?;
            let bits = object::object_see(&objects, &SeeConfig::default())?;
            emit(out.as_deref(), &csv_table(&[("objects", objects.len().to_string()), ("bits", bits.to_string())]))
        }
        ObjectCommand::Partition { input, max_cell, out } => {
            let points = read_points(&input)?;
            let (partition, bits) = object::min_partition_see(&points, max_cell, &SeeConfig::default())?;
            let doc = json!({ "bits": bits, "cells": partition.cells, "signature": partition.signature });
            emit(out.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<seequant_core::Error>() {
            return match e {
                seequant_core::Error::Refused(_) => 3,
                _ => 2,
            };
        }
        if cause.is::<Usage>() || cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
