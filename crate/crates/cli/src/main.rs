use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use amrlab_core::amr::{read_container, write_container, FieldKind};
use amrlab_core::codec::{BoundMode, CodecId, ErrorBound};
use amrlab_core::iso::{demo_1d, export_obj, CrackCensus, Method};
use amrlab_core::metrics::make_report;
use amrlab_core::pipeline::{
    compress_dataset, decompress_dataset, default_iso, default_theta, effective_seed, extract_with_census,
    field_quality, generate_dataset, quality_row, read_compressed, run_matrix, verify_bound, write_compressed,
    FieldQuality, RunConfig, DEFAULT_DIMS, DEFAULT_SEED,
};

#[derive(Parser)]
#[command(name = "amrlab", version, about = "Error-bounded compression and iso-surfaces on two-level AMR data")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic field and write it as an AMR container.
    Gen(GenArgs),
    /// Compress every patch of a container.
    Compress(CompressArgs),
    /// Decompress a compressed directory back into a container.
    Decompress(DecompressArgs),
    /// Extract an iso-surface to OBJ and write its crack census as JSON.
    Isosurface(IsoArgs),
    /// Compare an original and a reconstructed container and write a CSV report.
    Metrics(MetricsArgs),
    /// Run the kinds × codecs × bounds × methods sweep.
    Matrix(MatrixArgs),
    /// Print the one-dimensional blocking and resampling demo as CSV.
    Demo1d(Demo1dArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "smooth")]
    kind: FieldKind,
    /// Finest-level cells per axis; must be a multiple of 16.
    #[arg(long, default_value_t = DEFAULT_DIMS)]
    dims: usize,
    /// Refinement threshold on the coarse gradient magnitude. Defaults per kind.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value = "rel")]
    eb_mode: BoundMode,
    #[arg(long, default_value_t = 1e-3)]
    eb: f64,
}

#[derive(Args)]
struct CompressArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value = "LR")]
    codec: CodecId,
    #[command(flatten)]
    bound: BoundArgs,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecompressArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Original container to re-check the error bound against.
    #[arg(long)]
    original: Option<PathBuf>,
}

#[derive(Args)]
struct IsoArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value = "resample")]
    method: Method,
    /// Iso value; defaults to the mean of the uniformized field.
    #[arg(long, allow_hyphen_values = true)]
    iso: Option<f64>,
    /// OBJ output path.
    #[arg(short, long)]
    out: PathBuf,
    /// Census JSON path; defaults to the OBJ path with a `.json` extension.
    #[arg(long)]
    census: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    recon: PathBuf,
    /// Compressed directory, for the compression ratio and bound labels.
    #[arg(long)]
    compressed: PathBuf,
    /// Census JSON files written by `isosurface`. Without any, surfaces are
    /// extracted from the reconstruction for every method in `--methods`.
    #[arg(long, num_args = 1..)]
    census: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "resample,dual-pad,dual-stitch")]
    methods: Vec<Method>,
    #[arg(long, allow_hyphen_values = true)]
    iso: Option<f64>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct MatrixArgs {
    #[arg(short, long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "smooth,irregular")]
    kinds: Vec<FieldKind>,
    #[arg(long, default_value_t = DEFAULT_DIMS)]
    dims: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "LR,INTERP")]
    codecs: Vec<CodecId>,
    #[arg(long, default_value = "rel")]
    eb_mode: BoundMode,
    #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-3,1e-2")]
    bounds: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "resample,dual-pad,dual-stitch")]
    methods: Vec<Method>,
    #[arg(long, allow_hyphen_values = true)]
    iso: Option<f64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct Demo1dArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1,2,3,4,5,6,7,8")]
    values: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    block: usize,
}

#[derive(Serialize, Deserialize)]
struct CensusFile {
    method: String,
    iso: f64,
    vertices: usize,
    triangles: usize,
    #[serde(flatten)]
    census: CrackCensus,
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

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Compress(a) => cmd_compress(a),
        Cmd::Decompress(a) => cmd_decompress(a),
        Cmd::Isosurface(a) => cmd_isosurface(a),
        Cmd::Metrics(a) => cmd_metrics(a),
        Cmd::Matrix(a) => cmd_matrix(a),
        Cmd::Demo1d(a) => cmd_demo1d(a),
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let seed = effective_seed(a.seed);
    let theta = a.theta.unwrap_or_else(|| default_theta(a.kind));
    let ds = generate_dataset(a.kind, a.dims, seed, theta)?;
    write_container(&ds, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "kind={} dims={} seed={seed} theta={theta} levels={} fine_coverage={:.4}",
        a.kind,
        a.dims,
        ds.num_levels(),
        if ds.num_levels() > 1 { ds.coverage(1) } else { 0.0 }
    );
    Ok(())
}

fn cmd_compress(a: CompressArgs) -> Result<()> {
    let ds = read_container(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let bound = ErrorBound::new(a.bound.eb_mode, a.bound.eb)?;
    let cd = compress_dataset(&ds, a.codec, bound)?;
    // Re-check the guarantee before anything is written.
    let recon = decompress_dataset(&cd)?;
    let errs = verify_bound(&ds, &recon, &cd)?;
    write_compressed(&cd, &a.out)?;
    for (l, e) in errs.iter().enumerate() {
        println!(
            "level {l}: eb_abs={:e} max_err={e:e} cr={:.3}",
            cd.level_eb_abs[l],
            cd.level_compression_ratio(l)
        );
    }
    println!("total: {} -> {} bytes, cr={:.3}", cd.raw_bytes(), cd.compressed_bytes(), cd.compression_ratio());
    Ok(())
}

fn cmd_decompress(a: DecompressArgs) -> Result<()> {
    let cd = read_compressed(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let recon = decompress_dataset(&cd)?;
    if let Some(orig) = &a.original {
        let ds = read_container(orig).with_context(|| format!("reading {}", orig.display()))?;
        let errs = verify_bound(&ds, &recon, &cd).context("error bound check failed")?;
        for (l, e) in errs.iter().enumerate() {
            println!("level {l}: max_err={e:e} <= eb_abs={:e}", cd.level_eb_abs[l]);
        }
    }
    write_container(&recon, &a.out)?;
    for l in 0..cd.levels.len() {
        println!("level {l}: cr={:.3}", cd.level_compression_ratio(l));
    }
    println!("total: cr={:.3}", cd.compression_ratio());
    Ok(())
}

fn cmd_isosurface(a: IsoArgs) -> Result<()> {
    let ds = read_container(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let iso = match a.iso {
        Some(v) => v,
        None => default_iso(&ds)?,
    };
    let (mesh, census) = extract_with_census(&ds, iso, a.method)?;
    export_obj(&mesh, &a.out)?;
    let census_path = a.census.unwrap_or_else(|| a.out.with_extension("json"));
    let file = CensusFile {
        method: a.method.as_str().into(),
        iso,
        vertices: mesh.vertices.len(),
        triangles: mesh.num_triangles(),
        census,
    };
    fs::write(&census_path, serde_json::to_string_pretty(&file)?)?;
    println!(
        "method={} iso={iso} triangles={} interface_open_edges={} domain_open_edges={}",
        a.method,
        mesh.num_triangles(),
        census.interface_open_edges,
        census.domain_open_edges
    );
    Ok(())
}

fn read_census(path: &Path) -> Result<(Method, CrackCensus)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let f: CensusFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((f.method.parse()?, f.census))
}

fn cmd_metrics(a: MetricsArgs) -> Result<()> {
    let orig = read_container(&a.original)?;
    let recon = read_container(&a.recon)?;
    let cd = read_compressed(&a.compressed)?;
    verify_bound(&orig, &recon, &cd).context("error bound check failed")?;
    let q: FieldQuality = field_quality(&orig, &recon, &cd)?;
    let mut rows = Vec::new();
    if a.census.is_empty() {
        let iso = match a.iso {
            Some(v) => v,
            None => default_iso(&orig)?,
        };
        for &m in &a.methods {
            let (_, c) = extract_with_census(&recon, iso, m)?;
            rows.push(quality_row(&cd, &q, m, &c));
        }
    } else {
        for path in &a.census {
            let (m, c) = read_census(path)?;
            rows.push(quality_row(&cd, &q, m, &c));
        }
    }
    let report = make_report(rows);
    report.write(&a.out)?;
    print!("{}", report.to_csv());
    Ok(())
}

fn cmd_matrix(a: MatrixArgs) -> Result<()> {
    let cfg = RunConfig {
        kinds: a.kinds,
        dims: a.dims,
        seed: effective_seed(a.seed),
        theta: a.theta,
        codecs: a.codecs,
        bound_mode: a.eb_mode,
        bounds: a.bounds,
        iso: a.iso,
        methods: a.methods,
        out_dir: a.out,
        jobs: a.jobs,
    };
    let rows = run_matrix(&cfg)?;
    if rows.len() != cfg.expected_rows() {
        bail!("expected {} rows, got {}", cfg.expected_rows(), rows.len());
    }
    println!("kind,{}", amrlab_core::metrics::CSV_HEADER);
    for r in &rows {
        println!("{},{}", r.kind, r.row.to_csv());
    }
    Ok(())
}

fn cmd_demo1d(a: Demo1dArgs) -> Result<()> {
    let d = demo_1d(&a.values, a.block)?;
    println!("kind,position,original,blocked,resampled");
    let n = d.original.len();
    for i in 0..=n {
        // Cells sit at i + 0.5, vertices at integer positions.
        if i > 0 {
            println!("cell,{},{},{},", i as f64 - 0.5, d.original[i - 1], d.blocked[i - 1]);
        }
        println!("vertex,{i},,,{}", d.resampled[i]);
    }
    Ok(())
}
