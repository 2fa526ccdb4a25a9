//! Command-line front end: `solve`, `verify` and `geo`.
//!
//! Exit codes: 0 success, 1 bad input, 2 solve stopped at the sweep limit,
//! 3 numerical failure.

pub mod config;
pub mod geo;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use horomap_energy::{write_field_csv, FieldMetadata};
use horomap_geometry::{Family, ModelParams};
use horomap_solver::{minimize, setup, uniqueness_check, SolveStatus};

use config::Config;
use verify::VerifyOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_MAX_SWEEPS: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Files written by `solve`.
pub const FIELD_CSV: &str = "field.csv";
pub const FIELD_META: &str = "field.json";
pub const REPORT_JSON: &str = "report.json";
pub const UNIQUENESS_JSON: &str = "uniqueness.json";

#[derive(Debug, Parser)]
#[command(name = "horomap", version, about = "Singular harmonic maps into rank-one symmetric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for `solve` (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for energy evaluation (overrides the config).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize the energy for a TOML problem file.
    Solve { config: PathBuf },
    /// Run the randomized certification checks.
    Verify {
        /// Check id, repeatable; `all` or nothing selects every check.
        #[arg(long = "lemma")]
        lemma: Vec<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Samples per family for each pointwise check.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Evaluate a geometric quantity.
    Geo {
        #[command(subcommand)]
        query: GeoQuery,
    },
}

#[derive(Debug, clap::Args)]
struct Target {
    /// R, C or H.
    #[arg(long, default_value = "R")]
    family: Family,
    #[arg(long, default_value_t = 2)]
    rank: usize,
}

#[derive(Debug, Subcommand)]
enum GeoQuery {
    /// Distance between two points given as `u,v1,...`.
    Dist {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        q: Vec<f64>,
    },
    /// The Busemann function f_γ (or f_{-γ} with --minus).
    Busemann {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        p: Vec<f64>,
        #[arg(long)]
        minus: bool,
    },
    /// Endpoint of a geodesic, then its distance from the start.
    Geodesic {
        #[command(flatten)]
        target: Target,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        dir: Vec<f64>,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match cli.command {
        Command::Solve { config } => cmd_solve(&config, cli.out.as_deref(), cli.workers, out, err),
        Command::Verify { lemma, seed, samples } => cmd_verify(&lemma, VerifyOptions { seed, samples }, out, err),
        Command::Geo { query } => cmd_geo(query, out, err),
    }
}

fn cmd_solve(path: &Path, out_dir: Option<&Path>, workers: Option<usize>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut cfg = match Config::load(path) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            return EXIT_INPUT;
        }
    };
    if let Some(w) = workers {
        if w == 0 {
            let _ = writeln!(err, "--workers must be at least 1");
            return EXIT_INPUT;
        }
        cfg.problem.options.workers = w;
    }
    let dir = out_dir.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("output"));
    // Everything the solve depends on is built before any file is written.
    let s = match setup(&cfg.problem) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{}: problem rejected: {e}", path.display());
            return EXIT_INPUT;
        }
    };
    let start = Instant::now();
    let (field, report) = match minimize(&cfg.problem) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "solve failed: {e}");
            return EXIT_NUMERICAL;
        }
    };
    let uniqueness = match cfg.uniqueness {
        Some((runs, seed)) => match uniqueness_check(&cfg.problem, runs, seed) {
            Ok(u) => Some(u),
            Err(e) => {
                let _ = writeln!(err, "uniqueness study failed: {e}");
                return EXIT_NUMERICAL;
            }
        },
        None => None,
    };
    let seconds = start.elapsed().as_secs_f64();

    let p: &ModelParams = &cfg.problem.params;
    let meta = FieldMetadata {
        family: p.family,
        rank: p.rank,
        lo: cfg.problem.lo.clone(),
        hi: cfg.problem.hi.clone(),
        h: cfg.problem.h,
        nodes: s.grid.len(),
        vdim: p.vdim(),
    };
    let written = (|| -> Result<(), String> {
        fs::create_dir_all(&dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        let mut csv = Vec::new();
        write_field_csv(&mut csv, &s.grid, &field).map_err(|e| e.to_string())?;
        let put = |name: &str, bytes: &[u8]| {
            fs::write(dir.join(name), bytes).map_err(|e| format!("cannot write {}: {e}", dir.join(name).display()))
        };
        put(FIELD_CSV, &csv)?;
        put(FIELD_META, meta.to_json().map_err(|e| e.to_string())?.as_bytes())?;
        put(REPORT_JSON, report.to_json().map_err(|e| e.to_string())?.as_bytes())?;
        if let Some(u) = &uniqueness {
            put(UNIQUENESS_JSON, serde_json::to_string_pretty(u).map_err(|e| e.to_string())?.as_bytes())?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        let _ = writeln!(err, "{e}");
        return EXIT_INPUT;
    }
    let status = match report.status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxSweeps => "max_sweeps",
    };
    let _ = writeln!(out, "status {status}");
    let _ = writeln!(out, "sweeps {}", report.sweeps);
    let _ = writeln!(out, "final_energy {:?}", report.final_energy);
    let _ = writeln!(out, "final_residual {:?}", report.final_residual);
    if let Some(m) = report.geodesic_oracle_match {
        let _ = writeln!(out, "geodesic_oracle_match {m}");
    }
    if let Some(u) = &uniqueness {
        let _ = writeln!(out, "uniqueness_spread {:?}", u.spread);
    }
    let _ = writeln!(out, "output {}", dir.display());
    let _ = writeln!(err, "wall time {seconds:.3} s");
    match report.status {
        SolveStatus::Converged => EXIT_OK,
        SolveStatus::MaxSweeps => EXIT_MAX_SWEEPS,
    }
}

fn cmd_verify(ids: &[String], opts: VerifyOptions, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Err(e) = verify::select(ids) {
        let _ = writeln!(err, "{e}");
        return EXIT_INPUT;
    }
    match verify::run_checks(ids, opts) {
        Ok(rows) => {
            let _ = out.write_all(verify::format_table(&rows).as_bytes());
            if rows.iter().all(|r| r.passed) {
                EXIT_OK
            } else {
                EXIT_INPUT
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_NUMERICAL
        }
    }
}

fn cmd_geo(query: GeoQuery, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let params = |t: &Target| ModelParams::new(t.family, t.rank);
    let result = match &query {
        GeoQuery::Dist { target, p, q } => params(target).and_then(|m| geo::query_dist(&m, p, q)),
        GeoQuery::Busemann { target, p, minus } => params(target).and_then(|m| geo::query_busemann(&m, p, *minus)),
        GeoQuery::Geodesic { target, p, dir, t } => params(target).and_then(|m| geo::query_geodesic(&m, p, dir, *t)),
    };
    match result {
        Ok(s) => {
            let _ = writeln!(out, "{s}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            EXIT_INPUT
        }
    }
}
