//! `segrand`: batch evaluation, synthetic sweeps and oracle self-checks.
//!
//! Exit codes: 0 success, 1 usage error, 2 unreadable or malformed input,
//! 3 self-check property violation.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use segrand::io::{
    read_label_map, read_manifest, render_report, write_label_map, LabelFormat, ManifestEntry, ReportData,
    ReportFormat, SampleReport,
};
use segrand::selfcheck::{self, CheckConfig};
use segrand::synth::{for_each_prediction, sweep_curves, GridSpec};
use segrand::{aggregate, evaluate_pair, expected_sum_squares, EvalOptions, GroupBy};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_PROPERTY: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "segrand",
    version,
    about = "Adjusted Rand index, precision and recall for segmentations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score predicted label maps against ground truth.
    Eval(EvalArgs),
    /// Sweep merged/split checkerboard predictions and write the metric curves.
    Sweep(SweepArgs),
    /// Check closed forms against brute-force oracles on random instances.
    Selfcheck(SelfcheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(format: Format) -> Self {
        match format {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GroupKey {
    None,
    Objects,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// CSV manifest with header `sample_id,truth,pred`.
    #[arg(long, conflicts_with_all = ["truth", "pred"], required_unless_present_all = ["truth", "pred"])]
    manifest: Option<PathBuf>,
    /// Ground-truth label map (single-pair mode).
    #[arg(long, requires = "pred")]
    truth: Option<PathBuf>,
    /// Predicted label map (single-pair mode).
    #[arg(long, requires = "truth")]
    pred: Option<PathBuf>,
    /// Ground-truth ids treated as background.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    background_ids: Vec<u32>,
    /// Compute foreground metrics (default).
    #[arg(long, overrides_with = "no_fg")]
    fg: bool,
    #[arg(long, overrides_with = "fg")]
    no_fg: bool,
    /// Compute metrics over all pixels.
    #[arg(long, overrides_with = "no_global")]
    global: bool,
    #[arg(long, overrides_with = "global")]
    no_global: bool,
    /// Summarise per ground-truth object count; writes the summary to --out.
    #[arg(long, value_enum)]
    group_by: Option<GroupKey>,
    /// Write per-sample rows to --out even when --group-by is given.
    #[arg(long, conflicts_with = "summary_only")]
    per_sample: bool,
    /// Write only the summary to --out.
    #[arg(long)]
    summary_only: bool,
    /// Additional summary output when --out holds per-sample rows.
    #[arg(long)]
    summary_out: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Abort at the first failing sample.
    #[arg(long)]
    strict: bool,
    /// Worker threads, 0 for one per core.
    #[arg(long, env = "SEGRAND_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Grid rows and columns.
    #[arg(long, num_args = 2, value_names = ["ROWS", "COLS"], default_values_t = [4, 4])]
    grid: Vec<usize>,
    /// Cell height and width in pixels.
    #[arg(long, num_args = 2, value_names = ["H", "W"], default_values_t = [16, 16])]
    cell: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    #[arg(long, default_value_t = 40)]
    k_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write every generated prediction as `k<k>.pgm` into this directory.
    #[arg(long)]
    emit_maps: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Fault {
    /// Expectation whose first term divides by m(m-2).
    MMinus2,
}

#[derive(Args, Debug)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 500)]
    instances: usize,
    #[arg(long, default_value_t = 64)]
    max_pixels: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Swap in a known-wrong closed form to confirm the suites catch it.
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<Fault>,
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error,
    }
}

fn data(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_DATA,
        error,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

fn evaluate_entry(entry: &ManifestEntry, options: &EvalOptions) -> segrand::Result<SampleReport> {
    let truth = read_label_map(&entry.truth_path)?;
    let pred = read_label_map(&entry.pred_path)?;
    let report = evaluate_pair(&truth, &pred, options)?;
    Ok(SampleReport {
        sample_id: entry.sample_id.clone(),
        report,
    })
}

fn cmd_eval(args: EvalArgs) -> std::result::Result<(), Failure> {
    let compute_fg = args.fg || !args.no_fg;
    let compute_global = args.global && !args.no_global;
    if !compute_fg && !compute_global {
        return Err(usage(anyhow::anyhow!(
            "--no-fg without --global leaves nothing to compute"
        )));
    }
    if args.summary_out.is_some() && (args.summary_only || (args.group_by.is_some() && !args.per_sample)) {
        return Err(usage(anyhow::anyhow!(
            "--summary-out needs per-sample rows on --out (use --per-sample)"
        )));
    }
    let options = EvalOptions {
        background_ids: args.background_ids.clone(),
        compute_fg,
        compute_global,
    };

    let entries = match (&args.manifest, &args.truth, &args.pred) {
        (Some(manifest), _, _) => {
            read_manifest(manifest)
                .with_context(|| format!("reading manifest {}", manifest.display()))
                .map_err(data)?
                .entries
        }
        (None, Some(truth), Some(pred)) => vec![ManifestEntry {
            sample_id: truth
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sample".into()),
            truth_path: truth.clone(),
            pred_path: pred.clone(),
        }],
        _ => {
            return Err(usage(anyhow::anyhow!(
                "give --manifest or both --truth and --pred"
            )))
        }
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .context("building thread pool")
        .map_err(usage)?;
    let results: Vec<segrand::Result<SampleReport>> =
        pool.install(|| entries.par_iter().map(|e| evaluate_entry(e, &options)).collect());

    let mut samples = Vec::with_capacity(results.len());
    let mut failures = 0usize;
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(sample) => samples.push(sample),
            Err(err) => {
                failures += 1;
                eprintln!("sample {}: {}: {err}", entry.sample_id, err.kind());
                if args.strict {
                    return Err(data(anyhow::anyhow!(
                        "aborting on sample {} (--strict)",
                        entry.sample_id
                    )));
                }
            }
        }
    }

    let group_by = match args.group_by {
        Some(GroupKey::Objects) => GroupBy::TruthObjectCount,
        _ => GroupBy::None,
    };
    let format = ReportFormat::from(args.format);
    let summary_on_out = args.summary_only || (args.group_by.is_some() && !args.per_sample);
    let summary = || -> Result<String> {
        let reports: Vec<_> = samples.iter().map(|s| s.report.clone()).collect();
        let rows = aggregate(&reports, group_by).context("no sample could be evaluated")?;
        Ok(render_report(ReportData::Summary(&rows), format)?)
    };

    if summary_on_out {
        let text = summary().map_err(data)?;
        emit(args.out.as_deref(), &text).map_err(data)?;
    } else {
        let text = render_report(ReportData::Samples(&samples), format).map_err(|e| data(e.into()))?;
        emit(args.out.as_deref(), &text).map_err(data)?;
        if let Some(path) = &args.summary_out {
            let text = summary().map_err(data)?;
            emit(Some(path), &text).map_err(data)?;
        }
    }

    if failures > 0 {
        return Err(data(anyhow::anyhow!(
            "{failures} of {} samples failed",
            entries.len()
        )));
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> std::result::Result<(), Failure> {
    let spec = GridSpec {
        grid_rows: args.grid[0],
        grid_cols: args.grid[1],
        cell_height: args.cell[0],
        cell_width: args.cell[1],
    };
    let curve = sweep_curves(&spec, args.k_min, args.k_max).map_err(|e| usage(e.into()))?;
    if let Some(dir) = &args.emit_maps {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(data)?;
        let width = args.k_max.to_string().len();
        for_each_prediction(&spec, args.k_min, args.k_max, |k, map| {
            write_label_map(map, &dir.join(format!("k{k:0width$}.pgm")), LabelFormat::Pgm)
        })
        .map_err(|e| data(e.into()))?;
    }
    let text = render_report(ReportData::Sweep(&curve), args.format.into()).map_err(|e| data(e.into()))?;
    emit(args.out.as_deref(), &text).map_err(data)
}

fn cmd_selfcheck(args: SelfcheckArgs) -> std::result::Result<(), Failure> {
    if args.instances == 0 {
        return Err(usage(anyhow::anyhow!("--instances must be at least 1")));
    }
    if args.max_pixels < 2 {
        return Err(usage(anyhow::anyhow!("--max-pixels must be at least 2")));
    }
    let config = CheckConfig {
        instances: args.instances,
        max_pixels: args.max_pixels,
        seed: args.seed,
        expectation: match args.inject_fault {
            Some(Fault::MMinus2) => selfcheck::faulty_expectation,
            None => expected_sum_squares,
        },
    };
    match selfcheck::run(&config) {
        Ok(summary) => {
            println!(
                "ok: {} instances ({} with negative ARI, {} degenerate), {} exhaustive expectation checks",
                summary.instances, summary.negative_ari, summary.degenerate, summary.exact_expectations
            );
            Ok(())
        }
        Err(violation) => {
            print!("{violation}");
            Err(Failure {
                code: EXIT_PROPERTY,
                error: anyhow::anyhow!("property `{}` failed", violation.property),
            })
        }
    }
}

fn run() -> std::result::Result<(), Failure> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            // --help and --version
            let _ = err.print();
            return Ok(());
        }
        Err(err) => {
            let _ = err.print();
            return Err(Failure {
                code: EXIT_USAGE,
                error: anyhow::anyhow!("invalid arguments"),
            });
        }
    };
    match cli.command {
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Selfcheck(args) => cmd_selfcheck(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
