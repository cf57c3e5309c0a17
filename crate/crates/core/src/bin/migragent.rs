use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use migragent::config::{defaults_help, load_sim_params, load_sweep_spec};
use migragent::io::csv::{read_timeseries_csv, write_long_csv, write_timeseries_csv};
use migragent::io::read_long_csv;
use migragent::io::svg::{render_heatmap_svg, render_lines_svg, HeatmapSpec, LineChart, Series};
use migragent::stats::{fit_all, write_fits_csv, write_fits_text, DataTable, RowGranularity};
use migragent::sweep::{run_replication, run_sweep_with_progress, Condition, ConditionResult};
use migragent::{Error, IntakePolicy, Outcome, Result, SimParams, Substratum, SweepSpec};

#[derive(Parser)]
#[command(
    name = "migragent",
    version,
    about = "Acculturation agent-based model: single runs, parameter sweeps, regressions and plots",
    after_help = defaults_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one replication and write its time series.
    Run(RunArgs),
    /// Run the full factorial sweep; writes aggregate and long-format CSVs.
    Sweep(SweepArgs),
    /// Fit the acculturation regressions from a long-format CSV.
    Stats(StatsArgs),
    /// Render SVG figures from a time-series or aggregate CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct Overrides {
    /// Configuration file (key = value)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed of the run, or master seed of a sweep
    #[arg(long)]
    seed: Option<u64>,
    /// Number of ticks after the baseline
    #[arg(long)]
    ticks: Option<u32>,
    /// literal | calibrated
    #[arg(long)]
    intake_policy: Option<String>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Overrides {
    fn apply(&self, params: &mut SimParams) -> Result<()> {
        if let Some(seed) = self.seed {
            params.seed = seed;
        }
        if let Some(ticks) = self.ticks {
            params.ticks = ticks;
        }
        if let Some(policy) = &self.intake_policy {
            params.intake_policy = policy.parse::<IntakePolicy>()?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Overrides,
    /// Replications per condition
    #[arg(long)]
    reps: Option<usize>,
    /// Maximum concurrent replications
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    /// Long-format CSV written by `sweep`
    #[arg(long, default_value = "out/long.csv")]
    input: PathBuf,
    /// tick | replication | condition
    #[arg(long, default_value = "tick")]
    row_granularity: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[command(subcommand)]
    kind: PlotKind,
}

#[derive(Subcommand)]
enum PlotKind {
    /// Final-tick heatmap of one field over the conservatism levels.
    Heatmap {
        #[arg(long, default_value = "out/aggregate.csv")]
        input: PathBuf,
        /// Observable column, e.g. migrant_mean_conservatism
        #[arg(long)]
        field: String,
        /// Speed level whose conditions are plotted
        #[arg(long)]
        speed: u32,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Outcome fractions of one substratum over time for one condition.
    Lines {
        #[arg(long, default_value = "out/aggregate.csv")]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        condition: usize,
        /// liberal_locals | conservative_locals | liberal_migrants | conservative_migrants
        #[arg(long)]
        substratum: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Every heatmap and line chart the file supports.
    All {
        #[arg(long, default_value = "out/aggregate.csv")]
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(args: RunArgs) -> Result<()> {
    let mut params = match &args.common.config {
        Some(path) => load_sim_params(path)?,
        None => SimParams::default(),
    };
    args.common.apply(&mut params)?;
    params.validate()?;
    let start = Instant::now();
    let stream = run_replication::<f64>(&params, params.seed)?;
    let condition = Condition {
        index: 0,
        conservatism_local: params.conservatism_local,
        conservatism_migrant: params.conservatism_migrant,
        speed_intake: params.speed_intake,
    };
    create_dir(&args.common.out)?;
    let path = args.common.out.join("timeseries.csv");
    write_timeseries_csv(&[ConditionResult::from_stream(condition, &stream)], &path)?;
    eprintln!(
        "{} ticks in {:.2?}; wrote {}",
        params.ticks,
        start.elapsed(),
        path.display()
    );
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut spec = match &args.common.config {
        Some(path) => load_sweep_spec(path)?,
        None => SweepSpec::full_design(),
    };
    args.common.apply(&mut spec.base)?;
    if let Some(reps) = args.reps {
        spec.replications = reps;
    }
    if let Some(p) = args.parallelism {
        spec.parallelism = p;
    }
    create_dir(&args.common.out)?;
    let start = Instant::now();
    let result = run_sweep_with_progress::<f64>(&spec, |done, total| {
        eprintln!("[{:>8.1?}] {done}/{total} replications", start.elapsed());
    })?;
    let aggregate = args.common.out.join("aggregate.csv");
    let long = args.common.out.join("long.csv");
    write_timeseries_csv(&result.conditions, &aggregate)?;
    write_long_csv(&result.long_records, &long)?;
    eprintln!(
        "{} runs in {:.2?}; wrote {} and {}",
        result.total_runs(),
        start.elapsed(),
        aggregate.display(),
        long.display()
    );
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let granularity: RowGranularity = args.row_granularity.parse()?;
    let table = read_long_csv(&args.input)?;
    let fits = fit_all::<f64>(&table, granularity)?;
    create_dir(&args.out)?;
    let csv = args.out.join("regressions.csv");
    let txt = args.out.join("regressions.txt");
    write_fits_csv(&fits, &csv)?;
    write_fits_text(&fits, &txt)?;
    eprintln!(
        "{} models; wrote {} and {}",
        fits.len(),
        csv.display(),
        txt.display()
    );
    Ok(())
}

fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn heatmap_from(table: &DataTable, field: &str, speed: u32) -> Result<HeatmapSpec> {
    let (cond, cl, cm, sp, tick) = (
        table.column("condition")?,
        table.column("conservatism_local")?,
        table.column("conservatism_migrant")?,
        table.column("speed_intake")?,
        table.column("tick")?,
    );
    let value = table.column(field)?;
    let rows: Vec<&Vec<f64>> = table
        .rows()
        .iter()
        .filter(|r| r[sp] == f64::from(speed))
        .collect();
    if rows.is_empty() {
        return Err(Error::Schema(format!(
            "no rows with speed_intake = {speed}"
        )));
    }
    let x_levels = distinct(rows.iter().map(|r| r[cl]));
    let y_levels = distinct(rows.iter().map(|r| r[cm]));
    let mut values = vec![vec![f64::NAN; x_levels.len()]; y_levels.len()];
    let mut last_tick = vec![vec![f64::NEG_INFINITY; x_levels.len()]; y_levels.len()];
    let mut owner = vec![vec![f64::NAN; x_levels.len()]; y_levels.len()];
    for r in rows {
        let xi = x_levels
            .iter()
            .position(|&v| v == r[cl])
            .expect("level present");
        let yi = y_levels
            .iter()
            .position(|&v| v == r[cm])
            .expect("level present");
        if !owner[yi][xi].is_nan() && owner[yi][xi] != r[cond] {
            return Err(Error::Schema(format!(
                "conditions {} and {} share levels ({}, {}) at speed {speed}",
                owner[yi][xi], r[cond], r[cl], r[cm]
            )));
        }
        owner[yi][xi] = r[cond];
        if r[tick] > last_tick[yi][xi] {
            last_tick[yi][xi] = r[tick];
            values[yi][xi] = r[value];
        }
    }
    if values.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::Shape("heatmap grid is not fully populated".into()));
    }
    let bounds = if field.ends_with("mean_conservatism") {
        // frozen outliers can push a population mean past the clamp
        let peak = values.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        if peak > 1.0 {
            eprintln!("note: {field} reaches {peak:.3}; widening the colour scale beyond [-1, 1]");
        }
        let b = (peak * 20.0).ceil() / 20.0;
        (-b, b)
    } else {
        (0.0, 1.0)
    };
    Ok(HeatmapSpec {
        title: format!("{field} at final tick, speed {speed}"),
        x_label: "collective conservatism of locals".into(),
        y_label: "collective conservatism of migrants".into(),
        x_levels,
        y_levels,
        values,
        bounds,
    })
}

fn condition_rows(table: &DataTable, condition: usize) -> Result<Vec<&Vec<f64>>> {
    let cond = table.column("condition")?;
    let tick = table.column("tick")?;
    let mut rows: Vec<&Vec<f64>> = table
        .rows()
        .iter()
        .filter(|r| r[cond] == condition as f64)
        .collect();
    if rows.is_empty() {
        return Err(Error::Schema(format!("no rows for condition {condition}")));
    }
    rows.sort_by(|a, b| a[tick].total_cmp(&b[tick]));
    Ok(rows)
}

fn lines_from(table: &DataTable, condition: usize, sub: Substratum) -> Result<LineChart> {
    let rows = condition_rows(table, condition)?;
    let series = Outcome::ALL
        .iter()
        .map(|o| {
            let col = table.column(&format!("{}_{}", sub.name(), o.name()))?;
            Ok(Series {
                name: o.name().to_string(),
                values: rows.iter().map(|r| r[col]).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LineChart {
        title: format!(
            "{} acculturation, condition {condition}",
            sub.name().replace('_', " ")
        ),
        x_label: "tick".into(),
        y_label: "fraction of substratum".into(),
        y_bounds: (0.0, 1.0),
        series,
    })
}

fn fractions_from(table: &DataTable, condition: usize) -> Result<LineChart> {
    let rows = condition_rows(table, condition)?;
    let mut series = Vec::new();
    for pop in ["local", "migrant"] {
        for kind in ["liberal", "conservative"] {
            let col = table.column(&format!("{pop}_fraction_{kind}"))?;
            series.push(Series {
                name: format!("{kind} {pop}s"),
                values: rows.iter().map(|r| r[col]).collect(),
            });
        }
    }
    Ok(LineChart {
        title: format!("liberal and conservative fractions, condition {condition}"),
        x_label: "tick".into(),
        y_label: "fraction of population".into(),
        y_bounds: (0.0, 1.0),
        series,
    })
}

fn parse_substratum(name: &str) -> Result<Substratum> {
    Substratum::parse(name).ok_or_else(|| Error::Config(format!("unknown substratum `{name}`")))
}

fn plot(args: PlotArgs) -> Result<()> {
    match args.kind {
        PlotKind::Heatmap {
            input,
            field,
            speed,
            out,
        } => {
            let table = read_timeseries_csv(&input)?;
            create_dir(&out)?;
            let path = out.join(format!("heatmap_{field}_speed{speed}.svg"));
            render_heatmap_svg(&heatmap_from(&table, &field, speed)?, &path)?;
            eprintln!("wrote {}", path.display());
        }
        PlotKind::Lines {
            input,
            condition,
            substratum,
            out,
        } => {
            let sub = parse_substratum(&substratum)?;
            let table = read_timeseries_csv(&input)?;
            create_dir(&out)?;
            let path = out.join(format!("lines_{}_condition{condition}.svg", sub.name()));
            render_lines_svg(&lines_from(&table, condition, sub)?, &path)?;
            eprintln!("wrote {}", path.display());
        }
        PlotKind::All { input, out } => {
            let table = read_timeseries_csv(&input)?;
            create_dir(&out)?;
            let sp = table.column("speed_intake")?;
            let speeds = distinct(table.rows().iter().map(|r| r[sp]));
            let mut fields: Vec<String> = vec![
                "local_mean_conservatism".into(),
                "migrant_mean_conservatism".into(),
            ];
            for pop in ["local", "migrant"] {
                for o in Outcome::ALL {
                    fields.push(format!("{pop}_{}", o.name()));
                }
            }
            let mut written = 0;
            for speed in &speeds {
                for field in &fields {
                    let speed = *speed as u32;
                    let path = out.join(format!("heatmap_{field}_speed{speed}.svg"));
                    render_heatmap_svg(&heatmap_from(&table, field, speed)?, &path)?;
                    written += 1;
                }
            }
            let cond = table.column("condition")?;
            for c in distinct(table.rows().iter().map(|r| r[cond])) {
                let c = c as usize;
                render_lines_svg(
                    &fractions_from(&table, c)?,
                    &out.join(format!("fractions_condition{c}.svg")),
                )?;
                written += 1;
                for sub in Substratum::ALL {
                    let path = out.join(format!("lines_{}_condition{c}.svg", sub.name()));
                    render_lines_svg(&lines_from(&table, c, sub)?, &path)?;
                    written += 1;
                }
            }
            eprintln!("wrote {written} figures to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Stats(a) => stats(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
