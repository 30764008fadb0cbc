//! The `aacg` command-line front end.
//!
//! Exit codes: 0 success, 1 gait failure, 2 configuration error.

pub mod config;
pub mod svg;
pub mod table;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use aacg_core::format::sig17;
use aacg_core::metrics::mcot;
use aacg_core::sweep::{solve_cell, CANNED_GUESSES};
use aacg_core::simulator::TRACE_CSV_HEADER;
use aacg_core::{baseline_frontier, run_sweep, CellStatus, LiftoffPoint, StrideResult, Walker};
use clap::{Arg, ArgAction, ArgMatches, Command};

use config::{ConfigError, RunConfig, ENV_PREFIX, KEYS, SWITCHES};
use svg::{Heatmap, Scale, Series};
use table::ResultRow;

pub const EXIT_OK: i32 = 0;
pub const EXIT_GAIT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Gait(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Gait(_) => EXIT_GAIT,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => e.fmt(f),
            CliError::Gait(m) => f.write_str(m),
        }
    }
}

pub fn env_var(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase())
}

fn key_args() -> Vec<Arg> {
    KEYS.iter()
        .map(|&k| {
            let mut a = Arg::new(k)
                .long(k)
                .value_name("VALUE")
                .env(env_var(k))
                .action(ArgAction::Set)
                .help_heading("Configuration overrides");
            if k.contains('_') {
                a = a.alias(k.replace('_', "-"));
            }
            if SWITCHES.contains(&k) {
                a = a.num_args(0..=1).default_missing_value("true");
            } else {
                a = a.allow_negative_numbers(true);
            }
            a
        })
        .collect()
}

pub fn command() -> Command {
    let config = Arg::new("config")
        .long("config")
        .value_name("PATH")
        .env(env_var("config"))
        .help("TOML configuration file");
    let sub = |name: &'static str, about: &'static str| {
        Command::new(name).about(about).arg(config.clone()).args(key_args())
    };
    Command::new("aacg")
        .about("Compass walker with a triggered ankle spring: simulation, gait sweeps and basins")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(sub("simulate", "Simulate strides and write per-stride traces"))
        .subcommand(sub("sweep", "Fixed points over the (r0, theta_trig, k) grid into results.csv"))
        .subcommand(sub("boa", "Grid sweep with basin extents into boa.csv"))
        .subcommand(sub("baseline", "Impulsive-pushoff walker frontier into baseline.csv"))
}

fn load_config(m: &ArgMatches) -> Result<RunConfig, ConfigError> {
    let file = match m.get_one::<String>("config") {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| ConfigError::general(format!("cannot read `{p}`: {e}")))?),
        None => None,
    };
    let overrides: Vec<(String, String)> = KEYS
        .iter()
        .filter_map(|&k| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect();
    config::load(file.as_deref(), &overrides)
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let result = load_config(sub).map_err(CliError::from).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| ConfigError::key("jobs", e.to_string()))?;
        pool.install(|| match name {
            "simulate" => cmd_simulate(&cfg),
            "sweep" => cmd_sweep(&cfg, false),
            "boa" => cmd_sweep(&cfg, true),
            "baseline" => cmd_baseline(&cfg),
            _ => unreachable!("unknown subcommand"),
        })
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("aacg {name}: {e}");
            e.exit_code()
        }
    }
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.out)
        .map_err(|e| ConfigError::key("out", format!("cannot create `{}`: {e}", cfg.out.display())))?;
    Ok(&cfg.out)
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(&path, bytes).map_err(|e| ConfigError::key("out", format!("cannot write `{}`: {e}", path.display())).into())
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let integrator = aacg_core::IntegratorConfig {
        record_samples: true,
        ..cfg.integrator()
    };
    let walker = Walker::new(cfg.model(), integrator);
    let mut q = cfg.start_point();
    if cfg.from_fixed_point {
        let search = Walker::new(cfg.model(), cfg.integrator());
        let seeds: Vec<LiftoffPoint> = std::iter::once(q)
            .chain(CANNED_GUESSES.iter().map(|g| LiftoffPoint::from_array(*g)))
            .collect();
        let fp = solve_cell(&search, &seeds, &[1])
            .ok_or_else(|| CliError::Gait("no period-1 fixed point found from the start point".into()))?;
        q = fp.q_star;
    }
    let dir = out_dir(cfg)?;
    let mut steps = Vec::new();
    let mut duration = 0.0;
    for i in 0..cfg.strides {
        match walker.step(&q) {
            StrideResult::Completed { next, trace } => {
                let mut buf = Vec::new();
                let _ = writeln!(buf, "{TRACE_CSV_HEADER}");
                trace
                    .write_csv_rows(&mut buf, &walker.params, duration)
                    .expect("writing to memory");
                write_file(dir.join(format!("trace_{i:04}.csv")), &buf)?;
                steps.push(trace.step_length);
                duration += trace.duration;
                q = next;
            }
            other => {
                println!("outcome=failed strides={i} reason=\"{}\"", other.describe());
                return Err(CliError::Gait(format!("stride {i} {}", other.describe())));
            }
        }
    }
    let dist: f64 = steps.iter().sum();
    println!(
        "outcome=completed strides={} speed={} mcot={} q_dthetas={} q_thetan={} q_dthetan={}",
        steps.len(),
        sig17(dist / duration),
        sig17(mcot(&walker.params, &steps)),
        sig17(q.stance_rate),
        sig17(q.swing_angle),
        sig17(q.swing_rate)
    );
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, boa: bool) -> Result<(), CliError> {
    let mut spec = cfg.sweep_spec();
    spec.boa_enabled |= boa;
    let cells = run_sweep(&spec).map_err(|e| ConfigError::general(e.to_string()))?;
    let dir = out_dir(cfg)?;
    let mut buf = Vec::new();
    table::write_results(&mut buf, &cells).expect("writing to memory");
    let name = if boa { "boa.csv" } else { "results.csv" };
    write_file(dir.join(name), &buf)?;
    let stable = cells.iter().filter(|c| c.status() == CellStatus::Stable).count();
    let unstable = cells.iter().filter(|c| c.status() == CellStatus::Unstable).count();
    eprintln!("{} cells: {stable} stable, {unstable} unstable, {} without a gait", cells.len(), cells.len() - stable - unstable);
    if cfg.svg {
        let rows = table::read_results(std::str::from_utf8(&buf).expect("ascii")).expect("own output parses");
        for (file, text) in sweep_figures(cfg, &rows, spec.boa_enabled) {
            write_file(dir.join(file), text.as_bytes())?;
        }
    }
    Ok(())
}

const PERIODS: [(&str, &str); 4] = [("period 1", "#3b528b"), ("period 2", "#21918c"), ("period 4", "#5ec962"), ("period 8", "#fde725")];
const REGIONS: [(&str, &str); 3] = [("R1", "#440154"), ("R2", "#21918c"), ("R3", "#fde725")];
const SERIES_COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

fn stable_value(f: impl Fn(&ResultRow) -> Option<f64>) -> impl Fn(&ResultRow) -> Option<f64> {
    move |r| if r.stable() { f(r) } else { None }
}

fn k_label(k: f64) -> String {
    format!("{k}")
}

/// Heatmaps per stiffness plus the speed/mCoT scatter of all stable cells.
pub fn sweep_figures(cfg: &RunConfig, rows: &[ResultRow], boa: bool) -> Vec<(String, String)> {
    let mut ks: Vec<f64> = rows.iter().map(|r| r.k).collect();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    let period = stable_value(|r| r.period.and_then(|p| [1, 2, 4, 8].iter().position(|&x| x == p)).map(|i| i as f64));
    let region = stable_value(|r| r.region.as_deref().and_then(|g| ["R1", "R2", "R3"].iter().position(|&x| x == g)).map(|i| i as f64));
    let speed = stable_value(|r| r.speed);
    let cot = stable_value(|r| r.mcot);
    let boa_vals: Vec<Box<dyn Fn(&ResultRow) -> Option<f64>>> =
        (0..3).map(|i| Box::new(stable_value(move |r: &ResultRow| r.boa.map(|b| b[i]))) as Box<_>).collect();
    let mut out = Vec::new();
    for &k in &ks {
        let sub: Vec<ResultRow> = rows.iter().filter(|r| r.k == k).cloned().collect();
        let kl = k_label(k);
        let mut maps: Vec<(String, Heatmap)> = vec![
            (
                format!("period_k{kl}.svg"),
                Heatmap { title: format!("Gait period, k = {kl} N/m"), scale: Scale::Categorical(&PERIODS), value: &period },
            ),
            (
                format!("region_k{kl}.svg"),
                Heatmap { title: format!("Pushoff region, k = {kl} N/m"), scale: Scale::Categorical(&REGIONS), value: &region },
            ),
            (
                format!("speed_k{kl}.svg"),
                Heatmap {
                    title: format!("Speed, k = {kl} N/m"),
                    scale: Scale::Continuous { min: cfg.svg_speed_min, max: cfg.svg_speed_max, label: "m/s" },
                    value: &speed,
                },
            ),
            (
                format!("mcot_k{kl}.svg"),
                Heatmap {
                    title: format!("Mechanical cost of transport, k = {kl} N/m"),
                    scale: Scale::Continuous { min: cfg.svg_mcot_min, max: cfg.svg_mcot_max, label: "mCoT" },
                    value: &cot,
                },
            ),
        ];
        if boa {
            for (i, name) in ["dthetas", "thetan", "dthetan"].iter().enumerate() {
                maps.push((
                    format!("boa_{name}_k{kl}.svg"),
                    Heatmap {
                        title: format!("Normalized basin extent, {name}, k = {kl} N/m"),
                        scale: Scale::Continuous { min: 0.0, max: cfg.svg_boa_max, label: "extent" },
                        value: boa_vals[i].as_ref(),
                    },
                ));
            }
        }
        out.extend(maps.into_iter().map(|(f, m)| (f, svg::heatmap(&sub, &m))));
    }
    let series: Vec<Series> = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| Series {
            name: format!("k = {} N/m", k_label(k)),
            colour: SERIES_COLOURS[i % SERIES_COLOURS.len()],
            points: rows.iter().filter(|r| r.k == k && r.stable()).filter_map(|r| Some((r.speed?, r.mcot?))).collect(),
            line: false,
        })
        .collect();
    out.push(("speed_mcot.svg".into(), scatter(cfg, "Stable gaits", &series)));
    out
}

fn scatter(cfg: &RunConfig, title: &str, series: &[Series]) -> String {
    svg::scatter(title, (cfg.svg_speed_min, cfg.svg_speed_max), (cfg.svg_mcot_min, cfg.svg_mcot_max), series)
}

pub fn cmd_baseline(cfg: &RunConfig) -> Result<(), CliError> {
    let overlay = if cfg.overlay_results.is_empty() {
        None
    } else {
        let text = fs::read_to_string(&cfg.overlay_results)
            .map_err(|e| ConfigError::key("overlay_results", format!("cannot read `{}`: {e}", cfg.overlay_results)))?;
        Some(table::read_results(&text).map_err(|e| ConfigError::key("overlay_results", e.to_string()))?)
    };
    let points = baseline_frontier(&cfg.impulses(), &cfg.model(), &cfg.integrator())
        .map_err(|e| ConfigError::general(e.to_string()))?;
    let dir = out_dir(cfg)?;
    let mut buf = Vec::new();
    table::write_baseline(&mut buf, &points).expect("writing to memory");
    write_file(dir.join("baseline.csv"), &buf)?;
    eprintln!("{} of {} impulses have a stable gait", points.len(), cfg.impulses().len());
    if cfg.svg {
        let mut series = vec![Series {
            name: "impulsive pushoff".into(),
            colour: "#000000",
            points: points.iter().map(|p| (p.speed, p.mcot)).collect(),
            line: true,
        }];
        if let Some(rows) = &overlay {
            let mut ks: Vec<f64> = rows.iter().map(|r| r.k).collect();
            ks.sort_by(f64::total_cmp);
            ks.dedup();
            for (i, &k) in ks.iter().enumerate() {
                series.push(Series {
                    name: format!("spring, k = {} N/m", k_label(k)),
                    colour: SERIES_COLOURS[i % SERIES_COLOURS.len()],
                    points: rows.iter().filter(|r| r.k == k && r.stable()).filter_map(|r| Some((r.speed?, r.mcot?))).collect(),
                    line: false,
                });
            }
        }
        write_file(dir.join("baseline.svg"), scatter(cfg, "Speed against cost of transport", &series).as_bytes())?;
    }
    Ok(())
}
