//! Command-line front end.
//!
//! ```text
//! ksnut [--threads N] run <config|preset> [--out DIR] [--csv] [--mode M]
//! ksnut validate <config|preset>
//! ksnut ablate <config|preset> [--out DIR]
//! ksnut sweep <config|preset> --schedule SPEC [--schedule SPEC ...] [--mode M ...]
//! ksnut presets
//! ```
//!
//! A schedule SPEC is a comma-separated list of segments, each `DT@END`
//! (step until an absolute end time) or `DTxCOUNT`. `DT` takes a unit suffix
//! `ms`, `us` or `ns` (default ms) and `END` takes `s`, `ms` or `us` (default
//! s): `15@1.8,5@5.94,45@6.48`, `5x900`, `91ns@13.65us`.
//!
//! Exit status: 0 on success, 1 for invalid input (including unstable
//! schedules), 2 when a run blows up.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::scenario::config::SegmentConfig;
use crate::scenario::presets::{change_steps, preset_with, PresetOptions, PRESET_NAMES};
use crate::scenario::{
    load_scenario, resolve_schedule, run_scenario, summary_table, write_outputs, Companion, RunRole,
    Scenario,
};
use crate::solver::{CorrectionMode, Segment, StepSchedule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;

pub const PRECISION_VAR: &str = "KSNUT_PRECISION";

#[derive(Debug, Parser)]
#[command(name = "ksnut", version, about = "k-space acoustic solver with non-uniform time steps")]
struct Cli {
    /// Cap on worker threads for concurrent runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Target {
    /// Scenario file or preset name.
    target: String,
    /// Alternative phantom step set.
    #[arg(long)]
    caption_steps: bool,
    /// Time of the step change as a fraction of the run (step-change presets).
    #[arg(long)]
    change_fraction: Option<f64>,
}

#[derive(Debug, clap::Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write CSV exports of pressure and error fields.
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write snapshots plus an error summary.
    Run {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: OutputArgs,
        /// Override the correction mode of the main run.
        #[arg(long)]
        mode: Option<CorrectionMode>,
    },
    /// Check a scenario without running it.
    Validate {
        #[command(flatten)]
        target: Target,
    },
    /// Run every correction mode on the same schedule.
    Ablate {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the cartesian product of schedules and modes.
    Sweep {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long = "schedule", required = true)]
        schedules: Vec<String>,
        #[arg(long = "mode")]
        modes: Vec<CorrectionMode>,
    },
    /// List the built-in presets.
    Presets,
}

/// Parses and runs the command line; returns the process exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    if let Ok(p) = std::env::var(PRECISION_VAR) {
        if p != "f64" {
            eprintln!("error: {PRECISION_VAR}={p} is not supported (only f64)");
            return EXIT_INVALID;
        }
    }
    let result = match cli.threads {
        Some(0) => Err(Error::InvalidParameter("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Error::InvalidParameter(e.to_string())),
        },
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_instability() {
        EXIT_UNSTABLE
    } else {
        EXIT_INVALID
    }
}

fn load_target(t: &Target) -> Result<Scenario> {
    let path = Path::new(&t.target);
    if path.is_file() {
        return load_scenario(path);
    }
    if PRESET_NAMES.contains(&t.target.as_str()) {
        let mut opts = PresetOptions {
            caption_steps: t.caption_steps,
            ..PresetOptions::default()
        };
        if let Some(f) = t.change_fraction {
            opts.change_fraction = f;
        }
        return preset_with(&t.target, &opts);
    }
    if path.extension().is_some() || t.target.contains(['/', '\\']) {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{}: no such file", path.display()),
        )));
    }
    Err(Error::UnknownPreset(t.target.clone()))
}

fn out_dir(sc: &Scenario, out: &OutputArgs, suffix: &str) -> PathBuf {
    out.out.clone().or_else(|| sc.output_dir.clone()).unwrap_or_else(|| {
        let name = if sc.name.is_empty() { "scenario" } else { &sc.name };
        PathBuf::from("out").join(format!("{name}{suffix}"))
    })
}

fn execute(sc: &Scenario, out: &OutputArgs, suffix: &str) -> Result<()> {
    let result = run_scenario(sc)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if result.rows.is_empty() {
        println!("no reference available; runs completed without an error summary");
    } else {
        print!("{}", summary_table(&result.rows));
    }
    let dir = out_dir(sc, out, suffix);
    let written = write_outputs(sc, &result, &dir, out.csv || sc.csv)?;
    println!("wrote {} files to {}", written.len(), dir.display());
    Ok(())
}

fn describe(sc: &Scenario) -> String {
    let segs = |s: &StepSchedule| {
        s.segments()
            .iter()
            .map(|g| format!("{} s x {}", g.dt, g.count))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut out = format!(
        "{}: {}D grid {:?}, c_ref {} m/s, mode {}, {} steps to {} s [{}]\n",
        sc.name,
        sc.grid.dims(),
        sc.grid.shape(),
        sc.medium.c_ref,
        sc.mode,
        sc.schedule.total_steps(),
        sc.schedule.total_time(),
        segs(&sc.schedule)
    );
    for c in &sc.companions {
        out.push_str(&format!(
            "  {} ({}, {}): {} steps [{}]\n",
            c.label,
            c.role.name(),
            c.mode,
            c.schedule.total_steps(),
            segs(&c.schedule)
        ));
    }
    out.push_str(&format!("  snapshots at {:?} s\n", sc.snapshot_times));
    out
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Validate { target } => {
            let sc = load_target(&target)?;
            print!("{}", describe(&sc));
            println!("ok");
            Ok(())
        }
        Command::Run { target, output, mode } => {
            let mut sc = load_target(&target)?;
            if let Some(m) = mode {
                sc.mode = m;
            }
            execute(&sc, &output, "")
        }
        Command::Ablate { target, output } => {
            let sc = ablation_scenario(&load_target(&target)?)?;
            print!("{}", describe(&sc));
            execute(&sc, &output, "-ablate")
        }
        Command::Sweep {
            target,
            output,
            schedules,
            modes,
        } => {
            let sc = sweep_scenario(&load_target(&target)?, &schedules, &modes)?;
            print!("{}", describe(&sc));
            execute(&sc, &output, "-sweep")
        }
    }
}

/// `dt` up to a third of the run, then `3 dt`; used when ablating a scenario
/// whose schedule never changes step.
pub fn step_change_variant(schedule: &StepSchedule) -> Result<StepSchedule> {
    let segs = schedule.segments();
    if segs.len() != 1 || segs[0].count < 6 {
        return Err(Error::InvalidParameter(
            "step-change variant needs a uniform schedule of at least 6 steps".into(),
        ));
    }
    let Segment { dt, count } = segs[0];
    let n1 = change_steps(count, 1.0 / 3.0)?;
    StepSchedule::new(vec![
        Segment { dt, count: n1 },
        Segment {
            dt: 3.0 * dt,
            count: (count - n1) / 3,
        },
    ])
}

fn keep_reachable(sc: &mut Scenario, schedules: &[StepSchedule]) {
    sc.snapshot_times.retain(|&t| {
        let ok = schedules.iter().all(|s| s.level_of(t).is_ok());
        if !ok {
            log::info!("dropping snapshot time {t} s: not on every schedule");
        }
        ok
    });
}

fn all_schedules(sc: &Scenario, extra: &[StepSchedule]) -> Vec<StepSchedule> {
    let mut all = vec![sc.schedule.clone()];
    all.extend(sc.companions.iter().map(|c| c.schedule.clone()));
    all.extend(extra.iter().cloned());
    all
}

/// The scenario with every correction mode run side by side. Comparison
/// companions are dropped; a reference companion is kept.
pub fn ablation_scenario(base: &Scenario) -> Result<Scenario> {
    let mut sc = base.clone();
    if sc.schedule.transition_times().is_empty() {
        sc.schedule = step_change_variant(&sc.schedule)?;
        log::info!("no step change in the schedule; ablating the dt -> 3 dt variant");
    }
    sc.companions.retain(|c| c.role == RunRole::Reference);
    sc.mode = CorrectionMode::Full;
    let all = all_schedules(&sc, &[]);
    keep_reachable(&mut sc, &all);
    for mode in CorrectionMode::ALL.iter().copied().filter(|m| *m != CorrectionMode::Full) {
        sc.add_companion(Companion {
            label: mode.name().to_string(),
            role: RunRole::Comparison,
            schedule: sc.schedule.clone(),
            mode,
        })?;
    }
    Ok(sc)
}

/// The base scenario plus one comparison companion per schedule and mode.
pub fn sweep_scenario(base: &Scenario, specs: &[String], modes: &[CorrectionMode]) -> Result<Scenario> {
    let modes = if modes.is_empty() { &[CorrectionMode::Full][..] } else { modes };
    let mut sc = base.clone();
    sc.companions.retain(|c| c.role == RunRole::Reference);
    let mut schedules = Vec::new();
    for (n, spec) in specs.iter().enumerate() {
        let segs = parse_schedule_spec(spec)?;
        let (s, _) = resolve_schedule(&segs, &format!("--schedule[{n}]"))?;
        schedules.push(s);
    }
    let all = all_schedules(&sc, &schedules);
    keep_reachable(&mut sc, &all);
    for (n, s) in schedules.iter().enumerate() {
        for &mode in modes {
            sc.add_companion(Companion {
                label: format!("s{n}-{}", mode.name()),
                role: RunRole::Comparison,
                schedule: s.clone(),
                mode,
            })?;
        }
    }
    Ok(sc)
}

/// Parses a `--schedule` argument into segment configs.
pub fn parse_schedule_spec(spec: &str) -> Result<Vec<SegmentConfig>> {
    let bad = |m: String| Error::schema("--schedule", m);
    let num = |s: &str, what: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("cannot read {what} `{s}` in `{spec}`")))
    };
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|seg| {
            let (dt_part, rest, until) = if let Some((a, b)) = seg.split_once('@') {
                (a, b, true)
            } else if let Some((a, b)) = seg.split_once('x') {
                (a, b, false)
            } else {
                return Err(bad(format!("segment `{seg}` is neither DT@END nor DTxCOUNT")));
            };
            let dt_part = dt_part.trim();
            let mut cfg = SegmentConfig::default();
            if let Some(v) = dt_part.strip_suffix("ns") {
                cfg.dt_ns = Some(num(v, "step")?);
            } else if let Some(v) = dt_part.strip_suffix("us") {
                cfg.dt_us = Some(num(v, "step")?);
            } else {
                cfg.dt_ms = Some(num(dt_part.strip_suffix("ms").unwrap_or(dt_part), "step")?);
            }
            if until {
                let rest = rest.trim();
                if let Some(v) = rest.strip_suffix("us") {
                    cfg.until_us = Some(num(v, "end time")?);
                } else if let Some(v) = rest.strip_suffix("ms") {
                    cfg.until_us = Some(num(v, "end time")? * 1e3);
                } else {
                    cfg.until_s = Some(num(rest.strip_suffix('s').unwrap_or(rest), "end time")?);
                }
            } else {
                let c: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| bad(format!("cannot read count `{rest}` in `{spec}`")))?;
                cfg.count = Some(c);
            }
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(bad("empty schedule".into()))
            } else {
                Ok(v)
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_specs() {
        let s = parse_schedule_spec("15@1.8,5@5.94,45@6.48").unwrap();
        let (sched, _) = resolve_schedule(&s, "x").unwrap();
        let counts: Vec<usize> = sched.segments().iter().map(|g| g.count).collect();
        assert_eq!(counts, vec![120, 828, 12]);
        let s = parse_schedule_spec("5x900").unwrap();
        assert_eq!(s, vec![SegmentConfig::ms_count(5.0, 900)]);
        let s = parse_schedule_spec("91ns@13.65us, 13.65ns@68.25us").unwrap();
        assert_eq!(s[0], SegmentConfig::ns_until_us(91.0, 13.65));
        assert!(parse_schedule_spec("5").is_err());
        assert!(parse_schedule_spec("fivex3").is_err());
        assert!(parse_schedule_spec("").is_err());
    }

    #[test]
    fn variant_keeps_end_time() {
        let s = StepSchedule::uniform(0.005, 900).unwrap();
        let v = step_change_variant(&s).unwrap();
        assert_eq!(v.total_steps(), 500);
        assert!((v.total_time() - 4.5).abs() < 1e-12);
        assert!(step_change_variant(&v).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_cli(["ksnut", "presets"]), EXIT_OK);
        assert_eq!(run_cli(["ksnut", "validate", "no-such-preset"]), EXIT_INVALID);
        assert_eq!(run_cli(["ksnut", "validate", "hom1d"]), EXIT_OK);
        assert_eq!(run_cli(["ksnut", "frobnicate"]), EXIT_INVALID);
        assert_eq!(exit_code(&Error::NonFinite { step: 3, time: 0.1 }), EXIT_UNSTABLE);
    }
}
