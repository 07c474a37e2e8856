use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use coplan::bench::bench;
use coplan::config::{BackendKind, PipelineConfig};
use coplan::eval::{evaluate, report_csv};
use coplan::generator::{generate_scenario, mixed_suite, Location, ScenarioProfile, TimeOfDay, Weather};
use coplan::mock::{MockBehavior, MockServer};
use coplan::pipeline::{run_pipeline, RunResult};
use coplan::plot::emit_plot;
use coplan::scenario_file::{list_json, load_scenario, save_scenario};
use coplan::sft_io::{default_template, export_jsonl, scenario_record};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "coplan", version, about = "Hazard-aware trajectory refinement pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenarios into a directory.
    Generate {
        #[arg(long)]
        seed: u64,
        /// `mixed` (every condition combination) or a TOML profile file.
        #[arg(long, default_value = "mixed")]
        profile: String,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the pipeline on a scenario file (or every scenario in a directory).
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        backend: Option<BackendKind>,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run file, or a directory when `--scenario` is one.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a directory of run files into a JSON report (plus CSV).
    Eval {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Export fine-tuning records for every scenario in a directory.
    ExportSft {
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot a run file as PGM.
    Plot {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time repeated pipeline runs on one scenario.
    Bench {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        #[arg(long)]
        backend: Option<BackendKind>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Serve a mock `/plan` endpoint until interrupted.
    MockServe {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long, value_enum, default_value = "zeros")]
        behavior: MockMode,
        /// Delay for `--behavior delay`, milliseconds.
        #[arg(long, default_value_t = 1000)]
        delay_ms: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MockMode {
    Zeros,
    Short,
    Delay,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    location: Location,
    weather: Weather,
    time_of_day: TimeOfDay,
    density: usize,
    #[serde(default = "one")]
    hazard_probability: f64,
}

fn one() -> f64 {
    1.0
}

fn load_config(path: Option<&Path>, backend: Option<BackendKind>, endpoint: Option<String>) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(b) = backend {
        cfg.backend = b;
    }
    if endpoint.is_some() {
        cfg.endpoint = endpoint;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn profiles(seed: u64, profile: &str, count: usize) -> Result<Vec<ScenarioProfile>> {
    if profile == "mixed" {
        return Ok(mixed_suite(seed, count));
    }
    let text = fs::read_to_string(profile).with_context(|| format!("reading profile {profile}"))?;
    let p: ProfileFile = toml::from_str(&text).with_context(|| format!("parsing profile {profile}"))?;
    Ok((0..count as u64)
        .map(|i| ScenarioProfile {
            location: p.location,
            weather: p.weather,
            time_of_day: p.time_of_day,
            density: p.density,
            seed: seed + i,
            hazard_probability: p.hazard_probability,
        })
        .collect())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Generate {
            seed,
            profile,
            count,
            out,
        } => {
            fs::create_dir_all(&out)?;
            for p in profiles(seed, &profile, count)? {
                let s = generate_scenario(&p)?;
                save_scenario(&out.join(format!("{}.json", s.id)), &s)?;
            }
            println!("wrote {count} scenario(s) to {}", out.display());
        }
        Command::Run {
            scenario,
            backend,
            endpoint,
            config,
            out,
        } => {
            let cfg = load_config(config.as_deref(), backend, endpoint)?;
            let planner = cfg.backend_config().build()?;
            let files = if scenario.is_dir() {
                fs::create_dir_all(&out)?;
                list_json(&scenario)?
            } else {
                vec![scenario.clone()]
            };
            for f in &files {
                let s = load_scenario(f)?;
                let r = run_pipeline(&s, planner.as_ref(), &cfg);
                for e in &r.errors {
                    log::warn!("{}: {} stage: {}", r.scenario_id, e.stage, e.message);
                }
                let dest = if scenario.is_dir() {
                    out.join(f.file_name().expect("listed files have names"))
                } else {
                    out.clone()
                };
                write_json(&dest, &r)?;
            }
            println!("ran {} scenario(s) with the {} backend", files.len(), planner.name());
        }
        Command::Eval { runs, report } => {
            let mut results = Vec::new();
            for f in list_json(&runs)? {
                let text = fs::read_to_string(&f)?;
                let r: RunResult = serde_json::from_str(&text).with_context(|| format!("parsing {}", f.display()))?;
                results.push(r);
            }
            let rep = evaluate(&results)?;
            write_json(&report, &rep)?;
            let csv = report.with_extension("csv");
            fs::write(&csv, report_csv(&rep))?;
            let o = &rep.overall;
            println!(
                "{} runs ({} skipped): collision rate {:.3} vs baseline {:.3}, CRR {}, VPQ {:.3}, mIOU {:.3}",
                o.runs,
                rep.skipped,
                o.collision_rate,
                o.baseline_collision_rate,
                o.crr.map_or_else(|| "n/a".to_string(), |c| format!("{c:.3}")),
                o.vpq,
                o.miou
            );
        }
        Command::ExportSft { scenarios, config, out } => {
            let cfg = load_config(config.as_deref(), None, None)?;
            let mut records = Vec::new();
            for f in list_json(&scenarios)? {
                let s = load_scenario(&f)?;
                match scenario_record(&s, &cfg, default_template()) {
                    Ok(r) => records.push(r.record),
                    Err(e) => log::warn!("{}: skipped: {e}", f.display()),
                }
            }
            let n = export_jsonl(&records, &out)?;
            println!("wrote {n} record(s) to {}", out.display());
        }
        Command::Plot { run, out } => {
            let text = fs::read_to_string(&run)?;
            let r: RunResult = serde_json::from_str(&text)?;
            emit_plot(&r, &out)?;
        }
        Command::Bench {
            scenario,
            reps,
            backend,
            config,
        } => {
            if reps == 0 {
                bail!("--reps must be positive");
            }
            let cfg = load_config(config.as_deref(), backend, None)?;
            let planner = cfg.backend_config().build()?;
            let s = load_scenario(&scenario)?;
            let rep = bench(&s, planner.as_ref(), &cfg, reps)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
        }
        Command::MockServe {
            addr,
            behavior,
            delay_ms,
        } => {
            let behavior = match behavior {
                MockMode::Zeros => MockBehavior::Zeros,
                MockMode::Short => MockBehavior::Short,
                MockMode::Delay => MockBehavior::Delay(Duration::from_millis(delay_ms)),
            };
            let server = MockServer::bind(&addr, behavior)?;
            println!("serving {}/plan", server.url());
            server.join();
        }
    }
    Ok(())
}
