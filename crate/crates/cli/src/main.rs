use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use strassen::mc;
use strassen::scenario::{run_scenario, ScenarioConfig, ScenarioRun, CATALOG};
use strassen::suite::{run_criterion, Budget, CriterionReport, CRITERIA};

const PASS: u8 = 0;
const VERDICT_FAIL: u8 = 1;
const CONFIG_FAIL: u8 = 2;

#[derive(Parser)]
#[command(name = "strassen", version, about = "Scenario runner and verification suite for Strassen-type limit laws")]
struct Cli {
    /// Evaluate replicas on one thread; results are identical to parallel runs.
    #[arg(long, global = true)]
    serial: bool,
    /// Worker threads for replica evaluation.
    #[arg(long, global = true, env = "STRASSEN_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a JSON config (or from a previous run's manifest).
    Run {
        #[arg(required_unless_present = "manifest")]
        config: Option<PathBuf>,
        /// Re-run the config embedded in a manifest.json.
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the scenario catalogue.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Run the acceptance criteria and print a pass/fail table.
    Verify {
        #[arg(long, default_value = "quick")]
        suite: Budget,
        /// Comma-separated criterion ids; all when omitted.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the reports as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct VerdictSummary {
    pass: bool,
    passed: usize,
    failed: usize,
}

/// Enough to reproduce a run bit-for-bit: the config itself, its hash, the
/// seed and the library versions.
#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    config_sha256: String,
    master_seed: u64,
    config: ScenarioConfig,
    versions: BTreeMap<String, String>,
    wall_clock_seconds: f64,
    verdicts: VerdictSummary,
    files: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        // Read once when the pool is first built.
        std::env::set_var(mc::WORKERS_ENV, n.max(1).to_string());
    }
    mc::set_serial(cli.serial);
    let code = match cli.command {
        Command::List { json } => list(json),
        Command::Run { config, manifest, out } => run(config.as_deref(), manifest.as_deref(), out.as_deref()),
        Command::Verify { suite, criteria, seed, json } => verify(suite, &criteria, seed, json.as_deref()),
    };
    ExitCode::from(code)
}

fn list(json: bool) -> u8 {
    if json {
        println!("{}", serde_json::to_string_pretty(&CATALOG[..]).expect("catalogue serializes"));
        return PASS;
    }
    for e in &CATALOG {
        println!("{:<22} {:<10} {}", e.id, e.module, e.anchor);
    }
    PASS
}

/// Deserialize with the offending field path in the error message.
fn parse_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        format!("{what} error at `{path}`: {}", e.into_inner())
    })
}

fn config_hash(cfg: &ScenarioConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn load(config: Option<&Path>, manifest: Option<&Path>) -> Result<ScenarioConfig, String> {
    let path = config.or(manifest).expect("clap requires one of them");
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if config.is_some() {
        return parse_json("config", &text);
    }
    let m: RunManifest = parse_json("manifest", &text)?;
    let hash = config_hash(&m.config);
    if hash != m.config_sha256 {
        return Err(format!("manifest config hash {hash} does not match recorded {}", m.config_sha256));
    }
    Ok(m.config)
}

fn run(config: Option<&Path>, manifest: Option<&Path>, out: Option<&Path>) -> u8 {
    let cfg = match load(config, manifest) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{msg}");
            return CONFIG_FAIL;
        }
    };
    let start = Instant::now();
    let result = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => {
            let module = cfg.scenario.entry().module;
            eprintln!("{} error in {module} (scenario {}): {e}", e.kind(), cfg.scenario);
            return CONFIG_FAIL;
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    match write_outputs(&dir, &cfg, &result, seconds) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("io error writing {}: {e}", dir.display());
            return CONFIG_FAIL;
        }
    }
    for v in &result.report.verdicts {
        println!("{:<4} {:<60} {:>14.6e}  {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.value, v.threshold);
    }
    let pass = result.report.pass();
    println!("{}: {} (outputs in {})", cfg.scenario, if pass { "pass" } else { "fail" }, dir.display());
    if pass {
        PASS
    } else {
        VERDICT_FAIL
    }
}

fn write_outputs(dir: &Path, cfg: &ScenarioConfig, run: &ScenarioRun, seconds: f64) -> strassen::Result<()> {
    fs::create_dir_all(dir)?;
    let mut files = vec!["report.json".to_string(), "verdicts.csv".to_string()];
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&run.report)? + "\n")?;
    run.report.write_verdicts_csv(fs::File::create(dir.join("verdicts.csv"))?)?;
    for t in &run.traces {
        let name = format!("{}.csv", t.name);
        t.write_csv(fs::File::create(dir.join(&name))?)?;
        files.push(name);
    }
    let passed = run.report.verdicts.iter().filter(|v| v.pass).count();
    let versions = ["cm_space", "gaussian_sim", "operators", "chaos", "limit_set", "spde_kpz"]
        .iter()
        .map(|m| (m.to_string(), strassen::VERSION.to_string()))
        .chain([("cli".to_string(), env!("CARGO_PKG_VERSION").to_string())])
        .collect();
    let manifest = RunManifest {
        config_sha256: config_hash(cfg),
        master_seed: cfg.seed,
        config: cfg.clone(),
        versions,
        wall_clock_seconds: seconds,
        verdicts: VerdictSummary { pass: run.report.pass(), passed, failed: run.report.verdicts.len() - passed },
        files,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn verify(budget: Budget, criteria: &[u32], seed: u64, json: Option<&Path>) -> u8 {
    let ids: Vec<u32> = if criteria.is_empty() { CRITERIA.iter().map(|(i, _)| *i).collect() } else { criteria.to_vec() };
    let mut reports: Vec<CriterionReport> = Vec::new();
    for id in ids {
        match run_criterion(id, budget, seed) {
            Ok(r) => {
                println!("{}", r.line());
                reports.push(r);
            }
            Err(e) => {
                eprintln!("{e}");
                return CONFIG_FAIL;
            }
        }
    }
    let passed = reports.iter().filter(|r| r.pass()).count();
    println!("verify --suite {budget}: {passed}/{} criteria pass", reports.len());
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&reports).expect("reports serialize");
        if let Err(e) = fs::write(path, text + "\n") {
            eprintln!("io error writing {}: {e}", path.display());
            return CONFIG_FAIL;
        }
    }
    if reports.iter().any(|r| r.error.is_some()) {
        CONFIG_FAIL
    } else if passed < reports.len() {
        VERDICT_FAIL
    } else {
        PASS
    }
}
