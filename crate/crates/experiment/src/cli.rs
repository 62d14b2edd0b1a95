//! Command-line front end. Exit codes: 0 success, 1 a check or run failed,
//! 2 bad configuration or input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use mosp::netalloc::{gen_case, gen_network, read_scenario, slater_margin, write_network, write_scenario, CaseTag};

use crate::config::{load_with_overrides, CaseSpec, ConfigError, ExperimentConfig};
use crate::output::emit_csv;
use crate::run::{render_summary, results_path, run_experiment, summary_path};
use crate::sweep::horizon_sweep;
use crate::validate::{validate_suite, Fault, ValidationOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mosp", about = "Online allocation experiments with long-term constraints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every algorithm on every seed and write results.csv and summary.txt.
    Run(ConfigFlags),
    /// Regret and fit at several horizons.
    Sweep {
        #[command(flatten)]
        config: ConfigFlags,
        /// Comma-separated increasing horizons.
        #[arg(long, default_value = "250,500,1000")]
        horizons: String,
    },
    /// Run the invariant and oracle checks.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long = "inject-fault", value_name = "FAULT")]
        inject_fault: Option<String>,
    },
    /// Write a generated scenario (and optionally its network) to files.
    ExportScenario {
        #[command(flatten)]
        config: ConfigFlags,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        network: Option<PathBuf>,
    },
    /// Check a scenario file and report its shape and Slater margin.
    ImportScenario {
        path: PathBuf,
        /// Seed of the generated network the margin is measured against.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Flags named after the config keys; each one overrides the file.
#[derive(Debug, Args, Default)]
pub struct ConfigFlags {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "J")]
    pub j: Option<String>,
    #[arg(long = "K")]
    pub k: Option<String>,
    #[arg(long = "T")]
    pub t: Option<String>,
    #[arg(long)]
    pub case: Option<String>,
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long = "alpha_scale", alias = "alpha-scale")]
    pub alpha_scale: Option<String>,
    #[arg(long = "mu_scale", alias = "mu-scale")]
    pub mu_scale: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long = "mu_odg_list", alias = "mu-odg-list")]
    pub mu_odg_list: Option<String>,
    #[arg(long)]
    pub benchmarks: Option<String>,
    #[arg(long = "restart_delta", alias = "restart-delta")]
    pub restart_delta: Option<String>,
    #[arg(long = "output_dir", alias = "output-dir")]
    pub output_dir: Option<String>,
}

impl ConfigFlags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        [
            ("J", &self.j),
            ("K", &self.k),
            ("T", &self.t),
            ("case", &self.case),
            ("seeds", &self.seeds),
            ("alpha_scale", &self.alpha_scale),
            ("mu_scale", &self.mu_scale),
            ("beta", &self.beta),
            ("mu_odg_list", &self.mu_odg_list),
            ("benchmarks", &self.benchmarks),
            ("restart_delta", &self.restart_delta),
            ("output_dir", &self.output_dir),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect()
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        load_with_overrides(self.config.as_deref(), &self.overrides())
    }
}

fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, S>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    macro_rules! config {
        ($flags:expr) => {
            match $flags.resolve() {
                Ok(c) => c,
                Err(e) => {
                    let _ = writeln!(err, "configuration error: {e}");
                    return EXIT_CONFIG;
                }
            }
        };
    }
    match cli.command {
        Command::Run(flags) => {
            let cfg = config!(flags);
            let result = run_experiment(&cfg);
            let csv = results_path(&cfg.output_dir);
            if let Err(e) = std::fs::create_dir_all(&cfg.output_dir)
                .map_err(|e| e.to_string())
                .and_then(|_| emit_csv(&result.rows, &csv).map_err(|e| e.to_string()))
            {
                let _ = writeln!(err, "{e}");
                return EXIT_FAILURE;
            }
            let summary = render_summary(&cfg, &result);
            if let Err(e) = write_file(&summary_path(&cfg.output_dir), &summary) {
                let _ = writeln!(err, "{}: {e}", summary_path(&cfg.output_dir).display());
                return EXIT_FAILURE;
            }
            let _ = write!(out, "{summary}");
            for f in &result.failures {
                let _ = writeln!(err, "seed {} failed: {}", f.seed, f.message);
            }
            if result.failures.is_empty() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Command::Sweep { config, horizons } => {
            let cfg = config!(config);
            let hs: Option<Vec<usize>> = horizons.split(',').map(|h| h.trim().parse().ok()).collect();
            let Some(hs) = hs.filter(|h| !h.is_empty() && h.windows(2).all(|w| w[0] < w[1]) && h[0] > 0) else {
                let _ = writeln!(err, "configuration error: horizons must be increasing positive integers");
                return EXIT_CONFIG;
            };
            match horizon_sweep(&cfg, &hs) {
                Ok(report) => {
                    let text = report.render();
                    let _ = write!(out, "{text}");
                    let _ = write_file(&cfg.output_dir.join("sweep.txt"), &text);
                    let ok = report.failures.is_empty()
                        && report.fit_ok() != Some(false)
                        && report.regret_ok() != Some(false);
                    if ok {
                        EXIT_OK
                    } else {
                        EXIT_FAILURE
                    }
                }
                Err(e) => {
                    let _ = writeln!(err, "{e}");
                    EXIT_FAILURE
                }
            }
        }
        Command::Validate { seed, inject_fault } => {
            let fault = match inject_fault.as_deref().map(str::parse::<Fault>).transpose() {
                Ok(f) => f,
                Err(e) => {
                    let _ = writeln!(err, "configuration error: {e}");
                    return EXIT_CONFIG;
                }
            };
            let report = validate_suite(&ValidationOptions { seed, fault });
            let _ = write!(out, "{}", report.render());
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Command::ExportScenario {
            config,
            seed,
            out: path,
            network,
        } => {
            let cfg = config!(config);
            let case = match cfg.case {
                CaseSpec::Case1 => CaseTag::Case1,
                CaseSpec::Case2 => CaseTag::Case2,
                CaseSpec::Custom(_) => {
                    let _ = writeln!(err, "configuration error: only case1 and case2 can be generated");
                    return EXIT_CONFIG;
                }
            };
            let (j, k) = (cfg.mapping_nodes, cfg.data_centers);
            let generated = gen_case::<f64>(case, j, k, cfg.horizon, seed)
                .and_then(|s| gen_network::<f64>(j, k, seed).map(|n| (s, n)));
            let (stream, net) = match generated {
                Ok(v) => v,
                Err(e) => {
                    let _ = writeln!(err, "{e}");
                    return EXIT_FAILURE;
                }
            };
            let mut targets = vec![(path, write_scenario(&stream))];
            if let Some(p) = network {
                targets.push((p, write_network(&net)));
            }
            for (p, text) in targets {
                if let Err(e) = write_file(&p, &text) {
                    let _ = writeln!(err, "{}: {e}", p.display());
                    return EXIT_FAILURE;
                }
                let _ = writeln!(out, "wrote {}", p.display());
            }
            EXIT_OK
        }
        Command::ImportScenario { path, seed } => {
            let parsed = std::fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|t| read_scenario::<f64>(&t).map_err(|e| e.to_string()));
            let stream = match parsed {
                Ok(s) => s,
                Err(e) => {
                    let _ = writeln!(err, "{}: {e}", path.display());
                    return EXIT_CONFIG;
                }
            };
            let margin = gen_network::<f64>(stream.mapping_nodes, stream.data_centers, seed)
                .and_then(|n| slater_margin(&n, &stream, stream.horizon()));
            let _ = writeln!(
                out,
                "J {} K {} T {} case {} seed {}",
                stream.mapping_nodes,
                stream.data_centers,
                stream.horizon(),
                stream.case,
                stream.seed
            );
            match margin {
                Ok(m) if m.epsilon > 0.0 => {
                    let _ = writeln!(out, "Slater margin {} against the network of seed {seed}", m.epsilon);
                    let _ = writeln!(
                        out,
                        "config: case = {}\nJ = {}\nK = {}\nT = {}",
                        path.display(),
                        stream.mapping_nodes,
                        stream.data_centers,
                        stream.horizon()
                    );
                    EXIT_OK
                }
                Ok(_) => {
                    let _ = writeln!(err, "no strictly feasible allocation for the network of seed {seed}");
                    EXIT_FAILURE
                }
                Err(e) => {
                    let _ = writeln!(err, "{e}");
                    EXIT_FAILURE
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(std::iter::once("mosp").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn flags_override_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.txt");
        std::fs::write(&file, "J = 3\nK = 4\nT = 30\n").unwrap();
        let flags = ConfigFlags {
            config: Some(file),
            k: Some("2".into()),
            ..ConfigFlags::default()
        };
        let cfg = flags.resolve().unwrap();
        assert_eq!((cfg.mapping_nodes, cfg.data_centers, cfg.horizon), (3, 2, 30));
    }

    #[test]
    fn bad_configuration_exits_with_2() {
        assert_eq!(call(&["run", "--T", "0"]).0, EXIT_CONFIG);
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.txt");
        std::fs::write(&file, "gamma = 1\n").unwrap();
        let (code, _, err) = call(&["run", "--config", file.to_str().unwrap()]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("gamma"), "{err}");
        assert_eq!(call(&["validate", "--inject-fault", "nonsense"]).0, EXIT_CONFIG);
        assert_eq!(call(&["frobnicate"]).0, EXIT_CONFIG);
        assert_eq!(call(&["sweep", "--horizons", "500,250"]).0, EXIT_CONFIG);
    }

    #[test]
    fn run_writes_csv_and_summary() {
        let dir = tempfile::tempdir().unwrap();
        let outdir = dir.path().join("o");
        let (code, out, err) = call(&[
            "run",
            "--J",
            "2",
            "--K",
            "3",
            "--T",
            "24",
            "--seeds",
            "1..3",
            "--output_dir",
            outdir.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        assert!(out.contains("mosp"));
        let csv = std::fs::read_to_string(outdir.join("results.csv")).unwrap();
        // mosp, two ODG variants and the per-slot benchmark
        assert_eq!(csv.lines().count(), 1 + 3 * 24 * 4);
        assert!(outdir.join("summary.txt").exists());
    }

    #[test]
    fn validate_exit_codes() {
        let (code, out, _) = call(&["validate"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let (code, out, _) = call(&["validate", "--inject-fault", "dual-sign-flip"]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(out.contains("[FAIL] drift inequality"), "{out}");
    }

    #[test]
    fn export_then_import() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("s.csv");
        let n = dir.path().join("n.txt");
        let (code, _, err) = call(&[
            "export-scenario",
            "--case",
            "case2",
            "--J",
            "2",
            "--K",
            "3",
            "--T",
            "30",
            "--seed",
            "4",
            "--out",
            s.to_str().unwrap(),
            "--network",
            n.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        let (code, out, err) = call(&["import-scenario", s.to_str().unwrap(), "--seed", "4"]);
        assert!(out.contains("J 2 K 3 T 30 case case2 seed 4"), "{out}{err}");
        assert!(code == EXIT_OK || code == EXIT_FAILURE);
        std::fs::write(&s, "J 1\nK 1\n").unwrap();
        assert_eq!(call(&["import-scenario", s.to_str().unwrap()]).0, EXIT_CONFIG);
    }
}
