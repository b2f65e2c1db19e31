use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dynbc_driver::{commands, parse_config, CliError, Command};

/// Boundary null-control experiments for the heat equation with dynamic
/// boundary conditions.
#[derive(Parser, Debug)]
#[command(name = "dynbc", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML config with dotted sections.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(args: &Args) -> Result<commands::Outcome, CliError> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    commands::run(args.command, &cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string(&outcome).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::path::{Path, PathBuf};

    use clap::Parser;
    use serde_json::Value;

    use super::*;

    fn dynbc(args: &[&str], config: &Path, out: &Path) -> Result<commands::Outcome, CliError> {
        let mut argv: Vec<String> = vec!["dynbc".into()];
        argv.extend(args.iter().map(|s| s.to_string()));
        argv.extend([
            "--config".into(),
            config.display().to_string(),
            "--out".into(),
            out.display().to_string(),
        ]);
        execute(&Args::try_parse_from(argv).unwrap())
    }

    fn code(r: &Result<commands::Outcome, CliError>) -> i32 {
        r.as_ref().map(|_| 0).unwrap_or_else(|e| e.exit_code())
    }

    fn setup(body: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.toml");
        std::fs::write(&cfg, body).unwrap();
        (dir, cfg)
    }

    fn error_json(r: &Result<commands::Outcome, CliError>) -> Value {
        let e = r.as_ref().expect_err("an error");
        serde_json::from_str(&e.to_json().to_string()).unwrap()
    }

    fn data(path: &Path) -> Value {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        v["data"].clone()
    }

    #[test]
    fn minimal_config_echoes_defaults() {
        let (dir, cfg) = setup("domain.kind = \"interval\"\ntime.T = 1\ntime.n_t = 16\n");
        let out = dir.path().join("o");
        assert!(dynbc(&["simulate"], &cfg, &out).is_ok());
        let text = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
        for line in [
            "# domain.n = 32",
            "# physics.d = 1e0",
            "# hum.epsilon = 1e-8",
            "# carleman.lambda = 2e0",
            "# seed = 0",
        ] {
            assert!(text.contains(line), "missing {line}");
        }
        assert!(text.lines().any(|l| l.starts_with("# config_hash = ")));
    }

    #[test]
    fn disk_without_sectors_is_a_config_error() {
        let (dir, cfg) = setup("domain.kind = \"disk\"\ndomain.n_r = 8\ntime.T = 1\n");
        let out = dynbc(&["mesh-info"], &cfg, &dir.path().join("o"));
        assert_eq!(code(&out), (2));
        assert_eq!(error_json(&out)["error"]["field"], "domain.n_theta");
    }

    #[test]
    fn negative_horizon_is_a_config_error() {
        let (dir, cfg) = setup("time.T = -1\n");
        let out = dynbc(&["simulate"], &cfg, &dir.path().join("o"));
        assert_eq!(code(&out), (2));
        assert_eq!(error_json(&out)["error"]["field"], "time.T");
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let (dir, cfg) = setup("time.T = 1\nhum.eps = 1\n");
        let out = dynbc(&["hum"], &cfg, &dir.path().join("o"));
        assert_eq!(code(&out), (2));
        let msg = error_json(&out)["error"]["message"].as_str().unwrap().to_string();
        assert!(msg.contains("hum.eps") && msg.contains("hum.epsilon"));
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dynbc(&["simulate"], &dir.path().join("absent.toml"), &dir.path().join("o"));
        assert_eq!(code(&out), (2));
    }

    #[test]
    fn unwritable_output_fails_with_json() {
        let (dir, cfg) = setup("time.T = 1\ntime.n_t = 8\n");
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let out = dynbc(&["simulate"], &cfg, &blocker.join("sub"));
        assert_eq!(code(&out), (3));
        assert_eq!(error_json(&out)["error"]["kind"], "io");
    }

    #[test]
    fn zero_data_gives_a_flat_decay_line() {
        let (dir, cfg) = setup("time.T = 1\ntime.n_t = 16\ndata.initial = \"zero\"\n");
        let out = dir.path().join("o");
        assert!(dynbc(&["simulate"], &cfg, &out).is_ok());
        let summary = data(&out.join("simulate.json"));
        assert_eq!(summary["final_norm"], 0.0);
        let svg = std::fs::read_to_string(out.join("decay.svg")).unwrap();
        assert!(svg.contains("<polyline") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn hum_summary_reports_norms() {
        let (dir, cfg) = setup("time.T = 1\ntime.n_t = 64\nhum.epsilon = 1e-6\n");
        let out = dir.path().join("o");
        assert!(dynbc(&["hum"], &cfg, &out).is_ok());
        let s = data(&out.join("hum.json"));
        let fin = s["final_norm"].as_f64().unwrap();
        assert!(fin < s["uncontrolled_norm"].as_f64().unwrap());
        assert!(s["control_norm"].as_f64().unwrap() > 0.0);
        assert_eq!(s["penalized_bound_holds"], true);
        let control = std::fs::read_to_string(out.join("control.csv")).unwrap();
        let rows: Vec<&str> = control.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "t,node,v");
        assert_eq!(rows.len(), 1 + 64);
    }

    #[test]
    fn verify_eta_on_the_default_disk() {
        let (dir, cfg) = setup("domain.kind = \"disk\"\ndomain.n_r = 16\ndomain.n_theta = 64\ntime.T = 1\n");
        let out = dir.path().join("o");
        assert!(dynbc(&["verify-eta"], &cfg, &out).is_ok());
        let r = data(&out.join("eta_report.json"));
        assert_eq!(r["pass"], true);
        assert!(r["c0"].as_f64().unwrap() > 0.0);
        let csv = std::fs::read_to_string(out.join("eta.csv")).unwrap();
        assert!(csv.contains("index,x,y,is_boundary,in_gamma,in_gamma0,w,eta"));
    }

    #[test]
    fn mesh_info_exports_operator_blocks() {
        let (dir, cfg) = setup("domain.n = 8\ntime.T = 1\n");
        let out = dir.path().join("o");
        assert!(dynbc(&["mesh-info"], &cfg, &out).is_ok());
        for f in [
            "mesh.csv",
            "mesh.json",
            "operator_stiffness.csv",
            "operator_laplacian.csv",
        ] {
            assert!(out.join(f).exists(), "{f}");
        }
        let m = data(&out.join("mesh.json"));
        assert_eq!(m["mesh"]["nodes"], 9);
    }

    #[test]
    fn seed_flag_changes_random_outputs() {
        let (dir, cfg) = setup("domain.n = 8\ntime.T = 1\ntime.n_t = 16\n");
        let run = |seed: &str, tag: &str| {
            let out = dir.path().join(tag);
            assert!(dynbc(&["simulate", "--seed", seed], &cfg, &out).is_ok());
            std::fs::read(out.join("trajectory.csv")).unwrap()
        };
        assert_ne!(run("1", "a"), run("2", "b"));
    }

    #[test]
    fn format_selection_limits_outputs() {
        let (dir, cfg) = setup("domain.n = 8\ntime.T = 1\ntime.n_t = 8\noutput.formats = [\"json\"]\n");
        let out = dir.path().join("o");
        assert!(dynbc(&["simulate"], &cfg, &out).is_ok());
        assert!(out.join("simulate.json").exists());
        assert!(!out.join("trajectory.csv").exists() && !out.join("decay.svg").exists());
    }
}
