mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use common::{config_path, BUILT_IN, SOLVABLE};

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bellman-transform"))
}

fn run_cli(args: &[&str], config: &Path, out: Option<&Path>) -> Output {
    let mut cmd = exe();
    cmd.args(args);
    if let Some(dir) = out {
        cmd.arg("--out").arg(dir);
    }
    cmd.arg(config).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn with_model(name: &str, edit: impl FnOnce(&mut Value)) -> (tempfile::TempDir, PathBuf) {
    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(config_path(name)).unwrap()).unwrap();
    edit(&mut cfg);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    (dir, path)
}

fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn load_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Resolves `urn:bellman-transform:<name>` to `docs/schemas/<name>.schema.json`.
struct LocalSchemas;

impl jsonschema::Retrieve for LocalSchemas {
    fn retrieve(&self, uri: &jsonschema::Uri<String>) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let name = uri
            .as_str()
            .strip_prefix("urn:bellman-transform:")
            .ok_or_else(|| format!("unexpected schema reference {}", uri.as_str()))?;
        Ok(load_json(&schema_dir().join(format!("{name}.schema.json"))))
    }
}

fn validator(name: &str) -> jsonschema::Validator {
    jsonschema::options()
        .with_retriever(LocalSchemas)
        .build(&load_json(&schema_dir().join(format!("{name}.schema.json"))))
        .unwrap()
}

fn assert_valid(v: &jsonschema::Validator, instance: &Value, what: &str) {
    let errors: Vec<String> = v.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{what}: {errors:#?}");
}

#[test]
fn degenerate_job_search_files() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_cli(&["run", "--quiet"], &config_path("job_search_degenerate"), Some(tmp.path()));
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rows = csv::Reader::from_path(tmp.path().join("solution.csv")).unwrap();
    let headers = rows.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let records: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    let cont = records.iter().find(|r| &r[col("action_tag")] == "continue").unwrap();
    let g: f64 = cont[col("g_star")].parse().unwrap();
    let v: f64 = cont[col("v_star")].parse().unwrap();
    assert!((g - 4.5).abs() < 1e-9 && (v - 5.0).abs() < 1e-9);

    let mut policy = csv::Reader::from_path(tmp.path().join("policy.csv")).unwrap();
    let headers = policy.headers().unwrap().clone();
    let first = policy.records().next().unwrap().unwrap();
    assert_eq!(&first[headers.iter().position(|h| h == "action_tag").unwrap()], "accept");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let (_d, low_gamma) = with_model("savings", |c| c["model"]["gamma"] = json!(0.5));
    assert_eq!(code(&run_cli(&["run"], &low_gamma, Some(tmp.path()))), 2);
    assert_eq!(code(&run_cli(&["verify"], &low_gamma, None)), 2);

    let o = run_cli(&["run"], &config_path("income_zero"), Some(tmp.path()));
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("u(y')"), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(code(&run_cli(&["verify"], &config_path("income_zero"), None)), 3);

    assert_eq!(code(&run_cli(&["run"], &config_path("adversarial_kappa"), Some(tmp.path()))), 3);
    assert_eq!(code(&run_cli(&["verify"], &config_path("adversarial_kappa"), None)), 3);

    assert_eq!(code(&run_cli(&["run"], Path::new("/nonexistent/config.json"), Some(tmp.path()))), 2);
    assert_eq!(code(&exe().output().unwrap()), 2);
    assert_eq!(code(&exe().args(["run"]).output().unwrap()), 2);
    assert_eq!(code(&exe().arg("--help").output().unwrap()), 0);

    let out = tmp.path().join("capped");
    let o = run_cli(&["run", "--quiet", "--max-iter", "3"], &config_path("savings"), Some(&out));
    assert_eq!(code(&o), 4);
    assert!(out.join("residuals.csv").exists() && out.join("manifest.json").exists());
    assert!(!out.join("solution.csv").exists());
    let manifest = load_json(&out.join("manifest.json"));
    assert_eq!(manifest["solve"]["converged"], json!(false));
    assert_eq!(manifest["solve"]["iterations"], json!(3));
}

#[test]
fn built_in_configs_verify_and_run() {
    let tmp = tempfile::tempdir().unwrap();
    for name in SOLVABLE {
        assert_eq!(code(&run_cli(&["verify", "--quiet"], &config_path(name), None)), 0, "{name}");
    }
    for name in BUILT_IN {
        let o = run_cli(&["run", "--quiet"], &config_path(name), Some(&tmp.path().join(name)));
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn overrides_reach_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_cli(
        &["run", "--quiet", "--tol", "1e-6", "--seed", "42"],
        &config_path("job_search"),
        Some(tmp.path()),
    );
    assert_eq!(code(&o), 0);
    let manifest = load_json(&tmp.path().join("manifest.json"));
    assert_eq!(manifest["config"]["solver"]["tol"], json!(1e-6));
    assert_eq!(manifest["config"]["solver"]["seed"], json!(42));
    let diagnostics = load_json(&tmp.path().join("diagnostics.json"));
    assert_eq!(diagnostics["modulus"]["seed"], json!(42));
    let (_d, bad) = with_model("job_search", |_| {});
    assert_eq!(code(&run_cli(&["run", "--tol", "-1"], &bad, Some(tmp.path()))), 2);
}

#[test]
fn unknown_fields_are_rejected() {
    let edits: [(&str, fn(&mut Value)); 5] = [
        ("top level", |c| c["extra"] = json!(1)),
        ("model", |c| c["model"]["discount"] = json!(0.9)),
        ("chain", |c| c["model"]["income"]["ar1_log"]["mean"] = json!(0.0)),
        ("grid", |c| c["model"]["wealth_grid"]["step"] = json!(0.1)),
        ("solver", |c| c["solver"]["tolerance"] = json!(1e-8)),
    ];
    let schema = validator("config");
    for (what, edit) in edits {
        let (_d, path) = with_model("savings", edit);
        assert_eq!(code(&run_cli(&["verify"], &path, None)), 2, "{what}");
        assert!(!schema.is_valid(&load_json(&path)), "schema accepts unknown field in {what}");
    }
}

#[test]
fn shipped_configs_match_the_schema() {
    let schema = validator("config");
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        assert_valid(&schema, &load_json(&path), &path.display().to_string());
    }
    let (_d, low_gamma) = with_model("savings", |c| c["model"]["gamma"] = json!(0.5));
    assert!(!schema.is_valid(&load_json(&low_gamma)));
}

#[test]
fn artifacts_match_their_schemas() {
    let manifest = validator("manifest");
    let diagnostics = validator("diagnostics");
    let tmp = tempfile::tempdir().unwrap();
    for name in SOLVABLE {
        let out = tmp.path().join(name);
        assert_eq!(code(&run_cli(&["run", "--quiet"], &config_path(name), Some(&out))), 0);
        let m = load_json(&out.join("manifest.json"));
        assert_valid(&manifest, &m, name);
        assert_valid(&diagnostics, &load_json(&out.join("diagnostics.json")), name);
        for file in m["files"].as_array().unwrap() {
            assert!(out.join(file.as_str().unwrap()).exists(), "{name}: {file}");
        }
        let header = |file: &str| -> Vec<String> {
            let mut r = csv::Reader::from_path(out.join(file)).unwrap();
            r.headers().unwrap().iter().map(String::from).collect()
        };
        assert_eq!(header("residuals.csv"), ["iteration", "residual", "ratio"]);
        let solution = header("solution.csv");
        assert_eq!(solution[0], "state");
        assert_eq!(&solution[solution.len() - 4..], ["reward", "g_star", "v_star", "greedy"]);
        assert_eq!(header("policy.csv").last().unwrap(), "v_star");
    }
    let capped = tmp.path().join("capped");
    run_cli(&["run", "--quiet", "--max-iter", "2"], &config_path("savings"), Some(&capped));
    assert_valid(&manifest, &load_json(&capped.join("manifest.json")), "max-iter manifest");
}
