use ddpc_cli::{cmd_compare, cmd_run, cmd_validate, Overrides};
use ddpc_core::config::preset;

fn quiet(dir: &std::path::Path) -> Overrides {
    Overrides {
        out: Some(dir.to_path_buf()),
        seed: None,
        quiet: true,
    }
}

#[test]
fn validate_reports_derived_dimensions() {
    let report = cmd_validate("preset:paper_benchmark").unwrap();
    assert!(report.contains("L = 8"), "{report}");
    assert!(report.contains("g-dim = 193"), "{report}");
    assert!(report.contains("WKPC"), "{report}");
}

#[test]
fn validate_names_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = preset("pendulum_deepc").unwrap().replace("lambda_g = 50.0", "lambda_g = 0.0");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let err = cmd_validate(path.to_str().unwrap()).unwrap_err().to_string();
    assert!(err.contains("deepc.lambda_g"), "{err}");
}

#[test]
fn unknown_preset_lists_the_available_ones() {
    let err = cmd_validate("preset:nope").unwrap_err().to_string();
    assert!(err.contains("paper_benchmark"), "{err}");
}

#[test]
fn commands_reject_the_other_config_kind() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cmd_run("preset:paper_benchmark", &quiet(dir.path())).is_err());
    assert!(cmd_compare("preset:pendulum_mfapc", &quiet(dir.path())).is_err());
}

#[test]
fn run_writes_the_three_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let res = cmd_run("preset:pendulum_mfapc", &quiet(dir.path())).unwrap();
    assert_eq!(res.len(), 200);
    for file in ["run.csv", "diagnostics.csv", "metrics.toml"] {
        assert!(dir.path().join(file).is_file(), "{file} missing");
    }
    let run_csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert_eq!(run_csv.lines().count(), 201);
}

#[test]
fn compare_without_a_block_gives_two_columns() {
    let dir = tempfile::tempdir().unwrap();
    let full = preset("paper_benchmark").unwrap();
    let text = &full[..full.find("[controllers.wkpc]").unwrap()];
    let path = dir.path().join("two.toml");
    std::fs::write(&path, text).unwrap();
    let cmp = cmd_compare(path.to_str().unwrap(), &quiet(&dir.path().join("out"))).unwrap();
    assert_eq!(cmp.runs.len(), 2);
    let header = cmp.table.lines().next().unwrap();
    assert!(header.contains("MFAPC-CFDL") && header.contains("DeePC") && !header.contains("WKPC"), "{header}");
    let csv = std::fs::read_to_string(dir.path().join("out/comparison.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 5);
}

#[test]
fn seed_override_changes_the_offline_data() {
    let dir = tempfile::tempdir().unwrap();
    let a = cmd_run("preset:pendulum_deepc", &quiet(&dir.path().join("a"))).unwrap();
    let b = cmd_run(
        "preset:pendulum_deepc",
        &Overrides {
            seed: Some(7),
            ..quiet(&dir.path().join("b"))
        },
    )
    .unwrap();
    assert_eq!(b.seeds.seed, 7);
    assert_ne!(a.u.as_flat(), b.u.as_flat());
}
