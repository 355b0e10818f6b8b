use std::fs;
use std::process::Command;

use atris_core::experiments::StudyKind;
use atris_core::tris::Strategy;
use atris_sim::config::RunConfig;
use atris_sim::output::{read_matrix_dump, read_surface_program};
use atris_sim::run::csv_path;

fn toy(out: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig {
        out: out.to_path_buf(),
        ..RunConfig::default()
    };
    cfg.apply_toml("amaf.rows = 2\namaf.cols = 2\ntris.rows = 10\ntris.cols = 10\nsweep.d = 1.0\n")
        .unwrap();
    cfg
}

fn lines(path: &std::path::Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn angular_study_writes_one_file_per_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy(dir.path());
    let summary = atris_sim::execute(&cfg).unwrap();
    assert_eq!(summary.files.len(), 6);
    for s in Strategy::ALL {
        let l = lines(&csv_path(dir.path(), StudyKind::Angular, s));
        assert_eq!(l[0], "delta_phi_deg,gamma_1,gamma_2,sum_rate,jain,strategy,seed");
        assert_eq!(l.len(), 8);
        assert!(l[1..].iter().all(|row| row.ends_with(&format!(",{},0", s.name()))));
    }
    assert!(summary.table.contains("ND-EIG-W"));
}

#[test]
fn single_study_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy(dir.path());
    cfg.apply_assignment("study=single").unwrap();
    cfg.apply_assignment("strategy=D-FOC-U").unwrap();
    cfg.apply_assignment("export.surface=true").unwrap();
    cfg.apply_assignment("export.channels=true").unwrap();
    atris_sim::execute(&cfg).unwrap();
    let l = lines(&csv_path(dir.path(), StudyKind::Single, Strategy::DFocU));
    assert_eq!(l.len(), 2);
    let phases = read_surface_program(
        fs::read(dir.path().join("single_d-foc-u.surface.txt"))
            .unwrap()
            .as_slice(),
    )
    .unwrap();
    assert_eq!(phases.len(), 100);
    let g = read_matrix_dump(fs::File::open(dir.path().join("single_g.atrs")).unwrap()).unwrap();
    assert_eq!(g.shape(), (100, 4));
    let h = read_matrix_dump(fs::File::open(dir.path().join("single_h.atrs")).unwrap()).unwrap();
    assert_eq!(h.shape(), (2, 100));
}

#[test]
fn failed_runs_leave_no_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy(dir.path());
    cfg.apply_assignment("strategy=D-FOC-U,ND-EIG-W").unwrap();
    // A directory where the second CSV should go makes its creation fail.
    fs::create_dir(csv_path(dir.path(), StudyKind::Angular, Strategy::NdEigW)).unwrap();
    assert!(atris_sim::execute(&cfg).is_err());
    assert!(!csv_path(dir.path(), StudyKind::Angular, Strategy::DFocU).exists());
}

#[test]
fn scalability_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy(dir.path());
    cfg.apply_toml("study = \"scalability\"\nstrategy = [\"ND-MMSE-U\"]\nseed = 3\n[mc]\nk_values = [2, 3]\ntrials = 4\ndistance_range = [0.5, 2.0]\n")
        .unwrap();
    atris_sim::execute(&cfg).unwrap();
    let l = lines(&csv_path(dir.path(), StudyKind::Scalability, Strategy::NdMmseU));
    assert_eq!(
        l[0],
        "k,trials,mean_ue_rate,ue_rate_variance,mean_sum_rate,mean_jain,strategy,seed"
    );
    assert_eq!(l.len(), 3);
    assert!(l[1].starts_with("2,4,") && l[1].ends_with(",ND-MMSE-U,3"));
}

#[test]
fn binary_reports_config_errors_with_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_atris-sim"))
        .args(["--study", "single", "--set", "tris.rows=ten", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("tris.rows"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn binary_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "study = \"angular\"\n[tris]\nrows = 8\ncols = 8\n[amaf]\nrows = 2\ncols = 2\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = Command::new(env!("CARGO_BIN_EXE_atris-sim"))
        .arg("--config")
        .arg(&config)
        .args([
            "--study",
            "single",
            "--strategy",
            "d-peb-u",
            "--d",
            "2",
            "--delta-phi",
            "20",
            "--k",
            "3",
            "--seed",
            "9",
            "--out",
        ])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let l = lines(&out_dir.join("single_d-peb-u.csv"));
    assert_eq!(
        l[0],
        "distance_m,delta_phi_deg,gamma_1,gamma_2,gamma_3,sum_rate,jain,strategy,seed"
    );
    assert!(l[1].starts_with("2,20,") && l[1].ends_with(",D-PEB-U,9"));
}
