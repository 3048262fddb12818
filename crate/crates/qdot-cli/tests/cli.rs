use std::path::Path;
use std::process::{Command, Output};

use qdot_cli::read_csv;

const COARSE: &str = "grid.step_nm = 1\nsweep.count = 3\nsweep.start = 0.2\nsweep.stop = 0.3\n";

fn qdot(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdot")).args(args).current_dir(dir).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.conf");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sweep_writes_readable_csv_and_figures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{COARSE}cnot.separations_nm =\n"));
    let out = qdot(&["--config", &cfg, "--out", "o", "--no-timestamp", "sweep"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read(dir.path().join("o/sweep.csv")).unwrap();
    let (meta, rows) = read_csv(text.as_slice()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.succeeded() && r.t_cnot_s.is_none()));
    assert_eq!(rows.iter().map(|r| r.w).collect::<Vec<_>>(), vec![0.2, 0.25, 0.3]);
    assert!(meta.get("config_sha256").is_some_and(|h| h.len() == 64));
    assert!(meta.entries.iter().all(|(k, _)| !k.starts_with("timestamp")));
    for f in ["t_not_vs_r.svg", "rates_vs_r.svg", "eps10_vs_r.svg"] {
        assert!(dir.path().join("o").join(f).exists(), "{f}");
    }

    // redrawing from the CSV reproduces the sweep's figures byte for byte
    let first = std::fs::read(dir.path().join("o/rates_vs_r.svg")).unwrap();
    let redraw = qdot(&["--out", "p", "figures", "o/sweep.csv"], dir.path());
    assert!(redraw.status.success());
    assert_eq!(std::fs::read(dir.path().join("p/rates_vs_r.svg")).unwrap(), first);
}

#[test]
fn timestamp_is_the_only_varying_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), "grid.step_nm = 1\nsweep.count = 2\ncnot.separations_nm =\noutput.svg = false\n");
    assert!(qdot(&["--config", &cfg, "--out", "a", "sweep"], dir.path()).status.success());
    assert!(qdot(&["--config", &cfg, "--out", "b", "--no-timestamp", "sweep"], dir.path()).status.success());
    let a = std::fs::read_to_string(dir.path().join("a/sweep.csv")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b/sweep.csv")).unwrap();
    let stamped: Vec<&str> = a.lines().filter(|l| l.contains("non-deterministic")).collect();
    assert_eq!(stamped.len(), 1);
    let a_rest: Vec<&str> = a.lines().filter(|l| !l.contains("non-deterministic")).collect();
    assert_eq!(a_rest, b.lines().collect::<Vec<_>>());
}

#[test]
fn paper_literal_flag_changes_only_longitudinal_piezo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), "grid.step_nm = 1\nsweep.count = 2\ncnot.separations_nm =\noutput.svg = false\n");
    assert!(qdot(&["--config", &cfg, "--out", "d", "--no-timestamp", "sweep"], dir.path()).status.success());
    let lit = qdot(&["--config", &cfg, "--out", "l", "--no-timestamp", "--paper-literal-eq57", "sweep"], dir.path());
    assert!(lit.status.success());
    let read = |d: &str| read_csv(std::fs::File::open(dir.path().join(d).join("sweep.csv")).unwrap()).unwrap();
    let ((dm, d), (lm, l)) = (read("d"), read("l"));
    assert_ne!(dm.get("config_sha256"), lm.get("config_sha256"));
    assert_eq!(lm.get("longitudinal_piezo_integrand"), Some("paper-literal-cos4"));
    for (x, y) in d.iter().zip(&l) {
        assert_eq!((x.w_da, x.w_pa_t, x.w_photon), (y.w_da, y.w_pa_t, y.w_photon));
        assert_ne!(x.w_pa_l, y.w_pa_l);
    }
}

#[test]
fn single_point_commands_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.step_nm = 1\n");
    for (cmd, needle) in
        [("solve", "eps10 ="), ("characterize", "t_not ="), ("rates", "dominant ="), ("cnot", "R = 60 nm")]
    {
        let out = qdot(&["--config", &cfg, cmd], dir.path());
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout.contains(needle), "{cmd}: {stdout}");
    }
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid.step_nm = 1\nwell.bogus = 3\n");
    let out = qdot(&["--config", &cfg, "solve"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = qdot(&["--threads", "0", "solve"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = qdot(&["figures", "missing.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_points_give_nonzero_exit_and_error_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), "grid.step_nm = 1\nsweep.count = 2\ncnot.separations_nm =\nsolver.max_iter = 3\n");
    let out = qdot(&["--config", &cfg, "--out", "o", "--threads", "1", "sweep"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let (_, rows) = read_csv(std::fs::File::open(dir.path().join("o/sweep.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.error.as_deref().is_some_and(|e| e.contains("converge"))));
}
