use std::path::Path;
use std::process::{Command, Output};

fn triq(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_triq"));
    cmd.current_dir(dir).args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("TRIQ_")) {
        cmd.env_remove(k);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn stdout_value(out: &Output, key: &str) -> String {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn decay_writes_csv_plot_and_overlay() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ghz.conf", "state = ghz\ngrid.t_end_s = 0.8\n");
    let out = triq(dir.path(), &["decay", "--config", "ghz.conf", "--out", "res"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("res/decay_ghz.csv")).unwrap();
    assert!(csv.starts_with("time_s,N1,N2,N3,N3_tri,fidelity,purity\n"));
    assert_eq!(csv.lines().count(), 802);
    for line in csv.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 7);
        assert!(cells[1..].iter().all(|v| (0.0..=1.0).contains(v)));
        // Twelve significant digits: one before the point, eleven after.
        let mantissa = line.split(',').nth(4).unwrap().split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 13);
    }
    assert!(dir.path().join("res/decay_ghz_analytic.csv").exists());
    let svg = std::fs::read_to_string(dir.path().join("res/decay_ghz.svg")).unwrap();
    assert!(svg.contains("<polyline"));
    let t: f64 = stdout_value(&out, "disentanglement_time_s").parse().unwrap();
    assert!((t - 0.53).abs() <= 0.03, "{t}");
}

#[test]
fn zero_length_grid_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.conf", "state = w\ngrid.t_end_s = 0\n");
    let out = triq(dir.path(), &["decay", "--config", "c.conf", "--out", "."], &[]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("decay_w.csv")).unwrap();
    assert_eq!(csv, "time_s,N1,N2,N3,N3_tri,fidelity,purity\n");
    assert_eq!(stdout_value(&out, "disentanglement_time_s"), "none");
}

#[test]
fn config_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.conf", "state = ghz\n\nbath.tau = 0.01\n");
    let out = triq(dir.path(), &["decay", "--config", "bad.conf"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.conf:3") && err.contains("bath.tau"), "{err}");

    write(dir.path(), "ok.conf", "state = ghz\n");
    let out = triq(dir.path(), &["decay", "--config", "ok.conf"], &[("TRIQ_GRID__STEP_S", "-1")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("TRIQ_GRID__STEP_S"));

    let out = triq(dir.path(), &["frobnicate"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn protect_requires_sequence_bath_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "p.conf", "state = ghz\nbath.mode = correlated\nbath.sigma_rad_s = 14\n");
    let out = triq(dir.path(), &["protect", "--config", "p.conf", "--seed", "1"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dd.sequence"));
    let out = triq(dir.path(), &["protect", "--config", "p.conf"], &[("TRIQ_DD__SEQUENCE", "xy16s")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
    write(dir.path(), "m.conf", "state = ghz\ndd.sequence = kddxy\n");
    let out = triq(dir.path(), &["protect", "--config", "m.conf", "--seed", "1"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn protect_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "p.conf",
        "state = ghz\nbath.mode = correlated\nbath.sigma_rad_s = 14\nbath.trajectories = 12\n\
         dd.sequence = xy16s\ndd.tau_s = 0.25e-3\ndd.cycles = 10\n",
    );
    let a = triq(dir.path(), &["protect", "--config", "p.conf", "--seed", "42", "--out", "a"], &[]);
    let b = triq(dir.path(), &["protect", "--config", "p.conf", "--out", "b"], &[("TRIQ_SEED", "42")]);
    assert!(a.status.success() && b.status.success());
    for name in ["protect_ghz_xy16s.csv", "protect_ghz_xy16s_unprotected.csv"] {
        let x = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let csv = std::fs::read_to_string(dir.path().join("a/protect_ghz_xy16s.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(",protection_factor"));
    assert_eq!(csv.lines().count(), 12);
    let c = triq(dir.path(), &["protect", "--config", "p.conf", "--seed", "43", "--out", "c"], &[]);
    assert!(c.status.success());
    assert_ne!(
        std::fs::read(dir.path().join("a/protect_ghz_xy16s_unprotected.csv")).unwrap(),
        std::fs::read(dir.path().join("c/protect_ghz_xy16s_unprotected.csv")).unwrap()
    );
}

#[test]
fn calibration_hits_target_and_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.conf", "bath.mode = correlated\nspins.t2_s = 0.53, 0.53, 0.53\nbath.tau_c_s = 0.01\n");
    let run = |n: &str, out: &str| {
        let o = triq(dir.path(), &["calibrate", "--config", "c.conf", "--seed", "5", "--out", out], &[("TRIQ_CALIBRATE__TRAJECTORIES", n)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o
    };
    let one = run("1000", "one");
    let two = run("2000", "two");
    let t: f64 = stdout_value(&one, "coherence_time_s").parse().unwrap();
    assert!((t - 0.53).abs() <= 0.01);
    let s1: f64 = stdout_value(&one, "bath_sigma_rad_s").parse().unwrap();
    let s2: f64 = stdout_value(&two, "bath_sigma_rad_s").parse().unwrap();
    assert!((s1 / s2 - 1.0).abs() < 0.03, "{s1} vs {s2}");
    // The emitted file is itself a valid config fragment.
    let text = std::fs::read_to_string(dir.path().join("one/calibration.conf")).unwrap();
    write(dir.path(), "d.conf", &format!("state = ghz\ngrid.t_end_s = 0.05\n{text}"));
    let d = triq(dir.path(), &["decay", "--config", "d.conf", "--seed", "1", "--out", "d"], &[("TRIQ_BATH__TRAJECTORIES", "4")]);
    assert!(d.status.success(), "{}", String::from_utf8_lossy(&d.stderr));

    let out = triq(
        dir.path(),
        &["calibrate", "--config", "c.conf", "--seed", "5"],
        &[("TRIQ_CALIBRATE__SIGMA_MIN_RAD_S", "100"), ("TRIQ_CALIBRATE__TRAJECTORIES", "50")],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tomography_runs_and_degrades_with_noise() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "t.conf", "state = ghz\n");
    let clean = triq(dir.path(), &["tomo", "--config", "t.conf", "--out", "clean"], &[]);
    assert!(clean.status.success());
    let f0: f64 = stdout_value(&clean, "fidelity").parse().unwrap();
    assert!(f0 > 0.999);
    let noisy = triq(dir.path(), &["tomo", "--config", "t.conf", "--seed", "3", "--out", "noisy"], &[("TRIQ_TOMO__NOISE_SIGMA", "0.05")]);
    let f1: f64 = stdout_value(&noisy, "fidelity").parse().unwrap();
    assert!(f1 < f0);
    // Noise without a seed is refused.
    let out = triq(dir.path(), &["tomo", "--config", "t.conf"], &[("TRIQ_TOMO__NOISE_SIGMA", "0.05")]);
    assert_eq!(out.status.code(), Some(2));

    // Drop one setting from the record file.
    let recs = std::fs::read_to_string(dir.path().join("clean/tomo_ghz_records.csv")).unwrap();
    let pruned: String = recs.lines().filter(|l| !l.starts_with("XXX,")).map(|l| format!("{l}\n")).collect();
    write(dir.path(), "pruned.csv", &pruned);
    let out = triq(dir.path(), &["tomo", "--config", "t.conf"], &[("TRIQ_TOMO__RECORDS", "pruned.csv")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("XXX"));
    write(dir.path(), "full.csv", &recs);
    let out = triq(dir.path(), &["tomo", "--config", "t.conf", "--out", "again"], &[("TRIQ_TOMO__RECORDS", "full.csv")]);
    assert!(out.status.success());
}

#[test]
fn unstable_step_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "u.conf", "state = ghz\ngrid.t_end_s = 3\ngrid.step_s = 1\nintegrator.dt_s = 1\n");
    let out = triq(dir.path(), &["decay", "--config", "u.conf"], &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn schedule_dump_lists_one_cycle() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.conf", "dd.sequence = kddxy\ndd.tau_s = 2.5e-3\n");
    let out = triq(dir.path(), &["schedule-dump", "--config", "s.conf", "--out", "."], &[]);
    assert!(out.status.success());
    assert_eq!(stdout_value(&out, "pulses_per_cycle"), "20");
    let table = std::fs::read_to_string(dir.path().join("schedule_kddxy.csv")).unwrap();
    assert_eq!(table.lines().count(), 21);
}
