use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ckpd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckpd"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("ckpd runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn snapshots(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn preset_then_run_writes_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ckpd(&["preset", "mode1-2d", "--out", ".", "--scale", "coarse"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ckpd(
        &["run", "--config", "mode1-2d.toml", "--out", "snaps", "--steps", "130", "--snapshot-every", "50"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("eps_c="), "derived constants are echoed");
    assert!(stderr(&o).contains("STEP "), "progress lines on stderr");
    let dir = tmp.path().join("snaps");
    assert_eq!(
        snapshots(&dir),
        ["snap_00000000.csv", "snap_00000050.csv", "snap_00000100.csv"]
    );
    assert!(dir.join("report.json").exists());
    let first = fs::read_to_string(dir.join("snap_00000000.csv")).unwrap();
    assert!(first.lines().nth(1) == Some("body,X1,X2,X3,u1,u2,u3,v1,v2,v3,damage"));
}

#[test]
fn configured_output_directory_is_relative_to_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let sub = tmp.path().join("cfg");
    let o = ckpd(&["preset", "curved-bar-2d", "--out", "cfg", "--scale", "coarse"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ckpd(
        &["run", "--config", "cfg/curved-bar-2d.toml", "--steps", "2", "--snapshot-every", "1"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(snapshots(&sub.join("out/curved-bar-2d")).len(), 3);
}

#[test]
fn every_preset_validates() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["mode1-2d", "mode1-3d", "curved-bar-2d", "curved-bar-3d", "impact"] {
        for scale in ["full", "coarse"] {
            let o = ckpd(&["preset", name, "--out", scale, "--scale", scale], tmp.path());
            assert!(o.status.success(), "{name}: {}", stderr(&o));
            let cfg = format!("{scale}/{name}.toml");
            let o = ckpd(&["validate", "--config", &cfg], tmp.path());
            assert_eq!(o.status.code(), Some(0), "{name} {scale}: {}", stderr(&o));
            assert!(String::from_utf8_lossy(&o.stdout).contains("eps_c="));
        }
    }
}

#[test]
fn out_of_range_poisson_ratio_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    ckpd(&["preset", "mode1-2d", "--out", "."], tmp.path());
    let path = tmp.path().join("mode1-2d.toml");
    let text = fs::read_to_string(&path).unwrap().replace("poisson_ratio = 0.3", "poisson_ratio = 0.7");
    fs::write(&path, text).unwrap();
    for cmd in ["validate", "run"] {
        let o = ckpd(&[cmd, "--config", "mode1-2d.toml"], tmp.path());
        assert_eq!(o.status.code(), Some(1), "{cmd}");
        assert!(stderr(&o).contains("Poisson ratio out of range"), "{}", stderr(&o));
    }
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(ckpd(&["frobnicate"], tmp.path()).status.code(), Some(1));
    assert_eq!(ckpd(&["run", "--bogus"], tmp.path()).status.code(), Some(1));
    assert_eq!(ckpd(&["preset", "no-such-preset", "--out", "."], tmp.path()).status.code(), Some(1));
    assert_eq!(ckpd(&["validate", "--config", "missing.toml"], tmp.path()).status.code(), Some(1));
    assert_eq!(ckpd(&["--help"], tmp.path()).status.code(), Some(0));
}

#[test]
fn diverging_run_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    ckpd(&["preset", "mode1-2d", "--out", ".", "--scale", "coarse"], tmp.path());
    let o = ckpd(
        &["run", "--config", "mode1-2d.toml", "--out", "o", "--steps", "400", "--dt", "1e-3", "--snapshot-every", "0"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"), "{}", stderr(&o));
}

#[test]
fn thread_count_does_not_change_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    ckpd(&["preset", "impact", "--out", ".", "--scale", "coarse"], tmp.path());
    // A much faster shot reaches the disc within a few steps, so contact and
    // bond failure both happen inside the short run.
    let path = tmp.path().join("impact.toml");
    let text = fs::read_to_string(&path).unwrap().replace("velocity = [0.0, 0.0, -50.0]", "velocity = [0.0, 0.0, -2000.0]");
    fs::write(&path, text).unwrap();
    let mut runs = Vec::new();
    for threads in ["1", "8"] {
        let out = format!("t{threads}");
        let o = ckpd(
            &["run", "--config", "impact.toml", "--out", &out, "--threads", threads, "--steps", "60", "--snapshot-every", "20"],
            tmp.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let dir = tmp.path().join(&out);
        let files: Vec<Vec<u8>> = snapshots(&dir).iter().map(|n| fs::read(dir.join(n)).unwrap()).collect();
        runs.push(files);
    }
    assert_eq!(runs[0].len(), 4);
    assert!(runs[0] == runs[1], "snapshots differ between 1 and 8 threads");
}

#[test]
fn shipped_configs_match_the_presets() {
    use ckpd_core::scenario::{Preset, Scale, ScenarioConfig};
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for p in Preset::ALL {
        let path = dir.join(format!("{p}.toml"));
        let cfg = ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(cfg, p.config(Scale::Full), "{} differs from the preset", path.display());
    }
}
