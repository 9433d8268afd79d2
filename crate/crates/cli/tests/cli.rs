use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpdiff::io::RasterImage;
use cpdiff::FilterConfig;

fn cpdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpdiff")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn reported_iterations(o: &Output) -> usize {
    let text = stdout(o);
    let line = text.lines().find_map(|l| l.strip_prefix("iterations: ")).expect("iteration line");
    line.trim().parse().unwrap()
}

/// A small sphere run that finishes in seconds.
fn small_config(dir: &Path, filter: &str) -> PathBuf {
    let text = format!(
        r#"
[surface]
kind = "sphere"

[grid]
h = 0.1

[texture]
pattern = "stripes"
width = 256
height = 128
periods = 4

[noise]
model = "random_color_replacement"
strength = 0.2
seed = 3
palette = [[0.0], [1.0]]

[filter]
{filter}

[output]
dir = "{}"
diagnostics = "diag.csv"
"#,
        dir.join("out").display()
    );
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path
}

const EE: &str = "kind = \"edge_enhancing\"\nsigma = 1e-4\nrho = 4e-4\nlambda_rel = 4e-2\nstop_time = 2e-3";

#[test]
fn shipped_configs_report_their_iteration_counts() {
    let torus = cpdiff(&["filter", "--config", shipped("torus_stripes_ee.toml").to_str().unwrap(), "--dry-run"]);
    assert!(torus.status.success(), "{}", stderr(&torus));
    assert_eq!(reported_iterations(&torus), 52);

    // T = 5.9e-4 at h = 0.0125 gives T/τ = 25.17 and therefore 26 steps
    // under the ceiling rule; the reported count follows the library schedule.
    let wood = cpdiff(&["filter", "--config", shipped("sphere_wood_ee.toml").to_str().unwrap(), "--dry-run"]);
    assert!(wood.status.success(), "{}", stderr(&wood));
    let expected = FilterConfig::edge_enhancing(1e-4, 4e-4, 4e-2, 5.9e-4).schedule(0.0125).0;
    assert_eq!(reported_iterations(&wood), expected);

    for entry in fs::read_dir(shipped("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = cpdiff(&["filter", "--config", path.to_str().unwrap(), "--dry-run"]);
            assert!(o.status.success(), "{}: {}", path.display(), stderr(&o));
        }
    }
}

#[test]
fn config_errors_exit_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_config(dir.path(), EE);
    let text = fs::read_to_string(&path).unwrap();

    fs::write(&path, text.replace("h = 0.1", "h = -0.1")).unwrap();
    let o = cpdiff(&["filter", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid.h"), "{}", stderr(&o));

    fs::write(&path, text.replace("periods = 4", "periods = 4\nperiod = 5")).unwrap();
    let o = cpdiff(&["map", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("period"), "{}", stderr(&o));

    let o = cpdiff(&["filter", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = cpdiff(&["filter", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_and_io_failures_have_their_own_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_config(dir.path(), EE);
    let text = fs::read_to_string(&path).unwrap();

    // a constant image has no edges to adapt the thresholds to
    RasterImage::new(4, 4, 1, vec![0.5; 16]).unwrap().save_png(&dir.path().join("flat.png")).unwrap();
    let flat = text.replace("pattern = \"stripes\"", "image = \"flat.png\"");
    let flat = flat.split("[noise]").next().unwrap().to_string() + &flat[flat.find("[filter]").unwrap()..];
    fs::write(&path, flat).unwrap();
    let o = cpdiff(&["filter", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let mesh = text.replace("kind = \"sphere\"", "kind = \"mesh\"\nmesh = \"nowhere.obj\"");
    fs::write(&path, mesh).unwrap();
    let o = cpdiff(&["band", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn band_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_config(dir.path(), EE);
    let band = dir.path().join("out/small.band");
    assert!(cpdiff(&["band", "--config", path.to_str().unwrap()]).status.success());
    let first = fs::read(&band).unwrap();
    assert!(cpdiff(&["band", "--config", path.to_str().unwrap()]).status.success());
    assert_eq!(first, fs::read(&band).unwrap());
    assert!(cpdiff::BandedGrid::from_text(std::str::from_utf8(&first).unwrap()).is_ok());
}

#[test]
fn metrics_of_identical_inputs_is_infinite() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_config(dir.path(), EE);
    assert!(cpdiff(&["map", "--config", path.to_str().unwrap()]).status.success());
    for name in ["small_clean.field", "small_noisy.ply"] {
        let f = dir.path().join("out").join(name);
        let o = cpdiff(&["metrics", f.to_str().unwrap(), f.to_str().unwrap()]);
        assert!(o.status.success());
        assert!(stdout(&o).contains("psnr: inf dB"), "{}", stdout(&o));
    }
    let (a, b) = (dir.path().join("out/small_clean.field"), dir.path().join("out/small_noisy.field"));
    let o = cpdiff(&["metrics", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(stdout(&o).lines().any(|l| l.starts_with("psnr: ") && !l.contains("inf")));
}

#[test]
fn zero_steps_returns_the_noisy_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_config(dir.path(), EE);
    let o = cpdiff(&["filter", "--config", path.to_str().unwrap(), "--steps", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(reported_iterations(&o), 0);
    let out = dir.path().join("out");
    assert_eq!(fs::read(out.join("small_filtered.field")).unwrap(), fs::read(out.join("small_noisy.field")).unwrap());
}

#[test]
fn end_to_end_run_is_deterministic_and_denoises() {
    let dir = tempfile::tempdir().unwrap();
    let path = small_config(dir.path(), EE);
    let out = dir.path().join("out");
    let o = cpdiff(&["run", "--config", path.to_str().unwrap(), "--threads", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let expected = FilterConfig::edge_enhancing(1e-4, 4e-4, 4e-2, 2e-3).schedule(0.1).0;
    assert_eq!(reported_iterations(&o), expected);
    let psnr = |key: &str| -> f64 {
        let line = text.lines().find_map(|l| l.strip_prefix(key)).expect("psnr line");
        line.trim_end_matches(" dB").trim().parse().unwrap()
    };
    assert!(psnr("psnr filtered: ") > psnr("psnr noisy: "), "{text}");

    let names = ["small_filtered.ply", "small_filtered.field", "diag.csv"];
    let first: Vec<Vec<u8>> = names.iter().map(|n| fs::read(out.join(n)).unwrap()).collect();
    let again = cpdiff(&["filter", "--config", path.to_str().unwrap()]);
    assert!(again.status.success());
    for (n, bytes) in names.iter().zip(&first) {
        assert_eq!(&fs::read(out.join(n)).unwrap(), bytes, "{n} differs between runs");
    }

    let reseeded = cpdiff(&[
        "map",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "99",
        "--out",
        dir.path().join("other").to_str().unwrap(),
    ]);
    assert!(reseeded.status.success());
    assert_ne!(
        fs::read(dir.path().join("other/small_noisy.field")).unwrap(),
        fs::read(out.join("small_noisy.field")).unwrap()
    );
}
