use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qpwms::io::{load_image, load_spectrum, read_sinogram};
use qpwms::scenario::Scenario;
use qpwms_cli::commands::{compare, reconstruct, simulate, spectra_dir};
use qpwms_cli::{validate_scenario, ScenarioFile};
use qpwms::fitting::Scheme;

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn qpwms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpwms")).args(args).output().unwrap()
}

/// Bundled file with `edit` applied to its TOML tree, written to `dir`.
fn edited(name: &str, dir: &Path, edit: impl FnOnce(&mut toml::Table)) -> PathBuf {
    let mut t: toml::Table = fs::read_to_string(bundled(name)).unwrap().parse().unwrap();
    edit(&mut t);
    let path = dir.join(name);
    fs::write(&path, toml::to_string(&t).unwrap()).unwrap();
    path
}

fn table<'a>(t: &'a mut toml::Table, key: &str) -> &'a mut toml::Table {
    t.get_mut(key).unwrap().as_table_mut().unwrap()
}

fn load(path: &Path) -> ScenarioFile {
    ScenarioFile::load(path).unwrap()
}

#[test]
fn bundled_file_is_the_reference_scenario() {
    let file = load(&bundled("reference.toml"));
    assert_eq!(file.scenario().unwrap(), Scenario::reference());
    assert!(validate_scenario(&file).is_empty());
    assert!(validate_scenario(&load(&bundled("tomography.toml"))).is_empty());
}

#[test]
fn validate_exit_codes_and_messages() {
    let dir = tempfile::tempdir().unwrap();
    let ok = qpwms(&["validate", "--scenario", bundled("reference.toml").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));

    let fast = edited("reference.toml", dir.path(), |t| {
        table(t, "sched").insert("f_d_hz".into(), toml::Value::Float(31e6));
    });
    let out = qpwms(&["validate", "--scenario", fast.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sched.t_mux_s"), "{err}");
    assert!(err.contains("max f_d = 3.0303e7 Hz"), "{err}");

    let fractional = edited("reference.toml", dir.path(), |t| {
        table(t, "sched").insert("f_d_hz".into(), toml::Value::Float(250.5 * 62_500.0));
    });
    let out = qpwms(&["validate", "--scenario", fractional.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sched.f_d_hz: invalid configuration: non-integer samples per modulation period"), "{err}");

    // several problems are all listed
    let broken = edited("reference.toml", dir.path(), |t| {
        table(t, "sched").insert("n_beams".into(), toml::Value::Integer(3));
        table(t, "run").insert("runs".into(), toml::Value::Integer(0));
    });
    let v = validate_scenario(&load(&broken));
    let paths: Vec<&str> = v.iter().map(|v| v.path.as_str()).collect();
    assert!(paths.contains(&"beams") && paths.contains(&"run.runs"), "{paths:?}");
}

#[test]
fn parse_errors_carry_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(bundled("reference.toml")).unwrap();
    let bad = text.replace("t_mux_s = 33e-9", "t_mux_s = 33e-9\nt_mux_ns = 33");
    let line = bad.lines().position(|l| l.starts_with("t_mux_ns")).unwrap() + 1;
    let path = dir.path().join("bad.toml");
    fs::write(&path, bad).unwrap();
    let out = qpwms(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("bad.toml:{line}:1: unknown field `t_mux_ns`")), "{err}");

    let out = qpwms(&["validate", "--scenario", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn simulate_sample_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let scn = bundled("reference.toml");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("sim{k}"));
        let o = qpwms(&["simulate", "--scenario", scn.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(out);
    }
    for (scheme, rows) in [(Scheme::Qp, 125), (Scheme::Fp, 500)] {
        for beam in 1..=4 {
            let name = format!("beam_{beam:02}.csv");
            let a = spectra_dir(&outputs[0], scheme, 0).join(&name);
            let sp = load_spectrum(&a).unwrap();
            assert_eq!((sp.beam, sp.len()), (beam, rows));
            let b = spectra_dir(&outputs[1], scheme, 0).join(&name);
            assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        }
    }
    // both schemes share the noisy waveforms, so QP is FP on the beam's slots
    for beam in 1..=4 {
        let name = format!("beam_{beam:02}.csv");
        let fp = load_spectrum(spectra_dir(&outputs[0], Scheme::Fp, 0).join(&name)).unwrap();
        let qp = load_spectrum(spectra_dir(&outputs[0], Scheme::Qp, 0).join(&name)).unwrap();
        assert_eq!(fp.restrict_to(&qp.slots).unwrap(), qp);
    }
}

#[test]
fn simulate_runs_draw_fresh_noise() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited("reference.toml", dir.path(), |t| {
        table(t, "run").insert("scheme".into(), "qp".into());
        table(t, "run").insert("runs".into(), toml::Value::Integer(2));
    });
    let out = dir.path().join("out");
    let s = simulate(&load(&path), &out).unwrap();
    assert_eq!(s.files.len(), 8);
    let a = load_spectrum(spectra_dir(&out, Scheme::Qp, 0).join("beam_01.csv")).unwrap();
    let b = load_spectrum(spectra_dir(&out, Scheme::Qp, 1).join("beam_01.csv")).unwrap();
    assert_eq!(a.slots, b.slots);
    assert_ne!(a.values, b.values);
}

#[test]
fn noise_free_compare_reports_zero_differences() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited("reference.toml", dir.path(), |t| {
        t.remove("noise");
        table(t, "run").insert("runs".into(), toml::Value::Integer(2));
    });
    let out = dir.path().join("cmp");
    let stats = compare(&load(&path), &out).unwrap();
    assert_eq!(stats.max_mean_diff_pct(), 0.0);
    assert_eq!(stats.max_std_diff_pct(), 0.0);
    let csv = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 + 1);
    assert!(csv.lines().last().unwrap().starts_with("max,,,0,,,0"));

    let single = edited("reference.toml", dir.path(), |t| {
        table(t, "run").insert("runs".into(), toml::Value::Integer(1));
    });
    let o = qpwms(&["compare", "--scenario", single.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = qpwms(&[
        "compare", "--scenario", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--scheme", "qp",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reconstruct_full_chain_and_from_stored_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let file = load(&bundled("tomography.toml"));
    let single = dir.path().join("single");
    let rep = reconstruct(&file, None, &single).unwrap();
    assert_eq!(rep.image.values.len(), 225);
    assert!(rep.image.values.iter().all(|&v| v >= 0.0));
    let (px, py) = rep.peak_pixel;
    let (tx, ty) = rep.phantom_peak_pixel;
    assert!(px.abs_diff(tx) <= 1 && py.abs_diff(ty) <= 1);
    assert!(rep.relative_residual < 0.05);
    let sino = read_sinogram(fs::File::open(single.join("sinogram.csv")).unwrap()).unwrap();
    assert_eq!(sino.len(), 32);
    assert_eq!(load_image(&single, "image").unwrap(), rep.image);

    // separately simulated spectra give the same bytes
    let sim = dir.path().join("sim");
    simulate(&file, &sim).unwrap();
    let staged = dir.path().join("staged");
    let o = qpwms(&[
        "reconstruct",
        "--scenario",
        bundled("tomography.toml").to_str().unwrap(),
        "--spectra",
        spectra_dir(&sim, Scheme::Qp, 0).to_str().unwrap(),
        "--out",
        staged.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["image.csv", "image.json", "sinogram.csv"] {
        assert_eq!(fs::read(single.join(f)).unwrap(), fs::read(staged.join(f)).unwrap(), "{f}");
    }

    // FP spectra are not on the QP grid
    let fp = edited("tomography.toml", dir.path(), |t| {
        table(t, "run").insert("scheme".into(), "fp".into());
    });
    let fp_out = dir.path().join("fp");
    simulate(&load(&fp), &fp_out).unwrap();
    let o = qpwms(&[
        "reconstruct",
        "--scenario",
        bundled("tomography.toml").to_str().unwrap(),
        "--spectra",
        spectra_dir(&fp_out, Scheme::Fp, 0).to_str().unwrap(),
        "--out",
        dir.path().join("mismatch").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn zero_phantom_gives_zero_image() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited("tomography.toml", dir.path(), |t| {
        let tomo = table(t, "tomography");
        table(tomo, "phantom").insert("peak".into(), toml::Value::Float(0.0));
    });
    let rep = reconstruct(&load(&path), None, &dir.path().join("zero")).unwrap();
    assert!(rep.image.values.iter().all(|&v| v == 0.0));
    assert!(rep.absorbance.iter().all(|&a| a == 0.0));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = qpwms(&[
        "simulate",
        "--scenario",
        bundled("reference.toml").to_str().unwrap(),
        "--scheme",
        "qp",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}
