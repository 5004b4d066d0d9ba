use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evc_core::io::{read_f0, read_features, write_f0, write_features, F0Contour, FeatureSequence};
use evc_core::vawgan::{load_model, SavedModel, VawGan};
use serde_json::Value;
use tempfile::TempDir;

fn evc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evc")).args(args).output().expect("evc runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", stderr(out)))
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

fn small_toy(dir: &Path, seed: &str) -> PathBuf {
    let out = dir.join("toy");
    let o = evc(&[
        "--seed", seed, "gen-toy", "--out-dir", p(&out), "--n-utts", "3", "--n-frames", "32", "--dim", "8",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

fn train(corpus: &Path, pipeline: &str, model: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["train", pipeline, "--corpus", p(corpus), "--model-dir", p(model)];
    args.extend_from_slice(extra);
    evc(&args)
}

fn contour_csv(dir: &Path, name: &str, rows: &[(f64, bool)]) -> PathBuf {
    let path = dir.join(name);
    let text: String = rows
        .iter()
        .enumerate()
        .map(|(i, (hz, v))| format!("{i},{hz},{}\n", u8::from(*v)))
        .collect();
    fs::write(&path, format!("frame,hz,voiced\n{text}")).unwrap();
    path
}

#[test]
fn help_documents_every_subcommand() {
    let flags: [(&str, &[&str]); 7] = [
        ("f0prep", &["--out-dir", "--shared-stats", "--stats", "--verify", "--frame-shift-ms"]),
        ("cwt", &["--out-dir", "--n-scales", "--s-min", "--s-max", "--tau0-ms"]),
        ("icwt", &["--out-dir", "--verify"]),
        ("gen-toy", &["--out-dir", "--n-utts", "--n-frames", "--dim", "--delta", "--noise", "--n-classes"]),
        ("train", &["--corpus", "--toy", "--model-dir", "--preset", "--lr", "--epochs", "--batch", "--clip"]),
        ("convert", &["--spectrum-model", "--prosody-model", "--corpus", "--target", "--f0-stats"]),
        ("eval", &["--ref-dir", "--conv-dir", "--allow-partial", "--report", "--csv", "--f0-domain"]),
    ];
    let top = evc(&["--help"]);
    assert_eq!(code(&top), 0);
    for (sub, expected) in flags {
        let out = evc(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub}");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(String::from_utf8_lossy(&top.stdout).contains(sub));
        for flag in expected.iter().chain(&["--seed", "--jobs", "--config"]) {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }
}

#[test]
fn f0prep_normalizes_and_verifies() {
    let dir = TempDir::new().unwrap();
    let rows: Vec<(f64, bool)> = (0..50)
        .map(|i| (120.0 + 30.0 * (i as f64 / 7.0).sin(), !(10..15).contains(&i)))
        .map(|(hz, v)| (if v { hz } else { 0.0 }, v))
        .collect();
    let input = contour_csv(dir.path(), "utt.csv", &rows);
    let out_dir = dir.path().join("out");
    let o = evc(&["f0prep", p(&input), "--out-dir", p(&out_dir), "--verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(json(&o)[0]["round_trip_error"].as_f64().unwrap() <= 1e-9);

    let track: FeatureSequence = read_features(&out_dir.join("utt.lf0.evcf")).unwrap();
    assert_eq!((track.n_frames(), track.dim()), (50, 1));
    let mean = track.data().iter().sum::<f64>() / 50.0;
    assert!(mean.abs() < 1e-6);
    let stats: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("utt.lf0.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["log_base"], "e");
    assert!(stats["std"].as_f64().unwrap() > 0.0);

    // identical inputs, identical bytes
    let again = dir.path().join("again");
    assert_eq!(code(&evc(&["f0prep", p(&input), "--out-dir", p(&again), "--jobs", "1"])), 0);
    for f in ["utt.lf0.evcf", "utt.lf0.stats.json"] {
        assert_eq!(fs::read(out_dir.join(f)).unwrap(), fs::read(again.join(f)).unwrap());
    }
}

#[test]
fn f0prep_errors_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let silent = contour_csv(dir.path(), "silent.csv", &[(0.0, false); 20]);
    let o = evc(&["f0prep", p(&silent), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("NoVoicedFrames"), "{}", stderr(&o));

    let o = evc(&["f0prep", p(&dir.path().join("missing.evcf")), "--out-dir", p(&dir.path().join("o"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("missing.evcf"));
}

#[test]
fn f0prep_shared_stats_pool_inputs() {
    let dir = TempDir::new().unwrap();
    let low = contour_csv(dir.path(), "low.csv", &[(100.0, true), (110.0, true), (105.0, true)]);
    let high = contour_csv(dir.path(), "high.csv", &[(200.0, true), (220.0, true), (210.0, true)]);
    let o = evc(&["f0prep", p(&low), p(&high), "--out-dir", p(&dir.path().join("o")), "--shared-stats"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = json(&o);
    assert_eq!(rows[0]["mean"], rows[1]["mean"]);
    let pooled = [100.0f64, 110.0, 105.0, 200.0, 220.0, 210.0].map(f64::ln);
    let mean = pooled.iter().sum::<f64>() / 6.0;
    assert!((rows[0]["mean"].as_f64().unwrap() - mean).abs() < 1e-12);
}

fn sine_track(dir: &Path) -> PathBuf {
    let x: Vec<f64> = (0..1000)
        .map(|t| {
            [10.0, 50.0, 200.0]
                .iter()
                .map(|per: &f64| (std::f64::consts::TAU * t as f64 / per).sin())
                .sum()
        })
        .collect();
    let path = dir.join("sines.lf0.evcf");
    write_features(&path, &FeatureSequence::new(x, 1000, 1, 5.0).unwrap()).unwrap();
    path
}

#[test]
fn cwt_then_icwt_verifies_on_sine_fixture() {
    let dir = TempDir::new().unwrap();
    let track = sine_track(dir.path());
    let cwt_dir = dir.path().join("cwt");
    let o = evc(&["cwt", p(&track), "--out-dir", p(&cwt_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sc: FeatureSequence = read_features(&cwt_dir.join("sines.cwt.evcf")).unwrap();
    assert_eq!((sc.n_frames(), sc.dim()), (1000, 513));

    let o = evc(&["icwt", p(&cwt_dir.join("sines.cwt.evcf")), "--out-dir", p(&dir.path().join("back")), "--verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(json(&o)[0]["relative_rmse"].as_f64().unwrap() <= 0.05);
    let back: FeatureSequence = read_features(&dir.path().join("back/sines.icwt.evcf")).unwrap();
    assert_eq!(back.n_frames(), 1000);
}

#[test]
fn cwt_config_and_sidecar_errors() {
    let dir = TempDir::new().unwrap();
    let track = sine_track(dir.path());
    let o = evc(&["cwt", p(&track), "--out-dir", p(&dir.path().join("c1")), "--n-scales", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ConfigError"), "{}", stderr(&o));

    let cwt_dir = dir.path().join("c");
    assert_eq!(code(&evc(&["cwt", p(&track), "--out-dir", p(&cwt_dir), "--n-scales", "33"])), 0);
    let side = cwt_dir.join("sines.cwt.json");
    let mut meta: Value = serde_json::from_str(&fs::read_to_string(&side).unwrap()).unwrap();
    meta["wavelet"]["n_scales"] = 34.into();
    fs::write(&side, meta.to_string()).unwrap();
    let o = evc(&["icwt", p(&cwt_dir.join("sines.cwt.evcf")), "--out-dir", p(&dir.path().join("b"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ShapeError"), "{}", stderr(&o));
}

#[test]
fn gen_toy_is_seeded() {
    let dir = TempDir::new().unwrap();
    let a = small_toy(&dir.path().join("a"), "5");
    let b = small_toy(&dir.path().join("b"), "5");
    let c = small_toy(&dir.path().join("c"), "6");
    let corpus: Value = serde_json::from_str(&fs::read_to_string(a.join("corpus.json")).unwrap()).unwrap();
    assert_eq!(corpus["utterances"].as_array().unwrap().len(), 6);
    assert_eq!(fs::read(a.join("a_000.evcf")).unwrap(), fs::read(b.join("a_000.evcf")).unwrap());
    assert_ne!(fs::read(a.join("a_000.evcf")).unwrap(), fs::read(c.join("a_000.evcf")).unwrap());
    let f0 = read_f0(&a.join("b_001.f0.evcf"), 5.0).unwrap();
    assert!(f0.voiced().iter().any(|v| !v));
}

#[test]
fn training_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let toy = small_toy(dir.path(), "1");
    let history = |model: &str, seed: &str| {
        let m = dir.path().join(model);
        let o = train(&toy, "spectrum", &m, &["--seed", seed, "--epochs", "3", "--batch", "16"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read(m.join("history.json")).unwrap()
    };
    let a = history("m1", "7");
    assert_eq!(a, history("m2", "7"));
    assert_ne!(a, history("m3", "8"));
    let epochs: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(epochs.as_array().unwrap().len(), 3);
}

#[test]
fn zero_learning_rate_leaves_the_initialization() {
    let dir = TempDir::new().unwrap();
    let toy = small_toy(dir.path(), "1");
    let m = dir.path().join("m");
    let o = train(&toy, "spectrum", &m, &["--lr", "0", "--epochs", "2", "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let SavedModel::Spectrum(model) = load_model(&m).unwrap() else {
        panic!("wrong kind");
    };
    let init = VawGan::init(model.gan.spec.clone(), model.gan.weights, model.gan.config).unwrap();
    for (saved, fresh) in [
        (&model.gan.encoder, &init.encoder),
        (&model.gan.decoder, &init.decoder),
        (&model.gan.critic, &init.critic),
    ] {
        for (a, b) in saved.tensors.iter().zip(&fresh.tensors) {
            assert!(a.data().iter().zip(b.data()).all(|(x, y)| *x == *y as f32 as f64));
        }
    }
}

#[test]
fn bad_presets_and_configs_exit_2() {
    let dir = TempDir::new().unwrap();
    let toy = small_toy(dir.path(), "1");
    let o = train(&toy, "spectrum", &dir.path().join("m"), &["--preset", "huge"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown preset"));

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"preset": "tiny"}"#).unwrap();
    let o = evc(&["--config", p(&cfg), "gen-toy", "--out-dir", p(&dir.path().join("t"))]);
    assert_eq!(code(&o), 2);

    fs::write(&cfg, r#"{"paths": {"models": "x", "reports": "x"}}"#).unwrap();
    let o = evc(&["--config", p(&cfg), "gen-toy", "--out-dir", p(&dir.path().join("t"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("more than one role"));

    // the full-size network needs 513-dim frames
    let o = train(&toy, "spectrum", &dir.path().join("m"), &["--preset", "full_scale", "--epochs", "1"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = TempDir::new().unwrap();
    let toy = small_toy(dir.path(), "1");
    let models = dir.path().join("models");
    let cfg = dir.path().join("cfg.json");
    let text = serde_json::json!({
        "paths": {"features": toy.join("corpus.json"), "models": models},
        "optimizer": {"epochs": 2, "batch": 16},
        "hidden": 12,
        "latent": 3,
        "seed": 9
    });
    fs::write(&cfg, text.to_string()).unwrap();
    let o = evc(&["--config", p(&cfg), "train", "spectrum"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["seed"], 9);
    let SavedModel::Spectrum(m) = load_model(&models.join("spectrum")).unwrap() else {
        panic!("wrong kind");
    };
    assert_eq!((m.gan.spec.latent_dim, m.gan.history.len()), (3, 2));
}

#[test]
fn divergence_exits_3() {
    let dir = TempDir::new().unwrap();
    let toy = small_toy(dir.path(), "1");
    let o = train(&toy, "spectrum", &dir.path().join("m"), &["--lr", "1e6", "--epochs", "50"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("epoch"));
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

#[test]
fn identity_conversion_matches_reconstruction() {
    let dir = TempDir::new().unwrap();
    let toy = small_toy(dir.path(), "2");
    let (sm, pm) = (dir.path().join("spectrum"), dir.path().join("prosody"));
    let o = train(&toy, "spectrum", &sm, &["--epochs", "40", "--batch", "32", "--recon-weight", "16"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = train(&toy, "prosody", &pm, &["--epochs", "2", "--hidden", "16", "--latent", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let feats = toy.join("a_001.evcf");
    let f0 = toy.join("a_001.f0.evcf");
    let out = dir.path().join("conv");
    let o = evc(&[
        "convert", "--spectrum-model", p(&sm), "--prosody-model", p(&pm), "--features", p(&feats), "--f0", p(&f0),
        "--source", "0", "--target", "0", "--out-dir", p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let converted: FeatureSequence = read_features(&out.join("a_001.evcf")).unwrap();
    let conv_f0 = read_f0(&out.join("a_001.f0.evcf"), 5.0).unwrap();
    let src_f0 = read_f0(&f0, 5.0).unwrap();
    assert_eq!(conv_f0.voiced(), src_f0.voiced());

    let SavedModel::Spectrum(model) = load_model(&sm).unwrap() else {
        panic!("wrong kind");
    };
    let x: FeatureSequence = read_features(&feats).unwrap();
    assert_eq!(converted.n_frames(), x.n_frames());
    let hz = evc_core::f0prep::interpolate_unvoiced(&src_f0).unwrap().into_values();
    let cond = model.f0_condition_values(&hz).unwrap();
    let (z, _) = model.gan.encode(x.data()).unwrap();
    let recon = model.gan.decode(&z, &vec![0; x.n_frames()], &cond).unwrap();
    let err = mse(x.data(), &recon);
    let gap = mse(converted.data(), &recon);
    assert!(gap < 1.5 * err, "identity gap {gap} vs reconstruction error {err}");
}

#[test]
fn convert_guards() {
    let dir = TempDir::new().unwrap();
    let toy = small_toy(dir.path(), "1");
    let sm = dir.path().join("spectrum");
    assert_eq!(code(&train(&toy, "spectrum", &sm, &["--epochs", "1"])), 0);
    let base = |prosody: &Path, feats: &Path| {
        evc(&[
            "convert", "--spectrum-model", p(&sm), "--prosody-model", p(prosody), "--features", p(feats), "--f0",
            p(&toy.join("a_000.f0.evcf")), "--source", "0", "--target", "1", "--out-dir",
            p(&dir.path().join("out")),
        ])
    };
    let o = base(&dir.path().join("nowhere"), &toy.join("a_000.evcf"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("StateError"), "{}", stderr(&o));

    let pm = dir.path().join("prosody");
    assert_eq!(code(&train(&toy, "prosody", &pm, &["--epochs", "1", "--hidden", "8", "--latent", "2"])), 0);
    let wide = dir.path().join("wide.evcf");
    write_features(&wide, &FeatureSequence::new(vec![0.1; 32 * 9], 32, 9, 5.0).unwrap()).unwrap();
    let o = base(&pm, &wide);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ShapeError"), "{}", stderr(&o));
}

fn eval_dir(root: &Path, name: &str, utts: &[(&str, f64)]) -> PathBuf {
    let dir = root.join(name);
    fs::create_dir_all(&dir).unwrap();
    for (utt, offset) in utts {
        let mcep: Vec<f64> = (0..20 * 5).map(|k| (k as f64 * 0.37).sin() + offset).collect();
        write_features(&dir.join(format!("{utt}.mcep.evcf")), &FeatureSequence::new(mcep, 20, 5, 5.0).unwrap()).unwrap();
        let sp: Vec<f64> = (0..20 * 6).map(|k| 1.0 + (k as f64 * 0.11).cos().abs() + offset.abs()).collect();
        write_features(&dir.join(format!("{utt}.sp.evcf")), &FeatureSequence::new(sp, 20, 6, 5.0).unwrap()).unwrap();
        let hz: Vec<f64> = (0..20).map(|t| 150.0 + 20.0 * (t as f64 / 3.0).sin() + 10.0 * offset).collect();
        write_f0(&dir.join(format!("{utt}.f0.evcf")), &F0Contour::from_hz(hz, 5.0).unwrap()).unwrap();
    }
    dir
}

#[test]
fn eval_identity_and_pairing() {
    let dir = TempDir::new().unwrap();
    let refs = eval_dir(dir.path(), "ref", &[("u1", 0.0), ("u2", 0.5)]);
    let o = evc(&["eval", "--ref-dir", p(&refs), "--conv-dir", p(&refs), "--csv", p(&dir.path().join("r.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(&o);
    for row in report["utterances"].as_array().unwrap() {
        assert_eq!(row["mcd_db"], 0.0);
        assert_eq!(row["lsd_db"], 0.0);
        assert_eq!(row["f0_rmse_hz"], 0.0);
        assert!((row["pcc"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    let csv = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(csv.starts_with("utt_id,mcd_db,lsd_db,f0_rmse_hz,pcc,n_frames_compared\n"));
    assert_eq!(csv.lines().count(), 4);

    let conv = eval_dir(dir.path(), "conv", &[("u1", 0.1)]);
    let o = evc(&["eval", "--ref-dir", p(&refs), "--conv-dir", p(&conv)]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("u2"));

    let o = evc(&["eval", "--ref-dir", p(&refs), "--conv-dir", p(&conv), "--allow-partial"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("u2"), "expected a warning naming u2");
    let report = json(&o);
    assert_eq!(report["utterances"].as_array().unwrap().len(), 1);
    assert_eq!(report["mean"]["mcd_db"], report["utterances"][0]["mcd_db"]);
    assert!(report["mean"]["mcd_db"].as_f64().unwrap() > 0.0);

    let (e1, e2) = (dir.path().join("e1"), dir.path().join("e2"));
    fs::create_dir_all(&e1).unwrap();
    fs::create_dir_all(&e2).unwrap();
    assert_eq!(code(&evc(&["eval", "--ref-dir", p(&e1), "--conv-dir", p(&e2)])), 4);
}
