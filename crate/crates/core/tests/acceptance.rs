//! End-to-end property checks. Runs as a plain binary so every check prints
//! its PASS/FAIL line even when the others fail.

use std::path::Path;
use std::time::{Duration, Instant};

use evc_core::autodiff::{concat, grad_check_many, AdError, Tape, Tensor, Var};
use evc_core::cwt::{cwt_forward, cwt_inverse, cwt_values, relative_rmse, WaveletConfig};
use evc_core::f0prep::{denormalize, interpolate_unvoiced, to_log, znorm, Stage};
use evc_core::io::{decode_evcf, encode_evcf, read_features, write_atomic, F0Contour, IoError};
use evc_core::metrics::{dtw_align, evaluate, lsd, AlignmentPath, EvalOptions, UtteranceFeatures};
use evc_core::vawgan::{
    convert, critic_losses_var, gen_toy_dataset, kl_to_standard_normal, latent_emotion_probe, prosody_examples,
    reparameterize, spectrum_examples, train_pipeline, vae_objective_var, CondDims, Examples, F0Condition,
    GaussianPosterior, Layer, LossWeights, NetworkSpec, ProbeConfig, ProsodyModel, SpectrumModel, ToyDatasetSpec,
    TrainConfig, VawGan,
};
use evc_core::{FeatureSequence, FeatureSequence32, LogF0Track, SeededRng};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome, u64);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform_tensor(rng: &mut SeededRng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.uniform_range(lo, hi))
}

// ---------------------------------------------------------------- KL

fn kl_analytics() -> Outcome {
    let zero = kl_to_standard_normal(&GaussianPosterior::standard(1));
    ensure(zero == 0.0, || format!("KL(N(0,1)||N(0,1)) = {zero:e}"))?;
    let one = kl_to_standard_normal(&GaussianPosterior::new(vec![1.0], vec![0.0]).map_err(|e| e.to_string())?);
    ensure((one - 0.5).abs() <= 1e-12, || format!("KL(N(1,1)||N(0,1)) = {one}"))?;

    let mut rng = SeededRng::new(11);
    let dim = 4;
    let mean: Vec<f64> = (0..dim).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let log_var: Vec<f64> = (0..dim).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let post = GaussianPosterior::new(mean.clone(), log_var.clone()).map_err(|e| e.to_string())?;
    let closed = kl_to_standard_normal(&post);

    // log q(z) - log p(z); the 2*pi terms cancel
    let n = 1_000_000;
    let (mut s, mut ss) = (0.0, 0.0);
    for _ in 0..n {
        let z = reparameterize(&post, &mut rng);
        let r: f64 = (0..dim)
            .map(|d| {
                let u = z[d] - mean[d];
                -0.5 * log_var[d] - 0.5 * u * u / log_var[d].exp() + 0.5 * z[d] * z[d]
            })
            .sum();
        s += r;
        ss += r * r;
    }
    let est = s / n as f64;
    let se = ((ss / n as f64 - est * est) / n as f64).sqrt();
    let z = (est - closed).abs() / se;
    ensure(z <= 3.0, || format!("closed {closed:.6} vs Monte-Carlo {est:.6} ({z:.2} SE)"))?;
    Ok(format!("closed {closed:.6}, Monte-Carlo {est:.6} +- {se:.1e} ({z:.2} SE)"))
}

// ---------------------------------------------------------- gradients

type Loss = for<'t> fn(&'t Tape, &[Var<'t>], &[Tensor]) -> Result<Var<'t>, AdError>;

struct OpCase {
    name: &'static str,
    shapes: &'static [&'static [usize]],
    lo: f64,
    hi: f64,
    /// Keeps inputs at least this far from zero.
    kink: f64,
    loss: Loss,
}

/// Weighted sum so every output element gets a distinct upstream gradient.
fn contract<'t>(tape: &'t Tape, v: Var<'t>, w: &Tensor) -> Result<Var<'t>, AdError> {
    let shape = v.shape();
    let n: usize = shape.iter().product();
    let w = Tensor::new(shape, w.data()[..n].to_vec())?;
    v.mul(tape.constant(w))?.sum()
}

fn op_cases() -> Vec<OpCase> {
    fn case(name: &'static str, shapes: &'static [&'static [usize]], loss: Loss) -> OpCase {
        OpCase {
            name,
            shapes,
            lo: -2.0,
            hi: 2.0,
            kink: 0.0,
            loss,
        }
    }
    vec![
        case("add", &[&[3, 4], &[3, 4]], |t, v, w| contract(t, v[0].add(v[1])?, &w[0])),
        case("sub", &[&[3, 4], &[3, 4]], |t, v, w| contract(t, v[0].sub(v[1])?, &w[0])),
        case("mul", &[&[3, 4], &[3, 4]], |t, v, w| contract(t, v[0].mul(v[1])?, &w[0])),
        case("mul_scalar", &[&[3, 4], &[]], |t, v, w| contract(t, v[0].mul(v[1])?, &w[0])),
        case("neg", &[&[5]], |t, v, w| contract(t, v[0].neg()?, &w[0])),
        case("scale", &[&[5]], |t, v, w| contract(t, v[0].scale(-1.7)?, &w[0])),
        case("add_scalar", &[&[5]], |t, v, w| contract(t, v[0].add_scalar(0.3)?.square()?, &w[0])),
        case("add_bias", &[&[3, 4], &[4]], |t, v, w| contract(t, v[0].add_bias(v[1])?, &w[0])),
        case("matmul", &[&[3, 4], &[4, 2]], |t, v, w| contract(t, v[0].matmul(v[1])?, &w[0])),
        case("conv1d", &[&[2, 3, 11], &[4, 3, 3], &[4]], |t, v, w| {
            contract(t, v[0].conv1d(v[1], Some(v[2]), 2)?, &w[0])
        }),
        case("conv1d_unbatched", &[&[3, 9], &[2, 3, 4]], |t, v, w| {
            contract(t, v[0].conv1d(v[1], None, 1)?, &w[0])
        }),
        case("pad1d", &[&[2, 3, 5]], |t, v, w| contract(t, v[0].pad1d(2, 1)?, &w[0])),
        case("upsample1d", &[&[2, 3, 5]], |t, v, w| contract(t, v[0].upsample1d(3)?, &w[0])),
        OpCase {
            kink: 0.05,
            ..case("leaky_relu", &[&[4, 5]], |t, v, w| contract(t, v[0].leaky_relu(0.2)?, &w[0]))
        },
        case("exp", &[&[6]], |t, v, w| contract(t, v[0].exp()?, &w[0])),
        OpCase {
            lo: 0.2,
            hi: 3.0,
            ..case("log", &[&[6]], |t, v, w| contract(t, v[0].log()?, &w[0]))
        },
        case("square", &[&[6]], |t, v, w| contract(t, v[0].square()?, &w[0])),
        case("sum", &[&[3, 4]], |_, v, _| v[0].square()?.sum()),
        case("mean", &[&[3, 4]], |_, v, _| v[0].exp()?.mean()),
        case("reshape", &[&[3, 4]], |t, v, w| contract(t, v[0].reshape(&[2, 6])?, &w[0])),
        case("narrow", &[&[3, 5]], |t, v, w| contract(t, v[0].narrow(1, 1, 3)?, &w[0])),
        case("concat_rows", &[&[2, 3], &[4, 3]], |t, v, w| contract(t, concat(&[v[0], v[1]], 0)?, &w[0])),
        case("concat_cols", &[&[3, 2], &[3, 1], &[3, 4]], |t, v, w| {
            contract(t, concat(&[v[0], v[1], v[2]], 1)?, &w[0])
        }),
    ]
}

fn gradient_suite() -> Outcome {
    const POINTS: usize = 20;
    let mut rng = SeededRng::new(22);
    let mut worst_op = (0.0f64, "");
    for case in op_cases() {
        for _ in 0..POINTS {
            let inputs: Vec<Tensor> = case
                .shapes
                .iter()
                .map(|s| {
                    Tensor::from_fn(s, |_| loop {
                        let v = rng.uniform_range(case.lo, case.hi);
                        if v.abs() >= case.kink {
                            break v;
                        }
                    })
                })
                .collect();
            let weights = vec![uniform_tensor(&mut rng, &[256], -1.0, 1.0)];
            let loss = case.loss;
            let err = grad_check_many(|tape, vars| loss(tape, vars, &weights), &inputs, 1e-5)
                .map_err(|e| format!("{}: {e}", case.name))?;
            ensure(err <= 1e-5, || format!("{} grad error {err:.2e}", case.name))?;
            if err > worst_op.0 {
                worst_op = (err, case.name);
            }
        }
    }

    let w = LossWeights {
        alpha: 0.7,
        recon_weight: 3.0,
    };
    let mut worst_obj = (0.0f64, "");
    for _ in 0..POINTS {
        let inputs = vec![
            uniform_tensor(&mut rng, &[4, 6], -2.0, 2.0),
            uniform_tensor(&mut rng, &[4, 6], -2.0, 2.0),
            uniform_tensor(&mut rng, &[4, 3], -2.0, 2.0),
            uniform_tensor(&mut rng, &[4, 3], -2.0, 2.0),
        ];
        let err = grad_check_many(
            |_, v| Ok(vae_objective_var(v[0], v[1], v[2], v[3], &w)?.0),
            &inputs,
            1e-5,
        )
        .map_err(|e| e.to_string())?;
        ensure(err <= 1e-6, || format!("vae_objective grad error {err:.2e}"))?;
        if err > worst_obj.0 {
            worst_obj = (err, "vae_objective");
        }

        let scores = vec![
            uniform_tensor(&mut rng, &[5, 1], -2.0, 2.0),
            uniform_tensor(&mut rng, &[5, 1], -2.0, 2.0),
        ];
        for (which, pick) in [("critic", 0usize), ("gen_adv", 1)] {
            let err = grad_check_many(
                |_, v| {
                    let (c, g) = critic_losses_var(v[0], v[1], &w)?;
                    Ok(if pick == 0 { c } else { g })
                },
                &scores,
                1e-5,
            )
            .map_err(|e| e.to_string())?;
            ensure(err <= 1e-6, || format!("critic_losses ({which}) grad error {err:.2e}"))?;
            if err > worst_obj.0 {
                worst_obj = (err, "critic_losses");
            }
        }
    }
    Ok(format!(
        "worst op {} {:.1e}, worst objective {} {:.1e}",
        worst_op.1, worst_op.0, worst_obj.1, worst_obj.0
    ))
}

// ---------------------------------------------------------------- CWT

fn cwt_round_trip() -> Outcome {
    let n = 1000;
    let x: Vec<f64> = (0..n)
        .map(|t| {
            [10.0, 50.0, 200.0]
                .iter()
                .map(|p: &f64| (std::f64::consts::TAU * t as f64 / p).sin())
                .sum()
        })
        .collect();
    let cfg = WaveletConfig::for_length(n);
    let track = LogF0Track::from_parts(x.clone(), 5.0, Stage::Normalized);
    let back = cwt_inverse(&cwt_forward(&track, &cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let rel = relative_rmse(back.values(), &x);
    ensure(rel <= 0.05, || format!("relative RMSE {rel:.4}"))?;

    let constant = cwt_values(&vec![1.7f64; n], &cfg).map_err(|e| e.to_string())?;
    let peak = constant.coeffs().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    ensure(peak < 1e-9, || format!("constant input coefficient {peak:.2e}"))?;
    Ok(format!("relative RMSE {:.2}%, constant-input peak {peak:.1e}", 100.0 * rel))
}

// ----------------------------------------------------------------- F0

/// Linear fill between voiced neighbours, edge hold, by direct search.
fn interpolation_oracle(values: &[f64], voiced: &[bool]) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let left = (0..=i).rev().find(|&k| voiced[k]);
            let right = (i..values.len()).find(|&k| voiced[k]);
            match (left, right) {
                (Some(a), Some(b)) if a == b => values[a],
                (Some(a), Some(b)) => values[a] + (values[b] - values[a]) * (i - a) as f64 / (b - a) as f64,
                (Some(a), None) => values[a],
                (None, Some(b)) => values[b],
                (None, None) => unreachable!("contours have voiced frames"),
            }
        })
        .collect()
}

fn f0_round_trip() -> Outcome {
    let mut rng = SeededRng::new(44);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = 20 + rng.below(300);
        let mut voiced: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.7).collect();
        voiced[rng.below(n)] = true;
        let mut values: Vec<f64> = voiced
            .iter()
            .map(|&v| if v { rng.uniform_range(60.0, 400.0) } else { 0.0 })
            .collect();
        // at least two distinct voiced values so the variance is positive
        let extra = rng.below(n);
        voiced[extra] = true;
        values[extra] = 500.0;
        let contour = F0Contour::new(values.clone(), voiced.clone(), 5.0).map_err(|e| e.to_string())?;

        let interp = interpolate_unvoiced(&contour).map_err(|e| e.to_string())?;
        let oracle = interpolation_oracle(&values, &voiced);
        for (a, b) in interp.values().iter().zip(&oracle) {
            ensure((a - b).abs() <= 1e-12 * b, || format!("interpolation {a} vs oracle {b}"))?;
        }
        let (norm, stats) = znorm(&to_log(&interp).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let back = denormalize(&norm, stats).map_err(|e| e.to_string())?;
        for (a, b) in back.iter().zip(interp.values()) {
            worst = worst.max((a - b).abs() / b);
        }
    }
    ensure(worst <= 1e-9, || format!("worst relative error {worst:.2e}"))?;
    Ok(format!("worst relative error {worst:.1e}"))
}

// ------------------------------------------------------------ metrics

fn seq(rows: &[Vec<f64>]) -> FeatureSequence {
    FeatureSequence::from_rows(rows, 5.0).expect("valid rows")
}

/// Prefix tree of every monotone path from (0,0) to (n-1,m-1); nodes are
/// stored parent-first so costs accumulate in one forward sweep.
struct PathTree {
    parent: Vec<usize>,
    cell: Vec<usize>,
    leaves: Vec<usize>,
}

impl PathTree {
    fn new(n: usize, m: usize) -> Self {
        let mut t = PathTree {
            parent: vec![usize::MAX],
            cell: vec![0],
            leaves: Vec::new(),
        };
        let mut stack = vec![(0usize, 0usize, 0usize)];
        while let Some((node, i, j)) = stack.pop() {
            if (i, j) == (n - 1, m - 1) {
                t.leaves.push(node);
                continue;
            }
            for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
                let (a, b) = (i + di, j + dj);
                if a < n && b < m {
                    t.parent.push(node);
                    t.cell.push(a * m + b);
                    stack.push((t.parent.len() - 1, a, b));
                }
            }
        }
        t
    }

    fn min_cost(&self, dist: &[f64], acc: &mut Vec<f64>) -> f64 {
        acc.clear();
        acc.push(dist[0]);
        for k in 1..self.parent.len() {
            acc.push(acc[self.parent[k]] + dist[self.cell[k]]);
        }
        self.leaves.iter().map(|&l| acc[l]).fold(f64::INFINITY, f64::min)
    }
}

fn all_sequences(max_len: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s| {
                (0..3).map(move |v| {
                    let mut t = s.clone();
                    t.push(v as f64);
                    t
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn dtw_exhaustive() -> Result<usize, String> {
    let seqs = all_sequences(6);
    let feats: Vec<FeatureSequence> = seqs
        .iter()
        .map(|s| seq(&s.iter().map(|&v| vec![v]).collect::<Vec<_>>()))
        .collect();
    let trees: Vec<Vec<PathTree>> = (1..=6).map(|n| (1..=6).map(|m| PathTree::new(n, m)).collect()).collect();
    let mut acc = Vec::new();
    let mut dist = Vec::with_capacity(36);
    let mut checked = 0;
    for (a, fa) in seqs.iter().zip(&feats) {
        for (b, fb) in seqs.iter().zip(&feats) {
            let (n, m) = (a.len(), b.len());
            dist.clear();
            dist.extend(a.iter().flat_map(|x| b.iter().map(move |y| (x - y).abs())));
            let best = trees[n - 1][m - 1].min_cost(&dist, &mut acc);
            let path = dtw_align(fa, fb).map_err(|e| e.to_string())?;
            let along: f64 = path.pairs().iter().map(|&(i, j)| dist[i * m + j]).sum();
            ensure(path.cost() == best && along == best, || {
                format!("{a:?} vs {b:?}: dtw {} (path sums to {along}), exhaustive {best}", path.cost())
            })?;
            AlignmentPath::new(path.pairs().to_vec(), along, n, m).map_err(|e| format!("{a:?} vs {b:?}: {e}"))?;
            checked += 1;
        }
    }
    Ok(checked)
}

fn metric_identities() -> Outcome {
    let mut rng = SeededRng::new(55);
    let frames = 40;
    let mcep: Vec<Vec<f64>> = (0..frames).map(|_| (0..25).map(|_| rng.normal()).collect()).collect();
    let spec: Vec<Vec<f64>> = (0..frames)
        .map(|_| (0..513).map(|_| rng.uniform_range(1e-4, 10.0)).collect())
        .collect();
    let f0: Vec<f64> = (0..frames).map(|_| rng.uniform_range(80.0, 300.0)).collect();
    let (mcep, spec) = (seq(&mcep), seq(&spec));
    let u = UtteranceFeatures {
        mcep: &mcep,
        spectrum: &spec,
        f0: &f0,
    };
    let r = evaluate(&u, &u, EvalOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.mcd_db == 0.0 && r.lsd_db == 0.0 && r.f0_rmse_hz == 0.0, || format!("identical inputs gave {r:?}"))?;
    ensure((r.pcc - 1.0).abs() <= 1e-12, || format!("identical PCC {}", r.pcc))?;

    let doubled = FeatureSequence::new(
        spec.data().iter().map(|v| 2.0 * v).collect(),
        spec.n_frames(),
        spec.dim(),
        5.0,
    )
    .map_err(|e| e.to_string())?;
    let l = lsd(&spec, &doubled, &AlignmentPath::diagonal(frames)).map_err(|e| e.to_string())?;
    let expect = 20.0 * 2.0f64.log10();
    ensure((l - expect).abs() <= 1e-9, || format!("LSD of doubled spectrum {l} vs {expect}"))?;

    let pairs = dtw_exhaustive()?;
    Ok(format!("identities exact, LSD(2x) error {:.1e}, DTW optimal on {pairs} pairs", (l - expect).abs()))
}

// ------------------------------------------------------------ toy run

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn toy_disentanglement() -> Outcome {
    let ds = gen_toy_dataset(&ToyDatasetSpec::default()).map_err(|e| e.to_string())?;
    let (ex, f0_stats) =
        spectrum_examples(&ds.utterances, None, F0Condition::NormalizedLog).map_err(|e| e.to_string())?;
    let spec = NetworkSpec::dense_default(ex.dim, CondDims { emotion: 10, f0: 1 });
    let weights = LossWeights {
        alpha: 1.0,
        recon_weight: 32.0,
    };
    let cfg = TrainConfig {
        epochs: 100,
        ..TrainConfig::default()
    };
    let gan = train_pipeline(&ex, spec.clone(), weights, cfg).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    let mut failures = Vec::new();

    // (a)
    let first = gan.history[0].recon_mse;
    let last = gan.history.last().expect("trained").recon_mse;
    let ratio = last / first;
    notes.push(format!("MSE {first:.3} -> {last:.3}"));
    if ratio > 0.5 {
        failures.push(format!("(a) MSE ratio {ratio:.3}"));
    }

    // (b)
    let (means, _) = gan.encode(&ex.x).map_err(|e| e.to_string())?;
    let latent_rows: Vec<Vec<f64>> = means.chunks(spec.latent_dim).map(<[f64]>::to_vec).collect();
    let raw_rows: Vec<Vec<f64>> = ex.x.chunks(ex.dim).map(<[f64]>::to_vec).collect();
    let probe = ProbeConfig::default();
    let z_acc = latent_emotion_probe(&latent_rows, &ex.labels, &probe).map_err(|e| e.to_string())?;
    let raw_acc = latent_emotion_probe(&raw_rows, &ex.labels, &probe).map_err(|e| e.to_string())?;
    notes.push(format!("probe z {z_acc:.3} raw {raw_acc:.3}"));
    if z_acc > 0.65 || raw_acc < 0.90 {
        failures.push(format!("(b) probe z {z_acc:.3}, raw {raw_acc:.3}"));
    }

    // (c)
    let (pex, prep) =
        prosody_examples(&ds.utterances, WaveletConfig::for_length(ds.spec.n_frames)).map_err(|e| e.to_string())?;
    let pspec = NetworkSpec::dense_default(pex.dim, CondDims { emotion: 10, f0: 0 });
    let pcfg = TrainConfig {
        epochs: 20,
        ..TrainConfig::default()
    };
    let prosody = ProsodyModel {
        gan: train_pipeline(&pex, pspec, LossWeights::default(), pcfg).map_err(|e| e.to_string())?,
        prep,
    };
    let spectrum = SpectrumModel {
        gan: gan.clone(),
        f0_stats,
        f0_condition: F0Condition::NormalizedLog,
    };
    let recon = gan.reconstruct(&ex).map_err(|e| e.to_string())?;
    let mut converted = Vec::with_capacity(recon.len());
    for u in &ds.utterances {
        let out = convert(&u.features, &u.f0, u.emotion, u.emotion, &spectrum, &prosody).map_err(|e| e.to_string())?;
        converted.extend_from_slice(out.features.data());
    }
    let recon_err = mse(&ex.x, &recon);
    let gap = mse(&converted, &recon);
    notes.push(format!("identity gap {gap:.4} vs recon error {recon_err:.4}"));
    if gap >= 1.5 * recon_err {
        failures.push(format!("(c) identity gap {gap:.4} vs 1.5 x {recon_err:.4}"));
    }

    // (d)
    let again = train_pipeline(&ex, spec, weights, cfg).map_err(|e| e.to_string())?;
    let bits = |g: &VawGan| -> Vec<u64> {
        g.history
            .iter()
            .flat_map(|h| [h.recon_mse, h.kl, h.gen_adv, h.critic])
            .map(f64::to_bits)
            .collect()
    };
    if bits(&gan) != bits(&again) {
        failures.push("(d) rerun history differs".into());
    } else {
        notes.push("rerun bit-exact".into());
    }

    if failures.is_empty() {
        Ok(notes.join(", "))
    } else {
        Err(format!("{}; {}", failures.join("; "), notes.join(", ")))
    }
}

// ---------------------------------------------------- full-scale net

fn full_scale_preset() -> Outcome {
    let spec = NetworkSpec::full_scale(CondDims { emotion: 10, f0: 1 });
    spec.validate().map_err(|e| e.to_string())?;
    let convs = |layers: &[Layer]| -> Vec<(usize, usize, usize)> {
        layers
            .iter()
            .filter_map(|l| match *l {
                Layer::Conv1d {
                    out_channels,
                    kernel,
                    stride,
                    ..
                } => Some((out_channels, kernel, stride)),
                _ => None,
            })
            .collect()
    };
    let enc = convs(&spec.encoder);
    ensure(
        enc == [16, 32, 64, 128, 256].map(|c| (c, 7, 3)),
        || format!("encoder convs {enc:?}"),
    )?;
    let dec: Vec<usize> = convs(&spec.decoder).iter().map(|c| c.1).collect();
    ensure(dec == [9, 7, 7, 1025], || format!("decoder kernels {dec:?}"))?;
    let crit: Vec<usize> = convs(&spec.critic).iter().map(|c| c.1).collect();
    ensure(crit == [7, 7, 115], || format!("critic kernels {crit:?}"))?;
    ensure(spec.latent_dim == 128 && spec.cond.emotion == 10 && spec.input_dim == 513, || {
        format!("latent {} emotion {} input {}", spec.latent_dim, spec.cond.emotion, spec.input_dim)
    })?;

    let mut rng = SeededRng::new(77);
    let n = 4;
    let data = Examples::new(
        (0..n * 513).map(|_| rng.normal()).collect(),
        513,
        vec![0, 1, 2, 3],
        (0..n).map(|_| rng.normal()).collect(),
        1,
        10,
    )
    .map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        epochs: 1,
        batch: n,
        ..TrainConfig::full_scale()
    };
    let mut gan = VawGan::init(spec, LossWeights::default(), cfg).map_err(|e| e.to_string())?;
    gan.train(&data).map_err(|e| e.to_string())?;
    let h = gan.history[0];
    ensure(
        [h.recon_mse, h.kl, h.gen_adv, h.critic].iter().all(|v| v.is_finite()),
        || format!("non-finite losses {h:?}"),
    )?;
    Ok(format!("recon {:.3}, kl {:.3}, critic {:.2e}", h.recon_mse, h.kl, h.critic))
}

// --------------------------------------------------------------- EVCF

fn evcf_conformance() -> Outcome {
    let mut rng = SeededRng::new(88);
    let here = Path::new("<memory>");
    for k in 0..1000 {
        let n = 1 + rng.below(40);
        let d = 1 + rng.below(40);
        // arbitrary finite bit patterns, subnormals and signed zeros included
        let data: Vec<f32> = (0..n * d)
            .map(|_| loop {
                let v = f32::from_bits(rng.next() as u32);
                if v.is_finite() {
                    break v;
                }
            })
            .collect();
        let shift = rng.uniform_range(1.0, 20.0) as f32;
        let original = FeatureSequence32::new(data, n, d, shift).map_err(|e| e.to_string())?;
        let back: FeatureSequence32 = decode_evcf(&encode_evcf(&original), here).map_err(|e| e.to_string())?;
        let same = back.n_frames() == n
            && back.dim() == d
            && back.frame_shift_ms().to_bits() == shift.to_bits()
            && back.data().iter().zip(original.data()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(same, || format!("matrix {k} ({n}x{d}) changed in the round trip"))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let good = encode_evcf(&FeatureSequence32::new(vec![0.5; 12], 3, 4, 5.0).map_err(|e| e.to_string())?);
    let mut bad_magic = good.clone();
    bad_magic[..4].copy_from_slice(b"RIFF");
    let mut nan = good.clone();
    let at = 20 + 4 * (4 + 2);
    nan[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    let cases: [(&str, Vec<u8>); 4] = [
        ("bad_magic", bad_magic),
        ("short_header", good[..11].to_vec()),
        ("short_payload", good[..good.len() - 3].to_vec()),
        ("nan", nan),
    ];
    for (name, bytes) in cases {
        let path = dir.path().join(format!("{name}.evcf"));
        write_atomic(&path, &bytes).map_err(|e| e.to_string())?;
        let err = read_features::<f64>(&path).err();
        let ok = match name {
            "bad_magic" => matches!(err, Some(IoError::BadMagic { found, .. }) if &found == b"RIFF"),
            "short_header" | "short_payload" => matches!(err, Some(IoError::Truncated { .. })),
            _ => matches!(err, Some(IoError::NonFinite { frame: 1, dim: 2, .. })),
        };
        ensure(ok, || format!("{name}: got {err:?}"))?;
    }
    Ok("1000 matrices bit-exact, malformed files rejected with the expected variants".into())
}

fn main() {
    let checks: [Check; 8] = [
        ("1 KL analytics", kl_analytics, 5),
        ("2 gradient suite", gradient_suite, 30),
        ("3 CWT round trip", cwt_round_trip, 60),
        ("4 F0 preprocessing round trip", f0_round_trip, 5),
        ("5 metric identities", metric_identities, 60),
        ("6 toy disentanglement", toy_disentanglement, 300),
        ("7 full-scale preset shapes", full_scale_preset, 60),
        ("8 EVCF conformance", evcf_conformance, 10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check, budget) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > Duration::from_secs(budget) => Err(format!("{msg}; took longer than {budget} s")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {name} ({:.2} s): {msg}", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name} ({:.2} s): {msg}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
