use crate::rng::SeededRng;

use super::VawganError;

/// Settings of the linear emotion probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub steps: usize,
    pub lr: f64,
    pub l2: f64,
    /// Fraction of each class held out for scoring.
    pub holdout: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            lr: 0.5,
            l2: 1e-3,
            holdout: 0.3,
            seed: 0,
        }
    }
}

/// Held-out accuracy of a softmax regression from feature rows to labels.
/// Features are standardized with training-split statistics; the split is
/// stratified and seeded; training is full-batch gradient descent.
pub fn latent_emotion_probe(rows: &[Vec<f64>], labels: &[usize], cfg: &ProbeConfig) -> Result<f64, VawganError> {
    if rows.len() != labels.len() || rows.is_empty() {
        return Err(VawganError::Shape(format!("{} rows with {} labels", rows.len(), labels.len())));
    }
    let dim = rows[0].len();
    if dim == 0 || rows.iter().any(|r| r.len() != dim) {
        return Err(VawganError::Shape("probe rows must share a positive width".into()));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(VawganError::Data("probe needs at least two classes".into()));
    }
    let mut rng = SeededRng::new(cfg.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for &c in &classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < 2 {
            return Err(VawganError::Data(format!("class {c} has {} example(s), need 2", members.len())));
        }
        for i in (1..members.len()).rev() {
            members.swap(i, rng.below(i + 1));
        }
        let n_test = ((members.len() as f64 * cfg.holdout).round() as usize).clamp(1, members.len() - 1);
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    let k = classes.len();
    let class_of = |l: usize| classes.binary_search(&l).expect("label listed");

    let mut mean = vec![0.0; dim];
    let mut std = vec![0.0; dim];
    for &i in &train {
        for (m, v) in mean.iter_mut().zip(&rows[i]) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= train.len() as f64);
    for &i in &train {
        for ((s, v), m) in std.iter_mut().zip(&rows[i]).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    std.iter_mut().for_each(|s| *s = (*s / train.len() as f64).sqrt().max(1e-12));
    let feat = |i: usize| -> Vec<f64> { rows[i].iter().zip(&mean).zip(&std).map(|((v, m), s)| (v - m) / s).collect() };
    let train_x: Vec<Vec<f64>> = train.iter().map(|&i| feat(i)).collect();
    let train_y: Vec<usize> = train.iter().map(|&i| class_of(labels[i])).collect();

    // weights [k, dim + 1], last column is the bias
    let mut w = vec![vec![0.0; dim + 1]; k];
    let scores = |w: &[Vec<f64>], x: &[f64]| -> Vec<f64> {
        let s: Vec<f64> = w
            .iter()
            .map(|wc| wc[dim] + wc[..dim].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = s.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|v| v / z).collect()
    };
    let n = train_x.len() as f64;
    for _ in 0..cfg.steps {
        let mut grad = vec![vec![0.0; dim + 1]; k];
        for (x, &y) in train_x.iter().zip(&train_y) {
            let p = scores(&w, x);
            for (c, gc) in grad.iter_mut().enumerate() {
                let err = p[c] - if c == y { 1.0 } else { 0.0 };
                for (g, v) in gc[..dim].iter_mut().zip(x) {
                    *g += err * v;
                }
                gc[dim] += err;
            }
        }
        for (wc, gc) in w.iter_mut().zip(&grad) {
            for (j, (wv, g)) in wc.iter_mut().zip(gc).enumerate() {
                let reg = if j < dim { cfg.l2 * *wv } else { 0.0 };
                *wv -= cfg.lr * (g / n + reg);
            }
        }
    }
    let correct = test
        .iter()
        .filter(|&&i| {
            let p = scores(&w, &feat(i));
            let best = (0..k).fold(0, |b, c| if p[c] > p[b] { c } else { b });
            best == class_of(labels[i])
        })
        .count();
    Ok(correct as f64 / test.len() as f64)
}
