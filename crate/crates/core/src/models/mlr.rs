use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Stars;
use crate::error::{Error, Result};

pub const NUM_CLASSES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlrConfig {
    /// Initial step size; epoch `e` (0-based) uses `learning_rate / sqrt(e + 1)`.
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Z-score features with training-set statistics before fitting.
    pub standardize: bool,
    /// Accumulate batch gradients on the rayon pool. The reduction order
    /// is fixed, so results do not depend on this flag.
    pub parallel: bool,
}

impl Default for MlrConfig {
    fn default() -> Self {
        MlrConfig {
            learning_rate: 0.1,
            l2: 1e-4,
            epochs: 20,
            batch_size: 256,
            seed: 1,
            standardize: true,
            parallel: false,
        }
    }
}

impl MlrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be a positive number"));
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return Err(Error::config("l2", "must be a non-negative number"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Softmax regression over the five star classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlrModel {
    pub feature_dim: usize,
    /// Row-major `NUM_CLASSES x feature_dim`; row `c` scores star `c + 1`.
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_CLASSES],
    /// Per-feature shift and scale applied before scoring; empty when the
    /// model was trained on raw features.
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub config: MlrConfig,
    pub epoch_losses: Vec<f64>,
}

fn scores_into(weights: &[f64], bias: &[f64; NUM_CLASSES], x: &[f64], out: &mut [f64; NUM_CLASSES]) {
    let f = x.len();
    for c in 0..NUM_CLASSES {
        let row = &weights[c * f..(c + 1) * f];
        out[c] = bias[c] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
    }
}

/// Softmax in place; returns `log(sum(exp(s)))`.
fn softmax_in_place(s: &mut [f64; NUM_CLASSES]) -> f64 {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in s.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in s.iter_mut() {
        *v /= total;
    }
    max + total.ln()
}

/// First index of the maximum, so ties go to the lower star.
fn argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in s.iter().enumerate().skip(1) {
        if v > s[best] {
            best = i;
        }
    }
    best
}

/// Gradient of the mean cross-entropy over `xs` plus `l2 / 2 * |W|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_CLASSES],
}

struct Partial {
    loss: f64,
    weights: Vec<f64>,
    bias: [f64; NUM_CLASSES],
}

fn partial_gradient(weights: &[f64], bias: &[f64; NUM_CLASSES], xs: &[&[f64]], ys: &[usize]) -> Partial {
    let f = weights.len() / NUM_CLASSES;
    let mut p = Partial {
        loss: 0.0,
        weights: vec![0.0; weights.len()],
        bias: [0.0; NUM_CLASSES],
    };
    let mut s = [0.0; NUM_CLASSES];
    for (x, &y) in xs.iter().zip(ys) {
        scores_into(weights, bias, x, &mut s);
        let raw_y = s[y];
        let lse = softmax_in_place(&mut s);
        p.loss += lse - raw_y;
        s[y] -= 1.0;
        for c in 0..NUM_CLASSES {
            p.bias[c] += s[c];
            let row = &mut p.weights[c * f..(c + 1) * f];
            for (g, v) in row.iter_mut().zip(x.iter()) {
                *g += s[c] * v;
            }
        }
    }
    p
}

const PARALLEL_CHUNK: usize = 64;

fn gradient_impl(
    weights: &[f64],
    bias: &[f64; NUM_CLASSES],
    xs: &[&[f64]],
    ys: &[usize],
    l2: f64,
    parallel: bool,
) -> Gradient {
    let parts: Vec<Partial> = if parallel {
        xs.par_chunks(PARALLEL_CHUNK)
            .zip(ys.par_chunks(PARALLEL_CHUNK))
            .map(|(x, y)| partial_gradient(weights, bias, x, y))
            .collect()
    } else {
        xs.chunks(PARALLEL_CHUNK)
            .zip(ys.chunks(PARALLEL_CHUNK))
            .map(|(x, y)| partial_gradient(weights, bias, x, y))
            .collect()
    };
    let n = xs.len() as f64;
    let mut g = Gradient {
        loss: 0.0,
        weights: vec![0.0; weights.len()],
        bias: [0.0; NUM_CLASSES],
    };
    for p in parts {
        g.loss += p.loss;
        for (a, b) in g.weights.iter_mut().zip(&p.weights) {
            *a += b;
        }
        for c in 0..NUM_CLASSES {
            g.bias[c] += p.bias[c];
        }
    }
    g.loss /= n;
    g.bias.iter_mut().for_each(|b| *b /= n);
    let mut norm2 = 0.0;
    for (gw, w) in g.weights.iter_mut().zip(weights) {
        *gw = *gw / n + l2 * w;
        norm2 += w * w;
    }
    g.loss += 0.5 * l2 * norm2;
    g
}

/// Objective and analytic gradient at `(weights, bias)`. The bias is not
/// regularized.
pub fn loss_and_gradient(
    weights: &[f64],
    bias: &[f64; NUM_CLASSES],
    features: &[Vec<f64>],
    labels: &[Stars],
    l2: f64,
) -> Result<Gradient> {
    check_inputs(features, labels)?;
    let f = features[0].len();
    if weights.len() != NUM_CLASSES * f {
        return Err(Error::DimensionMismatch {
            expected: NUM_CLASSES * f,
            actual: weights.len(),
        });
    }
    let xs: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    let ys: Vec<usize> = labels.iter().map(|s| s.class_index()).collect();
    Ok(gradient_impl(weights, bias, &xs, &ys, l2, false))
}

fn check_inputs(features: &[Vec<f64>], labels: &[Stars]) -> Result<()> {
    if features.is_empty() {
        return Err(Error::InvalidInput("no training examples".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let f = features[0].len();
    for (i, x) in features.iter().enumerate() {
        if x.len() != f {
            return Err(Error::DimensionMismatch {
                expected: f,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: i });
        }
    }
    Ok(())
}

pub fn train_mlr(features: &[Vec<f64>], labels: &[Stars], config: &MlrConfig) -> Result<MlrModel> {
    config.validate()?;
    check_inputs(features, labels)?;
    let f = features[0].len();
    let n = features.len();

    let (mean, scale) = if config.standardize {
        let mut mean = vec![0.0; f];
        for x in features {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; f];
        for x in features {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        (mean, scale)
    } else {
        (Vec::new(), Vec::new())
    };
    let data: Vec<Vec<f64>> = if config.standardize {
        features.iter().map(|x| transform(x, &mean, &scale)).collect()
    } else {
        features.to_vec()
    };
    let ys: Vec<usize> = labels.iter().map(|s| s.class_index()).collect();

    let mut weights = vec![0.0; NUM_CLASSES * f];
    let mut bias = [0.0; NUM_CLASSES];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let all_xs: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = config.learning_rate / ((epoch + 1) as f64).sqrt();
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| all_xs[i]).collect();
            let by: Vec<usize> = batch.iter().map(|&i| ys[i]).collect();
            let g = gradient_impl(&weights, &bias, &xs, &by, config.l2, config.parallel);
            for (w, gw) in weights.iter_mut().zip(&g.weights) {
                *w -= lr * gw;
            }
            for c in 0..NUM_CLASSES {
                bias[c] -= lr * g.bias[c];
            }
        }
        let full = gradient_impl(&weights, &bias, &all_xs, &ys, config.l2, config.parallel);
        epoch_losses.push(full.loss);
    }
    if weights.iter().chain(&bias).any(|w| !w.is_finite()) {
        return Err(Error::Internal("training diverged to non-finite weights".into()));
    }
    Ok(MlrModel {
        feature_dim: f,
        weights,
        bias,
        mean,
        scale,
        config: config.clone(),
        epoch_losses,
    })
}

fn transform(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(mean)
        .zip(scale)
        .map(|((v, m), s)| (v - m) / s)
        .collect()
}

impl MlrModel {
    /// Class scores for star 1 through 5.
    pub fn scores(&self, features: &[f64]) -> Result<[f64; NUM_CLASSES]> {
        if features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                actual: features.len(),
            });
        }
        let mut s = [0.0; NUM_CLASSES];
        if self.mean.is_empty() {
            scores_into(&self.weights, &self.bias, features, &mut s);
        } else {
            let z = transform(features, &self.mean, &self.scale);
            scores_into(&self.weights, &self.bias, &z, &mut s);
        }
        Ok(s)
    }

    pub fn predict(&self, features: &[f64]) -> Result<Stars> {
        Ok(Stars::from_class_index(argmax(&self.scores(features)?)))
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<[f64; NUM_CLASSES]> {
        let mut s = self.scores(features)?;
        softmax_in_place(&mut s);
        Ok(s)
    }

    /// Squared Frobenius norm of the weight matrix.
    pub fn weight_norm2(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn stars(v: &[u8]) -> Vec<Stars> {
        v.iter().map(|&s| Stars::new(s).unwrap()).collect()
    }

    fn zero_model(f: usize) -> MlrModel {
        MlrModel {
            feature_dim: f,
            weights: vec![0.0; NUM_CLASSES * f],
            bias: [0.0; NUM_CLASSES],
            mean: Vec::new(),
            scale: Vec::new(),
            config: MlrConfig::default(),
            epoch_losses: Vec::new(),
        }
    }

    /// Five Gaussian clusters with centre spacing well over 2 sigma.
    fn blobs(n_per: usize, f: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<Stars>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centres: Vec<Vec<f64>> = (0..NUM_CLASSES)
            .map(|c| (0..f).map(|j| if j == c % f { 6.0 } else { 0.0 } + if j == (c + 1) % f { 3.0 * c as f64 } else { 0.0 }).collect())
            .collect();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (c, centre) in centres.iter().enumerate() {
            for _ in 0..n_per {
                let x = centre
                    .iter()
                    .map(|m| {
                        // Irwin-Hall approximation of a unit normal.
                        let z: f64 = (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0;
                        m + z
                    })
                    .collect();
                xs.push(x);
                ys.push(Stars::from_class_index(c));
            }
        }
        (xs, ys)
    }

    #[test]
    fn zero_model_predicts_lowest_star_uniformly() {
        let m = zero_model(3);
        assert_eq!(m.predict(&[1.0, 2.0, 3.0]).unwrap().get(), 1);
        for p in m.predict_proba(&[1.0, 2.0, 3.0]).unwrap() {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_go_to_lower_star() {
        let mut m = zero_model(1);
        m.bias = [0.0, 1.0, 0.5, 1.0, 1.0];
        assert_eq!(m.predict(&[0.0]).unwrap().get(), 2);
    }

    #[test]
    fn shift_invariance() {
        let mut m = zero_model(2);
        m.weights = vec![0.3, -1.0, 2.0, 0.1, -0.5, 0.7, 1.1, -0.2, 0.0, 0.4];
        m.bias = [0.1, 0.2, -0.3, 0.0, 0.5];
        let x = [0.7, -1.3];
        let before = m.predict(&x).unwrap();
        let p0 = m.predict_proba(&x).unwrap();
        m.bias.iter_mut().for_each(|b| *b += 17.0);
        assert_eq!(m.predict(&x).unwrap(), before);
        for (a, b) in p0.iter().zip(m.predict_proba(&x).unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn memorizes_single_example() {
        let m = train_mlr(&[vec![0.5, -1.0, 2.0]], &stars(&[3]), &MlrConfig::default()).unwrap();
        assert_eq!(m.predict(&[0.5, -1.0, 2.0]).unwrap().get(), 3);
    }

    #[test]
    fn separable_blobs_fit() {
        let (xs, ys) = blobs(100, 4, 11);
        let m = train_mlr(&xs, &ys, &MlrConfig::default()).unwrap();
        let correct = xs
            .iter()
            .zip(&ys)
            .filter(|(x, y)| m.predict(x).unwrap() == **y)
            .count();
        assert!(correct as f64 / xs.len() as f64 >= 0.95, "accuracy {correct}/{}", xs.len());
        assert!(m.epoch_losses.last().unwrap() < &m.epoch_losses[0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let (xs, ys) = blobs(30, 3, 2);
        let a = train_mlr(&xs, &ys, &MlrConfig::default()).unwrap();
        let b = train_mlr(&xs, &ys, &MlrConfig::default()).unwrap();
        assert_eq!(a, b);
        let par = MlrConfig {
            parallel: true,
            batch_size: 150,
            ..MlrConfig::default()
        };
        let seq = MlrConfig {
            batch_size: 150,
            ..MlrConfig::default()
        };
        assert_eq!(
            train_mlr(&xs, &ys, &par).unwrap().weights,
            train_mlr(&xs, &ys, &seq).unwrap().weights
        );
    }

    #[test]
    fn stronger_l2_never_grows_weights() {
        let (xs, ys) = blobs(40, 3, 5);
        let norms: Vec<f64> = [1e-3, 1e-2, 1e-1]
            .iter()
            .map(|&l2| {
                let cfg = MlrConfig {
                    l2,
                    epochs: 400,
                    batch_size: xs.len(),
                    learning_rate: 0.5,
                    ..MlrConfig::default()
                };
                train_mlr(&xs, &ys, &cfg).unwrap().weight_norm2()
            })
            .collect();
        assert!(norms[0] >= norms[1] && norms[1] >= norms[2], "{norms:?}");
    }

    #[test]
    fn input_validation() {
        let cfg = MlrConfig::default();
        assert!(matches!(train_mlr(&[], &[], &cfg), Err(Error::InvalidInput(_))));
        assert!(matches!(
            train_mlr(&[vec![1.0], vec![1.0, 2.0]], &stars(&[1, 2]), &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            train_mlr(&[vec![f64::NAN]], &stars(&[1]), &cfg),
            Err(Error::NonFinite { index: 0 })
        ));
        assert!(zero_model(2).predict(&[1.0]).is_err());
        assert!(MlrConfig { epochs: 0, ..cfg.clone() }.validate().is_err());
        assert!(MlrConfig { learning_rate: -1.0, ..cfg }.validate().is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (xs, ys) = blobs(10, 3, 9);
        let m = train_mlr(&xs, &ys, &MlrConfig::default()).unwrap();
        let back: MlrModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn probabilities_are_a_distribution(
            w in prop::collection::vec(-5.0f64..5.0, 15),
            b in prop::collection::vec(-5.0f64..5.0, 5),
            x in prop::collection::vec(-3.0f64..3.0, 3),
        ) {
            let mut m = zero_model(3);
            m.weights = w;
            m.bias.copy_from_slice(&b);
            let p = m.predict_proba(&x).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
            prop_assert_eq!(Stars::from_class_index(argmax(&p)), m.predict(&x).unwrap());
        }

        #[test]
        fn gradient_matches_finite_differences(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = rng.random_range(1..=6);
            let n = rng.random_range(1..=10);
            let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..f).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let ys: Vec<Stars> = (0..n).map(|_| Stars::from_class_index(rng.random_range(0..5))).collect();
            let w: Vec<f64> = (0..5 * f).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = [0.1, -0.2, 0.3, 0.0, -0.1];
            let g = loss_and_gradient(&w, &b, &xs, &ys, 0.01).unwrap();
            let h = 1e-5;
            for i in 0..w.len() {
                let mut wp = w.clone();
                wp[i] += h;
                let mut wm = w.clone();
                wm[i] -= h;
                let fd = (loss_and_gradient(&wp, &b, &xs, &ys, 0.01).unwrap().loss
                    - loss_and_gradient(&wm, &b, &xs, &ys, 0.01).unwrap().loss) / (2.0 * h);
                prop_assert!((fd - g.weights[i]).abs() <= 1e-6 * (1.0 + fd.abs()));
            }
        }
    }
}
