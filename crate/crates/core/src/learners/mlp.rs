//! Feed-forward softmax classifier trained with Adam-style adaptive
//! updates and decoupled weight decay.
//!
//! Rectified-linear hidden layers, inverted dropout during training only,
//! fixed input standardization. Training is fully deterministic given
//! `(seed, data, config)`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::{check_matrix, LearnError};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Task-model hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Hidden layer widths (input/output sizes come from the data).
    pub layer_widths: Vec<usize>,
    pub learning_rate: f64,
    /// Decoupled weight decay applied directly to weights at each update.
    pub weight_decay: f64,
    /// Optional coupled L2 penalty added to the loss gradient; kept apart
    /// from `weight_decay` so the two regularizers can be compared.
    #[serde(default)]
    pub l2_penalty: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl MlpConfig {
    /// Small configuration that trains in seconds on a laptop CPU.
    pub fn desk_scale() -> Self {
        Self {
            layer_widths: vec![32, 64, 32],
            learning_rate: 1e-3,
            weight_decay: 5e-4,
            l2_penalty: 0.0,
            epochs: 200,
            batch_size: 64,
            dropout_rate: 0.1,
            seed: 0,
        }
    }

    /// The full-size architecture (32, 64, 128, 256, 128, 64, 32) at 600
    /// epochs.
    pub fn full_scale() -> Self {
        Self {
            layer_widths: vec![32, 64, 128, 256, 128, 64, 32],
            epochs: 600,
            ..Self::desk_scale()
        }
    }

    fn validate(&self) -> Result<(), LearnError> {
        if self.layer_widths.is_empty() || self.layer_widths.contains(&0) {
            return Err(LearnError::BadConfig("need at least one positive hidden width".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(LearnError::BadConfig("learning_rate must be positive".into()));
        }
        if self.weight_decay < 0.0 || self.l2_penalty < 0.0 {
            return Err(LearnError::BadConfig("regularization must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(LearnError::BadConfig("dropout_rate must be in [0, 1)".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(LearnError::BadConfig("epochs and batch_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    in_dim: usize,
    out_dim: usize,
    w: Vec<f64>, // out_dim x in_dim, row major
    b: Vec<f64>,
}

impl Dense {
    fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        // Kaiming-style init for rectified units.
        let std = (2.0 / in_dim as f64).sqrt();
        let w = (0..in_dim * out_dim)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng) * std)
            .collect();
        Self { in_dim, out_dim, w, b: vec![0.0; out_dim] }
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
            out.push(z + self.b[o]);
        }
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|v| v / sum).collect()
}

#[derive(Debug, Clone, Default)]
struct Gradients {
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

struct Net {
    layers: Vec<Dense>,
}

impl Net {
    /// Forward pass keeping pre-activations and activations; dropout masks
    /// (`None` at eval time) are applied to hidden activations.
    fn forward_full(
        &self,
        input: &[f64],
        masks: Option<&[Vec<f64>]>,
    ) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n_layers = self.layers.len();
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
        activations.push(input.to_vec());
        let mut z = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward(activations.last().unwrap(), &mut z);
            if l + 1 < n_layers {
                let mut a: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
                if let Some(masks) = masks {
                    for (v, m) in a.iter_mut().zip(&masks[l]) {
                        *v *= m;
                    }
                }
                activations.push(a);
            } else {
                activations.push(z.clone());
            }
        }
        let probs = softmax(activations.last().unwrap());
        (activations, probs)
    }

    /// Average cross-entropy loss and parameter gradients over a batch.
    /// `masks` holds one dropout mask set per sample (empty to disable).
    fn batch_gradients(
        &self,
        inputs: &[&[f64]],
        labels: &[usize],
        masks: &[Vec<Vec<f64>>],
        l2_penalty: f64,
    ) -> (f64, Gradients) {
        let mut grads = Gradients {
            w: self.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            b: self.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        };
        let n = inputs.len() as f64;
        let mut loss = 0.0;
        for (s, (&input, &label)) in inputs.iter().zip(labels).enumerate() {
            let mask = masks.get(s);
            let (activations, probs) = self.forward_full(input, mask.map(|m| m.as_slice()));
            loss += -(probs[label].max(1e-300)).ln();
            // delta for the softmax/cross-entropy head
            let mut delta: Vec<f64> = probs;
            delta[label] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let a_in = &activations[l];
                for o in 0..layer.out_dim {
                    let d = delta[o];
                    grads.b[l][o] += d;
                    let gw = &mut grads.w[l][o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (g, x) in gw.iter_mut().zip(a_in) {
                        *g += d * x;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; layer.in_dim];
                    for o in 0..layer.out_dim {
                        let d = delta[o];
                        let row = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += d * w;
                        }
                    }
                    // back through dropout then the rectifier
                    if let Some(mask) = mask {
                        for (p, m) in prev.iter_mut().zip(&mask[l - 1]) {
                            *p *= m;
                        }
                    }
                    for (p, &a) in prev.iter_mut().zip(&activations[l]) {
                        if a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        loss /= n;
        for (gl, layer) in grads.w.iter_mut().zip(&self.layers) {
            for (g, &w) in gl.iter_mut().zip(&layer.w) {
                *g /= n;
                *g += l2_penalty * w;
            }
        }
        for gl in grads.b.iter_mut() {
            for g in gl.iter_mut() {
                *g /= n;
            }
        }
        if l2_penalty > 0.0 {
            let sq: f64 = self.layers.iter().flat_map(|l| l.w.iter()).map(|w| w * w).sum();
            loss += 0.5 * l2_penalty * sq;
        }
        (loss, grads)
    }
}

/// A fitted softmax classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    layers: Vec<Dense>,
    standardizer: Standardizer,
    pub config: MlpConfig,
    pub n_classes: usize,
    /// Set when the training labels contained a single class.
    pub single_class_warning: bool,
}

impl Classifier {
    /// Predicted class and probability vector. The class is the argmax of
    /// the probabilities, ties broken toward the lowest class id.
    pub fn predict(&self, input: &[f64]) -> Result<(usize, Vec<f64>), LearnError> {
        if input.len() != self.standardizer.dim() {
            return Err(LearnError::DimensionMismatch {
                got: input.len(),
                expected: self.standardizer.dim(),
            });
        }
        let x = self.standardizer.transform(input);
        let net = Net { layers: self.layers.clone() };
        let (_, probs) = net.forward_full(&x, None);
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok((best, probs))
    }

    /// Classification accuracy over a labeled set.
    pub fn evaluate(&self, inputs: &[Vec<f64>], labels: &[usize]) -> Result<f64, LearnError> {
        let mut hits = 0;
        for (x, &y) in inputs.iter().zip(labels) {
            if self.predict(x)?.0 == y {
                hits += 1;
            }
        }
        Ok(hits as f64 / labels.len().max(1) as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("classifier serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Train the task model. Deterministic given `(config.seed, data)`.
pub fn train_classifier(
    config: &MlpConfig,
    inputs: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
) -> Result<Classifier, LearnError> {
    config.validate()?;
    check_matrix(inputs)?;
    if labels.len() != inputs.len() {
        return Err(LearnError::LengthMismatch {
            predictions: labels.len(),
            targets: inputs.len(),
        });
    }
    for &l in labels {
        if l >= n_classes {
            return Err(LearnError::LabelOutOfRange { label: l, n_classes });
        }
    }
    let single_class_warning = labels.windows(2).all(|w| w[0] == w[1]);

    let standardizer = Standardizer::fit(inputs);
    let data: Vec<Vec<f64>> = inputs.iter().map(|r| standardizer.transform(r)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut dims = vec![inputs[0].len()];
    dims.extend(&config.layer_widths);
    dims.push(n_classes);
    let layers: Vec<Dense> =
        dims.windows(2).map(|d| Dense::init(d[0], d[1], &mut rng)).collect();
    let mut net = Net { layers };

    // Adam state
    let mut m_w: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.w.len()]).collect();
    let mut v_w = m_w.clone();
    let mut m_b: Vec<Vec<f64>> = net.layers.iter().map(|l| vec![0.0; l.b.len()]).collect();
    let mut v_b = m_b.clone();
    let mut step = 0u64;

    let mut order: Vec<usize> = (0..data.len()).collect();
    let n_hidden = config.layer_widths.len();
    let keep = 1.0 - config.dropout_rate;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let batch_inputs: Vec<&[f64]> = batch.iter().map(|&i| data[i].as_slice()).collect();
            let batch_labels: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let masks: Vec<Vec<Vec<f64>>> = batch
                .iter()
                .map(|_| {
                    (0..n_hidden)
                        .map(|l| {
                            let width = config.layer_widths[l];
                            (0..width)
                                .map(|_| {
                                    if config.dropout_rate > 0.0
                                        && rng.gen::<f64>() < config.dropout_rate
                                    {
                                        0.0
                                    } else {
                                        1.0 / keep
                                    }
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let (_, grads) =
                net.batch_gradients(&batch_inputs, &batch_labels, &masks, config.l2_penalty);
            step += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(step as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(step as i32);
            for (l, layer) in net.layers.iter_mut().enumerate() {
                for (i, w) in layer.w.iter_mut().enumerate() {
                    let g = grads.w[l][i];
                    m_w[l][i] = ADAM_BETA1 * m_w[l][i] + (1.0 - ADAM_BETA1) * g;
                    v_w[l][i] = ADAM_BETA2 * v_w[l][i] + (1.0 - ADAM_BETA2) * g * g;
                    let update = (m_w[l][i] / bc1) / ((v_w[l][i] / bc2).sqrt() + ADAM_EPS);
                    // decoupled weight decay
                    *w -= config.learning_rate * (update + config.weight_decay * *w);
                }
                for (i, b) in layer.b.iter_mut().enumerate() {
                    let g = grads.b[l][i];
                    m_b[l][i] = ADAM_BETA1 * m_b[l][i] + (1.0 - ADAM_BETA1) * g;
                    v_b[l][i] = ADAM_BETA2 * v_b[l][i] + (1.0 - ADAM_BETA2) * g * g;
                    let update = (m_b[l][i] / bc1) / ((v_b[l][i] / bc2).sqrt() + ADAM_EPS);
                    *b -= config.learning_rate * update;
                }
            }
        }
    }

    Ok(Classifier {
        layers: net.layers,
        standardizer,
        config: config.clone(),
        n_classes,
        single_class_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_data(seed: u64, n_per: usize, margin: f64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2usize {
            let center = if class == 0 { -1.0 - margin } else { 1.0 + margin };
            for _ in 0..n_per {
                let dx: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                let dy: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
                inputs.push(vec![center + 0.3 * dx, center + 0.3 * dy]);
                labels.push(class);
            }
        }
        (inputs, labels)
    }

    fn quick_config() -> MlpConfig {
        MlpConfig {
            layer_widths: vec![16, 16],
            epochs: 60,
            ..MlpConfig::desk_scale()
        }
    }

    #[test]
    fn separable_blobs_reach_high_accuracy() {
        let (inputs, labels) = blob_data(1, 100, 1.0);
        let model = train_classifier(&quick_config(), &inputs, &labels, 2).unwrap();
        let acc = model.evaluate(&inputs, &labels).unwrap();
        assert!(acc >= 0.99, "accuracy = {acc}");
    }

    #[test]
    fn single_class_predicts_that_class() {
        let inputs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, -(i as f64)]).collect();
        let labels = vec![2usize; 40];
        let model = train_classifier(&quick_config(), &inputs, &labels, 4).unwrap();
        assert!(model.single_class_warning);
        for x in &inputs {
            assert_eq!(model.predict(x).unwrap().0, 2);
        }
    }

    #[test]
    fn same_seed_trains_identical_weights() {
        let (inputs, labels) = blob_data(2, 50, 1.0);
        let a = train_classifier(&quick_config(), &inputs, &labels, 2).unwrap();
        let b = train_classifier(&quick_config(), &inputs, &labels, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn probabilities_normalize() {
        let (inputs, labels) = blob_data(3, 30, 1.0);
        let model = train_classifier(&quick_config(), &inputs, &labels, 2).unwrap();
        let (class, probs) = model.predict(&inputs[0]).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let argmax =
            probs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(class, argmax);
    }

    #[test]
    fn symmetric_data_gives_balanced_midpoint() {
        // mirrored two-class construction; the origin should sit near 0.5
        let mut inputs = Vec::new();
        let mut labels = Vec::new();
        for i in 1..=60 {
            let v = i as f64 / 10.0;
            inputs.push(vec![v, v]);
            labels.push(0usize);
            inputs.push(vec![-v, -v]);
            labels.push(1usize);
        }
        let mut cfg = quick_config();
        cfg.dropout_rate = 0.0;
        let model = train_classifier(&cfg, &inputs, &labels, 2).unwrap();
        let (_, probs) = model.predict(&[0.0, 0.0]).unwrap();
        assert!((probs[0] - 0.5).abs() <= 0.1, "p0 = {}", probs[0]);
    }

    #[test]
    fn dimension_mismatch_errors() {
        let (inputs, labels) = blob_data(4, 20, 1.0);
        let model = train_classifier(&quick_config(), &inputs, &labels, 2).unwrap();
        assert!(matches!(
            model.predict(&[1.0]),
            Err(LearnError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_inputs() {
        let r = train_classifier(&quick_config(), &[vec![f64::NAN]], &[0], 2);
        assert!(matches!(r, Err(LearnError::NonFinite { .. })));
    }

    #[test]
    fn gradients_match_finite_differences() {
        // 3-layer toy network, 10 samples, no dropout
        let (inputs, labels) = blob_data(5, 5, 0.5);
        let inputs = &inputs[..10];
        let labels = &labels[..10];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let layers = vec![
            Dense::init(2, 4, &mut rng),
            Dense::init(4, 3, &mut rng),
            Dense::init(3, 2, &mut rng),
        ];
        let mut net = Net { layers };
        let refs: Vec<&[f64]> = inputs.iter().map(|r| r.as_slice()).collect();
        let (_, grads) = net.batch_gradients(&refs, labels, &[], 0.0);
        let eps = 1e-6;
        for l in 0..net.layers.len() {
            for i in (0..net.layers[l].w.len()).step_by(3) {
                let orig = net.layers[l].w[i];
                net.layers[l].w[i] = orig + eps;
                let (lp, _) = net.batch_gradients(&refs, labels, &[], 0.0);
                net.layers[l].w[i] = orig - eps;
                let (lm, _) = net.batch_gradients(&refs, labels, &[], 0.0);
                net.layers[l].w[i] = orig;
                let fd = (lp - lm) / (2.0 * eps);
                let g = grads.w[l][i];
                let denom = fd.abs().max(g.abs()).max(1e-8);
                assert!(
                    (fd - g).abs() / denom < 1e-4,
                    "layer {l} weight {i}: fd = {fd}, analytic = {g}"
                );
            }
        }
    }

    #[test]
    fn decoupled_decay_differs_from_l2_in_loss() {
        let (inputs, labels) = blob_data(6, 40, 1.0);
        let mut decoupled = quick_config();
        decoupled.weight_decay = 0.01;
        decoupled.l2_penalty = 0.0;
        let mut coupled = quick_config();
        coupled.weight_decay = 0.0;
        coupled.l2_penalty = 0.01;
        let a = train_classifier(&decoupled, &inputs, &labels, 2).unwrap();
        let b = train_classifier(&coupled, &inputs, &labels, 2).unwrap();
        assert_ne!(a.layers, b.layers);
    }

    #[test]
    fn json_round_trip() {
        let (inputs, labels) = blob_data(7, 20, 1.0);
        let model = train_classifier(&quick_config(), &inputs, &labels, 2).unwrap();
        let back = Classifier::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
    }
}
