//! Tied-weight autoencoder with a single-layer perceptron head.
//!
//! ```text
//! h     = tanh(W x + b_enc)
//! x'    = Wᵀ h + b_dec
//! p     = sigmoid(w_slp · h + b_slp)
//! loss  = w_rec · mean((x - x')²) + w_cls · BCE(y, p)
//! ```
//!
//! The decoder weight is never stored; every decoder computation reads the
//! encoder matrix transposed. Gradients are written out by hand, and the tied
//! matrix accumulates both its encoder-path and decoder-path contributions.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::seeding::{self, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub joint_epochs: usize,
    pub finetune_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// `None` means `⌊d_in / 2⌋`.
    pub bottleneck_dim: Option<usize>,
    pub reconstruction_weight: f64,
    pub classification_weight: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            joint_epochs: 25,
            finetune_epochs: 5,
            batch_size: 8,
            learning_rate: 1e-3,
            momentum: 0.9,
            bottleneck_dim: None,
            reconstruction_weight: 1.0,
            classification_weight: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.joint_epochs == 0 || self.finetune_epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "joint_epochs, finetune_epochs and batch_size must all be at least 1".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if self.bottleneck_dim == Some(0) {
            return Err(Error::InvalidArgument("bottleneck dimension must be at least 1".into()));
        }
        if self.reconstruction_weight < 0.0 || self.classification_weight < 0.0 {
            return Err(Error::InvalidArgument("loss weights must be non-negative".into()));
        }
        Ok(())
    }

    pub fn bottleneck_for(&self, d_in: usize) -> usize {
        self.bottleneck_dim.unwrap_or((d_in / 2).max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d_in: usize,
    pub d_h: usize,
    /// `d_h × d_in`, row-major.
    pub w_enc: Vec<f64>,
    pub b_enc: Vec<f64>,
    pub b_dec: Vec<f64>,
    pub w_slp: Vec<f64>,
    pub b_slp: f64,
}

impl ModelParams {
    pub fn zeros(d_in: usize, d_h: usize) -> Self {
        Self {
            d_in,
            d_h,
            w_enc: vec![0.0; d_h * d_in],
            b_enc: vec![0.0; d_h],
            b_dec: vec![0.0; d_in],
            w_slp: vec![0.0; d_h],
            b_slp: 0.0,
        }
    }

    /// Uniform in `±1/√fan_in` per layer.
    pub fn init<R: Rng>(d_in: usize, d_h: usize, rng: &mut R) -> Self {
        let enc = 1.0 / (d_in as f64).sqrt();
        let dec = 1.0 / (d_h as f64).sqrt();
        let mut draw = |bound: f64, n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-bound..bound)).collect() };
        let w_enc = draw(enc, d_h * d_in);
        let b_enc = draw(enc, d_h);
        let b_dec = draw(dec, d_in);
        let w_slp = draw(dec, d_h);
        let b_slp = draw(dec, 1)[0];
        Self {
            d_in,
            d_h,
            w_enc,
            b_enc,
            b_dec,
            w_slp,
            b_slp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("w_enc", self.d_h * self.d_in, self.w_enc.len()),
            ("b_enc", self.d_h, self.b_enc.len()),
            ("b_dec", self.d_in, self.b_dec.len()),
            ("w_slp", self.d_h, self.w_slp.len()),
        ];
        for (context, expected, found) in checks {
            if expected != found {
                return Err(Error::Dimension {
                    context,
                    expected,
                    found,
                });
            }
        }
        if self.d_in == 0 || self.d_h == 0 {
            return Err(Error::InvalidArgument("model dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.w_enc
            .iter()
            .chain(&self.b_enc)
            .chain(&self.b_dec)
            .chain(&self.w_slp)
            .chain(std::iter::once(&self.b_slp))
            .all(|v| v.is_finite())
    }

    fn enc_row(&self, k: usize) -> &[f64] {
        &self.w_enc[k * self.d_in..(k + 1) * self.d_in]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d_in {
            return Err(Error::Dimension {
                context: "model input",
                expected: self.d_in,
                found: x.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub hidden: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub logit: f64,
    pub prob: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy from a logit: `max(z,0) − z·y + ln(1 + e^{−|z|})`.
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

pub fn encode(params: &ModelParams, x: &[f64]) -> Result<Vec<f64>> {
    params.check_input(x)?;
    Ok((0..params.d_h)
        .map(|k| {
            let a: f64 = params.enc_row(k).iter().zip(x).map(|(w, v)| w * v).sum();
            (a + params.b_enc[k]).tanh()
        })
        .collect())
}

pub fn forward(params: &ModelParams, x: &[f64]) -> Result<Forward> {
    let hidden = encode(params, x)?;
    let mut reconstruction = params.b_dec.clone();
    for (k, h) in hidden.iter().enumerate() {
        for (r, w) in reconstruction.iter_mut().zip(params.enc_row(k)) {
            *r += w * h;
        }
    }
    let logit = params.w_slp.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + params.b_slp;
    Ok(Forward {
        hidden,
        reconstruction,
        logit,
        prob: sigmoid(logit),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub reconstruction: f64,
    pub classification: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            reconstruction: 1.0,
            classification: 1.0,
        }
    }
}

impl From<&TrainConfig> for LossWeights {
    fn from(c: &TrainConfig) -> Self {
        Self {
            reconstruction: c.reconstruction_weight,
            classification: c.classification_weight,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Loss {
    pub total: f64,
    pub mse: f64,
    pub bce: f64,
}

fn loss_from(fwd: &Forward, x: &[f64], y: f64, weights: LossWeights) -> Loss {
    let mse = x
        .iter()
        .zip(&fwd.reconstruction)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    let bce = bce_with_logit(fwd.logit, y);
    Loss {
        total: weights.reconstruction * mse + weights.classification * bce,
        mse,
        bce,
    }
}

pub fn loss(params: &ModelParams, x: &[f64], y: Label, weights: LossWeights) -> Result<Loss> {
    let fwd = forward(params, x)?;
    Ok(loss_from(&fwd, x, y.as_f64(), weights))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Autoencoder and perceptron updated together on the summed loss.
    Joint,
    /// Only the perceptron is updated; autoencoder gradients are zero.
    Finetune,
}

pub type Gradients = ModelParams;

/// Mean-over-batch gradients of the total loss. Returns the mean loss too
/// (in fine-tune mode the reported loss is the classification term only).
pub fn gradients(
    params: &ModelParams,
    batch: &[(&[f64], Label)],
    mode: Mode,
    weights: LossWeights,
) -> Result<(Gradients, f64)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("gradient of an empty batch".into()));
    }
    let (d_in, d_h) = (params.d_in, params.d_h);
    let mut g = ModelParams::zeros(d_in, d_h);
    let mut loss_sum = 0.0;
    let mut dh = vec![0.0; d_h];
    let mut dr = vec![0.0; d_in];

    for &(x, label) in batch {
        let fwd = forward(params, x)?;
        let y = label.as_f64();
        let l = loss_from(&fwd, x, y, weights);
        loss_sum += match mode {
            Mode::Joint => l.total,
            Mode::Finetune => weights.classification * l.bce,
        };

        let dz = weights.classification * (fwd.prob - y);
        for (gw, h) in g.w_slp.iter_mut().zip(&fwd.hidden) {
            *gw += dz * h;
        }
        g.b_slp += dz;
        if mode == Mode::Finetune {
            continue;
        }

        let scale = weights.reconstruction * 2.0 / d_in as f64;
        for ((d, r), xi) in dr.iter_mut().zip(&fwd.reconstruction).zip(x) {
            *d = scale * (r - xi);
        }
        for (gb, d) in g.b_dec.iter_mut().zip(&dr) {
            *gb += d;
        }
        for k in 0..d_h {
            let row = params.enc_row(k);
            let back: f64 = row.iter().zip(&dr).map(|(w, d)| w * d).sum();
            let h = fwd.hidden[k];
            dh[k] = (back + dz * params.w_slp[k]) * (1.0 - h * h);
        }
        for k in 0..d_h {
            let h = fwd.hidden[k];
            let a = dh[k];
            let grow = &mut g.w_enc[k * d_in..(k + 1) * d_in];
            // decoder path (Wᵀ as decoder weight) plus encoder path
            for ((gw, d), xi) in grow.iter_mut().zip(&dr).zip(x) {
                *gw += d * h + a * xi;
            }
            g.b_enc[k] += a;
        }
    }

    let n = batch.len() as f64;
    for v in g.w_enc.iter_mut().chain(&mut g.b_enc).chain(&mut g.b_dec).chain(&mut g.w_slp) {
        *v /= n;
    }
    g.b_slp /= n;
    Ok((g, loss_sum / n))
}

pub fn predict(params: &ModelParams, x: &[f64]) -> Result<(Label, f64)> {
    let prob = forward(params, x)?.prob;
    Ok((threshold(prob), prob))
}

pub fn threshold(prob: f64) -> Label {
    if prob >= 0.5 {
        Label::PATIENT
    } else {
        Label::CONTROL
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean per-sample loss of each joint epoch.
    pub joint: Vec<f64>,
    /// Mean per-sample classification loss of each fine-tune epoch.
    pub finetune: Vec<f64>,
}

/// Mini-batch gradient descent with classical momentum:
/// `v ← μ·v + g`, `θ ← θ − η·v`.
pub struct Trainer {
    params: ModelParams,
    velocity: Gradients,
    learning_rate: f64,
    momentum: f64,
    weights: LossWeights,
}

impl Trainer {
    pub fn new(params: ModelParams, config: &TrainConfig) -> Self {
        let velocity = ModelParams::zeros(params.d_in, params.d_h);
        Self {
            params,
            velocity,
            learning_rate: config.learning_rate,
            momentum: config.momentum,
            weights: LossWeights::from(config),
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn into_params(self) -> ModelParams {
        self.params
    }

    pub fn reset_velocity(&mut self) {
        self.velocity = ModelParams::zeros(self.params.d_in, self.params.d_h);
    }

    /// One update on `batch`. Returns the batch's mean loss before the update.
    pub fn step(&mut self, batch: &[(&[f64], Label)], mode: Mode) -> Result<f64> {
        let (g, loss) = gradients(&self.params, batch, mode, self.weights)?;
        let (lr, mu) = (self.learning_rate, self.momentum);
        let update = |p: &mut [f64], v: &mut [f64], g: &[f64]| {
            for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                *v = mu * *v + g;
                *p -= lr * *v;
            }
        };
        if mode == Mode::Joint {
            update(&mut self.params.w_enc, &mut self.velocity.w_enc, &g.w_enc);
            update(&mut self.params.b_enc, &mut self.velocity.b_enc, &g.b_enc);
            update(&mut self.params.b_dec, &mut self.velocity.b_dec, &g.b_dec);
        }
        update(&mut self.params.w_slp, &mut self.velocity.w_slp, &g.w_slp);
        self.velocity.b_slp = mu * self.velocity.b_slp + g.b_slp;
        self.params.b_slp -= lr * self.velocity.b_slp;
        Ok(loss)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: TrainHistory,
}

pub fn train(features: &[Vec<f64>], labels: &[Label], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::Dimension {
            context: "training labels",
            expected: features.len(),
            found: labels.len(),
        });
    }
    let d_in = features
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidArgument("empty training set".into()))?;
    if d_in == 0 {
        return Err(Error::InvalidArgument("training features are empty vectors".into()));
    }
    if let Some(bad) = features.iter().find(|f| f.len() != d_in) {
        return Err(Error::Dimension {
            context: "training feature length",
            expected: d_in,
            found: bad.len(),
        });
    }
    for l in [Label::CONTROL, Label::PATIENT] {
        if !labels.contains(&l) {
            return Err(Error::InvalidArgument(format!("training set has no sample of class {}", l.value())));
        }
    }

    let d_h = config.bottleneck_for(d_in);
    let mut init_rng = seeding::rng(seeding::derive_seed(config.seed, tag::INIT, 0));
    let mut shuffle_rng = seeding::rng(seeding::derive_seed(config.seed, tag::SHUFFLE, 0));
    let mut trainer = Trainer::new(ModelParams::init(d_in, d_h, &mut init_rng), config);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..features.len()).collect();

    let phases = [(Mode::Joint, config.joint_epochs), (Mode::Finetune, config.finetune_epochs)];
    let mut epoch_counter = 0;
    for (mode, epochs) in phases {
        trainer.reset_velocity();
        for _ in 0..epochs {
            epoch_counter += 1;
            order.shuffle(&mut shuffle_rng);
            let mut total = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let batch: Vec<(&[f64], Label)> = chunk.iter().map(|&i| (features[i].as_slice(), labels[i])).collect();
                let loss = trainer.step(&batch, mode)?;
                if !loss.is_finite() || !trainer.params().is_finite() {
                    return Err(Error::Divergence {
                        epoch: epoch_counter,
                        learning_rate: config.learning_rate,
                        detail: format!("{mode:?} phase produced a non-finite loss or parameter"),
                    });
                }
                total += loss * chunk.len() as f64;
            }
            let mean = total / features.len() as f64;
            match mode {
                Mode::Joint => history.joint.push(mean),
                Mode::Finetune => history.finetune.push(mean),
            }
        }
    }
    Ok(TrainOutcome {
        params: trainer.into_params(),
        history,
    })
}
