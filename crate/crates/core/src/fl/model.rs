//! Softmax regression and a one-hidden-layer tanh network, both trained with
//! multi-class cross-entropy on a flat parameter vector.

use rand::seq::index::sample;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::fl::Dataset;
use crate::stats::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelKind {
    SoftmaxRegression,
    MlpOneHidden { hidden: usize },
}

/// Layer sizes of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub kind: ModelKind,
    pub inputs: usize,
    pub classes: usize,
}

impl ModelShape {
    /// Number of trainable parameters `D`.
    pub fn parameters(&self) -> usize {
        let (d, c) = (self.inputs, self.classes);
        match self.kind {
            ModelKind::SoftmaxRegression => c * (d + 1),
            ModelKind::MlpOneHidden { hidden: h } => h * (d + 1) + c * (h + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    shape: ModelShape,
    weights: Vec<f64>,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for (o, (row, bias)) in out.iter_mut().zip(w.chunks_exact(d).zip(b)) {
        *o = bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

impl Model {
    pub fn new(shape: ModelShape, weights: Vec<f64>) -> Result<Self> {
        if shape.inputs == 0 || shape.classes < 2 {
            return Err(invalid("models need at least one input and two classes"));
        }
        if let ModelKind::MlpOneHidden { hidden: 0 } = shape.kind {
            return Err(invalid("hidden layer must have at least one unit"));
        }
        check_len(shape.parameters(), weights.len(), "model weights")?;
        Ok(Self { shape, weights })
    }

    /// Zero weights for softmax regression; uniform Glorot weights and zero
    /// biases for the hidden-layer network.
    pub fn init(shape: ModelShape, stream: &RngStream) -> Result<Self> {
        let mut weights = vec![0.0; shape.parameters()];
        if let ModelKind::MlpOneHidden { hidden: h } = shape.kind {
            let (d, c) = (shape.inputs, shape.classes);
            let mut rng = stream.rng();
            let mut fill = |slice: &mut [f64], fan_in: usize, fan_out: usize| {
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let u = Uniform::new_inclusive(-a, a).expect("finite bounds");
                slice.iter_mut().for_each(|w| *w = u.sample(&mut rng));
            };
            fill(&mut weights[..h * d], d, h);
            let w2 = h * (d + 1);
            fill(&mut weights[w2..w2 + c * h], h, c);
        }
        Self::new(shape, weights)
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        check_len(self.shape.inputs, data.dim(), "feature dimension")?;
        check_len(self.shape.classes, data.classes(), "class count")
    }

    /// Class probabilities and, for the hidden-layer network, activations.
    fn forward(&self, x: &[f64], hidden: &mut Vec<f64>, probs: &mut [f64]) {
        let (d, c) = (self.shape.inputs, self.shape.classes);
        match self.shape.kind {
            ModelKind::SoftmaxRegression => {
                affine(&self.weights[..c * d], &self.weights[c * d..], x, probs);
            }
            ModelKind::MlpOneHidden { hidden: h } => {
                hidden.resize(h, 0.0);
                let w = &self.weights;
                affine(&w[..h * d], &w[h * d..h * (d + 1)], x, hidden);
                hidden.iter_mut().for_each(|a| *a = a.tanh());
                let o = h * (d + 1);
                affine(&w[o..o + c * h], &w[o + c * h..], hidden, probs);
            }
        }
        softmax_in_place(probs);
    }

    /// Mean cross-entropy and its gradient over `indices` (all rows if `None`).
    pub fn loss_and_gradient(&self, data: &Dataset, indices: Option<&[usize]>) -> Result<(f64, Vec<f64>)> {
        self.check_data(data)?;
        let all: Vec<usize>;
        let rows = match indices {
            Some(r) => r,
            None => {
                all = (0..data.len()).collect();
                &all
            }
        };
        if rows.is_empty() {
            return Err(invalid("cannot take a gradient over zero samples"));
        }
        let (d, c) = (self.shape.inputs, self.shape.classes);
        let mut grad = vec![0.0; self.dim()];
        let mut loss = 0.0;
        let mut probs = vec![0.0; c];
        let mut hidden = Vec::new();
        let mut back = Vec::new();
        for &i in rows {
            let (x, y) = data.sample(i);
            self.forward(x, &mut hidden, &mut probs);
            loss -= probs[y].max(f64::MIN_POSITIVE).ln();
            probs[y] -= 1.0;
            let dz = &probs;
            match self.shape.kind {
                ModelKind::SoftmaxRegression => {
                    let (gw, gb) = grad.split_at_mut(c * d);
                    for (k, &dzk) in dz.iter().enumerate() {
                        gw[k * d..(k + 1) * d].iter_mut().zip(x).for_each(|(g, xi)| *g += dzk * xi);
                        gb[k] += dzk;
                    }
                }
                ModelKind::MlpOneHidden { hidden: h } => {
                    let o = h * (d + 1);
                    let w2 = &self.weights[o..o + c * h];
                    back.clear();
                    back.resize(h, 0.0);
                    {
                        let (g1, g2) = grad.split_at_mut(o);
                        let (gw2, gb2) = g2.split_at_mut(c * h);
                        for (k, &dzk) in dz.iter().enumerate() {
                            gw2[k * h..(k + 1) * h].iter_mut().zip(&hidden).for_each(|(g, a)| *g += dzk * a);
                            gb2[k] += dzk;
                            back.iter_mut().zip(&w2[k * h..(k + 1) * h]).for_each(|(b, w)| *b += dzk * w);
                        }
                        let (gw1, gb1) = g1.split_at_mut(h * d);
                        for j in 0..h {
                            let da = back[j] * (1.0 - hidden[j] * hidden[j]);
                            gw1[j * d..(j + 1) * d].iter_mut().zip(x).for_each(|(g, xi)| *g += da * xi);
                            gb1[j] += da;
                        }
                    }
                }
            }
        }
        let n = rows.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        Ok((loss / n, grad))
    }

    pub fn loss(&self, data: &Dataset) -> Result<f64> {
        Ok(self.loss_and_gradient(data, None)?.0)
    }

    pub fn full_gradient(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(self.loss_and_gradient(data, None)?.1)
    }

    /// Fraction of rows whose most likely class is the label.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        self.check_data(data)?;
        let mut probs = vec![0.0; self.shape.classes];
        let mut hidden = Vec::new();
        let mut correct = 0usize;
        for i in 0..data.len() {
            let (x, y) = data.sample(i);
            self.forward(x, &mut hidden, &mut probs);
            let best = probs
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, &p)| if p > acc.1 { (k, p) } else { acc })
                .0;
            correct += usize::from(best == y);
        }
        Ok(correct as f64 / data.len() as f64)
    }

    /// Mean gradient over a mini-batch drawn uniformly without replacement.
    pub fn local_gradient(&self, shard: &Dataset, batch_size: usize, stream: &RngStream) -> Result<Vec<f64>> {
        if batch_size == 0 || batch_size > shard.len() {
            return Err(invalid(format!(
                "batch size {batch_size} must be in 1..={}",
                shard.len()
            )));
        }
        let rows = sample(&mut stream.rng(), shard.len(), batch_size).into_vec();
        Ok(self.loss_and_gradient(shard, Some(&rows))?.1)
    }

    /// `w ← w − η·ĝ`.
    pub fn sgd_step(&mut self, g_hat: &[f64], eta: f64) -> Result<()> {
        check_len(self.dim(), g_hat.len(), "update direction")?;
        if !(eta > 0.0) {
            return Err(invalid("learning rate must be positive"));
        }
        self.weights.iter_mut().zip(g_hat).for_each(|(w, g)| *w -= eta * g);
        Ok(())
    }
}

/// Rescales `g` onto the ball of radius `bound` if it lies outside.
pub fn clip_gradient(g: &[f64], bound: f64) -> Result<Vec<f64>> {
    if !(bound > 0.0) {
        return Err(invalid("clipping bound must be positive"));
    }
    let norm = crate::aircomp::l2_norm(g);
    Ok(if norm > bound {
        g.iter().map(|x| x * bound / norm).collect()
    } else {
        g.to_vec()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fl::synth_classification;
    use rand_distr::StandardNormal;

    fn data() -> Dataset {
        synth_classification(60, 5, 3, 2.0, &RngStream::root(4)).unwrap()
    }

    fn shapes() -> [ModelShape; 2] {
        [
            ModelShape { kind: ModelKind::SoftmaxRegression, inputs: 5, classes: 3 },
            ModelShape { kind: ModelKind::MlpOneHidden { hidden: 7 }, inputs: 5, classes: 3 },
        ]
    }

    fn random_model(shape: ModelShape, seed: u64) -> Model {
        let mut rng = RngStream::root(seed).rng();
        let w = (0..shape.parameters()).map(|_| 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        Model::new(shape, w).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = data();
        for shape in shapes() {
            let m = random_model(shape, 11);
            let g = m.full_gradient(&d).unwrap();
            let mut rng = RngStream::root(12).rng();
            for _ in 0..10 {
                let v: Vec<f64> = (0..m.dim()).map(|_| StandardNormal.sample(&mut rng)).collect();
                let eps = 1e-5;
                let shifted = |s: f64| {
                    let w = m.weights.iter().zip(&v).map(|(a, b)| a + s * b).collect();
                    Model::new(shape, w).unwrap().loss(&d).unwrap()
                };
                let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
                let an: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "{shape:?}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn full_batch_equals_full_gradient() {
        let d = data();
        for shape in shapes() {
            let m = random_model(shape, 2);
            let g = m.local_gradient(&d, d.len(), &RngStream::root(0)).unwrap();
            let f = m.full_gradient(&d).unwrap();
            for (a, b) in g.iter().zip(&f) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_softmax_bias_gradient_sums_to_zero() {
        let d = data();
        let m = Model::init(shapes()[0], &RngStream::root(0)).unwrap();
        let g = m.full_gradient(&d).unwrap();
        let bias: f64 = g[15..].iter().sum();
        assert!(bias.abs() < 1e-12);
    }

    #[test]
    fn clipping() {
        let g = [3.0, 4.0];
        assert_eq!(clip_gradient(&g, 10.0).unwrap(), g.to_vec());
        let c = clip_gradient(&g, 2.5).unwrap();
        assert!((crate::aircomp::l2_norm(&c) - 2.5).abs() < 1e-12);
        assert!((c[0] / c[1] - 0.75).abs() < 1e-12);
        assert_eq!(clip_gradient(&c, 2.5).unwrap(), c);
        assert!(clip_gradient(&g, 0.0).is_err());
    }

    #[test]
    fn sgd_steps_compose() {
        let mut a = random_model(shapes()[1], 3);
        let mut b = a.clone();
        let g: Vec<f64> = (0..a.dim()).map(|i| i as f64 * 0.01).collect();
        let before = a.clone();
        a.sgd_step(&vec![0.0; a.dim()], 0.1).unwrap();
        assert_eq!(a, before);
        a.sgd_step(&g, 0.05).unwrap();
        a.sgd_step(&g, 0.05).unwrap();
        b.sgd_step(&g, 0.1).unwrap();
        for (x, y) in a.weights().iter().zip(b.weights()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(b.sgd_step(&g[1..], 0.1).is_err());
        assert!(b.sgd_step(&g, 0.0).is_err());
    }

    #[test]
    fn batch_size_checked() {
        let d = data();
        let m = Model::init(shapes()[0], &RngStream::root(0)).unwrap();
        assert!(m.local_gradient(&d, 0, &RngStream::root(0)).is_err());
        assert!(m.local_gradient(&d, 61, &RngStream::root(0)).is_err());
    }
}
