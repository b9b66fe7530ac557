//! The federated training loop with a pluggable gradient aggregator.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::aircomp::{l2_norm, make_interference, ota_round, ideal_round, GradientSet, InterferenceMode};
use crate::channel::{draw_geometry, draw_realization, SystemConfig};
use crate::error::{invalid, Result};
use crate::fl::{clip_gradient, synth_classification, Dataset, Model, ModelKind, ModelShape};
use crate::ris::PhaseImpairment;
use crate::schemes::Strategy;
use crate::stats::RngStream;

/// The synthetic classification task and how it is split across clients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    pub train_per_client: usize,
    pub test_samples: usize,
    pub features: usize,
    pub classes: usize,
    /// Distance of each class center from the origin, in noise standard deviations.
    pub separation: f64,
    pub labels_per_client: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            train_per_client: 200,
            test_samples: 2000,
            features: 20,
            classes: 10,
            separation: 3.0,
            labels_per_client: 2,
        }
    }
}

/// How the PS turns local gradients into the global update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Aggregator {
    /// Error-free averaging.
    Ideal,
    OverTheAir {
        strategy: Strategy,
        #[serde(default)]
        impairment: PhaseImpairment,
        #[serde(default)]
        interference: InterferenceMode,
    },
}

impl Aggregator {
    pub fn label(&self) -> String {
        match self {
            Aggregator::Ideal => "ideal".to_owned(),
            Aggregator::OverTheAir { strategy, .. } => strategy.name().to_owned(),
        }
    }
}

/// Everything that defines one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub task: TaskConfig,
    pub model: ModelKind,
    pub aggregator: Aggregator,
    pub rounds: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Multiplies every denoising factor.
    #[serde(default = "unit")]
    pub lambda_scale: f64,
    /// When set, `system.gradient_bound` is replaced by the 99th percentile of
    /// local gradient norms over this many ideal pilot rounds.
    #[serde(default)]
    pub pilot_rounds: Option<usize>,
}

fn unit() -> f64 {
    1.0
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            task: TaskConfig::default(),
            model: ModelKind::SoftmaxRegression,
            aggregator: Aggregator::Ideal,
            rounds: 300,
            learning_rate: 0.005,
            batch_size: 50,
            lambda_scale: 1.0,
            pilot_rounds: Some(50),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if self.rounds == 0 || self.batch_size == 0 {
            return Err(invalid("rounds and batch size must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(self.lambda_scale > 0.0) {
            return Err(invalid("learning rate and lambda scale must be positive"));
        }
        if self.batch_size > self.task.train_per_client {
            return Err(invalid("batch size exceeds the per-client sample count"));
        }
        Ok(())
    }

    pub fn shape(&self, data: &FederatedData) -> ModelShape {
        ModelShape {
            kind: self.model,
            inputs: data.test.dim(),
            classes: data.test.classes(),
        }
    }
}

/// Client shards plus held-out test data.
#[derive(Clone, Debug)]
pub struct FederatedData {
    pub clients: Vec<Dataset>,
    /// Union of the client shards.
    pub train: Dataset,
    pub test: Dataset,
}

impl FederatedData {
    /// Splits `pool` across `clients` with the configured label skew,
    /// keeping at most `cap` random samples per client.
    pub fn from_pool(
        pool: &Dataset,
        test: Dataset,
        clients: usize,
        labels_per_client: usize,
        cap: usize,
        stream: &RngStream,
    ) -> Result<Self> {
        let mut shards = crate::fl::partition_indices(pool, clients, labels_per_client, stream)?;
        let mut rng = stream.child("cap", 0).rng();
        for shard in shards.iter_mut().filter(|s| s.len() > cap) {
            shard.shuffle(&mut rng);
            shard.truncate(cap);
        }
        let all: Vec<usize> = shards.iter().flatten().copied().collect();
        let clients = shards
            .iter()
            .enumerate()
            .map(|(i, idx)| pool.subset(idx, format!("{}/client{i}", pool.name)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            clients,
            train: pool.subset(&all, pool.name.clone())?,
            test,
        })
    }
}

/// The synthetic blob task of `config`, identical for every aggregator.
pub fn prepare_data(config: &RunConfig) -> Result<FederatedData> {
    let t = &config.task;
    let root = RngStream::root(config.system.seed);
    let k = config.system.targets;
    let pool = synth_classification(
        k * t.train_per_client + t.classes * k,
        t.features,
        t.classes,
        t.separation,
        &root.child("data", 0),
    )?;
    let test = synth_classification(t.test_samples, t.features, t.classes, t.separation, &root.child("data", 1))?;
    FederatedData::from_pool(&pool, test, k, t.labels_per_client, usize::MAX, &root.child("partition", 0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
    /// `‖g_t‖` of the error-free aggregate.
    pub global_grad_norm: f64,
    /// `‖ĝ_t − g_t‖²`.
    pub error_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub label: String,
    pub ris_elements: usize,
    pub seed: u64,
    pub gradient_bound: f64,
    pub records: Vec<RoundRecord>,
}

impl RunTrace {
    pub fn final_accuracy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.test_accuracy)
    }
}

/// Empirical learning constants from an ideal-aggregation pilot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PilotStats {
    /// 99th percentile of local mini-batch gradient norms.
    pub gradient_bound: f64,
    /// Largest secant estimate of the gradient Lipschitz constant.
    pub smoothness: f64,
    /// Largest `‖∇F_k‖ / ‖∇F‖` seen.
    pub dissimilarity: f64,
    /// Mean `‖g_k − ∇F_k‖²` over clients and rounds.
    pub sgd_variance: f64,
    /// `F(w₀)`, an upper bound on `F(w₀) − F*` for a nonnegative loss.
    pub initial_gap: f64,
    /// Local mini-batch gradients of every pilot round.
    pub recorded_gradients: Vec<Vec<Vec<f64>>>,
}

fn percentile(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let pos = ((values.len() - 1) as f64 * q).round() as usize;
    values[pos]
}

/// Runs `rounds` unclipped ideal rounds and measures the bound constants.
pub fn run_pilot(config: &RunConfig, data: &FederatedData, rounds: usize) -> Result<PilotStats> {
    if rounds == 0 {
        return Err(invalid("pilot needs at least one round"));
    }
    let root = RngStream::root(config.system.seed);
    let mut model = Model::init(config.shape(data), &root.child("init", 0))?;
    let initial_gap = model.loss(&data.train)?;
    let mut norms = Vec::new();
    let (mut smooth, mut dissim, mut var_sum, mut var_n) = (0.0f64, 0.0f64, 0.0, 0usize);
    let mut recorded = Vec::with_capacity(rounds);
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for t in 0..rounds {
        let rs = root.child("round", t as u64);
        let full: Vec<Vec<f64>> = data.clients.iter().map(|c| model.full_gradient(c)).collect::<Result<_>>()?;
        let global = mean_vectors(&full);
        let gnorm = l2_norm(&global);
        if gnorm > 0.0 {
            dissim = full.iter().map(|g| l2_norm(g) / gnorm).fold(dissim, f64::max);
        }
        if let Some((pw, pg)) = &prev {
            let dw = diff_norm(model.weights(), pw);
            if dw > 0.0 {
                smooth = smooth.max(diff_norm(&global, pg) / dw);
            }
        }
        let local = local_gradients(&model, data, config.batch_size, &rs)?;
        for (g, f) in local.iter().zip(&full) {
            norms.push(l2_norm(g));
            var_sum += diff_norm(g, f).powi(2);
            var_n += 1;
        }
        prev = Some((model.weights().to_vec(), global));
        model.sgd_step(&mean_vectors(&local), config.learning_rate)?;
        recorded.push(local);
    }
    Ok(PilotStats {
        gradient_bound: percentile(&mut norms, 0.99),
        smoothness: smooth,
        dissimilarity: dissim.max(1.0),
        sgd_variance: var_sum / var_n as f64,
        initial_gap,
        recorded_gradients: recorded,
    })
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mean_vectors(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; vs[0].len()];
    for v in vs {
        out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
    }
    let n = vs.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

fn local_gradients(model: &Model, data: &FederatedData, batch: usize, round: &RngStream) -> Result<Vec<Vec<f64>>> {
    data.clients
        .iter()
        .enumerate()
        .map(|(k, shard)| model.local_gradient(shard, batch, &round.child("batch", k as u64)))
        .collect()
}

/// [`prepare_data`] followed by [`train_on`].
pub fn train(config: &RunConfig) -> Result<RunTrace> {
    let data = prepare_data(config)?;
    train_on(config, &data)
}

/// Runs the configured number of rounds on prepared client data.
///
/// Data, initialization, geometry and per-round fading depend only on
/// `system.seed`, so runs differing only in the aggregator are paired.
pub fn train_on(config: &RunConfig, data: &FederatedData) -> Result<RunTrace> {
    config.validate()?;
    if data.clients.len() != config.system.targets {
        return Err(invalid("client count must equal the number of target devices"));
    }
    let mut system = config.system.clone();
    if let Some(p) = config.pilot_rounds {
        system.gradient_bound = run_pilot(config, data, p)?.gradient_bound;
    }
    let g_bound = system.gradient_bound;
    let root = RngStream::root(system.seed);
    let mut model = Model::init(config.shape(data), &root.child("init", 0))?;
    let dim = model.dim();
    let ota = match config.aggregator {
        Aggregator::Ideal => None,
        Aggregator::OverTheAir { strategy, .. } => {
            let beta = draw_geometry(&system, &root.child("geometry", 0))?;
            let base = strategy.base_params(&system, &beta)?;
            Some((beta, base))
        }
    };
    let mut records = Vec::with_capacity(config.rounds);
    let mut previous_global: Option<Vec<f64>> = None;
    for t in 0..config.rounds {
        let rs = root.child("round", t as u64);
        let local = local_gradients(&model, data, config.batch_size, &rs)?
            .iter()
            .map(|g| clip_gradient(g, g_bound))
            .collect::<Result<Vec<_>>>()?;
        let (update, global, error_sq) = match (&config.aggregator, &ota) {
            (
                Aggregator::OverTheAir {
                    strategy,
                    impairment,
                    interference,
                },
                Some((beta, base)),
            ) => {
                let real = draw_realization(&system, beta, &rs.child("chan", 0))?;
                let (mut params, phases) = strategy.round_setup(
                    &system,
                    base,
                    &real,
                    t as u64,
                    &rs.child("phase", 0),
                    g_bound * g_bound,
                    dim,
                )?;
                params.lambda *= config.lambda_scale;
                let phases = impairment.apply(phases, &rs.child("impair", 0))?;
                let intf = make_interference(
                    *interference,
                    system.interferers,
                    dim,
                    previous_global.as_deref(),
                    &rs.child("intf", 0),
                )?;
                let set = GradientSet::new(local, intf)?;
                let (est, stats) = ota_round(&set, &real, &phases, &params, system.noise_variance(), &rs.child("noise", 0))?;
                (est, ideal_round(&set), stats.sq_norm)
            }
            _ => {
                let g = mean_vectors(&local);
                (g.clone(), g, 0.0)
            }
        };
        model.sgd_step(&update, config.learning_rate)?;
        records.push(RoundRecord {
            round: t + 1,
            train_loss: model.loss(&data.train)?,
            test_accuracy: model.accuracy(&data.test)?,
            global_grad_norm: l2_norm(&global),
            error_sq,
        });
        previous_global = Some(global);
    }
    Ok(RunTrace {
        label: config.aggregator.label(),
        ris_elements: system.ris_elements,
        seed: system.seed,
        gradient_bound: g_bound,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(aggregator: Aggregator) -> RunConfig {
        RunConfig {
            aggregator,
            rounds: 40,
            pilot_rounds: Some(10),
            task: TaskConfig {
                train_per_client: 60,
                test_samples: 300,
                ..TaskConfig::default()
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let c = quick(Aggregator::OverTheAir {
            strategy: Strategy::SchemeI,
            impairment: PhaseImpairment::Ideal,
            interference: InterferenceMode::ZeroGradientAttack,
        });
        let a = train(&c).unwrap();
        assert_eq!(a, train(&c).unwrap());
        assert_eq!(a.records.len(), 40);
        assert!(a.records.iter().all(|r| r.error_sq.is_finite()));
    }

    #[test]
    fn ideal_training_learns_separable_data() {
        let mut c = quick(Aggregator::Ideal);
        c.task.separation = 6.0;
        c.task.labels_per_client = 10;
        c.learning_rate = 0.05;
        c.rounds = 200;
        let trace = train(&c).unwrap();
        assert!(trace.final_accuracy() >= 0.9, "accuracy {}", trace.final_accuracy());
        assert_eq!(trace.records.iter().map(|r| r.error_sq).sum::<f64>(), 0.0);
    }

    #[test]
    fn pilot_constants_are_sane() {
        let c = quick(Aggregator::Ideal);
        let data = prepare_data(&c).unwrap();
        let p = run_pilot(&c, &data, 10).unwrap();
        assert!(p.gradient_bound > 0.0 && p.smoothness > 0.0 && p.sgd_variance > 0.0);
        assert!(p.dissimilarity >= 1.0);
        assert!((p.initial_gap - (10f64).ln()).abs() < 1e-12);
        assert_eq!(p.recorded_gradients.len(), 10);
    }

    #[test]
    fn batch_larger_than_shard_rejected() {
        let mut c = quick(Aggregator::Ideal);
        c.batch_size = 61;
        assert!(train(&c).is_err());
    }
}
