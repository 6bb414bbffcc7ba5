//! Stochastic gradient ascent on the negative-sampling objective
//!
//! ```text
//! L1 = log s(E1(w, c)) + sum_i log s(-E1(w, n_i))
//! L2 = log s(E2(w, e)) + sum_i log s(-E2(w, m_i))
//! L  = L1 + alpha * L2
//! ```
//!
//! where `s` is the logistic function, `E1 = -W2 + b1` and `E2` is either
//! `-W2 + b2` or, for `IsA` targets in `IsA`-only mode, `-KL(w || e) + b2`.

use std::cell::UnsafeCell;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{
    count_pairs, generate_pairs, CorpusError, PairConfig, SamplingTables, TrainingPair, Vocabulary,
    DEFAULT_SHUFFLE_BUFFER, DEFAULT_TABLE_SIZE,
};
use crate::geometry::{energy_grad_into, energy_value, EnergyKind, GaussianView, GeometryError};
use crate::relations::{resample_negatives, RelationStore, RelationTag, TargetMode};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    Learned,
    Fixed,
}

impl std::str::FromStr for BiasMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "learned" => Ok(BiasMode::Learned),
            "fixed" => Ok(BiasMode::Fixed),
            _ => Err(format!("unknown bias mode {s:?} (expected learned|fixed)")),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub window: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub lr_min: f64,
    /// Sub-sampling threshold `t`; `None` disables sub-sampling.
    pub subsample: Option<f64>,
    pub alpha: f64,
    pub min_count: u64,
    pub sigma_init: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub max_norm: Option<f64>,
    pub seed: u64,
    pub bias_mode: BiasMode,
    pub fixed_bias_value: f64,
    pub squared_w2_energy: bool,
    pub dynamic_window: bool,
    pub threads: usize,
    pub shuffle_buffer: usize,
    pub table_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 50,
            epochs: 5,
            window: 5,
            negatives: 5,
            learning_rate: 0.025,
            lr_min: 1e-4,
            subsample: Some(1e-5),
            alpha: 1.0,
            min_count: 5,
            sigma_init: 1.0,
            sigma_min: 1e-3,
            sigma_max: 10.0,
            max_norm: None,
            seed: 1,
            bias_mode: BiasMode::Learned,
            fixed_bias_value: 1.0,
            squared_w2_energy: false,
            dynamic_window: false,
            threads: 1,
            shuffle_buffer: DEFAULT_SHUFFLE_BUFFER,
            table_size: DEFAULT_TABLE_SIZE,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::Config(m.to_owned()));
        if self.dim == 0 {
            return fail("dim must be positive");
        }
        if self.window == 0 {
            return fail("window must be positive");
        }
        if self.negatives == 0 {
            return fail("negatives must be at least 1");
        }
        if !(self.learning_rate > 0.0) || !(self.lr_min > 0.0) || self.lr_min >= self.learning_rate
        {
            return fail("need 0 < lr_min < learning_rate");
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0) {
                return fail("subsample threshold must be positive");
            }
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return fail("alpha must be finite and non-negative");
        }
        if !(self.sigma_min > 0.0
            && self.sigma_min <= self.sigma_init
            && self.sigma_init <= self.sigma_max)
        {
            return fail("need 0 < sigma_min <= sigma_init <= sigma_max");
        }
        if let Some(n) = self.max_norm {
            if !(n > 0.0) {
                return fail("max_norm must be positive");
            }
        }
        if !self.fixed_bias_value.is_finite() {
            return fail("fixed_bias_value must be finite");
        }
        if self.threads == 0 {
            return fail("threads must be at least 1");
        }
        if self.shuffle_buffer == 0 {
            return fail("shuffle_buffer must be positive");
        }
        Ok(())
    }

    pub fn pair_config(&self) -> PairConfig {
        PairConfig {
            window: self.window,
            dynamic_window: self.dynamic_window,
            shuffle_buffer: self.shuffle_buffer,
        }
    }

    fn w2_kind(&self) -> EnergyKind {
        if self.squared_w2_energy {
            EnergyKind::W2Squared
        } else {
            EnergyKind::W2
        }
    }
}

/// Means (row-major `V x D`), spherical deviations, and the two global biases.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<F> {
    dim: usize,
    pub means: Vec<F>,
    pub sigmas: Vec<F>,
    pub bias1: F,
    pub bias2: F,
}

impl<F: Scalar> EmbeddingMatrix<F> {
    pub fn new(dim: usize, means: Vec<F>, sigmas: Vec<F>, bias1: F, bias2: F) -> Self {
        assert_eq!(means.len(), dim * sigmas.len(), "means must be V x D");
        EmbeddingMatrix {
            dim,
            means,
            sigmas,
            bias1,
            bias2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_words(&self) -> usize {
        self.sigmas.len()
    }

    pub fn mean(&self, id: u32) -> &[F] {
        let i = id as usize * self.dim;
        &self.means[i..i + self.dim]
    }

    pub fn mean_mut(&mut self, id: u32) -> &mut [F] {
        let i = id as usize * self.dim;
        &mut self.means[i..i + self.dim]
    }

    pub fn gaussian(&self, id: u32) -> GaussianView<'_, F> {
        GaussianView::new(self.mean(id), self.sigmas[id as usize])
    }

    /// Casts every parameter to another scalar type.
    pub fn cast<G: Scalar>(&self) -> EmbeddingMatrix<G> {
        let c = |x: F| G::of(x.as_f64());
        EmbeddingMatrix {
            dim: self.dim,
            means: self.means.iter().map(|&x| c(x)).collect(),
            sigmas: self.sigmas.iter().map(|&x| c(x)).collect(),
            bias1: c(self.bias1),
            bias2: c(self.bias2),
        }
    }
}

/// Random means in `(-0.5/D, 0.5/D)`, all deviations `sigma_init`.
pub fn init_params<F: Scalar>(
    n_words: usize,
    config: &TrainConfig,
    seed: u64,
) -> EmbeddingMatrix<F> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / config.dim as f64;
    let means = (0..n_words * config.dim)
        .map(|_| F::of(rng.random_range(-half..half)))
        .collect();
    let bias = match config.bias_mode {
        BiasMode::Learned => F::one(),
        BiasMode::Fixed => F::of(config.fixed_bias_value),
    };
    EmbeddingMatrix {
        dim: config.dim,
        means,
        sigmas: vec![F::of(config.sigma_init); n_words],
        bias1: bias,
        bias2: bias,
    }
}

/// Relation part of a loss sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationTarget {
    /// `None` for the sentinel target.
    pub tag: Option<RelationTag>,
    pub target: u32,
    pub negatives: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossSample {
    pub center: u32,
    pub context: u32,
    pub negatives: Vec<u32>,
    pub relation: Option<RelationTarget>,
}

/// Which terms the objective contains and the energies they use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    /// Energy of the context term (`W2` or `W2Squared`).
    pub energy: EnergyKind,
    /// `Some` adds the relation term.
    pub relations: Option<TargetMode>,
    pub alpha: f64,
}

impl Objective {
    pub fn wdg(energy: EnergyKind) -> Self {
        Objective {
            energy,
            relations: None,
            alpha: 0.0,
        }
    }

    pub fn wdg_ei(energy: EnergyKind, mode: TargetMode, alpha: f64) -> Self {
        Objective {
            energy,
            relations: Some(mode),
            alpha,
        }
    }

    fn relation_energy(&self, tag: Option<RelationTag>) -> Result<EnergyKind, TrainError> {
        match (self.relations, tag) {
            (Some(TargetMode::IsAOnly), Some(RelationTag::IsA)) => Ok(EnergyKind::Kl),
            (Some(TargetMode::IsAOnly), Some(other)) => Err(TrainError::Config(format!(
                "relation {other} in an IsA-only objective"
            ))),
            _ => Ok(self.energy),
        }
    }
}

/// `log s(x)`, stable for large `|x|`.
pub fn log_sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

fn check_ids<F: Scalar>(
    sample: &LossSample,
    params: &EmbeddingMatrix<F>,
) -> Result<(), TrainError> {
    let n = params.n_words() as u32;
    let mut ids = [sample.center, sample.context]
        .into_iter()
        .chain(sample.negatives.iter().copied());
    let rel_ids = sample
        .relation
        .iter()
        .flat_map(|r| std::iter::once(r.target).chain(r.negatives.iter().copied()));
    if let Some(bad) = ids.by_ref().chain(rel_ids).find(|&id| id >= n) {
        return Err(TrainError::Consistency(format!(
            "word id {bad} outside embedding table of {n} rows"
        )));
    }
    Ok(())
}

fn check_sigmas<F: Scalar>(
    ids: impl Iterator<Item = u32>,
    params: &EmbeddingMatrix<F>,
) -> Result<(), TrainError> {
    for id in ids {
        let s = params.sigmas[id as usize];
        if !(s > F::zero()) {
            return Err(GeometryError::Domain(s.as_f64()).into());
        }
    }
    Ok(())
}

fn relation_loss<F: Scalar>(
    kind: EnergyKind,
    center: u32,
    positive: u32,
    negatives: &[u32],
    bias: F,
    params: &EmbeddingMatrix<F>,
) -> F {
    let w = params.gaussian(center);
    let term = |other: u32, sign: F| {
        log_sigmoid(sign * energy_value(kind, w, params.gaussian(other), bias))
    };
    term(positive, F::one()) + negatives.iter().map(|&n| term(n, -F::one())).sum::<F>()
}

/// Context part `L1` of the objective.
pub fn wdg_loss<F: Scalar>(
    sample: &LossSample,
    params: &EmbeddingMatrix<F>,
    energy: EnergyKind,
) -> Result<F, TrainError> {
    check_ids(sample, params)?;
    Ok(relation_loss(
        energy,
        sample.center,
        sample.context,
        &sample.negatives,
        params.bias1,
        params,
    ))
}

/// Relation part `L2` of the objective.
pub fn relation_term<F: Scalar>(
    sample: &LossSample,
    params: &EmbeddingMatrix<F>,
    objective: &Objective,
) -> Result<F, TrainError> {
    check_ids(sample, params)?;
    let rel = sample
        .relation
        .as_ref()
        .ok_or_else(|| TrainError::Config("sample carries no relation target".into()))?;
    let kind = objective.relation_energy(rel.tag)?;
    if kind == EnergyKind::Kl {
        check_sigmas(
            std::iter::once(sample.center)
                .chain(std::iter::once(rel.target))
                .chain(rel.negatives.iter().copied()),
            params,
        )?;
    }
    Ok(relation_loss(
        kind,
        sample.center,
        rel.target,
        &rel.negatives,
        params.bias2,
        params,
    ))
}

/// `L1 + alpha * L2`.
pub fn wdg_ei_loss<F: Scalar>(
    sample: &LossSample,
    params: &EmbeddingMatrix<F>,
    objective: &Objective,
) -> Result<F, TrainError> {
    let l1 = wdg_loss(sample, params, objective.energy)?;
    let l2 = relation_term(sample, params, objective)?;
    Ok(l1 + F::of(objective.alpha) * l2)
}

/// Loss of `sample` under `objective` (relation term included when the
/// objective asks for it).
pub fn objective_loss<F: Scalar>(
    sample: &LossSample,
    params: &EmbeddingMatrix<F>,
    objective: &Objective,
) -> Result<F, TrainError> {
    match objective.relations {
        Some(_) => wdg_ei_loss(sample, params, objective),
        None => wdg_loss(sample, params, objective.energy),
    }
}

/// Sparse gradient of the objective: one entry per distinct row touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient<F> {
    pub rows: Vec<u32>,
    /// `rows.len() x D`, aligned with `rows`.
    pub d_means: Vec<F>,
    pub d_sigmas: Vec<F>,
    pub d_bias1: F,
    pub d_bias2: F,
    scratch_w: Vec<F>,
    scratch_c: Vec<F>,
}

impl<F: Scalar> Gradient<F> {
    fn reset(&mut self, dim: usize) {
        self.rows.clear();
        self.d_means.clear();
        self.d_sigmas.clear();
        self.d_bias1 = F::zero();
        self.d_bias2 = F::zero();
        self.scratch_w.clear();
        self.scratch_w.resize(dim, F::zero());
        self.scratch_c.clear();
        self.scratch_c.resize(dim, F::zero());
    }

    fn slot(&mut self, row: u32, dim: usize) -> usize {
        match self.rows.iter().position(|&r| r == row) {
            Some(i) => i,
            None => {
                self.rows.push(row);
                self.d_means.extend(std::iter::repeat_n(F::zero(), dim));
                self.d_sigmas.push(F::zero());
                self.rows.len() - 1
            }
        }
    }

    fn add_row(&mut self, row: u32, d_mean: &[F], d_sigma: F, factor: F) {
        let dim = d_mean.len();
        let i = self.slot(row, dim);
        for (g, &d) in self.d_means[i * dim..(i + 1) * dim].iter_mut().zip(d_mean) {
            *g = *g + factor * d;
        }
        self.d_sigmas[i] = self.d_sigmas[i] + factor * d_sigma;
    }

    /// Gradient for `row`, if touched: `(d_mean, d_sigma)`.
    pub fn row(&self, row: u32) -> Option<(&[F], F)> {
        let i = self.rows.iter().position(|&r| r == row)?;
        let dim = self.d_means.len() / self.rows.len();
        Some((&self.d_means[i * dim..(i + 1) * dim], self.d_sigmas[i]))
    }

    pub fn is_finite(&self) -> bool {
        self.d_bias1.is_finite()
            && self.d_bias2.is_finite()
            && self.d_means.iter().all(|x| x.is_finite())
            && self.d_sigmas.iter().all(|x| x.is_finite())
    }

    /// Adds `weight * d log s(sign * E(w, x)) / d theta`; returns the term's value.
    #[allow(clippy::too_many_arguments)]
    fn add_term(
        &mut self,
        kind: EnergyKind,
        params: &EmbeddingMatrix<F>,
        w: u32,
        x: u32,
        positive: bool,
        weight: F,
        second_bias: bool,
    ) -> F {
        let bias = if second_bias {
            params.bias2
        } else {
            params.bias1
        };
        self.scratch_w.iter_mut().for_each(|v| *v = F::zero());
        self.scratch_c.iter_mut().for_each(|v| *v = F::zero());
        let gw = params.gaussian(w);
        let gx = params.gaussian(x);
        let (e, ds_w, ds_x) = energy_grad_into(
            kind,
            gw,
            gx,
            bias,
            F::one(),
            &mut self.scratch_w,
            &mut self.scratch_c,
        );
        let (value, dl_de) = if positive {
            (log_sigmoid(e), weight * sigmoid(-e))
        } else {
            (log_sigmoid(-e), -weight * sigmoid(e))
        };
        let sw = std::mem::take(&mut self.scratch_w);
        let sc = std::mem::take(&mut self.scratch_c);
        self.add_row(w, &sw, ds_w, dl_de);
        self.add_row(x, &sc, ds_x, dl_de);
        self.scratch_w = sw;
        self.scratch_c = sc;
        if second_bias {
            self.d_bias2 = self.d_bias2 + dl_de;
        } else {
            self.d_bias1 = self.d_bias1 + dl_de;
        }
        weight * value
    }
}

/// Objective value and its gradient with respect to every parameter the
/// sample touches, written into `grad`.
pub fn loss_and_grad<F: Scalar>(
    sample: &LossSample,
    params: &EmbeddingMatrix<F>,
    objective: &Objective,
    grad: &mut Gradient<F>,
) -> Result<F, TrainError> {
    check_ids(sample, params)?;
    grad.reset(params.dim());
    let kind = objective.energy;
    let mut loss = grad.add_term(
        kind,
        params,
        sample.center,
        sample.context,
        true,
        F::one(),
        false,
    );
    for &n in &sample.negatives {
        loss = loss + grad.add_term(kind, params, sample.center, n, false, F::one(), false);
    }
    if objective.relations.is_some() {
        let rel = sample
            .relation
            .as_ref()
            .ok_or_else(|| TrainError::Config("sample carries no relation target".into()))?;
        let rkind = objective.relation_energy(rel.tag)?;
        if rkind == EnergyKind::Kl {
            check_sigmas(
                std::iter::once(sample.center)
                    .chain(std::iter::once(rel.target))
                    .chain(rel.negatives.iter().copied()),
                params,
            )?;
        }
        let alpha = F::of(objective.alpha);
        loss = loss + grad.add_term(rkind, params, sample.center, rel.target, true, alpha, true);
        for &n in &rel.negatives {
            loss = loss + grad.add_term(rkind, params, sample.center, n, false, alpha, true);
        }
    }
    Ok(loss)
}

/// Parameter constraints applied after every update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraints {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub max_norm: Option<f64>,
    pub learn_bias: bool,
}

impl From<&TrainConfig> for Constraints {
    fn from(c: &TrainConfig) -> Self {
        Constraints {
            sigma_min: c.sigma_min,
            sigma_max: c.sigma_max,
            max_norm: c.max_norm,
            learn_bias: c.bias_mode == BiasMode::Learned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome<F> {
    Applied {
        loss: F,
    },
    /// The gradient (or loss) was not finite; parameters are unchanged.
    Skipped,
}

/// One ascent step `theta += lr * dL/dtheta`, then sigma clamping and the
/// optional mean-norm constraint.
pub fn sgd_step<F: Scalar>(
    sample: &LossSample,
    params: &mut EmbeddingMatrix<F>,
    lr: F,
    objective: &Objective,
    constraints: &Constraints,
    grad: &mut Gradient<F>,
) -> Result<StepOutcome<F>, TrainError> {
    let loss = loss_and_grad(sample, params, objective, grad)?;
    if !loss.is_finite() || !grad.is_finite() {
        return Ok(StepOutcome::Skipped);
    }
    if lr == F::zero() {
        return Ok(StepOutcome::Applied { loss });
    }
    apply(params, grad, lr, constraints);
    Ok(StepOutcome::Applied { loss })
}

fn apply<F: Scalar>(params: &mut EmbeddingMatrix<F>, grad: &Gradient<F>, lr: F, c: &Constraints) {
    let dim = params.dim();
    let (smin, smax) = (F::of(c.sigma_min), F::of(c.sigma_max));
    for (i, &row) in grad.rows.iter().enumerate() {
        let mean = params.mean_mut(row);
        for (m, &g) in mean.iter_mut().zip(&grad.d_means[i * dim..(i + 1) * dim]) {
            *m = *m + lr * g;
        }
        if let Some(max) = c.max_norm {
            let max = F::of(max);
            let norm = mean.iter().map(|&x| x * x).sum::<F>().sqrt();
            if norm > max {
                let k = max / norm;
                mean.iter_mut().for_each(|x| *x = *x * k);
            }
        }
        let s = &mut params.sigmas[row as usize];
        *s = (*s + lr * grad.d_sigmas[i]).max(smin).min(smax);
    }
    if c.learn_bias {
        params.bias1 = params.bias1 + lr * grad.d_bias1;
        params.bias2 = params.bias2 + lr * grad.d_bias2;
    }
}

/// Corpus file plus the tables built over it.
#[derive(Debug, Clone, Copy)]
pub struct Corpus<'a> {
    pub path: &'a Path,
    pub vocab: &'a Vocabulary,
    pub tables: &'a SamplingTables,
}

/// Relation supervision for the two-part objective.
#[derive(Debug, Clone, Copy)]
pub struct Supervision<'a> {
    pub store: &'a RelationStore,
    pub mode: TargetMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub pairs: u64,
    pub mean_loss: f64,
    /// Learning rate at the end of the epoch.
    pub lr: f64,
    pub skipped: u64,
    pub sigma_mean: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl fmt::Display for EpochReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch={} pairs={} mean_loss={:.6} lr={:.6} skipped={}",
            self.epoch, self.pairs, self.mean_loss, self.lr, self.skipped
        )
    }
}

impl EpochReport {
    /// Deviation statistics line, logged alongside the epoch line.
    pub fn sigma_line(&self) -> String {
        format!(
            "sigma epoch={} mean={:.6} min={:.6} max={:.6}",
            self.epoch, self.sigma_mean, self.sigma_min, self.sigma_max
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
}

impl TrainReport {
    pub fn skipped(&self) -> u64 {
        self.epochs.iter().map(|e| e.skipped).sum()
    }
}

impl fmt::Display for TrainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.epochs {
            writeln!(f, "{e}")?;
            writeln!(f, "{}", e.sigma_line())?;
        }
        Ok(())
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finaliser over the combined inputs
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-worker state: RNG, gradient buffer, running sums.
struct Worker<F> {
    rng: ChaCha8Rng,
    grad: Gradient<F>,
    sample: LossSample,
    loss: f64,
    pairs: u64,
    skipped: u64,
}

impl<F: Scalar> Worker<F> {
    fn new(seed: u64) -> Self {
        Worker {
            rng: ChaCha8Rng::seed_from_u64(seed),
            grad: Gradient::default(),
            sample: LossSample {
                center: 0,
                context: 0,
                negatives: Vec::new(),
                relation: None,
            },
            loss: 0.0,
            pairs: 0,
            skipped: 0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        pairs: &[TrainingPair],
        params: &mut EmbeddingMatrix<F>,
        schedule: &Schedule,
        start: u64,
        tables: &SamplingTables,
        supervision: Option<Supervision<'_>>,
        objective: &Objective,
        constraints: &Constraints,
        negatives: usize,
    ) -> Result<(), TrainError> {
        for (i, pair) in pairs.iter().enumerate() {
            let s = &mut self.sample;
            s.center = pair.center;
            s.context = pair.context;
            s.negatives.clear();
            for _ in 0..negatives {
                s.negatives
                    .push(tables.draw_negative(&mut self.rng, &[pair.center, pair.context]));
            }
            s.relation = supervision.map(|sup| {
                let (tag, target) = sup
                    .store
                    .sample_target(pair.center, sup.mode, &mut self.rng);
                RelationTarget {
                    tag,
                    target,
                    negatives: resample_negatives(
                        tables,
                        negatives,
                        &[pair.center, target],
                        &mut self.rng,
                    ),
                }
            });
            let lr = F::of(schedule.lr(start + i as u64));
            match sgd_step(
                &self.sample,
                params,
                lr,
                objective,
                constraints,
                &mut self.grad,
            )? {
                StepOutcome::Applied { loss } => self.loss += loss.as_f64(),
                StepOutcome::Skipped => self.skipped += 1,
            }
            self.pairs += 1;
        }
        Ok(())
    }
}

/// Linear decay from `lr0` to `lr_min` over the scheduled pair count.
struct Schedule {
    lr0: f64,
    lr_min: f64,
    total: u64,
}

impl Schedule {
    fn lr(&self, processed: u64) -> f64 {
        let frac = if self.total == 0 {
            1.0
        } else {
            (processed as f64 / self.total as f64).min(1.0)
        };
        self.lr0 + (self.lr_min - self.lr0) * frac
    }
}

/// Embedding table shared by asynchronous workers. Rows are read and
/// written without synchronisation; concurrent updates to the same row may
/// interleave.
struct SharedParams<F>(UnsafeCell<EmbeddingMatrix<F>>);

// SAFETY: workers only perform element-wise float loads and stores into
// preallocated vectors that are never resized while shared; torn updates
// are tolerated by the asynchronous SGD scheme.
unsafe impl<F: Send> Sync for SharedParams<F> {}

impl<F> SharedParams<F> {
    #[allow(clippy::mut_from_ref)]
    unsafe fn get(&self) -> &mut EmbeddingMatrix<F> {
        &mut *self.0.get()
    }
}

/// Trains `epochs` passes over the corpus. With `supervision` the two-part
/// objective is used. Single-worker runs are deterministic for a fixed seed.
pub fn train<F: Scalar>(
    corpus: Corpus<'_>,
    supervision: Option<Supervision<'_>>,
    config: &TrainConfig,
) -> Result<(EmbeddingMatrix<F>, TrainReport), TrainError> {
    config.validate()?;
    let n_rows = match supervision {
        Some(sup) => corpus.vocab.len().max(sup.store.sentinel_id() as usize + 1),
        None => corpus.vocab.len(),
    };
    let params = init_params::<F>(n_rows, config, config.seed);
    train_from(corpus, supervision, config, params)
}

/// [`train`] starting from the given parameters.
pub fn train_from<F: Scalar>(
    corpus: Corpus<'_>,
    supervision: Option<Supervision<'_>>,
    config: &TrainConfig,
    params: EmbeddingMatrix<F>,
) -> Result<(EmbeddingMatrix<F>, TrainReport), TrainError> {
    config.validate()?;
    if params.dim() != config.dim {
        return Err(TrainError::Consistency(format!(
            "parameters have dimension {}, config asks for {}",
            params.dim(),
            config.dim
        )));
    }
    if params.n_words() < corpus.vocab.len() {
        return Err(TrainError::Consistency(format!(
            "{} embedding rows for a vocabulary of {}",
            params.n_words(),
            corpus.vocab.len()
        )));
    }
    if let Some(sup) = supervision {
        if sup.store.sentinel_id() as usize >= params.n_words() {
            return Err(TrainError::Consistency(format!(
                "relation sentinel id {} has no embedding row",
                sup.store.sentinel_id()
            )));
        }
    }
    let mut report = TrainReport::default();
    if config.epochs == 0 {
        return Ok((params, report));
    }
    let objective = match supervision {
        Some(sup) => Objective::wdg_ei(config.w2_kind(), sup.mode, config.alpha),
        None => Objective::wdg(config.w2_kind()),
    };
    let constraints = Constraints::from(config);
    let pair_config = config.pair_config();
    let epoch_seed = |e: usize| mix(config.seed, 1, e as u64);

    let mut total = 0u64;
    for e in 0..config.epochs {
        total += count_pairs(
            corpus.path,
            corpus.vocab,
            corpus.tables,
            pair_config,
            epoch_seed(e),
        )?;
    }
    let schedule = Schedule {
        lr0: config.learning_rate,
        lr_min: config.lr_min,
        total,
    };
    let n_rows = params.n_words() as u32;
    let shared = SharedParams(UnsafeCell::new(params));
    let mut processed = 0u64;

    for e in 0..config.epochs {
        let mut workers: Vec<Worker<F>> = (0..config.threads)
            .map(|w| Worker::new(mix(config.seed, 2 + e as u64, w as u64)))
            .collect();
        let stream = generate_pairs(
            corpus.path,
            corpus.vocab,
            corpus.tables,
            pair_config,
            epoch_seed(e),
        )?;
        for block in stream {
            let block = block?;
            if let Some(bad) = block
                .iter()
                .find(|p| p.center >= n_rows || p.context >= n_rows)
            {
                return Err(TrainError::Consistency(format!(
                    "pair ({}, {}) outside embedding table of {n_rows} rows",
                    bad.center, bad.context
                )));
            }
            if workers.len() == 1 {
                // SAFETY: no other reference to the table exists on this path.
                let params = unsafe { shared.get() };
                workers[0].run(
                    &block,
                    params,
                    &schedule,
                    processed,
                    corpus.tables,
                    supervision,
                    &objective,
                    &constraints,
                    config.negatives,
                )?;
            } else {
                let chunk = block.len().div_ceil(workers.len());
                let shared = &shared;
                let schedule = &schedule;
                let (objective, constraints) = (&objective, &constraints);
                std::thread::scope(|scope| -> Result<(), TrainError> {
                    let handles: Vec<_> = workers
                        .iter_mut()
                        .zip(block.chunks(chunk))
                        .enumerate()
                        .map(|(i, (worker, pairs))| {
                            let start = processed + (i * chunk) as u64;
                            scope.spawn(move || {
                                // SAFETY: see `SharedParams`.
                                let params = unsafe { shared.get() };
                                worker.run(
                                    pairs,
                                    params,
                                    schedule,
                                    start,
                                    corpus.tables,
                                    supervision,
                                    objective,
                                    constraints,
                                    config.negatives,
                                )
                            })
                        })
                        .collect();
                    for h in handles {
                        h.join().expect("training worker panicked")?;
                    }
                    Ok(())
                })?;
            }
            processed += block.len() as u64;
        }
        let pairs: u64 = workers.iter().map(|w| w.pairs).sum();
        let loss: f64 = workers.iter().map(|w| w.loss).sum();
        let skipped: u64 = workers.iter().map(|w| w.skipped).sum();
        let applied = pairs - skipped;
        // SAFETY: all workers have joined.
        let params = unsafe { shared.get() };
        let sig = params.sigmas.iter().map(|s| s.as_f64());
        let (smin, smax) = sig
            .clone()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
                (a.min(s), b.max(s))
            });
        report.epochs.push(EpochReport {
            epoch: e + 1,
            pairs,
            mean_loss: if applied > 0 {
                loss / applied as f64
            } else {
                0.0
            },
            lr: schedule.lr(processed),
            skipped,
            sigma_mean: sig.sum::<f64>() / params.n_words() as f64,
            sigma_min: smin,
            sigma_max: smax,
        });
    }
    Ok((shared.0.into_inner(), report))
}
