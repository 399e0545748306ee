//! The adversary: surrogate extraction from released counterfactuals, then
//! membership and attribute inference through the extracted surrogate.
//!
//! Every operation here consumes only artifacts an attacker holds: query
//! rows from the adversary's own data subsets, the target model's outputs on
//! them, generated counterfactuals, and shadow models trained on adversary
//! data. The target's training rows enter only as the designated member half
//! of a membership candidate set.

use serde::{Deserialize, Serialize};

use crate::autoencoder::{Autoencoder, Prototype};
use crate::classifier::{
    accuracy, predict_label, predict_proba, runner_up_class, train_classifier, widen_spec,
    ClassifierSpec,
};
use crate::counterfactual::{baseline_counterfactual, search_counterfactual, SearchConfig};
use crate::data::{Dataset, FeatureSchema, SplitPlan};
use crate::error::{Error, Result};
use crate::exec;
use crate::numerics::{
    accumulate_backward, Activation, AdagradOptimizer, DenseLayer, DenseNet, GradientSet, Matrix,
    OptimizerKind,
};
use crate::rng::RngState;

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Configuration echo carried by every report so results are reproducible
/// from (seed, configuration) alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackContext {
    pub dataset: String,
    pub queries: usize,
    pub epsilon: Option<f64>,
    pub generator: String,
    pub scenario: String,
    pub seed: u64,
}

/// Scored outcome of one attack campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub kind: String,
    pub metric: String,
    pub value: f64,
    pub config: AttackContext,
    /// Per-class or per-value accuracy breakdown where applicable.
    pub per_class: Vec<(String, f64)>,
    /// Auxiliary recorded quantities (e.g. the calibrated threshold).
    pub details: Vec<(String, f64)>,
    pub skipped_rows: usize,
}

// ---------------------------------------------------------------------------
// Transfer sets and extraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Query,
    Counterfactual,
}

/// Adversary-assembled training data: query rows plus generated
/// counterfactuals, all labeled by the target model.
#[derive(Debug, Clone)]
pub struct TransferSet {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
    pub provenance: Vec<Provenance>,
    pub class_count: usize,
    /// Queries whose counterfactual generation failed.
    pub skipped: usize,
}

impl TransferSet {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::new(
            self.inputs.clone(),
            self.labels.clone(),
            self.class_count,
            FeatureSchema::dense(self.inputs.cols(), self.class_count),
        )
    }
}

/// Counterfactual source for transfer-set construction: the private
/// prototype pipeline or the non-private gradient baseline.
pub enum Generator<'a> {
    Private {
        prototypes: &'a [Prototype],
        autoencoder: &'a Autoencoder,
        config: SearchConfig,
    },
    GradientBaseline {
        steps: usize,
        step_size: f64,
    },
}

impl Generator<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Private { .. } => "dpc",
            Generator::GradientBaseline { .. } => "non_dp",
        }
    }

    fn generate(
        &self,
        query: &[f64],
        target_model: &DenseNet,
        target_class: usize,
        rng: &mut RngState,
    ) -> Result<Vec<f64>> {
        match self {
            Generator::Private {
                prototypes,
                autoencoder,
                config,
            } => {
                let mut cfg = *config;
                cfg.target_class = target_class;
                Ok(
                    search_counterfactual(prototypes, query, target_model, autoencoder, &cfg, rng)?
                        .sample,
                )
            }
            Generator::GradientBaseline { steps, step_size } => Ok(baseline_counterfactual(
                query,
                target_model,
                target_class,
                *steps,
                *step_size,
            )?
            .sample),
        }
    }
}

/// Unions `(X_q, f(X_q))` with `per_query` generated counterfactuals per
/// query, each labeled by the target model's prediction on it.
pub fn build_transfer_set(
    queries: &Dataset,
    target_model: &DenseNet,
    generator: &Generator,
    per_query: usize,
    rng: &RngState,
) -> Result<TransferSet> {
    if queries.is_empty() {
        return Err(Error::parameter("empty query set"));
    }
    struct RowOut {
        rows: Vec<(Vec<f64>, usize, Provenance)>,
        skipped: bool,
    }
    let per_query_rows: Vec<Result<RowOut>> = exec::run(queries.len(), |i| {
        let x = queries.row(i);
        let probs = predict_proba(target_model, x)?;
        let label = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| j)
            .unwrap_or(0);
        let mut rows = vec![(x.to_vec(), label, Provenance::Query)];
        let target = runner_up_class(&probs);
        let mut skipped = false;
        for k in 0..per_query {
            let mut item_rng = rng.fork((i * per_query.max(1) + k) as u64);
            match generator.generate(x, target_model, target, &mut item_rng) {
                Ok(sample) => {
                    let cf_label = predict_label(target_model, &sample)?;
                    rows.push((sample, cf_label, Provenance::Counterfactual));
                }
                Err(_) => skipped = true,
            }
        }
        Ok(RowOut { rows, skipped })
    });

    let mut inputs = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    let mut skipped = 0usize;
    for out in per_query_rows {
        let out = out?;
        if out.skipped {
            skipped += 1;
        }
        for (x, label, prov) in out.rows {
            inputs.push(x);
            labels.push(label);
            provenance.push(prov);
        }
    }
    Ok(TransferSet {
        inputs: Matrix::from_rows(&inputs),
        labels,
        provenance,
        class_count: target_model.output_dim(),
        skipped,
    })
}

/// Trains a surrogate on the transfer set and scores it on the target's
/// held-out test set. Under the unknown-architecture scenario the layout
/// gets one extra hidden layer.
pub fn extract_surrogate(
    transfer: &TransferSet,
    spec: &ClassifierSpec,
    known_architecture: bool,
    target_test: &Dataset,
    epochs: usize,
    batch_size: usize,
    context: &AttackContext,
    rng: &RngState,
) -> Result<(DenseNet, AttackReport)> {
    if transfer.is_empty() {
        return Err(Error::parameter("empty transfer set"));
    }
    let arch = if known_architecture {
        spec.clone()
    } else {
        widen_spec(spec)
    };
    let train_data = transfer.to_dataset()?;
    let (surrogate, _) = train_classifier(
        &arch,
        &train_data,
        epochs,
        batch_size,
        OptimizerKind::Adam { lr: 1e-3 },
        rng,
    )?;
    let value = accuracy(&surrogate, target_test)?;
    let mut config = context.clone();
    config.scenario = if known_architecture {
        "known_architecture".into()
    } else {
        "unknown_architecture".into()
    };
    Ok((
        surrogate,
        AttackReport {
            kind: "extraction".into(),
            metric: "surrogate_accuracy".into(),
            value,
            config,
            per_class: Vec::new(),
            details: Vec::new(),
            skipped_rows: transfer.skipped,
        },
    ))
}

// ---------------------------------------------------------------------------
// Membership inference
// ---------------------------------------------------------------------------

/// An adversary-trained model together with the rows it did and did not see.
pub struct ShadowModel {
    pub net: DenseNet,
    pub members: Dataset,
    pub non_members: Dataset,
}

impl ShadowModel {
    pub fn train(
        spec: &ClassifierSpec,
        members: Dataset,
        non_members: Dataset,
        epochs: usize,
        batch_size: usize,
        rng: &RngState,
    ) -> Result<Self> {
        let (net, _) = train_classifier(
            spec,
            &members,
            epochs,
            batch_size,
            OptimizerKind::Adam { lr: 1e-2 },
            rng,
        )?;
        Ok(ShadowModel {
            net,
            members,
            non_members,
        })
    }
}

/// Balanced member/non-member rows (with their class labels) whose
/// membership status the attack must recover.
pub struct MembershipCandidates {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
    pub is_member: Vec<bool>,
}

impl MembershipCandidates {
    /// Takes equally many rows from each side (the attacker's balanced
    /// prior).
    pub fn balanced(members: &Dataset, non_members: &Dataset) -> Result<Self> {
        let n = members.len().min(non_members.len());
        if n == 0 {
            return Err(Error::parameter("need rows on both sides"));
        }
        let mut rows = Vec::with_capacity(2 * n);
        let mut labels = Vec::with_capacity(2 * n);
        let mut is_member = Vec::with_capacity(2 * n);
        for i in 0..n {
            rows.push(members.row(i).to_vec());
            labels.push(members.label(i));
            is_member.push(true);
        }
        for i in 0..n {
            rows.push(non_members.row(i).to_vec());
            labels.push(non_members.label(i));
            is_member.push(false);
        }
        Ok(MembershipCandidates {
            inputs: Matrix::from_rows(&rows),
            labels,
            is_member,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rotates a prediction vector so the record's own class comes first. This
/// is how the attack net conditions on the class label (one attack model per
/// class collapsed into a single net).
fn label_aligned(probs: &[f64], label: usize) -> Vec<f64> {
    let k = probs.len();
    (0..k).map(|j| probs[(label + j) % k]).collect()
}

fn max_prob(net: &DenseNet, x: &[f64]) -> Result<f64> {
    Ok(predict_proba(net, x)?
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Confidence-threshold membership inference. The threshold is the midpoint
/// between the mean member and mean non-member top confidence across the
/// shadow models; candidates are scored through the surrogate's prediction
/// vector.
pub fn threshold_membership_inference(
    surrogate: &DenseNet,
    shadows: &[ShadowModel],
    candidates: &MembershipCandidates,
    context: &AttackContext,
) -> Result<AttackReport> {
    if shadows.len() < 3 {
        return Err(Error::parameter(format!(
            "need at least 3 shadow models, got {}",
            shadows.len()
        )));
    }
    let mut member_sum = 0.0;
    let mut member_n = 0usize;
    let mut non_sum = 0.0;
    let mut non_n = 0usize;
    for shadow in shadows {
        for i in 0..shadow.members.len() {
            member_sum += max_prob(&shadow.net, shadow.members.row(i))?;
            member_n += 1;
        }
        for i in 0..shadow.non_members.len() {
            non_sum += max_prob(&shadow.net, shadow.non_members.row(i))?;
            non_n += 1;
        }
    }
    let member_mean = member_sum / member_n.max(1) as f64;
    let non_mean = non_sum / non_n.max(1) as f64;
    let threshold = 0.5 * (member_mean + non_mean);
    // Shadow statistics also fix the decision orientation; members normally
    // sit above the threshold.
    let members_above = member_mean >= non_mean;

    let mut correct = 0usize;
    for (i, &is_member) in candidates.is_member.iter().enumerate() {
        let conf = max_prob(surrogate, candidates.inputs.row(i))?;
        let guess = (conf >= threshold) == members_above;
        if guess == is_member {
            correct += 1;
        }
    }
    let value = correct as f64 / candidates.len().max(1) as f64;
    Ok(AttackReport {
        kind: "membership_threshold".into(),
        metric: "membership_accuracy".into(),
        value,
        config: context.clone(),
        per_class: Vec::new(),
        details: vec![
            ("threshold".into(), threshold),
            ("shadow_member_mean".into(), member_mean),
            ("shadow_non_member_mean".into(), non_mean),
        ],
        skipped_rows: 0,
    })
}

// ---------------------------------------------------------------------------
// Learned attacks (the fixed-width relu attack net)
// ---------------------------------------------------------------------------

/// The attack network layout: `[u, 1024, 512, 256, 64, 1]`, fully connected
/// relu with a sigmoid output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackNetSpec {
    pub input_dim: usize,
}

pub const ATTACK_HIDDEN: [usize; 4] = [1024, 512, 256, 64];
/// Fixed attack training schedule.
pub const ATTACK_EPOCHS: usize = 30;
pub const ATTACK_LR: f64 = 1e-2;
pub const ATTACK_DECAY: f64 = 1e-7;
const ATTACK_BATCH: usize = 32;

impl AttackNetSpec {
    pub fn new(input_dim: usize) -> Self {
        AttackNetSpec { input_dim }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend_from_slice(&ATTACK_HIDDEN);
        w.push(1);
        w
    }

    /// Binary scorer with a single sigmoid output.
    pub fn build(&self, rng: &mut RngState) -> Result<DenseNet> {
        let mut layers = Vec::new();
        let mut prev = self.input_dim;
        for &w in &ATTACK_HIDDEN {
            layers.push(DenseLayer::init(prev, w, true, Activation::Relu, rng));
            prev = w;
        }
        layers.push(DenseLayer::init(prev, 1, true, Activation::Sigmoid, rng));
        DenseNet::new(layers, self.input_dim)
    }

    /// Multi-output variant (softmax head) for attributes with more than two
    /// values; the hidden stack is unchanged.
    pub fn build_multiclass(&self, outputs: usize, rng: &mut RngState) -> Result<DenseNet> {
        let mut layers = Vec::new();
        let mut prev = self.input_dim;
        for &w in &ATTACK_HIDDEN {
            layers.push(DenseLayer::init(prev, w, true, Activation::Relu, rng));
            prev = w;
        }
        layers.push(DenseLayer::init(prev, outputs, true, Activation::Softmax, rng));
        DenseNet::new(layers, self.input_dim)
    }
}

/// Binary cross-entropy training for the sigmoid attack net (Adagrad with
/// the fixed rate and decay above).
fn train_binary_attack_net(
    spec: &AttackNetSpec,
    inputs: &Matrix,
    labels: &[bool],
    rng: &RngState,
) -> Result<DenseNet> {
    let mut net = spec.build(&mut rng.substream("init"))?;
    let mut opt = AdagradOptimizer::new(&net, ATTACK_LR, ATTACK_DECAY);
    let batch_rng = rng.substream("batch");
    let mut order: Vec<usize> = (0..inputs.rows()).collect();

    for epoch in 0..ATTACK_EPOCHS {
        batch_rng.fork(epoch as u64).shuffle(&mut order);
        for batch in order.chunks(ATTACK_BATCH) {
            let mut grads = GradientSet::zeros_like(&net);
            let inv = 1.0 / batch.len() as f64;
            for &i in batch {
                let acts = net.forward(inputs.row(i))?;
                let o = acts.output()[0].clamp(1e-12, 1.0 - 1e-12);
                let y = if labels[i] { 1.0 } else { 0.0 };
                // dBCE/do; the sigmoid backprop turns it into (o - y).
                let upstream = vec![inv * (o - y) / (o * (1.0 - o))];
                accumulate_backward(&net, &acts, &upstream, 1.0, &mut grads)?;
            }
            opt.step(&mut net, &grads).map_err(|e| match e {
                Error::Numeric(detail) => Error::Training { epoch, detail },
                other => other,
            })?;
        }
    }
    Ok(net)
}

fn attack_score(net: &DenseNet, x: &[f64]) -> Result<f64> {
    Ok(net.forward(x)?.output()[0])
}

/// Learned membership inference: the attack net consumes prediction vectors,
/// trained on the shadows' member/non-member outputs and applied to the
/// surrogate's outputs on the candidates.
pub fn learned_membership_inference(
    surrogate: &DenseNet,
    shadows: &[ShadowModel],
    attack_spec: &AttackNetSpec,
    candidates: &MembershipCandidates,
    context: &AttackContext,
    rng: &RngState,
) -> Result<AttackReport> {
    if shadows.len() < 3 {
        return Err(Error::parameter(format!(
            "need at least 3 shadow models, got {}",
            shadows.len()
        )));
    }
    if attack_spec.input_dim != surrogate.output_dim() {
        return Err(Error::structural(format!(
            "attack net input {} does not match prediction vector length {}",
            attack_spec.input_dim,
            surrogate.output_dim()
        )));
    }

    // Shadow train halves are members (positive), test halves non-members;
    // every prediction vector is rotated so the record's own class is first.
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for shadow in shadows {
        for i in 0..shadow.members.len() {
            let pv = predict_proba(&shadow.net, shadow.members.row(i))?;
            rows.push(label_aligned(&pv, shadow.members.label(i)));
            labels.push(true);
        }
        for i in 0..shadow.non_members.len() {
            let pv = predict_proba(&shadow.net, shadow.non_members.row(i))?;
            rows.push(label_aligned(&pv, shadow.non_members.label(i)));
            labels.push(false);
        }
    }
    let attack_net = train_binary_attack_net(
        attack_spec,
        &Matrix::from_rows(&rows),
        &labels,
        &rng.substream("attack"),
    )?;

    let mut correct = 0usize;
    for (i, &is_member) in candidates.is_member.iter().enumerate() {
        let pv = predict_proba(surrogate, candidates.inputs.row(i))?;
        let aligned = label_aligned(&pv, candidates.labels[i]);
        let guess = attack_score(&attack_net, &aligned)? >= 0.5;
        if guess == is_member {
            correct += 1;
        }
    }
    let value = correct as f64 / candidates.len().max(1) as f64;
    Ok(AttackReport {
        kind: "membership_learned".into(),
        metric: "membership_accuracy".into(),
        value,
        config: context.clone(),
        per_class: Vec::new(),
        details: vec![("shadow_examples".into(), labels.len() as f64)],
        skipped_rows: 0,
    })
}

// ---------------------------------------------------------------------------
// Attribute inference
// ---------------------------------------------------------------------------

/// Learning-based attribute inference: predicts a hidden categorical column
/// from the remaining features plus the surrogate's prediction vector.
/// Trains on the adversary's rows, scores on the candidate rows.
pub fn attribute_inference(
    surrogate: &DenseNet,
    adversary_rows: &Dataset,
    candidate_rows: &Dataset,
    target_attribute: &str,
    context: &AttackContext,
    rng: &RngState,
) -> Result<AttackReport> {
    let schema = adversary_rows.schema();
    let (offset, width) = schema.block_offset(target_attribute).ok_or_else(|| {
        Error::parameter(format!(
            "attribute '{target_attribute}' is not a feature column"
        ))
    })?;
    if width < 2 {
        return Err(Error::parameter(format!(
            "attribute '{target_attribute}' must be categorical"
        )));
    }
    let value_names: Vec<String> = schema
        .feature_columns()
        .find(|c| c.name == target_attribute)
        .map(|c| match &c.kind {
            crate::data::ColumnKind::Categorical { values } => values.clone(),
            _ => Vec::new(),
        })
        .unwrap_or_default();

    let attribute_value = |row: &[f64]| -> usize {
        row[offset..offset + width]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    // Known features (attribute block removed) plus the surrogate's
    // prediction vector on the full row.
    let attack_input = |row: &[f64]| -> Result<Vec<f64>> {
        let mut v: Vec<f64> = row[..offset]
            .iter()
            .chain(&row[offset + width..])
            .copied()
            .collect();
        v.extend(predict_proba(surrogate, row)?);
        Ok(v)
    };

    let input_dim = adversary_rows.dim() - width + surrogate.output_dim();
    let spec = AttackNetSpec::new(input_dim);

    let mut train_rows = Vec::with_capacity(adversary_rows.len());
    let mut train_values = Vec::with_capacity(adversary_rows.len());
    for i in 0..adversary_rows.len() {
        train_rows.push(attack_input(adversary_rows.row(i))?);
        train_values.push(attribute_value(adversary_rows.row(i)));
    }

    // Binary attributes use the standard sigmoid head; wider ones get a
    // softmax head over the value count.
    enum Head {
        Binary(DenseNet),
        Multi(DenseNet),
    }
    let head = if width == 2 {
        let labels: Vec<bool> = train_values.iter().map(|&v| v == 1).collect();
        Head::Binary(train_binary_attack_net(
            &spec,
            &Matrix::from_rows(&train_rows),
            &labels,
            &rng.substream("attack"),
        )?)
    } else {
        let mut net = spec.build_multiclass(width, &mut rng.substream("init"))?;
        let mut opt = AdagradOptimizer::new(&net, ATTACK_LR, ATTACK_DECAY);
        let batch_rng = rng.substream("batch");
        let mut order: Vec<usize> = (0..train_rows.len()).collect();
        for epoch in 0..ATTACK_EPOCHS {
            batch_rng.fork(epoch as u64).shuffle(&mut order);
            for batch in order.chunks(ATTACK_BATCH) {
                let mut grads = GradientSet::zeros_like(&net);
                let inv = 1.0 / batch.len() as f64;
                for &i in batch {
                    let acts = net.forward(&train_rows[i])?;
                    let (_, mut upstream) =
                        crate::classifier::cross_entropy(acts.output(), train_values[i]);
                    for u in &mut upstream {
                        *u *= inv;
                    }
                    accumulate_backward(&net, &acts, &upstream, 1.0, &mut grads)?;
                }
                opt.step(&mut net, &grads).map_err(|e| match e {
                    Error::Numeric(detail) => Error::Training { epoch, detail },
                    other => other,
                })?;
            }
        }
        Head::Multi(net)
    };

    let mut correct = 0usize;
    let mut per_value_correct = vec![0usize; width];
    let mut per_value_total = vec![0usize; width];
    for i in 0..candidate_rows.len() {
        let row = candidate_rows.row(i);
        let truth = attribute_value(row);
        let input = attack_input(row)?;
        let guess = match &head {
            Head::Binary(net) => usize::from(attack_score(net, &input)? >= 0.5),
            Head::Multi(net) => {
                let out = net.forward(&input)?;
                out.output()
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(j, _)| j)
                    .unwrap_or(0)
            }
        };
        per_value_total[truth] += 1;
        if guess == truth {
            correct += 1;
            per_value_correct[truth] += 1;
        }
    }
    let value = correct as f64 / candidate_rows.len().max(1) as f64;
    let per_class = (0..width)
        .filter(|&v| per_value_total[v] > 0)
        .map(|v| {
            let name = value_names.get(v).cloned().unwrap_or_else(|| v.to_string());
            (name, per_value_correct[v] as f64 / per_value_total[v] as f64)
        })
        .collect();

    Ok(AttackReport {
        kind: "attribute".into(),
        metric: "attribute_accuracy".into(),
        value,
        config: context.clone(),
        per_class,
        details: Vec::new(),
        skipped_rows: 0,
    })
}

// ---------------------------------------------------------------------------
// Split-plan plumbing shared by the drivers
// ---------------------------------------------------------------------------

/// Materialized subsets of a split plan: subset 0 belongs to the target,
/// the rest to the adversary.
pub struct PlanParts {
    pub target_train: Dataset,
    pub target_test: Dataset,
    pub adversary: Vec<(Dataset, Dataset)>,
}

pub fn plan_parts(dataset: &Dataset, plan: &SplitPlan) -> PlanParts {
    let target = &plan.subsets[0];
    PlanParts {
        target_train: dataset.select(&target.train),
        target_test: dataset.select(&target.test),
        adversary: plan.subsets[1..]
            .iter()
            .map(|s| (dataset.select(&s.train), dataset.select(&s.test)))
            .collect(),
    }
}

impl PlanParts {
    /// All adversary rows pooled, for drawing query sets.
    pub fn adversary_pool(&self) -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (train, test) in &self.adversary {
            for i in 0..train.len() {
                rows.push(train.row(i).to_vec());
                labels.push(train.label(i));
            }
            for i in 0..test.len() {
                rows.push(test.row(i).to_vec());
                labels.push(test.label(i));
            }
        }
        Dataset::new(
            Matrix::from_rows(&rows),
            labels,
            self.target_train.class_count(),
            self.target_train.schema().clone(),
        )
        .expect("subset rows were already validated")
    }
}
