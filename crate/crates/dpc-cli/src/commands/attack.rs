//! `dpc attack`: run an extraction or inference campaign with both the
//! non-private baseline generator and the private pipeline, side by side.

use clap::ValueEnum;

use dpc::attacks::{
    attribute_inference, build_transfer_set, extract_surrogate, learned_membership_inference,
    plan_parts, threshold_membership_inference, AttackContext, AttackNetSpec, AttackReport,
    Generator, MembershipCandidates, PlanParts, ShadowModel,
};
use dpc::autoencoder::{build_prototypes, train_autoencoder};
use dpc::classifier::train_classifier;
use dpc::data::{make_split_plan, Dataset};
use dpc::error::{Error, Result};
use dpc::mechanism::PrivacyBudget;
use dpc::numerics::OptimizerKind;
use dpc::RngState;

use crate::config::{write_metric_csv, ExperimentConfig, MetricRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackKind {
    Extract,
    Membership,
    Attribute,
}

/// Gradient-baseline settings for the non-private generator.
const BASELINE_STEPS: usize = 150;
const BASELINE_STEP_SIZE: f64 = 0.05;
/// Search budget for transfer-set generation (shorter than explanation runs).
const GENERATOR_ITERATIONS: usize = 120;

struct Campaign {
    parts: PlanParts,
    target: dpc::numerics::DenseNet,
    autoencoder: dpc::autoencoder::Autoencoder,
    prototypes: Vec<dpc::autoencoder::Prototype>,
    rng: RngState,
    dataset_name: String,
}

fn prepare(config: &ExperimentConfig, seed: u64) -> Result<Campaign> {
    let rng = RngState::from_seed(seed);
    let dataset = config.dataset.load(&rng)?;
    let subset_size = config.subset_size.unwrap_or(dataset.len() / 4);
    let plan = make_split_plan(&mut rng.substream("plan"), &dataset, subset_size)?;
    let parts = plan_parts(&dataset, &plan);

    let cls_spec = config.classifier.spec(dataset.class_count())?;
    let (target, _) = train_classifier(
        &cls_spec,
        &parts.target_train,
        config.classifier.epochs,
        config.classifier.batch_size,
        OptimizerKind::Adam { lr: 1e-2 },
        &rng.substream("target"),
    )?;

    let ae_spec = config.autoencoder.spec()?;
    let budget = PrivacyBudget::new(config.epsilon, ae_spec.width_param())?;
    let (autoencoder, _, _) = train_autoencoder(
        &ae_spec,
        &parts.target_train,
        &budget,
        &config.autoencoder.settings(),
        &rng.substream("autoencoder"),
    )?;
    let prototypes = build_prototypes(&autoencoder, &parts.target_train)?.prototypes;

    Ok(Campaign {
        parts,
        target,
        autoencoder,
        prototypes,
        rng,
        dataset_name: config.dataset.name(),
    })
}

fn query_set(campaign: &Campaign, count: usize, tag: &str) -> Result<Dataset> {
    let pool = campaign.parts.adversary_pool();
    if count > pool.len() {
        return Err(Error::parameter(format!(
            "|X_q| = {count} exceeds the adversary pool of {} rows",
            pool.len()
        )));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    campaign.rng.substream(tag).shuffle(&mut order);
    Ok(pool.select(&order[..count]))
}

fn generators<'a>(campaign: &'a Campaign, config: &ExperimentConfig) -> Vec<Generator<'a>> {
    vec![
        Generator::GradientBaseline {
            steps: BASELINE_STEPS,
            step_size: BASELINE_STEP_SIZE,
        },
        Generator::Private {
            prototypes: &campaign.prototypes,
            autoencoder: &campaign.autoencoder,
            config: config
                .search
                .config(0)
                .unwrap_or_else(|_| dpc::counterfactual::SearchConfig::mixed(0))
                .with_iterations(GENERATOR_ITERATIONS, config.search.step_size),
        },
    ]
}

fn save_report(config: &ExperimentConfig, name: &str, report: &AttackReport) -> Result<()> {
    let path = config.out_dir.join(name);
    std::fs::write(
        &path,
        serde_json::to_string_pretty(report).expect("report serializes"),
    )?;
    Ok(())
}

fn report_row(dataset: &str, report: &AttackReport) -> MetricRow {
    MetricRow {
        metric: report.metric.clone(),
        dataset: dataset.into(),
        epsilon: report.config.epsilon.unwrap_or(f64::INFINITY),
        generator: report.config.generator.clone(),
        scenario: report.config.scenario.clone(),
        seed: report.config.seed,
        value: report.value,
    }
}

fn run_extract(
    config: &ExperimentConfig,
    campaign: &Campaign,
    seed: u64,
    rows: &mut Vec<MetricRow>,
) -> Result<()> {
    for &q in &config.query_sizes {
        let queries = query_set(campaign, q, &format!("queries{q}"))?;
        // Base extraction: queries and target labels only.
        let base_ts = build_transfer_set(
            &queries,
            &campaign.target,
            &Generator::GradientBaseline {
                steps: 0,
                step_size: 0.0,
            },
            0,
            &campaign.rng.substream("ts_base"),
        )?;
        let mut variants: Vec<(String, dpc::attacks::TransferSet)> =
            vec![("base".into(), base_ts)];
        for generator in generators(campaign, config) {
            let ts = build_transfer_set(
                &queries,
                &campaign.target,
                &generator,
                config.per_query,
                &campaign.rng.substream(&format!("ts_{}", generator.name())),
            )?;
            variants.push((generator.name().to_string(), ts));
        }

        let cls_spec = config.classifier.spec(campaign.target.output_dim())?;
        for known in [true, false] {
            for (name, ts) in &variants {
                let ctx = AttackContext {
                    dataset: campaign.dataset_name.clone(),
                    queries: q,
                    epsilon: Some(config.epsilon),
                    generator: name.clone(),
                    scenario: String::new(),
                    seed,
                };
                let (_, report) = extract_surrogate(
                    ts,
                    &cls_spec,
                    known,
                    &campaign.parts.target_test,
                    config.classifier.epochs,
                    config.classifier.batch_size,
                    &ctx,
                    &campaign.rng.substream(&format!("sur_{name}_{known}_{q}")),
                )?;
                save_report(
                    config,
                    &format!(
                        "attack_extract_{name}_{}_q{q}_s{seed}.json",
                        report.config.scenario
                    ),
                    &report,
                )?;
                rows.push(report_row(&campaign.dataset_name, &report));
            }
        }
    }
    Ok(())
}

fn run_membership(
    config: &ExperimentConfig,
    campaign: &Campaign,
    seed: u64,
    rows: &mut Vec<MetricRow>,
) -> Result<()> {
    let candidates = MembershipCandidates::balanced(
        &campaign.parts.target_train,
        &campaign.parts.target_test,
    )?;
    let cls_spec = config.classifier.spec(campaign.target.output_dim())?;
    let shadows: Vec<ShadowModel> = campaign
        .parts
        .adversary
        .iter()
        .enumerate()
        .map(|(i, (train, test))| {
            ShadowModel::train(
                &cls_spec,
                train.clone(),
                test.clone(),
                config.classifier.epochs,
                config.classifier.batch_size,
                &campaign.rng.substream(&format!("shadow{i}")),
            )
        })
        .collect::<Result<_>>()?;

    let pool_len = campaign.parts.adversary_pool().len();
    let q = pool_len.min(config.query_sizes.iter().copied().max().unwrap_or(2000));
    let queries = query_set(campaign, q, "queries_membership")?;
    let attack_spec = AttackNetSpec::new(campaign.target.output_dim());

    for generator in generators(campaign, config) {
        let name = generator.name().to_string();
        let ts = build_transfer_set(
            &queries,
            &campaign.target,
            &generator,
            config.per_query,
            &campaign.rng.substream(&format!("ts_{name}")),
        )?;
        let ctx = AttackContext {
            dataset: campaign.dataset_name.clone(),
            queries: q,
            epsilon: Some(config.epsilon),
            generator: name.clone(),
            scenario: "known_architecture".into(),
            seed,
        };
        let (surrogate, _) = extract_surrogate(
            &ts,
            &cls_spec,
            true,
            &campaign.parts.target_test,
            config.classifier.epochs,
            config.classifier.batch_size,
            &ctx,
            &campaign.rng.substream(&format!("sur_{name}")),
        )?;

        let threshold = threshold_membership_inference(&surrogate, &shadows, &candidates, &ctx)?;
        save_report(
            config,
            &format!("attack_membership_threshold_{name}_s{seed}.json"),
            &threshold,
        )?;
        rows.push(report_row(&campaign.dataset_name, &threshold));

        let learned = learned_membership_inference(
            &surrogate,
            &shadows,
            &attack_spec,
            &candidates,
            &ctx,
            &campaign.rng.substream(&format!("attack_{name}")),
        )?;
        save_report(
            config,
            &format!("attack_membership_learned_{name}_s{seed}.json"),
            &learned,
        )?;
        rows.push(report_row(&campaign.dataset_name, &learned));
    }
    Ok(())
}

fn run_attribute(
    config: &ExperimentConfig,
    campaign: &Campaign,
    seed: u64,
    rows: &mut Vec<MetricRow>,
) -> Result<()> {
    let attribute = config.attribute.as_deref().ok_or_else(|| {
        Error::parameter("attribute attacks need an 'attribute' entry in the config")
    })?;
    let cls_spec = config.classifier.spec(campaign.target.output_dim())?;
    let adversary_rows = campaign.parts.adversary_pool();
    // The candidate rows are the target's subset: the records whose hidden
    // attribute the adversary is probing.
    let candidates = concat(&campaign.parts.target_train, &campaign.parts.target_test);

    let q = adversary_rows
        .len()
        .min(config.query_sizes.iter().copied().max().unwrap_or(2000));
    let queries = query_set(campaign, q, "queries_attribute")?;

    for generator in generators(campaign, config) {
        let name = generator.name().to_string();
        let ts = build_transfer_set(
            &queries,
            &campaign.target,
            &generator,
            config.per_query,
            &campaign.rng.substream(&format!("ts_{name}")),
        )?;
        let ctx = AttackContext {
            dataset: campaign.dataset_name.clone(),
            queries: q,
            epsilon: Some(config.epsilon),
            generator: name.clone(),
            scenario: "known_architecture".into(),
            seed,
        };
        let (surrogate, _) = extract_surrogate(
            &ts,
            &cls_spec,
            true,
            &campaign.parts.target_test,
            config.classifier.epochs,
            config.classifier.batch_size,
            &ctx,
            &campaign.rng.substream(&format!("sur_{name}")),
        )?;
        let report = attribute_inference(
            &surrogate,
            &adversary_rows,
            &candidates,
            attribute,
            &ctx,
            &campaign.rng.substream(&format!("attr_{name}")),
        )?;
        save_report(
            config,
            &format!("attack_attribute_{name}_s{seed}.json"),
            &report,
        )?;
        rows.push(report_row(&campaign.dataset_name, &report));
    }
    Ok(())
}

fn concat(a: &Dataset, b: &Dataset) -> Dataset {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(a.len() + b.len());
    let mut labels = Vec::with_capacity(a.len() + b.len());
    for i in 0..a.len() {
        rows.push(a.row(i).to_vec());
        labels.push(a.label(i));
    }
    for i in 0..b.len() {
        rows.push(b.row(i).to_vec());
        labels.push(b.label(i));
    }
    Dataset::new(
        dpc::numerics::Matrix::from_rows(&rows),
        labels,
        a.class_count(),
        a.schema().clone(),
    )
    .expect("concatenating validated datasets")
}

pub fn run(config: &ExperimentConfig, kind: AttackKind) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir)?;
    for &seed in &config.seeds {
        let campaign = prepare(config, seed)?;
        let mut rows = Vec::new();
        match kind {
            AttackKind::Extract => run_extract(config, &campaign, seed, &mut rows)?,
            AttackKind::Membership => run_membership(config, &campaign, seed, &mut rows)?,
            AttackKind::Attribute => run_attribute(config, &campaign, seed, &mut rows)?,
        }
        let kind_name = match kind {
            AttackKind::Extract => "extract",
            AttackKind::Membership => "membership",
            AttackKind::Attribute => "attribute",
        };
        write_metric_csv(
            &config
                .out_dir
                .join(format!("metrics_attack_{kind_name}_s{seed}.csv")),
            &rows,
        )?;
        for row in &rows {
            println!(
                "seed {seed}: {} [{} / {}] = {:.4}",
                row.metric, row.generator, row.scenario, row.value
            );
        }
    }
    Ok(())
}
