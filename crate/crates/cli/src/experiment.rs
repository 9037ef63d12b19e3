//! One seeded experiment: split, train, score both sides.

use cfrlab_core::data::Dataset;
use cfrlab_core::metrics::{MetricsReport, SampleSplit};
use cfrlab_core::subseed;
use cfrlab_core::trainer::{evaluate, train, TrainOutcome};

use crate::error::Result;
use crate::settings::Settings;

pub struct ExperimentOutput {
    pub outcome: TrainOutcome,
    pub within: MetricsReport,
    pub out_of_sample: MetricsReport,
    pub train_split: Dataset,
}

pub fn run_experiment(dataset: &Dataset, settings: &Settings) -> Result<ExperimentOutput> {
    let split_seed = subseed(settings.train.seed, 0x5711);
    let (train_split, test_split) = dataset.split(settings.split_ratio, split_seed)?;
    let outcome = train(&train_split, &settings.train, &settings.domain)?;
    let within = evaluate(&outcome.model, &train_split, SampleSplit::Within)?;
    let out_of_sample = evaluate(&outcome.model, &test_split, SampleSplit::Out)?;
    Ok(ExperimentOutput { outcome, within, out_of_sample, train_split })
}
