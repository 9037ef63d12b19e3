//! Flag and config-file resolution. Configuration is flags-first: an
//! optional flat `key=value` file supplies values for anything the command
//! line leaves unset, and built-in defaults cover the rest.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use cfrlab_core::domains::DomainConfig;
use cfrlab_core::ipm::IpmKind;
use cfrlab_core::subseed;
use cfrlab_core::trainer::{FishSign, TrainConfig, TrainMode};

use crate::error::{io_err, CliError, Result};

/// Hyperparameter flags shared by `train` and `ablate`.
#[derive(clap::Args, Debug, Clone, Default)]
pub struct HyperArgs {
    /// Flat key=value configuration file; command-line flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Phase order: sequential or alternating
    #[arg(long)]
    pub mode: Option<ModeArg>,
    /// IPM penalty weight (0 gives the TAR variant)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Outer gradient-matching step in (0, 1]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Inner per-domain gradient-matching learning rate
    #[arg(long)]
    pub beta: Option<f64>,
    /// Covariate-matching learning rate
    #[arg(long)]
    pub eta: Option<f64>,
    /// Outcome-head weight decay
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Covariate-matching epoch budget
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Outer gradient-matching iterations
    #[arg(long = "fish-iters")]
    pub fish_iters: Option<usize>,
    /// Number of anchor-generated domains
    #[arg(long)]
    pub domains: Option<usize>,
    /// Balancing metric
    #[arg(long)]
    pub ipm: Option<IpmArg>,
    /// RBF kernel bandwidth (with --ipm rbf_mmd)
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Master seed for the run
    #[arg(long)]
    pub seed: Option<u64>,
    /// Mini-batch size
    #[arg(long = "batch-size")]
    pub batch_size: Option<usize>,
    /// Hidden width of all networks
    #[arg(long = "hidden-dim")]
    pub hidden_dim: Option<usize>,
    /// Weight layers in the gradient-matched representation network
    #[arg(long = "rep-layers")]
    pub rep_layers: Option<usize>,
    /// Weight layers in the projection network
    #[arg(long = "cfr-layers")]
    pub cfr_layers: Option<usize>,
    /// Weight layers in each outcome head
    #[arg(long = "head-layers")]
    pub head_layers: Option<usize>,
    /// Train fraction of the train/test split
    #[arg(long = "split-ratio")]
    pub split_ratio: Option<f64>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    #[value(name = "sequential")]
    Sequential,
    #[value(name = "alternating")]
    Alternating,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmArg {
    #[value(name = "linear_mmd")]
    LinearMmd,
    #[value(name = "rbf_mmd")]
    RbfMmd,
    #[value(name = "sinkhorn")]
    Sinkhorn,
}

impl FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sequential" => Ok(ModeArg::Sequential),
            "alternating" => Ok(ModeArg::Alternating),
            other => Err(format!("unknown mode {other:?} (sequential|alternating)")),
        }
    }
}

impl FromStr for IpmArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear_mmd" => Ok(IpmArg::LinearMmd),
            "rbf_mmd" => Ok(IpmArg::RbfMmd),
            "sinkhorn" => Ok(IpmArg::Sinkhorn),
            other => Err(format!("unknown ipm {other:?} (linear_mmd|rbf_mmd|sinkhorn)")),
        }
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct Settings {
    pub train: TrainConfig,
    pub domain: DomainConfig,
    pub split_ratio: f64,
}

impl Settings {
    /// Returns a copy with the grid cell's values substituted and the seed
    /// rebased (used by the ablation sweep).
    pub fn with_cell(&self, alpha: f64, eps: f64, seed: u64) -> Settings {
        let mut out = self.clone();
        out.train.ipm_weight = alpha;
        out.train.fish_step = eps;
        out.train.seed = seed;
        out.domain.seed = subseed(seed, 0xd0ca);
        out
    }
}

fn parse_config_file(path: &PathBuf) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "{}: line {} is not key=value: {line:?}",
                path.display(),
                idx + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| CliError::Config(format!("config key {key}={raw:?}: {e}"))),
    }
}

/// Merges flags over the optional config file over defaults.
pub fn resolve(args: &HyperArgs) -> Result<Settings> {
    let file = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => BTreeMap::new(),
    };
    let mut config = TrainConfig::default();

    config.ipm_weight = args.alpha.or(from_file(&file, "alpha")?).unwrap_or(config.ipm_weight);
    config.fish_step = args.eps.or(from_file(&file, "eps")?).unwrap_or(config.fish_step);
    config.fish_inner_lr =
        args.beta.or(from_file(&file, "beta")?).unwrap_or(config.fish_inner_lr);
    config.cfr_lr = args.eta.or(from_file(&file, "eta")?).unwrap_or(config.cfr_lr);
    config.weight_decay =
        args.lambda.or(from_file(&file, "lambda")?).unwrap_or(config.weight_decay);
    config.cfr_epochs = args.epochs.or(from_file(&file, "epochs")?).unwrap_or(config.cfr_epochs);
    config.fish_iters =
        args.fish_iters.or(from_file(&file, "fish-iters")?).unwrap_or(config.fish_iters);
    config.batch_size =
        args.batch_size.or(from_file(&file, "batch-size")?).unwrap_or(config.batch_size);
    config.hidden_dim =
        args.hidden_dim.or(from_file(&file, "hidden-dim")?).unwrap_or(config.hidden_dim);
    config.rep_layers =
        args.rep_layers.or(from_file(&file, "rep-layers")?).unwrap_or(config.rep_layers);
    config.cfr_layers =
        args.cfr_layers.or(from_file(&file, "cfr-layers")?).unwrap_or(config.cfr_layers);
    config.head_layers =
        args.head_layers.or(from_file(&file, "head-layers")?).unwrap_or(config.head_layers);
    config.seed = args.seed.or(from_file(&file, "seed")?).unwrap_or(config.seed);
    config.mode = match args.mode.or(from_file(&file, "mode")?) {
        Some(ModeArg::Sequential) | None => TrainMode::Sequential,
        Some(ModeArg::Alternating) => TrainMode::Alternating,
    };
    config.fish_sign = FishSign::TowardAdapted;

    let sigma = args.sigma.or(from_file(&file, "sigma")?).unwrap_or(0.1);
    if sigma <= 0.0 {
        return Err(CliError::Config(format!("sigma must be positive, got {sigma}")));
    }
    config.ipm_kind = match args.ipm.or(from_file(&file, "ipm")?) {
        Some(IpmArg::LinearMmd) | None => IpmKind::LinearMmd,
        Some(IpmArg::RbfMmd) => IpmKind::RbfMmd { sigma },
        Some(IpmArg::Sinkhorn) => IpmKind::Sinkhorn { reg: 0.1, max_iters: 500, tol: 1e-6 },
    };

    config.validate()?;

    let num_domains = args.domains.or(from_file(&file, "domains")?).unwrap_or(3);
    let domain = DomainConfig::new(num_domains, subseed(config.seed, 0xd0ca));

    let split_ratio =
        args.split_ratio.or(from_file(&file, "split-ratio")?).unwrap_or(0.8);
    if !(split_ratio > 0.0 && split_ratio < 1.0) {
        return Err(CliError::Config(format!(
            "split ratio must lie in (0, 1), got {split_ratio}"
        )));
    }

    Ok(Settings { train: config, domain, split_ratio })
}

/// Variant label following the grid convention: the balancing weight decides
/// CFR vs TAR, the phase schedule adds its prefix when gradient matching is
/// active.
pub fn model_label(config: &TrainConfig) -> String {
    let base = if config.ipm_weight == 0.0 { "TAR" } else { "CFR" };
    if config.fish_iters == 0 {
        base.to_string()
    } else {
        match config.mode {
            TrainMode::Sequential => format!("Seq-M-{base}"),
            TrainMode::Alternating => format!("Alt-M-{base}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outputs::write_atomic;

    #[test]
    fn defaults_without_flags_or_file() {
        let settings = resolve(&HyperArgs::default()).unwrap();
        assert_eq!(settings.train.ipm_weight, 10.0);
        assert_eq!(settings.train.cfr_epochs, 1000);
        assert_eq!(settings.split_ratio, 0.8);
        assert_eq!(settings.domain.num_domains, 3);
    }

    #[test]
    fn flags_override_file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        write_atomic(&path, "alpha=7\neps=0.4\nepochs=5\nmode=alternating\n# comment\n").unwrap();
        let args = HyperArgs {
            config: Some(path),
            alpha: Some(100.0),
            ..HyperArgs::default()
        };
        let settings = resolve(&args).unwrap();
        assert_eq!(settings.train.ipm_weight, 100.0); // flag wins
        assert_eq!(settings.train.fish_step, 0.4); // file wins over default
        assert_eq!(settings.train.cfr_epochs, 5);
        assert_eq!(settings.train.mode, TrainMode::Alternating);
    }

    #[test]
    fn bad_file_values_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        write_atomic(&path, "alpha=not_a_number\n").unwrap();
        let err =
            resolve(&HyperArgs { config: Some(path), ..HyperArgs::default() }).unwrap_err();
        assert_eq!(err.exit_code(), 2);

        let dir2 = tempfile::tempdir().unwrap();
        let path2 = dir2.path().join("run.conf");
        write_atomic(&path2, "just a line\n").unwrap();
        let err =
            resolve(&HyperArgs { config: Some(path2), ..HyperArgs::default() }).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn labels_follow_grid_convention() {
        let mut config = TrainConfig::default();
        assert_eq!(model_label(&config), "Seq-M-CFR");
        config.ipm_weight = 0.0;
        assert_eq!(model_label(&config), "Seq-M-TAR");
        config.fish_iters = 0;
        assert_eq!(model_label(&config), "TAR");
        config.ipm_weight = 5.0;
        assert_eq!(model_label(&config), "CFR");
        config.fish_iters = 3;
        config.mode = TrainMode::Alternating;
        assert_eq!(model_label(&config), "Alt-M-CFR");
    }

    #[test]
    fn rbf_sigma_flows_into_kind() {
        let args = HyperArgs {
            ipm: Some(IpmArg::RbfMmd),
            sigma: Some(0.25),
            ..HyperArgs::default()
        };
        let settings = resolve(&args).unwrap();
        assert_eq!(settings.train.ipm_kind, IpmKind::RbfMmd { sigma: 0.25 });
    }
}
