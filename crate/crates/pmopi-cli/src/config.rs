//! Run configuration: a flat TOML file overridden by same-named CLI flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use pmopi::channel::{ChannelParams, EstimationNoise};
use pmopi::mimo::Snr;
use pmopi::protocol::Mode;

use crate::CliError;

/// Everything a command needs, with one flat key per field.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    // Channel
    pub carrier_freq_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub num_subcarriers: usize,
    pub velocity_kmh: f64,
    pub rms_delay_spread_s: f64,
    pub num_taps: usize,
    pub num_sinusoids: usize,
    // Exchange
    pub mode: String,
    pub noiseless: bool,
    pub snr_db: f64,
    pub rho: f64,
    pub sounding_delay_s: f64,
    pub max_rekey_rounds: u32,
    pub key_staleness_epochs: u64,
    // Experiments
    pub total_bandwidth_hz: f64,
    pub coherence_bw_hz: f64,
    pub max_separation: usize,
    pub num_trials: usize,
    pub output_path: Option<PathBuf>,
    pub master_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            carrier_freq_hz: 2e9,
            subcarrier_spacing_hz: 15e3,
            num_subcarriers: 1200,
            velocity_kmh: 0.0,
            rms_delay_spread_s: pmopi::channel::CALIBRATED_RMS_DELAY_SPREAD_S,
            num_taps: 12,
            num_sinusoids: 16,
            mode: "fast".into(),
            noiseless: true,
            snr_db: 40.0,
            rho: 10.0,
            sounding_delay_s: 1e-3,
            max_rekey_rounds: 5,
            key_staleness_epochs: 8,
            total_bandwidth_hz: 20e6,
            coherence_bw_hz: 300e3,
            max_separation: 40,
            num_trials: 1000,
            output_path: None,
            master_seed: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("bad config {}: {e}", p.display())))
            }
        }
    }

    pub fn channel_params(&self, seed: u64) -> ChannelParams {
        ChannelParams {
            carrier_freq_hz: self.carrier_freq_hz,
            subcarrier_spacing_hz: self.subcarrier_spacing_hz,
            num_subcarriers: self.num_subcarriers,
            velocity_kmh: self.velocity_kmh,
            rms_delay_spread_s: self.rms_delay_spread_s,
            num_taps: self.num_taps,
            num_sinusoids: self.num_sinusoids,
            seed,
        }
    }

    pub fn noise(&self) -> EstimationNoise {
        if self.noiseless {
            EstimationNoise::Noiseless
        } else {
            EstimationNoise::SnrDb(self.snr_db)
        }
    }

    pub fn snr(&self) -> Result<Snr, CliError> {
        Snr::new(self.rho).map_err(|e| CliError::Config(format!("rho: {e}")))
    }

    pub fn protocol_mode(&self) -> Result<Mode, CliError> {
        match self.mode.as_str() {
            "fast" => Ok(Mode::Fast),
            "slow" => Ok(Mode::SlowVarying),
            other => Err(CliError::Config(format!(
                "mode must be \"fast\" or \"slow\", got \"{other}\""
            ))),
        }
    }

    /// Destination file, defaulting per command.
    pub fn output_or(&self, default_name: &str) -> PathBuf {
        self.output_path
            .clone()
            .unwrap_or_else(|| PathBuf::from(default_name))
    }
}

/// CLI flags mirroring the config keys; any flag set here wins over the file.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Configuration file (flat TOML keys mirroring these flags).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `master_seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials per point (overrides `num_trials`).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Output file (overrides `output_path`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true)]
    pub carrier_freq_hz: Option<f64>,
    #[arg(long, global = true)]
    pub subcarrier_spacing_hz: Option<f64>,
    #[arg(long, global = true)]
    pub num_subcarriers: Option<usize>,
    #[arg(long, global = true)]
    pub velocity_kmh: Option<f64>,
    #[arg(long, global = true)]
    pub rms_delay_spread_s: Option<f64>,
    #[arg(long, global = true)]
    pub num_taps: Option<usize>,
    #[arg(long, global = true)]
    pub num_sinusoids: Option<usize>,
    /// "fast" or "slow".
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// true for perfect estimates, false to apply `snr_db`.
    #[arg(long, global = true)]
    pub noiseless: Option<bool>,
    #[arg(long, global = true)]
    pub snr_db: Option<f64>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub sounding_delay_s: Option<f64>,
    #[arg(long, global = true)]
    pub max_rekey_rounds: Option<u32>,
    #[arg(long, global = true)]
    pub key_staleness_epochs: Option<u64>,
    #[arg(long, global = true)]
    pub total_bandwidth_hz: Option<f64>,
    #[arg(long, global = true)]
    pub coherence_bw_hz: Option<f64>,
    #[arg(long, global = true)]
    pub max_separation: Option<usize>,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        macro_rules! apply {
            ($($field:ident <- $flag:ident),* $(,)?) => {
                $(if let Some(v) = &self.$flag { cfg.$field = v.clone(); })*
            };
        }
        apply!(
            master_seed <- seed,
            num_trials <- trials,
            carrier_freq_hz <- carrier_freq_hz,
            subcarrier_spacing_hz <- subcarrier_spacing_hz,
            num_subcarriers <- num_subcarriers,
            velocity_kmh <- velocity_kmh,
            rms_delay_spread_s <- rms_delay_spread_s,
            num_taps <- num_taps,
            num_sinusoids <- num_sinusoids,
            mode <- mode,
            noiseless <- noiseless,
            snr_db <- snr_db,
            rho <- rho,
            sounding_delay_s <- sounding_delay_s,
            max_rekey_rounds <- max_rekey_rounds,
            key_staleness_epochs <- key_staleness_epochs,
            total_bandwidth_hz <- total_bandwidth_hz,
            coherence_bw_hz <- coherence_bw_hz,
            max_separation <- max_separation,
        );
        if let Some(out) = &self.out {
            cfg.output_path = Some(out.clone());
        }
        if cfg.num_trials == 0 {
            return Err(CliError::Config("num_trials must be at least 1".into()));
        }
        Ok(cfg)
    }
}
