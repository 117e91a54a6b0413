//! Seeded Monte-Carlo experiment drivers.
//!
//! These back the CLI figure commands and the acceptance suite. Every trial
//! derives its own stream from `(master seed, trial index)`, so results do
//! not depend on execution order and can be reproduced point by point.

use crate::channel::{estimate, sample_channel, ChannelParams, EstimationNoise, TX_ANTENNAS};
use crate::mimo::{random_unitary, select_pmi, Codebook, Snr};
use crate::rng::{self, derive_seed};
use crate::{Error, Result};

/// Stream tag separating a trial's noise/rotation draws from its channel seed.
const PROBE_NOISE_STREAM: u64 = 0x50524f42; // "PROB"

/// Half-width of a normal-approximation 95% binomial confidence interval.
pub fn binomial_ci95(successes: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let p = successes as f64 / trials as f64;
    1.96 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// One PMI reciprocity trial on a single subband.
///
/// Bob selects from his estimate at Alice's sounding (t = 0), Alice from hers
/// at t = `delay_s`; with `rotated` both selections run through the same
/// fresh secret unitary, i.e. on the effective estimates `(H + N) U`.
/// Returns whether the two PMIs agree.
pub fn pmi_match_trial(
    params: &ChannelParams,
    delay_s: f64,
    noise: EstimationNoise,
    rho: Snr,
    rotated: bool,
    codebook: &Codebook,
) -> Result<bool> {
    noise.validate()?;
    let process = sample_channel(params)?;
    let mut draw = rng::stream(derive_seed(params.seed, PROBE_NOISE_STREAM));
    let subcarrier = 0;
    let h_at_bob = process.channel_at(0.0, subcarrier)?;
    let h_at_alice = process.channel_at(delay_s, subcarrier)?;
    let bob_est = estimate(&h_at_bob, noise, &mut draw);
    let alice_est = estimate(&h_at_alice, noise, &mut draw);
    let (bob_pmi, alice_pmi) = if rotated {
        let u = random_unitary(&mut draw, TX_ANTENNAS);
        (
            select_pmi(&bob_est.mul(&u)?, rho, codebook)?,
            select_pmi(&alice_est.mul(&u)?, rho, codebook)?,
        )
    } else {
        (
            select_pmi(&bob_est, rho, codebook)?,
            select_pmi(&alice_est, rho, codebook)?,
        )
    };
    Ok(bob_pmi == alice_pmi)
}

/// Match probability over `num_trials` independent channels, with its 95%
/// confidence half-width.
pub fn pmi_match_rate(
    base: &ChannelParams,
    delay_s: f64,
    noise: EstimationNoise,
    rho: Snr,
    rotated: bool,
    codebook: &Codebook,
    num_trials: usize,
    master_seed: u64,
) -> Result<(f64, f64)> {
    if num_trials == 0 {
        return Err(Error::InvalidParameter("num_trials must be positive".into()));
    }
    let mut matches = 0usize;
    for trial in 0..num_trials {
        let mut params = base.clone();
        params.seed = derive_seed(master_seed, trial as u64);
        matches += usize::from(pmi_match_trial(
            &params, delay_s, noise, rho, rotated, codebook,
        )?);
    }
    Ok((
        matches as f64 / num_trials as f64,
        binomial_ci95(matches, num_trials),
    ))
}

/// Result of a delay-spread calibration sweep.
#[derive(Clone, Copy, Debug)]
pub struct CalibrationOutcome {
    pub rms_delay_spread_s: f64,
    /// Where the calibrated profile's correlation drops through 0.5, in
    /// subcarriers.
    pub crossing_subcarriers: f64,
    pub coherence_bandwidth_hz: f64,
}

/// Geometric grid of delay-spread candidates swept by [`calibrate_delay_spread`].
pub fn default_delay_spread_grid() -> Vec<f64> {
    let (lo, hi, n) = (0.3e-6_f64, 2.5e-6_f64, 30usize);
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Sweeps the delay-spread scale and keeps the value whose 0.5-correlation
/// crossing lands nearest `target_subcarriers`. Errors when nothing crosses
/// or the best candidate misses by more than `tolerance_subcarriers`.
pub fn calibrate_delay_spread(
    base: &ChannelParams,
    grid: &[f64],
    num_trials: usize,
    max_sep: usize,
    target_subcarriers: f64,
    tolerance_subcarriers: f64,
) -> Result<CalibrationOutcome> {
    if grid.is_empty() {
        return Err(Error::CalibrationFailed("empty delay-spread grid".into()));
    }
    let mut best: Option<CalibrationOutcome> = None;
    let mut any_crossed = false;
    for &sigma in grid {
        let mut params = base.clone();
        params.rms_delay_spread_s = sigma;
        let corr = crate::channel::frequency_correlation(&params, num_trials, max_sep)?;
        let cb = crate::channel::coherence_bandwidth(&corr, 0.5, params.subcarrier_spacing_hz)?;
        if !cb.crossed {
            continue;
        }
        any_crossed = true;
        let crossing = cb.hz / params.subcarrier_spacing_hz;
        let candidate = CalibrationOutcome {
            rms_delay_spread_s: sigma,
            crossing_subcarriers: crossing,
            coherence_bandwidth_hz: cb.hz,
        };
        let better = match best {
            None => true,
            Some(prev) => {
                (crossing - target_subcarriers).abs()
                    < (prev.crossing_subcarriers - target_subcarriers).abs()
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    if !any_crossed {
        return Err(Error::CalibrationFailed(
            "correlation curve not crossed 0.5 for any grid value".into(),
        ));
    }
    let best = best.expect("any_crossed implies a candidate");
    if (best.crossing_subcarriers - target_subcarriers).abs() > tolerance_subcarriers {
        return Err(Error::CalibrationFailed(format!(
            "best crossing {:.2} subcarriers misses target {target_subcarriers} by more than {tolerance_subcarriers}",
            best.crossing_subcarriers
        )));
    }
    Ok(best)
}
