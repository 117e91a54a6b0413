//! The experiment commands.
//!
//! Every command derives all randomness from `master_seed`, buffers its whole
//! output in memory, and writes it in one shot, so identical invocations
//! produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pmopi::channel::{coherence_bandwidth, frequency_correlation, sample_channel, EstimationNoise};
use pmopi::cipher::{self, CipherKey, Nonce};
use pmopi::experiments::{
    calibrate_delay_spread, default_delay_spread_grid, pmi_match_rate,
};
use pmopi::mimo::build_householder_codebook;
use pmopi::protocol::{
    bandwidth_division_count, format_transcript, plan_subbands, run_exchange, ExchangeConfig,
    Message, Sender, TranscriptEntry,
};
use pmopi::rng::derive_seed;

use crate::config::RunConfig;
use crate::csvfmt::sig6;
use crate::CliError;

/// Delay grid (ms) for the match-vs-delay curves.
const DELAY_GRID_MS: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0];
/// Velocity grid (km/h) for the match-vs-delay curves.
const VELOCITY_GRID_KMH: [f64; 3] = [0.0, 3.0, 10.0];
/// SNR grid (dB) for the match-vs-SNR curves; a noiseless row is appended.
const SNR_GRID_DB: [f64; 6] = [-10.0, 0.0, 10.0, 20.0, 30.0, 40.0];
/// Where calibration wants the 0.5-correlation crossing, in subcarriers.
const CALIBRATION_TARGET: f64 = 20.0;
/// Largest acceptable miss before calibration reports failure.
const CALIBRATION_TOLERANCE: f64 = 8.0;

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_calibrate(cfg: &RunConfig) -> Result<(), CliError> {
    let base = cfg.channel_params(cfg.master_seed);
    let outcome = calibrate_delay_spread(
        &base,
        &default_delay_spread_grid(),
        cfg.num_trials,
        cfg.max_separation,
        CALIBRATION_TARGET,
        CALIBRATION_TOLERANCE,
    )
    .map_err(|e| CliError::Acceptance(e.to_string()))?;

    let mut report = String::new();
    let _ = writeln!(report, "rms_delay_spread_s = {:e}", outcome.rms_delay_spread_s);
    let _ = writeln!(
        report,
        "crossing_subcarriers = {}",
        sig6(outcome.crossing_subcarriers)
    );
    let _ = writeln!(
        report,
        "coherence_bandwidth_hz = {}",
        sig6(outcome.coherence_bandwidth_hz)
    );
    let path = cfg.output_or("calibration.txt");
    write_output(&path, &report)?;
    print!("{report}");
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_fig_corr(cfg: &RunConfig) -> Result<(), CliError> {
    let params = cfg.channel_params(cfg.master_seed);
    let corr = frequency_correlation(&params, cfg.num_trials, cfg.max_separation)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut csv = String::from("separation_subcarriers,correlation\n");
    for (d, value) in corr.iter().enumerate() {
        let _ = writeln!(csv, "{d},{}", sig6(*value));
    }
    let path = cfg.output_or("fig_corr.csv");
    write_output(&path, &csv)?;

    let cb = coherence_bandwidth(&corr, 0.5, params.subcarrier_spacing_hz)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if cb.crossed {
        println!(
            "0.5-correlation crossing at {} subcarriers ({} Hz)",
            sig6(cb.hz / params.subcarrier_spacing_hz),
            sig6(cb.hz)
        );
    } else {
        println!("correlation never crossed 0.5 within {} separations", cfg.max_separation);
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_fig_pmi_time(cfg: &RunConfig) -> Result<(), CliError> {
    let rho = cfg.snr()?;
    let codebook = build_householder_codebook();
    let mut csv = String::from("delay_ms,velocity_kmh,mode,match_probability,ci95\n");
    let mut point = 0u64;
    for delay_ms in DELAY_GRID_MS {
        for velocity in VELOCITY_GRID_KMH {
            for (mode, rotated) in [("fast", false), ("slow", true)] {
                let mut params = cfg.channel_params(0);
                params.velocity_kmh = velocity;
                let (p, ci) = pmi_match_rate(
                    &params,
                    delay_ms * 1e-3,
                    EstimationNoise::Noiseless,
                    rho,
                    rotated,
                    &codebook,
                    cfg.num_trials,
                    derive_seed(cfg.master_seed, point),
                )
                .map_err(|e| CliError::Config(e.to_string()))?;
                let _ = writeln!(
                    csv,
                    "{},{},{mode},{},{}",
                    sig6(delay_ms),
                    sig6(velocity),
                    sig6(p),
                    sig6(ci)
                );
                point += 1;
            }
        }
    }
    let path = cfg.output_or("fig_pmi_time.csv");
    write_output(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_fig_pmi_snr(cfg: &RunConfig) -> Result<(), CliError> {
    let rho = cfg.snr()?;
    let codebook = build_householder_codebook();
    let params = cfg.channel_params(0);
    let mut csv = String::from("snr_db,mode,match_probability,ci95\n");
    let mut point = 0u64;
    let run_point = |csv: &mut String,
                         label: String,
                         noise: EstimationNoise,
                         rotated: bool,
                         mode: &str,
                         point: u64|
     -> Result<(), CliError> {
        let (p, ci) = pmi_match_rate(
            &params,
            cfg.sounding_delay_s,
            noise,
            rho,
            rotated,
            &codebook,
            cfg.num_trials,
            derive_seed(cfg.master_seed, point),
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        let _ = writeln!(csv, "{label},{mode},{},{}", sig6(p), sig6(ci));
        Ok(())
    };
    for snr_db in SNR_GRID_DB {
        for (mode, rotated) in [("fast", false), ("slow", true)] {
            run_point(
                &mut csv,
                sig6(snr_db),
                EstimationNoise::SnrDb(snr_db),
                rotated,
                mode,
                point,
            )?;
            point += 1;
        }
    }
    for (mode, rotated) in [("fast", false), ("slow", true)] {
        run_point(
            &mut csv,
            "inf".into(),
            EstimationNoise::Noiseless,
            rotated,
            mode,
            point,
        )?;
        point += 1;
    }
    let path = cfg.output_or("fig_pmi_snr.csv");
    write_output(&path, &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn cmd_keyexchange(cfg: &RunConfig) -> Result<(), CliError> {
    let params = cfg.channel_params(cfg.master_seed);
    let process = sample_channel(&params).map_err(|e| CliError::Config(e.to_string()))?;
    let plan = plan_subbands(
        cfg.num_subcarriers,
        cfg.coherence_bw_hz,
        cfg.subcarrier_spacing_hz,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;

    let mut exchange_config = ExchangeConfig::new(cfg.protocol_mode()?, cfg.noise(), cfg.snr()?, plan.clone());
    exchange_config.sounding_delay_s = cfg.sounding_delay_s;
    exchange_config.max_rekey_rounds = cfg.max_rekey_rounds;
    exchange_config.key_staleness_epochs = cfg.key_staleness_epochs;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, 0x4b455845)); // "KEXE"
    let mut outcome = run_exchange(&process, &exchange_config, &mut rng)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let bw_count = bandwidth_division_count(cfg.total_bandwidth_hz, cfg.coherence_bw_hz);
    let eve_hits = outcome
        .eve_key
        .pmis
        .iter()
        .zip(outcome.key_bob.pmis.iter())
        .filter(|(a, b)| a == b)
        .count();

    // Demo payload round trip under the agreed key. Sent one epoch after the
    // key check so the keystream nonce is never reused within the session.
    let payload = b"pmopi demo payload: precoding indices as shared secrets";
    let data_epoch = outcome.key_alice.epoch + 1;
    let alice_key = CipherKey::from_bits(&outcome.key_alice.key_bits);
    let bob_key = CipherKey::from_bits(&outcome.key_bob.key_bits);
    let ciphertext = cipher::encrypt(&alice_key, Nonce::from_epoch(data_epoch), payload);
    let decrypted = cipher::decrypt(&bob_key, Nonce::from_epoch(data_epoch), &ciphertext);
    let round_trip_ok = decrypted == payload;
    outcome.transcript.push(TranscriptEntry {
        sender: Sender::Alice,
        message: Message::Data {
            nonce: data_epoch.to_be_bytes(),
            ciphertext,
        },
    });

    let mut report = String::new();
    let _ = writeln!(report, "subbands_grid = {}", plan.num_subbands());
    let _ = writeln!(report, "key_bits_grid = {}", plan.key_bits());
    let _ = writeln!(report, "subbands_bandwidth_division = {bw_count}");
    let _ = writeln!(report, "key_bits_bandwidth_division = {}", bw_count * 4);
    let _ = writeln!(report, "matched = {}", outcome.matched);
    let _ = writeln!(report, "rekey_rounds = {}", outcome.rekey_rounds);
    let _ = writeln!(
        report,
        "eve_subband_hits = {eve_hits} / {}",
        plan.num_subbands()
    );
    let _ = writeln!(
        report,
        "eve_full_key_match = {}",
        outcome.eve_key.key_bits == outcome.key_bob.key_bits
    );
    let _ = writeln!(report, "demo_payload_bytes = {}", payload.len());
    let _ = writeln!(report, "demo_round_trip_ok = {round_trip_ok}");
    let _ = writeln!(report, "transcript:");
    report.push_str(&format_transcript(&outcome.transcript));

    let path = cfg.output_or("keyexchange.txt");
    write_output(&path, &report)?;
    print!("{report}");
    println!("wrote {}", path.display());

    if !outcome.matched {
        return Err(CliError::Acceptance(format!(
            "rekey budget exhausted after {} rounds",
            outcome.rekey_rounds
        )));
    }
    Ok(())
}
