//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantities (visible with `--nocapture`, or automatically
//! for failures).

mod support;

use std::time::Instant;

use pmopi::bits::BitString;
use pmopi::channel::{sample_channel, ChannelParams, EstimationNoise, TX_ANTENNAS};
use pmopi::cipher::{self, CipherKey, Nonce};
use pmopi::experiments::pmi_match_rate;
use pmopi::mimo::{
    build_householder_codebook, capacity, random_unitary, select_pmi, select_pmi_rotated,
    ComplexMatrix, Pmi, Snr,
};
use pmopi::protocol::{
    assemble_key, bandwidth_division_count, make_key_check, plan_subbands, run_exchange,
    verify_key_check, ExchangeConfig, Mode,
};
use pmopi::rng::{complex_gaussian, derive_seed, stream};

const ACCEPTANCE_SEED: u64 = 42;

fn random_channel(rng: &mut rand_chacha::ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(2, 4, |_, _| complex_gaussian(rng, 1.0))
}

fn report(criterion: u32, pass: bool, details: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} — {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion}: {details}");
}

#[test]
fn criterion_01_capacity_matches_eigenvalue_oracle() {
    let start = Instant::now();
    let cb = build_householder_codebook();
    let mut rng = stream(derive_seed(ACCEPTANCE_SEED, 1));
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let h = random_channel(&mut rng);
        let f = cb.entry(i % cb.len());
        let rho = 10f64.powf(-1.0 + 3.0 * (i as f64 / 1000.0));
        let lib = capacity(&h, f, Snr::new(rho).unwrap()).unwrap();
        let oracle = support::capacity_eigenvalue_oracle(&h, f, rho);
        let rel = (lib - oracle).abs() / oracle.abs().max(1e-300);
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed();
    report(
        1,
        worst < 1e-9 && elapsed.as_secs_f64() < 1.0,
        &format!("worst relative error {worst:.3e} over 1000 samples in {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_rotation_identity_and_argmax() {
    let start = Instant::now();
    let cb = build_householder_codebook();
    let snr = Snr::new(10.0).unwrap();
    let mut rng = stream(derive_seed(ACCEPTANCE_SEED, 2));
    let mut worst = 0.0f64;
    let mut argmax_mismatches = 0u32;
    for i in 0..1000 {
        let h = random_channel(&mut rng);
        let u = random_unitary(&mut rng, 4);
        let f = cb.entry(i % cb.len());
        let rotated = pmopi::mimo::rotated_capacity(&h, f, &u, snr).unwrap();
        let absorbed = capacity(&h, &u.mul(f).unwrap(), snr).unwrap();
        worst = worst.max((rotated - absorbed).abs());

        let selected = select_pmi_rotated(&h, &u, snr, &cb).unwrap();
        let mut best = 0usize;
        let mut best_c = f64::NEG_INFINITY;
        for idx in 0..cb.len() {
            let c = capacity(&h, &u.mul(cb.entry(idx)).unwrap(), snr).unwrap();
            if c > best_c {
                best = idx;
                best_c = c;
            }
        }
        argmax_mismatches += u32::from(selected.index() != best);
    }
    let elapsed = start.elapsed();
    report(
        2,
        worst < 1e-9 && argmax_mismatches == 0 && elapsed.as_secs_f64() < 2.0,
        &format!(
            "worst identity deviation {worst:.3e}, {argmax_mismatches} argmax mismatches, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_03_codebook_validity() {
    let a = build_householder_codebook();
    let b = build_householder_codebook();
    let id = ComplexMatrix::identity(2);
    let mut worst = 0.0f64;
    let mut shapes_ok = a.len() == 16;
    for f in a.iter() {
        shapes_ok &= f.rows() == 4 && f.cols() == 2;
        worst = worst.max(f.hermitian().mul(f).unwrap().max_abs_diff(&id));
    }
    let deterministic = a.iter().zip(b.iter()).all(|(fa, fb)| {
        fa.entries()
            .iter()
            .zip(fb.entries().iter())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits())
    });
    report(
        3,
        shapes_ok && worst < 1e-12 && deterministic,
        &format!(
            "16 entries 4x2, worst orthonormality deviation {worst:.3e}, bit-identical rebuild: {deterministic}"
        ),
    );
}

#[test]
fn criterion_04_perfect_reciprocity_agreement() {
    let start = Instant::now();
    let plan = plan_subbands(1200, 300e3, 15e3).unwrap();
    let mut agreements = 0u32;
    for trial in 0..500u64 {
        let params = ChannelParams {
            velocity_kmh: 0.0,
            seed: derive_seed(ACCEPTANCE_SEED, 400 + trial),
            ..ChannelParams::default()
        };
        let process = sample_channel(&params).unwrap();
        let config = ExchangeConfig::new(
            Mode::Fast,
            EstimationNoise::Noiseless,
            Snr::new(10.0).unwrap(),
            plan.clone(),
        );
        let outcome = run_exchange(&process, &config, &mut stream(trial)).unwrap();
        agreements += u32::from(
            outcome.matched && outcome.key_alice.key_bits == outcome.key_bob.key_bits,
        );
    }
    let elapsed = start.elapsed();
    report(
        4,
        agreements == 500 && elapsed.as_secs_f64() < 10.0,
        &format!("{agreements}/500 noiseless static exchanges agreed in {elapsed:.2?}"),
    );
}

#[test]
fn criterion_06_pmi_match_vs_delay() {
    let start = Instant::now();
    let cb = build_householder_codebook();
    let rho = Snr::new(10.0).unwrap();
    let trials = 1000;
    let rate_at = |velocity: f64| {
        let params = ChannelParams {
            velocity_kmh: velocity,
            ..ChannelParams::default()
        };
        pmi_match_rate(
            &params,
            1e-3,
            EstimationNoise::Noiseless,
            rho,
            false,
            &cb,
            trials,
            ACCEPTANCE_SEED,
        )
        .unwrap()
        .0
    };
    let p0 = rate_at(0.0);
    let p3 = rate_at(3.0);
    let p10 = rate_at(10.0);
    let elapsed = start.elapsed();
    report(
        6,
        p0 == 1.0 && p3 >= 0.95 && p10 >= 0.90 && elapsed.as_secs_f64() < 120.0,
        &format!(
            "at 1 ms (noiseless, {trials} trials): v0 {p0:.4} (need == 1.0), v3 {p3:.4} (need >= 0.95), v10 {p10:.4} (need >= 0.90), {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_07_snr_robustness() {
    let start = Instant::now();
    let cb = build_householder_codebook();
    let rho = Snr::new(10.0).unwrap();
    let params = ChannelParams {
        velocity_kmh: 3.0,
        ..ChannelParams::default()
    };
    let delay = 0.5e-3;
    let trials = 1000;
    let rate = |noise: EstimationNoise| {
        pmi_match_rate(&params, delay, noise, rho, false, &cb, trials, ACCEPTANCE_SEED)
            .unwrap()
            .0
    };
    let noiseless = rate(EstimationNoise::Noiseless);
    let db40 = rate(EstimationNoise::SnrDb(40.0));
    let dbm10 = rate(EstimationNoise::SnrDb(-10.0));
    let gap = (noiseless - db40).abs();
    let elapsed = start.elapsed();
    report(
        7,
        gap <= 0.02 && dbm10 < db40 && elapsed.as_secs_f64() < 120.0,
        &format!(
            "v3 @ 0.5 ms: noiseless {noiseless:.4}, 40 dB {db40:.4} (gap {gap:.4}, need <= 0.02), -10 dB {dbm10:.4} (need < 40 dB value), {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_08_slow_mode_unitary_properties() {
    // (a) U = I reduces rotated selection to plain selection, exactly.
    let cb = build_householder_codebook();
    let snr = Snr::new(10.0).unwrap();
    let id = ComplexMatrix::identity(4);
    let mut rng = stream(derive_seed(ACCEPTANCE_SEED, 8));
    let mut identity_ok = true;
    for _ in 0..200 {
        let h = random_channel(&mut rng);
        identity_ok &=
            select_pmi_rotated(&h, &id, snr, &cb).unwrap() == select_pmi(&h, snr, &cb).unwrap();
    }

    // (b) Rotating iid Gaussian noise leaves per-entry variance unchanged.
    let u = random_unitary(&mut rng, TX_ANTENNAS);
    let samples = 100_000;
    let mut var_plain = 0.0f64;
    let mut var_rotated = 0.0f64;
    for _ in 0..samples {
        let n = ComplexMatrix::from_fn(2, 4, |_, _| complex_gaussian(&mut rng, 1.0));
        var_plain += n.get(0, 2).norm_sqr();
        var_rotated += n.mul(&u).unwrap().get(0, 2).norm_sqr();
    }
    var_plain /= samples as f64;
    var_rotated /= samples as f64;
    let var_ok = (var_rotated - var_plain).abs() <= 0.02 * var_plain;

    // (c) At 10 dB the rotated selector must not trail the plain one by more
    // than the plain estimate's 95% CI width.
    let params = ChannelParams {
        velocity_kmh: 3.0,
        ..ChannelParams::default()
    };
    let (fast, fast_ci) = pmi_match_rate(
        &params,
        0.5e-3,
        EstimationNoise::SnrDb(10.0),
        snr,
        false,
        &cb,
        1000,
        ACCEPTANCE_SEED,
    )
    .unwrap();
    let (slow, _) = pmi_match_rate(
        &params,
        0.5e-3,
        EstimationNoise::SnrDb(10.0),
        snr,
        true,
        &cb,
        1000,
        ACCEPTANCE_SEED,
    )
    .unwrap();
    let low_snr_ok = slow >= fast - fast_ci;

    report(
        8,
        identity_ok && var_ok && low_snr_ok,
        &format!(
            "(a) identity rotation exact: {identity_ok}; (b) rotated noise variance {var_rotated:.4} vs {var_plain:.4}; (c) 10 dB slow {slow:.4} vs fast {fast:.4} - ci {fast_ci:.4}"
        ),
    );
}

#[test]
fn criterion_09_key_sizes() {
    let plan = plan_subbands(1200, 300e3, 15e3).unwrap();
    let grid_bits = plan.key_bits();
    let bw_count = bandwidth_division_count(20e6, 300e3);
    let bw_bits = bw_count * 4;
    let small = plan_subbands(500, 300e3, 15e3).unwrap();
    let small_bits = small.key_bits();
    report(
        9,
        grid_bits >= 240 && bw_count == 66 && bw_bits == 264 && small.num_subbands() == 25
            && small_bits >= 100,
        &format!(
            "grid plan: {} subbands / {grid_bits} bits (need >= 240); bandwidth division: {bw_count} subbands / {bw_bits} bits (need 66/264); 25-subband plan: {small_bits} bits (need >= 100)",
            plan.num_subbands()
        ),
    );
}

#[test]
fn criterion_10_eavesdropper_failure() {
    let start = Instant::now();
    let plan = plan_subbands(1200, 300e3, 15e3).unwrap();
    let config = ExchangeConfig::new(
        Mode::Fast,
        EstimationNoise::Noiseless,
        Snr::new(10.0).unwrap(),
        plan.clone(),
    );
    let mut subband_hits = 0usize;
    let mut subband_total = 0usize;
    let mut full_key_matches = 0u32;
    for trial in 0..1000u64 {
        let params = ChannelParams {
            velocity_kmh: 0.0,
            seed: derive_seed(ACCEPTANCE_SEED, 1_000_000 + trial),
            ..ChannelParams::default()
        };
        let process = sample_channel(&params).unwrap();
        let outcome = run_exchange(&process, &config, &mut stream(trial)).unwrap();
        for (e, b) in outcome.eve_key.pmis.iter().zip(outcome.key_bob.pmis.iter()) {
            subband_total += 1;
            subband_hits += usize::from(e == b);
        }
        full_key_matches += u32::from(outcome.eve_key.key_bits == outcome.key_bob.key_bits);
    }
    let rate = subband_hits as f64 / subband_total as f64;
    let elapsed = start.elapsed();
    report(
        10,
        rate <= 0.25 && full_key_matches == 0 && elapsed.as_secs_f64() < 60.0,
        &format!(
            "per-subband hit rate {rate:.4} (need <= 0.25), full-key matches {full_key_matches}/1000 (need 0), {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_11_mismatch_detection() {
    let mut rng = stream(derive_seed(ACCEPTANCE_SEED, 11));
    let mut false_passes = 0u32;
    let mut true_passes = 0u32;
    for trial in 0..1000u64 {
        use rand::Rng;
        let pmis: Vec<Pmi> = (0..60).map(|_| Pmi::new(rng.gen_range(0..16))).collect();
        let key = assemble_key(&pmis).unwrap();
        let check = make_key_check(&key, trial, &mut rng);
        true_passes += u32::from(verify_key_check(&check, &key));
        let mut corrupted = key.clone();
        corrupted.flip_bit(rng.gen_range(0..corrupted.len()));
        false_passes += u32::from(verify_key_check(&check, &corrupted));
    }
    report(
        11,
        true_passes == 1000 && false_passes == 0,
        &format!(
            "equal keys verified {true_passes}/1000 (need 1000), corrupted keys passed {false_passes}/1000 (need 0)"
        ),
    );
}

#[test]
fn criterion_12_cipher_round_trip_and_sha256_vectors() {
    let empty_ok = hex::encode(cipher::sha256(b""))
        == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
    let abc_ok = hex::encode(cipher::sha256(b"abc"))
        == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";
    let million = vec![b'a'; 1_000_000];
    let million_ok = hex::encode(cipher::sha256(&million))
        == "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0";

    let mut rng = stream(derive_seed(ACCEPTANCE_SEED, 12));
    let mut round_trips = 0u32;
    for trial in 0..1000u64 {
        use rand::Rng;
        let mut bits = BitString::new();
        for _ in 0..100 + (trial % 64) {
            bits.push(rng.gen());
        }
        let key = CipherKey::from_bits(&bits);
        let nonce = Nonce::from_epoch(trial);
        let plaintext: Vec<u8> = (0..rng.gen_range(0..128)).map(|_| rng.gen()).collect();
        let ct = cipher::encrypt(&key, nonce, &plaintext);
        round_trips += u32::from(
            ct.len() == plaintext.len() && cipher::decrypt(&key, nonce, &ct) == plaintext,
        );
    }
    report(
        12,
        empty_ok && abc_ok && million_ok && round_trips == 1000,
        &format!(
            "standard vectors: empty {empty_ok}, abc {abc_ok}, 10^6 x 'a' {million_ok}; round trips {round_trips}/1000"
        ),
    );
}

// A hex helper so the suite does not depend on the dev-dependency list of the
// library crate.
mod hex {
    pub fn encode(bytes: impl AsRef<[u8]>) -> String {
        bytes
            .as_ref()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
