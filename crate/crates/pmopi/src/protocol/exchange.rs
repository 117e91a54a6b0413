//! The exchange driver: simulates the over-the-air protocol between Alice,
//! Bob, and a listening Eve on top of seeded channel processes.
//!
//! Reciprocity is realized by letting both parties query the same
//! `ChannelProcess`; the two degradation sources the scheme cares about —
//! estimation noise and the time offset between the two soundings — enter
//! explicitly. One epoch is one full sounding exchange; Alice sounds at
//! `epoch * 2 * delay`, Bob answers `delay` later. Eve's channels are
//! independent processes, and everything she may legally see is recorded as
//! received observations for [`eve_estimate`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::eve::{eve_estimate, EveEpochView};
use super::message::{Message, Sender, TranscriptEntry};
use super::{
    make_key_check, verify_key_check, ExchangeConfig, ExchangeOutcome, KeyMaterial, Mode,
};
use crate::channel::{estimate, sample_channel, ChannelProcess, TX_ANTENNAS};
use crate::mimo::{
    build_householder_codebook, random_unitary, select_pmi, Codebook, ComplexMatrix, Pmi,
};
use crate::rng::{self, derive_seed};
use crate::Result;

/// Stream tags for deriving Eve's independent channels from the main seed.
const EVE_ALICE_CHANNEL_STREAM: u64 = 0x45_56_45_41; // "EVEA"
const EVE_BOB_CHANNEL_STREAM: u64 = 0x45_56_45_42; // "EVEB"

/// A multi-epoch protocol session between two parties over fixed channels.
///
/// Sessions persist Bob's previous PMI list (the slow-mode static test) and
/// both parties' agreed key sets across exchanges.
pub struct Session<'a> {
    alice_bob: &'a ChannelProcess,
    alice_eve: &'a ChannelProcess,
    bob_eve: &'a ChannelProcess,
    config: ExchangeConfig,
    codebook: Codebook,
    epoch: u64,
    bob_prev_pmis: Option<Vec<Pmi>>,
    alice_keys: Vec<KeyMaterial>,
    bob_keys: Vec<KeyMaterial>,
    eve_views: Vec<EveEpochView>,
    alice_rng: ChaCha8Rng,
    bob_rng: ChaCha8Rng,
    eve_rng: ChaCha8Rng,
}

struct EpochResult {
    key_alice: KeyMaterial,
    key_bob: KeyMaterial,
    matched: bool,
}

impl<'a> Session<'a> {
    pub fn new<R: Rng>(
        alice_bob: &'a ChannelProcess,
        alice_eve: &'a ChannelProcess,
        bob_eve: &'a ChannelProcess,
        config: ExchangeConfig,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            alice_bob,
            alice_eve,
            bob_eve,
            config,
            codebook: build_householder_codebook(),
            epoch: 0,
            bob_prev_pmis: None,
            alice_keys: Vec::new(),
            bob_keys: Vec::new(),
            eve_views: Vec::new(),
            alice_rng: rng::stream(rng.gen()),
            bob_rng: rng::stream(rng.gen()),
            eve_rng: rng::stream(rng.gen()),
        })
    }

    pub fn current_epoch(&self) -> u64 {
        self.epoch
    }

    /// Agreed keys Alice currently holds, oldest first.
    pub fn alice_keys(&self) -> &[KeyMaterial] {
        &self.alice_keys
    }

    pub fn bob_keys(&self) -> &[KeyMaterial] {
        &self.bob_keys
    }

    /// Establishes one key, rekeying on mismatch until success or until the
    /// configured budget is exhausted.
    pub fn run_exchange(&mut self) -> Result<ExchangeOutcome> {
        let mut transcript = Vec::new();
        let mut failures = 0u32;
        loop {
            let result = self.run_epoch(&mut transcript)?;
            let finished = result.matched || {
                failures += 1;
                failures >= self.config.max_rekey_rounds
            };
            if result.matched {
                self.alice_keys.push(result.key_alice.clone());
                self.bob_keys.push(result.key_bob.clone());
            }
            self.expire_stale_keys();
            if finished {
                let eve_key = eve_estimate(
                    &transcript,
                    &self.eve_views,
                    self.config.eve_strategy,
                    self.config.rho,
                    &self.codebook,
                    &self.config.subband_plan,
                )?;
                return Ok(ExchangeOutcome {
                    key_alice: result.key_alice,
                    key_bob: result.key_bob,
                    matched: result.matched,
                    rekey_rounds: failures,
                    eve_key,
                    transcript,
                });
            }
        }
    }

    /// One full sounding exchange plus key check.
    fn run_epoch(&mut self, transcript: &mut Vec<TranscriptEntry>) -> Result<EpochResult> {
        let epoch = self.epoch;
        let config = &self.config;
        let plan = &config.subband_plan;
        let t_alice = epoch as f64 * 2.0 * config.sounding_delay_s;
        let t_bob = t_alice + config.sounding_delay_s;

        // Step 1: Alice's reference signal. Bob estimates per subband and
        // derives his fast-mode PMIs; Eve listens through her own channel.
        transcript.push(TranscriptEntry {
            sender: Sender::Alice,
            message: Message::ReferenceSignal { epoch },
        });
        let bob_estimates: Vec<ComplexMatrix> = plan
            .centers()
            .iter()
            .map(|&k| {
                Ok(estimate(
                    &self.alice_bob.channel_at(t_alice, k)?,
                    config.snr,
                    &mut self.bob_rng,
                ))
            })
            .collect::<Result<_>>()?;
        let bob_fast_pmis: Vec<Pmi> = bob_estimates
            .iter()
            .map(|h| select_pmi(h, config.rho, &self.codebook))
            .collect::<Result<_>>()?;
        let eve_alice_side: Vec<ComplexMatrix> = plan
            .centers()
            .iter()
            .map(|&k| {
                Ok(estimate(
                    &self.alice_eve.channel_at(t_alice, k)?,
                    config.snr,
                    &mut self.eve_rng,
                ))
            })
            .collect::<Result<_>>()?;

        // Slow mode: an unchanged PMI list means the channel is static, so
        // Bob rotates his sounding to force fresh key material.
        let static_channel = self.bob_prev_pmis.as_deref() == Some(&bob_fast_pmis[..]);
        let rotate = config.mode == Mode::SlowVarying && static_channel;
        if config.mode == Mode::SlowVarying && self.bob_prev_pmis.is_some() {
            transcript.push(TranscriptEntry {
                sender: Sender::Bob,
                message: if rotate {
                    Message::FlagStatic { epoch }
                } else {
                    Message::FlagDynamic { epoch }
                },
            });
        }

        let alice_pmis: Vec<Pmi>;
        let bob_pmis: Vec<Pmi>;
        let eve_bob_side: Vec<ComplexMatrix>;
        if rotate {
            transcript.push(TranscriptEntry {
                sender: Sender::Bob,
                message: Message::RotatedSounding { epoch },
            });
            // One secret Haar unitary per subband, drawn by Bob.
            let rotations: Vec<ComplexMatrix> = plan
                .centers()
                .iter()
                .map(|_| random_unitary(&mut self.bob_rng, TX_ANTENNAS))
                .collect();
            // Bob already holds his estimate of H; knowing U he selects on
            // the rotated estimate (H + N) U = H U + N U.
            bob_pmis = bob_estimates
                .iter()
                .zip(rotations.iter())
                .map(|(est, u)| select_pmi(&est.mul(u)?, config.rho, &self.codebook))
                .collect::<Result<_>>()?;
            // Alice receives the rotated sounding: her effective estimate is
            // (H + N) U as well, without ever learning U.
            alice_pmis = plan
                .centers()
                .iter()
                .zip(rotations.iter())
                .map(|(&k, u)| {
                    let est = estimate(
                        &self.alice_bob.channel_at(t_bob, k)?,
                        config.snr,
                        &mut self.alice_rng,
                    );
                    select_pmi(&est.mul(u)?, config.rho, &self.codebook)
                })
                .collect::<Result<_>>()?;
            // Eve hears the same transmission through her Bob-side channel.
            eve_bob_side = plan
                .centers()
                .iter()
                .zip(rotations.iter())
                .map(|(&k, u)| {
                    let est = estimate(
                        &self.bob_eve.channel_at(t_bob, k)?,
                        config.snr,
                        &mut self.eve_rng,
                    );
                    est.mul(u)
                })
                .collect::<Result<_>>()?;
        } else {
            transcript.push(TranscriptEntry {
                sender: Sender::Bob,
                message: Message::SoundingSignal { epoch },
            });
            bob_pmis = bob_fast_pmis.clone();
            alice_pmis = plan
                .centers()
                .iter()
                .map(|&k| {
                    let est = estimate(
                        &self.alice_bob.channel_at(t_bob, k)?,
                        config.snr,
                        &mut self.alice_rng,
                    );
                    select_pmi(&est, config.rho, &self.codebook)
                })
                .collect::<Result<_>>()?;
            eve_bob_side = plan
                .centers()
                .iter()
                .map(|&k| {
                    Ok(estimate(
                        &self.bob_eve.channel_at(t_bob, k)?,
                        config.snr,
                        &mut self.eve_rng,
                    ))
                })
                .collect::<Result<_>>()?;
        }
        self.bob_prev_pmis = Some(bob_fast_pmis);
        self.eve_views.push(EveEpochView {
            epoch,
            alice_side: eve_alice_side,
            bob_side: Some(eve_bob_side),
        });

        let key_alice = KeyMaterial::assemble(epoch, alice_pmis)?;
        let key_bob = KeyMaterial::assemble(epoch, bob_pmis)?;

        // Step 7: Alice's key check, verified by Bob with his own key.
        let check = make_key_check(&key_alice.key_bits, epoch, &mut self.alice_rng);
        let matched = verify_key_check(&check, &key_bob.key_bits);
        transcript.push(TranscriptEntry {
            sender: Sender::Alice,
            message: check,
        });

        self.epoch += 1;
        Ok(EpochResult {
            key_alice,
            key_bob,
            matched,
        })
    }

    /// Both parties apply the same staleness rule, keeping their key sets
    /// synchronized without extra signalling: a key survives while its age
    /// relative to the most recent epoch stays below the horizon.
    fn expire_stale_keys(&mut self) {
        let latest = self.epoch.saturating_sub(1);
        let horizon = self.config.key_staleness_epochs;
        self.alice_keys.retain(|k| latest - k.epoch < horizon);
        self.bob_keys.retain(|k| latest - k.epoch < horizon);
    }
}

/// One-shot exchange over `process`, with Eve's independent channels derived
/// from the process seed.
pub fn run_exchange<R: Rng>(
    process: &ChannelProcess,
    config: &ExchangeConfig,
    rng: &mut R,
) -> Result<ExchangeOutcome> {
    let mut eve_alice_params = process.params().clone();
    eve_alice_params.seed = derive_seed(process.params().seed, EVE_ALICE_CHANNEL_STREAM);
    let mut eve_bob_params = process.params().clone();
    eve_bob_params.seed = derive_seed(process.params().seed, EVE_BOB_CHANNEL_STREAM);
    let alice_eve = sample_channel(&eve_alice_params)?;
    let bob_eve = sample_channel(&eve_bob_params)?;
    run_exchange_with_eve(process, &alice_eve, &bob_eve, config, rng)
}

/// One-shot exchange with explicit eavesdropper channels (e.g. a colocated
/// Eve for sanity checks).
pub fn run_exchange_with_eve<R: Rng>(
    alice_bob: &ChannelProcess,
    alice_eve: &ChannelProcess,
    bob_eve: &ChannelProcess,
    config: &ExchangeConfig,
    rng: &mut R,
) -> Result<ExchangeOutcome> {
    Session::new(alice_bob, alice_eve, bob_eve, config.clone(), rng)?.run_exchange()
}
