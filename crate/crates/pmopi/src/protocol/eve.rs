//! Eve's best-effort key estimator.
//!
//! Eve hears every frame and receives every sounding through her own
//! channels, and she knows the codebook and the capacity objective. What she
//! never has is the Alice-Bob channel or Bob's secret rotation, so this
//! module deliberately consumes only the public transcript plus her own
//! received observations. When Bob sounds through a rotation, the rotated
//! effect is baked into her received matrices by whoever did the physics —
//! the unitary itself never reaches this code.

use rand::Rng;

use super::message::TranscriptEntry;
use super::{KeyMaterial, SubbandPlan};
use crate::channel::{estimate, ChannelProcess, EstimationNoise};
use crate::mimo::{select_pmi, Codebook, ComplexMatrix, Snr};
use crate::{Error, Result};

/// Which of her observations Eve feeds the selector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EveStrategy {
    /// Estimate from Alice's reference signal through the Alice-Eve channel.
    #[default]
    AliceSide,
    /// Estimate from Bob's sounding through the Bob-Eve channel (falls back
    /// to the Alice side when no Bob-side observation exists for the epoch).
    BobSide,
}

/// Eve's received channel matrices for one epoch, one per subband.
#[derive(Clone, Debug)]
pub struct EveEpochView {
    pub epoch: u64,
    /// Observed at Alice's sounding instant.
    pub alice_side: Vec<ComplexMatrix>,
    /// Observed at Bob's sounding instant; includes any rotation Bob applied,
    /// exactly as received. `None` if the observation was not captured.
    pub bob_side: Option<Vec<ComplexMatrix>>,
}

/// Eve's key guess for the final epoch of `transcript`: the capacity argmax
/// per subband over her chosen observations.
pub fn eve_estimate(
    transcript: &[TranscriptEntry],
    views: &[EveEpochView],
    strategy: EveStrategy,
    rho: Snr,
    codebook: &Codebook,
    plan: &SubbandPlan,
) -> Result<KeyMaterial> {
    let last_epoch = transcript
        .last()
        .map(|entry| entry.message.epoch())
        .ok_or_else(|| Error::MalformedTranscript("empty transcript".into()))?;
    let view = views
        .iter()
        .find(|v| v.epoch == last_epoch)
        .ok_or_else(|| {
            Error::MalformedTranscript(format!("no observations for epoch {last_epoch}"))
        })?;

    let observations = match strategy {
        EveStrategy::AliceSide => &view.alice_side,
        EveStrategy::BobSide => view.bob_side.as_ref().unwrap_or(&view.alice_side),
    };
    if observations.len() != plan.num_subbands() {
        return Err(Error::MalformedTranscript(format!(
            "expected {} subband observations, got {}",
            plan.num_subbands(),
            observations.len()
        )));
    }

    let pmis = observations
        .iter()
        .map(|h| select_pmi(h, rho, codebook))
        .collect::<Result<Vec<_>>>()?;
    KeyMaterial::assemble(last_epoch, pmis)
}

/// Reconstructs Eve's observations directly from her own channel processes
/// and the transcript's timing. This covers plain reference/sounding frames;
/// a rotated sounding's effective channel exists only in the received signal,
/// so such epochs get no Bob-side matrices here.
pub fn views_from_own_channels<R: Rng>(
    transcript: &[TranscriptEntry],
    alice_eve: &ChannelProcess,
    bob_eve: &ChannelProcess,
    noise: EstimationNoise,
    plan: &SubbandPlan,
    sounding_delay_s: f64,
    rng: &mut R,
) -> Result<Vec<EveEpochView>> {
    use super::message::Message;

    let mut views: Vec<EveEpochView> = Vec::new();
    for entry in transcript {
        let epoch = entry.message.epoch();
        let t_alice = epoch as f64 * 2.0 * sounding_delay_s;
        match &entry.message {
            Message::ReferenceSignal { .. } => {
                let alice_side = plan
                    .centers()
                    .iter()
                    .map(|&k| Ok(estimate(&alice_eve.channel_at(t_alice, k)?, noise, rng)))
                    .collect::<Result<Vec<_>>>()?;
                views.push(EveEpochView {
                    epoch,
                    alice_side,
                    bob_side: None,
                });
            }
            Message::SoundingSignal { .. } => {
                let t_bob = t_alice + sounding_delay_s;
                let bob_side = plan
                    .centers()
                    .iter()
                    .map(|&k| Ok(estimate(&bob_eve.channel_at(t_bob, k)?, noise, rng)))
                    .collect::<Result<Vec<_>>>()?;
                if let Some(view) = views.iter_mut().rev().find(|v| v.epoch == epoch) {
                    view.bob_side = Some(bob_side);
                }
            }
            _ => {}
        }
    }
    Ok(views)
}
