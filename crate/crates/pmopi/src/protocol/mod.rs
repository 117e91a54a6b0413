//! The key-exchange protocol: subband planning, key assembly, mismatch
//! detection, and the Alice/Bob/Eve exchange state machines.
//!
//! Fast mode is a two-way sounding exchange: Alice's reference lets Bob pick
//! one PMI per subband, Bob's sounding lets Alice do the same, and channel
//! reciprocity makes the two PMI lists agree. Slow mode keeps key material
//! fresh on a static channel: when Bob's PMIs stop changing he announces a
//! static channel and sounds through a secret Haar-random unitary, so both
//! sides re-derive new indices from the rotated effective channel while Eve
//! — who never learns the rotation — gains nothing.
//!
//! A SHA-256 key check closes every epoch: Alice encrypts a random value
//! under her key and sends the digest in plaintext; if Bob's decryption
//! hashes differently the parties rekey at the next epoch.

pub mod eve;
mod exchange;
pub mod message;

pub use eve::{eve_estimate, EveEpochView, EveStrategy};
pub use exchange::{run_exchange, run_exchange_with_eve, Session};
pub use message::{format_transcript, parse_log_line, to_log_line, Message, Sender, TranscriptEntry};

use rand::Rng;

use crate::bits::BitString;
use crate::channel::EstimationNoise;
use crate::cipher::{self, CipherKey, Nonce};
use crate::mimo::{Pmi, Snr, CODEBOOK_SIZE};
use crate::{Error, Result};

/// Bits contributed by one PMI.
pub const BITS_PER_PMI: u32 = 4;
/// Size of the random value protected by a key check.
const KEY_CHECK_VALUE_LEN: usize = 16;

/// Which protocol variant a session runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Fast,
    SlowVarying,
}

/// Subcarriers chosen to carry one PMI each, spaced at least a coherence
/// bandwidth apart so their fades are nearly uncorrelated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubbandPlan {
    center_indices: Vec<usize>,
    subband_spacing_subcarriers: usize,
}

impl SubbandPlan {
    /// A single subband centered on `index` (used by the reciprocity probes).
    pub fn single(index: usize) -> Self {
        Self {
            center_indices: vec![index],
            subband_spacing_subcarriers: 1,
        }
    }

    pub fn centers(&self) -> &[usize] {
        &self.center_indices
    }

    pub fn spacing(&self) -> usize {
        self.subband_spacing_subcarriers
    }

    pub fn num_subbands(&self) -> usize {
        self.center_indices.len()
    }

    /// Key bits one epoch of this plan yields.
    pub fn key_bits(&self) -> usize {
        self.num_subbands() * BITS_PER_PMI as usize
    }
}

/// Lays subband centers on the subcarrier grid: spacing is
/// `ceil(coherence_bw / subcarrier_spacing)` subcarriers starting at index 0.
/// A coherence bandwidth wider than the whole band degenerates to a single
/// subband at index 0.
pub fn plan_subbands(
    num_subcarriers: usize,
    coherence_bw_hz: f64,
    spacing_hz: f64,
) -> Result<SubbandPlan> {
    if !(coherence_bw_hz.is_finite() && coherence_bw_hz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coherence bandwidth must be positive, got {coherence_bw_hz}"
        )));
    }
    if !(spacing_hz.is_finite() && spacing_hz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "subcarrier spacing must be positive, got {spacing_hz}"
        )));
    }
    if num_subcarriers == 0 {
        return Err(Error::InvalidParameter(
            "num_subcarriers must be at least 1".into(),
        ));
    }
    let spacing = (coherence_bw_hz / spacing_hz).ceil() as usize;
    let spacing = spacing.max(1);
    let count = (num_subcarriers / spacing).max(1);
    Ok(SubbandPlan {
        center_indices: (0..count).map(|i| i * spacing).collect(),
        subband_spacing_subcarriers: spacing,
    })
}

/// The paper-style subband count that divides the nominal system bandwidth by
/// the coherence bandwidth (rather than walking the usable subcarrier grid).
pub fn bandwidth_division_count(total_bandwidth_hz: f64, coherence_bw_hz: f64) -> usize {
    if coherence_bw_hz <= 0.0 {
        return 0;
    }
    (total_bandwidth_hz / coherence_bw_hz).floor() as usize
}

/// One epoch's key: the selected PMIs and their packed bit form.
#[derive(Clone, Debug, PartialEq)]
pub struct KeyMaterial {
    pub epoch: u64,
    pub pmis: Vec<Pmi>,
    pub key_bits: BitString,
}

impl KeyMaterial {
    pub fn assemble(epoch: u64, pmis: Vec<Pmi>) -> Result<Self> {
        let key_bits = assemble_key(&pmis)?;
        Ok(Self {
            epoch,
            pmis,
            key_bits,
        })
    }
}

/// Packs PMIs as big-endian 4-bit groups in subband order.
pub fn assemble_key(pmis: &[Pmi]) -> Result<BitString> {
    if pmis.is_empty() {
        return Err(Error::EmptyKey);
    }
    let mut bits = BitString::new();
    for pmi in pmis {
        if pmi.index() >= CODEBOOK_SIZE {
            return Err(Error::InvalidParameter(format!(
                "PMI {} does not fit in {BITS_PER_PMI} bits",
                pmi.index()
            )));
        }
        bits.push_bits(pmi.index() as u64, BITS_PER_PMI);
    }
    Ok(bits)
}

/// Builds a key-check frame: a fresh random value encrypted under `key`,
/// alongside its plaintext SHA-256 digest. The nonce is the epoch number.
pub fn make_key_check<R: Rng>(key: &BitString, epoch: u64, rng: &mut R) -> Message {
    let mut value = [0u8; KEY_CHECK_VALUE_LEN];
    rng.fill_bytes(&mut value);
    let cipher_key = CipherKey::from_bits(key);
    Message::KeyCheck {
        epoch,
        ciphertext: cipher::encrypt(&cipher_key, Nonce::from_epoch(epoch), &value),
        digest: cipher::sha256(&value),
    }
}

/// True iff decrypting the check under `key` reproduces the advertised
/// digest. Returns false for non-key-check frames.
pub fn verify_key_check(msg: &Message, key: &BitString) -> bool {
    let Message::KeyCheck {
        epoch,
        ciphertext,
        digest,
    } = msg
    else {
        return false;
    };
    let cipher_key = CipherKey::from_bits(key);
    let value = cipher::decrypt(&cipher_key, Nonce::from_epoch(*epoch), ciphertext);
    cipher::sha256(&value) == *digest
}

/// Per-session protocol parameters.
#[derive(Clone, Debug)]
pub struct ExchangeConfig {
    pub mode: Mode,
    pub snr: EstimationNoise,
    pub rho: Snr,
    /// Time between Alice's and Bob's soundings within one epoch.
    pub sounding_delay_s: f64,
    pub max_rekey_rounds: u32,
    pub subband_plan: SubbandPlan,
    /// Agreed keys older than this many epochs are dropped from both key sets.
    pub key_staleness_epochs: u64,
    pub eve_strategy: EveStrategy,
}

impl ExchangeConfig {
    pub fn new(mode: Mode, snr: EstimationNoise, rho: Snr, plan: SubbandPlan) -> Self {
        Self {
            mode,
            snr,
            rho,
            sounding_delay_s: 0.0,
            max_rekey_rounds: 1,
            subband_plan: plan,
            key_staleness_epochs: 8,
            eve_strategy: EveStrategy::AliceSide,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.snr.validate()?;
        if !(self.sounding_delay_s.is_finite() && self.sounding_delay_s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sounding delay must be nonnegative, got {}",
                self.sounding_delay_s
            )));
        }
        if self.max_rekey_rounds == 0 {
            return Err(Error::InvalidParameter(
                "max_rekey_rounds must be at least 1".into(),
            ));
        }
        if self.subband_plan.num_subbands() == 0 {
            return Err(Error::InvalidParameter("subband plan is empty".into()));
        }
        if self.key_staleness_epochs == 0 {
            return Err(Error::InvalidParameter(
                "key_staleness_epochs must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// What one key-establishment run produced.
#[derive(Clone, Debug)]
pub struct ExchangeOutcome {
    pub key_alice: KeyMaterial,
    pub key_bob: KeyMaterial,
    /// Result of the SHA-256 key check on the final epoch.
    pub matched: bool,
    /// Key-check failures before success or budget exhaustion.
    pub rekey_rounds: u32,
    /// Eve's best-effort guess at the final epoch's key.
    pub eve_key: KeyMaterial,
    pub transcript: Vec<TranscriptEntry>,
}
