//! Over-the-air protocol frames and the line-oriented transcript log.

use crate::{Error, Result};

/// Which party transmitted a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sender {
    Alice,
    Bob,
}

impl Sender {
    pub fn as_str(self) -> &'static str {
        match self {
            Sender::Alice => "alice",
            Sender::Bob => "bob",
        }
    }
}

/// Everything that crosses the air during an exchange.
///
/// `RotatedSounding` announces only the fact of rotation — the unitary stays
/// private to Bob. `KeyCheck` carries the encrypted random value and its
/// plaintext digest for mismatch detection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    ReferenceSignal { epoch: u64 },
    SoundingSignal { epoch: u64 },
    FlagStatic { epoch: u64 },
    FlagDynamic { epoch: u64 },
    RotatedSounding { epoch: u64 },
    KeyCheck {
        epoch: u64,
        ciphertext: Vec<u8>,
        digest: [u8; 32],
    },
    Data {
        /// 8-byte big-endian epoch number, doubling as the cipher nonce.
        nonce: [u8; 8],
        ciphertext: Vec<u8>,
    },
}

impl Message {
    pub fn epoch(&self) -> u64 {
        match self {
            Message::ReferenceSignal { epoch }
            | Message::SoundingSignal { epoch }
            | Message::FlagStatic { epoch }
            | Message::FlagDynamic { epoch }
            | Message::RotatedSounding { epoch }
            | Message::KeyCheck { epoch, .. } => *epoch,
            Message::Data { nonce, .. } => u64::from_be_bytes(*nonce),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Message::ReferenceSignal { .. } => "reference",
            Message::SoundingSignal { .. } => "sounding",
            Message::FlagStatic { .. } => "flag_static",
            Message::FlagDynamic { .. } => "flag_dynamic",
            Message::RotatedSounding { .. } => "rotated_sounding",
            Message::KeyCheck { .. } => "key_check",
            Message::Data { .. } => "data",
        }
    }

    fn payload_hex(&self) -> String {
        match self {
            Message::KeyCheck {
                ciphertext, digest, ..
            } => {
                // Digest is fixed at 32 bytes, so the concatenation parses back.
                let mut bytes = ciphertext.clone();
                bytes.extend_from_slice(digest);
                hex::encode(bytes)
            }
            Message::Data { nonce, ciphertext } => {
                let mut bytes = nonce.to_vec();
                bytes.extend_from_slice(ciphertext);
                hex::encode(bytes)
            }
            _ => String::new(),
        }
    }
}

/// One transcript record: who sent what.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub sender: Sender,
    pub message: Message,
}

/// `epoch,sender,tag,hex_payload`
pub fn to_log_line(entry: &TranscriptEntry) -> String {
    format!(
        "{},{},{},{}",
        entry.message.epoch(),
        entry.sender.as_str(),
        entry.message.tag(),
        entry.message.payload_hex()
    )
}

pub fn parse_log_line(line: &str) -> Result<TranscriptEntry> {
    let mut parts = line.splitn(4, ',');
    let mut next = |what: &str| {
        parts
            .next()
            .ok_or_else(|| Error::MalformedTranscript(format!("missing {what}: {line}")))
    };
    let epoch: u64 = next("epoch")?
        .parse()
        .map_err(|e| Error::MalformedTranscript(format!("bad epoch ({e}): {line}")))?;
    let sender = match next("sender")? {
        "alice" => Sender::Alice,
        "bob" => Sender::Bob,
        other => {
            return Err(Error::MalformedTranscript(format!("unknown sender {other}")));
        }
    };
    let tag = next("tag")?;
    let payload = hex::decode(next("payload")?)
        .map_err(|e| Error::MalformedTranscript(format!("bad payload hex ({e}): {line}")))?;

    let message = match tag {
        "reference" => Message::ReferenceSignal { epoch },
        "sounding" => Message::SoundingSignal { epoch },
        "flag_static" => Message::FlagStatic { epoch },
        "flag_dynamic" => Message::FlagDynamic { epoch },
        "rotated_sounding" => Message::RotatedSounding { epoch },
        "key_check" => {
            if payload.len() < 32 {
                return Err(Error::MalformedTranscript(
                    "key_check payload shorter than a digest".into(),
                ));
            }
            let split = payload.len() - 32;
            let mut digest = [0u8; 32];
            digest.copy_from_slice(&payload[split..]);
            Message::KeyCheck {
                epoch,
                ciphertext: payload[..split].to_vec(),
                digest,
            }
        }
        "data" => {
            if payload.len() < 8 {
                return Err(Error::MalformedTranscript(
                    "data payload shorter than a nonce".into(),
                ));
            }
            let mut nonce = [0u8; 8];
            nonce.copy_from_slice(&payload[..8]);
            if u64::from_be_bytes(nonce) != epoch {
                return Err(Error::MalformedTranscript(
                    "data nonce disagrees with epoch column".into(),
                ));
            }
            Message::Data {
                nonce,
                ciphertext: payload[8..].to_vec(),
            }
        }
        other => {
            return Err(Error::MalformedTranscript(format!("unknown tag {other}")));
        }
    };
    Ok(TranscriptEntry { sender, message })
}

/// Serializes a transcript, one frame per line.
pub fn format_transcript(entries: &[TranscriptEntry]) -> String {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&to_log_line(entry));
        out.push('\n');
    }
    out
}
