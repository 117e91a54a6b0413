//! Keystream cipher and digest primitives.
//!
//! Payloads are protected with a counter-mode keystream built from SHA-256:
//! block `i` of the stream is `SHA-256(key_bytes || nonce || i)` with the
//! nonce and counter as 8-byte big-endian integers. Encryption XORs the
//! stream with the plaintext, so encryption and decryption are the same
//! operation. The construction is deliberately simple — it reuses the digest
//! the key-check step already needs — and sits behind plain functions so a
//! different keystream generator can replace it without touching callers.

use sha2::{Digest, Sha256};

use crate::bits::BitString;

/// A symmetric key derived from assembled PMI bits.
///
/// Keeps both the exact bit string and its zero-padded big-endian byte
/// packing; the byte form feeds the keystream.
#[derive(Clone, PartialEq, Eq)]
pub struct CipherKey {
    bits: BitString,
}

impl CipherKey {
    pub fn from_bits(bits: &BitString) -> Self {
        Self { bits: bits.clone() }
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn bytes(&self) -> &[u8] {
        self.bits.as_bytes()
    }
}

/// Keystream nonce; the protocol uses the epoch number so that no stream is
/// ever reused under one key within a session.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Nonce(u64);

impl Nonce {
    pub fn from_epoch(epoch: u64) -> Self {
        Self(epoch)
    }

    pub fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }
}

/// SHA-256 of `data`.
pub fn sha256(data: &[u8]) -> [u8; 32] {
    let digest = Sha256::digest(data);
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    out
}

/// The first `n` bytes of the keystream for `(key, nonce)`.
pub fn keystream(key: &CipherKey, nonce: Nonce, n: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(n);
    let mut counter: u64 = 0;
    while out.len() < n {
        let mut hasher = Sha256::new();
        hasher.update(key.bytes());
        hasher.update(nonce.to_be_bytes());
        hasher.update(counter.to_be_bytes());
        let block = hasher.finalize();
        let take = (n - out.len()).min(block.len());
        out.extend_from_slice(&block[..take]);
        counter += 1;
    }
    out
}

/// XORs `plaintext` with the keystream; length-preserving.
pub fn encrypt(key: &CipherKey, nonce: Nonce, plaintext: &[u8]) -> Vec<u8> {
    let stream = keystream(key, nonce, plaintext.len());
    plaintext
        .iter()
        .zip(stream.iter())
        .map(|(p, k)| p ^ k)
        .collect()
}

/// XOR is an involution, so decryption is encryption.
pub fn decrypt(key: &CipherKey, nonce: Nonce, ciphertext: &[u8]) -> Vec<u8> {
    encrypt(key, nonce, ciphertext)
}
