//! DICOM UID generation under a configurable root.

use std::fmt;
use std::sync::Mutex;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

/// Root for UUID-derived UIDs.
pub const UUID_ROOT: &str = "2.25";
pub const MAX_UID_LEN: usize = 64;
/// Digits in u128::MAX.
const FULL_SUFFIX_DIGITS: usize = 39;
/// Shortest suffix a root may leave room for (about 66 bits).
pub const MIN_SUFFIX_DIGITS: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UidError {
    #[error("UID root {0:?} is not a valid dotted-decimal prefix")]
    InvalidRoot(String),
    #[error("UID root {root:?} leaves no room for a {digits}-digit suffix within 64 characters")]
    UidTooLong { root: String, digits: usize },
}

/// Source of 128-bit values for UID suffixes.
pub trait EntropySource: Send + Sync {
    fn next_u128(&self) -> u128;
}

/// Operating-system randomness.
#[derive(Debug, Default)]
pub struct OsEntropy;

impl EntropySource for OsEntropy {
    fn next_u128(&self) -> u128 {
        let mut b = [0u8; 16];
        rand::rngs::OsRng.fill_bytes(&mut b);
        u128::from_le_bytes(b)
    }
}

/// Deterministic stream for reproducible output in tests.
#[derive(Debug)]
pub struct SeededEntropy(Mutex<ChaCha20Rng>);

impl SeededEntropy {
    pub fn new(seed: u64) -> SeededEntropy {
        SeededEntropy(Mutex::new(ChaCha20Rng::seed_from_u64(seed)))
    }
}

impl EntropySource for SeededEntropy {
    fn next_u128(&self) -> u128 {
        let mut b = [0u8; 16];
        self.0.lock().unwrap_or_else(|e| e.into_inner()).fill_bytes(&mut b);
        u128::from_le_bytes(b)
    }
}

pub struct UidContext {
    root: String,
    source: Box<dyn EntropySource>,
}

impl fmt::Debug for UidContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UidContext").field("root", &self.root).finish_non_exhaustive()
    }
}

impl Default for UidContext {
    fn default() -> UidContext {
        UidContext { root: UUID_ROOT.to_owned(), source: Box::new(OsEntropy) }
    }
}

impl UidContext {
    pub fn new(root: &str, source: Box<dyn EntropySource>) -> Result<UidContext, UidError> {
        if !is_valid_uid(root) {
            return Err(UidError::InvalidRoot(root.to_owned()));
        }
        if suffix_room(root) < MIN_SUFFIX_DIGITS {
            return Err(UidError::UidTooLong { root: root.to_owned(), digits: MIN_SUFFIX_DIGITS });
        }
        Ok(UidContext { root: root.to_owned(), source })
    }

    pub fn seeded(root: &str, seed: u64) -> Result<UidContext, UidError> {
        UidContext::new(root, Box::new(SeededEntropy::new(seed)))
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    /// Draws a fresh UID.
    pub fn generate(&self) -> Result<String, UidError> {
        self.uid_for(self.source.next_u128())
    }

    /// The UID whose suffix is the decimal rendering of `value`. Roots
    /// longer than 24 characters cannot hold every 128-bit value, so the
    /// value is reduced modulo 10^room first.
    pub fn uid_for(&self, value: u128) -> Result<String, UidError> {
        let room = suffix_room(&self.root);
        if room < MIN_SUFFIX_DIGITS {
            return Err(UidError::UidTooLong { root: self.root.clone(), digits: MIN_SUFFIX_DIGITS });
        }
        let value = if room >= FULL_SUFFIX_DIGITS { value } else { value % 10u128.pow(room as u32) };
        Ok(format!("{}.{}", self.root, value))
    }
}

fn suffix_room(root: &str) -> usize {
    MAX_UID_LEN.saturating_sub(root.len() + 1)
}

/// Dotted-decimal UID grammar: non-empty numeric components without leading
/// zeros (a lone "0" is allowed), at most 64 characters.
pub fn is_valid_uid(uid: &str) -> bool {
    uid.len() <= MAX_UID_LEN
        && !uid.is_empty()
        && uid.split('.').all(|c| {
            !c.is_empty() && c.bytes().all(|b| b.is_ascii_digit()) && (c == "0" || !c.starts_with('0'))
        })
}
