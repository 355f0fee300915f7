use std::fmt;

use sha2::{Digest, Sha256};

/// Content hash of a coefficient sequence, used to tie cached tables to
/// the spectrum they were computed from.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint([u8; 16]);

impl Fingerprint {
    pub fn of_weights(weights: &[f64]) -> Self {
        let mut h = Sha256::new();
        h.update((weights.len() as u64).to_le_bytes());
        for w in weights {
            h.update(w.to_bits().to_le_bytes());
        }
        Self::from_digest(&h.finalize())
    }

    /// Fingerprint of something computed from `self`, e.g. a subset table.
    pub fn derive(&self, tag: &str) -> Self {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update(tag.as_bytes());
        Self::from_digest(&h.finalize())
    }

    fn from_digest(d: &[u8]) -> Self {
        let mut out = [0u8; 16];
        out.copy_from_slice(&d[..16]);
        Fingerprint(out)
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.len() != 32 {
            return None;
        }
        let mut out = [0u8; 16];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
        }
        Some(Fingerprint(out))
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({self})")
    }
}
