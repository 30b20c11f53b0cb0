use sha2::{Digest, Sha256};

/// Incremental SHA-256 over typed fields, length-prefixing strings so that
/// adjacent fields cannot alias.
pub(crate) struct Fingerprint(Sha256);

impl Fingerprint {
    pub fn new(domain: &str) -> Self {
        let mut fp = Fingerprint(Sha256::new());
        fp.str(domain);
        fp
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.u64(s.len() as u64);
        self.0.update(s.as_bytes());
        self
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.u64(b.len() as u64);
        self.0.update(b);
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.0.update(v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.0.update(v.to_bits().to_le_bytes());
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
