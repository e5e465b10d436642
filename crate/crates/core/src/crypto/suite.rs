use std::fmt;
use std::str::FromStr;

use super::CryptoError;

/// Every protection configuration the emulator knows. The string forms
/// returned by [`SuiteId::as_str`] are the names used in scenario files and
/// on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SuiteId {
    AesCbc128HmacSha256,
    AesCbc256HmacSha256,
    AesGcm128,
    AesGcm256,
    NullGmac128,
    NullGmac256,
    DtlsAesGcm128,
    Nia2Nea2,
}

impl SuiteId {
    pub const ALL: [SuiteId; 8] = [
        SuiteId::AesCbc128HmacSha256,
        SuiteId::AesCbc256HmacSha256,
        SuiteId::AesGcm128,
        SuiteId::AesGcm256,
        SuiteId::NullGmac128,
        SuiteId::NullGmac256,
        SuiteId::DtlsAesGcm128,
        SuiteId::Nia2Nea2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteId::AesCbc128HmacSha256 => "AES-CBC-128-HMAC-SHA256-128",
            SuiteId::AesCbc256HmacSha256 => "AES-CBC-256-HMAC-SHA256-128",
            SuiteId::AesGcm128 => "AES-GCM-128",
            SuiteId::AesGcm256 => "AES-GCM-256",
            SuiteId::NullGmac128 => "NULL-AES-GMAC-128",
            SuiteId::NullGmac256 => "NULL-AES-GMAC-256",
            SuiteId::DtlsAesGcm128 => "DTLS1.2-AES-GCM-128",
            SuiteId::Nia2Nea2 => "NIA2-NEA2",
        }
    }

    pub fn suite(self) -> SecuritySuite {
        SecuritySuite::of(self)
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteId {
    type Err = CryptoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SuiteId::ALL
            .into_iter()
            .find(|id| id.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| CryptoError::UnknownSuite {
                name: s.to_string(),
                known: SuiteId::ALL.iter().map(|id| id.as_str()).collect(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cipher {
    AesCtr128,
    AesCbc128,
    AesCbc256,
    AesGcm128,
    AesGcm256,
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrity {
    AesCmac32,
    HmacSha256_128,
    GcmBuiltin,
    AesGmac128,
    AesGmac256,
    None,
}

/// Which protocol layer a suite belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteFamily {
    Esp,
    Dtls,
    Uu,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecuritySuite {
    pub id: SuiteId,
    pub cipher: Cipher,
    pub integrity: Integrity,
    /// Cipher key length in bits.
    pub key_len: usize,
    /// Bytes of IV carried on the wire.
    pub iv_len: usize,
    pub tag_len: usize,
    pub family: SuiteFamily,
}

impl SecuritySuite {
    pub fn of(id: SuiteId) -> Self {
        use Cipher as C;
        use Integrity as I;
        use SuiteFamily as F;
        let (cipher, integrity, key_len, iv_len, tag_len, family) = match id {
            SuiteId::AesCbc128HmacSha256 => (C::AesCbc128, I::HmacSha256_128, 128, 16, 16, F::Esp),
            SuiteId::AesCbc256HmacSha256 => (C::AesCbc256, I::HmacSha256_128, 256, 16, 16, F::Esp),
            SuiteId::AesGcm128 => (C::AesGcm128, I::GcmBuiltin, 128, 8, 16, F::Esp),
            SuiteId::AesGcm256 => (C::AesGcm256, I::GcmBuiltin, 256, 8, 16, F::Esp),
            SuiteId::NullGmac128 => (C::Null, I::AesGmac128, 128, 8, 16, F::Esp),
            SuiteId::NullGmac256 => (C::Null, I::AesGmac256, 256, 8, 16, F::Esp),
            // nonce is implicit (salt || epoch || sequence), nothing on the wire
            SuiteId::DtlsAesGcm128 => (C::AesGcm128, I::GcmBuiltin, 128, 0, 16, F::Dtls),
            SuiteId::Nia2Nea2 => (C::AesCtr128, I::AesCmac32, 128, 0, 4, F::Uu),
        };
        SecuritySuite {
            id,
            cipher,
            integrity,
            key_len,
            iv_len,
            tag_len,
            family,
        }
    }

    pub fn key_bytes(&self) -> usize {
        self.key_len / 8
    }

    pub fn is_aead(&self) -> bool {
        matches!(self.cipher, Cipher::AesGcm128 | Cipher::AesGcm256)
    }

    pub fn is_gmac(&self) -> bool {
        matches!(self.integrity, Integrity::AesGmac128 | Integrity::AesGmac256)
    }

    pub fn is_cbc(&self) -> bool {
        matches!(self.cipher, Cipher::AesCbc128 | Cipher::AesCbc256)
    }

    /// ESP payload alignment (RFC 4303 section 2.4).
    pub fn block_align(&self) -> usize {
        if self.is_cbc() {
            16
        } else {
            4
        }
    }
}

impl fmt::Display for SecuritySuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id.as_str())
    }
}

/// The six ESP configurations, the DTLS AEAD and the Uu NIA2/NEA2 pair.
pub fn suite_catalog() -> Vec<SecuritySuite> {
    SuiteId::ALL.iter().map(|&id| SecuritySuite::of(id)).collect()
}

pub fn esp_suites() -> Vec<SecuritySuite> {
    suite_catalog()
        .into_iter()
        .filter(|s| s.family == SuiteFamily::Esp)
        .collect()
}

pub fn suite_by_id(name: &str) -> Result<SecuritySuite, CryptoError> {
    name.parse::<SuiteId>().map(SecuritySuite::of)
}
