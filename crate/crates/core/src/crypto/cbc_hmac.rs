//! AES-CBC with HMAC-SHA-256-128, encrypt-then-MAC as ESP does it.

use aws_lc_rs::cipher::{
    DecryptingKey, DecryptionContext, EncryptingKey, EncryptionContext, UnboundCipherKey, AES_128,
    AES_256,
};
use aws_lc_rs::constant_time::verify_slices_are_equal;
use aws_lc_rs::hmac;
use aws_lc_rs::iv::FixedLength;

use super::aead::check_key;
use super::{CryptoError, SecuritySuite};

pub const HMAC_KEY_LEN: usize = 32;
pub const ICV_LEN: usize = 16;
pub const CBC_BLOCK: usize = 16;

pub struct CbcHmacKey {
    enc: EncryptingKey,
    dec: DecryptingKey,
    mac: hmac::Key,
}

impl CbcHmacKey {
    pub fn new(suite: &SecuritySuite, enc_key: &[u8], auth_key: &[u8]) -> Result<Self, CryptoError> {
        if !suite.is_cbc() {
            return Err(CryptoError::WrongSuite {
                suite: suite.id.as_str(),
                expected: "an AES-CBC+HMAC suite",
            });
        }
        check_key(suite, enc_key)?;
        if auth_key.len() != HMAC_KEY_LEN {
            return Err(CryptoError::KeyLength {
                suite: suite.id.as_str(),
                expected: HMAC_KEY_LEN,
                got: auth_key.len(),
            });
        }
        let alg = if suite.key_len == 256 { &AES_256 } else { &AES_128 };
        let unbound = || UnboundCipherKey::new(alg, enc_key).expect("length checked");
        Ok(CbcHmacKey {
            enc: EncryptingKey::cbc(unbound()).expect("AES supports CBC"),
            dec: DecryptingKey::cbc(unbound()).expect("AES supports CBC"),
            mac: hmac::Key::new(hmac::HMAC_SHA256, auth_key),
        })
    }

    /// `data` must already be padded to the block size.
    pub fn encrypt_in_place(&self, iv: [u8; 16], data: &mut [u8]) -> Result<(), CryptoError> {
        if data.len() % CBC_BLOCK != 0 {
            return Err(CryptoError::Padding);
        }
        self.enc
            .less_safe_encrypt(data, EncryptionContext::Iv128(FixedLength::from(iv)))
            .map(|_| ())
            .map_err(|_| CryptoError::Padding)
    }

    pub fn decrypt_in_place(&self, iv: [u8; 16], data: &mut [u8]) -> Result<(), CryptoError> {
        if data.len() % CBC_BLOCK != 0 {
            return Err(CryptoError::Padding);
        }
        self.dec
            .decrypt(data, DecryptionContext::Iv128(FixedLength::from(iv)))
            .map(|_| ())
            .map_err(|_| CryptoError::Padding)
    }

    /// HMAC-SHA-256 over the concatenated parts, truncated to 128 bits.
    pub fn icv(&self, parts: &[&[u8]]) -> [u8; 16] {
        let mut ctx = hmac::Context::with_key(&self.mac);
        for p in parts {
            ctx.update(p);
        }
        ctx.sign().as_ref()[..ICV_LEN].try_into().unwrap()
    }

    pub fn verify(&self, parts: &[&[u8]], icv: &[u8]) -> Result<(), CryptoError> {
        if icv.len() != ICV_LEN {
            return Err(CryptoError::AuthenticationFailure);
        }
        verify_slices_are_equal(&self.icv(parts), icv).map_err(|_| CryptoError::AuthenticationFailure)
    }
}

/// Encrypts the padded plaintext, then computes the ICV over
/// `header || iv || ciphertext` (header is ESP's SPI || sequence).
pub fn cbc_hmac_protect(
    suite: &SecuritySuite,
    enc_key: &[u8],
    auth_key: &[u8],
    header: &[u8],
    iv: &[u8; 16],
    plaintext: &[u8],
) -> Result<(Vec<u8>, [u8; 16]), CryptoError> {
    let k = CbcHmacKey::new(suite, enc_key, auth_key)?;
    let mut ct = plaintext.to_vec();
    k.encrypt_in_place(*iv, &mut ct)?;
    let icv = k.icv(&[header, iv, &ct]);
    Ok((ct, icv))
}

/// Verifies the ICV first; only authenticated ciphertext is decrypted.
pub fn cbc_hmac_unprotect(
    suite: &SecuritySuite,
    enc_key: &[u8],
    auth_key: &[u8],
    header: &[u8],
    iv: &[u8; 16],
    ciphertext: &[u8],
    icv: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    let k = CbcHmacKey::new(suite, enc_key, auth_key)?;
    k.verify(&[header, iv, ciphertext], icv)?;
    let mut pt = ciphertext.to_vec();
    k.decrypt_in_place(*iv, &mut pt)?;
    Ok(pt)
}
