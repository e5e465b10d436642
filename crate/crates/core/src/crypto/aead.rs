//! AES-GCM and its authentication-only form, GMAC.

use aws_lc_rs::aead::{Aad, LessSafeKey, Nonce, UnboundKey, AES_128_GCM, AES_256_GCM};

use super::{CryptoError, SecuritySuite};

pub const GCM_NONCE_LEN: usize = 12;
pub const GCM_TAG_LEN: usize = 16;

/// A GCM key usable for both sealing and GMAC.
pub struct GcmKey {
    key: LessSafeKey,
}

impl GcmKey {
    /// Accepts GCM suites and NULL+GMAC suites; `key` must match the suite key length.
    pub fn new(suite: &SecuritySuite, key: &[u8]) -> Result<Self, CryptoError> {
        if !(suite.is_aead() || suite.is_gmac()) {
            return Err(CryptoError::WrongSuite {
                suite: suite.id.as_str(),
                expected: "an AES-GCM or AES-GMAC suite",
            });
        }
        check_key(suite, key)?;
        let alg = if suite.key_len == 256 {
            &AES_256_GCM
        } else {
            &AES_128_GCM
        };
        let unbound = UnboundKey::new(alg, key).map_err(|_| CryptoError::KeyLength {
            suite: suite.id.as_str(),
            expected: suite.key_bytes(),
            got: key.len(),
        })?;
        Ok(GcmKey {
            key: LessSafeKey::new(unbound),
        })
    }

    pub fn seal_in_place(&self, nonce: [u8; 12], aad: &[u8], in_out: &mut [u8]) -> [u8; 16] {
        let tag = self
            .key
            .seal_in_place_separate_tag(Nonce::assume_unique_for_key(nonce), Aad::from(aad), in_out)
            .expect("GCM input within limits");
        tag.as_ref().try_into().unwrap()
    }

    /// On failure `in_out` may hold garbage; callers work on a scratch copy.
    pub fn open_in_place(
        &self,
        nonce: [u8; 12],
        aad: &[u8],
        in_out: &mut [u8],
        tag: &[u8],
    ) -> Result<(), CryptoError> {
        if tag.len() != GCM_TAG_LEN {
            return Err(CryptoError::AuthenticationFailure);
        }
        self.key
            .open_in_place_separate_tag(Nonce::assume_unique_for_key(nonce), Aad::from(aad), tag, in_out)
            .map(|_| ())
            .map_err(|_| CryptoError::AuthenticationFailure)
    }

    /// GMAC tag: GCM with `data` as AAD and an empty plaintext.
    pub fn gmac(&self, nonce: [u8; 12], data: &[u8]) -> [u8; 16] {
        self.seal_in_place(nonce, data, &mut [])
    }

    pub fn gmac_verify(&self, nonce: [u8; 12], data: &[u8], tag: &[u8]) -> Result<(), CryptoError> {
        self.open_in_place(nonce, data, &mut [], tag)
    }
}

pub(crate) fn check_key(suite: &SecuritySuite, key: &[u8]) -> Result<(), CryptoError> {
    if key.len() != suite.key_bytes() {
        return Err(CryptoError::KeyLength {
            suite: suite.id.as_str(),
            expected: suite.key_bytes(),
            got: key.len(),
        });
    }
    Ok(())
}

fn require_aead(suite: &SecuritySuite) -> Result<(), CryptoError> {
    if !suite.is_aead() {
        return Err(CryptoError::WrongSuite {
            suite: suite.id.as_str(),
            expected: "an AES-GCM suite",
        });
    }
    Ok(())
}

fn require_gmac(suite: &SecuritySuite) -> Result<(), CryptoError> {
    if !suite.is_gmac() {
        return Err(CryptoError::WrongSuite {
            suite: suite.id.as_str(),
            expected: "a NULL+AES-GMAC suite",
        });
    }
    Ok(())
}

pub fn aead_seal(
    suite: &SecuritySuite,
    key: &[u8],
    nonce: &[u8; 12],
    aad: &[u8],
    plaintext: &[u8],
) -> Result<(Vec<u8>, [u8; 16]), CryptoError> {
    require_aead(suite)?;
    let k = GcmKey::new(suite, key)?;
    let mut ct = plaintext.to_vec();
    let tag = k.seal_in_place(*nonce, aad, &mut ct);
    Ok((ct, tag))
}

pub fn aead_open(
    suite: &SecuritySuite,
    key: &[u8],
    nonce: &[u8; 12],
    aad: &[u8],
    ciphertext: &[u8],
    tag: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    require_aead(suite)?;
    let k = GcmKey::new(suite, key)?;
    let mut pt = ciphertext.to_vec();
    k.open_in_place(*nonce, aad, &mut pt, tag)?;
    Ok(pt)
}

/// Returns the payload untouched and its 16-byte ICV.
pub fn gmac_protect(
    suite: &SecuritySuite,
    key: &[u8],
    nonce: &[u8; 12],
    payload: &[u8],
) -> Result<(Vec<u8>, [u8; 16]), CryptoError> {
    require_gmac(suite)?;
    let k = GcmKey::new(suite, key)?;
    Ok((payload.to_vec(), k.gmac(*nonce, payload)))
}

pub fn gmac_verify(
    suite: &SecuritySuite,
    key: &[u8],
    nonce: &[u8; 12],
    payload: &[u8],
    icv: &[u8],
) -> Result<(), CryptoError> {
    require_gmac(suite)?;
    GcmKey::new(suite, key)?.gmac_verify(*nonce, payload, icv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{suite_by_id, SuiteId};
    use aes_gcm::aead::{AeadInPlace, KeyInit};
    use proptest::prelude::*;

    fn h(s: &str) -> Vec<u8> {
        hex::decode(s).unwrap()
    }

    fn gcm128() -> SecuritySuite {
        SuiteId::AesGcm128.suite()
    }

    fn gcm256() -> SecuritySuite {
        SuiteId::AesGcm256.suite()
    }

    const TC3_KEY: &str = "feffe9928665731c6d6a8f9467308308";
    const TC3_IV: &str = "cafebabefacedbaddecaf888";
    const TC3_P: &str = concat!(
        "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a72",
        "1c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de657ba637b391aafd255"
    );
    const TC3_C: &str = concat!(
        "42831ec2217774244b7221b784d0d49ce3aa212f2c02a4e035c17e2329aca12e",
        "21d514b25466931c7d8f6a5aac84aa051ba30b396a0aac973d58e091473f5985"
    );
    const TC4_AAD: &str = "feedfacedeadbeeffeedfacedeadbeefabaddad2";

    fn nonce(s: &str) -> [u8; 12] {
        h(s).try_into().unwrap()
    }

    #[test]
    fn gcm_test_case_1_and_2() {
        let (c, t) = aead_seal(&gcm128(), &[0; 16], &[0; 12], &[], &[]).unwrap();
        assert!(c.is_empty());
        assert_eq!(hex::encode(t), "58e2fccefa7e3061367f1d57a4e7455a");
        let (c, t) = aead_seal(&gcm128(), &[0; 16], &[0; 12], &[], &[0; 16]).unwrap();
        assert_eq!(hex::encode(c), "0388dace60b6a392f328c2b971b2fe78");
        assert_eq!(hex::encode(t), "ab6e47d42cec13bdf53a67b21257bddf");
    }

    #[test]
    fn gcm_test_case_3_and_4() {
        let (c, t) = aead_seal(&gcm128(), &h(TC3_KEY), &nonce(TC3_IV), &[], &h(TC3_P)).unwrap();
        assert_eq!(hex::encode(&c), TC3_C);
        assert_eq!(hex::encode(t), "4d5c2af327cd64a62cf35abd2ba6fab4");
        let p = &h(TC3_P)[..60];
        let (c, t) = aead_seal(&gcm128(), &h(TC3_KEY), &nonce(TC3_IV), &h(TC4_AAD), p).unwrap();
        assert_eq!(hex::encode(&c), &TC3_C[..120]);
        assert_eq!(hex::encode(t), "5bc94fbc3221a5db94fae95ae7121a47");
        let back = aead_open(&gcm128(), &h(TC3_KEY), &nonce(TC3_IV), &h(TC4_AAD), &c, &t).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn gcm_256_test_cases_13_14_16() {
        let (_, t) = aead_seal(&gcm256(), &[0; 32], &[0; 12], &[], &[]).unwrap();
        assert_eq!(hex::encode(t), "530f8afbc74536b9a963b4f1c4cb738b");
        let (c, t) = aead_seal(&gcm256(), &[0; 32], &[0; 12], &[], &[0; 16]).unwrap();
        assert_eq!(hex::encode(c), "cea7403d4d606b6e074ec5d3baf39d18");
        assert_eq!(hex::encode(t), "d0d1c8a799996bf0265b98b5d48ab919");
        let key = h(&format!("{TC3_KEY}{TC3_KEY}"));
        let p = &h(TC3_P)[..60];
        let (c, t) = aead_seal(&gcm256(), &key, &nonce(TC3_IV), &h(TC4_AAD), p).unwrap();
        assert_eq!(
            hex::encode(c),
            concat!(
                "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa",
                "8cb08e48590dbb3da7b08b1056828838c5f61e6393ba7a0abcc9f662"
            )
        );
        assert_eq!(hex::encode(t), "76fc6ece0f4e1768cddf8853bb2d551b");
    }

    #[test]
    fn flipped_bit_is_authentication_failure() {
        let (mut c, t) = aead_seal(&gcm128(), &[3; 16], &[1; 12], b"hdr", b"payload").unwrap();
        c[2] ^= 0x10;
        assert_eq!(
            aead_open(&gcm128(), &[3; 16], &[1; 12], b"hdr", &c, &t),
            Err(CryptoError::AuthenticationFailure)
        );
    }

    #[test]
    fn key_length_and_suite_checks() {
        assert!(matches!(
            aead_seal(&gcm256(), &[0; 16], &[0; 12], &[], &[]),
            Err(CryptoError::KeyLength { expected: 32, got: 16, .. })
        ));
        let cbc = suite_by_id("AES-CBC-128-HMAC-SHA256-128").unwrap();
        assert!(matches!(
            aead_seal(&cbc, &[0; 16], &[0; 12], &[], &[]),
            Err(CryptoError::WrongSuite { .. })
        ));
        assert!(gmac_protect(&gcm128(), &[0; 16], &[0; 12], b"x").is_err());
    }

    #[test]
    fn gmac_accepts_and_rejects() {
        let s = SuiteId::NullGmac128.suite();
        let (p, icv) = gmac_protect(&s, &[5; 16], &[2; 12], b"cleartext").unwrap();
        assert_eq!(p, b"cleartext");
        gmac_verify(&s, &[5; 16], &[2; 12], b"cleartext", &icv).unwrap();
        assert_eq!(
            gmac_verify(&s, &[5; 16], &[2; 12], b"cleartexu", &icv),
            Err(CryptoError::AuthenticationFailure)
        );
    }

    proptest! {
        #[test]
        fn roundtrip(key: [u8; 16], n: [u8; 12], aad in proptest::collection::vec(any::<u8>(), 0..40), m in proptest::collection::vec(any::<u8>(), 0..300)) {
            let (c, t) = aead_seal(&gcm128(), &key, &n, &aad, &m).unwrap();
            prop_assert_eq!(c.len(), m.len());
            prop_assert_eq!(aead_open(&gcm128(), &key, &n, &aad, &c, &t).unwrap(), m);
        }

        #[test]
        fn gmac_is_gcm_with_payload_as_aad(key: [u8; 32], n: [u8; 12], m in proptest::collection::vec(any::<u8>(), 0..300)) {
            let g256 = SuiteId::NullGmac256.suite();
            let (_, icv) = gmac_protect(&g256, &key, &n, &m).unwrap();
            let (c, t) = aead_seal(&gcm256(), &key, &n, &m, &[]).unwrap();
            prop_assert!(c.is_empty());
            prop_assert_eq!(icv, t);
            // independent implementation
            let other = aes_gcm::Aes256Gcm::new_from_slice(&key).unwrap();
            let mut empty: Vec<u8> = vec![];
            let t2 = other.encrypt_in_place_detached((&n).into(), &m, &mut empty).unwrap();
            prop_assert_eq!(&icv[..], &t2[..]);
        }

        #[test]
        fn gmac128_matches_independent_gcm(key: [u8; 16], n: [u8; 12], m in proptest::collection::vec(any::<u8>(), 0..300)) {
            let (_, icv) = gmac_protect(&SuiteId::NullGmac128.suite(), &key, &n, &m).unwrap();
            let other = aes_gcm::Aes128Gcm::new_from_slice(&key).unwrap();
            let mut empty: Vec<u8> = vec![];
            let t2 = other.encrypt_in_place_detached((&n).into(), &m, &mut empty).unwrap();
            prop_assert_eq!(&icv[..], &t2[..]);
        }
    }
}
