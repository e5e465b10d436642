use aws_lc_rs::cipher::{EncryptingKey, EncryptionContext, UnboundCipherKey, AES_128};
use aws_lc_rs::iv::FixedLength;

use super::CryptoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Uplink = 0,
    Downlink = 1,
}

impl Direction {
    pub fn bit(self) -> u8 {
        self as u8
    }
}

/// Inputs shared by NEA2 and NIA2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UuSecurityInputs {
    pub count: u32,
    /// 5-bit radio bearer identity.
    pub bearer: u8,
    pub direction: Direction,
    pub key: [u8; 16],
}

impl UuSecurityInputs {
    pub(crate) fn check(&self) -> Result<(), CryptoError> {
        if self.bearer >= 32 {
            return Err(CryptoError::InvalidInput(format!(
                "bearer {} does not fit in 5 bits",
                self.bearer
            )));
        }
        Ok(())
    }
}

/// COUNT || BEARER || DIRECTION || 0^26, shared by both algorithms.
pub(crate) fn uu_header(count: u32, bearer: u8, direction: Direction) -> [u8; 8] {
    let mut h = [0u8; 8];
    h[..4].copy_from_slice(&count.to_be_bytes());
    h[4] = (bearer << 3) | (direction.bit() << 2);
    h
}

/// 128-NEA2 keyed once, reused for every PDU of a bearer.
pub struct Nea2 {
    key: EncryptingKey,
}

impl Nea2 {
    pub fn new(key: &[u8; 16]) -> Self {
        let unbound = UnboundCipherKey::new(&AES_128, key).expect("16-byte AES key");
        Nea2 {
            key: EncryptingKey::ctr(unbound).expect("AES-128 supports CTR"),
        }
    }

    pub fn apply(&self, count: u32, bearer: u8, direction: Direction, data: &mut [u8]) {
        self.apply_from_block(count, bearer, direction, 0, data);
    }

    /// Keystream starting `block` AES blocks into the stream; lets a message be
    /// split across workers on 16-byte boundaries.
    pub fn apply_from_block(
        &self,
        count: u32,
        bearer: u8,
        direction: Direction,
        block: u64,
        data: &mut [u8],
    ) {
        if data.is_empty() {
            return;
        }
        let mut iv = [0u8; 16];
        iv[..8].copy_from_slice(&uu_header(count, bearer, direction));
        iv[8..].copy_from_slice(&block.to_be_bytes());
        self.key
            .less_safe_encrypt(data, EncryptionContext::Iv128(FixedLength::from(iv)))
            .expect("CTR accepts any length");
    }
}

pub fn nea2_crypt(inputs: &UuSecurityInputs, data: &[u8]) -> Result<Vec<u8>, CryptoError> {
    inputs.check()?;
    let mut out = data.to_vec();
    Nea2::new(&inputs.key).apply(inputs.count, inputs.bearer, inputs.direction, &mut out);
    Ok(out)
}

/// NEA2 over a message of `bit_len` bits; bits beyond the length are zeroed.
pub fn nea2_crypt_bits(
    inputs: &UuSecurityInputs,
    data: &[u8],
    bit_len: usize,
) -> Result<Vec<u8>, CryptoError> {
    let bytes = bit_len.div_ceil(8);
    if data.len() < bytes {
        return Err(CryptoError::InvalidInput(format!(
            "{bit_len} bits requested from a {}-byte buffer",
            data.len()
        )));
    }
    let mut out = nea2_crypt(inputs, &data[..bytes])?;
    let rem = bit_len % 8;
    if rem != 0 {
        *out.last_mut().unwrap() &= 0xffu8 << (8 - rem);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(key: &str, count: u32, bearer: u8, dir: u8) -> UuSecurityInputs {
        UuSecurityInputs {
            count,
            bearer,
            direction: if dir == 0 { Direction::Uplink } else { Direction::Downlink },
            key: hex::decode(key).unwrap().try_into().unwrap(),
        }
    }

    // 128-EEA2 conformance sets, recomputed with an independent AES-CTR before freezing.
    #[test]
    fn eea2_set1() {
        let i = inputs("d3c5d592327fb11c4035c6680af8c6d1", 0x398a59b4, 0x15, 1);
        let pt = hex::decode("981ba6824c1bfb1ab485472029b71d808ce33e2cc3c0b5fc1f3de8a6dc66b1f0").unwrap();
        let ct = nea2_crypt_bits(&i, &pt, 253).unwrap();
        assert_eq!(
            hex::encode(ct),
            "e9fed8a63d155304d71df20bf3e82214b20ed7dad2f233dc3c22d7bdeeed8e78"
        );
    }

    #[test]
    fn eea2_set2() {
        let i = inputs("2bd6459f82c440e0952c49104805ff48", 0xc675a64b, 0x0c, 1);
        let pt = hex::decode(concat!(
            "7ec61272743bf1614726446a6c38ced166f6ca76eb5430044286346cef130f92",
            "922b03450d3a9975e5bd2ea0eb55ad8e1b199e3ec4316020e9a1b285e7627953",
            "59b7bdfd39bef4b2484583d5afe082aee638bf5fd5a606193901a08f4ab41aab",
            "9b134880"
        ))
        .unwrap();
        let ct = nea2_crypt_bits(&i, &pt, 798).unwrap();
        assert_eq!(
            hex::encode(ct),
            concat!(
                "5961605353c64bdca15b195e288553a910632506d6200aa790c4c806c99904cf",
                "2445cc50bb1cf168a49673734e081b57e324ce5259c0e78d4cd97b870976503c",
                "0943f2cb5ae8f052c7b7d392239587b8956086bcab18836042e2e6ce42432a17",
                "105c53d0"
            )
        );
    }

    #[test]
    fn eea2_set4() {
        let i = inputs("aa1f95aea533bcb32eb63bf52d8f831a", 0x72d8c671, 0x10, 1);
        let pt = hex::decode(concat!(
            "fb1b96c5c8badfb2e8e8edfde78e57f2ad81e74103fc430a534dcc37afcec70e",
            "1517bb06f27219dae49022ddc47a068de4c9496a951a6b09edbdc864c7adbd74",
            "0ac50c022f3082bafd22d78197c5d508b977bca13f32e652e74ba728576077ce",
            "628c535e87dc6077ba07d29068590c8cb5f1088e082cfa0ec961302d69cf3d44"
        ))
        .unwrap();
        let ct = nea2_crypt_bits(&i, &pt, 1022).unwrap();
        assert_eq!(
            hex::encode(ct),
            concat!(
                "dfb440acb3773549efc04628aeb8d8156275230bdc690d94b00d8d95f28c4b56",
                "307f60f4ca55eba661ebba72ac808fa8c49e26788ed04a5d606cb418de74878b",
                "9a22f8ef29590bc4eb57c9faf7c41524a885b8979c423f2f8f8e0592a9879201",
                "be7ff9777a162ab810feb324ba74c4c156e04d39097209653ac33e5a5f2d8864"
            )
        );
    }

    #[test]
    fn matches_library_ctr() {
        use ctr::cipher::{KeyIvInit, StreamCipher};
        let key = [0x11u8; 16];
        let mut iv = [0u8; 16];
        iv[..8].copy_from_slice(&uu_header(0xabcdef01, 17, Direction::Downlink));
        let mut expect = vec![0x33u8; 1000];
        ctr::Ctr128BE::<aes::Aes128>::new(&key.into(), &iv.into()).apply_keystream(&mut expect);
        let i = UuSecurityInputs {
            count: 0xabcdef01,
            bearer: 17,
            direction: Direction::Downlink,
            key,
        };
        assert_eq!(nea2_crypt(&i, &[0x33; 1000]).unwrap(), expect);
    }

    #[test]
    fn eea2_set3() {
        let i = inputs("0a8b6bd8d9b08b08d64e32d1817777fb", 0x544d49cd, 0x04, 0);
        let pt = hex::decode("fd40a41d370a1f65745095687d47ba1d36d2349e23f644392c8ea9c49d40c13271aff264d0f248").unwrap();
        let ct = nea2_crypt_bits(&i, &pt, 310).unwrap();
        assert_eq!(
            hex::encode(ct),
            "75750d37b4bba2a4dedb34235bd68c6645acdaaca48138a3b0c471e2a7041a576423d2927287f0"
        );
    }

    #[test]
    fn empty_message() {
        let i = inputs("00000000000000000000000000000000", 0, 0, 0);
        assert!(nea2_crypt(&i, &[]).unwrap().is_empty());
    }

    #[test]
    fn bearer_out_of_range() {
        let i = inputs("00000000000000000000000000000000", 0, 32, 0);
        assert!(nea2_crypt(&i, b"x").is_err());
    }

    #[test]
    fn block_offset_matches_contiguous_stream() {
        let nea = Nea2::new(&[7; 16]);
        let mut whole = vec![0u8; 160];
        nea.apply(9, 3, Direction::Uplink, &mut whole);
        let mut tail = vec![0u8; 64];
        nea.apply_from_block(9, 3, Direction::Uplink, 6, &mut tail);
        assert_eq!(&whole[96..], &tail[..]);
    }

    proptest! {
        #[test]
        fn involution(count: u32, bearer in 0u8..32, dl: bool, key: [u8; 16], m in proptest::collection::vec(any::<u8>(), 0..300)) {
            let i = UuSecurityInputs {
                count, bearer, key,
                direction: if dl { Direction::Downlink } else { Direction::Uplink },
            };
            let c = nea2_crypt(&i, &m).unwrap();
            prop_assert_eq!(c.len(), m.len());
            prop_assert_eq!(nea2_crypt(&i, &c).unwrap(), m);
        }
    }
}
