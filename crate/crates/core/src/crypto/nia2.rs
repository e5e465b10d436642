//! AES-CMAC (bit-granular) and the 128-NIA2 integrity algorithm built on it.

use aes::cipher::{generic_array::GenericArray, BlockEncrypt, KeyInit};
use aes::Aes128;

use super::nea2::{uu_header, Direction, UuSecurityInputs};
use super::CryptoError;

type Block = [u8; 16];

fn dbl(b: &Block) -> Block {
    let mut out = [0u8; 16];
    let mut carry = 0u8;
    for i in (0..16).rev() {
        out[i] = (b[i] << 1) | carry;
        carry = b[i] >> 7;
    }
    if carry == 1 {
        out[15] ^= 0x87;
    }
    out
}

fn xor_into(dst: &mut Block, src: &[u8]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// AES-128 CMAC with precomputed subkeys.
#[derive(Clone)]
pub struct Cmac128 {
    cipher: Aes128,
    k1: Block,
    k2: Block,
}

impl Cmac128 {
    pub fn new(key: &[u8; 16]) -> Self {
        let cipher = Aes128::new(GenericArray::from_slice(key));
        let mut l = GenericArray::from([0u8; 16]);
        cipher.encrypt_block(&mut l);
        let k1 = dbl(&l.into());
        let k2 = dbl(&k1);
        Cmac128 { cipher, k1, k2 }
    }

    pub fn start(&self) -> CmacState<'_> {
        CmacState {
            cmac: self,
            x: [0; 16],
            buf: [0; 16],
            filled: 0,
        }
    }

    pub fn mac(&self, msg: &[u8]) -> Block {
        let mut st = self.start();
        st.update(msg);
        st.finish()
    }

    /// MAC over the first `bit_len` bits of `msg`.
    pub fn mac_bits(&self, msg: &[u8], bit_len: usize) -> Block {
        let bytes = bit_len.div_ceil(8);
        let mut st = self.start();
        st.update(&msg[..bytes]);
        st.finish_partial((bytes * 8 - bit_len) as u8)
    }

    fn encrypt(&self, x: &mut Block) {
        let b = GenericArray::from_mut_slice(x);
        self.cipher.encrypt_block(b);
    }
}

/// Streaming CMAC computation. The last full block is held back until more
/// data arrives, since the final block is treated differently.
pub struct CmacState<'a> {
    cmac: &'a Cmac128,
    x: Block,
    buf: Block,
    filled: usize,
}

impl CmacState<'_> {
    pub fn update(&mut self, mut data: &[u8]) {
        if data.is_empty() {
            return;
        }
        if self.filled > 0 {
            let take = (16 - self.filled).min(data.len());
            self.buf[self.filled..self.filled + take].copy_from_slice(&data[..take]);
            self.filled += take;
            data = &data[take..];
            if data.is_empty() {
                return;
            }
            let buf = self.buf;
            self.absorb(&buf);
            self.filled = 0;
        }
        while data.len() > 16 {
            self.absorb(&data[..16]);
            data = &data[16..];
        }
        self.buf[..data.len()].copy_from_slice(data);
        self.filled = data.len();
    }

    fn absorb(&mut self, block: &[u8]) {
        xor_into(&mut self.x, block);
        self.cmac.encrypt(&mut self.x);
    }

    pub fn finish(self) -> Block {
        self.finish_partial(0)
    }

    /// Finish when the low `unused_bits` bits of the last byte fed are not
    /// part of the message.
    pub fn finish_partial(mut self, unused_bits: u8) -> Block {
        debug_assert!(unused_bits < 8);
        let mut last = [0u8; 16];
        if self.filled == 16 && unused_bits == 0 {
            last = self.buf;
            xor_into(&mut last, &self.cmac.k1);
        } else {
            let n_bits = self.filled * 8 - unused_bits as usize;
            last[..self.filled].copy_from_slice(&self.buf[..self.filled]);
            if unused_bits > 0 {
                last[self.filled - 1] &= 0xffu8 << unused_bits;
            }
            last[n_bits / 8] |= 0x80 >> (n_bits % 8);
            xor_into(&mut last, &self.cmac.k2);
        }
        xor_into(&mut self.x, &last);
        self.cmac.encrypt(&mut self.x);
        self.x
    }
}

/// 128-NIA2 keyed once per bearer.
#[derive(Clone)]
pub struct Nia2 {
    cmac: Cmac128,
}

impl Nia2 {
    pub fn new(key: &[u8; 16]) -> Self {
        Nia2 {
            cmac: Cmac128::new(key),
        }
    }

    /// MAC-I over the concatenation of `parts` (byte-aligned message).
    pub fn mac_parts(&self, count: u32, bearer: u8, direction: Direction, parts: &[&[u8]]) -> [u8; 4] {
        let mut st = self.cmac.start();
        st.update(&uu_header(count, bearer, direction));
        for p in parts {
            st.update(p);
        }
        truncate(st.finish())
    }

    pub fn mac_bits(&self, count: u32, bearer: u8, direction: Direction, msg: &[u8], bit_len: usize) -> [u8; 4] {
        let bytes = bit_len.div_ceil(8);
        let mut st = self.cmac.start();
        st.update(&uu_header(count, bearer, direction));
        st.update(&msg[..bytes]);
        truncate(st.finish_partial((bytes * 8 - bit_len) as u8))
    }
}

fn truncate(t: Block) -> [u8; 4] {
    [t[0], t[1], t[2], t[3]]
}

pub fn nia2_mac(inputs: &UuSecurityInputs, message: &[u8]) -> Result<[u8; 4], CryptoError> {
    nia2_mac_bits(inputs, message, message.len() * 8)
}

pub fn nia2_mac_bits(
    inputs: &UuSecurityInputs,
    message: &[u8],
    bit_len: usize,
) -> Result<[u8; 4], CryptoError> {
    inputs.check()?;
    if message.len() * 8 < bit_len {
        return Err(CryptoError::InvalidInput(format!(
            "{bit_len} bits requested from a {}-byte buffer",
            message.len()
        )));
    }
    Ok(Nia2::new(&inputs.key).mac_bits(inputs.count, inputs.bearer, inputs.direction, message, bit_len))
}
