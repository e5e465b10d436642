use super::{check_len, WireError};
use crate::crypto::SecuritySuite;

/// SPI plus sequence number.
pub const ESP_HEADER_LEN: usize = 8;

const FORMAT: &str = "ESP";

/// One ESP packet split into its fields. `ciphertext` includes the encrypted
/// trailer (padding, pad length, next header); for NULL-encryption suites it
/// is the cleartext payload plus trailer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EspPacket {
    pub spi: u32,
    pub sequence: u32,
    pub iv: Vec<u8>,
    pub ciphertext: Vec<u8>,
    pub icv: Vec<u8>,
}

impl EspPacket {
    pub fn wire_len(&self) -> usize {
        ESP_HEADER_LEN + self.iv.len() + self.ciphertext.len() + self.icv.len()
    }
}

pub fn encode_esp(packet: &EspPacket, suite: &SecuritySuite) -> Result<Vec<u8>, WireError> {
    if packet.iv.len() != suite.iv_len {
        return Err(WireError::Malformed {
            format: FORMAT,
            reason: format!(
                "IV is {} bytes, suite {} uses {}",
                packet.iv.len(),
                suite.id,
                suite.iv_len
            ),
        });
    }
    if packet.icv.len() != suite.tag_len {
        return Err(WireError::Malformed {
            format: FORMAT,
            reason: format!(
                "ICV is {} bytes, suite {} uses {}",
                packet.icv.len(),
                suite.id,
                suite.tag_len
            ),
        });
    }
    let mut out = Vec::with_capacity(packet.wire_len());
    out.extend_from_slice(&packet.spi.to_be_bytes());
    out.extend_from_slice(&packet.sequence.to_be_bytes());
    out.extend_from_slice(&packet.iv);
    out.extend_from_slice(&packet.ciphertext);
    out.extend_from_slice(&packet.icv);
    Ok(out)
}

pub fn decode_esp(bytes: &[u8], suite: &SecuritySuite) -> Result<EspPacket, WireError> {
    let fixed = ESP_HEADER_LEN + suite.iv_len + suite.tag_len;
    check_len(FORMAT, bytes, fixed)?;
    let spi = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
    let sequence = u32::from_be_bytes(bytes[4..8].try_into().unwrap());
    let iv_end = ESP_HEADER_LEN + suite.iv_len;
    let icv_start = bytes.len() - suite.tag_len;
    Ok(EspPacket {
        spi,
        sequence,
        iv: bytes[ESP_HEADER_LEN..iv_end].to_vec(),
        ciphertext: bytes[iv_end..icv_start].to_vec(),
        icv: bytes[icv_start..].to_vec(),
    })
}
