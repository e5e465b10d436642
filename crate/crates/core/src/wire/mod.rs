//! Encoders and decoders for the PDUs crossing each emulated interface.
//!
//! All multi-byte integers are big-endian. Codecs are pure functions.
//!
//! | Format | Carried on        | Fixed overhead                         |
//! |--------|-------------------|----------------------------------------|
//! | GTP-U  | F1-U, N3          | 8-byte G-PDU header                    |
//! | ESP    | F1-U, N3, F1-C, E1| SPI + seq + IV + trailer + ICV         |
//! | DTLS   | F1-C, E1          | 13-byte record header (+16-byte tag)   |
//! | PDCP   | Uu                | 3-byte header (+4-byte MAC-I)          |

mod dtls;
pub mod dump;
mod esp;
mod gtpu;
mod pdcp;

pub use dtls::{
    decode_dtls_record, encode_dtls_record, ContentType, DtlsRecord, DTLS_1_0_VERSION,
    DTLS_1_2_VERSION, DTLS_HEADER_LEN, DTLS_MAX_SEQUENCE,
};
pub use esp::{decode_esp, encode_esp, EspPacket, ESP_HEADER_LEN};
pub use gtpu::{decode_gtpu, encode_gtpu, GtpuPacket, GTPU_HEADER_LEN, GTPU_MSG_GPDU};
pub use pdcp::{decode_pdcp, encode_pdcp, PdcpPdu, PDCP_HEADER_LEN, PDCP_MAC_LEN, PDCP_SN_MODULUS};

use thiserror::Error;

/// Errors raised by the PDU codecs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("truncated {format} packet: need at least {needed} bytes, got {got}")]
    Truncated {
        format: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("malformed {format} packet: {reason}")]
    Malformed {
        format: &'static str,
        reason: String,
    },
    #[error("{format} payload of {len} bytes exceeds the {max}-byte limit")]
    Oversize {
        format: &'static str,
        len: usize,
        max: usize,
    },
    #[error("unsupported DTLS version {0:#06x}, only DTLS 1.2 (0xfefd) is accepted")]
    UnsupportedVersion(u16),
    #[error("field {field} out of range: {value} (limit {limit})")]
    FieldRange {
        field: &'static str,
        value: u64,
        limit: u64,
    },
}

fn check_len(format: &'static str, bytes: &[u8], needed: usize) -> Result<(), WireError> {
    if bytes.len() < needed {
        return Err(WireError::Truncated {
            format,
            needed,
            got: bytes.len(),
        });
    }
    Ok(())
}
