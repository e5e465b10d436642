//! Annotated hex dumps for the `dump` subcommand.

use std::fmt::Write;

use super::{
    decode_dtls_record, decode_esp, decode_gtpu, decode_pdcp, WireError, DTLS_HEADER_LEN,
    ESP_HEADER_LEN, PDCP_HEADER_LEN,
};
use crate::crypto::SecuritySuite;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PduKind {
    Gtpu,
    Esp,
    Dtls,
    Pdcp,
}

impl std::str::FromStr for PduKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gtpu" | "gtp-u" => Ok(PduKind::Gtpu),
            "esp" => Ok(PduKind::Esp),
            "dtls" => Ok(PduKind::Dtls),
            "pdcp" => Ok(PduKind::Pdcp),
            other => Err(format!(
                "unknown PDU kind {other:?}, expected gtpu, esp, dtls or pdcp"
            )),
        }
    }
}

/// Field-annotated dump. `suite` is needed for ESP (IV/ICV lengths);
/// for PDCP it only decides whether a MAC-I trailer is present.
pub fn dump(kind: PduKind, bytes: &[u8], suite: Option<&SecuritySuite>) -> Result<String, WireError> {
    let mut out = String::new();
    match kind {
        PduKind::Gtpu => {
            let p = decode_gtpu(bytes)?;
            field(&mut out, 0, &bytes[0..1], "flags (version 1, PT 1)");
            field(&mut out, 1, &bytes[1..2], "message type (G-PDU)");
            field(&mut out, 2, &bytes[2..4], &format!("length = {}", p.payload.len()));
            field(&mut out, 4, &bytes[4..8], &format!("teid = {:#010x}", p.teid));
            field(&mut out, 8, &bytes[8..], "payload");
        }
        PduKind::Esp => {
            let suite = suite.ok_or_else(|| WireError::Malformed {
                format: "ESP",
                reason: "dumping ESP needs a suite to size IV and ICV".into(),
            })?;
            let p = decode_esp(bytes, suite)?;
            let iv_end = ESP_HEADER_LEN + p.iv.len();
            let icv_start = bytes.len() - p.icv.len();
            field(&mut out, 0, &bytes[0..4], &format!("spi = {:#010x}", p.spi));
            field(&mut out, 4, &bytes[4..8], &format!("sequence = {}", p.sequence));
            field(&mut out, 8, &bytes[8..iv_end], "iv");
            field(&mut out, iv_end, &bytes[iv_end..icv_start], "ciphertext + trailer");
            field(&mut out, icv_start, &bytes[icv_start..], &format!("icv ({})", suite.id));
        }
        PduKind::Dtls => {
            let r = decode_dtls_record(bytes)?;
            field(&mut out, 0, &bytes[0..1], &format!("content type = {:?}", r.content_type));
            field(&mut out, 1, &bytes[1..3], "version (DTLS 1.2)");
            field(&mut out, 3, &bytes[3..5], &format!("epoch = {}", r.epoch));
            field(&mut out, 5, &bytes[5..11], &format!("sequence = {}", r.sequence));
            field(&mut out, 11, &bytes[11..13], &format!("length = {}", r.body.len()));
            field(&mut out, DTLS_HEADER_LEN, &bytes[DTLS_HEADER_LEN..], "ciphertext + tag");
        }
        PduKind::Pdcp => {
            let integrity = suite.map(|s| s.tag_len > 0).unwrap_or(true);
            let p = decode_pdcp(bytes, integrity)?;
            field(&mut out, 0, &bytes[0..PDCP_HEADER_LEN], &format!("D/C + sn = {}", p.sn));
            let end = PDCP_HEADER_LEN + p.payload.len();
            field(&mut out, PDCP_HEADER_LEN, &bytes[PDCP_HEADER_LEN..end], "payload");
            if p.mac_i.is_some() {
                field(&mut out, end, &bytes[end..], "mac-i");
            }
        }
    }
    Ok(out)
}

fn field(out: &mut String, offset: usize, bytes: &[u8], label: &str) {
    const SHOWN: usize = 32;
    let shown = hex::encode(&bytes[..bytes.len().min(SHOWN)]);
    let more = if bytes.len() > SHOWN {
        format!("... ({} bytes)", bytes.len())
    } else {
        String::new()
    };
    let _ = writeln!(out, "{offset:06x}  {shown}{more}  ; {label}");
}
