use super::{check_len, WireError};

/// Mandatory GTP-U header length (no optional fields, no extension headers).
pub const GTPU_HEADER_LEN: usize = 8;

/// G-PDU message type (user data).
pub const GTPU_MSG_GPDU: u8 = 0xff;

// version 1, PT = 1 (GTP), E = S = PN = 0
const FLAGS_V1_GTP: u8 = 0x30;
const FLAG_OPTIONAL_MASK: u8 = 0x07;

const FORMAT: &str = "GTP-U";

/// A G-PDU: one user datagram inside a GTP-U tunnel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GtpuPacket {
    pub teid: u32,
    pub payload: Vec<u8>,
}

pub fn encode_gtpu(teid: u32, payload: &[u8]) -> Result<Vec<u8>, WireError> {
    let len = u16::try_from(payload.len()).map_err(|_| WireError::Oversize {
        format: FORMAT,
        len: payload.len(),
        max: u16::MAX as usize,
    })?;
    let mut out = Vec::with_capacity(GTPU_HEADER_LEN + payload.len());
    out.push(FLAGS_V1_GTP);
    out.push(GTPU_MSG_GPDU);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&teid.to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

pub fn decode_gtpu(bytes: &[u8]) -> Result<GtpuPacket, WireError> {
    check_len(FORMAT, bytes, GTPU_HEADER_LEN)?;
    let flags = bytes[0];
    if flags >> 5 != 1 {
        return Err(malformed(format!("version {} is not 1", flags >> 5)));
    }
    if flags & 0x10 == 0 {
        return Err(malformed("protocol type is GTP' rather than GTP".into()));
    }
    if flags & FLAG_OPTIONAL_MASK != 0 {
        return Err(malformed(format!(
            "optional fields or extension headers present (flags {flags:#04x})"
        )));
    }
    if bytes[1] != GTPU_MSG_GPDU {
        return Err(malformed(format!(
            "message type {:#04x} is not a G-PDU",
            bytes[1]
        )));
    }
    let declared = u16::from_be_bytes([bytes[2], bytes[3]]) as usize;
    let actual = bytes.len() - GTPU_HEADER_LEN;
    if declared != actual {
        return Err(malformed(format!(
            "length field {declared} but {actual} payload bytes present"
        )));
    }
    let teid = u32::from_be_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]);
    Ok(GtpuPacket {
        teid,
        payload: bytes[GTPU_HEADER_LEN..].to_vec(),
    })
}

fn malformed(reason: String) -> WireError {
    WireError::Malformed {
        format: FORMAT,
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_payload_is_bare_header() {
        let pkt = encode_gtpu(0, &[]).unwrap();
        assert_eq!(pkt, vec![0x30, 0xff, 0, 0, 0, 0, 0, 0]);
        assert_eq!(decode_gtpu(&pkt).unwrap().payload, Vec::<u8>::new());
    }

    #[test]
    fn kilobyte_payload_gives_1032_bytes() {
        let pkt = encode_gtpu(0xdead_beef, &[0x5a; 1024]).unwrap();
        assert_eq!(pkt.len(), 1032);
        assert_eq!(&pkt[2..4], &1024u16.to_be_bytes());
    }

    #[test]
    fn roundtrip_small() {
        let pkt = encode_gtpu(7, b"abc").unwrap();
        let d = decode_gtpu(&pkt).unwrap();
        assert_eq!(d.teid, 7);
        assert_eq!(d.payload, b"abc");
    }

    #[test]
    fn length_mismatch_rejected() {
        let mut pkt = vec![0x30, 0xff, 0, 10, 0, 0, 0, 1];
        pkt.extend_from_slice(&[1, 2, 3, 4, 5]);
        assert!(matches!(
            decode_gtpu(&pkt),
            Err(WireError::Malformed { .. })
        ));
    }

    #[test]
    fn oversize_rejected() {
        let big = vec![0u8; 65536];
        assert!(matches!(
            encode_gtpu(1, &big),
            Err(WireError::Oversize { .. })
        ));
        assert_eq!(encode_gtpu(1, &big[..65535]).unwrap().len(), 65543);
    }

    #[test]
    fn extension_headers_and_other_messages_rejected() {
        let mut pkt = encode_gtpu(1, b"x").unwrap();
        pkt[0] |= 0x04;
        assert!(decode_gtpu(&pkt).is_err());
        let mut echo = encode_gtpu(1, b"x").unwrap();
        echo[1] = 1;
        assert!(decode_gtpu(&echo).is_err());
    }

    #[test]
    fn matches_independent_dissector_capture() {
        // Built and dissected with scapy's GTP_U_Header (teid=0x1234abcd, G-PDU).
        let capture = hex::decode("30ff000b1234abcd68656c6c6f206774702d75").unwrap();
        let d = decode_gtpu(&capture).unwrap();
        assert_eq!(d.teid, 0x1234_abcd);
        assert_eq!(d.payload, b"hello gtp-u");
        assert_eq!(encode_gtpu(0x1234_abcd, b"hello gtp-u").unwrap(), capture);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn roundtrip(teid: u32, payload in proptest::collection::vec(any::<u8>(), 0..1500)) {
            let pkt = encode_gtpu(teid, &payload).unwrap();
            prop_assert_eq!(pkt.len(), GTPU_HEADER_LEN + payload.len());
            let d = decode_gtpu(&pkt).unwrap();
            prop_assert_eq!(d.teid, teid);
            prop_assert_eq!(d.payload, payload);
        }

        #[test]
        fn every_strict_prefix_rejected(teid: u32, payload in proptest::collection::vec(any::<u8>(), 0..64)) {
            let pkt = encode_gtpu(teid, &payload).unwrap();
            for cut in 0..pkt.len() {
                prop_assert!(decode_gtpu(&pkt[..cut]).is_err());
            }
        }
    }
}
