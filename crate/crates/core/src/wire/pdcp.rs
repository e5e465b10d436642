use super::{check_len, WireError};

pub const PDCP_HEADER_LEN: usize = 3;
pub const PDCP_MAC_LEN: usize = 4;
pub const PDCP_SN_MODULUS: u32 = 1 << 18;

const DC_DATA: u8 = 0x80;
const FORMAT: &str = "PDCP";

/// Simplified data PDU: D/C bit, 5 reserved bits, 18-bit SN, payload, optional MAC-I.
///
/// When ciphering is on, `payload` and `mac_i` hold ciphertext: the codec
/// only frames bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PdcpPdu {
    pub sn: u32,
    pub payload: Vec<u8>,
    pub mac_i: Option<[u8; 4]>,
}

pub fn encode_pdcp(pdu: &PdcpPdu) -> Result<Vec<u8>, WireError> {
    if pdu.sn >= PDCP_SN_MODULUS {
        return Err(WireError::FieldRange {
            field: "sn",
            value: pdu.sn as u64,
            limit: (PDCP_SN_MODULUS - 1) as u64,
        });
    }
    let mut out = Vec::with_capacity(PDCP_HEADER_LEN + pdu.payload.len() + PDCP_MAC_LEN);
    out.push(DC_DATA | (pdu.sn >> 16) as u8);
    out.extend_from_slice(&(pdu.sn as u16).to_be_bytes());
    out.extend_from_slice(&pdu.payload);
    if let Some(mac) = pdu.mac_i {
        out.extend_from_slice(&mac);
    }
    Ok(out)
}

pub fn decode_pdcp(bytes: &[u8], integrity_enabled: bool) -> Result<PdcpPdu, WireError> {
    let min = PDCP_HEADER_LEN + if integrity_enabled { PDCP_MAC_LEN } else { 0 };
    check_len(FORMAT, bytes, min)?;
    if bytes[0] & DC_DATA == 0 {
        return Err(WireError::Malformed {
            format: FORMAT,
            reason: "control PDU (D/C = 0) not supported".into(),
        });
    }
    if bytes[0] & 0x7c != 0 {
        return Err(WireError::Malformed {
            format: FORMAT,
            reason: format!("reserved bits set in {:#04x}", bytes[0]),
        });
    }
    let sn = ((bytes[0] as u32 & 0x03) << 16) | u16::from_be_bytes([bytes[1], bytes[2]]) as u32;
    let (payload, mac_i) = if integrity_enabled {
        let split = bytes.len() - PDCP_MAC_LEN;
        (
            bytes[PDCP_HEADER_LEN..split].to_vec(),
            Some(bytes[split..].try_into().unwrap()),
        )
    } else {
        (bytes[PDCP_HEADER_LEN..].to_vec(), None)
    };
    Ok(PdcpPdu { sn, payload, mac_i })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sn_at_modulus_rejected() {
        let pdu = PdcpPdu {
            sn: PDCP_SN_MODULUS,
            payload: vec![],
            mac_i: None,
        };
        assert!(matches!(
            encode_pdcp(&pdu),
            Err(WireError::FieldRange { field: "sn", .. })
        ));
    }

    #[test]
    fn no_integrity_means_no_trailer() {
        let pdu = PdcpPdu {
            sn: 3,
            payload: b"hello".to_vec(),
            mac_i: None,
        };
        let wire = encode_pdcp(&pdu).unwrap();
        assert_eq!(wire.len(), PDCP_HEADER_LEN + 5);
        assert_eq!(decode_pdcp(&wire, false).unwrap(), pdu);
    }

    #[test]
    fn header_bit_layout() {
        let pdu = PdcpPdu {
            sn: 0x2_abcd,
            payload: vec![],
            mac_i: Some([1, 2, 3, 4]),
        };
        assert_eq!(
            encode_pdcp(&pdu).unwrap(),
            vec![0x82, 0xab, 0xcd, 1, 2, 3, 4]
        );
    }

    #[test]
    fn truncated_rejected() {
        assert!(decode_pdcp(&[0x80, 0, 1, 9, 9, 9], true).is_err());
        assert!(decode_pdcp(&[0x80, 0], false).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn roundtrip(
            sn in 0..PDCP_SN_MODULUS,
            payload in proptest::collection::vec(any::<u8>(), 0..1500),
            mac: Option<[u8; 4]>,
        ) {
            let pdu = PdcpPdu { sn, payload, mac_i: mac };
            let wire = encode_pdcp(&pdu).unwrap();
            prop_assert_eq!(
                wire.len(),
                PDCP_HEADER_LEN + pdu.payload.len() + if mac.is_some() { 4 } else { 0 }
            );
            prop_assert_eq!(decode_pdcp(&wire, mac.is_some()).unwrap(), pdu);
        }
    }
}
