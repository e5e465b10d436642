use super::{check_len, WireError};

pub const DTLS_HEADER_LEN: usize = 13;
pub const DTLS_1_2_VERSION: u16 = 0xfefd;
pub const DTLS_1_0_VERSION: u16 = 0xfeff;
pub const DTLS_MAX_SEQUENCE: u64 = (1 << 48) - 1;

const FORMAT: &str = "DTLS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContentType {
    ChangeCipherSpec,
    Alert,
    Handshake,
    ApplicationData,
}

impl ContentType {
    pub fn code(self) -> u8 {
        match self {
            ContentType::ChangeCipherSpec => 20,
            ContentType::Alert => 21,
            ContentType::Handshake => 22,
            ContentType::ApplicationData => 23,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            20 => ContentType::ChangeCipherSpec,
            21 => ContentType::Alert,
            22 => ContentType::Handshake,
            23 => ContentType::ApplicationData,
            _ => return None,
        })
    }
}

/// A DTLS 1.2 record. The version is not stored: anything but 1.2 is rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DtlsRecord {
    pub content_type: ContentType,
    pub epoch: u16,
    /// 48-bit record sequence number.
    pub sequence: u64,
    /// Ciphertext followed by the AEAD tag.
    pub body: Vec<u8>,
}

pub fn encode_dtls_record(record: &DtlsRecord) -> Result<Vec<u8>, WireError> {
    if record.sequence > DTLS_MAX_SEQUENCE {
        return Err(WireError::FieldRange {
            field: "sequence",
            value: record.sequence,
            limit: DTLS_MAX_SEQUENCE,
        });
    }
    if record.content_type == ContentType::ApplicationData && record.body.is_empty() {
        return Err(WireError::Malformed {
            format: FORMAT,
            reason: "application-data record with empty body".into(),
        });
    }
    let len = u16::try_from(record.body.len()).map_err(|_| WireError::Oversize {
        format: FORMAT,
        len: record.body.len(),
        max: u16::MAX as usize,
    })?;
    let mut out = Vec::with_capacity(DTLS_HEADER_LEN + record.body.len());
    out.push(record.content_type.code());
    out.extend_from_slice(&DTLS_1_2_VERSION.to_be_bytes());
    out.extend_from_slice(&record.epoch.to_be_bytes());
    out.extend_from_slice(&record.sequence.to_be_bytes()[2..]);
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&record.body);
    Ok(out)
}

pub fn decode_dtls_record(bytes: &[u8]) -> Result<DtlsRecord, WireError> {
    check_len(FORMAT, bytes, DTLS_HEADER_LEN)?;
    let content_type = ContentType::from_code(bytes[0]).ok_or_else(|| WireError::Malformed {
        format: FORMAT,
        reason: format!("unknown content type {}", bytes[0]),
    })?;
    let version = u16::from_be_bytes([bytes[1], bytes[2]]);
    if version != DTLS_1_2_VERSION {
        return Err(WireError::UnsupportedVersion(version));
    }
    let epoch = u16::from_be_bytes([bytes[3], bytes[4]]);
    let mut seq = [0u8; 8];
    seq[2..].copy_from_slice(&bytes[5..11]);
    let declared = u16::from_be_bytes([bytes[11], bytes[12]]) as usize;
    let actual = bytes.len() - DTLS_HEADER_LEN;
    if declared != actual {
        return Err(WireError::Malformed {
            format: FORMAT,
            reason: format!("length field {declared} but {actual} body bytes present"),
        });
    }
    if content_type == ContentType::ApplicationData && actual == 0 {
        return Err(WireError::Malformed {
            format: FORMAT,
            reason: "application-data record with empty body".into(),
        });
    }
    Ok(DtlsRecord {
        content_type,
        epoch,
        sequence: u64::from_be_bytes(seq),
        body: bytes[DTLS_HEADER_LEN..].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn app(seq: u64, body: Vec<u8>) -> DtlsRecord {
        DtlsRecord {
            content_type: ContentType::ApplicationData,
            epoch: 1,
            sequence: seq,
            body,
        }
    }

    #[test]
    fn application_record_wire_size() {
        let wire = encode_dtls_record(&app(5, vec![0; 1024 + 16])).unwrap();
        assert_eq!(wire.len(), 1053);
        assert_eq!(&wire[..3], &[23, 0xfe, 0xfd]);
    }

    #[test]
    fn dtls_1_0_rejected() {
        let mut wire = encode_dtls_record(&app(1, vec![1; 17])).unwrap();
        wire[1..3].copy_from_slice(&DTLS_1_0_VERSION.to_be_bytes());
        assert_eq!(
            decode_dtls_record(&wire),
            Err(WireError::UnsupportedVersion(0xfeff))
        );
    }

    #[test]
    fn sequence_is_48_bits() {
        let r = app(DTLS_MAX_SEQUENCE, vec![9; 20]);
        let wire = encode_dtls_record(&r).unwrap();
        assert_eq!(&wire[5..11], &[0xff; 6]);
        assert_eq!(decode_dtls_record(&wire).unwrap(), r);
        assert!(encode_dtls_record(&app(DTLS_MAX_SEQUENCE + 1, vec![1])).is_err());
    }

    #[test]
    fn empty_application_data_rejected() {
        assert!(encode_dtls_record(&app(0, vec![])).is_err());
        let alert = DtlsRecord {
            content_type: ContentType::Alert,
            epoch: 0,
            sequence: 0,
            body: vec![],
        };
        assert!(encode_dtls_record(&alert).is_ok());
    }

    fn content_type() -> impl Strategy<Value = ContentType> {
        prop_oneof![
            Just(ContentType::ChangeCipherSpec),
            Just(ContentType::Alert),
            Just(ContentType::Handshake),
            Just(ContentType::ApplicationData),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn roundtrip(
            ct in content_type(),
            epoch: u16,
            seq in 0..=DTLS_MAX_SEQUENCE,
            body in proptest::collection::vec(any::<u8>(), 1..1200),
        ) {
            let r = DtlsRecord { content_type: ct, epoch, sequence: seq, body };
            let wire = encode_dtls_record(&r).unwrap();
            prop_assert_eq!(wire.len(), DTLS_HEADER_LEN + r.body.len());
            prop_assert_eq!(decode_dtls_record(&wire).unwrap(), r);
        }

        #[test]
        fn every_strict_prefix_rejected(seq in 0..=DTLS_MAX_SEQUENCE, body in proptest::collection::vec(any::<u8>(), 1..48)) {
            let wire = encode_dtls_record(&app(seq, body)).unwrap();
            for cut in 0..wire.len() {
                prop_assert!(decode_dtls_record(&wire[..cut]).is_err());
            }
        }
    }
}
