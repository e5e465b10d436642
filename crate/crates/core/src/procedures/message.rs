//! Control-plane messages as a small TLV encoding.
//!
//! ```text
//! procedure(1) kind(1) transaction_id(4) ie_count(1) { type(1) len(2) value }*
//! ```

use std::fmt;

use crate::wire::WireError;

const HEADER_LEN: usize = 7;
const IE_UE_ID: u8 = 1;
const IE_F1U_TEID: u8 = 2;
const IE_N3_TEID: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Procedure {
    UeContextSetup,
    BearerContextSetup,
}

impl Procedure {
    fn code(self) -> u8 {
        match self {
            Procedure::UeContextSetup => 1,
            Procedure::BearerContextSetup => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Procedure::UeContextSetup => "ue-context-setup",
            Procedure::BearerContextSetup => "bearer-context-setup",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Request,
    Response,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcedureMessage {
    pub procedure: Procedure,
    pub kind: MessageKind,
    pub transaction_id: u32,
    pub ue_id: u32,
    pub f1u_teid: Option<u32>,
    pub n3_teid: Option<u32>,
}

impl ProcedureMessage {
    pub fn request(procedure: Procedure, transaction_id: u32, ue_id: u32) -> Self {
        ProcedureMessage {
            procedure,
            kind: MessageKind::Request,
            transaction_id,
            ue_id,
            f1u_teid: None,
            n3_teid: None,
        }
    }

    /// Response with the same procedure, transaction and UE.
    pub fn response_to(&self) -> Self {
        ProcedureMessage {
            kind: MessageKind::Response,
            f1u_teid: None,
            n3_teid: None,
            ..self.clone()
        }
    }

    pub fn answers(&self, request: &ProcedureMessage) -> bool {
        self.kind == MessageKind::Response
            && request.kind == MessageKind::Request
            && self.procedure == request.procedure
            && self.transaction_id == request.transaction_id
    }
}

impl fmt::Display for ProcedureMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.procedure {
            Procedure::UeContextSetup => "UeContextSetup",
            Procedure::BearerContextSetup => "BearerContextSetup",
        };
        let k = match self.kind {
            MessageKind::Request => "Request",
            MessageKind::Response => "Response",
        };
        write!(f, "{p}{k}")
    }
}

fn malformed(reason: impl Into<String>) -> WireError {
    WireError::Malformed {
        format: "TLV",
        reason: reason.into(),
    }
}

pub fn encode_message(m: &ProcedureMessage) -> Vec<u8> {
    let mut ies = vec![(IE_UE_ID, m.ue_id)];
    ies.extend(m.f1u_teid.map(|t| (IE_F1U_TEID, t)));
    ies.extend(m.n3_teid.map(|t| (IE_N3_TEID, t)));
    let mut b = Vec::with_capacity(HEADER_LEN + ies.len() * 7);
    b.push(m.procedure.code());
    b.push(match m.kind {
        MessageKind::Request => 0,
        MessageKind::Response => 1,
    });
    b.extend_from_slice(&m.transaction_id.to_be_bytes());
    b.push(ies.len() as u8);
    for (t, v) in ies {
        b.push(t);
        b.extend_from_slice(&4u16.to_be_bytes());
        b.extend_from_slice(&v.to_be_bytes());
    }
    b
}

pub fn decode_message(b: &[u8]) -> Result<ProcedureMessage, WireError> {
    if b.len() < HEADER_LEN {
        return Err(WireError::Truncated {
            format: "TLV",
            needed: HEADER_LEN,
            got: b.len(),
        });
    }
    let procedure = match b[0] {
        1 => Procedure::UeContextSetup,
        2 => Procedure::BearerContextSetup,
        c => return Err(malformed(format!("unknown procedure code {c}"))),
    };
    let kind = match b[1] {
        0 => MessageKind::Request,
        1 => MessageKind::Response,
        c => return Err(malformed(format!("unknown message kind {c}"))),
    };
    let transaction_id = u32::from_be_bytes(b[2..6].try_into().unwrap());
    let count = b[6] as usize;
    let mut rest = &b[HEADER_LEN..];
    let (mut ue, mut f1u, mut n3) = (None, None, None);
    for _ in 0..count {
        if rest.len() < 3 {
            return Err(WireError::Truncated {
                format: "TLV",
                needed: 3,
                got: rest.len(),
            });
        }
        let t = rest[0];
        let len = u16::from_be_bytes([rest[1], rest[2]]) as usize;
        if rest.len() < 3 + len {
            return Err(WireError::Truncated {
                format: "TLV",
                needed: 3 + len,
                got: rest.len(),
            });
        }
        if len != 4 {
            return Err(malformed(format!("IE {t} has length {len}, expected 4")));
        }
        let v = u32::from_be_bytes(rest[3..7].try_into().unwrap());
        let slot = match t {
            IE_UE_ID => &mut ue,
            IE_F1U_TEID => &mut f1u,
            IE_N3_TEID => &mut n3,
            _ => return Err(malformed(format!("unknown IE type {t}"))),
        };
        if slot.replace(v).is_some() {
            return Err(malformed(format!("IE {t} repeated")));
        }
        rest = &rest[7..];
    }
    if !rest.is_empty() {
        return Err(malformed(format!("{} trailing bytes", rest.len())));
    }
    Ok(ProcedureMessage {
        procedure,
        kind,
        transaction_id,
        ue_id: ue.ok_or_else(|| malformed("missing UE id"))?,
        f1u_teid: f1u,
        n3_teid: n3,
    })
}
