//! Desk-scale emulator of a 5G RAN with optional security on every
//! interface, plus the latency harness and cipher benchmark used to measure
//! what that security costs.
//!
//! Layering, bottom up:
//!
//! - [`wire`]: GTP-U, ESP, DTLS 1.2 record and PDCP codecs
//! - [`crypto`]: NEA2/NIA2, AES-GCM/GMAC, AES-CBC+HMAC and the suite catalog
//! - [`links`]: stateful ESP SAs, DTLS endpoints and PDCP entities
//! - [`pipeline`]: monolithic and disaggregated user-plane chains
//! - [`procedures`]: F1-C UE Context Setup and E1 Bearer Context Setup
//! - [`harness`]: echo and procedure campaigns reduced to 99% CIs
//! - [`bench`]: throughput sweeps and ordering analysis
//! - [`stats`]: shared numeric kernel and CSV output
//! - [`scenario`]: scenario files and override layering

pub mod bench;
pub mod crypto;
pub mod harness;
pub mod links;
pub mod pipeline;
pub mod procedures;
pub mod scenario;
pub mod stats;
pub mod wire;
