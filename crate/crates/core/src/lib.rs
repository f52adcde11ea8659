//! Fetch-directed instruction prefetching with partitioned, offset-specialized
//! branch target buffers.
//!
//! * [`btb`]: BTB organizations, tag folding and storage accounting.
//! * [`frontend`]: the cycle-driven decoupled front end.
//! * [`trace`]: trace formats, synthetic generation and offset analysis.

pub mod addr;
pub mod btb;
pub mod frontend;
pub mod trace;

pub use addr::{AddrError, BranchKind, InstrAddress};
