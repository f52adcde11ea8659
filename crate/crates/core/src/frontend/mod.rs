//! Cycle-driven decoupled front end: the branch prediction unit fills a fetch
//! target queue, fetch drains it, and the prefetcher probes the L1-I ahead of
//! fetch using the queued regions.

pub mod cache;
pub mod config;
pub mod direction;
pub mod filter;
pub mod ftq;
pub mod prefetch;
pub mod ras;
pub mod sim;
pub mod stats;

pub use cache::{DemandOutcome, L1ICache, BLOCK_BYTES};
pub use config::{BtbCapacity, BtbConfig, BtbMode, BtbUnit, DirectionPolicy, FrontendConfig};
pub use filter::PrefetchFilter;
pub use ftq::{Ftq, FtqEntry, PredictedBranch};
pub use prefetch::{PrefetchEngine, ScanCounts};
pub use ras::ReturnAddressStack;
pub use sim::{simulate, simulate_records, Frontend, SimError};
pub use stats::SimStats;
