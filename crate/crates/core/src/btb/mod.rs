//! Branch target buffers: the basic-block-oriented baseline, the conventional
//! instruction-indexed BTB and the four-partition offset-specialized ensemble,
//! together with tag folding and the analytical storage model.

pub mod geometry;
pub mod offset;
pub mod org;
pub mod storage;
pub mod table;
pub mod tag;

pub use geometry::{
    block_baseline, fdipx_sizing, BtbGeometry, ConfigError, EnsembleConfig, PayloadMode, Ways, MAX_BLOCK_INSTRUCTIONS,
};
pub use offset::{compute_offset, min_offset_bits, select_partition, Direction, SignedOffset, PARTITION_OFFSET_BITS};
pub use org::{BlockBtb, BlockHit, BtbHit, InsertReport, InstructionBtb};
pub use storage::{
    bb_btb_entry_bits, ensemble_storage, fdipx_entry_bits, format_kb, geometry_storage, StorageBreakdown, StorageLine,
};
pub use table::{BtbEntry, BtbTable, InsertAction, Payload};
pub use tag::{btb_index_and_tag, compress_tag, full_tag_bits, TagMode};
