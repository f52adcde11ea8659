use thiserror::Error;

use crate::addr::{BranchKind, InstrAddress};

/// One executed instruction. `kind` is `None` for non-branches.
///
/// `target` is meaningful for taken branches; not-taken conditionals may
/// carry their encoded target or zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub pc: InstrAddress,
    pub kind: Option<BranchKind>,
    pub taken: bool,
    pub target: InstrAddress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("non-branch marked taken")]
    NonBranchTaken,
    #[error("non-branch carries a target")]
    NonBranchTarget,
    #[error("{0} must be taken")]
    UnconditionalNotTaken(BranchKind),
}

impl TraceRecord {
    pub fn instruction(pc: InstrAddress) -> Self {
        TraceRecord {
            pc,
            kind: None,
            taken: false,
            target: InstrAddress::ZERO,
        }
    }

    pub fn branch(pc: InstrAddress, kind: BranchKind, taken: bool, target: InstrAddress) -> Self {
        TraceRecord {
            pc,
            kind: Some(kind),
            taken,
            target,
        }
    }

    /// Shorthand for a taken branch.
    pub fn taken(pc: InstrAddress, kind: BranchKind, target: InstrAddress) -> Self {
        Self::branch(pc, kind, true, target)
    }

    pub fn validate(&self) -> Result<(), RecordError> {
        match self.kind {
            None if self.taken => Err(RecordError::NonBranchTaken),
            None if self.target != InstrAddress::ZERO => Err(RecordError::NonBranchTarget),
            Some(k) if k.is_unconditional() && !self.taken => Err(RecordError::UnconditionalNotTaken(k)),
            _ => Ok(()),
        }
    }

    pub fn is_taken_branch(&self) -> bool {
        self.kind.is_some() && self.taken
    }

    /// Address of the instruction executed after this one.
    pub fn next_pc(&self) -> InstrAddress {
        if self.is_taken_branch() {
            self.target
        } else {
            self.pc.next()
        }
    }
}
