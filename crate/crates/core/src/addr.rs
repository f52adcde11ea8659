//! Instruction addresses and branch kinds shared by every subsystem.

use std::fmt;

use thiserror::Error;

/// Width of the modeled virtual address space.
pub const VADDR_BITS: u32 = 48;

/// Instructions are 32-bit and word aligned, so the low two bits are always zero.
pub const INSTR_BYTES: u64 = 4;

/// Bits of a word index (address / 4).
pub const WORD_INDEX_BITS: u32 = VADDR_BITS - 2;

const ADDR_LIMIT: u64 = 1 << VADDR_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AddrError {
    #[error("address {0:#x} is not word aligned")]
    Unaligned(u64),
    #[error("address {0:#x} exceeds the 48-bit virtual address space")]
    OutOfRange(u64),
}

/// A word-aligned byte address inside the 48-bit virtual address space.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct InstrAddress(u64);

impl InstrAddress {
    pub const ZERO: InstrAddress = InstrAddress(0);
    /// Highest aligned address.
    pub const MAX: InstrAddress = InstrAddress(ADDR_LIMIT - INSTR_BYTES);

    pub fn new(value: u64) -> Result<Self, AddrError> {
        if value >= ADDR_LIMIT {
            return Err(AddrError::OutOfRange(value));
        }
        if !value.is_multiple_of(INSTR_BYTES) {
            return Err(AddrError::Unaligned(value));
        }
        Ok(InstrAddress(value))
    }

    pub fn from_word_index(index: u64) -> Result<Self, AddrError> {
        Self::new(index.checked_mul(INSTR_BYTES).ok_or(AddrError::OutOfRange(index))?)
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn word_index(self) -> u64 {
        self.0 / INSTR_BYTES
    }

    /// Address `n` instructions further on, wrapping inside the address space.
    pub fn advance(self, n: u64) -> Self {
        InstrAddress(self.0.wrapping_add(n.wrapping_mul(INSTR_BYTES)) & (ADDR_LIMIT - 1))
    }

    pub fn next(self) -> Self {
        self.advance(1)
    }
}

impl fmt::Debug for InstrAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl fmt::Display for InstrAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl fmt::LowerHex for InstrAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerHex::fmt(&self.0, f)
    }
}

impl TryFrom<u64> for InstrAddress {
    type Error = AddrError;

    fn try_from(value: u64) -> Result<Self, Self::Error> {
        InstrAddress::new(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BranchKind {
    ConditionalDirect,
    UnconditionalDirect,
    CallDirect,
    Return,
    IndirectJump,
    IndirectCall,
}

impl BranchKind {
    pub const ALL: [BranchKind; 6] = [
        BranchKind::ConditionalDirect,
        BranchKind::UnconditionalDirect,
        BranchKind::CallDirect,
        BranchKind::Return,
        BranchKind::IndirectJump,
        BranchKind::IndirectCall,
    ];

    /// Direct branches encode their target in the instruction, so a PC-relative
    /// offset exists.
    pub fn is_direct(self) -> bool {
        matches!(
            self,
            BranchKind::ConditionalDirect | BranchKind::UnconditionalDirect | BranchKind::CallDirect
        )
    }

    pub fn is_call(self) -> bool {
        matches!(self, BranchKind::CallDirect | BranchKind::IndirectCall)
    }

    /// Everything except conditional branches redirects control flow unconditionally.
    pub fn is_unconditional(self) -> bool {
        self != BranchKind::ConditionalDirect
    }

    /// Code used by the binary trace format (0 is reserved for non-branches).
    pub fn code(self) -> u8 {
        match self {
            BranchKind::ConditionalDirect => 1,
            BranchKind::UnconditionalDirect => 2,
            BranchKind::CallDirect => 3,
            BranchKind::Return => 4,
            BranchKind::IndirectJump => 5,
            BranchKind::IndirectCall => 6,
        }
    }

    pub fn from_code(code: u8) -> Option<Option<BranchKind>> {
        match code {
            0 => Some(None),
            1..=6 => Some(Some(BranchKind::ALL[code as usize - 1])),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BranchKind::ConditionalDirect => "conditional_direct",
            BranchKind::UnconditionalDirect => "unconditional_direct",
            BranchKind::CallDirect => "call_direct",
            BranchKind::Return => "return",
            BranchKind::IndirectJump => "indirect_jump",
            BranchKind::IndirectCall => "indirect_call",
        }
    }
}

impl fmt::Display for BranchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_addresses() {
        assert_eq!(InstrAddress::new(0x1002), Err(AddrError::Unaligned(0x1002)));
        assert_eq!(InstrAddress::new(1 << 48), Err(AddrError::OutOfRange(1 << 48)));
        assert_eq!(InstrAddress::new((1 << 48) - 4).unwrap(), InstrAddress::MAX);
    }

    #[test]
    fn word_index_round_trips() {
        let a = InstrAddress::new(0x2000).unwrap();
        assert_eq!(a.word_index(), 0x800);
        assert_eq!(InstrAddress::from_word_index(0x800).unwrap(), a);
        assert_eq!(InstrAddress::MAX.next(), InstrAddress::ZERO);
    }

    #[test]
    fn kind_codes_are_stable() {
        for (i, k) in BranchKind::ALL.iter().enumerate() {
            assert_eq!(k.code() as usize, i + 1);
            assert_eq!(BranchKind::from_code(k.code()), Some(Some(*k)));
        }
        assert_eq!(BranchKind::from_code(0), Some(None));
        assert_eq!(BranchKind::from_code(7), None);
    }
}
