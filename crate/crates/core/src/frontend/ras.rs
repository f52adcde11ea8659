use std::collections::VecDeque;

use crate::addr::InstrAddress;

pub const DEFAULT_RAS_ENTRIES: usize = 32;

/// Bounded return address stack; overflow discards the oldest entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnAddressStack {
    stack: VecDeque<InstrAddress>,
    capacity: usize,
}

impl ReturnAddressStack {
    pub fn new(capacity: usize) -> Self {
        ReturnAddressStack {
            stack: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, ret: InstrAddress) {
        if self.capacity == 0 {
            return;
        }
        if self.stack.len() == self.capacity {
            self.stack.pop_front();
        }
        self.stack.push_back(ret);
    }

    pub fn pop(&mut self) -> Option<InstrAddress> {
        self.stack.pop_back()
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }
}
