use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::ingest::WindowedExample;

/// Bounded FIFO of training examples. Appending to a full queue evicts the oldest.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryQueue {
    capacity: usize,
    items: VecDeque<WindowedExample>,
}

impl MemoryQueue {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("memory", "memory capacity must be at least 1"));
        }
        Ok(Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(4096)),
        })
    }

    /// Appends at the newest end, returning the evicted example if the queue was full.
    pub fn push(&mut self, example: WindowedExample) -> Option<WindowedExample> {
        let evicted = if self.items.len() == self.capacity {
            self.items.pop_front()
        } else {
            None
        };
        self.items.push_back(example);
        evicted
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &WindowedExample> {
        self.items.iter()
    }

    pub fn newest(&self) -> Option<&WindowedExample> {
        self.items.back()
    }
}
