//! Integer-keyed storage that grows on demand in both directions.
//!
//! Walks on the integer line touch a small, contiguous, a-priori unknown set
//! of sites; a dense vector with a movable offset is both a map and cheap to
//! index. Keys never touched read as the default value.

use std::fmt;

#[derive(Clone, PartialEq)]
pub struct Window<T> {
    offset: i64,
    data: Vec<T>,
    default: T,
}

impl<T: Copy + PartialEq> Window<T> {
    pub fn new(default: T) -> Self {
        Window {
            offset: 0,
            data: Vec::new(),
            default,
        }
    }

    pub fn default_value(&self) -> T {
        self.default
    }

    #[inline]
    pub fn get(&self, key: i64) -> T {
        let idx = key.wrapping_sub(self.offset);
        if idx >= 0 && (idx as usize) < self.data.len() {
            self.data[idx as usize]
        } else {
            self.default
        }
    }

    #[inline]
    pub fn get_mut(&mut self, key: i64) -> &mut T {
        let idx = self.slot(key);
        &mut self.data[idx]
    }

    #[inline]
    pub fn set(&mut self, key: i64, value: T) {
        *self.get_mut(key) = value;
    }

    #[inline]
    fn slot(&mut self, key: i64) -> usize {
        if self.data.is_empty() {
            self.offset = key;
            self.data.push(self.default);
            return 0;
        }
        let idx = key - self.offset;
        if idx >= 0 && (idx as usize) < self.data.len() {
            return idx as usize;
        }
        self.grow_to(key);
        (key - self.offset) as usize
    }

    #[cold]
    fn grow_to(&mut self, key: i64) {
        let len = self.data.len() as i64;
        if key < self.offset {
            let need = self.offset - key;
            let extra = need.max(len).max(4);
            let mut grown = vec![self.default; extra as usize];
            grown.extend_from_slice(&self.data);
            self.data = grown;
            self.offset -= extra;
        } else {
            let need = key - (self.offset + len) + 1;
            let extra = need.max(len).max(4);
            self.data
                .extend(std::iter::repeat(self.default).take(extra as usize));
        }
    }

    /// Keys whose value differs from the default, in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(move |(_, v)| **v != self.default)
            .map(move |(i, v)| (self.offset + i as i64, *v))
    }

    pub fn clear(&mut self) {
        self.data.clear();
        self.offset = 0;
    }
}

impl Window<u64> {
    #[inline]
    pub fn incr(&mut self, key: i64, by: u64) {
        *self.get_mut(key) += by;
    }

    /// Sum of `value - default` over all stored keys.
    pub fn excess(&self) -> u64 {
        self.data.iter().map(|v| v - self.default).sum()
    }
}

impl<T: Copy + PartialEq + fmt::Debug> fmt::Debug for Window<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}
