//! Indexed binary min-heap over dense slots with decrease-key.
//!
//! Entries are ordered by `(key, slot)`, so equal keys pop the lower slot
//! first.

use std::cmp::Ordering;

const ABSENT: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct Frontier {
    heap: Vec<(f64, usize)>,
    position: Vec<usize>,
    reversed: bool,
}

impl Frontier {
    pub fn with_slots(slots: usize) -> Self {
        Self {
            heap: Vec::with_capacity(slots),
            position: vec![ABSENT; slots],
            reversed: false,
        }
    }

    /// Inverts the ordering so the largest key pops first. Used only for
    /// fault injection in verification runs.
    #[doc(hidden)]
    pub fn inverted(mut self) -> Self {
        self.reversed = true;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn contains(&self, slot: usize) -> bool {
        self.position[slot] != ABSENT
    }

    pub fn insert(&mut self, slot: usize, key: f64) {
        debug_assert!(!self.contains(slot));
        self.heap.push((key, slot));
        self.position[slot] = self.heap.len() - 1;
        self.sift_up(self.heap.len() - 1);
    }

    /// Lowers the key of an enqueued slot.
    pub fn decrease_key(&mut self, slot: usize, key: f64) {
        let i = self.position[slot];
        debug_assert!(i != ABSENT);
        debug_assert!(key <= self.heap[i].0);
        self.heap[i].0 = key;
        if self.reversed {
            self.sift_down(i);
        } else {
            self.sift_up(i);
        }
    }

    pub fn pop(&mut self) -> Option<(usize, f64)> {
        if self.heap.is_empty() {
            return None;
        }
        let last = self.heap.len() - 1;
        self.swap(0, last);
        let (key, slot) = self.heap.pop().expect("non-empty");
        self.position[slot] = ABSENT;
        if !self.heap.is_empty() {
            self.sift_down(0);
        }
        Some((slot, key))
    }

    fn less(&self, a: usize, b: usize) -> bool {
        let (ka, sa) = self.heap[a];
        let (kb, sb) = self.heap[b];
        let ord = ka.partial_cmp(&kb).unwrap_or(Ordering::Equal);
        let ord = if self.reversed { ord.reverse() } else { ord };
        ord.then(sa.cmp(&sb)) == Ordering::Less
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.position[self.heap[a].1] = a;
        self.position[self.heap[b].1] = b;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if !self.less(i, parent) {
                break;
            }
            self.swap(i, parent);
            i = parent;
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        loop {
            let left = 2 * i + 1;
            let right = left + 1;
            let mut best = i;
            if left < self.heap.len() && self.less(left, best) {
                best = left;
            }
            if right < self.heap.len() && self.less(right, best) {
                best = right;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_pop_lower_slot() {
        let mut f = Frontier::with_slots(4);
        f.insert(3, 1.0);
        f.insert(1, 1.0);
        f.insert(2, 0.5);
        assert_eq!(f.pop(), Some((2, 0.5)));
        assert_eq!(f.pop(), Some((1, 1.0)));
        assert_eq!(f.pop(), Some((3, 1.0)));
        assert_eq!(f.pop(), None);
    }

    #[test]
    fn decrease_key_reorders() {
        let mut f = Frontier::with_slots(3);
        f.insert(0, 5.0);
        f.insert(1, 3.0);
        f.insert(2, 4.0);
        f.decrease_key(0, 1.0);
        assert!(f.contains(0));
        assert_eq!(f.pop(), Some((0, 1.0)));
        assert!(!f.contains(0));
        assert_eq!(f.len(), 2);
    }

    proptest! {
        #[test]
        fn pops_in_sorted_order(
            keys in prop::collection::vec(0.0f64..100.0, 1..40),
            cuts in prop::collection::vec((0usize..40, 0.0f64..1.0), 0..40),
        ) {
            let mut f = Frontier::with_slots(keys.len());
            let mut current = keys.clone();
            for (slot, &k) in keys.iter().enumerate() {
                f.insert(slot, k);
            }
            for (slot, frac) in cuts {
                let slot = slot % keys.len();
                let k = current[slot] * frac;
                f.decrease_key(slot, k);
                current[slot] = k;
            }
            let mut expected: Vec<(f64, usize)> = current.iter().copied().zip(0..).collect();
            expected.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let mut popped = Vec::new();
            while let Some((slot, k)) = f.pop() {
                popped.push((k, slot));
            }
            prop_assert_eq!(popped, expected);
        }
    }
}
