//! Time-keyed bucket queue.
//!
//! Behaves like a stable priority queue (ascending key, FIFO within equal
//! keys) but stores one FIFO bucket per distinct key. Workloads in this
//! domain have many entries sharing few distinct trigger times — whole
//! fleets of components ticking on a common clock — so the number of live
//! buckets stays tiny.

use std::collections::{BTreeMap, VecDeque};

use crate::time::Time;

pub struct BucketQueue<T> {
    buckets: BTreeMap<Time, VecDeque<T>>,
    len: usize,
}

impl<T> BucketQueue<T> {
    pub fn new() -> Self {
        BucketQueue {
            buckets: BTreeMap::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of distinct keys currently held.
    pub fn key_count(&self) -> usize {
        self.buckets.len()
    }

    pub fn push(&mut self, key: Time, item: T) {
        self.buckets.entry(key).or_default().push_back(item);
        self.len += 1;
    }

    /// Key of the earliest bucket, if any.
    pub fn peek_key(&self) -> Option<&Time> {
        self.buckets.keys().next()
    }

    /// Number of entries sharing the earliest key.
    pub fn front_len(&self) -> usize {
        self.buckets
            .values()
            .next()
            .map(|b| b.len())
            .unwrap_or(0)
    }

    /// Pop the oldest entry of the earliest bucket.
    pub fn pop(&mut self) -> Option<(Time, T)> {
        self.pop_at(0)
    }

    /// Pop the entry at `index` within the earliest bucket. Used by
    /// tie-break hooks to permute same-time execution order; `index` is
    /// clamped to the bucket.
    pub fn pop_at(&mut self, index: usize) -> Option<(Time, T)> {
        let key = self.buckets.keys().next()?.clone();
        let bucket = self.buckets.get_mut(&key).expect("bucket exists");
        let index = index.min(bucket.len() - 1);
        let item = bucket.remove(index).expect("index in range");
        if bucket.is_empty() {
            self.buckets.remove(&key);
        }
        self.len -= 1;
        Some((key, item))
    }
}

impl<T> Default for BucketQueue<T> {
    fn default() -> Self {
        BucketQueue::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_ascending_then_fifo() {
        let mut q = BucketQueue::new();
        q.push(Time::from_int(2), "c");
        q.push(Time::from_int(1), "a");
        q.push(Time::from_int(1), "b");
        assert_eq!(q.len(), 3);
        assert_eq!(q.key_count(), 2);
        assert_eq!(q.pop(), Some((Time::from_int(1), "a")));
        assert_eq!(q.pop(), Some((Time::from_int(1), "b")));
        assert_eq!(q.pop(), Some((Time::from_int(2), "c")));
        assert_eq!(q.pop(), None);
    }

    #[test]
    fn repeated_keys_share_a_bucket() {
        let mut q = BucketQueue::new();
        for i in 0..100 {
            q.push(Time::from_int(3), i);
        }
        assert_eq!(q.key_count(), 1);
        assert_eq!(q.len(), 100);
    }

    #[test]
    fn pop_at_permutes_within_bucket_only() {
        let mut q = BucketQueue::new();
        q.push(Time::from_int(1), "a");
        q.push(Time::from_int(1), "b");
        q.push(Time::from_int(2), "c");
        assert_eq!(q.pop_at(1), Some((Time::from_int(1), "b")));
        assert_eq!(q.pop_at(5), Some((Time::from_int(1), "a")));
        assert_eq!(q.pop_at(0), Some((Time::from_int(2), "c")));
    }

    /// Oracle check: pop order matches a stable naive priority queue over a
    /// random workload with few distinct keys.
    #[test]
    fn matches_stable_naive_queue() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);

        let mut bucketed = BucketQueue::new();
        // Naive oracle: (key, insertion seq) pairs, popped by linear scan for
        // the minimum key with the smallest sequence number.
        let mut naive: Vec<(i64, u64, u64)> = Vec::new();
        let mut seq = 0u64;

        let mut popped_bucketed = Vec::new();
        let mut popped_naive = Vec::new();

        for _ in 0..10_000 {
            if rng.gen_bool(0.55) || naive.is_empty() {
                let key = rng.gen_range(0..8);
                bucketed.push(Time::from_int(key), seq);
                naive.push((key, seq, seq));
                seq += 1;
            } else {
                let (kb, vb) = bucketed.pop().unwrap();
                let best = naive
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, (k, s, _))| (*k, *s))
                    .map(|(i, _)| i)
                    .unwrap();
                let (kn, _, vn) = naive.remove(best);
                popped_bucketed.push((kb, vb));
                popped_naive.push((Time::from_int(kn), vn));
            }
        }
        while let Some((kb, vb)) = bucketed.pop() {
            let best = naive
                .iter()
                .enumerate()
                .min_by_key(|(_, (k, s, _))| (*k, *s))
                .map(|(i, _)| i)
                .unwrap();
            let (kn, _, vn) = naive.remove(best);
            popped_bucketed.push((kb, vb));
            popped_naive.push((Time::from_int(kn), vn));
        }
        assert!(naive.is_empty());
        assert_eq!(popped_bucketed, popped_naive);
    }
}
