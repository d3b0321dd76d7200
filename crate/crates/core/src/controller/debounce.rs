//! Consensus debounce over the most recent distance readings.

/// Fixed-capacity ring of bucketed distance readings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DebounceBuffer {
    ring: Vec<u32>,
    capacity: usize,
    next: usize,
}

impl DebounceBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "debounce buffer needs capacity >= 1");
        Self {
            ring: Vec::with_capacity(capacity),
            capacity,
            next: 0,
        }
    }

    /// Buffer pre-filled with `values`, oldest first.
    pub fn with_contents(capacity: usize, values: &[u32]) -> Self {
        let mut buf = Self::new(capacity);
        for &v in values {
            buf.insert(v);
        }
        buf
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn clear(&mut self) {
        self.ring.clear();
        self.next = 0;
    }

    fn insert(&mut self, value: u32) {
        if self.ring.len() < self.capacity {
            self.ring.push(value);
        } else {
            self.ring[self.next] = value;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Contents from newest to oldest.
    pub fn newest_first(&self) -> impl Iterator<Item = u32> + '_ {
        let n = self.ring.len();
        let newest = (self.next + self.capacity - 1) % self.capacity;
        (0..n).map(move |k| self.ring[(newest + n - k) % n])
    }

    /// Contents from oldest to newest.
    pub fn oldest_first(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.newest_first().collect();
        v.reverse();
        v
    }

    /// Bucket `distance_mm`, insert it evicting the oldest reading, and return
    /// the stable distance.
    ///
    /// The most frequent bucket wins if its count reaches `threshold`; equally
    /// frequent buckets resolve to the most recently inserted one. Without a
    /// consensus the new (bucketed) reading passes through.
    pub fn push(&mut self, distance_mm: u32, threshold: usize, bucket_mm: u32) -> u32 {
        let bucketed = bucket(distance_mm, bucket_mm);
        self.insert(bucketed);

        // (value, count) in order of most recent occurrence
        let mut tally: Vec<(u32, usize)> = Vec::with_capacity(self.ring.len());
        for v in self.newest_first() {
            match tally.iter_mut().find(|(value, _)| *value == v) {
                Some((_, count)) => *count += 1,
                None => tally.push((v, 1)),
            }
        }
        let mut best: Option<(u32, usize)> = None;
        for &(v, c) in &tally {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((v, c));
            }
        }
        match best {
            Some((v, c)) if c >= threshold => v,
            _ => bucketed,
        }
    }
}

pub fn bucket(distance_mm: u32, bucket_mm: u32) -> u32 {
    let b = bucket_mm.max(1);
    distance_mm / b * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimous_buffer() {
        let mut b = DebounceBuffer::with_contents(5, &[250; 5]);
        assert_eq!(b.push(250, 3, 10), 250);
    }

    #[test]
    fn consensus_suppresses_minority() {
        let mut b = DebounceBuffer::with_contents(5, &[250, 250, 250, 310, 250]);
        assert_eq!(b.push(310, 3, 10), 250);
        // ring is now [250, 250, 310, 250, 310]
        assert_eq!(b.oldest_first(), vec![250, 250, 310, 250, 310]);
    }

    #[test]
    fn no_consensus_accepts_new_value() {
        let mut b = DebounceBuffer::with_contents(5, &[100, 200, 300, 400, 500]);
        assert_eq!(b.push(600, 3, 10), 600);
    }

    #[test]
    fn readings_are_bucketed() {
        let mut b = DebounceBuffer::new(5);
        assert_eq!(b.push(257, 3, 10), 250);
        assert_eq!(b.push(251, 3, 10), 250);
        assert_eq!(b.push(249, 3, 10), 240);
        assert_eq!(b.push(259, 3, 10), 250);
    }

    #[test]
    fn tie_goes_to_most_recent() {
        // threshold 2: both 10 and 20 appear twice; 20 was inserted last
        let mut b = DebounceBuffer::with_contents(4, &[10, 10, 20]);
        assert_eq!(b.push(20, 2, 1), 20);
        let mut b = DebounceBuffer::with_contents(4, &[20, 10, 20]);
        assert_eq!(b.push(10, 2, 1), 10);
    }

    #[test]
    fn length_never_exceeds_capacity() {
        let mut b = DebounceBuffer::new(3);
        for v in 0..20 {
            b.push(v * 10, 2, 10);
            assert!(b.len() <= 3);
        }
        assert_eq!(b.oldest_first(), vec![170, 180, 190]);
    }

    #[test]
    fn capacity_one() {
        let mut b = DebounceBuffer::new(1);
        assert_eq!(b.push(120, 1, 10), 120);
        assert_eq!(b.push(340, 1, 10), 340);
        assert_eq!(b.len(), 1);
    }
}
