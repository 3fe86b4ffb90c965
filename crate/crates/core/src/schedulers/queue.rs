//! Indexed binary max-heap over dense item ids.

const ABSENT: usize = usize::MAX;

/// Max-priority queue over items `0..capacity` supporting O(log n)
/// insert, remove, priority change and pop.
///
/// Equal priorities pop in insertion order: every insert takes a fresh
/// sequence number and the smaller one wins. [`change_priority`] keeps the
/// item's sequence number, [`push`] does not.
///
/// [`change_priority`]: IndexedPriorityQueue::change_priority
/// [`push`]: IndexedPriorityQueue::push
#[derive(Debug, Clone)]
pub struct IndexedPriorityQueue {
    heap: Vec<usize>,
    position: Vec<usize>,
    priority: Vec<f64>,
    sequence: Vec<u64>,
    next_sequence: u64,
}

impl IndexedPriorityQueue {
    pub fn with_capacity(capacity: usize) -> Self {
        IndexedPriorityQueue {
            heap: Vec::with_capacity(capacity),
            position: vec![ABSENT; capacity],
            priority: vec![0.0; capacity],
            sequence: vec![0; capacity],
            next_sequence: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.position[item] != ABSENT
    }

    pub fn priority(&self, item: usize) -> Option<f64> {
        self.contains(item).then(|| self.priority[item])
    }

    /// Inserts an absent item. Panics if it is already queued or the
    /// priority is NaN.
    pub fn insert(&mut self, item: usize, priority: f64) {
        assert!(!self.contains(item), "item {item} already queued");
        assert!(!priority.is_nan(), "NaN priority for item {item}");
        self.priority[item] = priority;
        self.sequence[item] = self.next_sequence;
        self.next_sequence += 1;
        self.position[item] = self.heap.len();
        self.heap.push(item);
        self.sift_up(self.heap.len() - 1);
    }

    /// Removes `item` if present, returning its priority.
    pub fn remove(&mut self, item: usize) -> Option<f64> {
        let pos = self.position[item];
        if pos == ABSENT {
            return None;
        }
        let last = self.heap.len() - 1;
        self.swap(pos, last);
        self.heap.pop();
        self.position[item] = ABSENT;
        if pos < self.heap.len() {
            self.sift_down(pos);
            self.sift_up(pos);
        }
        Some(self.priority[item])
    }

    /// Replaces any queued entry for `item` with a fresh one.
    pub fn push(&mut self, item: usize, priority: f64) -> Option<f64> {
        let old = self.remove(item);
        self.insert(item, priority);
        old
    }

    /// Changes the priority of a queued item, keeping its tie-break rank.
    pub fn change_priority(&mut self, item: usize, priority: f64) {
        assert!(self.contains(item), "item {item} not queued");
        assert!(!priority.is_nan(), "NaN priority for item {item}");
        let old = self.priority[item];
        self.priority[item] = priority;
        let pos = self.position[item];
        if priority > old {
            self.sift_up(pos);
        } else {
            self.sift_down(pos);
        }
    }

    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&i| (i, self.priority[i]))
    }

    pub fn pop(&mut self) -> Option<(usize, f64)> {
        let (item, priority) = self.peek()?;
        self.remove(item);
        Some((item, priority))
    }

    #[inline]
    fn before(&self, a: usize, b: usize) -> bool {
        let (pa, pb) = (self.priority[a], self.priority[b]);
        pa > pb || (pa == pb && self.sequence[a] < self.sequence[b])
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.position[self.heap[i]] = i;
        self.position[self.heap[j]] = j;
    }

    fn sift_up(&mut self, mut pos: usize) {
        while pos > 0 {
            let parent = (pos - 1) / 2;
            if !self.before(self.heap[pos], self.heap[parent]) {
                break;
            }
            self.swap(pos, parent);
            pos = parent;
        }
    }

    fn sift_down(&mut self, mut pos: usize) {
        loop {
            let left = 2 * pos + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let mut best = left;
            if right < self.heap.len() && self.before(self.heap[right], self.heap[left]) {
                best = right;
            }
            if !self.before(self.heap[best], self.heap[pos]) {
                break;
            }
            self.swap(pos, best);
            pos = best;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pops_in_priority_then_fifo_order() {
        let mut q = IndexedPriorityQueue::with_capacity(6);
        q.insert(3, 1.0);
        q.insert(0, 2.0);
        q.insert(5, 1.0);
        q.insert(1, 0.0);
        q.insert(2, 1.0);
        let order: Vec<usize> = std::iter::from_fn(|| q.pop().map(|(i, _)| i)).collect();
        assert_eq!(order, vec![0, 3, 5, 2, 1]);
    }

    #[test]
    fn push_refreshes_tie_break() {
        let mut q = IndexedPriorityQueue::with_capacity(3);
        q.insert(0, 1.0);
        q.insert(1, 1.0);
        assert_eq!(q.push(0, 1.0), Some(1.0));
        assert_eq!(q.pop(), Some((1, 1.0)));
        q.insert(2, 1.0);
        q.change_priority(0, 1.0);
        assert_eq!(q.pop(), Some((0, 1.0)));
    }

    #[test]
    fn remove_and_change() {
        let mut q = IndexedPriorityQueue::with_capacity(4);
        for i in 0..4 {
            q.insert(i, i as f64);
        }
        assert_eq!(q.remove(3), Some(3.0));
        assert_eq!(q.remove(3), None);
        q.change_priority(0, 10.0);
        assert_eq!(q.peek(), Some((0, 10.0)));
        q.change_priority(0, -1.0);
        assert_eq!(q.peek(), Some((2, 2.0)));
        assert_eq!(q.priority(0), Some(-1.0));
        assert_eq!(q.len(), 3);
    }

    #[test]
    #[should_panic]
    fn double_insert_panics() {
        let mut q = IndexedPriorityQueue::with_capacity(2);
        q.insert(0, 1.0);
        q.insert(0, 2.0);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Push(usize, u8),
        Change(usize, u8),
        Remove(usize),
        Pop,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0usize..16, 0u8..6).prop_map(|(i, p)| Op::Push(i, p)),
            (0usize..16, 0u8..6).prop_map(|(i, p)| Op::Change(i, p)),
            (0usize..16).prop_map(Op::Remove),
            Just(Op::Pop),
        ]
    }

    proptest! {
        #[test]
        fn agrees_with_linear_scan_model(ops in prop::collection::vec(op(), 1..200)) {
            let mut q = IndexedPriorityQueue::with_capacity(16);
            // model: item -> (priority, sequence)
            let mut model: Vec<Option<(f64, u64)>> = vec![None; 16];
            let mut seq = 0u64;
            for op in ops {
                match op {
                    Op::Push(i, p) => {
                        q.push(i, p as f64);
                        model[i] = Some((p as f64, seq));
                        seq += 1;
                    }
                    Op::Change(i, p) => {
                        if let Some((_, s)) = model[i] {
                            q.change_priority(i, p as f64);
                            model[i] = Some((p as f64, s));
                        }
                    }
                    Op::Remove(i) => {
                        prop_assert_eq!(q.remove(i), model[i].map(|m| m.0));
                        model[i] = None;
                    }
                    Op::Pop => {
                        let expected = model
                            .iter()
                            .enumerate()
                            .filter_map(|(i, m)| m.map(|(p, s)| (i, p, s)))
                            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.2.cmp(&a.2)));
                        let got = q.pop();
                        prop_assert_eq!(got, expected.map(|(i, p, _)| (i, p)));
                        if let Some((i, _, _)) = expected {
                            model[i] = None;
                        }
                    }
                }
                prop_assert_eq!(q.len(), model.iter().filter(|m| m.is_some()).count());
            }
        }
    }
}
