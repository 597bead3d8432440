//! Order-statistics multiset over `f64` with subtree sums.
//!
//! A treap stored in an arena. Every node caches the size and the sum of
//! its subtree, which gives rank selection and sums over rank ranges in
//! expected `O(log n)`.

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    key: f64,
    prio: u64,
    left: u32,
    right: u32,
    size: u32,
    sum: f64,
}

#[derive(Debug, Clone)]
pub struct RankTree {
    nodes: Vec<Node>,
    root: u32,
    prio_state: u64,
}

impl Default for RankTree {
    fn default() -> Self {
        Self::new()
    }
}

impl RankTree {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            root: NIL,
            prio_state: 0x2545_f491_4f6c_dd1d,
        }
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(capacity),
            ..Self::new()
        }
    }

    pub fn len(&self) -> usize {
        self.size(self.root) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.root == NIL
    }

    /// Sum of all stored values.
    pub fn total(&self) -> f64 {
        self.sum(self.root)
    }

    fn next_prio(&mut self) -> u64 {
        // xorshift64*
        let mut x = self.prio_state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.prio_state = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    #[inline]
    fn size(&self, n: u32) -> u32 {
        if n == NIL {
            0
        } else {
            self.nodes[n as usize].size
        }
    }

    #[inline]
    fn sum(&self, n: u32) -> f64 {
        if n == NIL {
            0.0
        } else {
            self.nodes[n as usize].sum
        }
    }

    fn pull(&mut self, n: u32) {
        let (l, r) = {
            let node = &self.nodes[n as usize];
            (node.left, node.right)
        };
        let size = self.size(l) + self.size(r) + 1;
        let sum = self.sum(l) + self.nodes[n as usize].key + self.sum(r);
        let node = &mut self.nodes[n as usize];
        node.size = size;
        node.sum = sum;
    }

    /// Splits `n` into keys `<= key` and keys `> key`.
    fn split(&mut self, n: u32, key: f64) -> (u32, u32) {
        if n == NIL {
            return (NIL, NIL);
        }
        if self.nodes[n as usize].key.total_cmp(&key).is_le() {
            let (l, r) = self.split(self.nodes[n as usize].right, key);
            self.nodes[n as usize].right = l;
            self.pull(n);
            (n, r)
        } else {
            let (l, r) = self.split(self.nodes[n as usize].left, key);
            self.nodes[n as usize].left = r;
            self.pull(n);
            (l, n)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let m = self.merge(self.nodes[a as usize].right, b);
            self.nodes[a as usize].right = m;
            self.pull(a);
            a
        } else {
            let m = self.merge(a, self.nodes[b as usize].left);
            self.nodes[b as usize].left = m;
            self.pull(b);
            b
        }
    }

    /// Inserts a value; equal values are kept as separate elements.
    ///
    /// # Panics
    /// On more than `u32::MAX - 1` elements.
    pub fn insert(&mut self, key: f64) {
        assert!(self.nodes.len() < NIL as usize, "rank tree is full");
        let id = self.nodes.len() as u32;
        let prio = self.next_prio();
        self.nodes.push(Node {
            key,
            prio,
            left: NIL,
            right: NIL,
            size: 1,
            sum: key,
        });
        let (l, r) = self.split(self.root, key);
        let l = self.merge(l, id);
        self.root = self.merge(l, r);
    }

    /// Value of rank `k` (0-based) in ascending order.
    pub fn select(&self, mut k: usize) -> Option<f64> {
        if k >= self.len() {
            return None;
        }
        let mut n = self.root;
        loop {
            let node = &self.nodes[n as usize];
            let left = self.size(node.left) as usize;
            if k < left {
                n = node.left;
            } else if k == left {
                return Some(node.key);
            } else {
                k -= left + 1;
                n = node.right;
            }
        }
    }

    /// Sum of the values with ranks in `lo..hi`; `hi` is clamped to `len`.
    ///
    /// Only subtrees lying entirely inside the range contribute cached sums,
    /// so no cancellation against excluded values occurs.
    pub fn range_sum(&self, lo: usize, hi: usize) -> f64 {
        let hi = hi.min(self.len());
        if lo >= hi {
            return 0.0;
        }
        self.range_sum_at(self.root, lo, hi)
    }

    fn range_sum_at(&self, n: u32, lo: usize, hi: usize) -> f64 {
        if n == NIL || lo >= hi {
            return 0.0;
        }
        let size = self.size(n) as usize;
        if lo == 0 && hi >= size {
            return self.sum(n);
        }
        let node = &self.nodes[n as usize];
        let left = self.size(node.left) as usize;
        let mut acc = 0.0;
        if lo < left {
            acc += self.range_sum_at(node.left, lo, hi.min(left));
        }
        if lo <= left && left < hi {
            acc += node.key;
        }
        if hi > left + 1 {
            acc += self.range_sum_at(node.right, lo.saturating_sub(left + 1), hi - left - 1);
        }
        acc
    }

    /// Sum of the `k` smallest values.
    pub fn prefix_sum(&self, k: usize) -> f64 {
        self.range_sum(0, k)
    }

    /// Values in ascending order.
    pub fn to_sorted_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = Vec::new();
        let mut n = self.root;
        while n != NIL || !stack.is_empty() {
            while n != NIL {
                stack.push(n);
                n = self.nodes[n as usize].left;
            }
            let top = stack.pop().unwrap();
            out.push(self.nodes[top as usize].key);
            n = self.nodes[top as usize].right;
        }
        out
    }
}
