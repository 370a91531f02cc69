//! Fixed-length packed bitset used for document feature vectors and
//! clause output vectors.

/// A fixed-length bitset backed by u64 words. Bit `i` lives in word
/// `i / 64` at position `i % 64`; unused high bits of the last word are
/// kept zero so word-wise operations stay exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitset {
    len: usize,
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut b = Self::new(len);
        for &i in indices {
            b.set(i, true);
        }
        b
    }

    #[inline(always)]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline(always)]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range ({})", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline(always)]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range ({})", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    /// Bitwise OR of another set of the same length into this one.
    pub fn or_assign(&mut self, other: &Bitset) {
        assert_eq!(self.len, other.len, "bitset length mismatch");
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline(always)]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// Serializes to `ceil(len/8)` bytes, bit `i` of byte `k` holding
    /// bit `8k + i`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        let mut out = vec![0u8; n];
        for (k, byte) in out.iter_mut().enumerate() {
            *byte = (self.words[k / 8] >> ((k % 8) * 8)) as u8;
        }
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes). Fails if trailing bits
    /// beyond `len` are set.
    pub fn from_bytes(len: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut b = Self::new(len);
        for (k, &byte) in bytes.iter().enumerate() {
            b.words[k / 8] |= (byte as u64) << ((k % 8) * 8);
        }
        // reject set bits past the declared length
        let tail = b.words.len() * 64 - len;
        if tail > 0 && b.words.last().copied().unwrap_or(0) >> (64 - tail) != 0 {
            return None;
        }
        Some(b)
    }
}
