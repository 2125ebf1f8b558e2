//! Packed GF(2) vectors and matrices.
//!
//! Everything downstream (Pauli algebra, tableaus, syndrome solves) runs on
//! 64-bit packed words, so this module keeps the representation deliberately
//! small: a `BitVec` is a length plus a `Vec<u64>`, a `BitMatrix` is row-major
//! with a fixed word stride per row.

/// Number of 64-bit words needed to hold `bits` bits.
pub fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Fixed-length bit vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut v = BitVec::zeros(len);
        for &i in ones {
            v.set(i, true);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Parity of the AND with `other`; the GF(2) inner product.
    pub fn dot(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        acc.count_ones() % 2 == 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    /// Indices of set bits, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// Row-major bit matrix over GF(2).
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[BitVec]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols);
            m.row_mut(i).copy_from_slice(r.words());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        (self.data[r * self.stride + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let mask = 1u64 << (c % 64);
        let w = &mut self.data[r * self.stride + c / 64];
        if v {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row_vec(&self, r: usize) -> BitVec {
        BitVec {
            len: self.cols,
            words: self.row(r).to_vec(),
        }
    }

    pub fn xor_rows(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * self.stride);
            (
                &mut lo[dst * self.stride..(dst + 1) * self.stride],
                &hi[..self.stride],
            )
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * self.stride);
            (
                &mut hi[..self.stride],
                &lo[src * self.stride..(src + 1) * self.stride],
            )
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= y;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for k in 0..self.stride {
            self.data.swap(a * self.stride + k, b * self.stride + k);
        }
    }

    /// Row-reduce in place; returns the pivot column of each pivot row.
    ///
    /// After the call the matrix is in reduced row echelon form: pivot
    /// columns contain a single 1.
    pub fn row_reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c)) else {
                continue;
            };
            self.swap_rows(r, p);
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    self.xor_rows(i, r);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().row_reduce().len()
    }

    /// Matrix-vector product over GF(2).
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.cols);
        let mut out = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0u64;
            for (a, b) in self.row(r).iter().zip(v.words()) {
                acc ^= a & b;
            }
            if acc.count_ones() % 2 == 1 {
                out.set(r, true);
            }
        }
        out
    }

    /// Solve `self * x = b`. Returns any solution, or `None` if inconsistent.
    pub fn solve(&self, b: &BitVec) -> Option<BitVec> {
        assert_eq!(b.len(), self.rows);
        let mut m = BitMatrix::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            m.row_mut(r)[..self.stride].copy_from_slice(self.row(r));
            if b.get(r) {
                m.set(r, self.cols, true);
            }
        }
        let pivots = m.row_reduce();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = BitVec::zeros(self.cols);
        for (r, &c) in pivots.iter().enumerate() {
            if m.get(r, self.cols) {
                x.set(c, true);
            }
        }
        Some(x)
    }

    /// Inverse of a square matrix, or `None` if singular.
    pub fn inverse(&self) -> Option<BitMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = BitMatrix::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                m.set(r, c, self.get(r, c));
            }
            m.set(r, n + r, true);
        }
        let pivots = m.row_reduce();
        if pivots.len() < n || pivots.iter().any(|&c| c >= n) {
            return None;
        }
        let mut inv = BitMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                inv.set(r, c, m.get(r, n + c));
            }
        }
        Some(inv)
    }
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                write!(f, "{}", if self.get(r, c) { '1' } else { '0' })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bitvec_basics() {
        let mut v = BitVec::zeros(130);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert_eq!(v.count_ones(), 3);
        assert_eq!(v.ones().collect::<Vec<_>>(), vec![0, 64, 129]);
        v.flip(64);
        assert!(!v.get(64));
    }

    #[test]
    fn solve_and_inverse() {
        // [[1,1,0],[0,1,1],[0,0,1]] is invertible.
        let rows = [
            BitVec::from_indices(3, &[0, 1]),
            BitVec::from_indices(3, &[1, 2]),
            BitVec::from_indices(3, &[2]),
        ];
        let m = BitMatrix::from_rows(&rows);
        let inv = m.inverse().unwrap();
        for i in 0..3 {
            let e = BitVec::from_indices(3, &[i]);
            let x = inv.mul_vec(&e);
            assert_eq!(m.mul_vec(&x), e);
        }
        let b = BitVec::from_indices(3, &[0, 2]);
        let x = m.solve(&b).unwrap();
        assert_eq!(m.mul_vec(&x), b);
    }

    #[test]
    fn singular_matrix_reports_none() {
        let rows = [
            BitVec::from_indices(2, &[0]),
            BitVec::from_indices(2, &[0]),
        ];
        let m = BitMatrix::from_rows(&rows);
        assert!(m.inverse().is_none());
        assert_eq!(m.rank(), 1);
        // Both equations read x0, so (1, 0) is inconsistent while (1, 1)
        // is solvable.
        let b = BitVec::from_indices(2, &[0]);
        assert!(m.solve(&b).is_none());
        let b2 = BitVec::from_indices(2, &[0, 1]);
        assert!(m.solve(&b2).is_some());
    }

    proptest! {
        #[test]
        fn row_reduce_preserves_row_space(bits in proptest::collection::vec(0u64..16, 4..8)) {
            let cols = 4;
            let rows: Vec<BitVec> = bits
                .iter()
                .map(|&b| {
                    let mut v = BitVec::zeros(cols);
                    v.words_mut()[0] = b;
                    v
                })
                .collect();
            let m = BitMatrix::from_rows(&rows);
            let mut red = m.clone();
            red.row_reduce();
            // Every original row must be expressible in the reduced basis,
            // checked by rank equality of stacked matrices.
            let mut stacked = Vec::new();
            for r in 0..m.rows() {
                stacked.push(m.row_vec(r));
            }
            for r in 0..red.rows() {
                stacked.push(red.row_vec(r));
            }
            prop_assert_eq!(BitMatrix::from_rows(&stacked).rank(), m.rank());
            prop_assert_eq!(red.rank(), m.rank());
        }

        #[test]
        fn solve_finds_consistent_solutions(seed in 0u64..1000) {
            // Build a random 6x4 matrix and a vector in its column space.
            let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = || {
                s ^= s >> 27;
                s = s.wrapping_mul(0x2545f4914f6cdd1d);
                s
            };
            let mut m = BitMatrix::zeros(6, 4);
            for r in 0..6 {
                m.row_mut(r)[0] = next() & 0xf;
            }
            let mut x = BitVec::zeros(4);
            x.words_mut()[0] = next() & 0xf;
            let b = m.mul_vec(&x);
            let sol = m.solve(&b).expect("consistent system");
            prop_assert_eq!(m.mul_vec(&sol), b);
        }
    }
}
