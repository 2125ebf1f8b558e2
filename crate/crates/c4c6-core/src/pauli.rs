//! Pauli products in the binary symplectic representation.
//!
//! A Pauli on `n` qubits is a length-`2n` bit vector with the per-qubit
//! (x, z) pair interleaved: bit `2q` is the X component on qubit `q`, bit
//! `2q + 1` the Z component. I maps to 00, X to 10, Z to 01, Y to 11, so
//! `"XIY"` is `[1 0 0 0 1 1]`. Interleaving keeps both components of a qubit
//! inside one machine word, which makes the symplectic product a handful of
//! mask operations.

use crate::gf2::{BitMatrix, BitVec};
use thiserror::Error;

/// Mask of the even (X-component) bit positions inside a word.
pub const EVEN_BITS: u64 = 0x5555_5555_5555_5555;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliParseError {
    #[error("invalid Pauli character {0:?} (expected I, X, Y or Z)")]
    BadChar(char),
    #[error("empty Pauli string")]
    Empty,
}

/// Single-qubit Pauli kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn xz(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_xz(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

/// Phaseless Pauli product on `n` qubits.
///
/// Signs are tracked separately where they matter (tableau rows); error
/// frames and check matrices only need the binary part.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliProduct {
    n: usize,
    bits: BitVec,
}

impl PauliProduct {
    pub fn identity(n: usize) -> Self {
        PauliProduct {
            n,
            bits: BitVec::zeros(2 * n),
        }
    }

    pub fn from_bits(n: usize, bits: BitVec) -> Self {
        assert_eq!(bits.len(), 2 * n);
        PauliProduct { n, bits }
    }

    /// Parse from a string like `"XIYZ"`; qubit 0 is the leftmost character.
    pub fn parse(s: &str) -> Result<Self, PauliParseError> {
        if s.is_empty() {
            return Err(PauliParseError::Empty);
        }
        let mut p = PauliProduct::identity(s.len());
        for (q, ch) in s.chars().enumerate() {
            let kind = match ch {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => return Err(PauliParseError::BadChar(other)),
            };
            p.set(q, kind);
        }
        Ok(p)
    }

    pub fn single(n: usize, q: usize, kind: Pauli) -> Self {
        let mut p = PauliProduct::identity(n);
        p.set(q, kind);
        p
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn x_bit(&self, q: usize) -> bool {
        self.bits.get(2 * q)
    }

    #[inline]
    pub fn z_bit(&self, q: usize) -> bool {
        self.bits.get(2 * q + 1)
    }

    #[inline]
    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_xz(self.x_bit(q), self.z_bit(q))
    }

    pub fn set(&mut self, q: usize, kind: Pauli) {
        let (x, z) = kind.xz();
        self.bits.set(2 * q, x);
        self.bits.set(2 * q + 1, z);
    }

    pub fn set_x(&mut self, q: usize, v: bool) {
        self.bits.set(2 * q, v);
    }

    pub fn set_z(&mut self, q: usize, v: bool) {
        self.bits.set(2 * q + 1, v);
    }

    pub fn is_identity(&self) -> bool {
        self.bits.is_zero()
    }

    /// Number of qubits acted on non-trivially.
    pub fn weight(&self) -> usize {
        self.bits
            .words()
            .iter()
            .map(|&w| ((w | (w >> 1)) & EVEN_BITS).count_ones() as usize)
            .sum()
    }

    /// Qubits acted on non-trivially, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.get(q) != Pauli::I).collect()
    }

    /// Group product (bitwise XOR); phases are not tracked here.
    pub fn mul_assign(&mut self, other: &PauliProduct) {
        assert_eq!(self.n, other.n);
        self.bits.xor_assign(&other.bits);
    }

    pub fn mul(&self, other: &PauliProduct) -> PauliProduct {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    /// Symplectic product: 1 if the two products anticommute.
    ///
    /// With interleaved (x, z) pairs this is
    /// `parity(ax & bz) xor parity(az & bx)` where the component extraction
    /// reduces to one shift and mask per word; pairs never straddle a word
    /// boundary because words hold 32 aligned pairs.
    pub fn symplectic(&self, other: &PauliProduct) -> bool {
        assert_eq!(self.n, other.n);
        let mut acc = 0u64;
        for (&a, &b) in self.bits.words().iter().zip(other.bits.words()) {
            acc ^= a & (b >> 1) & EVEN_BITS;
            acc ^= (a >> 1) & b & EVEN_BITS;
        }
        acc.count_ones() % 2 == 1
    }

    pub fn commutes(&self, other: &PauliProduct) -> bool {
        !self.symplectic(other)
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut BitVec {
        &mut self.bits
    }

    /// Embed into a larger register with this product's qubit `i` placed at
    /// `map[i]`.
    pub fn embed(&self, n_total: usize, map: &[usize]) -> PauliProduct {
        assert_eq!(map.len(), self.n);
        let mut out = PauliProduct::identity(n_total);
        for q in 0..self.n {
            out.set(map[q], self.get(q));
        }
        out
    }
}

impl std::fmt::Debug for PauliProduct {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self)
    }
}

impl std::fmt::Display for PauliProduct {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for q in 0..self.n {
            let ch = match self.get(q) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{}", ch)?;
        }
        Ok(())
    }
}

/// A list of commuting Pauli products interpreted as stabilizer checks.
#[derive(Clone, Debug)]
pub struct CheckMatrix {
    n: usize,
    checks: Vec<PauliProduct>,
}

impl CheckMatrix {
    pub fn new(n: usize, checks: Vec<PauliProduct>) -> Self {
        for c in &checks {
            assert_eq!(c.num_qubits(), n);
        }
        CheckMatrix { n, checks }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }

    pub fn checks(&self) -> &[PauliProduct] {
        &self.checks
    }

    /// All checks pairwise commute.
    pub fn is_abelian(&self) -> bool {
        for i in 0..self.checks.len() {
            for j in (i + 1)..self.checks.len() {
                if self.checks[i].symplectic(&self.checks[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Checks are independent as GF(2) vectors.
    pub fn is_independent(&self) -> bool {
        let rows: Vec<BitVec> = self.checks.iter().map(|c| c.bits().clone()).collect();
        BitMatrix::from_rows(&rows).rank() == self.checks.len()
    }

    /// Syndrome of an error: bit `i` set iff check `i` anticommutes with it.
    pub fn syndrome(&self, err: &PauliProduct) -> BitVec {
        let mut s = BitVec::zeros(self.checks.len());
        for (i, c) in self.checks.iter().enumerate() {
            if c.symplectic(err) {
                s.set(i, true);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_display_roundtrip() {
        let p = PauliProduct::parse("XIYZ").unwrap();
        assert_eq!(p.to_string(), "XIYZ");
        assert!(p.x_bit(0) && !p.z_bit(0));
        assert!(p.x_bit(2) && p.z_bit(2));
        assert!(!p.x_bit(3) && p.z_bit(3));
        assert_eq!(p.weight(), 3);
        assert_eq!(PauliProduct::parse("XQ"), Err(PauliParseError::BadChar('Q')));
    }

    #[test]
    fn interleaved_layout_matches_convention() {
        // "XIY" must be bits [1,0, 0,0, 1,1].
        let p = PauliProduct::parse("XIY").unwrap();
        let expect = [true, false, false, false, true, true];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(p.bits().get(i), e, "bit {}", i);
        }
    }

    #[test]
    fn symplectic_known_cases() {
        let x = PauliProduct::parse("X").unwrap();
        let z = PauliProduct::parse("Z").unwrap();
        let y = PauliProduct::parse("Y").unwrap();
        assert!(x.symplectic(&z));
        assert!(x.symplectic(&y));
        assert!(z.symplectic(&y));
        assert!(!x.symplectic(&x));

        let xx = PauliProduct::parse("XX").unwrap();
        let zz = PauliProduct::parse("ZZ").unwrap();
        assert!(!xx.symplectic(&zz));
        let xi = PauliProduct::parse("XI").unwrap();
        assert!(xi.symplectic(&zz));
    }

    #[test]
    fn c4_checks_are_abelian_and_independent() {
        let m = CheckMatrix::new(
            4,
            vec![
                PauliProduct::parse("XXXX").unwrap(),
                PauliProduct::parse("ZZZZ").unwrap(),
            ],
        );
        assert!(m.is_abelian());
        assert!(m.is_independent());
        let err = PauliProduct::parse("IXII").unwrap();
        let s = m.syndrome(&err);
        assert!(!s.get(0) && s.get(1));
    }

    fn arb_pauli(n: usize) -> impl Strategy<Value = PauliProduct> {
        proptest::collection::vec(0u8..4, n).prop_map(move |kinds| {
            let mut p = PauliProduct::identity(n);
            for (q, k) in kinds.iter().enumerate() {
                p.set(
                    q,
                    match k {
                        0 => Pauli::I,
                        1 => Pauli::X,
                        2 => Pauli::Y,
                        _ => Pauli::Z,
                    },
                );
            }
            p
        })
    }

    proptest! {
        #[test]
        fn symplectic_is_symmetric_and_bilinear(
            a in arb_pauli(9), b in arb_pauli(9), c in arb_pauli(9)
        ) {
            prop_assert_eq!(a.symplectic(&b), b.symplectic(&a));
            // s(a, b*c) = s(a,b) xor s(a,c)
            prop_assert_eq!(
                a.symplectic(&b.mul(&c)),
                a.symplectic(&b) ^ a.symplectic(&c)
            );
            prop_assert!(!a.symplectic(&a));
        }

        #[test]
        fn symplectic_matches_per_qubit_count(a in arb_pauli(7), b in arb_pauli(7)) {
            // Anticommute iff an odd number of qubit positions hold distinct
            // non-identity Paulis.
            let mut odd = false;
            for q in 0..7 {
                let (pa, pb) = (a.get(q), b.get(q));
                if pa != Pauli::I && pb != Pauli::I && pa != pb {
                    odd = !odd;
                }
            }
            prop_assert_eq!(a.symplectic(&b), odd);
        }

        #[test]
        fn parse_display_roundtrip_prop(s in "[IXYZ]{1,40}") {
            let p = PauliProduct::parse(&s).unwrap();
            prop_assert_eq!(p.to_string(), s);
        }
    }
}
