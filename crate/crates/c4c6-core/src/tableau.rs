//! Phase-exact stabilizer tableau.
//!
//! The tableau holds `n` signed stabilizer generators for an `n`-qubit
//! register that is always in a fully stabilized (pure) state. Each row is
//! `i^p X^x Z^z` with `p` mod 4; Hermiticity pins `p = |x & z|` mod 2.
//!
//! Measurements use the canonical-outcome convention: the tableau itself
//! always collapses onto the +1 eigenstate of the measured operator. Batched
//! Pauli-frame trials on top of this tableau reconstruct their individual
//! outcomes and post-measurement frames from the returned
//! [`MeasureResult`]; see the machine module.
//!
//! For deterministic measurements the measured operator must be expressed as
//! a product of rows to recover its sign. To make that fast the tableau
//! maintains (lazily, rebuilt on demand) an anchored canonical form: every
//! qubit is assigned one coordinate (X side or Z side) such that exactly one
//! row has a 1 there, and that row "anchors" the qubit. Row products can then
//! be peeled off one anchor coordinate at a time.

use crate::gf2::BitVec;
use crate::pauli::{PauliProduct, EVEN_BITS};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    /// Phase exponent: the row is `i^phase * X^x Z^z`.
    pub phase: u8,
    /// Interleaved (x, z) bits, length 2n.
    pub bits: BitVec,
}

impl Row {
    pub fn identity(n: usize) -> Self {
        Row {
            phase: 0,
            bits: BitVec::zeros(2 * n),
        }
    }

    pub fn single(n: usize, q: usize, x: bool, z: bool) -> Self {
        let mut bits = BitVec::zeros(2 * n);
        bits.set(2 * q, x);
        bits.set(2 * q + 1, z);
        Row { phase: 0, bits }
    }

    fn y_count(&self) -> u32 {
        self.bits
            .words()
            .iter()
            .map(|&w| (w & (w >> 1) & EVEN_BITS).count_ones())
            .sum()
    }

    /// Multiply on the right: `self <- self * other`.
    ///
    /// `(i^pa X^xa Z^za)(i^pb X^xb Z^zb) = i^(pa+pb) (-1)^(za.xb) X^(xa^xb) Z^(za^zb)`.
    pub fn mul_assign(&mut self, other: &Row) {
        let mut za_xb = 0u64;
        for (&a, &b) in self.bits.words().iter().zip(other.bits.words()) {
            za_xb ^= (a >> 1) & b & EVEN_BITS;
        }
        let swap = (za_xb.count_ones() & 1) as u8;
        self.phase = (self.phase + other.phase + 2 * swap) & 3;
        self.bits.xor_assign(&other.bits);
    }

    /// Sign of the row as a product of single-qubit Paulis (I, X, Y, Z):
    /// `i^phase X^x Z^z = sign * prod_q P_q`. Requires Hermiticity.
    pub fn sign(&self) -> bool {
        let y = self.y_count();
        let e = (self.phase as i32 - y as i32).rem_euclid(4);
        debug_assert!(e == 0 || e == 2, "non-Hermitian row");
        e == 2
    }

    pub fn pauli(&self, n: usize) -> PauliProduct {
        PauliProduct::from_bits(n, self.bits.clone())
    }
}

/// Basis of a single-qubit measurement or preparation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

/// Outcome of a canonical measurement on the shared tableau.
#[derive(Clone, Debug)]
pub enum MeasureResult {
    /// The operator anticommuted with the stabilizer group. The tableau
    /// collapsed onto the +1 branch. `a` is the (pre-collapse) anticommuting
    /// generator that maps the +1 branch onto the -1 branch: trials whose
    /// coin lands on the -1 branch multiply their error frame by `a`.
    Random { a: PauliProduct },
    /// The operator is in the group up to sign; `sigma` is 1 if the group
    /// contains the negative of the operator (canonical outcome bit).
    Deterministic { sigma: bool },
}

#[derive(Clone)]
pub struct Tableau {
    n: usize,
    rows: Vec<Row>,
    dirty: bool,
    /// Per qubit: anchored on the Z coordinate (true) or the X coordinate.
    label_zside: Vec<bool>,
    anchor_row: Vec<usize>,
    anchor_qubit: Vec<usize>,
}

impl Tableau {
    /// All qubits in |0>.
    pub fn new(n: usize) -> Self {
        let rows = (0..n).map(|q| Row::single(n, q, false, true)).collect();
        Tableau {
            n,
            rows,
            dirty: false,
            label_zside: vec![true; n],
            anchor_row: (0..n).collect(),
            anchor_qubit: (0..n).collect(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Append `extra` fresh qubits in |0>.
    pub fn grow(&mut self, extra: usize) {
        let old_n = self.n;
        let new_n = old_n + extra;
        let mut rows: Vec<Row> = Vec::with_capacity(new_n);
        for r in &self.rows {
            let mut bits = BitVec::zeros(2 * new_n);
            for (w, &v) in bits.words_mut().iter_mut().zip(r.bits.words()) {
                *w = v;
            }
            rows.push(Row {
                phase: r.phase,
                bits,
            });
        }
        for q in old_n..new_n {
            rows.push(Row::single(new_n, q, false, true));
        }
        self.rows = rows;
        self.n = new_n;
        self.label_zside.resize(new_n, true);
        for q in old_n..new_n {
            self.anchor_row.push(q);
            self.anchor_qubit.push(q);
        }
    }

    pub fn h(&mut self, q: usize) {
        for r in &mut self.rows {
            let x = r.bits.get(2 * q);
            let z = r.bits.get(2 * q + 1);
            if x && z {
                r.phase = (r.phase + 2) & 3;
            }
            r.bits.set(2 * q, z);
            r.bits.set(2 * q + 1, x);
        }
        // The anchored coordinate of q swaps sides; the single-1 property is
        // preserved, so canonical form survives.
        if !self.dirty {
            self.label_zside[q] = !self.label_zside[q];
        }
    }

    pub fn s(&mut self, q: usize) {
        for r in &mut self.rows {
            let x = r.bits.get(2 * q);
            if x {
                let z = r.bits.get(2 * q + 1);
                r.bits.set(2 * q + 1, !z);
                r.phase = (r.phase + 1) & 3;
            }
        }
        // The Z column of q changed by the X column; only an anchored Z
        // coordinate can break.
        if !self.dirty && self.label_zside[q] {
            self.dirty = true;
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        assert_ne!(c, t);
        // In the global-phase convention i^p X^x Z^z the X part and Z part
        // conjugate separately (X_c -> X_c X_t, Z_t -> Z_c Z_t) and stay in
        // canonical order, so no phase ever appears. (The per-qubit signed
        // Pauli convention of `conjugate_pauli` does pick up signs; the two
        // bookkeepings differ by the Y count.)
        for r in &mut self.rows {
            let xc = r.bits.get(2 * c);
            let zc = r.bits.get(2 * c + 1);
            let xt = r.bits.get(2 * t);
            let zt = r.bits.get(2 * t + 1);
            r.bits.set(2 * t, xt ^ xc);
            r.bits.set(2 * c + 1, zc ^ zt);
        }
        // X column of t and Z column of c changed.
        if !self.dirty && (!self.label_zside[t] || self.label_zside[c]) {
            self.dirty = true;
        }
    }

    /// Relabel qubits: qubit `q` moves to `perm[q]`.
    pub fn perm(&mut self, perm: &[usize]) {
        assert_eq!(perm.len(), self.n);
        for r in &mut self.rows {
            let mut bits = BitVec::zeros(2 * self.n);
            for q in 0..self.n {
                if r.bits.get(2 * q) {
                    bits.set(2 * perm[q], true);
                }
                if r.bits.get(2 * q + 1) {
                    bits.set(2 * perm[q] + 1, true);
                }
            }
            r.bits = bits;
        }
        if !self.dirty {
            let mut label = vec![false; self.n];
            let mut arow = vec![0; self.n];
            for q in 0..self.n {
                label[perm[q]] = self.label_zside[q];
                arow[perm[q]] = self.anchor_row[q];
            }
            self.label_zside = label;
            self.anchor_row = arow;
            for r in 0..self.n {
                self.anchor_qubit[r] = perm[self.anchor_qubit[r]];
            }
        }
    }

    /// Conjugate the state by a Pauli: rows keep their bits, phases flip
    /// where they anticommute.
    pub fn apply_pauli(&mut self, p: &PauliProduct) {
        for r in &mut self.rows {
            let rp = PauliProduct::from_bits(self.n, r.bits.clone());
            if rp.symplectic(p) {
                r.phase = (r.phase + 2) & 3;
            }
        }
    }

    /// Canonical measurement of qubit `q` in `basis`.
    pub fn measure(&mut self, q: usize, basis: Basis) -> MeasureResult {
        let probe = match basis {
            Basis::Z => 2 * q,
            Basis::X => 2 * q + 1,
        };
        let anti: Vec<usize> = (0..self.n)
            .filter(|&r| self.rows[r].bits.get(probe))
            .collect();
        if let Some((&first, rest)) = anti.split_first() {
            let a = self.rows[first].clone();
            for &j in rest {
                self.rows[j].mul_assign(&a);
            }
            self.rows[first] = match basis {
                Basis::Z => Row::single(self.n, q, false, true),
                Basis::X => Row::single(self.n, q, true, false),
            };
            self.dirty = true;
            MeasureResult::Random {
                a: PauliProduct::from_bits(self.n, a.bits),
            }
        } else {
            let m = match basis {
                Basis::Z => Row::single(self.n, q, false, true),
                Basis::X => Row::single(self.n, q, true, false),
            };
            let sigma = self.membership_sign(&m);
            MeasureResult::Deterministic { sigma }
        }
    }

    /// Prepare qubit `q` in the +1 eigenstate of `basis`, assuming it is
    /// currently disentangled (its anchor row acts on it alone).
    pub fn prepare(&mut self, q: usize, basis: Basis) {
        self.ensure_canonical();
        let r = self.anchor_row[q];
        let support_one = {
            let row = &self.rows[r];
            let mut count = 0;
            for s in 0..self.n {
                if row.bits.get(2 * s) || row.bits.get(2 * s + 1) {
                    count += 1;
                }
            }
            count == 1
        };
        assert!(support_one, "prepare on entangled qubit {}", q);
        self.rows[r] = match basis {
            Basis::Z => Row::single(self.n, q, false, true),
            Basis::X => Row::single(self.n, q, true, false),
        };
        self.label_zside[q] = matches!(basis, Basis::Z);
    }

    /// Sign of operator `m` (given with phase 0) in the stabilizer group:
    /// false if `+m` is in the group, true if `-m` is. Panics if neither.
    pub fn membership_sign(&mut self, m: &Row) -> bool {
        self.ensure_canonical();
        let mut res = m.bits.clone();
        let mut acc = Row::identity(self.n);
        // Peel anchor coordinates; each multiply clears one and can only set
        // non-anchor coordinates.
        loop {
            let mut progressed = false;
            for q in 0..self.n {
                let coord = if self.label_zside[q] { 2 * q + 1 } else { 2 * q };
                if res.get(coord) {
                    let row = self.rows[self.anchor_row[q]].clone();
                    acc.mul_assign(&row);
                    res.xor_assign(&row.bits);
                    progressed = true;
                }
            }
            if res.is_zero() {
                break;
            }
            assert!(progressed, "operator is not in the stabilizer group");
        }
        debug_assert_eq!(acc.bits, m.bits);
        // acc = i^p X^x Z^z equals plus or minus m.
        let rel = (acc.phase as i32 - m.phase as i32).rem_euclid(4);
        assert!(rel == 0 || rel == 2, "non-Hermitian membership");
        rel == 2
    }

    pub fn ensure_canonical(&mut self) {
        if self.dirty {
            self.recanonicalize();
        }
    }

    /// Rebuild the anchored canonical form by full phase-tracked Gaussian
    /// elimination: first reduce on X coordinates (pivot qubits anchored on
    /// the X side), then reduce the remaining pure-Z rows on the Z
    /// coordinates of the leftover qubits.
    pub fn recanonicalize(&mut self) {
        let n = self.n;
        let mut r = 0usize;
        let mut anchored: Vec<Option<usize>> = vec![None; n]; // qubit -> row
        let mut zside = vec![true; n];
        for q in 0..n {
            let Some(i) = (r..n).find(|&i| self.rows[i].bits.get(2 * q)) else {
                continue;
            };
            self.rows.swap(r, i);
            let pivot = self.rows[r].clone();
            for j in 0..n {
                if j != r && self.rows[j].bits.get(2 * q) {
                    self.rows[j].mul_assign(&pivot);
                }
            }
            anchored[q] = Some(r);
            zside[q] = false;
            r += 1;
        }
        for q in 0..n {
            if anchored[q].is_some() {
                continue;
            }
            let i = (r..n)
                .find(|&i| self.rows[i].bits.get(2 * q + 1))
                .expect("pure-Z rows must span the non-pivot qubits");
            self.rows.swap(r, i);
            let pivot = self.rows[r].clone();
            for j in 0..n {
                if j != r && self.rows[j].bits.get(2 * q + 1) {
                    self.rows[j].mul_assign(&pivot);
                }
            }
            anchored[q] = Some(r);
            zside[q] = true;
            r += 1;
        }
        assert_eq!(r, n, "stabilizer group lost rank");
        for q in 0..n {
            let row = anchored[q].unwrap();
            self.anchor_row[q] = row;
            self.anchor_qubit[row] = q;
        }
        self.label_zside = zside;
        self.dirty = false;
    }

    /// Extract the rows describing `region` (which must be a tensor factor),
    /// remapped so that `region[i]` becomes local qubit `i`. The extracted
    /// qubits are reset to |0> in the tableau.
    pub fn take_region(&mut self, region: &[usize]) -> Vec<Row> {
        self.ensure_canonical();
        let member = {
            let mut m = vec![false; self.n];
            for &q in region {
                m[q] = true;
            }
            m
        };
        let mut local_of = vec![usize::MAX; self.n];
        for (i, &q) in region.iter().enumerate() {
            local_of[q] = i;
        }
        let mut out = Vec::with_capacity(region.len());
        let mut replaced = Vec::new();
        for ri in 0..self.n {
            let row = &self.rows[ri];
            let mut in_any = false;
            let mut out_any = false;
            for q in 0..self.n {
                if row.bits.get(2 * q) || row.bits.get(2 * q + 1) {
                    if member[q] {
                        in_any = true;
                    } else {
                        out_any = true;
                    }
                }
            }
            if in_any {
                assert!(
                    !out_any,
                    "region is entangled with the rest of the register"
                );
                let mut bits = BitVec::zeros(2 * region.len());
                for q in 0..self.n {
                    if row.bits.get(2 * q) {
                        bits.set(2 * local_of[q], true);
                    }
                    if row.bits.get(2 * q + 1) {
                        bits.set(2 * local_of[q] + 1, true);
                    }
                }
                out.push(Row {
                    phase: row.phase,
                    bits,
                });
                replaced.push(ri);
            }
        }
        assert_eq!(
            out.len(),
            region.len(),
            "tensor factor must contribute exactly one row per qubit"
        );
        for (k, &ri) in replaced.iter().enumerate() {
            let q = region[k];
            self.rows[ri] = Row::single(self.n, q, false, true);
        }
        self.dirty = true;
        out
    }

    /// Install `rows` (given over local qubits `0..region.len()`) onto
    /// `region`, whose qubits must currently be in |0>.
    pub fn install_region(&mut self, region: &[usize], rows: &[Row]) {
        assert_eq!(rows.len(), region.len());
        self.ensure_canonical();
        let mut targets = Vec::with_capacity(region.len());
        for &q in region {
            let ri = self.anchor_row[q];
            let row = &self.rows[ri];
            assert_eq!(
                (row.phase, row.bits.clone()),
                (0, Row::single(self.n, q, false, true).bits),
                "install target qubit {} is not in |0>",
                q
            );
            targets.push(ri);
        }
        for (k, &ri) in targets.iter().enumerate() {
            let mut bits = BitVec::zeros(2 * self.n);
            for (i, &q) in region.iter().enumerate() {
                if rows[k].bits.get(2 * i) {
                    bits.set(2 * q, true);
                }
                if rows[k].bits.get(2 * i + 1) {
                    bits.set(2 * q + 1, true);
                }
            }
            self.rows[ri] = Row {
                phase: rows[k].phase,
                bits,
            };
        }
        self.dirty = true;
    }

    /// Debug validation of the anchored canonical invariants.
    pub fn check_canonical(&self) -> bool {
        if self.dirty {
            return true;
        }
        for q in 0..self.n {
            let coord = if self.label_zside[q] { 2 * q + 1 } else { 2 * q };
            let ones: Vec<usize> = (0..self.n)
                .filter(|&r| self.rows[r].bits.get(coord))
                .collect();
            if ones != vec![self.anchor_row[q]] {
                return false;
            }
            if self.anchor_qubit[self.anchor_row[q]] != q {
                return false;
            }
        }
        true
    }

    /// All rows pairwise commute and phases are Hermitian.
    pub fn check_group(&self) -> bool {
        for i in 0..self.n {
            let yi = self.rows[i].y_count();
            if (self.rows[i].phase as u32 + yi) % 2 != 0 {
                return false;
            }
            let pi = PauliProduct::from_bits(self.n, self.rows[i].bits.clone());
            for j in (i + 1)..self.n {
                let pj = PauliProduct::from_bits(self.n, self.rows[j].bits.clone());
                if pi.symplectic(&pj) {
                    return false;
                }
            }
        }
        true
    }
}
