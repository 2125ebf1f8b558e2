//! Batched error-propagation engine.
//!
//! One phase-exact tableau tracks the shared noiseless ("canonical") state
//! of a register while many Monte Carlo trials ride on top of it as Pauli
//! frames, packed 64 trials per machine word. Each qubit owns four bit
//! planes indexed by trial word:
//!
//! * `ex`/`ez`: the accumulated error `E` (X and Z components);
//! * `fx`/`fz`: the tracked correction frame `F` (corrections that are
//!   accounted for classically instead of being applied).
//!
//! The physical state of trial `t` is `E_t F_t |psi>` with `|psi>` the
//! canonical state. Clifford gates act on the planes exactly as they act on
//! Pauli operators (no phases needed: only the residual `D = E xor F`
//! matters, and it is classified through symplectic products).
//!
//! Measurements collapse the canonical state onto the +1 branch. A trial's
//! branch bit `c` is a fair coin; the trial absorbs the anticommuting
//! generator `A` into `E` when `c = 1`, and its reported outcome is
//! `c xor s(E, M) xor s(F, M)`. For operators fixed by the stabilizer the
//! outcome is `sigma xor s(E, M) xor s(F, M)` with `sigma` the canonical
//! sign. Either way, a clean trial (empty planes) reports the canonical
//! outcome, so parity checks evaluate to zero on clean trials and nonzero
//! parities witness errors.

use crate::pauli::PauliProduct;
use crate::tableau::{Basis, MeasureResult, Row, Tableau};

pub type Plane = Vec<u64>;

#[derive(Clone)]
pub struct Machine {
    pub tab: Tableau,
    words: usize,
    /// Global word offset of this shard (for PRF keying).
    word_base: usize,
    ex: Vec<Plane>,
    ez: Vec<Plane>,
    fx: Vec<Plane>,
    fz: Vec<Plane>,
}

/// Source of measurement branch coins.
pub enum Coins<'a> {
    /// All-zero coins (used for resets, where outcomes are discarded).
    Zero,
    /// Per-word coin bits, keyed by the global word index.
    Fn(&'a mut dyn FnMut(usize) -> u64),
}

impl Machine {
    pub fn new(n: usize, words: usize, word_base: usize) -> Self {
        Machine {
            tab: Tableau::new(n),
            words,
            word_base,
            ex: vec![vec![0; words]; n],
            ez: vec![vec![0; words]; n],
            fx: vec![vec![0; words]; n],
            fz: vec![vec![0; words]; n],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.tab.num_qubits()
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn word_base(&self) -> usize {
        self.word_base
    }

    pub fn grow(&mut self, extra: usize) {
        self.tab.grow(extra);
        for _ in 0..extra {
            self.ex.push(vec![0; self.words]);
            self.ez.push(vec![0; self.words]);
            self.fx.push(vec![0; self.words]);
            self.fz.push(vec![0; self.words]);
        }
    }

    // ----- Clifford gates -----

    pub fn cnot(&mut self, c: usize, t: usize, aw: &[usize]) {
        self.tab.cnot(c, t);
        // X propagates control -> target, Z propagates target -> control.
        let (ec, et) = index2(&mut self.ex, c, t);
        for &w in aw {
            et[w] ^= ec[w];
        }
        let (zc, zt) = index2(&mut self.ez, c, t);
        for &w in aw {
            zc[w] ^= zt[w];
        }
        let (fc, ft) = index2(&mut self.fx, c, t);
        for &w in aw {
            ft[w] ^= fc[w];
        }
        let (gc, gt) = index2(&mut self.fz, c, t);
        for &w in aw {
            gc[w] ^= gt[w];
        }
    }

    pub fn h(&mut self, q: usize) {
        self.tab.h(q);
        // X and Z components swap; whole rows move, every trial at once.
        let (ex, ez) = (&mut self.ex, &mut self.ez);
        std::mem::swap(&mut ex[q], &mut ez[q]);
        let (fx, fz) = (&mut self.fx, &mut self.fz);
        std::mem::swap(&mut fx[q], &mut fz[q]);
    }

    pub fn s(&mut self, q: usize, aw: &[usize]) {
        self.tab.s(q);
        for &w in aw {
            let x = self.ex[q][w];
            self.ez[q][w] ^= x;
            let fx = self.fx[q][w];
            self.fz[q][w] ^= fx;
        }
    }

    /// Relabel qubits: qubit `q` moves to `perm[q]`. Plane rows move with
    /// their qubits.
    pub fn perm(&mut self, perm: &[usize]) {
        self.tab.perm(perm);
        permute_rows(&mut self.ex, perm);
        permute_rows(&mut self.ez, perm);
        permute_rows(&mut self.fx, perm);
        permute_rows(&mut self.fz, perm);
    }

    // ----- Per-trial Pauli injections -----

    /// Inject an error component on one trial.
    pub fn error_bit(&mut self, q: usize, x: bool, z: bool, trial: usize) {
        let w = trial / 64;
        let m = 1u64 << (trial % 64);
        if x {
            self.ex[q][w] ^= m;
        }
        if z {
            self.ez[q][w] ^= m;
        }
    }

    /// Record a frame correction component on one trial.
    pub fn frame_bit(&mut self, q: usize, x: bool, z: bool, trial: usize) {
        let w = trial / 64;
        let m = 1u64 << (trial % 64);
        if x {
            self.fx[q][w] ^= m;
        }
        if z {
            self.fz[q][w] ^= m;
        }
    }

    /// XOR whole correction words into the frame planes.
    pub fn frame_words(&mut self, q: usize, x: Option<&[u64]>, z: Option<&[u64]>, aw: &[usize]) {
        if let Some(xs) = x {
            for &w in aw {
                self.fx[q][w] ^= xs[w];
            }
        }
        if let Some(zs) = z {
            for &w in aw {
                self.fz[q][w] ^= zs[w];
            }
        }
    }

    // ----- Measurement, reset, preparation -----

    /// Measure qubit `q` in `basis` under canonical-outcome batching.
    /// Writes per-trial outcome bits into `out[w]` for `w` in `aw`.
    pub fn measure(
        &mut self,
        q: usize,
        basis: Basis,
        aw: &[usize],
        mut coins: Coins,
        out: &mut [u64],
    ) {
        // s(E, Z_q) reads the X plane; s(E, X_q) reads the Z plane.
        let res = self.tab.measure(q, basis);
        match res {
            MeasureResult::Random { a } => {
                let base = self.word_base;
                let mut coin_words = vec![0u64; aw.len()];
                for (i, &w) in aw.iter().enumerate() {
                    coin_words[i] = match coins {
                        Coins::Zero => 0,
                        Coins::Fn(ref mut f) => f(base + w),
                    };
                }
                // Outcomes use the pre-collapse error: absorbing A flips
                // s(E, M) by the coin, which would cancel it.
                for (i, &w) in aw.iter().enumerate() {
                    out[w] = coin_words[i] ^ self.eps(q, basis, w);
                }
                // Absorb A into E on trials whose coin picked the -1 branch.
                for s in a.support() {
                    let ax = a.x_bit(s);
                    let az = a.z_bit(s);
                    for (i, &w) in aw.iter().enumerate() {
                        if ax {
                            self.ex[s][w] ^= coin_words[i];
                        }
                        if az {
                            self.ez[s][w] ^= coin_words[i];
                        }
                    }
                }
            }
            MeasureResult::Deterministic { sigma } => {
                let s = if sigma { !0u64 } else { 0u64 };
                for &w in aw {
                    out[w] = s ^ self.eps(q, basis, w);
                }
            }
        }
    }

    #[inline]
    fn eps(&self, q: usize, basis: Basis, w: usize) -> u64 {
        match basis {
            Basis::Z => self.ex[q][w] ^ self.fx[q][w],
            Basis::X => self.ez[q][w] ^ self.fz[q][w],
        }
    }

    /// Reset qubit `q` to the +1 eigenstate of `basis` (|0> or |+>) on every
    /// trial, discarding its state. Plane rows for `q` are fully cleared.
    pub fn reset(&mut self, q: usize, basis: Basis) {
        match self.tab.measure(q, basis) {
            MeasureResult::Random { .. } => {
                // Row replaced by +M already; per-trial branch choice is
                // irrelevant because the reset output is state-independent.
            }
            MeasureResult::Deterministic { sigma } => {
                if sigma {
                    // Flip the canonical state onto the +1 eigenstate.
                    let flip = match basis {
                        Basis::Z => crate::pauli::Pauli::X,
                        Basis::X => crate::pauli::Pauli::Z,
                    };
                    self.tab
                        .apply_pauli(&PauliProduct::single(self.num_qubits(), q, flip));
                }
            }
        }
        self.ex[q].fill(0);
        self.ez[q].fill(0);
        self.fx[q].fill(0);
        self.fz[q].fill(0);
    }

    // ----- Region transfer -----

    /// Copy all four plane rows from `src` qubits to `dst` qubits on the
    /// trials selected by `mask`, leaving other trials' destination bits
    /// untouched.
    pub fn copy_planes_masked(
        &mut self,
        src: &[usize],
        dst: &[usize],
        aw: &[usize],
        mask: &[u64],
    ) {
        assert_eq!(src.len(), dst.len());
        for (&s, &d) in src.iter().zip(dst) {
            assert_ne!(s, d);
            for &w in aw {
                let m = mask[w];
                for plane in [&mut self.ex, &mut self.ez, &mut self.fx, &mut self.fz] {
                    let v = plane[s][w];
                    let cur = plane[d][w];
                    plane[d][w] = (cur & !m) | (v & m);
                }
            }
        }
    }

    /// Move the canonical rows of `src` (a tensor factor) onto `dst` whose
    /// qubits must be in |0>; `src` qubits are reset in the tableau.
    pub fn move_tableau_region(&mut self, src: &[usize], dst: &[usize]) {
        let rows = self.tab.take_region(src);
        self.tab.install_region(dst, &rows);
    }

    /// Install externally built rows (local indices) onto `region`, zeroing
    /// its planes.
    pub fn install_state(&mut self, region: &[usize], rows: &[Row]) {
        self.tab.install_region(region, rows);
        for &q in region {
            self.ex[q].fill(0);
            self.ez[q].fill(0);
            self.fx[q].fill(0);
            self.fz[q].fill(0);
        }
    }

    /// Zero the plane rows of `region` (used when a stage round restarts and
    /// the region's per-trial content is known to be dead).
    pub fn clear_planes(&mut self, region: &[usize]) {
        for &q in region {
            self.ex[q].fill(0);
            self.ez[q].fill(0);
            self.fx[q].fill(0);
            self.fz[q].fill(0);
        }
    }

    // ----- Classification -----

    /// Word-parallel symplectic product of the residual `D = E xor F` with a
    /// fixed Pauli `g`: `out[w] ^= bits where s(D_t, g) = 1`.
    pub fn residual_syndrome(&self, g: &PauliProduct, aw: &[usize], out: &mut [u64]) {
        for &w in aw {
            out[w] = 0;
        }
        for q in g.support() {
            if g.x_bit(q) {
                for &w in aw {
                    out[w] ^= self.ez[q][w] ^ self.fz[q][w];
                }
            }
            if g.z_bit(q) {
                for &w in aw {
                    out[w] ^= self.ex[q][w] ^ self.fx[q][w];
                }
            }
        }
    }

    /// Residual `D = E xor F` of one trial restricted to `region`, as a
    /// Pauli over local indices `0..region.len()`.
    pub fn residual_of_trial(&self, region: &[usize], trial: usize) -> PauliProduct {
        let w = trial / 64;
        let m = 1u64 << (trial % 64);
        let mut p = PauliProduct::identity(region.len());
        for (i, &q) in region.iter().enumerate() {
            if (self.ex[q][w] ^ self.fx[q][w]) & m != 0 {
                p.set_x(i, true);
            }
            if (self.ez[q][w] ^ self.fz[q][w]) & m != 0 {
                p.set_z(i, true);
            }
        }
        p
    }
}

/// Split one plane table at two distinct rows.
fn index2<'a>(planes: &'a mut [Plane], a: usize, b: usize) -> (&'a mut Plane, &'a mut Plane) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = planes.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = planes.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

fn permute_rows(planes: &mut Vec<Plane>, perm: &[usize]) {
    let mut out: Vec<Plane> = vec![Vec::new(); planes.len()];
    for (q, row) in planes.drain(..).enumerate() {
        out[perm[q]] = row;
    }
    *planes = out;
}
