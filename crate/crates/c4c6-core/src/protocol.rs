//! Protocol networks: verified ancilla preparation, Bell pairs,
//! teleportation-based error correction, and block decoding.
//!
//! Everything here runs on the batched [`Machine`], so a single call
//! executes `64 * words` Monte Carlo trials at once. Post-selected stages
//! retry per trial: trials accepted in a round park their Pauli planes on
//! the produce region and drop out of the pending mask, rejected trials
//! rerun the construction in the next round with fresh randomness. The
//! canonical tableau evolves identically in every round (collapses always
//! pick the +1 branch; coins only touch the per-trial planes), so the final
//! round's canonical state is valid for every accepted trial regardless of
//! which round accepted it.

use crate::code::{block_len, pow3, CheckKind, CodeTables, DecideCtx, Decision, XL, XS, ZL, ZS};
use crate::decode::{c4_decoder, member_decoder, DecodeCircuit};
use crate::gf2::BitVec;
use crate::machine::{Coins, Machine};
use crate::noise::{chain, cnot_kind_bits, one_qubit_kind_bits, LocKind, NoiseSource};
use crate::pauli::{Pauli, PauliProduct};
use crate::tableau::{Basis, Row};

/// Hash salt separating stage paths from plain operation streams.
const STAGE_SALT: u64 = 0x5354_4147;
/// Retry cap per stage; pending trials left after this many rounds are
/// reported as failures (at any useful noise rate this is unreachable).
pub const MAX_ROUNDS: usize = 4096;

// ----- Word-mask helpers -----

pub fn mask_full(words: usize) -> Vec<u64> {
    vec![!0u64; words]
}

pub fn mask_count(m: &[u64]) -> u64 {
    m.iter().map(|w| w.count_ones() as u64).sum()
}

pub fn mask_any(m: &[u64]) -> bool {
    m.iter().any(|&w| w != 0)
}

pub fn mask_bit(m: &[u64], trial: usize) -> bool {
    m[trial / 64] >> (trial % 64) & 1 == 1
}

pub fn or_assign(a: &mut [u64], b: &[u64]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x |= y;
    }
}

pub fn xor_assign(a: &mut [u64], b: &[u64]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

pub fn and_not(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(&x, &y)| x & !y).collect()
}

/// Call `f` with each set trial index (local to this machine).
pub fn for_each_set(mask: &[u64], mut f: impl FnMut(usize)) {
    for (w, &mw) in mask.iter().enumerate() {
        let mut m = mw;
        while m != 0 {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            f(w * 64 + b);
        }
    }
}

// ----- Operation accounting -----

/// Retried stage classes whose acceptance rates are tracked separately.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum StageClass {
    /// Verified preparation of an encoded |00> block.
    PrepZ,
    /// Verified preparation of an encoded |++> block.
    PrepX,
    /// Bell-pair teleportation stage (level >= 2).
    Bell,
}

/// Physical operation counts and per-stage attempt/accept tallies, all
/// weighted per trial.
#[derive(Default, Clone, Debug)]
pub struct Counters {
    pub preps: u64,
    pub cnots: u64,
    pub meas: u64,
    pub one_qubit: u64,
    stages: std::collections::BTreeMap<(StageClass, usize), (u64, u64)>,
}

impl Counters {
    pub fn tally(&mut self, class: StageClass, level: usize, attempts: u64, accepts: u64) {
        let e = self.stages.entry((class, level)).or_insert((0, 0));
        e.0 += attempts;
        e.1 += accepts;
    }

    pub fn attempts(&self, class: StageClass, level: usize) -> u64 {
        self.stages.get(&(class, level)).map_or(0, |e| e.0)
    }

    pub fn accepts(&self, class: StageClass, level: usize) -> u64 {
        self.stages.get(&(class, level)).map_or(0, |e| e.1)
    }

    /// Acceptance rate of one stage class.
    pub fn rate(&self, class: StageClass, level: usize) -> Option<f64> {
        let &(att, acc) = self.stages.get(&(class, level))?;
        if att == 0 {
            return None;
        }
        Some(acc as f64 / att as f64)
    }

    /// Verification acceptance rate `v(l)`: mean of the two preparation
    /// stage rates.
    pub fn v_rate(&self, level: usize) -> Option<f64> {
        let z = self.rate(StageClass::PrepZ, level)?;
        let x = self.rate(StageClass::PrepX, level)?;
        Some(0.5 * (z + x))
    }

    /// Teleportation acceptance rate `t(l)` (undefined at level 1).
    pub fn t_rate(&self, level: usize) -> Option<f64> {
        self.rate(StageClass::Bell, level)
    }

    pub fn clear(&mut self) {
        *self = Counters::default();
    }

    /// Fold another counter set in (shard merging).
    pub fn merge(&mut self, other: &Counters) {
        self.preps += other.preps;
        self.cnots += other.cnots;
        self.meas += other.meas;
        self.one_qubit += other.one_qubit;
        for (&k, &(att, acc)) in &other.stages {
            let e = self.stages.entry(k).or_insert((0, 0));
            e.0 += att;
            e.1 += acc;
        }
    }
}

// ----- Region allocator -----

/// Bump allocator with scoped frames; popping a frame releases its regions
/// for reuse by later allocations.
#[derive(Default)]
struct RegionAlloc {
    next: usize,
    frames: Vec<usize>,
}

// ----- Simulation context -----

/// Conditioning discipline for the nested protocol stages: `Postselect`
/// rejects on any detected error at any layer, `Ec` corrects errors located
/// by the concatenation hierarchy and rejects only the rest. The two agree
/// below level 3, where there is no lower layer to locate with.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Postselect,
    Ec,
}

/// A machine plus a noise source, PRF stream bookkeeping, operation
/// counters, and a scoped qubit allocator.
pub struct SimCtx<'a> {
    pub m: Machine,
    pub noise: NoiseSource,
    pub tables: &'a CodeTables,
    pub counters: Counters,
    pub mode: Mode,
    /// PRF stream identifying the current dynamic position (stage path).
    path: u64,
    /// Next operation index under `path`.
    op_index: u64,
    coin_seed: u64,
    aw: Vec<usize>,
    alloc: RegionAlloc,
}

impl<'a> SimCtx<'a> {
    pub fn new(
        tables: &'a CodeTables,
        words: usize,
        word_base: usize,
        seed: u64,
        noise: NoiseSource,
    ) -> Self {
        SimCtx {
            m: Machine::new(0, words, word_base),
            noise,
            tables,
            counters: Counters::default(),
            mode: Mode::Ec,
            path: 0,
            op_index: 0,
            coin_seed: seed,
            aw: (0..words).collect(),
            alloc: RegionAlloc::default(),
        }
    }

    pub fn words(&self) -> usize {
        self.m.words()
    }

    pub fn trials(&self) -> usize {
        self.m.words() * 64
    }

    pub fn push_frame(&mut self) {
        self.alloc.frames.push(self.alloc.next);
    }

    pub fn pop_frame(&mut self) {
        self.alloc.next = self.alloc.frames.pop().expect("unbalanced frame pop");
    }

    /// Allocate `len` fresh qubits in the current frame, growing the machine
    /// if needed. Reused qubits are reset to |0> with cleared planes.
    pub fn alloc_region(&mut self, len: usize) -> Vec<usize> {
        let start = self.alloc.next;
        self.alloc.next += len;
        if self.alloc.next > self.m.num_qubits() {
            let extra = self.alloc.next - self.m.num_qubits();
            self.m.grow(extra);
        }
        let region: Vec<usize> = (start..start + len).collect();
        for &q in &region {
            self.m.reset(q, Basis::Z);
        }
        region
    }

    /// PRF stream for the next operation at the current dynamic position.
    fn next_stream(&mut self) -> u64 {
        let s = chain(self.path, self.op_index);
        self.op_index += 1;
        s
    }

    /// Global `(word, mask)` pairs for the PRF/noise layer.
    fn live_words(&self, live: &[u64]) -> Vec<(usize, u64)> {
        let base = self.m.word_base();
        live.iter()
            .enumerate()
            .filter(|(_, &m)| m != 0)
            .map(|(w, &m)| (base + w, m))
            .collect()
    }

    // ----- Noisy operations (error after the ideal operation) -----

    pub fn noisy_cnot(&mut self, c: usize, t: usize, live: &[u64]) {
        let stream = self.next_stream();
        self.counters.cnots += mask_count(live);
        let base_trial = self.m.word_base() * 64;
        let words = self.live_words(live);
        let Self { m, noise, aw, .. } = self;
        m.cnot(c, t, aw);
        noise.visit(LocKind::Cnot, stream, &words, |trial, kind| {
            let ((xc, zc), (xt, zt)) = cnot_kind_bits(kind);
            let tr = trial - base_trial;
            m.error_bit(c, xc, zc, tr);
            m.error_bit(t, xt, zt, tr);
        });
    }

    pub fn noisy_prep(&mut self, q: usize, basis: Basis, live: &[u64]) {
        let stream = self.next_stream();
        self.counters.preps += mask_count(live);
        let base_trial = self.m.word_base() * 64;
        let words = self.live_words(live);
        let Self { m, noise, .. } = self;
        m.reset(q, basis);
        // A flipped preparation is the orthogonal state: X after |0>, Z
        // after |+>.
        let (x, z) = match basis {
            Basis::Z => (true, false),
            Basis::X => (false, true),
        };
        noise.visit(LocKind::Prep, stream, &words, |trial, _| {
            m.error_bit(q, x, z, trial - base_trial);
        });
    }

    pub fn noisy_measure(&mut self, q: usize, basis: Basis, live: &[u64]) -> Vec<u64> {
        let stream = self.next_stream();
        self.counters.meas += mask_count(live);
        let base_trial = self.m.word_base() * 64;
        let words = self.live_words(live);
        let seed = self.coin_seed;
        let mut out = vec![0u64; self.m.words()];
        let Self { m, noise, aw, .. } = self;
        let mut coin = |gw: usize| NoiseSource::coin_word(seed, stream, gw);
        m.measure(q, basis, aw, Coins::Fn(&mut coin), &mut out);
        noise.visit(LocKind::Meas, stream, &words, |trial, _| {
            let tr = trial - base_trial;
            out[tr / 64] ^= 1u64 << (tr % 64);
        });
        out
    }

    pub fn noisy_h(&mut self, q: usize, live: &[u64]) {
        let stream = self.next_stream();
        self.counters.one_qubit += mask_count(live);
        let base_trial = self.m.word_base() * 64;
        let words = self.live_words(live);
        let Self { m, noise, .. } = self;
        m.h(q);
        noise.visit(LocKind::OneQubit, stream, &words, |trial, kind| {
            let (x, z) = one_qubit_kind_bits(kind);
            m.error_bit(q, x, z, trial - base_trial);
        });
    }

    pub fn noisy_s(&mut self, q: usize, live: &[u64]) {
        let stream = self.next_stream();
        self.counters.one_qubit += mask_count(live);
        let base_trial = self.m.word_base() * 64;
        let words = self.live_words(live);
        let Self { m, noise, aw, .. } = self;
        m.s(q, aw);
        noise.visit(LocKind::OneQubit, stream, &words, |trial, kind| {
            let (x, z) = one_qubit_kind_bits(kind);
            m.error_bit(q, x, z, trial - base_trial);
        });
    }

    /// The error channel of a CNOT without the gate itself. Benchmarked
    /// gates act as the identity on reference entanglement so the reference
    /// correlators stay fixed; only the fault pattern matters.
    pub fn cnot_error_only(&mut self, c: usize, t: usize, live: &[u64]) {
        let stream = self.next_stream();
        self.counters.cnots += mask_count(live);
        let base_trial = self.m.word_base() * 64;
        let words = self.live_words(live);
        let Self { m, noise, .. } = self;
        noise.visit(LocKind::Cnot, stream, &words, |trial, kind| {
            let ((xc, zc), (xt, zt)) = cnot_kind_bits(kind);
            let tr = trial - base_trial;
            m.error_bit(c, xc, zc, tr);
            m.error_bit(t, xt, zt, tr);
        });
    }

    /// The error channel of a one-qubit gate without the gate itself.
    pub fn one_qubit_error_only(&mut self, q: usize, live: &[u64]) {
        let stream = self.next_stream();
        self.counters.one_qubit += mask_count(live);
        let base_trial = self.m.word_base() * 64;
        let words = self.live_words(live);
        let Self { m, noise, .. } = self;
        noise.visit(LocKind::OneQubit, stream, &words, |trial, kind| {
            let (x, z) = one_qubit_kind_bits(kind);
            m.error_bit(q, x, z, trial - base_trial);
        });
    }

    /// Measure without measurement noise: a bookkeeping readout for the
    /// error-free reference side of an experiment. Consumes an operation
    /// slot but no location count.
    pub fn noiseless_measure(&mut self, q: usize, basis: Basis) -> Vec<u64> {
        let stream = self.next_stream();
        let seed = self.coin_seed;
        let mut out = vec![0u64; self.m.words()];
        let Self { m, aw, .. } = self;
        let mut coin = |gw: usize| NoiseSource::coin_word(seed, stream, gw);
        m.measure(q, basis, aw, Coins::Fn(&mut coin), &mut out);
        out
    }

    /// Draw the outcome-flip noise of one measurement location without
    /// reading a wire. Used when only the recorded outcome of a discarded
    /// qubit matters, e.g. measuring decoded bare qubits whose outcome
    /// feeds a frame choice. Counts one measurement per live trial.
    pub fn measure_flip_only(&mut self, live: &[u64]) -> Vec<u64> {
        let stream = self.next_stream();
        self.counters.meas += mask_count(live);
        let base_trial = self.m.word_base() * 64;
        let words = self.live_words(live);
        let mut flips = vec![0u64; self.m.words()];
        self.noise.visit(LocKind::Meas, stream, &words, |trial, _| {
            let tr = trial - base_trial;
            flips[tr / 64] ^= 1u64 << (tr % 64);
        });
        flips
    }

    // ----- Noiseless bookkeeping operations -----

    /// Per-trial frame update from outcome words.
    pub fn frame_words(&mut self, q: usize, x: Option<&[u64]>, z: Option<&[u64]>) {
        let Self { m, aw, .. } = self;
        m.frame_words(q, x, z, aw);
    }

    /// Constant frame flip on all trials (circuit sign fixes).
    pub fn frame_const(&mut self, q: usize, x: bool, z: bool) {
        if !x && !z {
            return;
        }
        let ones = mask_full(self.m.words());
        let Self { m, aw, .. } = self;
        m.frame_words(
            q,
            if x { Some(&ones) } else { None },
            if z { Some(&ones) } else { None },
            aw,
        );
    }

    /// Relabel qubits inside one or more blocks: content of `region[q]`
    /// moves to `region[perm[q]]`. Noiseless (pure rewiring).
    pub fn relabel(&mut self, parts: &[(&[usize], &[usize])]) {
        let n = self.m.num_qubits();
        let mut perm: Vec<usize> = (0..n).collect();
        for (region, p) in parts {
            assert_eq!(region.len(), p.len());
            for (q, &dst) in p.iter().enumerate() {
                perm[region[q]] = region[dst];
            }
        }
        self.m.perm(&perm);
    }

    /// Symplectic product of every trial's residual with `g`, as words.
    pub fn residual_syndrome(&self, g: &PauliProduct) -> Vec<u64> {
        let mut out = vec![0u64; self.m.words()];
        self.m.residual_syndrome(g, &self.aw, &mut out);
        out
    }

    fn copy_planes(&mut self, src: &[usize], dst: &[usize], mask: &[u64]) {
        let Self { m, aw, .. } = self;
        m.copy_planes_masked(src, dst, aw, mask);
    }
}

// ----- Retried stage driver -----

/// Run a post-selected stage: `body` builds a candidate state on the staging
/// region and returns the accept mask for this round. Accepted trials park
/// their planes on `produce`; the rest retry with fresh randomness. Returns
/// the trials still pending after [`MAX_ROUNDS`] (failures).
pub fn run_retry_stage<F>(
    ctx: &mut SimCtx,
    tag: u64,
    class: StageClass,
    level: usize,
    produce: &[usize],
    pending0: &[u64],
    mut body: F,
) -> Vec<u64>
where
    F: FnMut(&mut SimCtx, &[usize], &[u64]) -> Vec<u64>,
{
    let words = ctx.m.words();
    debug_assert_eq!(pending0.len(), words);
    // Nothing is parked yet: wipe the produce region so parked planes land
    // on clean rows.
    for &q in produce {
        ctx.m.reset(q, Basis::Z);
    }
    let saved_path = ctx.path;
    let saved_op = ctx.op_index;
    // Consuming an operation slot makes sibling stages with equal tags
    // (e.g. the six teleport sub-stages of one Bell body) independent.
    let base = chain(chain(ctx.next_stream(), STAGE_SALT), tag);
    ctx.push_frame();
    let staging = ctx.alloc_region(produce.len());
    let mut pending = pending0.to_vec();
    for round in 0..MAX_ROUNDS {
        // Round 0 always runs: the canonical state must be built on staging
        // even when no trial is pending.
        if round > 0 && !mask_any(&pending) {
            break;
        }
        ctx.path = chain(base, round as u64);
        ctx.op_index = 0;
        for &q in &staging {
            ctx.m.reset(q, Basis::Z);
        }
        ctx.push_frame();
        let accept = body(ctx, &staging, &pending);
        ctx.pop_frame();
        let mut got = accept;
        for w in 0..words {
            got[w] &= pending[w];
        }
        ctx.counters
            .tally(class, level, mask_count(&pending), mask_count(&got));
        ctx.copy_planes(&staging, produce, &got);
        for w in 0..words {
            pending[w] &= !got[w];
        }
    }
    ctx.m.move_tableau_region(&staging, produce);
    ctx.pop_frame();
    ctx.path = saved_path;
    ctx.op_index = saved_op;
    pending
}

// ----- Verified block preparation -----

/// Prepare a level-`level` block in the encoded |00> (`Basis::Z`) or |++>
/// (`Basis::X`) state with verification, retrying per trial. Returns the
/// failure mask (trials that exhausted the retry budget).
pub fn blockprep(
    ctx: &mut SimCtx,
    level: usize,
    basis: Basis,
    out: &[usize],
    live: &[u64],
) -> Vec<u64> {
    assert_eq!(out.len(), block_len(level));
    let (class, tag) = match basis {
        Basis::Z => (StageClass::PrepZ, 0x424c_4b5a),
        Basis::X => (StageClass::PrepX, 0x424c_4b58),
    };
    run_retry_stage(ctx, tag, class, level, out, live, |ctx, staging, pending| {
        if level == 1 {
            cat4_body(ctx, basis, staging, pending)
        } else {
            blockprep_body(ctx, level, basis, staging, pending)
        }
    })
}

/// One candidate four-qubit cat state: four bottom-level Bell pairs, a ring
/// of CNOTs, verifier measurements with an overall parity accept, and
/// prefix-parity frames that rotate the kept qubits onto the standard cat.
/// `Basis::Z` builds |0000>+|1111> (encoded |00>); `Basis::X` is its
/// conjugate by transversal H (encoded |++>).
fn cat4_body(ctx: &mut SimCtx, basis: Basis, k: &[usize], live: &[u64]) -> Vec<u64> {
    let words = ctx.words();
    let m = ctx.alloc_region(4);
    match basis {
        Basis::Z => {
            for j in 0..4 {
                ctx.noisy_prep(k[j], Basis::X, live);
                ctx.noisy_prep(m[j], Basis::Z, live);
            }
            for j in 0..4 {
                ctx.noisy_cnot(k[j], m[j], live);
            }
            for j in 0..4 {
                ctx.noisy_cnot(k[j], m[(j + 1) % 4], live);
            }
        }
        Basis::X => {
            for j in 0..4 {
                ctx.noisy_prep(k[j], Basis::Z, live);
                ctx.noisy_prep(m[j], Basis::X, live);
            }
            for j in 0..4 {
                ctx.noisy_cnot(m[j], k[j], live);
            }
            for j in 0..4 {
                ctx.noisy_cnot(m[(j + 1) % 4], k[j], live);
            }
        }
    }
    let meas = match basis {
        Basis::Z => Basis::Z,
        Basis::X => Basis::X,
    };
    let w: Vec<Vec<u64>> = (0..4).map(|j| ctx.noisy_measure(m[j], meas, live)).collect();
    // Verifier j reads the ring operator linking kept qubits j-1 and j; the
    // four operators multiply to the identity, so the total parity is zero
    // unless an error intervened.
    let mut parity = w[0].clone();
    for j in 1..4 {
        xor_assign(&mut parity, &w[j]);
    }
    // Prefix parities re-point the kept qubits at the standard cat state.
    let mut a = vec![0u64; words];
    for t in 1..4 {
        xor_assign(&mut a, &w[t]);
        match basis {
            Basis::Z => ctx.frame_words(k[t], Some(&a), None),
            Basis::X => ctx.frame_words(k[t], None, Some(&a)),
        }
    }
    and_not(live, &parity)
}

/// One candidate level-`level` block (level >= 2): three lower Bell pairs,
/// an encoded ring of transversal CNOTs onto the measured halves, verified
/// transversal readout of the ring parities (which also checks the kept
/// blocks' lower-level syndromes), frames, and the relabeling that turns
/// the three kept blocks into one higher block.
fn blockprep_body(
    ctx: &mut SimCtx,
    level: usize,
    basis: Basis,
    staging: &[usize],
    live: &[u64],
) -> Vec<u64> {
    let words = ctx.words();
    let sb = block_len(level - 1);
    let ks: Vec<&[usize]> = staging.chunks(sb).collect();
    let ms: Vec<Vec<usize>> = (0..3).map(|_| ctx.alloc_region(sb)).collect();
    let mut fail = vec![0u64; words];
    for k in 0..3 {
        let f = bell_pair(ctx, level - 1, ks[k], &ms[k], live);
        or_assign(&mut fail, &f);
    }
    let ok = and_not(live, &fail);
    for j in 0..3 {
        let mt = &ms[(j + 1) % 3];
        for q in 0..sb {
            match basis {
                Basis::Z => ctx.noisy_cnot(ks[j][q], mt[q], &ok),
                Basis::X => ctx.noisy_cnot(mt[q], ks[j][q], &ok),
            }
        }
    }
    let side = match basis {
        Basis::Z => CheckKind::Z,
        Basis::X => CheckKind::X,
    };
    let mut flags = fail;
    let mut lpar: Vec<Vec<u64>> = Vec::with_capacity(3);
    let mut spar: Vec<Vec<u64>> = Vec::with_capacity(3);
    let tables = ctx.tables;
    // Verified preparation demands a clean top layer on the measured halves.
    // Under `Ec`, errors located by lower layers are corrected in the parity
    // readout (dl = 1); under `Postselect`, every layer is detection-only.
    let dl = match ctx.mode {
        Mode::Postselect => level - 1,
        Mode::Ec => 1,
    };
    for k in 0..3 {
        let outs: Vec<Vec<u64>> = ms[k]
            .iter()
            .map(|&q| ctx.noisy_measure(q, basis, &ok))
            .collect();
        let ra = analyze_readout(tables, level - 1, side, &outs, &ok, dl);
        or_assign(&mut flags, &ra.flags);
        let [l, s] = ra.logical;
        lpar.push(l);
        spar.push(s);
    }
    // Ring parities must close (the three ring operators multiply to the
    // identity on each member).
    let mut pl = lpar[0].clone();
    xor_assign(&mut pl, &lpar[1]);
    xor_assign(&mut pl, &lpar[2]);
    let mut ps = spar[0].clone();
    xor_assign(&mut ps, &spar[1]);
    xor_assign(&mut ps, &spar[2]);
    or_assign(&mut flags, &pl);
    or_assign(&mut flags, &ps);
    // Prefix-parity frames on the kept blocks, member by member.
    let lt = tables.get(level - 1);
    let (rep_l, rep_s) = match basis {
        Basis::Z => (&lt.logicals[XL], &lt.logicals[XS]),
        Basis::X => (&lt.logicals[ZL], &lt.logicals[ZS]),
    };
    let mut al = lpar[1].clone();
    let mut as_ = spar[1].clone();
    frame_rep(ctx, ks[1], rep_l, &al);
    frame_rep(ctx, ks[1], rep_s, &as_);
    xor_assign(&mut al, &lpar[2]);
    xor_assign(&mut as_, &spar[2]);
    frame_rep(ctx, ks[2], rep_l, &al);
    frame_rep(ctx, ks[2], rep_s, &as_);
    // Rotate the kept blocks' pair labels so the three-block cat becomes
    // one level-`level` block.
    let (p1, p2) = match basis {
        Basis::Z => (&lt.rot_perm, &lt.rot2_perm),
        Basis::X => (&lt.rot2_perm, &lt.rot_perm),
    };
    ctx.relabel(&[(ks[1], p1), (ks[2], p2)]);
    and_not(live, &flags)
}

/// Apply a (pure X or pure Z) logical representative as a per-trial frame.
fn frame_rep(ctx: &mut SimCtx, block: &[usize], rep: &PauliProduct, bits: &[u64]) {
    for q in rep.support() {
        ctx.frame_words(
            block[q],
            rep.x_bit(q).then_some(bits),
            rep.z_bit(q).then_some(bits),
        );
    }
}

// ----- Bell pairs -----

/// Produce an encoded Bell pair (both members) across two level-`level`
/// blocks. Level 1 is built directly (verified |++> and |00> blocks plus a
/// transversal CNOT); higher levels wrap the construction and the six
/// sub-block teleportations into one retried stage. Returns the failure
/// mask.
pub fn bell_pair(
    ctx: &mut SimCtx,
    level: usize,
    out1: &[usize],
    out2: &[usize],
    live: &[u64],
) -> Vec<u64> {
    let bl = block_len(level);
    assert_eq!(out1.len(), bl);
    assert_eq!(out2.len(), bl);
    if level == 1 {
        let f1 = blockprep(ctx, 1, Basis::X, out1, live);
        let f2 = blockprep(ctx, 1, Basis::Z, out2, live);
        let mut fail = f1;
        or_assign(&mut fail, &f2);
        let ok = and_not(live, &fail);
        for q in 0..bl {
            ctx.noisy_cnot(out1[q], out2[q], &ok);
        }
        return fail;
    }
    let produce: Vec<usize> = out1.iter().chain(out2).copied().collect();
    run_retry_stage(
        ctx,
        0x4245_4c4c,
        StageClass::Bell,
        level,
        &produce,
        live,
        |ctx, staging, pending| bell_body(ctx, level, staging, pending),
    )
}

/// One candidate high-level Bell pair: prepare and combine two verified
/// blocks, then error-correct each of the six sub-blocks by teleportation.
/// Any teleport flag rejects the whole candidate.
fn bell_body(ctx: &mut SimCtx, level: usize, staging: &[usize], live: &[u64]) -> Vec<u64> {
    let bl = block_len(level);
    let sb = bl / 3;
    let b1 = ctx.alloc_region(bl);
    let b2 = ctx.alloc_region(bl);
    let f1 = blockprep(ctx, level, Basis::X, &b1, live);
    let f2 = blockprep(ctx, level, Basis::Z, &b2, live);
    let mut flags = f1;
    or_assign(&mut flags, &f2);
    let ok = and_not(live, &flags);
    for q in 0..bl {
        ctx.noisy_cnot(b1[q], b2[q], &ok);
    }
    // Sub-block teleportations inherit the conditioning discipline: reject
    // everything under `Postselect`, locate-and-correct under `Ec`.
    let policy = match ctx.mode {
        Mode::Postselect => TeleportPolicy::Postselect,
        Mode::Ec => TeleportPolicy::Ec { dl: 1 },
    };
    for (src, base) in [(&b1, 0), (&b2, bl)] {
        for k in 0..3 {
            let o = &src[k * sb..(k + 1) * sb];
            let out = &staging[base + k * sb..base + (k + 1) * sb];
            let fl = ec_teleport(ctx, o, out, level - 1, policy, &ok);
            or_assign(&mut flags, &fl);
        }
    }
    and_not(live, &flags)
}

// ----- Teleported error correction -----

/// What to do with the syndrome read off by a teleportation.
#[derive(Clone, Copy, Debug)]
pub enum TeleportPolicy {
    /// Flag any nonzero syndrome (used inside verified preparation).
    Postselect,
    /// Decode: locate and correct flagged sub-blocks where the hierarchy
    /// permits (`dl` as in [`DecideCtx`]), flag the rest.
    Ec { dl: usize },
}

/// Teleport the block `o` through a fresh Bell pair, reading its full
/// syndrome from the Bell measurement and applying byproduct frames to
/// `out`. `o` is consumed (measured). Returns the flag mask; on flagged
/// trials `out` is not trustworthy.
pub fn ec_teleport(
    ctx: &mut SimCtx,
    o: &[usize],
    out: &[usize],
    level: usize,
    policy: TeleportPolicy,
    live: &[u64],
) -> Vec<u64> {
    let words = ctx.words();
    let bl = block_len(level);
    assert_eq!(o.len(), bl);
    assert_eq!(out.len(), bl);
    let b1 = ctx.alloc_region(bl);
    let fail = bell_pair(ctx, level, &b1, out, live);
    let ok = and_not(live, &fail);
    for q in 0..bl {
        ctx.noisy_cnot(o[q], b1[q], &ok);
    }
    let m1: Vec<Vec<u64>> = o.iter().map(|&q| ctx.noisy_measure(q, Basis::X, &ok)).collect();
    let m2: Vec<Vec<u64>> = b1
        .iter()
        .map(|&q| ctx.noisy_measure(q, Basis::Z, &ok))
        .collect();
    // Qubit-wise teleportation byproducts.
    for q in 0..bl {
        ctx.frame_words(out[q], Some(&m2[q]), Some(&m1[q]));
    }
    // The Bell measurement reads every check of the incoming block: X-side
    // checks from the X outcomes of `o`, Z-side checks from the Z outcomes
    // of the CNOT target half.
    let lt = ctx.tables.get(level);
    let nsynd = lt.syndrome_len();
    let mut synd: Vec<Vec<u64>> = vec![vec![0u64; words]; nsynd];
    for (b, ck) in lt.checks.iter().enumerate() {
        let src = match ck.kind {
            CheckKind::X => &m1,
            CheckKind::Z => &m2,
        };
        for q in ck.pauli.support() {
            xor_assign(&mut synd[b], &src[q]);
        }
    }
    let mut dirty = vec![0u64; words];
    for s in &synd {
        or_assign(&mut dirty, s);
    }
    for w in 0..words {
        dirty[w] &= ok[w];
    }
    let mut flags = fail;
    match policy {
        TeleportPolicy::Postselect => or_assign(&mut flags, &dirty),
        TeleportPolicy::Ec { dl } => {
            let tables = ctx.tables;
            for_each_set(&dirty, |t| {
                let mut sv = BitVec::zeros(nsynd);
                for (b, s) in synd.iter().enumerate() {
                    if s[t / 64] >> (t % 64) & 1 == 1 {
                        sv.set(b, true);
                    }
                }
                match tables.decide(&sv, DecideCtx { top: level, dl }) {
                    Decision::Flagged => flags[t / 64] |= 1u64 << (t % 64),
                    Decision::Fix(p) => {
                        for s in p.support() {
                            ctx.m.frame_bit(out[s], p.x_bit(s), p.z_bit(s), t);
                        }
                    }
                }
            });
        }
    }
    flags
}

// ----- Transversal readout analysis -----

/// Result of decoding a transversal single-basis measurement of one block.
pub struct ReadoutAnalysis {
    /// Trials whose syndrome the one-sided decode rule rejected.
    pub flags: Vec<u64>,
    /// Corrected logical parities `[L, S]`.
    pub logical: [Vec<u64>; 2],
}

/// Decode the classical bits of a transversal Z (`side = Z`) or X
/// (`side = X`) measurement: compute the readable checks, run the one-sided
/// hierarchical decode rule per dirty trial, and return corrected logical
/// parities plus flags.
pub fn analyze_readout(
    tables: &CodeTables,
    level: usize,
    side: CheckKind,
    outcomes: &[Vec<u64>],
    live: &[u64],
    dl: usize,
) -> ReadoutAnalysis {
    let lt = tables.get(level);
    let words = live.len();
    let (index, rep_l, rep_s) = match side {
        CheckKind::Z => (&lt.z_index, &lt.logicals[ZL], &lt.logicals[ZS]),
        CheckKind::X => (&lt.x_index, &lt.logicals[XL], &lt.logicals[XS]),
    };
    let synd: Vec<Vec<u64>> = index
        .iter()
        .map(|&ci| {
            let mut v = vec![0u64; words];
            for q in lt.checks[ci].pauli.support() {
                xor_assign(&mut v, &outcomes[q]);
            }
            v
        })
        .collect();
    let parity_of = |rep: &PauliProduct| {
        let mut v = vec![0u64; words];
        for q in rep.support() {
            xor_assign(&mut v, &outcomes[q]);
        }
        v
    };
    let mut lpar = parity_of(rep_l);
    let mut spar = parity_of(rep_s);
    let mut dirty = vec![0u64; words];
    for s in &synd {
        or_assign(&mut dirty, s);
    }
    for w in 0..words {
        dirty[w] &= live[w];
    }
    let mut flags = vec![0u64; words];
    for_each_set(&dirty, |t| {
        let mut sv = BitVec::zeros(index.len());
        for (b, s) in synd.iter().enumerate() {
            if s[t / 64] >> (t % 64) & 1 == 1 {
                sv.set(b, true);
            }
        }
        let d = match side {
            CheckKind::Z => tables.decide_z(&sv, DecideCtx { top: level, dl }),
            CheckKind::X => tables.decide_x(&sv, DecideCtx { top: level, dl }),
        };
        match d {
            Decision::Flagged => flags[t / 64] |= 1u64 << (t % 64),
            Decision::Fix(p) => {
                if p.symplectic(rep_l) {
                    lpar[t / 64] ^= 1u64 << (t % 64);
                }
                if p.symplectic(rep_s) {
                    spar[t / 64] ^= 1u64 << (t % 64);
                }
            }
        }
    });
    ReadoutAnalysis {
        flags,
        logical: [lpar, spar],
    }
}

// ----- Logical operations -----

/// Transversal CNOT between two same-level blocks (logical CNOT on both
/// members).
pub fn logical_cnot(ctx: &mut SimCtx, a: &[usize], b: &[usize], live: &[u64]) {
    assert_eq!(a.len(), b.len());
    for q in 0..a.len() {
        ctx.noisy_cnot(a[q], b[q], live);
    }
}

/// Transversal H followed by the member-restoring relabeling: logical H on
/// both members.
pub fn logical_h(ctx: &mut SimCtx, region: &[usize], level: usize, live: &[u64]) {
    for &q in region {
        ctx.noisy_h(q, live);
    }
    let perm = &ctx.tables.get(level).had_perm;
    ctx.relabel(&[(region, perm)]);
}

// ----- Block decoding -----

/// Output of a decoding cascade on one block.
pub struct DecodedBlock {
    /// Wires holding the bare L and S member qubits.
    pub pair: [usize; 2],
    /// Trials whose syndrome bits could not be consistently resolved.
    pub flags: Vec<u64>,
}

/// Run a synthesized decode circuit on `wires` (noisy gates plus constant
/// sign-fix frames).
pub fn run_decode_circuit(ctx: &mut SimCtx, dec: &DecodeCircuit, wires: &[usize], live: &[u64]) {
    assert_eq!(wires.len(), dec.n);
    for g in &dec.circuit.gates {
        match g {
            crate::circuit::Gate::H(q) => ctx.noisy_h(wires[*q], live),
            crate::circuit::Gate::S(q) => ctx.noisy_s(wires[*q], live),
            crate::circuit::Gate::Cnot(c, t) => ctx.noisy_cnot(wires[*c], wires[*t], live),
            _ => unreachable!("decode circuits contain only H/S/CNOT"),
        }
    }
    for q in dec.frame_fix.support() {
        ctx.frame_const(wires[q], dec.frame_fix.x_bit(q), dec.frame_fix.z_bit(q));
    }
}

struct DecodeNode {
    l: usize,
    s: usize,
    flag: Vec<u64>,
}

/// Decode a level-`level` block bottom-up with noisy circuits, measuring
/// every check along the way. With `ec` set, a layer whose checks fire
/// around exactly one flagged child treats that child as an erasure and
/// corrects it; everything else detected becomes a flag. The block's pair
/// ends up bare on the returned wires.
pub fn decode_block(
    ctx: &mut SimCtx,
    region: &[usize],
    level: usize,
    ec: bool,
    live: &[u64],
) -> DecodedBlock {
    assert_eq!(region.len(), block_len(level));
    let words = ctx.words();
    let dec4 = c4_decoder();
    let mut nodes: Vec<DecodeNode> = Vec::with_capacity(pow3(level - 1));
    for b in 0..pow3(level - 1) {
        let wires = &region[4 * b..4 * b + 4];
        run_decode_circuit(ctx, &dec4, wires, live);
        let bx = ctx.noisy_measure(wires[dec4.check_wires[0]], Basis::Z, live);
        let bz = ctx.noisy_measure(wires[dec4.check_wires[1]], Basis::Z, live);
        let mut flag = bx;
        or_assign(&mut flag, &bz);
        for w in 0..words {
            flag[w] &= live[w];
        }
        nodes.push(DecodeNode {
            l: wires[dec4.pair[0]],
            s: wires[dec4.pair[1]],
            flag,
        });
    }
    let dec6 = member_decoder();
    // Images of single input-wire errors under the decode circuit, for
    // pushing erasure fixes into post-circuit coordinates.
    let images: Vec<[PauliProduct; 2]> = (0..6)
        .map(|c| {
            [Pauli::X, Pauli::Z].map(|kind| {
                let mut p = PauliProduct::single(6, c, kind);
                for g in &dec6.circuit.gates {
                    p = crate::circuit::conjugate_pauli(g, &p).0;
                }
                p
            })
        })
        .collect();
    for k in 2..=level {
        let solves = ctx.tables.get(k).solve_full.as_ref().expect("layer solves");
        let mut next: Vec<DecodeNode> = Vec::with_capacity(nodes.len() / 3);
        for trio in nodes.chunks(3) {
            let wires = [
                trio[0].l, trio[0].s, trio[1].l, trio[1].s, trio[2].l, trio[2].s,
            ];
            run_decode_circuit(ctx, &dec6, &wires, live);
            let bits: Vec<Vec<u64>> = dec6
                .check_wires
                .iter()
                .map(|&cw| ctx.noisy_measure(wires[cw], Basis::Z, live))
                .collect();
            let mut flag = vec![0u64; words];
            for w in 0..words {
                let mut issue = (trio[0].flag[w] | trio[1].flag[w] | trio[2].flag[w]) & live[w];
                for b in &bits {
                    issue |= b[w] & live[w];
                }
                while issue != 0 {
                    let bit = issue.trailing_zeros() as usize;
                    issue &= issue - 1;
                    let t = w * 64 + bit;
                    let cf: Vec<bool> = trio.iter().map(|n| mask_bit(&n.flag, t)).collect();
                    let nf = cf.iter().filter(|&&f| f).count();
                    let tb: Vec<bool> = bits.iter().map(|b| mask_bit(b, t)).collect();
                    if ec && nf == 1 {
                        // Erasure-solve the flagged child from this layer's
                        // four check bits; the solve is exact, so the child
                        // is consistent afterwards.
                        let slot = cf.iter().position(|&f| f).unwrap();
                        let minv = &solves[slot];
                        let mut e = [false; 4];
                        for (j, ej) in e.iter_mut().enumerate() {
                            for (i, &ti) in tb.iter().enumerate() {
                                *ej ^= minv.get(j, i) && ti;
                            }
                        }
                        // The solve is in the decoder's input coordinates;
                        // the circuit already ran, so apply its image.
                        let mut fix = PauliProduct::identity(6);
                        for (j, &ej) in e.iter().enumerate() {
                            if ej {
                                fix.mul_assign(&images[2 * slot + j / 2][j % 2]);
                            }
                        }
                        for c in fix.support() {
                            ctx.m.frame_bit(wires[c], fix.x_bit(c), fix.z_bit(c), t);
                        }
                    } else if nf > 0 || tb.iter().any(|&b| b) {
                        flag[w] |= 1u64 << bit;
                    }
                }
            }
            next.push(DecodeNode {
                l: wires[0],
                s: wires[1],
                flag,
            });
        }
        nodes = next;
    }
    let top = nodes.remove(0);
    DecodedBlock {
        pair: [top.l, top.s],
        flags: top.flag,
    }
}

// ----- Reference-state helpers -----

/// Tableau row representing `+p` (phase tracks the Y count).
pub fn row_of(p: &PauliProduct) -> Row {
    let y = p
        .support()
        .iter()
        .filter(|&&q| p.x_bit(q) && p.z_bit(q))
        .count();
    Row {
        phase: (y % 4) as u8,
        bits: p.bits().clone(),
    }
}

/// Stabilizer rows of a perfectly encoded block: all checks plus the two
/// `basis`-side logicals (`Z`: |00>, `X`: |++>).
pub fn encoded_block_rows(tables: &CodeTables, level: usize, basis: Basis) -> Vec<Row> {
    let lt = tables.get(level);
    let mut rows: Vec<Row> = lt.checks.iter().map(|c| row_of(&c.pauli)).collect();
    let (a, b) = match basis {
        Basis::Z => (ZL, ZS),
        Basis::X => (XL, XS),
    };
    rows.push(row_of(&lt.logicals[a]));
    rows.push(row_of(&lt.logicals[b]));
    rows
}

/// Stabilizer rows of a perfect encoded Bell pair across two blocks
/// (local indices `0..2n`).
pub fn bell_reference_rows(tables: &CodeTables, level: usize) -> Vec<Row> {
    let lt = tables.get(level);
    let n = lt.n;
    let left: Vec<usize> = (0..n).collect();
    let right: Vec<usize> = (n..2 * n).collect();
    let mut rows = Vec::new();
    for c in &lt.checks {
        rows.push(row_of(&c.pauli.embed(2 * n, &left)));
        rows.push(row_of(&c.pauli.embed(2 * n, &right)));
    }
    for idx in [XL, ZL, XS, ZS] {
        let op = &lt.logicals[idx];
        let joint = op.embed(2 * n, &left).mul(&op.embed(2 * n, &right));
        rows.push(row_of(&joint));
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::CodeTables;
    use crate::noise::{NoiseParams, PlannedFault};

    fn ctx_off(tables: &CodeTables, words: usize) -> SimCtx<'_> {
        SimCtx::new(tables, words, 0, 0x5eed, NoiseSource::Off)
    }

    fn full(words: usize) -> Vec<u64> {
        mask_full(words)
    }

    fn pp(s: &str) -> PauliProduct {
        PauliProduct::parse(s).unwrap()
    }

    /// The canonical state must contain every listed operator with a plus
    /// sign, and every trial's residual must commute with it.
    fn assert_stabilized(ctx: &mut SimCtx, region: &[usize], ops: &[PauliProduct]) {
        let n = ctx.m.num_qubits();
        for p in ops {
            let g = p.embed(n, region);
            assert!(
                !ctx.m.tab.membership_sign(&row_of(&g)),
                "minus sign on {p}"
            );
            let synd = ctx.residual_syndrome(&g);
            assert!(
                synd.iter().all(|&w| w == 0),
                "residual anticommutes with {p}"
            );
        }
    }

    #[test]
    fn cat_prepares_encoded_zero() {
        let ct = CodeTables::new(1);
        let mut ctx = ctx_off(&ct, 2);
        let out = ctx.alloc_region(4);
        let fail = blockprep(&mut ctx, 1, Basis::Z, &out, &full(2));
        assert!(!mask_any(&fail));
        assert_stabilized(
            &mut ctx,
            &out,
            &[pp("XXXX"), pp("ZZZZ"), pp("ZIZI"), pp("IIZZ")],
        );
    }

    #[test]
    fn cat_prepares_encoded_plus() {
        let ct = CodeTables::new(1);
        let mut ctx = ctx_off(&ct, 2);
        let out = ctx.alloc_region(4);
        let fail = blockprep(&mut ctx, 1, Basis::X, &out, &full(2));
        assert!(!mask_any(&fail));
        assert_stabilized(
            &mut ctx,
            &out,
            &[pp("XXXX"), pp("ZZZZ"), pp("XXII"), pp("IXIX")],
        );
    }

    #[test]
    fn bell_pair_level1_is_correlated_and_counted() {
        let ct = CodeTables::new(1);
        let words = 2;
        let mut ctx = ctx_off(&ct, words);
        let a = ctx.alloc_region(4);
        let b = ctx.alloc_region(4);
        let fail = bell_pair(&mut ctx, 1, &a, &b, &full(words));
        assert!(!mask_any(&fail));
        let n = ctx.m.num_qubits();
        let mut ops: Vec<PauliProduct> = Vec::new();
        for s in ["XXXX", "ZZZZ"] {
            ops.push(pp(s).embed(n, &a));
            ops.push(pp(s).embed(n, &b));
        }
        for s in ["XXII", "ZIZI", "IXIX", "IIZZ"] {
            ops.push(pp(s).embed(n, &a).mul(&pp(s).embed(n, &b)));
        }
        for op in &ops {
            assert!(!ctx.m.tab.membership_sign(&row_of(op)), "sign on {op}");
            let synd = ctx.residual_syndrome(op);
            assert!(synd.iter().all(|&w| w == 0), "residual on {op}");
        }
        // Noiseless: every trial accepted first try, so the counts are the
        // raw network sizes (16 preparations, 20 CNOTs, 8 measurements per
        // pair).
        let t = (words * 64) as u64;
        assert_eq!(ctx.counters.preps, 16 * t);
        assert_eq!(ctx.counters.cnots, 20 * t);
        assert_eq!(ctx.counters.meas, 8 * t);
        assert_eq!(ctx.counters.rate(StageClass::PrepZ, 1), Some(1.0));
        assert_eq!(ctx.counters.rate(StageClass::PrepX, 1), Some(1.0));
    }

    #[test]
    fn blockprep_level2_prepares_both_bases() {
        let ct = CodeTables::new(2);
        for basis in [Basis::Z, Basis::X] {
            let mut ctx = ctx_off(&ct, 1);
            let out = ctx.alloc_region(12);
            let fail = blockprep(&mut ctx, 2, basis, &out, &full(1));
            assert!(!mask_any(&fail));
            let lt = ct.get(2);
            let mut ops: Vec<PauliProduct> =
                lt.checks.iter().map(|c| c.pauli.clone()).collect();
            match basis {
                Basis::Z => {
                    ops.push(lt.logicals[ZL].clone());
                    ops.push(lt.logicals[ZS].clone());
                }
                Basis::X => {
                    ops.push(lt.logicals[XL].clone());
                    ops.push(lt.logicals[XS].clone());
                }
            }
            assert_stabilized(&mut ctx, &out, &ops);
        }
    }

    #[test]
    fn bell_pair_level2_state_and_exact_costs() {
        let ct = CodeTables::new(2);
        let words = 1;
        let mut ctx = ctx_off(&ct, words);
        let a = ctx.alloc_region(12);
        let b = ctx.alloc_region(12);
        let fail = bell_pair(&mut ctx, 2, &a, &b, &full(words));
        assert!(!mask_any(&fail));
        let lt = ct.get(2);
        let n = ctx.m.num_qubits();
        let mut ops: Vec<PauliProduct> = Vec::new();
        for c in &lt.checks {
            ops.push(c.pauli.embed(n, &a));
            ops.push(c.pauli.embed(n, &b));
        }
        for idx in [XL, ZL, XS, ZS] {
            let op = &lt.logicals[idx];
            ops.push(op.embed(n, &a).mul(&op.embed(n, &b)));
        }
        for op in &ops {
            assert!(!ctx.m.tab.membership_sign(&row_of(op)), "sign on {op}");
            let synd = ctx.residual_syndrome(op);
            assert!(synd.iter().all(|&w| w == 0), "residual on {op}");
        }
        // Structural zero-noise costs per delivered level-2 pair.
        let t = (words * 64) as u64;
        assert_eq!(ctx.counters.preps, 192 * t);
        assert_eq!(ctx.counters.cnots, 300 * t);
    }

    #[test]
    fn teleport_preserves_state_and_stays_quiet() {
        let ct = CodeTables::new(2);
        // Level 1, post-selected.
        let mut ctx = ctx_off(&ct, 1);
        let o = ctx.alloc_region(4);
        let out = ctx.alloc_region(4);
        blockprep(&mut ctx, 1, Basis::Z, &o, &full(1));
        ctx.push_frame();
        let flags = ec_teleport(&mut ctx, &o, &out, 1, TeleportPolicy::Postselect, &full(1));
        ctx.pop_frame();
        assert!(!mask_any(&flags));
        assert_stabilized(
            &mut ctx,
            &out,
            &[pp("XXXX"), pp("ZZZZ"), pp("ZIZI"), pp("IIZZ")],
        );
        // Level 2, decoding policy.
        let mut ctx = ctx_off(&ct, 1);
        let o = ctx.alloc_region(12);
        let out = ctx.alloc_region(12);
        blockprep(&mut ctx, 2, Basis::X, &o, &full(1));
        ctx.push_frame();
        let flags = ec_teleport(&mut ctx, &o, &out, 2, TeleportPolicy::Ec { dl: 0 }, &full(1));
        ctx.pop_frame();
        assert!(!mask_any(&flags));
        let lt = ct.get(2);
        let mut ops: Vec<PauliProduct> = lt.checks.iter().map(|c| c.pauli.clone()).collect();
        ops.push(lt.logicals[XL].clone());
        ops.push(lt.logicals[XS].clone());
        assert_stabilized(&mut ctx, &out, &ops);
    }

    #[test]
    fn teleport_flags_planted_error() {
        let ct = CodeTables::new(1);
        let mut ctx = ctx_off(&ct, 1);
        let o = ctx.alloc_region(4);
        let out = ctx.alloc_region(4);
        blockprep(&mut ctx, 1, Basis::Z, &o, &full(1));
        // X on one data qubit of a single trial anticommutes with the Z
        // check, so exactly that trial must be flagged.
        ctx.m.error_bit(o[0], true, false, 5);
        ctx.push_frame();
        let flags = ec_teleport(&mut ctx, &o, &out, 1, TeleportPolicy::Postselect, &full(1));
        ctx.pop_frame();
        assert_eq!(flags[0], 1u64 << 5);
    }

    #[test]
    fn teleport_ec_corrects_single_planted_error() {
        let ct = CodeTables::new(2);
        let mut ctx = ctx_off(&ct, 1);
        let o = ctx.alloc_region(12);
        let out = ctx.alloc_region(12);
        blockprep(&mut ctx, 2, Basis::Z, &o, &full(1));
        ctx.m.error_bit(o[0], true, false, 3);
        ctx.push_frame();
        let flags = ec_teleport(&mut ctx, &o, &out, 2, TeleportPolicy::Ec { dl: 0 }, &full(1));
        ctx.pop_frame();
        assert!(!mask_any(&flags), "located error must be corrected");
        let lt = ct.get(2);
        // Teleporting |00> preserves it: any X-class logical content would
        // flip the readout. The residual may keep a detectable weight-one
        // error on the faulted trial (an EC step removes logical damage,
        // not the physical error), but the top layer must be clean.
        let r = ctx.m.residual_of_trial(&out, 3);
        assert!(!r.symplectic(&lt.logicals[ZL]));
        assert!(!r.symplectic(&lt.logicals[ZS]));
        let synd = ct.syndrome_of(2, &r);
        for b in lt.group_bits(2, 0) {
            assert!(!synd.get(b), "top layer must be clean");
        }
        // Every other trial reads out perfectly.
        let n = ctx.m.num_qubits();
        for op in lt
            .checks
            .iter()
            .map(|c| &c.pauli)
            .chain([&lt.logicals[ZL], &lt.logicals[ZS]])
        {
            let s = ctx.residual_syndrome(&op.embed(n, &out));
            assert_eq!(s[0] & !(1u64 << 3), 0, "leak on {op}");
        }
    }

    #[test]
    fn planted_fault_is_retried_away() {
        let ct = CodeTables::new(1);
        // Count pass: enumerate the noisy locations of one level-1 pair.
        let mut ctx = SimCtx::new(&ct, 1, 0, 0x5eed, NoiseSource::Count { locs: Vec::new() });
        let a = ctx.alloc_region(4);
        let b = ctx.alloc_region(4);
        bell_pair(&mut ctx, 1, &a, &b, &full(1));
        let locs = match &ctx.noise {
            NoiseSource::Count { locs } => locs.clone(),
            _ => unreachable!(),
        };
        assert_eq!(locs.len(), 44, "16 preps + 20 cnots + 8 measurements");
        // Location 16 is the first verifier measurement of the |++> block's
        // cat stage; flipping it breaks the ring parity, forcing a retry.
        assert_eq!(locs[16], LocKind::Meas);
        let plan = vec![PlannedFault {
            loc: 16,
            trial: 7,
            kind: 0,
        }];
        let mut ctx = SimCtx::new(&ct, 1, 0, 0x5eed, NoiseSource::inject(plan));
        let a = ctx.alloc_region(4);
        let b = ctx.alloc_region(4);
        let fail = bell_pair(&mut ctx, 1, &a, &b, &full(1));
        assert!(!mask_any(&fail));
        // Trial 7 retried once; the rerun is clean by construction.
        assert_eq!(ctx.counters.attempts(StageClass::PrepX, 1), 65);
        assert_eq!(ctx.counters.accepts(StageClass::PrepX, 1), 64);
        assert_eq!(ctx.counters.attempts(StageClass::PrepZ, 1), 64);
        // Every trial, including the retried one, is a perfect pair: the
        // residual commutes with the whole joint stabilizer group (each
        // half alone may carry correlator-class content, which is fine).
        let n = ctx.m.num_qubits();
        for s in ["XXXX", "ZZZZ"] {
            for r in [&a, &b] {
                let synd = ctx.residual_syndrome(&pp(s).embed(n, r));
                assert_eq!(synd[0], 0, "check {s} leak");
            }
        }
        for s in ["XXII", "ZIZI", "IXIX", "IIZZ"] {
            let joint = pp(s).embed(n, &a).mul(&pp(s).embed(n, &b));
            let synd = ctx.residual_syndrome(&joint);
            assert_eq!(synd[0], 0, "correlator {s} leak");
        }
    }

    #[test]
    fn decode_reads_out_prepared_blocks() {
        let ct = CodeTables::new(2);
        for basis in [Basis::Z, Basis::X] {
            let mut ctx = ctx_off(&ct, 1);
            let out = ctx.alloc_region(12);
            let fail = blockprep(&mut ctx, 2, basis, &out, &full(1));
            assert!(!mask_any(&fail));
            let dec = decode_block(&mut ctx, &out, 2, false, &full(1));
            assert!(!mask_any(&dec.flags));
            for wire in dec.pair {
                let w = ctx.noisy_measure(wire, basis, &full(1));
                assert_eq!(w[0], 0, "decoded member must read +1");
            }
        }
    }

    #[test]
    fn decode_reads_bell_correlations() {
        let ct = CodeTables::new(2);
        let mut ctx = ctx_off(&ct, 1);
        let a = ctx.alloc_region(12);
        let b = ctx.alloc_region(12);
        let fail = bell_pair(&mut ctx, 2, &a, &b, &full(1));
        assert!(!mask_any(&fail));
        let da = decode_block(&mut ctx, &a, 2, false, &full(1));
        let db = decode_block(&mut ctx, &b, 2, false, &full(1));
        assert!(!mask_any(&da.flags));
        assert!(!mask_any(&db.flags));
        // L members: Z-basis correlation; S members: X-basis correlation.
        let za = ctx.noisy_measure(da.pair[0], Basis::Z, &full(1));
        let zb = ctx.noisy_measure(db.pair[0], Basis::Z, &full(1));
        assert_eq!(za[0] ^ zb[0], 0);
        let xa = ctx.noisy_measure(da.pair[1], Basis::X, &full(1));
        let xb = ctx.noisy_measure(db.pair[1], Basis::X, &full(1));
        assert_eq!(xa[0] ^ xb[0], 0);
    }

    #[test]
    fn logical_h_maps_prepared_bases() {
        let ct = CodeTables::new(2);
        let mut ctx = ctx_off(&ct, 1);
        let out = ctx.alloc_region(12);
        blockprep(&mut ctx, 2, Basis::Z, &out, &full(1));
        logical_h(&mut ctx, &out, 2, &full(1));
        let lt = ct.get(2);
        let mut ops: Vec<PauliProduct> = lt.checks.iter().map(|c| c.pauli.clone()).collect();
        ops.push(lt.logicals[XL].clone());
        ops.push(lt.logicals[XS].clone());
        assert_stabilized(&mut ctx, &out, &ops);
    }

    #[test]
    fn installed_reference_blocks_match_prepared_ones() {
        let ct = CodeTables::new(2);
        let mut ctx = ctx_off(&ct, 1);
        let out = ctx.alloc_region(12);
        let rows = encoded_block_rows(&ct, 2, Basis::Z);
        ctx.m.install_state(&out, &rows);
        let lt = ct.get(2);
        let mut ops: Vec<PauliProduct> = lt.checks.iter().map(|c| c.pauli.clone()).collect();
        ops.push(lt.logicals[ZL].clone());
        ops.push(lt.logicals[ZS].clone());
        assert_stabilized(&mut ctx, &out, &ops);
        // And the pair version.
        let a = ctx.alloc_region(12);
        let b = ctx.alloc_region(12);
        let joint: Vec<usize> = a.iter().chain(&b).copied().collect();
        ctx.m.install_state(&joint, &bell_reference_rows(&ct, 2));
        let n = ctx.m.num_qubits();
        for idx in [XL, ZL, XS, ZS] {
            let op = &lt.logicals[idx];
            let j = op.embed(n, &a).mul(&op.embed(n, &b));
            assert!(!ctx.m.tab.membership_sign(&row_of(&j)));
        }
    }

    #[test]
    fn acceptance_rate_tracks_known_verification_value() {
        // At gamma = 0.01 the level-1 verification acceptance is 0.940.
        let ct = CodeTables::new(1);
        let words = 512;
        let params = NoiseParams::scaled(0.01);
        let mut ctx = SimCtx::new(&ct, words, 0, 0xA11CE, NoiseSource::random(7, params));
        let a = ctx.alloc_region(4);
        let b = ctx.alloc_region(4);
        bell_pair(&mut ctx, 1, &a, &b, &full(words));
        let v = ctx.counters.v_rate(1).unwrap();
        assert!((v - 0.940).abs() < 0.01, "v(1) = {v}");
        // CNOTs consumed per delivered pair: 2 * 8 / v + 4.
        let per_pair = ctx.counters.cnots as f64 / (words * 64) as f64;
        let expect = 16.0 / v + 4.0;
        assert!(
            (per_pair - expect).abs() < 0.2,
            "cnots/pair = {per_pair}, expected ~{expect}"
        );
    }
}
