//! Monte Carlo error-rate experiments on the protocol networks.
//!
//! Gate benchmarks run on reference entanglement: perfect encoded Bell pairs
//! are installed directly in the tableau, the benchmarked gate contributes
//! only its error channel (the ideal gate acts as the identity on the
//! reference correlators), and teleportation-based error correction
//! processes the acted blocks. Verification is virtual: correctness is read
//! off the per-trial residual error planes by checking commutation with the
//! reference stabilizers. That reports exactly what error-free disentangling
//! CNOTs followed by error-free logical measurements would, without
//! disturbing the state.
//!
//! Gate experiments apply the error model and the teleportation twice. The
//! first pass establishes acceptance and the steady-state input error; the
//! second pass is measured. Accepted trials that already carry an undetected
//! logical error after the first pass are excluded from the conditional
//! statistic, so the reported error is the incremental one.
//!
//! Trials are sharded into fixed-size word ranges. All randomness is keyed
//! by global trial/word indices, so merged results are identical for any
//! shard execution order or worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::code::{block_len, CheckKind, CodeTables, DecideCtx, Decision, XL, XS, ZL, ZS};
use crate::noise::{NoiseParams, NoiseSource};
use crate::pauli::{Pauli, PauliProduct};
#[cfg(debug_assertions)]
use crate::protocol::row_of;
use crate::protocol::{
    analyze_readout, and_not, bell_pair, bell_reference_rows, blockprep, decode_block,
    ec_teleport, encoded_block_rows, for_each_set, mask_count, mask_full, or_assign, Counters,
    Mode, ReadoutAnalysis, SimCtx, TeleportPolicy,
};
use crate::stats::ExperimentStats;
use crate::tableau::Basis;

/// Trials per shard (in 64-trial words). Large shards amortize the shared
/// canonical-tableau work of retried stages over more trials.
const SHARD_WORDS: usize = 256;

/// Which network an experiment benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    /// Transversal CNOT between the acted members of two Bell pairs.
    Cnot,
    /// Transversal Hadamard on the acted member of one Bell pair.
    Had,
    /// Verified preparation of an encoded |00> block, read out logically.
    Prep,
    /// Transversal noisy measurement of a perfect encoded |00> block.
    Meas,
    /// Decoding cascade applied to one half of a perfect Bell pair.
    Decode,
    /// Noisy Bell pair, one half decoded to bare qubits (state injection).
    Inject,
}

// ----- Shard bookkeeping -----

#[derive(Default, Clone, Copy)]
struct Tally {
    trials: u64,
    accepted: u64,
    detected: u64,
    conditional: u64,
    excluded: u64,
    cnots: u64,
}

impl Tally {
    fn add(&mut self, o: &Tally) {
        self.trials += o.trials;
        self.accepted += o.accepted;
        self.detected += o.detected;
        self.conditional += o.conditional;
        self.excluded += o.excluded;
        self.cnots += o.cnots;
    }

    fn stats(&self) -> ExperimentStats {
        ExperimentStats::from_counts(
            self.trials,
            self.accepted,
            self.detected,
            self.conditional,
            self.excluded,
            self.cnots,
        )
    }
}

/// Fixed-size word ranges `(word_base, words)` covering `trials` (rounded up
/// to whole words).
fn shards(trials: u64, shard_words: usize) -> Vec<(usize, usize)> {
    let total_words = (trials.div_ceil(64)).max(1) as usize;
    (0..total_words)
        .step_by(shard_words)
        .map(|wb| (wb, shard_words.min(total_words - wb)))
        .collect()
}

fn sim<'a>(
    tables: &'a CodeTables,
    words: usize,
    word_base: usize,
    gamma: f64,
    mode: Mode,
    seed: u64,
) -> SimCtx<'a> {
    let noise = if gamma == 0.0 {
        NoiseSource::Off
    } else {
        NoiseSource::random(seed, NoiseParams::scaled(gamma))
    };
    let mut ctx = SimCtx::new(tables, words, word_base, seed, noise);
    ctx.mode = mode;
    ctx
}

// ----- Virtual verification -----

struct BlockVerify {
    /// Residual anticommutation with each logical representative
    /// (XL, ZL, XS, ZS order), adjusted by located corrections.
    rep: [Vec<u64>; 4],
    flags: Vec<u64>,
}

/// Read a block's full check syndrome and logical disturbance off the
/// residual planes, then apply the mode's decision rule per dirty trial:
/// postselection flags everything, error correction fixes what the
/// hierarchy locates (bookkeeping only; the planes are untouched).
fn verify_block(
    ctx: &mut SimCtx,
    region: &[usize],
    level: usize,
    dl: usize,
    live: &[u64],
) -> BlockVerify {
    let words = ctx.words();
    let n = ctx.m.num_qubits();
    let tables = ctx.tables;
    let lt = tables.get(level);
    let synd: Vec<Vec<u64>> = lt
        .checks
        .iter()
        .map(|c| ctx.residual_syndrome(&c.pauli.embed(n, region)))
        .collect();
    let mut rep =
        [XL, ZL, XS, ZS].map(|i| ctx.residual_syndrome(&lt.logicals[i].embed(n, region)));
    let mut dirty = vec![0u64; words];
    for s in &synd {
        or_assign(&mut dirty, s);
    }
    for w in 0..words {
        dirty[w] &= live[w];
    }
    let mut flags = vec![0u64; words];
    match ctx.mode {
        Mode::Postselect => flags.copy_from_slice(&dirty),
        Mode::Ec => {
            for_each_set(&dirty, |t| {
                let mut sv = crate::gf2::BitVec::zeros(synd.len());
                for (b, s) in synd.iter().enumerate() {
                    if s[t / 64] >> (t % 64) & 1 == 1 {
                        sv.set(b, true);
                    }
                }
                match tables.decide(&sv, DecideCtx { top: level, dl }) {
                    Decision::Flagged => flags[t / 64] |= 1u64 << (t % 64),
                    Decision::Fix(p) => {
                        for (i, l) in [XL, ZL, XS, ZS].iter().enumerate() {
                            if p.symplectic(&lt.logicals[*l]) {
                                rep[i][t / 64] ^= 1u64 << (t % 64);
                            }
                        }
                    }
                }
            });
        }
    }
    for r in rep.iter_mut() {
        for w in 0..words {
            r[w] &= live[w];
        }
    }
    BlockVerify { rep, flags }
}

/// Verify one reference Bell pair: `(flags, wrong)` word masks. A trial is
/// wrong when some joint logical correlator is violated after located
/// corrections on either block.
fn verify_pair(
    ctx: &mut SimCtx,
    a: &[usize],
    b: &[usize],
    level: usize,
    dl: usize,
    live: &[u64],
) -> (Vec<u64>, Vec<u64>) {
    #[cfg(debug_assertions)]
    {
        let n = ctx.m.num_qubits();
        let lt = ctx.tables.get(level);
        for l in [XL, ZL, XS, ZS] {
            let op = &lt.logicals[l];
            let joint = op.embed(n, a).mul(&op.embed(n, b));
            debug_assert!(
                !ctx.m.tab.membership_sign(&row_of(&joint)),
                "joint correlator picked up a sign"
            );
        }
    }
    let va = verify_block(ctx, a, level, dl, live);
    let vb = verify_block(ctx, b, level, dl, live);
    let mut flags = va.flags;
    or_assign(&mut flags, &vb.flags);
    let words = ctx.words();
    let mut wrong = vec![0u64; words];
    for i in 0..4 {
        for w in 0..words {
            wrong[w] |= (va.rep[i][w] ^ vb.rep[i][w]) & live[w];
        }
    }
    (flags, wrong)
}

/// Virtual transversal readout: outcome bit q is the residual's
/// anticommutation with the measured single-qubit operator, i.e. the
/// error-free measurement record relative to the canonical block.
fn virtual_readout(
    ctx: &mut SimCtx,
    region: &[usize],
    level: usize,
    side: CheckKind,
    dl: usize,
    live: &[u64],
) -> ReadoutAnalysis {
    let n = ctx.m.num_qubits();
    let kind = match side {
        CheckKind::Z => Pauli::Z,
        CheckKind::X => Pauli::X,
    };
    let outs: Vec<Vec<u64>> = region
        .iter()
        .map(|&q| ctx.residual_syndrome(&PauliProduct::single(n, q, kind)))
        .collect();
    analyze_readout(ctx.tables, level, side, &outs, live, dl)
}

/// Residual violation of the joint correlators between a decoded bare pair
/// and its partner block, with the partner's rep adjustments folded in.
fn bare_pair_wrong(
    ctx: &mut SimCtx,
    pair: [usize; 2],
    partner: &[usize],
    partner_rep: &[Vec<u64>; 4],
    level: usize,
    live: &[u64],
) -> [Vec<u64>; 2] {
    let words = ctx.words();
    let n = ctx.m.num_qubits();
    let mut wrong = [vec![0u64; words], vec![0u64; words]];
    for (member, (bare, lx, lz)) in [(pair[0], XL, ZL), (pair[1], XS, ZS)].into_iter().enumerate()
    {
        for (kind, li) in [(Pauli::X, lx), (Pauli::Z, lz)] {
            #[cfg(debug_assertions)]
            {
                let lt = ctx.tables.get(level);
                let joint = PauliProduct::single(n, bare, kind)
                    .mul(&lt.logicals[li].embed(n, partner));
                debug_assert!(
                    !ctx.m.tab.membership_sign(&row_of(&joint)),
                    "decoded correlator picked up a sign"
                );
            }
            let _ = (level, partner);
            let bare_side = ctx.residual_syndrome(&PauliProduct::single(n, bare, kind));
            for w in 0..words {
                wrong[member][w] |= (bare_side[w] ^ partner_rep[li][w]) & live[w];
            }
        }
    }
    wrong
}

// ----- Gate experiments (two-pass, reference entanglement) -----

fn gate_channel(ctx: &mut SimCtx, gate: GateKind, heads: &[Vec<usize>], live: &[u64]) {
    match gate {
        GateKind::Cnot => {
            let (a, b) = (&heads[0], &heads[1]);
            for q in 0..a.len() {
                ctx.cnot_error_only(a[q], b[q], live);
            }
        }
        GateKind::Had => {
            for &q in &heads[0] {
                ctx.one_qubit_error_only(q, live);
            }
        }
        _ => unreachable!("only gate benchmarks have an error channel pass"),
    }
}

/// Teleport every acted member into its spare slot (scoped scratch), then
/// swap head and spare. Returns the accumulated flag mask.
fn teleport_round(
    ctx: &mut SimCtx,
    heads: &mut [Vec<usize>],
    spares: &mut [Vec<usize>],
    level: usize,
    dl: usize,
    live: &[u64],
) -> Vec<u64> {
    let policy = match ctx.mode {
        Mode::Postselect => TeleportPolicy::Postselect,
        Mode::Ec => TeleportPolicy::Ec { dl },
    };
    let words = ctx.words();
    let mut flags = vec![0u64; words];
    for i in 0..heads.len() {
        let ok = and_not(live, &flags);
        ctx.push_frame();
        let fl = ec_teleport(ctx, &heads[i], &spares[i], level, policy, &ok);
        ctx.pop_frame();
        or_assign(&mut flags, &fl);
        std::mem::swap(&mut heads[i], &mut spares[i]);
    }
    for w in 0..words {
        flags[w] &= live[w];
    }
    flags
}

fn gate_shard(
    tables: &CodeTables,
    gate: GateKind,
    level: usize,
    gamma: f64,
    words: usize,
    word_base: usize,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> Tally {
    let mut ctx = sim(tables, words, word_base, gamma, mode, seed);
    let bl = block_len(level);
    let members = if gate == GateKind::Cnot { 2 } else { 1 };
    let rows = bell_reference_rows(tables, level);
    let mut heads = Vec::new();
    let mut partners = Vec::new();
    let mut spares = Vec::new();
    for _ in 0..members {
        let h = ctx.alloc_region(bl);
        let p = ctx.alloc_region(bl);
        let s = ctx.alloc_region(bl);
        let joint: Vec<usize> = h.iter().chain(&p).copied().collect();
        ctx.m.install_state(&joint, &rows);
        heads.push(h);
        partners.push(p);
        spares.push(s);
    }
    let live = mask_full(words);
    let verify =
        |ctx: &mut SimCtx, heads: &[Vec<usize>], mask: &[u64]| -> (Vec<u64>, Vec<u64>) {
            let mut flags = vec![0u64; words];
            let mut wrong = vec![0u64; words];
            for i in 0..members {
                let (f, wr) = verify_pair(ctx, &heads[i], &partners[i], level, dl, mask);
                or_assign(&mut flags, &f);
                or_assign(&mut wrong, &wr);
            }
            (flags, wrong)
        };
    // Pass 1: reach the steady state and weed out detections.
    gate_channel(&mut ctx, gate, &heads, &live);
    let flags1 = teleport_round(&mut ctx, &mut heads, &mut spares, level, dl, &live);
    let accepted = and_not(&live, &flags1);
    let (vf1, vw1) = verify(&mut ctx, &heads, &accepted);
    // Pass 2: the measured application.
    gate_channel(&mut ctx, gate, &heads, &accepted);
    let flags2 = teleport_round(&mut ctx, &mut heads, &mut spares, level, dl, &accepted);
    let (vf2, vw2) = verify(&mut ctx, &heads, &accepted);
    let mut tally = Tally::default();
    tally.trials = mask_count(&live);
    tally.accepted = mask_count(&accepted);
    tally.cnots = ctx.counters.cnots;
    for w in 0..words {
        let det = (flags2[w] | vf2[w]) & accepted[w];
        let pre = vw1[w] & !vf1[w] & accepted[w];
        tally.detected += det.count_ones() as u64;
        tally.excluded += (pre & !det).count_ones() as u64;
        tally.conditional += (vw2[w] & accepted[w] & !det & !pre).count_ones() as u64;
    }
    tally
}

// ----- Single-pass experiments -----

fn prep_shard(
    tables: &CodeTables,
    level: usize,
    gamma: f64,
    words: usize,
    word_base: usize,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> Tally {
    let mut ctx = sim(tables, words, word_base, gamma, mode, seed);
    let out = ctx.alloc_region(block_len(level));
    let live = mask_full(words);
    let fail = blockprep(&mut ctx, level, Basis::Z, &out, &live);
    let ok = and_not(&live, &fail);
    let dlr = match mode {
        Mode::Postselect => level,
        Mode::Ec => dl,
    };
    let ra = virtual_readout(&mut ctx, &out, level, CheckKind::Z, dlr, &ok);
    let mut tally = Tally::default();
    tally.trials = mask_count(&live);
    tally.accepted = mask_count(&ok);
    tally.cnots = ctx.counters.cnots;
    for w in 0..words {
        let det = ra.flags[w] & ok[w];
        tally.detected += det.count_ones() as u64;
        let wrong = (ra.logical[0][w] | ra.logical[1][w]) & ok[w] & !det;
        tally.conditional += wrong.count_ones() as u64;
    }
    tally
}

fn meas_shard(
    tables: &CodeTables,
    level: usize,
    gamma: f64,
    words: usize,
    word_base: usize,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> Tally {
    let mut ctx = sim(tables, words, word_base, gamma, mode, seed);
    let bl = block_len(level);
    let out = ctx.alloc_region(bl);
    ctx.m
        .install_state(&out, &encoded_block_rows(tables, level, Basis::Z));
    let live = mask_full(words);
    let outs: Vec<Vec<u64>> = out
        .iter()
        .map(|&q| ctx.noisy_measure(q, Basis::Z, &live))
        .collect();
    let dlr = match mode {
        Mode::Postselect => level,
        Mode::Ec => dl,
    };
    let ra = analyze_readout(tables, level, CheckKind::Z, &outs, &live, dlr);
    let mut tally = Tally::default();
    tally.trials = mask_count(&live);
    tally.accepted = tally.trials;
    tally.cnots = ctx.counters.cnots;
    for w in 0..words {
        let det = ra.flags[w] & live[w];
        tally.detected += det.count_ones() as u64;
        let wrong = (ra.logical[0][w] | ra.logical[1][w]) & live[w] & !det;
        tally.conditional += wrong.count_ones() as u64;
    }
    tally
}

fn decode_shard(
    tables: &CodeTables,
    level: usize,
    gamma: f64,
    words: usize,
    word_base: usize,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> Tally {
    let mut ctx = sim(tables, words, word_base, gamma, mode, seed);
    let bl = block_len(level);
    let a = ctx.alloc_region(bl);
    let b = ctx.alloc_region(bl);
    let joint: Vec<usize> = a.iter().chain(&b).copied().collect();
    ctx.m.install_state(&joint, &bell_reference_rows(tables, level));
    let live = mask_full(words);
    let db = decode_block(&mut ctx, &a, level, mode == Mode::Ec, &live);
    // The partner stays error-free; its rep adjustments are identically
    // zero, but run the verification anyway to keep one code path.
    let vb = verify_block(&mut ctx, &b, level, dl, &live);
    let mut flags = db.flags;
    or_assign(&mut flags, &vb.flags);
    let wm = bare_pair_wrong(&mut ctx, db.pair, &b, &vb.rep, level, &live);
    let mut wrong = wm[0].clone();
    or_assign(&mut wrong, &wm[1]);
    let mut tally = Tally::default();
    tally.trials = mask_count(&live);
    tally.accepted = tally.trials;
    tally.cnots = ctx.counters.cnots;
    for w in 0..words {
        let det = flags[w] & live[w];
        tally.detected += det.count_ones() as u64;
        tally.conditional += (wrong[w] & live[w] & !det).count_ones() as u64;
    }
    tally
}

fn inject_shard(
    tables: &CodeTables,
    level: usize,
    gamma: f64,
    words: usize,
    word_base: usize,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> Tally {
    let mut ctx = sim(tables, words, word_base, gamma, mode, seed);
    let bl = block_len(level);
    let a = ctx.alloc_region(bl);
    let b = ctx.alloc_region(bl);
    let live = mask_full(words);
    let fail = bell_pair(&mut ctx, level, &a, &b, &live);
    let ok = and_not(&live, &fail);
    let db = decode_block(&mut ctx, &a, level, mode == Mode::Ec, &ok);
    let vb = verify_block(&mut ctx, &b, level, dl, &ok);
    let mut flags = db.flags;
    or_assign(&mut flags, &vb.flags);
    let wm = bare_pair_wrong(&mut ctx, db.pair, &b, &vb.rep, level, &ok);
    let mut wrong = wm[0].clone();
    or_assign(&mut wrong, &wm[1]);
    let mut tally = Tally::default();
    tally.trials = mask_count(&live);
    tally.accepted = mask_count(&ok);
    tally.cnots = ctx.counters.cnots;
    for w in 0..words {
        let det = flags[w] & ok[w];
        tally.detected += det.count_ones() as u64;
        tally.conditional += (wrong[w] & ok[w] & !det).count_ones() as u64;
    }
    tally
}

// Temporary calibration probe: counts every candidate accounting convention
// for the decode/inject benchmarks in one pass over the same noisy trials.
#[derive(Default, Clone, Copy, Debug)]
pub struct DecodeProbe {
    pub trials: u64,
    pub accepted: u64,
    pub detected: u64,
    pub det_dec: u64,
    pub det_ver: u64,
    pub pre: u64,
    pub pair: u64,
    pub pair_x: u64,
    pub l_only: u64,
    pub l_only_x: u64,
    pub pair_fl: u64,
    pub pair_fboth: u64,
    pub l_fl: u64,
    pub pair_fl_x: u64,
    pub l_fl_x: u64,
}

impl DecodeProbe {
    fn add(mut self, o: DecodeProbe) -> DecodeProbe {
        self.trials += o.trials;
        self.accepted += o.accepted;
        self.detected += o.detected;
        self.det_dec += o.det_dec;
        self.det_ver += o.det_ver;
        self.pre += o.pre;
        self.pair += o.pair;
        self.pair_x += o.pair_x;
        self.l_only += o.l_only;
        self.l_only_x += o.l_only_x;
        self.pair_fl += o.pair_fl;
        self.pair_fboth += o.pair_fboth;
        self.l_fl += o.l_fl;
        self.pair_fl_x += o.pair_fl_x;
        self.l_fl_x += o.l_fl_x;
        self
    }
}

fn masked_count(m: &[u64], live: &[u64]) -> u64 {
    m.iter().zip(live).map(|(a, b)| (a & b).count_ones() as u64).sum()
}

fn decode_probe_shard(
    tables: &CodeTables,
    level: usize,
    gamma: f64,
    words: usize,
    word_base: usize,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> DecodeProbe {
    let mut ctx = sim(tables, words, word_base, gamma, mode, seed);
    let bl = block_len(level);
    let a = ctx.alloc_region(bl);
    let b = ctx.alloc_region(bl);
    let live = mask_full(words);
    let fail = bell_pair(&mut ctx, level, &a, &b, &live);
    let ok = and_not(&live, &fail);
    let (vfi, vwi) = verify_pair(&mut ctx, &a, &b, level, dl, &ok);
    let db = decode_block(&mut ctx, &a, level, true, &ok);
    let vb = verify_block(&mut ctx, &b, level, dl, &ok);
    let mut flags = db.flags.clone();
    or_assign(&mut flags, &vb.flags);
    let wm = bare_pair_wrong(&mut ctx, db.pair, &b, &vb.rep, level, &ok);
    let fl = ctx.measure_flip_only(&ok);
    let fs = ctx.measure_flip_only(&ok);
    let mut p = DecodeProbe {
        trials: mask_count(&live),
        accepted: mask_count(&ok),
        det_dec: masked_count(&db.flags, &ok),
        det_ver: masked_count(&vb.flags, &ok),
        ..DecodeProbe::default()
    };
    for w in 0..words {
        let okw = ok[w];
        let det = flags[w] & okw;
        let pre = vwi[w] & !vfi[w] & okw & !det;
        let pair = wm[0][w] | wm[1][w];
        p.detected += det.count_ones() as u64;
        p.pre += pre.count_ones() as u64;
        let c = |m: u64| (m & okw & !det).count_ones() as u64;
        let cx = |m: u64| (m & okw & !det & !pre).count_ones() as u64;
        p.pair += c(pair);
        p.pair_x += cx(pair);
        p.l_only += c(wm[0][w]);
        p.l_only_x += cx(wm[0][w]);
        p.pair_fl += c(pair | fl[w]);
        p.pair_fboth += c(pair | fl[w] | fs[w]);
        p.l_fl += c(wm[0][w] | fl[w]);
        p.pair_fl_x += cx(pair | fl[w]);
        p.l_fl_x += cx(wm[0][w] | fl[w]);
    }
    p
}

pub fn probe_decode(
    tables: &CodeTables,
    level: usize,
    gamma: f64,
    trials: u64,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> DecodeProbe {
    shards(trials, SHARD_WORDS)
        .par_iter()
        .map(|&(wb, w)| decode_probe_shard(tables, level, gamma, w, wb, mode, dl, seed))
        .reduce(DecodeProbe::default, DecodeProbe::add)
}

// ----- Public drivers -----

/// Run one error-rate experiment cell. `trials` is rounded up to whole
/// 64-trial words; results are reproducible and independent of worker
/// count for a fixed `(gamma, level, mode, dl, seed, trials)`.
pub fn run_gate_experiment(
    tables: &CodeTables,
    gate: GateKind,
    level: usize,
    gamma: f64,
    trials: u64,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> ExperimentStats {
    run_gate_experiment_sharded(tables, gate, level, gamma, trials, mode, dl, seed, SHARD_WORDS)
}

#[allow(clippy::too_many_arguments)]
fn run_gate_experiment_sharded(
    tables: &CodeTables,
    gate: GateKind,
    level: usize,
    gamma: f64,
    trials: u64,
    mode: Mode,
    dl: usize,
    seed: u64,
    shard_words: usize,
) -> ExperimentStats {
    let tallies: Vec<Tally> = shards(trials, shard_words)
        .par_iter()
        .map(|&(wb, w)| match gate {
            GateKind::Cnot | GateKind::Had => {
                gate_shard(tables, gate, level, gamma, w, wb, mode, dl, seed)
            }
            GateKind::Prep => prep_shard(tables, level, gamma, w, wb, mode, dl, seed),
            GateKind::Meas => meas_shard(tables, level, gamma, w, wb, mode, dl, seed),
            GateKind::Decode => decode_shard(tables, level, gamma, w, wb, mode, dl, seed),
            GateKind::Inject => inject_shard(tables, level, gamma, w, wb, mode, dl, seed),
        })
        .collect();
    let mut total = Tally::default();
    for t in &tallies {
        total.add(t);
    }
    total.stats()
}

/// A stored logical pair subjected to `steps` rounds of per-qubit waiting
/// error (one-qubit channel strength), each optionally followed by a
/// teleported error-correction step. Returns one summary per step: detected
/// counts the teleport flags at that step, the conditional error counts
/// fresh logical errors among surviving trials with no prior logical error.
#[allow(clippy::too_many_arguments)]
pub fn run_chain_experiment(
    tables: &CodeTables,
    level: usize,
    gamma: f64,
    steps: usize,
    teleport: bool,
    trials: u64,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> Vec<ExperimentStats> {
    let per_shard: Vec<Vec<Tally>> = shards(trials, SHARD_WORDS)
        .par_iter()
        .map(|&(wb, w)| chain_shard(tables, level, gamma, steps, teleport, w, wb, mode, dl, seed))
        .collect();
    let mut merged = vec![Tally::default(); steps];
    for sh in &per_shard {
        for (m, t) in merged.iter_mut().zip(sh) {
            m.add(t);
        }
    }
    merged.iter().map(|t| t.stats()).collect()
}

#[allow(clippy::too_many_arguments)]
fn chain_shard(
    tables: &CodeTables,
    level: usize,
    gamma: f64,
    steps: usize,
    teleport: bool,
    words: usize,
    word_base: usize,
    mode: Mode,
    dl: usize,
    seed: u64,
) -> Vec<Tally> {
    let mut ctx = sim(tables, words, word_base, gamma, mode, seed);
    let bl = block_len(level);
    let mut cur = ctx.alloc_region(bl);
    let b = ctx.alloc_region(bl);
    let mut spare = ctx.alloc_region(bl);
    let joint: Vec<usize> = cur.iter().chain(&b).copied().collect();
    ctx.m.install_state(&joint, &bell_reference_rows(tables, level));
    let policy = match mode {
        Mode::Postselect => TeleportPolicy::Postselect,
        Mode::Ec => TeleportPolicy::Ec { dl },
    };
    let mut pool = mask_full(words);
    let mut prev_wrong = vec![0u64; words];
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        for &q in &cur {
            ctx.one_qubit_error_only(q, &pool);
        }
        let fl = if teleport {
            ctx.push_frame();
            let fl = ec_teleport(&mut ctx, &cur, &spare, level, policy, &pool);
            ctx.pop_frame();
            std::mem::swap(&mut cur, &mut spare);
            fl
        } else {
            vec![0u64; words]
        };
        let surv = and_not(&pool, &fl);
        let (vf, vw) = verify_pair(&mut ctx, &cur, &b, level, dl, &surv);
        let mut t = Tally::default();
        t.trials = mask_count(&pool);
        t.accepted = t.trials;
        for w in 0..words {
            let det = fl[w] & pool[w];
            t.detected += det.count_ones() as u64;
            // Trials with an ill-defined logical state (verify flag) or a
            // prior logical error leave the conditional denominator.
            let excl = surv[w] & (vf[w] | prev_wrong[w]);
            t.excluded += excl.count_ones() as u64;
            t.conditional += (vw[w] & surv[w] & !vf[w] & !prev_wrong[w]).count_ones() as u64;
        }
        or_assign(&mut prev_wrong, &vw);
        pool = surv;
        out.push(t);
    }
    let total_cnots = ctx.counters.cnots;
    if let Some(first) = out.first_mut() {
        first.cnots = total_cnots;
    }
    out
}

// ----- Bell-pair production statistics -----

/// Acceptance rates and CNOT cost of Bell-pair production at one level.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BellStats {
    pub pairs: u64,
    pub accepted: u64,
    /// Verification acceptance rate v(l): mean of the |++> and |00>
    /// preparation stage rates at the top level.
    pub v: Option<f64>,
    /// Teleportation acceptance rate t(l) (undefined at level 1).
    pub t: Option<f64>,
    /// Physical CNOTs consumed per accepted pair.
    pub cnots_per_pair: f64,
}

pub fn run_bell_stats(
    tables: &CodeTables,
    level: usize,
    gamma: f64,
    pairs: u64,
    mode: Mode,
    seed: u64,
) -> BellStats {
    let results: Vec<(Counters, u64, u64)> = shards(pairs, SHARD_WORDS)
        .par_iter()
        .map(|&(wb, w)| {
            let mut ctx = sim(tables, w, wb, gamma, mode, seed);
            let bl = block_len(level);
            let o1 = ctx.alloc_region(bl);
            let o2 = ctx.alloc_region(bl);
            let live = mask_full(w);
            let fail = bell_pair(&mut ctx, level, &o1, &o2, &live);
            (
                ctx.counters.clone(),
                mask_count(&live),
                mask_count(&fail),
            )
        })
        .collect();
    let mut counters = Counters::default();
    let (mut total, mut failed) = (0u64, 0u64);
    for (c, t, f) in &results {
        counters.merge(c);
        total += t;
        failed += f;
    }
    let accepted = total - failed;
    BellStats {
        pairs: total,
        accepted,
        v: counters.v_rate(level),
        t: counters.t_rate(level),
        cnots_per_pair: if accepted == 0 {
            0.0
        } else {
            counters.cnots as f64 / accepted as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Mode;

    fn tables2() -> CodeTables {
        CodeTables::new(2)
    }

    #[test]
    fn zero_noise_experiments_are_clean() {
        let ct = tables2();
        for gate in [
            GateKind::Cnot,
            GateKind::Had,
            GateKind::Prep,
            GateKind::Meas,
            GateKind::Decode,
            GateKind::Inject,
        ] {
            for mode in [Mode::Postselect, Mode::Ec] {
                let st = run_gate_experiment(&ct, gate, 1, 0.0, 128, mode, 1, 0xFEED);
                assert_eq!(st.trials, 128, "{gate:?}");
                assert_eq!(st.accepted, 128, "{gate:?}");
                assert_eq!(st.detected_count, 0, "{gate:?}");
                assert_eq!(st.conditional_error_count, 0, "{gate:?}");
                assert_eq!(st.excluded, 0, "{gate:?}");
            }
        }
    }

    #[test]
    fn zero_noise_chain_is_clean() {
        let ct = tables2();
        for teleport in [false, true] {
            let steps = run_chain_experiment(&ct, 1, 0.0, 3, teleport, 128, Mode::Ec, 1, 7);
            assert_eq!(steps.len(), 3);
            for st in steps {
                assert_eq!(st.detected_count, 0);
                assert_eq!(st.conditional_error_count, 0);
                assert_eq!(st.excluded, 0);
            }
        }
    }

    #[test]
    fn zero_noise_level2_gate_is_clean() {
        let ct = tables2();
        let st = run_gate_experiment(&ct, GateKind::Cnot, 2, 0.0, 64, Mode::Postselect, 1, 3);
        assert_eq!(st.accepted, 64);
        assert_eq!(st.detected_count, 0);
        assert_eq!(st.conditional_error_count, 0);
    }

    #[test]
    fn shard_size_does_not_change_merged_stats() {
        let ct = tables2();
        let run = |sw: usize| {
            run_gate_experiment_sharded(
                &ct,
                GateKind::Cnot,
                1,
                0.02,
                320,
                Mode::Postselect,
                1,
                0xABCD,
                sw,
            )
        };
        let a = run(1);
        let b = run(2);
        let c = run(5);
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn experiment_reruns_reproduce_exactly() {
        let ct = tables2();
        let mk = || run_gate_experiment(&ct, GateKind::Inject, 1, 0.03, 256, Mode::Postselect, 1, 41);
        assert_eq!(mk(), mk());
    }

    #[test]
    fn chain_without_teleport_accumulates_error() {
        let ct = tables2();
        let steps = run_chain_experiment(&ct, 1, 0.05, 8, false, 4096, Mode::Postselect, 1, 11);
        // No detection without teleportation.
        assert!(steps.iter().all(|s| s.detected_count == 0));
        // The per-step conditional denominators shrink as trials accumulate
        // undetected errors, and late steps see no fewer errors than the
        // first (growing exclusions prove accumulation).
        assert!(steps[7].excluded > steps[1].excluded);
        assert!(steps[0].conditional_error_count > 0);
    }

    #[test]
    fn bell_stats_level1_zero_noise_costs() {
        let ct = tables2();
        let bs = run_bell_stats(&ct, 1, 0.0, 256, Mode::Ec, 5);
        assert_eq!(bs.pairs, 256);
        assert_eq!(bs.accepted, 256);
        assert_eq!(bs.v, Some(1.0));
        assert_eq!(bs.t, None);
        // 16 preparation CNOTs plus 4 combining CNOTs per pair.
        assert!((bs.cnots_per_pair - 20.0).abs() < 1e-9);
    }

    #[test]
    fn gate_experiment_detects_and_conditions_at_high_noise() {
        let ct = tables2();
        let st = run_gate_experiment(&ct, GateKind::Cnot, 1, 0.03, 2048, Mode::Postselect, 1, 17);
        assert!(st.accepted < st.trials);
        assert!(st.detected_count > 0);
        assert!(st.p_d > 0.0 && st.p_d < 1.0);
        // Conditional errors are much rarer than detections at level 1.
        assert!(st.p_c < st.p_d);
    }
}
