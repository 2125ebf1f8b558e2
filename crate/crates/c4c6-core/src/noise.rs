//! Noise model and reproducible sampling.
//!
//! The elementary noisy operations and their error probabilities:
//!
//! * two-qubit gate (CNOT): with probability `gamma`, one of the 15
//!   non-identity two-qubit Paulis, uniformly, applied after the gate;
//! * preparation: with probability `e_p = 4 gamma / 15`, the orthogonal
//!   state;
//! * measurement: with probability `e_m = 4 gamma / 15`, the reported
//!   outcome flips;
//! * one-qubit gate (Hadamard): with probability `e_h = 4 gamma / 5`, one of
//!   X, Y, Z uniformly, applied after the gate.
//!
//! The derived rates come from small verification networks built out of
//! CNOTs; [`prep_network`] and [`majority_network_wrong`] enumerate those
//! networks exactly so tests can pin the 4/15 and 4/5 slopes.
//!
//! Sampling is a pure function of `(seed, stream, trial)` through a
//! counter-based PRF, so results do not depend on scheduling or on how
//! trials are sharded across threads.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Two-qubit gate error probability.
    pub gamma: f64,
    /// Preparation error probability.
    pub e_p: f64,
    /// Measurement flip probability.
    pub e_m: f64,
    /// One-qubit gate error probability.
    pub e_h: f64,
}

impl NoiseParams {
    pub fn scaled(gamma: f64) -> Self {
        NoiseParams {
            gamma,
            e_p: 4.0 * gamma / 15.0,
            e_m: 4.0 * gamma / 15.0,
            e_h: 4.0 * gamma / 5.0,
        }
    }

    pub fn zero() -> Self {
        NoiseParams {
            gamma: 0.0,
            e_p: 0.0,
            e_m: 0.0,
            e_h: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.gamma == 0.0 && self.e_p == 0.0 && self.e_m == 0.0 && self.e_h == 0.0
    }
}

pub const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const MUL_A: u64 = 0xbf58_476d_1ce4_e5b9;
const MUL_B: u64 = 0x94d0_49bb_1331_11eb;
const PROB_BITS: u32 = 53;
const PROB_MASK: u64 = (1 << PROB_BITS) - 1;

/// SplitMix64 finalizer; bijective, good avalanche.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MUL_A);
    z = (z ^ (z >> 27)).wrapping_mul(MUL_B);
    z ^ (z >> 31)
}

/// Combine a running hash with a tag (for stage paths and stream ids).
#[inline]
pub fn chain(h: u64, tag: u64) -> u64 {
    mix(h.wrapping_mul(GOLDEN).wrapping_add(tag) ^ (tag.rotate_left(32)))
}

/// Counter-based PRF value for `(seed, stream, counter)`.
#[inline]
pub fn prf(seed: u64, stream: u64, counter: u64) -> u64 {
    mix(mix(seed ^ GOLDEN.wrapping_mul(stream)).wrapping_add(MUL_B.wrapping_mul(counter)))
}

/// Probability quantized to 53 bits for exact threshold comparison.
#[derive(Clone, Copy, Debug)]
pub struct Threshold {
    t: u64,
}

impl Threshold {
    pub fn new(p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p), "probability out of range: {}", p);
        let t = (p * (1u64 << PROB_BITS) as f64).round() as u64;
        Threshold { t }
    }

    #[inline]
    pub fn hit(&self, u: u64) -> bool {
        (u & PROB_MASK) < self.t
    }

    /// Exact partition of a hit into `nkinds` equiprobable kinds.
    #[inline]
    pub fn kind(&self, u: u64, nkinds: u32) -> u32 {
        debug_assert!(self.hit(u));
        (((u & PROB_MASK) as u128 * nkinds as u128) / self.t as u128) as u32
    }

    pub fn is_zero(&self) -> bool {
        self.t == 0
    }
}

/// Class of noisy location; determines probability and kind count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocKind {
    /// 15 two-qubit Pauli kinds.
    Cnot,
    /// Preparation flip.
    Prep,
    /// Measurement outcome flip.
    Meas,
    /// 3 one-qubit Pauli kinds after a one-qubit gate.
    OneQubit,
}

impl LocKind {
    pub fn nkinds(self) -> u32 {
        match self {
            LocKind::Cnot => 15,
            LocKind::OneQubit => 3,
            LocKind::Prep | LocKind::Meas => 1,
        }
    }

    pub fn prob(self, p: &NoiseParams) -> f64 {
        match self {
            LocKind::Cnot => p.gamma,
            LocKind::Prep => p.e_p,
            LocKind::Meas => p.e_m,
            LocKind::OneQubit => p.e_h,
        }
    }
}

/// Decompose a two-qubit error kind (0..15) into per-qubit (x, z) bit pairs.
/// Kind `k` maps to the (k+1)-th pair over {I, X, Y, Z} x {I, X, Y, Z}.
#[inline]
pub fn cnot_kind_bits(kind: u32) -> ((bool, bool), (bool, bool)) {
    let k = kind + 1;
    let first = k / 4;
    let second = k % 4;
    (one_qubit_bits_raw(first), one_qubit_bits_raw(second))
}

/// Decompose a one-qubit error kind (0..3 over {X, Y, Z}) into (x, z).
#[inline]
pub fn one_qubit_kind_bits(kind: u32) -> (bool, bool) {
    one_qubit_bits_raw(kind + 1)
}

#[inline]
fn one_qubit_bits_raw(code: u32) -> (bool, bool) {
    // 0 = I, 1 = X, 2 = Y, 3 = Z.
    match code {
        0 => (false, false),
        1 => (true, false),
        2 => (true, true),
        3 => (false, true),
        _ => unreachable!(),
    }
}

/// A planned deterministic fault for exhaustive sweeps.
#[derive(Clone, Copy, Debug)]
pub struct PlannedFault {
    /// Global noisy-location index (execution order).
    pub loc: u64,
    pub trial: usize,
    pub kind: u32,
}

/// Source of errors for noisy operations.
///
/// `Random` draws per-trial through the PRF. `Count` runs noiselessly but
/// records every location it is offered (used to build exhaustive fault
/// plans). `Inject` fires planned faults by global location index: each call
/// advances the location counter, so a plan built from a `Count` pass hits
/// the first execution of each location and retried work (which runs at
/// fresh indices) stays clean.
pub enum NoiseSource {
    Off,
    Random { seed: u64, params: NoiseParams },
    Count { locs: Vec<LocKind>, },
    Inject { next_loc: u64, faults: Vec<PlannedFault> },
}

impl NoiseSource {
    pub fn random(seed: u64, params: NoiseParams) -> Self {
        NoiseSource::Random { seed, params }
    }

    /// Build an injector from a plan (faults sorted by loc not required).
    pub fn inject(mut faults: Vec<PlannedFault>) -> Self {
        faults.sort_by_key(|f| f.loc);
        NoiseSource::Inject {
            next_loc: 0,
            faults,
        }
    }

    /// Visit errors at one noisy location. `words` yields
    /// `(word_index, active_mask)`; `f` receives `(trial, kind)`.
    pub fn visit<F>(&mut self, kind: LocKind, stream: u64, words: &[(usize, u64)], mut f: F)
    where
        F: FnMut(usize, u32),
    {
        match self {
            NoiseSource::Off => {}
            NoiseSource::Random { seed, params } => {
                let th = Threshold::new(kind.prob(params));
                if th.is_zero() {
                    return;
                }
                let nkinds = kind.nkinds();
                for &(w, mask) in words {
                    let mut m = mask;
                    while m != 0 {
                        let b = m.trailing_zeros() as usize;
                        m &= m - 1;
                        let trial = w * 64 + b;
                        let u = prf(*seed, stream, trial as u64);
                        if th.hit(u) {
                            f(trial, th.kind(u, nkinds));
                        }
                    }
                }
            }
            NoiseSource::Count { locs } => {
                locs.push(kind);
            }
            NoiseSource::Inject { next_loc, faults } => {
                let loc = *next_loc;
                *next_loc += 1;
                let start = faults.partition_point(|pf| pf.loc < loc);
                for pf in &faults[start..] {
                    if pf.loc != loc {
                        break;
                    }
                    let w = pf.trial / 64;
                    let b = pf.trial % 64;
                    if words
                        .iter()
                        .any(|&(wi, mask)| wi == w && mask & (1u64 << b) != 0)
                    {
                        f(pf.trial, pf.kind);
                    }
                }
            }
        }
    }

    /// 64 fair coin bits for measurement outcomes of one trial word.
    #[inline]
    pub fn coin_word(seed: u64, stream: u64, word: usize) -> u64 {
        prf(seed, chain(stream, 0x436f_696e), word as u64)
    }
}

/// Exact enumeration of the two-qubit preparation network: both qubits in
/// |0>, one CNOT from the kept qubit onto the verifier, verifier measured in
/// Z, accept on outcome 0. Only the CNOT is noisy. Returns
/// `(p_accept, p_accept_and_kept_qubit_flipped)`.
pub fn prep_network(gamma: f64) -> (f64, f64) {
    let mut p_accept = 0.0;
    let mut p_wrong = 0.0;
    for k in 0..16u32 {
        let w = if k == 0 {
            1.0 - gamma
        } else {
            gamma / 15.0
        };
        let ((x1, _z1), (x2, _z2)) = if k == 0 {
            ((false, false), (false, false))
        } else {
            cnot_kind_bits(k - 1)
        };
        // Verifier reads 0 unless the error has an X component there.
        let accept = !x2;
        // The kept qubit (in |0>) is spoiled by an X component.
        if accept {
            p_accept += w;
            if x1 {
                p_wrong += w;
            }
        }
    }
    (p_accept, p_wrong)
}

/// Exact enumeration of the majority-vote readout network: the measured
/// qubit is copied onto three fresh ancillas by three noisy CNOTs, the
/// ancillas are read out, and the majority is reported. Returns the
/// probability that the majority is wrong (all 16^3 fault patterns).
pub fn majority_network_wrong(gamma: f64) -> f64 {
    let mut wrong = 0.0;
    let weight = |k: u32| if k == 0 { 1.0 - gamma } else { gamma / 15.0 };
    for k1 in 0..16u32 {
        for k2 in 0..16u32 {
            for k3 in 0..16u32 {
                let w = weight(k1) * weight(k2) * weight(k3);
                // Propagate X components classically: a fault's source-side X
                // flips every later copy; its ancilla-side X flips that copy.
                let mut src = false;
                let mut out = [false; 3];
                for (i, &k) in [k1, k2, k3].iter().enumerate() {
                    // Copy i picks up the current source flip.
                    out[i] = src;
                    if k > 0 {
                        let ((xs, _), (xa, _)) = cnot_kind_bits(k - 1);
                        out[i] ^= xa;
                        if xs {
                            src = !src;
                        }
                    }
                }
                let votes = out.iter().filter(|&&b| b).count();
                if votes >= 2 {
                    wrong += w;
                }
            }
        }
    }
    wrong
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_partition_kinds_evenly() {
        let th = Threshold::new(0.5);
        let mut counts = [0u32; 15];
        let mut hits = 0;
        for i in 0..200_000u64 {
            let u = prf(7, 13, i);
            if th.hit(u) {
                hits += 1;
                counts[th.kind(u, 15) as usize] += 1;
            }
        }
        assert!((hits as f64 / 200_000.0 - 0.5).abs() < 0.01);
        for &c in &counts {
            let frac = c as f64 / hits as f64;
            assert!((frac - 1.0 / 15.0).abs() < 0.005, "kind fraction {}", frac);
        }
    }

    #[test]
    fn prf_is_stable_and_stream_separated() {
        // Fixed values guard against accidental reseeding changes breaking
        // stored-result reproducibility.
        assert_eq!(prf(1, 2, 3), prf(1, 2, 3));
        assert_ne!(prf(1, 2, 3), prf(1, 2, 4));
        assert_ne!(prf(1, 2, 3), prf(1, 3, 3));
        assert_ne!(prf(1, 2, 3), prf(2, 2, 3));
    }

    #[test]
    fn kind_bit_tables() {
        // Kind 0 is IX (first non-identity pair), kind 14 is ZZ.
        assert_eq!(cnot_kind_bits(0), ((false, false), (true, false)));
        assert_eq!(cnot_kind_bits(14), ((false, true), (false, true)));
        // One-qubit kinds are X, Y, Z.
        assert_eq!(one_qubit_kind_bits(0), (true, false));
        assert_eq!(one_qubit_kind_bits(1), (true, true));
        assert_eq!(one_qubit_kind_bits(2), (false, true));
    }

    #[test]
    fn prep_network_slopes() {
        let (acc, wrong) = prep_network(0.0);
        assert_eq!((acc, wrong), (1.0, 0.0));
        let g = 1e-6;
        let (acc, wrong) = prep_network(g);
        assert!(((1.0 - acc) / g - 8.0 / 15.0).abs() < 1e-6);
        assert!((wrong / g - 4.0 / 15.0).abs() < 1e-6);
    }

    #[test]
    fn majority_network_slope() {
        assert_eq!(majority_network_wrong(0.0), 0.0);
        let g = 1e-6;
        let w = majority_network_wrong(g);
        assert!((w / g - 4.0 / 5.0).abs() < 1e-4, "slope {}", w / g);
    }

    #[test]
    fn injector_fires_once_per_location() {
        let mut src = NoiseSource::inject(vec![
            PlannedFault {
                loc: 1,
                trial: 3,
                kind: 7,
            },
            PlannedFault {
                loc: 1,
                trial: 70,
                kind: 2,
            },
        ]);
        let words = [(0usize, !0u64), (1usize, !0u64)];
        let mut seen = Vec::new();
        for _call in 0..3 {
            src.visit(LocKind::Cnot, 0, &words, |t, k| seen.push((t, k)));
        }
        assert_eq!(seen, vec![(3, 7), (70, 2)]);
    }
}
