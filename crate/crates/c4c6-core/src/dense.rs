//! Dense state-vector simulator used as a reference implementation.
//!
//! Amplitudes are indexed with qubit 0 as the least significant bit. The
//! simulator is only meant for validation on small registers (up to about 14
//! qubits), so clarity wins over performance throughout.

use crate::circuit::Gate;
use crate::pauli::{Pauli, PauliProduct};

/// Minimal complex arithmetic; a dependency for this alone is not worth it.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
    pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
    pub const I: C64 = C64 { re: 0.0, im: 1.0 };

    pub fn new(re: f64, im: f64) -> Self {
        C64 { re, im }
    }

    pub fn conj(self) -> Self {
        C64::new(self.re, -self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn scale(self, s: f64) -> Self {
        C64::new(self.re * s, self.im * s)
    }
}

impl std::ops::Add for C64 {
    type Output = C64;
    fn add(self, o: C64) -> C64 {
        C64::new(self.re + o.re, self.im + o.im)
    }
}

impl std::ops::Sub for C64 {
    type Output = C64;
    fn sub(self, o: C64) -> C64 {
        C64::new(self.re - o.re, self.im - o.im)
    }
}

impl std::ops::Mul for C64 {
    type Output = C64;
    fn mul(self, o: C64) -> C64 {
        C64::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl std::ops::Neg for C64 {
    type Output = C64;
    fn neg(self) -> C64 {
        C64::new(-self.re, -self.im)
    }
}

#[derive(Clone)]
pub struct DenseState {
    n: usize,
    amps: Vec<C64>,
}

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl DenseState {
    /// All qubits in |0>.
    pub fn zeros(n: usize) -> Self {
        assert!(n <= 24, "dense simulator is for small registers");
        let mut amps = vec![C64::ZERO; 1 << n];
        amps[0] = C64::ONE;
        DenseState { n, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn h(&mut self, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let a = self.amps[i];
                let b = self.amps[i | bit];
                self.amps[i] = (a + b).scale(SQRT_HALF);
                self.amps[i | bit] = (a - b).scale(SQRT_HALF);
            }
        }
    }

    pub fn s(&mut self, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                self.amps[i] = self.amps[i] * C64::I;
            }
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        let cb = 1usize << c;
        let tb = 1usize << t;
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    pub fn perm(&mut self, perm: &[usize]) {
        assert_eq!(perm.len(), self.n);
        let mut out = vec![C64::ZERO; self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let mut j = 0usize;
            for q in 0..self.n {
                if i & (1 << q) != 0 {
                    j |= 1 << perm[q];
                }
            }
            out[j] = a;
        }
        self.amps = out;
    }

    pub fn apply_pauli(&mut self, p: &PauliProduct) {
        assert_eq!(p.num_qubits(), self.n);
        // Y = i X Z; apply all Z flips, X swaps, and the global i count.
        let mut xmask = 0usize;
        let mut zmask = 0usize;
        let mut ycount = 0u32;
        for q in 0..self.n {
            match p.get(q) {
                Pauli::I => {}
                Pauli::X => xmask |= 1 << q,
                Pauli::Z => zmask |= 1 << q,
                Pauli::Y => {
                    xmask |= 1 << q;
                    zmask |= 1 << q;
                    ycount += 1;
                }
            }
        }
        let phase = match ycount % 4 {
            0 => C64::ONE,
            1 => C64::I,
            2 => -C64::ONE,
            _ => -C64::I,
        };
        let mut out = vec![C64::ZERO; self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            // Z acts before X (Y = i X Z): collect sign from Z on the
            // pre-flip basis state, then flip.
            let sign = if ((i & zmask).count_ones()) % 2 == 1 {
                -C64::ONE
            } else {
                C64::ONE
            };
            out[i ^ xmask] = out[i ^ xmask] + a * sign * phase;
        }
        self.amps = out;
    }

    /// Probability that measuring qubit `q` in Z yields 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Project qubit `q` onto Z-outcome `outcome` and renormalize.
    ///
    /// Returns the probability of that outcome. Projection onto a
    /// zero-probability branch leaves the state invalid; callers check.
    pub fn project_z(&mut self, q: usize, outcome: bool) -> f64 {
        let bit = 1usize << q;
        let mut p = 0.0;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & bit) != 0) == outcome {
                p += a.norm_sqr();
            } else {
                *a = C64::ZERO;
            }
        }
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            for a in &mut self.amps {
                *a = a.scale(s);
            }
        }
        p
    }

    /// Project onto an X-basis outcome (0 means |+>).
    pub fn project_x(&mut self, q: usize, outcome: bool) -> f64 {
        self.h(q);
        let p = self.project_z(q, outcome);
        self.h(q);
        p
    }

    /// Reset qubit `q` to |0> given that it is disentangled after a forced
    /// projection: project, then flip if needed.
    pub fn reset_z(&mut self, q: usize, prior_outcome: bool) {
        if prior_outcome {
            self.apply_pauli(&PauliProduct::single(self.n, q, Pauli::X));
        }
    }

    pub fn apply_unitary_gate(&mut self, g: &Gate) {
        match g {
            Gate::H(q) => self.h(*q),
            Gate::S(q) => self.s(*q),
            Gate::Cnot(c, t) => self.cnot(*c, *t),
            Gate::Perm(p) => self.perm(p),
            Gate::Pauli(p) => self.apply_pauli(p),
            other => panic!("not unitary: {:?}", other),
        }
    }

    pub fn inner(&self, other: &DenseState) -> C64 {
        assert_eq!(self.n, other.n);
        let mut acc = C64::ZERO;
        for (a, b) in self.amps.iter().zip(&other.amps) {
            acc = acc + a.conj() * *b;
        }
        acc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// True if the states are equal up to a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &DenseState, tol: f64) -> bool {
        let ip = self.inner(other);
        let na = self.norm_sqr();
        let nb = other.norm_sqr();
        if na < tol || nb < tol {
            return na < tol && nb < tol;
        }
        // |<a|b>|^2 == |a|^2 |b|^2 up to tol iff parallel.
        (ip.norm_sqr() - na * nb).abs() < tol
    }

    /// Expectation value <psi| P |psi> of a Pauli product; for stabilizer
    /// states this is -1, 0 or +1.
    pub fn pauli_expectation(&self, p: &PauliProduct) -> f64 {
        let mut tmp = self.clone();
        tmp.apply_pauli(p);
        self.inner(&tmp).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pp(s: &str) -> PauliProduct {
        PauliProduct::parse(s).unwrap()
    }

    #[test]
    fn bell_pair_correlations() {
        let mut st = DenseState::zeros(2);
        st.h(0);
        st.cnot(0, 1);
        assert_abs_diff_eq!(st.pauli_expectation(&pp("XX")), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st.pauli_expectation(&pp("ZZ")), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st.pauli_expectation(&pp("YY")), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(st.prob_one(0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn projection_probabilities() {
        let mut st = DenseState::zeros(1);
        st.h(0);
        let p = st.project_z(0, true);
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(st.prob_one(0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pauli_y_phase_convention() {
        // Y|0> = i|1>
        let mut st = DenseState::zeros(1);
        st.apply_pauli(&pp("Y"));
        assert_abs_diff_eq!(st.amplitudes()[1].im, 1.0, epsilon = 1e-12);
        // S X S* |0> = Y|0>: check via circuit equivalence.
        let mut a = DenseState::zeros(1);
        a.h(0); // |+>
        a.s(0);
        let mut b = DenseState::zeros(1);
        b.h(0);
        b.apply_pauli(&pp("Y"));
        b.s(0);
        b.apply_pauli(&pp("X"));
        // S X = Y S up to phase i: parallel states.
        assert!(a.approx_eq_up_to_phase(&b, 1e-10));
    }

    #[test]
    fn perm_moves_amplitudes() {
        let mut st = DenseState::zeros(2);
        st.apply_pauli(&pp("XI")); // |01> little-endian: index 1
        st.perm(&[1, 0]);
        assert_abs_diff_eq!(st.amplitudes()[2].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn conjugation_matches_dense() {
        // For each gate g and Pauli p: g p |psi> == sign * p' g |psi>.
        use crate::circuit::conjugate_pauli;
        let gates = [Gate::H(0), Gate::S(0), Gate::Cnot(0, 1), Gate::Cnot(1, 0)];
        let paulis = ["XI", "IX", "ZI", "IZ", "YI", "IY", "YY", "XZ", "ZX", "YX"];
        for g in &gates {
            for ps in &paulis {
                let p = pp(ps);
                let (img, sign) = conjugate_pauli(g, &p);
                // Prepare a non-trivial fiducial state.
                let mut a = DenseState::zeros(2);
                a.h(0);
                a.s(0);
                a.cnot(0, 1);
                a.h(1);
                let mut b = a.clone();
                // a: g . p
                a.apply_pauli(&p);
                a.apply_unitary_gate(g);
                // b: sign . p' . g
                b.apply_unitary_gate(g);
                b.apply_pauli(&img);
                if sign {
                    for amp in &mut b.amps {
                        *amp = -*amp;
                    }
                }
                let d: f64 = a
                    .amps
                    .iter()
                    .zip(&b.amps)
                    .map(|(x, y)| (*x - *y).norm_sqr())
                    .sum();
                assert!(d < 1e-20, "gate {:?} pauli {}", g, ps);
            }
        }
    }
}
