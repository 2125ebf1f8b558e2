//! Clifford circuit description and a line-oriented text format.
//!
//! The format is one operation per line, uppercase mnemonic followed by
//! decimal qubit indices: `CNOT 3 7`, `H 1`, `S 0`, `MEASZ 2`, `PREPX 4`,
//! `PERM 0 2 1 3`. `PERM` lists the image of every qubit: qubit `q` moves to
//! position `perm[q]`. Blank lines and `#` comments are ignored.

use crate::pauli::PauliProduct;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    S(usize),
    Cnot(usize, usize),
    /// Relabeling of all qubits; `perm[q]` is the new position of qubit `q`.
    Perm(Vec<usize>),
    PrepZ(usize),
    PrepX(usize),
    MeasZ(usize),
    MeasX(usize),
    /// Fixed Pauli applied as an error or correction.
    Pauli(PauliProduct),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitParseError {
    #[error("line {0}: unknown mnemonic {1:?}")]
    UnknownMnemonic(usize, String),
    #[error("line {0}: bad argument count for {1}")]
    BadArity(usize, String),
    #[error("line {0}: invalid integer {1:?}")]
    BadInt(usize, String),
    #[error("line {0}: qubit index {1} out of range for {2} qubits")]
    OutOfRange(usize, usize, usize),
    #[error("line {0}: PERM is not a permutation")]
    BadPerm(usize),
    #[error("line {0}: invalid Pauli string {1:?}")]
    BadPauli(usize, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, gates: Vec::new() }
    }

    pub fn push(&mut self, g: Gate) {
        debug_assert!(self.check_gate(&g));
        self.gates.push(g);
    }

    fn check_gate(&self, g: &Gate) -> bool {
        match g {
            Gate::H(q) | Gate::S(q) | Gate::PrepZ(q) | Gate::PrepX(q) | Gate::MeasZ(q)
            | Gate::MeasX(q) => *q < self.n,
            Gate::Cnot(c, t) => *c < self.n && *t < self.n && c != t,
            Gate::Perm(p) => is_permutation(p) && p.len() == self.n,
            Gate::Pauli(p) => p.num_qubits() == self.n,
        }
    }

    /// Parse the text form; `n` is the register width.
    pub fn parse(n: usize, text: &str) -> Result<Self, CircuitParseError> {
        let mut c = Circuit::new(n);
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let op = parts.next().unwrap();
            let args: Vec<&str> = parts.collect();
            let ints = |args: &[&str]| -> Result<Vec<usize>, CircuitParseError> {
                args.iter()
                    .map(|a| {
                        a.parse::<usize>()
                            .map_err(|_| CircuitParseError::BadInt(ln + 1, a.to_string()))
                    })
                    .collect()
            };
            let gate = match op {
                "H" | "S" | "PREPZ" | "PREPX" | "MEASZ" | "MEASX" => {
                    if args.len() != 1 {
                        return Err(CircuitParseError::BadArity(ln + 1, op.to_string()));
                    }
                    let q = ints(&args)?[0];
                    if q >= n {
                        return Err(CircuitParseError::OutOfRange(ln + 1, q, n));
                    }
                    match op {
                        "H" => Gate::H(q),
                        "S" => Gate::S(q),
                        "PREPZ" => Gate::PrepZ(q),
                        "PREPX" => Gate::PrepX(q),
                        "MEASZ" => Gate::MeasZ(q),
                        _ => Gate::MeasX(q),
                    }
                }
                "CNOT" => {
                    if args.len() != 2 {
                        return Err(CircuitParseError::BadArity(ln + 1, op.to_string()));
                    }
                    let v = ints(&args)?;
                    for &q in &v {
                        if q >= n {
                            return Err(CircuitParseError::OutOfRange(ln + 1, q, n));
                        }
                    }
                    Gate::Cnot(v[0], v[1])
                }
                "PERM" => {
                    let v = ints(&args)?;
                    if v.len() != n || !is_permutation(&v) {
                        return Err(CircuitParseError::BadPerm(ln + 1));
                    }
                    Gate::Perm(v)
                }
                "PAULI" => {
                    if args.len() != 1 {
                        return Err(CircuitParseError::BadArity(ln + 1, op.to_string()));
                    }
                    let p = PauliProduct::parse(args[0])
                        .map_err(|_| CircuitParseError::BadPauli(ln + 1, args[0].to_string()))?;
                    if p.num_qubits() != n {
                        return Err(CircuitParseError::BadPauli(ln + 1, args[0].to_string()));
                    }
                    Gate::Pauli(p)
                }
                other => {
                    return Err(CircuitParseError::UnknownMnemonic(ln + 1, other.to_string()))
                }
            };
            c.push(gate);
        }
        Ok(c)
    }

    /// Count of CNOT gates, the resource unit used throughout.
    pub fn cnot_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, Gate::Cnot(..)))
            .count()
    }
}

impl std::fmt::Display for Circuit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for g in &self.gates {
            match g {
                Gate::H(q) => writeln!(f, "H {}", q)?,
                Gate::S(q) => writeln!(f, "S {}", q)?,
                Gate::Cnot(c, t) => writeln!(f, "CNOT {} {}", c, t)?,
                Gate::Perm(p) => {
                    write!(f, "PERM")?;
                    for v in p {
                        write!(f, " {}", v)?;
                    }
                    writeln!(f)?
                }
                Gate::PrepZ(q) => writeln!(f, "PREPZ {}", q)?,
                Gate::PrepX(q) => writeln!(f, "PREPX {}", q)?,
                Gate::MeasZ(q) => writeln!(f, "MEASZ {}", q)?,
                Gate::MeasX(q) => writeln!(f, "MEASX {}", q)?,
                Gate::Pauli(p) => writeln!(f, "PAULI {}", p)?,
            }
        }
        Ok(())
    }
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &v in p {
        if v >= p.len() || seen[v] {
            return false;
        }
        seen[v] = true;
    }
    true
}

/// Conjugate a Pauli by a unitary gate: returns the image of `p` under
/// `g p g^dagger`, together with the sign flip (true means a -1 factor).
///
/// Only unitary gates are supported (no preparations or measurements).
/// Update rules: H swaps X and Z (Y picks up a sign); S maps X to Y and Y to
/// -X; CNOT copies X from control to target and Z from target to control,
/// with a sign flip exactly for the images of (X or Y) tensor (Y or Z)
/// restricted to the pair, which is what makes CNOT map Y Y to -X Z.
pub fn conjugate_pauli(g: &Gate, p: &PauliProduct) -> (PauliProduct, bool) {
    let mut out = p.clone();
    let mut sign = false;
    match g {
        Gate::H(q) => {
            let (x, z) = (p.x_bit(*q), p.z_bit(*q));
            out.set_x(*q, z);
            out.set_z(*q, x);
            if x && z {
                sign = true;
            }
        }
        Gate::S(q) => {
            let (x, z) = (p.x_bit(*q), p.z_bit(*q));
            out.set_z(*q, x ^ z);
            if x && z {
                sign = true;
            }
        }
        Gate::Cnot(c, t) => {
            let (xc, zc) = (p.x_bit(*c), p.z_bit(*c));
            let (xt, zt) = (p.x_bit(*t), p.z_bit(*t));
            out.set_x(*t, xt ^ xc);
            out.set_z(*c, zc ^ zt);
            if xc && zt && !(zc ^ xt) {
                sign = true;
            }
        }
        Gate::Perm(perm) => {
            let mut q2 = PauliProduct::identity(p.num_qubits());
            for q in 0..p.num_qubits() {
                q2.set(perm[q], p.get(q));
            }
            out = q2;
        }
        Gate::Pauli(e) => {
            // Conjugation by a Pauli preserves the product, up to sign.
            sign = e.symplectic(p);
        }
        _ => panic!("conjugate_pauli: {:?} is not unitary", g),
    }
    (out, sign)
}
