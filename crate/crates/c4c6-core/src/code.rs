//! Tables for the concatenated four/six-qubit error-detecting codes.
//!
//! Each block encodes a pair of qubits, labeled L and S. Level 1 uses the
//! four-qubit code with checks XXXX, ZZZZ; levels above concatenate the
//! six-qubit code whose six "members" are the L and S qubits of three
//! subblocks laid out as contiguous thirds. Besides checks and logical
//! representatives, this module provides the qubit relabelings that realize
//! pair Cliffords for free (swap, the two pair CNOTs, an order-3 rotation)
//! and the permutation that turns transversal Hadamard into an exact
//! Hadamard on both pair qubits. It also implements the bottom-up decode
//! rule that turns a block syndrome into either a detection flag or a
//! Pauli correction.

use crate::gf2::{BitMatrix, BitVec};
use crate::pauli::{Pauli, PauliProduct};

/// 3^k.
pub const fn pow3(k: usize) -> usize {
    let mut r = 1usize;
    let mut i = 0;
    while i < k {
        r *= 3;
        i += 1;
    }
    r
}

/// Physical qubits in a level-`level` block (level >= 1).
pub const fn block_len(level: usize) -> usize {
    4 * pow3(level - 1)
}

/// Which qubit of a pair a logical operator acts on.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Member {
    L,
    S,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckKind {
    X,
    Z,
}

/// One stabilizer check of a concatenated block, tagged with the layer it
/// belongs to: `level == 1` are the per-C4-block checks, higher levels are
/// the six-qubit-layer checks of each group at that level.
#[derive(Clone, Debug)]
pub struct LayeredCheck {
    pub level: usize,
    pub group: usize,
    pub kind: CheckKind,
    pub idx: usize,
    pub pauli: PauliProduct,
}

/// Index of the four logical representatives in `LevelTables::logicals`.
pub const XL: usize = 0;
pub const ZL: usize = 1;
pub const XS: usize = 2;
pub const ZS: usize = 3;

/// Precomputed data for blocks of one level.
pub struct LevelTables {
    pub level: usize,
    pub n: usize,
    /// All checks in syndrome-layout order: level-1 blocks first (X then Z
    /// for each block), then groups of layer 2, 3, ... (X0, X1, Z0, Z1).
    pub checks: Vec<LayeredCheck>,
    /// Start of each layer's bits in the syndrome layout; `layer_offset[k-1]`
    /// is the offset of layer `k`.
    pub layer_offset: Vec<usize>,
    /// Indices into `checks` forming the Z-side layout: the Z check of each
    /// level-1 block, then the two Z checks of each group per layer.
    pub z_index: Vec<usize>,
    /// Start of each layer's bits in the Z-side layout.
    pub z_layer_offset: Vec<usize>,
    /// X-side layout (transversal X measurement), mirroring `z_index`.
    pub x_index: Vec<usize>,
    /// Start of each layer's bits in the X-side layout.
    pub x_layer_offset: Vec<usize>,
    /// Logical representatives `[XL, ZL, XS, ZS]`.
    pub logicals: [PauliProduct; 4],
    /// Transversal H followed by this permutation is H on both pair qubits.
    pub had_perm: Vec<usize>,
    /// Relabeling cycling the X classes: XL -> XS -> XL*XS -> XL (and
    /// ZL -> ZL*ZS, ZS -> ZL). Order 3.
    pub rot_perm: Vec<usize>,
    /// Inverse of `rot_perm`.
    pub rot2_perm: Vec<usize>,
    /// Relabeling swapping the pair qubits: XL <-> XS, ZL <-> ZS.
    pub swap_perm: Vec<usize>,
    /// Relabeling acting as CNOT with control L, target S.
    pub cnot_ls_perm: Vec<usize>,
    /// Relabeling acting as CNOT with control S, target L.
    pub cnot_sl_perm: Vec<usize>,
    /// For level >= 2: inverse of the response of this level's four group
    /// checks to the marked child's logical classes, one matrix per child
    /// slot. Solving `M e = t` recovers the child's class error.
    pub(crate) solve_full: Option<[BitMatrix; 3]>,
    /// Z-side variant: response of the two Z group checks to the child's
    /// XL, XS classes (2x2), inverted.
    pub(crate) solve_z: Option<[BitMatrix; 3]>,
    /// X-side variant: response of the two X group checks to the child's
    /// ZL, ZS classes (2x2), inverted.
    pub(crate) solve_x: Option<[BitMatrix; 3]>,
}

impl LevelTables {
    pub fn syndrome_len(&self) -> usize {
        self.checks.len()
    }

    pub fn z_syndrome_len(&self) -> usize {
        self.z_index.len()
    }

    /// Bit position of a level-1 block's check in the full layout.
    pub fn block_bit(&self, block: usize, kind: CheckKind) -> usize {
        2 * block + if kind == CheckKind::Z { 1 } else { 0 }
    }

    /// Bit positions (4) of a layer-`k` group in the full layout.
    pub fn group_bits(&self, k: usize, group: usize) -> std::ops::Range<usize> {
        let start = self.layer_offset[k - 1] + 4 * group;
        start..start + 4
    }

    /// Bit position of a level-1 block in the Z-side layout.
    pub fn z_block_bit(&self, block: usize) -> usize {
        block
    }

    /// Bit positions (2) of a layer-`k` group in the Z-side layout.
    pub fn z_group_bits(&self, k: usize, group: usize) -> std::ops::Range<usize> {
        let start = self.z_layer_offset[k - 1] + 2 * group;
        start..start + 2
    }

    pub fn x_syndrome_len(&self) -> usize {
        self.x_index.len()
    }

    /// Bit position of a level-1 block in the X-side layout.
    pub fn x_block_bit(&self, block: usize) -> usize {
        block
    }

    /// Bit positions (2) of a layer-`k` group in the X-side layout.
    pub fn x_group_bits(&self, k: usize, group: usize) -> std::ops::Range<usize> {
        let start = self.x_layer_offset[k - 1] + 2 * group;
        start..start + 2
    }
}

/// Outcome of the decode rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    /// An error was detected that the rule cannot locate or may not correct.
    Flagged,
    /// Apply this Pauli (as a frame update) to cancel the located error's
    /// logical effect. Identity when the syndrome was already clean.
    Fix(PauliProduct),
}

/// Policy knobs for the decode rule. `top` is the level of the decoded
/// block; erasure solves run only at layers `k <= top - dl`, so `dl = 1`
/// demands a clean top layer (state preparation) while `dl = 0` also
/// corrects located errors at the top layer (logical computation).
#[derive(Clone, Copy, Debug)]
pub struct DecideCtx {
    pub top: usize,
    pub dl: usize,
}

pub struct CodeTables {
    levels: Vec<LevelTables>,
}

fn c4_check(s: &str) -> PauliProduct {
    PauliProduct::parse(s).unwrap()
}

/// Apply `a` then `b`.
fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().map(|&i| b[i]).collect()
}

/// Build a block permutation from per-third permutations followed by a
/// permutation of the thirds themselves.
fn lift3(sub: [&[usize]; 3], thirds: [usize; 3]) -> Vec<usize> {
    let m = sub[0].len();
    let mut out = vec![0usize; 3 * m];
    for k in 0..3 {
        for j in 0..m {
            out[k * m + j] = thirds[k] * m + sub[k][j];
        }
    }
    out
}

fn level1_tables() -> LevelTables {
    let checks = vec![
        LayeredCheck {
            level: 1,
            group: 0,
            kind: CheckKind::X,
            idx: 0,
            pauli: c4_check("XXXX"),
        },
        LayeredCheck {
            level: 1,
            group: 0,
            kind: CheckKind::Z,
            idx: 0,
            pauli: c4_check("ZZZZ"),
        },
    ];
    LevelTables {
        level: 1,
        n: 4,
        checks,
        layer_offset: vec![0],
        z_index: vec![1],
        z_layer_offset: vec![0],
        x_index: vec![0],
        x_layer_offset: vec![0],
        logicals: [
            c4_check("XXII"),
            c4_check("ZIZI"),
            c4_check("IXIX"),
            c4_check("IIZZ"),
        ],
        had_perm: vec![0, 2, 1, 3],
        rot_perm: vec![0, 2, 3, 1],
        rot2_perm: vec![0, 3, 1, 2],
        swap_perm: vec![0, 2, 1, 3],
        cnot_ls_perm: vec![0, 3, 2, 1],
        cnot_sl_perm: vec![0, 1, 3, 2],
        solve_full: None,
        solve_z: None,
        solve_x: None,
    }
}

/// Product of `prev` logicals selected by `sel`, embedded with child `c` of
/// a fresh level at qubit offset `c * prev.n`.
fn member_product(prev: &LevelTables, n: usize, parts: &[(usize, usize)]) -> PauliProduct {
    let mut out = PauliProduct::identity(n);
    for &(child, which) in parts {
        let map: Vec<usize> = (0..prev.n).map(|q| child * prev.n + q).collect();
        out.mul_assign(&prev.logicals[which].embed(n, &map));
    }
    out
}

fn extend_tables(prev: &LevelTables) -> LevelTables {
    let level = prev.level + 1;
    let n = 3 * prev.n;

    // Children's checks keep layout order: all level-1 blocks of child 0,
    // then child 1, then child 2 would interleave wrongly; instead the
    // layout wants all level-1 bits first across the whole block. Children
    // occupy contiguous thirds, so concatenating per-layer, per-child
    // preserves both the global block numbering and the group numbering.
    let mut checks: Vec<LayeredCheck> = Vec::new();
    let mut layer_offset = Vec::new();
    for k in 1..level {
        layer_offset.push(checks.len());
        for child in 0..3 {
            let map: Vec<usize> = (0..prev.n).map(|q| child * prev.n + q).collect();
            for c in prev.checks.iter().filter(|c| c.level == k) {
                let groups_per_child = pow3(prev.level.saturating_sub(k)).max(1);
                checks.push(LayeredCheck {
                    level: k,
                    group: child * groups_per_child + c.group,
                    kind: c.kind,
                    idx: c.idx,
                    pauli: c.pauli.embed(n, &map),
                });
            }
        }
    }

    // This level's own four checks over the six members (L0,S0,L1,S1,L2,S2):
    // X checks follow the patterns XIIXXX and XXXIIX, Z checks ZIIZZZ and
    // ZZZIIZ, with member operators given by child logicals.
    layer_offset.push(checks.len());
    let x0 = member_product(prev, n, &[(0, XL), (1, XS), (2, XL), (2, XS)]);
    let x1 = member_product(prev, n, &[(0, XL), (0, XS), (1, XL), (2, XS)]);
    let z0 = member_product(prev, n, &[(0, ZL), (1, ZS), (2, ZL), (2, ZS)]);
    let z1 = member_product(prev, n, &[(0, ZL), (0, ZS), (1, ZL), (2, ZS)]);
    for (i, (kind, idx, pauli)) in [
        (CheckKind::X, 0, x0),
        (CheckKind::X, 1, x1),
        (CheckKind::Z, 0, z0),
        (CheckKind::Z, 1, z1),
    ]
    .into_iter()
    .enumerate()
    {
        let _ = i;
        checks.push(LayeredCheck {
            level,
            group: 0,
            kind,
            idx,
            pauli,
        });
    }

    // One-sided layouts mirror the full layout restricted to one check kind.
    let mut z_index = Vec::new();
    let mut z_layer_offset = Vec::new();
    let mut x_index = Vec::new();
    let mut x_layer_offset = Vec::new();
    for k in 1..=level {
        z_layer_offset.push(z_index.len());
        x_layer_offset.push(x_index.len());
        for (i, c) in checks.iter().enumerate() {
            if c.level == k {
                match c.kind {
                    CheckKind::Z => z_index.push(i),
                    CheckKind::X => x_index.push(i),
                }
            }
        }
    }

    // Logical representatives over members: XL = IXXIII, ZL = IIZZIZ,
    // XS = XIXXII, ZS = IIIZZI.
    let logicals = [
        member_product(prev, n, &[(0, XS), (1, XL)]),
        member_product(prev, n, &[(1, ZL), (1, ZS), (2, ZS)]),
        member_product(prev, n, &[(0, XL), (1, XL), (1, XS)]),
        member_product(prev, n, &[(1, ZS), (2, ZL)]),
    ];

    // Relabelings, recursively: the six-member layer realizes each pair
    // Clifford from per-subblock relabelings plus a swap of subblocks 1,2.
    let id3 = [0usize, 1, 2];
    let swap12 = [0usize, 2, 1];
    let rot_perm = lift3([&prev.rot2_perm, &prev.rot2_perm, &prev.rot2_perm], id3);
    let rot2_perm = lift3([&prev.rot_perm, &prev.rot_perm, &prev.rot_perm], id3);
    let swap_perm = lift3(
        [&prev.cnot_sl_perm, &prev.cnot_sl_perm, &prev.cnot_sl_perm],
        swap12,
    );
    let cnot_ls_perm = lift3(
        [&prev.cnot_ls_perm, &prev.cnot_ls_perm, &prev.cnot_ls_perm],
        swap12,
    );
    let cnot_sl_perm = lift3([&prev.swap_perm, &prev.swap_perm, &prev.swap_perm], swap12);
    let sub_had = compose(&prev.had_perm, &prev.rot2_perm);
    let had_perm = lift3([&sub_had, &sub_had, &sub_had], id3);

    // Erasure responses: how this layer's four checks pair with a single
    // child's logical classes. Invertibility lets one marked child's class
    // error be solved from the group bits.
    let layer_checks: Vec<&PauliProduct> = checks
        .iter()
        .filter(|c| c.level == level)
        .map(|c| &c.pauli)
        .collect();
    let mut solve_full = Vec::new();
    let mut solve_z = Vec::new();
    let mut solve_x = Vec::new();
    for child in 0..3 {
        let map: Vec<usize> = (0..prev.n).map(|q| child * prev.n + q).collect();
        let embedded: Vec<PauliProduct> =
            (0..4).map(|j| prev.logicals[j].embed(n, &map)).collect();
        let mut m = BitMatrix::zeros(4, 4);
        for (i, ck) in layer_checks.iter().enumerate() {
            for (j, l) in embedded.iter().enumerate() {
                m.set(i, j, ck.symplectic(l));
            }
        }
        solve_full.push(m.inverse().expect("full erasure response is invertible"));
        let mut mz = BitMatrix::zeros(2, 2);
        let mut mx = BitMatrix::zeros(2, 2);
        for i in 0..2 {
            for (j, col) in [XL, XS].into_iter().enumerate() {
                mz.set(i, j, layer_checks[2 + i].symplectic(&embedded[col]));
            }
            for (j, col) in [ZL, ZS].into_iter().enumerate() {
                mx.set(i, j, layer_checks[i].symplectic(&embedded[col]));
            }
        }
        solve_z.push(mz.inverse().expect("Z-side erasure response is invertible"));
        solve_x.push(mx.inverse().expect("X-side erasure response is invertible"));
    }

    LevelTables {
        level,
        n,
        checks,
        layer_offset,
        z_index,
        z_layer_offset,
        x_index,
        x_layer_offset,
        logicals,
        had_perm,
        rot_perm,
        rot2_perm,
        swap_perm,
        cnot_ls_perm,
        cnot_sl_perm,
        solve_full: Some([
            solve_full.remove(0),
            solve_full.remove(0),
            solve_full.remove(0),
        ]),
        solve_z: Some([solve_z.remove(0), solve_z.remove(0), solve_z.remove(0)]),
        solve_x: Some([solve_x.remove(0), solve_x.remove(0), solve_x.remove(0)]),
    }
}

fn matvec(m: &BitMatrix, v: &[bool]) -> Vec<bool> {
    (0..m.rows())
        .map(|i| {
            let mut acc = false;
            for (j, &b) in v.iter().enumerate() {
                acc ^= m.get(i, j) && b;
            }
            acc
        })
        .collect()
}

impl CodeTables {
    pub fn new(max_level: usize) -> Self {
        assert!(max_level >= 1);
        let mut levels = vec![level1_tables()];
        for _ in 1..max_level {
            let next = extend_tables(levels.last().unwrap());
            levels.push(next);
        }
        CodeTables { levels }
    }

    pub fn max_level(&self) -> usize {
        self.levels.len()
    }

    pub fn get(&self, level: usize) -> &LevelTables {
        &self.levels[level - 1]
    }

    /// Logical representative of one pair qubit.
    pub fn logical(&self, level: usize, member: Member, kind: CheckKind) -> &PauliProduct {
        let idx = match (member, kind) {
            (Member::L, CheckKind::X) => XL,
            (Member::L, CheckKind::Z) => ZL,
            (Member::S, CheckKind::X) => XS,
            (Member::S, CheckKind::Z) => ZS,
        };
        &self.get(level).logicals[idx]
    }

    /// Class of a Pauli that commutes with every check of the block, as
    /// exponents `(xl, zl, xs, zs)`; `None` if it has nonzero syndrome.
    pub fn classify(&self, level: usize, p: &PauliProduct) -> Option<[bool; 4]> {
        let lt = self.get(level);
        if lt.checks.iter().any(|c| p.symplectic(&c.pauli)) {
            return None;
        }
        Some([
            p.symplectic(&lt.logicals[ZL]),
            p.symplectic(&lt.logicals[XL]),
            p.symplectic(&lt.logicals[ZS]),
            p.symplectic(&lt.logicals[XS]),
        ])
    }

    /// Bottom-up decode of a full syndrome (layout per `LevelTables`).
    ///
    /// Level-1 blocks with nonzero bits are marked and assigned a
    /// single-qubit representative reproducing their bits. Each higher
    /// layer then looks at its groups: with no marked child but nonzero
    /// bits the group itself is marked (an error was detected but cannot
    /// be located); with exactly one marked child and the layer low enough
    /// (`k <= top - dl`) the child's class error is solved from the group
    /// bits and corrected; anything else marks the group. A marked top
    /// node means detection; otherwise the accumulated correction cancels
    /// the located errors' logical effect.
    pub fn decide(&self, syndrome: &BitVec, ctx: DecideCtx) -> Decision {
        let lt = self.get(ctx.top);
        assert_eq!(syndrome.len(), lt.syndrome_len());
        let mut bits = syndrome.clone();
        let mut corr = PauliProduct::identity(lt.n);

        let adjust = |bits: &mut BitVec, comp: &PauliProduct| {
            for (i, c) in lt.checks.iter().enumerate() {
                if comp.symplectic(&c.pauli) {
                    bits.flip(i);
                }
            }
        };

        // marks[k-1][g]: node g of level k is marked.
        let mut marks: Vec<Vec<bool>> = (1..=ctx.top)
            .map(|k| vec![false; pow3(ctx.top - k)])
            .collect();

        for b in 0..pow3(ctx.top - 1) {
            let sx = bits.get(lt.block_bit(b, CheckKind::X));
            let sz = bits.get(lt.block_bit(b, CheckKind::Z));
            if sx || sz {
                marks[0][b] = true;
                // (x,z) = (sz,sx): the Z check sees x parts, the X check z parts.
                let mut comp = PauliProduct::identity(lt.n);
                comp.set_x(4 * b, sz);
                comp.set_z(4 * b, sx);
                corr.mul_assign(&comp);
                adjust(&mut bits, &comp);
            }
        }

        for k in 2..=ctx.top {
            let child_tables = self.get(k - 1);
            for g in 0..pow3(ctx.top - k) {
                let marked_children: Vec<usize> = (0..3)
                    .filter(|&c| marks[k - 2][3 * g + c])
                    .collect();
                let range = lt.group_bits(k, g);
                let t: Vec<bool> = range.clone().map(|i| bits.get(i)).collect();
                let any = t.iter().any(|&b| b);
                match marked_children.len() {
                    0 => {
                        if any {
                            marks[k - 1][g] = true;
                        }
                    }
                    1 if k <= ctx.top - ctx.dl => {
                        let slot = marked_children[0];
                        let e = matvec(&self.get(k).solve_full.as_ref().unwrap()[slot], &t);
                        if e.iter().any(|&b| b) {
                            let base = (3 * g + slot) * child_tables.n;
                            let map: Vec<usize> =
                                (0..child_tables.n).map(|q| base + q).collect();
                            let mut comp = PauliProduct::identity(lt.n);
                            for (j, &b) in e.iter().enumerate() {
                                if b {
                                    comp.mul_assign(
                                        &child_tables.logicals[j].embed(lt.n, &map),
                                    );
                                }
                            }
                            corr.mul_assign(&comp);
                            adjust(&mut bits, &comp);
                        }
                        marks[k - 2][3 * g + slot] = false;
                    }
                    _ => {
                        marks[k - 1][g] = true;
                    }
                }
            }
        }

        if marks[ctx.top - 1][0] {
            Decision::Flagged
        } else {
            Decision::Fix(corr)
        }
    }

    /// Z-side decode: only Z checks are visible (transversal Z
    /// measurement), only X-type errors are corrected. Syndrome layout per
    /// `z_index`/`z_layer_offset`.
    pub fn decide_z(&self, syndrome: &BitVec, ctx: DecideCtx) -> Decision {
        self.decide_side(syndrome, ctx, CheckKind::Z)
    }

    /// X-side decode: only X checks are visible (transversal X
    /// measurement), only Z-type errors are corrected.
    pub fn decide_x(&self, syndrome: &BitVec, ctx: DecideCtx) -> Decision {
        self.decide_side(syndrome, ctx, CheckKind::X)
    }

    fn decide_side(&self, syndrome: &BitVec, ctx: DecideCtx, side: CheckKind) -> Decision {
        let lt = self.get(ctx.top);
        let (index, layer_offset, rep, whiches) = match side {
            CheckKind::Z => (&lt.z_index, &lt.z_layer_offset, Pauli::X, [XL, XS]),
            CheckKind::X => (&lt.x_index, &lt.x_layer_offset, Pauli::Z, [ZL, ZS]),
        };
        assert_eq!(syndrome.len(), index.len());
        let mut bits = syndrome.clone();
        let mut corr = PauliProduct::identity(lt.n);

        let adjust = |bits: &mut BitVec, comp: &PauliProduct| {
            for (si, &ci) in index.iter().enumerate() {
                if comp.symplectic(&lt.checks[ci].pauli) {
                    bits.flip(si);
                }
            }
        };

        let mut marks: Vec<Vec<bool>> = (1..=ctx.top)
            .map(|k| vec![false; pow3(ctx.top - k)])
            .collect();

        for b in 0..pow3(ctx.top - 1) {
            if bits.get(b) {
                marks[0][b] = true;
                let comp = PauliProduct::single(lt.n, 4 * b, rep);
                corr.mul_assign(&comp);
                adjust(&mut bits, &comp);
            }
        }

        for k in 2..=ctx.top {
            let child_tables = self.get(k - 1);
            for g in 0..pow3(ctx.top - k) {
                let marked_children: Vec<usize> = (0..3)
                    .filter(|&c| marks[k - 2][3 * g + c])
                    .collect();
                let start = layer_offset[k - 1] + 2 * g;
                let t: Vec<bool> = (start..start + 2).map(|i| bits.get(i)).collect();
                let any = t.iter().any(|&b| b);
                match marked_children.len() {
                    0 => {
                        if any {
                            marks[k - 1][g] = true;
                        }
                    }
                    1 if k <= ctx.top - ctx.dl => {
                        let slot = marked_children[0];
                        let solve = match side {
                            CheckKind::Z => &self.get(k).solve_z,
                            CheckKind::X => &self.get(k).solve_x,
                        };
                        let e = matvec(&solve.as_ref().unwrap()[slot], &t);
                        if e.iter().any(|&b| b) {
                            let base = (3 * g + slot) * child_tables.n;
                            let map: Vec<usize> =
                                (0..child_tables.n).map(|q| base + q).collect();
                            let mut comp = PauliProduct::identity(lt.n);
                            for (j, &b) in e.iter().enumerate() {
                                if b {
                                    comp.mul_assign(
                                        &child_tables.logicals[whiches[j]].embed(lt.n, &map),
                                    );
                                }
                            }
                            corr.mul_assign(&comp);
                            adjust(&mut bits, &comp);
                        }
                        marks[k - 2][3 * g + slot] = false;
                    }
                    _ => {
                        marks[k - 1][g] = true;
                    }
                }
            }
        }

        if marks[ctx.top - 1][0] {
            Decision::Flagged
        } else {
            Decision::Fix(corr)
        }
    }

    /// Syndrome of an explicit error, in decode layout. Used by tests and
    /// by readout paths that already hold the residual error.
    pub fn syndrome_of(&self, level: usize, err: &PauliProduct) -> BitVec {
        let lt = self.get(level);
        let mut out = BitVec::zeros(lt.syndrome_len());
        for (i, c) in lt.checks.iter().enumerate() {
            out.set(i, err.symplectic(&c.pauli));
        }
        out
    }

    /// Z-side syndrome of an explicit error.
    pub fn z_syndrome_of(&self, level: usize, err: &PauliProduct) -> BitVec {
        let lt = self.get(level);
        let mut out = BitVec::zeros(lt.z_syndrome_len());
        for (zi, &ci) in lt.z_index.iter().enumerate() {
            out.set(zi, err.symplectic(&lt.checks[ci].pauli));
        }
        out
    }

    /// X-side syndrome of an explicit error.
    pub fn x_syndrome_of(&self, level: usize, err: &PauliProduct) -> BitVec {
        let lt = self.get(level);
        let mut out = BitVec::zeros(lt.x_syndrome_len());
        for (xi, &ci) in lt.x_index.iter().enumerate() {
            out.set(xi, err.symplectic(&lt.checks[ci].pauli));
        }
        out
    }
}
