//! Twisted partial actions of finite groups on block algebras.
//!
//! A twisted partial action is a family of ideals `D_t`, *-isomorphisms
//! `θ_t: D_{t⁻¹} → D_t` and unitaries `w(r,s)` in `D_r ∩ D_rs`. Nothing
//! beyond shapes is enforced at construction; [`check_axioms`] evaluates
//! every axiom on spanning sets of matrix units.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{unitary_defect, AlgebraElement, BlockStructure, IdealSupport, StarIsomorphism};
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::random::haar_unitary;
use crate::linalg::{ComplexMatrix, Tolerance};
use crate::report::{AxiomReport, Residual};

#[derive(Clone, Debug, PartialEq)]
pub struct TwistedPartialAction {
    group: FiniteGroup,
    structure: BlockStructure,
    ideals: Vec<IdealSupport>,
    isos: Vec<StarIsomorphism>,
    // w(r,s) at index r·|G| + s
    cocycle: Vec<AlgebraElement>,
}

impl TwistedPartialAction {
    pub fn new(
        group: FiniteGroup,
        structure: BlockStructure,
        ideals: Vec<IdealSupport>,
        isos: Vec<StarIsomorphism>,
        cocycle: Vec<AlgebraElement>,
    ) -> Result<Self> {
        let n = group.order();
        if ideals.len() != n || isos.len() != n || cocycle.len() != n * n {
            return Err(Error::StructureMismatch(format!(
                "group of order {n} needs {n} ideals, {n} isomorphisms and {} cocycle entries (got {}, {}, {})",
                n * n,
                ideals.len(),
                isos.len(),
                cocycle.len()
            )));
        }
        if ideals.iter().any(|d| d.structure() != &structure) || cocycle.iter().any(|w| w.structure() != &structure) {
            return Err(Error::StructureMismatch("ideal or cocycle over a different block structure".into()));
        }
        for t in group.elements() {
            let theta = &isos[t];
            if theta.domain() != &ideals[group.inv(t)] || theta.codomain() != &ideals[t] {
                return Err(Error::InvalidIsomorphism(format!("θ_{t} must map D_{} onto D_{t}", group.inv(t))));
            }
        }
        Ok(TwistedPartialAction { group, structure, ideals, isos, cocycle })
    }

    /// `D_t = A`, `θ_t = id`, `w ≡ 1`.
    pub fn trivial(group: FiniteGroup, structure: BlockStructure) -> Self {
        let n = group.order();
        let one = AlgebraElement::identity(&structure);
        TwistedPartialAction {
            ideals: vec![IdealSupport::full(&structure); n],
            isos: vec![StarIsomorphism::identity(&structure); n],
            cocycle: vec![one; n * n],
            group,
            structure,
        }
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn ideal(&self, t: usize) -> &IdealSupport {
        &self.ideals[t]
    }

    pub fn ideals(&self) -> &[IdealSupport] {
        &self.ideals
    }

    pub fn iso(&self, t: usize) -> &StarIsomorphism {
        &self.isos[t]
    }

    pub fn isos(&self) -> &[StarIsomorphism] {
        &self.isos
    }

    pub fn w(&self, r: usize, s: usize) -> &AlgebraElement {
        &self.cocycle[r * self.group.order() + s]
    }

    pub fn set_cocycle(&mut self, r: usize, s: usize, w: AlgebraElement) -> Result<()> {
        if w.structure() != &self.structure {
            return Err(Error::StructureMismatch("cocycle entry over a different block structure".into()));
        }
        let n = self.group.order();
        self.cocycle[r * n + s] = w;
        Ok(())
    }

    /// `θ_t(x)` after discarding the part of `x` outside `D_{t⁻¹}`, with the
    /// discarded mass.
    pub fn theta(&self, t: usize, x: &AlgebraElement) -> (AlgebraElement, f64) {
        self.isos[t].apply_lenient(x)
    }

    /// `θ_t⁻¹(x)` after discarding the part of `x` outside `D_t`.
    pub fn theta_inv(&self, t: usize, x: &AlgebraElement) -> (AlgebraElement, f64) {
        self.isos[t].inverse().apply_lenient(x)
    }

    /// `D_{t1} ∩ D_{t2} ∩ ...`
    pub fn ideal_intersection(&self, ts: &[usize]) -> IdealSupport {
        ts.iter().fold(IdealSupport::full(&self.structure), |acc, &t| {
            acc.intersect(&self.ideals[t]).expect("ideals share the structure")
        })
    }
}

fn par_residual(count: usize, f: impl Fn(usize) -> Residual + Sync + Send) -> Residual {
    let parts: Vec<Residual> = (0..count).into_par_iter().map(f).collect();
    parts.into_iter().collect()
}

/// Evaluates axioms (a)–(e) and the unitarity of every cocycle entry.
pub fn check_axioms(tpa: &TwistedPartialAction, tol: &Tolerance) -> AxiomReport {
    let g = &tpa.group;
    let n = g.order();
    let s = &tpa.structure;
    let full = IdealSupport::full(s);
    let units = full.matrix_units();
    let mut report = AxiomReport::new();

    let mut a = Residual::new();
    let e = g.identity();
    a.record(tpa.ideals[e].unit().distance(&full.unit()), &[]);
    for (i, x) in units.iter().enumerate() {
        let (y, mass) = tpa.theta(e, x);
        a.record(y.distance(x).max(mass), &[("a", i)]);
    }
    report.insert("a", a.outcome(tol.eps_eq));

    let b = par_residual(n * n, |p| {
        let (r, t) = (p / n, p % n);
        let mut res = Residual::new();
        let dom = tpa.ideal_intersection(&[g.inv(r), t]);
        let cod = tpa.ideal_intersection(&[r, g.mul(r, t)]);
        let (img, mass) = tpa.theta(r, &dom.unit());
        res.record(img.distance(&cod.unit()).max(mass), &[("r", r), ("s", t)]);
        res
    });
    report.insert("b", b.outcome(tol.eps_eq));

    let c = par_residual(n * n, |p| {
        let (r, t) = (p / n, p % n);
        let rt = g.mul(r, t);
        let w = tpa.w(r, t);
        let mut res = Residual::new();
        let dom = tpa.ideal_intersection(&[g.inv(t), g.inv(rt)]);
        for (i, x) in dom.matrix_units().iter().enumerate() {
            let (ts, m1) = tpa.theta(t, x);
            let (lhs, m2) = tpa.theta(r, &ts);
            let (trs, m3) = tpa.theta(rt, x);
            let rhs = w * &trs * w.adjoint();
            res.record(lhs.distance(&rhs).max(m1).max(m2).max(m3), &[("r", r), ("s", t), ("a", i)]);
        }
        res
    });
    report.insert("c", c.outcome(tol.eps_eq));

    let mut d = Residual::new();
    for t in g.elements() {
        let unit = tpa.ideals[t].unit();
        d.record(tpa.w(e, t).distance(&unit), &[("r", e), ("s", t)]);
        d.record(tpa.w(t, e).distance(&unit), &[("r", t), ("s", e)]);
    }
    report.insert("d", d.outcome(tol.eps_eq));

    let pentagon = par_residual(n * n * n, |p| {
        let (r, st) = (p / (n * n), p % (n * n));
        let (s_, t) = (st / n, st % n);
        let (rs, stt) = (g.mul(r, s_), g.mul(s_, t));
        let mut res = Residual::new();
        let dom = tpa.ideal_intersection(&[g.inv(r), s_, stt]);
        for (i, x) in dom.matrix_units().iter().enumerate() {
            let (l, m1) = tpa.theta(r, &(x * tpa.w(s_, t)));
            let lhs = l * tpa.w(r, stt);
            let (ra, m2) = tpa.theta(r, x);
            let rhs = ra * tpa.w(r, s_) * tpa.w(rs, t);
            res.record(lhs.distance(&rhs).max(m1).max(m2), &[("r", r), ("s", s_), ("t", t), ("a", i)]);
        }
        res
    });
    report.insert("e", pentagon.outcome(tol.eps_eq));

    let unitary = par_residual(n * n, |p| {
        let (r, t) = (p / n, p % n);
        let mut res = Residual::new();
        let dom = tpa.ideal_intersection(&[r, g.mul(r, t)]);
        res.record(unitary_defect(tpa.w(r, t), &dom), &[("r", r), ("s", t)]);
        res
    });
    report.insert("cocycle-unitary", unitary.outcome(tol.eps_eq));
    report
}

/// `θ_f(a w(g,h)*) = θ_f(a) w(f,gh) w(fg,h)* w(f,g)*` for spanning
/// `a ∈ D_{f⁻¹} ∩ D_g ∩ D_gh`. Implied by the axioms, so it doubles as a
/// consistency check of the axiom suite.
pub fn check_aux_identity(tpa: &TwistedPartialAction, tol: &Tolerance) -> AxiomReport {
    let g = &tpa.group;
    let n = g.order();
    let res = par_residual(n * n * n, |p| {
        let (f, gh_) = (p / (n * n), p % (n * n));
        let (g_, h) = (gh_ / n, gh_ % n);
        let (fg, gh) = (g.mul(f, g_), g.mul(g_, h));
        let mut res = Residual::new();
        let dom = tpa.ideal_intersection(&[g.inv(f), g_, gh]);
        for (i, x) in dom.matrix_units().iter().enumerate() {
            let (lhs, m1) = tpa.theta(f, &(x * &tpa.w(g_, h).adjoint()));
            let (fa, m2) = tpa.theta(f, x);
            let rhs = fa * tpa.w(f, gh) * tpa.w(fg, h).adjoint() * tpa.w(f, g_).adjoint();
            res.record(lhs.distance(&rhs).max(m1).max(m2), &[("f", f), ("g", g_), ("h", h), ("a", i)]);
        }
        res
    });
    let mut report = AxiomReport::new();
    report.insert("aux", res.outcome(tol.eps_eq));
    report
}

/// Global twisted action `Ad(V_t)` on the full block algebra together with
/// the ideal `S` it was restricted to.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalWitness {
    structure: BlockStructure,
    unitaries: Vec<ComplexMatrix>,
    restriction: IdealSupport,
}

impl GlobalWitness {
    /// Checks that every `V_t` is unitary, `V_0 = 1`, and that each `V_t`
    /// permutes the blocks of `structure`.
    pub fn new(
        structure: BlockStructure,
        unitaries: Vec<ComplexMatrix>,
        restriction: IdealSupport,
        tol: &Tolerance,
    ) -> Result<Self> {
        let d = structure.hilbert_dim();
        if restriction.structure() != &structure {
            return Err(Error::WitnessMismatch("restriction over a different block structure".into()));
        }
        if unitaries.is_empty() {
            return Err(Error::WitnessMismatch("no unitaries".into()));
        }
        for (t, v) in unitaries.iter().enumerate() {
            if v.shape() != (d, d) {
                return Err(Error::WitnessMismatch(format!("V_{t} is not {d}x{d}")));
            }
            let defect = (v * &v.adjoint() - ComplexMatrix::identity(d)).frobenius_norm();
            if defect > tol.eq_threshold(d as f64) {
                return Err(Error::WitnessMismatch(format!("V_{t} is not unitary (defect {defect:.3e})")));
            }
        }
        if (&unitaries[0] - ComplexMatrix::identity(d)).frobenius_norm() > tol.eq_threshold(d as f64) {
            return Err(Error::WitnessMismatch("V_e must be the identity".into()));
        }
        let w = GlobalWitness { structure, unitaries, restriction };
        for t in 0..w.unitaries.len() {
            w.block_permutation(t, tol)?;
        }
        Ok(w)
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn unitary(&self, t: usize) -> &ComplexMatrix {
        &self.unitaries[t]
    }

    pub fn restriction(&self) -> &IdealSupport {
        &self.restriction
    }

    pub fn hilbert_dim(&self) -> usize {
        self.structure.hilbert_dim()
    }

    /// Block structure of the restriction ideal, blocks re-indexed in order.
    pub fn restricted_structure(&self) -> BlockStructure {
        BlockStructure::new(self.restriction.blocks().map(|k| self.structure.size(k)).collect())
            .expect("restriction of a valid witness is nonempty")
    }

    /// The block `π_t(k)` that `V_t` carries block `k` to.
    pub fn block_permutation(&self, t: usize, tol: &Tolerance) -> Result<Vec<usize>> {
        let v = &self.unitaries[t];
        let projections: Vec<ComplexMatrix> =
            self.structure.blocks().map(|k| IdealSupport::new(&self.structure, [k]).expect("in range").unit().to_dense()).collect();
        let mut perm = Vec::with_capacity(projections.len());
        for (k, p) in projections.iter().enumerate() {
            let img = v * p * v.adjoint();
            let target = projections
                .iter()
                .position(|q| (&img - q).frobenius_norm() <= tol.eq_threshold(self.hilbert_dim() as f64))
                .ok_or_else(|| Error::WitnessMismatch(format!("V_{t} does not map block {k} onto a block")))?;
            perm.push(target);
        }
        Ok(perm)
    }

    /// Places an element of the restricted algebra on the full Hilbert space.
    pub fn embed(&self, x: &AlgebraElement) -> ComplexMatrix {
        let mut full = AlgebraElement::zero(&self.structure);
        for (i, k) in self.restriction.blocks().enumerate() {
            full.set_block(k, x.block(i).clone());
        }
        full.to_dense()
    }
}

/// Size-preserving permutations of the blocks in lexicographic order.
/// Past five blocks only the identity is offered.
fn size_preserving_permutations(sizes: &[usize]) -> Vec<Vec<usize>> {
    let k = sizes.len();
    let identity: Vec<usize> = (0..k).collect();
    if k > 5 {
        return vec![identity];
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; k];
    fn rec(sizes: &[usize], current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let i = current.len();
        if i == sizes.len() {
            out.push(current.clone());
            return;
        }
        for j in 0..sizes.len() {
            if !used[j] && sizes[j] == sizes[i] {
                used[j] = true;
                current.push(j);
                rec(sizes, current, used, out);
                current.pop();
                used[j] = false;
            }
        }
    }
    rec(sizes, &mut current, &mut used, &mut out);
    out
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&k| a[k]).collect()
}

/// Extends generator images to a homomorphism `t ↦ π_t` with
/// `π_{rs} = π_r ∘ π_s`, if one exists.
fn extend_homomorphism(group: &FiniteGroup, gens: &[usize], images: &[&Vec<usize>]) -> Option<Vec<Vec<usize>>> {
    let n = group.order();
    let k = images[0].len();
    let mut pi: Vec<Option<Vec<usize>>> = vec![None; n];
    pi[0] = Some((0..k).collect());
    let mut stack = vec![0];
    while let Some(x) = stack.pop() {
        let px = pi[x].clone().expect("assigned before push");
        for (&g, img) in gens.iter().zip(images) {
            let y = group.mul(x, g);
            let cand = compose(&px, img);
            match &pi[y] {
                None => {
                    pi[y] = Some(cand);
                    stack.push(y);
                }
                Some(p) if *p != cand => return None,
                Some(_) => {}
            }
        }
    }
    let pi: Vec<Vec<usize>> = pi.into_iter().collect::<Option<_>>()?;
    for r in 0..n {
        for s in 0..n {
            if pi[group.mul(r, s)] != compose(&pi[r], &pi[s]) {
                return None;
            }
        }
    }
    Some(pi)
}

/// The lexicographically first nontrivial homomorphism from `group` into
/// the size-preserving block permutations (generator images enumerated in
/// lexicographic order, first generator most significant), or the trivial
/// one when none exists.
pub fn block_permutation_action(group: &FiniteGroup, structure: &BlockStructure) -> Vec<Vec<usize>> {
    let k = structure.num_blocks();
    let trivial = vec![(0..k).collect::<Vec<usize>>(); group.order()];
    let gens = group.generators();
    let perms = size_preserving_permutations(structure.sizes());
    if gens.is_empty() || perms.len() == 1 {
        return trivial;
    }
    let mut digits = vec![0usize; gens.len()];
    loop {
        // advance the mixed-radix counter; the all-zero tuple is the trivial action
        let mut i = gens.len();
        loop {
            if i == 0 {
                return trivial;
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < perms.len() {
                break;
            }
            digits[i] = 0;
        }
        let images: Vec<&Vec<usize>> = digits.iter().map(|&d| &perms[d]).collect();
        if let Some(pi) = extend_homomorphism(group, &gens, &images) {
            return pi;
        }
    }
}

/// Number of blocks kept for a restriction fraction: `round(fraction·K)`
/// clamped to `1..=K`.
pub fn restriction_size(fraction: f64, num_blocks: usize) -> usize {
    ((fraction * num_blocks as f64).round() as usize).clamp(1, num_blocks)
}

/// Random twisted partial action: a global action `Ad(V_t)` with a block
/// permutation part and Haar block unitaries, restricted to a seeded
/// random ideal holding about `fraction` of the blocks.
pub fn generate_random(
    group: &FiniteGroup,
    sizes: &[usize],
    fraction: f64,
    seed: u64,
    tol: &Tolerance,
) -> Result<(TwistedPartialAction, GlobalWitness)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Document(format!("restriction fraction {fraction} outside [0, 1]")));
    }
    let structure = BlockStructure::new(sizes.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unitaries = global_unitaries(group, &structure, &mut rng);
    let mut blocks: Vec<usize> = structure.blocks().collect();
    blocks.shuffle(&mut rng);
    blocks.truncate(restriction_size(fraction, structure.num_blocks()));
    restrict(group, &structure, unitaries, &blocks, tol)
}

/// As [`generate_random`] with an explicit restriction ideal.
pub fn generate_with_restriction(
    group: &FiniteGroup,
    sizes: &[usize],
    restriction: &[usize],
    seed: u64,
    tol: &Tolerance,
) -> Result<(TwistedPartialAction, GlobalWitness)> {
    let structure = BlockStructure::new(sizes.to_vec())?;
    if restriction.is_empty() {
        return Err(Error::StructureMismatch("restriction ideal must contain a block".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unitaries = global_unitaries(group, &structure, &mut rng);
    restrict(group, &structure, unitaries, restriction, tol)
}

fn global_unitaries(group: &FiniteGroup, structure: &BlockStructure, rng: &mut ChaCha8Rng) -> Vec<ComplexMatrix> {
    let pi = block_permutation_action(group, structure);
    let d = structure.hilbert_dim();
    let mut out = vec![ComplexMatrix::identity(d)];
    for p in pi.iter().skip(1) {
        let mut v = ComplexMatrix::zeros(d, d);
        for k in structure.blocks() {
            let u = haar_unitary(rng, structure.size(k));
            v.set_sub_block(structure.offset(p[k]), structure.offset(k), &u);
        }
        out.push(v);
    }
    out
}

fn restrict(
    group: &FiniteGroup,
    full: &BlockStructure,
    unitaries: Vec<ComplexMatrix>,
    restriction: &[usize],
    tol: &Tolerance,
) -> Result<(TwistedPartialAction, GlobalWitness)> {
    let s_ideal = IdealSupport::new(full, restriction.iter().copied())?;
    let witness = GlobalWitness::new(full.clone(), unitaries, s_ideal, tol)
        .map_err(|e| Error::GeneratorInvariantViolated(e.to_string()))?;
    let kept: Vec<usize> = witness.restriction().blocks().collect();
    let mut pos = vec![usize::MAX; full.num_blocks()];
    for (i, &k) in kept.iter().enumerate() {
        pos[k] = i;
    }
    let sub = witness.restricted_structure();
    let n = group.order();
    let perms: Vec<Vec<usize>> =
        (0..n).map(|t| witness.block_permutation(t, tol)).collect::<Result<_>>().map_err(|e| Error::GeneratorInvariantViolated(e.to_string()))?;

    let ideals: Vec<IdealSupport> = (0..n)
        .map(|t| {
            let blocks = kept.iter().filter(|&&k| perms[t].iter().position(|&x| x == k).is_some_and(|src| pos[src] != usize::MAX));
            IdealSupport::new(&sub, blocks.map(|&k| pos[k]).collect::<Vec<_>>()).expect("indices in range")
        })
        .collect();

    let mut isos = Vec::with_capacity(n);
    for t in 0..n {
        let dom = ideals[group.inv(t)].clone();
        let mut block_map = std::collections::BTreeMap::new();
        let mut blocks_u = std::collections::BTreeMap::new();
        for i in dom.blocks() {
            let k = kept[i];
            let target = perms[t][k];
            let n_k = full.size(k);
            let u = witness.unitary(t).sub_block(full.offset(target), full.offset(k), n_k, n_k);
            block_map.insert(i, pos[target]);
            blocks_u.insert(i, u);
        }
        let iso = StarIsomorphism::new(dom, ideals[t].clone(), block_map, blocks_u, tol)
            .map_err(|e| Error::GeneratorInvariantViolated(format!("θ_{t}: {e}")))?;
        isos.push(iso);
    }

    let mut cocycle = Vec::with_capacity(n * n);
    for r in 0..n {
        for s in 0..n {
            let rs = group.mul(r, s);
            let dense = witness.unitary(r) * witness.unitary(s) * witness.unitary(rs).adjoint();
            let (global, off) = AlgebraElement::from_dense(full, &dense)?;
            if off > tol.eq_threshold(full.hilbert_dim() as f64) {
                return Err(Error::GeneratorInvariantViolated(format!("w({r},{s}) is not block diagonal")));
            }
            let blocks = kept.iter().map(|&k| global.block(k).clone()).collect();
            let w = AlgebraElement::from_blocks(&sub, blocks)?;
            let dom = ideals[r].intersect(&ideals[rs])?;
            cocycle.push(w.compress(&dom));
        }
    }

    let tpa = TwistedPartialAction::new(group.clone(), sub, ideals, isos, cocycle)
        .map_err(|e| Error::GeneratorInvariantViolated(e.to_string()))?;
    let report = check_axioms(&tpa, tol);
    if !report.all_pass() {
        return Err(Error::GeneratorInvariantViolated(format!("axioms {:?} fail", report.failing())));
    }
    Ok((tpa, witness))
}
