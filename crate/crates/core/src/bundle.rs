//! C*-algebraic bundles over finite groups: the semidirect product bundle of
//! a twisted partial action, concrete bundles of matrix subspaces, and one
//! axiom checker shared by both.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{AlgebraElement, IdealSupport};
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::random::gaussian_scalar;
use crate::linalg::{min_eigenvalue, operator_norm, ComplexMatrix, MatrixSpan, Tolerance, C64, ONE};
use crate::report::{AxiomReport, Residual};
use crate::tpa::{GlobalWitness, TwistedPartialAction};

/// `value δ_tag`.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleElement<V = AlgebraElement> {
    pub tag: usize,
    pub value: V,
}

impl<V> BundleElement<V> {
    pub fn new(tag: usize, value: V) -> Self {
        BundleElement { tag, value }
    }
}

/// What the axiom checker needs from a bundle. Products and adjoints are
/// computed without fiber checks so the checker can measure violations.
pub trait BundleOps: Sync {
    type Value: Clone + Send + Sync;

    fn group(&self) -> &FiniteGroup;

    /// A linear basis of the fiber over `t`.
    fn fiber_basis(&self, t: usize) -> Vec<Self::Value>;

    fn multiply_values(&self, r: usize, x: &Self::Value, s: usize, y: &Self::Value) -> Self::Value;

    /// Adjoint of `x δ_t`, a value over `t⁻¹`.
    fn involute_value(&self, t: usize, x: &Self::Value) -> Self::Value;

    fn norm(&self, x: &Self::Value) -> f64;

    fn linear_combination(&self, terms: &[(C64, &Self::Value)]) -> Self::Value;

    /// Distance of `x` from the fiber over `t`.
    fn fiber_residual(&self, t: usize, x: &Self::Value) -> f64;

    /// How far `x` is from being a positive element: the larger of its
    /// anti-Hermitian part and its most negative eigenvalue.
    fn positivity_defect(&self, x: &Self::Value) -> f64;

    fn multiply(&self, x: &BundleElement<Self::Value>, y: &BundleElement<Self::Value>) -> BundleElement<Self::Value> {
        let tag = self.group().mul(x.tag, y.tag);
        BundleElement::new(tag, self.multiply_values(x.tag, &x.value, y.tag, &y.value))
    }

    fn involute(&self, x: &BundleElement<Self::Value>) -> BundleElement<Self::Value> {
        BundleElement::new(self.group().inv(x.tag), self.involute_value(x.tag, &x.value))
    }

    fn distance(&self, x: &Self::Value, y: &Self::Value) -> f64 {
        self.norm(&self.linear_combination(&[(ONE, x), (-ONE, y)]))
    }
}

/// The bundle `{D_t δ_t}` of a twisted partial action.
#[derive(Clone, Debug)]
pub struct SemidirectBundle {
    action: TwistedPartialAction,
}

impl SemidirectBundle {
    pub fn new(action: TwistedPartialAction) -> Self {
        SemidirectBundle { action }
    }

    pub fn action(&self) -> &TwistedPartialAction {
        &self.action
    }
}

fn positivity_defect_of(blocks: &[ComplexMatrix]) -> f64 {
    blocks
        .iter()
        .map(|b| {
            let anti = (b - b.adjoint()).frobenius_norm() / 2.0;
            anti.max(-min_eigenvalue(b)).max(0.0)
        })
        .fold(0.0, f64::max)
}

impl BundleOps for SemidirectBundle {
    type Value = AlgebraElement;

    fn group(&self) -> &FiniteGroup {
        self.action.group()
    }

    fn fiber_basis(&self, t: usize) -> Vec<AlgebraElement> {
        self.action.ideal(t).matrix_units()
    }

    fn multiply_values(&self, r: usize, a: &AlgebraElement, s: usize, b: &AlgebraElement) -> AlgebraElement {
        let (pre, _) = self.action.theta_inv(r, a);
        let (img, _) = self.action.theta(r, &(pre * b));
        img * self.action.w(r, s)
    }

    fn involute_value(&self, t: usize, a: &AlgebraElement) -> AlgebraElement {
        let g = self.action.group();
        let (img, _) = self.action.theta_inv(t, &a.adjoint());
        img * self.action.w(g.inv(t), t).adjoint()
    }

    fn norm(&self, x: &AlgebraElement) -> f64 {
        x.norm()
    }

    fn linear_combination(&self, terms: &[(C64, &AlgebraElement)]) -> AlgebraElement {
        let mut out = AlgebraElement::zero(self.action.structure());
        for (c, x) in terms {
            out = out + x.scale(*c);
        }
        out
    }

    fn fiber_residual(&self, t: usize, x: &AlgebraElement) -> f64 {
        x.mass_outside(self.action.ideal(t))
    }

    fn positivity_defect(&self, x: &AlgebraElement) -> f64 {
        positivity_defect_of(x.blocks())
    }
}

fn check_in_fiber(tpa: &TwistedPartialAction, x: &BundleElement, tol: &Tolerance) -> Result<()> {
    let mass = x.value.mass_outside(tpa.ideal(x.tag));
    let scale = x.value.norm();
    if mass > tol.eps_eq * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::FiberViolation { residual: mass / scale });
    }
    Ok(())
}

/// `(a δ_r)(b δ_s) = θ_r(θ_r⁻¹(a) b) w(r,s) δ_rs`.
pub fn semidirect_multiply(
    x: &BundleElement,
    y: &BundleElement,
    tpa: &TwistedPartialAction,
    tol: &Tolerance,
) -> Result<BundleElement> {
    check_in_fiber(tpa, x, tol)?;
    check_in_fiber(tpa, y, tol)?;
    let out = SemidirectBundle::new(tpa.clone()).multiply(x, y);
    let g = tpa.group();
    let dom = tpa.ideal(x.tag).intersect(tpa.ideal(g.mul(x.tag, y.tag)))?;
    let mass = out.value.mass_outside(&dom);
    let scale = x.value.norm() * y.value.norm();
    if mass > tol.eps_eq * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::FiberViolation { residual: mass / scale });
    }
    Ok(out)
}

/// The same product through the unit of `D_{r⁻¹}`:
/// `a · θ_r(1_{D_{r⁻¹}} b) · w(r,s)`.
pub fn semidirect_multiply_unit_form(x: &BundleElement, y: &BundleElement, tpa: &TwistedPartialAction) -> BundleElement {
    let g = tpa.group();
    let r = x.tag;
    let unit = tpa.ideal(g.inv(r)).unit();
    let (img, _) = tpa.theta(r, &(&unit * &y.value));
    BundleElement::new(g.mul(r, y.tag), &x.value * &img * tpa.w(r, y.tag))
}

/// `(a δ_t)* = θ_t⁻¹(a*) w(t⁻¹,t)* δ_{t⁻¹}`, cross-checked against
/// `w(t⁻¹,t)* θ_{t⁻¹}(a*)`.
pub fn semidirect_involute(x: &BundleElement, tpa: &TwistedPartialAction, tol: &Tolerance) -> Result<BundleElement> {
    check_in_fiber(tpa, x, tol)?;
    let g = tpa.group();
    let t = x.tag;
    let ti = g.inv(t);
    let out = SemidirectBundle::new(tpa.clone()).involute(x);
    let (other, _) = tpa.theta(ti, &x.value.adjoint());
    let other = tpa.w(ti, t).adjoint() * other;
    let scale = x.value.norm().max(f64::MIN_POSITIVE);
    let diff = out.value.distance(&other);
    if diff > tol.eps_eq * scale {
        return Err(Error::EquivalentFormMismatch { residual: diff / scale });
    }
    let mass = out.value.mass_outside(tpa.ideal(ti));
    if mass > tol.eps_eq * scale {
        return Err(Error::FiberViolation { residual: mass / scale });
    }
    Ok(out)
}

/// Bundle of matrix subspaces `B_t ⊆ M_d` with matrix product and adjoint.
#[derive(Clone, Debug)]
pub struct ConcreteBundle {
    group: FiniteGroup,
    hilbert_dim: usize,
    fibers: Vec<MatrixSpan>,
    tol: Tolerance,
}

impl ConcreteBundle {
    /// Spans each fiber; the bundle axioms are not checked here.
    pub fn new(group: FiniteGroup, hilbert_dim: usize, fibers: Vec<Vec<ComplexMatrix>>, tol: &Tolerance) -> Result<Self> {
        if fibers.len() != group.order() {
            return Err(Error::StructureMismatch(format!(
                "group of order {} needs {} fibers, got {}",
                group.order(),
                group.order(),
                fibers.len()
            )));
        }
        if hilbert_dim == 0 {
            return Err(Error::ShapeMismatch("hilbert_dim must be positive".into()));
        }
        let fibers = fibers
            .iter()
            .map(|mats| {
                if mats.iter().any(|m| !m.is_finite()) {
                    return Err(Error::NonFinite);
                }
                MatrixSpan::from_matrices(hilbert_dim, mats, 0.0, *tol)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConcreteBundle { group, hilbert_dim, fibers, tol: *tol })
    }

    pub fn from_spans(group: FiniteGroup, hilbert_dim: usize, fibers: Vec<MatrixSpan>, tol: &Tolerance) -> Result<Self> {
        if fibers.len() != group.order() || fibers.iter().any(|f| f.ambient_dim() != hilbert_dim) {
            return Err(Error::StructureMismatch("fiber count or ambient dimension mismatch".into()));
        }
        Ok(ConcreteBundle { group, hilbert_dim, fibers, tol: *tol })
    }

    pub fn group_ref(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn fiber(&self, t: usize) -> &MatrixSpan {
        &self.fibers[t]
    }

    pub fn fibers(&self) -> &[MatrixSpan] {
        &self.fibers
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tol
    }

    /// `B_r B_s ⊆ B_rs` and `B_t* ⊆ B_{t⁻¹}`; the error carries the
    /// largest relative residual.
    pub fn validate(&self) -> Result<()> {
        let g = &self.group;
        let mut worst = 0.0f64;
        for r in g.elements() {
            for s in g.elements() {
                let target = &self.fibers[g.mul(r, s)];
                for x in self.fibers[r].basis() {
                    for y in self.fibers[s].basis() {
                        let p = x * y;
                        worst = worst.max(target.residual(&p) / (x.frobenius_norm() * y.frobenius_norm()));
                    }
                }
            }
            for x in self.fibers[r].basis() {
                worst = worst.max(self.fibers[g.inv(r)].residual(&x.adjoint()) / x.frobenius_norm());
            }
        }
        if worst > self.tol.eps_eq {
            return Err(Error::FiberViolation { residual: worst });
        }
        Ok(())
    }
}

impl BundleOps for ConcreteBundle {
    type Value = ComplexMatrix;

    fn group(&self) -> &FiniteGroup {
        &self.group
    }

    fn fiber_basis(&self, t: usize) -> Vec<ComplexMatrix> {
        self.fibers[t].basis().to_vec()
    }

    fn multiply_values(&self, _: usize, x: &ComplexMatrix, _: usize, y: &ComplexMatrix) -> ComplexMatrix {
        x * y
    }

    fn involute_value(&self, _: usize, x: &ComplexMatrix) -> ComplexMatrix {
        x.adjoint()
    }

    fn norm(&self, x: &ComplexMatrix) -> f64 {
        operator_norm(x)
    }

    fn linear_combination(&self, terms: &[(C64, &ComplexMatrix)]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.hilbert_dim, self.hilbert_dim);
        for (c, x) in terms {
            out = out + x.scale(*c);
        }
        out
    }

    fn fiber_residual(&self, t: usize, x: &ComplexMatrix) -> f64 {
        self.fibers[t].residual(x)
    }

    fn positivity_defect(&self, x: &ComplexMatrix) -> f64 {
        positivity_defect_of(std::slice::from_ref(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BundleCheckConfig {
    /// Random elements per fiber (or fiber pair) for the norm axioms.
    pub samples: usize,
    pub seed: u64,
}

impl Default for BundleCheckConfig {
    fn default() -> Self {
        BundleCheckConfig { samples: 8, seed: 0 }
    }
}

pub fn check_bundle_axioms<B: BundleOps>(bundle: &B, tol: &Tolerance) -> AxiomReport {
    check_bundle_axioms_with(bundle, tol, &BundleCheckConfig::default())
}

fn task_rng(cfg: &BundleCheckConfig, axiom: u64, task: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed ^ (axiom << 48) ^ task as u64)
}

fn par_tasks(count: usize, f: impl Fn(usize) -> Residual + Sync + Send) -> Residual {
    let parts: Vec<Residual> = (0..count).into_par_iter().map(f).collect();
    parts.into_iter().collect()
}

fn scale_of(x: f64) -> f64 {
    x.max(f64::MIN_POSITIVE)
}

/// Axioms (i)–(xi). Equalities that are multilinear are checked on all
/// basis tuples; the norm and positivity axioms on basis elements plus
/// seeded random elements.
pub fn check_bundle_axioms_with<B: BundleOps>(bundle: &B, tol: &Tolerance, cfg: &BundleCheckConfig) -> AxiomReport {
    let g = bundle.group();
    let n = g.order();
    let bases: Vec<Vec<B::Value>> = (0..n).map(|t| bundle.fiber_basis(t)).collect();
    let norms: Vec<Vec<f64>> = bases.iter().map(|b| b.iter().map(|x| bundle.norm(x)).collect()).collect();
    let random = |rng: &mut ChaCha8Rng, t: usize| -> B::Value {
        let coeffs: Vec<C64> = bases[t].iter().map(|_| gaussian_scalar(rng)).collect();
        let terms: Vec<(C64, &B::Value)> = coeffs.iter().copied().zip(&bases[t]).collect();
        bundle.linear_combination(&terms)
    };
    let eps = tol.eps_eq;
    let mut report = AxiomReport::new();

    // (i) B_r B_s ⊆ B_rs
    let i = par_tasks(n * n, |p| {
        let (r, s) = (p / n, p % n);
        let rs = g.mul(r, s);
        let mut res = Residual::new();
        for (a, x) in bases[r].iter().enumerate() {
            for (b, y) in bases[s].iter().enumerate() {
                let prod = bundle.multiply_values(r, x, s, y);
                let v = bundle.fiber_residual(rs, &prod) / scale_of(norms[r][a] * norms[s][b]);
                res.record(v, &[("r", r), ("s", s), ("x", a), ("y", b)]);
            }
        }
        res
    });
    report.insert("i", i.outcome(eps));

    // (ii) bilinearity with random scalars on neighbouring basis pairs
    let ii = par_tasks(n * n, |p| {
        let (r, s) = (p / n, p % n);
        let mut rng = task_rng(cfg, 2, p);
        let mut res = Residual::new();
        let (br, bs) = (&bases[r], &bases[s]);
        for a in 0..br.len() {
            for b in 0..bs.len() {
                let (a2, b2) = ((a + 1) % br.len(), (b + 1) % bs.len());
                let (al, be) = (gaussian_scalar(&mut rng), gaussian_scalar(&mut rng));
                let left = bundle.linear_combination(&[(al, &br[a]), (be, &br[a2])]);
                let lhs = bundle.multiply_values(r, &left, s, &bs[b]);
                let p1 = bundle.multiply_values(r, &br[a], s, &bs[b]);
                let p2 = bundle.multiply_values(r, &br[a2], s, &bs[b]);
                let rhs = bundle.linear_combination(&[(al, &p1), (be, &p2)]);
                let scale = (al.norm() + be.norm()) * norms[r][a].max(norms[r][a2]) * norms[s][b];
                res.record(bundle.distance(&lhs, &rhs) / scale_of(scale), &[("r", r), ("s", s), ("x", a), ("y", b)]);
                let right = bundle.linear_combination(&[(al, &bs[b]), (be, &bs[b2])]);
                let lhs = bundle.multiply_values(r, &br[a], s, &right);
                let q2 = bundle.multiply_values(r, &br[a], s, &bs[b2]);
                let rhs = bundle.linear_combination(&[(al, &p1), (be, &q2)]);
                let scale = (al.norm() + be.norm()) * norms[r][a] * norms[s][b].max(norms[s][b2]);
                res.record(bundle.distance(&lhs, &rhs) / scale_of(scale), &[("r", r), ("s", s), ("x", a), ("y", b)]);
            }
        }
        res
    });
    report.insert("ii", ii.outcome(eps));

    // (iii) associativity on all basis triples
    let iii = par_tasks(n * n * n, |p| {
        let (r, st) = (p / (n * n), p % (n * n));
        let (s, t) = (st / n, st % n);
        let (rs, stt) = (g.mul(r, s), g.mul(s, t));
        let mut res = Residual::new();
        let xy: Vec<Vec<B::Value>> = bases[r]
            .iter()
            .map(|x| bases[s].iter().map(|y| bundle.multiply_values(r, x, s, y)).collect())
            .collect();
        let yz: Vec<Vec<B::Value>> = bases[s]
            .iter()
            .map(|y| bases[t].iter().map(|z| bundle.multiply_values(s, y, t, z)).collect())
            .collect();
        for (a, x) in bases[r].iter().enumerate() {
            for b in 0..bases[s].len() {
                for (c, z) in bases[t].iter().enumerate() {
                    let lhs = bundle.multiply_values(rs, &xy[a][b], t, z);
                    let rhs = bundle.multiply_values(r, x, stt, &yz[b][c]);
                    let scale = norms[r][a] * norms[s][b] * norms[t][c];
                    res.record(
                        bundle.distance(&lhs, &rhs) / scale_of(scale),
                        &[("r", r), ("s", s), ("t", t), ("x", a), ("y", b), ("z", c)],
                    );
                }
            }
        }
        res
    });
    report.insert("iii", iii.outcome(eps));

    // (iv) ‖bc‖ ≤ ‖b‖‖c‖
    let iv = par_tasks(n * n, |p| {
        let (r, s) = (p / n, p % n);
        let mut rng = task_rng(cfg, 4, p);
        let mut res = Residual::new();
        if bases[r].is_empty() || bases[s].is_empty() {
            return res;
        }
        for k in 0..cfg.samples {
            let (x, y) = (random(&mut rng, r), random(&mut rng, s));
            let bound = bundle.norm(&x) * bundle.norm(&y);
            let excess = (bundle.norm(&bundle.multiply_values(r, &x, s, &y)) - bound).max(0.0);
            res.record(excess / scale_of(bound), &[("r", r), ("s", s), ("sample", k)]);
        }
        res
    });
    report.insert("iv", iv.outcome(eps));

    // (v) B_t* ⊆ B_{t⁻¹}
    let mut v = Residual::new();
    for t in 0..n {
        for (a, x) in bases[t].iter().enumerate() {
            let adj = bundle.involute_value(t, x);
            v.record(bundle.fiber_residual(g.inv(t), &adj) / scale_of(norms[t][a]), &[("t", t), ("x", a)]);
        }
    }
    report.insert("v", v.outcome(eps));

    // (vi) conjugate linearity
    let vi = par_tasks(n, |t| {
        let mut rng = task_rng(cfg, 6, t);
        let mut res = Residual::new();
        let bt = &bases[t];
        for a in 0..bt.len() {
            let a2 = (a + 1) % bt.len();
            let (al, be) = (gaussian_scalar(&mut rng), gaussian_scalar(&mut rng));
            let comb = bundle.linear_combination(&[(al, &bt[a]), (be, &bt[a2])]);
            let lhs = bundle.involute_value(t, &comb);
            let (x1, x2) = (bundle.involute_value(t, &bt[a]), bundle.involute_value(t, &bt[a2]));
            let rhs = bundle.linear_combination(&[(al.conj(), &x1), (be.conj(), &x2)]);
            let scale = (al.norm() + be.norm()) * norms[t][a].max(norms[t][a2]);
            res.record(bundle.distance(&lhs, &rhs) / scale_of(scale), &[("t", t), ("x", a)]);
        }
        res
    });
    report.insert("vi", vi.outcome(eps));

    // (vii) (bc)* = c* b* on all basis pairs
    let vii = par_tasks(n * n, |p| {
        let (r, s) = (p / n, p % n);
        let (ri, si) = (g.inv(r), g.inv(s));
        let mut res = Residual::new();
        let stars_r: Vec<B::Value> = bases[r].iter().map(|x| bundle.involute_value(r, x)).collect();
        let stars_s: Vec<B::Value> = bases[s].iter().map(|y| bundle.involute_value(s, y)).collect();
        for (a, x) in bases[r].iter().enumerate() {
            for (b, y) in bases[s].iter().enumerate() {
                let lhs = bundle.involute_value(g.mul(r, s), &bundle.multiply_values(r, x, s, y));
                let rhs = bundle.multiply_values(si, &stars_s[b], ri, &stars_r[a]);
                let scale = norms[r][a] * norms[s][b];
                res.record(bundle.distance(&lhs, &rhs) / scale_of(scale), &[("r", r), ("s", s), ("x", a), ("y", b)]);
            }
        }
        res
    });
    report.insert("vii", vii.outcome(eps));

    // (viii)–(xi) on basis elements and random elements of each fiber
    let samples_of = |rng: &mut ChaCha8Rng, t: usize| -> Vec<B::Value> {
        let mut out = bases[t].clone();
        if !bases[t].is_empty() {
            out.extend((0..cfg.samples).map(|_| random(rng, t)));
        }
        out
    };
    let per_fiber: Vec<[Residual; 4]> = (0..n)
        .into_par_iter()
        .map(|t| {
            let mut rng = task_rng(cfg, 8, t);
            let ti = g.inv(t);
            let mut out: [Residual; 4] = Default::default();
            for (k, x) in samples_of(&mut rng, t).iter().enumerate() {
                let at = [("t", t), ("sample", k)];
                let nx = bundle.norm(x);
                let star = bundle.involute_value(t, x);
                out[0].record(bundle.distance(&bundle.involute_value(ti, &star), x) / scale_of(nx), &at);
                out[1].record((bundle.norm(&star) - nx).abs() / scale_of(nx), &at);
                let sx = bundle.multiply_values(ti, &star, t, x);
                let xs = bundle.multiply_values(t, x, ti, &star);
                let sq = scale_of(nx * nx);
                out[2].record(((bundle.norm(&sx) - nx * nx).abs() / sq).max((bundle.norm(&xs) - nx * nx).abs() / sq), &at);
                out[3].record((bundle.positivity_defect(&sx) / sq).max(bundle.positivity_defect(&xs) / sq), &at);
            }
            out
        })
        .collect();
    let mut merged: [Residual; 4] = Default::default();
    for parts in per_fiber {
        for (m, p) in merged.iter_mut().zip(parts) {
            *m = std::mem::take(m).merge(p);
        }
    }
    for (name, r) in ["viii", "ix", "x", "xi"].into_iter().zip(merged) {
        report.insert(name, r.outcome(eps));
    }
    report
}

/// `ρ(a δ_t) = a u_t` with `u_t = 1_{D_t} V_t` on the Hilbert space of the
/// witness, checked to intertwine the semidirect operations with matrix
/// product and adjoint and to preserve norms.
pub fn represent_semidirect(
    tpa: &TwistedPartialAction,
    witness: &GlobalWitness,
    tol: &Tolerance,
) -> Result<ConcreteBundle> {
    let g = tpa.group();
    let n = g.order();
    if witness.unitaries().len() != n {
        return Err(Error::WitnessMismatch(format!("{} unitaries for a group of order {n}", witness.unitaries().len())));
    }
    if &witness.restricted_structure() != tpa.structure() {
        return Err(Error::WitnessMismatch("restriction does not match the algebra of the action".into()));
    }
    let d = witness.hilbert_dim();
    let u: Vec<ComplexMatrix> = (0..n).map(|t| witness.embed(&tpa.ideal(t).unit()) * witness.unitary(t)).collect();
    let rho = |x: &BundleElement| witness.embed(&x.value) * &u[x.tag];
    let bases: Vec<Vec<BundleElement>> =
        (0..n).map(|t| tpa.ideal(t).matrix_units().into_iter().map(|a| BundleElement::new(t, a)).collect()).collect();
    let fibers: Vec<Vec<ComplexMatrix>> = bases.iter().map(|b| b.iter().map(rho).collect()).collect();
    let bundle = ConcreteBundle::new(g.clone(), d, fibers, tol)?;
    for t in 0..n {
        if bundle.fiber(t).dim() != tpa.ideal(t).dim() {
            return Err(Error::WitnessMismatch(format!(
                "fiber {t} has dimension {} instead of {}",
                bundle.fiber(t).dim(),
                tpa.ideal(t).dim()
            )));
        }
    }
    let abstract_bundle = SemidirectBundle::new(tpa.clone());
    let worst = (0..n * n)
        .into_par_iter()
        .map(|p| {
            let (r, s) = (p / n, p % n);
            let mut worst = 0.0f64;
            for x in &bases[r] {
                for y in &bases[s] {
                    let xy = abstract_bundle.multiply(x, y);
                    worst = worst.max((rho(&xy) - rho(x) * rho(y)).frobenius_norm());
                }
            }
            if s == 0 {
                for x in &bases[r] {
                    let xs = abstract_bundle.involute(x);
                    worst = worst.max((rho(&xs) - rho(x).adjoint()).frobenius_norm());
                    worst = worst.max((operator_norm(&rho(x)) - x.value.norm()).abs());
                }
            }
            worst
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    if worst > tol.eq_threshold(1.0) {
        return Err(Error::WitnessMismatch(format!("representation defect {worst:.3e}")));
    }
    bundle.validate().map_err(|e| Error::WitnessMismatch(e.to_string()))?;
    Ok(bundle)
}

/// Random element `Σ c_i b_i` of the fiber over `t` with Gaussian `c_i`.
pub fn random_fiber_element<B: BundleOps, R: Rng>(bundle: &B, t: usize, rng: &mut R) -> BundleElement<B::Value> {
    let basis = bundle.fiber_basis(t);
    let coeffs: Vec<C64> = basis.iter().map(|_| gaussian_scalar(rng)).collect();
    let terms: Vec<(C64, &B::Value)> = coeffs.iter().copied().zip(&basis).collect();
    BundleElement::new(t, bundle.linear_combination(&terms))
}

/// The ideal `D_t` of a semidirect bundle fiber as a support.
pub fn fiber_support(bundle: &SemidirectBundle, t: usize) -> &IdealSupport {
    bundle.action().ideal(t)
}
