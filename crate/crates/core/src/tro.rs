//! Ternary rings of operators: matrix spaces `E` with `EE*E ⊆ E` and the
//! triple product `⟨a b c⟩ = a b* c`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::structure_decompose;
use crate::error::{Error, RankCertificate, Result};
use crate::linalg::{
    hermitian_eigen, operator_norm, polar_decompose_with, span_equal, ComplexMatrix, MatrixSpan, Tolerance, C64,
};
use crate::report::{AxiomReport, Residual};

/// A matrix space closed under `(a, b, c) ↦ a b* c`.
#[derive(Clone, Debug, PartialEq)]
pub struct TroSpace {
    space: MatrixSpan,
}

impl TroSpace {
    pub fn new(space: MatrixSpan) -> Result<Self> {
        if !is_tro(&space) {
            return Err(Error::NotATro);
        }
        Ok(TroSpace { space })
    }

    pub fn from_matrices(dim: usize, mats: &[ComplexMatrix], tol: &Tolerance) -> Result<Self> {
        Self::new(MatrixSpan::from_matrices(dim, mats, 0.0, *tol)?)
    }

    pub fn space(&self) -> &MatrixSpan {
        &self.space
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn tolerance(&self) -> &Tolerance {
        self.space.tolerance()
    }

    pub fn contains(&self, m: &ComplexMatrix) -> bool {
        self.space.contains(m)
    }

    pub fn random_element(&self, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        self.space.random_element(rng)
    }
}

pub fn triple(a: &ComplexMatrix, b: &ComplexMatrix, c: &ComplexMatrix) -> ComplexMatrix {
    a * &b.adjoint() * c
}

/// `EE*E ⊆ E` as spans.
pub fn is_tro(e: &MatrixSpan) -> bool {
    if e.is_zero() {
        return true;
    }
    let eet = e.product(&e.adjoint()).expect("same ambient");
    let eete = eet.product(e).expect("same ambient");
    e.contains_span(&eete)
}

fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Spot checks of the ternary C*-ring axioms on random triples: the two
/// associativity identities, `‖⟨abc⟩‖ ≤ ‖a‖‖b‖‖c‖` and `‖⟨aaa⟩‖ = ‖a‖³`.
pub fn ternary_axiom_report(e: &TroSpace, samples: usize, seed: u64) -> AxiomReport {
    let tol = *e.tolerance();
    let mut rng = seeded(seed);
    let (mut assoc, mut bound, mut cube) = (Residual::new(), Residual::new(), Residual::new());
    for k in 0..samples {
        let [a, b, c, d, x] = std::array::from_fn(|_| e.random_element(&mut rng));
        let lhs = triple(&triple(&a, &b, &c), &d, &x);
        let mid = triple(&a, &triple(&d, &c, &b), &x);
        let rhs = triple(&a, &b, &triple(&c, &d, &x));
        let scale = [&a, &b, &c, &d, &x].iter().map(|m| operator_norm(m)).product::<f64>();
        let r = (&lhs - &mid).frobenius_norm().max((&lhs - &rhs).frobenius_norm());
        assoc.record(rel(r, scale), &[("sample", k)]);
        let n = operator_norm(&triple(&a, &b, &c));
        let s = operator_norm(&a) * operator_norm(&b) * operator_norm(&c);
        bound.record(rel((n - s).max(0.0), s), &[("sample", k)]);
        let na = operator_norm(&a);
        cube.record(rel((operator_norm(&triple(&a, &a, &a)) - na.powi(3)).abs(), na.powi(3)), &[("sample", k)]);
    }
    let mut report = AxiomReport::new();
    report.insert("ternary-associativity", assoc.outcome(tol.eps_eq));
    report.insert("ternary-norm-bound", bound.outcome(tol.eps_eq));
    report.insert("ternary-cube-norm", cube.outcome(tol.eps_eq));
    report
}

/// `(EE*, E*E)`. Errors if `EE*E = E` fails, which cannot happen for a TRO
/// up to rounding.
pub fn range_algebras(e: &TroSpace) -> Result<(MatrixSpan, MatrixSpan)> {
    let s = &e.space;
    let left = s.product(&s.adjoint())?;
    let right = s.adjoint().product(s)?;
    if !span_equal(&left.product(s)?, s)? {
        return Err(Error::HypothesisFailed("EE*E = E".into()));
    }
    Ok((left, right))
}

/// Matrix of `a ↦ f(a)` on the coordinates of `E` in its orthonormal basis.
fn coordinate_matrix(space: &MatrixSpan, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let basis = space.basis();
    let k = basis.len();
    let mut out = ComplexMatrix::zeros(k, k);
    for (j, b) in basis.iter().enumerate() {
        for (i, c) in space.coefficients(&f(b)).into_iter().enumerate() {
            out.set(i, j, c);
        }
    }
    out
}

/// `λ_{xy}: a ↦ x y* a` in coordinates.
pub fn left_operator(e: &TroSpace, x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    let m = x * &y.adjoint();
    coordinate_matrix(&e.space, |a| &m * a)
}

/// `ρ_{xy}: a ↦ a x* y` in coordinates.
pub fn right_operator(e: &TroSpace, x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    let m = x.adjoint() * y;
    coordinate_matrix(&e.space, |a| a * &m)
}

/// Checks of the left and right operator calculus on `samples` random
/// pairs: adjoint relations, composition, the C*-identity, the isometric
/// identifications with `EE*` and `E*E`, and the norm lemma for both.
pub fn left_operator_checks(e: &TroSpace, samples: usize, seed: u64) -> AxiomReport {
    let tol = *e.tolerance();
    let mut rng = seeded(seed);
    let names = [
        "adjoint-relation",
        "adjoint-coordinates",
        "composition",
        "c-star-identity",
        "phi-isometry",
        "psi-isometry",
        "norm-lemma-left",
        "norm-lemma-right",
    ];
    let mut res: Vec<Residual> = names.iter().map(|_| Residual::new()).collect();
    if e.dim() == 0 {
        let mut report = AxiomReport::new();
        for (name, r) in names.iter().zip(res) {
            report.insert(*name, r.outcome(tol.eps_eq));
        }
        return report;
    }
    for k in 0..samples {
        let at = [("sample", k)];
        let [x, y, a, b, c, x2, y2] = std::array::from_fn(|_| e.random_element(&mut rng));

        // ⟨a, λ_xy(b), c⟩ = ⟨a, b, λ_yx(c)⟩
        let lhs = triple(&a, &triple(&x, &y, &b), &c);
        let rhs = triple(&a, &b, &triple(&y, &x, &c));
        let scale = [&a, &b, &c, &x, &y].iter().map(|m| operator_norm(m)).product::<f64>();
        res[0].record(rel((&lhs - &rhs).frobenius_norm(), scale), &at);

        let lxy = left_operator(e, &x, &y);
        let lyx = left_operator(e, &y, &x);
        let lnorm = operator_norm(&lxy);
        res[1].record(rel((&lyx - &lxy.adjoint()).frobenius_norm(), lnorm), &at);

        // λ_{x2 y2} ∘ λ_{xy} = λ_{⟨x2 y2 x⟩, y}
        let t = left_operator(e, &x2, &y2);
        let composed = &t * &lxy;
        let direct = left_operator(e, &triple(&x2, &y2, &x), &y);
        res[2].record(rel((&composed - &direct).frobenius_norm(), operator_norm(&t) * lnorm), &at);

        // T = λ_xy + λ_{x2 y2}
        let sum = &lxy + &t;
        let n = operator_norm(&sum);
        let tstar_t = operator_norm(&(sum.adjoint() * &sum));
        res[3].record(rel((n * n - tstar_t).abs(), n * n), &at);

        let a_op = &x * &y.adjoint() + &x2 * &y2.adjoint();
        let a_norm = operator_norm(&a_op);
        res[4].record(rel((n - a_norm).abs(), a_norm), &at);

        let r_sum = right_operator(e, &x, &y) + right_operator(e, &x2, &y2);
        let b_op = x.adjoint() * &y + x2.adjoint() * &y2;
        let b_norm = operator_norm(&b_op);
        res[5].record(rel((operator_norm(&r_sum) - b_norm).abs(), b_norm), &at);

        let probe = e.random_element(&mut rng);
        res[6].record(norm_lemma_defect(e, &a_op, &probe, false, &mut rng), &at);
        res[7].record(norm_lemma_defect(e, &b_op, &probe, true, &mut rng), &at);
    }
    let mut report = AxiomReport::new();
    for (name, r) in names.iter().zip(res) {
        report.insert(*name, r.outcome(tol.eps_eq.max(1e-8)));
    }
    report
}

/// Relative gap between `‖a‖` and `sup ‖a x‖` over the unit ball of `E`
/// (or `‖x a‖` when `right`), using a maximizer built from the top spectral
/// projection of `a` and a few random unit-ball samples that must not
/// exceed `‖a‖`.
fn norm_lemma_defect(e: &TroSpace, a: &ComplexMatrix, probe: &ComplexMatrix, right: bool, rng: &mut ChaCha8Rng) -> f64 {
    let tol = *e.tolerance();
    let a_norm = operator_norm(a);
    if a_norm == 0.0 {
        return 0.0;
    }
    let act = |x: &ComplexMatrix| if right { x * a } else { a * x };
    // Spectral projection of a*a (or a a*) for its largest eigenvalue.
    let h = if right { a * &a.adjoint() } else { a.adjoint() * a };
    let (vals, vecs) = hermitian_eigen(&h);
    let top = vals.last().copied().unwrap_or(0.0);
    let d = h.rows();
    let mut p = ComplexMatrix::zeros(d, d);
    for (j, &v) in vals.iter().enumerate() {
        if v >= top * (1.0 - tol.eps_rank.sqrt()) {
            let col = vecs.sub_block(0, j, d, 1);
            p = p + &col * &col.adjoint();
        }
    }
    let w = if right { probe * &p } else { &p * probe };
    let (x, _) = polar_decompose_with(&w, &tol);
    let mut defect = if x.frobenius_norm() == 0.0 {
        1.0
    } else {
        let in_e = rel(e.space.residual(&x), x.frobenius_norm());
        (operator_norm(&act(&x)) - a_norm).abs() / a_norm + in_e
    };
    for _ in 0..4 {
        let z = e.random_element(rng);
        let z = z.scale(C64::new(1.0 / operator_norm(&z), 0.0));
        defect = defect.max((operator_norm(&act(&z)) - a_norm).max(0.0) / a_norm);
    }
    defect
}

/// The span of `[[EE*, E], [E*, E*E]]` inside `M_{2d}`.
#[derive(Clone, Debug)]
pub struct LinkingAlgebra {
    space: MatrixSpan,
}

impl LinkingAlgebra {
    pub fn space(&self) -> &MatrixSpan {
        &self.space
    }

    pub fn ambient_dim(&self) -> usize {
        self.space.ambient_dim()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_star_closed(&self) -> bool {
        self.space.contains_span(&self.space.adjoint())
    }

    pub fn is_product_closed(&self) -> bool {
        self.space.contains_span(&self.space.product(&self.space).expect("same ambient"))
    }
}

pub fn linking_algebra(e: &TroSpace) -> Result<LinkingAlgebra> {
    let d = e.ambient_dim();
    let (left, right) = range_algebras(e)?;
    let embed = |m: &ComplexMatrix, r: usize, c: usize| {
        let mut out = ComplexMatrix::zeros(2 * d, 2 * d);
        out.set_sub_block(r * d, c * d, m);
        out
    };
    let mut gens = Vec::new();
    gens.extend(left.basis().iter().map(|m| embed(m, 0, 0)));
    gens.extend(e.space.basis().iter().map(|m| embed(m, 0, 1)));
    gens.extend(e.space.basis().iter().map(|m| embed(&m.adjoint(), 1, 0)));
    gens.extend(right.basis().iter().map(|m| embed(m, 1, 1)));
    let space = MatrixSpan::from_matrices(2 * d, &gens, 0.0, *e.tolerance())?;
    Ok(LinkingAlgebra { space })
}

/// Dimension of `S·H`.
fn range_dim(s: &MatrixSpan) -> usize {
    s.range_space().cols()
}

/// Rank obstruction to regularity, if any: the global dimensions of `E·H`
/// and `E*·H`, then the same comparison for each `P E` with `P` a minimal
/// central projection of `EE*`.
pub fn regularity_obstruction(e: &TroSpace) -> Result<Option<RankCertificate>> {
    let s = &e.space;
    let range = range_dim(s);
    let source = range_dim(&s.adjoint());
    if range != source {
        return Ok(Some(RankCertificate { range_dim: range, source_dim: source, blockwise: Vec::new() }));
    }
    if s.is_zero() {
        return Ok(None);
    }
    let (left, _) = range_algebras(e)?;
    let dec = structure_decompose(left.basis(), e.tolerance())?;
    let blockwise: Vec<(usize, usize)> = dec
        .structure()
        .blocks()
        .map(|k| {
            let piece = s.left_mul(&dec.central_projection(k)).expect("same ambient");
            (range_dim(&piece), range_dim(&piece.adjoint()))
        })
        .collect();
    if blockwise.iter().any(|(a, b)| a != b) {
        return Ok(Some(RankCertificate { range_dim: range, source_dim: source, blockwise }));
    }
    Ok(None)
}

/// Residuals of the conditions making `u` strictly associated to `E`:
/// `u ∈ E`, `u u* = P_{E·H}`, `u* u = P_{E*·H}`, `u E* = EE*`, `u* E = E*E`.
pub fn strict_association_report(u: &ComplexMatrix, e: &TroSpace) -> Result<AxiomReport> {
    let tol = *e.tolerance();
    let s = &e.space;
    let (left, right) = range_algebras(e)?;
    let mut report = AxiomReport::new();
    let mut put = |name: &str, value: f64| {
        let mut r = Residual::new();
        r.record(value, &[]);
        report.insert(name, r.outcome(tol.eps_eq.max(1e-8)));
    };
    let scale = u.frobenius_norm().max(1.0);
    put("in-E", s.residual(u) / scale);
    put("range", (u * &u.adjoint() - s.range_projection()).frobenius_norm());
    put("source", (u.adjoint() * u - s.adjoint().range_projection()).frobenius_norm());
    let ue = s.adjoint().left_mul(u)?;
    put("uE*=EE*", ue.distance(&left));
    let ue = s.left_mul(&u.adjoint())?;
    put("u*E=E*E", ue.distance(&right));
    Ok(report)
}

/// A partial isometry `u ∈ E` strictly associated to `E`, built as the
/// polar part of a seeded random element. Fails with `NonRegular` only on a
/// rank certificate; running out of `retries` otherwise is `Inconclusive`.
pub fn find_strict_partial_isometry(e: &TroSpace, seed: u64, retries: usize) -> Result<ComplexMatrix> {
    let d = e.ambient_dim();
    if e.dim() == 0 {
        return Ok(ComplexMatrix::zeros(d, d));
    }
    if let Some(cert) = regularity_obstruction(e)? {
        return Err(Error::NonRegular(cert));
    }
    let tol = *e.tolerance();
    let mut rng = seeded(seed);
    let attempts = retries.max(1);
    for _ in 0..attempts {
        let x = e.random_element(&mut rng);
        let (u, _) = polar_decompose_with(&x, &tol);
        if strict_association_report(&u, e)?.all_pass() {
            return Ok(u);
        }
    }
    Err(Error::Inconclusive { attempts })
}

/// `J ⊆ E` is an ideal when `JJ*E ⊆ J` and `EJ*J ⊆ J`.
pub fn is_ideal(j: &MatrixSpan, e: &TroSpace) -> Result<bool> {
    if !e.space.contains_span(j) {
        return Err(Error::NotContained);
    }
    let jj = j.product(&j.adjoint())?;
    let left = jj.product(&e.space)?;
    let right = e.space.product(&j.adjoint().product(j)?)?;
    Ok(j.contains_span(&left) && j.contains_span(&right))
}

/// Span distances for `JJ*E = J`, `EJ*J = J`, `JJ*EE* = JJ*` and
/// `J*JE*E = J*J`.
pub fn check_ideal_lemma(j: &MatrixSpan, e: &TroSpace) -> Result<AxiomReport> {
    if !e.space.contains_span(j) {
        return Err(Error::NotContained);
    }
    let tol = *e.tolerance();
    let es = &e.space;
    let jj = j.product(&j.adjoint())?;
    let jsj = j.adjoint().product(j)?;
    let ee = es.product(&es.adjoint())?;
    let ese = es.adjoint().product(es)?;
    let pairs = [
        ("JJ*E=J", jj.product(es)?, j.clone()),
        ("EJ*J=J", es.product(&jsj)?, j.clone()),
        ("JJ*EE*=JJ*", jj.product(&ee)?, jj.clone()),
        ("J*JE*E=J*J", jsj.product(&ese)?, jsj.clone()),
    ];
    let mut report = AxiomReport::new();
    for (name, lhs, rhs) in pairs {
        let mut r = Residual::new();
        r.record(lhs.distance(&rhs), &[]);
        report.insert(name, r.outcome(tol.eps_eq.max(1e-8)));
    }
    Ok(report)
}

/// `EF`, provided `FF*·E*E = E*E·FF*`.
pub fn tro_product(e: &TroSpace, f: &TroSpace) -> Result<TroSpace> {
    let (es, fs) = (&e.space, &f.space);
    let ff = fs.product(&fs.adjoint())?;
    let ee = es.adjoint().product(es)?;
    if !span_equal(&ff.product(&ee)?, &ee.product(&ff)?)? {
        return Err(Error::HypothesisFailed("FF*E*E = E*EFF*".into()));
    }
    TroSpace::new(es.product(fs)?)
}

/// Largest of `‖w a − proj(w a)‖`, `‖a w − proj(a w)‖` over the basis of
/// `alg`, and `‖w w* − 1‖`, `‖w* w − 1‖` with `1` the unit of `alg`.
pub fn unitary_multiplier_defect(w: &ComplexMatrix, alg: &MatrixSpan) -> f64 {
    let unit = alg.range_projection();
    let mut defect = (w * &w.adjoint() - &unit).frobenius_norm().max((w.adjoint() * w - &unit).frobenius_norm());
    for a in alg.basis() {
        defect = defect.max(alg.residual(&(w * a))).max(alg.residual(&(a * w)));
    }
    defect
}

/// `w = u v z*` for `u, v, z` strictly associated to `E`, `F`, `M` with `EF`
/// an ideal of `M`; verified to be a unitary multiplier of `EFF*E*`.
pub fn multiplier_from_triple(
    u: &ComplexMatrix,
    v: &ComplexMatrix,
    z: &ComplexMatrix,
    e: &TroSpace,
    f: &TroSpace,
    m: &TroSpace,
) -> Result<ComplexMatrix> {
    for (name, x, space) in [("u", u, e), ("v", v, f), ("z", z, m)] {
        if !strict_association_report(x, space)?.all_pass() {
            return Err(Error::HypothesisFailed(format!("{name} is not strictly associated")));
        }
    }
    let ef = e.space.product(&f.space)?;
    match is_ideal(&ef, m) {
        Ok(true) => {}
        Ok(false) | Err(Error::NotContained) => return Err(Error::HypothesisFailed("EF is not an ideal of M".into())),
        Err(other) => return Err(other),
    }
    let w = u * v * z.adjoint();
    let alg = ef.product(&ef.adjoint())?;
    let defect = unitary_multiplier_defect(&w, &alg);
    if defect >= e.tolerance().eq_threshold(1.0).max(1e-8) {
        return Err(Error::HypothesisFailed(format!("uvz* is not a unitary multiplier of EFF*E* ({defect:.3e})")));
    }
    Ok(w)
}
