//! Classification of concrete bundles with regular fibers: recover a twisted
//! partial action of the group on `B_e` whose semidirect product bundle is
//! isometrically isomorphic to the input.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::algebra::{
    structure_decompose_with, AlgebraElement, DecomposeConfig, IdealSupport, StarIsomorphism, StructureDecomposition,
};
use crate::bundle::{check_bundle_axioms_with, BundleCheckConfig, BundleElement, BundleOps, ConcreteBundle, SemidirectBundle};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, operator_norm, polar_decompose_with, ComplexMatrix, MatrixSpan, Tolerance};
use crate::report::{AxiomReport, Residual};
use crate::tpa::{check_aux_identity, check_axioms, TwistedPartialAction};
use crate::tro::{find_strict_partial_isometry, strict_association_report, TroSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifyConfig {
    pub seed: u64,
    /// Random draws per fiber when searching for a strict partial isometry.
    pub tro_retries: usize,
    pub decompose: DecomposeConfig,
    pub bundle_check: BundleCheckConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            seed: 0,
            tro_retries: 8,
            decompose: DecomposeConfig::default(),
            bundle_check: BundleCheckConfig::default(),
        }
    }
}

/// `B_e` in block form together with `D_t = B_t B_t*` as spans and as
/// block supports.
#[derive(Clone, Debug)]
pub struct UnitFiberFrame {
    pub decomposition: StructureDecomposition,
    pub ideals: Vec<MatrixSpan>,
    pub supports: Vec<IdealSupport>,
}

#[derive(Clone, Debug)]
pub struct ClassificationResult {
    pub frame: UnitFiberFrame,
    pub action: TwistedPartialAction,
    /// `u_t`, normalized so that `u_e` is the unit of `B_e`.
    pub isometries: Vec<ComplexMatrix>,
    pub tpa_report: AxiomReport,
    pub bundle_report: AxiomReport,
    pub iso_report: AxiomReport,
}

impl ClassificationResult {
    pub fn passed(&self) -> bool {
        self.tpa_report.all_pass() && self.bundle_report.all_pass() && self.iso_report.all_pass()
    }

    pub fn max_residual(&self) -> f64 {
        self.tpa_report.max_residual().max(self.bundle_report.max_residual()).max(self.iso_report.max_residual())
    }

    /// `ρ(a δ_t) = a u_t` on the Hilbert space of the input bundle.
    pub fn rho(&self, x: &BundleElement) -> ComplexMatrix {
        self.frame.decomposition.from_frame(&x.value) * &self.isometries[x.tag]
    }
}

/// `D_t = B_t B_t*`, each checked to be a *-closed two-sided ideal of `B_e`.
pub fn extract_ideals(bundle: &ConcreteBundle) -> Result<Vec<MatrixSpan>> {
    let g = bundle.group_ref();
    let unit = bundle.fiber(g.identity());
    g.elements()
        .map(|t| {
            let b = bundle.fiber(t);
            let d = b.product(&b.adjoint())?;
            let fail = |reason: &str| Error::NotAnIdeal { t, reason: reason.into() };
            if !unit.contains_span(&d) {
                return Err(fail("not contained in B_e"));
            }
            if !d.contains_span(&d.adjoint()) {
                return Err(fail("not closed under the adjoint"));
            }
            if !d.contains_span(&unit.product(&d)?) || !d.contains_span(&d.product(unit)?) {
                return Err(fail("not invariant under multiplication by B_e"));
            }
            Ok(d)
        })
        .collect()
}

/// Block decomposition of `B_e` and the supports of the `D_t` in it.
pub fn unit_fiber_frame(bundle: &ConcreteBundle, ideals: Vec<MatrixSpan>, cfg: &DecomposeConfig) -> Result<UnitFiberFrame> {
    let g = bundle.group_ref();
    let unit = bundle.fiber(g.identity());
    let decomposition = structure_decompose_with(unit.basis(), bundle.tolerance(), cfg)?;
    let supports = ideals
        .iter()
        .enumerate()
        .map(|(t, d)| decomposition.ideal_of(d).map_err(|reason| Error::NotAnIdeal { t, reason }))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnitFiberFrame { decomposition, ideals, supports })
}

/// `u_t` strictly associated to `B_t`, then replaced by `u_e* u_t`.
pub fn extract_isometries(bundle: &ConcreteBundle, seed: u64, retries: usize) -> Result<Vec<ComplexMatrix>> {
    let g = bundle.group_ref();
    let raw = g
        .elements()
        .map(|t| {
            let fiber = TroSpace::new(bundle.fiber(t).clone())?;
            find_strict_partial_isometry(&fiber, seed.wrapping_add(t as u64), retries).map_err(|e| match e {
                Error::NonRegular(certificate) => Error::NonRegularFiber { t, certificate },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ue = raw[g.identity()].adjoint();
    Ok(raw.iter().map(|u| &ue * u).collect())
}

/// Largest distance of the normalized `u_t` from being strictly associated
/// to `B_t`, and of `u_e` from the unit of `B_e`.
fn association_residual(bundle: &ConcreteBundle, frame: &UnitFiberFrame, u: &[ComplexMatrix]) -> Result<Residual> {
    let g = bundle.group_ref();
    let mut r = Residual::new();
    for t in g.elements() {
        let fiber = TroSpace::new(bundle.fiber(t).clone())?;
        let rep = strict_association_report(&u[t], &fiber)?;
        r.record(rep.max_residual(), &[("t", t)]);
        if !rep.all_pass() {
            r.break_with(format!("u_{t} fails {}", rep.failing().join(", ")), &[("t", t)]);
        }
    }
    let unit = frame.decomposition.from_frame(&AlgebraElement::identity(frame.decomposition.structure()));
    r.record((&u[g.identity()] - &unit).frobenius_norm(), &[("t", g.identity())]);
    Ok(r)
}

/// The per-block unitaries of `x ↦ u x u*` from `domain` onto `codomain`,
/// read in the block frame.
fn read_isomorphism(
    dec: &StructureDecomposition,
    u: &ComplexMatrix,
    domain: &IdealSupport,
    codomain: &IdealSupport,
    tol: &Tolerance,
) -> std::result::Result<StarIsomorphism, String> {
    let s = dec.structure();
    let conj = |x: &AlgebraElement| dec.to_frame(&(u * &dec.from_frame(x) * u.adjoint()));
    let mut block_map = BTreeMap::new();
    let mut unitaries = BTreeMap::new();
    for k in domain.blocks() {
        let p = IdealSupport::new(s, [k]).expect("block in range").unit();
        let (img, residual) = conj(&p);
        if residual > tol.eq_threshold(1.0).max(1e-8) {
            return Err(format!("image of block {k} leaves the block frame ({residual:.3e})"));
        }
        let target = codomain
            .blocks()
            .map(|l| (l, img.distance(&IdealSupport::new(s, [l]).expect("block in range").unit())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .filter(|(_, dist)| *dist < 1e-6)
            .map(|(l, _)| l)
            .ok_or_else(|| format!("block {k} is not mapped onto a single block of the codomain"))?;
        let n = s.size(k);
        if s.size(target) != n {
            return Err(format!("block {k} of size {n} mapped to block {target} of size {}", s.size(target)));
        }
        // Y_ij = U e_ij U*: recover U e_1 from Y_11 and U e_i = Y_i1 U e_1.
        let image_of = |i: usize| conj(&AlgebraElement::matrix_unit(s, k, i, 0)).0.block(target).clone();
        let (_, vecs) = hermitian_eigen(&image_of(0));
        let v = vecs.sub_block(0, n - 1, n, 1);
        let mut cols = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            cols.set_sub_block(0, i, &(image_of(i) * &v));
        }
        let (unitary, _) = polar_decompose_with(&cols, tol);
        block_map.insert(k, target);
        unitaries.insert(k, unitary);
    }
    StarIsomorphism::new(domain.clone(), codomain.clone(), block_map, unitaries, tol).map_err(|e| e.to_string())
}

/// `θ_t(x) = u_t x u_t*` on `D_{t⁻¹}` and `w(r,s) = u_r u_s u_rs*`, read
/// in the block frame of `B_e`; fails unless the result passes the twisted
/// partial action axioms.
pub fn extract_action(bundle: &ConcreteBundle, frame: &UnitFiberFrame, u: &[ComplexMatrix]) -> Result<TwistedPartialAction> {
    let g = bundle.group_ref();
    let tol = bundle.tolerance();
    let dec = &frame.decomposition;
    let n = g.order();
    let isos = g
        .elements()
        .map(|t| {
            read_isomorphism(dec, &u[t], &frame.supports[g.inv(t)], &frame.supports[t], tol)
                .map_err(|msg| Error::AxiomExtractionFailed(format!("θ_{t}: {msg}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let cocycle = (0..n * n)
        .map(|p| {
            let (r, s) = (p / n, p % n);
            let (w, residual) = dec.to_frame(&(&u[r] * &u[s] * u[g.mul(r, s)].adjoint()));
            if residual > tol.eq_threshold(1.0).max(1e-8) {
                return Err(Error::AxiomExtractionFailed(format!("w({r},{s}) leaves the block frame ({residual:.3e})")));
            }
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    let tpa = TwistedPartialAction::new(g.clone(), dec.structure().clone(), frame.supports.clone(), isos, cocycle)?;
    let report = check_axioms(&tpa, tol);
    if !report.all_pass() {
        return Err(Error::AxiomExtractionFailed(report.to_text().trim_end().to_string()));
    }
    Ok(tpa)
}

/// `B_r B_s B_s* B_r* = D_r ∩ D_rs` for every pair, as span distances.
fn intersection_lemma(bundle: &ConcreteBundle, frame: &UnitFiberFrame) -> Result<Residual> {
    let g = bundle.group_ref();
    let n = g.order();
    let d = bundle.hilbert_dim();
    let tol = *bundle.tolerance();
    let parts = (0..n * n)
        .into_par_iter()
        .map(|p| -> Result<Residual> {
            let (r, s) = (p / n, p % n);
            let prod = bundle.fiber(r).product(bundle.fiber(s))?;
            let lhs = prod.product(&prod.adjoint())?;
            let meet = frame.supports[r].intersect(&frame.supports[g.mul(r, s)])?;
            let units: Vec<ComplexMatrix> =
                meet.matrix_units().iter().map(|x| frame.decomposition.from_frame(x)).collect();
            let rhs = MatrixSpan::from_matrices(d, &units, 1.0, tol)?;
            let mut res = Residual::new();
            res.record(lhs.distance(&rhs), &[("r", r), ("s", s)]);
            if lhs.dim() != rhs.dim() {
                res.break_with(format!("dimensions {} and {} at ({r},{s})", lhs.dim(), rhs.dim()), &[("r", r), ("s", s)]);
            }
            Ok(res)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().collect())
}

/// Checks that `ρ(a δ_t) = a u_t` is isometric, multiplicative,
/// *-preserving and onto every fiber.
fn rho_checks(
    bundle: &ConcreteBundle,
    frame: &UnitFiberFrame,
    semidirect: &SemidirectBundle,
    u: &[ComplexMatrix],
) -> (Residual, Residual, Residual, Residual) {
    let g = bundle.group_ref();
    let n = g.order();
    let d = bundle.hilbert_dim();
    let tol = *bundle.tolerance();
    let dec = &frame.decomposition;
    let rho = |x: &BundleElement| dec.from_frame(&x.value) * &u[x.tag];
    let bases: Vec<Vec<BundleElement>> = (0..n)
        .map(|t| frame.supports[t].matrix_units().into_iter().map(|a| BundleElement::new(t, a)).collect())
        .collect();

    let mut isometric = Residual::new();
    let mut involutive = Residual::new();
    let mut surjective = Residual::new();
    for t in 0..n {
        for (i, x) in bases[t].iter().enumerate() {
            let at = [("t", t), ("basis", i)];
            isometric.record((operator_norm(&rho(x)) - x.value.norm()).abs(), &at);
            let xs = semidirect.involute(x);
            involutive.record((rho(&xs) - rho(x).adjoint()).frobenius_norm(), &at);
        }
        // ρ⁻¹(b) = b u_t* read in the frame; it must reproduce b and keep its norm.
        for (i, b) in bundle.fiber(t).basis().iter().enumerate() {
            let at = [("t", t), ("fiber-basis", i)];
            let (a, residual) = dec.to_frame(&(b * u[t].adjoint()));
            let back = dec.from_frame(&a) * &u[t];
            isometric.record((a.norm() - operator_norm(b)).abs().max(residual).max((&back - b).frobenius_norm()), &at);
        }
        let images: Vec<ComplexMatrix> = bases[t].iter().map(rho).collect();
        let span = MatrixSpan::from_matrices(d, &images, 1.0, tol).expect("square images");
        surjective.record(span.distance(bundle.fiber(t)), &[("t", t)]);
        if span.dim() != bundle.fiber(t).dim() {
            surjective.break_with(
                format!("fiber {t}: image has dimension {} but B_t has {}", span.dim(), bundle.fiber(t).dim()),
                &[("t", t)],
            );
        }
    }
    let multiplicative: Residual = (0..n * n)
        .into_par_iter()
        .map(|p| {
            let (r, s) = (p / n, p % n);
            let mut res = Residual::new();
            for (i, x) in bases[r].iter().enumerate() {
                for (j, y) in bases[s].iter().enumerate() {
                    let xy = semidirect.multiply(x, y);
                    res.record((rho(&xy) - rho(x) * rho(y)).frobenius_norm(), &[("r", r), ("s", s), ("a", i), ("b", j)]);
                }
            }
            res
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    (isometric, multiplicative, involutive, surjective)
}

pub fn classify_bundle(bundle: &ConcreteBundle, cfg: &ClassifyConfig) -> Result<ClassificationResult> {
    bundle.validate().map_err(|e| e.at_stage("validate"))?;
    let u = extract_isometries(bundle, cfg.seed, cfg.tro_retries).map_err(|e| e.at_stage("extract_isometries"))?;
    classify_with_isometries(bundle, u, cfg)
}

/// The classification pipeline from a given family `u_t` (already
/// normalized); used directly to test gauge changes `u_t ↦ m_t u_t`.
pub fn classify_with_isometries(
    bundle: &ConcreteBundle,
    u: Vec<ComplexMatrix>,
    cfg: &ClassifyConfig,
) -> Result<ClassificationResult> {
    let tol = *bundle.tolerance();
    let ideals = extract_ideals(bundle).map_err(|e| e.at_stage("extract_ideals"))?;
    let frame = unit_fiber_frame(bundle, ideals, &cfg.decompose).map_err(|e| e.at_stage("unit_fiber_frame"))?;
    if u.len() != bundle.group_ref().order() {
        return Err(Error::StructureMismatch(format!("{} isometries for {} fibers", u.len(), bundle.group_ref().order())));
    }
    let action = extract_action(bundle, &frame, &u).map_err(|e| e.at_stage("extract_action"))?;

    let mut tpa_report = check_axioms(&action, &tol);
    tpa_report.extend_prefixed("lemma", check_aux_identity(&action, &tol));
    let semidirect = SemidirectBundle::new(action.clone());
    let bundle_report = check_bundle_axioms_with(&semidirect, &tol, &cfg.bundle_check);

    let threshold = tol.eq_threshold(1.0);
    let mut iso_report = AxiomReport::new();
    iso_report.insert("ideal-intersection", intersection_lemma(bundle, &frame)?.outcome(threshold));
    iso_report.insert("strict-association", association_residual(bundle, &frame, &u)?.outcome(threshold.max(1e-8)));
    let (isometric, multiplicative, involutive, surjective) = rho_checks(bundle, &frame, &semidirect, &u);
    iso_report.insert("rho-isometric", isometric.outcome(threshold));
    iso_report.insert("rho-multiplicative", multiplicative.outcome(threshold));
    iso_report.insert("rho-involutive", involutive.outcome(threshold));
    iso_report.insert("rho-surjective", surjective.outcome(threshold));

    Ok(ClassificationResult { frame, action, isometries: u, tpa_report, bundle_report, iso_report })
}
