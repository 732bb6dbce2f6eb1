//! Small hand-built instances used by tests, the CLI and the acceptance
//! suite.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraElement, BlockStructure, IdealSupport, StarIsomorphism};
use crate::bundle::ConcreteBundle;
use crate::group::FiniteGroup;
use crate::linalg::random::gaussian_matrix;
use crate::linalg::{ComplexMatrix, Tolerance, C64, I, ONE, ZERO};
use crate::tpa::{generate_with_restriction, GlobalWitness, TwistedPartialAction};

/// `[1, X, Y, Z]`, indexed to match the Klein four-group elements
/// `0, 1 = (0,1), 2 = (1,0), 3 = (1,1)`.
pub fn pauli_matrices() -> [ComplexMatrix; 4] {
    let m = |a: C64, b: C64, c: C64, d: C64| ComplexMatrix::from_rows(&[vec![a, b], vec![c, d]]).expect("2x2");
    [
        ComplexMatrix::identity(2),
        m(ZERO, ONE, ONE, ZERO),
        m(ZERO, -I, I, ZERO),
        m(ONE, ZERO, ZERO, -ONE),
    ]
}

/// `c(r,s)` with `σ_r σ_s = c(r,s) σ_{rs}`, read off by a trace.
pub fn pauli_cocycle(r: usize, s: usize) -> C64 {
    let p = pauli_matrices();
    let rs = r ^ s;
    (p[rs].adjoint() * &p[r] * &p[s]).trace() / 2.0
}

/// Klein four-group on `M_2` by `θ_t = Ad(σ_t)`, `w(r,s) = c(r,s)·1`.
pub fn pauli_action() -> TwistedPartialAction {
    let g = FiniteGroup::klein4();
    let s = BlockStructure::new(vec![2]).expect("valid sizes");
    let tol = Tolerance::default();
    let full = IdealSupport::full(&s);
    let p = pauli_matrices();
    let isos = (0..4)
        .map(|t| {
            StarIsomorphism::new(full.clone(), full.clone(), [(0, 0)].into(), [(0, p[t].clone())].into(), &tol)
                .expect("Pauli matrices are unitary")
        })
        .collect();
    let one = AlgebraElement::identity(&s);
    let cocycle = (0..16).map(|i| one.scale(pauli_cocycle(i / 4, i % 4))).collect();
    TwistedPartialAction::new(g, s.clone(), vec![full; 4], isos, cocycle).expect("consistent shapes")
}

/// [`pauli_action`] with `w(1,2)` negated.
pub fn pauli_action_broken() -> TwistedPartialAction {
    let mut tpa = pauli_action();
    let w = tpa.w(1, 2).scale(-ONE);
    tpa.set_cocycle(1, 2, w).expect("same structure");
    tpa
}

/// [`pauli_action`] with the witness `V_t = σ_t`.
pub fn pauli_with_witness() -> (TwistedPartialAction, GlobalWitness) {
    let tpa = pauli_action();
    let s = tpa.structure().clone();
    let witness = GlobalWitness::new(s.clone(), pauli_matrices().to_vec(), IdealSupport::full(&s), &Tolerance::default())
        .expect("Pauli matrices are unitary");
    (tpa, witness)
}

/// Cyclic group of order 3 permuting three 1x1 blocks, restricted to the
/// blocks `{0, 1}`: `D_1` and `D_2` are distinct single blocks.
pub fn cyclic3_partial_with_witness() -> (TwistedPartialAction, GlobalWitness) {
    generate_with_restriction(&FiniteGroup::cyclic(3), &[1, 1, 1], &[0, 1], 3, &Tolerance::default())
        .expect("generator output passes the axioms")
}

pub fn cyclic3_partial_action() -> TwistedPartialAction {
    cyclic3_partial_with_witness().0
}

/// `{[[0, X], [0, 0]] : X ∈ M_{2x3}}` inside `M_5`.
pub fn corner_tro() -> Vec<ComplexMatrix> {
    let mut out = Vec::new();
    for i in 0..2 {
        for j in 0..3 {
            out.push(ComplexMatrix::matrix_unit(5, i, 2 + j));
        }
    }
    out
}

/// Klein four-group bundle with one-dimensional fibers `B_t = ℂ σ_t`.
pub fn scalar_pauli_bundle() -> ConcreteBundle {
    let fibers = pauli_matrices().into_iter().map(|m| vec![m]).collect();
    ConcreteBundle::new(FiniteGroup::klein4(), 2, fibers, &Tolerance::default()).expect("valid fibers")
}

/// Cyclic group of order 3 over `B_e = M_2 ⊕ M_3` with `B_1` the 2x3
/// corner and `B_2` its adjoint: a bundle whose fiber over 1 is not regular.
pub fn rectangular_fiber_bundle() -> ConcreteBundle {
    let mut unit = Vec::new();
    for (o, n) in [(0, 2), (2, 3)] {
        for i in 0..n {
            for j in 0..n {
                unit.push(ComplexMatrix::matrix_unit(5, o + i, o + j));
            }
        }
    }
    let corner = corner_tro();
    let adjoint = corner.iter().map(ComplexMatrix::adjoint).collect();
    ConcreteBundle::new(FiniteGroup::cyclic(3), 5, vec![unit, corner, adjoint], &Tolerance::default())
        .expect("valid fibers")
}

/// Copy of `bundle` with basis element `index` of fiber `t` moved by a
/// seeded random matrix of Frobenius norm `size`.
pub fn perturb_fiber(bundle: &ConcreteBundle, t: usize, index: usize, size: f64, seed: u64) -> ConcreteBundle {
    let d = bundle.hilbert_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = gaussian_matrix(&mut rng, d, d);
    let noise = noise.scale(C64::new(size / noise.frobenius_norm(), 0.0));
    let fibers = (0..bundle.fibers().len())
        .map(|s| {
            let mut basis = bundle.fiber(s).basis().to_vec();
            if s == t {
                basis[index] = &basis[index] + &noise;
            }
            basis
        })
        .collect();
    ConcreteBundle::new(bundle.group_ref().clone(), d, fibers, bundle.tolerance()).expect("same shapes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_cocycle_values() {
        // c values lie in {±1, ±i}; X·Z = -iY and X·Y = iZ.
        for r in 0..4 {
            for s in 0..4 {
                let c = pauli_cocycle(r, s);
                assert!((c.norm() - 1.0).abs() < 1e-15);
                assert!(c.re.abs() < 1e-15 || c.im.abs() < 1e-15);
            }
        }
        assert_eq!(pauli_cocycle(1, 3), -I);
        assert_eq!(pauli_cocycle(1, 2), I);
        assert_eq!(pauli_cocycle(1, 1), ONE);
    }
}
