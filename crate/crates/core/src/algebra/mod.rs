//! Finite-dimensional C*-algebras `A = ⊕_k M_{n_k}(ℂ)`.
//!
//! Every closed two-sided ideal of such an algebra is the sub-sum over a set
//! of blocks, so ideals are stored as block supports, ideal units are exact
//! central projections, and *-isomorphisms between ideals are a
//! size-preserving block bijection plus one unitary per block.

mod decompose;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, ComplexMatrix, Tolerance, C64};

pub use decompose::{structure_decompose, structure_decompose_with, DecomposeConfig, StructureDecomposition};

/// Block sizes `[n_1, ..., n_K]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockStructure {
    sizes: Vec<usize>,
}

impl BlockStructure {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::StructureMismatch("block structure needs at least one block".into()));
        }
        if sizes.contains(&0) {
            return Err(Error::StructureMismatch("block sizes must be positive".into()));
        }
        Ok(BlockStructure { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, k: usize) -> usize {
        self.sizes[k]
    }

    /// `d = Σ n_k`.
    pub fn hilbert_dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Offset of block `k` in the block-diagonal embedding into `M_d`.
    pub fn offset(&self, k: usize) -> usize {
        self.sizes[..k].iter().sum()
    }

    /// `dim A = Σ n_k²`.
    pub fn algebra_dim(&self) -> usize {
        self.sizes.iter().map(|n| n * n).sum()
    }

    pub fn blocks(&self) -> std::ops::Range<usize> {
        0..self.sizes.len()
    }
}

/// An element of `⊕_k M_{n_k}`, stored per block.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    structure: BlockStructure,
    blocks: Vec<ComplexMatrix>,
}

impl AlgebraElement {
    pub fn zero(structure: &BlockStructure) -> Self {
        let blocks = structure.sizes.iter().map(|&n| ComplexMatrix::zeros(n, n)).collect();
        AlgebraElement { structure: structure.clone(), blocks }
    }

    pub fn identity(structure: &BlockStructure) -> Self {
        let blocks = structure.sizes.iter().map(|&n| ComplexMatrix::identity(n)).collect();
        AlgebraElement { structure: structure.clone(), blocks }
    }

    /// The matrix unit `E_ij` inside block `k`.
    pub fn matrix_unit(structure: &BlockStructure, k: usize, i: usize, j: usize) -> Self {
        let mut x = Self::zero(structure);
        x.blocks[k] = ComplexMatrix::matrix_unit(structure.size(k), i, j);
        x
    }

    pub fn from_blocks(structure: &BlockStructure, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if blocks.len() != structure.num_blocks() {
            return Err(Error::StructureMismatch(format!(
                "expected {} blocks, got {}",
                structure.num_blocks(),
                blocks.len()
            )));
        }
        for (k, (b, &n)) in blocks.iter().zip(&structure.sizes).enumerate() {
            if b.shape() != (n, n) {
                return Err(Error::StructureMismatch(format!(
                    "block {k} is {}x{}, expected {n}x{n}",
                    b.rows(),
                    b.cols()
                )));
            }
        }
        Ok(AlgebraElement { structure: structure.clone(), blocks })
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &ComplexMatrix {
        &self.blocks[k]
    }

    pub fn set_block(&mut self, k: usize, b: ComplexMatrix) {
        assert_eq!(b.shape(), self.blocks[k].shape(), "set_block: shape");
        self.blocks[k] = b;
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&ComplexMatrix, &ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        if self.structure != other.structure {
            return Err(Error::StructureMismatch(format!(
                "{:?} vs {:?}",
                self.structure.sizes, other.structure.sizes
            )));
        }
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect();
        Ok(AlgebraElement { structure: self.structure.clone(), blocks })
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: C64) -> Self {
        AlgebraElement { structure: self.structure.clone(), blocks: self.blocks.iter().map(|b| b.scale(c)).collect() }
    }

    pub fn adjoint(&self) -> Self {
        AlgebraElement { structure: self.structure.clone(), blocks: self.blocks.iter().map(ComplexMatrix::adjoint).collect() }
    }

    /// C*-norm: the largest block operator norm.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(operator_norm).fold(0.0, f64::max)
    }

    /// Cheap upper bound used for scale factors.
    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_hermitian(&self, tol: &Tolerance) -> bool {
        self.blocks.iter().all(|b| b.is_hermitian(tol.eq_threshold(b.frobenius_norm())))
    }

    /// Every block Hermitian with smallest eigenvalue `>= -eps_eq`.
    pub fn is_positive(&self, tol: &Tolerance) -> bool {
        self.is_hermitian(tol)
            && self.blocks.iter().all(|b| crate::linalg::min_eigenvalue(b) >= -tol.eq_threshold(b.frobenius_norm()))
    }

    /// Largest block norm outside `support`.
    pub fn mass_outside(&self, support: &IdealSupport) -> f64 {
        self.structure
            .blocks()
            .filter(|k| !support.contains(*k))
            .map(|k| operator_norm(&self.blocks[k]))
            .fold(0.0, f64::max)
    }

    /// Zeroes every block outside `support` (multiplication by `1_D` on both sides).
    pub fn compress(&self, support: &IdealSupport) -> Self {
        let mut out = self.clone();
        for k in self.structure.blocks() {
            if !support.contains(k) {
                out.blocks[k] = ComplexMatrix::zeros(self.structure.size(k), self.structure.size(k));
            }
        }
        out
    }

    /// Block-diagonal `d x d` matrix.
    pub fn to_dense(&self) -> ComplexMatrix {
        ComplexMatrix::direct_sum(&self.blocks)
    }

    /// Reads the diagonal blocks of a `d x d` matrix; the second value is the
    /// Frobenius norm of everything off the block diagonal.
    pub fn from_dense(structure: &BlockStructure, m: &ComplexMatrix) -> Result<(Self, f64)> {
        let d = structure.hilbert_dim();
        if m.shape() != (d, d) {
            return Err(Error::ShapeMismatch(format!("expected {d}x{d} matrix")));
        }
        let blocks: Vec<ComplexMatrix> = structure
            .blocks()
            .map(|k| {
                let (o, n) = (structure.offset(k), structure.size(k));
                m.sub_block(o, o, n, n)
            })
            .collect();
        let x = AlgebraElement { structure: structure.clone(), blocks };
        let off = (m - &x.to_dense()).frobenius_norm();
        Ok((x, off))
    }
}

macro_rules! elem_op {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&AlgebraElement> for &AlgebraElement {
            type Output = AlgebraElement;
            /// Panics when the block structures differ; use the checked
            /// variant for untrusted input.
            fn $method(self, rhs: &AlgebraElement) -> AlgebraElement {
                self.$checked(rhs).expect("algebra elements over the same block structure")
            }
        }
        impl $tr<AlgebraElement> for AlgebraElement {
            type Output = AlgebraElement;
            fn $method(self, rhs: AlgebraElement) -> AlgebraElement {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&AlgebraElement> for AlgebraElement {
            type Output = AlgebraElement;
            fn $method(self, rhs: &AlgebraElement) -> AlgebraElement {
                (&self).$method(rhs)
            }
        }
    };
}

elem_op!(Add, add, checked_add);
elem_op!(Sub, sub, checked_sub);
elem_op!(Mul, mul, checked_mul);

/// A closed two-sided ideal: the sub-sum over a set of blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealSupport {
    structure: BlockStructure,
    support: BTreeSet<usize>,
}

impl IdealSupport {
    pub fn new(structure: &BlockStructure, support: impl IntoIterator<Item = usize>) -> Result<Self> {
        let support: BTreeSet<usize> = support.into_iter().collect();
        if let Some(&k) = support.iter().find(|&&k| k >= structure.num_blocks()) {
            return Err(Error::StructureMismatch(format!(
                "ideal support mentions block {k} of a {}-block algebra",
                structure.num_blocks()
            )));
        }
        Ok(IdealSupport { structure: structure.clone(), support })
    }

    pub fn full(structure: &BlockStructure) -> Self {
        IdealSupport { structure: structure.clone(), support: structure.blocks().collect() }
    }

    pub fn empty(structure: &BlockStructure) -> Self {
        IdealSupport { structure: structure.clone(), support: BTreeSet::new() }
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn contains(&self, k: usize) -> bool {
        self.support.contains(&k)
    }

    pub fn blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.support.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.support.len() == self.structure.num_blocks()
    }

    pub fn intersect(&self, other: &IdealSupport) -> Result<IdealSupport> {
        if self.structure != other.structure {
            return Err(Error::StructureMismatch("ideals of different algebras".into()));
        }
        Ok(IdealSupport {
            structure: self.structure.clone(),
            support: self.support.intersection(&other.support).copied().collect(),
        })
    }

    /// The central projection `1_D`.
    pub fn unit(&self) -> AlgebraElement {
        let mut x = AlgebraElement::zero(&self.structure);
        for k in self.blocks() {
            x.blocks[k] = ComplexMatrix::identity(self.structure.size(k));
        }
        x
    }

    /// Matrix units `E_ij` of every supported block; they span the ideal.
    pub fn matrix_units(&self) -> Vec<AlgebraElement> {
        let mut out = Vec::new();
        for k in self.blocks() {
            let n = self.structure.size(k);
            for i in 0..n {
                for j in 0..n {
                    out.push(AlgebraElement::matrix_unit(&self.structure, k, i, j));
                }
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.blocks().map(|k| self.structure.size(k).pow(2)).sum()
    }
}

pub fn unit_of_ideal(d: &IdealSupport) -> AlgebraElement {
    d.unit()
}

pub fn intersect(d1: &IdealSupport, d2: &IdealSupport) -> Result<IdealSupport> {
    d1.intersect(d2)
}

/// True iff `w` vanishes outside `d` and `w w* = w* w = 1_D`.
pub fn is_unitary_in_ideal(w: &AlgebraElement, d: &IdealSupport, tol: &Tolerance) -> bool {
    unitary_defect(w, d) <= tol.eps_eq
}

/// Residual behind [`is_unitary_in_ideal`].
pub fn unitary_defect(w: &AlgebraElement, d: &IdealSupport) -> f64 {
    if w.structure() != d.structure() {
        return f64::INFINITY;
    }
    let unit = d.unit();
    let a = (w * &w.adjoint()).distance(&unit);
    let b = (&w.adjoint() * w).distance(&unit);
    w.mass_outside(d).max(a).max(b)
}

/// `θ(x)_{σ(k)} = U_k x_k U_k*` from `domain` onto `codomain`.
#[derive(Clone, Debug, PartialEq)]
pub struct StarIsomorphism {
    domain: IdealSupport,
    codomain: IdealSupport,
    block_map: BTreeMap<usize, usize>,
    unitaries: BTreeMap<usize, ComplexMatrix>,
}

impl StarIsomorphism {
    pub fn new(
        domain: IdealSupport,
        codomain: IdealSupport,
        block_map: BTreeMap<usize, usize>,
        unitaries: BTreeMap<usize, ComplexMatrix>,
        tol: &Tolerance,
    ) -> Result<Self> {
        if domain.structure() != codomain.structure() {
            return Err(Error::InvalidIsomorphism("domain and codomain live in different algebras".into()));
        }
        let s = domain.structure().clone();
        let keys: BTreeSet<usize> = block_map.keys().copied().collect();
        if keys != domain.support {
            return Err(Error::InvalidIsomorphism(format!(
                "block map keys {keys:?} differ from the domain support {:?}",
                domain.support
            )));
        }
        let image: BTreeSet<usize> = block_map.values().copied().collect();
        if image.len() != block_map.len() || image != codomain.support {
            return Err(Error::InvalidIsomorphism(format!(
                "block map is not a bijection onto the codomain support {:?}",
                codomain.support
            )));
        }
        for (&k, &target) in &block_map {
            if s.size(k) != s.size(target) {
                return Err(Error::InvalidIsomorphism(format!("block {k} (size {}) mapped to block {target} (size {})", s.size(k), s.size(target))));
            }
            let u = unitaries
                .get(&k)
                .ok_or_else(|| Error::InvalidIsomorphism(format!("missing unitary for block {k}")))?;
            let n = s.size(k);
            if u.shape() != (n, n) {
                return Err(Error::InvalidIsomorphism(format!("unitary for block {k} is not {n}x{n}")));
            }
            let defect = (u * &u.adjoint() - ComplexMatrix::identity(n)).frobenius_norm();
            if defect > tol.eq_threshold(n as f64) {
                return Err(Error::InvalidIsomorphism(format!("block {k} matrix is not unitary (defect {defect:.3e})")));
            }
        }
        if unitaries.keys().any(|k| !block_map.contains_key(k)) {
            return Err(Error::InvalidIsomorphism("unitary given for a block outside the domain".into()));
        }
        Ok(StarIsomorphism { domain, codomain, block_map, unitaries })
    }

    /// Identity automorphism of the whole algebra.
    pub fn identity(structure: &BlockStructure) -> Self {
        let full = IdealSupport::full(structure);
        StarIsomorphism {
            block_map: structure.blocks().map(|k| (k, k)).collect(),
            unitaries: structure.blocks().map(|k| (k, ComplexMatrix::identity(structure.size(k)))).collect(),
            domain: full.clone(),
            codomain: full,
        }
    }

    pub fn domain(&self) -> &IdealSupport {
        &self.domain
    }

    pub fn codomain(&self) -> &IdealSupport {
        &self.codomain
    }

    pub fn block_map(&self) -> &BTreeMap<usize, usize> {
        &self.block_map
    }

    pub fn unitaries(&self) -> &BTreeMap<usize, ComplexMatrix> {
        &self.unitaries
    }

    pub fn structure(&self) -> &BlockStructure {
        self.domain.structure()
    }

    /// Image of a set of blocks under the block bijection.
    pub fn map_support(&self, support: &IdealSupport) -> IdealSupport {
        IdealSupport {
            structure: support.structure.clone(),
            support: support.blocks().filter_map(|k| self.block_map.get(&k).copied()).collect(),
        }
    }

    /// Applies the isomorphism after discarding blocks outside the domain;
    /// also returns the largest discarded block norm.
    pub fn apply_lenient(&self, x: &AlgebraElement) -> (AlgebraElement, f64) {
        let s = self.structure();
        let mass = x.mass_outside(&self.domain);
        let mut out = AlgebraElement::zero(s);
        for (&k, &target) in &self.block_map {
            let u = &self.unitaries[&k];
            out.blocks[target] = u * x.block(k) * u.adjoint();
        }
        (out, mass)
    }

    pub fn apply(&self, x: &AlgebraElement, tol: &Tolerance) -> Result<AlgebraElement> {
        if x.structure() != self.structure() {
            return Err(Error::StructureMismatch("element and isomorphism over different algebras".into()));
        }
        let (out, mass) = self.apply_lenient(x);
        if mass > tol.eq_threshold(x.norm()) {
            return Err(Error::DomainViolation { mass });
        }
        Ok(out)
    }

    pub fn inverse(&self) -> StarIsomorphism {
        StarIsomorphism {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            block_map: self.block_map.iter().map(|(&k, &t)| (t, k)).collect(),
            unitaries: self.block_map.iter().map(|(&k, &t)| (t, self.unitaries[&k].adjoint())).collect(),
        }
    }
}

pub fn apply_iso(theta: &StarIsomorphism, x: &AlgebraElement, tol: &Tolerance) -> Result<AlgebraElement> {
    theta.apply(x, tol)
}

pub fn invert_iso(theta: &StarIsomorphism) -> StarIsomorphism {
    theta.inverse()
}
