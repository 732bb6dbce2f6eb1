//! Block decomposition of a concrete matrix *-algebra.
//!
//! Given generators in `M_d`, find a unitary `W` with
//! `W* alg W = ⊕_k (M_{n_k} ⊗ 1_{m_k}) ⊕ 0`, reading blocks from the minimal
//! central projections of the algebra.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AlgebraElement, BlockStructure, IdealSupport};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, orthonormal_complement, polar_decompose_with, singular_values, svd, ComplexMatrix, MatrixSpan,
    Svd, Tolerance, C64, I,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecomposeConfig {
    pub seed: u64,
    pub max_closure_iterations: usize,
    pub max_redraws: usize,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig { seed: 0x5eed, max_closure_iterations: 32, max_redraws: 5 }
    }
}

/// Result of [`structure_decompose`]. Frame coordinates: block `k` occupies
/// `n_k · m_k` consecutive columns of `W`, column `o_k + i·m_k + j` being the
/// `j`-th copy of basis vector `i`.
#[derive(Clone, Debug)]
pub struct StructureDecomposition {
    structure: BlockStructure,
    multiplicities: Vec<usize>,
    intertwiner: ComplexMatrix,
    essential_dim: usize,
    algebra: MatrixSpan,
    tol: Tolerance,
}

impl StructureDecomposition {
    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// The `d x d` unitary `W`.
    pub fn intertwiner(&self) -> &ComplexMatrix {
        &self.intertwiner
    }

    /// Dimension of the essential subspace `alg·H`.
    pub fn essential_dim(&self) -> usize {
        self.essential_dim
    }

    /// The algebra generated by the input, as a span.
    pub fn algebra(&self) -> &MatrixSpan {
        &self.algebra
    }

    pub fn hilbert_dim(&self) -> usize {
        self.intertwiner.rows()
    }

    fn frame_offset(&self, k: usize) -> usize {
        (0..k).map(|l| self.structure.size(l) * self.multiplicities[l]).sum()
    }

    /// `W (⊕_k x_k ⊗ 1_{m_k} ⊕ 0) W*`.
    pub fn from_frame(&self, x: &AlgebraElement) -> ComplexMatrix {
        assert_eq!(x.structure(), &self.structure, "from_frame: structure");
        let d = self.hilbert_dim();
        let mut y = ComplexMatrix::zeros(d, d);
        for k in self.structure.blocks() {
            let (n, m, o) = (self.structure.size(k), self.multiplicities[k], self.frame_offset(k));
            let b = x.block(k);
            for i in 0..n {
                for i2 in 0..n {
                    let v = b.get(i, i2);
                    for j in 0..m {
                        y.set(o + i * m + j, o + i2 * m + j, v);
                    }
                }
            }
        }
        let w = &self.intertwiner;
        w * &y * w.adjoint()
    }

    /// Reads `x` in the block frame, averaging over the `m_k` copies. The
    /// second value is the Frobenius norm of the part of `x` outside
    /// the block pattern.
    pub fn to_frame(&self, x: &ComplexMatrix) -> (AlgebraElement, f64) {
        let w = &self.intertwiner;
        let y = w.adjoint() * x * w;
        let mut out = AlgebraElement::zero(&self.structure);
        for k in self.structure.blocks() {
            let (n, m, o) = (self.structure.size(k), self.multiplicities[k], self.frame_offset(k));
            let b = ComplexMatrix::from_fn(n, n, |i, i2| {
                let s: C64 = (0..m).map(|j| y.get(o + i * m + j, o + i2 * m + j)).sum();
                s / m as f64
            });
            out.set_block(k, b);
        }
        let residual = (x - self.from_frame(&out)).frobenius_norm();
        (out, residual)
    }

    /// Minimal central projection of block `k`, as a `d x d` matrix.
    pub fn central_projection(&self, k: usize) -> ComplexMatrix {
        self.from_frame(&IdealSupport::new(&self.structure, [k]).expect("block index in range").unit())
    }

    /// The block support of an ideal of the algebra given as a span, or a
    /// description of why the span is not such an ideal.
    pub fn ideal_of(&self, span: &MatrixSpan) -> std::result::Result<IdealSupport, String> {
        if !self.algebra.contains_span(span) {
            return Err("not contained in the algebra".into());
        }
        let support: Vec<usize> =
            self.structure.blocks().filter(|&k| span.contains(&self.central_projection(k))).collect();
        let ideal = IdealSupport::new(&self.structure, support).expect("blocks in range");
        if ideal.dim() != span.dim() {
            return Err(format!(
                "dimension {} does not match the {} of the blocks it contains",
                span.dim(),
                ideal.dim()
            ));
        }
        Ok(ideal)
    }
}

pub fn structure_decompose(gens: &[ComplexMatrix], tol: &Tolerance) -> Result<StructureDecomposition> {
    structure_decompose_with(gens, tol, &DecomposeConfig::default())
}

pub fn structure_decompose_with(
    gens: &[ComplexMatrix],
    tol: &Tolerance,
    cfg: &DecomposeConfig,
) -> Result<StructureDecomposition> {
    let d = gens
        .first()
        .map(ComplexMatrix::rows)
        .ok_or_else(|| Error::ShapeMismatch("structure_decompose needs at least one generator".into()))?;
    let alg = product_closure(d, gens, tol, cfg.max_closure_iterations)?;
    if alg.is_zero() {
        return Err(Error::NotSemisimple("generators span the zero algebra".into()));
    }
    if !alg.contains_span(&alg.adjoint()) {
        return Err(Error::NotStarClosed);
    }
    let q = alg.range_space();
    let center = center_basis(&alg, tol);
    let mut last = String::new();
    for attempt in 0..=cfg.max_redraws {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(attempt as u64));
        match try_frame(&alg, &q, &center, tol, &mut rng) {
            Ok((structure, multiplicities, w_ess)) => {
                let comp = orthonormal_complement(&w_ess);
                let mut w = ComplexMatrix::zeros(d, d);
                w.set_sub_block(0, 0, &w_ess);
                w.set_sub_block(0, w_ess.cols(), &comp);
                let dec = StructureDecomposition {
                    structure,
                    multiplicities,
                    essential_dim: w_ess.cols(),
                    intertwiner: w,
                    algebra: alg.clone(),
                    tol: *tol,
                };
                match dec.verify() {
                    Ok(()) => return Ok(dec),
                    Err(e) => last = e,
                }
            }
            Err(e) => last = e,
        }
    }
    Err(Error::NotSemisimple(format!("no consistent block frame after {} draws: {last}", cfg.max_redraws + 1)))
}

impl StructureDecomposition {
    fn verify(&self) -> std::result::Result<(), String> {
        if self.structure.algebra_dim() != self.algebra.dim() {
            return Err(format!(
                "block dimensions sum to {} but the algebra has dimension {}",
                self.structure.algebra_dim(),
                self.algebra.dim()
            ));
        }
        for b in self.algebra.basis() {
            let (_, res) = self.to_frame(b);
            if res > self.tol.eq_threshold(1.0) {
                return Err(format!("basis element leaves the block pattern (residual {res:.3e})"));
            }
        }
        Ok(())
    }
}

fn product_closure(d: usize, gens: &[ComplexMatrix], tol: &Tolerance, max_iter: usize) -> Result<MatrixSpan> {
    let mut alg = MatrixSpan::from_matrices(d, gens, 0.0, *tol)?;
    for _ in 0..max_iter {
        let next = alg.sum(&alg.product(&alg)?)?;
        if next.dim() == alg.dim() {
            return Ok(next);
        }
        alg = next;
    }
    Err(Error::NotSemisimple(format!("product closure did not stabilise within {max_iter} iterations")))
}

/// Hermitian spanning set of the center, from the null space of
/// `z ↦ (z b_j − b_j z)_j` restricted to the algebra.
fn center_basis(alg: &MatrixSpan, tol: &Tolerance) -> Vec<ComplexMatrix> {
    let basis = alg.basis();
    let k = basis.len();
    let d = alg.ambient_dim();
    let rows = d * d * k;
    let mut system = DMatrix::<C64>::zeros(rows, k);
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate() {
            let c = bi * bj - bj * bi;
            let v = c.vectorized();
            system.view_mut((j * d * d, i), (d * d, 1)).copy_from_slice(v);
        }
    }
    let Svd { singular_values: s, v, .. } = svd(&ComplexMatrix::from_dmatrix(system));
    let top = s.first().copied().unwrap_or(0.0);
    let cutoff = tol.eps_rank * top.max(1.0);
    let mut out = Vec::new();
    for l in 0..k {
        if s[l] > cutoff {
            continue;
        }
        let mut z = ComplexMatrix::zeros(d, d);
        for (i, b) in basis.iter().enumerate() {
            z = z + b.scale(v.get(i, l));
        }
        out.push(&z + &z.adjoint());
        out.push((&z - &z.adjoint()).scale(I));
    }
    out
}

type Frame = (BlockStructure, Vec<usize>, ComplexMatrix);

fn random_hermitian<R: Rng>(rng: &mut R, herm: &[ComplexMatrix], n: usize) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(n, n);
    for b in herm {
        h = h + b.scale(C64::new(rng.random_range(-1.0..1.0), 0.0));
    }
    h.hermitian_part()
}

/// Groups ascending eigenvalues into clusters of numerically equal values.
fn clusters(vals: &[f64], tol: &Tolerance) -> Vec<Vec<usize>> {
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match out.last_mut() {
            Some(c) if v - vals[*c.last().expect("nonempty cluster")] <= tol.eps_rank * scale => c.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

fn columns(m: &ComplexMatrix, idx: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), idx.len(), |i, j| m.get(i, idx[j]))
}

fn try_frame(
    alg: &MatrixSpan,
    q: &ComplexMatrix,
    center: &[ComplexMatrix],
    tol: &Tolerance,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Frame, String> {
    let d = alg.ambient_dim();
    let center_dim = center.len() / 2;
    let h = random_hermitian(rng, center, d);
    let h_ess = q.adjoint() * &h * q;
    let (vals, vecs) = hermitian_eigen(&h_ess);
    let groups = clusters(&vals, tol);
    if groups.len() != center_dim {
        return Err(format!("central element has {} eigenvalue clusters, center has dimension {center_dim}", groups.len()));
    }
    let mut sizes = Vec::new();
    let mut mults = Vec::new();
    let mut cols: Vec<ComplexMatrix> = Vec::new();
    for g in &groups {
        // Orthonormal basis of the range of this central projection.
        let f = q * &columns(&vecs, g);
        let r = g.len();
        let compressed: Vec<ComplexMatrix> = alg.basis().iter().map(|b| f.adjoint() * b * &f).collect();
        let block = MatrixSpan::from_matrices(r, &compressed, 1.0, *tol).map_err(|e| e.to_string())?;
        let n = (block.dim() as f64).sqrt().round() as usize;
        if n == 0 || n * n != block.dim() || r % n != 0 {
            return Err(format!("central summand of rank {r} has dimension {}", block.dim()));
        }
        let m = r / n;
        let herm: Vec<ComplexMatrix> = block
            .basis()
            .iter()
            .flat_map(|b| [b + &b.adjoint(), (b - &b.adjoint()).scale(I)])
            .collect();
        let hk = random_hermitian(rng, &herm, r);
        let (kvals, kvecs) = hermitian_eigen(&hk);
        let kgroups = clusters(&kvals, tol);
        if kgroups.len() != n || kgroups.iter().any(|c| c.len() != m) {
            return Err(format!("expected {n} eigenvalue clusters of size {m} inside a block"));
        }
        let g_mats: Vec<ComplexMatrix> = kgroups.iter().map(|c| columns(&kvecs, c)).collect();
        let x = block.random_element(rng);
        let x_norm = x.frobenius_norm();
        let mut links = Vec::with_capacity(n);
        links.push(ComplexMatrix::identity(m));
        for gi in &g_mats[1..] {
            let link = gi.adjoint() * &x * &g_mats[0];
            let smin = singular_values(&link).last().copied().unwrap_or(0.0);
            if smin <= tol.eps_rank * x_norm.max(1.0) {
                return Err("degenerate matrix-unit link".into());
            }
            links.push(polar_decompose_with(&link, tol).0);
        }
        // Column i·m + j carries copy j of basis vector i.
        for (gi, li) in g_mats.iter().zip(&links) {
            let fi = &f * gi * li;
            for j in 0..m {
                cols.push(columns(&fi, &[j]));
            }
        }
        sizes.push(n);
        mults.push(m);
    }
    let w_ess = ComplexMatrix::from_fn(d, cols.len(), |i, j| cols[j].get(i, 0));
    let structure = BlockStructure::new(sizes).map_err(|e| e.to_string())?;
    Ok((structure, mults, w_ess))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{gaussian_matrix, haar_unitary};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn diagonal_matrices() {
        let gens = [ComplexMatrix::matrix_unit(2, 0, 0), ComplexMatrix::matrix_unit(2, 1, 1)];
        let dec = structure_decompose(&gens, &tol()).unwrap();
        assert_eq!(dec.structure().sizes(), &[1, 1]);
        assert_eq!(dec.multiplicities(), &[1, 1]);
    }

    #[test]
    fn full_matrix_algebra() {
        let gens = [ComplexMatrix::matrix_unit(2, 0, 1), ComplexMatrix::matrix_unit(2, 1, 0)];
        let dec = structure_decompose(&gens, &tol()).unwrap();
        assert_eq!(dec.structure().sizes(), &[2]);
        assert_eq!(dec.multiplicities(), &[1]);
    }

    #[test]
    fn amplified_block() {
        // {a ⊕ a : a ∈ M_2} inside M_4.
        let one2 = ComplexMatrix::identity(2);
        let gens: Vec<ComplexMatrix> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| one2.kron(&ComplexMatrix::matrix_unit(2, i, j)))
            .collect();
        let dec = structure_decompose(&gens, &tol()).unwrap();
        assert_eq!(dec.structure().sizes(), &[2]);
        assert_eq!(dec.multiplicities(), &[2]);
        // Commutant oracle: dim alg' = Σ m_k², here M_2 ⊗ 1 has commutant 1 ⊗ M_2.
        let commutant = commutant_dim(&gens);
        assert_eq!(commutant, 4);
    }

    fn commutant_dim(gens: &[ComplexMatrix]) -> usize {
        let d = gens[0].rows();
        let mut rows = Vec::new();
        for g in gens {
            // vec(gX − Xg) = (1⊗g − gᵀ⊗1) vec(X) in column-major vectorization.
            let gt = ComplexMatrix::from_fn(d, d, |i, j| g.get(j, i));
            rows.push(ComplexMatrix::identity(d).kron(g) - gt.kron(&ComplexMatrix::identity(d)));
        }
        let mut stack = ComplexMatrix::zeros(rows.len() * d * d, d * d);
        for (k, r) in rows.iter().enumerate() {
            stack.set_sub_block(k * d * d, 0, r);
        }
        let s = singular_values(&stack);
        s.iter().filter(|&&x| x < 1e-9).count() + (d * d).saturating_sub(s.len())
    }

    #[test]
    fn conjugated_block_algebra_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        // (M_2 ⊗ 1_2) ⊕ M_1 ⊕ 0 inside M_6, hidden by a random unitary.
        let u = haar_unitary(&mut rng, 6);
        let mut gens = Vec::new();
        for _ in 0..3 {
            let a = gaussian_matrix(&mut rng, 2, 2);
            let b = gaussian_matrix(&mut rng, 1, 1);
            let x = ComplexMatrix::direct_sum(&[ComplexMatrix::identity(2).kron(&a), b, ComplexMatrix::zeros(1, 1)]);
            gens.push(&u * &x * u.adjoint());
            gens.push(&u * &x.adjoint() * u.adjoint());
        }
        let dec = structure_decompose(&gens, &tol()).unwrap();
        let mut pairs: Vec<(usize, usize)> =
            dec.structure().sizes().iter().copied().zip(dec.multiplicities().iter().copied()).collect();
        pairs.sort();
        assert_eq!(pairs, vec![(1, 1), (2, 2)]);
        assert_eq!(dec.essential_dim(), 5);
        let w = dec.intertwiner();
        assert!((w * &w.adjoint() - ComplexMatrix::identity(6)).frobenius_norm() < 1e-10);
        for g in &gens {
            let (x, res) = dec.to_frame(g);
            assert!(res < 1e-9 * g.frobenius_norm().max(1.0), "residual {res}");
            assert!((dec.from_frame(&x) - g).frobenius_norm() < 1e-9);
        }
        assert_eq!(dec.algebra().dim(), dec.structure().algebra_dim());
    }

    #[test]
    fn central_projections_and_ideals() {
        let gens = [
            ComplexMatrix::direct_sum(&[ComplexMatrix::identity(1), ComplexMatrix::zeros(2, 2)]),
            ComplexMatrix::direct_sum(&[ComplexMatrix::zeros(1, 1), ComplexMatrix::matrix_unit(2, 0, 1)]),
            ComplexMatrix::direct_sum(&[ComplexMatrix::zeros(1, 1), ComplexMatrix::matrix_unit(2, 1, 0)]),
        ];
        let dec = structure_decompose(&gens, &tol()).unwrap();
        let total = (0..dec.structure().num_blocks())
            .map(|k| dec.central_projection(k))
            .fold(ComplexMatrix::zeros(3, 3), |a, b| a + b);
        assert!((total - ComplexMatrix::identity(3)).frobenius_norm() < 1e-10);
        let ideal_span = MatrixSpan::from_matrices(3, &gens[1..], 0.0, tol()).unwrap().product(&dec.algebra().clone()).unwrap();
        let ideal = dec.ideal_of(&ideal_span).unwrap();
        assert_eq!(ideal.len(), 1);
        assert_eq!(dec.structure().size(ideal.blocks().next().unwrap()), 2);
        let not_ideal = MatrixSpan::from_matrices(3, &gens[1..2], 0.0, tol()).unwrap();
        assert!(dec.ideal_of(&not_ideal).is_err());
    }

    #[test]
    fn upper_triangular_is_not_star_closed() {
        let gens = [ComplexMatrix::identity(2), ComplexMatrix::matrix_unit(2, 0, 1)];
        assert!(matches!(structure_decompose(&gens, &tol()), Err(Error::NotStarClosed)));
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut gens = Vec::new();
        for _ in 0..3 {
            let a = gaussian_matrix(&mut rng, 3, 3);
            gens.push(ComplexMatrix::direct_sum(&[a.clone(), a.clone()]));
            gens.push(ComplexMatrix::direct_sum(&[a.adjoint(), a.adjoint()]));
        }
        let a = structure_decompose(&gens, &tol()).unwrap();
        let b = structure_decompose(&gens, &tol()).unwrap();
        assert_eq!(a.intertwiner(), b.intertwiner());
    }
}
