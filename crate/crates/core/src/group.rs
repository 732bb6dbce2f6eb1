//! Finite groups given by validated Cayley tables. Element `0` is always the
//! identity.

use crate::error::{Error, GroupViolation, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    inv: Vec<usize>,
    preset: Option<String>,
}

impl FiniteGroup {
    /// Validates a Cayley table (`table[r][s] = r·s`) and computes inverses.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::ShapeMismatch("group table is empty".into()));
        }
        for (r, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!("table row {r} has length {}, expected {n}", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&x| x >= n) {
                return Err(Error::ShapeMismatch(format!("table entry {bad} out of range 0..{n}")));
            }
        }
        if (0..n).any(|s| table[0][s] != s || table[s][0] != s) {
            return Err(Error::NotAGroup(GroupViolation::Identity));
        }
        let mut seen = vec![false; n];
        for r in 0..n {
            seen.iter_mut().for_each(|x| *x = false);
            for s in 0..n {
                if std::mem::replace(&mut seen[table[r][s]], true) {
                    return Err(Error::NotAGroup(GroupViolation::LatinSquare));
                }
            }
            seen.iter_mut().for_each(|x| *x = false);
            for s in 0..n {
                if std::mem::replace(&mut seen[table[s][r]], true) {
                    return Err(Error::NotAGroup(GroupViolation::LatinSquare));
                }
            }
        }
        for r in 0..n {
            for s in 0..n {
                let rs = table[r][s];
                for t in 0..n {
                    if table[rs][t] != table[r][table[s][t]] {
                        return Err(Error::NotAGroup(GroupViolation::Associativity));
                    }
                }
            }
        }
        let mut inv = Vec::with_capacity(n);
        for t in 0..n {
            match (0..n).find(|&s| table[t][s] == 0 && table[s][t] == 0) {
                Some(s) => inv.push(s),
                None => return Err(Error::NotAGroup(GroupViolation::Inverses)),
            }
        }
        Ok(FiniteGroup { table, inv, preset: None })
    }

    /// Cyclic group of order `n`; element `k` is the residue `k mod n`.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1, "cyclic group needs n >= 1");
        let table = (0..n).map(|r| (0..n).map(|s| (r + s) % n).collect()).collect();
        let inv = (0..n).map(|t| (n - t) % n).collect();
        FiniteGroup { table, inv, preset: Some(format!("cyclic:{n}")) }
    }

    /// `g × h` with the pair `(i, j)` stored at index `i·|h| + j`.
    pub fn direct_product(g: &FiniteGroup, h: &FiniteGroup) -> Self {
        let (ng, nh) = (g.order(), h.order());
        let n = ng * nh;
        let table = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| g.mul(a / nh, b / nh) * nh + h.mul(a % nh, b % nh))
                    .collect()
            })
            .collect();
        let inv = (0..n).map(|a| g.inv(a / nh) * nh + h.inv(a % nh)).collect();
        FiniteGroup { table, inv, preset: None }
    }

    pub fn klein4() -> Self {
        let mut k = Self::direct_product(&Self::cyclic(2), &Self::cyclic(2));
        k.preset = Some("klein4".into());
        k
    }

    /// Permutations of `{0,1,2}` in lexicographic order of their images;
    /// `(r·s)(x) = r(s(x))`.
    pub fn symmetric3() -> Self {
        let perms: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).expect("permutation of 3 points");
        let table = perms
            .iter()
            .map(|r| perms.iter().map(|s| index([r[s[0]], r[s[1]], r[s[2]]])).collect())
            .collect();
        let mut g = Self::from_table(table).expect("S3 table is a group");
        g.preset = Some("s3".into());
        g
    }

    /// Parses `cyclic:N`, `klein4`, `s3` or `trivial`.
    pub fn from_preset(name: &str) -> Result<Self> {
        match name {
            "klein4" => Ok(Self::klein4()),
            "s3" => Ok(Self::symmetric3()),
            "trivial" => Ok(Self::cyclic(1)),
            _ => {
                let n = name
                    .strip_prefix("cyclic:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| Error::Document(format!("unknown group preset {name:?}")))?;
                Ok(Self::cyclic(n))
            }
        }
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        0
    }

    pub fn mul(&self, r: usize, s: usize) -> usize {
        self.table[r][s]
    }

    pub fn inv(&self, t: usize) -> usize {
        self.inv[t]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn preset(&self) -> Option<&str> {
        self.preset.as_deref()
    }

    pub fn elements(&self) -> std::ops::Range<usize> {
        0..self.order()
    }

    pub fn is_abelian(&self) -> bool {
        self.elements().all(|r| self.elements().all(|s| self.mul(r, s) == self.mul(s, r)))
    }

    /// Greedy generating set: repeatedly add the smallest element not yet in
    /// the generated subgroup.
    pub fn generators(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut reached = vec![false; self.order()];
        reached[0] = true;
        while let Some(g) = reached.iter().position(|&x| !x) {
            gens.push(g);
            reached = self.closure(&gens);
        }
        gens
    }

    fn closure(&self, gens: &[usize]) -> Vec<bool> {
        let mut reached = vec![false; self.order()];
        reached[0] = true;
        let mut frontier = vec![0];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if !reached[y] {
                    reached[y] = true;
                    frontier.push(y);
                }
            }
        }
        reached
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z2_table() {
        let g = FiniteGroup::from_table(vec![vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(g.order(), 2);
        assert_eq!(g.inv(0), 0);
        assert_eq!(g.inv(1), 1);
    }

    #[test]
    fn identity_violation() {
        let err = FiniteGroup::from_table(vec![vec![0, 0], vec![1, 0]]).unwrap_err();
        assert!(matches!(err, Error::NotAGroup(GroupViolation::Identity)));
    }

    #[test]
    fn latin_square_violation() {
        let t = vec![vec![0, 1, 2], vec![1, 1, 0], vec![2, 0, 1]];
        assert!(matches!(
            FiniteGroup::from_table(t).unwrap_err(),
            Error::NotAGroup(GroupViolation::LatinSquare)
        ));
    }

    #[test]
    fn associativity_violation() {
        // Latin square with identity 0 that is not associative (order 5 loop).
        let t = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        assert!(matches!(
            FiniteGroup::from_table(t).unwrap_err(),
            Error::NotAGroup(GroupViolation::Associativity)
        ));
    }

    #[test]
    fn malformed_tables_are_shape_errors() {
        assert!(matches!(FiniteGroup::from_table(vec![]).unwrap_err(), Error::ShapeMismatch(_)));
        assert!(matches!(
            FiniteGroup::from_table(vec![vec![0, 1], vec![1]]).unwrap_err(),
            Error::ShapeMismatch(_)
        ));
        assert!(matches!(
            FiniteGroup::from_table(vec![vec![0, 2], vec![1, 0]]).unwrap_err(),
            Error::ShapeMismatch(_)
        ));
    }

    #[test]
    fn s3_is_valid_and_nonabelian() {
        let g = FiniteGroup::symmetric3();
        // Brute-force revalidation of the constructed table.
        let again = FiniteGroup::from_table(g.table().to_vec()).unwrap();
        assert_eq!(again.order(), 6);
        let noncommuting = g.elements().any(|r| g.elements().any(|s| g.mul(r, s) != g.mul(s, r)));
        assert!(noncommuting);
        assert!(!g.is_abelian());
    }

    #[test]
    fn klein_four_is_self_inverse() {
        let k = FiniteGroup::klein4();
        assert_eq!(k.order(), 4);
        assert!(k.elements().all(|t| k.inv(t) == t));
        assert_eq!(FiniteGroup::from_table(k.table().to_vec()).unwrap().order(), 4);
    }

    #[test]
    fn trivial_group() {
        let g = FiniteGroup::cyclic(1);
        assert_eq!(g.order(), 1);
        assert_eq!(g.mul(0, 0), 0);
        assert!(g.generators().is_empty());
    }

    #[test]
    fn inverse_laws_and_abelian_cyclics() {
        let groups = [FiniteGroup::symmetric3(), FiniteGroup::klein4(), FiniteGroup::cyclic(7)];
        for g in &groups {
            for t in g.elements() {
                assert_eq!(g.inv(g.inv(t)), t);
            }
            for r in g.elements() {
                for s in g.elements() {
                    assert_eq!(g.inv(g.mul(r, s)), g.mul(g.inv(s), g.inv(r)));
                }
            }
        }
        for n in 1..=12 {
            let c = FiniteGroup::cyclic(n);
            assert!(c.is_abelian());
            assert_eq!(FiniteGroup::from_table(c.table().to_vec()).unwrap().inv, c.inv);
        }
    }

    #[test]
    fn presets() {
        assert_eq!(FiniteGroup::from_preset("cyclic:4").unwrap().order(), 4);
        assert_eq!(FiniteGroup::from_preset("klein4").unwrap().order(), 4);
        assert_eq!(FiniteGroup::from_preset("s3").unwrap().order(), 6);
        assert!(FiniteGroup::from_preset("cyclic:0").is_err());
        assert!(FiniteGroup::from_preset("dihedral").is_err());
    }

    #[test]
    fn generators_generate() {
        for g in [FiniteGroup::symmetric3(), FiniteGroup::klein4(), FiniteGroup::cyclic(6)] {
            let gens = g.generators();
            assert!(g.closure(&gens).iter().all(|&x| x));
        }
    }
}
