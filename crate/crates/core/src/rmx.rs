//! R-matrix constructors and their defining-relation checks: Hecke and
//! Yang-Baxter residuals, spectral projectors, the 2D deformed antisymmetric
//! symbols, and the rank-4 q-epsilon obtained by a linear solve.
//!
//! Convention, fixed once for the whole crate: hat-form R-matrices with the
//! upper-triangular band, i.e. entry (a,b -> a,b) carries `q - q^-1` for
//! a < b. The 2D antisymmetric pair is pinned to integer q-powers:
//! eps^{12} = 1, eps^{21} = -q, eps_{12} = -q^-1, eps_{21} = 1.

use crate::linalg::nullspace;
use crate::scalar::{QParam, Scalar};
use crate::tensor::{contract, down, mat_mul, outer, permute_axes, up, IndexIter, IndexSpace, Tensor};

/// A hat-form R-matrix on one index space, stored with axes
/// (up, up, down, down): entry `[a][b][c][d]` is R^{ab}_{cd}, mapping the
/// input pair (c,d) to the output pair (a,b).
#[derive(Clone, Debug, PartialEq)]
pub struct RMatrix {
    pub space: IndexSpace,
    pub tensor: Tensor<Scalar>,
}

impl RMatrix {
    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn entry(&self, a: usize, b: usize, c: usize, d: usize) -> &Scalar {
        self.tensor.get(&[a, b, c, d])
    }

    /// R^-1 = R - (q - q^-1) Id, a consequence of the Hecke relation.
    pub fn inverse(&self, qp: &QParam) -> RMatrix {
        let gap = qp.gap();
        let id = Tensor::delta2(&self.space);
        RMatrix {
            space: self.space.clone(),
            tensor: &self.tensor - &id.scale(&gap),
        }
    }

}

/// The standard hat-form GL_q(n) R-matrix.
pub fn build_glq_rmatrix(space: &IndexSpace, qp: &QParam) -> RMatrix {
    let n = space.dim;
    let q = qp.q_pow(1);
    let gap = qp.gap();
    let mut t = Tensor::zeros(vec![up(space), up(space), down(space), down(space)]);
    for a in 0..n {
        t.set(&[a, a, a, a], q.clone());
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                // input (a,b) -> output (b,a)
                t.set(&[b, a, a, b], Scalar::one());
            }
            if a < b {
                t.set(&[a, b, a, b], gap.clone());
            }
        }
    }
    RMatrix { space: space.clone(), tensor: t }
}

/// Convenience constructor by dimension, with a canonical space name.
pub fn glq(n: usize, qp: &QParam) -> RMatrix {
    build_glq_rmatrix(&IndexSpace::new(&format!("glq{}", n), n), qp)
}

/// The pinned 2D antisymmetric pair (eps^{alpha beta}, eps_{alpha beta}).
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonPair {
    pub space: IndexSpace,
    pub eps_up: Tensor<Scalar>,
    pub eps_down: Tensor<Scalar>,
}

pub fn build_epsilon_pair(space: &IndexSpace, qp: &QParam) -> EpsilonPair {
    assert_eq!(space.dim, 2, "the antisymmetric pair lives on a 2D space");
    let mut eps_up = Tensor::zeros(vec![up(space), up(space)]);
    eps_up.set(&[0, 1], Scalar::one());
    eps_up.set(&[1, 0], -&qp.q_pow(1));
    let mut eps_down = Tensor::zeros(vec![down(space), down(space)]);
    eps_down.set(&[0, 1], -&qp.q_pow(-1));
    eps_down.set(&[1, 0], Scalar::one());
    EpsilonPair { space: space.clone(), eps_up, eps_down }
}

impl EpsilonPair {
    /// eps^{alpha beta} eps_{beta gamma} as a (up, down) matrix.
    pub fn raise_lower(&self) -> Tensor<Scalar> {
        contract(&self.eps_up, &self.eps_down, &[(1, 0)]).unwrap()
    }

    /// eps_{alpha beta} eps^{beta gamma} as a (down, up) matrix.
    pub fn lower_raise(&self) -> Tensor<Scalar> {
        contract(&self.eps_down, &self.eps_up, &[(1, 0)]).unwrap()
    }

    /// Full trace eps_{rho sigma} eps^{rho sigma}; equals -(q + q^-1).
    pub fn trace(&self) -> Scalar {
        let t = contract(&self.eps_down, &self.eps_up, &[(0, 0), (1, 1)]).unwrap();
        t.get(&[]).clone()
    }
}

/// The 2D R-matrix rebuilt from its spectral form
/// q delta delta + eps eps; must coincide with the GL_q(2) constructor.
pub fn build_slq2_rmatrix(space: &IndexSpace, qp: &QParam) -> RMatrix {
    let eps = build_epsilon_pair(space, qp);
    let qdd = Tensor::delta2(space).scale(&qp.q_pow(1));
    let ee = outer(&eps.eps_up, &eps.eps_down);
    RMatrix { space: space.clone(), tensor: &qdd + &ee }
}

/// Embed a pair operator into slots (pos, pos+1) of the 3-slot space.
fn embed_pair(r: &Tensor<Scalar>, space: &IndexSpace, pos: usize) -> Tensor<Scalar> {
    let d = Tensor::delta(space);
    // outer gives axes (up,up,down,down) x (up,down); reorder to
    // (up,up,up,down,down,down) with the delta at the requested slot.
    let t = outer(r, &d);
    match pos {
        0 => permute_axes(&t, &[0, 1, 4, 2, 3, 5]),
        1 => permute_axes(&t, &[4, 0, 1, 5, 2, 3]),
        _ => panic!("pair position must be 0 or 1 on three slots"),
    }
}

/// R12 R23 R12 - R23 R12 R23 on the triple tensor space; zero iff the
/// braid form of the Yang-Baxter equation holds.
pub fn ybe_residual(r: &RMatrix) -> Tensor<Scalar> {
    let r12 = embed_pair(&r.tensor, &r.space, 0);
    let r23 = embed_pair(&r.tensor, &r.space, 1);
    let lhs = mat_mul(&mat_mul(&r12, &r23), &r12);
    let rhs = mat_mul(&mat_mul(&r23, &r12), &r23);
    &lhs - &rhs
}

/// R^2 - Id - (q - q^-1) R.
pub fn hecke_residual(r: &RMatrix, qp: &QParam) -> Tensor<Scalar> {
    let gap = qp.gap();
    let id = Tensor::delta2(&r.space);
    let r2 = mat_mul(&r.tensor, &r.tensor);
    &(&r2 - &id) - &r.tensor.scale(&gap)
}

/// Spectral projectors of a Hecke R-matrix:
/// P- = (q Id - R)/(q + q^-1), P+ = (q^-1 Id + R)/(q + q^-1).
/// Returned as (plus, minus).
pub fn projectors(r: &RMatrix, qp: &QParam) -> (Tensor<Scalar>, Tensor<Scalar>) {
    let id = Tensor::delta2(&r.space);
    let denom = qp.q_plus_qinv().recip();
    let minus = (&id.scale(&qp.q_pow(1)) - &r.tensor).scale(&denom);
    let plus = (&id.scale(&qp.q_pow(-1)) + &r.tensor).scale(&denom);
    (plus, minus)
}

/// Which index wiring of the q-epsilon eigen-constraint to use. `PairFlipped`
/// is the literal printed form (both the output pair and the summed pair
/// enter transposed); `Plain` is the straight eigenvector convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Eps4Reading {
    Plain,
    PairFlipped,
}

/// Outcome of the rank-4 epsilon solve.
#[derive(Clone, Debug)]
pub struct Eps4Solve {
    pub reading: Eps4Reading,
    pub solution_dim: usize,
    pub tensor: Tensor<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Eps4Error {
    /// The joint constraint system has the wrong solution-space dimension,
    /// which signals a wrong R convention.
    SolutionDim(usize),
    /// The normalization entry vanished.
    DegenerateNormalization,
}

impl std::fmt::Display for Eps4Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Eps4Error::SolutionDim(d) => {
                write!(f, "epsilon constraint system has solution dimension {}, want 1", d)
            }
            Eps4Error::DegenerateNormalization => {
                write!(f, "epsilon solution vanishes on the normalization entry")
            }
        }
    }
}

impl std::error::Error for Eps4Error {}

/// Solve the eigen-constraints for the totally q-antisymmetric rank-4 symbol
/// on a 4D space, applied at every adjacent index pair, and normalize the
/// (1,2,3,4) entry to 1.
pub fn build_q_epsilon4(
    r: &RMatrix,
    reading: Eps4Reading,
    qp: &QParam,
) -> Result<Eps4Solve, Eps4Error> {
    let n = r.dim();
    assert_eq!(n, 4, "the rank-4 symbol is built on the 4D space");
    let total = n * n * n * n;
    let dims = vec![n; 4];
    let stride = |idx: &[usize]| -> usize {
        idx.iter().fold(0, |acc, &i| acc * n + i)
    };

    let qinv = qp.q_pow(-1);
    let mut rows: Vec<Vec<Scalar>> = Vec::new();
    for pos in 0..3 {
        for out_idx in IndexIter::new(dims.clone()) {
            let mut row = vec![Scalar::zero(); total];
            // -q^-1 * E[out]
            row[stride(&out_idx)] = &row[stride(&out_idx)] + &qinv;
            let s0 = out_idx[pos];
            let s1 = out_idx[pos + 1];
            for t0 in 0..n {
                for t1 in 0..n {
                    let coeff = match reading {
                        Eps4Reading::Plain => r.entry(s0, s1, t0, t1),
                        Eps4Reading::PairFlipped => r.entry(s1, s0, t1, t0),
                    };
                    if coeff.is_zero() {
                        continue;
                    }
                    let mut in_idx = out_idx.clone();
                    in_idx[pos] = t0;
                    in_idx[pos + 1] = t1;
                    let k = stride(&in_idx);
                    row[k] = &row[k] + coeff;
                }
            }
            rows.push(row);
        }
    }

    let basis = nullspace(rows, total);
    if basis.len() != 1 {
        return Err(Eps4Error::SolutionDim(basis.len()));
    }
    let v = &basis[0];
    let norm = &v[stride(&[0, 1, 2, 3])];
    if norm.is_zero() {
        return Err(Eps4Error::DegenerateNormalization);
    }
    let scale = norm.recip();
    let mut t = Tensor::zeros(vec![up(&r.space); 4]);
    for idx in IndexIter::new(dims) {
        let e = &v[stride(&idx)] * &scale;
        t.set(&idx, e);
    }
    Ok(Eps4Solve { reading, solution_dim: 1, tensor: t })
}

/// Residual of the defining pair relation of the solved epsilon at the first
/// index pair, for every free-index assignment: zero when the solve is
/// consistent with its own reading.
pub fn eps4_residual(r: &RMatrix, eps: &Eps4Solve, qp: &QParam) -> Tensor<Scalar> {
    let n = r.dim();
    let mut res = Tensor::zeros(vec![up(&r.space); 4]);
    let qinv = qp.q_pow(-1);
    for idx in IndexIter::new(vec![n; 4]) {
        let (a, b, c, d) = (idx[0], idx[1], idx[2], idx[3]);
        let mut acc = Scalar::zero();
        for e in 0..n {
            for f in 0..n {
                let coeff = match eps.reading {
                    Eps4Reading::Plain => r.entry(a, b, e, f),
                    Eps4Reading::PairFlipped => r.entry(b, a, f, e),
                };
                if coeff.is_zero() {
                    continue;
                }
                acc += &(coeff * eps.tensor.get(&[e, f, c, d]));
            }
        }
        acc += &(&qinv * eps.tensor.get(&idx));
        res.set(&idx, acc);
    }
    res
}

/// The classical rank-4 Levi-Civita on a 4D space (sign of the permutation).
pub fn classical_levi_civita(space: &IndexSpace) -> Tensor<Scalar> {
    assert_eq!(space.dim, 4);
    let mut t = Tensor::zeros(vec![up(space); 4]);
    for idx in IndexIter::new(vec![4; 4]) {
        let mut seen = [false; 4];
        let mut ok = true;
        for &i in &idx {
            if seen[i] {
                ok = false;
                break;
            }
            seen[i] = true;
        }
        if !ok {
            continue;
        }
        let mut sign = 1i64;
        for i in 0..4 {
            for j in (i + 1)..4 {
                if idx[i] > idx[j] {
                    sign = -sign;
                }
            }
        }
        t.set(&idx, Scalar::from_int(sign));
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, LaurentScalar};

    fn gq() -> QParam {
        QParam::generic()
    }

    #[test]
    fn glq1_is_hecke() {
        let r = glq(1, &gq());
        assert_eq!(r.entry(0, 0, 0, 0), &Scalar::q_pow(1));
        assert!(hecke_residual(&r, &gq()).is_zero());
    }

    #[test]
    fn glq2_block_structure() {
        let r = glq(2, &gq());
        let gap = Scalar::from_poly(LaurentScalar::hecke_gap());
        assert_eq!(r.entry(0, 0, 0, 0), &Scalar::q_pow(1));
        assert_eq!(r.entry(1, 1, 1, 1), &Scalar::q_pow(1));
        assert_eq!(r.entry(0, 1, 0, 1), &gap);
        assert_eq!(r.entry(1, 0, 0, 1), &Scalar::one());
        assert_eq!(r.entry(0, 1, 1, 0), &Scalar::one());
        assert_eq!(r.entry(1, 0, 1, 0), &Scalar::zero());
    }

    #[test]
    fn hecke_holds_2_4_6() {
        for n in [2usize, 4, 6] {
            assert!(hecke_residual(&glq(n, &gq()), &gq()).is_zero(), "hecke fails at n={}", n);
        }
    }

    #[test]
    fn ybe_holds_2_and_4() {
        assert!(ybe_residual(&glq(2, &gq())).is_zero());
        assert!(ybe_residual(&glq(4, &gq())).is_zero());
    }

    #[test]
    fn identity_is_not_hecke() {
        let space = IndexSpace::new("x", 2);
        let id = RMatrix { space: space.clone(), tensor: Tensor::delta2(&space) };
        let res = hecke_residual(&id, &gq());
        let gap = Scalar::from_poly(LaurentScalar::hecke_gap());
        let expect = Tensor::delta2(&space).scale(&-&gap);
        assert_eq!(res, expect);
        assert!(ybe_residual(&id).is_zero());
    }

    #[test]
    fn classical_limit_is_flip() {
        let qp = QParam::at(rat(1, 1));
        let r = glq(3, &qp);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        let want = if a == d && b == c { Scalar::one() } else { Scalar::zero() };
                        assert_eq!(r.entry(a, b, c, d), &want);
                    }
                }
            }
        }
        assert!(hecke_residual(&r, &qp).is_zero());
    }

    #[test]
    fn slq2_matches_glq2() {
        let space = IndexSpace::new("alpha", 2);
        let a = build_slq2_rmatrix(&space, &gq());
        let b = build_glq_rmatrix(&space, &gq());
        assert_eq!(a.tensor, b.tensor);
        // Spot entries fixed by the pinned convention.
        assert_eq!(a.entry(1, 0, 1, 0), &Scalar::zero());
        assert_eq!(a.entry(0, 1, 1, 0), &Scalar::one());
    }

    #[test]
    fn epsilon_pair_identities() {
        let space = IndexSpace::new("alpha", 2);
        let eps = build_epsilon_pair(&space, &gq());
        assert_eq!(eps.raise_lower(), Tensor::delta(&space));
        let dl = contract(&eps.eps_down, &eps.eps_up, &[(1, 0)]).unwrap();
        // delta with (down, up) layout
        let mut want = Tensor::zeros(vec![down(&space), up(&space)]);
        want.set(&[0, 0], Scalar::one());
        want.set(&[1, 1], Scalar::one());
        assert_eq!(dl, want);
        assert_eq!(eps.trace(), -&Scalar::from_poly(LaurentScalar::q_plus_qinv()));
    }

    #[test]
    fn projector_algebra() {
        for n in [2usize, 4] {
            let r = glq(n, &gq());
            let (plus, minus) = projectors(&r, &gq());
            let id = Tensor::delta2(&r.space);
            assert_eq!(&plus + &minus, id, "completeness fails at n={}", n);
            assert!((&mat_mul(&plus, &plus) - &plus).is_zero());
            assert!((&mat_mul(&minus, &minus) - &minus).is_zero());
            assert!(mat_mul(&plus, &minus).is_zero());
            assert!(mat_mul(&minus, &plus).is_zero());
            let rebuilt = &plus.scale(&Scalar::q_pow(1)) - &minus.scale(&Scalar::q_pow(-1));
            assert_eq!(rebuilt, r.tensor, "spectral reconstruction fails at n={}", n);
        }
    }

    #[test]
    fn minus_projector_is_epsilon_outer() {
        let space = IndexSpace::new("alpha", 2);
        let r = build_glq_rmatrix(&space, &gq());
        let (_, minus) = projectors(&r, &gq());
        let eps = build_epsilon_pair(&space, &gq());
        let denom = Scalar::from_poly(LaurentScalar::q_plus_qinv()).recip();
        let want = outer(&eps.eps_up, &eps.eps_down).scale(&-&denom);
        assert_eq!(minus, want);
    }

    #[test]
    fn eps4_solves_unique_for_both_readings() {
        let r = glq(4, &gq());
        for reading in [Eps4Reading::Plain, Eps4Reading::PairFlipped] {
            let sol = build_q_epsilon4(&r, reading, &gq()).unwrap();
            assert_eq!(sol.solution_dim, 1);
            assert_eq!(sol.tensor.get(&[0, 1, 2, 3]), &Scalar::one());
            assert!(eps4_residual(&r, &sol, &gq()).is_zero());
            // support only on permutations
            for idx in IndexIter::new(vec![4; 4]) {
                let mut seen = [false; 4];
                let distinct = idx.iter().all(|&i| {
                    if seen[i] {
                        false
                    } else {
                        seen[i] = true;
                        true
                    }
                });
                if !distinct {
                    assert!(sol.tensor.get(&idx).is_zero(), "nonzero off-permutation at {:?}", idx);
                }
            }
            // classical limit
            let at1 = sol.tensor.specialize(&rat(1, 1)).unwrap();
            assert_eq!(at1, classical_levi_civita(&r.space));
        }
    }

    #[test]
    fn eps4_adjacent_swap_entry() {
        // The (2,1,3,4) entry must be a signed unit q-monomial; its exponent
        // is fixed by the reading. Frozen from the numeric nullspace oracle
        // at q0 = 2 and 3/2 (reconstructed as -q^{+-1}).
        let r = glq(4, &gq());
        let plain = build_q_epsilon4(&r, Eps4Reading::Plain, &gq()).unwrap();
        assert_eq!(plain.tensor.get(&[1, 0, 2, 3]), &-&Scalar::q_pow(1));
        let flipped = build_q_epsilon4(&r, Eps4Reading::PairFlipped, &gq()).unwrap();
        assert_eq!(flipped.tensor.get(&[1, 0, 2, 3]), &-&Scalar::q_pow(-1));
    }

    #[test]
    fn eps4_numeric_reconstruction_oracle() {
        // Independent oracle: rebuild everything with q specialized at
        // rational points, re-solve the constraint system numerically, and
        // compare entrywise with the symbolic solution evaluated there.
        let sol = build_q_epsilon4(&glq(4, &gq()), Eps4Reading::PairFlipped, &gq()).unwrap();
        for q0 in [rat(2, 1), rat(3, 2)] {
            let qp = QParam::at(q0.clone());
            let rq = glq(4, &qp);
            let sol_q = build_q_epsilon4(&rq, Eps4Reading::PairFlipped, &qp).unwrap();
            let sym_at = sol.tensor.specialize(&q0).unwrap();
            assert_eq!(sol_q.tensor, sym_at, "mismatch at q0 = {}", q0);
        }
    }
}
