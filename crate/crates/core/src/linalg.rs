//! Exact dense linear algebra over the scalar fraction field: elimination,
//! rank, and nullspace. Sizes here are small (a few hundred unknowns), so a
//! dense row-reduction is the honest tool.

use crate::scalar::Scalar;

/// Reduced row echelon form in place. Returns the pivot column of each row
/// kept, in order.
pub fn rref(rows: &mut Vec<Vec<Scalar>>) -> Vec<usize> {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(sel) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, sel);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..ncols {
                    let delta = &rows[r][j] * &f;
                    rows[i][j] = &rows[i][j] - &delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

pub fn rank(mut rows: Vec<Vec<Scalar>>) -> usize {
    rref(&mut rows).len()
}

/// Inverse of a square matrix, by elimination on the augmented matrix.
pub fn invert(m: &[Vec<Scalar>]) -> Option<Vec<Vec<Scalar>>> {
    let n = m.len();
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(n);
    for (i, r) in m.iter().enumerate() {
        assert_eq!(r.len(), n);
        let mut row = r.clone();
        row.extend((0..n).map(|j| if i == j { Scalar::one() } else { Scalar::zero() }));
        rows.push(row);
    }
    let pivots = rref(&mut rows);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(rows.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Basis of { x : M x = 0 }, one vector per free column.
pub fn nullspace(mut rows: Vec<Vec<Scalar>>, ncols: usize) -> Vec<Vec<Scalar>> {
    for row in &rows {
        assert_eq!(row.len(), ncols);
    }
    let pivots = rref(&mut rows);
    let mut basis = Vec::new();
    for free in 0..ncols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![Scalar::zero(); ncols];
        v[free] = Scalar::one();
        for (ri, &pc) in pivots.iter().enumerate() {
            v[pc] = -&rows[ri][free];
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::LaurentScalar;

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    #[test]
    fn rank_and_nullspace() {
        // x + y = 0 over a q-dependent multiple: (q)x + (q)y = 0.
        let q = Scalar::from_poly(LaurentScalar::q());
        let rows = vec![vec![s(1), s(1)], vec![q.clone(), q]];
        assert_eq!(rank(rows.clone()), 1);
        let ns = nullspace(rows, 2);
        assert_eq!(ns.len(), 1);
        // x = -y
        assert_eq!(ns[0][0], -&ns[0][1]);
    }

    #[test]
    fn full_rank_empty_nullspace() {
        let rows = vec![vec![s(1), s(2)], vec![s(0), s(3)]];
        assert_eq!(rank(rows.clone()), 2);
        assert!(nullspace(rows, 2).is_empty());
    }
}
