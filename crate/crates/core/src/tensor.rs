//! Dense tensors over named index spaces, with explicit variance metadata
//! and a generalized contraction (the workhorse behind every index identity
//! checked by this crate).
//!
//! All index spaces at desk scale have dimension <= ~6, so dense storage is
//! the right trade.

use crate::scalar::Scalar;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A named index space with a fixed dimension (spinor: 2, conformal: 4,
/// gauge: N, extended: N+2k, ...).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSpace {
    pub name: String,
    pub dim: usize,
}

impl IndexSpace {
    pub fn new(name: &str, dim: usize) -> Self {
        assert!(dim >= 1, "index space dimension must be positive");
        IndexSpace { name: name.to_string(), dim }
    }
}

/// Variance of a tensor slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variance {
    Up,
    Down,
}

impl Variance {
    pub fn flip(self) -> Self {
        match self {
            Variance::Up => Variance::Down,
            Variance::Down => Variance::Up,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axis {
    pub space: IndexSpace,
    pub variance: Variance,
}

pub fn up(space: &IndexSpace) -> Axis {
    Axis { space: space.clone(), variance: Variance::Up }
}

pub fn down(space: &IndexSpace) -> Axis {
    Axis { space: space.clone(), variance: Variance::Down }
}

/// Entry types a tensor can hold: exact scalars or (elsewhere in the crate)
/// noncommutative polynomials. Multiplication order is preserved by
/// `contract`, which is what makes algebra-valued contraction sound.
pub trait Entry: Clone + PartialEq {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Ordered product: `self` is the left factor.
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: &Scalar) -> Self;
}

impl Entry for Scalar {
    fn zero() -> Self {
        Scalar::zero()
    }
    fn is_zero(&self) -> bool {
        Scalar::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: &Scalar) -> Self {
        self * c
    }
}

/// Dense multi-index array. Entries are stored row-major in the axis order.
#[derive(Clone, PartialEq)]
pub struct Tensor<T: Entry> {
    axes: Vec<Axis>,
    entries: Vec<T>,
}

impl<T: Entry> Tensor<T> {
    pub fn zeros(axes: Vec<Axis>) -> Self {
        let len = axes.iter().map(|a| a.space.dim).product::<usize>().max(1);
        Tensor { axes, entries: vec![T::zero(); len] }
    }

    pub fn scalar(value: T) -> Self {
        Tensor { axes: Vec::new(), entries: vec![value] }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.axes.len());
        let mut off = 0;
        for (i, ax) in idx.iter().zip(&self.axes) {
            debug_assert!(*i < ax.space.dim, "index out of range");
            off = off * ax.space.dim + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.entries[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: T) {
        let off = self.offset(idx);
        self.entries[off] = value;
    }

    pub fn update(&mut self, idx: &[usize], f: impl FnOnce(&T) -> T) {
        let off = self.offset(idx);
        self.entries[off] = f(&self.entries[off]);
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// Iterate over all multi-indices in row-major order.
    pub fn indices(&self) -> IndexIter {
        IndexIter::new(self.axes.iter().map(|a| a.space.dim).collect())
    }

    pub fn map<U: Entry>(&self, f: impl Fn(&T) -> U) -> Tensor<U> {
        Tensor {
            axes: self.axes.clone(),
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.map(|e| e.scale(c))
    }

    /// Flip the variance of one axis (used when wiring equations whose
    /// conventions raise or lower a slot without a metric).
    pub fn with_variance(mut self, axis: usize, v: Variance) -> Self {
        self.axes[axis].variance = v;
        self
    }
}

/// Errors from `contract`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TensorError {
    DimMismatch { left: usize, right: usize },
    VarianceMismatch { left_axis: usize, right_axis: usize },
    AxisOutOfRange,
}

impl fmt::Display for TensorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TensorError::DimMismatch { left, right } => {
                write!(f, "contracted axes have dims {} vs {}", left, right)
            }
            TensorError::VarianceMismatch { left_axis, right_axis } => {
                write!(
                    f,
                    "axes {} and {} have equal variance; contraction needs opposite",
                    left_axis, right_axis
                )
            }
            TensorError::AxisOutOfRange => write!(f, "contraction axis out of range"),
        }
    }
}

impl std::error::Error for TensorError {}

/// Generalized inner product of two tensors over the given axis pairs.
///
/// Result axes are `t1`'s uncontracted axes followed by `t2`'s. For
/// algebra-valued entries the factor from `t1` is written to the left of the
/// factor from `t2`, so operand order preserves word order.
pub fn contract<T: Entry>(
    t1: &Tensor<T>,
    t2: &Tensor<T>,
    pairs: &[(usize, usize)],
) -> Result<Tensor<T>, TensorError> {
    for &(a1, a2) in pairs {
        if a1 >= t1.rank() || a2 >= t2.rank() {
            return Err(TensorError::AxisOutOfRange);
        }
        let ax1 = &t1.axes[a1];
        let ax2 = &t2.axes[a2];
        if ax1.space.dim != ax2.space.dim {
            return Err(TensorError::DimMismatch {
                left: ax1.space.dim,
                right: ax2.space.dim,
            });
        }
        if ax1.variance == ax2.variance {
            return Err(TensorError::VarianceMismatch { left_axis: a1, right_axis: a2 });
        }
    }

    let free1: Vec<usize> =
        (0..t1.rank()).filter(|i| !pairs.iter().any(|p| p.0 == *i)).collect();
    let free2: Vec<usize> =
        (0..t2.rank()).filter(|i| !pairs.iter().any(|p| p.1 == *i)).collect();

    let mut axes = Vec::with_capacity(free1.len() + free2.len());
    for &i in &free1 {
        axes.push(t1.axes[i].clone());
    }
    for &i in &free2 {
        axes.push(t2.axes[i].clone());
    }
    let mut out = Tensor::zeros(axes);

    let sum_dims: Vec<usize> = pairs.iter().map(|p| t1.axes[p.0].space.dim).collect();

    let mut idx1 = vec![0usize; t1.rank()];
    let mut idx2 = vec![0usize; t2.rank()];
    let out_dims: Vec<usize> = out.axes.iter().map(|a| a.space.dim).collect();
    for out_idx in IndexIter::new(out_dims) {
        for (pos, &ax) in free1.iter().enumerate() {
            idx1[ax] = out_idx[pos];
        }
        for (pos, &ax) in free2.iter().enumerate() {
            idx2[ax] = out_idx[free1.len() + pos];
        }
        let mut acc = T::zero();
        for sum_idx in IndexIter::new(sum_dims.clone()) {
            for (k, &(a1, a2)) in pairs.iter().enumerate() {
                idx1[a1] = sum_idx[k];
                idx2[a2] = sum_idx[k];
            }
            let prod = t1.get(&idx1).mul(t2.get(&idx2));
            acc = acc.add(&prod);
        }
        out.set(&out_idx, acc);
    }
    Ok(out)
}

/// Row-major odometer over a shape. An empty shape yields one empty index.
pub struct IndexIter {
    dims: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl IndexIter {
    pub fn new(dims: Vec<usize>) -> Self {
        let next = if dims.iter().any(|&d| d == 0) {
            None
        } else {
            Some(vec![0; dims.len()])
        };
        IndexIter { dims, next }
    }
}

impl Iterator for IndexIter {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.clone()?;
        let mut nxt = cur.clone();
        let mut pos = self.dims.len();
        loop {
            if pos == 0 {
                self.next = None;
                break;
            }
            pos -= 1;
            nxt[pos] += 1;
            if nxt[pos] < self.dims[pos] {
                self.next = Some(nxt);
                break;
            }
            nxt[pos] = 0;
        }
        Some(cur)
    }
}

impl Tensor<Scalar> {
    /// Identity on one index space: delta^a_b.
    pub fn delta(space: &IndexSpace) -> Self {
        let mut t = Tensor::zeros(vec![up(space), down(space)]);
        for i in 0..space.dim {
            t.set(&[i, i], Scalar::one());
        }
        t
    }

    /// Identity on a pair of slots: delta^a_c delta^b_d with axes ordered
    /// (up, up, down, down) to match R-matrix layout.
    pub fn delta2(space: &IndexSpace) -> Self {
        let mut t = Tensor::zeros(vec![up(space), up(space), down(space), down(space)]);
        for a in 0..space.dim {
            for b in 0..space.dim {
                t.set(&[a, b, a, b], Scalar::one());
            }
        }
        t
    }

    /// Evaluate every entry at `q0`; `None` if any entry has a pole there.
    pub fn specialize(&self, q0: &num_rational::BigRational) -> Option<Self> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(e.specialize(q0)?);
        }
        Some(Tensor { axes: self.axes.clone(), entries })
    }
}

impl<T: Entry> Add for &Tensor<T> {
    type Output = Tensor<T>;
    fn add(self, rhs: &Tensor<T>) -> Tensor<T> {
        assert_eq!(self.axes, rhs.axes, "tensor shape mismatch");
        Tensor {
            axes: self.axes.clone(),
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }
}

impl<T: Entry> Sub for &Tensor<T> {
    type Output = Tensor<T>;
    fn sub(self, rhs: &Tensor<T>) -> Tensor<T> {
        assert_eq!(self.axes, rhs.axes, "tensor shape mismatch");
        Tensor {
            axes: self.axes.clone(),
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a.add(&b.neg()))
                .collect(),
        }
    }
}

impl<T: Entry> Neg for &Tensor<T> {
    type Output = Tensor<T>;
    fn neg(self) -> Tensor<T> {
        self.map(|e| e.neg())
    }
}

/// Tensor (outer) product: axes of `a` followed by axes of `b`, entries
/// multiplied with `a`'s factor on the left.
pub fn outer<T: Entry>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let mut axes = a.axes.to_vec();
    axes.extend_from_slice(b.axes());
    let mut out = Tensor::zeros(axes);
    for ia in a.indices() {
        let ea = a.get(&ia);
        if ea.is_zero() {
            continue;
        }
        for ib in b.indices() {
            let eb = b.get(&ib);
            if eb.is_zero() {
                continue;
            }
            let mut idx = ia.clone();
            idx.extend_from_slice(&ib);
            out.set(&idx, ea.mul(eb));
        }
    }
    out
}

/// Reorder axes: `perm[i]` is the source axis that becomes axis `i`.
pub fn permute_axes<T: Entry>(t: &Tensor<T>, perm: &[usize]) -> Tensor<T> {
    assert_eq!(perm.len(), t.rank());
    let axes: Vec<Axis> = perm.iter().map(|&i| t.axes[i].clone()).collect();
    let mut out = Tensor::zeros(axes);
    let mut dst = vec![0usize; t.rank()];
    for src in t.indices() {
        for (i, &p) in perm.iter().enumerate() {
            dst[i] = src[p];
        }
        out.set(&dst, t.get(&src).clone());
    }
    out
}

/// Kronecker-style square matrix product on tensors shaped
/// (up^k, down^k): contract all down-axes of `a` against up-axes of `b`.
pub fn mat_mul<T: Entry>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let k = a.rank() / 2;
    assert_eq!(a.rank(), 2 * k);
    assert_eq!(b.rank(), 2 * k);
    let pairs: Vec<(usize, usize)> = (0..k).map(|i| (k + i, i)).collect();
    contract(a, b, &pairs).expect("mat_mul shape mismatch")
}

impl<T: Entry> Mul for &Tensor<T> {
    type Output = Tensor<T>;
    fn mul(self, rhs: &Tensor<T>) -> Tensor<T> {
        mat_mul(self, rhs)
    }
}

impl<T: Entry> fmt::Debug for Tensor<T>
where
    T: fmt::Display,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tensor rank {}", self.rank())?;
        for idx in self.indices() {
            let e = self.get(&idx);
            if !e.is_zero() {
                writeln!(f, "  {:?} -> {}", idx, e)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::LaurentScalar;

    fn latin() -> IndexSpace {
        IndexSpace::new("a", 4)
    }

    #[test]
    fn delta_chain() {
        // delta^a_b delta^b_c = delta^a_c
        let s = latin();
        let d = Tensor::delta(&s);
        let dd = contract(&d, &d, &[(1, 0)]).unwrap();
        assert_eq!(dd, d);
    }

    #[test]
    fn variance_mismatch_rejected() {
        let s = latin();
        let d = Tensor::delta(&s);
        let err = contract(&d, &d, &[(0, 0)]).unwrap_err();
        assert!(matches!(err, TensorError::VarianceMismatch { .. }));
    }

    #[test]
    fn dim_mismatch_rejected() {
        let a = Tensor::delta(&latin());
        let b = Tensor::delta(&IndexSpace::new("alpha", 2));
        let err = contract(&a, &b, &[(1, 0)]).unwrap_err();
        assert!(matches!(err, TensorError::DimMismatch { .. }));
    }

    #[test]
    fn chain_associativity() {
        // (A.B).C == A.(B.C) for scalar-valued matrices on one space.
        let s = IndexSpace::new("i", 3);
        let mut a = Tensor::zeros(vec![up(&s), down(&s)]);
        let mut b = Tensor::zeros(vec![up(&s), down(&s)]);
        let mut c = Tensor::zeros(vec![up(&s), down(&s)]);
        let mut k = 1i64;
        for i in 0..3 {
            for j in 0..3 {
                a.set(&[i, j], Scalar::from_poly(LaurentScalar::q_pow(k % 3)));
                b.set(&[i, j], Scalar::from_int(k % 5 - 2));
                c.set(&[i, j], Scalar::from_poly(LaurentScalar::hecke_gap()).scale(&Scalar::from_int(k % 2)));
                k += 7;
            }
        }
        let ab_c = mat_mul(&mat_mul(&a, &b), &c);
        let a_bc = mat_mul(&a, &mat_mul(&b, &c));
        assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn index_iter_counts() {
        assert_eq!(IndexIter::new(vec![2, 3]).count(), 6);
        assert_eq!(IndexIter::new(vec![]).count(), 1);
    }
}
