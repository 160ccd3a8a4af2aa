//! Matrix-valued connection forms: the duality operator on two-forms, the
//! weighted quantum trace, curvature, and the quadratic gauge-field algebra
//! residual with its two contraction readings.

use crate::ncengine::{EngineError, Gen, NcPoly, RewriteSystem, Word};
use crate::rmx::RMatrix;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::twistoralg::TwistorSystem;

/// A square matrix of algebra elements, indexed by a gauge space of size n.
#[derive(Clone, Debug, PartialEq)]
pub struct FormMatrix {
    pub n: usize,
    pub entries: Vec<NcPoly>,
}

impl FormMatrix {
    pub fn zeros(n: usize) -> Self {
        FormMatrix { n, entries: vec![NcPoly::zero(); n * n] }
    }

    pub fn get(&self, i: usize, k: usize) -> &NcPoly {
        &self.entries[i * self.n + k]
    }

    pub fn set(&mut self, i: usize, k: usize, p: NcPoly) {
        self.entries[i * self.n + k] = p;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|p| p.is_zero())
    }

    pub fn map(&self, f: impl Fn(&NcPoly) -> NcPoly) -> Self {
        FormMatrix { n: self.n, entries: self.entries.iter().map(f).collect() }
    }

    pub fn try_map(
        &self,
        f: impl Fn(&NcPoly) -> Result<NcPoly, EngineError>,
    ) -> Result<Self, EngineError> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(f(e)?);
        }
        Ok(FormMatrix { n: self.n, entries })
    }

    /// Matrix product with noncommutative entries, left factor first.
    pub fn mul(&self, other: &FormMatrix) -> FormMatrix {
        assert_eq!(self.n, other.n);
        let mut out = FormMatrix::zeros(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let mut acc = NcPoly::zero();
                for l in 0..self.n {
                    acc.add_assign(&self.get(i, l).mul(other.get(l, k)));
                }
                out.set(i, k, acc);
            }
        }
        out
    }

    pub fn sub(&self, other: &FormMatrix) -> FormMatrix {
        assert_eq!(self.n, other.n);
        FormMatrix {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> FormMatrix {
        self.map(|p| p.scale(c))
    }
}

/// Exterior derivative entrywise, then normal form.
pub fn d_matrix(rs: &RewriteSystem, m: &FormMatrix) -> Result<FormMatrix, EngineError> {
    m.try_map(|p| crate::ncengine::d_nf(rs, p))
}

/// Curvature dA - A A, normal-formed entrywise.
pub fn curvature(rs: &RewriteSystem, a: &FormMatrix) -> Result<FormMatrix, EngineError> {
    let da = d_matrix(rs, a)?;
    let a2 = a.mul(a);
    let mut f = da.sub(&a2);
    f = f.try_map(|p| rs.normal_form(p))?;
    Ok(f)
}

#[derive(Debug, Clone)]
pub enum StarError {
    Engine(EngineError),
    /// A word does not carry exactly two adjacent differential letters.
    NotTwoFormBasis(String),
}

impl std::fmt::Display for StarError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StarError::Engine(e) => write!(f, "{}", e),
            StarError::NotTwoFormBasis(w) => {
                write!(f, "entry not reducible to a dz dz basis form: {}", w)
            }
        }
    }
}

impl std::error::Error for StarError {}

impl From<EngineError> for StarError {
    fn from(e: EngineError) -> Self {
        StarError::Engine(e)
    }
}

/// Apply a projector of the 4D space to the Latin pair of the two adjacent
/// differential letters in each normal-form word: word -> sum over new
/// Latin pairs with coefficient P^{ab}_{cd} taken against the original pair
/// (a,b) on the left, matching the right-action convention of the duality
/// operator.
pub fn project_dz_pair(
    sys: &TwistorSystem,
    proj: &Tensor<Scalar>,
    p: &NcPoly,
) -> Result<NcPoly, StarError> {
    let dz_fam = sys.fams.dz;
    let mut out = NcPoly::zero();
    for (w, c) in p.terms() {
        let positions: Vec<usize> =
            w.0.iter()
                .enumerate()
                .filter(|(_, g)| sys.rs.registry().family(g.fam).parity == 1)
                .map(|(i, _)| i)
                .collect();
        if positions.len() != 2
            || positions[1] != positions[0] + 1
            || w.0[positions[0]].fam != dz_fam
            || w.0[positions[1]].fam != dz_fam
        {
            return Err(StarError::NotTwoFormBasis(sys.rs.registry().render_word(w)));
        }
        let (i, j) = (positions[0], positions[1]);
        let g1 = w.0[i];
        let g2 = w.0[j];
        let (a, b) = (g1.idx[1] as usize, g2.idx[1] as usize);
        for cc in 0..4 {
            for dd in 0..4 {
                let k = proj.get(&[a, b, cc, dd]);
                if k.is_zero() {
                    continue;
                }
                let mut v = w.0.clone();
                v[i] = Gen::new(dz_fam, &[g1.idx[0] as usize, cc]);
                v[j] = Gen::new(dz_fam, &[g2.idx[0] as usize, dd]);
                out.add_term(Word(v), c * k);
            }
        }
    }
    Ok(out)
}

/// The duality operator: self-dual part minus anti-self-dual part.
pub fn duality_star(sys: &TwistorSystem, p: &NcPoly) -> Result<NcPoly, StarError> {
    let plus = project_dz_pair(sys, &sys.p_plus, p)?;
    let minus = project_dz_pair(sys, &sys.p_minus, p)?;
    Ok(sys.rs.normal_form(&plus.sub(&minus))?)
}

/// Anti-self-dual part of a two-form entry, normal-formed.
pub fn asd_part(sys: &TwistorSystem, p: &NcPoly) -> Result<NcPoly, StarError> {
    let minus = project_dz_pair(sys, &sys.p_minus, p)?;
    Ok(sys.rs.normal_form(&minus)?)
}

/// Self-dual part of a two-form entry, normal-formed.
pub fn sd_part(sys: &TwistorSystem, p: &NcPoly) -> Result<NcPoly, StarError> {
    let plus = project_dz_pair(sys, &sys.p_plus, p)?;
    Ok(sys.rs.normal_form(&plus)?)
}

/// Weighted trace sum_i D_i M^i_i.
pub fn q_trace(m: &FormMatrix, weights: &[Scalar]) -> NcPoly {
    assert_eq!(weights.len(), m.n);
    let mut acc = NcPoly::zero();
    for i in 0..m.n {
        acc.add_assign(&m.get(i, i).scale(&weights[i]));
    }
    acc
}

/// Which operator composition realizes the six-index quadratic gauge
/// relation on the triple tensor space. The first term is A_1 R_23 A_s and
/// the second R_12 A_1 R_23 A_s R_12, with s the slot the second connection
/// factor acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeRelationReading {
    SecondSlot,
    ThirdSlot,
}

/// Embed an n x n matrix of algebra elements as an operator acting on one
/// slot of the triple space (axes up^3, down^3).
fn embed_matrix(a: &FormMatrix, slot: usize) -> Tensor<NcPoly> {
    let space = crate::tensor::IndexSpace::new("gauge", a.n);
    let up = crate::tensor::up(&space);
    let down = crate::tensor::down(&space);
    let mut t = Tensor::zeros(vec![up.clone(), up.clone(), up, down.clone(), down.clone(), down]);
    let n = a.n;
    for i in 0..n {
        for j in 0..n {
            let e = a.get(i, j);
            if e.is_zero() {
                continue;
            }
            for x in 0..n {
                for y in 0..n {
                    let mut idx_up = [x, x, x];
                    let mut idx_dn = [x, x, x];
                    // spectators x, y on the two other slots
                    let others: Vec<usize> = (0..3).filter(|&s| s != slot).collect();
                    idx_up[slot] = i;
                    idx_dn[slot] = j;
                    idx_up[others[0]] = x;
                    idx_dn[others[0]] = x;
                    idx_up[others[1]] = y;
                    idx_dn[others[1]] = y;
                    t.set(
                        &[idx_up[0], idx_up[1], idx_up[2], idx_dn[0], idx_dn[1], idx_dn[2]],
                        e.clone(),
                    );
                }
            }
        }
    }
    t
}

/// Embed the R-matrix on an adjacent pair of the triple space, entries
/// lifted to constant polynomials.
fn embed_r(r: &RMatrix, pos: usize) -> Tensor<NcPoly> {
    let rp = r.tensor.map(|s| NcPoly::constant(s.clone()));
    let d = Tensor::delta(&r.space).map(|s| NcPoly::constant(s.clone()));
    let t = crate::tensor::outer(&rp, &d);
    match pos {
        0 => crate::tensor::permute_axes(&t, &[0, 1, 4, 2, 3, 5]),
        1 => crate::tensor::permute_axes(&t, &[4, 0, 1, 5, 2, 3]),
        _ => panic!("pair position must be 0 or 1"),
    }
}

/// The residual tensor of the quadratic gauge-field relation
/// A_1 R_23 A_s + R_12 A_1 R_23 A_s R_12 as a rank-6 tensor, entries
/// normal-formed. Zero exactly when the connection components close the
/// deformed anticommutativity algebra under the chosen reading.
pub fn gauge_algebra_residual(
    rs: &RewriteSystem,
    a: &FormMatrix,
    r_g: &RMatrix,
    reading: GaugeRelationReading,
) -> Result<Tensor<NcPoly>, EngineError> {
    assert_eq!(r_g.dim(), a.n);
    let a1 = embed_matrix(a, 0);
    let a_s = match reading {
        GaugeRelationReading::SecondSlot => embed_matrix(a, 1),
        GaugeRelationReading::ThirdSlot => embed_matrix(a, 2),
    };
    let r12 = embed_r(r_g, 0);
    let r23 = embed_r(r_g, 1);
    let term1 = crate::tensor::mat_mul(&crate::tensor::mat_mul(&a1, &r23), &a_s);
    let term2 = crate::tensor::mat_mul(
        &crate::tensor::mat_mul(
            &crate::tensor::mat_mul(&crate::tensor::mat_mul(&r12, &a1), &r23),
            &a_s,
        ),
        &r12,
    );
    let total = &term1 + &term2;
    let mut out = Tensor::zeros(total.axes().to_vec());
    for idx in total.indices() {
        out.set(&idx, rs.normal_form(total.get(&idx))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::QParam;
    use crate::twistoralg::{build_twistor_system, TwistorOptions};

    fn sys() -> TwistorSystem {
        build_twistor_system(
            &QParam::generic(),
            TwistorOptions { k_inst: 0, with_derivatives: false, ..Default::default() },
        )
        .unwrap()
    }

    #[test]
    fn star_is_involutive_and_linear() {
        let s = sys();
        // a random-ish two-form entry: dz^1_1 dz^2_3 + q dz^2_2 dz^1_4
        let mut p = NcPoly::from_word(Word(vec![s.dz(0, 0), s.dz(1, 2)]));
        p.add_term(Word(vec![s.dz(1, 1), s.dz(0, 3)]), Scalar::q_pow(1));
        let p = s.rs.normal_form(&p).unwrap();
        let star = duality_star(&s, &p).unwrap();
        let star2 = duality_star(&s, &star).unwrap();
        assert_eq!(star2, p);
        // completeness: sd + asd = id
        let sd = sd_part(&s, &p).unwrap();
        let asd = asd_part(&s, &p).unwrap();
        assert_eq!(sd.add(&asd), p);
    }

    #[test]
    fn greek_contracted_pair_is_self_dual() {
        let s = sys();
        // eps_{alpha beta} dz^alpha_a dz^beta_b is annihilated by the
        // anti-self-dual projector for every (a, b).
        for a in 0..4 {
            for b in 0..4 {
                let mut p = NcPoly::zero();
                for al in 0..2 {
                    for be in 0..2 {
                        let c = s.eps.eps_down.get(&[al, be]);
                        if !c.is_zero() {
                            p.add_term(Word(vec![s.dz(al, a), s.dz(be, b)]), c.clone());
                        }
                    }
                }
                let p = s.rs.normal_form(&p).unwrap();
                let asd = asd_part(&s, &p).unwrap();
                assert!(asd.is_zero(), "asd nonzero at ({},{})", a, b);
                let sd = sd_part(&s, &p).unwrap();
                assert_eq!(sd, p);
            }
        }
    }

    #[test]
    fn star_of_zero() {
        let s = sys();
        assert!(duality_star(&s, &NcPoly::zero()).unwrap().is_zero());
    }

    #[test]
    fn q_trace_classical_identity() {
        let m = {
            let mut m = FormMatrix::zeros(3);
            for i in 0..3 {
                m.set(i, i, NcPoly::one());
            }
            m
        };
        let tr = q_trace(&m, &[Scalar::one(), Scalar::one(), Scalar::one()]);
        assert_eq!(tr, NcPoly::constant(Scalar::from_int(3)));
    }
}
