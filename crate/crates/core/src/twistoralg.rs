//! The deformed twistor algebra: generators z, dz and the derivative family
//! on a 2x4 index block, with exchange relations driven by the 2D and 4D
//! R-matrices; plus the parameter sector of isotropic 6-vectors and the
//! central pairing elements built from them.
//!
//! Family precedence is z < b < X < X^-1 < dz < pd, so normal forms collect
//! derivatives rightmost (annihilator convention: the rule for pd z is the
//! structure equation read left to right) and differentials after all
//! zero-forms. Exchange weights the structure equations do not fix are
//! options, pinned by scan drivers and reported.

use crate::ncengine::{
    check_local_confluence, compile_rules, extend_rules, CompileError, ConfluenceReport,
    DiffImage, EngineError, Gen, NcPoly, Registry, RewriteSystem, Word,
};
use crate::rmx::{
    build_epsilon_pair, build_glq_rmatrix, build_q_epsilon4, build_slq2_rmatrix, projectors,
    Eps4Reading, Eps4Solve, EpsilonPair, RMatrix,
};
use crate::scalar::{QParam, Scalar};
use crate::tensor::{IndexIter, IndexSpace, Tensor};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Family ids of the compiled twistor system, in precedence order.
#[derive(Clone, Copy, Debug)]
pub struct TwistorFams {
    pub z: u8,
    pub b: u8,
    pub x: u8,
    pub xinv: u8,
    pub dz: u8,
    pub pd: u8,
}

/// Exchange model for the components of one parameter 6-vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterModel {
    /// Components commute; the isotropy quadric is imposed separately.
    Flat,
    /// Components satisfy the same quadratic relations as the twistor
    /// bilinear coordinates (which contain the isotropy quadric).
    BilinearMirror,
    /// No intra-label relations at all (used to derive the required set).
    Free,
}

/// Structure choices that the defining equations do not fix.
#[derive(Clone, Debug)]
pub struct TwistorOptions {
    pub eps4_reading: Eps4Reading,
    /// Number of instanton labels in the parameter sector (0 disables it).
    pub k_inst: usize,
    /// b z = q^w z b exchange weight.
    pub z_b_weight: i64,
    /// dz b = q^w b dz exchange weight (the direction the rule fires).
    pub dz_b_weight: i64,
    /// Include the derivative family and its relations.
    pub with_derivatives: bool,
    /// Include the isotropy quadric (b,b) = 0 (dropped by the negative
    /// control).
    pub with_isotropy: bool,
    /// Exchange model for parameter components.
    pub b_model: ParameterModel,
}

impl Default for TwistorOptions {
    fn default() -> Self {
        TwistorOptions {
            eps4_reading: Eps4Reading::PairFlipped,
            k_inst: 1,
            z_b_weight: 0,
            dz_b_weight: 2,
            with_derivatives: true,
            with_isotropy: true,
            b_model: ParameterModel::BilinearMirror,
        }
    }
}

#[derive(Debug)]
pub enum TwistorError {
    Compile(CompileError),
    Engine(EngineError),
    Eps4(crate::rmx::Eps4Error),
    /// The projected 6-vector subspace has the wrong dimension.
    SixVectorDim(usize),
    /// Confluence failed fatally during a build that requires it.
    NotConfluent(usize),
    /// The derivative recursion met a letter with no declared action.
    NoDerivativeAction(String),
}

impl fmt::Display for TwistorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TwistorError::Compile(e) => write!(f, "compile: {}", e),
            TwistorError::Engine(e) => write!(f, "engine: {}", e),
            TwistorError::Eps4(e) => write!(f, "epsilon solve: {}", e),
            TwistorError::SixVectorDim(d) => {
                write!(f, "projected 6-vector space has dimension {}, want 6", d)
            }
            TwistorError::NotConfluent(n) => write!(f, "{} confluence ambiguities", n),
            TwistorError::NoDerivativeAction(g) => {
                write!(f, "no derivative action declared for {}", g)
            }
        }
    }
}

impl std::error::Error for TwistorError {}

impl From<CompileError> for TwistorError {
    fn from(e: CompileError) -> Self {
        TwistorError::Compile(e)
    }
}

impl From<EngineError> for TwistorError {
    fn from(e: EngineError) -> Self {
        TwistorError::Engine(e)
    }
}

impl From<crate::rmx::Eps4Error> for TwistorError {
    fn from(e: crate::rmx::Eps4Error) -> Self {
        TwistorError::Eps4(e)
    }
}

pub struct TwistorSystem {
    pub rs: RewriteSystem,
    pub fams: TwistorFams,
    pub greek: IndexSpace,
    pub latin: IndexSpace,
    pub r2: RMatrix,
    pub r4: RMatrix,
    pub eps: EpsilonPair,
    pub eps4: Eps4Solve,
    pub p_plus: Tensor<Scalar>,
    pub p_minus: Tensor<Scalar>,
    /// Basis of the projected 6-vector subspace, as 4x4 scalar tensors.
    pub six_basis: Vec<Tensor<Scalar>>,
    pub options: TwistorOptions,
    pub eq10_adjoined: bool,
    /// Exchange twist of the derivative past an inverse pairing element,
    /// pd Xinv = q^{-t} Xinv pd (plus the derivative term); scanned.
    pub xinv_partial_twist: i64,
}

impl TwistorSystem {
    pub fn qp(&self) -> &QParam {
        self.rs.qparam()
    }

    pub fn z(&self, alpha: usize, a: usize) -> Gen {
        Gen::new(self.fams.z, &[alpha, a])
    }

    pub fn dz(&self, alpha: usize, a: usize) -> Gen {
        Gen::new(self.fams.dz, &[alpha, a])
    }

    pub fn pd(&self, a: usize, alpha: usize) -> Gen {
        Gen::new(self.fams.pd, &[a, alpha])
    }

    /// Component m of the 6-vector parameter with instanton label i.
    pub fn bgen(&self, label: usize, m: usize) -> Gen {
        Gen::new(self.fams.b, &[label, m])
    }

    pub fn xgen(&self, label: usize) -> Gen {
        Gen::new(self.fams.x, &[label])
    }

    pub fn xinv(&self, label: usize) -> Gen {
        Gen::new(self.fams.xinv, &[label])
    }

    /// The 4x4 algebra-valued tensor of bilinears y_{ab}, normal-formed.
    pub fn y_components(&self) -> Result<Tensor<NcPoly>, EngineError> {
        let mut y = Tensor::zeros(vec![
            crate::tensor::down(&self.latin),
            crate::tensor::down(&self.latin),
        ]);
        for a in 0..4 {
            for b in 0..4 {
                let mut p = NcPoly::zero();
                for al in 0..2 {
                    for be in 0..2 {
                        let c = self.eps.eps_down.get(&[al, be]);
                        if c.is_zero() {
                            continue;
                        }
                        p.add_term(Word(vec![self.z(al, a), self.z(be, b)]), c.clone());
                    }
                }
                y.set(&[a, b], self.rs.normal_form(&p)?);
            }
        }
        Ok(y)
    }

    /// The 4x4 parameter tensor for one instanton label, expanded over the
    /// projected 6-vector basis.
    pub fn b_components(&self, label: usize) -> Tensor<NcPoly> {
        let mut t = Tensor::zeros(vec![
            crate::tensor::down(&self.latin),
            crate::tensor::down(&self.latin),
        ]);
        for a in 0..4 {
            for b in 0..4 {
                let mut p = NcPoly::zero();
                for (m, e) in self.six_basis.iter().enumerate() {
                    let c = e.get(&[a, b]);
                    if !c.is_zero() {
                        p.add_term(Word::single(self.bgen(label, m)), c.clone());
                    }
                }
                t.set(&[a, b], p);
            }
        }
        t
    }

    /// The pairing X^i = eps4^{abcd} y_{ab} b^i_{cd} as an explicit word
    /// polynomial (z z b), not normal-formed.
    pub fn x_poly(&self, label: usize) -> NcPoly {
        let b = self.b_components(label);
        let mut out = NcPoly::zero();
        for idx in IndexIter::new(vec![4; 4]) {
            let e4 = self.eps4.tensor.get(&idx);
            if e4.is_zero() {
                continue;
            }
            let (a, bb, c, d) = (idx[0], idx[1], idx[2], idx[3]);
            for al in 0..2 {
                for be in 0..2 {
                    let ce = self.eps.eps_down.get(&[al, be]);
                    if ce.is_zero() {
                        continue;
                    }
                    let zz = NcPoly::from_word(Word(vec![self.z(al, a), self.z(be, bb)]));
                    let contrib = zz.mul(b.get(&[c, d])).scale(&(e4 * ce));
                    out.add_assign(&contrib);
                }
            }
        }
        out
    }

    /// The differential of the pairing: eps4 eps (dz z + z dz) b.
    pub fn dx_poly(&self, label: usize) -> Result<NcPoly, EngineError> {
        let x = self.x_poly(label);
        crate::ncengine::exterior_d(self.rs.registry(), &x)
    }

    /// Apply the twistor derivative pd^a_alpha to a zero-form word
    /// polynomial, by the coproduct recursion of the structure equation,
    /// passing parameters flat and inverse pairing elements with the scanned
    /// twist. The result is normal-formed.
    pub fn apply_partial(&self, a: usize, alpha: usize, p: &NcPoly) -> Result<NcPoly, TwistorError> {
        let mut memo: BTreeMap<(usize, usize, Word), NcPoly> = BTreeMap::new();
        let mut out = NcPoly::zero();
        for (w, c) in p.terms() {
            let d = self.partial_word(a, alpha, w, &mut memo)?;
            out.add_assign(&d.scale(c));
        }
        Ok(self.rs.normal_form(&out)?)
    }

    fn partial_word(
        &self,
        a: usize,
        alpha: usize,
        w: &Word,
        memo: &mut BTreeMap<(usize, usize, Word), NcPoly>,
    ) -> Result<NcPoly, TwistorError> {
        if w.is_empty() {
            return Ok(NcPoly::zero());
        }
        if let Some(hit) = memo.get(&(a, alpha, w.clone())) {
            return Ok(hit.clone());
        }
        let head = w.0[0];
        let tail = Word(w.0[1..].to_vec());
        let qp = self.qp().clone();
        let t = self.xinv_partial_twist;
        let mut out = NcPoly::zero();
        if head.fam == self.fams.z {
            let (be, b) = (head.idx[0] as usize, head.idx[1] as usize);
            if a == b && alpha == be {
                out.add_term(tail.clone(), Scalar::one());
            }
            for mu in 0..2usize {
                for nu in 0..2usize {
                    for cc in 0..4usize {
                        for dd in 0..4usize {
                            let coeff =
                                self.r2.entry(be, mu, alpha, nu) * self.r4.entry(dd, a, cc, b);
                            if coeff.is_zero() {
                                continue;
                            }
                            let inner = self.partial_word(cc, mu, &tail, memo)?;
                            if inner.is_zero() {
                                continue;
                            }
                            let znu = NcPoly::from_gen(self.z(nu, dd));
                            out.add_assign(&znu.mul(&inner).scale(&coeff));
                        }
                    }
                }
            }
        } else if head.fam == self.fams.b {
            let inner = self.partial_word(a, alpha, &tail, memo)?;
            out.add_assign(&NcPoly::from_gen(head).mul(&inner));
        } else if head.fam == self.fams.xinv {
            let label = head.idx[0] as usize;
            let dx = self.partial_x_value(a, alpha, label, memo)?;
            let xi2 = NcPoly::from_word(Word(vec![head, head]));
            out.add_assign(
                &xi2.mul(&dx)
                    .mul(&NcPoly::from_word(tail.clone()))
                    .scale(&-&qp.q_pow(-t)),
            );
            out.add_assign(
                &NcPoly::from_gen(head)
                    .mul(&self.partial_word(a, alpha, &tail, memo)?)
                    .scale(&qp.q_pow(-t)),
            );
        } else {
            return Err(TwistorError::NoDerivativeAction(
                self.rs.registry().render_gen(&head),
            ));
        }
        memo.insert((a, alpha, w.clone()), out.clone());
        Ok(out)
    }

    /// The right-handed twistor derivative: the mirror extension of the same
    /// one-letter action, recursing from the last letter with the inverse
    /// exchange map. Zero-form words in z and the parameters only.
    pub fn apply_partial_right(
        &self,
        a: usize,
        alpha: usize,
        p: &NcPoly,
    ) -> Result<NcPoly, TwistorError> {
        let inv = self.partial_exchange_inverse();
        let mut out = NcPoly::zero();
        for (w, c) in p.terms() {
            let d = self.partial_word_right(a, alpha, w, &inv)?;
            out.add_assign(&d.scale(c));
        }
        Ok(self.rs.normal_form(&out)?)
    }

    /// Inverse of the 64x64 exchange map of the derivative coproduct:
    /// rows (nu, d, c, mu), columns (a, alpha, beta, b).
    fn partial_exchange_inverse(&self) -> Vec<Vec<Scalar>> {
        let mut m = vec![vec![Scalar::zero(); 64]; 64];
        for be in 0..2 {
            for mu in 0..2 {
                for al in 0..2 {
                    for nu in 0..2 {
                        for dd in 0..4 {
                            for aa in 0..4 {
                                for cc in 0..4 {
                                    for b in 0..4 {
                                        let coeff = self.r2.entry(be, mu, al, nu)
                                            * self.r4.entry(dd, aa, cc, b);
                                        if !coeff.is_zero() {
                                            let row = ((nu * 4 + dd) * 4 + cc) * 2 + mu;
                                            let col = ((aa * 2 + al) * 2 + be) * 4 + b;
                                            m[row][col] = &m[row][col] + &coeff;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        crate::linalg::invert(&m).expect("derivative exchange not invertible")
    }

    fn partial_word_right(
        &self,
        a: usize,
        alpha: usize,
        w: &Word,
        inv: &[Vec<Scalar>],
    ) -> Result<NcPoly, TwistorError> {
        if w.is_empty() {
            return Ok(NcPoly::zero());
        }
        let last = w.0[w.len() - 1];
        let head = Word(w.0[..w.len() - 1].to_vec());
        let mut out = NcPoly::zero();
        if last.fam == self.fams.z {
            let (nu, dd) = (last.idx[0] as usize, last.idx[1] as usize);
            // (head z^nu_d) <| pd^c_mu: via the inverted exchange:
            // delta-part: - sum Inv[(nu d c mu),(a' al' be' b')] delta^{a'}_{b'} delta-greek
            // passing part: sum Inv[...] (head <| pd^{a'}_{al'}) z^{be'}_{b'}
            let row = ((nu * 4 + dd) * 4 + a) * 2 + alpha;
            for ap in 0..4 {
                for alp in 0..2 {
                    for bep in 0..2 {
                        for bp in 0..4 {
                            let col = ((ap * 2 + alp) * 2 + bep) * 4 + bp;
                            let k = &inv[row][col];
                            if k.is_zero() {
                                continue;
                            }
                            if ap == bp && alp == bep {
                                out.add_term(head.clone(), -k);
                            }
                            let innerd = self.partial_word_right(ap, alp, &head, inv)?;
                            if !innerd.is_zero() {
                                let zb = NcPoly::from_gen(self.z(bep, bp));
                                out.add_assign(&innerd.mul(&zb).scale(k));
                            }
                        }
                    }
                }
            }
            // overall sign: the delta-part of the inverted relation enters
            // negatively relative to the left action; flip so the one-letter
            // action matches (pd z = delta + ...).
            out = out.neg();
        } else if last.fam == self.fams.b {
            let inner = self.partial_word_right(a, alpha, &head, inv)?;
            out.add_assign(&inner.mul(&NcPoly::from_gen(last)));
        } else {
            return Err(TwistorError::NoDerivativeAction(
                self.rs.registry().render_gen(&last),
            ));
        }
        Ok(out)
    }

    /// Derivative of the pairing polynomial, cached per (a, alpha, label).
    fn partial_x_value(
        &self,
        a: usize,
        alpha: usize,
        label: usize,
        memo: &mut BTreeMap<(usize, usize, Word), NcPoly>,
    ) -> Result<NcPoly, TwistorError> {
        let key = (a, alpha, Word(vec![self.xgen(label), self.xgen(label), self.xgen(label)]));
        if let Some(hit) = memo.get(&key) {
            return Ok(hit.clone());
        }
        let xp = self.x_poly(label);
        let mut out = NcPoly::zero();
        for (w, c) in xp.terms() {
            let d = self.partial_word(a, alpha, w, memo)?;
            out.add_assign(&d.scale(c));
        }
        memo.insert(key, out.clone());
        Ok(out)
    }

    /// Verify the q-centrality of a composite pairing element against every
    /// family it must exchange with, before its inverse is postulated:
    /// flat against twistors and parameters, weight q^2 against
    /// differentials.
    pub fn verify_pairing_centrality(&self, xp: &NcPoly, label: usize) -> Result<(), TwistorError> {
        let check = |g: Gen, m: i64| -> Result<bool, TwistorError> {
            let gw = NcPoly::from_gen(g);
            let lhs = xp.mul(&gw);
            let rhs = gw.mul(xp).scale(&self.qp().q_pow(m));
            Ok(self.rs.reduces_to_zero(&lhs.sub(&rhs))?)
        };
        for al in 0..2 {
            for a in 0..4 {
                if !check(self.z(al, a), 0)? {
                    return Err(TwistorError::Engine(EngineError::NotCentral {
                        generator: format!("X[{}]", label + 1),
                        family: "z".into(),
                    }));
                }
                if !check(self.dz(al, a), 2)? {
                    return Err(TwistorError::Engine(EngineError::NotCentral {
                        generator: format!("X[{}]", label + 1),
                        family: "dz".into(),
                    }));
                }
            }
        }
        for j in 0..self.options.k_inst {
            for m in 0..6 {
                if !check(self.bgen(j, m), 0)? {
                    return Err(TwistorError::Engine(EngineError::NotCentral {
                        generator: format!("X[{}]", label + 1),
                        family: "b".into(),
                    }));
                }
            }
        }
        Ok(())
    }

    /// Re-verify that every structure relation reduces to zero under the
    /// compiled rules. Returns the number of relation polynomials checked.
    pub fn relation_soundness(&self) -> Result<usize, TwistorError> {
        let rels = structure_relations(
            &self.r2,
            &self.r4,
            &self.fams,
            self.rs.qparam(),
            &self.options,
        );
        let mut n = 0;
        for rel in &rels {
            if !self.rs.reduces_to_zero(rel)? {
                return Err(TwistorError::NotConfluent(usize::MAX));
            }
            n += 1;
        }
        Ok(n)
    }

    pub fn confluence(&self) -> Result<ConfluenceReport, EngineError> {
        check_local_confluence(&self.rs)
    }

    /// Residuals of the cubic twistor identity eps4 z z z for every free
    /// index assignment (2*2*2*4 polynomials).
    pub fn eq10_residuals(&self) -> Result<Vec<NcPoly>, EngineError> {
        let mut out = Vec::new();
        for a in 0..4 {
            for be in 0..2 {
                for mu in 0..2 {
                    for nu in 0..2 {
                        let mut p = NcPoly::zero();
                        for b in 0..4 {
                            for c in 0..4 {
                                for d in 0..4 {
                                    let e4 = self.eps4.tensor.get(&[a, b, c, d]);
                                    if e4.is_zero() {
                                        continue;
                                    }
                                    p.add_term(
                                        Word(vec![self.z(be, b), self.z(mu, c), self.z(nu, d)]),
                                        e4.clone(),
                                    );
                                }
                            }
                        }
                        out.push(self.rs.normal_form(&p)?);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// All structure relations for the configured sectors, as polynomials that
/// must vanish.
fn structure_relations(
    r2: &RMatrix,
    r4: &RMatrix,
    fams: &TwistorFams,
    _qp: &QParam,
    opt: &TwistorOptions,
) -> Vec<NcPoly> {
    let z = |al: usize, a: usize| Gen::new(fams.z, &[al, a]);
    let dz = |al: usize, a: usize| Gen::new(fams.dz, &[al, a]);
    let pd = |a: usize, al: usize| Gen::new(fams.pd, &[a, al]);
    let mut rels = Vec::new();

    // z z exchange: R2^{ab}_{mn} z^m_a z^n_b = z^a_c z^b_d R4^{dc}_{ba}
    for al in 0..2 {
        for be in 0..2 {
            for a in 0..4 {
                for b in 0..4 {
                    let mut rel = NcPoly::zero();
                    for mu in 0..2 {
                        for nu in 0..2 {
                            let c = r2.entry(al, be, mu, nu);
                            if !c.is_zero() {
                                rel.add_term(Word(vec![z(mu, a), z(nu, b)]), c.clone());
                            }
                        }
                    }
                    for cc in 0..4 {
                        for dd in 0..4 {
                            let c = r4.entry(dd, cc, b, a);
                            if !c.is_zero() {
                                rel.add_term(Word(vec![z(al, cc), z(be, dd)]), -c);
                            }
                        }
                    }
                    if !rel.is_zero() {
                        rels.push(rel);
                    }
                }
            }
        }
    }

    // z dz exchange: z^a_a dz^b_b = R2^{ab}_{mn} dz^m_c z^n_d R4^{dc}_{ba}
    for al in 0..2 {
        for be in 0..2 {
            for a in 0..4 {
                for b in 0..4 {
                    let mut rel = NcPoly::from_word(Word(vec![z(al, a), dz(be, b)]));
                    for mu in 0..2 {
                        for nu in 0..2 {
                            for cc in 0..4 {
                                for dd in 0..4 {
                                    let c = r2.entry(al, be, mu, nu) * r4.entry(dd, cc, b, a);
                                    if !c.is_zero() {
                                        rel.add_term(Word(vec![dz(mu, cc), z(nu, dd)]), -&c);
                                    }
                                }
                            }
                        }
                    }
                    rels.push(rel);
                }
            }
        }
    }

    // dz dz exchange: dz^a_a dz^b_b = - R2^{ab}_{mn} dz^m_c dz^n_d R4^{dc}_{ba}
    for al in 0..2 {
        for be in 0..2 {
            for a in 0..4 {
                for b in 0..4 {
                    let mut rel = NcPoly::from_word(Word(vec![dz(al, a), dz(be, b)]));
                    for mu in 0..2 {
                        for nu in 0..2 {
                            for cc in 0..4 {
                                for dd in 0..4 {
                                    let c = r2.entry(al, be, mu, nu) * r4.entry(dd, cc, b, a);
                                    if !c.is_zero() {
                                        rel.add_term(Word(vec![dz(mu, cc), dz(nu, dd)]), c);
                                    }
                                }
                            }
                        }
                    }
                    if !rel.is_zero() {
                        rels.push(rel);
                    }
                }
            }
        }
    }

    if opt.with_derivatives {
        // derivative exchange: R4^{ab}_{cd} pd^c_a pd^d_b = pd^a_m pd^b_n R2^{nm}_{ba}
        for a in 0..4 {
            for b in 0..4 {
                for al in 0..2 {
                    for be in 0..2 {
                        let mut rel = NcPoly::zero();
                        for cc in 0..4 {
                            for dd in 0..4 {
                                let c = r4.entry(a, b, cc, dd);
                                if !c.is_zero() {
                                    rel.add_term(Word(vec![pd(cc, al), pd(dd, be)]), c.clone());
                                }
                            }
                        }
                        for mu in 0..2 {
                            for nu in 0..2 {
                                let c = r2.entry(nu, mu, be, al);
                                if !c.is_zero() {
                                    rel.add_term(Word(vec![pd(a, mu), pd(b, nu)]), -c);
                                }
                            }
                        }
                        if !rel.is_zero() {
                            rels.push(rel);
                        }
                    }
                }
            }
        }

        // derivative on twistors:
        // pd^a_a z^b_b = delta^a_b delta_a^b + R2^{bm}_{an} R4^{da}_{cb} z^n_d pd^c_m
        for a in 0..4 {
            for al in 0..2 {
                for be in 0..2 {
                    for b in 0..4 {
                        let mut rel = NcPoly::from_word(Word(vec![pd(a, al), z(be, b)]));
                        if a == b && al == be {
                            rel.add_term(Word::one(), -&Scalar::one());
                        }
                        for mu in 0..2 {
                            for nu in 0..2 {
                                for cc in 0..4 {
                                    for dd in 0..4 {
                                        let c = r2.entry(be, mu, al, nu) * r4.entry(dd, a, cc, b);
                                        if !c.is_zero() {
                                            rel.add_term(Word(vec![z(nu, dd), pd(cc, mu)]), -&c);
                                        }
                                    }
                                }
                            }
                        }
                        rels.push(rel);
                    }
                }
            }
        }
    }

    rels
}

/// Mixed-sector exchanges and the parameter-sector relations. The
/// parameter/differential exchange mirrors the solved structure of the
/// twistor bilinears, scaled by q^w.
fn parameter_relations(
    fams: &TwistorFams,
    qp: &QParam,
    opt: &TwistorOptions,
    six_basis: &[Tensor<Scalar>],
    eps4: &Eps4Solve,
    dz_structure: &[Vec<Scalar>],
    bilinear_kernel: &[Vec<Scalar>],
) -> Vec<NcPoly> {
    let mut rels = Vec::new();
    let k = opt.k_inst;
    let nsix = six_basis.len();
    let zg = |al: usize, a: usize| Gen::new(fams.z, &[al, a]);
    let dzg = |al: usize, a: usize| Gen::new(fams.dz, &[al, a]);
    let pdg = |a: usize, al: usize| Gen::new(fams.pd, &[a, al]);
    let bg = |i: usize, m: usize| Gen::new(fams.b, &[i, m]);
    let xg = |i: usize| Gen::new(fams.x, &[i]);

    for i in 0..k {
        for m in 0..6 {
            // b z = q^w z b
            for al in 0..2 {
                for a in 0..4 {
                    let mut rel = NcPoly::from_word(Word(vec![bg(i, m), zg(al, a)]));
                    rel.add_term(
                        Word(vec![zg(al, a), bg(i, m)]),
                        -&qp.q_pow(opt.z_b_weight),
                    );
                    rels.push(rel);
                    if opt.with_derivatives {
                        // pd b = b pd (flat)
                        let mut rel = NcPoly::from_word(Word(vec![pdg(a, al), bg(i, m)]));
                        rel.add_term(Word(vec![bg(i, m), pdg(a, al)]), -&Scalar::one());
                        rels.push(rel);
                    }
                }
            }
            // b dz = (contragredient exchange) dz b
            for g in 0..2usize {
                for c in 0..4usize {
                    let mut rel = NcPoly::from_word(Word(vec![bg(i, m), dzg(g, c)]));
                    let row = m * 8 + g * 4 + c;
                    for gp in 0..2usize {
                        for cp in 0..4usize {
                            for mp in 0..nsix {
                                let col = (gp * 4 + cp) * nsix + mp;
                                let coeff = &dz_structure[row][col];
                                if !coeff.is_zero() {
                                    rel.add_term(
                                        Word(vec![dzg(gp, cp), bg(i, mp)]),
                                        -coeff,
                                    );
                                }
                            }
                        }
                    }
                    rels.push(rel);
                }
            }
            // components of distinct labels commute flat
            for j in 0..k {
                for n in 0..6 {
                    if j != i && (j, n) > (i, m) {
                        let mut rel = NcPoly::from_word(Word(vec![bg(j, n), bg(i, m)]));
                        rel.add_term(Word(vec![bg(i, m), bg(j, n)]), -&Scalar::one());
                        rels.push(rel);
                    }
                }
            }
        }

        match opt.b_model {
            ParameterModel::Free => {}
            ParameterModel::Flat => {
                for m in 0..6 {
                    for n in 0..m {
                        let mut rel = NcPoly::from_word(Word(vec![bg(i, m), bg(i, n)]));
                        rel.add_term(Word(vec![bg(i, n), bg(i, m)]), -&Scalar::one());
                        rels.push(rel);
                    }
                }
            }
            ParameterModel::BilinearMirror => {
                for v in bilinear_kernel {
                    let mut rel = NcPoly::zero();
                    for m in 0..6 {
                        for n in 0..6 {
                            let c = &v[m * 6 + n];
                            if !c.is_zero() {
                                rel.add_term(Word(vec![bg(i, m), bg(i, n)]), c.clone());
                            }
                        }
                    }
                    if !rel.is_zero() {
                        rels.push(rel);
                    }
                }
            }
        }

        if opt.with_isotropy && opt.b_model == ParameterModel::Flat {
            // (b, b) = 0: the eps4 pairing of the component tensor with itself.
            let mut quad = NcPoly::zero();
            for idx in IndexIter::new(vec![4; 4]) {
                let e4 = eps4.tensor.get(&idx);
                if e4.is_zero() {
                    continue;
                }
                for (m, em) in six_basis.iter().enumerate() {
                    for (n, en) in six_basis.iter().enumerate() {
                        let c = &(em.get(&[idx[0], idx[1]]) * en.get(&[idx[2], idx[3]])) * e4;
                        if !c.is_zero() {
                            quad.add_term(Word(vec![bg(i, m), bg(i, n)]), c);
                        }
                    }
                }
            }
            if !quad.is_zero() {
                rels.push(quad);
            }
        }

    }
    let _ = xg;
    rels
}

/// Coordinates of the twistor bilinear in the projected basis: six word
/// polynomials yhat_m with y_{ab} = sum_m E_m[ab] yhat_m.
fn y_coordinates(
    rs: &RewriteSystem,
    fams: &TwistorFams,
    eps: &EpsilonPair,
    six_basis: &[Tensor<Scalar>],
) -> Result<Vec<NcPoly>, TwistorError> {
    // Gram matrix of the basis under the plain entrywise pairing.
    let n = six_basis.len();
    let mut gram = vec![vec![Scalar::zero(); n]; n];
    for (m, em) in six_basis.iter().enumerate() {
        for (k, ek) in six_basis.iter().enumerate() {
            let mut acc = Scalar::zero();
            for a in 0..4 {
                for b in 0..4 {
                    acc += &(em.get(&[a, b]) * ek.get(&[a, b]));
                }
            }
            gram[m][k] = acc;
        }
    }
    let gram_inv = crate::linalg::invert(&gram)
        .ok_or(TwistorError::SixVectorDim(n))?;
    let z = |al: usize, a: usize| Gen::new(fams.z, &[al, a]);
    let mut coords = Vec::with_capacity(n);
    for m in 0..n {
        let mut p = NcPoly::zero();
        for k in 0..n {
            let w = &gram_inv[m][k];
            if w.is_zero() {
                continue;
            }
            for a in 0..4 {
                for b in 0..4 {
                    let e = six_basis[k].get(&[a, b]);
                    if e.is_zero() {
                        continue;
                    }
                    for al in 0..2 {
                        for be in 0..2 {
                            let c = eps.eps_down.get(&[al, be]);
                            if c.is_zero() {
                                continue;
                            }
                            p.add_term(Word(vec![z(al, a), z(be, b)]), &(e * c) * w);
                        }
                    }
                }
            }
        }
        coords.push(rs.normal_form(&p)?);
    }
    Ok(coords)
}

/// The exchange structure of the bilinear coordinates past a differential:
/// yhat_m dz^g_c = sum S[(m,g,c),(g',c',m')] dz^{g'}_{c'} yhat_{m'}.
/// Solved from the compiled core system; `None` when the normal forms do not
/// lie in the required span (which would falsify the structured ansatz).
fn y_dz_structure(
    rs: &RewriteSystem,
    fams: &TwistorFams,
    coords: &[NcPoly],
) -> Result<Option<Vec<Vec<Scalar>>>, TwistorError> {
    let nsix = coords.len();
    let dzg = |al: usize, a: usize| Gen::new(fams.dz, &[al, a]);
    let dim = nsix * 8;
    // Right-side basis: NF(dz^{g'}_{c'} yhat_{m'}).
    let mut rhs_basis: Vec<NcPoly> = Vec::with_capacity(dim);
    for g in 0..2 {
        for c in 0..4 {
            for m in 0..nsix {
                let p = NcPoly::from_gen(dzg(g, c)).mul(&coords[m]);
                rhs_basis.push(rs.normal_form(&p)?);
            }
        }
    }
    // Collect the joint word support.
    let mut support: std::collections::BTreeSet<Word> = std::collections::BTreeSet::new();
    for p in &rhs_basis {
        support.extend(p.terms().map(|(w, _)| w.clone()));
    }
    let mut lhs_all: Vec<NcPoly> = Vec::with_capacity(dim);
    for m in 0..nsix {
        for g in 0..2 {
            for c in 0..4 {
                let p = coords[m].mul(&NcPoly::from_gen(dzg(g, c)));
                let nf = rs.normal_form(&p)?;
                support.extend(nf.terms().map(|(w, _)| w.clone()));
                lhs_all.push(nf);
            }
        }
    }
    let support: Vec<Word> = support.into_iter().collect();
    // Solve rhs_basis * x = lhs for each left side, all at once.
    let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(support.len());
    for w in &support {
        let mut row: Vec<Scalar> = rhs_basis.iter().map(|p| p.coeff(w)).collect();
        row.extend(lhs_all.iter().map(|p| p.coeff(w)));
        rows.push(row);
    }
    let pivots = crate::linalg::rref(&mut rows);
    // Any pivot beyond the basis columns means some left side is outside
    // the span.
    if pivots.iter().any(|&p| p >= dim) {
        return Ok(None);
    }
    let mut structure = vec![vec![Scalar::zero(); dim]; dim];
    for (ri, &pc) in pivots.iter().enumerate() {
        for (li, srow) in structure.iter_mut().enumerate() {
            srow[pc] = rows[ri][dim + li].clone();
        }
    }
    Ok(Some(structure))
}

/// Coordinates of the twistor bilinear for an already-built system.
pub fn twistor_bilinear_coordinates(sys: &TwistorSystem) -> Result<Vec<NcPoly>, TwistorError> {
    y_coordinates(&sys.rs, &sys.fams, &sys.eps, &sys.six_basis)
}

/// The pairing matrix of the projected basis under the rank-4 epsilon:
/// P[m][n] = eps4^{abcd} E_m[ab] E_n[cd].
fn pairing_matrix(eps4: &Eps4Solve, six_basis: &[Tensor<Scalar>]) -> Vec<Vec<Scalar>> {
    let n = six_basis.len();
    let mut p = vec![vec![Scalar::zero(); n]; n];
    for idx in IndexIter::new(vec![4; 4]) {
        let e = eps4.tensor.get(&idx);
        if e.is_zero() {
            continue;
        }
        for (m, em) in six_basis.iter().enumerate() {
            for (k, ek) in six_basis.iter().enumerate() {
                let c = &(em.get(&[idx[0], idx[1]]) * ek.get(&[idx[2], idx[3]])) * e;
                if !c.is_zero() {
                    p[m][k] = &p[m][k] + &c;
                }
            }
        }
    }
    p
}

/// Derive the parameter/differential exchange tensor from the requirement
/// that the pairing element scales by q^w past a differential: with the
/// bilinear exchange structure S and pairing P, the unique solution of
/// sum P T S = q^w delta P. Layout: rows n*8 + (g*4+c), columns
/// (g'*4+c')*6 + n'.
fn contragredient_exchange(
    structure: &[Vec<Scalar>],
    pairing: &[Vec<Scalar>],
    qp: &QParam,
    w: i64,
) -> Option<Vec<Vec<Scalar>>> {
    let nsix = pairing.len();
    let dim = nsix * 8;
    let a_inv = crate::linalg::invert(structure)?;
    let p_inv = crate::linalg::invert(pairing)?;
    let qw = qp.q_pow(w);
    // B[(gc,n'),(g''c'',m')] = q^w delta P[m'][n']
    let mut b = vec![vec![Scalar::zero(); dim]; dim];
    for gc in 0..8 {
        for npr in 0..nsix {
            for mpr in 0..nsix {
                b[gc * nsix + npr][gc * nsix + mpr] = &pairing[mpr][npr] * &qw;
            }
        }
    }
    // V = B * A^-1, rows (gc,n'), cols (m, g'c')
    let mut v = vec![vec![Scalar::zero(); dim]; dim];
    for r in 0..dim {
        for c in 0..dim {
            let mut acc = Scalar::zero();
            for k in 0..dim {
                if !b[r][k].is_zero() && !a_inv[k][c].is_zero() {
                    acc += &(&b[r][k] * &a_inv[k][c]);
                }
            }
            v[r][c] = acc;
        }
    }
    // T[(n,gc),(g'c',n')] = sum_m Pinv[n][m] V[(gc,n')][(m,g'c')]
    let mut t = vec![vec![Scalar::zero(); dim]; dim];
    for n in 0..nsix {
        for gc in 0..8 {
            for gcp in 0..8 {
                for npr in 0..nsix {
                    let mut acc = Scalar::zero();
                    for m in 0..nsix {
                        let ve = &v[gc * nsix + npr][m * 8 + gcp];
                        if !ve.is_zero() && !p_inv[n][m].is_zero() {
                            acc += &(&p_inv[n][m] * ve);
                        }
                    }
                    t[n * 8 + gc][gcp * nsix + npr] = acc;
                }
            }
        }
    }
    Some(t)
}

/// Compute the basis of the projected 6-vector subspace
/// { T : T_{ab} = Pminus^{dc}_{ba} T_{cd} }.
fn six_vector_basis(p_minus: &Tensor<Scalar>) -> Result<Vec<Tensor<Scalar>>, TwistorError> {
    let mut rows = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            let mut row = vec![Scalar::zero(); 16];
            row[4 * a + b] = Scalar::one();
            for c in 0..4 {
                for d in 0..4 {
                    let coeff = p_minus.get(&[d, c, b, a]);
                    if !coeff.is_zero() {
                        row[4 * c + d] = &row[4 * c + d] - coeff;
                    }
                }
            }
            rows.push(row);
        }
    }
    let ns = crate::linalg::nullspace(rows, 16);
    if ns.len() != 6 {
        return Err(TwistorError::SixVectorDim(ns.len()));
    }
    let latin = IndexSpace::new("conf", 4);
    let mut out = Vec::new();
    for v in ns {
        let mut t = Tensor::zeros(vec![
            crate::tensor::down(&latin),
            crate::tensor::down(&latin),
        ]);
        for a in 0..4 {
            for b in 0..4 {
                t.set(&[a, b], v[4 * a + b].clone());
            }
        }
        out.push(t);
    }
    Ok(out)
}

/// Build the full twistor system with the given options.
pub fn build_twistor_system(
    qp: &QParam,
    options: TwistorOptions,
) -> Result<TwistorSystem, TwistorError> {
    let greek = IndexSpace::new("spin", 2);
    let latin = IndexSpace::new("conf", 4);
    let inst = IndexSpace::new("inst", options.k_inst.max(1));
    let six = IndexSpace::new("six", 6);

    let r2 = build_slq2_rmatrix(&greek, qp);
    let r4 = build_glq_rmatrix(&latin, qp);
    let eps = build_epsilon_pair(&greek, qp);
    let eps4 = build_q_epsilon4(&r4, options.eps4_reading, qp)?;
    let (p_plus, p_minus) = projectors(&r4, qp);
    let six_basis = six_vector_basis(&p_minus)?;

    let mut reg = Registry::new();
    let z = reg.add_family("z", vec![greek.clone(), latin.clone()], 0, DiffImage::Undeclared);
    let b = reg.add_family("b", vec![inst.clone(), six.clone()], 0, DiffImage::Zero);
    let x = reg.add_family("X", vec![inst.clone()], 0, DiffImage::Explicit);
    let xinv = reg.add_family("Xi", vec![inst.clone()], 0, DiffImage::Explicit);
    let dz = reg.add_family("dz", vec![greek.clone(), latin.clone()], 1, DiffImage::Zero);
    let pd = reg.add_family("pd", vec![latin.clone(), greek.clone()], 0, DiffImage::Undeclared);
    reg.set_family_diff(z, DiffImage::Family(dz));
    let fams = TwistorFams { z, b, x, xinv, dz, pd };

    let rels = structure_relations(&r2, &r4, &fams, qp, &options);
    let mut rs = compile_rules(Arc::new(reg), qp, &rels)?;
    if options.k_inst > 0 {
        let coords = y_coordinates(&rs, &fams, &eps, &six_basis)?;
        let structure = y_dz_structure(&rs, &fams, &coords)?
            .ok_or(TwistorError::SixVectorDim(0))?;
        let pairing = pairing_matrix(&eps4, &six_basis);
        let exchange =
            contragredient_exchange(&structure, &pairing, qp, options.dz_b_weight)
                .ok_or(TwistorError::SixVectorDim(0))?;
        let kernel = if options.b_model == ParameterModel::BilinearMirror {
            let mut prods = Vec::new();
            for m in 0..6 {
                for n in 0..6 {
                    prods.push(rs.normal_form(&coords[m].mul(&coords[n]))?);
                }
            }
            let mut support: std::collections::BTreeSet<Word> = Default::default();
            for p in &prods {
                support.extend(p.terms().map(|(w, _)| w.clone()));
            }
            let rows: Vec<Vec<Scalar>> = support
                .iter()
                .map(|w| prods.iter().map(|p| p.coeff(w)).collect())
                .collect();
            crate::linalg::nullspace(rows, 36)
        } else {
            Vec::new()
        };
        let prels =
            parameter_relations(&fams, qp, &options, &six_basis, &eps4, &exchange, &kernel);
        extend_rules(&mut rs, &prels)?;
    }

    let mut sys = TwistorSystem {
        rs,
        fams,
        greek,
        latin,
        r2,
        r4,
        eps,
        eps4,
        p_plus,
        p_minus,
        six_basis,
        options,
        eq10_adjoined: false,
        xinv_partial_twist: 0,
    };

    // The cubic twistor identity: test derivability; adjoin when needed.
    {
        let residuals = sys.eq10_residuals()?;
        if residuals.iter().any(|p| !p.is_zero()) {
            let nonzero: Vec<NcPoly> =
                residuals.into_iter().filter(|p| !p.is_zero()).collect();
            extend_rules(&mut sys.rs, &nonzero)?;
            sys.eq10_adjoined = true;
        }
    }

    // Adjoin the inverse of each composite pairing element: verify its
    // q-centrality against every zero-form family and the differential
    // weight first, then install the exchange table and the link rules
    // X_poly Xinv = 1.
    if sys.options.k_inst > 0 {
        for i in 0..sys.options.k_inst {
            let xp = sys.rs.normal_form(&sys.x_poly(i))?;
            if sys.options.b_model != ParameterModel::Free {
                sys.verify_pairing_centrality(&xp, i)?;
            }
            let xi = sys.xinv(i);
            // exchange table: flat over z and the parameters, q^2 against dz
            let mut table_rels: Vec<NcPoly> = Vec::new();
            for al in 0..2 {
                for a in 0..4 {
                    let zg = sys.z(al, a);
                    let mut rel = NcPoly::from_word(Word(vec![xi, zg]));
                    rel.add_term(Word(vec![zg, xi]), -&Scalar::one());
                    table_rels.push(rel);
                    let dzg = sys.dz(al, a);
                    let mut rel = NcPoly::from_word(Word(vec![dzg, xi]));
                    rel.add_term(Word(vec![xi, dzg]), -&qp.q_pow(2));
                    table_rels.push(rel);
                }
            }
            for j in 0..sys.options.k_inst {
                for m in 0..6 {
                    let bg = sys.bgen(j, m);
                    let mut rel = NcPoly::from_word(Word(vec![xi, bg]));
                    rel.add_term(Word(vec![bg, xi]), -&Scalar::one());
                    table_rels.push(rel);
                }
            }
            for j in 0..i {
                let lo = sys.xinv(j);
                let mut rel = NcPoly::from_word(Word(vec![xi, lo]));
                rel.add_term(Word(vec![lo, xi]), -&Scalar::one());
                table_rels.push(rel);
            }
            extend_rules(&mut sys.rs, &table_rels)?;
            // link rules: the composite times its inverse is the unit
            let xiw = NcPoly::from_gen(xi);
            let link1 = xp.mul(&xiw).sub(&NcPoly::one());
            let link2 = xiw.mul(&xp).sub(&NcPoly::one());
            crate::ncengine::extend_rules_permissive(&mut sys.rs, &[link1, link2])?;
        }
        // declare the explicit differential images now that labels exist
        let mut reg2 = sys.rs.registry().clone();
        for i in 0..sys.options.k_inst {
            let dx = crate::ncengine::exterior_d(sys.rs.registry(), &sys.x_poly(i))
                .map_err(TwistorError::Engine)?;
            reg2.set_explicit_diff(sys.xgen(i), dx.clone());
            // d(Xinv) = -q^-2 dX Xinv^2
            let xi = sys.xinv(i);
            let dxinv = dx
                .mul(&NcPoly::from_word(Word(vec![xi, xi])))
                .scale(&-&qp.q_pow(-2));
            reg2.set_explicit_diff(xi, dxinv);
        }
        sys.rs = sys.rs.with_registry(Arc::new(reg2));
    }

    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn base_opts() -> TwistorOptions {
        TwistorOptions { k_inst: 0, with_derivatives: true, ..Default::default() }
    }

    #[test]
    fn twistor_core_compiles_and_is_sound() {
        let sys = build_twistor_system(&QParam::generic(), base_opts()).unwrap();
        assert!(sys.relation_soundness().unwrap() > 0);
    }

    #[test]
    fn z_sector_rule_count_matches_pbw() {
        // The z z relation span must have rank 28, leaving 36 irreducible
        // words: the symmetric-type quadratic count C(8,2) + 8 for eight
        // generators.
        let sys = build_twistor_system(&QParam::generic(), base_opts()).unwrap();
        let zz_rules = sys
            .rs
            .rules()
            .filter(|(l, _)| {
                l.len() == 2 && l.0.iter().all(|g| g.fam == sys.fams.z)
            })
            .count();
        assert_eq!(zz_rules, 28);
    }

    #[test]
    fn classical_limit_core() {
        let sys = build_twistor_system(&QParam::at(rat(1, 1)), base_opts()).unwrap();
        assert!(sys.relation_soundness().unwrap() > 0);
        // all z z rules reduce to plain transposition at q = 1
        for (lhs, rhs) in sys.rs.rules() {
            if lhs.len() == 2
                && lhs.0.iter().all(|g| g.fam == sys.fams.z)
                && rhs.num_terms() == 1
            {
                let (_, c) = rhs.terms().next().unwrap();
                assert_eq!(c, &Scalar::one());
            }
        }
    }

    #[test]
    fn derivative_of_twistor_letter() {
        let sys = build_twistor_system(&QParam::generic(), base_opts()).unwrap();
        // pd^a_alpha applied to z^beta_b gives the Kronecker pair.
        for a in 0..4 {
            for al in 0..2 {
                for be in 0..2 {
                    for b in 0..4 {
                        let p = NcPoly::from_gen(sys.z(be, b));
                        let d = sys.apply_partial(a, al, &p).unwrap();
                        if a == b && al == be {
                            assert_eq!(d, NcPoly::one());
                        } else {
                            assert!(d.is_zero());
                        }
                    }
                }
            }
        }
        // and the derivative of the unit vanishes
        assert!(sys.apply_partial(0, 0, &NcPoly::one()).unwrap().is_zero());
    }
}
