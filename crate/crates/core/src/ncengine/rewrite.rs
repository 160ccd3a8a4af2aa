//! The directed rewrite system and its reduction loop.
//!
//! Rules map a leading word to a strictly smaller polynomial, so reduction
//! terminates; a global step bound guards against presentation bugs and
//! fails loudly instead of spinning.

use super::word::{Gen, NcPoly, Registry, RegistryRef, Word};
use crate::scalar::{QParam, Scalar};
use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub const DEFAULT_STEP_BOUND: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub enum EngineError {
    /// Reduction exceeded the step bound; carries the number of steps taken.
    StepBound(u64),
    /// A rule would not terminate (right side not strictly smaller).
    NonDecreasingRule(String),
    /// q-centrality verification failed for the named family.
    NotCentral { generator: String, family: String },
    /// The differential is not declared for a family.
    UndeclaredDifferential(String),
}

impl fmt::Display for EngineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineError::StepBound(n) => write!(f, "reduction exceeded step bound after {} steps", n),
            EngineError::NonDecreasingRule(w) => write!(f, "rule with non-decreasing right side at {}", w),
            EngineError::NotCentral { generator, family } => {
                write!(f, "{} is not q-central against family {}", generator, family)
            }
            EngineError::UndeclaredDifferential(fam) => {
                write!(f, "family {} has no declared differential", fam)
            }
        }
    }
}

impl std::error::Error for EngineError {}

/// Reduction strategy; normal forms agree across strategies exactly when the
/// system is locally confluent, which the confluence checker verifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    LeftmostShortest,
    RightmostShortest,
}

#[derive(Clone)]
pub struct RewriteSystem {
    registry: RegistryRef,
    qp: QParam,
    rules: BTreeMap<Word, NcPoly>,
    by_first: HashMap<Gen, Vec<Word>>,
    max_lhs_len: usize,
    pub step_bound: u64,
}

impl RewriteSystem {
    pub fn new(registry: RegistryRef, qp: QParam) -> Self {
        RewriteSystem {
            registry,
            qp,
            rules: BTreeMap::new(),
            by_first: HashMap::new(),
            max_lhs_len: 0,
            step_bound: DEFAULT_STEP_BOUND,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn registry_ref(&self) -> RegistryRef {
        self.registry.clone()
    }

    pub fn qparam(&self) -> &QParam {
        &self.qp
    }

    /// Swap in an updated registry (e.g. with freshly declared differential
    /// images). Family ids must be unchanged.
    pub fn with_registry(mut self, registry: RegistryRef) -> Self {
        assert_eq!(
            registry.families().len(),
            self.registry.families().len(),
            "registry shape changed"
        );
        self.registry = registry;
        self
    }

    pub fn rules(&self) -> impl Iterator<Item = (&Word, &NcPoly)> {
        self.rules.iter()
    }

    pub fn num_rules(&self) -> usize {
        self.rules.len()
    }

    pub fn rule_for(&self, lhs: &Word) -> Option<&NcPoly> {
        self.rules.get(lhs)
    }

    /// Install a rule. The right side must precede the left side strictly in
    /// the monomial order on every term.
    pub fn add_rule(&mut self, lhs: Word, rhs: NcPoly) -> Result<(), EngineError> {
        for (w, _) in rhs.terms() {
            if w >= &lhs {
                return Err(EngineError::NonDecreasingRule(
                    self.registry.render_word(&lhs),
                ));
            }
        }
        let first = lhs.0[0];
        self.by_first.entry(first).or_default().push(lhs.clone());
        self.max_lhs_len = self.max_lhs_len.max(lhs.len());
        self.rules.insert(lhs, rhs);
        Ok(())
    }

    pub fn remove_rule(&mut self, lhs: &Word) -> Option<NcPoly> {
        let rhs = self.rules.remove(lhs)?;
        if let Some(v) = self.by_first.get_mut(&lhs.0[0]) {
            v.retain(|w| w != lhs);
        }
        Some(rhs)
    }

    /// Find a redex in `w`: scan positions (left to right or right to left),
    /// and at each position prefer the shortest matching rule.
    fn find_redex(&self, w: &Word, strategy: Strategy) -> Option<(usize, Word)> {
        let positions: Vec<usize> = match strategy {
            Strategy::LeftmostShortest => (0..w.len()).collect(),
            Strategy::RightmostShortest => (0..w.len()).rev().collect(),
        };
        for pos in positions {
            let Some(candidates) = self.by_first.get(&w.0[pos]) else {
                continue;
            };
            let mut best: Option<&Word> = None;
            for lhs in candidates {
                if lhs.len() <= w.len() - pos && w.0[pos..pos + lhs.len()] == lhs.0[..] {
                    match best {
                        Some(b) if b.len() <= lhs.len() => {}
                        _ => best = Some(lhs),
                    }
                }
            }
            if let Some(lhs) = best {
                return Some((pos, lhs.clone()));
            }
        }
        None
    }

    pub fn is_irreducible(&self, w: &Word) -> bool {
        self.find_redex(w, Strategy::LeftmostShortest).is_none()
    }

    /// Reduce to normal form with the default strategy.
    pub fn normal_form(&self, p: &NcPoly) -> Result<NcPoly, EngineError> {
        self.normal_form_with(p, Strategy::LeftmostShortest)
    }

    pub fn normal_form_with(&self, p: &NcPoly, strategy: Strategy) -> Result<NcPoly, EngineError> {
        let mut out = NcPoly::zero();
        let mut pending: BTreeMap<Word, Scalar> = BTreeMap::new();
        for (w, c) in p.terms() {
            merge_term(&mut pending, w.clone(), c.clone());
        }
        let mut steps: u64 = 0;
        // Process largest words first so cancellations happen before their
        // reducts fan out.
        while let Some((w, c)) = pending.pop_last() {
            if c.is_zero() {
                continue;
            }
            match self.find_redex(&w, strategy) {
                None => {
                    out.add_term(w, c);
                }
                Some((pos, lhs)) => {
                    steps += 1;
                    if steps > self.step_bound {
                        return Err(EngineError::StepBound(steps));
                    }
                    let rhs = &self.rules[&lhs];
                    let prefix = &w.0[..pos];
                    let suffix = &w.0[pos + lhs.len()..];
                    for (rw, rc) in rhs.terms() {
                        let mut v = Vec::with_capacity(prefix.len() + rw.len() + suffix.len());
                        v.extend_from_slice(prefix);
                        v.extend_from_slice(&rw.0);
                        v.extend_from_slice(suffix);
                        merge_term(&mut pending, Word(v), &c * rc);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Reduce and assert the result is zero; for soundness checks.
    pub fn reduces_to_zero(&self, p: &NcPoly) -> Result<bool, EngineError> {
        Ok(self.normal_form(p)?.is_zero())
    }

    /// Adjoin an inverse for a single generator `x` that is q-central:
    /// for every family `f` in `weights`, `x g = q^{m_f} g x` must already
    /// reduce to zero. Emits `x x^-1 -> 1`, `x^-1 x -> 1` and the exchange
    /// rules for `x^-1`, oriented by the monomial order.
    ///
    /// `inv_fam` must be a registered family with the same arity as `x`'s
    /// family; `skip` lists families exempt from verification (typically the
    /// inverse family itself and generators never mixing with `x`).
    pub fn adjoin_inverse(
        &mut self,
        x: Gen,
        inv_fam: u8,
        weights: &BTreeMap<u8, i64>,
    ) -> Result<(), EngineError> {
        // Verify the declared q-centrality before postulating anything.
        for (&fam, &m) in weights {
            for g in self.registry.gens_of(fam) {
                let xg = NcPoly::from_word(Word(vec![x, g]));
                let gx = NcPoly::from_word(Word(vec![g, x])).scale(&self.qp.q_pow(m));
                if !self.reduces_to_zero(&xg.sub(&gx))? {
                    return Err(EngineError::NotCentral {
                        generator: self.registry.render_gen(&x),
                        family: self.registry.family(fam).name.clone(),
                    });
                }
            }
        }
        let arity = self.registry.family(x.fam).arity();
        let idx: Vec<usize> = x.idx[..arity].iter().map(|&v| v as usize).collect();
        let xi = Gen::new(inv_fam, &idx);
        self.add_rule(Word(vec![x, xi]), NcPoly::one())?;
        self.add_rule(Word(vec![xi, x]), NcPoly::one())?;
        for (&fam, &m) in weights {
            for g in self.registry.gens_of(fam) {
                // x g = q^m g x  =>  x^-1 g = q^-m g x^-1
                let (lhs, rhs_word, wexp) = if (inv_fam, xi.idx) > (g.fam, g.idx) {
                    (Word(vec![xi, g]), Word(vec![g, xi]), -m)
                } else {
                    (Word(vec![g, xi]), Word(vec![xi, g]), m)
                };
                let rhs = NcPoly::from_term(rhs_word, self.qp.q_pow(wexp));
                self.add_rule(lhs, rhs)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn merge_term(map: &mut BTreeMap<Word, Scalar>, w: Word, c: Scalar) {
    if c.is_zero() {
        return;
    }
    match map.entry(w) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let sum = &*o.get() + &c;
            if sum.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = sum;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::IndexSpace;
    use std::sync::Arc;

    fn quantum_plane() -> RewriteSystem {
        // Two generators x < y with y x -> q^-1 x y.
        let mut reg = Registry::new();
        let pt = IndexSpace::new("pt", 1);
        let fx = reg.add_family("x", vec![pt.clone()], 0, super::super::word::DiffImage::Undeclared);
        let fy = reg.add_family("y", vec![pt], 0, super::super::word::DiffImage::Undeclared);
        let mut rs = RewriteSystem::new(Arc::new(reg), QParam::generic());
        let x = Gen::new(fx, &[0]);
        let y = Gen::new(fy, &[0]);
        rs.add_rule(
            Word(vec![y, x]),
            NcPoly::from_term(Word(vec![x, y]), Scalar::q_pow(-1)),
        )
        .unwrap();
        rs
    }

    #[test]
    fn quantum_plane_normal_form() {
        let rs = quantum_plane();
        let reg = rs.registry();
        let x = Gen::new(reg.family_id("x").unwrap(), &[0]);
        let y = Gen::new(reg.family_id("y").unwrap(), &[0]);
        // y y x x -> q^-4 x x y y  (two letters each crossing two)
        let p = NcPoly::from_word(Word(vec![y, y, x, x]));
        let nf = rs.normal_form(&p).unwrap();
        let want = NcPoly::from_term(Word(vec![x, x, y, y]), Scalar::q_pow(-4));
        assert_eq!(nf, want);
        // already irreducible word stays put
        let irr = NcPoly::from_word(Word(vec![x, y]));
        assert_eq!(rs.normal_form(&irr).unwrap(), irr);
    }

    #[test]
    fn strategies_agree_on_confluent_system() {
        let rs = quantum_plane();
        let reg = rs.registry();
        let x = Gen::new(reg.family_id("x").unwrap(), &[0]);
        let y = Gen::new(reg.family_id("y").unwrap(), &[0]);
        let p = NcPoly::from_word(Word(vec![y, x, y, x, y]));
        let a = rs.normal_form_with(&p, Strategy::LeftmostShortest).unwrap();
        let b = rs.normal_form_with(&p, Strategy::RightmostShortest).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_decreasing_rule_rejected() {
        let mut rs = quantum_plane();
        let reg = rs.registry();
        let x = Gen::new(reg.family_id("x").unwrap(), &[0]);
        let y = Gen::new(reg.family_id("y").unwrap(), &[0]);
        let err = rs.add_rule(
            Word(vec![x, y]),
            NcPoly::from_word(Word(vec![y, x])),
        );
        assert!(err.is_err());
    }

    #[test]
    fn step_bound_fails_loudly() {
        let mut rs = quantum_plane();
        rs.step_bound = 3;
        let reg = rs.registry();
        let x = Gen::new(reg.family_id("x").unwrap(), &[0]);
        let y = Gen::new(reg.family_id("y").unwrap(), &[0]);
        let p = NcPoly::from_word(Word(vec![y, y, y, x, x, x]));
        assert!(matches!(rs.normal_form(&p), Err(EngineError::StepBound(_))));
    }
}
