//! Relation compiler: Gaussian elimination over the scalar fraction field on
//! the span of input relations, solving each pivot for its order-maximal
//! word, followed by inter-reduction so no rule's left side contains another
//! rule's left side as a subword.

use super::rewrite::{EngineError, RewriteSystem};
use super::word::{NcPoly, RegistryRef, Word};
use crate::scalar::{LaurentScalar, QParam, Scalar};
use std::fmt;

#[derive(Debug, Clone)]
pub enum CompileError {
    /// A pivot whose coefficient is not a unit monomial times a power of
    /// (q + q^-1); elimination over the fraction field cannot produce this,
    /// so seeing it means the relation set left the supported coefficient
    /// class.
    NonInvertiblePivot(String),
    Engine(EngineError),
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileError::NonInvertiblePivot(w) => write!(f, "non-invertible pivot at {}", w),
            CompileError::Engine(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for CompileError {}

impl From<EngineError> for CompileError {
    fn from(e: EngineError) -> Self {
        CompileError::Engine(e)
    }
}

/// A coefficient is admissible when its denominator is a power of
/// (1 + q^2) after canonical normalization, i.e. a unit times a
/// (q + q^-1)-power in Laurent form.
pub fn admissible_coefficient(s: &Scalar) -> bool {
    let mut den = s.denom().clone();
    let qq = LaurentScalar::from_int(1) + LaurentScalar::q_pow(2);
    for _ in 0..64 {
        if den.is_one() {
            return true;
        }
        // exact division test: den = qq * t ?
        let trial = try_div(&den, &qq);
        match trial {
            Some(t) => den = t,
            None => return false,
        }
    }
    false
}

fn try_div(a: &LaurentScalar, b: &LaurentScalar) -> Option<LaurentScalar> {
    if a.is_zero() {
        return Some(LaurentScalar::zero());
    }
    // long division; succeed only when the remainder vanishes
    let sa = a.min_exp().unwrap();
    let sb = b.min_exp().unwrap();
    let mut r = a.shift(-sa);
    let bb = b.shift(-sb);
    let db = bb.max_exp().unwrap();
    let lb = bb.coeff(db);
    let mut quo = LaurentScalar::zero();
    while !r.is_zero() && r.max_exp().unwrap() >= db && r.max_exp().unwrap() >= 0 {
        let dr = r.max_exp().unwrap();
        if dr < db {
            break;
        }
        let factor = LaurentScalar::monomial(r.coeff(dr) / lb.clone(), dr - db);
        r -= &(&factor * &bb);
        quo += &factor;
    }
    if r.is_zero() {
        Some(quo.shift(sa - sb))
    } else {
        None
    }
}

/// Eliminate the relation span and install the resulting rules into a fresh
/// system over the given registry.
pub fn compile_rules(
    registry: RegistryRef,
    qp: &QParam,
    relations: &[NcPoly],
) -> Result<RewriteSystem, CompileError> {
    let mut rs = RewriteSystem::new(registry, qp.clone());
    extend_rules(&mut rs, relations)?;
    Ok(rs)
}

/// Add more relations to an existing system (used by builders that assemble
/// a presentation in stages), re-establishing inter-reduction.
pub fn extend_rules(rs: &mut RewriteSystem, relations: &[NcPoly]) -> Result<(), CompileError> {
    extend_rules_with(rs, relations, true)
}

/// Like `extend_rules` but without the pivot-coefficient class check; used
/// when installing derived closure elements, whose pivots may live anywhere
/// in the fraction field.
pub fn extend_rules_permissive(
    rs: &mut RewriteSystem,
    relations: &[NcPoly],
) -> Result<(), CompileError> {
    extend_rules_with(rs, relations, false)
}

fn extend_rules_with(
    rs: &mut RewriteSystem,
    relations: &[NcPoly],
    strict: bool,
) -> Result<(), CompileError> {
    // Reduce the incoming relations by whatever is already installed.
    let mut pending: Vec<NcPoly> = Vec::new();
    for rel in relations {
        let nf = rs.normal_form(rel)?;
        if !nf.is_zero() {
            pending.push(nf);
        }
    }
    if pending.is_empty() {
        return Ok(());
    }

    // Joint elimination: repeatedly take the relation with the greatest
    // leading word, normalize, and eliminate that word from the rest.
    let mut reduced: Vec<NcPoly> = Vec::new();
    while !pending.is_empty() {
        // pick relation with the maximal leading word
        let (best, _) = pending
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.leading_word().cmp(&b.leading_word()))
            .map(|(i, p)| (i, p.clone()))
            .unwrap();
        let rel = pending.swap_remove(best);
        if rel.is_zero() {
            continue;
        }
        let lead = rel.leading_word().unwrap().clone();
        let lc = rel.coeff(&lead);
        let normalized = rel.scale(&lc.recip());
        for other in pending.iter_mut() {
            let c = other.coeff(&lead);
            if !c.is_zero() {
                other.sub_assign(&normalized.scale(&c));
            }
        }
        pending.retain(|p| !p.is_zero());
        reduced.push(normalized);
    }

    // Back-substitute so no rule's right side mentions another pivot.
    for i in 0..reduced.len() {
        let mut cur = reduced[i].clone();
        for j in 0..reduced.len() {
            if i == j {
                continue;
            }
            let lw = reduced[j].leading_word().unwrap().clone();
            let c = cur.coeff(&lw);
            if !c.is_zero() && reduced[i].leading_word() != Some(&lw) {
                let scaled = reduced[j].scale(&c);
                cur.sub_assign(&scaled);
            }
        }
        reduced[i] = cur;
    }

    // Install as rules: pivot -> -(rest).
    for rel in &reduced {
        let Some(lead) = rel.leading_word().cloned() else {
            continue;
        };
        let mut rhs = rel.neg();
        rhs.add_term(lead.clone(), Scalar::one());
        if strict {
            for (_, c) in rhs.terms() {
                if !admissible_coefficient(c) {
                    return Err(CompileError::NonInvertiblePivot(
                        rs.registry().render_word(&lead),
                    ));
                }
            }
        }
        rs.add_rule(lead, rhs)?;
    }

    inter_reduce(rs)?;
    Ok(())
}

/// Repeatedly (a) re-express rules whose left side contains another rule's
/// left side as a proper subword, and (b) reduce every rule's right side to
/// normal form. Stops at a fixpoint.
fn inter_reduce(rs: &mut RewriteSystem) -> Result<(), CompileError> {
    for _round in 0..64 {
        let mut changed = false;

        // (a) left sides must be irreducible with respect to the *other* rules
        let lhss: Vec<Word> = rs.rules().map(|(l, _)| l.clone()).collect();
        for lhs in &lhss {
            let overlapped = {
                let mut hit = false;
                for (other, _) in rs.rules() {
                    if other == lhs || other.len() > lhs.len() {
                        continue;
                    }
                    if lhs
                        .0
                        .windows(other.len())
                        .any(|w| w == &other.0[..])
                    {
                        hit = true;
                        break;
                    }
                }
                hit
            };
            if overlapped {
                let rhs = rs.remove_rule(lhs).unwrap();
                let mut rel = rhs.neg();
                rel.add_term(lhs.clone(), Scalar::one());
                let nf = rs.normal_form(&rel)?;
                if !nf.is_zero() {
                    let lead = nf.leading_word().unwrap().clone();
                    let lc = nf.coeff(&lead);
                    let normalized = nf.scale(&lc.recip());
                    let mut new_rhs = normalized.neg();
                    new_rhs.add_term(lead.clone(), Scalar::one());
                    rs.add_rule(lead, new_rhs)?;
                }
                changed = true;
            }
        }

        // (b) right sides in normal form
        let snapshot: Vec<(Word, NcPoly)> =
            rs.rules().map(|(l, r)| (l.clone(), r.clone())).collect();
        for (lhs, rhs) in snapshot {
            let nf = rs.normal_form(&rhs)?;
            if nf != rhs {
                rs.remove_rule(&lhs);
                rs.add_rule(lhs, nf)?;
                changed = true;
            }
        }

        if !changed {
            return Ok(());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::word::{DiffImage, Gen, Registry};
    use crate::tensor::IndexSpace;
    use std::sync::Arc;

    #[test]
    fn single_relation_quantum_plane() {
        // g2 g1 - q^-1 g1 g2 = 0 with order g2 g1 > g1 g2 compiles to
        // the rule g2 g1 -> q^-1 g1 g2.
        let mut reg = Registry::new();
        let pt = IndexSpace::new("pt", 1);
        let f1 = reg.add_family("g1", vec![pt.clone()], 0, DiffImage::Undeclared);
        let f2 = reg.add_family("g2", vec![pt], 0, DiffImage::Undeclared);
        let g1 = Gen::new(f1, &[0]);
        let g2 = Gen::new(f2, &[0]);
        let rel = NcPoly::from_word(Word(vec![g2, g1]))
            .sub(&NcPoly::from_term(Word(vec![g1, g2]), Scalar::q_pow(-1)));
        let rs = compile_rules(Arc::new(reg), &QParam::generic(), &[rel.clone()]).unwrap();
        assert_eq!(rs.num_rules(), 1);
        let rhs = rs.rule_for(&Word(vec![g2, g1])).unwrap();
        assert_eq!(
            rhs,
            &NcPoly::from_term(Word(vec![g1, g2]), Scalar::q_pow(-1))
        );
        // soundness: the input relation reduces to zero
        assert!(rs.reduces_to_zero(&rel).unwrap());
    }

    #[test]
    fn empty_relations_leave_everything_irreducible() {
        let mut reg = Registry::new();
        let pt = IndexSpace::new("pt", 1);
        let f1 = reg.add_family("g1", vec![pt], 0, DiffImage::Undeclared);
        let g1 = Gen::new(f1, &[0]);
        let rs = compile_rules(Arc::new(reg), &QParam::generic(), &[]).unwrap();
        assert_eq!(rs.num_rules(), 0);
        let w = NcPoly::from_word(Word(vec![g1, g1, g1]));
        assert_eq!(rs.normal_form(&w).unwrap(), w);
    }

    #[test]
    fn dependent_relations_collapse() {
        // The same relation handed in twice (once scaled) yields one rule.
        let mut reg = Registry::new();
        let pt = IndexSpace::new("pt", 1);
        let f1 = reg.add_family("a", vec![pt.clone()], 0, DiffImage::Undeclared);
        let f2 = reg.add_family("b", vec![pt], 0, DiffImage::Undeclared);
        let a = Gen::new(f1, &[0]);
        let b = Gen::new(f2, &[0]);
        let rel = NcPoly::from_word(Word(vec![b, a]))
            .sub(&NcPoly::from_word(Word(vec![a, b])));
        let rel2 = rel.scale(&Scalar::q_pow(3));
        let rs = compile_rules(Arc::new(reg), &QParam::generic(), &[rel, rel2]).unwrap();
        assert_eq!(rs.num_rules(), 1);
    }

    #[test]
    fn admissibility() {
        assert!(admissible_coefficient(&Scalar::q_pow(-5)));
        let denom = Scalar::from_poly(LaurentScalar::q_plus_qinv()).recip();
        assert!(admissible_coefficient(&denom));
        assert!(admissible_coefficient(&(&denom * &denom)));
        let bad = Scalar::new(
            LaurentScalar::one(),
            LaurentScalar::q_pow(1) + LaurentScalar::from_int(3),
        );
        assert!(!admissible_coefficient(&bad));
    }
}
