//! Local confluence by overlap analysis: for every suffix-prefix overlap of
//! two rule left sides, reduce the overlap word both ways and compare normal
//! forms. Mismatches are report content, never repaired.

use super::rewrite::{EngineError, RewriteSystem};
use super::word::{NcPoly, Word};
use crate::par::maybe_par_map;

#[derive(Clone, Debug)]
pub struct ConfluenceMismatch {
    pub word: Word,
    pub difference: NcPoly,
}

#[derive(Clone, Debug, Default)]
pub struct ConfluenceReport {
    pub overlaps_checked: usize,
    pub mismatches: Vec<ConfluenceMismatch>,
}

impl ConfluenceReport {
    pub fn is_confluent(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Enumerate proper suffix-prefix overlaps of rule left sides.
fn overlap_words(rs: &RewriteSystem) -> Vec<(Word, Word, Word, usize)> {
    let rules: Vec<Word> = rs.rules().map(|(l, _)| l.clone()).collect();
    let mut out = Vec::new();
    for l1 in &rules {
        for l2 in &rules {
            let max_o = l1.len().min(l2.len());
            for o in 1..max_o {
                if l1.0[l1.len() - o..] == l2.0[..o] {
                    let mut w = l1.0.clone();
                    w.extend_from_slice(&l2.0[o..]);
                    out.push((Word(w), l1.clone(), l2.clone(), o));
                }
            }
        }
    }
    out
}

/// Reduce every overlap two ways; any normal-form disagreement is a local
/// confluence failure for the presentation.
pub fn check_local_confluence(rs: &RewriteSystem) -> Result<ConfluenceReport, EngineError> {
    let overlaps = overlap_words(rs);
    let checked = overlaps.len();
    let results: Vec<Result<Option<ConfluenceMismatch>, EngineError>> =
        maybe_par_map(overlaps, |(w, l1, l2, o)| {
            let rhs1 = rs.rule_for(&l1).expect("rule vanished").clone();
            let rhs2 = rs.rule_for(&l2).expect("rule vanished").clone();
            // path A: rewrite the left redex
            let mut a = NcPoly::zero();
            for (rw, rc) in rhs1.terms() {
                let mut v = rw.0.clone();
                v.extend_from_slice(&w.0[l1.len()..]);
                a.add_term(Word(v), rc.clone());
            }
            // path B: rewrite the right redex
            let start = l1.len() - o;
            let mut b = NcPoly::zero();
            for (rw, rc) in rhs2.terms() {
                let mut v = w.0[..start].to_vec();
                v.extend_from_slice(&rw.0);
                b.add_term(Word(v), rc.clone());
            }
            let na = rs.normal_form(&a)?;
            let nb = rs.normal_form(&b)?;
            if na == nb {
                Ok(None)
            } else {
                Ok(Some(ConfluenceMismatch { word: w, difference: na.sub(&nb) }))
            }
        });
    let mut mismatches = Vec::new();
    for r in results {
        if let Some(m) = r? {
            mismatches.push(m);
        }
    }
    mismatches.sort_by(|a, b| a.word.cmp(&b.word));
    mismatches.dedup_by(|a, b| a.word == b.word);
    Ok(ConfluenceReport { overlaps_checked: checked, mismatches })
}

/// Count of quadratic-rule overlaps only (the degree-3 ambiguity words);
/// used by presentations that assert an exact combinatorial count.
pub fn quadratic_overlap_count(rs: &RewriteSystem) -> usize {
    overlap_words(rs)
        .into_iter()
        .filter(|(_, l1, l2, _)| l1.len() == 2 && l2.len() == 2)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::compile::compile_rules;
    use super::super::word::{DiffImage, Gen, Registry};
    use crate::scalar::{QParam, Scalar};
    use crate::tensor::IndexSpace;
    use std::sync::Arc;

    #[test]
    fn quantum_plane_is_confluent() {
        let mut reg = Registry::new();
        let pt = IndexSpace::new("pt", 1);
        let fx = reg.add_family("x", vec![pt.clone()], 0, DiffImage::Undeclared);
        let fy = reg.add_family("y", vec![pt], 0, DiffImage::Undeclared);
        let x = Gen::new(fx, &[0]);
        let y = Gen::new(fy, &[0]);
        let rel = NcPoly::from_word(Word(vec![y, x]))
            .sub(&NcPoly::from_term(Word(vec![x, y]), Scalar::q_pow(-1)));
        let rs = compile_rules(Arc::new(reg), &QParam::generic(), &[rel]).unwrap();
        let report = check_local_confluence(&rs).unwrap();
        // single rule, no self-overlap: y x with itself shares no letter
        assert_eq!(report.overlaps_checked, 0);
        assert!(report.is_confluent());
    }

    #[test]
    fn deliberately_broken_system_reports() {
        // x y -> y x and y x -> 2 x y cannot coexist: their overlap differs.
        let mut reg = Registry::new();
        let pt = IndexSpace::new("pt", 1);
        let fx = reg.add_family("x", vec![pt.clone()], 0, DiffImage::Undeclared);
        let fy = reg.add_family("y", vec![pt], 0, DiffImage::Undeclared);
        let x = Gen::new(fx, &[0]);
        let y = Gen::new(fy, &[0]);
        let mut rs = super::super::rewrite::RewriteSystem::new(Arc::new(reg), QParam::generic());
        // y y -> x x  and  y x -> x y: overlap word y y x
        rs.add_rule(
            Word(vec![y, y]),
            NcPoly::from_word(Word(vec![x, x])),
        )
        .unwrap();
        rs.add_rule(
            Word(vec![y, x]),
            NcPoly::from_term(Word(vec![x, y]), Scalar::from_int(2)),
        )
        .unwrap();
        let report = check_local_confluence(&rs).unwrap();
        assert!(report.overlaps_checked > 0);
        assert!(!report.is_confluent());
    }
}
