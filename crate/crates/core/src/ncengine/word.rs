//! Words and noncommutative polynomials over indexed generator families,
//! plus the family registry that gives them names, index ranges, parities
//! and differential images.
//!
//! Ordering is global and fixed: words compare length-graded first, then
//! letter by letter, letters by (family precedence, index tuple). Families
//! are registered in precedence order, so the numeric family id *is* the
//! precedence.

use crate::scalar::Scalar;
use crate::tensor::IndexSpace;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub const MAX_GEN_INDICES: usize = 3;

/// One concrete generator: a family plus a concrete index tuple (0-based).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Gen {
    pub fam: u8,
    pub idx: [u8; MAX_GEN_INDICES],
}

impl Gen {
    pub fn new(fam: u8, idx: &[usize]) -> Self {
        assert!(idx.len() <= MAX_GEN_INDICES);
        let mut packed = [0u8; MAX_GEN_INDICES];
        for (slot, &i) in packed.iter_mut().zip(idx) {
            *slot = i as u8;
        }
        Gen { fam, idx: packed }
    }
}

/// An ordered product of generators. The empty word is the unit.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Word(pub Vec<Gen>);

impl Word {
    pub fn one() -> Self {
        Word(Vec::new())
    }

    pub fn single(g: Gen) -> Self {
        Word(vec![g])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Differential behavior of a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiffImage {
    /// No declaration; applying the differential is an error.
    Undeclared,
    /// d(gen) = 0.
    Zero,
    /// d(gen) = the generator of this family with the same index tuple.
    Family(u8),
    /// d(gen) is an explicit polynomial, looked up per concrete generator.
    Explicit,
}

#[derive(Clone, Debug)]
pub struct Family {
    pub name: String,
    pub spaces: Vec<IndexSpace>,
    pub parity: u8,
    pub diff: DiffImage,
}

impl Family {
    pub fn arity(&self) -> usize {
        self.spaces.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.dim).collect()
    }
}

/// The table of generator families, in precedence order.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    families: Vec<Family>,
    explicit_diff: BTreeMap<Gen, NcPoly>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn add_family(
        &mut self,
        name: &str,
        spaces: Vec<IndexSpace>,
        parity: u8,
        diff: DiffImage,
    ) -> u8 {
        assert!(parity <= 1);
        assert!(spaces.len() <= MAX_GEN_INDICES);
        assert!(self.families.len() < 255);
        assert!(
            self.family_id(name).is_none(),
            "duplicate family name {}",
            name
        );
        self.families.push(Family { name: name.to_string(), spaces, parity, diff });
        (self.families.len() - 1) as u8
    }

    pub fn family(&self, id: u8) -> &Family {
        &self.families[id as usize]
    }

    pub fn family_id(&self, name: &str) -> Option<u8> {
        self.families
            .iter()
            .position(|f| f.name == name)
            .map(|i| i as u8)
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn set_explicit_diff(&mut self, g: Gen, image: NcPoly) {
        self.explicit_diff.insert(g, image);
    }

    /// Re-declare the differential behavior of a family after registration
    /// (needed when an image family gets its id later).
    pub fn set_family_diff(&mut self, fam: u8, diff: DiffImage) {
        self.families[fam as usize].diff = diff;
    }

    pub fn explicit_diff(&self, g: &Gen) -> Option<&NcPoly> {
        self.explicit_diff.get(g)
    }

    /// All concrete generators of a family, in index order.
    pub fn gens_of(&self, fam: u8) -> Vec<Gen> {
        let dims = self.family(fam).dims();
        crate::tensor::IndexIter::new(dims)
            .map(|idx| Gen::new(fam, &idx))
            .collect()
    }

    pub fn parity_of_word(&self, w: &Word) -> u8 {
        let mut p = 0u8;
        for g in &w.0 {
            p += self.family(g.fam).parity;
        }
        p
    }

    /// Total form degree (unreduced mod 2): the count of odd letters.
    pub fn form_degree(&self, w: &Word) -> usize {
        w.0.iter()
            .filter(|g| self.family(g.fam).parity == 1)
            .count()
    }

    pub fn render_gen(&self, g: &Gen) -> String {
        let fam = self.family(g.fam);
        if fam.arity() == 0 {
            fam.name.clone()
        } else {
            let idx: Vec<String> = (0..fam.arity())
                .map(|i| (g.idx[i] as usize + 1).to_string())
                .collect();
            format!("{}[{}]", fam.name, idx.join(","))
        }
    }

    pub fn render_word(&self, w: &Word) -> String {
        if w.is_empty() {
            "1".to_string()
        } else {
            w.0.iter()
                .map(|g| self.render_gen(g))
                .collect::<Vec<_>>()
                .join("*")
        }
    }

    /// Canonical text rendering of a polynomial: terms in ascending word
    /// order, coefficients parenthesized when they are sums.
    pub fn render_poly(&self, p: &NcPoly) -> String {
        if p.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (w, c)) in p.terms.iter().enumerate() {
            let (sign, mag) = if let Some((coeff, exp)) = c.as_monomial() {
                use num_traits::Signed;
                if coeff.is_negative() {
                    let m = Scalar::from_poly(crate::scalar::LaurentScalar::monomial(
                        -coeff.clone(),
                        exp,
                    ));
                    ("-", m)
                } else {
                    ("+", c.clone())
                }
            } else {
                ("+", c.clone())
            };
            if i == 0 {
                if sign == "-" {
                    out.push_str("-");
                }
            } else if sign == "-" {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let coeff_str = if mag.is_one() && !w.is_empty() {
                String::new()
            } else {
                let needs_parens = mag.as_monomial().is_none();
                if needs_parens {
                    format!("({})", mag)
                } else {
                    format!("{}", mag)
                }
            };
            match (coeff_str.is_empty(), w.is_empty()) {
                (true, _) => out.push_str(&self.render_word(w)),
                (false, true) => out.push_str(&coeff_str),
                (false, false) => {
                    out.push_str(&coeff_str);
                    out.push_str(" * ");
                    out.push_str(&self.render_word(w));
                }
            }
        }
        out
    }
}

pub type RegistryRef = Arc<Registry>;

/// A noncommutative polynomial: a finite map from words to nonzero scalars.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct NcPoly {
    terms: BTreeMap<Word, Scalar>,
}

impl NcPoly {
    pub fn zero() -> Self {
        NcPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::from_word(Word::one())
    }

    pub fn from_word(w: Word) -> Self {
        Self::from_term(w, Scalar::one())
    }

    pub fn from_gen(g: Gen) -> Self {
        Self::from_word(Word::single(g))
    }

    pub fn from_term(w: Word, c: Scalar) -> Self {
        let mut p = NcPoly::zero();
        p.add_term(w, c);
        p
    }

    pub fn constant(c: Scalar) -> Self {
        Self::from_term(Word::one(), c)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Scalar)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Word, Scalar)> {
        self.terms.into_iter()
    }

    pub fn coeff(&self, w: &Word) -> Scalar {
        self.terms.get(w).cloned().unwrap_or_else(Scalar::zero)
    }

    /// Largest word in the monomial order.
    pub fn leading_word(&self) -> Option<&Word> {
        self.terms.keys().next_back()
    }

    pub fn add_term(&mut self, w: Word, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(w) {
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

    pub fn add_assign(&mut self, other: &NcPoly) {
        for (w, c) in &other.terms {
            self.add_term(w.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &NcPoly) {
        for (w, c) in &other.terms {
            self.add_term(w.clone(), -c);
        }
    }

    pub fn add(&self, other: &NcPoly) -> NcPoly {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &NcPoly) -> NcPoly {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn neg(&self) -> NcPoly {
        let mut out = NcPoly::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), -c);
        }
        out
    }

    pub fn scale(&self, k: &Scalar) -> NcPoly {
        if k.is_zero() {
            return NcPoly::zero();
        }
        let mut out = NcPoly::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c * k);
        }
        out
    }

    /// Ordered product: words concatenate left-to-right.
    pub fn mul(&self, other: &NcPoly) -> NcPoly {
        let mut out = NcPoly::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(w1.concat(w2), c1 * c2);
            }
        }
        out
    }

    /// Left-multiply by a single generator.
    pub fn mul_gen_left(&self, g: Gen) -> NcPoly {
        let mut out = NcPoly::zero();
        for (w, c) in &self.terms {
            let mut v = Vec::with_capacity(w.len() + 1);
            v.push(g);
            v.extend_from_slice(&w.0);
            out.add_term(Word(v), c.clone());
        }
        out
    }
}

/// Entry impl so tensors can hold algebra-valued components.
impl crate::tensor::Entry for NcPoly {
    fn zero() -> Self {
        NcPoly::zero()
    }
    fn is_zero(&self) -> bool {
        NcPoly::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        NcPoly::add(self, other)
    }
    fn neg(&self) -> Self {
        NcPoly::neg(self)
    }
    fn mul(&self, other: &Self) -> Self {
        NcPoly::mul(self, other)
    }
    fn scale(&self, c: &Scalar) -> Self {
        NcPoly::scale(self, c)
    }
}

impl fmt::Display for NcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Registry-free rendering for debugging: family ids instead of names.
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(w, c)| {
                let ws: Vec<String> = w
                    .0
                    .iter()
                    .map(|g| format!("f{}[{},{},{}]", g.fam, g.idx[0], g.idx[1], g.idx[2]))
                    .collect();
                format!("({}) {}", c, ws.join("*"))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_order_is_length_graded_then_lex() {
        let a = Gen::new(0, &[0]);
        let b = Gen::new(1, &[0]);
        let ab = Word(vec![a, b]);
        let ba = Word(vec![b, a]);
        let aaa = Word(vec![a, a, a]);
        assert!(ba > ab);
        assert!(aaa > ba);
        assert!(Word::one() < ab);
    }

    #[test]
    fn poly_cancellation() {
        let a = Gen::new(0, &[0]);
        let w = Word::single(a);
        let mut p = NcPoly::from_term(w.clone(), Scalar::from_int(2));
        p.add_term(w.clone(), Scalar::from_int(-2));
        assert!(p.is_zero());
    }

    #[test]
    fn poly_product_preserves_order() {
        let a = Gen::new(0, &[0]);
        let b = Gen::new(1, &[0]);
        let p = NcPoly::from_gen(a);
        let q = NcPoly::from_gen(b);
        let pq = p.mul(&q);
        assert_eq!(pq.terms().next().unwrap().0, &Word(vec![a, b]));
    }
}
