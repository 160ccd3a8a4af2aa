//! The graded exterior differential on words: d(fg) = (df)g + (-1)^{|f|}f(dg),
//! extended linearly, with per-family generator images declared in the
//! registry.

use super::rewrite::{EngineError, RewriteSystem};
use super::word::{DiffImage, Gen, NcPoly, Registry, Word};

/// Apply d to a polynomial without reducing the result.
pub fn exterior_d(reg: &Registry, p: &NcPoly) -> Result<NcPoly, EngineError> {
    let mut out = NcPoly::zero();
    for (w, c) in p.terms() {
        let mut sign_parity = 0u8;
        for (i, g) in w.0.iter().enumerate() {
            let image = gen_diff(reg, g)?;
            if !image.is_zero() {
                let prefix = &w.0[..i];
                let suffix = &w.0[i + 1..];
                for (iw, ic) in image.terms() {
                    let mut v = prefix.to_vec();
                    v.extend_from_slice(&iw.0);
                    v.extend_from_slice(suffix);
                    let mut coeff = c * ic;
                    if sign_parity == 1 {
                        coeff = -&coeff;
                    }
                    out.add_term(Word(v), coeff);
                }
            }
            sign_parity ^= reg.family(g.fam).parity;
        }
    }
    Ok(out)
}

fn gen_diff(reg: &Registry, g: &Gen) -> Result<NcPoly, EngineError> {
    match &reg.family(g.fam).diff {
        DiffImage::Zero => Ok(NcPoly::zero()),
        DiffImage::Family(f) => Ok(NcPoly::from_gen(Gen { fam: *f, idx: g.idx })),
        DiffImage::Explicit => reg
            .explicit_diff(g)
            .cloned()
            .ok_or_else(|| EngineError::UndeclaredDifferential(reg.render_gen(g))),
        DiffImage::Undeclared => Err(EngineError::UndeclaredDifferential(
            reg.family(g.fam).name.clone(),
        )),
    }
}

/// d followed by normal form.
pub fn d_nf(rs: &RewriteSystem, p: &NcPoly) -> Result<NcPoly, EngineError> {
    let d = exterior_d(rs.registry(), p)?;
    rs.normal_form(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{QParam, Scalar};
    use crate::tensor::IndexSpace;
    use std::sync::Arc;

    fn setup() -> (Registry, u8, u8, u8) {
        let mut reg = Registry::new();
        let pt = IndexSpace::new("pt", 1);
        let fb = reg.add_family("c", vec![pt.clone()], 0, DiffImage::Zero);
        let fz = reg.add_family("w", vec![pt.clone()], 0, DiffImage::Family(2));
        let fdz = reg.add_family("dw", vec![pt], 1, DiffImage::Zero);
        (reg, fb, fz, fdz)
    }

    #[test]
    fn leibniz_with_sign() {
        let (reg, _fb, fz, fdz) = setup();
        let z = Gen::new(fz, &[0]);
        let dz = Gen::new(fdz, &[0]);
        // d(w w) = dw w + w dw
        let p = NcPoly::from_word(Word(vec![z, z]));
        let d = exterior_d(&reg, &p).unwrap();
        let mut want = NcPoly::from_word(Word(vec![dz, z]));
        want.add_term(Word(vec![z, dz]), Scalar::one());
        assert_eq!(d, want);
        // d(dw w) = -dw dw
        let p2 = NcPoly::from_word(Word(vec![dz, z]));
        let d2 = exterior_d(&reg, &p2).unwrap();
        assert_eq!(
            d2,
            NcPoly::from_term(Word(vec![dz, dz]), -&Scalar::one())
        );
    }

    #[test]
    fn closed_generators_vanish() {
        let (reg, fb, _fz, _fdz) = setup();
        let b = Gen::new(fb, &[0]);
        let p = NcPoly::from_word(Word(vec![b, b, b]));
        assert!(exterior_d(&reg, &p).unwrap().is_zero());
    }

    #[test]
    fn d_squared_zero_on_words() {
        let (reg, fb, fz, _fdz) = setup();
        let b = Gen::new(fb, &[0]);
        let z = Gen::new(fz, &[0]);
        let p = NcPoly::from_word(Word(vec![z, b, z, z]));
        let dd = exterior_d(&reg, &exterior_d(&reg, &p).unwrap()).unwrap();
        assert!(dd.is_zero());
    }

    #[test]
    fn undeclared_family_errors() {
        let mut reg = Registry::new();
        let pt = IndexSpace::new("pt", 1);
        let f = reg.add_family("u", vec![pt], 0, DiffImage::Undeclared);
        let g = Gen::new(f, &[0]);
        let p = NcPoly::from_gen(g);
        assert!(exterior_d(&reg, &p).is_err());
        let _ = Arc::new(reg);
        let _ = QParam::generic();
    }
}
