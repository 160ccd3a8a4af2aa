use qtw_core::gaugeforms::*;
use qtw_core::ncengine::*;
use qtw_core::rmx::Eps4Reading;
use qtw_core::scalar::*;
use qtw_core::twistoralg::*;

fn split_grades(sys: &TwistorSystem, p: &NcPoly) -> std::collections::BTreeMap<usize, NcPoly> {
    let xi = sys.xinv(0);
    let mut out: std::collections::BTreeMap<usize, NcPoly> = Default::default();
    for (w, c) in p.terms() {
        let k = w.0.iter().filter(|g| **g == xi).count();
        let v: Vec<Gen> = w.0.iter().filter(|g| **g != xi).cloned().collect();
        out.entry(k).or_insert_with(NcPoly::zero).add_term(Word(v), c.clone());
    }
    out
}
fn cleared(sys: &TwistorSystem, xp: &NcPoly, p: &NcPoly, clear_to: usize) -> NcPoly {
    let mut acc = NcPoly::zero();
    for (k, part) in split_grades(sys, p) {
        let mut t = part;
        for _ in 0..(clear_to - k) { t = xp.mul(&t); }
        acc.add_assign(&t);
    }
    sys.rs.normal_form(&acc).unwrap()
}

fn main() {
    let qp = QParam::generic();
    let opts = TwistorOptions { k_inst: 1, with_derivatives: true, eps4_reading: Eps4Reading::Plain,
        z_b_weight: 0, dz_b_weight: 2, b_model: ParameterModel::Free, with_isotropy: false, ..Default::default() };
    let sys = build_twistor_system(&qp, opts).unwrap();
    let xp = sys.x_poly(0);

    let mut dxp = vec![vec![NcPoly::zero(); 2]; 4];
    for a in 0..4 { for mu in 0..2 { dxp[a][mu] = sys.apply_partial(a, mu, &xp).unwrap(); } }
    let mut mm = vec![vec![Scalar::zero(); 2]; 2];
    for mu in 0..2 { for be in 0..2 {
        let mut acc = Scalar::zero();
        for sg in 0..2 { acc += &(sys.eps.eps_up.get(&[sg, mu]) * sys.eps.eps_down.get(&[sg, be])); }
        mm[mu][be] = acc;
    }}
    let mut ahat = FormMatrix::zeros(2);
    for al in 0..2 { for be in 0..2 {
        let mut acc = NcPoly::zero();
        for a in 0..4 { for mu in 0..2 {
            if mm[mu][be].is_zero() { continue; }
            let lead = NcPoly::from_word(Word(vec![sys.dz(al, a), sys.xinv(0)]));
            acc.add_assign(&lead.mul(&dxp[a][mu]).scale(&mm[mu][be]));
        }}
        ahat.set(al, be, sys.rs.normal_form(&acc).unwrap());
    }}
    let da = d_matrix(&sys.rs, &ahat).unwrap();
    let a2 = ahat.mul(&ahat).try_map(|p| sys.rs.normal_form(p)).unwrap();

    let bfam = sys.fams.b;
    let group = |p: &NcPoly| -> std::collections::BTreeMap<Word, Vec<Scalar>> {
        let mut out: std::collections::BTreeMap<Word, Vec<Scalar>> = Default::default();
        for (w, c) in p.terms() {
            let bpos: Vec<usize> = w.0.iter().enumerate().filter(|(_, g)| g.fam == bfam).map(|(i, _)| i).collect();
            let m = w.0[bpos[0]].idx[1] as usize;
            let n = w.0[bpos[1]].idx[1] as usize;
            let rest: Vec<Gen> = w.0.iter().enumerate().filter(|(i, _)| *i != bpos[0] && *i != bpos[1]).map(|(_, g)| *g).collect();
            let e = out.entry(Word(rest)).or_insert_with(|| vec![Scalar::zero(); 36]);
            e[m * 6 + n] = &e[m * 6 + n] + c;
        }
        out
    };

    let mut pairs: Vec<(Vec<Scalar>, Vec<Scalar>)> = Vec::new();
    for al in 0..2 { for be in 0..2 {
        let r1 = cleared(&sys, &xp, &asd_part(&sys, da.get(al, be)).unwrap(), 2);
        let r2 = cleared(&sys, &xp, &asd_part(&sys, a2.get(al, be)).unwrap(), 2);
        let g1 = group(&r1);
        let g2 = group(&r2);
        let keys: std::collections::BTreeSet<Word> = g1.keys().chain(g2.keys()).cloned().collect();
        for k in keys {
            let v1 = g1.get(&k).cloned().unwrap_or_else(|| vec![Scalar::zero(); 36]);
            let v2 = g2.get(&k).cloned().unwrap_or_else(|| vec![Scalar::zero(); 36]);
            pairs.push((v1, v2));
        }
    }}
    eprintln!("groups: {}", pairs.len());

    // flat+quadric span: commutators e_mn - e_nm plus the pairing quadric
    let mut flat_quadric: Vec<Vec<Scalar>> = Vec::new();
    for m in 0..6 { for n in 0..m {
        let mut v = vec![Scalar::zero(); 36];
        v[m*6+n] = Scalar::one();
        v[n*6+m] = -&Scalar::one();
        flat_quadric.push(v);
    }}
    {
        let bt = sys.b_components(0);
        let mut quad = vec![Scalar::zero(); 36];
        for idx in qtw_core::tensor::IndexIter::new(vec![4;4]) {
            let e = sys.eps4.tensor.get(&idx);
            if e.is_zero() { continue; }
            for (w1, c1) in bt.get(&[idx[0], idx[1]]).terms() {
                for (w2, c2) in bt.get(&[idx[2], idx[3]]).terms() {
                    let m = w1.0[0].idx[1] as usize;
                    let n = w2.0[0].idx[1] as usize;
                    quad[m*6+n] = &quad[m*6+n] + &(&(c1 * c2) * e);
                }
            }
        }
        flat_quadric.push(quad);
    }

    for k in -3i64..=3 { for sign in [1i64, -1] {
        let lam = if sign == 1 { Scalar::q_pow(k) } else { -&Scalar::q_pow(k) };
        let rows: Vec<Vec<Scalar>> = pairs.iter().map(|(v1, v2)| {
            v1.iter().zip(v2).map(|(a, b)| a + &(b * &lam)).collect()
        }).filter(|r: &Vec<Scalar>| r.iter().any(|x| !x.is_zero())).collect();
        let fdim = qtw_core::linalg::rank(rows.clone());
        let mut joint = flat_quadric.clone();
        joint.extend(rows);
        let jdim = qtw_core::linalg::rank(joint);
        eprintln!("lambda {}q^{}: flagship span {} joint-with-flat+quadric {} (flat+quadric = 16)",
            if sign<0 {"-"} else {"+"}, k, fdim, jdim);
    }}
}
