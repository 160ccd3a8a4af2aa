// classical oracle with non-isotropic parameters: does F still vanish?
use std::collections::BTreeMap;
type Mono = ([u8; 8], u8);
type Poly = BTreeMap<Mono, i128>;
fn zid(al: usize, a: usize) -> usize { al * 4 + a }
fn add_term(p: &mut Poly, m: Mono, c: i128) {
    if c == 0 { return; }
    let e = p.entry(m).or_insert(0);
    *e += c;
    if *e == 0 { p.remove(&m); }
}
fn mul(p: &Poly, q: &Poly) -> Poly {
    let mut out = Poly::new();
    for (&(ze1, dm1), &c1) in p { for (&(ze2, dm2), &c2) in q {
        if dm1 & dm2 != 0 { continue; }
        let mut ze = ze1;
        for i in 0..8 { ze[i] += ze2[i]; }
        let mut sign = 1i128;
        for i in 0..8 {
            if dm2 & (1 << i) != 0 {
                if ((dm1 >> (i + 1)).count_ones() & 1) == 1 { sign = -sign; }
            }
        }
        add_term(&mut out, (ze, dm1 | dm2), sign * c1 * c2);
    }}
    out
}
fn scale(p: &Poly, k: i128) -> Poly { p.iter().map(|(&m, &c)| (m, c * k)).collect() }
fn addp(p: &Poly, q: &Poly) -> Poly { let mut out = p.clone(); for (&m, &c) in q { add_term(&mut out, m, c); } out }
fn zvar(al: usize, a: usize) -> Poly { let mut ze = [0u8; 8]; ze[zid(al, a)] = 1; [((ze, 0u8), 1i128)].into_iter().collect() }
fn dzvar(al: usize, a: usize) -> Poly { [(([0u8; 8], 1u8 << zid(al, a)), 1i128)].into_iter().collect() }
fn pd(p: &Poly, al: usize, a: usize) -> Poly {
    let i = zid(al, a);
    let mut out = Poly::new();
    for (&(ze, dm), &c) in p {
        if ze[i] == 0 { continue; }
        let mut z2 = ze; z2[i] -= 1;
        add_term(&mut out, (z2, dm), c * ze[i] as i128);
    }
    out
}
fn dext(p: &Poly) -> Poly {
    let mut out = Poly::new();
    for al in 0..2 { for a in 0..4 { out = addp(&out, &mul(&dzvar(al, a), &pd(p, al, a))); } }
    out
}
fn run(b34: i128) -> (i128, bool, bool) {
    let epsd = |al: usize, be: usize| -> i128 { if al == 0 && be == 1 { -1 } else if al == 1 && be == 0 { 1 } else { 0 } };
    let lc = |idx: [usize; 4]| -> i128 {
        let mut seen = [false; 4];
        for &i in &idx { if seen[i] { return 0; } seen[i] = true; }
        let mut s = 1i128;
        for i in 0..4 { for j in (i+1)..4 { if idx[i] > idx[j] { s = -s; } } }
        s
    };
    let mut b = [[0i128; 4]; 4];
    let vals = [(0usize,1usize,1i128),(0,2,2),(0,3,3),(1,2,5),(1,3,7),(2,3,b34)];
    for (c, d, v) in vals { b[c][d] = v; b[d][c] = -v; }
    let mut quad = 0i128;
    for a in 0..4 { for bb in 0..4 { for c in 0..4 { for d in 0..4 { quad += lc([a, bb, c, d]) * b[a][bb] * b[c][d]; }}}}
    let yc = |a: usize, bb: usize| -> Poly {
        let mut p = Poly::new();
        for al in 0..2 { for be in 0..2 {
            let e = epsd(al, be);
            if e != 0 { p = addp(&p, &scale(&mul(&zvar(al, a), &zvar(be, bb)), e)); }
        }}
        p
    };
    let mut x = Poly::new();
    for a in 0..4 { for bb in 0..4 { for c in 0..4 { for d in 0..4 {
        let e = lc([a, bb, c, d]) * b[c][d];
        if e != 0 { x = addp(&x, &scale(&yc(a, bb), e)); }
    }}}}
    let pdx = |a: usize, be: usize| -> Poly { pd(&x, be, a) };
    let dx = dext(&x);
    let mut fzero = true;
    let mut asdzero = true;
    for al in 0..2 { for be in 0..2 {
        let mut acc = Poly::new();
        for a in 0..4 {
            let t1 = mul(&dzvar(al, a), &mul(&dx, &pdx(a, be)));
            let t2 = scale(&mul(&dzvar(al, a), &mul(&x, &dext(&pdx(a, be)))), -1);
            acc = addp(&acc, &addp(&t1, &t2));
            for ga in 0..2 { for c in 0..4 {
                let t3 = mul(&mul(&dzvar(al, a), &pdx(a, ga)), &mul(&dzvar(ga, c), &pdx(c, be)));
                acc = addp(&acc, &scale(&t3, -1));
            }}
        }
        if !acc.is_empty() { fzero = false; }
        // asd part: antisymmetrize latin pair
        let mut asd = Poly::new();
        for (&(ze, dm), &c) in &acc {
            let bits: Vec<usize> = (0..8).filter(|i| dm & (1 << i) != 0).collect();
            let (mu, a) = (bits[0] / 4, bits[0] % 4);
            let (nu, cc) = (bits[1] / 4, bits[1] % 4);
            let base: Poly = [((ze, 0u8), c)].into_iter().collect();
            let orig = mul(&mul(&base, &dzvar(mu, a)), &dzvar(nu, cc));
            let swapped = mul(&mul(&base, &dzvar(mu, cc)), &dzvar(nu, a));
            asd = addp(&asd, &addp(&orig, &scale(&swapped, -1)));
        }
        if !asd.is_empty() { asdzero = false; }
    }}
    (quad, fzero, asdzero)
}
fn main() {
    for b34 in [-1i128, 1] {
        let (q, f, a) = run(b34);
        println!("b34={}: quadric={} F==0:{} asd(F)==0:{}", b34, q, f, a);
    }
}
