//! Finite fields F_{p^n} as quotients of F_p[x] by a deterministic
//! irreducible polynomial, with trace tables to F_p and explicit
//! embeddings of subfields. Built for exhaustive enumeration: arithmetic
//! stays in `u64` with delayed reductions.

use crate::error::{Error, Result};
use crate::util::{inv_mod, require_prime};

/// Dense little-endian polynomial over F_p.
pub type FpPoly = Vec<u64>;

fn poly_trim(f: &mut FpPoly) {
    while f.len() > 1 && *f.last().unwrap() == 0 {
        f.pop();
    }
}

fn poly_mul_mod(a: &[u64], b: &[u64], g: &[u64], p: u64) -> FpPoly {
    let n = g.len() - 1;
    let mut tmp = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            tmp[i + j] = (tmp[i + j] + ai * bj) % p;
        }
    }
    // fold down by the monic modulus
    for k in (n..tmp.len()).rev() {
        let v = tmp[k];
        if v == 0 {
            continue;
        }
        tmp[k] = 0;
        for j in 0..n {
            tmp[k - n + j] = (tmp[k - n + j] + v * (p - g[j] % p)) % p;
        }
    }
    tmp.truncate(n.max(1));
    tmp.resize(n.max(1), 0);
    tmp
}

fn poly_pow_mod(base: &[u64], mut e: u128, g: &[u64], p: u64) -> FpPoly {
    let n = g.len() - 1;
    let mut acc = vec![0u64; n.max(1)];
    acc[0] = 1;
    let mut b = base.to_vec();
    b.resize(n.max(1), 0);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mul_mod(&acc, &b, g, p);
        }
        b = poly_mul_mod(&b, &b, g, p);
        e >>= 1;
    }
    acc
}

fn poly_gcd(mut a: FpPoly, mut b: FpPoly, p: u64) -> FpPoly {
    poly_trim(&mut a);
    poly_trim(&mut b);
    while !(b.len() == 1 && b[0] == 0) {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

fn poly_rem(a: &[u64], b: &[u64], p: u64) -> FpPoly {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut bb = b.to_vec();
    poly_trim(&mut bb);
    let db = bb.len() - 1;
    let lead_inv = inv_mod(bb[db], p).expect("unit leading coefficient");
    while r.len() > db && !(r.len() == 1 && r[0] == 0) {
        let dr = r.len() - 1;
        if dr < db {
            break;
        }
        let c = (r[dr] * lead_inv) % p;
        if c != 0 {
            for j in 0..=db {
                let idx = dr - db + j;
                r[idx] = (r[idx] + (p - (c * bb[j]) % p)) % p;
            }
        }
        poly_trim(&mut r);
        if r.len() == 1 && r[0] == 0 {
            break;
        }
    }
    r
}

/// Monic degree-n polynomial irreducible mod p, found by a fixed scan so
/// that every component of the pipeline agrees on the same field model.
pub fn irreducible_poly(p: u64, n: usize) -> Result<FpPoly> {
    require_prime(p)?;
    if n == 0 {
        return Err(Error::BadInput("degree 0 extension".into()));
    }
    if n == 1 {
        // x itself: generator is the residue 0
        return Ok(vec![0, 1]);
    }
    let mut lower = vec![0u64; n];
    loop {
        let mut g = lower.clone();
        g.push(1);
        if is_irreducible(&g, p) {
            return Ok(g);
        }
        // increment base-p counter over the lower coefficients
        let mut i = 0;
        loop {
            if i == n {
                return Err(Error::BadInput(format!(
                    "no irreducible of degree {n} over F_{p} found"
                )));
            }
            lower[i] += 1;
            if lower[i] < p {
                break;
            }
            lower[i] = 0;
            i += 1;
        }
    }
}

fn is_irreducible(g: &[u64], p: u64) -> bool {
    let n = g.len() - 1;
    let x = vec![0u64, 1];
    // x^{p^n} == x mod g
    let mut xp = x.clone();
    xp.resize(n.max(2), 0);
    let mut frob = x.clone();
    for _ in 0..n {
        frob = poly_pow_mod(&frob, p as u128, g, p);
    }
    let mut xv = x.clone();
    xv.resize(frob.len(), 0);
    if frob != xv {
        return false;
    }
    // gcd(x^{p^{n/l}} - x, g) must be trivial for every prime l | n
    let mut m = n;
    let mut l = 2;
    let mut prime_divs = Vec::new();
    while l * l <= m {
        if m % l == 0 {
            prime_divs.push(l);
            while m % l == 0 {
                m /= l;
            }
        }
        l += 1;
    }
    if m > 1 {
        prime_divs.push(m);
    }
    for l in prime_divs {
        let k = n / l;
        let mut fr = x.clone();
        for _ in 0..k {
            fr = poly_pow_mod(&fr, p as u128, g, p);
        }
        // fr - x
        let mut diff = fr;
        if diff.len() < 2 {
            diff.resize(2, 0);
        }
        diff[1] = (diff[1] + p - 1) % p;
        let gg = poly_gcd(g.to_vec(), diff, p);
        if !(gg.len() == 1 && gg[0] != 0) {
            return false;
        }
    }
    true
}

/// F_{p^deg} with a defining polynomial, Frobenius matrix, absolute trace
/// table, and (when asked) the image of a subfield generator.
#[derive(Debug, Clone)]
pub struct ExtField {
    pub p: u64,
    pub deg: usize,
    pub defining: FpPoly,
    /// column k = coordinates of (x^k)^p; the p-power map is F_p-linear.
    frob_cols: Vec<Vec<u64>>,
    /// Tr(x^k) for k < deg; absolute trace is the dot product with these.
    trace_table: Vec<u64>,
}

pub type FElem = Vec<u64>;

impl ExtField {
    pub fn new(p: u64, deg: usize) -> Result<ExtField> {
        let defining = irreducible_poly(p, deg)?;
        let mut field = ExtField {
            p,
            deg,
            defining,
            frob_cols: Vec::new(),
            trace_table: Vec::new(),
        };
        let xp = poly_pow_mod(&[0, 1], p as u128, &field.defining, p);
        let mut col = vec![0u64; deg];
        col[0] = 1;
        let mut cols = Vec::with_capacity(deg);
        for _ in 0..deg {
            cols.push(col.clone());
            col = field.mul_raw(&col, &xp);
        }
        field.frob_cols = cols;
        let mut table = Vec::with_capacity(deg);
        for k in 0..deg {
            let mut basis = vec![0u64; deg];
            basis[k] = 1;
            let mut acc = vec![0u64; deg];
            let mut z = basis;
            for _ in 0..deg {
                for i in 0..deg {
                    acc[i] = (acc[i] + z[i]) % p;
                }
                z = field.frobenius(&z);
            }
            debug_assert!(acc[1..].iter().all(|&c| c == 0), "trace not in F_p");
            table.push(acc[0]);
        }
        field.trace_table = table;
        Ok(field)
    }

    pub fn size(&self) -> u128 {
        (self.p as u128).pow(self.deg as u32)
    }

    pub fn zero(&self) -> FElem {
        vec![0; self.deg]
    }

    pub fn one(&self) -> FElem {
        let mut e = vec![0; self.deg];
        e[0] = 1;
        e
    }

    pub fn from_u64(&self, c: u64) -> FElem {
        let mut e = vec![0; self.deg];
        e[0] = c % self.p;
        e
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> FElem {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                let s = x + y;
                if s >= self.p {
                    s - self.p
                } else {
                    s
                }
            })
            .collect()
    }

    fn mul_raw(&self, a: &[u64], b: &[u64]) -> FElem {
        let p = self.p;
        let n = self.deg;
        let mut tmp = vec![0u64; 2 * n - 1];
        for i in 0..n {
            if a[i] == 0 {
                continue;
            }
            for j in 0..n {
                tmp[i + j] += a[i] * b[j];
            }
        }
        for k in (n..2 * n - 1).rev() {
            let v = tmp[k] % p;
            tmp[k] = 0;
            if v == 0 {
                continue;
            }
            for j in 0..n {
                let g = self.defining[j] % p;
                if g != 0 {
                    tmp[k - n + j] += v * (p - g);
                }
            }
        }
        tmp.truncate(n);
        tmp.iter().map(|&c| c % p).collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> FElem {
        self.mul_raw(a, b)
    }

    pub fn pow(&self, a: &[u64], mut e: u128) -> FElem {
        let mut acc = self.one();
        let mut b = a.to_vec();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    pub fn frobenius(&self, a: &[u64]) -> FElem {
        let mut out = vec![0u64; self.deg];
        for (k, &c) in a.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for i in 0..self.deg {
                out[i] = (out[i] + c * self.frob_cols[k][i]) % self.p;
            }
        }
        out
    }

    /// Absolute trace to F_p.
    pub fn trace(&self, a: &[u64]) -> u64 {
        let mut t = 0u64;
        for (c, w) in a.iter().zip(&self.trace_table) {
            t = (t + c * w) % self.p;
        }
        t
    }

    /// Horner evaluation of a monic polynomial with embedded coefficients
    /// `coeffs = [a_0, ..., a_{d-1}]` (leading coefficient 1) at `x`.
    pub fn eval_monic(&self, coeffs: &[FElem], x: &[u64]) -> FElem {
        let mut acc = self.one();
        for c in coeffs.iter().rev() {
            acc = self.mul(&acc, x);
            acc = self.add(&acc, c);
        }
        acc
    }

    /// Image of the canonical generator of F_{p^sub} inside this field,
    /// where sub | deg. Found as a root of the subfield's defining
    /// polynomial among the fixed points of Frobenius^sub.
    pub fn embed_subfield_generator(&self, sub: usize) -> Result<FElem> {
        if self.deg % sub != 0 {
            return Err(Error::BadInput(format!(
                "{} is not a subfield degree of {}",
                sub, self.deg
            )));
        }
        let u = irreducible_poly(self.p, sub)?;
        if sub == 1 {
            // generator of F_p under poly x is the residue 0
            return Ok(self.zero());
        }
        // kernel basis of Frob^sub - I by Gaussian elimination over F_p
        let n = self.deg;
        let p = self.p;
        let mut mat = vec![vec![0u64; n]; n];
        for k in 0..n {
            let mut z = vec![0u64; n];
            z[k] = 1;
            for _ in 0..sub {
                z = self.frobenius(&z);
            }
            for i in 0..n {
                mat[i][k] = (z[i] + p - if i == k { 1 } else { 0 }) % p;
            }
        }
        let basis = kernel_basis(&mat, p);
        debug_assert_eq!(basis.len(), sub, "subfield dimension");
        // scan the p^sub subfield elements for a root of u
        let u_coeffs: Vec<FElem> = u[..sub].iter().map(|&c| self.from_u64(c)).collect();
        let mut counter = vec![0u64; sub];
        loop {
            let mut cand = vec![0u64; n];
            for (c, b) in counter.iter().zip(&basis) {
                if *c != 0 {
                    for i in 0..n {
                        cand[i] = (cand[i] + c * b[i]) % p;
                    }
                }
            }
            if self.eval_monic(&u_coeffs, &cand).iter().all(|&c| c == 0) {
                return Ok(cand);
            }
            let mut i = 0;
            loop {
                if i == sub {
                    return Err(Error::BadInput(
                        "subfield generator not found (inconsistent field model)".into(),
                    ));
                }
                counter[i] += 1;
                if counter[i] < p {
                    break;
                }
                counter[i] = 0;
                i += 1;
            }
        }
    }

    /// Iterate over all field elements in a fixed order.
    pub fn iter_elems(&self) -> ElemIter<'_> {
        ElemIter {
            field: self,
            cur: Some(vec![0; self.deg]),
        }
    }
}

fn kernel_basis(mat: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let n = mat.len();
    let mut m: Vec<Vec<u64>> = mat.to_vec();
    let mut pivot_col_of_row = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let mut piv = None;
        for i in r..n {
            if m[i][c] != 0 {
                piv = Some(i);
                break;
            }
        }
        let Some(piv) = piv else { continue };
        m.swap(r, piv);
        let inv = inv_mod(m[r][c], p).expect("pivot unit");
        for j in 0..n {
            m[r][j] = (m[r][j] * inv) % p;
        }
        for i in 0..n {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..n {
                    m[i][j] = (m[i][j] + (p - f) * m[r][j]) % p;
                }
            }
        }
        pivot_col_of_row.push(c);
        r += 1;
        if r == n {
            break;
        }
    }
    let pivots: std::collections::HashSet<usize> = pivot_col_of_row.iter().copied().collect();
    let mut basis = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0u64; n];
        v[free] = 1;
        for (row, &pc) in pivot_col_of_row.iter().enumerate() {
            v[pc] = (p - m[row][free] % p) % p;
        }
        basis.push(v);
    }
    basis
}

pub struct ElemIter<'a> {
    field: &'a ExtField,
    cur: Option<FElem>,
}

impl Iterator for ElemIter<'_> {
    type Item = FElem;

    fn next(&mut self) -> Option<FElem> {
        let cur = self.cur.take()?;
        let mut next = cur.clone();
        let mut i = 0;
        loop {
            if i == next.len() {
                self.cur = None;
                break;
            }
            next[i] += 1;
            if next[i] < self.field.p {
                self.cur = Some(next);
                break;
            }
            next[i] = 0;
            i += 1;
        }
        Some(cur)
    }
}
