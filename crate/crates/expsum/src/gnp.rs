//! Residue combinatorics behind the asymptotic generic Newton polygon.
//!
//! For each residue class r mod d the tables r_ij, r'_ij, delta_ij drive a
//! family of sparse rational polynomials H^s_ij in the coefficient
//! variables. Signed products over permutations build f_n^t; the least t
//! with f_n^t nonzero and the minimal permutation assignment of the r_ij
//! give the defect epsilon_n = (min + d t_n) / (d (p-1)), and the polygon
//! through (n, n(n+1)/2d + epsilon_n) is the generic Newton polygon for
//! p = r mod d large. The nonvanishing products also decide membership in
//! the good coefficient locus where that polygon is attained.
//!
//! Nonvanishing of f_n^t is decided by evaluation at fixed pseudorandom
//! points modulo a 61-bit prime: a nonzero value is a proof, and the zero
//! conclusion is wrong with probability below deg/2^61 per point. The
//! symbolic construction is kept alongside and cross-checked in tests for
//! small d, where it is affordable.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{ExtField, FElem};
use crate::polygon::{Ordinate, Polygon};
use crate::util::{gcd_u64, inv_mod, is_prime, mul_mod, rat, rat_str};

/// Least nonnegative residues r_ij of -(ri - j) and r'_ij of ri - j
/// mod d, and the thresholds delta_ij, for 1 <= i, j <= d-1.
#[derive(Debug, Clone)]
pub struct ResidueTable {
    pub d: usize,
    pub r: usize,
    r_ij: Vec<u64>,
    rp_ij: Vec<u64>,
    delta_ij: Vec<u64>,
}

impl ResidueTable {
    pub fn new(d: usize, r: usize) -> Result<ResidueTable> {
        if d < 3 {
            return Err(Error::BadInput("d must be >= 3".into()));
        }
        if r == 0 || r >= d || gcd_u64(r as u64, d as u64) != 1 {
            return Err(Error::BadInput(format!(
                "residue class r = {r} must satisfy 1 <= r <= d-1 and gcd(r, d) = 1"
            )));
        }
        let m = d - 1;
        let mut r_ij = vec![0u64; m * m];
        let mut rp_ij = vec![0u64; m * m];
        let mut delta_ij = vec![0u64; m * m];
        for i in 1..=m {
            let rp_i1 = (r as i64 * i as i64 - 1).rem_euclid(d as i64) as u64;
            for j in 1..=m {
                let t = r as i64 * i as i64 - j as i64;
                r_ij[(i - 1) * m + (j - 1)] = (-t).rem_euclid(d as i64) as u64;
                rp_ij[(i - 1) * m + (j - 1)] = t.rem_euclid(d as i64) as u64;
                delta_ij[(i - 1) * m + (j - 1)] = u64::from(j as u64 > rp_i1);
            }
        }
        Ok(ResidueTable {
            d,
            r,
            r_ij,
            rp_ij,
            delta_ij,
        })
    }

    pub fn r(&self, i: usize, j: usize) -> u64 {
        self.r_ij[(i - 1) * (self.d - 1) + (j - 1)]
    }

    pub fn r_prime(&self, i: usize, j: usize) -> u64 {
        self.rp_ij[(i - 1) * (self.d - 1) + (j - 1)]
    }

    pub fn delta(&self, i: usize, j: usize) -> u64 {
        self.delta_ij[(i - 1) * (self.d - 1) + (j - 1)]
    }
}

/// Sparse polynomial over Q in the d-1 coefficient variables; exponent
/// vectors are the map keys, zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseRatPoly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u16>, BigRational>,
}

impl SparseRatPoly {
    pub fn zero(nvars: usize) -> SparseRatPoly {
        SparseRatPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, expo: Vec<u16>, coef: BigRational) {
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(expo).or_insert_with(BigRational::zero);
        *entry += coef;
        if entry.is_zero() {
            let key: Vec<u16> = self
                .terms
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .expect("zero entry present");
            self.terms.remove(&key);
        }
    }

    pub fn mul(&self, other: &SparseRatPoly) -> SparseRatPoly {
        let mut out = SparseRatPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let expo: Vec<u16> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(expo, ca * cb);
            }
        }
        out
    }

    pub fn scaled(&self, k: &BigRational) -> SparseRatPoly {
        let mut out = SparseRatPoly::zero(self.nvars);
        if k.is_zero() {
            return out;
        }
        for (e, c) in &self.terms {
            out.terms.insert(e.clone(), c * k);
        }
        out
    }

    pub fn add(&self, other: &SparseRatPoly) -> SparseRatPoly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (x, &k) in point.iter().zip(e) {
                for _ in 0..k {
                    term *= x;
                }
            }
            acc += term;
        }
        acc
    }

    /// Largest reduced denominator across coefficients.
    pub fn denominator_lcm(&self) -> BigInt {
        let mut l = BigInt::one();
        for c in self.terms.values() {
            l = num_integer::Integer::lcm(&l, c.denom());
        }
        l
    }
}

/// Enumerate m in Z_{>=0}^{d-1} with sum_{l} l m_{d-l} = target, i.e.
/// component k carries weight d-k; calls f(m, |m|) per solution.
fn enumerate_weighted<C: FnMut(&[u16], u64)>(d: usize, target: u64, mut f: C) {
    let mut m = vec![0u16; d - 1];
    fn rec<C: FnMut(&[u16], u64)>(
        d: usize,
        k: usize,
        rem: u64,
        size: u64,
        m: &mut Vec<u16>,
        f: &mut C,
    ) {
        if k == d - 2 {
            // last component has weight 1
            m[k] = rem as u16;
            f(m, size + rem);
            m[k] = 0;
            return;
        }
        let w = (d - 1 - k) as u64; // weight of component k (0-based)
        let mut cnt = 0u64;
        loop {
            let used = cnt * w;
            if used > rem {
                break;
            }
            m[k] = cnt as u16;
            rec(d, k + 1, rem - used, size + cnt, m, f);
            cnt += 1;
        }
        m[k] = 0;
    }
    rec(d, 0, target, 0, &mut m, &mut f);
}

/// H^s_ij: the sum over weighted compositions m of r_ij + ds of
/// [falling product from (r_i1 - 1)/d + d - 1 down by 1, with
/// d - 1 + delta_ij - s + |m| factors] / m! times the monomial A^m.
/// An empty (or negative-length) factor range is the empty product 1.
pub fn h_poly(table: &ResidueTable, i: usize, j: usize, s: u64) -> SparseRatPoly {
    let d = table.d;
    let target = table.r(i, j) + d as u64 * s;
    let x = rat(table.r(i, 1) as i64 - 1, d as i64);
    let delta = table.delta(i, j) as i64;
    let mut out = SparseRatPoly::zero(d - 1);
    enumerate_weighted(d, target, |m, size| {
        let count = d as i64 - 1 + delta - s as i64 + size as i64;
        let mut coef = BigRational::one();
        let mut t = x.clone() + rat(d as i64 - 1, 1);
        for _ in 0..count.max(0) {
            coef *= &t;
            t -= BigRational::one();
        }
        for &mk in m {
            for f in 2..=mk as i64 {
                coef /= BigRational::from_integer(BigInt::from(f));
            }
        }
        out.add_term(m.to_vec(), coef);
    });
    out
}

fn permutations_with_signs(n: usize) -> Vec<(Vec<usize>, i8)> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    fn heap(k: usize, arr: &mut Vec<usize>, sign: &mut i8, out: &mut Vec<(Vec<usize>, i8)>) {
        if k == 1 {
            out.push((arr.clone(), *sign));
            return;
        }
        for i in 0..k {
            heap(k - 1, arr, sign, out);
            if k % 2 == 0 {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
            *sign = -*sign;
        }
    }
    let mut sign = 1i8;
    heap(n, &mut idx, &mut sign, &mut out);
    out
}

/// f_n^t as a symbolic polynomial: sum over s_0 + ... + s_n = t and
/// permutations at level s_0 of sgn(sigma) prod_i H^{s_i}_{i, sigma(i)}.
/// Affordable for small d; the evaluation route below is what the polygon
/// pipeline uses.
pub fn f_n_t(table: &ResidueTable, n: usize, t: u64) -> Result<SparseRatPoly> {
    let d = table.d;
    if n == 0 || n > d - 1 {
        return Err(Error::BadInput(format!("n = {n} outside 1..={}", d - 1)));
    }
    let perms = permutations_with_signs(n);
    let min = perms
        .iter()
        .map(|(s, _)| (0..n).map(|i| table.r(i + 1, s[i] + 1)).sum::<u64>())
        .min()
        .expect("nonempty");
    let mut hc: BTreeMap<(usize, usize, u64), SparseRatPoly> = BTreeMap::new();
    let mut out = SparseRatPoly::zero(d - 1);
    for (sigma, sign) in &perms {
        let sum: u64 = (0..n).map(|i| table.r(i + 1, sigma[i] + 1)).sum();
        debug_assert_eq!((sum - min) % d as u64, 0);
        let s0 = (sum - min) / d as u64;
        if s0 > t {
            continue;
        }
        let rest = t - s0;
        // compositions of `rest` into n parts s_1..s_n
        let mut parts = vec![0u64; n];
        compose(rest, 0, &mut parts, &mut |parts: &[u64]| {
            let mut prod = SparseRatPoly::zero(d - 1);
            prod.add_term(vec![0; d - 1], BigRational::one());
            for (i, &si) in parts.iter().enumerate() {
                let key = (i + 1, sigma[i] + 1, si);
                let h = hc
                    .entry(key)
                    .or_insert_with(|| h_poly(table, key.0, key.1, key.2))
                    .clone();
                prod = prod.mul(&h);
            }
            let signed = if *sign < 0 {
                prod.scaled(&-BigRational::one())
            } else {
                prod
            };
            out = out.add(&signed);
        });
    }
    // denominator bound: each factor contributes at most d + |m_i| powers
    // of d and the factorials divide (sum |m_i|)!, with sum |m_i| bounded
    // by n(d-1) + dt
    let msum = (n as u64 * (d as u64 - 1) + d as u64 * t) as i64;
    let mut bound = BigInt::one();
    for _ in 0..(n * 2 * d) as i64 + d as i64 * t as i64 {
        bound *= d as i64;
    }
    for k in 2..=msum {
        bound *= k;
    }
    let lcm = out.denominator_lcm();
    if !num_integer::Integer::is_multiple_of(&bound, &lcm) {
        return Err(Error::Finding(format!(
            "denominator {lcm} of f_{n}^{t} exceeds the provable bound {bound}"
        )));
    }
    Ok(out)
}

fn compose<F: FnMut(&[u64])>(rem: u64, k: usize, parts: &mut Vec<u64>, f: &mut F) {
    if k + 1 == parts.len() {
        parts[k] = rem;
        f(parts);
        parts[k] = 0;
        return;
    }
    for v in 0..=rem {
        parts[k] = v;
        compose(rem - v, k + 1, parts, f);
        parts[k] = 0;
    }
}

/// 61-bit prime modulus for the evaluation route.
const EVAL_PRIME: u64 = (1 << 61) - 1;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// H^s_ij evaluated at a point modulo the evaluation prime.
fn h_eval_mod(table: &ResidueTable, i: usize, j: usize, s: u64, point: &[u64], pr: u64) -> u64 {
    let d = table.d;
    let target = table.r(i, j) + d as u64 * s;
    let dinv = inv_mod(d as u64, pr).expect("d unit");
    // x = (r_i1 - 1)/d
    let x = mul_mod(
        (table.r(i, 1) as i64 - 1).rem_euclid(pr as i64) as u64,
        dinv,
        pr,
    );
    let delta = table.delta(i, j) as i64;
    // powers of the point coordinates up to the largest exponent needed
    let mut acc = 0u64;
    enumerate_weighted(d, target, |m, size| {
        let count = d as i64 - 1 + delta - s as i64 + size as i64;
        let mut coef = 1u64;
        let mut term = (x + (d as u64 - 1)) % pr;
        for _ in 0..count.max(0) {
            coef = mul_mod(coef, term, pr);
            term = (term + pr - 1) % pr;
        }
        let mut fact = 1u64;
        for &mk in m {
            for f in 2..=mk as u64 {
                fact = mul_mod(fact, f, pr);
            }
        }
        coef = mul_mod(coef, inv_mod(fact, pr).expect("factorial unit"), pr);
        let mut mono = 1u64;
        for (xk, &ek) in point.iter().zip(m) {
            for _ in 0..ek {
                mono = mul_mod(mono, *xk, pr);
            }
        }
        acc = (acc + mul_mod(coef, mono, pr)) % pr;
    });
    acc
}

/// Per-(d, r) context: residue tables, the minimal assignment and t_n for
/// every level, computed once.
#[derive(Debug, Clone)]
pub struct GnpContext {
    pub d: usize,
    pub r: usize,
    pub table: ResidueTable,
    pub levels: Vec<GnpLevel>,
    /// levels whose t_n search hit the cap; epsilon is then unavailable
    pub findings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GnpLevel {
    pub n: usize,
    pub min_assignment: u64,
    pub t_n: u64,
}

impl GnpContext {
    pub fn new(d: usize, r: usize) -> Result<GnpContext> {
        let table = ResidueTable::new(d, r)?;
        let mut levels = Vec::with_capacity(d - 1);
        let mut findings = Vec::new();
        for n in 1..=d - 1 {
            let perms = permutations_with_signs(n);
            let sums: Vec<u64> = perms
                .iter()
                .map(|(s, _)| (0..n).map(|i| table.r(i + 1, s[i] + 1)).sum())
                .collect();
            let min = *sums.iter().min().expect("nonempty");
            // fixed pseudorandom evaluation points; a nonzero evaluation
            // proves f_n^t != 0
            let mut seed = (d as u64) << 32 | (r as u64) << 16 | n as u64;
            let points: Vec<Vec<u64>> = (0..4)
                .map(|_| {
                    (0..d - 1)
                        .map(|_| splitmix(&mut seed) % (EVAL_PRIME - 2) + 1)
                        .collect()
                })
                .collect();
            let cap = (n * (d - 1)) as u64;
            let mut t_n = None;
            't_search: for t in 0..=cap {
                for point in &points {
                    let mut acc = 0u64;
                    let mut hmemo: BTreeMap<(usize, usize, u64), u64> = BTreeMap::new();
                    for ((sigma, sign), &sum) in perms.iter().zip(&sums) {
                        let s0 = (sum - min) / d as u64;
                        if s0 > t {
                            continue;
                        }
                        let mut parts = vec![0u64; n];
                        compose(t - s0, 0, &mut parts, &mut |parts: &[u64]| {
                            let mut prod = 1u64;
                            for (i, &si) in parts.iter().enumerate() {
                                let key = (i + 1, sigma[i] + 1, si);
                                let h = *hmemo.entry(key).or_insert_with(|| {
                                    h_eval_mod(&table, key.0, key.1, si, point, EVAL_PRIME)
                                });
                                prod = mul_mod(prod, h, EVAL_PRIME);
                            }
                            if *sign < 0 {
                                acc = (acc + EVAL_PRIME - prod) % EVAL_PRIME;
                            } else {
                                acc = (acc + prod) % EVAL_PRIME;
                            }
                        });
                    }
                    if acc != 0 {
                        t_n = Some(t);
                        break 't_search;
                    }
                }
            }
            match t_n {
                Some(t) => levels.push(GnpLevel {
                    n,
                    min_assignment: min,
                    t_n: t,
                }),
                None => {
                    findings.push(format!(
                        "t_{n} search exhausted the cap {cap} for (d, r) = ({d}, {r})"
                    ));
                    levels.push(GnpLevel {
                        n,
                        min_assignment: min,
                        t_n: cap + 1,
                    });
                }
            }
        }
        Ok(GnpContext {
            d,
            r,
            table,
            levels,
            findings,
        })
    }

    pub fn t_n(&self, n: usize) -> u64 {
        self.levels[n - 1].t_n
    }

    pub fn min_assignment(&self, n: usize) -> u64 {
        self.levels[n - 1].min_assignment
    }

    /// epsilon_n = (min assignment + d t_n) / (d (p-1)), for p = r mod d.
    pub fn epsilon_n(&self, n: usize, p: u64) -> Result<BigRational> {
        if p % self.d as u64 != self.r as u64 {
            return Err(Error::BadInput(format!(
                "p = {p} is not congruent to r = {} mod d = {}",
                self.r, self.d
            )));
        }
        let lev = &self.levels[n - 1];
        Ok(rat(
            (lev.min_assignment + self.d as u64 * lev.t_n) as i64,
            self.d as i64 * (p as i64 - 1),
        ))
    }

    /// Index pairs of the H^0 factors deciding the first membership
    /// product, kept inside the matrix range.
    pub fn psi_index_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 1..=self.d - 1 {
            for j in 1..=(i + 1).min(self.d - 1) {
                out.push((i, j));
            }
        }
        out
    }

    /// Membership of a rational coefficient vector (a_1, ..., a_{d-1}) in
    /// the loci where the H^0 factors, the f_n^{t_n}, and both are
    /// nonvanishing.
    pub fn membership(&self, point: &[BigRational]) -> Result<(bool, bool, bool)> {
        if point.len() != self.d - 1 {
            return Err(Error::BadInput(format!(
                "point must have {} coordinates",
                self.d - 1
            )));
        }
        let in_x = self
            .psi_index_pairs()
            .iter()
            .all(|&(i, j)| !h_poly(&self.table, i, j, 0).eval(point).is_zero());
        let mut in_y = true;
        for n in 1..=self.d - 1 {
            let f = f_n_t(&self.table, n, self.t_n(n))?;
            if f.eval(point).is_zero() {
                in_y = false;
                break;
            }
        }
        Ok((in_x, in_y, in_x && in_y))
    }

    /// Membership decided in the residue field: every coefficient is
    /// reduced mod p, which requires p to divide no denominator. A unit
    /// value mod p certifies nonvanishing of the corresponding rational.
    pub fn membership_residue(
        &self,
        field: &ExtField,
        point: &[FElem],
    ) -> Result<(bool, bool, bool)> {
        if point.len() != self.d - 1 {
            return Err(Error::BadInput(format!(
                "point must have {} coordinates",
                self.d - 1
            )));
        }
        let in_x = {
            let mut all = true;
            for &(i, j) in &self.psi_index_pairs() {
                let h = h_poly(&self.table, i, j, 0);
                if self.eval_mod_field(&h, field, point)?.iter().all(|&c| c == 0) {
                    all = false;
                    break;
                }
            }
            all
        };
        let mut in_y = true;
        for n in 1..=self.d - 1 {
            let f = f_n_t(&self.table, n, self.t_n(n))?;
            if self.eval_mod_field(&f, field, point)?.iter().all(|&c| c == 0) {
                in_y = false;
                break;
            }
        }
        Ok((in_x, in_y, in_x && in_y))
    }

    /// Membership of the Teichmuller point above a residue vector: the
    /// defining polynomials are evaluated p-adically and nonvanishing
    /// means a certified finite valuation. This is the right reading of
    /// the characteristic-zero locus at a point given by its reduction:
    /// a product like f_2^0 = -280/729 at (d, r) = (3, 1) is a nonzero
    /// rational whose residue vanishes at p = 7, so a residue-field test
    /// would wrongly reject every point there.
    pub fn membership_teichmuller(
        &self,
        tower: &crate::padic::Tower,
        residues: &[Vec<u64>],
    ) -> Result<(bool, bool, bool)> {
        if residues.len() != self.d - 1 {
            return Err(Error::BadInput(format!(
                "point must have {} coordinates",
                self.d - 1
            )));
        }
        let point: Vec<crate::padic::PadicElem> =
            residues.iter().map(|r| tower.teichmuller(r)).collect();
        let nonzero = |poly: &SparseRatPoly| -> Result<bool> {
            // clear p from the denominators, then evaluate integrally
            let mut vmax = 0u64;
            for c in poly.terms.values() {
                vmax = vmax.max(crate::util::bigint_val_p(c.denom(), tower.p).unwrap_or(0));
            }
            let scale = BigRational::from_integer(BigInt::from(tower.p).pow(vmax as u32));
            let mut acc = tower.zero();
            for (e, c) in &poly.terms {
                let mut term = tower.from_rational(&(c * &scale))?;
                for (x, &k) in point.iter().zip(e) {
                    for _ in 0..k {
                        term = tower.mul(&term, x);
                    }
                }
                acc = tower.add(&acc, &term);
            }
            Ok(tower.val_scaled(&acc).certified().is_some())
        };
        let mut in_x = true;
        for &(i, j) in &self.psi_index_pairs() {
            if !nonzero(&h_poly(&self.table, i, j, 0))? {
                in_x = false;
                break;
            }
        }
        let mut in_y = true;
        for n in 1..=self.d - 1 {
            if !nonzero(&f_n_t(&self.table, n, self.t_n(n))?)? {
                in_y = false;
                break;
            }
        }
        Ok((in_x, in_y, in_x && in_y))
    }

    fn eval_mod_field(
        &self,
        poly: &SparseRatPoly,
        field: &ExtField,
        point: &[FElem],
    ) -> Result<FElem> {
        let p = field.p;
        let mut acc = field.zero();
        for (e, c) in &poly.terms {
            let num = num_integer::Integer::mod_floor(c.numer(), &BigInt::from(p));
            let den = num_integer::Integer::mod_floor(c.denom(), &BigInt::from(p));
            let den_u = u64::try_from(&den).expect("fits");
            if den_u == 0 {
                return Err(Error::BadInput(format!(
                    "denominator of a membership coefficient vanishes mod {p}; \
                     p is too small for this residue evaluation"
                )));
            }
            let num_u = u64::try_from(&num).expect("fits");
            let scalar = mul_mod(num_u, inv_mod(den_u, p)?, p);
            let mut term = field.from_u64(scalar);
            for (x, &k) in point.iter().zip(e) {
                for _ in 0..k {
                    term = field.mul(&term, x);
                }
            }
            acc = field.add(&acc, &term);
        }
        Ok(acc)
    }

    /// The asymptotic generic Newton polygon for a prime p = r mod d:
    /// lower hull of (n, n(n+1)/2d + epsilon_n), every point a vertex.
    pub fn gnp_polygon(&self, p: u64) -> Result<GnpReport> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p % self.d as u64 == 0 {
            return Err(Error::BadInput(format!("p = {p} divides d = {}", self.d)));
        }
        let mut findings = self.findings.clone();
        let d = self.d;
        let mut pts = vec![(0u64, Ordinate::Finite(BigRational::zero()))];
        let mut eps = vec![BigRational::zero()];
        for n in 1..=d - 1 {
            let e = self.epsilon_n(n, p)?;
            if e.is_negative() {
                findings.push(format!("epsilon_{n} is negative: {}", rat_str(&e)));
            }
            let y = rat((n * (n + 1)) as i64, (2 * d) as i64) + &e;
            pts.push((n as u64, Ordinate::Finite(y)));
            eps.push(e);
        }
        if !eps[d - 1].is_zero() {
            findings.push(format!(
                "epsilon_{} = {} is nonzero at the endpoint",
                d - 1,
                rat_str(&eps[d - 1])
            ));
        }
        let hull = Polygon::lower_hull(&pts)?;
        let polygon = hull.polygon;
        if polygon.vertices().len() != d {
            findings.push(format!(
                "only {} of the {d} support points are vertices",
                polygon.vertices().len()
            ));
        }
        let hp = Polygon::hodge(d as u64)?;
        if !polygon.lies_above(&hp)?.holds {
            findings.push("generic polygon dips below the Hodge bound".into());
        }
        Ok(GnpReport {
            d,
            r: self.r,
            p,
            levels: self.levels.clone(),
            epsilon: eps.iter().map(rat_str).collect(),
            psi_factors: self.psi_index_pairs(),
            polygon,
            findings,
        })
    }
}

/// Everything the polygon command reports for one (d, r, p).
#[derive(Debug, Clone, Serialize)]
pub struct GnpReport {
    pub d: usize,
    pub r: usize,
    pub p: u64,
    pub levels: Vec<GnpLevel>,
    /// epsilon_0 .. epsilon_{d-1} as exact strings
    pub epsilon: Vec<String>,
    pub psi_factors: Vec<(usize, usize)>,
    pub polygon: Polygon,
    pub findings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::rat_int;

    #[test]
    fn residue_tables_d3() {
        let t1 = ResidueTable::new(3, 1).unwrap();
        for i in 1..=2 {
            assert_eq!(t1.r(i, i), 0);
        }
        let t2 = ResidueTable::new(3, 2).unwrap();
        assert_eq!(
            (t2.r(1, 1), t2.r(1, 2), t2.r(2, 1), t2.r(2, 2)),
            (2, 0, 0, 1)
        );
        // r'_21 = 0, so delta_2j = 1 for every j
        assert_eq!(t2.r_prime(2, 1), 0);
        assert_eq!((t2.delta(2, 1), t2.delta(2, 2)), (1, 1));
        assert!(ResidueTable::new(4, 2).is_err());
    }

    #[test]
    fn h_poly_frozen_values_d3_r2() {
        let t = ResidueTable::new(3, 2).unwrap();
        // H^0_11 = (28/27) A_1 - (28/81) A_2^2
        let h11 = h_poly(&t, 1, 1, 0);
        assert_eq!(h11.terms.len(), 2);
        assert_eq!(h11.terms.get(&vec![1u16, 0]).unwrap(), &rat(28, 27));
        assert_eq!(h11.terms.get(&vec![0u16, 2]).unwrap(), &rat(-28, 81));
        // H^0_21 = -10/27, constant
        let h21 = h_poly(&t, 2, 1, 0);
        assert_eq!(h21.terms.len(), 1);
        assert_eq!(h21.terms.get(&vec![0u16, 0]).unwrap(), &rat(-10, 27));
    }

    #[test]
    fn h_vanishes_at_zero_iff_constantless() {
        let t = ResidueTable::new(3, 2).unwrap();
        let zero = vec![BigRational::zero(), BigRational::zero()];
        for i in 1..=2 {
            for j in 1..=2 {
                for s in 0..2u64 {
                    let h = h_poly(&t, i, j, s);
                    let has_constant = t.r(i, j) + 3 * s == 0;
                    assert_eq!(!h.eval(&zero).is_zero(), has_constant, "({i},{j},{s})");
                }
            }
        }
    }

    #[test]
    fn t_n_and_epsilon_for_d3() {
        // r = 1: identity assignment gives 0, t_n = 0, epsilon = 0
        let c1 = GnpContext::new(3, 1).unwrap();
        assert!(c1.findings.is_empty());
        for n in 1..=2 {
            assert_eq!(c1.min_assignment(n), 0);
            assert_eq!(c1.t_n(n), 0);
            assert!(c1.epsilon_n(n, 7).unwrap().is_zero());
        }
        // r = 2: epsilon_1 = 2/(3(p-1)), epsilon_2 = 0
        let c2 = GnpContext::new(3, 2).unwrap();
        assert!(c2.findings.is_empty());
        assert_eq!((c2.min_assignment(1), c2.t_n(1)), (2, 0));
        assert_eq!((c2.min_assignment(2), c2.t_n(2)), (0, 0));
        assert_eq!(c2.epsilon_n(1, 5).unwrap(), rat(1, 6));
        assert_eq!(c2.epsilon_n(1, 11).unwrap(), rat(1, 15));
        assert!(c2.epsilon_n(2, 5).unwrap().is_zero());
        assert!(c2.epsilon_n(1, 7).is_err());
    }

    #[test]
    fn f_2_0_is_minus_h12_h21_for_d3_r2() {
        let t = ResidueTable::new(3, 2).unwrap();
        let f = f_n_t(&t, 2, 0).unwrap();
        let want = h_poly(&t, 1, 2, 0)
            .mul(&h_poly(&t, 2, 1, 0))
            .scaled(&-BigRational::one());
        assert_eq!(f, want);
        assert!(!f.is_zero());
    }

    #[test]
    fn symbolic_and_modular_t_n_agree_small_d() {
        for d in [3usize, 4, 5] {
            for r in 1..d {
                if gcd_u64(r as u64, d as u64) != 1 {
                    continue;
                }
                let ctx = GnpContext::new(d, r).unwrap();
                for n in 1..=d - 1 {
                    // recompute t_n symbolically: least t with f_n^t != 0
                    let mut sym = None;
                    for t in 0..=(n * (d - 1)) as u64 {
                        if !f_n_t(&ctx.table, n, t).unwrap().is_zero() {
                            sym = Some(t);
                            break;
                        }
                    }
                    assert_eq!(
                        sym,
                        Some(ctx.t_n(n)),
                        "t_{n} mismatch for (d, r) = ({d}, {r})"
                    );
                }
            }
        }
    }

    #[test]
    fn gnp_polygon_examples_d3() {
        // p = 1 mod 3: the generic polygon is the Hodge polygon
        let c1 = GnpContext::new(3, 1).unwrap();
        let rep = c1.gnp_polygon(7).unwrap();
        assert!(rep.findings.is_empty(), "{:?}", rep.findings);
        assert_eq!(rep.polygon, Polygon::hodge(3).unwrap());

        // p = 5: support points (0,0), (1,1/2), (2,1) are collinear, so
        // the polygon is the slope-1/2 line and the vertex property fails
        // at this small p; the report must say so rather than hide it
        let c2 = GnpContext::new(3, 2).unwrap();
        let rep = c2.gnp_polygon(5).unwrap();
        assert_eq!(rep.findings.len(), 1, "{:?}", rep.findings);
        assert!(rep.findings[0].contains("support points"));
        assert_eq!(rep.polygon.slopes(), vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(rep.polygon.eval_at(1).unwrap(), rat(1, 2));
        // p = 11: first slope 2/5 and every point a vertex
        let rep = c2.gnp_polygon(11).unwrap();
        assert!(rep.findings.is_empty(), "{:?}", rep.findings);
        assert_eq!(rep.polygon.slopes()[0], rat(2, 5));
    }

    #[test]
    fn membership_examples_d3_r2() {
        let c = GnpContext::new(3, 2).unwrap();
        // x^3 itself: a = (0, 0) kills H^0_11
        let zero = vec![rat_int(0), rat_int(0)];
        let (in_x, _, in_w) = c.membership(&zero).unwrap();
        assert!(!in_x);
        assert!(!in_w);
        // a = (1, 1) is inside
        let pt = vec![rat_int(1), rat_int(1)];
        let (in_x, in_y, in_w) = c.membership(&pt).unwrap();
        assert!(in_x && in_y && in_w);
        // a = (1, 0) fails the (2,2) factor: H^0_22 is a multiple of A_2
        let pt = vec![rat_int(1), rat_int(0)];
        let h22 = h_poly(&c.table, 2, 2, 0);
        assert_eq!(h22.terms.len(), 1);
        assert!(h22.terms.contains_key(&vec![0u16, 1]));
        assert!(!c.membership(&pt).unwrap().0);
    }

    #[test]
    fn membership_density_heuristic() {
        let c = GnpContext::new(3, 2).unwrap();
        let mut seed = 0xabcdef12345u64;
        let mut inside = 0;
        for _ in 0..100 {
            let pt = vec![
                rat_int((splitmix(&mut seed) % 1000) as i64 + 1),
                rat_int((splitmix(&mut seed) % 1000) as i64 + 1),
            ];
            if c.membership(&pt).unwrap().2 {
                inside += 1;
            }
        }
        assert!(inside >= 90, "only {inside} of 100 integer points inside");
    }

    #[test]
    fn endpoint_epsilon_zero_through_d8() {
        for d in 3..=8usize {
            for r in 1..d {
                if gcd_u64(r as u64, d as u64) != 1 {
                    continue;
                }
                let c = GnpContext::new(d, r).unwrap();
                assert!(c.findings.is_empty(), "(d,r)=({d},{r}): {:?}", c.findings);
                assert_eq!(
                    (c.min_assignment(d - 1), c.t_n(d - 1)),
                    (0, 0),
                    "endpoint defect nonzero at (d, r) = ({d}, {r})"
                );
            }
        }
    }

    #[test]
    fn r1_has_zero_defect_everywhere() {
        for d in 3..=8usize {
            let c = GnpContext::new(d, 1).unwrap();
            for n in 1..=d - 1 {
                assert_eq!((c.min_assignment(n), c.t_n(n)), (0, 0), "d={d} n={n}");
            }
        }
    }
}
