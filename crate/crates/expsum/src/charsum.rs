//! Ground-truth oracle: exact exponential sums by full enumeration.
//!
//! S_l(f) = sum over x in F_{q^l} of zeta_p^{Tr(f(x))} is tallied as a
//! histogram of absolute traces, so the inner loop is pure u64 work. The
//! L polynomial exp(sum S_l T^l / l) truncated at degree d-1 is then exact
//! cyclotomic-integer arithmetic. No Gauss-sum shortcuts anywhere: this
//! path must stay independent of the p-adic route it is used to check.

use serde::Serialize;

use crate::cyclotomic::CycInt;
use crate::error::{Error, Result};
use crate::fields::{irreducible_poly, ExtField, FElem, FpPoly};
use crate::polygon::{Ordinate, Polygon};
use crate::util::{gcd_u64, rat, require_prime};

/// Enumeration guard: refuse fields larger than this.
pub const ENUM_GUARD: u128 = 1 << 26;

/// Monic polynomial of degree d over F_q; coefficients a_0..a_{d-1} as
/// F_q elements (length-a vectors over F_p), leading coefficient 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonicPoly {
    pub d: usize,
    pub coeffs: Vec<FElem>,
}

impl MonicPoly {
    /// Coefficients given as integers, reduced mod p into the prime field.
    pub fn from_ints(p: u64, a: usize, d: usize, ints: &[i64]) -> Result<MonicPoly> {
        if ints.len() != d {
            return Err(Error::BadInput(format!(
                "need {d} coefficients a_0..a_{}, got {}",
                d - 1,
                ints.len()
            )));
        }
        let coeffs = ints
            .iter()
            .map(|&c| {
                let mut e = vec![0u64; a];
                e[0] = c.rem_euclid(p as i64) as u64;
                e
            })
            .collect();
        Ok(MonicPoly { d, coeffs })
    }
}

/// Wire form of one L coefficient: the integer coordinates on
/// 1, zeta, ..., zeta^{p-2} and the exact q-adic order as `num/den`
/// (absent for the zero coefficient).
#[derive(Debug, Clone, Serialize)]
pub struct LCoefficient {
    pub zeta_coords: Vec<String>,
    pub ord_q: Option<String>,
}

impl LCoefficient {
    pub fn from_cyc(b: &CycInt, a: usize) -> LCoefficient {
        LCoefficient {
            zeta_coords: b.c.iter().map(|c| c.to_string()).collect(),
            ord_q: b
                .val_scaled()
                .map(|v| crate::util::rat_str(&crate::util::rat(v, a as i64 * (b.p as i64 - 1)))),
        }
    }
}

/// Everything recorded about the fixed embedding of the cyclotomic data
/// into the p-adic world, so that cross-run comparisons at small p are
/// meaningful.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingRecord {
    pub p: u64,
    pub a: usize,
    /// defining polynomial of Z_q over Z_p (and of F_q over F_p)
    pub unramified_poly: Vec<u64>,
    /// defining polynomials of the enumeration fields F_{q^l}
    pub extension_polys: Vec<Vec<u64>>,
    /// the p-th root of unity convention shared with the p-adic route
    pub zeta_convention: String,
}

struct SumCtx {
    field: ExtField,
    /// images of y^k (k < a) under the embedding F_q -> F_{q^l}
    embed_pows: Vec<FElem>,
}

/// Character-sum oracle for a fixed (p, a, d): holds the enumeration
/// fields F_{q^l} for l = 1..=d-1 with consistent embeddings of F_q.
pub struct Oracle {
    pub p: u64,
    pub a: usize,
    pub d: usize,
    unram: FpPoly,
    ctxs: Vec<SumCtx>,
}

impl Oracle {
    pub fn new(p: u64, a: usize, d: usize) -> Result<Oracle> {
        require_prime(p)?;
        if d < 3 {
            return Err(Error::BadInput(format!("degree must be >= 3, got {d}")));
        }
        if p % d as u64 == 0 {
            return Err(Error::BadInput(format!("p = {p} divides d = {d}")));
        }
        if a == 0 {
            return Err(Error::BadInput("a must be positive".into()));
        }
        let unram = irreducible_poly(p, a)?;
        let mut ctxs = Vec::with_capacity(d - 1);
        for ell in 1..=d - 1 {
            let deg = a * ell;
            if (p as u128).pow(deg as u32) > ENUM_GUARD {
                return Err(Error::ResourceGuard(format!(
                    "enumeration of F_{{{p}^{deg}}} exceeds 2^26 elements"
                )));
            }
            let field = ExtField::new(p, deg)?;
            let gen = field.embed_subfield_generator(a)?;
            let mut embed_pows = Vec::with_capacity(a);
            let mut acc = field.one();
            for _ in 0..a {
                embed_pows.push(acc.clone());
                acc = field.mul(&acc, &gen);
            }
            ctxs.push(SumCtx { field, embed_pows });
        }
        Ok(Oracle { p, a, d, unram, ctxs })
    }

    pub fn embedding(&self) -> EmbeddingRecord {
        EmbeddingRecord {
            p: self.p,
            a: self.a,
            unramified_poly: self.unram.clone(),
            extension_polys: self.ctxs.iter().map(|c| c.field.defining.clone()).collect(),
            zeta_convention:
                "zeta_p = E(gamma) where gamma is the Artin-Hasse logarithm root with gamma \
                 = pi mod pi^2 and pi = zeta_p - 1"
                    .into(),
        }
    }

    fn embed(&self, ctx: &SumCtx, c: &FElem) -> FElem {
        let mut out = ctx.field.zero();
        for (ck, pw) in c.iter().zip(&ctx.embed_pows) {
            if *ck != 0 {
                let mut t = pw.clone();
                for v in t.iter_mut() {
                    *v = (*v * ck) % self.p;
                }
                out = ctx.field.add(&out, &t);
            }
        }
        out
    }

    /// S_l(f): exact sum of zeta_p^{Tr(f(x))} over x in F_{q^l}.
    pub fn char_sum(&self, f: &MonicPoly, ell: usize) -> Result<CycInt> {
        if ell == 0 || ell > self.d - 1 {
            return Err(Error::BadInput(format!(
                "l = {ell} outside 1..={}",
                self.d - 1
            )));
        }
        if gcd_u64(self.p, self.d as u64) != 1 {
            return Err(Error::BadInput(format!(
                "p = {} divides d = {}",
                self.p, self.d
            )));
        }
        if f.d != self.d || f.coeffs.len() != self.d {
            return Err(Error::BadInput("polynomial degree mismatch".into()));
        }
        let ctx = &self.ctxs[ell - 1];
        let coeffs: Vec<FElem> = f.coeffs.iter().map(|c| self.embed(ctx, c)).collect();
        let mut counts = vec![0i64; self.p as usize];
        for x in ctx.field.iter_elems() {
            let v = ctx.field.eval_monic(&coeffs, &x);
            counts[ctx.field.trace(&v) as usize] += 1;
        }
        Ok(CycInt::from_counts(self.p, &counts))
    }

    /// Coefficients b_0 = 1, b_1, ..., b_{d-1} of the L polynomial
    /// exp(sum_{l>=1} S_l T^l / l) truncated at degree d-1. Every division
    /// in the recurrence n b_n = sum S_l b_{n-l} must be exact in
    /// Z[zeta_p]; a failure is an arithmetic bug, never valid data.
    pub fn l_polynomial(&self, f: &MonicPoly) -> Result<Vec<CycInt>> {
        let mut s = Vec::with_capacity(self.d - 1);
        for ell in 1..=self.d - 1 {
            s.push(self.char_sum(f, ell)?);
        }
        let mut b = vec![CycInt::one(self.p)];
        for n in 1..=self.d - 1 {
            let mut acc = CycInt::zero(self.p);
            for ell in 1..=n {
                acc = acc.add(&s[ell - 1].mul(&b[n - ell]));
            }
            b.push(acc.div_exact_int(n as i64)?);
        }
        Ok(b)
    }

    /// q-adic Newton polygon of the L polynomial: lower hull of
    /// (n, ord_q b_n) with ord_q = ord_p / a. Checked against the Hodge
    /// bound and the exact-degree theorem before returning.
    pub fn np(&self, f: &MonicPoly) -> Result<Polygon> {
        let b = self.l_polynomial(f)?;
        self.np_of_coeffs(&b)
    }

    /// Newton polygon of explicitly given L coefficients (b_0 = 1 first).
    pub fn np_of_coeffs(&self, b: &[CycInt]) -> Result<Polygon> {
        if b.last().map(CycInt::is_zero).unwrap_or(true) {
            return Err(Error::Finding(format!(
                "leading L coefficient b_{} vanishes; the L polynomial must have exact \
                 degree d-1",
                b.len() - 1
            )));
        }
        let denom = (self.a as i64) * (self.p as i64 - 1);
        let points: Vec<(u64, Ordinate)> = b
            .iter()
            .enumerate()
            .map(|(n, bn)| {
                let ord = match bn.val_scaled() {
                    Some(v) => Ordinate::Finite(rat(v, denom)),
                    None => Ordinate::Infinite,
                };
                (n as u64, ord)
            })
            .collect();
        let hull = Polygon::lower_hull(&points)?;
        let np = hull.polygon;
        let hp = Polygon::hodge(self.d as u64)?;
        let above = np.lies_above(&hp)?;
        if !above.holds {
            let (x, hi, lo) = above.violation.unwrap();
            return Err(Error::Finding(format!(
                "Newton polygon dips below the Hodge bound at x = {x}: {hi} < {lo}"
            )));
        }
        Ok(np)
    }

    /// Total number of points enumerated for one full L computation.
    pub fn enumeration_cost(&self) -> u128 {
        self.ctxs.iter().map(|c| c.field.size()).sum()
    }
}
