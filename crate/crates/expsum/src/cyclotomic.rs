//! Exact arithmetic in Z[zeta_p], the ring of integers generated by a
//! primitive p-th root of unity, with exact p-adic valuations.
//!
//! An element is an integer vector of coordinates on 1, zeta, ...,
//! zeta^{p-2}; the ring relation 1 + zeta + ... + zeta^{p-1} = 0 folds
//! higher powers down. The valuation is computed through the basis change
//! zeta = 1 + pi: on the uniformizer basis the p-adic orders of nonzero
//! terms all have distinct fractional parts i/(p-1), so the minimum is
//! attained once and the valuation is exact, with no p-adic truncation.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::util::bigint_val_p;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycInt {
    pub p: u64,
    /// coordinates of 1, zeta, ..., zeta^{p-2}
    pub c: Vec<BigInt>,
}

impl CycInt {
    pub fn zero(p: u64) -> CycInt {
        CycInt {
            p,
            c: vec![BigInt::zero(); (p - 1) as usize],
        }
    }

    pub fn one(p: u64) -> CycInt {
        let mut z = CycInt::zero(p);
        z.c[0] = BigInt::one();
        z
    }

    pub fn from_int(p: u64, n: i64) -> CycInt {
        let mut z = CycInt::zero(p);
        z.c[0] = BigInt::from(n);
        z
    }

    /// Sum of counts[t] * zeta^t over 0 <= t <= p-1, reduced.
    pub fn from_counts(p: u64, counts: &[i64]) -> CycInt {
        assert_eq!(counts.len(), p as usize);
        let top = BigInt::from(counts[(p - 1) as usize]);
        let c = (0..(p - 1) as usize)
            .map(|i| BigInt::from(counts[i]) - &top)
            .collect();
        CycInt { p, c }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn add(&self, other: &CycInt) -> CycInt {
        assert_eq!(self.p, other.p);
        CycInt {
            p: self.p,
            c: self.c.iter().zip(&other.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CycInt) -> CycInt {
        assert_eq!(self.p, other.p);
        CycInt {
            p: self.p,
            c: self.c.iter().zip(&other.c).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn neg(&self) -> CycInt {
        CycInt {
            p: self.p,
            c: self.c.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, k: &BigInt) -> CycInt {
        CycInt {
            p: self.p,
            c: self.c.iter().map(|a| a * k).collect(),
        }
    }

    pub fn mul(&self, other: &CycInt) -> CycInt {
        assert_eq!(self.p, other.p);
        let n = (self.p - 1) as usize;
        let mut tmp = vec![BigInt::zero(); 2 * n - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.c.iter().enumerate() {
                tmp[i + j] += a * b;
            }
        }
        // zeta^{p-1+k} = -(zeta^k + zeta^{k+1} + ... + zeta^{k+p-2})
        for k in (n..2 * n - 1).rev() {
            let v = std::mem::take(&mut tmp[k]);
            if v.is_zero() {
                continue;
            }
            for j in 0..n {
                tmp[k - n + j] -= &v;
            }
        }
        tmp.truncate(n);
        CycInt { p: self.p, c: tmp }
    }

    /// Exact divisibility by an integer; errors if any coordinate fails,
    /// which signals an arithmetic bug upstream rather than valid data.
    pub fn div_exact_int(&self, k: i64) -> Result<CycInt> {
        let kk = BigInt::from(k);
        let mut out = Vec::with_capacity(self.c.len());
        for a in &self.c {
            let (q, r) = num_integer::Integer::div_rem(a, &kk);
            if !r.is_zero() {
                return Err(Error::IntegralityFailure(format!(
                    "coordinate {a} not divisible by {k}"
                )));
            }
            out.push(q);
        }
        Ok(CycInt { p: self.p, c: out })
    }

    /// Galois action zeta -> zeta^k for 1 <= k <= p-1.
    pub fn galois(&self, k: u64) -> CycInt {
        assert!(k >= 1 && k < self.p);
        let p = self.p;
        let mut counts = vec![BigInt::zero(); p as usize];
        for (i, a) in self.c.iter().enumerate() {
            let e = (i as u64 * k) % p;
            counts[e as usize] += a;
        }
        let top = counts[(p - 1) as usize].clone();
        let c = (0..(p - 1) as usize)
            .map(|i| &counts[i] - &top)
            .collect();
        CycInt { p, c }
    }

    /// Exact valuation scaled by (p-1): returns k with ord_p = k/(p-1),
    /// or None for the zero element.
    ///
    /// Change basis by zeta^i = (1+pi)^i; the pi-coordinates are integers
    /// b_j with j < p-1, and ord_p(sum b_j pi^j) = min_j (v_p(b_j)(p-1) + j)
    /// because the fractional parts are distinct.
    pub fn val_scaled(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let n = (self.p - 1) as usize;
        // Pascal triangle rows up to p-2
        let mut binom = vec![vec![BigInt::zero(); n]; n];
        for i in 0..n {
            binom[i][0] = BigInt::one();
            for j in 1..=i {
                binom[i][j] = &binom[i - 1][j - 1]
                    + if j < i {
                        binom[i - 1][j].clone()
                    } else {
                        BigInt::zero()
                    };
            }
        }
        let mut best: Option<i64> = None;
        for j in 0..n {
            let mut bj = BigInt::zero();
            for i in j..n {
                if !self.c[i].is_zero() {
                    bj += &self.c[i] * &binom[i][j];
                }
            }
            if let Some(v) = bigint_val_p(&bj, self.p) {
                let cand = (v as i64) * (self.p as i64 - 1) + j as i64;
                best = Some(best.map_or(cand, |b: i64| b.min(cand)));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeta(p: u64) -> CycInt {
        let mut z = CycInt::zero(p);
        z.c[1] = BigInt::one();
        z
    }

    #[test]
    fn ring_relation() {
        // 1 + zeta + ... + zeta^{p-1} = 0
        let p = 7;
        let mut acc = CycInt::zero(p);
        let mut zp = CycInt::one(p);
        for _ in 0..p {
            acc = acc.add(&zp);
            zp = zp.mul(&zeta(p));
        }
        assert!(acc.is_zero());
        // zeta^p = 1
        assert_eq!(zp, CycInt::one(p));
    }

    #[test]
    fn valuation_of_uniformizer_and_p() {
        for p in [5u64, 7, 11] {
            // pi = zeta - 1 has ord_p = 1/(p-1)
            let pi = zeta(p).sub(&CycInt::one(p));
            assert_eq!(pi.val_scaled(), Some(1));
            // p has ord_p = 1
            assert_eq!(
                CycInt::from_int(p, p as i64).val_scaled(),
                Some(p as i64 - 1)
            );
            assert_eq!(CycInt::zero(p).val_scaled(), None);
            // pi^{p-1} and p differ by a unit
            let mut pik = CycInt::one(p);
            for _ in 0..p - 1 {
                pik = pik.mul(&pi);
            }
            assert_eq!(pik.val_scaled(), Some(p as i64 - 1));
        }
    }

    #[test]
    fn valuation_multiplicative_on_samples() {
        let p = 5;
        let a = zeta(p).sub(&CycInt::one(p));
        let b = CycInt::from_counts(p, &[2, 0, 1, 0, 3]);
        let va = a.val_scaled().unwrap();
        let vb = b.val_scaled().unwrap();
        assert_eq!(a.mul(&b).val_scaled(), Some(va + vb));
    }

    #[test]
    fn galois_preserves_valuation() {
        let p = 7;
        let x = CycInt::from_counts(p, &[3, 1, 4, 1, 5, 9, 2]).mul(&zeta(p).sub(&CycInt::one(p)));
        let v = x.val_scaled();
        for k in 1..p {
            assert_eq!(x.galois(k).val_scaled(), v, "conjugate by {k}");
        }
    }
}
