//! Exact truncated arithmetic in O_a = Z_q[gamma]: the ring of integers of
//! the unramified degree-a extension of Q_p with the (p-1)-st ramified step
//! Q_p(zeta_p) on top.
//!
//! Elements are stored on the basis pi^i y^k where pi = zeta_p - 1 has the
//! explicit Eisenstein minimal polynomial Phi_p(x+1) and y generates Z_q.
//! The Dwork root gamma (of log of the Artin-Hasse series, with E(gamma) a
//! primitive p-th root of unity) is kept as a coordinate vector rather
//! than as a basis: pi's minimal polynomial is closed-form, gamma's is
//! not, so reduction stays exact.
//!
//! Every element carries a certified precision floor (scaled by p-1).
//! Binary operations lower floors only as far as the error analysis
//! requires; an operation that cannot certify a needed valuation reports
//! precision exhaustion so the caller can retry with more digits.

pub mod linalg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::fields::irreducible_poly;
use crate::util::{mul_mod, rational_mod, require_prime};

/// Valuation scaled by (p-1): ord_p(x) = k/(p-1) for scaled value k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Val {
    /// Exact valuation, certified below the element's precision floor.
    Certified(i64),
    /// All stored digits vanish: the valuation is at least the floor.
    AtLeast(i64),
}

impl Val {
    pub fn certified(self) -> Option<i64> {
        match self {
            Val::Certified(v) => Some(v),
            Val::AtLeast(_) => None,
        }
    }

    /// Lower bound usable in either case.
    pub fn lower_bound(self) -> i64 {
        match self {
            Val::Certified(v) | Val::AtLeast(v) => v,
        }
    }
}

/// Element of O_a at tracked precision: a (p-1) x a array of integers mod
/// p^{n_store}, coordinates of pi^i y^k, plus the certified floor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicElem {
    pub(crate) c: Vec<u64>,
    /// certified floor, scaled by (p-1)
    pub floor_s: i64,
}

/// The two-step tower at a fixed storage precision.
#[derive(Debug)]
pub struct Tower {
    pub p: u64,
    pub a: usize,
    /// storage precision in p-adic digits
    pub n_store: u32,
    pub modulus: u64,
    pub pm1: usize,
    /// monic degree-a integer polynomial irreducible mod p defining Z_q
    pub unram: Vec<u64>,
    /// Phi_p(x+1): monic degree p-1, coefficients C(p, k+1) reduced
    pub eis: Vec<u64>,
    /// (tau^k(y))^s for k in 0..a, s in 0..a, as Z_q coordinate vectors
    tau_pows: Vec<Vec<Vec<u64>>>,
    /// p/pi on integer pi-coordinates (y-free)
    p_over_pi: Vec<u64>,
    gamma: PadicElem,
    /// inverse of the unit gamma/pi
    gamma_unit_inv: PadicElem,
}

impl Tower {
    /// Builds the tower: defining polynomials, Frobenius lift tau by
    /// Newton refinement of the generator image, and the Dwork root gamma.
    pub fn new(p: u64, a: usize, n_store: u32) -> Result<Tower> {
        require_prime(p)?;
        if p < 3 {
            return Err(Error::BadInput("p must be odd".into()));
        }
        if a == 0 {
            return Err(Error::BadInput("a must be positive".into()));
        }
        if n_store == 0 {
            return Err(Error::BadInput("precision must be positive".into()));
        }
        let modulus = (p as u128).checked_pow(n_store).and_then(|m| {
            // delayed-reduction products must fit into u128 accumulators
            let budget = (p as u128 - 1) * a as u128 * m * m;
            if budget < (1u128 << 126) {
                u64::try_from(m).ok()
            } else {
                None
            }
        });
        let modulus = modulus.ok_or_else(|| {
            Error::PrecisionExhausted(format!(
                "p^{n_store} does not fit the u64 storage budget for p = {p}"
            ))
        })?;
        let unram = irreducible_poly(p, a)?;
        let pm1 = (p - 1) as usize;
        let mut eis = Vec::with_capacity(pm1);
        let mut binom = p as u128; // C(p, 1)
        for k in 0..pm1 {
            eis.push((binom % modulus as u128) as u64);
            // C(p, k+2) from C(p, k+1)
            binom = binom * (p as u128 - (k as u128 + 1)) / (k as u128 + 2);
        }
        // p/pi = -(pi^{p-2} + sum_{k=1}^{p-2} C(p,k+1) pi^{k-1})
        let mut p_over_pi = vec![0u64; pm1];
        for k in 1..pm1 {
            p_over_pi[k - 1] = (modulus - eis[k] % modulus) % modulus;
        }
        p_over_pi[pm1 - 1] = modulus - 1;

        let mut tower = Tower {
            p,
            a,
            n_store,
            modulus,
            pm1,
            unram,
            eis,
            tau_pows: Vec::new(),
            p_over_pi,
            gamma: PadicElem {
                c: vec![],
                floor_s: 0,
            },
            gamma_unit_inv: PadicElem {
                c: vec![],
                floor_s: 0,
            },
        };
        tower.init_tau()?;
        tower.init_gamma()?;
        Ok(tower)
    }

    pub fn size(&self) -> usize {
        self.pm1 * self.a
    }

    pub fn full_floor(&self) -> i64 {
        self.n_store as i64 * self.pm1 as i64
    }

    fn idx(&self, i: usize, k: usize) -> usize {
        i * self.a + k
    }

    // ---- Z_q coordinate arithmetic (length-a vectors over Z/p^n) ----

    fn zq_mul(&self, x: &[u64], y: &[u64]) -> Vec<u64> {
        let a = self.a;
        let m = self.modulus;
        let mut tmp = vec![0u128; 2 * a - 1];
        for i in 0..a {
            if x[i] == 0 {
                continue;
            }
            for j in 0..a {
                tmp[i + j] += x[i] as u128 * y[j] as u128;
            }
        }
        for k in (a..2 * a - 1).rev() {
            let v = (tmp[k] % m as u128) as u64;
            tmp[k] = 0;
            if v == 0 {
                continue;
            }
            for j in 0..a {
                let g = self.unram[j] % m;
                if g != 0 {
                    tmp[k - a + j] += v as u128 * (m - g) as u128;
                }
            }
        }
        (0..a).map(|i| (tmp[i] % m as u128) as u64).collect()
    }

    fn zq_vp(&self, x: &[u64]) -> Option<u32> {
        let mut best: Option<u32> = None;
        for &c in x {
            if c == 0 {
                continue;
            }
            let mut v = 0;
            let mut cur = c;
            while cur % self.p == 0 {
                cur /= self.p;
                v += 1;
            }
            best = Some(best.map_or(v, |b| b.min(v)));
            if v == 0 {
                break;
            }
        }
        best
    }

    /// Inverse of a Z_q unit by Newton iteration from the residue-field
    /// inverse.
    fn zq_inv(&self, x: &[u64]) -> Result<Vec<u64>> {
        if self.zq_vp(x) != Some(0) {
            return Err(Error::BadInput("zq_inv: not a unit".into()));
        }
        // inverse mod p via x^(q-2) in F_q
        let field_pow = |base: &[u64], e: u128| -> Vec<u64> {
            let mut acc = vec![0u64; self.a];
            acc[0] = 1;
            let mut b: Vec<u64> = base.iter().map(|&c| c % self.p).collect();
            let mut e = e;
            while e > 0 {
                if e & 1 == 1 {
                    acc = self.zq_mul(&acc, &b).iter().map(|&c| c % self.p).collect();
                }
                b = self.zq_mul(&b, &b).iter().map(|&c| c % self.p).collect();
                e >>= 1;
            }
            acc
        };
        let q = (self.p as u128).pow(self.a as u32);
        let mut z = field_pow(x, q - 2);
        // z <- z (2 - x z), doubling correct digits each round
        let rounds = 64 - u64::from(self.n_store).leading_zeros() + 2;
        for _ in 0..rounds {
            let xz = self.zq_mul(x, &z);
            let mut two_minus = vec![0u64; self.a];
            two_minus[0] = 2 % self.modulus;
            for i in 0..self.a {
                two_minus[i] = (two_minus[i] + self.modulus - xz[i]) % self.modulus;
            }
            z = self.zq_mul(&z, &two_minus);
        }
        debug_assert!({
            let check = self.zq_mul(x, &z);
            check[0] == 1 && check[1..].iter().all(|&c| c == 0)
        });
        Ok(z)
    }

    // ---- element construction ----

    pub fn zero(&self) -> PadicElem {
        PadicElem {
            c: vec![0; self.size()],
            floor_s: self.full_floor(),
        }
    }

    pub fn one(&self) -> PadicElem {
        self.from_u64(1)
    }

    pub fn from_u64(&self, v: u64) -> PadicElem {
        let mut e = self.zero();
        e.c[0] = v % self.modulus;
        e
    }

    pub fn from_i64(&self, v: i64) -> PadicElem {
        let mut e = self.zero();
        e.c[0] = v.rem_euclid(self.modulus as i64) as u64;
        e
    }

    pub fn from_bigint(&self, v: &BigInt) -> PadicElem {
        let m = BigInt::from(self.modulus);
        let r = num_integer::Integer::mod_floor(v, &m);
        self.from_u64(u64::try_from(&r).expect("mod_floor fits"))
    }

    /// A p-integral rational, reduced mod p^{n_store}.
    pub fn from_rational(&self, r: &BigRational) -> Result<PadicElem> {
        Ok(self.from_u64(rational_mod(r, self.p, self.modulus)?))
    }

    /// Element of Z_q from y-coordinates (no pi part).
    pub fn from_zq(&self, coords: &[u64]) -> PadicElem {
        assert_eq!(coords.len(), self.a);
        let mut e = self.zero();
        for (k, &v) in coords.iter().enumerate() {
            e.c[self.idx(0, k)] = v % self.modulus;
        }
        e
    }

    pub fn pi(&self) -> PadicElem {
        let mut e = self.zero();
        e.c[self.idx(1, 0)] = 1;
        e
    }

    pub fn gamma(&self) -> PadicElem {
        self.gamma.clone()
    }

    // ---- ring operations ----

    pub fn add(&self, x: &PadicElem, y: &PadicElem) -> PadicElem {
        let m = self.modulus;
        PadicElem {
            c: x.c
                .iter()
                .zip(&y.c)
                .map(|(&u, &v)| {
                    let s = u + v;
                    if s >= m {
                        s - m
                    } else {
                        s
                    }
                })
                .collect(),
            floor_s: x.floor_s.min(y.floor_s),
        }
    }

    pub fn sub(&self, x: &PadicElem, y: &PadicElem) -> PadicElem {
        let m = self.modulus;
        PadicElem {
            c: x.c
                .iter()
                .zip(&y.c)
                .map(|(&u, &v)| if u >= v { u - v } else { u + m - v })
                .collect(),
            floor_s: x.floor_s.min(y.floor_s),
        }
    }

    pub fn neg(&self, x: &PadicElem) -> PadicElem {
        let m = self.modulus;
        PadicElem {
            c: x.c.iter().map(|&u| if u == 0 { 0 } else { m - u }).collect(),
            floor_s: x.floor_s,
        }
    }

    pub fn scalar_mul(&self, x: &PadicElem, s: i64) -> PadicElem {
        let sv = s.rem_euclid(self.modulus as i64) as u64;
        let mut vp_s = 0i64;
        if sv != 0 {
            let mut cur = sv;
            while cur % self.p == 0 {
                cur /= self.p;
                vp_s += 1;
            }
        }
        let floor = if sv == 0 {
            self.full_floor()
        } else {
            (x.floor_s + vp_s * self.pm1 as i64).min(self.full_floor())
        };
        PadicElem {
            c: x.c.iter().map(|&u| mul_mod(u, sv, self.modulus)).collect(),
            floor_s: floor,
        }
    }

    /// Full product with delayed reduction: accumulate u128 cross terms,
    /// then fold y by the unramified polynomial and pi by the Eisenstein
    /// polynomial. The floor uses the certified valuation of each factor,
    /// so multiplying by a high-valuation element gains precision.
    pub fn mul(&self, x: &PadicElem, y: &PadicElem) -> PadicElem {
        let pm1 = self.pm1;
        let a = self.a;
        let m = self.modulus as u128;
        let w = 2 * a - 1;
        let mut acc = vec![0u128; (2 * pm1 - 1) * w];
        for i1 in 0..pm1 {
            for k1 in 0..a {
                let xv = x.c[self.idx(i1, k1)];
                if xv == 0 {
                    continue;
                }
                let xv = xv as u128;
                for i2 in 0..pm1 {
                    let row = (i1 + i2) * w + k1;
                    let ybase = i2 * a;
                    for k2 in 0..a {
                        let yv = y.c[ybase + k2];
                        if yv != 0 {
                            acc[row + k2] += xv * yv as u128;
                        }
                    }
                }
            }
        }
        // reduce cells, then fold y then pi
        let mut grid = vec![0u64; (2 * pm1 - 1) * w];
        for (g, v) in grid.iter_mut().zip(&acc) {
            *g = (*v % m) as u64;
        }
        let mu = self.modulus;
        for row in 0..2 * pm1 - 1 {
            for k in (a..w).rev() {
                let v = grid[row * w + k];
                grid[row * w + k] = 0;
                if v == 0 {
                    continue;
                }
                for j in 0..a {
                    let g = self.unram[j] % mu;
                    if g != 0 {
                        let cell = &mut grid[row * w + k - a + j];
                        *cell = (*cell + mul_mod(v, mu - g, mu)) % mu;
                    }
                }
            }
        }
        for i in (pm1..2 * pm1 - 1).rev() {
            for k in 0..a {
                let v = grid[i * w + k];
                grid[i * w + k] = 0;
                if v == 0 {
                    continue;
                }
                for j in 0..pm1 {
                    let g = self.eis[j] % mu;
                    if g != 0 {
                        let cell = &mut grid[(i - pm1 + j) * w + k];
                        *cell = (*cell + mul_mod(v, mu - g, mu)) % mu;
                    }
                }
            }
        }
        let mut c = vec![0u64; self.size()];
        for i in 0..pm1 {
            for k in 0..a {
                c[self.idx(i, k)] = grid[i * w + k];
            }
        }
        let vx = self.val_scaled_raw(x).min(x.floor_s);
        let vy = self.val_scaled_raw(y).min(y.floor_s);
        let floor = (vx + y.floor_s).min(vy + x.floor_s).min(self.full_floor());
        PadicElem { c, floor_s: floor }
    }

    pub fn pow(&self, x: &PadicElem, mut e: u64) -> PadicElem {
        let mut acc = self.one();
        let mut b = x.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    // ---- valuation ----

    /// min over stored coordinates of (p-1) v_p(c_i) + i, or full floor if
    /// every digit vanishes. Does not consult the element's floor.
    fn val_scaled_raw(&self, x: &PadicElem) -> i64 {
        let mut best = self.full_floor();
        for i in 0..self.pm1 {
            if (i as i64) >= best {
                break;
            }
            if let Some(v) = self.zq_vp(&x.c[self.idx(i, 0)..self.idx(i, 0) + self.a]) {
                let cand = v as i64 * self.pm1 as i64 + i as i64;
                best = best.min(cand);
            }
        }
        best
    }

    /// Exact scaled valuation when certifiable below the floor, otherwise
    /// the `AtLeast(floor)` marker that callers treat as overflow.
    pub fn val_scaled(&self, x: &PadicElem) -> Val {
        let raw = self.val_scaled_raw(x);
        if raw < x.floor_s {
            Val::Certified(raw)
        } else {
            Val::AtLeast(x.floor_s)
        }
    }

    pub fn is_zero_at_floor(&self, x: &PadicElem) -> bool {
        matches!(self.val_scaled(x), Val::AtLeast(_))
    }

    /// Are x and y certifiably congruent to scaled precision `target_s`?
    pub fn congruent(&self, x: &PadicElem, y: &PadicElem, target_s: i64) -> bool {
        let t = target_s.min(self.full_floor());
        let d = self.sub(x, y);
        d.floor_s >= t && self.val_scaled(&d).lower_bound() >= t
    }

    // ---- division ----

    /// Multiply by pi (floor rises by one scaled unit).
    pub fn mul_pi(&self, x: &PadicElem) -> PadicElem {
        let mu = self.modulus;
        let mut c = vec![0u64; self.size()];
        for i in 0..self.pm1 - 1 {
            for k in 0..self.a {
                c[self.idx(i + 1, k)] = x.c[self.idx(i, k)];
            }
        }
        let top = self.pm1 - 1;
        for k in 0..self.a {
            let v = x.c[self.idx(top, k)];
            if v == 0 {
                continue;
            }
            for j in 0..self.pm1 {
                let g = self.eis[j] % mu;
                if g != 0 {
                    let cell = &mut c[self.idx(j, k)];
                    *cell = (*cell + mul_mod(v, mu - g, mu)) % mu;
                }
            }
        }
        PadicElem {
            c,
            floor_s: (x.floor_s + 1).min(self.full_floor()),
        }
    }

    /// Exact division by pi. Requires the pi^0 coordinate to be divisible
    /// by p at stored precision; anything else means the element did not
    /// have valuation >= 1/(p-1) and the caller is out of digits.
    pub fn div_pi(&self, x: &PadicElem) -> Result<PadicElem> {
        let mu = self.modulus;
        let mut c = vec![0u64; self.size()];
        for i in 1..self.pm1 {
            for k in 0..self.a {
                c[self.idx(i - 1, k)] = x.c[self.idx(i, k)];
            }
        }
        for k in 0..self.a {
            let v = x.c[self.idx(0, k)];
            if v % self.p != 0 {
                return Err(Error::PrecisionExhausted(
                    "division by pi on an element without certified positive valuation".into(),
                ));
            }
            let v = v / self.p;
            if v == 0 {
                continue;
            }
            for j in 0..self.pm1 {
                if self.p_over_pi[j] != 0 {
                    let cell = &mut c[self.idx(j, k)];
                    *cell = (*cell + mul_mod(v, self.p_over_pi[j], mu)) % mu;
                }
            }
        }
        Ok(PadicElem {
            c,
            floor_s: x.floor_s - 1,
        })
    }

    /// Exact division by p (all coordinates divisible).
    pub fn div_p(&self, x: &PadicElem) -> Result<PadicElem> {
        let mut c = Vec::with_capacity(x.c.len());
        for &v in &x.c {
            if v % self.p != 0 {
                return Err(Error::PrecisionExhausted(
                    "division by p on an element without valuation >= 1".into(),
                ));
            }
            c.push(v / self.p);
        }
        Ok(PadicElem {
            c,
            floor_s: x.floor_s - self.pm1 as i64,
        })
    }

    /// Inverse of a unit (valuation exactly 0) by Newton iteration on the
    /// residue-field inverse.
    pub fn inv_unit(&self, x: &PadicElem) -> Result<PadicElem> {
        match self.val_scaled(x) {
            Val::Certified(0) => {}
            v => {
                return Err(Error::PrecisionExhausted(format!(
                    "inv_unit: valuation {v:?} is not certified zero"
                )))
            }
        }
        // residue-field inverse of x mod pi = c_0 mod p
        let c0: Vec<u64> = x.c[0..self.a].to_vec();
        let z0 = {
            let q = (self.p as u128).pow(self.a as u32);
            let mut acc = vec![0u64; self.a];
            acc[0] = 1;
            let mut b: Vec<u64> = c0.iter().map(|&c| c % self.p).collect();
            let mut e = q - 2;
            while e > 0 {
                if e & 1 == 1 {
                    acc = self.zq_mul(&acc, &b).iter().map(|&c| c % self.p).collect();
                }
                b = self.zq_mul(&b, &b).iter().map(|&c| c % self.p).collect();
                e >>= 1;
            }
            acc
        };
        let mut z = self.from_zq(&z0);
        let two = self.from_u64(2);
        let rounds = 64 - (self.full_floor() as u64).leading_zeros() + 2;
        for _ in 0..rounds {
            let t = self.sub(&two, &self.mul(x, &z));
            z = self.mul(&z, &t);
        }
        z.floor_s = x.floor_s.min(self.full_floor());
        debug_assert!(self.is_zero_at_floor(&self.sub(&self.mul(x, &z), &self.one())));
        Ok(z)
    }

    /// General exact division x / y for y with certified valuation.
    pub fn div_exact(&self, x: &PadicElem, y: &PadicElem) -> Result<PadicElem> {
        let vy = self
            .val_scaled(y)
            .certified()
            .ok_or_else(|| Error::PrecisionExhausted("division by an uncertified element".into()))?;
        let mut unit = y.clone();
        for _ in 0..vy {
            unit = self.div_pi(&unit)?;
        }
        let inv = self.inv_unit(&unit)?;
        let mut out = self.mul(x, &inv);
        for _ in 0..vy {
            out = self.div_pi(&out)?;
        }
        Ok(out)
    }

    // ---- Frobenius ----

    fn init_tau(&mut self) -> Result<()> {
        let a = self.a;
        // tau(y): the root of the unramified polynomial congruent to y^p
        let tau_img = if a == 1 {
            vec![0u64]
        } else {
            // seed with y^p mod (unram, p)
            let mut t: Vec<u64> = {
                let mut acc = vec![0u64; a];
                acc[0] = 1;
                let mut b = vec![0u64; a];
                if a > 1 {
                    b[1] = 1;
                }
                let mut e = self.p;
                while e > 0 {
                    if e & 1 == 1 {
                        acc = self.zq_mul(&acc, &b).iter().map(|&c| c % self.p).collect();
                    }
                    b = self.zq_mul(&b, &b).iter().map(|&c| c % self.p).collect();
                    e >>= 1;
                }
                acc
            };
            // Newton: t <- t - u(t)/u'(t) in Z_q
            let eval = |tower: &Tower, t: &[u64], poly: &[u64]| -> Vec<u64> {
                let mut acc = vec![0u64; a];
                for &coef in poly.iter().rev() {
                    acc = tower.zq_mul(&acc, t);
                    acc[0] = (acc[0] + coef % tower.modulus) % tower.modulus;
                }
                acc
            };
            let deriv: Vec<u64> = (1..self.unram.len())
                .map(|i| mul_mod(self.unram[i] % self.modulus, i as u64, self.modulus))
                .collect();
            let rounds = 64 - u64::from(self.n_store).leading_zeros() + 2;
            for _ in 0..rounds {
                let ut = eval(self, &t, &self.unram);
                let dt = eval(self, &t, &deriv);
                let dt_inv = self.zq_inv(&dt)?;
                let step = self.zq_mul(&ut, &dt_inv);
                for i in 0..a {
                    t[i] = (t[i] + self.modulus - step[i]) % self.modulus;
                }
            }
            let check = eval(self, &t, &self.unram);
            if check.iter().any(|&c| c != 0) {
                return Err(Error::NonConvergence(
                    "Frobenius lift did not converge".into(),
                ));
            }
            t
        };
        // powers of tau^k(y) for substitution
        let mut tau_pows = Vec::with_capacity(a);
        let mut cur = {
            // tau^0(y) = y
            let mut y = vec![0u64; a];
            if a > 1 {
                y[1] = 1;
            }
            y
        };
        for k in 0..a {
            let mut pows = Vec::with_capacity(a);
            let mut acc = vec![0u64; a];
            acc[0] = 1;
            for _ in 0..a {
                pows.push(acc.clone());
                acc = self.zq_mul(&acc, &cur);
            }
            tau_pows.push(pows);
            if k + 1 < a {
                // tau^{k+1}(y) = (tau^k applied to tau(y)) = tau_img with
                // y replaced by tau^k(y)
                let mut next = vec![0u64; a];
                let mut ypow = vec![0u64; a];
                ypow[0] = 1;
                for &coef in tau_img.iter() {
                    if coef != 0 {
                        for i in 0..a {
                            next[i] =
                                (next[i] + mul_mod(coef, ypow[i], self.modulus)) % self.modulus;
                        }
                    }
                    ypow = self.zq_mul(&ypow, &cur);
                }
                cur = next;
            }
        }
        self.tau_pows = tau_pows;
        Ok(())
    }

    /// tau^k applied coefficientwise on the Z_q coordinates; pi (and with
    /// it gamma, which has constant y-part) is fixed.
    pub fn tau(&self, x: &PadicElem, k: i64) -> PadicElem {
        let k = k.rem_euclid(self.a as i64) as usize;
        if k == 0 {
            return x.clone();
        }
        let pows = &self.tau_pows[k];
        let mut c = vec![0u64; self.size()];
        for i in 0..self.pm1 {
            for s in 0..self.a {
                let v = x.c[self.idx(i, s)];
                if v == 0 {
                    continue;
                }
                for t in 0..self.a {
                    let cell = &mut c[self.idx(i, t)];
                    *cell = (*cell + mul_mod(v, pows[s][t], self.modulus)) % self.modulus;
                }
            }
        }
        PadicElem {
            c,
            floor_s: x.floor_s,
        }
    }

    /// Teichmuller lift: the unique x with x^q = x reducing to the given
    /// residue (y-coordinates over F_p). Fixed-point iteration of the q-th
    /// power map; each round gains one digit.
    pub fn teichmuller(&self, residue: &[u64]) -> PadicElem {
        assert_eq!(residue.len(), self.a);
        let q_pow = |tower: &Tower, x: &[u64]| -> Vec<u64> {
            let mut acc = vec![0u64; tower.a];
            acc[0] = 1;
            let mut b = x.to_vec();
            let mut e = (tower.p as u128).pow(tower.a as u32);
            while e > 0 {
                if e & 1 == 1 {
                    acc = tower.zq_mul(&acc, &b);
                }
                b = tower.zq_mul(&b, &b);
                e >>= 1;
            }
            acc
        };
        let mut x: Vec<u64> = residue.iter().map(|&c| c % self.p).collect();
        for _ in 0..=self.n_store {
            let next = q_pow(self, &x);
            if next == x {
                break;
            }
            x = next;
        }
        debug_assert_eq!(q_pow(self, &x), x, "Teichmuller fixed point");
        self.from_zq(&x)
    }

    // ---- the Dwork root ----

    /// Truncation level J for log E: the first omitted term gamma^{p^j}/p^j
    /// must have valuation beyond storage.
    pub fn log_truncation_level(&self) -> u32 {
        let mut j = 1u32;
        loop {
            // val of term j+... : p^j/(p-1) - j, scaled: (p^j - j(p-1))/(p-1)
            let pj = (self.p as i128).checked_pow(j).unwrap_or(i128::MAX);
            let scaled = pj - (j as i128) * (self.p as i128 - 1);
            if scaled > self.full_floor() as i128 {
                return j - 1;
            }
            j += 1;
        }
    }

    /// sum_{j=0}^{J} x^{p^j}/p^j at storage precision, for x of valuation
    /// exactly 1/(p-1). Terms whose power already vanished from storage
    /// are certified by the a-priori bound val = p^j/(p-1) - j instead of
    /// the mechanical division floor.
    fn log_e_eval(&self, x: &PadicElem) -> Result<PadicElem> {
        debug_assert!(self.val_scaled(x).lower_bound() >= 1);
        let jmax = self.log_truncation_level();
        let mut acc = x.clone();
        let mut pow = x.clone();
        for j in 1..=jmax {
            // x^{p^j} from x^{p^{j-1}}
            pow = self.pow(&pow, self.p);
            let mut term = pow.clone();
            for _ in 0..j {
                term = self.div_p(&term)?;
            }
            if term.c.iter().all(|&c| c == 0) {
                let true_val = (self.p as i128).pow(j) - j as i128 * self.pm1 as i128;
                let restored = (true_val.min(self.full_floor() as i128)) as i64;
                term.floor_s = term.floor_s.max(restored);
            }
            acc = self.add(&acc, &term);
        }
        Ok(acc)
    }

    fn log_e_deriv(&self, x: &PadicElem) -> PadicElem {
        // 1 + x^{p-1} + x^{p^2-1} + ...
        let jmax = self.log_truncation_level();
        let mut acc = self.one();
        let mut xp = self.pow(x, self.p - 1);
        let mut cur_exp = self.p - 1;
        for j in 1..=jmax {
            acc = self.add(&acc, &xp);
            if j < jmax {
                let next_exp = self.p.pow(j + 1) - 1;
                xp = self.mul(&xp, &self.pow(x, next_exp - cur_exp));
                cur_exp = next_exp;
            }
        }
        acc
    }

    fn init_gamma(&mut self) -> Result<()> {
        // Newton iteration seeded at pi; converges to the root congruent
        // to pi mod pi^2, which pins E(gamma) = 1 + pi mod pi^2.
        let mut x = self.pi();
        let budget = 4 + 2 * (64 - (self.full_floor() as u64).leading_zeros());
        let mut converged = false;
        for _ in 0..budget {
            let g = self.log_e_eval(&x)?;
            if self.is_zero_at_floor(&g) {
                converged = true;
                break;
            }
            let dg = self.log_e_deriv(&x);
            let step = self.div_exact(&g, &dg)?;
            x = self.sub(&x, &step);
        }
        if !converged {
            return Err(Error::NonConvergence(
                "Newton iteration for the Dwork root did not converge".into(),
            ));
        }
        if self.val_scaled(&x) != Val::Certified(1) {
            return Err(Error::NonConvergence(
                "Dwork root has wrong valuation".into(),
            ));
        }
        let unit = self.div_pi(&x)?;
        self.gamma_unit_inv = self.inv_unit(&unit)?;
        self.gamma = x;
        Ok(())
    }

    /// Certified floor of the stored Dwork root, scaled by (p-1). Storage
    /// digits beyond it were consumed solving the truncated logarithm.
    pub fn gamma_floor(&self) -> i64 {
        self.gamma.floor_s
    }

    /// Exact division by gamma: one pi-division and a unit multiple.
    pub fn div_gamma(&self, x: &PadicElem) -> Result<PadicElem> {
        let t = self.div_pi(x)?;
        Ok(self.mul(&t, &self.gamma_unit_inv))
    }

    /// Map a p-integral rational times gamma^k into the tower.
    pub fn rational_times_gamma_pow(&self, r: &BigRational, k: u64) -> Result<PadicElem> {
        let c = self.from_rational(&r.abs())?;
        let g = self.pow(&self.gamma, k);
        let t = self.mul(&c, &g);
        Ok(if r.is_negative() { self.neg(&t) } else { t })
    }
}
