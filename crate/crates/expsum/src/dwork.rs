//! The p-adic route to the L function: Artin-Hasse coefficients, the
//! splitting series theta(x) = E(gamma x), the product series
//! G(X) = prod theta(a_i X^i), the auxiliary matrix with entries G_{pi-j},
//! and the reduction of psi(G X^j) modulo the image of the twisted
//! differential operator onto the monomial basis X..X^{d-1}, which yields
//! the Frobenius matrix F. det(I - T F_a) with the a-fold twisted power
//! F_a is the L polynomial.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::cyclotomic::CycInt;
use crate::error::{Error, Result};
use crate::padic::linalg::{PadicMatrix, PadicPoly};
use crate::padic::{PadicElem, Tower};
use crate::util::{ceil_div, is_p_integral};

/// Exact rational coefficients e_m of the Artin-Hasse exponential
/// exp(sum_j x^{p^j}/p^j), computed by the logarithmic-derivative
/// recurrence m e_m = sum_{p^j <= m} e_{m - p^j}. Every e_m must be
/// p-integral; a failure is a bug signal, never valid data.
#[derive(Debug, Clone)]
pub struct ArtinHasse {
    pub p: u64,
    pub e: Vec<BigRational>,
}

impl ArtinHasse {
    pub fn new(p: u64, m_max: usize) -> Result<ArtinHasse> {
        let mut e: Vec<BigRational> = Vec::with_capacity(m_max + 1);
        e.push(BigRational::one());
        for m in 1..=m_max {
            let mut s = BigRational::zero();
            let mut pj = 1u64;
            while pj as usize <= m {
                s += &e[m - pj as usize];
                match pj.checked_mul(p) {
                    Some(v) => pj = v,
                    None => break,
                }
            }
            let em = s / BigRational::from_integer(BigInt::from(m as u64));
            if !is_p_integral(&em, p) {
                return Err(Error::IntegralityFailure(format!(
                    "Artin-Hasse coefficient e_{m} is not {p}-integral"
                )));
            }
            e.push(em);
        }
        Ok(ArtinHasse { p, e })
    }
}

fn artin_hasse_cached(p: u64, m_max: usize) -> Result<Arc<ArtinHasse>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<ArtinHasse>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("artin-hasse cache poisoned");
    if let Some(ah) = guard.get(&p) {
        if ah.e.len() > m_max {
            return Ok(ah.clone());
        }
    }
    let ah = Arc::new(ArtinHasse::new(p, m_max)?);
    guard.insert(p, ah.clone());
    Ok(ah)
}

/// lambda_m = e_m gamma^m for m = 0..=m_max, in the tower.
pub fn artin_hasse_coeffs(tower: &Tower, m_max: usize) -> Result<Vec<PadicElem>> {
    let ah = artin_hasse_cached(tower.p, m_max)?;
    let mut out = Vec::with_capacity(m_max + 1);
    let mut gpow = tower.one();
    for m in 0..=m_max {
        let c = tower.from_rational(&ah.e[m])?;
        out.push(tower.mul(&c, &gpow));
        if m < m_max {
            gpow = tower.mul(&gpow, &tower.gamma());
        }
    }
    Ok(out)
}

/// The fixed p-th root of unity zeta_p = E(gamma), evaluated in the tower.
/// This is the embedding shared with the exact character-sum route.
pub fn zeta_p(tower: &Tower) -> Result<PadicElem> {
    let m_max = tower.full_floor() as usize + 1;
    let lambda = artin_hasse_coeffs(tower, m_max)?;
    let mut acc = tower.zero();
    for l in &lambda {
        acc = tower.add(&acc, l);
    }
    Ok(acc)
}

/// Image of an exact cyclotomic integer under zeta |-> `zeta` (Horner).
pub fn cyc_to_tower(tower: &Tower, x: &CycInt, zeta: &PadicElem) -> PadicElem {
    let mut acc = tower.zero();
    for c in x.c.iter().rev() {
        acc = tower.mul(&acc, zeta);
        acc = tower.add(&acc, &tower.from_bigint(c));
    }
    acc
}

/// Per-run cache for one reduction f mod P: the lifted coefficients, the
/// splitting-series product, and the twisted-derivative coefficients.
pub struct FrobeniusData {
    pub tower: Arc<Tower>,
    pub d: usize,
    /// certification target in p-adic digits; floors carry headroom beyond it
    pub n_target: u32,
    /// Teichmuller-lifted coefficients a_1..a_{d-1} (a_d = 1 implicit)
    pub a_hat: Vec<PadicElem>,
    pub lambda: Vec<PadicElem>,
    /// G_n(a_hat) for n = 0..=g_deg
    g: Vec<PadicElem>,
    /// series degree cap for the reduction; 0 when only G_{pi-j} is needed
    pub d_cap: usize,
    /// coefficient of X^{m+i} in nabla(X^m) at the untwisted level:
    /// nabla0[i] = gamma * i * a_i for i = 1..=d, a_d = 1
    nabla0: Vec<PadicElem>,
    /// twisted levels l >= 1 of X R'(X): degree shift i p^l with
    /// coefficient gamma_l p^l i a_i^{p^l}, kept while it can still touch
    /// stored digits
    spill: Vec<(usize, PadicElem)>,
}

impl FrobeniusData {
    /// Series cap for certifying N digits; beyond d(N+4) the tail of
    /// psi(G X^j) is already below the target.
    pub fn default_cap(d: usize, n_target: u32) -> usize {
        d * (n_target as usize + 4)
    }

    /// Storage digits on top of the certification target: the reduction
    /// cascade divides by gamma roughly (N+4)/ (p-1) times, and solving
    /// the truncated logarithm for gamma itself consumes one digit per
    /// power gamma^{p^j} that still has stored digits.
    pub fn headroom(p: u64, n_target: u32) -> u32 {
        let base = 3 + ceil_div(n_target as i64 + 5, p as i64 - 1);
        let mut h = base;
        loop {
            let full = (n_target as i64 + h) * (p as i64 - 1);
            let mut jloss = 0i64;
            let mut pj = p as i128;
            while pj < full as i128 {
                jloss += 1;
                pj = pj.saturating_mul(p as i128);
            }
            if h >= base + jloss {
                return h as u32;
            }
            h = base + jloss;
        }
    }

    /// Build from residue-field coefficients (y-coordinate vectors of
    /// a_1..a_{d-1}); lifts by Teichmuller. `full` prepares the reduction
    /// series and the long G expansion it needs.
    pub fn from_residues(
        tower: Arc<Tower>,
        d: usize,
        residues: &[Vec<u64>],
        n_target: u32,
        full: bool,
    ) -> Result<FrobeniusData> {
        if residues.len() != d - 1 {
            return Err(Error::BadInput(format!(
                "need {} coefficients, got {}",
                d - 1,
                residues.len()
            )));
        }
        let a_hat: Vec<PadicElem> = residues.iter().map(|r| tower.teichmuller(r)).collect();
        FrobeniusData::from_lifted(tower, d, a_hat, n_target, full)
    }

    pub fn from_lifted(
        tower: Arc<Tower>,
        d: usize,
        a_hat: Vec<PadicElem>,
        n_target: u32,
        full: bool,
    ) -> Result<FrobeniusData> {
        if d < 3 {
            return Err(Error::BadInput("degree must be >= 3".into()));
        }
        if tower.p % d as u64 == 0 {
            return Err(Error::BadInput(format!("p = {} divides d = {d}", tower.p)));
        }
        let d_cap = if full {
            FrobeniusData::default_cap(d, n_target)
        } else {
            0
        };
        let g_deg = tower.p as usize * d_cap.max(d - 1);
        let lambda = artin_hasse_coeffs(&tower, g_deg)?;

        let stored_zero =
            |e: &PadicElem| e.c.iter().all(|&c| c == 0) && e.floor_s >= tower.full_floor();

        // G(X) = prod_{i=1}^{d} theta(a_i X^i) truncated at g_deg; the
        // factor at i contributes lambda_m a_i^m at degree i m.
        let mut g: Vec<PadicElem> = vec![tower.zero(); g_deg + 1];
        g[0] = tower.one();
        for i in 1..=d {
            let coef = if i < d {
                a_hat[i - 1].clone()
            } else {
                tower.one()
            };
            if stored_zero(&coef) {
                // theta(0 * X^i) = 1
                continue;
            }
            let terms = g_deg / i;
            let mut theta_i = Vec::with_capacity(terms + 1);
            let mut cpow = tower.one();
            for m in 0..=terms {
                theta_i.push(tower.mul(&lambda[m], &cpow));
                if m < terms {
                    cpow = tower.mul(&cpow, &coef);
                }
            }
            let mut next: Vec<PadicElem> = vec![tower.zero(); g_deg + 1];
            for (n, gn) in g.iter().enumerate() {
                if stored_zero(gn) {
                    continue;
                }
                for (m, t) in theta_i.iter().enumerate() {
                    let deg = n + i * m;
                    if deg > g_deg {
                        break;
                    }
                    next[deg] = tower.add(&next[deg], &tower.mul(gn, t));
                }
            }
            g = next;
        }

        let mut nabla0 = vec![tower.zero()];
        for i in 1..=d {
            let coef = if i < d {
                a_hat[i - 1].clone()
            } else {
                tower.one()
            };
            nabla0.push(tower.scalar_mul(&tower.mul(&tower.gamma(), &coef), i as i64));
        }

        let mut spill = Vec::new();
        let jmax = tower.log_truncation_level();
        let mut ell = 1u32;
        loop {
            let pl1 = (tower.p as i128).checked_pow(ell + 1).unwrap_or(i128::MAX);
            // scaled valuation of the whole level: >= p^{l+1} - (p-1)
            if pl1 - (tower.p as i128 - 1) > tower.full_floor() as i128 + 1 {
                break;
            }
            // gamma_l = -(sum_{j=l+1}^{jmax} gamma^{p^j}/p^j), the root
            // relation of log E; this form makes the valuation
            // p^{l+1}/(p-1) - (l+1) manifest.
            let mut gl = tower.zero();
            for j in ell + 1..=jmax {
                let mut term = tower.pow(&tower.gamma(), tower.p.pow(j));
                for _ in 0..j {
                    term = tower.div_p(&term)?;
                }
                gl = tower.add(&gl, &term);
            }
            gl = tower.neg(&gl);
            let pl = tower.p.pow(ell);
            for i in 1..=d {
                let coef = if i < d {
                    a_hat[i - 1].clone()
                } else {
                    tower.one()
                };
                let cpow = tower.pow(&coef, pl);
                let t = tower.scalar_mul(&tower.mul(&gl, &cpow), i as i64);
                let t = tower.scalar_mul(&t, pl as i64);
                if !t.c.iter().all(|&c| c == 0) {
                    spill.push((i * pl as usize, t));
                }
            }
            ell += 1;
        }

        Ok(FrobeniusData {
            tower,
            d,
            n_target,
            a_hat,
            lambda,
            g,
            d_cap,
            nabla0,
            spill,
        })
    }

    /// G_n(a_hat): the n-th coefficient of prod theta(a_i X^i).
    pub fn g_n(&self, n: usize) -> Result<&PadicElem> {
        self.g.get(n).ok_or_else(|| {
            Error::BadInput(format!(
                "G_{n} beyond the prepared degree {}",
                self.g.len() - 1
            ))
        })
    }

    pub fn g_degree(&self) -> usize {
        self.g.len() - 1
    }

    /// Same value summed directly over compositions sum_{l=1}^{d} l m_l = n.
    /// Exponentially slower than the cached series product; kept as the
    /// independent route for cross-checks.
    pub fn g_n_by_compositions(&self, n: usize) -> PadicElem {
        let mut acc = self.tower.zero();
        let mut m = vec![0usize; self.d + 1];
        self.compositions_rec(n, self.d, &mut m, &mut acc);
        acc
    }

    fn compositions_rec(&self, rem: usize, part: usize, m: &mut [usize], acc: &mut PadicElem) {
        let tower = &self.tower;
        if part == 0 {
            if rem != 0 {
                return;
            }
            let mut term = tower.one();
            for l in 1..=self.d {
                term = tower.mul(&term, &self.lambda[m[l]]);
                if l < self.d && m[l] > 0 {
                    term = tower.mul(&term, &tower.pow(&self.a_hat[l - 1], m[l] as u64));
                }
            }
            *acc = tower.add(acc, &term);
            return;
        }
        let mut k = 0;
        while k * part <= rem {
            m[part] = k;
            self.compositions_rec(rem - k * part, part - 1, m, acc);
            k += 1;
        }
        m[part] = 0;
    }

    /// The auxiliary matrix with (i, j) entry tau^{-1}(G_{pi-j}); entries
    /// with pi - j < 0 are zero.
    pub fn fdagger(&self) -> Result<PadicMatrix> {
        let tower = &self.tower;
        let m = self.d - 1;
        let mut mat = PadicMatrix::zero(tower, m);
        for i in 1..=m {
            for j in 1..=m {
                let idx = tower.p as i64 * i as i64 - j as i64;
                if idx >= 0 {
                    *mat.at_mut(i - 1, j - 1) = tower.tau(self.g_n(idx as usize)?, -1);
                }
            }
        }
        Ok(mat)
    }

    /// nabla(X^m) as sparse (degree, coefficient) pairs. Terms above the
    /// cap are dropped; the growth certificate keeps them below the target.
    fn nabla_of_monomial(&self, m: usize) -> Vec<(usize, PadicElem)> {
        let tower = &self.tower;
        let mut out = Vec::with_capacity(self.d + 2);
        if m > 0 {
            out.push((m, tower.from_u64(m as u64)));
        }
        for i in 1..=self.d {
            if m + i <= self.d_cap {
                out.push((m + i, self.nabla0[i].clone()));
            }
        }
        for (shift, coef) in &self.spill {
            if m + shift <= self.d_cap {
                out.push((m + shift, coef.clone()));
            }
        }
        out
    }

    /// nabla applied to a whole series, truncated at the cap.
    pub fn nabla_apply(&self, s: &[PadicElem]) -> Vec<PadicElem> {
        let tower = &self.tower;
        let mut out = vec![tower.zero(); self.d_cap + 1];
        for (m, sm) in s.iter().enumerate() {
            if sm.c.iter().all(|&c| c == 0) && sm.floor_s >= tower.full_floor() {
                continue;
            }
            for (deg, coef) in self.nabla_of_monomial(m) {
                if deg <= self.d_cap {
                    out[deg] = tower.add(&out[deg], &tower.mul(&coef, sm));
                }
            }
        }
        out
    }

    /// Reduce a series with no constant term onto the classes of
    /// X, ..., X^{d-1}: top-down elimination subtracting
    /// (B_n / (d gamma)) nabla(X^{n-d}). The twisted levels spill upward
    /// past the cursor with at least p more scaled units of valuation, so
    /// a handful of passes empties the tail.
    pub fn nabla_reduce(&self, s: &[PadicElem]) -> Result<Vec<PadicElem>> {
        let tower = &self.tower;
        let d = self.d;
        if self.d_cap < d {
            return Err(Error::BadInput(
                "reduction needs a prepared series cap (build with full = true)".into(),
            ));
        }
        if s.len() != self.d_cap + 1 {
            return Err(Error::BadInput(format!(
                "series length {} does not match cap {}",
                s.len(),
                self.d_cap + 1
            )));
        }
        if !s[0].c.iter().all(|&c| c == 0) {
            return Err(Error::BadInput("series must have no constant term".into()));
        }
        let mut s = s.to_vec();
        let pivot = &self.nabla0[d]; // d gamma, since a_d = 1
        // each pass lifts the spilled tail by at least p scaled units, so
        // storage empties within n_store (p-1)/p passes; the loop exits as
        // soon as a sweep spills nothing
        let max_passes = 3 + tower.n_store as usize;
        for _ in 0..max_passes {
            let mut spilled = false;
            for n in (d..=self.d_cap).rev() {
                let bn = std::mem::replace(&mut s[n], tower.zero());
                let stored_zero = bn.c.iter().all(|&c| c == 0);
                let coef = if stored_zero {
                    // nothing stored; only the floor information flows on
                    let mut z = tower.zero();
                    z.floor_s = bn.floor_s - 1;
                    z
                } else {
                    tower.div_exact(&bn, pivot)?
                };
                let m = n - d;
                if m > 0 {
                    s[m] = tower.sub(&s[m], &tower.scalar_mul(&coef, m as i64));
                }
                for i in 1..d {
                    let pos = m + i;
                    s[pos] = tower.sub(&s[pos], &tower.mul(&coef, &self.nabla0[i]));
                }
                for (shift, sc) in &self.spill {
                    let pos = m + shift;
                    if pos <= self.d_cap {
                        s[pos] = tower.sub(&s[pos], &tower.mul(&coef, sc));
                        if pos > n && !stored_zero {
                            spilled = true;
                        }
                    }
                }
            }
            if !spilled {
                let floor_tail = s[d..]
                    .iter()
                    .map(|e| e.floor_s)
                    .min()
                    .unwrap_or(tower.full_floor());
                let mut out = s[1..d].to_vec();
                for e in &mut out {
                    e.floor_s = e.floor_s.min(floor_tail);
                }
                return Ok(out);
            }
        }
        Err(Error::NonConvergence(
            "reduction kept spilling past the cursor".into(),
        ))
    }

    /// Column j of the Frobenius matrix is the reduction of
    /// tau^{-1}(psi(G X^j)), whose n-th series coefficient is
    /// tau^{-1}(G_{pn-j}). Also certifies the entrywise closeness of F to
    /// the auxiliary matrix before returning.
    pub fn frobenius_matrix(&self) -> Result<PadicMatrix> {
        let tower = &self.tower;
        let d = self.d;
        let mut f = PadicMatrix::zero(tower, d - 1);
        for j in 1..d {
            let mut s = vec![tower.zero(); self.d_cap + 1];
            for (n, slot) in s.iter_mut().enumerate().skip(1) {
                let idx = tower.p as i64 * n as i64 - j as i64;
                if idx >= 0 {
                    *slot = tower.tau(self.g_n(idx as usize)?, -1);
                }
            }
            let col = self.nabla_reduce(&s)?;
            for i in 1..d {
                *f.at_mut(i - 1, j - 1) = col[i - 1].clone();
            }
        }
        self.check_fdagger_distance(&f)?;
        Ok(f)
    }

    /// ord_p(F_ij - tau^{-1} G_{pi-j}) >= (pi - j + p) / (d (p-1)),
    /// checked entrywise on every constructed matrix.
    fn check_fdagger_distance(&self, f: &PadicMatrix) -> Result<()> {
        let tower = &self.tower;
        let fd = self.fdagger()?;
        for i in 1..self.d {
            for j in 1..self.d {
                let bound = ceil_div(
                    tower.p as i64 * i as i64 - j as i64 + tower.p as i64,
                    self.d as i64,
                );
                let diff = tower.sub(f.at(i - 1, j - 1), fd.at(i - 1, j - 1));
                if tower.val_scaled(&diff).lower_bound() < bound.min(diff.floor_s) {
                    return Err(Error::Finding(format!(
                        "F is not close enough to the auxiliary matrix at ({i},{j}): \
                         valuation {:?}, bound {bound} (scaled)",
                        tower.val_scaled(&diff)
                    )));
                }
            }
        }
        Ok(())
    }

    /// The a-fold twisted power F F^{tau^-1} ... F^{tau^-(a-1)}.
    pub fn frobenius_power(&self, f: &PadicMatrix) -> PadicMatrix {
        f.twisted_power(&self.tower, self.tower.a)
    }

    /// det(I - T F_a): the L polynomial through the trace formula, with
    /// tau-invariance of its coefficients checked at the target.
    pub fn l_function(&self) -> Result<PadicPoly> {
        let f = self.frobenius_matrix()?;
        self.l_function_from(&f)
    }

    pub fn l_function_from(&self, f: &PadicMatrix) -> Result<PadicPoly> {
        let tower = &self.tower;
        let fa = self.frobenius_power(f);
        let cp = fa.char_poly(tower);
        let target = self.n_target as i64 * tower.pm1 as i64;
        for (k, c) in cp.iter().enumerate() {
            if !tower.congruent(&tower.tau(c, 1), c, target.min(c.floor_s)) {
                return Err(Error::Finding(format!(
                    "trace-formula coefficient {k} is not tau-invariant at the target"
                )));
            }
        }
        Ok(cp)
    }
}
