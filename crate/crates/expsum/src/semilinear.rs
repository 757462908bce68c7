//! Triangularization of twisted-linear matrices over the tower.
//!
//! For M over O_a with delta(M) > m eta(M) there is a unique upper
//! unitriangular C such that C^{-tau} M C is lower triangular, found here
//! by a contraction-mapping sweep. The q-adic Newton polygon of
//! det(I - T M_a), with M_a the a-fold twisted power, then equals the
//! p-adic Newton polygon of det(I - T M) and the lower hull of the leading
//! principal minor valuations. delta and eta are the valuation-gap and
//! minor-defect diagnostics certifying the contraction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::linalg::PadicMatrix;
use crate::padic::{PadicElem, Tower, Val};
use crate::polygon::{Ordinate, Polygon};
use crate::util::rat;

/// delta(M) = (p-1) min_i (min_j ord M_{i+1,j} - max_j ord M_{ij});
/// eta(M)  = (p-1) max_n (ord det M^[n] - sum_{i<=n} min_{j<=n+1} ord M_{ij}).
///
/// Entries whose valuation is beyond the floor count as +infinity inside
/// the min/max; a row of only such entries is an error, and an uncertified
/// leading minor reports as singular.
pub fn delta_eta(tower: &Tower, m: &PadicMatrix) -> Result<(i64, i64)> {
    let n = m.m;
    if n == 0 {
        return Err(Error::BadInput("empty matrix".into()));
    }
    if n > 12 {
        return Err(Error::ResourceGuard(format!(
            "matrix size {n} exceeds the signed-minor budget (12)"
        )));
    }
    let vals: Vec<Vec<Option<i64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| tower.val_scaled(m.at(i, j)).certified())
                .collect()
        })
        .collect();
    for (i, row) in vals.iter().enumerate() {
        if row.iter().all(Option::is_none) {
            return Err(Error::PrecisionExhausted(format!(
                "row {} has no certified entries",
                i + 1
            )));
        }
    }
    let row_min = |i: usize, jmax: usize| -> i64 {
        vals[i][..jmax]
            .iter()
            .flatten()
            .copied()
            .min()
            .unwrap_or(i64::MAX)
    };
    // entries at the floor (structural zeros included) do not constrain
    // the row maximum: a vanishing entry never appears as an obstruction
    // term in the fixed-point map, and the postconditions re-verify the
    // outcome at the end
    let row_max = |i: usize| -> i64 {
        vals[i].iter().flatten().copied().max().unwrap_or(i64::MIN)
    };
    let mut delta = i64::MAX;
    for i in 0..n - 1 {
        let lo = row_min(i + 1, n);
        let hi = row_max(i);
        let gap = if hi == i64::MIN || lo == i64::MAX {
            i64::MIN
        } else {
            lo - hi
        };
        delta = delta.min(gap);
    }
    if n == 1 {
        delta = i64::MAX;
    }

    let minors = m.leading_minor_dets(tower);
    let mut eta = i64::MIN;
    for k in 1..n {
        let det_val = match tower.val_scaled(&minors[k - 1]) {
            Val::Certified(v) => v,
            Val::AtLeast(_) => return Err(Error::SingularMinor(k)),
        };
        let base: i64 = (0..k).map(|i| row_min(i, k + 1)).sum();
        eta = eta.max(det_val - base);
    }
    if n == 1 {
        eta = 0;
    }
    Ok((delta, eta))
}

/// Result of one triangularization, carrying everything the postcondition
/// checks need.
///
/// C may have entries of negative valuation down to -eta/(p-1), so it is
/// stored uniformly rescaled: `c` holds gamma^{c_shift} C and `m_prime`
/// holds gamma^{m_prime_shift} C^{-tau} M C, both integral. The shifts
/// depend only on the input matrix, so stored forms compare directly
/// across runs.
#[derive(Debug)]
pub struct TriangResult {
    pub c: PadicMatrix,
    /// scaled by (p-1): c = gamma^{c_shift} * (the true C)
    pub c_shift: i64,
    pub m_prime: PadicMatrix,
    /// scaled by (p-1): m_prime = gamma^{m_prime_shift} * (the true M')
    pub m_prime_shift: i64,
    /// scaled by (p-1)
    pub delta: i64,
    /// scaled by (p-1)
    pub eta: i64,
    /// ord_p det M^[n] scaled, n = 1..=m
    pub minor_vals: Vec<i64>,
    pub iterations: usize,
    /// postcondition violations observed at the target precision; findings
    /// are reported, not panicked over
    pub findings: Vec<String>,
}

/// Fixed-point triangularization. Refuses inputs with delta <= m eta:
/// the contraction bound is the only convergence certificate there is.
/// `sweep_order` permutes the column update order (uniqueness testing);
/// `None` is natural order 2..=m.
pub fn triangularize(
    tower: &Tower,
    m: &PadicMatrix,
    n_target: u32,
    sweep_order: Option<&[usize]>,
) -> Result<TriangResult> {
    let size = m.m;
    let (delta, eta) = delta_eta(tower, m)?;
    if delta == i64::MIN || delta <= size as i64 * eta {
        return Err(Error::HypothesisViolated {
            delta,
            eta,
            m: size,
        });
    }
    let minors = m.leading_minor_dets(tower);
    let minor_vals: Vec<i64> = minors
        .iter()
        .enumerate()
        .map(|(k, d)| {
            tower
                .val_scaled(d)
                .certified()
                .ok_or(Error::SingularMinor(k + 1))
        })
        .collect::<Result<_>>()?;
    // adjugates of the leading blocks, reused across sweeps
    let mut adjugates: Vec<PadicMatrix> = Vec::with_capacity(size);
    for k in 0..size {
        let mut block = PadicMatrix::zero(tower, k);
        for i in 0..k {
            for j in 0..k {
                *block.at_mut(i, j) = m.at(i, j).clone();
            }
        }
        adjugates.push(block.adjugate(tower));
    }

    let order: Vec<usize> = match sweep_order {
        Some(o) => {
            let mut sorted = o.to_vec();
            sorted.sort_unstable();
            if sorted != (1..size).collect::<Vec<_>>() {
                return Err(Error::BadInput(
                    "sweep order must be a permutation of the column indices 1..m".into(),
                ));
            }
            o.to_vec()
        }
        None => (1..size).collect(),
    };

    // C can dip to valuation -eta/(p-1); iterate on the integral rescaling
    // gamma^shift C with shift = m eta, the substitution that also makes
    // the contraction estimate uniform
    let shift = size as i64 * eta.max(0);
    let g_shift = tower.pow(&tower.gamma(), shift as u64);
    let div_gamma_n = |x: &PadicElem, n: i64| -> Result<PadicElem> {
        let mut out = x.clone();
        for _ in 0..n {
            out = tower.div_gamma(&out)?;
        }
        Ok(out)
    };
    let scaled_identity = |tower: &Tower| -> PadicMatrix {
        let mut mat = PadicMatrix::zero(tower, size);
        for i in 0..size {
            *mat.at_mut(i, i) = g_shift.clone();
        }
        mat
    };
    // gamma^shift C^{-tau} from the stored matrix: the adjugate is
    // (m-1)-homogeneous, so D_st = adj(C_st)^tau / gamma^{shift (m-2)}
    let twisted_inverse = |c_st: &PadicMatrix| -> Result<PadicMatrix> {
        let adj = c_st.adjugate(tower).apply_tau(tower, 1);
        if size < 2 || shift == 0 {
            return Ok(adj);
        }
        let mut out = PadicMatrix::zero(tower, size);
        for i in 0..size {
            for j in 0..size {
                *out.at_mut(i, j) = div_gamma_n(adj.at(i, j), shift * (size as i64 - 2))?;
            }
        }
        Ok(out)
    };

    let target = n_target as i64 * tower.pm1 as i64;
    let stored_target = target + shift;
    let mut c = scaled_identity(tower);
    let cap = 4 * size * n_target as usize;
    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > cap {
            return Err(Error::NonConvergence(format!(
                "no fixed point after {cap} sweeps"
            )));
        }
        let d = twisted_inverse(&c)?;
        let mut next = scaled_identity(tower);
        for &j in &order {
            // stored equation: M^[j] col_st = -(gamma^shift M_{ij}
            //   + sum_{k>i} M_{kj} D_st_{ik}
            //   + gamma^{-shift} sum_{k>i, l<j} M_{kl} D_st_{ik} C_st_{lj})_i
            let mut rhs: Vec<PadicElem> = Vec::with_capacity(j);
            for i in 0..j {
                let mut acc = tower.mul(m.at(i, j), &g_shift);
                let mut inner = tower.zero();
                for k in i + 1..size {
                    let dik = d.at(i, k);
                    acc = tower.add(&acc, &tower.mul(m.at(k, j), dik));
                    for l in 0..j {
                        inner =
                            tower.add(&inner, &tower.mul(m.at(k, l), &tower.mul(dik, c.at(l, j))));
                    }
                }
                acc = tower.add(&acc, &div_gamma_n(&inner, shift)?);
                rhs.push(tower.neg(&acc));
            }
            // col_st = adj(M^[j]) rhs / det M^[j]
            let adj = &adjugates[j];
            for i in 0..j {
                let mut acc = tower.zero();
                for (l, r) in rhs.iter().enumerate() {
                    acc = tower.add(&acc, &tower.mul(adj.at(i, l), r));
                }
                *next.at_mut(i, j) = tower.div_exact(&acc, &minors[j - 1])?;
            }
        }
        // convergence: elementwise difference beyond the stored target
        let mut done = true;
        for i in 0..size {
            for j in i + 1..size {
                let diff = tower.sub(next.at(i, j), c.at(i, j));
                if tower.val_scaled(&diff).lower_bound() < stored_target.min(diff.floor_s) {
                    done = false;
                }
            }
        }
        c = next;
        if done {
            break;
        }
    }

    let d = twisted_inverse(&c)?;
    let m_prime = d.mul(tower, m).mul(tower, &c);
    let m_prime_shift = 2 * shift;
    let mut findings = Vec::new();

    // C unitriangular with ord C_ij >= -eta/(p-1), read off the stored form
    for i in 0..size {
        for j in 0..size {
            let e = c.at(i, j);
            if i > j && !tower.is_zero_at_floor(e) {
                findings.push(format!(
                    "C has a nonzero entry below the diagonal at ({},{})",
                    i + 1,
                    j + 1
                ));
            }
            if i == j && !tower.congruent(e, &g_shift, e.floor_s.min(g_shift.floor_s)) {
                findings.push(format!("C diagonal entry {} is not 1", i + 1));
            }
            if i < j && tower.val_scaled(e).lower_bound() < shift - eta {
                findings.push(format!(
                    "ord C_{}{} below -eta/(p-1): stored {:?}",
                    i + 1,
                    j + 1,
                    tower.val_scaled(e)
                ));
            }
        }
    }
    // M' lower triangular at the target
    for i in 0..size {
        for j in i + 1..size {
            let e = m_prime.at(i, j);
            let want = (target + m_prime_shift).min(e.floor_s);
            if tower.val_scaled(e).lower_bound() < want {
                findings.push(format!(
                    "M' not lower triangular at ({},{}): stored {:?}",
                    i + 1,
                    j + 1,
                    tower.val_scaled(e)
                ));
            }
        }
    }
    // diagonal law val M'_nn = val det M^[n] - val det M^[n-1], strictly
    // increasing down the diagonal
    let mut prev = None;
    for n in 0..size {
        let want = minor_vals[n] - if n == 0 { 0 } else { minor_vals[n - 1] };
        match tower.val_scaled(m_prime.at(n, n)) {
            Val::Certified(v) if v == want + m_prime_shift => {}
            v => findings.push(format!(
                "diagonal valuation at {} is {v:?}, minors say {}",
                n + 1,
                want + m_prime_shift
            )),
        }
        if let Some(p) = prev {
            if want <= p {
                findings.push(format!(
                    "diagonal valuations not strictly increasing at {}",
                    n + 1
                ));
            }
        }
        prev = Some(want);
    }

    Ok(TriangResult {
        c,
        c_shift: shift,
        m_prime,
        m_prime_shift,
        delta,
        eta,
        minor_vals,
        iterations,
        findings,
    })
}

/// The three polygons whose equality the twisted/untwisted comparison
/// asserts, plus the diagnostics that certified the hypothesis.
#[derive(Debug, Serialize)]
pub struct NpTheoremReport {
    pub m: usize,
    pub a: usize,
    pub delta_scaled: i64,
    pub eta_scaled: i64,
    pub np_twisted_power: Polygon,
    pub np_single: Polygon,
    pub minor_hull: Polygon,
    pub pass: bool,
}

/// Newton polygon of det(I - T M) from certified coefficient valuations;
/// `denom` rescales ord to rationals: a(p-1) for the q-adic polygon of the
/// twisted power, p-1 for the single matrix.
fn np_of_char_poly(tower: &Tower, mat: &PadicMatrix, denom: i64) -> Result<Polygon> {
    let cp = mat.char_poly(tower);
    let pts: Vec<(u64, Ordinate)> = cp
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let ord = match tower.val_scaled(c) {
                Val::Certified(v) => Ordinate::Finite(rat(v, denom)),
                Val::AtLeast(_) => Ordinate::Infinite,
            };
            (n as u64, ord)
        })
        .collect();
    Ok(Polygon::lower_hull(&pts)?.polygon)
}

/// Checks NP_q(det(I - T M_a)) = NP_p(det(I - T M)) = hull of the minor
/// valuations, for M satisfying the contraction hypothesis.
pub fn verify_np_theorem(tower: &Tower, m: &PadicMatrix) -> Result<NpTheoremReport> {
    let size = m.m;
    let (delta, eta) = delta_eta(tower, m)?;
    if delta <= size as i64 * eta {
        return Err(Error::HypothesisViolated {
            delta,
            eta,
            m: size,
        });
    }
    let pm1 = tower.pm1 as i64;
    let ma = m.twisted_power(tower, tower.a);
    let np_twisted = np_of_char_poly(tower, &ma, tower.a as i64 * pm1)?;
    let np_single = np_of_char_poly(tower, m, pm1)?;
    let minors = m.leading_minor_dets(tower);
    let mut pts = vec![(0u64, Ordinate::Finite(rat(0, 1)))];
    for (k, det) in minors.iter().enumerate() {
        let ord = match tower.val_scaled(det) {
            Val::Certified(v) => Ordinate::Finite(rat(v, pm1)),
            Val::AtLeast(_) => return Err(Error::SingularMinor(k + 1)),
        };
        pts.push((k as u64 + 1, ord));
    }
    let minor_hull = Polygon::lower_hull(&pts)?.polygon;
    let pass = np_twisted == np_single && np_single == minor_hull;
    Ok(NpTheoremReport {
        m: size,
        a: tower.a,
        delta_scaled: delta,
        eta_scaled: eta,
        np_twisted_power: np_twisted,
        np_single,
        minor_hull,
        pass,
    })
}
