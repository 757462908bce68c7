//! Implementations behind the subcommands: orchestration, retries, and
//! report assembly.

use std::sync::Arc;
use std::time::Instant;

use num_rational::BigRational;
use rayon::prelude::*;

use expsum::charsum::{MonicPoly, Oracle};
use expsum::cyclotomic::CycInt;
use expsum::dwork::{cyc_to_tower, zeta_p, FrobeniusData};
use expsum::error::{Error, Result};
use expsum::gnp::GnpContext;
use expsum::padic::linalg::{MatrixDump, PadicPoly};
use expsum::padic::Tower;
use expsum::polygon::{Ordinate, Polygon};
use expsum::semilinear;
use expsum::util::{is_prime, rat, rat_int, rat_str};

use crate::report::*;

/// Parse one coefficient: an integer for prime fields, or a polynomial in
/// the residue-field generator like `y`, `2*y+1`, `y^2+3` for a > 1.
pub fn parse_coeff(p: u64, a: usize, tok: &str) -> Result<Vec<u64>> {
    let tok = tok.trim();
    let mut out = vec![0u64; a];
    if let Ok(n) = tok.parse::<i64>() {
        out[0] = n.rem_euclid(p as i64) as u64;
        return Ok(out);
    }
    for term in tok.replace('-', "+-").split('+') {
        let term = term.trim();
        if term.is_empty() {
            continue;
        }
        let neg = term.starts_with('-');
        let term = term.trim_start_matches('-').trim();
        let (coef, rest) = match term.split_once('*') {
            Some((c, r)) => (
                c.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::BadInput(format!("bad coefficient term {term:?}")))?,
                r.trim(),
            ),
            None if term.starts_with('y') => (1, term),
            None => (
                term.parse::<u64>()
                    .map_err(|_| Error::BadInput(format!("bad coefficient term {term:?}")))?,
                "",
            ),
        };
        let expo = if rest.is_empty() {
            0
        } else if rest == "y" {
            1
        } else if let Some(e) = rest.strip_prefix("y^") {
            e.parse::<usize>()
                .map_err(|_| Error::BadInput(format!("bad exponent in {term:?}")))?
        } else {
            return Err(Error::BadInput(format!("bad coefficient term {term:?}")));
        };
        if expo >= a {
            return Err(Error::BadInput(format!(
                "y^{expo} is outside the degree-{a} residue field"
            )));
        }
        let c = if neg { (p - coef % p) % p } else { coef % p };
        out[expo] = (out[expo] + c) % p;
    }
    Ok(out)
}

fn coeff_string(c: &[u64]) -> String {
    if c.len() == 1 {
        return c[0].to_string();
    }
    let terms: Vec<String> = c
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0)
        .map(|(k, &v)| match k {
            0 => v.to_string(),
            1 if v == 1 => "y".into(),
            1 => format!("{v}*y"),
            _ if v == 1 => format!("y^{k}"),
            _ => format!("{v}*y^{k}"),
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+")
    }
}

pub fn polygon_of_dwork_poly(tower: &Tower, cp: &PadicPoly) -> Result<Polygon> {
    let denom = tower.a as i64 * (tower.p as i64 - 1);
    let pts: Vec<(u64, Ordinate)> = cp
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let ord = match tower.val_scaled(c).certified() {
                Some(v) => Ordinate::Finite(rat(v, denom)),
                None => Ordinate::Infinite,
            };
            (n as u64, ord)
        })
        .collect();
    Ok(Polygon::lower_hull(&pts)?.polygon)
}

pub struct NpArgs {
    pub d: usize,
    pub p: u64,
    pub a: usize,
    pub coeffs: Vec<String>,
    pub prec: Option<u32>,
}

/// Runs the exact and the p-adic route, compares them, and assembles the
/// report. Precision exhaustion doubles the target (and with it the
/// series cap) up to three retries.
pub fn cmd_np(args: &NpArgs) -> Result<RunReport> {
    let t0 = Instant::now();
    let (d, p, a) = (args.d, args.p, args.a);
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if d < 3 || p % d as u64 == 0 {
        return Err(Error::BadInput("need d >= 3 and p coprime to d".into()));
    }
    if args.coeffs.len() != d {
        return Err(Error::BadInput(format!(
            "need d = {d} coefficients a_0..a_{}",
            d - 1
        )));
    }
    let coeffs: Vec<Vec<u64>> = args
        .coeffs
        .iter()
        .map(|t| parse_coeff(p, a, t))
        .collect::<Result<_>>()?;
    let notice = if coeffs[0].iter().any(|&c| c != 0) {
        Some(
            "constant term accepted and discarded: it scales every character sum by a root \
             of unity and does not move the polygon"
                .to_string(),
        )
    } else {
        None
    };

    let oracle_start = Instant::now();
    let oracle = Oracle::new(p, a, d)?;
    let mut f = MonicPoly {
        d,
        coeffs: coeffs.clone(),
    };
    f.coeffs[0] = vec![0; a];
    let b = oracle.l_polynomial(&f)?;
    let np_oracle = oracle.np_of_coeffs(&b)?;
    let oracle_ms = oracle_start.elapsed().as_millis();

    let dwork_start = Instant::now();
    let residues: Vec<Vec<u64>> = f.coeffs[1..].to_vec();
    let base_target = args.prec.unwrap_or(d as u32 + 5);
    let mut attempt = 0u32;
    let (tower, cp, n_target) = loop {
        let n_target = base_target << attempt;
        let n_store = n_target + FrobeniusData::headroom(p, n_target);
        let run = Tower::new(p, a, n_store).map(Arc::new).and_then(|tower| {
            let data = FrobeniusData::from_residues(tower.clone(), d, &residues, n_target, true)?;
            let cp = data.l_function()?;
            Ok((tower, cp))
        });
        match run {
            Ok((tower, cp)) => break (tower, cp, n_target),
            Err(Error::PrecisionExhausted(msg)) if attempt < 3 => {
                eprintln!("precision exhausted ({msg}); retrying with doubled target");
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    };
    let np_dwork = polygon_of_dwork_poly(&tower, &cp)?;
    let dwork_ms = dwork_start.elapsed().as_millis();

    let trace_match = compare_coefficients(&tower, &cp, &b, n_target)?;
    let hp = Polygon::hodge(d as u64)?;
    let r = (p % d as u64) as usize;
    let gnp = GnpContext::new(d, r).and_then(|c| c.gnp_polygon(p)).ok();

    // contraction diagnostics on the auxiliary matrix
    let data_fd = FrobeniusData::from_residues(tower.clone(), d, &residues, n_target, false)?;
    let hypothesis = match semilinear::delta_eta(&tower, &data_fd.fdagger()?) {
        Ok((delta, eta)) => delta > (d as i64 - 1) * eta,
        Err(_) => false,
    };

    let flags = RunFlags {
        trace_formula_match: trace_match,
        np_equals_hodge: np_oracle == hp,
        np_equals_generic: gnp.as_ref().map(|g| g.polygon == np_oracle).unwrap_or(false),
        contraction_hypothesis: hypothesis,
    };
    Ok(RunReport {
        d,
        p,
        a,
        coeffs: f.coeffs.iter().map(|c| coeff_string(c)).collect(),
        notice,
        precision: n_target,
        embedding: oracle.embedding(),
        oracle_l_coefficients: b
            .iter()
            .map(|bn| expsum::charsum::LCoefficient::from_cyc(bn, a))
            .collect(),
        oracle_polygon: np_oracle,
        dwork_polygon: np_dwork,
        hodge_polygon: hp,
        generic_polygon: gnp,
        flags,
        timings_ms: Timings {
            oracle_ms,
            dwork_ms,
            total_ms: t0.elapsed().as_millis(),
        },
    })
}

pub fn compare_coefficients(
    tower: &Tower,
    cp: &PadicPoly,
    b: &[CycInt],
    n_target: u32,
) -> Result<bool> {
    let zeta = zeta_p(tower)?;
    let target = n_target as i64 * tower.pm1 as i64;
    if cp.len() != b.len() {
        return Ok(false);
    }
    for (c, bn) in cp.iter().zip(b) {
        let mapped = cyc_to_tower(tower, bn, &zeta);
        // certified strictly at the target; weaker floors count as a miss
        if !tower.congruent(c, &mapped, target) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn slopes_string(poly: &Polygon) -> String {
    poly.slopes()
        .iter()
        .map(rat_str)
        .collect::<Vec<_>>()
        .join("|")
}

pub struct ScanArgs {
    pub d: usize,
    pub primes: Vec<u64>,
    pub mode: String,
    pub seed: u64,
    pub jobs: usize,
}

/// Per prime: the pointwise infimum of oracle Newton polygons over all (or
/// sampled) coefficient vectors with a_0 = 0, against the formula polygon
/// and the Hodge bound.
pub fn cmd_scan(args: &ScanArgs) -> Result<ScanReport> {
    let d = args.d;
    let sample_size = match args.mode.as_str() {
        "exhaustive" => None,
        m => match m.strip_prefix("sample:") {
            Some(k) => Some(k.parse::<usize>().map_err(|_| {
                Error::BadInput(format!("bad mode {m:?}; use exhaustive or sample:<k>"))
            })?),
            None => {
                return Err(Error::BadInput(format!(
                    "bad mode {m:?}; use exhaustive or sample:<k>"
                )))
            }
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| Error::BadInput(format!("thread pool: {e}")))?;
    let mut rows = Vec::new();
    for &p in &args.primes {
        let t0 = Instant::now();
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p % d as u64 == 0 {
            return Err(Error::BadInput(format!("p = {p} divides d = {d}")));
        }
        let total = (p as u128).pow(d as u32 - 1);
        if sample_size.is_none() && total > 1 << 20 {
            return Err(Error::ResourceGuard(format!(
                "exhaustive scan over {total} coefficient vectors exceeds 2^20"
            )));
        }
        let oracle = Arc::new(Oracle::new(p, 1, d)?);
        let vectors: Vec<Vec<i64>> = match sample_size {
            None => (0..total as u64)
                .map(|idx| {
                    let mut v = Vec::with_capacity(d - 1);
                    let mut rest = idx;
                    for _ in 0..d - 1 {
                        v.push((rest % p) as i64);
                        rest /= p;
                    }
                    v
                })
                .collect(),
            Some(k) => {
                let mut state = args.seed ^ (p << 16) ^ d as u64;
                let mut next = move || {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    state
                };
                (0..k)
                    .map(|_| (0..d - 1).map(|_| (next() % p) as i64).collect())
                    .collect()
            }
        };
        let ords: Vec<Vec<Option<i64>>> = pool.install(|| {
            vectors
                .par_iter()
                .map(|v| {
                    let mut coeffs = vec![0i64];
                    coeffs.extend_from_slice(v);
                    let f = MonicPoly::from_ints(p, 1, d, &coeffs).expect("coeff count");
                    let b = oracle.l_polynomial(&f).expect("oracle");
                    b.iter().map(|c| c.val_scaled()).collect()
                })
                .collect()
        });
        // pointwise minimum of the coefficient valuations
        let mut min_ord: Vec<Option<i64>> = vec![None; d];
        for row in &ords {
            for (slot, v) in min_ord.iter_mut().zip(row) {
                if let Some(v) = v {
                    *slot = Some(slot.map_or(*v, |s: i64| s.min(*v)));
                }
            }
        }
        let denom = p as i64 - 1;
        let pts: Vec<(u64, Ordinate)> = min_ord
            .iter()
            .enumerate()
            .map(|(n, v)| {
                (
                    n as u64,
                    match v {
                        Some(v) => Ordinate::Finite(rat(*v, denom)),
                        None => Ordinate::Infinite,
                    },
                )
            })
            .collect();
        let obs = Polygon::lower_hull(&pts)?.polygon;
        let attaining = ords
            .iter()
            .filter(|row| {
                let pts: Vec<(u64, Ordinate)> = row
                    .iter()
                    .enumerate()
                    .map(|(n, v)| {
                        (
                            n as u64,
                            match v {
                                Some(v) => Ordinate::Finite(rat(*v, denom)),
                                None => Ordinate::Infinite,
                            },
                        )
                    })
                    .collect();
                Polygon::lower_hull(&pts)
                    .map(|h| h.polygon == obs)
                    .unwrap_or(false)
            })
            .count();
        let r = p % d as u64;
        let gnp = GnpContext::new(d, r as usize)?.gnp_polygon(p)?;
        let hp = Polygon::hodge(d as u64)?;
        rows.push(ScanRow {
            p,
            r,
            obs_slopes: slopes_string(&obs),
            gnp_slopes: slopes_string(&gnp.polygon),
            hp_slopes: slopes_string(&hp),
            eq_obs_gnp: obs == gnp.polygon,
            eq_obs_hp: obs == hp,
            n_attaining: attaining,
            runtime_ms: t0.elapsed().as_millis(),
        });
    }
    Ok(ScanReport {
        d,
        mode: args.mode.clone(),
        caveat: sample_size
            .map(|_| "sampled mode only bounds the generic polygon from above".to_string()),
        rows,
    })
}

pub fn scan_csv(report: &ScanReport) -> String {
    let mut out =
        String::from("p,r,obs_slopes,gnp_slopes,hp_slopes,eq_obs_gnp,eq_obs_hp,n_attaining,runtime_ms\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.p,
            row.r,
            row.obs_slopes,
            row.gnp_slopes,
            row.hp_slopes,
            row.eq_obs_gnp,
            row.eq_obs_hp,
            row.n_attaining,
            row.runtime_ms
        ));
    }
    out
}

/// f = x^d + p * (random small coefficients) reduces to x^d mod p. For
/// p = -1 mod d its polygon is the straight slope-1/2 line even though the
/// zero coefficient vector is outside the good locus: the generic-polygon
/// statement cannot absorb p-dependent coefficient families.
pub fn cmd_counterexample(d: usize, p: u64, seed: u64) -> Result<CounterexampleReport> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if d < 3 || (p + 1) % d as u64 != 0 {
        return Err(Error::BadInput(format!(
            "need p = -1 mod d; got p = {p}, d = {d}"
        )));
    }
    let mut state = seed | 1;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let lifted: Vec<i64> = (0..d).map(|_| (p * (next() % 5)) as i64).collect();
    let reduction = format!(
        "x^{d} + {} reduces to x^{d} mod {p}",
        lifted
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{c}x^{i}"))
            .collect::<Vec<_>>()
            .join(" + ")
    );
    let oracle = Oracle::new(p, 1, d)?;
    let f = MonicPoly::from_ints(p, 1, d, &vec![0; d])?;
    let np = oracle.np(&f)?;
    let all_half = np.slopes().iter().all(|s| *s == rat(1, 2));
    let ctx = GnpContext::new(d, (p % d as u64) as usize)?;
    let zero = vec![rat_int(0); d - 1];
    let (_, _, in_w) = ctx.membership(&zero)?;
    Ok(CounterexampleReport {
        d,
        p,
        reduction,
        oracle_polygon: np,
        all_slopes_half: all_half,
        zero_vector_in_w: in_w,
    })
}

pub fn cmd_membership(d: usize, r: usize, coeffs: &[String]) -> Result<MembershipReport> {
    let ctx = GnpContext::new(d, r)?;
    if coeffs.len() != d - 1 {
        return Err(Error::BadInput(format!(
            "need {} coefficients a_1..a_{}",
            d - 1,
            d - 1
        )));
    }
    let point: Vec<BigRational> = coeffs
        .iter()
        .map(|s| expsum::util::parse_rat(s))
        .collect::<Result<_>>()?;
    let (in_x, in_y, in_w) = ctx.membership(&point)?;
    Ok(MembershipReport {
        d,
        r,
        coeffs: coeffs.to_vec(),
        in_x,
        in_y,
        in_w,
    })
}

pub fn cmd_triangularize(path: &str, prec: Option<u32>) -> Result<TriangularizeReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::BadInput(format!("cannot read {path}: {e}")))?;
    let dump: MatrixDump =
        serde_json::from_str(&text).map_err(|e| Error::BadInput(format!("bad matrix JSON: {e}")))?;
    let (tower, matrix) = dump.load()?;
    let n_target = prec.unwrap_or((tower.n_store.saturating_sub(4)).max(2));
    let tri = semilinear::triangularize(&tower, &matrix, n_target, None)?;
    let rep = semilinear::verify_np_theorem(&tower, &matrix)?;
    Ok(TriangularizeReport {
        m: matrix.m,
        p: tower.p,
        a: tower.a,
        delta_scaled: tri.delta,
        eta_scaled: tri.eta,
        iterations: tri.iterations,
        minor_vals_scaled: tri.minor_vals,
        np_twisted_power: rep.np_twisted_power,
        np_single: rep.np_single,
        minor_hull: rep.minor_hull,
        polygons_equal: rep.pass,
        findings: tri.findings,
    })
}

pub fn cmd_curve(path: &str, p: u64) -> Result<Polygon> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::BadInput(format!("cannot read {path}: {e}")))?;
    let poly: Polygon =
        serde_json::from_str(&text).map_err(|e| Error::BadInput(format!("bad polygon JSON: {e}")))?;
    let d = poly.span() + 1;
    if p < 3 || p % d == 0 {
        return Err(Error::BadInput(format!(
            "curve scale needs an odd prime p coprime to d = {d}; got {p}"
        )));
    }
    Ok(poly.dilate(p - 1))
}


/// Writes the Frobenius matrix and its auxiliary companion for a run, in
/// the dump format `triangularize --matrix` consumes.
pub fn dump_frobenius(args: &NpArgs, path: &str) -> Result<()> {
    let (d, p, a) = (args.d, args.p, args.a);
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let coeffs: Vec<Vec<u64>> = args
        .coeffs
        .iter()
        .map(|t| parse_coeff(p, a, t))
        .collect::<Result<_>>()?;
    let n_target = args.prec.unwrap_or(d as u32 + 5);
    let n_store = n_target + FrobeniusData::headroom(p, n_target);
    let tower = Arc::new(Tower::new(p, a, n_store)?);
    let residues: Vec<Vec<u64>> = coeffs[1..].to_vec();
    let data = FrobeniusData::from_residues(tower.clone(), d, &residues, n_target, true)?;
    let f = data.frobenius_matrix()?;
    let fd = data.fdagger()?;
    let out = serde_json::json!({
        "frobenius": MatrixDump::of(&tower, &f),
        "auxiliary": MatrixDump::of(&tower, &fd),
    });
    std::fs::write(path, serde_json::to_string_pretty(&out).unwrap())
        .map_err(|e| Error::BadInput(format!("cannot write {path}: {e}")))?;
    Ok(())
}
