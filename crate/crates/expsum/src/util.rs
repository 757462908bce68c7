//! Small numeric helpers: primality, modular arithmetic on `u64`,
//! exact-rational string forms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Modular inverse by extended Euclid; `m` need not be prime, only
/// gcd(a, m) = 1.
pub fn inv_mod(a: u64, m: u64) -> Result<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return Err(Error::BadInput(format!("{a} is not invertible mod {m}")));
    }
    Ok(s0.rem_euclid(m as i128) as u64)
}

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn require_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// p-adic valuation of a nonzero integer; `None` for zero.
pub fn bigint_val_p(x: &BigInt, p: u64) -> Option<u64> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = 0;
    let mut cur = x.abs();
    loop {
        let (q, r) = num_integer::Integer::div_rem(&cur, &p);
        if !r.is_zero() {
            return Some(v);
        }
        v += 1;
        cur = q;
    }
}

/// Renders a rational as `num/den` with the denominator always explicit,
/// so report files never need decimal parsing.
pub fn rat_str(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rat(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::BadInput(format!("bad rational {s:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::BadInput(format!("bad rational {s:?}")))?;
    if d.is_zero() {
        return Err(Error::BadInput(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Is `r` p-integral, i.e. does p not divide the reduced denominator?
pub fn is_p_integral(r: &BigRational, p: u64) -> bool {
    bigint_val_p(r.denom(), p) == Some(0)
}

/// Reduce a p-integral rational mod p^k (given as `modulus`), mapping
/// num * den^{-1} into [0, modulus).
pub fn rational_mod(r: &BigRational, p: u64, modulus: u64) -> Result<u64> {
    if !is_p_integral(r, p) {
        return Err(Error::IntegralityFailure(format!(
            "{} is not {p}-integral",
            rat_str(r)
        )));
    }
    let m = BigInt::from(modulus);
    let num = num_integer::Integer::mod_floor(r.numer(), &m);
    let den = num_integer::Integer::mod_floor(r.denom(), &m);
    let num_u = u64::try_from(&num).expect("mod_floor fits");
    let den_u = u64::try_from(&den).expect("mod_floor fits");
    Ok(mul_mod(num_u, inv_mod(den_u, modulus)?, modulus))
}

/// Ceiling of a/b for positive b.
pub fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b) + if a.rem_euclid(b) != 0 { 1 } else { 0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality() {
        assert!(is_prime(2));
        assert!(is_prime(31));
        assert!(is_prime(2305843009213693951)); // 2^61 - 1
        assert!(!is_prime(1));
        assert!(!is_prime(6));
        assert!(!is_prime(561)); // Carmichael
    }

    #[test]
    fn inverse() {
        for m in [5u64, 125, 2401] {
            for a in 1..40 {
                if gcd_u64(a, m) == 1 {
                    assert_eq!(mul_mod(a % m, inv_mod(a, m).unwrap(), m), 1 % m);
                }
            }
        }
    }

    #[test]
    fn rational_strings() {
        let r = rat(3, -6);
        assert_eq!(rat_str(&r), "-1/2");
        assert_eq!(parse_rat("-1/2").unwrap(), r);
        assert_eq!(parse_rat("7").unwrap(), rat_int(7));
    }

    #[test]
    fn ceil_division() {
        assert_eq!(ceil_div(7, 3), 3);
        assert_eq!(ceil_div(6, 3), 2);
        assert_eq!(ceil_div(-1, 3), 0);
        assert_eq!(ceil_div(-3, 3), -1);
    }
}
