//! Matrices and T-polynomials over the tower, with division-free
//! characteristic polynomials (Berkowitz) and subset-DP determinants.
//! Entries are at finite precision and p is not invertible, so nothing
//! here ever divides.

use serde::{Deserialize, Serialize};

use super::{PadicElem, Tower, Val};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicMatrix {
    pub m: usize,
    pub entries: Vec<PadicElem>,
}

/// Polynomial in T with tower coefficients, ascending degree.
pub type PadicPoly = Vec<PadicElem>;

impl PadicMatrix {
    pub fn zero(tower: &Tower, m: usize) -> PadicMatrix {
        PadicMatrix {
            m,
            entries: vec![tower.zero(); m * m],
        }
    }

    pub fn identity(tower: &Tower, m: usize) -> PadicMatrix {
        let mut mat = PadicMatrix::zero(tower, m);
        for i in 0..m {
            *mat.at_mut(i, i) = tower.one();
        }
        mat
    }

    pub fn from_rows(rows: Vec<Vec<PadicElem>>) -> PadicMatrix {
        let m = rows.len();
        assert!(rows.iter().all(|r| r.len() == m), "square matrix required");
        PadicMatrix {
            m,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> &PadicElem {
        &self.entries[i * self.m + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut PadicElem {
        &mut self.entries[i * self.m + j]
    }

    pub fn mul(&self, tower: &Tower, other: &PadicMatrix) -> PadicMatrix {
        assert_eq!(self.m, other.m);
        let m = self.m;
        let mut out = PadicMatrix::zero(tower, m);
        for i in 0..m {
            for j in 0..m {
                let mut acc = tower.zero();
                for k in 0..m {
                    acc = tower.add(&acc, &tower.mul(self.at(i, k), other.at(k, j)));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn apply_tau(&self, tower: &Tower, k: i64) -> PadicMatrix {
        PadicMatrix {
            m: self.m,
            entries: self.entries.iter().map(|e| tower.tau(e, k)).collect(),
        }
    }

    /// The a-fold twisted product M M^{tau^{-1}} ... M^{tau^{-(a-1)}}.
    pub fn twisted_power(&self, tower: &Tower, a: usize) -> PadicMatrix {
        let mut acc = self.clone();
        for k in 1..a {
            acc = acc.mul(tower, &self.apply_tau(tower, -(k as i64)));
        }
        acc
    }

    /// Determinants of all leading principal minors M^{[1]}..M^{[m]} in one
    /// subset-DP sweep (division-free). The DP is exponential in m, which
    /// is fine at the matrix sizes this crate produces (m <= d-1 <= 7) but
    /// must not be fed arbitrary input.
    pub fn leading_minor_dets(&self, tower: &Tower) -> Vec<PadicElem> {
        let m = self.m;
        assert!(m <= 16, "minor DP is exponential in the matrix size");
        // dp maps a column subset (bitmask over the first k rows) to the
        // determinant of rows 0..k with those columns
        let mut dp: Vec<Option<PadicElem>> = vec![None; 1 << m];
        dp[0] = Some(tower.one());
        let mut out = Vec::with_capacity(m);
        for k in 0..m {
            let mut next: Vec<Option<PadicElem>> = vec![None; 1 << m];
            for mask in 0..1usize << m {
                let Some(d) = &dp[mask] else { continue };
                if (mask as u32).count_ones() != k as u32 {
                    continue;
                }
                // expand along row k with a new column j: the sign is
                // (-1)^(k + position of j among the chosen columns)
                let mut below = 0;
                for j in 0..m {
                    let bit = 1usize << j;
                    if mask & bit != 0 {
                        below += 1;
                        continue;
                    }
                    let term = tower.mul(self.at(k, j), d);
                    let term = if (k + below) % 2 == 1 {
                        tower.neg(&term)
                    } else {
                        term
                    };
                    let slot = &mut next[mask | bit];
                    *slot = Some(match slot.take() {
                        Some(prev) => tower.add(&prev, &term),
                        None => term,
                    });
                }
            }
            dp = next;
            let lead_mask = (1usize << (k + 1)) - 1;
            out.push(dp[lead_mask].clone().expect("leading minor computed"));
        }
        out
    }

    /// det of an arbitrary square submatrix given by row and column index
    /// lists, by Laplace expansion (sizes here are at most 8).
    fn sub_det(&self, tower: &Tower, rows: &[usize], cols: &[usize]) -> PadicElem {
        let n = rows.len();
        if n == 0 {
            return tower.one();
        }
        if n == 1 {
            return self.at(rows[0], cols[0]).clone();
        }
        let mut acc = tower.zero();
        for (t, &c) in cols.iter().enumerate() {
            let e = self.at(rows[0], c);
            let rest_rows = &rows[1..];
            let rest_cols: Vec<usize> = cols
                .iter()
                .copied()
                .filter(|&cc| cc != c)
                .collect();
            let minor = self.sub_det(tower, rest_rows, &rest_cols);
            let term = tower.mul(e, &minor);
            acc = if t % 2 == 0 {
                tower.add(&acc, &term)
            } else {
                tower.sub(&acc, &term)
            };
        }
        acc
    }

    /// Adjugate via signed minors; never divides by the determinant.
    pub fn adjugate(&self, tower: &Tower) -> PadicMatrix {
        let m = self.m;
        let all: Vec<usize> = (0..m).collect();
        let mut out = PadicMatrix::zero(tower, m);
        for i in 0..m {
            for j in 0..m {
                let rows: Vec<usize> = all.iter().copied().filter(|&r| r != j).collect();
                let cols: Vec<usize> = all.iter().copied().filter(|&c| c != i).collect();
                let minor = self.sub_det(tower, &rows, &cols);
                let signed = if (i + j) % 2 == 0 {
                    minor
                } else {
                    tower.neg(&minor)
                };
                *out.at_mut(i, j) = signed;
            }
        }
        out
    }

    /// det(I - T M) by the Berkowitz iteration: division-free, which
    /// matters because the entries sit over finite precision where p is a
    /// zero divisor. Coefficient of T^k is returned at index k; c_0 = 1.
    pub fn char_poly(&self, tower: &Tower) -> PadicPoly {
        let m = self.m;
        if m == 0 {
            return vec![tower.one()];
        }
        let mut cp: Vec<PadicElem> = vec![tower.one(), tower.neg(self.at(0, 0))];
        for k in 1..m {
            // Toeplitz column: 1, -M_kk, -R C, -R A C, ..., -R A^{k-1} C
            let mut t: Vec<PadicElem> = Vec::with_capacity(k + 2);
            t.push(tower.one());
            t.push(tower.neg(self.at(k, k)));
            let mut w: Vec<PadicElem> = (0..k).map(|i| self.at(i, k).clone()).collect();
            for s in 0..k {
                let mut dot = tower.zero();
                for i in 0..k {
                    dot = tower.add(&dot, &tower.mul(self.at(k, i), &w[i]));
                }
                t.push(tower.neg(&dot));
                if s + 1 < k {
                    let mut next = vec![tower.zero(); k];
                    for i in 0..k {
                        for j in 0..k {
                            next[i] =
                                tower.add(&next[i], &tower.mul(self.at(i, j), &w[j]));
                        }
                    }
                    w = next;
                }
            }
            let mut new_cp = vec![tower.zero(); k + 2];
            for (i, ti) in t.iter().enumerate() {
                for (j, cj) in cp.iter().enumerate() {
                    if i + j < k + 2 {
                        new_cp[i + j] = tower.add(&new_cp[i + j], &tower.mul(ti, cj));
                    }
                }
            }
            cp = new_cp;
        }
        cp
    }
}

/// JSON dump of a matrix over the tower: pi-basis coordinate vectors as
/// decimal strings plus the scaled valuation of each entry, so dumps are
/// both machine-consumable and eyeball-able.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixDump {
    pub p: u64,
    pub a: usize,
    pub prec: u32,
    pub m: usize,
    /// rows of entries; each entry is (p-1)*a coordinate strings
    pub rows: Vec<Vec<EntryDump>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EntryDump {
    pub coords: Vec<String>,
    pub floor_scaled: i64,
    /// "k" for certified scaled valuation k, ">=k" at the floor
    pub val: String,
}

impl MatrixDump {
    pub fn of(tower: &Tower, mat: &PadicMatrix) -> MatrixDump {
        let rows = (0..mat.m)
            .map(|i| {
                (0..mat.m)
                    .map(|j| {
                        let e = mat.at(i, j);
                        EntryDump {
                            coords: e.c.iter().map(|c| c.to_string()).collect(),
                            floor_scaled: e.floor_s,
                            val: match tower.val_scaled(e) {
                                Val::Certified(v) => v.to_string(),
                                Val::AtLeast(f) => format!(">={f}"),
                            },
                        }
                    })
                    .collect()
            })
            .collect();
        MatrixDump {
            p: tower.p,
            a: tower.a,
            prec: tower.n_store,
            m: mat.m,
            rows,
        }
    }

    /// Rebuild the matrix over a freshly constructed tower.
    pub fn load(&self) -> Result<(Tower, PadicMatrix)> {
        let tower = Tower::new(self.p, self.a, self.prec)?;
        let size = tower.size();
        let mut entries = Vec::with_capacity(self.m * self.m);
        for row in &self.rows {
            if row.len() != self.m {
                return Err(Error::BadInput("ragged matrix dump".into()));
            }
            for e in row {
                if e.coords.len() != size {
                    return Err(Error::BadInput(format!(
                        "entry has {} coordinates, tower needs {size}",
                        e.coords.len()
                    )));
                }
                let c: Vec<u64> = e
                    .coords
                    .iter()
                    .map(|s| {
                        s.parse::<u64>()
                            .map(|v| v % tower.modulus)
                            .map_err(|_| Error::BadInput(format!("bad coordinate {s:?}")))
                    })
                    .collect::<Result<_>>()?;
                entries.push(PadicElem {
                    c,
                    floor_s: e.floor_scaled.min(tower.full_floor()),
                });
            }
        }
        Ok((tower, PadicMatrix { m: self.m, entries }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_tower() -> Tower {
        Tower::new(5, 1, 6).unwrap()
    }

    #[test]
    fn char_poly_of_zero_and_identity() {
        let t = small_tower();
        let z = PadicMatrix::zero(&t, 3);
        let cp = z.char_poly(&t);
        assert!(t.congruent(&cp[0], &t.one(), t.full_floor()));
        for c in &cp[1..] {
            assert!(t.is_zero_at_floor(c));
        }
        let id = PadicMatrix::identity(&t, 2);
        let cp = id.char_poly(&t);
        // 1 - 2T + T^2
        assert!(t.congruent(&cp[1], &t.from_i64(-2), t.full_floor()));
        assert!(t.congruent(&cp[2], &t.one(), t.full_floor()));
    }

    #[test]
    #[allow(clippy::identity_op)]
    fn char_poly_matches_cofactor_expansion() {
        // det(I - TM) coefficients are signed sums of principal minors;
        // check Berkowitz against that independent route on an integer
        // matrix.
        let t = small_tower();
        let ints = [[3i64, 1, 4], [1, 5, 9], [2, 6, 5]];
        let mut m = PadicMatrix::zero(&t, 3);
        for i in 0..3 {
            for j in 0..3 {
                *m.at_mut(i, j) = t.from_i64(ints[i][j]);
            }
        }
        let cp = m.char_poly(&t);
        // e_1 = trace = 13, e_2 = sum of 2x2 principal minors,
        // e_3 = det; c_k = (-1)^k e_k
        let det2 = |a: i64, b: i64, c: i64, d: i64| a * d - b * c;
        let e1 = 3 + 5 + 5;
        let e2 = det2(3, 1, 1, 5) + det2(3, 4, 2, 5) + det2(5, 9, 6, 5);
        let e3 = 3 * det2(5, 9, 6, 5) - 1 * det2(1, 9, 2, 5) + 4 * det2(1, 5, 2, 6);
        for (k, want) in [(1usize, -e1), (2, e2), (3, -e3)] {
            assert!(
                t.congruent(&cp[k], &t.from_i64(want), t.full_floor()),
                "coefficient {k}"
            );
        }
    }

    #[test]
    fn char_poly_of_triangular_is_diagonal_product() {
        let t = small_tower();
        let mut m = PadicMatrix::zero(&t, 3);
        *m.at_mut(0, 0) = t.from_i64(2);
        *m.at_mut(1, 1) = t.from_i64(3);
        *m.at_mut(2, 2) = t.from_i64(7);
        *m.at_mut(1, 0) = t.from_i64(11);
        *m.at_mut(2, 0) = t.from_i64(13);
        *m.at_mut(2, 1) = t.from_i64(17);
        let cp = m.char_poly(&t);
        // prod (1 - d_i T) = 1 - 12T + 41T^2 - 42T^3
        for (k, want) in [(1i64, -12i64), (2, 41), (3, -42)] {
            assert!(t.congruent(&cp[k as usize], &t.from_i64(want), t.full_floor()));
        }
    }

    #[test]
    #[allow(clippy::identity_op)]
    fn leading_minors_match_direct_expansion() {
        let t = small_tower();
        let ints = [[2i64, 7, 1], [8, 2, 8], [1, 8, 3]];
        let mut m = PadicMatrix::zero(&t, 3);
        for i in 0..3 {
            for j in 0..3 {
                *m.at_mut(i, j) = t.from_i64(ints[i][j]);
            }
        }
        let dets = m.leading_minor_dets(&t);
        assert!(t.congruent(&dets[0], &t.from_i64(2), t.full_floor()));
        assert!(t.congruent(&dets[1], &t.from_i64(2 * 2 - 7 * 8), t.full_floor()));
        let d3 = 2 * (2 * 3 - 8 * 8) - 7 * (8 * 3 - 8 * 1) + 1 * (8 * 8 - 2 * 1);
        assert!(t.congruent(&dets[2], &t.from_i64(d3), t.full_floor()));
    }

    #[test]
    fn adjugate_times_matrix_is_det() {
        let t = small_tower();
        let ints = [[2i64, 3], [4, 1]];
        let mut m = PadicMatrix::zero(&t, 2);
        for i in 0..2 {
            for j in 0..2 {
                *m.at_mut(i, j) = t.from_i64(ints[i][j]);
            }
        }
        let adj = m.adjugate(&t);
        let prod = m.mul(&t, &adj);
        let det = t.from_i64(2 - 12);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { det.clone() } else { t.zero() };
                assert!(t.congruent(prod.at(i, j), &want, t.full_floor()));
            }
        }
    }

    #[test]
    fn dump_round_trip() {
        let t = small_tower();
        let mut m = PadicMatrix::zero(&t, 2);
        *m.at_mut(0, 0) = t.gamma();
        *m.at_mut(1, 0) = t.pi();
        *m.at_mut(1, 1) = t.from_i64(-1);
        let dump = MatrixDump::of(&t, &m);
        let json = serde_json::to_string(&dump).unwrap();
        let parsed: MatrixDump = serde_json::from_str(&json).unwrap();
        let (t2, m2) = parsed.load().unwrap();
        assert_eq!(t2.p, 5);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m.at(i, j).c, m2.at(i, j).c);
            }
        }
    }
}
