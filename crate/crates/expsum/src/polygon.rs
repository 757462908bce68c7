//! Exact lower-convex polygon geometry.
//!
//! Newton, Hodge and generic-Newton polygons are all values of [`Polygon`]:
//! a lower convex chain starting at the origin, with integer abscissae and
//! exact rational ordinates. Ordinates are never floats — slopes like
//! 1/(d(p-1)) have to compare exactly.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{parse_rat, rat, rat_str};

/// Ordinate of a support point. Zero coefficients have infinite valuation,
/// which is a distinct tagged value rather than a sentinel rational.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ordinate {
    Finite(BigRational),
    Infinite,
}

impl Ordinate {
    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            Ordinate::Finite(r) => Some(r),
            Ordinate::Infinite => None,
        }
    }
}

/// A lower convex chain: vertices strictly increasing in x, first vertex
/// (0, 0), slopes non-decreasing, no three stored vertices collinear.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polygon {
    vertices: Vec<(u64, BigRational)>,
}

/// Result of a hull computation. `truncated` is set when trailing points
/// all had infinite ordinate and the polygon stops at the last finite
/// support point.
#[derive(Debug, Clone)]
pub struct Hull {
    pub polygon: Polygon,
    pub truncated: bool,
}

/// Outcome of a `lies_above` comparison, with the first violating abscissa
/// when the bound fails.
#[derive(Debug, Clone)]
pub struct AboveReport {
    pub holds: bool,
    /// (x, upper ordinate, lower ordinate) at the first violation.
    pub violation: Option<(u64, BigRational, BigRational)>,
}

fn middle_fails_lower_hull(
    a: &(u64, BigRational),
    b: &(u64, BigRational),
    c: &(u64, BigRational),
) -> bool {
    // cross(a,b,c) <= 0: the turn a->b->c is clockwise or straight, so b
    // lies on or above the chord a-c and does not support the lower hull.
    let abx = rat((b.0 - a.0) as i64, 1);
    let acx = rat((c.0 - a.0) as i64, 1);
    let aby = &b.1 - &a.1;
    let acy = &c.1 - &a.1;
    (abx * acy - acx * aby) <= BigRational::zero()
}

impl Polygon {
    /// Lower convex hull of support points. Points must be nonempty with
    /// distinct abscissae including 0, and the ordinate at 0 must be 0.
    /// Infinite ordinates never support the hull; if the trailing points
    /// are all infinite the hull is truncated there and reported as such.
    pub fn lower_hull(points: &[(u64, Ordinate)]) -> Result<Hull> {
        if points.is_empty() {
            return Err(Error::BadInput("lower_hull: empty input".into()));
        }
        let mut pts = points.to_vec();
        pts.sort_by_key(|(x, _)| *x);
        for w in pts.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::BadInput(format!(
                    "lower_hull: duplicate abscissa {}",
                    w[0].0
                )));
            }
        }
        if pts[0].0 != 0 {
            return Err(Error::BadInput("lower_hull: abscissa 0 missing".into()));
        }
        match &pts[0].1 {
            Ordinate::Finite(y) if y.is_zero() => {}
            _ => {
                return Err(Error::BadInput(
                    "lower_hull: ordinate at 0 must be 0".into(),
                ))
            }
        }
        let last_finite = pts
            .iter()
            .rposition(|(_, o)| matches!(o, Ordinate::Finite(_)))
            .expect("origin is finite");
        let truncated = last_finite + 1 != pts.len();
        let finite: Vec<(u64, BigRational)> = pts[..=last_finite]
            .iter()
            .filter_map(|(x, o)| o.finite().map(|y| (*x, y.clone())))
            .collect();

        let mut hull: Vec<(u64, BigRational)> = Vec::with_capacity(finite.len());
        for pt in finite {
            while hull.len() >= 2
                && middle_fails_lower_hull(&hull[hull.len() - 2], &hull[hull.len() - 1], &pt)
            {
                hull.pop();
            }
            hull.push(pt);
        }
        let polygon = Polygon { vertices: hull };
        polygon.check_convex()?;
        Ok(Hull { polygon, truncated })
    }

    /// The combinatorial lower bound with support points (n, n(n+1)/2d),
    /// 0 <= n <= d-1. The formula is strictly convex, so every point is a
    /// vertex.
    pub fn hodge(d: u64) -> Result<Polygon> {
        if d < 3 {
            return Err(Error::BadInput(format!("hodge polygon needs d >= 3, got {d}")));
        }
        let vertices = (0..d)
            .map(|n| (n, rat((n * (n + 1)) as i64, (2 * d) as i64)))
            .collect();
        let poly = Polygon { vertices };
        poly.check_convex()?;
        Ok(poly)
    }

    pub fn from_vertices(vertices: Vec<(u64, BigRational)>) -> Result<Polygon> {
        let hull = Polygon::lower_hull(
            &vertices
                .into_iter()
                .map(|(x, y)| (x, Ordinate::Finite(y)))
                .collect::<Vec<_>>(),
        )?;
        Ok(hull.polygon)
    }

    pub fn vertices(&self) -> &[(u64, BigRational)] {
        &self.vertices
    }

    /// Rightmost abscissa.
    pub fn span(&self) -> u64 {
        self.vertices.last().map(|(x, _)| *x).unwrap_or(0)
    }

    pub fn endpoint(&self) -> (u64, BigRational) {
        self.vertices.last().cloned().expect("nonempty polygon")
    }

    /// One slope per unit x-interval, non-decreasing.
    pub fn slopes(&self) -> Vec<BigRational> {
        let mut out = Vec::with_capacity(self.span() as usize);
        for w in self.vertices.windows(2) {
            let run = w[1].0 - w[0].0;
            let slope = (&w[1].1 - &w[0].1) / rat(run as i64, 1);
            for _ in 0..run {
                out.push(slope.clone());
            }
        }
        out
    }

    /// Exact ordinate of the chain at integer abscissa x (linear
    /// interpolation between vertices). None outside the span.
    pub fn eval_at(&self, x: u64) -> Option<BigRational> {
        if x > self.span() {
            return None;
        }
        for w in self.vertices.windows(2) {
            if x >= w[0].0 && x <= w[1].0 {
                let t = rat((x - w[0].0) as i64, (w[1].0 - w[0].0) as i64);
                return Some(&w[0].1 + t * (&w[1].1 - &w[0].1));
            }
        }
        // single-vertex polygon, x == 0
        self.vertices.first().map(|(_, y)| y.clone())
    }

    /// Does `self` lie on or above `other` at every integer abscissa?
    /// Requires matching spans.
    pub fn lies_above(&self, other: &Polygon) -> Result<AboveReport> {
        if self.span() != other.span() {
            return Err(Error::BadInput(format!(
                "lies_above: span mismatch {} vs {}",
                self.span(),
                other.span()
            )));
        }
        for x in 0..=self.span() {
            let hi = self.eval_at(x).expect("in span");
            let lo = other.eval_at(x).expect("in span");
            if hi < lo {
                return Ok(AboveReport {
                    holds: false,
                    violation: Some((x, hi, lo)),
                });
            }
        }
        Ok(AboveReport {
            holds: true,
            violation: None,
        })
    }

    /// Scale every vertex (x, y) to (kx, ky). Slopes are preserved with
    /// multiplicities multiplied by k. k = p-1 gives the Artin-Schreier
    /// curve scale.
    pub fn dilate(&self, k: u64) -> Polygon {
        assert!(k >= 1, "dilation factor must be positive");
        Polygon {
            vertices: self
                .vertices
                .iter()
                .map(|(x, y)| (x * k, y * rat(k as i64, 1)))
                .collect(),
        }
    }

    fn check_convex(&self) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::BadInput("empty polygon".into()));
        }
        if self.vertices[0].0 != 0 || !self.vertices[0].1.is_zero() {
            return Err(Error::BadInput("polygon must start at (0, 0)".into()));
        }
        let mut prev: Option<BigRational> = None;
        for w in self.vertices.windows(2) {
            let run = w[1].0 - w[0].0;
            if run == 0 {
                return Err(Error::BadInput("non-increasing abscissae".into()));
            }
            let slope = (&w[1].1 - &w[0].1) / rat(run as i64, 1);
            if let Some(p) = &prev {
                if &slope <= p {
                    return Err(Error::Finding(format!(
                        "convexity violated: slope {} after {}",
                        rat_str(&slope),
                        rat_str(p)
                    )));
                }
            }
            prev = Some(slope);
        }
        Ok(())
    }
}

/// Wire form: exact `num/den` strings, never decimals.
#[derive(Serialize, Deserialize)]
struct PolygonJson {
    vertices: Vec<(u64, String)>,
    slopes: Vec<String>,
}

impl Serialize for Polygon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolygonJson {
            vertices: self
                .vertices
                .iter()
                .map(|(x, y)| (*x, rat_str(y)))
                .collect(),
            slopes: self.slopes().iter().map(rat_str).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolygonJson::deserialize(d)?;
        let mut vertices = Vec::with_capacity(raw.vertices.len());
        for (x, s) in raw.vertices {
            vertices.push((x, parse_rat(&s).map_err(serde::de::Error::custom)?));
        }
        Polygon::from_vertices(vertices).map_err(serde::de::Error::custom)
    }
}
