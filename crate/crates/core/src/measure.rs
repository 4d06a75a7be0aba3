//! Grid closed sets and grid sup-measures.
//!
//! A sup-measure on the grid `{0,…,n}/n` is fully described by its values at
//! the grid points (its sup-derivative). Evaluation over an open interval is
//! the max of the values at grid points strictly inside the interval, with
//! the empty max equal to the bottom element `⊥ = −∞`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A real number or the bottom element `⊥` (standing for `−∞`).
///
/// `⊥` only ever arises from the empty-hit convention; no arithmetic in this
/// crate produces it from finite inputs.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub enum ExtendedReal {
    #[default]
    Bottom,
    Finite(f64),
}

impl ExtendedReal {
    pub fn is_bottom(self) -> bool {
        matches!(self, ExtendedReal::Bottom)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Bottom => None,
            ExtendedReal::Finite(v) => Some(v),
        }
    }

    /// `−∞` for `⊥`; used when feeding samples to order statistics.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn max(self, other: ExtendedReal) -> ExtendedReal {
        match (self, other) {
            (ExtendedReal::Bottom, x) | (x, ExtendedReal::Bottom) => x,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => {
                ExtendedReal::Finite(if b > a { b } else { a })
            }
        }
    }

    /// Multiplies a finite value by `c`; `⊥` stays `⊥`. Only meaningful for `c > 0`.
    pub fn scale(self, c: f64) -> ExtendedReal {
        match self {
            ExtendedReal::Bottom => ExtendedReal::Bottom,
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v * c),
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        ExtendedReal::Finite(v)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Bottom => write!(f, "⊥"),
            ExtendedReal::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.finite().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map_or(ExtendedReal::Bottom, ExtendedReal::Finite))
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// An exact rational in `[0,1]`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: u64,
    den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidInterval("zero denominator".into()));
        }
        if num > den {
            return Err(Error::InvalidInterval(format!("{num}/{den} exceeds 1")));
        }
        let g = gcd(num, den).max(1);
        Ok(Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numer(self) -> u64 {
        self.num
    }

    pub fn denom(self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_one(self) -> bool {
        self.num == self.den
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `p/q`, a plain integer, or a terminating decimal such as `0.31`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInterval(format!("cannot parse `{s}` as a rational"));
        if let Some((p, q)) = s.split_once('/') {
            let p = p.trim().parse::<u64>().map_err(|_| bad())?;
            let q = q.trim().parse::<u64>().map_err(|_| bad())?;
            return Rational::new(p, q);
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let int = if int.is_empty() {
                0
            } else {
                int.parse::<u64>().map_err(|_| bad())?
            };
            let den = 10u64.pow(frac.len() as u32);
            let frac = frac.parse::<u64>().map_err(|_| bad())?;
            let num = int
                .checked_mul(den)
                .and_then(|v| v.checked_add(frac))
                .ok_or_else(bad)?;
            return Rational::new(num, den);
        }
        Rational::new(s.parse::<u64>().map_err(|_| bad())?, 1)
    }
}

/// The open interval `(a, b)` with `0 ≤ a < b ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    a: Rational,
    b: Rational,
}

impl Interval {
    pub fn new(a: Rational, b: Rational) -> Result<Self> {
        if a >= b {
            return Err(Error::InvalidInterval(format!("need a < b, got ({a},{b})")));
        }
        Ok(Interval { a, b })
    }

    /// Convenience constructor from numerator/denominator pairs.
    pub fn from_fractions(a_num: u64, a_den: u64, b_num: u64, b_den: u64) -> Result<Self> {
        Interval::new(Rational::new(a_num, a_den)?, Rational::new(b_num, b_den)?)
    }

    pub fn left(&self) -> Rational {
        self.a
    }

    pub fn right(&self) -> Rational {
        self.b
    }

    /// Exact test of `a < k/n < b`.
    pub fn contains_grid_point(&self, k: usize, n: usize) -> bool {
        let (k, n) = (k as u128, n as u128);
        self.a.num as u128 * n < k * self.a.den as u128
            && k * (self.b.den as u128) < self.b.num as u128 * n
    }

    /// Indices `k` with `a < k/n < b`, or `None` when no grid point is covered.
    pub fn grid_range(&self, n: usize) -> Option<RangeInclusive<usize>> {
        let nn = n as u128;
        let lo = self.a.num as u128 * nn / self.a.den as u128 + 1;
        let top = self.b.num as u128 * nn;
        if top == 0 {
            return None;
        }
        let hi = ((top - 1) / self.b.den as u128).min(nn);
        (lo <= hi).then_some(lo as usize..=hi as usize)
    }

    /// Number of grid points strictly inside the interval.
    pub fn grid_count(&self, n: usize) -> usize {
        self.grid_range(n).map_or(0, |r| r.end() - r.start() + 1)
    }

    /// Label used as a key in per-replicate records, e.g. `(3/10,3/5)`.
    pub fn label(&self) -> String {
        format!("({},{})", self.a, self.b)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.a, self.b)
    }
}

impl FromStr for Interval {
    type Err = Error;

    /// Parses `a:b`, e.g. `3/10:3/5` or `0.2:0.7`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split_once([':', ','])
            .ok_or_else(|| Error::InvalidInterval(format!("expected `a:b`, got `{s}`")))?;
        Interval::new(a.parse()?, b.parse()?)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// The state space `E ⊂ [0,1]` on which an experiment's sup-measures live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `[0,1]`
    Closed,
    /// `(0,1]`
    LeftOpen,
    /// `(0,1)`
    Open,
}

impl Domain {
    /// Whether the closure `[a,b]` of the interval lies inside the domain.
    pub fn admits(self, g: &Interval) -> bool {
        match self {
            Domain::Closed => true,
            Domain::LeftOpen => !g.left().is_zero(),
            Domain::Open => !g.left().is_zero() && !g.right().is_one(),
        }
    }

    pub fn contains_grid_point(self, k: usize, n: usize) -> bool {
        match self {
            Domain::Closed => k <= n,
            Domain::LeftOpen => k >= 1 && k <= n,
            Domain::Open => k >= 1 && k < n,
        }
    }

    pub fn check(self, g: &Interval) -> Result<()> {
        if self.admits(g) {
            Ok(())
        } else {
            Err(Error::InvalidInterval(format!(
                "closure of {} is not contained in the domain {self}",
                g.label()
            )))
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Closed => "[0,1]",
            Domain::LeftOpen => "(0,1]",
            Domain::Open => "(0,1)",
        })
    }
}

/// A finite closed subset of the grid `{0,…,n}/n`, stored as sorted indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGridSet")]
pub struct GridClosedSet {
    n: usize,
    points: Vec<usize>,
}

#[derive(Deserialize)]
struct RawGridSet {
    n: usize,
    points: Vec<usize>,
}

impl TryFrom<RawGridSet> for GridClosedSet {
    type Error = Error;
    fn try_from(raw: RawGridSet) -> Result<Self> {
        GridClosedSet::new(raw.n, raw.points)
    }
}

impl GridClosedSet {
    /// Validates that `points` is strictly increasing and within `0..=n`.
    pub fn new(n: usize, points: Vec<usize>) -> Result<Self> {
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSet("points must be strictly increasing".into()));
        }
        if let Some(&last) = points.last() {
            if last > n {
                return Err(Error::InvalidSet(format!("point {last} outside 0..={n}")));
            }
        }
        Ok(GridClosedSet { n, points })
    }

    /// Sorts and deduplicates; out-of-range points are an error.
    pub fn from_unsorted(n: usize, mut points: Vec<usize>) -> Result<Self> {
        points.sort_unstable();
        points.dedup();
        GridClosedSet::new(n, points)
    }

    pub(crate) fn from_sorted_unchecked(n: usize, points: Vec<usize>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(points.last().is_none_or(|&p| p <= n));
        GridClosedSet { n, points }
    }

    pub fn empty(n: usize) -> Self {
        GridClosedSet { n, points: vec![] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.points.binary_search(&k).is_ok()
    }

    /// Whether some point `k/n` lies strictly inside `g`.
    pub fn hits(&self, g: &Interval) -> bool {
        let Some(range) = g.grid_range(self.n) else {
            return false;
        };
        let i = self.points.partition_point(|&p| p < *range.start());
        self.points.get(i).is_some_and(|&p| p <= *range.end())
    }

    /// Restriction to the grid points of a domain.
    pub fn restrict(&self, domain: Domain) -> GridClosedSet {
        let points = self
            .points
            .iter()
            .copied()
            .filter(|&k| domain.contains_grid_point(k, self.n))
            .collect();
        GridClosedSet { n: self.n, points }
    }

    pub fn intersect_with(&self, other: &GridClosedSet) -> Result<GridClosedSet> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.points.len() && j < other.points.len() {
            match self.points[i].cmp(&other.points[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    out.push(self.points[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(GridClosedSet {
            n: self.n,
            points: out,
        })
    }
}

/// Intersection of a nonempty family of grid sets sharing the same `n`.
pub fn intersect<'a, I>(sets: I) -> Result<GridClosedSet>
where
    I: IntoIterator<Item = &'a GridClosedSet>,
{
    let mut it = sets.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::InvalidSet("intersection of an empty family".into()))?;
    let mut acc = first.clone();
    for s in it {
        acc = acc.intersect_with(s)?;
    }
    Ok(acc)
}

/// A sup-measure on `{0,…,n}/n`, stored as its values at the `n+1` grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSupMeasure")]
pub struct SupMeasureGrid {
    n: usize,
    values: Vec<ExtendedReal>,
}

#[derive(Deserialize)]
struct RawSupMeasure {
    n: usize,
    values: Vec<ExtendedReal>,
}

impl TryFrom<RawSupMeasure> for SupMeasureGrid {
    type Error = Error;
    fn try_from(raw: RawSupMeasure) -> Result<Self> {
        SupMeasureGrid::new(raw.n, raw.values)
    }
}

impl SupMeasureGrid {
    pub fn new(n: usize, values: Vec<ExtendedReal>) -> Result<Self> {
        if values.len() != n + 1 {
            return Err(Error::InvalidSet(format!(
                "expected {} grid values, got {}",
                n + 1,
                values.len()
            )));
        }
        Ok(SupMeasureGrid { n, values })
    }

    /// The sup-measure that is `⊥` everywhere.
    pub fn bottom(n: usize) -> Self {
        SupMeasureGrid {
            n,
            values: vec![ExtendedReal::Bottom; n + 1],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[ExtendedReal] {
        &self.values
    }

    pub fn value_at(&self, k: usize) -> ExtendedReal {
        self.values[k]
    }

    pub fn eval(&self, g: &Interval) -> ExtendedReal {
        match g.grid_range(self.n) {
            None => ExtendedReal::Bottom,
            Some(range) => self.values[range]
                .iter()
                .fold(ExtendedReal::Bottom, |acc, &v| acc.max(v)),
        }
    }

    /// Pointwise max.
    pub fn union_max(&self, other: &SupMeasureGrid) -> Result<SupMeasureGrid> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a.max(b))
            .collect();
        Ok(SupMeasureGrid { n: self.n, values })
    }

    /// Multiplies every finite value by `c > 0`.
    pub fn scaled(&self, c: f64) -> SupMeasureGrid {
        SupMeasureGrid {
            n: self.n,
            values: self.values.iter().map(|v| v.scale(c)).collect(),
        }
    }

    /// Sets the value to `⊥` at grid points outside `domain`.
    pub fn restrict(&self, domain: Domain) -> SupMeasureGrid {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if domain.contains_grid_point(k, self.n) {
                    v
                } else {
                    ExtendedReal::Bottom
                }
            })
            .collect();
        SupMeasureGrid { n: self.n, values }
    }

    /// The `(k/n, value)` pairs at which the value is finite, in grid order.
    pub fn hypograph(&self) -> Vec<(f64, f64)> {
        let n = self.n.max(1) as f64;
        self.values
            .iter()
            .enumerate()
            .filter_map(|(k, v)| v.finite().map(|v| (k as f64 / n, v)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExtendedReal::{Bottom, Finite};

    fn iv(s: &str) -> Interval {
        s.parse().unwrap()
    }

    fn grid(values: &[Option<f64>]) -> SupMeasureGrid {
        let vals = values
            .iter()
            .map(|v| v.map_or(Bottom, Finite))
            .collect::<Vec<_>>();
        SupMeasureGrid::new(values.len() - 1, vals).unwrap()
    }

    #[test]
    fn bottom_is_below_everything() {
        assert!(Bottom < Finite(-1e300));
        assert_eq!(Bottom.max(Finite(-3.0)), Finite(-3.0));
        assert_eq!(Finite(2.0).max(Bottom), Finite(2.0));
        assert_eq!(Bottom.max(Bottom), Bottom);
    }

    #[test]
    fn eval_examples() {
        let m = grid(&[None, Some(1.0), Some(3.0), Some(2.0), None]);
        assert_eq!(m.eval(&iv("0.2:0.8")), Finite(3.0));

        assert_eq!(SupMeasureGrid::bottom(4).eval(&iv("0:1")), Bottom);

        let vals = (0..=10).map(|k| Finite(k as f64 / 10.0)).collect();
        let m = SupMeasureGrid::new(10, vals).unwrap();
        assert_eq!(m.eval(&iv("0.31:0.69")), Finite(0.6));
    }

    #[test]
    fn eval_without_interior_points_is_bottom() {
        let m = grid(&[Some(1.0), Some(1.0), Some(1.0)]);
        // (0, 1/2) on n=2 has no interior grid point
        assert_eq!(m.eval(&iv("0:1/2")), Bottom);
    }

    #[test]
    fn union_max_examples() {
        let a = grid(&[None, Some(2.0)]);
        let b = grid(&[Some(1.0), None]);
        assert_eq!(a.union_max(&b).unwrap(), grid(&[Some(1.0), Some(2.0)]));
        assert_eq!(a.union_max(&a).unwrap(), a);
        let a = grid(&[Some(1.0), Some(0.0), None]);
        let b = grid(&[Some(0.0), Some(1.0), Some(5.0)]);
        assert_eq!(a.union_max(&b).unwrap(), grid(&[Some(1.0), Some(1.0), Some(5.0)]));
        assert!(matches!(
            a.union_max(&SupMeasureGrid::bottom(3)),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn intersect_examples() {
        let a = GridClosedSet::new(4, vec![0, 2, 4]).unwrap();
        let b = GridClosedSet::new(4, vec![0, 1, 2]).unwrap();
        assert_eq!(intersect([&a, &b]).unwrap().points(), &[0, 2]);
        assert_eq!(intersect([&a, &a]).unwrap(), a);
        let c = GridClosedSet::new(4, vec![1, 3]).unwrap();
        let d = GridClosedSet::new(4, vec![2, 4]).unwrap();
        assert!(intersect([&c, &d]).unwrap().is_empty());
        let e = GridClosedSet::new(5, vec![1]).unwrap();
        assert!(intersect([&a, &e]).is_err());
        assert!(intersect(std::iter::empty()).is_err());
    }

    #[test]
    fn hits_examples() {
        let a = GridClosedSet::new(4, vec![0, 2, 4]).unwrap();
        assert!(a.hits(&iv("0.4:0.6")));
        assert!(!GridClosedSet::empty(4).hits(&iv("0:1")));
        let s = GridClosedSet::new(10, vec![1]).unwrap();
        assert!(!s.hits(&iv("0.1:0.2")));
    }

    #[test]
    fn hypograph_examples() {
        assert_eq!(grid(&[None, Some(1.0), None]).hypograph(), vec![(0.5, 1.0)]);
        assert!(SupMeasureGrid::bottom(3).hypograph().is_empty());
        assert_eq!(
            grid(&[Some(0.0), Some(0.0), Some(0.0)]).hypograph(),
            vec![(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)]
        );
    }

    #[test]
    fn grid_range_is_exact_at_rational_boundaries() {
        // 3/10 * 10 = 3 exactly; k = 3 must be excluded.
        let g = iv("3/10:7/10");
        assert_eq!(g.grid_range(10), Some(4..=6));
        assert_eq!(iv("0.2:0.7").grid_count(1000), 499);
        assert_eq!(iv("0:1").grid_range(4), Some(1..=3));
        for n in 1..60 {
            for k in 0..=n {
                assert_eq!(
                    g.contains_grid_point(k, n),
                    g.grid_range(n).is_some_and(|r| r.contains(&k))
                );
            }
        }
    }

    #[test]
    fn parse_rationals_and_intervals() {
        assert_eq!("0.31".parse::<Rational>().unwrap(), Rational::new(31, 100).unwrap());
        assert_eq!("2/4".parse::<Rational>().unwrap(), Rational::new(1, 2).unwrap());
        assert_eq!("1".parse::<Rational>().unwrap(), Rational::new(1, 1).unwrap());
        assert!("3/2".parse::<Rational>().is_err());
        assert!("0.5:0.5".parse::<Interval>().is_err());
        assert!("0.7:0.2".parse::<Interval>().is_err());
        assert_eq!(iv("3/10:6/10").label(), "(3/10,3/5)");
    }

    #[test]
    fn domain_admission() {
        let g = iv("0:1/2");
        assert!(Domain::Closed.admits(&g));
        assert!(!Domain::LeftOpen.admits(&g));
        let h = iv("1/2:1");
        assert!(Domain::LeftOpen.admits(&h));
        assert!(!Domain::Open.admits(&h));
    }

    #[test]
    fn rejects_malformed_sets() {
        assert!(GridClosedSet::new(4, vec![2, 1]).is_err());
        assert!(GridClosedSet::new(4, vec![1, 1]).is_err());
        assert!(GridClosedSet::new(4, vec![5]).is_err());
        assert_eq!(
            GridClosedSet::from_unsorted(4, vec![3, 1, 3]).unwrap().points(),
            &[1, 3]
        );
    }

    #[test]
    fn json_shapes() {
        let s = GridClosedSet::new(4, vec![0, 2]).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"n":4,"points":[0,2]}"#);
        let m = grid(&[None, Some(1.5)]);
        assert_eq!(serde_json::to_string(&m).unwrap(), r#"{"n":1,"values":[null,1.5]}"#);
        let back: SupMeasureGrid = serde_json::from_str(r#"{"n":1,"values":[null,1.5]}"#).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<GridClosedSet>(r#"{"n":1,"points":[3]}"#).is_err());
        assert!(serde_json::from_str::<SupMeasureGrid>(r#"{"n":2,"values":[1]}"#).is_err());
    }
}
