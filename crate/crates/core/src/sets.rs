//! Samplers for the discrete random closed sets `R_n ⊂ {0,…,n}/n`.
//!
//! Families: uniform singletons (independently scattered), Karlin sets
//! (a Sibuya number of uniform points), and three renewal-based sets built
//! from i.i.d. inter-arrivals with `P(Y ≥ k) = k^{−β}`: started at the
//! origin, randomly shifted, and pinned at `n`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::distr::OpenClosed01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Domain, GridClosedSet};

/// Default cap on the grid size for the quadratic renewal-mass recursion.
pub const RENEWAL_TABLE_CAP: usize = 30_000;

/// Rejection sampling is refused when the expected number of trials exceeds this.
pub const REJECTION_EXPECTED_TRIALS_MAX: f64 = 1e5;

/// Samples past this value are reported as this value.
pub const SIBUYA_MAX: u64 = 1 << 62;

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta < 1.0 {
        Ok(())
    } else {
        Err(Error::param("beta", format!("must lie in (0,1), got {beta}")))
    }
}

/// Integer inter-arrival law with `P(Y ≥ k) = k^{−β}`, `k ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterArrivalLaw {
    beta: f64,
}

impl InterArrivalLaw {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(InterArrivalLaw { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `P(Y > k) = (k+1)^{−β}`.
    pub fn tail(&self, k: u64) -> f64 {
        ((k + 1) as f64).powf(-self.beta)
    }

    /// `P(Y = k) = k^{−β} − (k+1)^{−β}`, evaluated without cancellation.
    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let kf = k as f64;
        kf.powf(-self.beta) * -(-self.beta * (1.0 / kf).ln_1p()).exp_m1()
    }

    /// `Y = ⌊U^{−1/β}⌋` with `U` uniform on `(0,1]`; saturates at `u64::MAX`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.sample(OpenClosed01);
        let y = u.powf(-1.0 / self.beta).floor();
        if y >= u64::MAX as f64 {
            u64::MAX
        } else {
            y as u64
        }
    }
}

/// Exact renewal mass function `u(k) = P(k ∈ τ)` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalMassTable {
    beta: f64,
    u: Vec<f64>,
    pmf: Vec<f64>,
}

/// Renewal mass table with the default size cap.
pub fn renewal_mass(n: usize, beta: f64) -> Result<RenewalMassTable> {
    RenewalMassTable::with_cap(n, beta, RENEWAL_TABLE_CAP)
}

impl RenewalMassTable {
    /// Solves `u[0] = 1`, `u[m] = Σ_{y=1}^{m} p_Y(y) u[m−y]`; `O(n²)`.
    pub fn with_cap(n: usize, beta: f64, cap: usize) -> Result<Self> {
        let law = InterArrivalLaw::new(beta)?;
        if n > cap {
            return Err(Error::param(
                "n",
                format!("renewal table of size {n} exceeds the cap {cap}"),
            ));
        }
        let pmf: Vec<f64> = (0..=n as u64).map(|y| law.pmf(y)).collect();
        let mut u = vec![0.0; n + 1];
        u[0] = 1.0;
        for m in 1..=n {
            // u[m] = Σ_{y=1}^{m} pmf[y] u[m-y]
            u[m] = pmf[1..=m]
                .iter()
                .zip(u[..m].iter().rev())
                .map(|(p, v)| p * v)
                .sum();
        }
        Ok(RenewalMassTable { beta, u, pmf })
    }

    pub fn n(&self) -> usize {
        self.u.len() - 1
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn u(&self, k: usize) -> f64 {
        self.u[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn pmf(&self, y: usize) -> f64 {
        self.pmf[y]
    }

    /// `P(k ∈ τ | n ∈ τ) = u(k) u(n−k) / u(n)`.
    pub fn pinned_marginal(&self, k: usize) -> f64 {
        let n = self.n();
        self.u[k] * self.u[n - k] / self.u[n]
    }

    /// Largest `|u[m] − Σ p_Y(y) u[m−y]|` over the table.
    pub fn max_renewal_residual(&self) -> f64 {
        (1..=self.n())
            .map(|m| {
                let s: f64 = (1..=m).map(|y| self.pmf[y] * self.u[m - y]).sum();
                (self.u[m] - s).abs()
            })
            .fold(0.0, f64::max)
    }

    fn check_matches(&self, n: usize, beta: f64) -> Result<()> {
        if self.n() != n || self.beta != beta {
            return Err(Error::param(
                "u",
                format!(
                    "table built for (n={}, beta={}) used with (n={n}, beta={beta})",
                    self.n(),
                    self.beta
                ),
            ));
        }
        Ok(())
    }
}

/// `P(Q = k) = β Γ(k−β) / (Γ(1−β) k!)` for the Sibuya law.
pub fn sibuya_pmf(beta: f64, k: u64) -> Result<f64> {
    check_beta(beta)?;
    if k == 0 {
        return Err(Error::param("k", "Sibuya support starts at 1"));
    }
    let mut p = beta;
    for j in 1..k {
        p *= (j as f64 - beta) / (j as f64 + 1.0);
    }
    Ok(p)
}

/// Number of leading terms of `P(Q > m) = Π_{k≤m} (1 − β/k)` taken by direct product.
const SIBUYA_SCAN: u64 = 256;

/// `lnΓ(x+1−β) − lnΓ(x+1)` from the Stirling series; accurate to ~1e-20 for `x ≥ 256`.
fn ln_gamma_shift(x: f64, beta: f64) -> f64 {
    let z1 = x + 1.0 - beta;
    let z2 = x + 1.0;
    let series = |z: f64| {
        let r = 1.0 / z;
        let r2 = r * r;
        r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)))
    };
    (z1 - 0.5) * (-beta / z2).ln_1p() - beta * z2.ln() + beta + series(z1) - series(z2)
}

/// `ln P(Q > m)` for the Sibuya law.
pub fn sibuya_ln_survival(beta: f64, m: u64) -> f64 {
    let head = m.min(SIBUYA_SCAN);
    let mut ln_s = (1..=head).map(|k| (-beta / k as f64).ln_1p()).sum::<f64>();
    if m > SIBUYA_SCAN {
        ln_s += ln_gamma_shift(m as f64, beta) - ln_gamma_shift(SIBUYA_SCAN as f64, beta);
    }
    ln_s
}

/// Draws `Q` with `E z^Q = 1 − (1−z)^β`.
///
/// `Q = min{k : B_k = 1}` with independent `B_k ~ Bernoulli(β/k)`. The
/// Bernoulli scan is driven by a single uniform `U` through the survival
/// function `P(Q > m) = Π_{k≤m}(1 − β/k)`; past the first few hundred terms the
/// product is continued in closed form and the crossing found by bisection,
/// since `E Q = ∞` makes an unbounded scan impractical.
pub fn sample_sibuya<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.sample(OpenClosed01);
    let mut s = 1.0;
    for k in 1..=SIBUYA_SCAN {
        s *= 1.0 - beta / k as f64;
        if s < u {
            return k;
        }
    }
    let ln_u = u.ln();
    let (mut lo, mut hi) = (SIBUYA_SCAN, 2 * SIBUYA_SCAN);
    while sibuya_ln_survival(beta, hi) >= ln_u {
        if hi >= SIBUYA_MAX {
            return SIBUYA_MAX;
        }
        lo = hi;
        hi = (hi * 2).min(SIBUYA_MAX);
    }
    // invariant: S(lo) ≥ U > S(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if sibuya_ln_survival(beta, mid) >= ln_u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `{K}` with `K` uniform on `{0,…,n}`.
pub fn sample_singleton<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GridClosedSet {
    GridClosedSet::from_sorted_unchecked(n, vec![rng.random_range(0..=n)])
}

/// Union of a Sibuya number of independent uniform grid points.
pub fn sample_karlin<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> GridClosedSet {
    let q = sample_sibuya(beta, rng);
    let cells = n + 1;
    if q <= cells as u64 {
        let mut pts: Vec<usize> = (0..q).map(|_| rng.random_range(0..cells)).collect();
        pts.sort_unstable();
        pts.dedup();
        return GridClosedSet::from_sorted_unchecked(n, pts);
    }
    // Many draws: count distinct cells via the geometric waiting times of the
    // coupon-collector chain, then place them uniformly.
    let mut drawn: u64 = 0;
    let mut distinct = 0usize;
    while distinct < cells {
        let fresh = (cells - distinct) as f64 / cells as f64;
        let wait = if fresh >= 1.0 {
            1
        } else {
            let u: f64 = rng.sample(OpenClosed01);
            let g = (u.ln() / (1.0 - fresh).ln()).floor() + 1.0;
            if g >= u64::MAX as f64 {
                u64::MAX
            } else {
                g as u64
            }
        };
        drawn = drawn.saturating_add(wait);
        if drawn > q {
            break;
        }
        distinct += 1;
    }
    let mut pts = rand::seq::index::sample(rng, cells, distinct).into_vec();
    pts.sort_unstable();
    GridClosedSet::from_sorted_unchecked(n, pts)
}

fn push_renewals<R: Rng + ?Sized>(
    law: &InterArrivalLaw,
    start: usize,
    n: usize,
    pts: &mut Vec<usize>,
    rng: &mut R,
) {
    let mut pos = start;
    loop {
        let y = law.sample(rng);
        if y > (n - pos) as u64 {
            break;
        }
        pos += y as usize;
        pts.push(pos);
    }
}

/// `τ ∩ {0,…,n}` for a renewal process started at 0.
pub fn sample_renewal_free<R: Rng + ?Sized>(
    n: usize,
    law: &InterArrivalLaw,
    rng: &mut R,
) -> GridClosedSet {
    let mut pts = vec![0];
    push_renewals(law, 0, n, &mut pts, rng);
    GridClosedSet::from_sorted_unchecked(n, pts)
}

/// Shift `s = ⌈nV⌉ ∈ {1,…,n}` with `V = U^{1/(1−β)}`, so `P(V ≤ v) = v^{1−β}`.
pub fn sample_shift<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let v = u.powf(1.0 / (1.0 - beta));
    ((n as f64 * v).ceil() as usize).clamp(1, n)
}

/// `P(⌈nV⌉ = s)` after clipping to `{1,…,n}`.
pub fn shift_pmf(n: usize, beta: f64, s: usize) -> f64 {
    let cdf = |j: usize| (j as f64 / n as f64).powf(1.0 - beta);
    match s {
        0 => 0.0,
        1 => cdf(1),
        s if s <= n => cdf(s) - cdf(s - 1),
        _ => 0.0,
    }
}

/// `{s} ∪ {s + τ_j ≤ n}` with an independent shift `s` from [`sample_shift`].
pub fn sample_renewal_shifted<R: Rng + ?Sized>(
    n: usize,
    law: &InterArrivalLaw,
    rng: &mut R,
) -> GridClosedSet {
    let s = sample_shift(n, law.beta(), rng);
    let mut pts = vec![s];
    push_renewals(law, s, n, &mut pts, rng);
    GridClosedSet::from_sorted_unchecked(n, pts)
}

/// Renewal set conditioned on `n ∈ τ`, sampled exactly by the Doob h-transform:
/// with `m` steps remaining the next increment is `y` with probability
/// `p_Y(y) u[m−y] / u[m]`.
pub fn sample_renewal_pinned<R: Rng + ?Sized>(
    n: usize,
    table: &RenewalMassTable,
    rng: &mut R,
) -> Result<GridClosedSet> {
    table.check_matches(n, table.beta)?;
    Ok(pinned_path(table, rng))
}

fn pinned_path<R: Rng + ?Sized>(table: &RenewalMassTable, rng: &mut R) -> GridClosedSet {
    let n = table.n();
    let mut pts = vec![0];
    let mut pos = 0;
    while pos < n {
        let m = n - pos;
        let target = rng.random::<f64>() * table.u[m];
        let mut acc = 0.0;
        let mut step = m;
        for y in 1..=m {
            acc += table.pmf[y] * table.u[m - y];
            if acc > target {
                step = y;
                break;
            }
        }
        pos += step;
        pts.push(pos);
    }
    GridClosedSet::from_sorted_unchecked(n, pts)
}

/// Trial budget for [`sample_renewal_pinned_rejection`]: fifty times the
/// expected number of trials, refused when that expectation exceeds `1e5`.
pub fn rejection_budget(table: &RenewalMassTable) -> Result<u64> {
    let expected = 1.0 / table.u(table.n());
    if expected > REJECTION_EXPECTED_TRIALS_MAX {
        return Err(Error::param(
            "n",
            format!("rejection sampling needs ~{expected:.0} trials per draw"),
        ));
    }
    Ok((50.0 * expected).ceil() as u64)
}

/// Pinned renewal set by rejection: resample free paths until `n` is a renewal.
pub fn sample_renewal_pinned_rejection<R: Rng + ?Sized>(
    n: usize,
    law: &InterArrivalLaw,
    max_trials: u64,
    rng: &mut R,
) -> Result<GridClosedSet> {
    for _ in 0..max_trials {
        let set = sample_renewal_free(n, law, rng);
        if set.contains(n) {
            return Ok(set);
        }
    }
    Err(Error::TrialBudgetExceeded { budget: max_trials })
}

/// The random closed set families available to experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetFamily {
    Singleton,
    Karlin,
    RenewalFree,
    RenewalShifted,
    RenewalPinned,
}

/// Margin subtracted from `1−β` for the renewal families' cover-decay exponent.
pub const RENEWAL_C0_MARGIN: f64 = 0.01;

impl SetFamily {
    pub const ALL: [SetFamily; 5] = [
        SetFamily::Singleton,
        SetFamily::Karlin,
        SetFamily::RenewalFree,
        SetFamily::RenewalShifted,
        SetFamily::RenewalPinned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SetFamily::Singleton => "singleton",
            SetFamily::Karlin => "karlin",
            SetFamily::RenewalFree => "renewal_free",
            SetFamily::RenewalShifted => "renewal_shifted",
            SetFamily::RenewalPinned => "renewal_pinned",
        }
    }

    /// The domain `E`: the origin is excluded where it is a fixed point, and
    /// `1` too for the pinned family.
    pub fn domain(self) -> Domain {
        match self {
            SetFamily::Singleton | SetFamily::Karlin | SetFamily::RenewalShifted => Domain::Closed,
            SetFamily::RenewalFree => Domain::LeftOpen,
            SetFamily::RenewalPinned => Domain::Open,
        }
    }

    pub fn uses_beta(self) -> bool {
        self != SetFamily::Singleton
    }

    /// Exponent `c₀` with `max_{k/n∈G} P(k/n ∈ R_n) ≤ C n^{−c₀}`.
    pub fn cover_decay_exponent(self, beta: f64) -> f64 {
        match self {
            SetFamily::Singleton => 1.0,
            SetFamily::Karlin => beta,
            _ => 1.0 - beta - RENEWAL_C0_MARGIN,
        }
    }
}

impl fmt::Display for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SetFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SetFamily::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| {
                Error::param(
                    "setFamily",
                    format!(
                        "unknown family `{s}` (expected one of singleton, karlin, renewal_free, renewal_shifted, renewal_pinned)"
                    ),
                )
            })
    }
}

/// A family bound to `(n, β)`, with any precomputation it needs.
#[derive(Debug, Clone)]
pub struct SetSampler {
    family: SetFamily,
    n: usize,
    beta: f64,
    law: Option<InterArrivalLaw>,
    table: Option<Arc<RenewalMassTable>>,
}

impl SetSampler {
    pub fn new(family: SetFamily, n: usize, beta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "grid size must be positive"));
        }
        let law = if family.uses_beta() {
            Some(InterArrivalLaw::new(beta)?)
        } else {
            None
        };
        let table = if family == SetFamily::RenewalPinned {
            Some(Arc::new(renewal_mass(n, beta)?))
        } else {
            None
        };
        Ok(SetSampler {
            family,
            n,
            beta,
            law,
            table,
        })
    }

    pub fn family(&self) -> SetFamily {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GridClosedSet {
        match self.family {
            SetFamily::Singleton => sample_singleton(self.n, rng),
            SetFamily::Karlin => sample_karlin(self.n, self.beta, rng),
            SetFamily::RenewalFree => sample_renewal_free(self.n, self.law.as_ref().unwrap(), rng),
            SetFamily::RenewalShifted => {
                sample_renewal_shifted(self.n, self.law.as_ref().unwrap(), rng)
            }
            SetFamily::RenewalPinned => pinned_path(self.table.as_ref().unwrap(), rng),
        }
    }

    pub fn sample_many<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<GridClosedSet> {
        (0..count).map(|_| self.sample(rng)).collect()
    }

    /// Exact `p_n(k) = P(k ∈ R_n)` for `k = 0..=n`. The shifted family has no
    /// closed form here and is rejected.
    pub fn cover_probabilities(&self) -> Result<Vec<f64>> {
        let n = self.n;
        match self.family {
            SetFamily::Singleton => Ok(vec![1.0 / (n + 1) as f64; n + 1]),
            SetFamily::Karlin => Ok(vec![((n + 1) as f64).powf(-self.beta); n + 1]),
            SetFamily::RenewalFree => Ok(renewal_mass(n, self.beta)?.values().to_vec()),
            SetFamily::RenewalPinned => {
                let t = self.table.as_ref().unwrap();
                Ok((0..=n).map(|k| t.pinned_marginal(k)).collect())
            }
            SetFamily::RenewalShifted => Err(Error::Unsupported(
                "exact cover probabilities".into(),
            )),
        }
    }
}
