//! The aggregated model: `m_n` i.i.d. heavy-tailed rewards, each collected on
//! its own random grid set, and its empirical random sup-measure
//! `M_n(G) = max_{k/n∈G, J_{n,k}≠∅} Σ_{j∈J_{n,k}} X_j`.

use std::collections::BTreeMap;

use rand::distr::OpenClosed01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit::{check_p, DEFAULT_J_MAX};
use crate::measure::{ExtendedReal, GridClosedSet, Interval, SupMeasureGrid};
use crate::rng::{tag, RngState};
use crate::sets::{SetFamily, SetSampler};

/// Symmetrised Pareto rewards: `P(|X| > x) = x^{−α}` for `x ≥ 1`, and the
/// sign is `+1` with probability `p`, independently of `|X|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardLaw {
    alpha: f64,
    p: f64,
}

impl RewardLaw {
    pub fn new(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
        }
        check_p(p)?;
        Ok(RewardLaw { alpha, p })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `P(X > x) = p x^{−α}`, `x ≥ 1`.
    pub fn upper_tail(&self, x: f64) -> f64 {
        if x < 1.0 {
            self.p
        } else {
            self.p * x.powf(-self.alpha)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(OpenClosed01);
        let magnitude = u.powf(-1.0 / self.alpha);
        if rng.random::<f64>() < self.p {
            magnitude
        } else {
            -magnitude
        }
    }

    /// `E[X 1{|X| ≤ c}] = (2p−1) ∫_1^c α x^{−α} dx`.
    pub fn truncated_mean(&self, c: f64) -> f64 {
        if c < 1.0 {
            return 0.0;
        }
        let a = self.alpha;
        let integral = if a == 1.0 {
            c.ln()
        } else {
            a / (a - 1.0) * (1.0 - c.powf(1.0 - a))
        };
        (2.0 * self.p - 1.0) * integral
    }
}

/// Rewards together with the permutation sorting them by decreasing `|X|`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardVector {
    values: Vec<f64>,
    order: Vec<usize>,
}

impl RewardVector {
    pub fn new(values: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        // stable: ties keep the original label order
        order.sort_by(|&i, &j| values[j].abs().total_cmp(&values[i].abs()));
        RewardVector { values, order }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `order[r]` is the label of the reward of rank `r` (rank 0 is the largest `|X|`).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn top_abs(&self) -> f64 {
        self.order.first().map_or(0.0, |&i| self.values[i].abs())
    }
}

pub fn sample_rewards<R: Rng + ?Sized>(m: usize, law: &RewardLaw, rng: &mut R) -> RewardVector {
    RewardVector::new((0..m).map(|_| law.sample(rng)).collect())
}

/// `a = (p m)^{1/α}`, the solution of `m P(X > a) = 1`.
pub fn norm_constant(m: usize, law: &RewardLaw) -> Result<f64> {
    let pm = law.p * m as f64;
    if pm < 1.0 {
        return Err(Error::param(
            "m",
            format!("need p·m ≥ 1 for a_n ≥ 1, got p·m = {pm}"),
        ));
    }
    Ok(pm.powf(1.0 / law.alpha))
}

struct Accumulated {
    sums: Vec<f64>,
    counts: Vec<u32>,
}

fn accumulate(
    rewards: &RewardVector,
    sets: &[GridClosedSet],
    labels: impl Iterator<Item = usize>,
) -> Result<Accumulated> {
    if sets.len() != rewards.len() {
        return Err(Error::param(
            "sets",
            format!("{} sets for {} rewards", sets.len(), rewards.len()),
        ));
    }
    let n = sets
        .first()
        .ok_or_else(|| Error::InvalidSet("empty family of sets".into()))?
        .n();
    let mut acc = Accumulated {
        sums: vec![0.0; n + 1],
        counts: vec![0; n + 1],
    };
    for j in labels {
        let s = &sets[j];
        if s.n() != n {
            return Err(Error::GridMismatch {
                expected: n,
                got: s.n(),
            });
        }
        let x = rewards.values[j];
        for &k in s.points() {
            acc.sums[k] += x;
            acc.counts[k] += 1;
        }
    }
    Ok(acc)
}

impl Accumulated {
    fn into_grid(self) -> SupMeasureGrid {
        let n = self.sums.len() - 1;
        let values = self
            .sums
            .into_iter()
            .zip(self.counts)
            .map(|(s, c)| if c > 0 { ExtendedReal::Finite(s) } else { ExtendedReal::Bottom })
            .collect();
        SupMeasureGrid::new(n, values).expect("n+1 values")
    }
}

/// Unnormalised empirical sup-measure: at `k`, the sum of the rewards whose
/// sets cover `k`, or `⊥` when none does.
pub fn empirical_rsm(rewards: &RewardVector, sets: &[GridClosedSet]) -> Result<SupMeasureGrid> {
    Ok(accumulate(rewards, sets, 0..rewards.len())?.into_grid())
}

/// As [`empirical_rsm`], but only the `ell` largest rewards in absolute value take part.
pub fn top_ell_rsm(
    rewards: &RewardVector,
    sets: &[GridClosedSet],
    ell: usize,
) -> Result<SupMeasureGrid> {
    if ell > rewards.len() {
        return Err(Error::param(
            "ell",
            format!("{ell} exceeds the number of rewards {}", rewards.len()),
        ));
    }
    Ok(accumulate(rewards, sets, rewards.order[..ell].iter().copied())?.into_grid())
}

/// Subtracts `drift[k]` at every covered grid point.
pub fn apply_drift(m: &SupMeasureGrid, drift: &[f64]) -> Result<SupMeasureGrid> {
    if drift.len() != m.n() + 1 {
        return Err(Error::GridMismatch {
            expected: m.n(),
            got: drift.len().saturating_sub(1),
        });
    }
    let values = m
        .values()
        .iter()
        .zip(drift)
        .map(|(v, b)| match v {
            ExtendedReal::Finite(x) => ExtendedReal::Finite(x - b),
            ExtendedReal::Bottom => ExtendedReal::Bottom,
        })
        .collect();
    SupMeasureGrid::new(m.n(), values)
}

/// `b[k] = m p_n(k) E[X 1{|X| ≤ a δ}]`, with exact cover probabilities `p_n(k)`.
pub fn drift_table(
    m: usize,
    law: &RewardLaw,
    a_n: f64,
    delta: f64,
    cover_probabilities: &[f64],
) -> Result<Vec<f64>> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::param("delta", format!("must be positive, got {delta}")));
    }
    let t = law.truncated_mean(a_n * delta);
    Ok(cover_probabilities
        .iter()
        .map(|&pk| m as f64 * pk * t)
        .collect())
}

fn default_intervals() -> Vec<Interval> {
    vec![
        Interval::from_fractions(3, 10, 6, 10).unwrap(),
        Interval::from_fractions(6, 10, 9, 10).unwrap(),
    ]
}

/// Parameters of an aggregated-model or limit simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModelConfig {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub n: usize,
    pub kappa: f64,
    #[serde(rename = "L")]
    pub l: usize,
    pub replicates: usize,
    pub seed: u64,
    pub intervals: Vec<Interval>,
    pub set_family: SetFamily,
    /// Subtract the centring drift `b_n(k)` from the empirical sup-measure.
    pub drift: bool,
    /// Truncation `δ` of the drift; defaults to `n^{−c₀/(2α)}`.
    pub delta: Option<f64>,
    /// Also record the top-`ℓ` sup-measure.
    pub ell: Option<usize>,
    pub j_max: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            alpha: 0.8,
            beta: 0.6,
            p: 1.0,
            n: 2000,
            kappa: 0.5,
            l: 100,
            replicates: 100,
            seed: 1,
            intervals: default_intervals(),
            set_family: SetFamily::RenewalFree,
            drift: false,
            delta: None,
            ell: None,
            j_max: DEFAULT_J_MAX,
        }
    }
}

impl ModelConfig {
    /// Number of aggregated chains `m_n = ⌈n^κ⌉`.
    pub fn m_n(&self) -> usize {
        (self.n as f64).powf(self.kappa).ceil() as usize
    }

    pub fn law(&self) -> Result<RewardLaw> {
        RewardLaw::new(self.alpha, self.p)
    }

    pub fn a_n(&self) -> Result<f64> {
        norm_constant(self.m_n(), &self.law()?)
    }

    pub fn c0(&self) -> f64 {
        self.set_family.cover_decay_exponent(self.beta)
    }

    /// `K₀ = ⌈1/c₀⌉`: intersections of this many sets vanish in the limit.
    pub fn k0(&self) -> usize {
        (1.0 / self.c0()).ceil() as usize
    }

    /// Upper bound on `κ` when `α ≥ 1`; `None` when unconstrained.
    pub fn kappa_bound(&self) -> Option<f64> {
        if self.alpha < 1.0 {
            None
        } else if self.alpha == 1.0 {
            Some(f64::INFINITY)
        } else {
            Some(self.c0() / (1.0 - 1.0 / self.alpha))
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
            .unwrap_or_else(|| (self.n as f64).powf(-self.c0() / (2.0 * self.alpha)))
    }

    /// Checks the constraints shared by model and limit simulations.
    pub fn validate_limit(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.set_family.uses_beta() && !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0,1), got {}", self.beta));
        }
        if self.c0() <= 0.0 {
            return bad(format!(
                "cover-decay exponent c0 = {} must be positive (beta too close to 1)",
                self.c0()
            ));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p must lie in (0,1], got {}", self.p));
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.l == 0 || self.replicates == 0 || self.j_max == 0 {
            return bad("L, replicates and jMax must be positive".into());
        }
        if self.intervals.is_empty() {
            return bad("at least one interval is required".into());
        }
        let domain = self.set_family.domain();
        for g in &self.intervals {
            if !domain.admits(g) {
                return bad(format!(
                    "interval {} must have its closure inside the domain {domain} of {}",
                    g.label(),
                    self.set_family
                ));
            }
        }
        Ok(())
    }

    /// Checks every constraint, naming the violated one.
    pub fn validate(&self) -> Result<()> {
        self.validate_limit()?;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.kappa.is_nan() || self.kappa <= 0.0 {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if let Some(bound) = self.kappa_bound() {
            if self.kappa >= bound {
                return bad(format!(
                    "kappa = {} violates kappa < c0/(1-1/alpha) = {bound:.4} (c0 = {:.4} for {}, alpha = {})",
                    self.kappa,
                    self.c0(),
                    self.set_family,
                    self.alpha
                ));
            }
        }
        let pm = self.p * self.m_n() as f64;
        if pm < 1.0 {
            return bad(format!("p*m_n = {pm} must be at least 1 so that a_n >= 1"));
        }
        if let Some(ell) = self.ell {
            if ell == 0 || ell > self.m_n() {
                return bad(format!("ell = {ell} must lie in 1..=m_n = {}", self.m_n()));
            }
        }
        if self.drift {
            if let Some(d) = self.delta {
                if d.is_nan() || d <= 0.0 {
                    return bad(format!("delta must be positive, got {d}"));
                }
            }
            if self.set_family == SetFamily::RenewalShifted {
                return bad("drift requires exact cover probabilities, unavailable for renewal_shifted".into());
            }
        }
        Ok(())
    }
}

/// Per-replicate diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplicateMeta {
    pub max_cover: usize,
    pub top_weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_weight: Option<f64>,
    pub k0_exceeded: bool,
}

/// One replicate of the normalised empirical sup-measure `M_n/a_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelRecord {
    pub replicate: u64,
    pub seed: u64,
    #[serde(rename = "a_n")]
    pub a_n: f64,
    pub evals: BTreeMap<String, ExtendedReal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_ell_evals: Option<BTreeMap<String, ExtendedReal>>,
    pub meta: ReplicateMeta,
}

/// A validated configuration with its samplers and constants prepared.
#[derive(Debug, Clone)]
pub struct ModelRun {
    config: ModelConfig,
    sampler: SetSampler,
    law: RewardLaw,
    m_n: usize,
    a_n: f64,
    drift: Option<Vec<f64>>,
}

impl ModelRun {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let sampler = SetSampler::new(config.set_family, config.n, config.beta)?;
        let law = config.law()?;
        let m_n = config.m_n();
        let a_n = norm_constant(m_n, &law)?;
        let drift = if config.drift {
            let cover = sampler.cover_probabilities()?;
            Some(drift_table(m_n, &law, a_n, config.delta(), &cover)?)
        } else {
            None
        };
        Ok(ModelRun {
            config,
            sampler,
            law,
            m_n,
            a_n,
            drift,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn sampler(&self) -> &SetSampler {
        &self.sampler
    }

    pub fn m_n(&self) -> usize {
        self.m_n
    }

    pub fn a_n(&self) -> f64 {
        self.a_n
    }

    pub fn drift(&self) -> Option<&[f64]> {
        self.drift.as_deref()
    }

    /// Rewards and sets of replicate `index`, from its own stream.
    pub fn sample_inputs(&self, index: u64) -> (RewardVector, Vec<GridClosedSet>) {
        let mut rng = RngState::derive(self.config.seed, tag("model"), index);
        let rewards = sample_rewards(self.m_n, &self.law, &mut rng);
        let sets = self.sampler.sample_many(self.m_n, &mut rng);
        (rewards, sets)
    }

    /// `M_n / a_n` (drift-corrected when enabled) for replicate `index`.
    pub fn normalized_rsm(&self, rewards: &RewardVector, sets: &[GridClosedSet]) -> Result<SupMeasureGrid> {
        let mut m = empirical_rsm(rewards, sets)?;
        if let Some(b) = &self.drift {
            m = apply_drift(&m, b)?;
        }
        Ok(m.scaled(1.0 / self.a_n))
    }

    pub fn replicate(&self, index: u64) -> Result<ModelRecord> {
        let (rewards, sets) = self.sample_inputs(index);
        let m = self.normalized_rsm(&rewards, &sets)?;
        let evals = self
            .config
            .intervals
            .iter()
            .map(|g| (g.label(), m.eval(g)))
            .collect();
        let top_ell_evals = match self.config.ell {
            Some(ell) => {
                let t = top_ell_rsm(&rewards, &sets, ell)?.scaled(1.0 / self.a_n);
                Some(
                    self.config
                        .intervals
                        .iter()
                        .map(|g| (g.label(), t.eval(g)))
                        .collect(),
                )
            }
            None => None,
        };
        let domain = self.config.set_family.domain();
        let n = self.config.n;
        let mut counts = vec![0usize; n + 1];
        for s in &sets {
            for &k in s.points() {
                counts[k] += 1;
            }
        }
        let max_cover = (0..=n)
            .filter(|&k| domain.contains_grid_point(k, n))
            .map(|k| counts[k])
            .max()
            .unwrap_or(0);
        Ok(ModelRecord {
            replicate: index,
            seed: self.config.seed,
            a_n: self.a_n,
            evals,
            top_ell_evals,
            meta: ReplicateMeta {
                max_cover,
                top_weight: rewards.top_abs() / self.a_n,
                tail_weight: None,
                k0_exceeded: max_cover >= self.config.k0(),
            },
        })
    }
}
