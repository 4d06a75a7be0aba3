//! Named verification experiments. Each driver draws its replicates in
//! parallel from derived streams, so a report depends on the seed only.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::limit::{
    crsm_agg, crsm_no_agg, crsm_signed, crsm_signed_bruteforce, frechet_cdf, gamma_arrivals,
    SignVector,
};
use crate::measure::{ExtendedReal, Interval, Rational};
use crate::model::{ModelConfig, ModelRun};
use crate::rng::{tag, RngState, RNG_ALGORITHM};
use crate::sets::{
    rejection_budget, renewal_mass, sample_karlin, sample_renewal_free,
    sample_renewal_pinned_rejection, sample_sibuya, InterArrivalLaw, SetFamily, SetSampler,
};
use crate::simulate::LimitRun;
use crate::stats::{
    binomial_sigma, ks_one_sample, ks_threshold_two, mean_and_se, slope_regression,
};

/// Slack applied to KS critical values where truncation or pre-asymptotic bias is expected.
pub const KS_SLACK: f64 = 1.5;
/// Binomial and mean checks reject beyond this many standard errors.
pub const SIGMA_LEVEL: f64 = 3.0;
/// Fréchet KS threshold at `N = 5000`, scaled as `1/√N` for other sizes.
pub const FRECHET_KS_AT_5000: f64 = 0.033;
pub const EXPONENT_TOLERANCE: f64 = 0.05;
pub const THEOREM31_KS_A: f64 = 0.08;
pub const THEOREM31_KS_B: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    SignedReduction,
    Frechet,
    KarlinCapacity,
    SibuyaPgf,
    RenewalExponent,
    IntersectionLaw,
    PinnedMarginal,
    Thinning,
    Theorem31,
    CoupledDominance,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 10] = [
        ExperimentName::SignedReduction,
        ExperimentName::Frechet,
        ExperimentName::KarlinCapacity,
        ExperimentName::SibuyaPgf,
        ExperimentName::RenewalExponent,
        ExperimentName::IntersectionLaw,
        ExperimentName::PinnedMarginal,
        ExperimentName::Thinning,
        ExperimentName::Theorem31,
        ExperimentName::CoupledDominance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentName::SignedReduction => "signed_reduction",
            ExperimentName::Frechet => "frechet",
            ExperimentName::KarlinCapacity => "karlin_capacity",
            ExperimentName::SibuyaPgf => "sibuya_pgf",
            ExperimentName::RenewalExponent => "renewal_exponent",
            ExperimentName::IntersectionLaw => "intersection_law",
            ExperimentName::PinnedMarginal => "pinned_marginal",
            ExperimentName::Thinning => "thinning",
            ExperimentName::Theorem31 => "theorem31",
            ExperimentName::CoupledDominance => "coupled_dominance",
        }
    }

    /// Wall-clock budget at default sizes.
    pub fn runtime_limit(self) -> Duration {
        let secs = match self {
            ExperimentName::SignedReduction => 10,
            ExperimentName::Frechet => 60,
            ExperimentName::KarlinCapacity => 30,
            ExperimentName::SibuyaPgf => 10,
            ExperimentName::RenewalExponent => 60,
            ExperimentName::IntersectionLaw => 120,
            ExperimentName::PinnedMarginal => 120,
            ExperimentName::Thinning => 180,
            ExperimentName::Theorem31 => 900,
            ExperimentName::CoupledDominance => 60,
        };
        Duration::from_secs(secs)
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ExperimentName::ALL.iter().map(|e| e.name()).collect();
                Error::InvalidConfig(format!(
                    "unknown experiment {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// Driver inputs. Unset fields take the driver's defaults; a set `alpha` or
/// `beta` replaces the driver's whole parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub samples: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub p: Option<f64>,
    pub n: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub kappa: Option<f64>,
    pub intervals: Option<Vec<Interval>>,
    pub family: Option<SetFamily>,
    /// Centre the aggregated model by its small-reward drift (theorem31 only).
    pub drift: bool,
}

impl VerifyConfig {
    pub fn new(seed: u64) -> Self {
        VerifyConfig {
            seed,
            samples: None,
            alpha: None,
            beta: None,
            p: None,
            n: None,
            l: None,
            kappa: None,
            intervals: None,
            family: None,
            drift: false,
        }
    }

    fn samples_or(&self, default: usize) -> Result<usize> {
        match self.samples {
            Some(0) => Err(Error::InvalidConfig("samples must be positive".into())),
            Some(s) => Ok(s),
            None => Ok(default),
        }
    }

    fn interval_or(&self, default: &str) -> Interval {
        match &self.intervals {
            Some(v) if !v.is_empty() => v[0],
            _ => default.parse().expect("valid default interval"),
        }
    }

    fn family_must_be(&self, expected: SetFamily, driver: &str) -> Result<()> {
        match self.family {
            Some(f) if f != expected => Err(Error::InvalidConfig(format!(
                "{driver} requires the {expected} family, got {f}"
            ))),
            _ => Ok(()),
        }
    }
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig::new(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Less,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "==")]
    Equal,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Less => "<",
            Relation::AtMost => "<=",
            Relation::Equal => "==",
        })
    }
}

/// One statistic, its threshold and the sample sizes behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub statistic: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub samples: Vec<usize>,
    pub pass: bool,
}

impl Check {
    pub fn new(
        label: impl Into<String>,
        statistic: f64,
        relation: Relation,
        threshold: f64,
        samples: Vec<usize>,
    ) -> Self {
        let pass = match relation {
            Relation::Less => statistic < threshold,
            Relation::AtMost => statistic <= threshold,
            Relation::Equal => statistic == threshold,
        };
        Check {
            label: label.into(),
            statistic,
            relation,
            threshold,
            samples,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExperimentReport {
    pub name: ExperimentName,
    pub seed: u64,
    pub rng: &'static str,
    pub parameters: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub runtime_secs: f64,
    pub runtime_limit_secs: f64,
}

impl ExperimentReport {
    /// The report without its timing fields; identical across reruns with one seed.
    pub fn body(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        let obj = v.as_object_mut().expect("object");
        obj.remove("runtimeSecs");
        obj.remove("runtimeLimitSecs");
        v
    }

    pub fn within_runtime(&self) -> bool {
        self.runtime_secs < self.runtime_limit_secs
    }

    /// Aligned plain-text table of the checks.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{} [{}] seed={} runtime={:.2}s\n",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.seed,
            self.runtime_secs
        );
        let width = self.checks.iter().map(|c| c.label.len()).max().unwrap_or(0);
        for c in &self.checks {
            out.push_str(&format!(
                "  {:<width$}  {:>12.6} {:>2} {:<12.6}  N={:<18} {}\n",
                c.label,
                c.statistic,
                c.relation,
                c.threshold,
                c.samples
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join("/"),
                if c.pass { "ok" } else { "FAIL" },
            ));
        }
        out
    }
}

pub fn run_experiment(name: ExperimentName, cfg: &VerifyConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let (parameters, checks) = match name {
        ExperimentName::SignedReduction => signed_reduction(cfg)?,
        ExperimentName::Frechet => frechet(cfg)?,
        ExperimentName::KarlinCapacity => karlin_capacity(cfg)?,
        ExperimentName::SibuyaPgf => sibuya_pgf(cfg)?,
        ExperimentName::RenewalExponent => renewal_exponent(cfg)?,
        ExperimentName::IntersectionLaw => intersection_law(cfg)?,
        ExperimentName::PinnedMarginal => pinned_marginal(cfg)?,
        ExperimentName::Thinning => thinning(cfg)?,
        ExperimentName::Theorem31 => theorem31(cfg)?,
        ExperimentName::CoupledDominance => coupled_dominance(cfg)?,
    };
    Ok(ExperimentReport {
        name,
        seed: cfg.seed,
        rng: RNG_ALGORITHM,
        parameters,
        pass: checks.iter().all(|c| c.pass),
        checks,
        runtime_secs: start.elapsed().as_secs_f64(),
        runtime_limit_secs: name.runtime_limit().as_secs_f64(),
    })
}

type Outcome = Result<(Value, Vec<Check>)>;

/// Runs `f` on `count` independent streams of component `component`, in index order.
fn replicate<T, F>(seed: u64, component: &str, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngState) -> Result<T> + Sync + Send,
{
    let t = tag(component);
    (0..count)
        .into_par_iter()
        .map(|i| f(&mut RngState::derive(seed, t, i as u64)))
        .collect()
}

fn sweep(value: Option<f64>, defaults: &[f64]) -> Vec<f64> {
    value.map_or_else(|| defaults.to_vec(), |v| vec![v])
}

fn as_sample(v: ExtendedReal) -> f64 {
    v.to_f64()
}

/// Two-proportion z statistic for `⊥` frequencies; zero when both are zero.
fn bottom_z(a: usize, n: usize, b: usize, m: usize) -> f64 {
    let pooled = (a + b) as f64 / (n + m) as f64;
    if pooled == 0.0 || pooled == 1.0 {
        return 0.0;
    }
    let se = (pooled * (1.0 - pooled) * (1.0 / n as f64 + 1.0 / m as f64)).sqrt();
    (a as f64 / n as f64 - b as f64 / m as f64).abs() / se
}

fn z_check(label: String, hits: usize, trials: usize, p: f64) -> Check {
    let sigma = binomial_sigma(trials, p);
    let z = if sigma == 0.0 {
        if hits as f64 == p * trials as f64 { 0.0 } else { f64::INFINITY }
    } else {
        (hits as f64 / trials as f64 - p).abs() / sigma
    };
    Check::new(label, z, Relation::Less, SIGMA_LEVEL, vec![trials])
}

fn random_interval<R: Rng + ?Sized>(family: SetFamily, rng: &mut R) -> Interval {
    let den = rng.random_range(3..=24u64);
    let (lo, hi) = match family.domain() {
        crate::measure::Domain::Closed => (0, den),
        crate::measure::Domain::LeftOpen => (1, den),
        crate::measure::Domain::Open => (1, den - 1),
    };
    let a = rng.random_range(lo..hi);
    let b = rng.random_range(a + 1..=hi);
    let r = |k| Rational::new(k, den).expect("k ≤ den");
    Interval::new(r(a), r(b)).expect("a < b")
}

fn signed_reduction(cfg: &VerifyConfig) -> Outcome {
    let configs = cfg.samples_or(1000)?;
    let max_l = cfg.l.unwrap_or(12);
    if max_l == 0 || max_l > crate::limit::BRUTEFORCE_MAX_L {
        return Err(Error::InvalidConfig(format!(
            "L must lie in 1..={}, got {max_l}",
            crate::limit::BRUTEFORCE_MAX_L
        )));
    }
    let outcomes = replicate(cfg.seed, "signed_reduction", configs, |rng| {
        let family = SetFamily::ALL[rng.random_range(0..SetFamily::ALL.len())];
        let n = rng.random_range(4..=60usize);
        let l = rng.random_range(1..=max_l);
        let alpha = rng.random_range(0.5..2.0);
        let beta = rng.random_range(0.3..0.7);
        let p = cfg.p.unwrap_or_else(|| rng.random_range(0.05..=1.0));
        let sampler = SetSampler::new(family, n, beta)?;
        let w = gamma_arrivals(l, alpha, rng)?;
        let sets = sampler.sample_many(l, rng);
        let eps = SignVector::sample(l, p, rng)?;
        let g = random_interval(family, rng);
        let fast = crsm_signed(&w, &eps, &sets)?.eval(&g);
        let brute = crsm_signed_bruteforce(&w, &eps, &sets, &g)?;
        Ok(fast == brute)
    })?;
    let mismatches = outcomes.iter().filter(|&&ok| !ok).count();
    Ok((
        json!({"configs": configs, "maxL": max_l, "families": "all"}),
        vec![Check::new(
            "fast rule vs exhaustive mismatches",
            mismatches as f64,
            Relation::Equal,
            0.0,
            vec![configs],
        )],
    ))
}

fn frechet(cfg: &VerifyConfig) -> Outcome {
    cfg.family_must_be(SetFamily::Singleton, "frechet")?;
    let alphas = sweep(cfg.alpha, &[0.8, 1.5]);
    let n = cfg.n.unwrap_or(1000);
    let l = cfg.l.unwrap_or(200);
    let reps = cfg.samples_or(5000)?;
    let g = cfg.interval_or("0.2:0.7");
    let theta = g.grid_count(n) as f64 / (n + 1) as f64;
    let threshold = FRECHET_KS_AT_5000 * (5000.0 / reps as f64).sqrt();
    let sampler = SetSampler::new(SetFamily::Singleton, n, 0.5)?;
    let mut checks = Vec::new();
    for &alpha in &alphas {
        let xs = replicate(cfg.seed, &format!("frechet/{alpha}"), reps, |rng| {
            let w = gamma_arrivals(l, alpha, rng)?;
            let sets = sampler.sample_many(l, rng);
            Ok(as_sample(crsm_no_agg(&w, &sets)?.eval(&g)))
        })?;
        let d = ks_one_sample(&xs, |x| frechet_cdf(theta, alpha, x))?;
        checks.push(Check::new(
            format!("KS alpha={alpha}"),
            d,
            Relation::Less,
            threshold,
            vec![reps],
        ));
    }
    Ok((
        json!({"family": "singleton", "alphas": alphas, "n": n, "L": l, "interval": g, "theta": theta}),
        checks,
    ))
}

fn karlin_capacity(cfg: &VerifyConfig) -> Outcome {
    cfg.family_must_be(SetFamily::Karlin, "karlin_capacity")?;
    let betas = sweep(cfg.beta, &[0.4, 0.6, 0.8]);
    let n = cfg.n.unwrap_or(1000);
    let reps = cfg.samples_or(100_000)?;
    let g = cfg.interval_or("0.2:0.7");
    let frac = g.grid_count(n) as f64 / (n + 1) as f64;
    let mut checks = Vec::new();
    for &beta in &betas {
        InterArrivalLaw::new(beta)?;
        let hits = replicate(cfg.seed, &format!("karlin/{beta}"), reps, |rng| {
            Ok(sample_karlin(n, beta, rng).hits(&g))
        })?;
        let count = hits.iter().filter(|&&h| h).count();
        checks.push(z_check(format!("hit z-score beta={beta}"), count, reps, frac.powf(beta)));
    }
    Ok((
        json!({"family": "karlin", "betas": betas, "n": n, "interval": g, "gridFraction": frac}),
        checks,
    ))
}

fn sibuya_pgf(cfg: &VerifyConfig) -> Outcome {
    let beta = cfg.beta.unwrap_or(0.6);
    InterArrivalLaw::new(beta)?;
    let reps = cfg.samples_or(100_000)?;
    let zs = [0.2f64, 0.5, 0.8];
    let qs = replicate(cfg.seed, "sibuya", reps, |rng| Ok(sample_sibuya(beta, rng)))?;
    let checks = zs
        .iter()
        .map(|&z| {
            let powers: Vec<f64> = qs.iter().map(|&q| z.powf(q as f64)).collect();
            let (mean, se) = mean_and_se(&powers);
            let target = 1.0 - (1.0 - z).powf(beta);
            Check::new(
                format!("|mean z^Q - pgf| / se, z={z}"),
                (mean - target).abs() / se,
                Relation::Less,
                SIGMA_LEVEL,
                vec![reps],
            )
        })
        .collect();
    Ok((json!({"beta": beta, "z": zs}), checks))
}

fn log_log_slope(values: &[f64], lo: usize, hi: usize, power: f64) -> Result<f64> {
    let ks: Vec<usize> = (lo..=hi).collect();
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).ln()).collect();
    let ys: Vec<f64> = ks.iter().map(|&k| power * values[k].ln()).collect();
    slope_regression(&xs, &ys)
}

fn exponent_range(n: usize) -> Result<(usize, usize)> {
    let lo = 1000.min(n / 2).max(1);
    if n < lo + 1 {
        return Err(Error::InvalidConfig(format!("n = {n} too small for a slope fit")));
    }
    Ok((lo, n))
}

fn renewal_exponent(cfg: &VerifyConfig) -> Outcome {
    let betas = sweep(cfg.beta, &[0.5, 0.6, 0.75]);
    let n = cfg.n.unwrap_or(20_000);
    let (lo, hi) = exponent_range(n)?;
    let tables = betas
        .par_iter()
        .map(|&b| renewal_mass(n, b))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for (&beta, table) in betas.iter().zip(&tables) {
        let slope = log_log_slope(table.values(), lo, hi, 1.0)?;
        checks.push(Check::new(
            format!("|slope - (beta-1)| beta={beta}"),
            (slope - (beta - 1.0)).abs(),
            Relation::Less,
            EXPONENT_TOLERANCE,
            vec![hi - lo + 1],
        ));
    }
    Ok((json!({"betas": betas, "n": n, "kRange": [lo, hi]}), checks))
}

fn intersection_law(cfg: &VerifyConfig) -> Outcome {
    let beta = cfg.beta.unwrap_or(0.75);
    let n = cfg.n.unwrap_or(20_000);
    let (lo, hi) = exponent_range(n)?;
    let reps = cfg.samples_or(100_000)?;
    let k = 500.min(n);
    let table = renewal_mass(n, beta)?;
    let mut checks = Vec::new();
    for ell in [2usize, 3] {
        let slope = log_log_slope(table.values(), lo, hi, ell as f64)?;
        let target = ell as f64 * (beta - 1.0);
        checks.push(Check::new(
            format!("|slope - ell(beta-1)| ell={ell}"),
            (slope - target).abs(),
            Relation::Less,
            EXPONENT_TOLERANCE * ell as f64,
            vec![hi - lo + 1],
        ));
    }
    let law = InterArrivalLaw::new(beta)?;
    let both = replicate(cfg.seed, "intersection", reps, |rng| {
        let a = sample_renewal_free(k, &law, rng);
        let b = sample_renewal_free(k, &law, rng);
        Ok(a.contains(k) && b.contains(k))
    })?;
    let count = both.iter().filter(|&&h| h).count();
    checks.push(z_check(
        format!("P(k in R1 and R2) z-score, k={k}"),
        count,
        reps,
        table.u(k).powi(2),
    ));
    Ok((
        json!({"beta": beta, "n": n, "kRange": [lo, hi], "k": k, "ells": [2, 3]}),
        checks,
    ))
}

fn pinned_marginal(cfg: &VerifyConfig) -> Outcome {
    let beta = cfg.beta.unwrap_or(0.6);
    let n = cfg.n.unwrap_or(400);
    let reps = cfg.samples_or(100_000)?;
    let ks_reps = cfg.samples.unwrap_or(5000).min(reps);
    let k = n / 2;
    let sampler = SetSampler::new(SetFamily::RenewalPinned, n, beta)?;
    let table = renewal_mass(n, beta)?;
    let law = InterArrivalLaw::new(beta)?;
    let budget = rejection_budget(&table)?;

    let hits = replicate(cfg.seed, "pinned/h", reps, |rng| Ok(sampler.sample(rng).contains(k)))?;
    let count = hits.iter().filter(|&&h| h).count();
    let mut checks = vec![z_check(
        format!("P(k in pinned set) z-score, k={k}"),
        count,
        reps,
        table.pinned_marginal(k),
    )];

    let sizes_h = replicate(cfg.seed, "pinned/h-size", ks_reps, |rng| {
        Ok(sampler.sample(rng).len() as f64)
    })?;
    let sizes_r = replicate(cfg.seed, "pinned/rejection", ks_reps, |rng| {
        Ok(sample_renewal_pinned_rejection(n, &law, budget, rng)?.len() as f64)
    })?;
    checks.push(Check::new(
        "KS cardinality h-transform vs rejection",
        crate::stats::ks_two_sample(&sizes_h, &sizes_r)?,
        Relation::Less,
        ks_threshold_two(ks_reps, ks_reps, KS_SLACK),
        vec![ks_reps, ks_reps],
    ));
    Ok((
        json!({"beta": beta, "n": n, "k": k, "rejectionBudget": budget}),
        checks,
    ))
}

/// KS and `⊥`-frequency checks between two samples of `ExtendedReal` values.
fn compare_samples(label: &str, a: &[ExtendedReal], b: &[ExtendedReal], ks_threshold: f64) -> Result<Vec<Check>> {
    let xa: Vec<f64> = a.iter().map(|&v| as_sample(v)).collect();
    let xb: Vec<f64> = b.iter().map(|&v| as_sample(v)).collect();
    let d = crate::stats::ks_two_sample(&xa, &xb)?;
    let bot_a = a.iter().filter(|v| v.is_bottom()).count();
    let bot_b = b.iter().filter(|v| v.is_bottom()).count();
    Ok(vec![
        Check::new(format!("KS {label}"), d, Relation::Less, ks_threshold, vec![a.len(), b.len()]),
        Check::new(
            format!("bottom-frequency z {label}"),
            bottom_z(bot_a, a.len(), bot_b, b.len()),
            Relation::Less,
            SIGMA_LEVEL,
            vec![a.len(), b.len()],
        ),
    ])
}

fn thinning(cfg: &VerifyConfig) -> Outcome {
    let family = cfg.family.unwrap_or(SetFamily::RenewalFree);
    let alpha = cfg.alpha.unwrap_or(1.0);
    let beta = cfg.beta.unwrap_or(0.6);
    let p = cfg.p.unwrap_or(0.7);
    let n = cfg.n.unwrap_or(1000);
    let l = cfg.l.unwrap_or(100);
    let reps = cfg.samples_or(5000)?;
    let g = cfg.interval_or("0.3:0.8");
    family.domain().check(&g)?;
    crate::limit::check_p(p)?;
    let sampler = SetSampler::new(family, n, beta)?;
    let signed = replicate(cfg.seed, "thinning/signed", reps, |rng| {
        let w = gamma_arrivals(l, alpha, rng)?;
        let sets = sampler.sample_many(l, rng);
        let eps = SignVector::sample(l, p, rng)?;
        Ok(crsm_signed(&w, &eps, &sets)?.eval(&g))
    })?;
    let scale = p.powf(1.0 / alpha);
    let agg = replicate(cfg.seed, "thinning/agg", reps, |rng| {
        let w = gamma_arrivals(l, alpha, rng)?;
        let sets = sampler.sample_many(l, rng);
        Ok(crsm_agg(&w, &sets)?.eval(&g).scale(scale))
    })?;
    let checks = compare_samples(
        "signed vs p^(1/alpha) agg",
        &signed,
        &agg,
        ks_threshold_two(reps, reps, KS_SLACK),
    )?;
    Ok((
        json!({"family": family, "alpha": alpha, "beta": beta, "p": p, "n": n, "L": l, "interval": g}),
        checks,
    ))
}

/// Model-vs-limit comparison for one configuration, coordinate-wise over its intervals.
fn theorem31_case(
    case: &str,
    config: ModelConfig,
    reps: usize,
    threshold: f64,
) -> Result<(Value, Vec<Check>)> {
    let model = ModelRun::new(config.clone())?;
    let limit = LimitRun::new(config.clone())?;
    let intervals = config.intervals.clone();
    let model_evals = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let (rewards, sets) = model.sample_inputs(i);
            let m = model.normalized_rsm(&rewards, &sets)?;
            Ok(intervals.iter().map(|g| m.eval(g)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let limit_evals = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let m = limit.target(&limit.realization(i)?)?;
            Ok(intervals.iter().map(|g| m.eval(g)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    let mut max_ks: f64 = 0.0;
    for (c, g) in intervals.iter().enumerate() {
        let a: Vec<ExtendedReal> = model_evals.iter().map(|row| row[c]).collect();
        let b: Vec<ExtendedReal> = limit_evals.iter().map(|row| row[c]).collect();
        let pair = compare_samples(&format!("({case}) {}", g.label()), &a, &b, threshold)?;
        max_ks = max_ks.max(pair[0].statistic);
        checks.extend(pair);
    }
    checks.push(Check::new(
        format!("({case}) max KS over intervals"),
        max_ks,
        Relation::Less,
        threshold,
        vec![reps, reps],
    ));
    let params = json!({
        "alpha": config.alpha, "beta": config.beta, "p": config.p, "n": config.n,
        "kappa": config.kappa, "m_n": model.m_n(), "a_n": model.a_n(), "L": config.l,
        "family": config.set_family, "intervals": intervals, "drift": config.drift,
    });
    Ok((params, checks))
}

fn theorem31(cfg: &VerifyConfig) -> Outcome {
    let reps = cfg.samples_or(2000)?;
    let base = ModelConfig {
        beta: cfg.beta.unwrap_or(0.6),
        n: cfg.n.unwrap_or(2000),
        l: cfg.l.unwrap_or(100),
        seed: cfg.seed,
        replicates: reps,
        set_family: cfg.family.unwrap_or(SetFamily::RenewalFree),
        drift: cfg.drift,
        intervals: cfg.intervals.clone().unwrap_or_else(|| {
            vec!["3/10:3/5".parse().unwrap(), "3/5:9/10".parse().unwrap()]
        }),
        ..ModelConfig::default()
    };
    let mut cases = vec![(
        "a",
        ModelConfig {
            alpha: 0.8,
            p: 1.0,
            kappa: 0.5,
            ..base.clone()
        },
        THEOREM31_KS_A,
    ), (
        "b",
        ModelConfig {
            alpha: 1.5,
            p: 0.8,
            kappa: 1.0,
            ..base.clone()
        },
        THEOREM31_KS_B,
    )];
    if cfg.alpha.is_some() || cfg.p.is_some() || cfg.kappa.is_some() {
        let custom = ModelConfig {
            alpha: cfg.alpha.unwrap_or(0.8),
            p: cfg.p.unwrap_or(1.0),
            kappa: cfg.kappa.unwrap_or(0.5),
            ..base
        };
        cases = vec![("custom", custom, THEOREM31_KS_B)];
    }
    let mut params = serde_json::Map::new();
    let mut checks = Vec::new();
    for (case, config, threshold) in cases {
        let (p, c) = theorem31_case(case, config, reps, threshold)?;
        params.insert(case.to_string(), p);
        checks.extend(c);
    }
    params.insert("replicates".into(), json!(reps));
    Ok((Value::Object(params), checks))
}

fn coupled_dominance(cfg: &VerifyConfig) -> Outcome {
    let reps = cfg.samples_or(500)?;
    let n = cfg.n.unwrap_or(400);
    let l = cfg.l.unwrap_or(50);
    let alpha = cfg.alpha.unwrap_or(1.0);
    let beta = cfg.beta.unwrap_or(0.6);
    let samplers = SetFamily::ALL
        .iter()
        .map(|&f| SetSampler::new(f, n, beta))
        .collect::<Result<Vec<_>>>()?;
    let violations = replicate(cfg.seed, "dominance", reps, |rng| {
        let sampler = &samplers[rng.random_range(0..samplers.len())];
        let w = gamma_arrivals(l, alpha, rng)?;
        let sets = sampler.sample_many(l, rng);
        let lo = crsm_no_agg(&w, &sets)?;
        let hi = crsm_agg(&w, &sets)?;
        Ok(lo
            .values()
            .iter()
            .zip(hi.values())
            .filter(|(a, b)| b < a)
            .count())
    })?;
    let total: usize = violations.iter().sum();
    Ok((
        json!({"families": "all", "n": n, "L": l, "alpha": alpha, "beta": beta}),
        vec![Check::new(
            "grid points with agg < noAgg",
            total as f64,
            Relation::Equal,
            0.0,
            vec![reps],
        )],
    ))
}
