//! Truncated simulation of the limiting sup-measures, and the figure data
//! emitted from one realization.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::limit::{
    aggregated_point_process, crsm_agg, crsm_no_agg, crsm_signed, diagnostics, gamma_arrivals,
    Atom, CoverProfile, LimitDiagnostics, PoissonWeights, SignVector,
};
use crate::measure::{Domain, ExtendedReal, GridClosedSet, Interval, SupMeasureGrid};
use crate::model::ModelConfig;
use crate::rng::{tag, RngState};
use crate::sets::SetSampler;

/// One truncated realization: `L` Poisson weights, their signs and sets.
#[derive(Debug, Clone)]
pub struct LimitRealization {
    pub weights: PoissonWeights,
    pub signs: SignVector,
    pub sets: Vec<GridClosedSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LimitEvals {
    pub agg: BTreeMap<String, ExtendedReal>,
    pub no_agg: BTreeMap<String, ExtendedReal>,
    /// `p^{−1/α}` times the signed sup-measure; equal in law to `agg`.
    pub signed: BTreeMap<String, ExtendedReal>,
}

/// One replicate of the limit simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRecord {
    pub replicate: u64,
    pub seed: u64,
    pub evals: LimitEvals,
    pub meta: LimitDiagnostics,
}

#[derive(Debug, Clone)]
pub struct LimitRun {
    config: ModelConfig,
    sampler: SetSampler,
}

fn evals_of(m: &SupMeasureGrid, intervals: &[Interval]) -> BTreeMap<String, ExtendedReal> {
    intervals.iter().map(|g| (g.label(), m.eval(g))).collect()
}

impl LimitRun {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate_limit()?;
        let sampler = SetSampler::new(config.set_family, config.n, config.beta)?;
        Ok(LimitRun { config, sampler })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn domain(&self) -> Domain {
        self.config.set_family.domain()
    }

    pub fn realization(&self, index: u64) -> Result<LimitRealization> {
        let mut rng = RngState::derive(self.config.seed, tag("limit"), index);
        let weights = gamma_arrivals(self.config.l, self.config.alpha, &mut rng)?;
        let sets = self.sampler.sample_many(self.config.l, &mut rng);
        let signs = SignVector::sample(self.config.l, self.config.p, &mut rng)?;
        Ok(LimitRealization {
            weights,
            signs,
            sets,
        })
    }

    /// `p^{−1/α}·M^{(p)}`, the comparison target for the aggregated model.
    pub fn target(&self, r: &LimitRealization) -> Result<SupMeasureGrid> {
        let scale = self.config.p.powf(-1.0 / self.config.alpha);
        Ok(crsm_signed(&r.weights, &r.signs, &r.sets)?.scaled(scale))
    }

    pub fn replicate(&self, index: u64) -> Result<LimitRecord> {
        let r = self.realization(index)?;
        let intervals = &self.config.intervals;
        let evals = LimitEvals {
            agg: evals_of(&crsm_agg(&r.weights, &r.sets)?, intervals),
            no_agg: evals_of(&crsm_no_agg(&r.weights, &r.sets)?, intervals),
            signed: evals_of(&self.target(&r)?, intervals),
        };
        let profile = CoverProfile::build(&r.sets)?;
        Ok(LimitRecord {
            replicate: index,
            seed: self.config.seed,
            evals,
            meta: diagnostics(&r.weights, &profile, self.domain(), self.config.k0()),
        })
    }

    /// Hypographs and aggregated point process of realization `index`.
    pub fn figure_data(&self, index: u64) -> Result<FigureData> {
        let r = self.realization(index)?;
        let domain = self.domain();
        let no_agg = crsm_no_agg(&r.weights, &r.sets)?.restrict(domain);
        let agg = crsm_agg(&r.weights, &r.sets)?.restrict(domain);
        let atoms = aggregated_point_process(&r.weights, &r.sets, domain, self.config.j_max)?;
        let profile = CoverProfile::build(&r.sets)?;
        Ok(FigureData {
            hypographs: vec![
                Hypograph::new("noAgg", domain, no_agg),
                Hypograph::new("agg", domain, agg),
            ],
            atoms,
            meta: diagnostics(&r.weights, &profile, domain, self.config.k0()),
        })
    }
}

/// A sup-measure together with its hypograph points, as consumed by plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypograph {
    pub object: String,
    pub domain: Domain,
    pub n: usize,
    /// Grid values, `null` for `⊥`.
    pub values: Vec<ExtendedReal>,
    /// `(t, value)` at the grid points where the value is finite.
    pub points: Vec<(f64, f64)>,
}

impl Hypograph {
    pub fn new(object: &str, domain: Domain, m: SupMeasureGrid) -> Self {
        Hypograph {
            object: object.to_string(),
            domain,
            n: m.n(),
            points: m.hypograph(),
            values: m.values().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureData {
    pub hypographs: Vec<Hypograph>,
    pub atoms: Vec<Atom>,
    pub meta: LimitDiagnostics,
}
