//! Limiting random sup-measures built from Poisson weights `Γ_j^{−1/α}` and
//! i.i.d. grid closed sets: the Choquet random sup-measure, its version with
//! aggregations, the signed family used by the thinning argument, and the
//! aggregated point process of magnitudes and intersections.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::{intersect, Domain, ExtendedReal, GridClosedSet, Interval, SupMeasureGrid};

/// Largest truncation accepted by [`crsm_signed_bruteforce`].
pub const BRUTEFORCE_MAX_L: usize = 20;

/// Default cap on `|J|` for [`aggregated_point_process`].
pub const DEFAULT_J_MAX: usize = 3;

/// The first `L` arrivals `Γ_1 < … < Γ_L` of a unit-rate Poisson process and
/// the tail index `α` of the weights `w_j = Γ_j^{−1/α}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonWeights {
    alpha: f64,
    gammas: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
}

impl PoissonWeights {
    pub fn from_gammas(alpha: f64, gammas: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be positive, got {alpha}")));
        }
        if gammas.is_empty() {
            return Err(Error::param("L", "need at least one arrival"));
        }
        if gammas[0] <= 0.0 || gammas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("gammas", "must be positive and strictly increasing"));
        }
        let weights = gammas.iter().map(|g| g.powf(-1.0 / alpha)).collect();
        Ok(PoissonWeights {
            alpha,
            gammas,
            weights,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `w_j = Γ_j^{−1/α}`, strictly decreasing.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Smallest retained weight `w_L`, the truncation scale.
    pub fn tail_weight(&self) -> f64 {
        *self.weights.last().unwrap()
    }
}

/// Cumulative sums of `L` i.i.d. standard exponentials.
pub fn gamma_arrivals<R: Rng + ?Sized>(l: usize, alpha: f64, rng: &mut R) -> Result<PoissonWeights> {
    if l == 0 {
        return Err(Error::param("L", "truncation level must be at least 1"));
    }
    let mut acc = 0.0;
    let mut gammas = Vec::with_capacity(l);
    while gammas.len() < l {
        let e: f64 = rng.sample(Exp1);
        // a zero exponential would break strict monotonicity; redraw
        if e > 0.0 {
            acc += e;
            gammas.push(acc);
        }
    }
    PoissonWeights::from_gammas(alpha, gammas)
}

/// I.i.d. signs with `P(+1) = p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignVector {
    p: f64,
    positive: Vec<bool>,
}

impl SignVector {
    pub fn sample<R: Rng + ?Sized>(l: usize, p: f64, rng: &mut R) -> Result<Self> {
        check_p(p)?;
        let positive = (0..l).map(|_| rng.random::<f64>() < p).collect();
        Ok(SignVector { p, positive })
    }

    /// Explicit signs, `true` for `+1`.
    pub fn from_signs(p: f64, positive: Vec<bool>) -> Result<Self> {
        check_p(p)?;
        Ok(SignVector { p, positive })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.positive.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positive.is_empty()
    }

    pub fn is_positive(&self, j: usize) -> bool {
        self.positive[j]
    }

    pub fn sign(&self, j: usize) -> f64 {
        if self.positive[j] {
            1.0
        } else {
            -1.0
        }
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("p", format!("must lie in (0,1], got {p}")))
    }
}

/// For each grid point `k`, the sorted indices `{j : k ∈ R_j}` (compressed rows).
#[derive(Debug, Clone, PartialEq)]
pub struct CoverProfile {
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

fn shared_n(sets: &[GridClosedSet]) -> Result<usize> {
    let n = sets
        .first()
        .ok_or_else(|| Error::InvalidSet("empty family of sets".into()))?
        .n();
    if let Some(s) = sets.iter().find(|s| s.n() != n) {
        return Err(Error::GridMismatch {
            expected: n,
            got: s.n(),
        });
    }
    Ok(n)
}

impl CoverProfile {
    pub fn build(sets: &[GridClosedSet]) -> Result<Self> {
        let n = shared_n(sets)?;
        let mut offsets = vec![0usize; n + 2];
        for s in sets {
            for &k in s.points() {
                offsets[k + 1] += 1;
            }
        }
        for k in 0..=n {
            offsets[k + 1] += offsets[k];
        }
        let mut fill = offsets.clone();
        let mut indices = vec![0usize; offsets[n + 1]];
        for (j, s) in sets.iter().enumerate() {
            for &k in s.points() {
                indices[fill[k]] = j;
                fill[k] += 1;
            }
        }
        Ok(CoverProfile {
            n,
            offsets,
            indices,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cover(&self, k: usize) -> &[usize] {
        &self.indices[self.offsets[k]..self.offsets[k + 1]]
    }

    /// Largest number of sets covering one grid point of `domain`.
    pub fn max_cover(&self, domain: Domain) -> usize {
        (0..=self.n)
            .filter(|&k| domain.contains_grid_point(k, self.n))
            .map(|k| self.cover(k).len())
            .max()
            .unwrap_or(0)
    }
}

fn check_lengths(w: &PoissonWeights, sets: &[GridClosedSet]) -> Result<usize> {
    if sets.len() != w.len() {
        return Err(Error::param(
            "sets",
            format!("{} sets for {} weights", sets.len(), w.len()),
        ));
    }
    shared_n(sets)
}

/// Choquet random sup-measure: at `k`, the largest weight whose set covers `k`.
pub fn crsm_no_agg(w: &PoissonWeights, sets: &[GridClosedSet]) -> Result<SupMeasureGrid> {
    let n = check_lengths(w, sets)?;
    let mut values = vec![ExtendedReal::Bottom; n + 1];
    // weights decrease with j, so the first cover wins (lowest index on ties)
    for (s, &wj) in sets.iter().zip(w.weights()) {
        for &k in s.points() {
            if values[k].is_bottom() {
                values[k] = ExtendedReal::Finite(wj);
            }
        }
    }
    SupMeasureGrid::new(n, values)
}

/// Choquet random sup-measure with aggregations: at `k`, the sum of the
/// weights of all sets covering `k`.
pub fn crsm_agg(w: &PoissonWeights, sets: &[GridClosedSet]) -> Result<SupMeasureGrid> {
    let n = check_lengths(w, sets)?;
    let mut sums = vec![0.0; n + 1];
    let mut covered = vec![false; n + 1];
    for (s, &wj) in sets.iter().zip(w.weights()) {
        for &k in s.points() {
            sums[k] += wj;
            covered[k] = true;
        }
    }
    let values = sums
        .into_iter()
        .zip(covered)
        .map(|(v, c)| if c { ExtendedReal::Finite(v) } else { ExtendedReal::Bottom })
        .collect();
    SupMeasureGrid::new(n, values)
}

/// Signed aggregation: at `k`, the max over nonempty `J ⊂ cover(k)` of
/// `Σ_{j∈J} ε_j w_j`.
///
/// The max is attained by all positive indices when there is one; otherwise by
/// the single negative term of smallest weight, i.e. the largest index.
pub fn crsm_signed(
    w: &PoissonWeights,
    eps: &SignVector,
    sets: &[GridClosedSet],
) -> Result<SupMeasureGrid> {
    check_lengths(w, sets)?;
    if eps.len() != w.len() {
        return Err(Error::param("eps", "sign vector length differs from L"));
    }
    let profile = CoverProfile::build(sets)?;
    let weights = w.weights();
    let values = (0..=profile.n())
        .map(|k| {
            let cover = profile.cover(k);
            let Some(&last) = cover.last() else {
                return ExtendedReal::Bottom;
            };
            let mut positive = cover.iter().filter(|&&j| eps.is_positive(j)).peekable();
            if positive.peek().is_some() {
                ExtendedReal::Finite(positive.map(|&j| weights[j]).sum())
            } else {
                ExtendedReal::Finite(-weights[last])
            }
        })
        .collect();
    SupMeasureGrid::new(profile.n(), values)
}

/// Exhaustive evaluation of the signed sup-measure on `g`: the max over all
/// nonempty `J ⊂ [L]` whose intersection `R_J` hits `g` of `Σ_{j∈J} ε_j w_j`.
pub fn crsm_signed_bruteforce(
    w: &PoissonWeights,
    eps: &SignVector,
    sets: &[GridClosedSet],
    g: &Interval,
) -> Result<ExtendedReal> {
    let l = w.len();
    if l > BRUTEFORCE_MAX_L {
        return Err(Error::param(
            "L",
            format!("brute force limited to L ≤ {BRUTEFORCE_MAX_L}, got {l}"),
        ));
    }
    check_lengths(w, sets)?;
    if eps.len() != l {
        return Err(Error::param("eps", "sign vector length differs from L"));
    }
    let mut best = ExtendedReal::Bottom;
    for mask in 1u32..(1u32 << l) {
        let members: Vec<usize> = (0..l).filter(|j| mask & (1 << j) != 0).collect();
        let r_j = intersect(members.iter().map(|&j| &sets[j]))?;
        if r_j.hits(g) {
            let total: f64 = members.iter().map(|&j| eps.sign(j) * w.weights()[j]).sum();
            best = best.max(ExtendedReal::Finite(total));
        }
    }
    Ok(best)
}

/// One atom `(Σ_{j∈J} w_j, R_J)` of the aggregated point process.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    /// One-based ranks `j` of the contributing Poisson points.
    #[serde(rename = "J")]
    pub ranks: Vec<usize>,
    pub magnitude: f64,
    pub set: GridClosedSet,
}

/// All atoms with `|J| ≤ j_max` and `R_J ∩ E ≠ ∅`, ordered by `|J|` then `J`.
pub fn aggregated_point_process(
    w: &PoissonWeights,
    sets: &[GridClosedSet],
    domain: Domain,
    j_max: usize,
) -> Result<Vec<Atom>> {
    check_lengths(w, sets)?;
    let profile = CoverProfile::build(sets)?;
    let n = profile.n();
    let mut families: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    let mut scratch = Vec::new();
    for k in (0..=n).filter(|&k| domain.contains_grid_point(k, n)) {
        let cover = profile.cover(k);
        for size in 1..=j_max.min(cover.len()) {
            subsets_of_size(cover, size, 0, &mut scratch, &mut |s| {
                families.insert((s.len(), s.to_vec()));
            });
        }
    }
    families
        .into_iter()
        .map(|(_, members)| {
            let set = intersect(members.iter().map(|&j| &sets[j]))?.restrict(domain);
            let magnitude = members.iter().map(|&j| w.weights()[j]).sum();
            Ok(Atom {
                ranks: members.iter().map(|j| j + 1).collect(),
                magnitude,
                set,
            })
        })
        .collect()
}

fn subsets_of_size(
    items: &[usize],
    size: usize,
    start: usize,
    cur: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if cur.len() == size {
        emit(cur);
        return;
    }
    for i in start..items.len() {
        if items.len() - i < size - cur.len() {
            break;
        }
        cur.push(items[i]);
        subsets_of_size(items, size, i + 1, cur, emit);
        cur.pop();
    }
}

/// `P(M ≤ x) = exp(−θ x^{−α})` for an α-Fréchet variable with scale `θ^{1/α}`.
pub fn frechet_cdf(theta: f64, alpha: f64, x: f64) -> f64 {
    if theta == 0.0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    (-theta * x.powf(-alpha)).exp()
}

/// Truncation and intersection diagnostics for one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LimitDiagnostics {
    pub top_weight: f64,
    pub tail_weight: f64,
    pub max_cover: usize,
    /// Some point of the domain is covered by `K₀` or more sets.
    pub k0_exceeded: bool,
}

pub fn diagnostics(
    w: &PoissonWeights,
    profile: &CoverProfile,
    domain: Domain,
    k0: usize,
) -> LimitDiagnostics {
    let max_cover = profile.max_cover(domain);
    LimitDiagnostics {
        top_weight: w.weights()[0],
        tail_weight: w.tail_weight(),
        max_cover,
        k0_exceeded: max_cover >= k0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use crate::sets::{SetFamily, SetSampler};
    use crate::stats::{ks_one_sample, ks_threshold_one};
    use approx::assert_relative_eq;
    use ExtendedReal::{Bottom, Finite};

    fn set(n: usize, pts: &[usize]) -> GridClosedSet {
        GridClosedSet::new(n, pts.to_vec()).unwrap()
    }

    fn weights(gammas: &[f64]) -> PoissonWeights {
        PoissonWeights::from_gammas(1.0, gammas.to_vec()).unwrap()
    }

    #[test]
    fn gamma_arrivals_properties() {
        let mut rng = RngState::new(1);
        let n = 10_000;
        let mut fifth = Vec::with_capacity(n);
        let mut first_weights = Vec::with_capacity(n);
        for _ in 0..n {
            let w = gamma_arrivals(5, 1.5, &mut rng).unwrap();
            assert!(w.gammas().windows(2).all(|p| p[0] < p[1]));
            assert!(w.weights().windows(2).all(|p| p[0] > p[1]));
            fifth.push(w.gammas()[4]);
            first_weights.push(w.weights()[0]);
        }
        let (mean, se) = crate::stats::mean_and_se(&fifth);
        assert!((mean - 5.0).abs() < 3.0 * se);
        let d = ks_one_sample(&first_weights, |x| frechet_cdf(1.0, 1.5, x)).unwrap();
        assert!(d < ks_threshold_one(n, 1.0));
        assert!(gamma_arrivals(0, 1.0, &mut rng).is_err());
        assert!(PoissonWeights::from_gammas(1.0, vec![2.0, 1.0]).is_err());
        assert!(PoissonWeights::from_gammas(0.0, vec![1.0]).is_err());
    }

    #[test]
    fn no_agg_examples() {
        let w = weights(&[1.0]);
        let m = crsm_no_agg(&w, &[set(3, &[1, 2])]).unwrap();
        assert_eq!(m.values(), &[Bottom, Finite(1.0), Finite(1.0), Bottom]);

        let w = weights(&[1.0, 2.0]);
        let m = crsm_no_agg(&w, &[set(2, &[1]), set(2, &[1, 2])]).unwrap();
        assert_eq!(m.value_at(1), Finite(1.0));
        assert_eq!(m.value_at(2), Finite(0.5));
    }

    #[test]
    fn agg_examples() {
        let w = weights(&[1.0, 2.0, 4.0]);
        let sets = [set(4, &[0, 2]), set(4, &[2, 3]), set(4, &[4])];
        let m = crsm_agg(&w, &sets).unwrap();
        assert_eq!(m.value_at(2), Finite(1.5));
        assert_eq!(m.value_at(1), Bottom);

        let disjoint = [set(4, &[0, 1]), set(4, &[2]), set(4, &[4])];
        assert_eq!(crsm_agg(&w, &disjoint).unwrap(), crsm_no_agg(&w, &disjoint).unwrap());
    }

    #[test]
    fn signed_examples() {
        let w = weights(&[1.0, 2.0, 3.0]);
        let sets = [set(2, &[1]), set(2, &[1]), set(2, &[1])];
        let eps = SignVector::from_signs(0.5, vec![true, false, true]).unwrap();
        let m = crsm_signed(&w, &eps, &sets).unwrap();
        assert_relative_eq!(m.value_at(1).finite().unwrap(), 1.0 + 1.0 / 3.0);
        let g: Interval = "0:1".parse().unwrap();
        assert_eq!(crsm_signed_bruteforce(&w, &eps, &sets, &g).unwrap(), m.eval(&g));

        // cover {2,5} (1-based) with both signs negative → −w_5
        let w = weights(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let sets = [
            set(2, &[0]),
            set(2, &[1]),
            set(2, &[0]),
            set(2, &[2]),
            set(2, &[1]),
        ];
        let eps = SignVector::from_signs(0.5, vec![true, false, true, true, false]).unwrap();
        let m = crsm_signed(&w, &eps, &sets).unwrap();
        assert_eq!(m.value_at(1), Finite(-0.2));
        let g: Interval = "1/4:3/4".parse().unwrap();
        assert_eq!(crsm_signed_bruteforce(&w, &eps, &sets, &g).unwrap(), Finite(-0.2));

        // p = 1 degenerates to aggregation
        let sets = [set(3, &[0, 1]), set(3, &[1, 2]), set(3, &[1, 3])];
        let w = weights(&[0.5, 1.5, 2.0]);
        let plus = SignVector::from_signs(1.0, vec![true; 3]).unwrap();
        assert_eq!(crsm_signed(&w, &plus, &sets).unwrap(), crsm_agg(&w, &sets).unwrap());
    }

    #[test]
    fn bruteforce_edge_cases() {
        let w = weights(&[2.0]);
        let eps = SignVector::from_signs(0.5, vec![false]).unwrap();
        let g: Interval = "0:1".parse().unwrap();
        assert_eq!(
            crsm_signed_bruteforce(&w, &eps, &[set(4, &[2])], &g).unwrap(),
            Finite(-0.5)
        );
        assert_eq!(
            crsm_signed_bruteforce(&w, &eps, &[set(4, &[0])], &g).unwrap(),
            Bottom
        );
        let gammas: Vec<f64> = (1..=21).map(|j| j as f64).collect();
        let w = weights(&gammas);
        let eps = SignVector::from_signs(1.0, vec![true; 21]).unwrap();
        let sets = vec![set(2, &[1]); 21];
        assert!(crsm_signed_bruteforce(&w, &eps, &sets, &g).is_err());
    }

    #[test]
    fn point_process_examples() {
        let w = weights(&[1.0, 2.0]);
        let atoms =
            aggregated_point_process(&w, &[set(4, &[1]), set(4, &[3])], Domain::Closed, 3)
                .unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!((atoms[0].magnitude, atoms[0].set.points()), (1.0, &[1][..]));
        assert_eq!((atoms[1].magnitude, atoms[1].set.points()), (0.5, &[3][..]));

        let sets = [set(4, &[1, 2]), set(4, &[2, 4])];
        let atoms = aggregated_point_process(&w, &sets, Domain::Closed, 3).unwrap();
        assert_eq!(atoms.len(), 3);
        assert_eq!(atoms[2].ranks, vec![1, 2]);
        assert_eq!(atoms[2].magnitude, 1.5);
        assert_eq!(atoms[2].set.points(), &[2]);
        let json = serde_json::to_string(&atoms[2]).unwrap();
        assert_eq!(json, r#"{"J":[1,2],"magnitude":1.5,"set":{"n":4,"points":[2]}}"#);
    }

    #[test]
    fn point_process_pair_count_matches_pairwise_intersections() {
        let sampler = SetSampler::new(SetFamily::RenewalShifted, 400, 0.6).unwrap();
        let mut rng = RngState::new(8);
        for _ in 0..20 {
            let w = gamma_arrivals(20, 1.0, &mut rng).unwrap();
            let sets = sampler.sample_many(20, &mut rng);
            let atoms = aggregated_point_process(&w, &sets, Domain::Closed, 3).unwrap();
            let pairs = atoms.iter().filter(|a| a.ranks.len() == 2).count();
            let mut direct = 0;
            for i in 0..20 {
                for j in i + 1..20 {
                    direct += !sets[i].intersect_with(&sets[j]).unwrap().is_empty() as usize;
                }
            }
            assert_eq!(pairs, direct);
            assert_eq!(atoms.iter().filter(|a| a.ranks.len() == 1).count(), 20);
        }
    }

    #[test]
    fn frechet_cdf_examples() {
        assert_eq!(frechet_cdf(0.0, 1.0, 0.3), 1.0);
        assert_relative_eq!(frechet_cdf(1.0, 1.0, 1e12), 1.0, epsilon = 1e-11);
        assert_relative_eq!(frechet_cdf(0.5, 1.0, 1.0), (-0.5f64).exp());
        assert_eq!(frechet_cdf(0.5, 1.0, -1.0), 0.0);
    }

    #[test]
    fn cover_profile_rows_are_sorted() {
        let sets = [set(3, &[0, 2]), set(3, &[2]), set(3, &[1, 2, 3])];
        let p = CoverProfile::build(&sets).unwrap();
        assert_eq!(p.cover(2), &[0, 1, 2]);
        assert_eq!(p.cover(1), &[2]);
        assert_eq!(p.max_cover(Domain::Closed), 3);
        assert!(CoverProfile::build(&[set(3, &[0]), set(4, &[0])]).is_err());
        let w = weights(&[1.0, 2.0, 3.0]);
        let d = diagnostics(&w, &p, Domain::Closed, 3);
        assert!(d.k0_exceeded);
        assert_relative_eq!(d.tail_weight, 1.0 / 3.0);
    }
}
