//! Shapes of the JSON records consumed downstream by plotting and analysis.

use serde_json::{json, Value};
use supmeasure::limit::{aggregated_point_process, gamma_arrivals, PoissonWeights};
use supmeasure::model::{ModelConfig, ModelRun};
use supmeasure::rng::RngState;
use supmeasure::simulate::{Hypograph, LimitRun};
use supmeasure::{Domain, ExtendedReal, GridClosedSet, SetFamily, SupMeasureGrid};

fn figure_preset() -> ModelConfig {
    ModelConfig {
        alpha: 1.0,
        beta: 0.6,
        n: 400,
        l: 20,
        set_family: SetFamily::RenewalShifted,
        ..ModelConfig::default()
    }
}

#[test]
fn grid_set_and_sup_measure_shapes() {
    let s = GridClosedSet::new(4, vec![1, 3]).unwrap();
    assert_eq!(serde_json::to_value(&s).unwrap(), json!({"n": 4, "points": [1, 3]}));
    let m = SupMeasureGrid::new(
        2,
        vec![ExtendedReal::Bottom, ExtendedReal::Finite(1.5), ExtendedReal::Bottom],
    )
    .unwrap();
    assert_eq!(
        serde_json::to_value(&m).unwrap(),
        json!({"n": 2, "values": [null, 1.5, null]})
    );
}

#[test]
fn malformed_inputs_are_rejected() {
    for bad in [
        r#"{"n": 4, "points": [3, 1]}"#,
        r#"{"n": 4, "points": [5]}"#,
        r#"{"n": 4, "points": [1, 1]}"#,
    ] {
        assert!(serde_json::from_str::<GridClosedSet>(bad).is_err(), "{bad}");
    }
    assert!(serde_json::from_str::<SupMeasureGrid>(r#"{"n": 2, "values": [1.0]}"#).is_err());
}

#[test]
fn atom_records() {
    let w = PoissonWeights::from_gammas(1.0, vec![1.0, 2.0]).unwrap();
    let sets = vec![
        GridClosedSet::new(4, vec![1, 2]).unwrap(),
        GridClosedSet::new(4, vec![2, 3]).unwrap(),
    ];
    let atoms = aggregated_point_process(&w, &sets, Domain::Closed, 3).unwrap();
    let lines: Vec<Value> = atoms.iter().map(|a| serde_json::to_value(a).unwrap()).collect();
    assert_eq!(
        lines,
        vec![
            json!({"J": [1], "magnitude": 1.0, "set": {"n": 4, "points": [1, 2]}}),
            json!({"J": [2], "magnitude": 0.5, "set": {"n": 4, "points": [2, 3]}}),
            json!({"J": [1, 2], "magnitude": 1.5, "set": {"n": 4, "points": [2]}}),
        ]
    );
}

#[test]
fn hypograph_records() {
    let m = SupMeasureGrid::new(
        4,
        vec![
            ExtendedReal::Finite(9.0),
            ExtendedReal::Finite(2.0),
            ExtendedReal::Bottom,
            ExtendedReal::Finite(1.0),
            ExtendedReal::Bottom,
        ],
    )
    .unwrap()
    .restrict(Domain::LeftOpen);
    let h = Hypograph::new("agg", Domain::LeftOpen, m);
    assert_eq!(
        serde_json::to_value(&h).unwrap(),
        json!({
            "object": "agg",
            "domain": "left_open",
            "n": 4,
            "values": [null, 2.0, null, 1.0, null],
            "points": [[0.25, 2.0], [0.75, 1.0]],
        })
    );
}

/// Pairs `(i, j)` whose sets meet inside the domain, counted directly.
fn intersecting_pairs(sets: &[GridClosedSet], domain: Domain) -> usize {
    let n = sets[0].n();
    let mut count = 0;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i]
                .points()
                .iter()
                .any(|&k| domain.contains_grid_point(k, n) && sets[j].contains(k))
            {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn figure_preset_pair_atoms_match_pairwise_intersections() {
    let run = LimitRun::new(figure_preset()).unwrap();
    for index in 0..5 {
        let fig = run.figure_data(index).unwrap();
        let sets = run.realization(index).unwrap().sets;
        let pairs = fig.atoms.iter().filter(|a| a.ranks.len() == 2).count();
        assert_eq!(pairs, intersecting_pairs(&sets, run.domain()));
        assert_eq!(fig.hypographs.len(), 2);
        let json = serde_json::to_value(&fig.hypographs[1]).unwrap();
        assert_eq!(json["object"], "agg");
        assert_eq!(json["values"].as_array().unwrap().len(), 401);
    }
}

#[test]
fn point_process_on_a_random_free_renewal_family() {
    let mut rng = RngState::new(4);
    let sampler = supmeasure::SetSampler::new(SetFamily::RenewalFree, 300, 0.6).unwrap();
    let w = gamma_arrivals(15, 0.8, &mut rng).unwrap();
    let sets = sampler.sample_many(15, &mut rng);
    let atoms = aggregated_point_process(&w, &sets, Domain::LeftOpen, 2).unwrap();
    let pairs = atoms.iter().filter(|a| a.ranks.len() == 2).count();
    assert_eq!(pairs, intersecting_pairs(&sets, Domain::LeftOpen));
    // every set contains 0, which lies outside the domain
    assert!(atoms.iter().all(|a| !a.set.contains(0)));
}

#[test]
fn replicate_records() {
    let model = ModelRun::new(ModelConfig {
        n: 300,
        ..ModelConfig::default()
    })
    .unwrap();
    let rec = serde_json::to_value(model.replicate(0).unwrap()).unwrap();
    let keys: Vec<&str> = rec.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["a_n", "evals", "meta", "replicate", "seed"]);
    let evals = rec["evals"].as_object().unwrap();
    assert!(evals.contains_key("(3/10,3/5)") && evals.contains_key("(3/5,9/10)"));
    assert!(rec["meta"]["maxCover"].is_u64());
    assert!(rec["meta"]["topWeight"].is_f64());

    let limit = LimitRun::new(figure_preset()).unwrap();
    let rec = serde_json::to_value(limit.replicate(0).unwrap()).unwrap();
    for object in ["agg", "noAgg", "signed"] {
        assert!(rec["evals"][object].is_object(), "{object}");
    }
    assert!(rec["meta"]["tailWeight"].is_f64());
}
