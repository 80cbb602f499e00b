//! Every emitted JSON or CSV value reads back equal.

use benchlab::agents::{run_episode, Agent, Transcript};
use benchlab::channel::{xor_pair_benchmark, Artifact, EmpiricalKernel};
use benchlab::discrim::{estimate_kappa, CurvePoint, DiscreteMetric, KappaEstimate, SnrEntry};
use benchlab::guard::{EvaluationMode, ObservationPolicy};
use benchlab::io::{read_csv, read_pilot_records, write_csv, write_pilot_records, PilotRecord};
use benchlab::jpc::{compare_transcript_laws, JpcReport};
use benchlab::rng::seeded;
use proptest::prelude::*;

fn json_roundtrip<T: serde::Serialize + serde::de::DeserializeOwned>(v: &T) -> T {
    serde_json::from_str(&benchlab::io::to_json_string(v)).unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e12f64..1e12, -1.0f64..1.0, Just(0.0), Just(f64::MIN_POSITIVE), Just(1e-300)]
}

proptest! {
    #[test]
    fn pilot_csv(rows in prop::collection::vec(("[a-z][a-z0-9_-]{0,8}", any::<u64>(), finite()), 1..30)) {
        let records: Vec<PilotRecord> =
            rows.into_iter().map(|(artifact_id, rep, score)| PilotRecord { artifact_id, rep, score }).collect();
        let mut buf = Vec::new();
        write_pilot_records(&records, &mut buf).unwrap();
        prop_assert_eq!(read_pilot_records(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn kernels_and_kappa_json(
        scores in prop::collection::vec(prop::collection::vec(finite(), 2..20), 2..6),
        q in 0.0f64..=1.0,
    ) {
        let kernels: Vec<EmpiricalKernel> = scores
            .iter()
            .enumerate()
            .map(|(i, s)| EmpiricalKernel::from_scores(format!("a{i}"), s, false).unwrap())
            .collect();
        prop_assert_eq!(&json_roundtrip(&kernels), &kernels);
        if let Ok(k) = estimate_kappa(&kernels, &DiscreteMetric, 1.0, q) {
            let back: KappaEstimate = json_roundtrip(&k);
            prop_assert_eq!(&back, &k);
            let mut buf = Vec::new();
            write_csv(&k.table.entries, &mut buf).unwrap();
            let rows: Vec<SnrEntry> = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(rows, k.table.entries);
        }
    }

    #[test]
    fn curve_csv(points in prop::collection::vec((1u64..10_000, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..0.5, 0u64..10), 1..10)) {
        let pts: Vec<CurvePoint> = points
            .into_iter()
            .map(|(n, misrank_rate, bound, std_error, ties)| CurvePoint { n, misrank_rate, bound, std_error, ties })
            .collect();
        let mut buf = Vec::new();
        write_csv(&pts, &mut buf).unwrap();
        prop_assert_eq!(read_csv::<CurvePoint>(buf.as_slice()).unwrap(), pts.clone());
        prop_assert_eq!(json_roundtrip(&pts), pts);
    }
}

#[test]
fn saturated_pairs_survive_json() {
    let kernels = vec![
        EmpiricalKernel::from_scores("a", &[1.0, 1.0], false).unwrap(),
        EmpiricalKernel::from_scores("b", &[2.0, 2.0], false).unwrap(),
        EmpiricalKernel::from_scores("c", &[0.0, 3.0], false).unwrap(),
    ];
    let k = estimate_kappa(&kernels, &DiscreteMetric, 1.0, 0.0).unwrap();
    assert_eq!(k.saturated_pairs, 1);
    assert!(k.variance_ratio.is_infinite());
    assert_eq!(json_roundtrip(&k), k);
}

#[test]
fn specs_transcripts_and_reports() {
    let spec = xor_pair_benchmark([0.1, 0.4], true).unwrap();
    assert_eq!(benchlab::channel::BenchmarkSpec::from_json(&spec.to_json()).unwrap(), spec);

    let agent = Agent::xor_leak_distinguisher();
    let t = run_episode(&agent, &spec, ObservationPolicy::LeakRawVotes, &EvaluationMode::fresh(), 4, &mut seeded(2)).unwrap();
    assert_eq!(Transcript::rounds_from_jsonl(&t.to_jsonl()).unwrap(), t.rounds);
    assert_eq!(json_roundtrip(&t), t);
    assert_eq!(json_roundtrip(&agent), agent);
    let fixed = Agent::FixedSequence { artifacts: vec![Artifact::text("x", "1. a").with_provenance("k", "v")], shuffle: true };
    assert_eq!(json_roundtrip(&fixed), fixed);

    let b = xor_pair_benchmark([0.1, 0.4], false).unwrap();
    let report =
        compare_transcript_laws(&agent, &b, &spec, ObservationPolicy::LeakRawVotes, 2, 500, 0.01, &mut seeded(3)).unwrap();
    let back: JpcReport = json_roundtrip(&report);
    assert_eq!(back, report);
}
