//! Distances between artifacts and neighborhoods of a base prompt.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::discrim::ArtifactMetric;
use crate::error::{Error, Result};
use crate::guard::{normalize_clause, strip_list_marker, CanonicalArtifact};
use crate::rng::SimRng;

/// Ordered normalized clauses of a prompt.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClauseSequence(Vec<String>);

impl ClauseSequence {
    pub fn new(clauses: Vec<String>) -> Result<Self> {
        if clauses.iter().any(|c| c.is_empty()) {
            return Err(Error::Argument("clauses must be nonempty".into()));
        }
        Ok(ClauseSequence(clauses))
    }

    pub fn clauses(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&CanonicalArtifact> for ClauseSequence {
    fn from(c: &CanonicalArtifact) -> Self {
        ClauseSequence(c.clause_sequence.clone())
    }
}

/// Unit-cost Levenshtein distance over arbitrary tokens.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag } else { 1 + diag.min(up).min(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// Minimum number of clause insertions, deletions, and substitutions turning
/// `a` into `b`.
pub fn edit_distance(a: &ClauseSequence, b: &ClauseSequence) -> usize {
    levenshtein(&a.0, &b.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditSet {
    pub insert: bool,
    pub delete: bool,
    pub substitute: bool,
    pub clause_pool: Vec<String>,
}

impl EditSet {
    pub fn all(clause_pool: Vec<String>) -> Self {
        EditSet { insert: true, delete: true, substitute: true, clause_pool }
    }

    pub fn delete_only() -> Self {
        EditSet { insert: false, delete: true, substitute: false, clause_pool: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.insert || self.delete || self.substitute) {
            return Err(Error::Argument("edit set allows no operations".into()));
        }
        if (self.insert || self.substitute) && self.clause_pool.is_empty() {
            return Err(Error::Argument("insert/substitute edits need a clause pool".into()));
        }
        Ok(())
    }

    /// Applies one random valid edit; `false` when the drawn edit was not
    /// applicable to `seq`.
    fn apply_random(&self, seq: &mut Vec<String>, rng: &mut SimRng) -> bool {
        let ops: Vec<u8> = [(self.insert, 0u8), (self.delete, 1), (self.substitute, 2)]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, op)| *op)
            .collect();
        match ops[rng.gen_range(0..ops.len())] {
            0 => {
                let clause = self.clause_pool[rng.gen_range(0..self.clause_pool.len())].clone();
                seq.insert(rng.gen_range(0..=seq.len()), clause);
                true
            }
            1 if seq.len() >= 2 => {
                seq.remove(rng.gen_range(0..seq.len()));
                true
            }
            2 if !seq.is_empty() => {
                let pos = rng.gen_range(0..seq.len());
                let options: Vec<&String> = self.clause_pool.iter().filter(|c| **c != seq[pos]).collect();
                if options.is_empty() {
                    return false;
                }
                seq[pos] = options[rng.gen_range(0..options.len())].clone();
                true
            }
            _ => false,
        }
    }
}

/// Reads a clause pool: one clause per line, list markers removed,
/// normalized, blank lines skipped.
pub fn load_clause_pool(reader: impl BufRead) -> Result<Vec<String>> {
    let mut pool = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        let clause = normalize_clause(strip_list_marker(line).unwrap_or(line));
        if !clause.is_empty() {
            pool.push(clause);
        }
    }
    Ok(pool)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodMember {
    pub id: String,
    pub canonical: CanonicalArtifact,
    pub distance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub base: CanonicalArtifact,
    pub radius: usize,
    pub members: Vec<NeighborhoodMember>,
    pub warnings: Vec<String>,
}

impl Neighborhood {
    /// Clause sequences by member id, base included under `"base"`.
    pub fn metric(&self) -> ClauseEditMetric {
        let mut sequences: BTreeMap<String, ClauseSequence> =
            self.members.iter().map(|m| (m.id.clone(), ClauseSequence::from(&m.canonical))).collect();
        sequences.insert("base".into(), ClauseSequence::from(&self.base));
        ClauseEditMetric { sequences }
    }
}

/// Retry budget per requested member when sampling neighborhoods.
pub const RETRY_FACTOR: usize = 10;

/// Draws up to `count` distinct prompts, each at most `radius` random edits
/// from `base`. Members are distinct by content hash and differ from the base.
/// With `radius == 0` the neighborhood is the base alone.
pub fn sample_neighborhood(
    base: &CanonicalArtifact,
    radius: usize,
    count: usize,
    edits: &EditSet,
    rng: &mut SimRng,
) -> Result<Neighborhood> {
    if count == 0 {
        return Err(Error::Argument("neighborhood size must be at least 1".into()));
    }
    let mut hood = Neighborhood { base: base.clone(), radius, members: Vec::new(), warnings: Vec::new() };
    if radius == 0 {
        hood.members.push(NeighborhoodMember { id: "base".into(), canonical: base.clone(), distance: 0 });
        return Ok(hood);
    }
    edits.validate()?;
    let base_seq = ClauseSequence::from(base);
    let mut seen: HashSet<u64> = HashSet::from([base.content_hash]);
    let budget = RETRY_FACTOR * count;
    let mut attempts = 0;
    while hood.members.len() < count && attempts < budget {
        attempts += 1;
        let n_edits = rng.gen_range(1..=radius);
        let mut seq = base.clause_sequence.clone();
        for _ in 0..n_edits {
            edits.apply_random(&mut seq, rng);
        }
        let candidate = CanonicalArtifact::from_normalized_clauses(seq)?;
        if !seen.insert(candidate.content_hash) {
            continue;
        }
        let distance = edit_distance(&base_seq, &ClauseSequence::from(&candidate));
        hood.members.push(NeighborhoodMember {
            id: format!("p{:016x}", candidate.content_hash),
            canonical: candidate,
            distance,
        });
    }
    if hood.members.len() < count {
        hood.warnings.push(format!(
            "only {} distinct members after {attempts} attempts (requested {count})",
            hood.members.len()
        ));
    }
    Ok(hood)
}

/// Scaled Euclidean distance between knob vectors: each coordinate difference
/// is divided by its typical tuning increment.
pub fn knob_metric(theta_a: &[f64], theta_b: &[f64], scale: &[f64]) -> Result<f64> {
    if theta_a.len() != theta_b.len() || theta_a.len() != scale.len() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {}, {}, scale {}",
            theta_a.len(),
            theta_b.len(),
            scale.len()
        )));
    }
    if scale.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Argument("knob scales must be positive".into()));
    }
    Ok(theta_a
        .iter()
        .zip(theta_b)
        .zip(scale)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Clause edit distance between artifacts looked up by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClauseEditMetric {
    pub sequences: BTreeMap<String, ClauseSequence>,
}

impl ArtifactMetric for ClauseEditMetric {
    fn distance(&self, a: &str, b: &str) -> Result<f64> {
        let get = |id: &str| {
            self.sequences
                .get(id)
                .ok_or_else(|| Error::Argument(format!("no clause sequence for artifact {id:?}")))
        };
        Ok(edit_distance(get(a)?, get(b)?) as f64)
    }
    fn tag(&self) -> String {
        "clause-edit".into()
    }
}

/// [`knob_metric`] between artifacts looked up by id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KnobMetric {
    pub knobs: BTreeMap<String, Vec<f64>>,
    pub scale: Vec<f64>,
}

impl ArtifactMetric for KnobMetric {
    fn distance(&self, a: &str, b: &str) -> Result<f64> {
        let get = |id: &str| {
            self.knobs
                .get(id)
                .ok_or_else(|| Error::Argument(format!("no knob vector for artifact {id:?}")))
        };
        knob_metric(get(a)?, get(b)?, &self.scale)
    }
    fn tag(&self) -> String {
        "knob".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn seq(xs: &[&str]) -> ClauseSequence {
        ClauseSequence::new(xs.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    fn canon(xs: &[&str]) -> CanonicalArtifact {
        CanonicalArtifact::from_normalized_clauses(xs.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(edit_distance(&seq(&["a", "b"]), &seq(&["a", "b"])), 0);
        assert_eq!(edit_distance(&seq(&["a", "b", "c"]), &seq(&["a", "c"])), 1);
        assert_eq!(edit_distance(&seq(&[]), &seq(&["x", "y"])), 2);
        assert_eq!(levenshtein(b"kitten", b"sitting"), 3);
        assert!(ClauseSequence::new(vec!["".into()]).is_err());
    }

    #[test]
    fn deletion_only_radius_one() {
        let base = canon(&["a", "b", "c"]);
        let hood = sample_neighborhood(&base, 1, 10, &EditSet::delete_only(), &mut seeded(1)).unwrap();
        let mut got: Vec<Vec<String>> = hood.members.iter().map(|m| m.canonical.clause_sequence.clone()).collect();
        got.sort();
        let want: Vec<Vec<String>> = vec![
            vec!["a".into(), "b".into()],
            vec!["a".into(), "c".into()],
            vec!["b".into(), "c".into()],
        ];
        assert_eq!(got, want);
        assert!(hood.members.iter().all(|m| m.distance == 1));
        assert_eq!(hood.warnings.len(), 1);
    }

    #[test]
    fn zero_radius_is_the_base() {
        let base = canon(&["a", "b"]);
        let hood = sample_neighborhood(&base, 0, 5, &EditSet::delete_only(), &mut seeded(2)).unwrap();
        assert_eq!(hood.members.len(), 1);
        assert_eq!(hood.members[0].canonical, base);
        assert_eq!(hood.members[0].distance, 0);
    }

    #[test]
    fn members_stay_within_radius() {
        let base = canon(&["be concise", "cite sources", "use bullet points", "avoid jargon"]);
        let pool = vec!["answer in english".to_string(), "ask clarifying questions".into(), "be concise".into()];
        for radius in 1..4 {
            let hood = sample_neighborhood(&base, radius, 40, &EditSet::all(pool.clone()), &mut seeded(radius as u64)).unwrap();
            let ids: HashSet<_> = hood.members.iter().map(|m| m.canonical.content_hash).collect();
            assert_eq!(ids.len(), hood.members.len());
            for m in &hood.members {
                assert!(m.distance <= radius && m.distance >= 1);
                assert_eq!(m.distance, edit_distance(&ClauseSequence::from(&base), &ClauseSequence::from(&m.canonical)));
            }
        }
    }

    #[test]
    fn empty_edit_sets_are_rejected() {
        let base = canon(&["a"]);
        let none = EditSet { insert: false, delete: false, substitute: false, clause_pool: vec![] };
        assert!(sample_neighborhood(&base, 1, 1, &none, &mut seeded(0)).is_err());
        let no_pool = EditSet { insert: true, delete: false, substitute: false, clause_pool: vec![] };
        assert!(sample_neighborhood(&base, 1, 1, &no_pool, &mut seeded(0)).is_err());
    }

    #[test]
    fn clause_pool_loading() {
        let pool = load_clause_pool("  Be *concise*\n\n- Cite   sources\n".as_bytes()).unwrap();
        assert_eq!(pool, vec!["be concise", "cite sources"]);
    }

    #[test]
    fn knob_examples() {
        assert_eq!(knob_metric(&[1.0, 2.0], &[1.0, 2.0], &[0.1, 1.0]).unwrap(), 0.0);
        assert_eq!(knob_metric(&[0.001, 32.0], &[0.002, 32.0], &[0.001, 16.0]).unwrap(), 1.0);
        assert!(knob_metric(&[1.0], &[1.0, 2.0], &[1.0]).is_err());
        assert!(knob_metric(&[1.0], &[2.0], &[0.0]).is_err());
    }

    fn clause_seq() -> impl Strategy<Value = Vec<u8>> {
        prop::collection::vec(0u8..4, 0..9)
    }

    proptest! {
        #[test]
        fn levenshtein_is_a_metric(a in clause_seq(), b in clause_seq(), c in clause_seq()) {
            let ab = levenshtein(&a, &b);
            prop_assert_eq!(ab, levenshtein(&b, &a));
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(levenshtein(&a, &c) <= ab + levenshtein(&b, &c));
            prop_assert!(ab <= a.len().max(b.len()));
            prop_assert!(ab >= a.len().abs_diff(b.len()));
        }

        #[test]
        fn knob_metric_matches_direct_sum(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3, 1e-3f64..10.0), 1..6)) {
            let a: Vec<f64> = v.iter().map(|t| t.0).collect();
            let b: Vec<f64> = v.iter().map(|t| t.1).collect();
            let s: Vec<f64> = v.iter().map(|t| t.2).collect();
            let got = knob_metric(&a, &b, &s).unwrap();
            // compensated summation as an independent reference
            let (mut sum, mut comp) = (0.0f64, 0.0f64);
            for i in 0..a.len() {
                let term = ((a[i] - b[i]) / s[i]) * ((a[i] - b[i]) / s[i]) - comp;
                let t = sum + term;
                comp = (t - sum) - term;
                sum = t;
            }
            let want = sum.sqrt();
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        }
    }
}
