//! Blind pairwise human evaluation: shuffled rater bundles, majority voting
//! and Fleiss' kappa.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{EvalCase, EvalError};
use crate::dialogue::Utterance;
use crate::rng::SeededRng;
use crate::scalar::Scalar;

/// System name that resolves to a case's reference reply when the case has
/// no candidate of that name.
pub const REFERENCE_SYSTEM: &str = "reference";

/// Rater-facing view of one case: responses under opaque slot labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentBundle {
    pub case_id: String,
    pub history: Vec<Utterance>,
    pub responses: Vec<BundleResponse>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleResponse {
    pub slot: String,
    pub text: String,
}

/// Slot-to-system mapping for one bundle. Kept in a separate file so that
/// raters never see it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleKey {
    pub case_id: String,
    pub slots: BTreeMap<String, String>,
}

fn slot_label(i: usize) -> String {
    char::from(b'A' + i as u8).to_string()
}

/// One bundle per case with the systems' responses in an independent,
/// seeded uniform order. Each case's order depends only on the seed and its
/// case id.
pub fn make_judgment_bundles(cases: &[EvalCase], systems: &[&str], seed: u64) -> Result<(Vec<JudgmentBundle>, Vec<BundleKey>), EvalError> {
    if !(2..=26).contains(&systems.len()) {
        return Err(EvalError::InvalidVotes(format!("need 2 to 26 systems, got {}", systems.len())));
    }
    let mut bundles = Vec::with_capacity(cases.len());
    let mut keys = Vec::with_capacity(cases.len());
    for case in cases {
        let mut entries: Vec<(&str, String)> = systems
            .iter()
            .map(|&s| {
                let text = match case.response(s) {
                    Ok(t) => t.to_string(),
                    Err(_) if s == REFERENCE_SYSTEM => case.reference.clone(),
                    Err(e) => return Err(e),
                };
                Ok((s, text))
            })
            .collect::<Result<_, EvalError>>()?;
        SeededRng::derived(seed, &format!("bundle:{}", case.case_id)).shuffle(&mut entries);
        let mut slots = BTreeMap::new();
        let mut responses = Vec::with_capacity(entries.len());
        for (i, (system, text)) in entries.into_iter().enumerate() {
            slots.insert(slot_label(i), system.to_string());
            responses.push(BundleResponse { slot: slot_label(i), text });
        }
        bundles.push(JudgmentBundle {
            case_id: case.case_id.clone(),
            history: case.history.clone(),
            responses,
        });
        keys.push(BundleKey {
            case_id: case.case_id.clone(),
            slots,
        });
    }
    Ok((bundles, keys))
}

/// A rater's preferred slot for one case, as filled into a vote sheet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotVote {
    pub case_id: String,
    pub rater: String,
    pub preferred: String,
}

/// A vote after the hidden key has been applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemVote {
    pub case_id: String,
    pub rater: String,
    pub winner: String,
}

pub fn unblind(votes: &[SlotVote], keys: &[BundleKey]) -> Result<Vec<SystemVote>, EvalError> {
    let by_case: BTreeMap<&str, &BundleKey> = keys.iter().map(|k| (k.case_id.as_str(), k)).collect();
    votes
        .iter()
        .map(|v| {
            let key = by_case
                .get(v.case_id.as_str())
                .ok_or_else(|| EvalError::InvalidVotes(format!("no key for case `{}`", v.case_id)))?;
            let winner = key
                .slots
                .get(&v.preferred)
                .ok_or_else(|| EvalError::InvalidVotes(format!("case `{}` has no slot `{}`", v.case_id, v.preferred)))?;
            Ok(SystemVote {
                case_id: v.case_id.clone(),
                rater: v.rater.clone(),
                winner: winner.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteSummary {
    pub system_a: String,
    pub system_b: String,
    pub cases: usize,
    pub raters: usize,
    pub wins: usize,
    pub losses: usize,
    /// Share of cases won by `system_a`.
    pub win_rate: f64,
    pub loss_rate: f64,
}

/// Groups votes into a case x rater matrix of winners, checking that every
/// rater voted exactly once on every case.
pub fn vote_matrix(votes: &[SystemVote]) -> Result<(Vec<String>, Vec<Vec<String>>), EvalError> {
    let raters: BTreeSet<&str> = votes.iter().map(|v| v.rater.as_str()).collect();
    let mut cases: BTreeMap<&str, BTreeMap<&str, &str>> = BTreeMap::new();
    for v in votes {
        let row = cases.entry(&v.case_id).or_default();
        if row.insert(&v.rater, &v.winner).is_some() {
            return Err(EvalError::InvalidVotes(format!("rater `{}` voted twice on case `{}`", v.rater, v.case_id)));
        }
    }
    let mut ids = Vec::with_capacity(cases.len());
    let mut matrix = Vec::with_capacity(cases.len());
    for (case, row) in cases {
        if let Some(missing) = raters.iter().find(|r| !row.contains_key(*r)) {
            return Err(EvalError::InvalidVotes(format!("rater `{missing}` has no vote on case `{case}`")));
        }
        ids.push(case.to_string());
        matrix.push(row.values().map(|w| w.to_string()).collect());
    }
    Ok((ids, matrix))
}

/// Per-case majority between `system_a` and `system_b`, then win/loss rates
/// over cases. Requires an odd panel so that every case has a decision.
pub fn aggregate_votes(votes: &[SystemVote], system_a: &str, system_b: &str) -> Result<VoteSummary, EvalError> {
    if votes.is_empty() {
        return Err(EvalError::InvalidVotes("no votes".into()));
    }
    if let Some(v) = votes.iter().find(|v| v.winner != system_a && v.winner != system_b) {
        return Err(EvalError::InvalidVotes(format!(
            "vote for `{}` on case `{}` is neither `{system_a}` nor `{system_b}`",
            v.winner, v.case_id
        )));
    }
    let (_, matrix) = vote_matrix(votes)?;
    let raters = matrix[0].len();
    if raters % 2 == 0 {
        return Err(EvalError::InvalidVotes(format!("majority voting needs an odd rater count, got {raters}")));
    }
    let wins = matrix
        .iter()
        .filter(|row| row.iter().filter(|w| *w == system_a).count() * 2 > raters)
        .count();
    let cases = matrix.len();
    let losses = cases - wins;
    Ok(VoteSummary {
        system_a: system_a.to_string(),
        system_b: system_b.to_string(),
        cases,
        raters,
        wins,
        losses,
        win_rate: wins as f64 / cases as f64,
        loss_rate: losses as f64 / cases as f64,
    })
}

/// Fleiss' kappa for a case x rater matrix of category labels. Every case
/// must carry the same number (at least 2) of ratings.
pub fn fleiss_kappa<S: Scalar, L: Ord>(ratings: &[Vec<L>]) -> Result<S, EvalError> {
    let first = ratings.first().ok_or_else(|| EvalError::InvalidVotes("no rated cases".into()))?;
    let n = first.len();
    if n < 2 {
        return Err(EvalError::InvalidVotes("kappa needs at least 2 raters per case".into()));
    }
    if let Some(i) = ratings.iter().position(|r| r.len() != n) {
        return Err(EvalError::InvalidVotes(format!("case {i} has {} ratings, expected {n}", ratings[i].len())));
    }
    let categories: BTreeSet<&L> = ratings.iter().flatten().collect();
    let index: BTreeMap<&L, usize> = categories.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut column_totals = vec![0usize; categories.len()];
    let mut agreement_sum = S::zero();
    let nf = S::from_usize_lossy(n);
    for row in ratings {
        let mut counts = vec![0usize; categories.len()];
        for label in row {
            counts[index[label]] += 1;
        }
        let sq: usize = counts.iter().map(|c| c * c).sum();
        agreement_sum = agreement_sum + S::from_usize_lossy(sq - n) / (nf * (nf - S::one()));
        for (t, c) in column_totals.iter_mut().zip(&counts) {
            *t += c;
        }
    }
    let cases = S::from_usize_lossy(ratings.len());
    let p_bar = agreement_sum / cases;
    let all = S::from_usize_lossy(ratings.len() * n);
    let p_e: S = column_totals
        .iter()
        .map(|&t| {
            let p = S::from_usize_lossy(t) / all;
            p * p
        })
        .sum();
    if p_e == S::one() {
        // A single observed category: agreement is perfect by construction.
        return if p_bar == S::one() {
            Ok(S::one())
        } else {
            Err(EvalError::InvalidVotes("chance agreement is 1 but observed agreement is not".into()))
        };
    }
    Ok((p_bar - p_e) / (S::one() - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(id: &str) -> EvalCase {
        EvalCase {
            case_id: id.into(),
            history: vec![Utterance::help_seeker("你好").unwrap()],
            reference: "ref".into(),
            candidates: [("base".to_string(), "b".to_string()), ("tuned".to_string(), "t".to_string())].into(),
        }
    }

    fn votes(rows: &[&[&str]]) -> Vec<SystemVote> {
        rows.iter()
            .enumerate()
            .flat_map(|(c, row)| {
                row.iter().enumerate().map(move |(r, w)| SystemVote {
                    case_id: format!("c{c:02}"),
                    rater: format!("r{r}"),
                    winner: w.to_string(),
                })
            })
            .collect()
    }

    #[test]
    fn bundles_shuffle_and_hide() {
        let cases: Vec<EvalCase> = (0..100).map(|i| case(&i.to_string())).collect();
        let systems = ["base", "tuned", REFERENCE_SYSTEM];
        let (b, k) = make_judgment_bundles(&cases, &systems, 7).unwrap();
        assert_eq!((b.len(), k.len()), (100, 100));
        for (bundle, key) in b.iter().zip(&k) {
            let texts: BTreeSet<&str> = bundle.responses.iter().map(|r| r.text.as_str()).collect();
            assert_eq!(texts, BTreeSet::from(["b", "t", "ref"]));
            let systems_in_key: BTreeSet<&str> = key.slots.values().map(String::as_str).collect();
            assert_eq!(systems_in_key, BTreeSet::from(systems));
        }
        assert_eq!(make_judgment_bundles(&cases, &systems, 7).unwrap().0, b);
        assert_ne!(make_judgment_bundles(&cases, &systems, 8).unwrap().0, b);
        assert!(make_judgment_bundles(&cases, &["base", "missing"], 7).is_err());
    }

    #[test]
    fn unblinding_maps_slots() {
        let (_, keys) = make_judgment_bundles(&[case("x")], &["base", "tuned"], 1).unwrap();
        let v = SlotVote { case_id: "x".into(), rater: "r".into(), preferred: "A".into() };
        let sv = unblind(&[v], &keys).unwrap();
        assert_eq!(sv[0].winner, keys[0].slots["A"]);
    }

    #[test]
    fn majority_and_rates() {
        let s = aggregate_votes(&votes(&[&["A", "A", "B"]]), "A", "B").unwrap();
        assert_eq!((s.wins, s.win_rate), (1, 1.0));
        let sheet = votes(&[
            &["A", "A", "A"],
            &["A", "B", "A"],
            &["B", "B", "A"],
            &["B", "B", "B"],
            &["A", "A", "B"],
            &["B", "A", "B"],
            &["A", "A", "A"],
            &["A", "B", "B"],
            &["B", "A", "A"],
            &["A", "A", "A"],
        ]);
        let s = aggregate_votes(&sheet, "A", "B").unwrap();
        assert_eq!((s.wins, s.losses), (6, 4));
        assert_eq!((s.win_rate, s.loss_rate), (0.6, 0.4));
        assert!(aggregate_votes(&votes(&[&["A", "B"]]), "A", "B").is_err());
        let mut missing = votes(&[&["A", "A", "A"], &["A", "A", "A"]]);
        missing.pop();
        assert!(aggregate_votes(&missing, "A", "B").is_err());
    }

    #[test]
    fn kappa_hand_matrix() {
        // Rows: (A,A,A) (A,A,B) (B,B,B) (A,B,B).
        // P_i = 1, 1/3, 1, 1/3 -> P-bar = 2/3; p_A = p_B = 1/2 -> Pe = 1/2.
        let m = vec![vec!['A', 'A', 'A'], vec!['A', 'A', 'B'], vec!['B', 'B', 'B'], vec!['A', 'B', 'B']];
        let k: f64 = fleiss_kappa(&m).unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-12);
        let perfect = vec![vec![1, 1], vec![2, 2]];
        assert_eq!(fleiss_kappa::<f32, _>(&perfect).unwrap(), 1.0);
        assert_eq!(fleiss_kappa::<f64, _>(&[vec![3, 3, 3]]).unwrap(), 1.0);
        assert!(fleiss_kappa::<f64, i32>(&[vec![1, 2], vec![1]]).is_err());
    }
}
