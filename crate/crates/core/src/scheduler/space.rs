use serde::{Deserialize, Serialize};

use super::{savings_ratio, Candidate, SchedulerError};
use crate::model::{PathCarbonReport, TransferJob};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaChoice {
    pub job_uuid: String,
    pub chosen_source: String,
    pub chosen_avg_ci: f64,
    /// Highest known average among the candidates.
    pub worst_avg_ci: f64,
    pub savings_ratio: f64,
    pub candidates: Vec<Candidate>,
}

/// Chooses the replica whose path to the destination has the lowest average
/// intensity. Ties go to the lexicographically smallest id; replicas with no
/// known hop are never chosen.
pub fn schedule_space_shift(
    job: &TransferJob,
    replicas: &[(String, PathCarbonReport)],
) -> Result<ReplicaChoice, SchedulerError> {
    let candidates: Vec<Candidate> =
        replicas.iter().map(|(id, r)| Candidate::from_report(id.clone(), r)).collect();
    schedule_space_shift_candidates(job, candidates)
}

pub fn schedule_space_shift_candidates(
    job: &TransferJob,
    candidates: Vec<Candidate>,
) -> Result<ReplicaChoice, SchedulerError> {
    let known = || candidates.iter().filter_map(|c| c.average_intensity.map(|a| (c, a)));
    let (best, chosen) = known()
        .min_by(|(a, x), (b, y)| x.total_cmp(y).then_with(|| a.id.cmp(&b.id)))
        .ok_or(SchedulerError::NoViableReplica)?;
    let worst = known().map(|(_, a)| a).fold(f64::NEG_INFINITY, f64::max);
    Ok(ReplicaChoice {
        job_uuid: job.job_uuid.clone(),
        chosen_source: best.id.clone(),
        chosen_avg_ci: chosen,
        worst_avg_ci: worst,
        savings_ratio: savings_ratio(worst, chosen),
        candidates: candidates.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathcarbon::fixtures;
    use proptest::prelude::*;

    fn job() -> TransferJob {
        TransferJob {
            job_uuid: "j".into(),
            bytes: 10,
            source: "a".into(),
            destination: "b".into(),
            earliest_start: fixtures::t0(),
            deadline: fixtures::t0() + chrono::Duration::hours(1),
            estimated_throughput: 1.0,
        }
    }

    #[test]
    fn picks_lowest_and_reports_ratio() {
        let c = vec![
            Candidate::new("TACC", Some(1919.0), 5),
            Candidate::new("UC", Some(1.0), 7),
            Candidate::new("dark", None, 3),
        ];
        let d = schedule_space_shift_candidates(&job(), c).unwrap();
        assert_eq!(d.chosen_source, "UC");
        assert_eq!(d.savings_ratio, 1919.0);
        assert_eq!(d.candidates.len(), 3);
    }

    #[test]
    fn ties_and_errors() {
        let c = vec![Candidate::new("b", Some(5.0), 1), Candidate::new("a", Some(5.0), 9)];
        assert_eq!(schedule_space_shift_candidates(&job(), c).unwrap().chosen_source, "a");
        let c = vec![Candidate::new("b", None, 1)];
        assert!(matches!(schedule_space_shift_candidates(&job(), c), Err(SchedulerError::NoViableReplica)));
        assert!(matches!(schedule_space_shift_candidates(&job(), vec![]), Err(SchedulerError::NoViableReplica)));
    }

    #[test]
    fn from_reports() {
        let r = crate::pathcarbon::measure_path_carbon(
            &fixtures::path("198.51.100.2"),
            fixtures::t0(),
            &crate::pathcarbon::PathResolver::new(&fixtures::geo(), &fixtures::traces()),
        )
        .unwrap();
        let d = schedule_space_shift(&job(), &[("x".into(), r.clone())]).unwrap();
        assert_eq!(Some(d.chosen_avg_ci), r.average_intensity());
    }

    proptest! {
        #[test]
        fn matches_brute_force(vals in proptest::collection::vec(proptest::option::of(0u16..50), 1..12)) {
            let c: Vec<Candidate> = vals.iter().enumerate()
                .map(|(i, v)| Candidate::new(format!("r{i:02}"), v.map(f64::from), i))
                .collect();
            let mut best: Option<(f64, String)> = None;
            for cand in &c {
                if let Some(a) = cand.average_intensity {
                    if best.as_ref().map_or(true, |(b, id)| a < *b || (a == *b && cand.id < *id)) {
                        best = Some((a, cand.id.clone()));
                    }
                }
            }
            match (schedule_space_shift_candidates(&job(), c), best) {
                (Ok(d), Some((_, id))) => prop_assert_eq!(d.chosen_source, id),
                (Err(SchedulerError::NoViableReplica), None) => {}
                (other, want) => prop_assert!(false, "{:?} vs {:?}", other, want),
            }
        }
    }
}
