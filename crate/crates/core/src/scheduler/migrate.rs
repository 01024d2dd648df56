use serde::{Deserialize, Serialize};

use crate::model::Timestamp;

/// A transfer in flight on an overlay node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveTransfer {
    pub job_uuid: String,
    pub current_ftn: String,
    pub remaining_bytes: u64,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MigrationEvent {
    pub at: Timestamp,
    pub from_ftn: String,
    pub to_ftn: String,
    pub remaining_bytes: u64,
}

/// Moves the transfer when its current node's path intensity is above
/// `threshold` and some other node is at or below it (and strictly cleaner
/// than the current one). The cleanest such node wins, ties by smaller id.
///
/// `ftn_intensity` holds the current path intensity of each node, including
/// the current one; nodes without a known value are simply left out.
pub fn migrate_if_exceeded(
    active: &ActiveTransfer,
    ftn_intensity: &[(String, f64)],
    threshold: f64,
) -> Option<MigrationEvent> {
    let current = ftn_intensity.iter().find(|(id, _)| *id == active.current_ftn)?.1;
    if current <= threshold {
        return None;
    }
    let (to, _) = ftn_intensity
        .iter()
        .filter(|(id, ci)| *id != active.current_ftn && *ci <= threshold && *ci < current)
        .min_by(|(a, x), (b, y)| x.total_cmp(y).then_with(|| a.cmp(b)))?;
    Some(MigrationEvent {
        at: active.at,
        from_ftn: active.current_ftn.clone(),
        to_ftn: to.clone(),
        remaining_bytes: active.remaining_bytes,
    })
}
