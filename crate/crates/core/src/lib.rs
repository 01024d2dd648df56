//! Carbon intensity of end-to-end network paths and carbon-aware scheduling
//! of bulk data transfers.
//!
//! The pipeline runs path discovery ([`discovery`]), per-hop geolocation
//! ([`geo`]), grid carbon lookup ([`carbon`]) and aggregation into path
//! reports ([`pathcarbon`]). The [`scheduler`] shifts transfers in time, in
//! space (replica choice) and across overlay transfer nodes, and the
//! [`sim`] module replays all of it against recorded or synthetic traces.

pub mod carbon;
pub mod cli;
pub mod clock;
pub mod config;
pub mod discovery;
pub mod geo;
pub mod http;
pub mod metrics;
pub mod model;
pub mod pathcarbon;
pub mod scheduler;
pub mod sim;
pub mod store;

pub use clock::{Clock, SimClock, SystemClock};
pub use model::*;
