//! Minimum revisit-time closed walks for a single monitoring vehicle.
//!
//! Given `n` targets with metric travel times and a visit budget `k >= n`,
//! find a closed walk of exactly `k` visits that minimizes the longest time
//! any target waits between consecutive visits when the walk is repeated.
//!
//! * [`instance`]: problem data, ingestion, generation, metric checks.
//! * [`walk`]: walk values and the algebra used by the constructions.
//! * [`solver`]: Held-Karp, brute force and branch-and-bound.
//! * [`constructor`]: optimal walks for any `k` from the base table.
//! * [`milp`]: the mixed-integer model, LP export and assignment checks.
//! * [`checks`]: structural property suite over solved instances.

pub mod instance;
pub mod walk;
pub mod solver;
pub mod constructor;
pub mod milp;
pub mod checks;

pub use instance::{load_instance, random_euclidean_instance, Instance, InstanceError, Target, Time};
pub use walk::{RevisitTime, Subwalk, Walk, WalkError};
