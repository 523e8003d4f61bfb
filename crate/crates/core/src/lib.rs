//! Simulation and numerical analysis of random bipartite geometric graphs.
//!
//! The model: two independent Poisson point processes on a cubic window —
//! *agents* with intensity `lambda` and *hubs* with intensity `mu` — are
//! joined by independent agent-hub edges, where a pair at distance `r`
//! connects with probability `f(r)` for a radial connection function `f`.
//! Contacts between agents arise only through shared hubs, which makes the
//! two-hop structure of the graph the object of interest: the number `M` of
//! distinct agents met through hubs, the number `N` of two-edge paths, and
//! whether hub-mediated contact percolates.
//!
//! Modules:
//!
//! * [`pointprocess`] — windows, PPP sampling, Palm conditioning;
//! * [`connection`] — connection-function families and the dispersion
//!   transform;
//! * [`graph`] — graph construction (spatial hashing + pair-keyed Bernoulli
//!   thinning) and component labelling;
//! * [`degrees`] — Monte Carlo estimators of typical-point observables;
//! * [`theory`] — closed forms and quadrature for the same observables;
//! * [`percolation`] — finite-size percolation experiments and threshold
//!   estimation;
//! * [`rng`], [`stats`] — deterministic randomness and numeric helpers.

pub mod connection;
pub mod degrees;
pub mod error;
pub mod graph;
pub mod percolation;
pub mod pointprocess;
pub mod rng;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
