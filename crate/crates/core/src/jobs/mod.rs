//! Job library: protocols used to exercise the schedulers.

pub mod graph;
pub mod histogram;
pub mod leader;
pub mod mis;
pub mod pointer_jumping;

pub use graph::Graph;
pub use histogram::Histogram;
pub use leader::LeaderAggregation;
pub use mis::Mis;
pub use pointer_jumping::PointerJumping;
