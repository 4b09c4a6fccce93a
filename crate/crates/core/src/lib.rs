//! Aggregation of distributed energy resources behind a distribution feeder.
//!
//! The crate models a distribution network with PV, storage and flexible
//! buildings as a linear polyhedron, projects it onto the per-slot gate power
//! and total cost by progressive vertex enumeration, and dispatches either the
//! full model or its aggregate against a grid-side thermal unit.

pub mod dispatch;
pub mod lin_network;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod polytope;
pub mod pve;
