//! Transient pressurized flow in a single pipe.
//!
//! * [`physics`]: model constants, geometry, mesh, state and head/entropy diagnostics.
//! * [`kinetic`]: the kinetic finite-volume scheme with reflection/transmission
//!   upwinding of the bottom topography.
//! * [`scenarios`]: boundary laws, steady-state initialisation and the
//!   reservoir/pipe/valve water-hammer setup.
//! * [`moc`]: a method-of-characteristics solver for the linear water-hammer
//!   equations, used as a reference.

pub mod kinetic;
pub mod physics;
pub mod moc;
pub mod scenarios;
