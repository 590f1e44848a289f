//! The CAGE joint model: LF metadata, observations, parameters, potentials
//! and exact inference.

pub mod cage;
pub mod lf;
pub mod observations;
pub mod params;
pub mod posterior;
pub mod potentials;
