//! Center-of-mass radial distribution functions and coordination numbers
//! for every pair of molecule types in a DL_POLY trajectory.

pub mod geometry;
pub mod rdf_engine;
pub mod trajectory_io;
pub mod unfolding;
pub mod synthetic;
pub mod cli;
