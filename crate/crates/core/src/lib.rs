//! Simulation toolkit for deterministic photon exchange between two driven
//! qubit–cavity nodes joined by a lossy one-way line.

pub mod calibration;
pub mod cascaded;
pub mod hilbert;
pub mod matrix;
pub mod model;
pub mod pulse;
pub mod semiclassical;
pub mod table;
pub mod tomography;
