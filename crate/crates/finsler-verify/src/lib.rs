//! Scenario-driven verification harness for the Finsler deformation
//! engine: declarative scenario configs, the four theorem checks with
//! their admissibility and symmetry gates, and report emission.

pub mod checks;
pub mod emit;
pub mod report;
pub mod scenario;
