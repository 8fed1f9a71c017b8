//! Quantum-graph simulation engine: lattice graphs with δ couplings, their
//! closed spectra and scattering states, a finite-difference billiard as the
//! continuum reference, and the analysis layer tying the two together.
//!
//! The central objects are [`graph::MetricGraph`] (vertices, edges with arc
//! length and optional potentials, Dirichlet boundary copies, leads) and the
//! vertex reduction in [`dual`], which turns the differential problem on
//! edges into a finite linear system over interior vertex values. Everything
//! else — eigenmodes, transmission, nodal domains, convergence ladders —
//! is built on those two.

pub mod analysis;
pub mod billiard;
pub mod dual;
pub mod edge;
pub mod error;
pub mod export;
pub mod graph;
pub mod linalg;
pub mod scattering;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{Edge, Lead, LeadDirection, MetricGraph, Potential, Vertex, VertexId, VertexKind};
pub use linalg::set_sequential_backend;
