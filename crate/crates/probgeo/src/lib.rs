//! Geometry of probability ensembles on uniform grids.
//!
//! This crate implements, numerically, the chain of structures that connects
//! statistics on a configuration space to quantum dynamics:
//!
//! * **Information geometry** — the Fisher–Rao metric of a family of
//!   probability densities, its line element, and the diagonal kernel it
//!   induces over the density itself ([`infogeo`]).
//! * **Canonical structure** — densities `P` paired with conjugate phase
//!   fields `S`, functional Poisson brackets, admissible observables, and the
//!   generators of the Galilean group ([`canonical`]).
//! * **Kähler structure** — the pointwise compatibility algebra between the
//!   symplectic form, a metric over the field space, and a complex structure,
//!   together with the complex chart `psi = sqrt(P) exp(iS/alpha)` in which all
//!   three become constant ([`kahler`], [`fields`]).
//! * **Dynamics** — the free-ensemble Hamiltonian fixed by Galilean symmetry,
//!   integrated both directly in `(P, S)` and through an independent
//!   wavefunction oracle ([`dynamics`]).
//! * **Hilbert product** — the inner product the flat complex chart induces,
//!   equal to the usual `integral of conj(phi) * psi` ([`hilbert`]).
//!
//! Everything is built over the small uniform-grid toolkit in [`grid`]:
//! central differences, midpoint quadrature, and periodic or vanishing
//! boundaries. Delta-function kernels are represented by `identity /
//! cell_volume`, so all "functional" objects reduce to dense fields and
//! pointwise 2x2 blocks — full field-space matrices are never materialized.
//!
//! The runnable examples are the front door:
//!
//! * `cargo run --example fisher_metrics` — translation-family Fisher matrix,
//!   line element, and the diagonal kernel agreeing with each other.
//! * `cargo run --example madelung_transform` — the polar field map and its
//!   inverse, gauge covariance, phase unwrapping.
//! * `cargo run --example kahler_blocks` — pointwise triples, their residuals,
//!   defect detection, and the flat complex chart.
//! * `cargo run --example matrix_compatibility` — the finite-dimensional
//!   construction of a complex structure from a symplectic form and a metric.
//! * `cargo run --example galilean_algebra` — the ten generators and their
//!   bracket table on random ensembles.
//! * `cargo run --example wavepacket_spreading` — free quantum evolution vs
//!   the closed-form width law.
//! * `cargo run --example classical_advection` — the classical limit
//!   transporting a packet rigidly.
//! * `cargo run --example schrodinger_crosscheck` — direct `(P, S)` integration
//!   against the wavefunction oracle.
//! * `cargo run --example dirac_product` — the induced inner product, its two
//!   evaluation routes, and its invariance under evolution.
//!
//! The `probgeo` binary drives the same machinery from config files:
//! `probgeo run <config>`, `probgeo validate <config>`, and
//! `probgeo list-scenarios`.

#![forbid(unsafe_code)]
// Per-axis loops (`for a in 0..dim`) and stride arithmetic mirror the way the
// stencil math is written; iterator-chain rewrites of those obscure it.
#![allow(clippy::needless_range_loop, clippy::manual_is_multiple_of)]

pub mod canonical;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod hilbert;
pub mod infogeo;
pub mod kahler;
pub mod scenario;

pub use error::{Error, Result};
