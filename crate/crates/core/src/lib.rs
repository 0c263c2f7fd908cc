//! Covariants of binary forms: transvectants, evaluation programs, dimension
//! formulas, Hilbert bases of the Gordan Diophantine systems and mod-p
//! rank verification of generating sets.

pub mod catalog;
pub mod diophantine;
pub mod gordan;
pub mod hilbert;
pub mod program;
pub mod rankcheck;
pub mod relations;
pub mod scalar_forms;
