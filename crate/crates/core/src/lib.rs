//! Flags on the discrete cube, coset entropies, the rho-equations and
//! optimal systems.

pub mod entropy;
pub mod flags;
pub mod optmeas;
pub mod qlinalg;
pub mod rho;
