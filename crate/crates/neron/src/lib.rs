//! Component groups and character groups of Néron models of generalized
//! Jacobians from combinatorial special-fibre data, with instantiations
//! for the modular curves X₀(pM) (p ∤ M) and X₀(p²).

pub mod abelian;
pub mod graphs;
pub mod modular;
pub mod neron;
pub mod supersingular;
