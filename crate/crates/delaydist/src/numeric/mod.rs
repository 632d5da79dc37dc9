//! Shared numerical machinery: quadrature rules, special-function helpers,
//! derivative-free optimization and finite-difference curvature.

pub mod optim;
pub mod quadrature;
pub mod special;
