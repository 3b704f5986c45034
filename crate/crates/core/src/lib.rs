//! Finite presheaf topoi over finite posets, with a Kripke-Joyal forcing
//! evaluator for a higher-order intuitionistic language.

pub mod poset;
pub mod presheaf;
pub mod logic;
pub mod model;
pub mod finiteness;
pub mod forcing;
pub mod verify;
pub mod cli;
