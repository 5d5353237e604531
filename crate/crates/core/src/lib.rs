//! Compositional systems modeling over the category of wiring diagrams.
//!
//! [`wiring`] holds the category itself. The remaining modules are algebras
//! over it: [`behavior`] (Moore machines and LTI systems), [`contracts`]
//! (static relations on port values), [`temporal`] (discrete-time sections and
//! time contracts), and [`security`] (an attacker's knowledge and tests).
//! [`dsl`] reads and writes the model description language.

mod error;

pub mod behavior;
pub mod contracts;
pub mod dsl;
pub mod security;
pub mod space;
pub mod temporal;
pub mod wiring;

pub use error::{Error, Result};
pub use wiring::{Interface, PortRef, PortType, WiringDiagram};
