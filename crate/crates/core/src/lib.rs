pub mod error;
pub mod params;
pub mod special_fn;

pub use error::{Error, Result};
pub use params::{CevParams, SabrParams, VolParams};
pub mod quadrature;
pub mod cev;
pub mod timechange;
pub mod mass;
pub mod smalltime;
pub mod pricing;
pub mod smile_asym;
pub mod montecarlo;
