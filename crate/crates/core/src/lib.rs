//! Preposition sense disambiguation with a context encoder pretrained on
//! foreign-preposition prediction over word-aligned bitext.
//!
//! The numeric core is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix it to `f64`, which the command line uses.

pub mod atomic;
pub mod bitext;
pub mod cli;
pub mod corpus;
pub mod encoder;
pub mod features;
pub mod models;
pub mod nn;
pub mod scalar;
pub mod training;

pub use scalar::Scalar;

pub type Real = f64;
pub type Graph = nn::Graph<Real>;
pub type Parameter = nn::Parameter<Real>;
pub type ParamStore = nn::ParamStore<Real>;
pub type SenseModel = models::SenseModel<Real>;
pub type PretrainModel = models::PretrainModel<Real>;
pub type Ensemble = models::Ensemble<Real>;
