//! World and annotator simulation: ground-truth routines with consistent
//! synthetic sensor streams, and the four prototypical annotator behaviors.

pub mod annotator;
pub mod world;

pub use annotator::{AnnotatorKind, AnnotatorProfile};
pub use world::{generate_world, MissingnessConfig, UserWorld, WorldConfig};
