//! Exact computational checks around the maximum number of 5-cycles in
//! triangle-free graphs.

pub mod canon;
pub mod certificate;
pub mod density;
pub mod enumerate;
pub mod error;
pub mod flags;
pub mod graph;
pub mod graph6;
pub mod linalg;
pub mod rational;
pub mod sdp;

pub use error::{Error, Result};
