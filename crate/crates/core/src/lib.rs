//! Numerical toolkit for matings of post-critically finite maps whose marked
//! superattracting basins have Jordan-curve boundaries.

pub mod boettcher;
pub mod config;
pub mod curves;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod gluing;
pub mod newton;
pub mod poly;
pub mod portrait;
pub mod rational;
pub mod realizer;
pub mod render;
pub mod sphere;
pub mod verify;

pub use error::{Error, Result};
pub use rational::RationalMap;
pub use sphere::{Point, C64};
