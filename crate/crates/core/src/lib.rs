#![cfg_attr(not(feature = "std"), no_std)]
#![doc = include_str!("../README.md")]

extern crate alloc;

pub mod basins;
pub mod cycles;
pub mod elimination;
pub mod error;
pub mod fatou;
pub mod germs;
pub mod index;
pub mod orbits;
pub mod sampling;
pub mod scalar;
pub mod series;

pub use error::{Error, Result};
pub use index::MultiIndex;
pub use num_complex::Complex64;
pub use scalar::{ComplexDD, DoubleDouble, Scalar};
pub use series::{compose, evaluate_series, invert, multiply, Series, TruncatedSeriesMap};
