//! Problem encodings: TSP and minimum vertex cover as objective/penalty QUBO
//! pairs, distance-matrix preprocessing, and TSPLIB input.

mod instance;
mod mvc;
mod mvodm;
pub mod tsp;
pub mod tsplib;

pub use instance::{DistanceMatrix, TspInstance, TSPLIB_MAX_EXCLUSIVE, TSPLIB_MIN_EXCLUSIVE};
pub use mvc::{encode_mvc, MvcInstance};
pub use mvodm::{mvodm_preprocess, off_diagonal_variance};
pub use tsp::{decode_permutation, decode_and_score, encode_tsp, tour_length, TspEncoding};
