//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod gradcheck;

use baroslip::simgen::{default_grid, generate_corpus, SimConfig};
use baroslip::Corpus;

pub fn default_corpus() -> Corpus {
    generate_corpus(&SimConfig::default(), &default_grid()).expect("default corpus generates")
}
