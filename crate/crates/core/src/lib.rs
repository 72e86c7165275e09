pub mod align;
pub mod analyze;
pub mod codec;
pub mod ecc;
pub mod error;
pub mod index_tree;
pub mod partition;
pub mod pipeline;
pub mod scenario;
pub mod updates;
pub mod wetlab;

pub use codec::{Base, DnaString, RandomizerSeed};
pub use error::{Error, Result};
