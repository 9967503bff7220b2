//! Independent ground-truth engines used to check everything else.

pub mod dense;
pub mod honest;
pub mod sparse;
pub mod stabilizer;

pub use dense::DenseState;
pub use honest::{honest_distribution, HonestOracle};
pub use sparse::SparseState;
pub use stabilizer::Tableau;
