//! Exact q-expansions of level-one modular forms and Hecke eigenvalues.

pub mod cache;
pub mod eigen;
pub mod ntt;
pub mod series;

pub use cache::{default_cache_dir, eigen_table_cached};
pub use eigen::{eigen_table, lambda_squares, EigenTable, HeckeSeries, ADMITTED_WEIGHTS};
pub use series::{delta, eisenstein, hecke_apply, victor_miller_basis, QSeries};
