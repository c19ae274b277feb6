//! Drift detection: the two-window word-gram detector plus ADWIN and EDDM
//! baselines over the prediction-error stream.

pub mod adwin;
pub mod chi2;
pub mod eddm;
pub mod window;

pub use adwin::Adwin;
pub use chi2::{chi2_pvalue, chi2_sf, chi2_table, chi2_test, sum_wordgrams, Chi2Outcome, GramVector, MIN_COLUMN_COUNT};
pub use eddm::{DetectorSignal, Eddm};
pub use window::{DriftReport, LabelHistory, WindowAction, WindowConfig, WindowState};
