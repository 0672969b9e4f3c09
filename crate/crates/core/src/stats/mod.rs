//! Statistical kernel: distribution functions, two-sample t-tests,
//! logistic regression and likelihood-ratio tests.

pub mod distributions;
pub mod logistic;
pub mod rng;
pub mod ttest;

pub use distributions::{chi_square_sf, normal_cdf, t_sf};
pub use logistic::{fit_grouped, fit_logistic, lr_test, Design, GroupedData, LogisticFit};
pub use rng::Stream;
pub use ttest::{welch_t_test, Tail, TestResult};
