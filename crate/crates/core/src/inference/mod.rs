//! Hypothesis tests for calibration.

mod brownian;
mod hosmer_lemeshow;
mod logistic;
mod monte_carlo;

pub use brownian::{
    bb_test, bm_test, conditional_bm_test, conditional_from_statistics, fisher_combine,
    fisher_combine_ln, BbTestResult, BmTestResult, ConditionalBmResult,
};
pub use hosmer_lemeshow::{
    group_table, hl_statistic, hosmer_lemeshow_test, quantile_groups, DfRule, HlGroup,
    HlTestResult,
};
pub use logistic::{
    deviance, expit, fit_logistic, fit_logistic_recalibration, logit, null_deviance,
    weak_calibration_lr_test, IrlsOptions, LogisticFit, RecalibrationFit, WeakCalibResult,
};
pub use monte_carlo::{
    monte_carlo_test, monte_carlo_test_with, simulate_null, McStatistic, McTestResult, NullSample,
};

/// Total variance below which the asymptotic p-values are unreliable.
pub const EFFECTIVE_SIZE_THRESHOLD: f64 = 30.0;
