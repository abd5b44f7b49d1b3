//! Growth panels and growth regressions.

mod ols;
mod panel;

pub use ols::{
    collinear_columns, growth_design, ols, ols_robust, regress, within_transform, Coefficient,
    Covariance, Design, OlsFit, RegressionOptions, RegressionResult, WithinDesign, INTERCEPT,
};
pub use panel::{
    annualized_log_growth, build_growth_panel, suggest_variable, Attrition, FitnessObs,
    FitnessSeries, GrowthPanel, GrowthRow, PanelOptions, RankMode, Variable, DRIVER_REGRESSORS,
    FITNESS_REGRESSOR,
};
