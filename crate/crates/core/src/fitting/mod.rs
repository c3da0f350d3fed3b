//! Lineshape and decay fits, plus the scaling collapse.

pub mod collapse;
mod lineshape;
pub mod solver;

pub use collapse::{
    collapse, collapse_coordinates, loglog_fit, recover_operating_point, CollapseRow, CollapseTable, Family, LogLogFit,
    Measurement, Volumes,
};
pub use lineshape::{
    fit_exp_decay, fit_lorentzian, width_ratio, DecayPoint, DecayTrace, ExpDecayModel, FitResult, LorentzianModel,
    Spectrum, SpectrumPoint,
};
pub use solver::{Model, Solution, SolverOptions};
