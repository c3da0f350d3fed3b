//! Inhomogeneous Gutzwiller mean-field dynamics of a driven three-level lattice.
//!
//! Each site carries its own 3×3 density matrix over (g, s, p). Neighbours
//! enter only through the effective s–p drive Σ_j V_ij ⟨σ_j^ps⟩, and every
//! Runge–Kutta stage reads all neighbour coherences from the same stage
//! input, so results do not depend on how sites are scheduled over threads.

mod coupling;
mod dynamics;
mod site;

pub use coupling::{build_coupling_table, dipole_coupling, Boundary, CouplingTable, LatticeConfig};
pub use dynamics::{
    effective_hamiltonian, evolve_to_steady_state, lindblad_rhs, local_hamiltonian, rk4_step, CoherenceSource,
    MeanField, SeriesRow, SteadyStateOptions, SteadyStateReport, SteadyStateRun, TRACE_DRIFT_LIMIT,
};
pub use site::{random_init, Level, Mat3, Rates, SiteState, G, P, S};
