//! Hamiltonian tables, spreading speeds, convex conjugates and empirical front speeds.

mod empirical;
mod interp;
mod legendre;
mod report;
mod table;

pub use empirical::{default_w_grid, empirical_speeds, EmpiricalOptions, FrontSpeedEstimate, LevelFit};
pub use legendre::{legendre_conjugate, wkb_compare, wkb_profile, LegendreTable, WkbReport, WkbRow};
pub use report::{speed_report, SandwichCheck, SpeedReport};
pub use table::{default_p_grid, hamiltonian_table, spreading_speed, HamiltonianTable, SpeedResult, TablePolicy};
