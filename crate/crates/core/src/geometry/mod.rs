//! Curve inequalities: linking and the length bound for linked curves,
//! grid projection of plane curves, tube volumes and sphere sweepouts.

pub mod ff;
pub mod linking;
pub mod polyline;
pub mod tubes;
pub mod waist;

pub use ff::{ff_project, is_grid_path, random_closed_curve, FfProjection};
pub use linking::{crossing_linking_number, gauss_linking_integral, gauss_map_degree, gehring_check, linking_number, GehringReport};
pub use polyline::{format_polylines, parse_polylines, read_polylines, write_polylines, Polyline, Vec3};
pub use tubes::{equator, tube_volume, TubeAmbient, TubeEstimate};
pub use waist::{sweepout_max_length, sweepout_waist_upper, Icosphere, MorseCount, Sweepout, WaistParams, WaistResult};
