//! Random planar maps and their squared-rectangle representations.
//!
//! The crate is organized around a pipeline: uniform random binary plane
//! trees (`treegrow`) are turned into quadrangulations of a hexagon by a
//! contour closure (`closure`), mapped to rooted planar maps through the
//! vertex/face incidence bijection (`tutte`), viewed as unit-resistor
//! networks (`electric`), and finally laid out as tilings of a rectangle
//! by squares (`squaring`). `contacts` analyses the geometry of a tiling,
//! and `pipeline` wires the stages together and runs the statistical
//! experiments behind the `sqmap` CLI.

pub mod combmap;
pub mod contacts;
pub mod closure;
pub mod electric;
pub mod fixtures;
pub mod pipeline;
pub mod squaring;
pub mod stats;
pub mod treegrow;
pub mod tutte;

/// Current through an edge below this threshold counts as zero in
/// floating-point mode. Exact mode uses exact zero instead.
pub const EPS_CURRENT: f64 = 1e-12;

/// Relative tolerance for area and coverage checks of a tiling.
pub const EPS_AREA_REL: f64 = 1e-8;

/// Tolerance for point/segment coincidence queries on tilings.
pub const EPS_CONTACT: f64 = 1e-9;
