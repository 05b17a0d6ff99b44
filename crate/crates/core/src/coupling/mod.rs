//! Array mutual-coupling synthesis from dipole geometry and the SPD matrix
//! functions used to decouple it.

mod dipole;
mod geometry;
mod matrix;
pub mod quadrature;
mod spd;

pub use dipole::{
    build_coupling_matrix, build_coupling_matrix_with, coupling_values, mutual_impedance,
    mutual_impedance_with, offset_impedance, QuadratureOptions,
};
pub use geometry::{DipoleArrayGeometry, GeometryTemplate, ETA0, SPEED_OF_LIGHT};
pub use matrix::CouplingMatrix;
pub use spd::{eigen_extremes, spd_inv_sqrt, SpdFactors};
