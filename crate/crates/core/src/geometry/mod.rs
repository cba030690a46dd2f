//! Grids, gridded fields, directions and the snapshot format shared by every other module.

mod direction;
mod field;
mod snapshot;

pub use direction::{fibonacci_directions, Direction};
pub use field::{trilinear_eval, Grid3D, ScalarField3D, TimeSeries};
pub use snapshot::{decode_field, encode_field, read_field, write_field, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}
