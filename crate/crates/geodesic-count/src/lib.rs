//! Counting oriented images of a closed geodesic under arithmetic Fuchsian
//! groups attached to ℤ[√2]: exact double-coset enumeration, ideal correlation
//! sums with their main terms, and the special-function machinery behind the
//! relative trace formula.

pub mod counting;
pub mod geometry;
pub mod group;
pub mod quadfield;
pub mod specfun;
pub mod trace;
pub mod verify;
