//! cd-index of complete fans, computed from flag vectors and from a recursive
//! Lefschetz decomposition of the section module of the barycentric subdivision.

pub mod field;
pub mod flag;
pub mod graded;
pub mod lefschetz;
pub mod linalg;
pub mod pairing;
pub mod poset;
pub mod report;
pub mod sheaf;
pub mod verify;
