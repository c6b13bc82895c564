//! Mimetic finite differences for mixed-form linear diffusion on polygonal
//! meshes, with the coefficient staggered between cells and faces.

pub mod cli;
pub mod expr;
pub mod field;
pub mod linalg;
pub mod mesh;
pub mod mfd;
pub mod solver;
pub mod verify;

