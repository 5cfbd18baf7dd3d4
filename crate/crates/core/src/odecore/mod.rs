//! Shared numerical kernels: meshes and quadrature, adaptive integration of
//! complex linear systems, Newton iteration and winding numbers.

mod grid;
mod integrate;
mod lemmas;
mod roots;

pub use grid::{quadrature, Grading, Grid, Mesh, GL_POINTS, STRIDE};
pub use integrate::{integrate_system, integrate_with_hook, StepOptions, Trajectory};
pub use lemmas::{
    annulus_radii, convolution_exp, count_zeros_implicit, lemma_exp_bound, ExpBoundCase, ImplicitCount,
};
pub use roots::{newton_root, winding_number, Contour, NewtonResult};
