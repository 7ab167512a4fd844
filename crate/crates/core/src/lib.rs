//! Numerical verification of Sasakian space-form geometry on the model
//! ℝ^{2m+1}(−3), its Levi-Civita and Tanaka-Webster connections, and
//! Tanaka-Webster biharmonicity of level-set hypersurfaces.

pub mod diffcalc;
pub mod linalg;
pub mod model;
pub mod connections;
pub mod curvature;
pub mod hypersurface;
pub mod biharmonic;
pub mod pseudohopf;
pub mod exprdsl;
pub mod report;
pub mod suite;
