//! Special-function kernels: gamma family, quadrature, Mellin–Barnes contours,
//! Fox H and Meijer G functions, residues.

pub mod bivariate;
pub mod contour;
pub mod foxh;
pub mod gamma;
pub mod hyper;
pub mod quad;
pub mod residue;

pub use bivariate::{fox_h_bivariate, fox_h_bivariate_with, FoxHBivariateSpec};
pub use contour::{ContourSpec, Evaluation, GammaRatioProduct, GammaTerm, QuadOptions};
pub use foxh::{fox_h, fox_h_with, meijer_g, meijer_g_series, FoxHSpec};
pub use gamma::{gamma, ln_gamma, ln_gamma_complex};
pub use residue::{circle_residue, residue_series, PoleDescriptor, ResidueTerm};
