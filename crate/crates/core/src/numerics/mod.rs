//! Quadrature, root finding and Gaussian distribution functions.

mod gaussian;
mod quadrature;
mod roots;

pub use gaussian::{bvn_pdf, norm_cdf, norm_cdf_diff, norm_pdf, BivariateGaussian};
pub use quadrature::{integrate, GaussLegendre, PanelFunction, QuadratureSpec};
pub use roots::find_root;
