//! Numerical toolkit for generalized indefinite strings
//!
//! ```text
//! -u'' = z omega u + z^2 upsilon u   on [0, L)
//! ```
//!
//! with `omega` a real measure and `upsilon` a non-negative one, both made
//! of point masses and piecewise-constant densities. The crate computes
//! Weyl–Titchmarsh functions, maps strings to trace-normed canonical
//! systems and back, extracts spectral measures and checks convergence of
//! string sequences.
//!
//! All routines are generic over the scalar type (`f64` or `f32`); the
//! aliases below fix it to `f64`.

// index loops mirror the matrix formulas; `!(a <= b)` is used to reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod coeffs;
pub mod converge;
pub mod error;
pub mod io;
pub mod linalg;
pub mod poly;
pub mod propagate;
pub mod quad;
pub mod scalar;
pub mod spectral;
pub mod weyl;

pub use canonical::{
    canonical_m, canonical_solution, hamiltonian_to_string, indivisible_prefix,
    roundtrip_discrepancy, string_to_hamiltonian, string_to_hamiltonian_with, HPiece, Hamiltonian,
    HamiltonianOptions, RoundtripReport,
};
pub use coeffs::{
    eval_coefficients, validate_spec, xi_eval, Atom, DensityPiece, Length, Measure, RawString,
};
pub use converge::{
    hamiltonian_convergence_check, m_convergence_check, mollify_string, scaled_atom_family,
    string_convergence_check, ConvergenceOptions, StringSequence, Verdict,
};
pub use error::{Error, Result};
pub use propagate::{
    fundamental_system, solve_inhomogeneous, FundamentalSystem, PropagationOptions,
};
pub use scalar::{Cx, Real};
pub use spectral::{
    discrete_eigenvalues, green_kernel, spectral_measure_discrete, stieltjes_inversion,
    stieltjes_inversion_spec, transform_hat, HilbertElement, SpectralAtom, SpectralMeasure,
};
pub use weyl::{
    classify, default_grid, integral_rep_constants, weyl_m, weyl_m_with, weyl_solution_psi,
    Classification, WeylOptions, WeylSample,
};

pub type StringSpec<T = f64> = coeffs::StringSpec<T>;
pub type StringSpec64 = coeffs::StringSpec<f64>;
pub type StringSpec32 = coeffs::StringSpec<f32>;
pub type Hamiltonian64 = canonical::Hamiltonian<f64>;
pub type SpectralMeasure64 = spectral::SpectralMeasure<f64>;
pub type Complex64 = Cx<f64>;
