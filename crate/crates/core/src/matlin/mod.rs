//! Dense linear algebra and the LQR kernels.

mod dare;
mod mat;
mod spectral;

pub use dare::{
    dare_residual, dare_unchecked, gain_from_x, lqr_gain, riccati_map, solve_dare, DareMethod,
    DareOptions, DareSolution,
};
pub use mat::Mat;
pub use spectral::{
    eigenvalues, is_positive_definite, lemma3_bound, min_sym_eigenvalue, pbh_stabilizable,
    spectral_norm, spectral_radius, stab_detect_check, sym_inv_sqrt, sym_sqrt, StabDetect,
    PBH_RANK_TOL,
};
