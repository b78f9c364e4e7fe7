//! Finite-blocklength fundamental limits of the coherent real MIMO
//! block-fading channel: capacity, channel dispersion, the normal
//! approximation, dispersion-optimal orthogonal-design inputs, and a seeded
//! Monte Carlo simulator validating the closed forms.
//!
//! Conventions: all internal math is in nats (`log e = 1`); capacity and
//! dispersion are reported per channel use; fading is real-valued, i.i.d.
//! across coherence blocks, and known at the receiver.

pub mod designs;
pub mod dispersion;
pub mod error;
pub mod fading;
pub mod infodensity;
pub mod linalg;
pub mod mat;
pub mod rng;
pub mod special;

pub use designs::{
    assemble_design, build_hr_family, check_caid, check_hr, design_cov, gaussian_caid_2x2,
    rho, score_from_cov, truncation_search, var_frobsq, vstar_table, vstar_upper, CaidReport,
    GaussianCaidCov, HrCheck, HurwitzRadonFamily, OccupancyDesign, SignedPerm, TableEntry,
};
pub use dispersion::{
    asymptotic_limits, c_r_of_h, c_sigma, capacity, capacity_awgn, dispersion_awgn,
    eta_moments, min_blocklength, normal_approx_log_m, v1_of_x, v_iid, v_rank1,
    BlocklengthEstimate, DispersionReport, EtaMoments, FadingFunctionals, MomentPass,
    NormalApprox, Regime, Units, LOG2_E,
};
pub use error::{Error, Result};
pub use fading::{
    received_to_transmit, sample_eigs, sample_h, ChannelParams, EigenSample, FadingModel,
    PowerConvention,
};
pub use infodensity::{
    berry_esseen_ratio, conditional_mean_per_cu, empirical_conditional_moments, info_density,
    info_density_alt, simulate_output, telatar_conditional_variance, BlockInput,
    CondMomentEstimate,
};
pub use linalg::{sample_haar_orthogonal, sample_haar_orthogonal_stream, svd, sym_eig,
    sym_eigenvalues, SvdResult};
pub use mat::Mat;
pub use rng::{run_chunks, MonteCarloConfig, RngStream, RNG_ID};
pub use special::{norm_pdf, qfunc, qfunc_inv};
