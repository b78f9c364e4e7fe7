//! Channel parameters and isotropic fading models.

use crate::error::{Error, Result};
use crate::linalg::sym_eigenvalues;
use crate::mat::Mat;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Whether `power` is the transmit SNR `P` or the received SNR
/// `P_r = P/n_t · E‖H‖_F²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerConvention {
    Transmit,
    Received,
}

/// Static channel configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub n_t: usize,
    pub n_r: usize,
    pub coherence_t: usize,
    /// SNR on a linear scale.
    pub power: f64,
    pub power_convention: PowerConvention,
}

impl ChannelParams {
    pub fn new(
        n_t: usize,
        n_r: usize,
        coherence_t: usize,
        power: f64,
        power_convention: PowerConvention,
    ) -> Result<Self> {
        if n_t < 1 || n_r < 1 || coherence_t < 1 {
            return Err(Error::invalid("n_t, n_r and T must all be >= 1"));
        }
        if !(power >= 0.0) {
            return Err(Error::invalid("power must be non-negative"));
        }
        Ok(ChannelParams { n_t, n_r, coherence_t, power, power_convention })
    }

    /// Transmit-convention shorthand.
    pub fn transmit(n_t: usize, n_r: usize, coherence_t: usize, power: f64) -> Result<Self> {
        Self::new(n_t, n_r, coherence_t, power, PowerConvention::Transmit)
    }

    pub fn n_min(&self) -> usize {
        self.n_t.min(self.n_r)
    }

    /// `P/n_t`, the per-antenna SNR factor. Only meaningful once the power is
    /// in transmit convention.
    pub fn snr_per_antenna(&self) -> f64 {
        self.power / self.n_t as f64
    }

    /// Resolve the power to transmit convention for the given fading model.
    pub fn resolved(&self, model: &FadingModel) -> Result<ChannelParams> {
        match self.power_convention {
            PowerConvention::Transmit => Ok(*self),
            PowerConvention::Received => {
                let p = received_to_transmit_closed(self, model)?;
                Ok(ChannelParams {
                    power: p,
                    power_convention: PowerConvention::Transmit,
                    ..*self
                })
            }
        }
    }
}

/// Distribution family of the fading matrix H. Both variants are isotropic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FadingModel {
    /// Entries i.i.d. N(0, variance).
    IidGaussian { variance: f64 },
    /// Scalar H = ±1 equiprobable; AWGN-reduction test model, n_t = n_r = 1.
    ScalarRademacher,
}

impl FadingModel {
    pub fn iid_gaussian(variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::invalid("variance must be positive"));
        }
        Ok(FadingModel::IidGaussian { variance })
    }

    /// Default model matching the i.i.d. N(0,1) fading used throughout.
    pub fn default_gaussian() -> Self {
        FadingModel::IidGaussian { variance: 1.0 }
    }

    /// `E‖H‖_F²` in closed form.
    pub fn mean_frob_sq(&self, params: &ChannelParams) -> f64 {
        match self {
            FadingModel::IidGaussian { variance } => {
                (params.n_t * params.n_r) as f64 * variance
            }
            FadingModel::ScalarRademacher => 1.0,
        }
    }

    /// True when `P[rank H <= 1] = 1`.
    pub fn is_rank_one(&self, params: &ChannelParams) -> bool {
        match self {
            FadingModel::IidGaussian { .. } => params.n_min() == 1,
            FadingModel::ScalarRademacher => true,
        }
    }

    fn validate(&self, params: &ChannelParams) -> Result<()> {
        if matches!(self, FadingModel::ScalarRademacher) && params.n_t * params.n_r > 1 {
            return Err(Error::invalid("ScalarRademacher requires n_t = n_r = 1"));
        }
        Ok(())
    }
}

/// Eigenvalues Λ_i² of HHᵀ for one fading draw.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSample {
    pub lambdas_sq: Vec<f64>,
}

/// Draw one fading realization H (n_r × n_t).
pub fn sample_h(
    model: &FadingModel,
    params: &ChannelParams,
    rng: &mut ChaCha12Rng,
) -> Result<Mat> {
    model.validate(params)?;
    match model {
        FadingModel::IidGaussian { variance } => {
            let sd = variance.sqrt();
            Ok(Mat::from_fn(params.n_r, params.n_t, |_, _| {
                sd * rng.sample::<f64, _>(StandardNormal)
            }))
        }
        FadingModel::ScalarRademacher => {
            let mut m = Mat::zeros(1, 1);
            m[(0, 0)] = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            Ok(m)
        }
    }
}

/// Eigenvalues of HHᵀ for one draw, computed on the Gram matrix of the
/// smaller dimension.
pub fn sample_eigs(
    model: &FadingModel,
    params: &ChannelParams,
    rng: &mut ChaCha12Rng,
) -> Result<EigenSample> {
    let h = sample_h(model, params, rng)?;
    eigs_of(&h)
}

/// Eigenvalues Λ² of HHᵀ for a given H (smaller-side Gram matrix).
pub fn eigs_of(h: &Mat) -> Result<EigenSample> {
    let gram = if h.rows() <= h.cols() { h.gram_left() } else { h.gram_right() };
    let mut vals = sym_eigenvalues(&gram)?;
    for v in vals.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(EigenSample { lambdas_sq: vals })
}

/// Convert a received-power constraint to the transmit power P with
/// `P_r = P/n_t · E‖H‖_F²`.
///
/// Both built-in models have a closed-form `E‖H‖_F²`, so the Monte Carlo
/// budget is currently unused; it is part of the signature so that models
/// without a closed form can fall back to estimation.
pub fn received_to_transmit(
    params: &ChannelParams,
    model: &FadingModel,
    _mc: &crate::rng::MonteCarloConfig,
) -> Result<f64> {
    received_to_transmit_closed(params, model)
}

fn received_to_transmit_closed(params: &ChannelParams, model: &FadingModel) -> Result<f64> {
    if params.power_convention != PowerConvention::Received {
        return Err(Error::invalid("params are not in received-power convention"));
    }
    let ef = model.mean_frob_sq(params);
    if !(ef > 0.0) {
        return Err(Error::invalid("fading model has zero mean energy"));
    }
    Ok(params.power * params.n_t as f64 / ef)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn rademacher_is_sign() {
        let p = ChannelParams::transmit(1, 1, 1, 1.0).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..100 {
            let h = sample_h(&FadingModel::ScalarRademacher, &p, &mut rng).unwrap();
            assert!(h[(0, 0)] == 1.0 || h[(0, 0)] == -1.0);
        }
    }

    #[test]
    fn rademacher_rejects_mimo() {
        let p = ChannelParams::transmit(2, 1, 1, 1.0).unwrap();
        let mut rng = RngStream::new(1, 0).rng();
        assert!(sample_h(&FadingModel::ScalarRademacher, &p, &mut rng).is_err());
    }

    #[test]
    fn gaussian_frob_energy() {
        let p = ChannelParams::transmit(4, 4, 1, 1.0).unwrap();
        let model = FadingModel::default_gaussian();
        let mut rng = RngStream::new(2, 0).rng();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let f = sample_h(&model, &p, &mut rng).unwrap().frob_sq();
            sum += f;
            sum_sq += f * f;
        }
        let mean = sum / n as f64;
        let var = (sum_sq - sum * sum / n as f64) / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 16.0).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn rademacher_eigs_are_one() {
        let p = ChannelParams::transmit(1, 1, 1, 1.0).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..50 {
            let e = sample_eigs(&FadingModel::ScalarRademacher, &p, &mut rng).unwrap();
            assert_eq!(e.lambdas_sq, vec![1.0]);
        }
    }

    #[test]
    fn miso_eigs_chi_square_mean() {
        // n_t = 1: Λ² ~ χ² with n_r degrees of freedom
        let n_r = 4;
        let p = ChannelParams::transmit(1, n_r, 1, 1.0).unwrap();
        let model = FadingModel::default_gaussian();
        let mut rng = RngStream::new(4, 0).rng();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let e = sample_eigs(&model, &p, &mut rng).unwrap();
            assert_eq!(e.lambdas_sq.len(), 1);
            sum += e.lambdas_sq[0];
            sum_sq += e.lambdas_sq[0] * e.lambdas_sq[0];
        }
        let mean = sum / n as f64;
        let var = (sum_sq - sum * sum / n as f64) / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - n_r as f64).abs() < 3.0 * se);
    }

    #[test]
    fn trace_identity_2x2() {
        let p = ChannelParams::transmit(2, 2, 1, 1.0).unwrap();
        let model = FadingModel::default_gaussian();
        let mut rng = RngStream::new(5, 0).rng();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let e = sample_eigs(&model, &p, &mut rng).unwrap();
            let t: f64 = e.lambdas_sq.iter().sum();
            sum += t;
            sum_sq += t * t;
        }
        let mean = sum / n as f64;
        let var = (sum_sq - sum * sum / n as f64) / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!((mean - 4.0).abs() < 3.0 * se);
    }

    #[test]
    fn gram_side_invariance() {
        let mut rng = RngStream::new(6, 0).rng();
        let h = Mat::from_fn(3, 5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let small = eigs_of(&h).unwrap().lambdas_sq;
        let big = sym_eigenvalues(&h.gram_right()).unwrap();
        for (a, b) in small.iter().zip(big.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        // remaining eigenvalues of the larger Gram matrix vanish
        for b in &big[small.len()..] {
            assert!(b.abs() < 1e-9);
        }
    }

    #[test]
    fn received_to_transmit_closed_forms() {
        let mc = crate::rng::MonteCarloConfig::new(1, 0, 1).unwrap();
        let model = FadingModel::default_gaussian();
        let p = ChannelParams::new(4, 4, 1, 100.0, PowerConvention::Received).unwrap();
        assert_eq!(received_to_transmit(&p, &model, &mc).unwrap(), 25.0);
        assert_eq!(p.resolved(&model).unwrap().power, 25.0);

        let p = ChannelParams::new(100, 16, 1, 100.0, PowerConvention::Received).unwrap();
        assert_eq!(received_to_transmit(&p, &model, &mc).unwrap(), 6.25);

        let p = ChannelParams::new(1, 1, 1, 1.0, PowerConvention::Received).unwrap();
        assert_eq!(received_to_transmit(&p, &FadingModel::ScalarRademacher, &mc).unwrap(), 1.0);
    }

    #[test]
    fn isotropy_moments() {
        // first and second mixed moments of U H V match those of H for fixed
        // Haar U, V
        use crate::linalg::sample_haar_orthogonal_stream;
        let p = ChannelParams::transmit(3, 3, 1, 1.0).unwrap();
        let model = FadingModel::default_gaussian();
        let u = sample_haar_orthogonal_stream(3, RngStream::new(71, 0));
        let v = sample_haar_orthogonal_stream(3, RngStream::new(71, 1));
        let n = 100_000;
        let mut rng = RngStream::new(7, 0).rng();
        let mut m1 = [0.0f64; 2]; // E[H_00], E[(UHV)_00]
        let mut m2 = [0.0f64; 2]; // E[H_00 H_11], E[(UHV)_00 (UHV)_11]
        let mut m2sq = [0.0f64; 2];
        for _ in 0..n {
            let h = sample_h(&model, &p, &mut rng).unwrap();
            let r = u.matmul(&h).matmul(&v);
            m1[0] += h[(0, 0)];
            m1[1] += r[(0, 0)];
            let a = h[(0, 0)] * h[(1, 1)];
            let b = r[(0, 0)] * r[(1, 1)];
            m2[0] += a;
            m2[1] += b;
            m2sq[0] += a * a;
            m2sq[1] += b * b;
        }
        let nf = n as f64;
        // H_00 has unit variance; 4 stderr
        assert!((m1[0] / nf - m1[1] / nf).abs() < 4.0 * (2.0 / nf).sqrt());
        let var = (m2sq[0] - m2[0] * m2[0] / nf) / (nf - 1.0) + (m2sq[1] - m2[1] * m2[1] / nf) / (nf - 1.0);
        assert!((m2[0] / nf - m2[1] / nf).abs() < 4.0 * (var / nf).sqrt());
    }
}
