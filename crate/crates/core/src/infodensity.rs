//! Channel simulation and information-density evaluation.
//!
//! The information density is computed two independent ways: the primary
//! SVD route and an alternative log-det/quadratic-form route. Their
//! agreement on random inputs is the keystone correctness check for this
//! module. All values are in nats; `params` must be in transmit-power
//! convention (call [`ChannelParams::resolved`] first if needed).

use crate::dispersion::capacity_awgn;
use crate::error::{Error, Result};
use crate::fading::{sample_h, ChannelParams, FadingModel};
use crate::linalg::svd;
use crate::mat::Mat;
use crate::rng::{run_chunks, MonteCarloConfig};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// One coherence block's channel input, an n_t × T matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockInput {
    pub x: Mat,
}

impl BlockInput {
    pub fn new(x: Mat) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::invalid("block input must have finite entries"));
        }
        Ok(BlockInput { x })
    }

    fn check_dims(&self, params: &ChannelParams) -> Result<()> {
        if self.x.rows() != params.n_t || self.x.cols() != params.coherence_t {
            return Err(Error::invalid(format!(
                "input must be {}x{}, got {}x{}",
                params.n_t,
                params.coherence_t,
                self.x.rows(),
                self.x.cols()
            )));
        }
        Ok(())
    }
}

/// Empirical conditional moments of the information density at fixed input.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CondMomentEstimate {
    /// `E[i(x;Y,H)] / T` — conditional mean per channel use.
    pub mean: f64,
    /// `Var[i(x;Y,H)] / T` — conditional variance per channel use (V₁ scale).
    pub variance: f64,
    /// `E|i − E i|³` per block, plug-in estimate (diagnostic).
    pub abs_third_central: f64,
    pub mean_stderr: f64,
    pub variance_stderr: f64,
    pub abs_third_stderr: f64,
    pub samples: usize,
}

/// Draw `(Y, H)` for one block: `Y = H x + Z`, `Z` i.i.d. standard normal.
pub fn simulate_output(
    x: &BlockInput,
    model: &FadingModel,
    params: &ChannelParams,
    rng: &mut ChaCha12Rng,
) -> Result<(Mat, Mat)> {
    x.check_dims(params)?;
    let h = sample_h(model, params, rng)?;
    let z = Mat::from_fn(params.n_r, params.coherence_t, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    });
    let y = h.matmul(&x.x).add(&z);
    Ok((y, h))
}

fn check_triple(x: &BlockInput, y: &Mat, h: &Mat, params: &ChannelParams) -> Result<()> {
    x.check_dims(params)?;
    if h.rows() != params.n_r || h.cols() != params.n_t {
        return Err(Error::invalid("h has wrong dimensions"));
    }
    if y.rows() != params.n_r || y.cols() != params.coherence_t {
        return Err(Error::invalid("y has wrong dimensions"));
    }
    Ok(())
}

/// Information density of one block against the capacity-achieving output
/// distribution, primary SVD form.
pub fn info_density(x: &BlockInput, y: &Mat, h: &Mat, params: &ChannelParams) -> Result<f64> {
    check_triple(x, y, h, params)?;
    let a = params.snr_per_antenna();
    let t = params.coherence_t as f64;
    let n_min = params.n_min();
    let dec = svd(h)?;

    // z̃ = Uᵀ(y − hx); only the first n_min rows enter the sum
    let z = y.sub(&h.matmul(&x.x));
    let zt = dec.u.transpose().matmul(&z);

    let mut total = 0.0;
    for j in 0..n_min {
        let lam = dec.sigma[j];
        let l2 = lam * lam;
        total += t * capacity_awgn(a * l2);
        let vj = dec.v.col(j);
        let mut vjx = vec![0.0; params.coherence_t];
        for (i, &vji) in vj.iter().enumerate() {
            if vji == 0.0 {
                continue;
            }
            for (tt, out) in vjx.iter_mut().enumerate() {
                *out += vji * x.x[(i, tt)];
            }
        }
        let mut norm_vjx = 0.0;
        let mut dot = 0.0;
        let mut norm_zj = 0.0;
        for tt in 0..params.coherence_t {
            let zj = zt[(j, tt)];
            norm_vjx += vjx[tt] * vjx[tt];
            dot += vjx[tt] * zj;
            norm_zj += zj * zj;
        }
        total += 0.5 * (l2 * norm_vjx + 2.0 * lam * dot - a * l2 * norm_zj) / (1.0 + a * l2);
    }
    Ok(total)
}

/// Same information density via the log-det/quadratic-form identity:
/// `i = (T/2) ln det Σ − ½‖y − hx‖_F² + ½ tr(yᵀ Σ⁻¹ y)`, `Σ = I + (P/n_t) hhᵀ`.
///
/// Exists solely as an independent cross-check of [`info_density`].
pub fn info_density_alt(x: &BlockInput, y: &Mat, h: &Mat, params: &ChannelParams) -> Result<f64> {
    check_triple(x, y, h, params)?;
    let a = params.snr_per_antenna();
    let t = params.coherence_t as f64;
    let n_r = params.n_r;

    let mut sigma = h.gram_left().scale(a);
    for i in 0..n_r {
        sigma[(i, i)] += 1.0;
    }
    let l = sigma.cholesky()?;
    let mut logdet = 0.0;
    for i in 0..n_r {
        logdet += 2.0 * l[(i, i)].ln();
    }

    let resid = y.sub(&h.matmul(&x.x));
    let siy = sigma.solve_spd(y)?;
    let mut quad = 0.0;
    for i in 0..n_r {
        for tt in 0..params.coherence_t {
            quad += y[(i, tt)] * siy[(i, tt)];
        }
    }
    Ok(0.5 * t * logdet - 0.5 * resid.frob_sq() + 0.5 * quad)
}

/// Closed-form conditional mean of the information density per channel use,
/// `D₁(x) = C + √(η₂/2)/(n_t T) (‖x‖_F² − TP)`.
pub fn conditional_mean_per_cu(
    x: &BlockInput,
    params: &ChannelParams,
    capacity_per_cu: f64,
    eta2: f64,
) -> Result<f64> {
    x.check_dims(params)?;
    let t = params.coherence_t as f64;
    let n_t = params.n_t as f64;
    Ok(capacity_per_cu + (eta2 / 2.0).sqrt() / (n_t * t) * (x.x.frob_sq() - t * params.power))
}

#[derive(Clone, Copy, Default)]
struct ChunkMoments {
    n: f64,
    mean: f64,
    m2: f64,
    m3_abs: f64, // Σ |w − running mean|³ — finalized with a second pass
}

/// Monte Carlo conditional moments of `i(x;Y,H)` at fixed `x`.
pub fn empirical_conditional_moments(
    x: &BlockInput,
    model: &FadingModel,
    params: &ChannelParams,
    mc: &MonteCarloConfig,
) -> Result<CondMomentEstimate> {
    let params = params.resolved(model)?;
    x.check_dims(&params)?;
    // Two-pass per chunk: store the chunk's draws so the third absolute
    // central moment uses the chunk mean, not a running mean.
    let results: Vec<Result<ChunkMoments>> = run_chunks(mc, |len, mut rng| {
        let mut ws = Vec::with_capacity(len);
        for _ in 0..len {
            let (y, h) = simulate_output(x, model, &params, &mut rng)?;
            ws.push(info_density(x, &y, &h, &params)?);
        }
        let n = len as f64;
        let mean = ws.iter().sum::<f64>() / n;
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        for w in &ws {
            let d = w - mean;
            m2 += d * d;
            m3 += d.abs().powi(3);
        }
        Ok(ChunkMoments { n, mean, m2, m3_abs: m3 })
    });
    let mut chunks = Vec::with_capacity(results.len());
    for r in results {
        chunks.push(r?);
    }

    let n_total: f64 = chunks.iter().map(|c| c.n).sum();
    // pooled mean and variance (Chan merge of the chunk stats)
    let mean = chunks.iter().map(|c| c.mean * c.n).sum::<f64>() / n_total;
    let m2: f64 = chunks
        .iter()
        .map(|c| c.m2 + c.n * (c.mean - mean) * (c.mean - mean))
        .sum();
    let variance = if n_total > 1.0 { m2 / (n_total - 1.0) } else { 0.0 };
    // third absolute moment: plug-in around each chunk's own mean
    let m3 = chunks.iter().map(|c| c.m3_abs).sum::<f64>() / n_total;

    let t = params.coherence_t as f64;
    let stderr = |f: &dyn Fn(&ChunkMoments) -> f64| -> f64 {
        let vals: Vec<f64> = chunks.iter().filter(|c| c.n > 1.0).map(|c| f(c)).collect();
        let k = vals.len();
        if k < 2 {
            return 0.0;
        }
        let m = vals.iter().sum::<f64>() / k as f64;
        let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k as f64 - 1.0);
        (v / k as f64).sqrt()
    };
    Ok(CondMomentEstimate {
        mean: mean / t,
        variance: variance / t,
        abs_third_central: m3,
        mean_stderr: stderr(&|c| c.mean / t),
        variance_stderr: stderr(&|c| c.m2 / (c.n - 1.0) / t),
        abs_third_stderr: stderr(&|c| c.m3_abs / c.n),
        samples: mc.samples,
    })
}

/// Berry–Esseen ratio `B_n = √n Σⱼ E|Wⱼ−EWⱼ|³ / (Σⱼ Var Wⱼ)^{3/2}` with
/// per-block plug-in moments. Diagnostic only.
pub fn berry_esseen_ratio(
    xs: &[BlockInput],
    model: &FadingModel,
    params: &ChannelParams,
    mc: &MonteCarloConfig,
) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("need at least one block"));
    }
    let mut sum_var = 0.0;
    let mut sum_m3 = 0.0;
    for (j, x) in xs.iter().enumerate() {
        // distinct deterministic seed per block
        let mc_j = MonteCarloConfig {
            seed: mc.seed.wrapping_add(j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            ..*mc
        };
        let est = empirical_conditional_moments(x, model, params, &mc_j)?;
        sum_var += est.variance * params.coherence_t as f64;
        sum_m3 += est.abs_third_central;
    }
    if sum_var <= 0.0 {
        return Err(Error::numerical("zero total variance in Berry-Esseen ratio"));
    }
    let n = xs.len() as f64;
    Ok(n.sqrt() * sum_m3 / sum_var.powf(1.5))
}

/// Paired-sample estimate of the expected conditional variance of the
/// information density under the Telatar input, per channel use.
///
/// For each draw `x ~` i.i.d. N(0, P/n_t), two independent `(Y,H)` pairs
/// give `½(W₁−W₂)²`, an unbiased estimate of `Var[i|X=x]`; its average over
/// `x` estimates `E[V₁(X)]·T / T = V_iid`. This is the conditional variance
/// of the dispersion theorems — the unconditional `Var[i(X;Y,H)]` exceeds it
/// by `Var(E[i|X]) = η₂ T P²/n_t³` per block.
pub fn telatar_conditional_variance(
    params: &ChannelParams,
    model: &FadingModel,
    mc: &MonteCarloConfig,
) -> Result<(f64, f64)> {
    let params = params.resolved(model)?;
    let sd = params.snr_per_antenna().sqrt();
    let results: Vec<Result<(f64, f64, f64)>> = run_chunks(mc, |len, mut rng| {
        let mut n = 0.0;
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for _ in 0..len {
            let x = BlockInput::new(Mat::from_fn(params.n_t, params.coherence_t, |_, _| {
                sd * rng.sample::<f64, _>(StandardNormal)
            }))?;
            let (y1, h1) = simulate_output(&x, model, &params, &mut rng)?;
            let (y2, h2) = simulate_output(&x, model, &params, &mut rng)?;
            let w1 = info_density(&x, &y1, &h1, &params)?;
            let w2 = info_density(&x, &y2, &h2, &params)?;
            let v = 0.5 * (w1 - w2) * (w1 - w2);
            n += 1.0;
            let d = v - mean;
            mean += d / n;
            m2 += d * (v - mean);
        }
        Ok((n, mean, m2))
    });
    let mut chunks = Vec::with_capacity(results.len());
    for r in results {
        chunks.push(r?);
    }
    let n_total: f64 = chunks.iter().map(|c| c.0).sum();
    let mean = chunks.iter().map(|c| c.1 * c.0).sum::<f64>() / n_total;
    let t = params.coherence_t as f64;
    let means: Vec<f64> = chunks.iter().filter(|c| c.0 > 1.0).map(|c| c.1).collect();
    let k = means.len();
    let stderr = if k < 2 {
        0.0
    } else {
        let m = means.iter().sum::<f64>() / k as f64;
        let v = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k as f64 - 1.0);
        (v / k as f64).sqrt()
    };
    Ok((mean / t, stderr / t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{v1_of_x, MomentPass};
    use crate::rng::RngStream;

    fn mc(samples: usize, seed: u64) -> MonteCarloConfig {
        MonteCarloConfig::with_samples(samples, seed).unwrap()
    }

    fn random_triple(
        params: &ChannelParams,
        rng: &mut ChaCha12Rng,
    ) -> (BlockInput, Mat, Mat) {
        let x = BlockInput::new(Mat::from_fn(params.n_t, params.coherence_t, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }))
        .unwrap();
        let h = Mat::from_fn(params.n_r, params.n_t, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        });
        let y = Mat::from_fn(params.n_r, params.coherence_t, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        });
        (x, y, h)
    }

    #[test]
    fn zero_channel_gives_zero() {
        let p = ChannelParams::transmit(2, 3, 4, 2.0).unwrap();
        let mut rng = RngStream::new(31, 0).rng();
        let (x, y, _) = random_triple(&p, &mut rng);
        let h = Mat::zeros(3, 2);
        assert!(info_density(&x, &y, &h, &p).unwrap().abs() < 1e-12);
        assert!(info_density_alt(&x, &y, &h, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn scalar_awgn_oracle() {
        // n_t=n_r=T=1, h=1: i = ½ln(1+P) − ½(y−x)² + ½y²/(1+P)
        let pw = 3.0;
        let p = ChannelParams::transmit(1, 1, 1, pw).unwrap();
        let mut h = Mat::zeros(1, 1);
        h[(0, 0)] = 1.0;
        let mut rng = RngStream::new(32, 0).rng();
        for _ in 0..50 {
            let xv: f64 = rng.sample(StandardNormal);
            let yv: f64 = rng.sample(StandardNormal);
            let mut xm = Mat::zeros(1, 1);
            xm[(0, 0)] = xv;
            let mut ym = Mat::zeros(1, 1);
            ym[(0, 0)] = yv;
            let x = BlockInput::new(xm).unwrap();
            let direct = 0.5 * (1.0 + pw).ln() - 0.5 * (yv - xv) * (yv - xv)
                + 0.5 * yv * yv / (1.0 + pw);
            let got = info_density(&x, &ym, &h, &p).unwrap();
            assert!((got - direct).abs() < 1e-10, "{got} vs {direct}");
        }
    }

    #[test]
    fn two_formula_agreement() {
        let mut rng = RngStream::new(33, 0).rng();
        for &(nt, nr, t) in &[(2usize, 2usize, 2usize), (4, 2, 3), (1, 4, 5)] {
            let p = ChannelParams::transmit(nt, nr, t, 2.5).unwrap();
            for _ in 0..200 {
                let (x, y, h) = random_triple(&p, &mut rng);
                let a = info_density(&x, &y, &h, &p).unwrap();
                let b = info_density_alt(&x, &y, &h, &p).unwrap();
                assert!((a - b).abs() < 1e-9, "({nt},{nr},{t}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_noise_alt_closed_form() {
        let p = ChannelParams::transmit(2, 2, 3, 2.0).unwrap();
        let mut rng = RngStream::new(34, 0).rng();
        let (x, _, h) = random_triple(&p, &mut rng);
        let y = h.matmul(&x.x);
        let a = p.snr_per_antenna();
        let mut sigma = h.gram_left().scale(a);
        for i in 0..2 {
            sigma[(i, i)] += 1.0;
        }
        let l = sigma.cholesky().unwrap();
        let logdet = 2.0 * (l[(0, 0)].ln() + l[(1, 1)].ln());
        let siy = sigma.solve_spd(&y).unwrap();
        let mut quad = 0.0;
        for i in 0..2 {
            for tt in 0..3 {
                quad += y[(i, tt)] * siy[(i, tt)];
            }
        }
        let expect = 0.5 * 3.0 * logdet + 0.5 * quad;
        let got = info_density_alt(&x, &y, &h, &p).unwrap();
        assert!((got - expect).abs() < 1e-10);
    }

    #[test]
    fn simulate_energy_checks() {
        let p = ChannelParams::transmit(2, 3, 4, 2.0).unwrap();
        let model = FadingModel::default_gaussian();
        let mut rng = RngStream::new(35, 0).rng();

        // x = 0: y is pure noise with E‖y‖² = n_r T = 12
        let x0 = BlockInput::new(Mat::zeros(2, 4)).unwrap();
        let n = 20_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let (y, _) = simulate_output(&x0, &model, &p, &mut rng).unwrap();
            let f = y.frob_sq();
            sum += f;
            sum_sq += f * f;
        }
        let mean = sum / n as f64;
        let var = (sum_sq - sum * sum / n as f64) / (n as f64 - 1.0);
        assert!((mean - 12.0).abs() < 3.0 * (var / n as f64).sqrt());

        // E‖Hx‖² = E‖H‖²/n_t · ‖x‖² = n_r ‖x‖²
        let x = BlockInput::new(Mat::from_fn(2, 4, |i, j| (i + j) as f64 * 0.3 + 0.1)).unwrap();
        let expect = 3.0 * x.x.frob_sq();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let h = sample_h(&model, &p, &mut rng).unwrap();
            let f = h.matmul(&x.x).frob_sq();
            sum += f;
            sum_sq += f * f;
        }
        let mean = sum / n as f64;
        let var = (sum_sq - sum * sum / n as f64) / (n as f64 - 1.0);
        assert!((mean - expect).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn conditional_moments_match_analytics() {
        let p = ChannelParams::transmit(2, 2, 2, 4.0).unwrap();
        let model = FadingModel::default_gaussian();
        let pass = MomentPass::compute(&p, &model, &mc(100_000, 36)).unwrap();
        let eta = pass.eta_moments();
        let aux = pass.fading_functionals();
        let (cap, _) = pass.capacity();
        let mut rng = RngStream::new(37, 0).rng();
        let (x, _, _) = random_triple(&p, &mut rng);

        let est = empirical_conditional_moments(&x, &model, &p, &mc(100_000, 38)).unwrap();
        let v1 = v1_of_x(&x.x, &p, &eta, &aux).unwrap();
        assert!(
            (est.variance - v1).abs() < 4.0 * est.variance_stderr,
            "variance {} vs analytic {v1} (se {})",
            est.variance,
            est.variance_stderr
        );
        let d1 = conditional_mean_per_cu(&x, &p, cap, eta.eta2).unwrap();
        assert!(
            (est.mean - d1).abs() < 4.0 * est.mean_stderr,
            "mean {} vs analytic {d1} (se {})",
            est.mean,
            est.mean_stderr
        );
    }

    #[test]
    fn rademacher_conditional_variance_closed_form() {
        // Var[i | x] = (x² + P²/2)/(1+P)² for the ±1 scalar channel
        let pw = 2.0;
        let p = ChannelParams::transmit(1, 1, 1, pw).unwrap();
        let mut xm = Mat::zeros(1, 1);
        xm[(0, 0)] = 1.3;
        let x = BlockInput::new(xm).unwrap();
        let est = empirical_conditional_moments(
            &x,
            &FadingModel::ScalarRademacher,
            &p,
            &mc(200_000, 39),
        )
        .unwrap();
        let expect = (1.3f64 * 1.3 + pw * pw / 2.0) / ((1.0 + pw) * (1.0 + pw));
        assert!(
            (est.variance - expect).abs() < 4.0 * est.variance_stderr,
            "{} vs {expect}",
            est.variance
        );
    }

    #[test]
    fn conditional_mean_affine_in_input_energy() {
        let p = ChannelParams::transmit(2, 2, 2, 4.0).unwrap();
        let model = FadingModel::default_gaussian();
        let pass = MomentPass::compute(&p, &model, &mc(100_000, 40)).unwrap();
        let eta = pass.eta_moments();
        let mut rng = RngStream::new(41, 0).rng();
        let (x, _, _) = random_triple(&p, &mut rng);
        let x2 = BlockInput::new(x.x.scale(2.0)).unwrap();

        let e1 = empirical_conditional_moments(&x, &model, &p, &mc(100_000, 42)).unwrap();
        let e2 = empirical_conditional_moments(&x2, &model, &p, &mc(100_000, 43)).unwrap();
        let t = p.coherence_t as f64;
        let predicted = (eta.eta2 / 2.0).sqrt() / (p.n_t as f64 * t) * 3.0 * x.x.frob_sq();
        let se = e1.mean_stderr.hypot(e2.mean_stderr);
        assert!(
            ((e2.mean - e1.mean) - predicted).abs() < 4.0 * se,
            "{} vs {predicted}",
            e2.mean - e1.mean
        );
    }

    #[test]
    fn berry_esseen_identical_blocks() {
        let p = ChannelParams::transmit(1, 1, 2, 1.0).unwrap();
        let model = FadingModel::default_gaussian();
        let scale = (p.power * p.coherence_t as f64 / 2.0).sqrt();
        let x = BlockInput::new(Mat::from_fn(1, 2, |_, _| scale)).unwrap();
        let one = berry_esseen_ratio(&[x.clone()], &model, &p, &mc(50_000, 44)).unwrap();
        let four = berry_esseen_ratio(&[x.clone(), x.clone(), x.clone(), x], &model, &p, &mc(50_000, 44))
            .unwrap();
        // identical blocks: √n · n·m₃/(n·v)^{3/2} = m₃/v^{3/2} for every n
        assert!((four - one).abs() / one < 0.1, "{four} vs {one}");
        assert!(one.is_finite() && one > 0.0);
    }

    #[test]
    fn berry_esseen_zero_variance_rejected() {
        let p = ChannelParams::transmit(1, 1, 1, 0.0).unwrap();
        let x = BlockInput::new(Mat::zeros(1, 1)).unwrap();
        let err = berry_esseen_ratio(&[x], &FadingModel::ScalarRademacher, &p, &mc(1000, 45));
        assert!(err.is_err());
    }

    #[test]
    fn telatar_conditional_variance_matches_v_iid() {
        let p = ChannelParams::transmit(2, 2, 2, 4.0).unwrap();
        let model = FadingModel::default_gaussian();
        let iid = MomentPass::compute(&p, &model, &mc(100_000, 46)).unwrap().v_iid_report();
        let (v, se) = telatar_conditional_variance(&p, &model, &mc(50_000, 47)).unwrap();
        let comb = se.hypot(iid.v_stderr);
        assert!((v - iid.v_per_cu).abs() < 4.0 * comb, "{v} vs {} (se {comb})", iid.v_per_cu);
    }

    #[test]
    fn unconditional_variance_exceeds_by_mean_spread() {
        // Var[i] = E Var[i|X] + Var E[i|X]; the second term is η₂TP²/n_t³
        let p = ChannelParams::transmit(2, 2, 2, 4.0).unwrap();
        let model = FadingModel::default_gaussian();
        let pass = MomentPass::compute(&p, &model, &mc(100_000, 48)).unwrap();
        let iid = pass.v_iid_report();
        let eta2 = pass.eta_moments().eta2;
        let t = p.coherence_t as f64;
        let n_t = p.n_t as f64;
        let sd = p.snr_per_antenna().sqrt();

        let n = 100_000usize;
        let mut rng = RngStream::new(49, 0).rng();
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for k in 0..n {
            let x = BlockInput::new(Mat::from_fn(2, 2, |_, _| {
                sd * rng.sample::<f64, _>(StandardNormal)
            }))
            .unwrap();
            let (y, h) = simulate_output(&x, &model, &p, &mut rng).unwrap();
            let w = info_density(&x, &y, &h, &p).unwrap();
            let d = w - mean;
            mean += d / (k + 1) as f64;
            m2 += d * (w - mean);
        }
        let var_per_cu = m2 / (n as f64 - 1.0) / t;
        let expect = iid.v_per_cu + eta2 * p.power * p.power / (n_t * n_t * n_t);
        // ~2% agreement is ample for this scale separation check
        assert!(
            (var_per_cu - expect).abs() / expect < 0.05,
            "{var_per_cu} vs {expect}"
        );
        assert!(var_per_cu > iid.v_per_cu * 1.1, "spread term should be visible");
    }

    #[test]
    fn moments_deterministic() {
        let p = ChannelParams::transmit(2, 2, 2, 1.0).unwrap();
        let model = FadingModel::default_gaussian();
        let mut rng = RngStream::new(50, 0).rng();
        let (x, _, _) = random_triple(&p, &mut rng);
        let a = empirical_conditional_moments(&x, &model, &p, &mc(5000, 51)).unwrap();
        let b = empirical_conditional_moments(&x, &model, &p, &mc(5000, 51)).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.variance.to_bits(), b.variance.to_bits());
        assert_eq!(a.abs_third_central.to_bits(), b.abs_third_central.to_bits());
    }
}
