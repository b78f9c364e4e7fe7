//! Capacity, channel dispersion, and the normal approximation.
//!
//! All math in this module is carried out in nats (`log e = 1`); conversion
//! to bits happens only at presentation via [`DispersionReport::in_units`].
//! Reported capacity and dispersion are per channel use.
//!
//! The Monte Carlo estimators share a single eigenvalue sample stream: one
//! pass ([`MomentPass`]) accumulates every statistic that capacity, the
//! η-moments, and the dispersion formulas need, so algebraic identities
//! between the derived quantities hold at floating-point precision rather
//! than up to independent MC noise.

use crate::error::{Error, Result};
use crate::fading::{sample_eigs, ChannelParams, FadingModel, PowerConvention};
use crate::mat::Mat;
use crate::rng::{run_chunks, MonteCarloConfig};
use crate::special::qfunc_inv;
use serde::{Deserialize, Serialize};

pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Presentation units for capacity/dispersion values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Nats,
    Bits,
}

/// `c(σ) = σ / (1 + (P/n_t) σ)`, evaluated at σ = Λ².
///
/// `params` must already be in transmit-power convention.
pub fn c_sigma(sig_sq: f64, params: &ChannelParams) -> f64 {
    sig_sq / (1.0 + params.snr_per_antenna() * sig_sq)
}

/// AWGN capacity `½ ln(1+p)` in nats.
pub fn capacity_awgn(p: f64) -> f64 {
    0.5 * p.ln_1p()
}

/// AWGN dispersion `½ (1 − 1/(1+p)²)` in nats².
pub fn dispersion_awgn(p: f64) -> f64 {
    let t = 1.0 / (1.0 + p);
    0.5 * (1.0 - t * t)
}

/// `C_r(h,P) = ½ ln det(I + (P/n_t) h hᵀ)` via Cholesky of the smaller Gram
/// matrix. Cross-check route for the eigenvalue-sum form.
pub fn c_r_of_h(h: &Mat, a: f64) -> Result<f64> {
    let gram = if h.rows() <= h.cols() { h.gram_left() } else { h.gram_right() };
    let n = gram.rows();
    let mut sigma = gram.scale(a);
    for i in 0..n {
        sigma[(i, i)] += 1.0;
    }
    let l = sigma.cholesky()?;
    let mut half_logdet = 0.0;
    for i in 0..n {
        half_logdet += l[(i, i)].ln();
    }
    Ok(half_logdet)
}

/// The five η fading functionals, in nats², with batch-means standard errors.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EtaMoments {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub eta4: f64,
    pub eta5: f64,
    pub eta1_stderr: f64,
    pub eta2_stderr: f64,
    pub eta3_stderr: f64,
    pub eta4_stderr: f64,
    pub eta5_stderr: f64,
}

/// x-independent pieces of V₁: `Var(C_r)` and `Σᵢ E[V_AWGN((P/n_t)Λᵢ²)]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FadingFunctionals {
    pub var_cr: f64,
    pub sum_e_vawgn: f64,
}

/// Capacity/dispersion estimate with term breakdown and MC metadata.
#[derive(Debug, Clone, Serialize)]
pub struct DispersionReport {
    pub capacity_per_cu: f64,
    pub capacity_stderr: f64,
    pub v_per_cu: f64,
    pub v_stderr: f64,
    /// `T · Var(C_r)`
    pub term_fading_variance: f64,
    /// `Σᵢ E[V_AWGN((P/n_t)Λᵢ²)]`
    pub term_awgn_dispersion: f64,
    /// `(P/n_t)² (η₁ − η₂·coef)`
    pub term_power_eta: f64,
    pub term_stderr: [f64; 3],
    pub units: Units,
    pub params: ChannelParams,
    pub mc: MonteCarloConfig,
}

impl DispersionReport {
    /// Convert between nats and bits; exact factors applied once.
    pub fn in_units(&self, units: Units) -> DispersionReport {
        if units == self.units {
            return self.clone();
        }
        let (fc, fv) = match units {
            Units::Bits => (LOG2_E, LOG2_E * LOG2_E),
            Units::Nats => (1.0 / LOG2_E, 1.0 / (LOG2_E * LOG2_E)),
        };
        DispersionReport {
            capacity_per_cu: self.capacity_per_cu * fc,
            capacity_stderr: self.capacity_stderr * fc,
            v_per_cu: self.v_per_cu * fv,
            v_stderr: self.v_stderr * fv,
            term_fading_variance: self.term_fading_variance * fv,
            term_awgn_dispersion: self.term_awgn_dispersion * fv,
            term_power_eta: self.term_power_eta * fv,
            term_stderr: self.term_stderr.map(|s| s * fv),
            units,
            ..*self
        }
    }
}

/// Running first/second (co)moments of the per-sample statistics.
///
/// Welford/Chan updates keep the centered second moments exactly zero for
/// degenerate (constant) channels, which is what makes the AWGN-reduction
/// results exact rather than exact-up-to-rounding.
#[derive(Debug, Clone, Copy, Default)]
struct ChunkStats {
    n: f64,
    mean_cr: f64,
    m2_cr: f64,
    mean_sc: f64,
    m2_sc: f64,
    c_crsc: f64,
    sum_sc2: f64,
    sum_vawgn: f64,
    sum_eta5b: f64,
}

impl ChunkStats {
    fn push(&mut self, cr: f64, sc: f64, sc2: f64, vawgn: f64, eta5b: f64) {
        self.n += 1.0;
        let d_cr = cr - self.mean_cr;
        self.mean_cr += d_cr / self.n;
        self.m2_cr += d_cr * (cr - self.mean_cr);
        let d_sc = sc - self.mean_sc;
        self.mean_sc += d_sc / self.n;
        self.m2_sc += d_sc * (sc - self.mean_sc);
        self.c_crsc += d_cr * (sc - self.mean_sc);
        self.sum_sc2 += sc2;
        self.sum_vawgn += vawgn;
        self.sum_eta5b += eta5b;
    }

    fn merge(&self, o: &ChunkStats) -> ChunkStats {
        if o.n == 0.0 {
            return *self;
        }
        if self.n == 0.0 {
            return *o;
        }
        let n = self.n + o.n;
        let w = self.n * o.n / n;
        let d_cr = o.mean_cr - self.mean_cr;
        let d_sc = o.mean_sc - self.mean_sc;
        ChunkStats {
            n,
            mean_cr: self.mean_cr + d_cr * o.n / n,
            m2_cr: self.m2_cr + o.m2_cr + d_cr * d_cr * w,
            mean_sc: self.mean_sc + d_sc * o.n / n,
            m2_sc: self.m2_sc + o.m2_sc + d_sc * d_sc * w,
            c_crsc: self.c_crsc + o.c_crsc + d_cr * d_sc * w,
            sum_sc2: self.sum_sc2 + o.sum_sc2,
            sum_vawgn: self.sum_vawgn + o.sum_vawgn,
            sum_eta5b: self.sum_eta5b + o.sum_eta5b,
        }
    }

    fn var_cr(&self) -> f64 {
        if self.n > 1.0 { self.m2_cr / (self.n - 1.0) } else { 0.0 }
    }

    fn var_sc(&self) -> f64 {
        if self.n > 1.0 { self.m2_sc / (self.n - 1.0) } else { 0.0 }
    }

    fn cov_crsc(&self) -> f64 {
        if self.n > 1.0 { self.c_crsc / (self.n - 1.0) } else { 0.0 }
    }

    /// `E[(Σc)²]` via `Σx² = M2 + n·mean²`.
    fn e_sc_sq(&self) -> f64 {
        self.m2_sc / self.n + self.mean_sc * self.mean_sc
    }

    fn eta1(&self) -> f64 {
        0.5 * self.sum_sc2 / self.n
    }

    fn eta2(&self) -> f64 {
        0.5 * self.mean_sc * self.mean_sc
    }

    fn eta3(&self) -> f64 {
        0.25 * self.var_sc()
    }

    fn eta4(&self, n_t: usize) -> f64 {
        let e_sc2 = self.sum_sc2 / self.n;
        // Σ_{i≠j} E[cᵢcⱼ] term; empty (exactly zero) when n_min = 1, which
        // n_t = 1 forces, so the 1/(n_t−1) factor never divides by zero.
        let cross = if n_t == 1 {
            0.0
        } else {
            (self.e_sc_sq() - e_sc2) / (n_t as f64 - 1.0)
        };
        (e_sc2 - cross) / (2.0 * n_t as f64 * (n_t as f64 + 2.0))
    }

    fn eta5(&self, coherence_t: usize) -> f64 {
        self.cov_crsc() + self.sum_eta5b / self.n / coherence_t as f64
    }

    fn v_terms(&self, params: &ChannelParams, vstar_coef: f64) -> [f64; 3] {
        let a = params.snr_per_antenna();
        [
            params.coherence_t as f64 * self.var_cr(),
            self.sum_vawgn / self.n,
            a * a * (self.eta1() - self.eta2() * vstar_coef),
        ]
    }
}

/// One shared Monte Carlo pass over the fading eigenvalue stream; every
/// derived quantity in this module reads off these statistics.
#[derive(Debug, Clone)]
pub struct MomentPass {
    params: ChannelParams,
    mc: MonteCarloConfig,
    rank_one: bool,
    pooled: ChunkStats,
    chunks: Vec<ChunkStats>,
}

impl MomentPass {
    pub fn compute(
        params: &ChannelParams,
        model: &FadingModel,
        mc: &MonteCarloConfig,
    ) -> Result<MomentPass> {
        let params = params.resolved(model)?;
        let a = params.snr_per_antenna();
        let results: Vec<Result<ChunkStats>> = run_chunks(mc, |len, mut rng| {
            let mut stats = ChunkStats::default();
            for _ in 0..len {
                let eig = sample_eigs(model, &params, &mut rng)?;
                let mut cr = 0.0;
                let mut sc = 0.0;
                let mut sc2 = 0.0;
                let mut vawgn = 0.0;
                let mut eta5b = 0.0;
                for &l2 in &eig.lambdas_sq {
                    let c = l2 / (1.0 + a * l2);
                    cr += capacity_awgn(a * l2);
                    sc += c;
                    sc2 += c * c;
                    vawgn += dispersion_awgn(a * l2);
                    let d = 1.0 + a * l2;
                    eta5b += l2 / (d * d);
                }
                stats.push(cr, sc, sc2, vawgn, eta5b);
            }
            Ok(stats)
        });
        let mut chunks = Vec::with_capacity(results.len());
        for r in results {
            chunks.push(r?);
        }
        let pooled = chunks.iter().fold(ChunkStats::default(), |acc, c| acc.merge(c));
        Ok(MomentPass {
            params,
            mc: *mc,
            rank_one: model.is_rank_one(&params),
            pooled,
            chunks,
        })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    /// Batch-means standard error of a derived functional across substreams.
    fn batch_stderr(&self, f: impl Fn(&ChunkStats) -> f64) -> f64 {
        let usable: Vec<f64> =
            self.chunks.iter().filter(|c| c.n > 1.0).map(&f).collect();
        let k = usable.len();
        if k < 2 {
            return 0.0;
        }
        let mean = usable.iter().sum::<f64>() / k as f64;
        let var =
            usable.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k as f64 - 1.0);
        (var / k as f64).sqrt()
    }

    /// Capacity per channel use with its standard error.
    pub fn capacity(&self) -> (f64, f64) {
        let se = (self.pooled.var_cr() / self.pooled.n).sqrt();
        (self.pooled.mean_cr, se)
    }

    pub fn eta_moments(&self) -> EtaMoments {
        let n_t = self.params.n_t;
        let t = self.params.coherence_t;
        EtaMoments {
            eta1: self.pooled.eta1(),
            eta2: self.pooled.eta2(),
            eta3: self.pooled.eta3(),
            eta4: self.pooled.eta4(n_t),
            eta5: self.pooled.eta5(t),
            eta1_stderr: self.batch_stderr(|c| c.eta1()),
            eta2_stderr: self.batch_stderr(|c| c.eta2()),
            eta3_stderr: self.batch_stderr(|c| c.eta3()),
            eta4_stderr: self.batch_stderr(|c| c.eta4(n_t)),
            eta5_stderr: self.batch_stderr(|c| c.eta5(t)),
        }
    }

    pub fn fading_functionals(&self) -> FadingFunctionals {
        FadingFunctionals {
            var_cr: self.pooled.var_cr(),
            sum_e_vawgn: self.pooled.sum_vawgn / self.pooled.n,
        }
    }

    fn report(&self, vstar_coef: f64) -> DispersionReport {
        let (c, c_se) = self.capacity();
        let terms = self.pooled.v_terms(&self.params, vstar_coef);
        let v_of = |s: &ChunkStats| s.v_terms(&self.params, vstar_coef).iter().sum::<f64>();
        DispersionReport {
            capacity_per_cu: c,
            capacity_stderr: c_se,
            v_per_cu: terms.iter().sum(),
            v_stderr: self.batch_stderr(v_of),
            term_fading_variance: terms[0],
            term_awgn_dispersion: terms[1],
            term_power_eta: terms[2],
            term_stderr: [
                self.batch_stderr(|s| s.v_terms(&self.params, vstar_coef)[0]),
                self.batch_stderr(|s| s.v_terms(&self.params, vstar_coef)[1]),
                self.batch_stderr(|s| s.v_terms(&self.params, vstar_coef)[2]),
            ],
            units: Units::Nats,
            params: self.params,
            mc: self.mc,
        }
    }

    /// Dispersion for the i.i.d. (Telatar) input: η₂ coefficient `1/n_t`.
    pub fn v_iid_report(&self) -> DispersionReport {
        self.report(1.0 / self.params.n_t as f64)
    }

    /// Rank-1 dispersion for an input family with normalized `Var‖X‖_F²`
    /// equal to `vstar`: η₂ coefficient `vstar/(n_t² T)`.
    pub fn v_rank1_report(&self, vstar: f64) -> Result<DispersionReport> {
        if !self.rank_one {
            return Err(Error::invalid(
                "v_rank1 requires a fading model with rank H <= 1 almost surely",
            ));
        }
        if !(vstar > 0.0) {
            return Err(Error::invalid("vstar must be positive"));
        }
        let n_t = self.params.n_t as f64;
        let t = self.params.coherence_t as f64;
        Ok(self.report(vstar / (n_t * n_t * t)))
    }
}

/// Ergodic capacity per channel use, `(estimate, stderr)`, in nats.
pub fn capacity(
    params: &ChannelParams,
    model: &FadingModel,
    mc: &MonteCarloConfig,
) -> Result<(f64, f64)> {
    Ok(MomentPass::compute(params, model, mc)?.capacity())
}

/// The five η functionals from one shared eigenvalue stream.
pub fn eta_moments(
    params: &ChannelParams,
    model: &FadingModel,
    mc: &MonteCarloConfig,
) -> Result<EtaMoments> {
    Ok(MomentPass::compute(params, model, mc)?.eta_moments())
}

/// Dispersion of the i.i.d. Gaussian (Telatar) input, per channel use.
pub fn v_iid(
    params: &ChannelParams,
    model: &FadingModel,
    mc: &MonteCarloConfig,
) -> Result<DispersionReport> {
    Ok(MomentPass::compute(params, model, mc)?.v_iid_report())
}

/// Rank-1 dispersion with the supplied `v*` in place of the Telatar value.
pub fn v_rank1(
    params: &ChannelParams,
    model: &FadingModel,
    vstar: f64,
    mc: &MonteCarloConfig,
) -> Result<DispersionReport> {
    MomentPass::compute(params, model, mc)?.v_rank1_report(vstar)
}

/// Conditional per-channel-use variance `V₁(x)` of the information density
/// given the input block `x` (n_t × T).
pub fn v1_of_x(
    x: &Mat,
    params: &ChannelParams,
    moments: &EtaMoments,
    aux: &FadingFunctionals,
) -> Result<f64> {
    if x.rows() != params.n_t || x.cols() != params.coherence_t {
        return Err(Error::invalid(format!(
            "x must be {}x{}, got {}x{}",
            params.n_t,
            params.coherence_t,
            x.rows(),
            x.cols()
        )));
    }
    let n_t = params.n_t as f64;
    let t = params.coherence_t as f64;
    let frob_sq = x.frob_sq();
    let dev = frob_sq / n_t - t * params.power / n_t;
    let gram = x.gram_left();
    let aniso = gram.frob_sq() - frob_sq * frob_sq / n_t;
    Ok(t * aux.var_cr
        + aux.sum_e_vawgn
        + moments.eta5 * dev
        + (moments.eta3 * dev * dev + moments.eta4 * aniso) / t)
}

/// Normal-approximation code size.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalApprox {
    /// log M in nats.
    pub log_m: f64,
    pub rate_per_cu: f64,
    pub channel_uses: f64,
}

/// `log M ≈ nT·c − √(nT·v) Q⁻¹(ε)` for `n_blocks` coherence blocks, with
/// `c`, `v` per channel use.
pub fn normal_approx_log_m(
    n_blocks: usize,
    eps: f64,
    c: f64,
    v: f64,
    coherence_t: usize,
) -> Result<NormalApprox> {
    if n_blocks == 0 {
        return Err(Error::invalid("n_blocks must be positive"));
    }
    if !(v >= 0.0) {
        return Err(Error::invalid("v must be non-negative"));
    }
    let q = qfunc_inv(eps)?;
    let n_cu = (n_blocks * coherence_t) as f64;
    let log_m = n_cu * c - (n_cu * v).sqrt() * q;
    Ok(NormalApprox { log_m, rate_per_cu: log_m / n_cu, channel_uses: n_cu })
}

/// Minimum blocklength to reach a fraction of capacity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlocklengthEstimate {
    pub channel_uses: f64,
    /// Rounded up to a whole number of coherence blocks.
    pub rounded_channel_uses: f64,
}

/// `n ≈ (Q⁻¹(ε)/(1−η))² · v/c²` channel uses to achieve rate `η·c`.
///
/// `target_fraction = 1` is accepted and reports the `+∞` sentinel.
pub fn min_blocklength(
    target_fraction: f64,
    eps: f64,
    c: f64,
    v: f64,
    coherence_t: usize,
) -> Result<BlocklengthEstimate> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::invalid("target_fraction must lie in (0,1]"));
    }
    if !(c > 0.0) {
        return Err(Error::invalid("capacity must be positive"));
    }
    if !(v >= 0.0) {
        return Err(Error::invalid("v must be non-negative"));
    }
    let q = qfunc_inv(eps)?;
    if target_fraction == 1.0 && v > 0.0 {
        return Ok(BlocklengthEstimate {
            channel_uses: f64::INFINITY,
            rounded_channel_uses: f64::INFINITY,
        });
    }
    let s = q / (1.0 - target_fraction);
    let n = s * s * v / (c * c);
    let t = coherence_t as f64;
    Ok(BlocklengthEstimate { channel_uses: n, rounded_channel_uses: (n / t).ceil() * t })
}

/// Large-antenna-array regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// n_r fixed, n_t → ∞.
    FixNrGrowNt,
    /// n_t fixed, n_r → ∞.
    FixNtGrowNr,
}

/// Limiting `(C, V)` per channel use in nats for the four regime/convention
/// combinations. Fixed transmit power with growing receive arrays has
/// unbounded capacity; the sentinel `+∞` is returned for C there.
pub fn asymptotic_limits(
    regime: Regime,
    convention: PowerConvention,
    fixed_n: usize,
    power: f64,
) -> Result<(f64, f64)> {
    if fixed_n == 0 {
        return Err(Error::invalid("fixed_n must be positive"));
    }
    if !(power > 0.0) {
        return Err(Error::invalid("power must be positive"));
    }
    let m = fixed_n as f64;
    Ok(match (regime, convention) {
        (Regime::FixNrGrowNt, PowerConvention::Received) => {
            let r = power / m;
            (0.5 * m * r.ln_1p(), power / (1.0 + r))
        }
        (Regime::FixNtGrowNr, PowerConvention::Received) => {
            let r = power / m;
            (0.5 * m * r.ln_1p(), power * (2.0 + r) / (2.0 * (1.0 + r) * (1.0 + r)))
        }
        (Regime::FixNrGrowNt, PowerConvention::Transmit) => {
            (0.5 * m * power.ln_1p(), m * power / (1.0 + power))
        }
        (Regime::FixNtGrowNr, PowerConvention::Transmit) => (f64::INFINITY, 0.5 * m),
    })
}
