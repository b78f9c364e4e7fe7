//! Hurwitz–Radon families, full-rate orthogonal designs, and v*(n_t,T).
//!
//! Families are built from signed-permutation matrices in exact integer
//! arithmetic: the base families on dimensions 2, 4, 8 are the left
//! multiplication operators of the Cayley–Dickson algebras, an extra
//! doubling step reaches dimension 16, and a period-4 recursion (tensoring
//! against the dimension-16 family and its volume element) reaches every
//! higher power of two with the full ρ(n) count. Construction correctness
//! is never assumed — [`check_hr`] gates every family.

use crate::error::{Error, Result};
use crate::fading::ChannelParams;
use crate::linalg::sym_eigenvalues;
use crate::mat::Mat;
use serde::Serialize;

/// A signed permutation matrix with entries in {−1, 0, +1}: row `r` has its
/// single nonzero at column `col[r]` with sign `sign[r]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedPerm {
    col: Vec<usize>,
    sign: Vec<i8>,
}

impl SignedPerm {
    pub fn identity(n: usize) -> SignedPerm {
        SignedPerm { col: (0..n).collect(), sign: vec![1; n] }
    }

    pub fn n(&self) -> usize {
        self.col.len()
    }

    /// `(column, sign)` of the nonzero in row `r`.
    pub fn entry(&self, r: usize) -> (usize, i8) {
        (self.col[r], self.sign[r])
    }

    /// True when the nonzero columns form a permutation and signs are ±1.
    pub fn is_valid(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        for (&c, &s) in self.col.iter().zip(&self.sign) {
            if c >= n || seen[c] || (s != 1 && s != -1) {
                return false;
            }
            seen[c] = true;
        }
        true
    }

    pub fn transpose(&self) -> SignedPerm {
        let n = self.n();
        let mut col = vec![0; n];
        let mut sign = vec![0i8; n];
        for r in 0..n {
            col[self.col[r]] = r;
            sign[self.col[r]] = self.sign[r];
        }
        SignedPerm { col, sign }
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &SignedPerm) -> SignedPerm {
        assert_eq!(self.n(), other.n());
        let n = self.n();
        let mut col = vec![0; n];
        let mut sign = vec![0i8; n];
        for r in 0..n {
            let c = self.col[r];
            col[r] = other.col[c];
            sign[r] = self.sign[r] * other.sign[c];
        }
        SignedPerm { col, sign }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &SignedPerm) -> SignedPerm {
        let (n, m) = (self.n(), other.n());
        let mut col = vec![0; n * m];
        let mut sign = vec![0i8; n * m];
        for i in 0..n {
            for r in 0..m {
                col[i * m + r] = self.col[i] * m + other.col[r];
                sign[i * m + r] = self.sign[i] * other.sign[r];
            }
        }
        SignedPerm { col, sign }
    }

    pub fn to_mat(&self) -> Mat {
        let n = self.n();
        let mut m = Mat::zeros(n, n);
        for r in 0..n {
            m[(r, self.col[r])] = self.sign[r] as f64;
        }
        m
    }
}

/// The Hurwitz–Radon function `ρ(2^a b) = 8⌊a/4⌋ + 2^(a mod 4)` for odd `b`.
pub fn rho(n: usize) -> usize {
    assert!(n >= 1, "rho is defined for positive n");
    let a = n.trailing_zeros() as usize;
    8 * (a / 4) + (1 << (a % 4))
}

/// Basis product `e_i e_j` in the 2^k-dimensional Cayley–Dickson algebra:
/// `(sign, index)` of the resulting basis element.
fn cd_mul(i: usize, j: usize, n: usize) -> (i8, usize) {
    if n == 1 {
        return (1, 0);
    }
    let h = n / 2;
    match (i < h, j < h) {
        (true, true) => cd_mul(i, j, h),
        // (a,0)(0,d) = (0, d·a)
        (true, false) => {
            let (s, k) = cd_mul(j - h, i, h);
            (s, k + h)
        }
        // (0,b)(c,0) = (0, b·c̄)
        (false, true) => {
            let (s, k) = cd_mul(i - h, j, h);
            (if j == 0 { s } else { -s }, k + h)
        }
        // (0,b)(0,d) = (−d̄·b, 0)
        (false, false) => {
            let (s, k) = cd_mul(j - h, i - h, h);
            let s = if j - h == 0 { s } else { -s };
            (-s, k)
        }
    }
}

/// Left-multiplication matrix of the basis unit `e_i` on the 2^k-dimensional
/// Cayley–Dickson algebra: column `j` holds `e_i e_j`.
fn cd_left_mult(i: usize, n: usize) -> SignedPerm {
    let mut col = vec![0; n];
    let mut sign = vec![0i8; n];
    for j in 0..n {
        let (s, k) = cd_mul(i, j, n);
        col[k] = j;
        sign[k] = s;
    }
    SignedPerm { col, sign }
}

/// Anticommuting antisymmetric square roots of −I on dimension 2^a; the
/// returned count is ρ(2^a) − 1.
fn pow2_family(a: usize) -> Vec<SignedPerm> {
    let n = 1usize << a;
    if a == 0 {
        return Vec::new();
    }
    if a <= 3 {
        return (1..n).map(|i| cd_left_mult(i, n)).collect();
    }
    // dimension-16 8-family: double the octonion family with the 2×2
    // generators R (rotation) and Q (reflection)
    let r2 = SignedPerm { col: vec![1, 0], sign: vec![1, -1] };
    let q2 = SignedPerm { col: vec![0, 1], sign: vec![1, -1] };
    let mut c16: Vec<SignedPerm> = pow2_family(3).iter().map(|b| b.kron(&q2)).collect();
    c16.push(SignedPerm::identity(8).kron(&r2));
    if a == 4 {
        return c16;
    }
    // period-4 recursion: {C_j ⊗ I} ∪ {W ⊗ B_i}, W the (symmetric,
    // involutive) product of all eight C_j
    let w = c16.iter().fold(SignedPerm::identity(16), |acc, m| acc.mul(m));
    let rest = pow2_family(a - 4);
    let id_rest = SignedPerm::identity(1 << (a - 4));
    c16.iter()
        .map(|c| c.kron(&id_rest))
        .chain(rest.iter().map(|b| w.kron(b)))
        .collect()
}

/// A verified-size family {V₁,…,V_k} with V₁ = I.
#[derive(Debug, Clone)]
pub struct HurwitzRadonFamily {
    pub n: usize,
    pub mats: Vec<SignedPerm>,
}

impl HurwitzRadonFamily {
    pub fn k(&self) -> usize {
        self.mats.len()
    }
}

/// Construct a k-member Hurwitz–Radon family on dimension n.
pub fn build_hr_family(n: usize, k: usize) -> Result<HurwitzRadonFamily> {
    if n == 0 || k == 0 {
        return Err(Error::invalid("n and k must be positive"));
    }
    if k > rho(n) {
        return Err(Error::invalid(format!("k = {k} exceeds rho({n}) = {}", rho(n))));
    }
    let a = n.trailing_zeros() as usize;
    let b = n >> a;
    let id_b = SignedPerm::identity(b);
    let mut mats = vec![SignedPerm::identity(n)];
    for base in pow2_family(a).iter().take(k - 1) {
        mats.push(base.kron(&id_b));
    }
    Ok(HurwitzRadonFamily { n, mats })
}

/// Outcome of the exact Hurwitz–Radon verification.
#[derive(Debug, Clone, Serialize)]
pub struct HrCheck {
    pub ok: bool,
    pub violation: Option<String>,
}

/// Verify `VᵢᵀVᵢ = I` and `VᵢᵀVⱼ + VⱼᵀVᵢ = 0` in integer arithmetic.
pub fn check_hr(fam: &HurwitzRadonFamily) -> HrCheck {
    let fail = |msg: String| HrCheck { ok: false, violation: Some(msg) };
    for (i, v) in fam.mats.iter().enumerate() {
        if v.n() != fam.n {
            return fail(format!("matrix {i} has size {} != {}", v.n(), fam.n));
        }
        if !v.is_valid() {
            return fail(format!("matrix {i} is not a signed permutation"));
        }
        let prod = v.transpose().mul(v);
        if prod != SignedPerm::identity(fam.n) {
            return fail(format!("V{i}ᵀV{i} != I"));
        }
    }
    for i in 0..fam.mats.len() {
        for j in (i + 1)..fam.mats.len() {
            // VᵢᵀVⱼ must be antisymmetric: entry (r,c,s) matched by (c,r,−s)
            let m = fam.mats[i].transpose().mul(&fam.mats[j]);
            for r in 0..fam.n {
                let (c, s) = m.entry(r);
                if c == r || m.entry(c) != (r, -s) {
                    return fail(format!("V{i}ᵀV{j} + V{j}ᵀV{i} != 0 at row {r}"));
                }
            }
        }
    }
    HrCheck { ok: true, violation: None }
}

/// An n_t × T grid whose cells are zero or signed indeterminates ±ξ_k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyDesign {
    pub n_t: usize,
    pub t: usize,
    /// number of distinct indeterminates ξ_1..ξ_d
    pub d: usize,
    /// row-major; `None` is a structural zero
    pub cells: Vec<Option<(i8, usize)>>,
}

impl OccupancyDesign {
    pub fn cell(&self, i: usize, j: usize) -> Option<(i8, usize)> {
        self.cells[i * self.t + j]
    }

    /// Occurrence count ℓ_k of each indeterminate.
    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.d];
        for c in self.cells.iter().flatten() {
            counts[c.1] += 1;
        }
        counts
    }

    /// `Σ_k ℓ_k²` — the normalized `Var‖X‖_F²` score.
    pub fn score(&self) -> u64 {
        self.counts().iter().map(|l| l * l).sum()
    }

    /// Submatrix on the given row/column index sets.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> OccupancyDesign {
        let cells = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| self.cell(i, j)))
            .collect();
        OccupancyDesign { n_t: rows.len(), t: cols.len(), d: self.d, cells }
    }

    /// Token grid (`+x1`, `-x3`, `0`) for serialization.
    pub fn tokens(&self) -> Vec<Vec<String>> {
        (0..self.n_t)
            .map(|i| {
                (0..self.t)
                    .map(|j| match self.cell(i, j) {
                        None => "0".to_string(),
                        Some((s, k)) => {
                            format!("{}x{}", if s >= 0 { '+' } else { '-' }, k + 1)
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Rows `ξ·Vᵢ` of a verified family as an occupancy design (full rate:
/// T = d = fam.n, every cell occupied).
pub fn assemble_design(fam: &HurwitzRadonFamily, n_t: usize) -> Result<OccupancyDesign> {
    if n_t == 0 || n_t > fam.k() {
        return Err(Error::invalid(format!(
            "n_t must lie in 1..={}, got {n_t}",
            fam.k()
        )));
    }
    let check = check_hr(fam);
    if !check.ok {
        return Err(Error::invalid(format!(
            "family fails verification: {}",
            check.violation.unwrap_or_default()
        )));
    }
    let n = fam.n;
    let mut cells = vec![None; n_t * n];
    for (i, v) in fam.mats.iter().take(n_t).enumerate() {
        // (ξ·V)_j = sign · ξ_r where V has its row-r nonzero in column j
        for r in 0..n {
            let (j, s) = v.entry(r);
            cells[i * n + j] = Some((s, r));
        }
    }
    Ok(OccupancyDesign { n_t, t: n, d: n, cells })
}

/// Covariance of vec(X) (row-major) for a jointly Gaussian input.
#[derive(Debug, Clone)]
pub struct GaussianCaidCov {
    pub cov: Mat,
    pub power: f64,
}

/// Covariance of the design when ξ_k are i.i.d. N(0, P/n_t).
pub fn design_cov(design: &OccupancyDesign, params: &ChannelParams) -> Result<GaussianCaidCov> {
    if design.n_t != params.n_t || design.t != params.coherence_t {
        return Err(Error::invalid("design dimensions do not match params"));
    }
    let dim = design.n_t * design.t;
    let scale = params.power / params.n_t as f64;
    let mut cov = Mat::zeros(dim, dim);
    for p in 0..dim {
        for q in 0..dim {
            if let (Some((s1, k1)), Some((s2, k2))) = (design.cells[p], design.cells[q]) {
                if k1 == k2 {
                    cov[(p, q)] = scale * (s1 * s2) as f64;
                }
            }
        }
    }
    Ok(GaussianCaidCov { cov, power: params.power })
}

/// Result of verifying the caid second-moment conditions.
#[derive(Debug, Clone, Serialize)]
pub struct CaidReport {
    pub rows_ok: bool,
    pub cols_ok: bool,
    pub violations: Vec<String>,
}

impl CaidReport {
    pub fn ok(&self) -> bool {
        self.rows_ok && self.cols_ok
    }
}

const CAID_TOL: f64 = 1e-10;

/// Verify the row conditions (`E[RᵢᵀRᵢ] = (P/n_t) I`, cross-row blocks
/// antisymmetric) and the analogous column conditions, within 1e-10.
pub fn check_caid(cov: &GaussianCaidCov, params: &ChannelParams) -> Result<CaidReport> {
    let n_t = params.n_t;
    let t = params.coherence_t;
    let dim = n_t * t;
    if cov.cov.rows() != dim || cov.cov.cols() != dim {
        return Err(Error::invalid("covariance has wrong dimensions"));
    }
    if cov.cov.rel_asymmetry() > 1e-12 {
        return Err(Error::invalid("covariance is not symmetric"));
    }
    let eigs = sym_eigenvalues(&cov.cov)?;
    if eigs.last().copied().unwrap_or(0.0) < -1e-10 {
        return Err(Error::invalid("covariance is not positive semidefinite"));
    }

    let scale = params.power / n_t as f64;
    let at = |i: usize, k: usize, j: usize, l: usize| cov.cov[(i * t + k, j * t + l)];
    let mut rows_ok = true;
    let mut cols_ok = true;
    let mut violations = Vec::new();

    // row1: E[RᵢᵀRᵢ] = (P/n_t) I_T
    for i in 0..n_t {
        for k in 0..t {
            for l in 0..t {
                let want = if k == l { scale } else { 0.0 };
                let m = at(i, k, i, l);
                if (m - want).abs() > CAID_TOL {
                    rows_ok = false;
                    violations.push(format!("row1: E[X_{i}{k} X_{i}{l}] = {m}, want {want}"));
                }
            }
        }
    }
    // row2: E[RᵢᵀRⱼ] = −E[RⱼᵀRᵢ] ⇔ E[X_ik X_jl] + E[X_il X_jk] = 0
    for i in 0..n_t {
        for j in (i + 1)..n_t {
            for k in 0..t {
                for l in 0..t {
                    if (at(i, k, j, l) + at(i, l, j, k)).abs() > CAID_TOL {
                        rows_ok = false;
                        violations.push(format!(
                            "row2: rows ({i},{j}) violate antipodal correlation at ({k},{l})"
                        ));
                    }
                }
            }
        }
    }
    // col1: E[C_k C_kᵀ] = (P/n_t) I_{n_t}
    for k in 0..t {
        for i in 0..n_t {
            for j in 0..n_t {
                let want = if i == j { scale } else { 0.0 };
                let m = at(i, k, j, k);
                if (m - want).abs() > CAID_TOL {
                    cols_ok = false;
                    violations.push(format!("col1: E[X_{i}{k} X_{j}{k}] = {m}, want {want}"));
                }
            }
        }
    }
    // col2: E[C_k C_lᵀ] = −E[C_l C_kᵀ] ⇔ E[X_ik X_jl] + E[X_il X_jk] = 0
    for k in 0..t {
        for l in (k + 1)..t {
            for i in 0..n_t {
                for j in 0..n_t {
                    if (at(i, k, j, l) + at(i, l, j, k)).abs() > CAID_TOL {
                        cols_ok = false;
                        violations.push(format!(
                            "col2: columns ({k},{l}) violate antipodal correlation at ({i},{j})"
                        ));
                    }
                }
            }
        }
    }
    Ok(CaidReport { rows_ok, cols_ok, violations })
}

/// `Var‖X‖_F² = 2P²/n_t² Σℓ_k²` and the integer score `Σℓ_k²`.
pub fn var_frobsq(design: &OccupancyDesign, params: &ChannelParams) -> (f64, u64) {
    let score = design.score();
    let p = params.power;
    let n_t = design.n_t as f64;
    (2.0 * p * p / (n_t * n_t) * score as f64, score)
}

/// `Σ ρ²_{ikjl} = (n_t/P)² ‖Cov‖_F²` — the float route to the same score.
pub fn score_from_cov(cov: &GaussianCaidCov, params: &ChannelParams) -> f64 {
    let r = params.n_t as f64 / params.power;
    r * r * cov.cov.frob_sq()
}

/// `v*(n_t,T) ≤ n_t T min(n_t,T)`, exact when `n_t ≤ ρ(T)` or `T ≤ ρ(n_t)`.
pub fn vstar_upper(n_t: usize, t: usize) -> (u64, bool) {
    let bound = (n_t * t * n_t.min(t)) as u64;
    (bound, n_t <= rho(t) || t <= rho(n_t))
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Exhaustive best n_t × T submatrix of `base` by `Σℓ_k²` score; ties go to
/// the lexicographically first (row-set, column-set) pair.
pub fn truncation_search(
    n_t: usize,
    t: usize,
    base: &OccupancyDesign,
) -> Result<(OccupancyDesign, u64)> {
    if n_t == 0 || t == 0 || n_t > base.n_t || t > base.t {
        return Err(Error::invalid(format!(
            "target {n_t}x{t} does not fit in base {}x{}",
            base.n_t, base.t
        )));
    }
    let mut best: Option<(OccupancyDesign, u64)> = None;
    for rows in combinations(base.n_t, n_t) {
        for cols in combinations(base.t, t) {
            let sub = base.submatrix(&rows, &cols);
            let score = sub.score();
            if best.as_ref().map_or(true, |(_, s)| score > *s) {
                best = Some((sub, score));
            }
        }
    }
    Ok(best.expect("non-empty search space"))
}

/// One entry of the v* table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableEntry {
    Exact(u64),
    Interval { lower: u64, upper: u64 },
}

impl TableEntry {
    pub fn lower(&self) -> u64 {
        match *self {
            TableEntry::Exact(v) => v,
            TableEntry::Interval { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> u64 {
        match *self {
            TableEntry::Exact(v) => v,
            TableEntry::Interval { upper, .. } => upper,
        }
    }
}

/// Smallest full-rate base design with at least `n_t` rows and `t` columns;
/// published lower bounds use the 8×8 design, so that is the floor.
fn truncation_base(n_t: usize, t: usize) -> Result<OccupancyDesign> {
    for a in 3..=16usize {
        let n = 1usize << a;
        if n >= t && rho(n) >= n_t {
            let fam = build_hr_family(n, n_t.max(1))?;
            return assemble_design(&fam, n_t);
        }
    }
    Err(Error::invalid("no full-rate base design fits the requested dimensions"))
}

/// The v*(n_t,T) table for 1 ≤ n_t, T ≤ max_dim: exact values where the
/// upper bound is achieved, otherwise [truncation lower, upper] intervals.
pub fn vstar_table(max_dim: usize) -> Result<Vec<Vec<TableEntry>>> {
    if max_dim == 0 {
        return Err(Error::invalid("max_dim must be positive"));
    }
    let mut table = vec![vec![TableEntry::Exact(0); max_dim]; max_dim];
    for n_t in 1..=max_dim {
        // v*(T, n_t) = v*(n_t, T): compute the canonical (n_t ≤ T)
        // orientation and mirror it
        for t in n_t..=max_dim {
            let (upper, exact) = vstar_upper(n_t, t);
            let entry = if exact {
                TableEntry::Exact(upper)
            } else {
                let base = truncation_base(n_t, t)?;
                let (_, lower) = truncation_search(n_t, t, &base)?;
                TableEntry::Interval { lower, upper }
            };
            table[n_t - 1][t - 1] = entry;
            table[t - 1][n_t - 1] = entry;
        }
    }
    Ok(table)
}

/// Covariance of the 2×2 jointly Gaussian caid family parameterized by ρ.
pub fn gaussian_caid_2x2(rho_param: f64, power: f64) -> Result<GaussianCaidCov> {
    if !(-1.0..=1.0).contains(&rho_param) {
        return Err(Error::invalid("rho must lie in [-1, 1]"));
    }
    if !(power > 0.0) {
        return Err(Error::invalid("power must be positive"));
    }
    let s = power / 2.0;
    // vec order (X11, X12, X21, X22): the only correlated pairs are the two
    // diagonals of the 2×2 matrix, with antipodal correlations ±ρ
    let mut cov = Mat::identity(4).scale(s);
    cov[(0, 3)] = s * rho_param;
    cov[(3, 0)] = s * rho_param;
    cov[(1, 2)] = -s * rho_param;
    cov[(2, 1)] = -s * rho_param;
    Ok(GaussianCaidCov { cov, power })
}
