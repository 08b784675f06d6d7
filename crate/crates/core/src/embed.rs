//! The orbit map f_t: Hⁿ → H^∞ of the index-one form B_t (0 < t ≤ 1).
//!
//! By two-point homogeneity every distance reduces to the zonal integral
//! I_u = ∫ (cosh u − b₁ sinh u)^{−(n−1+t)} db = cosh d(f_t(o), f_t(g_u o)).
//! Integrals over the sphere are done in the polar angle θ with panels graded
//! geometrically towards the pole, where the integrand concentrates for large u.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::harmonics::{dim_hk, gauss_legendre, zonal_values, ZonalCoeffs};
use crate::hypgroup::polar;
use crate::prinseries::{SeriesParams, WeightVector};
use crate::quadspace::{acosh_one_plus, Isometry};

const PANEL_NODES: usize = 20;

/// Parameters of the embedding with its zonal truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedParams {
    pub params: SeriesParams,
    pub k_max: usize,
}

impl EmbedParams {
    pub fn new(n: usize, t: f64, k_max: usize) -> Result<Self> {
        let params = SeriesParams::new(n, t)?;
        if !(t > 0.0 && t < 1.0) {
            return invalid(format!("t = {t} must lie strictly inside (0, 1)"));
        }
        if k_max == 0 {
            return invalid("truncation K must be positive");
        }
        Ok(Self { params, k_max })
    }
}

/// Quadrature for ∫_{S^{n−1}} F(b₁) db in the polar angle θ (b₁ = cos θ).
#[derive(Debug, Clone)]
pub struct CapRule {
    pub theta: Vec<f64>,
    /// sin²(θ/2) = (1 − b₁)/2, kept separately for accuracy near the pole.
    pub half_gap: Vec<f64>,
    pub weight: Vec<f64>,
}

impl CapRule {
    /// Panels start at width 2e^{−u} around the pole and double until they reach
    /// `min(0.25, 8/(oscillation + 1))`, then continue uniformly to π.
    pub fn new(n: usize, u: f64, oscillation: f64) -> Self {
        let cap = (8.0 / (oscillation + 1.0)).min(0.25);
        let pi = std::f64::consts::PI;
        let mut edges = vec![0.0];
        let mut width = (2.0 * (-u.abs()).exp()).min(cap);
        let mut a = 0.0;
        while a < pi {
            let b = (a + width).min(pi);
            edges.push(b);
            a = b;
            width = (2.0 * width).min(cap);
        }
        let (gx, gw) = gauss_legendre(PANEL_NODES);
        let norm = sine_power_integral(n - 2);
        let mut theta = Vec::with_capacity(PANEL_NODES * edges.len());
        let mut half_gap = Vec::with_capacity(theta.capacity());
        let mut weight = Vec::with_capacity(theta.capacity());
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let half = 0.5 * (hi - lo);
            for (x, w) in gx.iter().zip(&gw) {
                let th = lo + half * (x + 1.0);
                let s = (0.5 * th).sin();
                theta.push(th);
                half_gap.push(s * s);
                weight.push(w * half * th.sin().powi(n as i32 - 2) / norm);
            }
        }
        Self { theta, half_gap, weight }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// b₁ = cos θ at node i.
    pub fn x(&self, i: usize) -> f64 {
        1.0 - 2.0 * self.half_gap[i]
    }
}

/// ∫_0^π sin^m θ dθ.
fn sine_power_integral(m: usize) -> f64 {
    let mut even = std::f64::consts::PI;
    let mut odd = 2.0;
    if m == 0 {
        return even;
    }
    if m == 1 {
        return odd;
    }
    for j in 2..=m {
        if j % 2 == 0 {
            even *= (j as f64 - 1.0) / j as f64;
        } else {
            odd *= (j as f64 - 1.0) / j as f64;
        }
    }
    if m.is_multiple_of(2) {
        even
    } else {
        odd
    }
}

/// log(cosh u − b₁ sinh u) with b₁ = 1 − 2·half_gap, accurate for small and large u.
fn log_base(u: f64, half_gap: f64) -> f64 {
    let shift = 2.0 * half_gap * u.sinh();
    let minus_one = (-u).exp_m1() + shift;
    if minus_one.abs() < 0.5 {
        minus_one.ln_1p()
    } else {
        ((-u).exp() + shift).ln()
    }
}

fn check_u(u: f64) -> Result<()> {
    if !(u >= 0.0) || !u.is_finite() {
        return invalid(format!("u = {u} must be finite and nonnegative"));
    }
    Ok(())
}

/// I_u − 1, accurate when u is small.
pub fn pairing_iu_minus_one(params: &SeriesParams, u: f64) -> Result<f64> {
    check_u(u)?;
    if u == 0.0 {
        return Ok(0.0);
    }
    let rule = CapRule::new(params.n, u, 0.0);
    let e = params.kernel_exponent();
    let mut acc = 0.0;
    for i in 0..rule.len() {
        acc += rule.weight[i] * (-e * log_base(u, rule.half_gap[i])).exp_m1();
    }
    if !acc.is_finite() {
        return Err(Error::Numerical(format!("I_u quadrature is not finite at u = {u}")));
    }
    Ok(acc)
}

/// I_u = ∫_{S^{n−1}} (cosh u − b₁ sinh u)^{−(n−1+t)} db.
pub fn pairing_iu(params: &SeriesParams, u: f64) -> Result<f64> {
    Ok(1.0 + pairing_iu_minus_one(params, u)?)
}

fn check_embedding(params: &SeriesParams) -> Result<()> {
    if !(params.t > 0.0 && params.t <= 1.0) {
        return invalid(format!("embedding needs t in (0, 1], got {}", params.t));
    }
    Ok(())
}

/// d(f_t(o), f_t(g_u o)) = arccosh I_u.
pub fn embed_dist_u(params: &SeriesParams, u: f64) -> Result<f64> {
    check_embedding(params)?;
    acosh_one_plus(pairing_iu_minus_one(params, u)?)
}

/// d(f_t(x), f_t(g x)) for any basepoint: reduces g to its polar displacement u.
pub fn embed_dist(params: &SeriesParams, g: &Isometry) -> Result<f64> {
    if g.dim() != params.n + 1 {
        return Err(Error::DimensionMismatch { expected: params.n + 1, got: g.dim() });
    }
    embed_dist_u(params, polar(g)?.u)
}

/// √(t(t+n−1)/n), the conformal factor of f_t.
pub fn speed(params: &SeriesParams) -> f64 {
    let (n, t) = (params.n as f64, params.t);
    (t * (t + n - 1.0) / n).sqrt()
}

/// −n/(t(t+n−1)).
pub fn curvature(params: &SeriesParams) -> f64 {
    let (n, t) = (params.n as f64, params.t);
    -n / (t * (t + n - 1.0))
}

/// lim_{u→0} d(u)/u by two rounds of Richardson extrapolation over u = 1e-2, 5e-3, 2.5e-3.
pub fn speed_fit(params: &SeriesParams) -> Result<f64> {
    let h = 1e-2;
    let q: Vec<f64> = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&u| embed_dist_u(params, u).map(|d| d / u))
        .collect::<Result<_>>()?;
    let r1 = (4.0 * q[1] - q[0]) / 3.0;
    let r2 = (4.0 * q[2] - q[1]) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

#[derive(Debug, Clone)]
pub struct QiReport {
    pub u: Vec<f64>,
    /// |arccosh(I_u) − t·u| per grid point.
    pub defect: Vec<f64>,
    pub max_defect: f64,
    /// min over the grid of I_u e^{−tu}, the empirical lower-bound constant κ.
    pub kappa: f64,
    /// max over the grid of I_u e^{−tu}; at most 1.
    pub upper_ratio: f64,
    /// Whether log κ + t·u ≤ arccosh(I_u) ≤ t·u + log 2 at every grid point.
    pub in_band: bool,
    /// Least-squares slope of the defect over grid points with u ≥ 30.
    pub tail_slope: Option<f64>,
}

/// Deviation of the orbit map from the rescaled isometry u ↦ t·u.
pub fn qi_defect(params: &SeriesParams, u_grid: &[f64]) -> Result<QiReport> {
    check_embedding(params)?;
    if u_grid.is_empty() {
        return invalid("empty u grid");
    }
    let mut defect = Vec::with_capacity(u_grid.len());
    let mut kappa = f64::INFINITY;
    let mut upper_ratio: f64 = 0.0;
    let mut dists = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        if !(0.0..=40.0).contains(&u) {
            return invalid(format!("u = {u} outside [0, 40]"));
        }
        let iu = pairing_iu(params, u)?;
        let ratio = iu * (-params.t * u).exp();
        kappa = kappa.min(ratio);
        upper_ratio = upper_ratio.max(ratio);
        let d = embed_dist_u(params, u)?;
        dists.push(d);
        defect.push((d - params.t * u).abs());
    }
    let ln2 = std::f64::consts::LN_2;
    let in_band = u_grid
        .iter()
        .zip(&dists)
        .all(|(&u, &d)| d <= params.t * u + ln2 + 1e-12 && d >= params.t * u + kappa.ln() - 1e-12);
    let tail: Vec<(f64, f64)> = u_grid.iter().zip(&defect).filter(|(u, _)| **u >= 30.0).map(|(u, d)| (*u, *d)).collect();
    let tail_slope = least_squares_slope(&tail);
    let max_defect = defect.iter().cloned().fold(0.0, f64::max);
    Ok(QiReport { u: u_grid.to_vec(), defect, max_defect, kappa, upper_ratio, in_band, tail_slope })
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Pole-normalized zonal coefficients ā_k(u), k ≤ K, of π_s(g_u)·1, so that
/// π_s(g_u)·1 = Σ_k p_k ā_k(u) Z̃_k with Z̃_k(1) = 1; ā_0 = I_u.
pub fn orbit_coeffs(params: &SeriesParams, u: f64, k_max: usize) -> Result<Vec<f64>> {
    check_u(u)?;
    let n = params.n;
    let rule = CapRule::new(n, u, k_max as f64);
    let e = params.kernel_exponent();
    let mut acc = vec![0.0; k_max + 1];
    let mut z = vec![0.0; k_max + 1];
    for i in 0..rule.len() {
        let f = (-e * log_base(u, rule.half_gap[i])).exp();
        zonal_values(n, rule.x(i), &mut z);
        let wf = rule.weight[i] * f;
        for (a, zk) in acc.iter_mut().zip(&z) {
            *a += wf * zk;
        }
    }
    for (k, a) in acc.iter_mut().enumerate() {
        *a /= (dim_hk(n, k) as f64).sqrt();
        if !a.is_finite() {
            return Err(Error::Numerical(format!("zonal coefficient {k} is not finite at u = {u}")));
        }
    }
    Ok(acc)
}

/// B_t(π_s(g_u)·1, π_s(g_u)·1) from K truncated blocks; equals 1 on the hyperboloid.
pub fn norm_conservation(params: &SeriesParams, u: f64, k_max: usize) -> Result<f64> {
    let a = orbit_coeffs(params, u, k_max)?;
    let w = WeightVector::new(*params, k_max);
    Ok((0..=k_max).map(|k| w.lam[k] * dim_hk(params.n, k) as f64 * a[k] * a[k]).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRoute {
    pub quadrature: f64,
    pub truncated: f64,
    pub gap: f64,
}

/// Compares I_u with B_t(π_s(g_{u/2})·1, π_s(g_{−u/2})·1) summed over K blocks,
/// using ā_k(−u) = (−1)^k ā_k(u).
pub fn two_route(params: &SeriesParams, u: f64, k_max: usize) -> Result<TwoRoute> {
    let quadrature = pairing_iu(params, u)?;
    let half = orbit_coeffs(params, 0.5 * u, k_max)?;
    let w = WeightVector::new(*params, k_max);
    let truncated: f64 = (0..=k_max)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * w.lam[k] * dim_hk(params.n, k) as f64 * half[k] * half[k]
        })
        .sum();
    Ok(TwoRoute { quadrature, truncated, gap: (quadrature - truncated).abs() })
}

/// Zonal matrix of π_s(g_u): entry (j, k) = ∫ π_s(g_u)Z_k · Z_j in the orthonormal zonal basis,
/// rows j ≤ k_out, columns k ≤ k_in.
pub fn zonal_action(params: &SeriesParams, u: f64, k_out: usize, k_in: usize) -> Result<DMatrix<f64>> {
    check_u(u)?;
    let n = params.n;
    let rule = CapRule::new(n, u, k_in as f64 * u.exp() + k_out as f64);
    let e = params.kernel_exponent();
    let mut m = DMatrix::zeros(k_out + 1, k_in + 1);
    let mut zo = vec![0.0; k_out + 1];
    let mut zi = vec![0.0; k_in + 1];
    let grow = u.exp();
    for i in 0..rule.len() {
        let lb = log_base(u, rule.half_gap[i]);
        let f = (-e * lb).exp();
        // 1 − x′ = 2 sin²(θ/2) e^u / base for x′ = g_u⁻¹ acting on b₁.
        let x_pre = 1.0 - 2.0 * rule.half_gap[i] * grow * (-lb).exp();
        zonal_values(n, rule.x(i), &mut zo);
        zonal_values(n, x_pre.clamp(-1.0, 1.0), &mut zi);
        let wf = rule.weight[i] * f;
        for (j, zj) in zo.iter().enumerate() {
            let c = wf * zj;
            for (k, zk) in zi.iter().enumerate() {
                m[(j, k)] += c * zk;
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct BoundaryDirection {
    /// Orthonormal zonal coefficients, a₀ = 1.
    pub coeffs: ZonalCoeffs,
    /// |ā_k(u_max) − ā_k(u_max − 1)| per k (before extrapolation).
    pub increments: Vec<f64>,
    pub max_increment: f64,
    pub u_max: f64,
}

impl BoundaryDirection {
    pub fn pole_normalized(&self) -> Vec<f64> {
        self.coeffs.pole_normalized()
    }
}

/// Attracting isotropic direction lim_{u→∞} e^{−tu} π_s(g_u)·1, normalized to ā₀ = 1,
/// from the ratios ā_k(u)/ā_0(u) at u_max − 2, u_max − 1, u_max with Aitken extrapolation.
pub fn boundary_direction(ep: &EmbedParams, u_max: f64, tol: f64) -> Result<BoundaryDirection> {
    if !(3.0..=60.0).contains(&u_max) {
        return invalid(format!("u_max = {u_max} must lie in [3, 60]"));
    }
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let k_max = ep.k_max;
    let ratios: Vec<Vec<f64>> = [u_max - 2.0, u_max - 1.0, u_max]
        .iter()
        .map(|&u| orbit_coeffs(&ep.params, u, k_max).map(|a| a.iter().map(|v| v / a[0]).collect()))
        .collect::<Result<_>>()?;
    let mut bar = Vec::with_capacity(k_max + 1);
    let mut increments = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let (r1, r2, r3) = (ratios[0][k], ratios[1][k], ratios[2][k]);
        let (d1, d2) = (r2 - r1, r3 - r2);
        let denom = d2 - d1;
        let value = if d2.abs() < d1.abs() && denom.abs() > 1e-300 { r3 - d2 * d2 / denom } else { r3 };
        bar.push(value);
        increments.push(d2.abs());
    }
    let max_increment = increments.iter().cloned().fold(0.0, f64::max);
    if max_increment > tol {
        return Err(Error::Numerical(format!(
            "boundary direction not converged at u_max = {u_max}: last increment {max_increment:e} > {tol:e}"
        )));
    }
    let a = bar.iter().enumerate().map(|(k, b)| b * (dim_hk(ep.params.n, k) as f64).sqrt()).collect();
    Ok(BoundaryDirection { coeffs: ZonalCoeffs { n: ep.params.n, a }, increments, max_increment, u_max })
}

/// Input degree needed to resolve outputs up to `k_out` under g_u, which stretches
/// frequencies by e^u near the attracting point.
pub fn eigen_input_degree(u: f64, k_out: usize) -> usize {
    (k_out as f64 * u.exp()).ceil() as usize + 32
}

/// ‖π_s(g_u)ξ − e^{tu}ξ‖/‖e^{tu}ξ‖ on output degrees ≤ `k_out`, with every stored
/// coefficient of ξ as input.
pub fn eigen_residual(params: &SeriesParams, dir: &BoundaryDirection, u: f64, k_out: usize) -> Result<f64> {
    let k_in = dir.coeffs.k_max();
    let need = eigen_input_degree(u, k_out);
    if k_in < need {
        return invalid(format!("direction has degree {k_in}, need at least {need} for outputs up to {k_out}"));
    }
    let m = zonal_action(params, u, k_out, k_in)?;
    let x = DVector::from_column_slice(&dir.coeffs.a);
    let y = m * x;
    let scale = (params.t * u).exp();
    let target = DVector::from_fn(k_out + 1, |j, _| scale * dir.coeffs.a[j]);
    Ok((y - &target).norm() / target.norm())
}

/// B_t(ξ, ξ)/Σ|λ_k| p_k ā_k² over the common truncation.
pub fn isotropy_ratio(dir: &BoundaryDirection, weights: &WeightVector) -> Result<f64> {
    let bar = dir.pole_normalized();
    let k_max = bar.len().min(weights.lam.len()) - 1;
    let mut signed = 0.0;
    let mut total = 0.0;
    for k in 0..=k_max {
        let term = dim_hk(dir.coeffs.n, k) as f64 * bar[k] * bar[k];
        signed += weights.lam[k] * term;
        total += weights.lam[k].abs() * term;
    }
    if total == 0.0 {
        return Err(Error::Numerical("zero weighted norm".into()));
    }
    Ok(signed / total)
}

#[derive(Debug, Clone)]
pub struct DivergenceReport {
    pub k_list: Vec<usize>,
    /// Σ_{k≤K} p_k ā_k².
    pub s_plain: Vec<f64>,
    /// Σ_{k≤K} |λ_k| p_k ā_k².
    pub s_weighted: Vec<f64>,
    /// Fitted exponent of S_plain(K) ~ K^α.
    pub exponent: f64,
    /// S_weighted(K_last) − S_weighted(K_first).
    pub weighted_tail: f64,
    pub plain_increasing: bool,
    pub verdict: bool,
}

/// Partial sums showing that ξ has infinite L² norm but finite |B_t| norm.
pub fn l2_divergence_diag(
    bar: &[f64],
    n: usize,
    weights: &WeightVector,
    k_list: &[usize],
    tol: f64,
) -> Result<DivergenceReport> {
    if k_list.len() < 2 {
        return invalid("need at least two truncations");
    }
    let k_top = *k_list.iter().max().unwrap();
    if k_top >= bar.len() || k_top > weights.k_max() {
        return Err(Error::DimensionMismatch { expected: k_top + 1, got: bar.len().min(weights.lam.len()) });
    }
    let mut s_plain = Vec::new();
    let mut s_weighted = Vec::new();
    for &kk in k_list {
        let mut p = 0.0;
        let mut w = 0.0;
        for k in 0..=kk {
            let term = dim_hk(n, k) as f64 * bar[k] * bar[k];
            p += term;
            w += weights.lam[k].abs() * term;
        }
        s_plain.push(p);
        s_weighted.push(w);
    }
    let logs: Vec<(f64, f64)> = k_list
        .iter()
        .zip(&s_plain)
        .filter(|(_, s)| **s > 0.0)
        .map(|(k, s)| ((*k as f64).ln(), s.ln()))
        .collect();
    let exponent = least_squares_slope(&logs).unwrap_or(0.0);
    let plain_increasing = s_plain.windows(2).all(|w| w[1] > w[0]);
    let weighted_tail = (s_weighted[s_weighted.len() - 1] - s_weighted[0]).abs();
    let verdict = plain_increasing && exponent > 0.0 && weighted_tail < tol;
    Ok(DivergenceReport {
        k_list: k_list.to_vec(),
        s_plain,
        s_weighted,
        exponent,
        weighted_tail,
        plain_increasing,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlSlope {
    pub a1: f64,
    /// g preserves the measure (g fixes the basepoint), so a₁ = 0.
    pub degenerate: bool,
}

/// a₁ = −(1/(n−1)) ∫ log|Jac(g⁻¹)| db = ∫ log(cosh u − b₁ sinh u) db, the t-derivative of I_u at t = 0.
pub fn kl_slope(n: usize, g: &Isometry) -> Result<KlSlope> {
    if g.dim() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, got: g.dim() });
    }
    let u = polar(g)?.u;
    if u < 1e-12 {
        return Ok(KlSlope { a1: 0.0, degenerate: true });
    }
    let rule = CapRule::new(n, u, 0.0);
    let a1 = (0..rule.len()).map(|i| rule.weight[i] * log_base(u, rule.half_gap[i])).sum();
    Ok(KlSlope { a1, degenerate: false })
}

/// Linear coefficient of cosh d − 1 in t, fitted by least squares to a t + b t² + … over `t_list`.
pub fn fitted_kl_slope(n: usize, g: &Isometry, t_list: &[f64]) -> Result<f64> {
    if t_list.is_empty() {
        return invalid("empty t list");
    }
    let u = polar(g)?.u;
    let deg = t_list.len();
    let mut design = DMatrix::zeros(deg, deg);
    let mut rhs = DVector::zeros(deg);
    for (i, &t) in t_list.iter().enumerate() {
        let params = SeriesParams::new(n, t)?;
        check_embedding(&params)?;
        rhs[i] = pairing_iu_minus_one(&params, u)?;
        for j in 0..deg {
            design[(i, j)] = t.powi(j as i32 + 1);
        }
    }
    let sol = design
        .svd(true, true)
        .solve(&rhs, 1e-300)
        .map_err(|e| Error::Numerical(format!("slope fit failed: {e}")))?;
    Ok(sol[0])
}

/// d(f_t(o), f_t(g o))/√t, bounded as t → 0.
pub fn renorm_ratio(params: &SeriesParams, g: &Isometry) -> Result<f64> {
    Ok(embed_dist(params, g)? / params.t.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgroup::{boost, g_par, random_orthogonal, rotation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(n: usize, t: f64) -> SeriesParams {
        SeriesParams::new(n, t).unwrap()
    }

    #[test]
    fn cap_rule_integrates_polynomials() {
        for n in 2..=5 {
            for &u in &[0.0, 1.0, 20.0] {
                let rule = CapRule::new(n, u, 10.0);
                let mass: f64 = rule.weight.iter().sum();
                assert!((mass - 1.0).abs() < 1e-14, "n={n} u={u}");
                let second: f64 = (0..rule.len()).map(|i| rule.weight[i] * rule.x(i).powi(2)).sum();
                assert!((second - 1.0 / n as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn iu_basic_examples() {
        assert_eq!(pairing_iu(&p(2, 0.5), 0.0).unwrap(), 1.0);
        for n in [2, 3, 5] {
            for &u in &[0.3, 2.0, 7.0] {
                let c = pairing_iu(&p(n, 1.0), u).unwrap();
                assert!((c / u.cosh() - 1.0).abs() < 1e-12, "standard embedding n={n} u={u}");
            }
        }
    }

    #[test]
    fn iu_matches_closed_form_for_circle() {
        // Direct Gauss–Legendre on [0, π] for a moderate u.
        let params = p(2, 0.5);
        let u: f64 = 1.3;
        let (gx, gw) = gauss_legendre(400);
        let direct: f64 = gx
            .iter()
            .zip(&gw)
            .map(|(x, w)| {
                let th = 0.5 * std::f64::consts::PI * (x + 1.0);
                w * 0.5 * (u.cosh() - th.cos() * u.sinh()).powf(-1.5)
            })
            .sum();
        assert!((pairing_iu(&params, u).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_holds() {
        for n in [2, 3] {
            for &t in &[0.25, 0.5, 0.75] {
                for i in 0..=40 {
                    let u = i as f64;
                    let iu = pairing_iu(&p(n, t), u).unwrap();
                    assert!(iu <= (t * u).exp() * (1.0 + 1e-9));
                }
            }
        }
    }

    #[test]
    fn embed_dist_examples() {
        let params = p(2, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rot = rotation(2, &random_orthogonal(2, &mut rng)).unwrap();
        assert!(embed_dist(&params, &rot).unwrap() < 1e-7);
        let mut prev = 0.0;
        for i in 1..=50 {
            let d = embed_dist(&params, &boost(2, 0.1 * i as f64).unwrap()).unwrap();
            assert!(d > prev);
            prev = d;
        }
        // Orbit-coefficient route: B_t(π_s(g)1, 1) = ā_0(u).
        let g = g_par(2, std::f64::consts::E, &[0.0], &DMatrix::identity(1, 1)).unwrap();
        let u = polar(&g).unwrap().u;
        assert!((u - 1.0).abs() < 1e-12);
        let a = orbit_coeffs(&params, u, 64).unwrap();
        assert!((a[0].acosh() - embed_dist(&params, &g).unwrap()).abs() < 1e-6);
        assert!(embed_dist(&p(2, 1.5), &g).is_err());
    }

    #[test]
    fn speed_and_curvature() {
        assert!((speed(&p(3, 0.5)) - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        for n in 2..6 {
            assert!((speed(&p(n, 1.0)) - 1.0).abs() < 1e-15);
            assert!((curvature(&p(n, 1.0)) + 1.0).abs() < 1e-15);
        }
        assert!((curvature(&p(2, 0.5)) + 8.0 / 3.0).abs() < 1e-14);
        let fit = speed_fit(&p(2, 0.3)).unwrap();
        assert!((fit - speed(&p(2, 0.3))).abs() < 1e-4, "{fit}");
    }

    #[test]
    fn qi_report() {
        let grid: Vec<f64> = (0..=40).map(|i| i as f64).collect();
        let r = qi_defect(&p(2, 0.5), &grid).unwrap();
        assert_eq!(r.defect[0], 0.0);
        assert!(r.in_band);
        assert!(r.upper_ratio <= 1.0 + 1e-9);
        assert!(r.tail_slope.unwrap().abs() < 1e-3);
        assert!(qi_defect(&p(2, 0.5), &[41.0]).is_err());
    }

    #[test]
    fn two_routes_and_norm() {
        let params = p(2, 0.5);
        for &u in &[0.5, 1.0, 2.0] {
            let r = two_route(&params, u, 64).unwrap();
            assert!(r.gap < 1e-6, "u={u} gap={}", r.gap);
            assert!((norm_conservation(&params, u, 64).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn boundary_direction_examples() {
        let ep = EmbedParams::new(2, 0.5, eigen_input_degree(1.0, 64)).unwrap();
        let dir = boundary_direction(&ep, 30.0, 1e-6).unwrap();
        let bar = dir.pole_normalized();
        assert!((bar[0] - 1.0).abs() < 1e-15);
        for b in &bar {
            assert!((b - 1.0).abs() < 1e-6);
        }
        let res = eigen_residual(&ep.params, &dir, 1.0, 64).unwrap();
        assert!(res < 1e-3, "eigen residual {res}");
        assert!(eigen_residual(&ep.params, &dir, 1.0, 128).is_err());
        let mut ratios = Vec::new();
        for k in [32, 64, 96] {
            let w = WeightVector::new(ep.params, k);
            ratios.push(isotropy_ratio(&dir, &w).unwrap().abs());
        }
        assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2], "{ratios:?}");
        assert!(boundary_direction(&ep, 6.0, 1e-12).is_err());
    }

    #[test]
    fn divergence_of_constant_and_direction() {
        let w = WeightVector::new(p(2, 0.5), 96);
        let mut one = vec![0.0; 97];
        one[0] = 1.0;
        let r = l2_divergence_diag(&one, 2, &w, &[48, 96], 1e-4).unwrap();
        assert_eq!(r.s_plain[0], r.s_plain[1]);
        assert!(!r.verdict);
        let bar = vec![1.0; 97];
        let r = l2_divergence_diag(&bar, 2, &w, &[48, 96], 1e-1).unwrap();
        assert!(r.s_plain[1] / r.s_plain[0] > 1.2);
        assert!(r.exponent > 0.0);
        assert!(r.verdict);
    }

    #[test]
    fn kl_slope_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rot = rotation(3, &random_orthogonal(3, &mut rng)).unwrap();
        let k = kl_slope(3, &rot).unwrap();
        assert!(k.degenerate && k.a1 == 0.0);
        let g = boost(2, 1.0).unwrap();
        let a1 = kl_slope(2, &g).unwrap().a1;
        assert!(a1 > 0.0);
        assert!((a1 - 2.0 * (0.5f64).cosh().ln()).abs() < 1e-13);
        let fit = fitted_kl_slope(2, &g, &[0.02, 0.01, 0.005]).unwrap();
        assert!((fit / a1 - 1.0).abs() < 0.02);
        let r: Vec<f64> = [0.02, 0.01, 0.005].iter().map(|&t| renorm_ratio(&p(2, t), &g).unwrap()).collect();
        let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert!(hi / lo < 1.2);
    }
}
