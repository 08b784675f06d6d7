//! Spherical harmonics on S^{n−1}: block dimensions, the zonal Gegenbauer basis
//! with its Gaussian quadrature, and full orthonormal bases for n ∈ {2, 3}.
//!
//! All measures are normalized to total mass one. The zonal functions Z_k are
//! L²-orthonormal, so Z_k(1) = √p_k where p_k = dim H^k.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Dimension p_k of the space of degree-k spherical harmonics on S^{n−1}.
pub fn dim_hk(n: usize, k: usize) -> usize {
    assert!(n >= 2, "dim_hk needs n >= 2");
    let (n, k) = (n as u64, k as u64);
    let full = binomial(n + k - 1, n - 1);
    let lower = if k >= 2 { binomial(n + k - 3, n - 1) } else { 0 };
    (full - lower) as usize
}

/// Gauss–Legendre nodes and weights on [−1, 1] (weights sum to 2).
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(m, x);
            deriv = dp;
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(m, x);
        deriv = if dp != 0.0 { dp } else { deriv };
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (1.0, 0.0);
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Monic three-term recurrence coefficient β_k of the normalized Gegenbauer
/// weight (1−x²)^{(n−3)/2}.
fn gegenbauer_beta(n: usize, k: usize) -> f64 {
    let lam = (n as f64 - 2.0) / 2.0;
    let kf = k as f64;
    if n == 2 {
        return if k == 1 { 0.5 } else { 0.25 };
    }
    kf * (kf + 2.0 * lam - 1.0) / (4.0 * (kf + lam) * (kf + lam - 1.0))
}

/// Gaussian quadrature on [−1, 1] for the weight (1−x²)^{(n−3)/2}, normalized to mass one.
#[derive(Debug, Clone)]
pub struct ZonalQuadrature {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn zonal_quadrature(n: usize, order: usize) -> Result<ZonalQuadrature> {
    if n < 2 {
        return invalid("zonal quadrature needs n >= 2");
    }
    if order < 1 {
        return invalid("quadrature order must be at least 1");
    }
    let (nodes, weights) = match n {
        2 => {
            let nodes = (0..order)
                .map(|i| (std::f64::consts::PI * (2 * (order - i) - 1) as f64 / (2 * order) as f64).cos())
                .collect();
            (nodes, vec![1.0 / order as f64; order])
        }
        3 => {
            let (x, w) = gauss_legendre(order);
            (x, w.into_iter().map(|v| 0.5 * v).collect())
        }
        _ => golub_welsch(n, order),
    };
    Ok(ZonalQuadrature { n, nodes, weights })
}

fn golub_welsch(n: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::zeros(order, order);
    for k in 1..order {
        let b = gegenbauer_beta(n, k).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1 / total).collect();
    for i in 0..order / 2 {
        let j = order - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

/// Writes Z_0(x), …, Z_K(x) into `out` (length K+1) by the orthonormal recurrence
/// x Z_k = a_{k+1} Z_{k+1} + a_k Z_{k−1}, a_k = √β_k.
pub fn zonal_values(n: usize, x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    let a1 = gegenbauer_beta(n, 1).sqrt();
    out[1] = x / a1;
    let mut a_prev = a1;
    for k in 2..out.len() {
        let a_k = gegenbauer_beta(n, k).sqrt();
        out[k] = (x * out[k - 1] - a_prev * out[k - 2]) / a_k;
        a_prev = a_k;
    }
}

/// Zonal basis Z_0..Z_K together with a quadrature rule of the given order.
#[derive(Debug, Clone)]
pub struct ZonalBasis {
    pub n: usize,
    pub k_max: usize,
    pub quad: ZonalQuadrature,
}

impl ZonalBasis {
    pub fn new(n: usize, k_max: usize, order: usize) -> Result<Self> {
        Ok(Self { n, k_max, quad: zonal_quadrature(n, order)? })
    }

    /// Basis with quadrature order 2K + 16.
    pub fn with_default_order(n: usize, k_max: usize) -> Result<Self> {
        Self::new(n, k_max, 2 * k_max + 16)
    }

    pub fn order(&self) -> usize {
        self.quad.nodes.len()
    }

    pub fn values(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.k_max + 1];
        zonal_values(self.n, x, &mut out);
        out
    }
}

/// Coefficients of f(b) = Σ a_k Z_k(b₁).
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalCoeffs {
    pub n: usize,
    pub a: Vec<f64>,
}

impl ZonalCoeffs {
    pub fn k_max(&self) -> usize {
        self.a.len().saturating_sub(1)
    }

    pub fn synthesize(&self, x: f64) -> f64 {
        let mut z = vec![0.0; self.a.len()];
        zonal_values(self.n, x, &mut z);
        z.iter().zip(&self.a).map(|(z, a)| z * a).sum()
    }

    /// Per-block magnitude ā_k = a_k/√p_k, the coefficient against the zonal
    /// function normalized to one at the pole.
    pub fn pole_normalized(&self) -> Vec<f64> {
        self.a.iter().enumerate().map(|(k, a)| a / (dim_hk(self.n, k) as f64).sqrt()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ZonalProjection {
    pub coeffs: ZonalCoeffs,
    /// ‖f‖² − Σ a_k², both by the same quadrature.
    pub parseval_defect: f64,
}

pub fn zonal_project<F: Fn(f64) -> f64>(f: F, basis: &ZonalBasis) -> Result<ZonalProjection> {
    if basis.order() < 2 * basis.k_max {
        return Err(Error::InvalidParameter(format!(
            "quadrature order {} below 2K = {} (aliasing guard)",
            basis.order(),
            2 * basis.k_max
        )));
    }
    let mut a = vec![0.0; basis.k_max + 1];
    let mut z = vec![0.0; basis.k_max + 1];
    let mut norm_sq = 0.0;
    for (&x, &w) in basis.quad.nodes.iter().zip(&basis.quad.weights) {
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::Numerical(format!("integrand is not finite at x = {x}")));
        }
        norm_sq += w * fx * fx;
        zonal_values(basis.n, x, &mut z);
        for (ak, zk) in a.iter_mut().zip(&z) {
            *ak += w * fx * zk;
        }
    }
    let parseval_defect = norm_sq - a.iter().map(|v| v * v).sum::<f64>();
    Ok(ZonalProjection { coeffs: ZonalCoeffs { n: basis.n, a }, parseval_defect })
}

/// Quadrature on S^{n−1} (n ∈ {2, 3}) with weights summing to one.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
}

impl SphereGrid {
    pub fn new(n: usize, degree: usize) -> Result<Self> {
        match n {
            2 => {
                let m = degree + 1;
                let points = (0..m)
                    .map(|j| {
                        let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                        vec![th.cos(), th.sin()]
                    })
                    .collect();
                Ok(Self { n, points, weights: vec![1.0 / m as f64; m], degree })
            }
            3 => {
                let q = degree / 2 + 1;
                let (z, wz) = gauss_legendre(q);
                let m = degree + 1;
                let mut points = Vec::with_capacity(q * m);
                let mut weights = Vec::with_capacity(q * m);
                for (zi, wi) in z.iter().zip(&wz) {
                    let rho = (1.0 - zi * zi).max(0.0).sqrt();
                    for j in 0..m {
                        let ph = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                        points.push(vec![*zi, rho * ph.cos(), rho * ph.sin()]);
                        weights.push(0.5 * wi / m as f64);
                    }
                }
                Ok(Self { n, points, weights, degree })
            }
            _ => invalid(format!("sphere grids are available for n in {{2, 3}}, got {n}")),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Block sizes p_0..p_K of ⊕_{k≤K} H^k.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub sizes: Vec<usize>,
}

impl BlockLayout {
    pub fn harmonic(n: usize, k_max: usize) -> Self {
        Self { sizes: (0..=k_max).map(|k| dim_hk(n, k)).collect() }
    }

    /// One coordinate per degree (zonal sector).
    pub fn zonal(k_max: usize) -> Self {
        Self { sizes: vec![1; k_max + 1] }
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn k_max(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn offset(&self, k: usize) -> usize {
        self.sizes[..k].iter().sum()
    }

    /// Degree of every coordinate.
    pub fn degrees(&self) -> Vec<usize> {
        self.sizes.iter().enumerate().flat_map(|(k, &s)| std::iter::repeat_n(k, s)).collect()
    }
}

/// Real orthonormal basis of ⊕_{k≤K} H^k on S^{n−1} for n ∈ {2, 3}.
///
/// Sphere points are unit vectors ω whose first coordinate is the zonal axis.
/// n = 2: 1, √2 cos kθ, √2 sin kθ with θ the angle from the axis.
/// n = 3: real spherical harmonics with polar axis ω₁ and azimuth in the (ω₂, ω₃) plane,
/// ordered within degree l as m = 0, then (cos mφ, sin mφ) for m = 1..l.
#[derive(Debug, Clone)]
pub struct SphBasis {
    pub n: usize,
    pub k_max: usize,
    pub layout: BlockLayout,
}

impl SphBasis {
    pub fn new(n: usize, k_max: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return invalid(format!("full harmonic bases are available for n in {{2, 3}}, got {n}"));
        }
        Ok(Self { n, k_max, layout: BlockLayout::harmonic(n, k_max) })
    }

    pub fn len(&self) -> usize {
        self.layout.total()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn eval(&self, omega: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(omega, &mut out);
        out
    }

    pub fn eval_into(&self, omega: &[f64], out: &mut [f64]) {
        match self.n {
            2 => eval_circle(self.k_max, omega, out),
            _ => eval_sphere(self.k_max, omega, out),
        }
    }

    /// Coefficients of `f` by quadrature on `grid`.
    pub fn project<F: Fn(&[f64]) -> f64>(&self, f: F, grid: &SphereGrid) -> Result<DVector<f64>> {
        if grid.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: grid.n });
        }
        if grid.degree < 2 * self.k_max {
            return invalid(format!("grid degree {} below 2K = {}", grid.degree, 2 * self.k_max));
        }
        let mut coeffs = DVector::zeros(self.len());
        let mut y = vec![0.0; self.len()];
        for (p, w) in grid.points.iter().zip(&grid.weights) {
            let fx = f(p);
            self.eval_into(p, &mut y);
            for (c, v) in coeffs.iter_mut().zip(&y) {
                *c += w * fx * v;
            }
        }
        Ok(coeffs)
    }

    /// Coefficient-space matrix of the rotation of S^{n−1} by `rot` (acting on
    /// functions by f ↦ f∘rot⁻¹), computed by quadrature.
    pub fn rotation_matrix(&self, rot: &DMatrix<f64>, grid: &SphereGrid) -> Result<DMatrix<f64>> {
        let dim = self.len();
        let rot_inv = rot.transpose();
        let mut m = DMatrix::zeros(dim, dim);
        let mut y = vec![0.0; dim];
        let mut yr = vec![0.0; dim];
        for (p, w) in grid.points.iter().zip(&grid.weights) {
            let pr = &rot_inv * DVector::from_column_slice(p);
            self.eval_into(p, &mut y);
            self.eval_into(pr.as_slice(), &mut yr);
            for a in 0..dim {
                let wa = w * y[a];
                for b in 0..dim {
                    m[(a, b)] += wa * yr[b];
                }
            }
        }
        Ok(m)
    }
}

fn eval_circle(k_max: usize, omega: &[f64], out: &mut [f64]) {
    let r = omega[0].hypot(omega[1]);
    let (c, s) = (omega[0] / r, omega[1] / r);
    out[0] = 1.0;
    let (mut ck, mut sk) = (1.0, 0.0);
    let root2 = std::f64::consts::SQRT_2;
    for k in 1..=k_max {
        let next_c = ck * c - sk * s;
        let next_s = sk * c + ck * s;
        ck = next_c;
        sk = next_s;
        out[2 * k - 1] = root2 * ck;
        out[2 * k] = root2 * sk;
    }
}

fn eval_sphere(k_max: usize, omega: &[f64], out: &mut [f64]) {
    let z = omega[0].clamp(-1.0, 1.0);
    let rho = omega[1].hypot(omega[2]);
    let sin_t = (1.0 - z * z).max(0.0).sqrt();
    let (cp, sp) = if rho > 0.0 { (omega[1] / rho, omega[2] / rho) } else { (1.0, 0.0) };
    let root2 = std::f64::consts::SQRT_2;
    // Normalized associated Legendre functions for one order m at a time.
    let mut pmm = 1.0;
    let (mut cm, mut sm) = (1.0, 0.0);
    for m in 0..=k_max {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin_t;
            let next_c = cm * cp - sm * sp;
            let next_s = sm * cp + cm * sp;
            cm = next_c;
            sm = next_s;
        }
        let mut p_prev = 0.0;
        let mut p_curr = if m == 0 { 1.0 } else { pmm };
        for l in m..=k_max {
            if l > m {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((2.0 * lf + 1.0) * (2.0 * lf - 1.0) / ((lf - mf) * (lf + mf))).sqrt();
                let b = if l >= m + 2 {
                    ((2.0 * lf + 1.0) * (lf - 1.0 - mf) * (lf - 1.0 + mf)
                        / ((2.0 * lf - 3.0) * (lf - mf) * (lf + mf)))
                        .sqrt()
                } else {
                    0.0
                };
                let next = a * z * p_curr - b * p_prev;
                p_prev = p_curr;
                p_curr = next;
            }
            let base = l * l;
            if m == 0 {
                out[base] = p_curr;
            } else {
                out[base + 2 * m - 1] = root2 * p_curr * cm;
                out[base + 2 * m] = root2 * p_curr * sm;
            }
        }
    }
}
