//! Isom(Hⁿ) as (n+1)×(n+1) matrices preserving x₁² − x₂² − … − x²_{n+1}.
//!
//! Parabolic elements g_{λ,v,A} are written in the frame (ξ₁, ξ₂, e₃, …) with
//! ξ₁ = (e₁+e₂)/√2 and ξ₂ = (e₁−e₂)/√2, then converted to the canonical basis.
//! Under the isomorphism with the similarity group, g_{λ,v,A} acts on Rⁿ⁻¹ as
//! x ↦ λAx + λv.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::quadspace::{isometry_from_matrix, Isometry, QuadSpace};

/// Orthogonal change of basis whose columns are ξ₁, ξ₂, e₃, …, e_{n+1}.
#[derive(Debug, Clone)]
pub struct BasisFrame {
    matrix: DMatrix<f64>,
}

impl BasisFrame {
    pub fn new(n: usize) -> Self {
        let mut matrix = DMatrix::identity(n + 1, n + 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        matrix[(0, 0)] = h;
        matrix[(1, 0)] = h;
        matrix[(0, 1)] = h;
        matrix[(1, 1)] = -h;
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Converts a matrix written in the ξ-frame to the canonical basis.
    pub fn to_canonical(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.matrix * m * self.matrix.transpose()
    }

    pub fn to_frame(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.matrix.transpose() * m * &self.matrix
    }

    pub fn xi1(&self) -> DVector<f64> {
        self.matrix.column(0).into_owned()
    }

    pub fn xi2(&self) -> DVector<f64> {
        self.matrix.column(1).into_owned()
    }
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 2 {
        return invalid(format!("hyperbolic dimension n = {n} must be at least 2"));
    }
    Ok(())
}

pub fn space(n: usize) -> Result<QuadSpace> {
    check_dimension(n)?;
    QuadSpace::lorentz(n + 1)
}

fn check_orthogonal(a: &DMatrix<f64>, m: usize) -> Result<()> {
    if a.nrows() != m || a.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, got: a.nrows() });
    }
    let defect = (a.transpose() * a - DMatrix::identity(m, m)).amax();
    if defect > 1e-12 {
        return invalid(format!("matrix is not orthogonal (defect {defect:.3e})"));
    }
    Ok(())
}

/// Parameters (λ, v, A) of an element of the parabolic subgroup fixing [ξ₁].
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicElement {
    pub lambda: f64,
    pub v: DVector<f64>,
    pub a: DMatrix<f64>,
}

impl ParabolicElement {
    pub fn new(lambda: f64, v: DVector<f64>, a: DMatrix<f64>) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return invalid(format!("lambda = {lambda} must be positive"));
        }
        check_orthogonal(&a, v.len())?;
        Ok(Self { lambda, v, a })
    }

    pub fn identity(n: usize) -> Self {
        Self { lambda: 1.0, v: DVector::zeros(n - 1), a: DMatrix::identity(n - 1, n - 1) }
    }

    /// Dimension n of the hyperbolic space the element acts on.
    pub fn n(&self) -> usize {
        self.v.len() + 1
    }

    /// Matrix in the ξ-frame.
    pub fn frame_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let lam = self.lambda;
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m[(0, 0)] = lam;
        m[(0, 1)] = 0.5 * lam * self.v.norm_squared();
        let row = self.a.transpose() * &self.v;
        for j in 0..n - 1 {
            m[(0, j + 2)] = lam * row[j];
            m[(j + 2, 1)] = self.v[j];
            for k in 0..n - 1 {
                m[(j + 2, k + 2)] = self.a[(j, k)];
            }
        }
        m[(1, 1)] = lam.recip();
        m
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        BasisFrame::new(self.n()).to_canonical(&self.frame_matrix())
    }

    /// Product in the group: g_{λ,v,A}·g_{μ,w,B} = g_{λμ, Aw + v/μ, AB}.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            lambda: self.lambda * other.lambda,
            v: &self.a * &other.v + &self.v / other.lambda,
            a: &self.a * &other.a,
        }
    }

    pub fn inverse(&self) -> Self {
        let a_inv = self.a.transpose();
        Self { lambda: self.lambda.recip(), v: -(&a_inv * &self.v) * self.lambda, a: a_inv }
    }

    /// Action on Rⁿ⁻¹ through the similarity isomorphism: x ↦ λAx + λv.
    pub fn similarity_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.a * x + &self.v) * self.lambda
    }
}

pub fn g_par(n: usize, lambda: f64, v: &[f64], a: &DMatrix<f64>) -> Result<Isometry> {
    check_dimension(n)?;
    if v.len() != n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, got: v.len() });
    }
    let p = ParabolicElement::new(lambda, DVector::from_column_slice(v), a.clone())?;
    isometry_from_matrix(&space(n)?, p.matrix())
}

/// The boost g_u = g_{e^u,0,Id}, translating along the e₁e₂-axis by u.
pub fn boost(n: usize, u: f64) -> Result<Isometry> {
    isometry_from_matrix(&space(n)?, boost_matrix(n, u))
}

pub(crate) fn boost_matrix(n: usize, u: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(n + 1, n + 1);
    m[(0, 0)] = u.cosh();
    m[(1, 1)] = u.cosh();
    m[(0, 1)] = u.sinh();
    m[(1, 0)] = u.sinh();
    m
}

/// Element of the stabilizer K of the basepoint acting by `rot` on e₂, …, e_{n+1}.
pub fn rotation(n: usize, rot: &DMatrix<f64>) -> Result<Isometry> {
    check_dimension(n)?;
    check_orthogonal(rot, n)?;
    isometry_from_matrix(&space(n)?, embed_rotation(rot))
}

pub(crate) fn embed_rotation(rot: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rot.nrows();
    let mut m = DMatrix::identity(n + 1, n + 1);
    m.view_mut((1, 1), (n, n)).copy_from(rot);
    m
}

pub fn sigma_matrix(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, 1)] = 1.0;
    m[(1, 0)] = 1.0;
    for j in 2..=n {
        m[(j, j)] = 1.0;
    }
    m[(2, 2)] = -1.0;
    BasisFrame::new(n).to_canonical(&m)
}

/// The involution σ swapping ξ₁ and ξ₂ and reflecting e₃.
pub fn sigma(n: usize) -> Result<Isometry> {
    check_dimension(n)?;
    isometry_from_matrix(&space(n)?, sigma_matrix(n))
}

#[derive(Debug, Clone)]
pub struct SigmaRelation {
    pub w: DVector<f64>,
    pub eta: f64,
    pub u: DVector<f64>,
    pub a: DMatrix<f64>,
    pub residual: f64,
}

/// Evaluates σ·g_{λ,v}·σ·g_{μ,w}·g_{λ,v}·σ against g_{η,u,A} with
/// w/λ + v = −2J₁v/(λμ|v|²), η = 2/(λ²μ|v|²), u = λμJ₁v, A = s_u∘J₁.
pub fn sigma_relation(n: usize, lambda: f64, mu: f64, v: &[f64]) -> Result<SigmaRelation> {
    check_dimension(n)?;
    if v.len() != n - 1 {
        return Err(Error::DimensionMismatch { expected: n - 1, got: v.len() });
    }
    if !(lambda > 0.0 && mu > 0.0) {
        return invalid("lambda and mu must be positive");
    }
    let v = DVector::from_column_slice(v);
    let v_sq = v.norm_squared();
    if v_sq == 0.0 {
        return invalid("the relation needs v != 0");
    }
    let mut j1v = v.clone();
    j1v[0] = -j1v[0];
    let w = (-&j1v * (2.0 / (lambda * mu * v_sq)) - &v) * lambda;
    let eta = 2.0 / (lambda * lambda * mu * v_sq);
    let u = &j1v * (lambda * mu);
    let m = n - 1;
    let mut j1 = DMatrix::identity(m, m);
    j1[(0, 0)] = -1.0;
    let reflection = DMatrix::identity(m, m) - &u * u.transpose() * (2.0 / u.norm_squared());
    let a = reflection * j1;

    let id = DMatrix::identity(m, m);
    let s = sigma_matrix(n);
    let gv = ParabolicElement::new(lambda, v.clone(), id.clone())?.matrix();
    let gw = ParabolicElement::new(mu, w.clone(), id)?.matrix();
    let lhs = &s * &gv * &s * gw * gv * &s;
    let rhs = ParabolicElement::new(eta, u.clone(), a.clone())?.matrix();
    let residual = (lhs - rhs).norm();
    Ok(SigmaRelation { w, eta, u, a, residual })
}

/// Action of a group matrix on the boundary sphere S^{n−1}: ω ↦ g·ω.
pub fn act_on_sphere(g: &DMatrix<f64>, omega: &[f64]) -> Vec<f64> {
    let n = omega.len();
    let mut image = vec![0.0; n + 1];
    for (i, slot) in image.iter_mut().enumerate() {
        let mut acc = g[(i, 0)];
        for j in 0..n {
            acc += g[(i, j + 1)] * omega[j];
        }
        *slot = acc;
    }
    image[1..].iter().map(|c| c / image[0]).collect()
}

/// |Jac(g⁻¹)| at the boundary point ω of the unit sphere, i.e. the Poisson kernel
/// (B(o,b)/B(g·o,b))^{n−1} for b = (1, ω).
pub fn jacobian_sphere(g: &DMatrix<f64>, omega: &[f64]) -> f64 {
    let n = omega.len();
    let mut pairing = g[(0, 0)];
    for j in 0..n {
        pairing -= g[(j + 1, 0)] * omega[j];
    }
    pairing.powi(-(n as i32 - 1))
}

/// Poisson kernel |Jac(g⁻¹)|(b) = (B(o,b)/B(g·o,b))^{n−1}; scale-invariant in b.
pub fn jacobian(g: &Isometry, b: &crate::quadspace::BoundaryRay) -> Result<f64> {
    let m = g.matrix();
    let dim = m.nrows();
    if b.coords().len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: b.coords().len() });
    }
    let q = QuadSpace::lorentz(dim)?;
    let go = m.column(0).into_owned();
    let num = b.coords()[0];
    let den = q.bform_unchecked(go.as_slice(), b.coords().as_slice());
    if !(den > 0.0) {
        return Err(Error::Invariant(format!("B(g·o, b) = {den} is not positive")));
    }
    Ok((num / den).powi(dim as i32 - 2))
}

#[derive(Debug, Clone)]
pub struct Iwasawa {
    pub k: DMatrix<f64>,
    pub lambda: f64,
    pub v: DVector<f64>,
    pub residual: f64,
}

/// Writes g = k·g_{λ,v,Id} with k fixing the basepoint, reading λ and v from the
/// horospherical coordinates of g⁻¹·o.
pub fn iwasawa(g: &Isometry) -> Result<Iwasawa> {
    let m = g.matrix();
    let n = m.nrows() - 1;
    check_dimension(n)?;
    let q = space(n)?;
    let frame = BasisFrame::new(n);
    let y = q.isometry_inverse(m).column(0).into_owned();
    let beta = q.bform_unchecked(y.as_slice(), frame.xi1().as_slice());
    if !(beta > 0.0) {
        return Err(Error::Numerical(format!("horospherical coordinate {beta} is not positive")));
    }
    let lam_h = (std::f64::consts::SQRT_2 * beta).recip();
    let v_h = DVector::from_iterator(n - 1, y.iter().skip(2).map(|c| c * std::f64::consts::SQRT_2));
    let h = ParabolicElement::new(lam_h, v_h, DMatrix::identity(n - 1, n - 1))?;
    let an = h.inverse();
    let k = m * h.matrix();
    let residual = (&k * an.matrix() - m).norm();
    Ok(Iwasawa { k, lambda: an.lambda, v: an.v, residual })
}

#[derive(Debug, Clone)]
pub struct Polar {
    pub k: DMatrix<f64>,
    pub u: f64,
    pub k_prime: DMatrix<f64>,
    pub residual: f64,
}

/// Writes g = k·g_u·k′ with k, k′ fixing the basepoint. The representative k is the
/// reflection in the rotation block sending e₂ to the direction of g·o (identity
/// when that direction is already e₂).
pub fn polar(g: &Isometry) -> Result<Polar> {
    polar_matrix(g.matrix())
}

pub(crate) fn polar_matrix(m: &DMatrix<f64>) -> Result<Polar> {
    let n = m.nrows() - 1;
    check_dimension(n)?;
    let q = space(n)?;
    let spatial: Vec<f64> = (1..=n).map(|i| m[(i, 0)]).collect();
    let radius = spatial.iter().map(|c| c * c).sum::<f64>().sqrt();
    let u = radius.asinh();
    let mut rot = DMatrix::identity(n, n);
    if radius > 1e-300 {
        let omega: Vec<f64> = spatial.iter().map(|c| c / radius).collect();
        let mut w = DVector::from_column_slice(&omega);
        w[0] -= 1.0;
        w.neg_mut();
        let w_sq = w.norm_squared();
        if w_sq > 1e-28 {
            rot -= &w * w.transpose() * (2.0 / w_sq);
        }
    }
    let k = embed_rotation(&rot);
    let k_prime = boost_matrix(n, -u) * q.isometry_inverse(&k) * m;
    let residual = (&k * boost_matrix(n, u) * &k_prime - m).norm();
    Ok(Polar { k, u, k_prime, residual })
}

/// |Jac(g⁻¹)(b)|^{1/2+s} against λ′^{−(1/2+s)(n−1)} with g⁻¹k = k′·g_{λ′,v′,Id} and b = [kξ₁];
/// `k` must fix the basepoint. Returns the relative residual.
pub fn iwasawa_jacobian_residual(g: &Isometry, k: &DMatrix<f64>, s: f64) -> Result<f64> {
    let n = g.dim() - 1;
    let q = space(n)?;
    let g_inv = q.isometry_inverse(g.matrix());
    let h = isometry_from_matrix(&q, &g_inv * k)?;
    let lambda = iwasawa(&h)?.lambda;
    let b = crate::quadspace::BoundaryRay::new(&q, (k * BasisFrame::new(n).xi1()).as_slice())?;
    let power = 0.5 + s;
    let lhs = jacobian(g, &b)?.powf(power);
    let rhs = lambda.powf(-power * (n as f64 - 1.0));
    Ok((lhs - rhs).abs() / rhs)
}

/// Normalized boundary integral of |Jac(g⁻¹)| by a sphere grid of the given degree (n ∈ {2, 3}).
pub fn jacobian_integral(g: &Isometry, degree: usize) -> Result<f64> {
    let n = g.dim() - 1;
    let grid = crate::harmonics::SphereGrid::new(n, degree)?;
    Ok(grid.points.iter().zip(&grid.weights).map(|(w, wt)| wt * jacobian_sphere(g.matrix(), w)).sum())
}

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with sign correction).
pub fn random_orthogonal<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<f64> {
    let gauss = DMatrix::from_fn(m, m, |_, _| standard_normal(rng));
    let qr = gauss.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            for i in 0..m {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random parabolic element with λ ∈ [0.5, 2], |v| ≲ 1 and Haar-random A.
pub fn random_parabolic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ParabolicElement {
    let lambda = (rng.gen_range(-0.7..0.7f64)).exp();
    let v = DVector::from_fn(n - 1, |_, _| rng.gen_range(-1.0..1.0));
    let a = random_orthogonal(n - 1, rng);
    ParabolicElement { lambda, v, a }
}

/// Product of `len` random generators drawn from P and {σ}.
pub fn random_word<R: Rng + ?Sized>(n: usize, len: usize, rng: &mut R) -> Result<Isometry> {
    let mut m = DMatrix::identity(n + 1, n + 1);
    let s = sigma_matrix(n);
    for _ in 0..len {
        if rng.gen_bool(0.3) {
            m *= &s;
        } else {
            m *= random_parabolic(n, rng).matrix();
        }
    }
    isometry_from_matrix(&space(n)?, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadspace::{BoundaryRay, IsometryKind, CERT_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frame_vectors() {
        let f = BasisFrame::new(3);
        let q = space(3).unwrap();
        let (x1, x2) = (f.xi1(), f.xi2());
        assert_eq!(q.bform(x1.as_slice(), x1.as_slice()).unwrap(), 0.0);
        assert!((q.bform(x1.as_slice(), x2.as_slice()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn g_par_examples() {
        let id = DMatrix::identity(2, 2);
        let g = g_par(3, 1.0, &[0.0, 0.0], &id).unwrap();
        assert!((g.matrix() - DMatrix::identity(4, 4)).amax() < 1e-15);
        let h = g_par(3, std::f64::consts::E, &[0.0, 0.0], &id).unwrap();
        assert_eq!(h.kind(), IsometryKind::Hyperbolic);
        assert!((h.translation_length() - 1.0).abs() < 1e-12);
        let p = g_par(3, 1.0, &[0.3, -0.2], &id).unwrap();
        assert_eq!(p.kind(), IsometryKind::Parabolic);
        assert!(g_par(3, 1.0, &[0.0, 0.0], &DMatrix::from_element(2, 2, 1.0)).is_err());
        assert!(g_par(3, -1.0, &[0.0, 0.0], &id).is_err());
    }

    #[test]
    fn boost_is_parabolic_family_member() {
        let b = boost(3, 0.9).unwrap();
        let p = ParabolicElement::new(0.9f64.exp(), DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        assert!((b.matrix() - p.matrix()).amax() < 1e-14);
    }

    #[test]
    fn composition_law_matches_matrices_and_similarities() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=4 {
            for _ in 0..20 {
                let a = random_parabolic(n, &mut rng);
                let b = random_parabolic(n, &mut rng);
                let c = a.compose(&b);
                assert!((a.matrix() * b.matrix() - c.matrix()).amax() < 1e-12);
                let x = DVector::from_fn(n - 1, |_, _| rng.gen_range(-2.0..2.0));
                let lhs = a.similarity_apply(&b.similarity_apply(&x));
                assert!((lhs - c.similarity_apply(&x)).amax() < 1e-12);
                let inv = a.compose(&a.inverse());
                assert!((inv.matrix() - DMatrix::identity(n + 1, n + 1)).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_matrix(3);
        assert!((&s * &s - DMatrix::identity(4, 4)).amax() < 1e-14);
        let f = BasisFrame::new(3);
        assert!((&s * f.xi1() - f.xi2()).amax() < 1e-15);
        assert!((&s * f.xi2() - f.xi1()).amax() < 1e-15);
        let g2 = g_par(3, 2.0, &[0.0, 0.0], &DMatrix::identity(2, 2)).unwrap();
        let g_half = g_par(3, 0.5, &[0.0, 0.0], &DMatrix::identity(2, 2)).unwrap();
        assert!((&s * g2.matrix() * &s - g_half.matrix()).amax() < 1e-14);
        assert_eq!(sigma(3).unwrap().kind(), IsometryKind::Elliptic);
    }

    #[test]
    fn sigma_relation_examples() {
        let r = sigma_relation(3, 1.0, 1.0, &[1.0, 0.0]).unwrap();
        assert!((r.w[0] - 1.0).abs() < 1e-15 && r.w[1].abs() < 1e-15);
        assert!((r.eta - 2.0).abs() < 1e-15);
        assert!((r.u[0] + 1.0).abs() < 1e-15 && r.u[1].abs() < 1e-15);
        assert!(r.residual < 1e-10);
        let r2 = sigma_relation(2, 2.0, 0.5, &[1.0]).unwrap();
        assert!(r2.residual < 1e-10);
        let big = sigma_relation(3, 1.3, 0.7, &[0.4, -0.9]).unwrap();
        let double = sigma_relation(3, 1.3, 0.7, &[0.8, -1.8]).unwrap();
        assert!((double.eta - big.eta / 4.0).abs() < 1e-14);
        assert!(sigma_relation(3, 1.0, 1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn iwasawa_examples() {
        let p = g_par(3, 1.7, &[0.4, -0.3], &DMatrix::identity(2, 2)).unwrap();
        let iw = iwasawa(&p).unwrap();
        assert!((iw.k.clone() - DMatrix::identity(4, 4)).amax() < 1e-12);
        assert!((iw.lambda - 1.7).abs() < 1e-12);
        assert!((iw.v[0] - 0.4).abs() < 1e-12 && (iw.v[1] + 0.3).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rot = rotation(3, &random_orthogonal(3, &mut rng)).unwrap();
        let iw = iwasawa(&rot).unwrap();
        assert!((iw.lambda - 1.0).abs() < 1e-12 && iw.v.amax() < 1e-12);
        for _ in 0..20 {
            let g = random_word(3, 5, &mut rng).unwrap();
            let iw = iwasawa(&g).unwrap();
            assert!(iw.residual < 1e-10, "residual {}", iw.residual);
            assert!((iw.k[(0, 0)] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn polar_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rot = rotation(3, &random_orthogonal(3, &mut rng)).unwrap();
        assert!(polar(&rot).unwrap().u.abs() < 1e-12);
        let b = boost(3, 2.0).unwrap();
        let pd = polar(&b).unwrap();
        assert!((pd.u - 2.0).abs() < 1e-12);
        assert!((pd.k.clone() - DMatrix::identity(4, 4)).amax() < 1e-12);
        assert!((pd.k_prime.clone() - DMatrix::identity(4, 4)).amax() < 1e-12);
        let q = space(3).unwrap();
        for _ in 0..20 {
            let g = random_word(3, 5, &mut rng).unwrap();
            let pd = polar(&g).unwrap();
            assert!(pd.residual < 1e-10 * g.matrix().amax().max(1.0));
            assert!((pd.u.cosh() - g.matrix()[(0, 0)]).abs() < 1e-9 * g.matrix()[(0, 0)]);
            assert!(q.form_defect(&pd.k_prime).unwrap() < CERT_TOL * g.matrix().amax().powi(2));
            assert!((pd.k_prime[(0, 0)] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn jacobian_examples() {
        let n = 3;
        let id = boost(n, 0.0).unwrap();
        let ray = BoundaryRay::from_sphere(&[0.6, 0.0, 0.8]).unwrap();
        assert!((jacobian(&id, &ray).unwrap() - 1.0).abs() < 1e-15);
        let u = 1.0f64;
        let g = boost(n, u).unwrap();
        for &b1 in &[-0.9f64, -0.2, 0.0, 0.5, 0.99] {
            let rest = (1.0 - b1 * b1).sqrt();
            let ray = BoundaryRay::from_sphere(&[b1, rest, 0.0]).unwrap();
            let expected = (u.cosh() - b1 * u.sinh()).powi(-(n as i32 - 1));
            assert!((jacobian(&g, &ray).unwrap() - expected).abs() < 1e-12 * expected);
            assert!((jacobian_sphere(g.matrix(), &[b1, rest, 0.0]) - expected).abs() < 1e-12 * expected);
        }
    }

    #[test]
    fn jacobian_iwasawa_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 2..=3 {
            for _ in 0..20 {
                let g = random_word(n, 4, &mut rng).unwrap();
                let k = rotation(n, &random_orthogonal(n, &mut rng)).unwrap();
                for &s in &[0.0, 0.25, -0.3] {
                    let r = iwasawa_jacobian_residual(&g, k.matrix(), s).unwrap();
                    assert!(r < 1e-8, "n={n} s={s}: {r}");
                }
            }
        }
        let g = boost(3, 1.0).unwrap();
        assert!((jacobian_integral(&g, 200).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sphere_action_matches_projective_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_word(3, 4, &mut rng).unwrap();
        let h = random_word(3, 4, &mut rng).unwrap();
        let omega = [0.36, 0.48, 0.8];
        let a = act_on_sphere(&(g.matrix() * h.matrix()), &omega);
        let b = act_on_sphere(g.matrix(), &act_on_sphere(h.matrix(), &omega));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
        let norm: f64 = a.iter().map(|c| c * c).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
