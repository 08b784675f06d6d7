//! Real quadratic spaces of finite index, the hyperboloid and Klein models,
//! and certification/classification of form-preserving matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Largest allowed entry of `MᵀJM − J` for a certified isometry.
pub const CERT_TOL: f64 = 1e-10;
/// Translation lengths at or below this are treated as zero.
pub const EPS_CLASS: f64 = 1e-8;
/// Arguments of arccosh in `[1 − ACOSH_SLACK, 1)` are clamped to 1; smaller values are errors.
pub const ACOSH_SLACK: f64 = 1e-8;

/// Diagonal quadratic form with `index` entries +1 followed by the remaining −1 entries
/// (or an arbitrary sign pattern via [`QuadSpace::from_signs`]).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpace {
    signs: Vec<f64>,
    index: usize,
}

impl QuadSpace {
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.len() < 2 {
            return invalid("quadratic space needs dimension at least 2");
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return invalid("signs must be +1 or -1");
        }
        let index = signs.iter().filter(|&&s| s == 1).count();
        if index < 1 || index >= signs.len() {
            return invalid(format!("index {index} must satisfy 1 <= p < {}", signs.len()));
        }
        Ok(Self { signs: signs.iter().map(|&s| s as f64).collect(), index })
    }

    /// Form of signature (p, dim − p) with the positive directions first.
    pub fn with_index(dim: usize, p: usize) -> Result<Self> {
        let signs: Vec<i8> = (0..dim).map(|i| if i < p { 1 } else { -1 }).collect();
        Self::from_signs(&signs)
    }

    /// Minkowski form x₁² − x₂² − … − x_N².
    pub fn lorentz(dim: usize) -> Result<Self> {
        Self::with_index(dim, 1)
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn form_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.signs))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: len });
        }
        Ok(())
    }

    pub fn bform(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        Ok(self.bform_unchecked(x, y))
    }

    pub(crate) fn bform_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.signs.iter().zip(x).zip(y).map(|((s, a), b)| s * a * b).sum()
    }

    /// Largest entry of `MᵀJM − J`.
    pub fn form_defect(&self, m: &DMatrix<f64>) -> Result<f64> {
        let n = self.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.nrows().max(m.ncols()) });
        }
        let j = self.form_matrix();
        Ok((m.transpose() * &j * m - j).amax())
    }

    /// Inverse of a form-preserving matrix, `J Mᵀ J`, exact up to rounding.
    pub fn isometry_inverse(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut inv = m.transpose();
        for i in 0..self.dim() {
            for k in 0..self.dim() {
                inv[(i, k)] *= self.signs[i] * self.signs[k];
            }
        }
        inv
    }
}

/// Clamped arccosh used for every distance evaluation.
pub fn acosh_clamped(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Numerical(format!("arccosh of non-finite value {x}")));
    }
    if x < 1.0 - ACOSH_SLACK {
        return Err(Error::Invariant(format!("arccosh argument {x} below 1")));
    }
    Ok(x.max(1.0).acosh())
}

/// Distance for a cosh-value written as `1 + m`, accurate when `m` is tiny.
pub fn acosh_one_plus(m: f64) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::Numerical(format!("arccosh of non-finite value 1 + {m}")));
    }
    if m < -ACOSH_SLACK {
        return Err(Error::Invariant(format!("arccosh argument 1 + {m} below 1")));
    }
    let m = m.max(0.0);
    if m < 1.0 {
        Ok(2.0 * (0.5 * m).sqrt().asinh())
    } else {
        Ok((1.0 + m).acosh())
    }
}

/// Point on the upper sheet of the hyperboloid `B(x,x) = 1` of an index-1 space.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    coords: DVector<f64>,
}

impl HPoint {
    /// Accepts any vector with `B(x,x) > 0`, rescales it onto the hyperboloid
    /// and flips it onto the upper sheet.
    pub fn new(space: &QuadSpace, coords: &[f64]) -> Result<Self> {
        if space.index() != 1 {
            return invalid("hyperboloid points need an index-1 space");
        }
        let q = space.bform(coords, coords)?;
        if !(q > 0.0) {
            return Err(Error::Invariant(format!("vector with B(x,x) = {q} is not timelike")));
        }
        let scale = q.sqrt().recip() * coords[0].signum();
        Ok(Self { coords: DVector::from_iterator(coords.len(), coords.iter().map(|c| c * scale)) })
    }

    pub fn basepoint(dim: usize) -> Self {
        let mut coords = DVector::zeros(dim);
        coords[0] = 1.0;
        Self { coords }
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Image under a matrix, renormalized onto the hyperboloid.
    pub fn transform(&self, space: &QuadSpace, m: &DMatrix<f64>) -> Result<Self> {
        let image = m * &self.coords;
        Self::new(space, image.as_slice())
    }
}

pub fn hdist(space: &QuadSpace, x: &HPoint, y: &HPoint) -> Result<f64> {
    if space.index() != 1 {
        return invalid("hyperbolic distance needs an index-1 space");
    }
    let b = space.bform(x.coords.as_slice(), y.coords.as_slice())?;
    if b < 1.5 {
        // B(x,y) − 1 = −B(x−y, x−y)/2 on the hyperboloid, without cancellation.
        let diff = &x.coords - &y.coords;
        return acosh_one_plus(-0.5 * space.bform(diff.as_slice(), diff.as_slice())?);
    }
    acosh_clamped(b)
}

pub fn to_klein(x: &HPoint) -> DVector<f64> {
    let c = &x.coords;
    DVector::from_iterator(c.len() - 1, c.iter().skip(1).map(|v| v / c[0]))
}

pub fn from_klein(b: &[f64]) -> Result<HPoint> {
    let norm_sq: f64 = b.iter().map(|v| v * v).sum();
    if norm_sq >= 1.0 {
        return invalid(format!("Klein point has norm {} >= 1", norm_sq.sqrt()));
    }
    let gamma = (1.0 - norm_sq).sqrt().recip();
    let mut coords = DVector::zeros(b.len() + 1);
    coords[0] = gamma;
    for (i, v) in b.iter().enumerate() {
        coords[i + 1] = gamma * v;
    }
    Ok(HPoint { coords })
}

/// Hyperbolic midpoint of two hyperboloid points.
pub fn midpoint(space: &QuadSpace, x: &HPoint, y: &HPoint) -> Result<HPoint> {
    let sum = &x.coords + &y.coords;
    HPoint::new(space, sum.as_slice())
}

/// Isotropic direction, stored with unit Euclidean norm and positive first coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRay {
    coords: DVector<f64>,
}

impl BoundaryRay {
    pub fn new(space: &QuadSpace, coords: &[f64]) -> Result<Self> {
        let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return invalid("boundary ray must be non-zero");
        }
        let sign = if coords[0] < 0.0 { -1.0 } else { 1.0 };
        let unit: Vec<f64> = coords.iter().map(|v| sign * v / norm).collect();
        let q = space.bform(&unit, &unit)?;
        if q.abs() > 1e-9 {
            return Err(Error::Invariant(format!("ray is not isotropic: B = {q}")));
        }
        Ok(Self { coords: DVector::from_vec(unit) })
    }

    /// Ray through `(1, ω)` for a unit vector ω of the boundary sphere.
    pub fn from_sphere(omega: &[f64]) -> Result<Self> {
        let space = QuadSpace::lorentz(omega.len() + 1)?;
        let mut coords = vec![1.0];
        coords.extend_from_slice(omega);
        Self::new(&space, &coords)
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// Unit vector of the boundary sphere corresponding to this ray.
    pub fn sphere_point(&self) -> Vec<f64> {
        self.coords.iter().skip(1).map(|v| v / self.coords[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsometryKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl IsometryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            IsometryKind::Elliptic => "elliptic",
            IsometryKind::Parabolic => "parabolic",
            IsometryKind::Hyperbolic => "hyperbolic",
        }
    }
}

/// Certified form-preserving matrix with its type and translation length.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    matrix: DMatrix<f64>,
    kind: IsometryKind,
    translation_length: f64,
}

impl Isometry {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> IsometryKind {
        self.kind
    }

    pub fn translation_length(&self) -> f64 {
        self.translation_length
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Checks that `M` preserves the form to within `tol`.
pub fn certify(space: &QuadSpace, m: &DMatrix<f64>, tol: f64) -> Result<()> {
    let defect = space.form_defect(m)?;
    if !(defect <= tol) {
        return Err(Error::Invariant(format!("matrix does not preserve the form: defect {defect:.3e}")));
    }
    Ok(())
}

/// Classifies a form-preserving matrix of an index-1 space.
///
/// An element is hyperbolic when it has a pair of real eigenvalues `e^{±ℓ}` with
/// `ℓ > EPS_CLASS` whose eigenvectors span two distinct isotropic lines. Without
/// that axis, the element is elliptic when the fixed space of `M` contains a
/// timelike vector and parabolic otherwise.
pub fn classify(space: &QuadSpace, m: &DMatrix<f64>) -> Result<Isometry> {
    if space.index() != 1 {
        return invalid("classification needs an index-1 space");
    }
    certify(space, m, 1e-8)?;
    let n = space.dim();
    let eigen = m.clone().complex_eigenvalues();
    let scale = m.amax().max(1.0);
    let mut outliers: Vec<f64> = Vec::new();
    let mut complex_outlier = false;
    for z in eigen.iter() {
        if (z.norm().ln()).abs() > EPS_CLASS {
            if z.im.abs() > 1e-9 * z.norm() {
                complex_outlier = true;
            } else {
                outliers.push(z.re);
            }
        }
    }
    if !complex_outlier && outliers.len() == 2 && outliers[0] * outliers[1] > 0.0 {
        let (big, small) = if outliers[0].abs() > outliers[1].abs() {
            (outliers[0], outliers[1])
        } else {
            (outliers[1], outliers[0])
        };
        let product_ok = (big * small - big.signum() * small.signum()).abs() < 1e-6 * scale;
        if product_ok {
            let plus = null_vector(m, big);
            let minus = null_vector(m, small);
            let separation = space.bform_unchecked(plus.as_slice(), minus.as_slice()).abs();
            if separation > 1e-6 {
                return Ok(Isometry {
                    matrix: m.clone(),
                    kind: IsometryKind::Hyperbolic,
                    translation_length: big.abs().ln(),
                });
            }
        }
    }
    let kind = if fixes_timelike_vector(space, m, scale) {
        IsometryKind::Elliptic
    } else {
        IsometryKind::Parabolic
    };
    debug_assert_eq!(m.nrows(), n);
    Ok(Isometry { matrix: m.clone(), kind, translation_length: 0.0 })
}

/// Certifies and classifies, for matrices built inside the toolkit.
pub(crate) fn isometry_from_matrix(space: &QuadSpace, m: DMatrix<f64>) -> Result<Isometry> {
    certify(space, &m, CERT_TOL)?;
    classify(space, &m)
}

fn null_vector(m: &DMatrix<f64>, eigenvalue: f64) -> DVector<f64> {
    let n = m.nrows();
    let shifted = m - DMatrix::identity(n, n) * eigenvalue;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty matrix");
    let row = v_t.row(idx).transpose();
    row.normalize()
}

fn fixes_timelike_vector(space: &QuadSpace, m: &DMatrix<f64>, scale: f64) -> bool {
    let n = m.nrows();
    let shifted = m - DMatrix::identity(n, n);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let tol = 1e-7 * scale;
    let kernel: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s < tol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if kernel.is_empty() {
        return false;
    }
    let k = kernel.len();
    let gram = DMatrix::from_fn(k, k, |a, b| space.bform_unchecked(kernel[a].as_slice(), kernel[b].as_slice()));
    gram.symmetric_eigenvalues().iter().any(|&e| e > 1e-6)
}

/// Realization of a Gram matrix in a space of signature (p, m − p).
#[derive(Debug, Clone)]
pub struct GramRealization {
    pub space: QuadSpace,
    pub vectors: Vec<DVector<f64>>,
    pub eigenvalues: Vec<f64>,
    pub positive_count: usize,
}

/// Finds vectors whose pairwise form values reproduce `g`, using at most `p`
/// positive directions. Fails with the positive-eigenvalue count otherwise.
pub fn gram_realize(g: &DMatrix<f64>, p: usize) -> Result<GramRealization> {
    let m = g.nrows();
    if g.ncols() != m || m == 0 {
        return invalid("Gram matrix must be square and non-empty");
    }
    let asym = (g - g.transpose()).amax();
    if asym > 1e-12 * g.amax().max(1.0) {
        return invalid(format!("Gram matrix is not symmetric (defect {asym:.3e})"));
    }
    if p < 1 {
        return invalid("index must be at least 1");
    }
    let eig = g.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let threshold = 1e-12 * scale;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let positive: Vec<usize> = order.iter().copied().filter(|&i| eig.eigenvalues[i] > threshold).collect();
    if positive.len() > p {
        return Err(Error::SignatureExceeded { positive: positive.len(), index: p });
    }
    let rest: Vec<usize> = order.iter().copied().filter(|&i| eig.eigenvalues[i] <= threshold).collect();
    let dim = m.max(p + 1);
    let mut vectors = vec![DVector::zeros(dim); m];
    for (slot, &i) in positive.iter().enumerate() {
        let root = eig.eigenvalues[i].sqrt();
        for x in 0..m {
            vectors[x][slot] = root * eig.eigenvectors[(x, i)];
        }
    }
    for (offset, &i) in rest.iter().enumerate() {
        let root = (-eig.eigenvalues[i]).max(0.0).sqrt();
        for x in 0..m {
            vectors[x][p + offset] = root * eig.eigenvectors[(x, i)];
        }
    }
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    Ok(GramRealization {
        space: QuadSpace::with_index(dim, p)?,
        vectors,
        eigenvalues: sorted,
        positive_count: positive.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boost(u: f64) -> DMatrix<f64> {
        let mut m = DMatrix::identity(3, 3);
        m[(0, 0)] = u.cosh();
        m[(1, 1)] = u.cosh();
        m[(0, 1)] = u.sinh();
        m[(1, 0)] = u.sinh();
        m
    }

    #[test]
    fn bform_examples() {
        let s = QuadSpace::lorentz(3).unwrap();
        assert_eq!(s.bform(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        let v = s.bform(&[1.0, 0.0, 0.0], &[1f64.cosh(), 1f64.sinh(), 0.0]).unwrap();
        assert!((v - 1.5430806348152437).abs() < 1e-15);
        let s2 = QuadSpace::with_index(4, 2).unwrap();
        assert_eq!(s2.bform(&[1.0; 4], &[1.0; 4]).unwrap(), 0.0);
        assert!(matches!(s.bform(&[1.0], &[1.0, 0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn space_validation() {
        assert!(QuadSpace::with_index(1, 1).is_err());
        assert!(QuadSpace::with_index(3, 3).is_err());
        assert!(QuadSpace::with_index(3, 0).is_err());
        assert!(QuadSpace::from_signs(&[1, 2]).is_err());
    }

    #[test]
    fn hdist_examples() {
        let s = QuadSpace::lorentz(3).unwrap();
        let o = HPoint::basepoint(3);
        assert_eq!(hdist(&s, &o, &o).unwrap(), 0.0);
        let y = HPoint::new(&s, &[2f64.cosh(), 2f64.sinh(), 0.0]).unwrap();
        assert!((hdist(&s, &o, &y).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hdist_rejects_bad_points() {
        let s = QuadSpace::lorentz(3).unwrap();
        assert!(HPoint::new(&s, &[0.0, 1.0, 0.0]).is_err());
        assert!(acosh_clamped(0.5).is_err());
        assert_eq!(acosh_clamped(1.0 - 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn acosh_one_plus_matches_direct_formula() {
        let tiny = acosh_one_plus(1e-12).unwrap();
        assert!((tiny / (2e-12f64).sqrt() - 1.0).abs() < 1e-12);
        for &m in &[1e-6, 0.3, 0.99, 2.0, 50.0] {
            let a = acosh_one_plus(m).unwrap();
            let b = (1.0 + m).acosh();
            assert!((a - b).abs() <= 1e-9 * b.max(1e-6), "m={m}");
        }
    }

    #[test]
    fn klein_examples() {
        let s = QuadSpace::lorentz(3).unwrap();
        let o = HPoint::basepoint(3);
        assert_eq!(to_klein(&o).as_slice(), &[0.0, 0.0]);
        let u = 0.7f64;
        let x = HPoint::new(&s, &[u.cosh(), u.sinh(), 0.0]).unwrap();
        let k = to_klein(&x);
        assert!((k[0] - u.tanh()).abs() < 1e-15 && k[1] == 0.0);
        let back = from_klein(k.as_slice()).unwrap();
        assert!((back.coords() - x.coords()).amax() < 1e-12);
        assert!(from_klein(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn klein_midpoint_is_on_chord() {
        let s = QuadSpace::lorentz(3).unwrap();
        let x = from_klein(&[0.3, -0.5]).unwrap();
        let y = from_klein(&[-0.6, 0.2]).unwrap();
        let mid = to_klein(&midpoint(&s, &x, &y).unwrap());
        let (a, b) = (to_klein(&x), to_klein(&y));
        let d1 = &mid - &a;
        let d2 = &b - &a;
        let cross = d1[0] * d2[1] - d1[1] * d2[0];
        assert!(cross.abs() < 1e-10);
        let dm = hdist(&s, &x, &from_klein(mid.as_slice()).unwrap()).unwrap();
        assert!((dm - 0.5 * hdist(&s, &x, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn classify_examples() {
        let s = QuadSpace::lorentz(3).unwrap();
        let id = classify(&s, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(id.kind(), IsometryKind::Elliptic);
        assert_eq!(id.translation_length(), 0.0);
        let h = classify(&s, &boost(1.5)).unwrap();
        assert_eq!(h.kind(), IsometryKind::Hyperbolic);
        assert!((h.translation_length() - 1.5).abs() < 1e-12);
        let mut rot = DMatrix::identity(3, 3);
        let a = 0.4f64;
        rot[(1, 1)] = a.cos();
        rot[(1, 2)] = -a.sin();
        rot[(2, 1)] = a.sin();
        rot[(2, 2)] = a.cos();
        assert_eq!(classify(&s, &rot).unwrap().kind(), IsometryKind::Elliptic);
        assert!(classify(&s, &DMatrix::from_element(3, 3, 1.0)).is_err());
    }

    #[test]
    fn classify_parabolic_in_canonical_coordinates() {
        // Unipotent element fixing the isotropic vector (1, 1, 0).
        let v = 0.8;
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[1.0 + v * v / 2.0, -v * v / 2.0, v, v * v / 2.0, 1.0 - v * v / 2.0, v, v, -v, 1.0],
        );
        let s = QuadSpace::lorentz(3).unwrap();
        assert!(s.form_defect(&m).unwrap() < 1e-14);
        let iso = classify(&s, &m).unwrap();
        assert_eq!(iso.kind(), IsometryKind::Parabolic);
        assert_eq!(iso.translation_length(), 0.0);
    }

    #[test]
    fn gram_examples() {
        let r = gram_realize(&DMatrix::from_element(1, 1, 1.0), 1).unwrap();
        assert_eq!(r.vectors.len(), 1);
        assert!((r.space.bform(r.vectors[0].as_slice(), r.vectors[0].as_slice()).unwrap() - 1.0).abs() < 1e-12);

        let g = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let r = gram_realize(&g, 1).unwrap();
        assert!((r.eigenvalues[0] - 3.0).abs() < 1e-12 && (r.eigenvalues[1] + 1.0).abs() < 1e-12);
        let b = r.space.bform(r.vectors[0].as_slice(), r.vectors[1].as_slice()).unwrap();
        assert!((b - 2.0).abs() < 1e-9);

        match gram_realize(&DMatrix::identity(3, 3), 1) {
            Err(Error::SignatureExceeded { positive, .. }) => assert_eq!(positive, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
