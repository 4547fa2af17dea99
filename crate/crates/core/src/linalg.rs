//! Fixed-size complex linear algebra for one- and two-qubit operators.
//!
//! Two-qubit objects use the basis order `|00⟩, |01⟩, |10⟩, |11⟩` with Alice
//! as the left tensor factor, and `|0⟩ ≡ |H⟩`, `|1⟩ ≡ |V⟩`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub type Complex = num_complex::Complex64;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

const HERMITIAN_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;

/// Dense `N × N` complex matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareMatrix<const N: usize> {
    entries: [[Complex; N]; N],
}

pub type ComplexMatrix2 = SquareMatrix<2>;
pub type ComplexMatrix4 = SquareMatrix<4>;

impl<const N: usize> SquareMatrix<N> {
    pub const fn from_rows(entries: [[Complex; N]; N]) -> Self {
        Self { entries }
    }

    pub fn zeros() -> Self {
        Self { entries: [[ZERO; N]; N] }
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.entries[i][i] = ONE;
        }
        m
    }

    pub fn from_real_diagonal(diag: [f64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, d) in diag.into_iter().enumerate() {
            m.entries[i][i] = Complex::new(d, 0.0);
        }
        m
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[Complex; N], v: &[Complex; N]) -> Self {
        let mut m = Self::zeros();
        for (row, ui) in m.entries.iter_mut().zip(u) {
            for (e, vj) in row.iter_mut().zip(v) {
                *e = ui * vj.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> &[[Complex; N]; N] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.entries[i][j] = self.entries[j][i].conj();
            }
        }
        m
    }

    /// Entry-wise complex conjugate (not the adjoint).
    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn trace(&self) -> Complex {
        (0..N).map(|i| self.entries[i][i]).sum()
    }

    pub fn scale(&self, s: Complex) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    fn map(&self, f: impl Fn(Complex) -> Complex) -> Self {
        let mut m = *self;
        m.entries.iter_mut().flatten().for_each(|z| *z = f(*z));
        m
    }

    /// Largest entry-wise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn apply(&self, v: &[Complex; N]) -> [Complex; N] {
        let mut out = [ZERO; N];
        for (i, row) in self.entries.iter().enumerate() {
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &[Complex; N]) -> Complex {
        let mv = self.apply(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    /// `trace(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex {
        let mut acc = ZERO;
        for i in 0..N {
            for k in 0..N {
                acc += self.entries[i][k] * other.entries[k][i];
            }
        }
        acc
    }

    /// Conjugation `self · m · self†`.
    pub fn sandwich(&self, m: &Self) -> Self {
        *self * *m * self.adjoint()
    }
}

impl<const N: usize> Index<(usize, usize)> for SquareMatrix<N> {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.entries[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for SquareMatrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.entries[i][j]
    }
}

impl<const N: usize> Add for SquareMatrix<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.entries.iter_mut().flatten().zip(rhs.entries.iter().flatten()) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for SquareMatrix<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.entries.iter_mut().flatten().zip(rhs.entries.iter().flatten()) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Neg for SquareMatrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

impl<const N: usize> Mul for SquareMatrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.entries[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    m.entries[i][j] += a * rhs.entries[k][j];
                }
            }
        }
        m
    }
}

impl<const N: usize> std::iter::Sum for SquareMatrix<N> {
    fn sum<It: Iterator<Item = Self>>(iter: It) -> Self {
        iter.fold(Self::zeros(), |a, b| a + b)
    }
}

impl ComplexMatrix2 {
    pub const fn pauli_x() -> Self {
        Self::from_rows([[ZERO, ONE], [ONE, ZERO]])
    }

    pub const fn pauli_y() -> Self {
        Self::from_rows([[ZERO, Complex::new(0.0, -1.0)], [I, ZERO]])
    }

    pub const fn pauli_z() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, Complex::new(-1.0, 0.0)]])
    }

    /// Pauli observable along a direction, `r·σ`.
    pub fn pauli_along(r: &BlochVector) -> Self {
        Self::pauli_x().scale_real(r.x) + Self::pauli_y().scale_real(r.y) + Self::pauli_z().scale_real(r.z)
    }
}

/// Kronecker product `a ⊗ b`; `a` acts on Alice's qubit (the left factor).
pub fn tensor_product(a: &ComplexMatrix2, b: &ComplexMatrix2) -> ComplexMatrix4 {
    let mut m = ComplexMatrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    m
}

/// Unit 3-vector naming a qubit measurement direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    x: f64,
    y: f64,
    z: f64,
}

impl BlochVector {
    pub const X: Self = Self { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Self = Self { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Self = Self { x: 0.0, y: 0.0, z: 1.0 };
    /// `(ẑ + x̂)/√2`
    pub const Z_PLUS_X: Self = Self { x: FRAC_1_SQRT_2, y: 0.0, z: FRAC_1_SQRT_2 };
    /// `(ẑ − x̂)/√2`
    pub const Z_MINUS_X: Self = Self { x: -FRAC_1_SQRT_2, y: 0.0, z: FRAC_1_SQRT_2 };

    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::NonUnitDirection { x, y, z });
        }
        Ok(Self { x, y, z })
    }

    /// Rescales any non-zero vector onto the unit sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NonUnitDirection { x, y, z });
        }
        Ok(Self { x: x / norm, y: y / norm, z: z / norm })
    }

    pub fn from_angles(polar: f64, azimuth: f64) -> Self {
        Self { x: polar.sin() * azimuth.cos(), y: polar.sin() * azimuth.sin(), z: polar.cos() }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// Normalized two-qubit state vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    amplitudes: [Complex; 4],
}

impl PureState {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(amplitudes: [Complex; 4]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq.sqrt() - 1.0).abs() > Self::NORM_TOL {
            return Err(Error::InvalidState(format!("state norm {} is not 1", norm_sq.sqrt())));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amplitudes: [Complex; 4]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Ok(Self { amplitudes: amplitudes.map(|a| a / norm) })
    }

    /// `(|HH⟩ + |VV⟩)/√2`
    pub fn phi_plus() -> Self {
        let a = Complex::new(FRAC_1_SQRT_2, 0.0);
        Self { amplitudes: [a, ZERO, ZERO, a] }
    }

    /// Computational basis state `|index⟩` in the order `|00⟩,|01⟩,|10⟩,|11⟩`.
    pub fn basis(index: usize) -> Self {
        let mut amplitudes = [ZERO; 4];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn product(alice: [Complex; 2], bob: [Complex; 2]) -> Result<Self> {
        Self::normalized([alice[0] * bob[0], alice[0] * bob[1], alice[1] * bob[0], alice[1] * bob[1]])
    }

    pub fn amplitudes(&self) -> &[Complex; 4] {
        &self.amplitudes
    }

    pub fn projector(&self) -> ComplexMatrix4 {
        ComplexMatrix4::outer(&self.amplitudes, &self.amplitudes)
    }

    /// `|⟨self|other⟩|²`
    pub fn overlap(&self, other: &PureState) -> f64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum::<Complex>().norm_sqr()
    }
}

/// Two-qubit density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix4,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix4) -> Result<Self> {
        let dev = matrix.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput { deviation: dev });
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let eig = hermitian_eigensystem(&matrix)?;
        if eig.values[3] < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite { eigenvalue: eig.values[3] });
        }
        Ok(Self { matrix })
    }

    /// Builds `K ρ K† / trace` for an operator already known to yield a valid state.
    pub(crate) fn from_trusted(matrix: ComplexMatrix4) -> Self {
        Self { matrix }
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self { matrix: state.projector() }
    }

    pub fn maximally_mixed() -> Self {
        Self { matrix: ComplexMatrix4::identity().scale_real(0.25) }
    }

    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.matrix
    }

    /// `trace(ρ·O)`, real part; `O` is expected to be Hermitian.
    pub fn expectation(&self, observable: &ComplexMatrix4) -> f64 {
        self.matrix.trace_product(observable).re
    }
}

impl From<PureState> for DensityMatrix {
    fn from(s: PureState) -> Self {
        Self::from_pure(&s)
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Real eigenvalues in descending order.
    pub values: [f64; 4],
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix4,
}

impl Eigensystem {
    pub fn vector(&self, k: usize) -> [Complex; 4] {
        std::array::from_fn(|i| self.vectors[(i, k)])
    }

    pub fn reconstruct(&self) -> ComplexMatrix4 {
        self.vectors * ComplexMatrix4::from_real_diagonal(self.values) * self.vectors.adjoint()
    }
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi diagonalization of a 4×4 Hermitian matrix.
pub fn hermitian_eigensystem(m: &ComplexMatrix4) -> Result<Eigensystem> {
    let dev = m.hermiticity_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NonHermitianInput { deviation: dev });
    }
    let mut a = (*m + m.adjoint()).scale_real(0.5);
    let mut v = ComplexMatrix4::identity();
    let scale = a.rows().iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 =
            (0..4).flat_map(|p| (p + 1..4).map(move |q| (p, q))).map(|(p, q)| a[(p, q)].norm_sqr()).sum::<f64>().sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..3 {
            for q in p + 1..4 {
                let apq = a[(p, q)];
                let magnitude = apq.norm();
                if magnitude == 0.0 {
                    continue;
                }
                // Remove the phase of a_pq, then apply a real Jacobi rotation.
                let phase = apq / magnitude;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * magnitude);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let mut rot = ComplexMatrix4::identity();
                rot[(p, p)] = Complex::new(c, 0.0);
                rot[(p, q)] = Complex::new(s, 0.0);
                rot[(q, p)] = -phase.conj() * s;
                rot[(q, q)] = phase.conj() * c;
                a = rot.adjoint() * a * rot;
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                v = v * rot;
            }
        }
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.map(|k| a[(k, k)].re);
    let mut vectors = ComplexMatrix4::zeros();
    for (col, &k) in order.iter().enumerate() {
        for row in 0..4 {
            vectors[(row, col)] = v[(row, k)];
        }
    }
    Ok(Eigensystem { values, vectors })
}

/// Singular values of a 4×4 complex matrix, descending, by one-sided
/// (Hestenes) Jacobi. Small singular values keep absolute accuracy near
/// machine epsilon instead of the `√ε` an eigenvalue route would give.
pub fn singular_values(m: &ComplexMatrix4) -> [f64; 4] {
    let mut cols: [[Complex; 4]; 4] = std::array::from_fn(|j| std::array::from_fn(|i| m[(i, j)]));
    let dot = |u: &[Complex; 4], v: &[Complex; 4]| u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex>();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..3 {
            for q in p + 1..4 {
                let alpha = dot(&cols[p], &cols[p]).re;
                let beta = dot(&cols[q], &cols[q]).re;
                let gamma = dot(&cols[p], &cols[q]);
                let magnitude = gamma.norm();
                if magnitude == 0.0 || magnitude <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / magnitude;
                let zeta = (beta - alpha) / (2.0 * magnitude);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (zeta * zeta + 1.0).sqrt())
                } else {
                    -1.0 / (-zeta + (zeta * zeta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let (head, tail) = cols.split_at_mut(q);
                for (xp, xq) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let (x, y) = (*xp, *xq * phase.conj());
                    *xp = x * c - y * s;
                    *xq = x * s + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut values = cols.map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues in `[-1e-9, 0)` are clamped to zero.
pub fn hermitian_sqrt(m: &ComplexMatrix4) -> Result<ComplexMatrix4> {
    let eig = hermitian_eigensystem(m)?;
    if eig.values[3] < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite { eigenvalue: eig.values[3] });
    }
    let roots = eig.values.map(|l| l.max(0.0).sqrt());
    Ok(eig.vectors * ComplexMatrix4::from_real_diagonal(roots) * eig.vectors.adjoint())
}
