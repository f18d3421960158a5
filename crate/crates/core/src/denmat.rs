//! Dense complex linear algebra for small Hermitian matrices: states,
//! trace norm, von Neumann entropy, Choi matrices and channel application.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = -1e-10;

/// Square complex matrix stored dense in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(ComplexMatrix { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, rhs: &Self, c: Complex64) {
        assert_eq!(self.dim, rhs.dim);
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += c * b;
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| c * z).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol * f64::max(1.0, self.max_abs())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.adjoint().mul(self);
        p.sub(&Self::identity(self.dim)).max_abs() <= tol
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Pauli matrix sigma_k for k = 0..3 (sigma_0 = identity).
pub fn pauli(k: usize) -> ComplexMatrix {
    let z = |re: f64, im: f64| Complex64::new(re, im);
    let entries = match k {
        0 => vec![z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)],
        1 => vec![z(0.0, 0.0), z(1.0, 0.0), z(1.0, 0.0), z(0.0, 0.0)],
        2 => vec![z(0.0, 0.0), z(0.0, -1.0), z(0.0, 1.0), z(0.0, 0.0)],
        3 => vec![z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(-1.0, 0.0)],
        _ => panic!("pauli index {k} out of range"),
    };
    ComplexMatrix::from_vec(2, entries).unwrap()
}

/// Hermitian eigendecomposition by cyclic Jacobi rotations.
///
/// Adequate for the dimensions used here (N <= 25 Choi matrices).
/// Returns eigenvalues in ascending order with matching eigenvector columns.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let dev = m.hermiticity_deviation();
    if dev > HERMITICITY_TOL * f64::max(1.0, m.max_abs()) {
        return Err(Error::NotHermitian { dev });
    }
    let n = m.dim;
    let mut a = m.clone();
    // Symmetrize to kill round-off asymmetry.
    for i in 0..n {
        for j in 0..n {
            let s = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = s;
            a[(j, i)] = s.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = f64::max(1.0, a.max_abs());

    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * r).atan2(aqq - app);
                let c = theta.cos();
                let s = theta.sin();
                // J_pp = c, J_pq = s*phase, J_qp = -s*conj(phase), J_qq = c
                // Columns: A <- A J
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * s * phase.conj();
                    a[(i, q)] = aip * s * phase + aiq * c;
                }
                // Rows: A <- J^dag A
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * s * phase;
                    a[(q, j)] = apj * s * phase.conj() + aqj * c;
                }
                // Accumulate V <- V J
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * s * phase.conj();
                    v[(i, q)] = vip * s * phase + viq * c;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)].re, i)).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let vals: Vec<f64> = pairs.iter().map(|&(x, _)| x).collect();
    let vecs = ComplexMatrix::from_fn(n, |i, j| v[(i, pairs[j].1)]);
    Ok((vals, vecs))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigvals(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eig(m).map(|(vals, _)| vals)
}

/// Trace norm ||X||_1: sum of |eigenvalues| for Hermitian X, sum of
/// singular values otherwise.
pub fn trace_norm(x: &ComplexMatrix, hermitian: bool) -> Result<f64> {
    if hermitian {
        Ok(hermitian_eigvals(x)?.iter().map(|e| e.abs()).sum())
    } else {
        let gram = x.adjoint().mul(x);
        Ok(hermitian_eigvals(&gram)?
            .iter()
            .map(|e| e.max(0.0).sqrt())
            .sum())
    }
}

/// N x N density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        let dev = mat.hermiticity_deviation();
        if dev > HERMITICITY_TOL {
            return Err(Error::NotAState(format!(
                "Hermiticity deviation {dev:.3e}"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > HERMITICITY_TOL || tr.im.abs() > HERMITICITY_TOL {
            return Err(Error::NotAState(format!("trace = {tr}")));
        }
        let min_eig = hermitian_eigvals(&mat)?[0];
        if min_eig < PSD_TOL {
            return Err(Error::NotAState(format!("min eigenvalue {min_eig:.3e}")));
        }
        Ok(DensityMatrix { mat })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            mat: ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut m = ComplexMatrix::zeros(dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        DensityMatrix { mat: m }
    }

    /// Pure state |psi><psi| from an unnormalized amplitude vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::NotAState("zero state vector".into()));
        }
        let n = psi.len();
        let m = ComplexMatrix::from_fn(n, |i, j| psi[i] * psi[j].conj() / norm2);
        Ok(DensityMatrix { mat: m })
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigvals(&self.mat).expect("density matrix is Hermitian")
    }
}

/// Bloch-ball parameterization of a qubit state:
/// rho = 1/2 I + [[u, w], [w*, -u]] with w = a + i b.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BlochDecomposition {
    pub u: f64,
    pub a: f64,
    pub b: f64,
}

impl BlochDecomposition {
    pub fn new(u: f64, a: f64, b: f64) -> Self {
        BlochDecomposition { u, a, b }
    }

    pub fn radius_sq(&self) -> f64 {
        self.u * self.u + self.a * self.a + self.b * self.b
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        if self.radius_sq() > 0.25 + 1e-12 {
            return Err(Error::NotAState(format!(
                "Bloch vector outside ball: u^2+a^2+b^2 = {}",
                self.radius_sq()
            )));
        }
        let w = Complex64::new(self.a, self.b);
        let m = ComplexMatrix::from_vec(
            2,
            vec![
                Complex64::new(0.5 + self.u, 0.0),
                w,
                w.conj(),
                Complex64::new(0.5 - self.u, 0.0),
            ],
        )?;
        DensityMatrix::new(m)
    }
}

/// Eigenvalue list of a (normalized) Choi state.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChoiSpectrum {
    pub eigenvalues: Vec<f64>,
}

fn check_distribution(p: &[f64]) -> Result<()> {
    if let Some(bad) = p.iter().find(|&&x| x < -1e-12) {
        return Err(Error::InvalidDistribution(format!(
            "negative probability {bad:.3e}"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidDistribution(format!("sum = {sum}")));
    }
    Ok(())
}

/// Linear action Sum_a w_a U_a X U_a^dag without any distribution checks.
///
/// Used by the numeric oracles, which must evaluate maps that are not CP
/// (negative weights) on arbitrary Hermitian operators.
pub fn apply_weighted_unitaries(
    weights: &[f64],
    unitaries: &[ComplexMatrix],
    x: &ComplexMatrix,
) -> ComplexMatrix {
    assert_eq!(weights.len(), unitaries.len());
    let mut out = ComplexMatrix::zeros(x.dim());
    for (&w, u) in weights.iter().zip(unitaries) {
        if w == 0.0 {
            continue;
        }
        let term = u.mul(x).mul(&u.adjoint());
        out.add_scaled(&term, Complex64::new(w, 0.0));
    }
    out
}

/// Random unitary channel rho -> Sum_a p_a U_a rho U_a^dag.
pub fn apply_random_unitary_channel(
    p: &[f64],
    unitaries: &[ComplexMatrix],
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    check_distribution(p)?;
    if p.len() != unitaries.len() {
        return Err(Error::Dimension(format!(
            "{} probabilities vs {} unitaries",
            p.len(),
            unitaries.len()
        )));
    }
    for u in unitaries {
        if !u.is_unitary(1e-10) {
            return Err(Error::Domain("operator is not unitary".into()));
        }
    }
    DensityMatrix::new(apply_weighted_unitaries(p, unitaries, rho.mat()))
}

/// Choi state (I (x) Lambda)(P+_N) of the random unitary channel, with
/// P+_N = (1/N) Sum_ij |ii><jj|.
pub fn choi_state(p: &[f64], unitaries: &[ComplexMatrix]) -> Result<DensityMatrix> {
    check_distribution(p)?;
    let n = unitaries
        .first()
        .ok_or_else(|| Error::Dimension("no unitaries".into()))?
        .dim();
    let mut w = ComplexMatrix::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            // Lambda(|i><j|)
            let mut eij = ComplexMatrix::zeros(n);
            eij[(i, j)] = Complex64::new(1.0, 0.0);
            let lam = apply_weighted_unitaries(p, unitaries, &eij);
            for m in 0..n {
                for l in 0..n {
                    w[(i * n + m, j * n + l)] += lam[(m, l)] / n as f64;
                }
            }
        }
    }
    DensityMatrix::new(w)
}

/// Von Neumann entropy -Sum x_i ln x_i, with 0 ln 0 := 0.
pub fn vn_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_eigenvalues(&rho.eigenvalues())
}

/// Entropy of an eigenvalue list; tolerates round-off negatives down to -1e-10.
pub fn entropy_of_eigenvalues(eigs: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &x in eigs {
        if x < -1e-10 {
            return Err(Error::NotAState(format!("eigenvalue {x:.3e}")));
        }
        if x > 0.0 {
            s -= x * x.ln();
        }
    }
    Ok(s)
}
