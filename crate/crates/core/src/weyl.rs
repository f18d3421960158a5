//! N-level generalization: Weyl operator algebra, DFT-based spectral
//! transforms, generator rates, divisibility and the (Ngamma) necessary
//! conditions, plus the depolarizing/isotropic mixture family.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::denmat::ComplexMatrix;
use crate::error::{Error, Result};
use crate::rate::{RateFunction, TimeGrid};
use crate::report::{find_violation_intervals, Criterion, CriterionVerdict};

/// Index pair (k, l) of a Weyl operator, both taken mod N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeylIndex {
    pub k: usize,
    pub l: usize,
}

fn omega_pow(n: usize, e: i64) -> Complex64 {
    let n_i = n as i64;
    let e = e.rem_euclid(n_i);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * e as f64 / n_i as f64)
}

/// Weyl operator U_{kl} = sum_m omega^{mk} |m><m+l| (indices mod N).
pub fn weyl_operator(n: usize, idx: WeylIndex) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(n);
    for m in 0..n {
        u[(m, (m + idx.l) % n)] = omega_pow(n, (m * idx.k) as i64);
    }
    u
}

/// All N^2 Weyl operators in row-major (k, l) order.
pub fn weyl_operators(n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            out.push(weyl_operator(n, WeylIndex { k, l }));
        }
    }
    out
}

/// Verify the composition law U_{kl} U_{rs} = omega^{lr} U_{k+r,l+s} and the
/// adjoint relation U_{kl}^dag = omega^{kl} U_{-k,-l} entrywise for all pairs.
pub fn weyl_composition_check(n: usize) -> Result<bool> {
    let ops = weyl_operators(n);
    let at = |k: usize, l: usize| &ops[k * n + l];
    for k in 0..n {
        for l in 0..n {
            let dag = at(k, l).adjoint();
            let expect = at((n - k % n) % n, (n - l % n) % n).scale(omega_pow(n, (k * l) as i64));
            if dag.sub(&expect).max_abs() > 1e-12 {
                return Err(Error::Algebra(format!("adjoint relation at ({k},{l})")));
            }
            for r in 0..n {
                for s in 0..n {
                    let prod = at(k, l).mul(at(r, s));
                    let expect =
                        at((k + r) % n, (l + s) % n).scale(omega_pow(n, (l * r) as i64));
                    if prod.sub(&expect).max_abs() > 1e-12 {
                        return Err(Error::Algebra(format!(
                            "composition at ({k},{l})*({r},{s})"
                        )));
                    }
                }
            }
        }
    }
    Ok(true)
}

/// DFT matrix F with F_{il} = omega^{-il}; satisfies F F^dag = N I.
pub fn dft_matrix(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |i, l| omega_pow(n, -((i * l) as i64)))
}

/// N-level random unitary channel parameterized by an N x N grid of
/// probabilities p_{kl}(t) or rates gamma_{kl}(t) (with gamma_00 = 0).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum WeylParameterization {
    /// Row-major N x N grid of p_{kl}(t).
    Probabilities(Vec<RateFunction>),
    /// Row-major N x N grid of gamma_{kl}(t); the (0,0) entry must vanish.
    Rates(Vec<RateFunction>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeylChannelSpec {
    pub dim: usize,
    pub param: WeylParameterization,
    pub grid: TimeGrid,
}

impl WeylChannelSpec {
    pub fn from_rates(dim: usize, gammas: Vec<RateFunction>, grid: TimeGrid) -> Result<Self> {
        let spec = WeylChannelSpec {
            dim,
            param: WeylParameterization::Rates(gammas),
            grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_probabilities(dim: usize, ps: Vec<RateFunction>, grid: TimeGrid) -> Result<Self> {
        let spec = WeylChannelSpec {
            dim,
            param: WeylParameterization::Probabilities(ps),
            grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_rates_mode(&self) -> bool {
        matches!(self.param, WeylParameterization::Rates(_))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n < 2 {
            return Err(Error::Dimension(format!("dim {n} must be >= 2")));
        }
        let fns = match &self.param {
            WeylParameterization::Probabilities(p) => p,
            WeylParameterization::Rates(g) => g,
        };
        if fns.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} rate functions, got {}",
                n * n,
                fns.len()
            )));
        }
        for f in fns {
            f.validate()?;
        }
        match &self.param {
            WeylParameterization::Rates(g) => {
                for t in self.grid.times() {
                    if g[0].eval(t).abs() > 1e-12 {
                        return Err(Error::Domain(format!(
                            "gamma_00({t}) = {} must vanish",
                            g[0].eval(t)
                        )));
                    }
                }
            }
            WeylParameterization::Probabilities(ps) => {
                if (ps[0].eval(0.0) - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidDistribution(format!(
                        "p_00(0) = {} must equal 1",
                        ps[0].eval(0.0)
                    )));
                }
                for t in self.grid.times() {
                    let vals: Vec<f64> = ps.iter().map(|p| p.eval(t)).collect();
                    let sum: f64 = vals.iter().sum();
                    if (sum - 1.0).abs() > 1e-8 {
                        return Err(Error::InvalidDistribution(format!(
                            "sum p_kl({t}) = {sum}"
                        )));
                    }
                    if let Some(bad) = vals.iter().find(|&&x| x < -1e-10) {
                        return Err(Error::InvalidDistribution(format!(
                            "p_kl({t}) = {bad:.3e} negative"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Channel eigenvalue matrix lambda_{ij}(t) at an arbitrary time.
    ///
    /// Probabilities mode uses the DFT form; Rates mode the closed-form
    /// exponential lambda_ij = exp(sum' Gamma_kl (omega^{kj-il} - 1)).
    pub fn lambda_at(&self, t: f64) -> Result<ComplexMatrix> {
        let n = self.dim;
        match &self.param {
            WeylParameterization::Probabilities(_) => lambda_matrix_from_p(self, t),
            WeylParameterization::Rates(gs) => {
                let mut big: Vec<f64> = Vec::with_capacity(n * n);
                for g in gs {
                    big.push(g.integral(t)?);
                }
                let mut lam = ComplexMatrix::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        let mut expo = Complex64::new(0.0, 0.0);
                        for k in 0..n {
                            for l in 0..n {
                                if k == 0 && l == 0 {
                                    continue;
                                }
                                let w = omega_pow(n, (k * j) as i64 - (i * l) as i64)
                                    - Complex64::new(1.0, 0.0);
                                expo += w * big[k * n + l];
                            }
                        }
                        lam[(i, j)] = expo.exp();
                    }
                }
                Ok(lam)
            }
        }
    }

    /// Weights (probabilities when the map is CP) at an arbitrary time, in
    /// row-major (k, l) order. Negative values are permitted; callers that
    /// require a channel must check them.
    pub fn weights_at(&self, t: f64) -> Result<Vec<f64>> {
        match &self.param {
            WeylParameterization::Probabilities(ps) => Ok(ps.iter().map(|p| p.eval(t)).collect()),
            WeylParameterization::Rates(_) => {
                let lam = self.lambda_at(t)?;
                let (p, _) = p_from_lambda(self.dim, &lam)?;
                Ok(p)
            }
        }
    }
}

/// lambda_hat(t) = F p_hat(t)^T F^dag, computed both as a matrix product
/// and elementwise; the two forms must agree to 1e-10.
pub fn lambda_matrix_from_p(spec: &WeylChannelSpec, t: f64) -> Result<ComplexMatrix> {
    let WeylParameterization::Probabilities(ps) = &spec.param else {
        return Err(Error::Domain("expected a Probabilities-mode spec".into()));
    };
    let n = spec.dim;
    let p: Vec<f64> = ps.iter().map(|f| f.eval(t)).collect();

    // Elementwise: lambda_ij = sum_kl p_kl omega^{kj - il}.
    let elementwise = ComplexMatrix::from_fn(n, |i, j| {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            for l in 0..n {
                acc += omega_pow(n, (k * j) as i64 - (i * l) as i64) * p[k * n + l];
            }
        }
        acc
    });

    // Matrix form: F p^T F^dag.
    let f = dft_matrix(n);
    let p_t = ComplexMatrix::from_fn(n, |i, j| Complex64::new(p[j * n + i], 0.0));
    let matrix_form = f.mul(&p_t).mul(&f.adjoint());

    if matrix_form.sub(&elementwise).max_abs() > 1e-10 {
        return Err(Error::InternalConsistency(
            "DFT matrix form and elementwise lambda disagree".into(),
        ));
    }
    if (elementwise[(0, 0)] - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::InternalConsistency(format!(
            "lambda_00({t}) = {} must equal 1",
            elementwise[(0, 0)]
        )));
    }
    for i in 0..n {
        for j in 0..n {
            if elementwise[(i, j)].norm() > 1.0 + 1e-10 {
                return Err(Error::InternalConsistency(format!(
                    "|lambda_{i}{j}({t})| = {} exceeds 1",
                    elementwise[(i, j)].norm()
                )));
            }
        }
    }
    Ok(elementwise)
}

/// Inverse relation p_hat^T = (1/N^2) F^dag lambda_hat F. Returns the real
/// probability matrix (row-major) and the largest imaginary residue seen.
pub fn p_from_lambda(n: usize, lambda_hat: &ComplexMatrix) -> Result<(Vec<f64>, f64)> {
    if lambda_hat.dim() != n {
        return Err(Error::Dimension(format!(
            "lambda matrix is {}x{0}, expected {n}x{n}",
            lambda_hat.dim()
        )));
    }
    if (lambda_hat[(0, 0)] - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::InvalidSpectrum(
            (lambda_hat[(0, 0)] - Complex64::new(1.0, 0.0)).norm(),
        ));
    }
    let f = dft_matrix(n);
    let pt = f
        .adjoint()
        .mul(lambda_hat)
        .mul(&f)
        .scale(Complex64::new(1.0 / (n * n) as f64, 0.0));
    let mut p = vec![0.0; n * n];
    let mut max_resid: f64 = 0.0;
    for k in 0..n {
        for l in 0..n {
            let z = pt[(l, k)]; // transpose back
            max_resid = max_resid.max(z.im.abs());
            p[k * n + l] = z.re;
        }
    }
    if max_resid > 1e-8 {
        return Err(Error::InvalidSpectrum(max_resid));
    }
    Ok((p, max_resid))
}

/// lambda series on the grid.
pub fn lambda_series_n(spec: &WeylChannelSpec) -> Result<Vec<ComplexMatrix>> {
    spec.validate()?;
    spec.grid.times().map(|t| spec.lambda_at(t)).collect()
}

const FD_STEP: f64 = 1e-5;

fn gamma_from_lambda_stencil(
    n: usize,
    lam: &ComplexMatrix,
    lam_prev: &ComplexMatrix,
    lam_next: &ComplexMatrix,
    step: f64,
    one_sided: Option<&ComplexMatrix>,
    t: f64,
) -> Result<Vec<f64>> {
    // mu_ij = lambda_dot_ij / lambda_ij (complex mid-pipeline).
    let mut mu = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if lam[(i, j)].norm() < 1e-8 {
                return Err(Error::SingularSpectrum {
                    index: format!("{i}{j}"),
                    t,
                });
            }
            let dot = match one_sided {
                // second-order one-sided stencil: prev holds f(t+2h) (or f(t-2h))
                Some(far) => {
                    (lam_next[(i, j)] * 4.0 - far[(i, j)] - lam[(i, j)] * 3.0) / (2.0 * step)
                }
                None => (lam_next[(i, j)] - lam_prev[(i, j)]) / (2.0 * step),
            };
            mu[(i, j)] = dot / lam[(i, j)];
        }
    }
    let f = dft_matrix(n);
    let gt = f
        .adjoint()
        .mul(&mu)
        .mul(&f)
        .scale(Complex64::new(1.0 / (n * n) as f64, 0.0));
    let mut g = vec![0.0; n * n];
    let mut total = 0.0;
    for k in 0..n {
        for l in 0..n {
            let z = gt[(l, k)];
            if z.im.abs() > 1e-8 * f64::max(1.0, z.re.abs()) + 1e-8 {
                return Err(Error::InternalConsistency(format!(
                    "gamma_{k}{l}({t}) has imaginary part {:.3e}",
                    z.im
                )));
            }
            g[k * n + l] = z.re;
            total += z.re;
        }
    }
    if total.abs() > 1e-6 {
        return Err(Error::InconsistentGenerator(total.abs()));
    }
    Ok(g)
}

/// Decoherence-rate matrix gamma_{kl}(t) at an arbitrary time.
pub fn gamma_matrix_at(spec: &WeylChannelSpec, t: f64) -> Result<Vec<f64>> {
    let n = spec.dim;
    if let WeylParameterization::Rates(gs) = &spec.param {
        return Ok(gs.iter().map(|g| g.eval(t)).collect());
    }
    let step = FD_STEP;
    let lam = spec.lambda_at(t)?;
    if t - step < 0.0 {
        let next = spec.lambda_at(t + step)?;
        let far = spec.lambda_at(t + 2.0 * step)?;
        gamma_from_lambda_stencil(n, &lam, &lam, &next, step, Some(&far), t)
    } else if t + step > spec.grid.t_max {
        let next = spec.lambda_at(t - step)?;
        let far = spec.lambda_at(t - 2.0 * step)?;
        gamma_from_lambda_stencil(n, &lam, &lam, &next, -step, Some(&far), t)
    } else {
        let prev = spec.lambda_at(t - step)?;
        let next = spec.lambda_at(t + step)?;
        gamma_from_lambda_stencil(n, &lam, &prev, &next, step, None, t)
    }
}

/// Decoherence-rate matrices on the grid (row-major N x N per point).
pub fn gamma_matrix(spec: &WeylChannelSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if let WeylParameterization::Rates(gs) = &spec.param {
        return Ok(spec
            .grid
            .times()
            .map(|t| gs.iter().map(|g| g.eval(t)).collect())
            .collect());
    }
    let lams = lambda_series_n(spec)?;
    let h = spec.grid.spacing();
    let n_pts = lams.len();
    let mut out = Vec::with_capacity(n_pts);
    for i in 0..n_pts {
        let t = spec.grid.time(i);
        let g = if i == 0 {
            gamma_from_lambda_stencil(spec.dim, &lams[0], &lams[0], &lams[1], h, Some(&lams[2]), t)?
        } else if i == n_pts - 1 {
            gamma_from_lambda_stencil(
                spec.dim,
                &lams[i],
                &lams[i],
                &lams[i - 1],
                -h,
                Some(&lams[i - 2]),
                t,
            )?
        } else {
            gamma_from_lambda_stencil(spec.dim, &lams[i], &lams[i - 1], &lams[i + 1], h, None, t)?
        };
        out.push(g);
    }
    Ok(out)
}

fn min_off_identity(_n: usize, g: &[f64]) -> f64 {
    g.iter()
        .skip(1)
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Proposition-4 test: divisible iff gamma_{ij}(t) >= 0 for all (i,j) != (0,0).
pub fn check_divisible_n(spec: &WeylChannelSpec) -> Result<CriterionVerdict> {
    let gs = gamma_matrix(spec)?;
    let n = spec.dim;
    let series: Vec<f64> = gs.iter().map(|g| min_off_identity(n, g)).collect();
    let violations = find_violation_intervals(
        &spec.grid,
        &series,
        |t| {
            gamma_matrix_at(spec, t)
                .map(|g| min_off_identity(n, &g))
                .unwrap_or(f64::NAN)
        },
        1e-8,
    );
    Ok(CriterionVerdict::new(Criterion::Divisible, violations))
}

/// The deduplicated (Ngamma) condition index pairs: canonical representative
/// of {(i,j), (-i,-j)} in lexicographic order, excluding (0,0).
pub fn ngamma_condition_pairs(n: usize) -> Vec<WeylIndex> {
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            let neg = ((n - i) % n, (n - j) % n);
            if (i, j) <= neg {
                pairs.push(WeylIndex { k: i, l: j });
            }
        }
    }
    pairs
}

/// Coefficient a_{mn;ij} = 1 - Re omega^{jn - im}.
pub fn ngamma_coefficient(n: usize, cond: WeylIndex, m: usize, nn: usize) -> f64 {
    let e = (cond.l * nn) as i64 - (cond.k * m) as i64;
    1.0 - omega_pow(n, e).re
}

/// Left-hand sides of the (Ngamma) conditions per grid point, one value per
/// deduplicated condition pair.
pub struct NgammaConditions {
    pub pairs: Vec<WeylIndex>,
    /// values[grid_point][pair_index]
    pub values: Vec<Vec<f64>>,
}

pub fn ngamma_conditions(spec: &WeylChannelSpec) -> Result<NgammaConditions> {
    let gs = gamma_matrix(spec)?;
    let n = spec.dim;
    let pairs = ngamma_condition_pairs(n);
    let values = gs
        .iter()
        .map(|g| {
            pairs
                .iter()
                .map(|&cond| {
                    let mut acc = 0.0;
                    for m in 0..n {
                        for nn in 0..n {
                            if m == 0 && nn == 0 {
                                continue;
                            }
                            acc += ngamma_coefficient(n, cond, m, nn) * g[m * n + nn];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(NgammaConditions { pairs, values })
}

/// Depolarizing-mixture channel Lambda_t = p(t) I + (1 - p(t)) Lambda_D as a
/// Probabilities-mode spec: p_00 = [1 + (N^2-1) p]/N^2, p_kl = (1-p)/N^2.
pub fn isotropic_mixture(n: usize, p: &RateFunction, grid: TimeGrid) -> Result<WeylChannelSpec> {
    p.validate()?;
    if (p.eval(0.0) - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidMixture(0.0));
    }
    for t in grid.times() {
        let v = p.eval(t);
        if !(v > 0.0 && v <= 1.0 + 1e-12) {
            return Err(Error::InvalidMixture(t));
        }
    }
    let n2 = (n * n) as f64;
    let mut fns = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            if k == 0 && l == 0 {
                fns.push(p.affine(1.0 / n2, (n2 - 1.0) / n2));
            } else {
                fns.push(p.affine(1.0 / n2, -1.0 / n2));
            }
        }
    }
    WeylChannelSpec::from_probabilities(n, fns, grid)
}
