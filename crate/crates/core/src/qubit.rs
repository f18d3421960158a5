//! Qubit Markovianity criteria: divisibility, information-flow (BLP)
//! monotonicity, entropy monotonicity, the analytic trace-distance flow,
//! intermediate-map positivity and the special-case channels.

use serde::Serialize;

use crate::denmat::BlochDecomposition;
use crate::error::{Error, Result};
use crate::rate::{
    fd_derivative, gamma_series, hadamard_apply, lambda_series, QubitChannelSpec,
    QubitParameterization, RateFunction, TimeGrid,
};
use crate::report::{find_violation_intervals, Criterion, CriterionVerdict};

/// Tolerance for sign decisions on the analytic (closed-form) path.
pub const ANALYTIC_TOL: f64 = 1e-8;

/// Step for local finite differences off the grid.
const FD_STEP: f64 = 1e-5;

fn fd_deriv(f: &dyn Fn(f64) -> f64, t: f64, h: f64, t_max: f64) -> f64 {
    if t - h < 0.0 {
        (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h)
    } else if t + h > t_max {
        (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h)
    } else {
        (f(t + h) - f(t - h)) / (2.0 * h)
    }
}

/// Rates at an arbitrary time: exact in Rates mode, local finite
/// differences through lambda in Probabilities mode.
pub fn gamma_at(spec: &QubitChannelSpec, t: f64) -> Result<[f64; 3]> {
    if let Some(g) = spec.rates_at(t) {
        return Ok(g);
    }
    let lam = spec.lambda_at(t)?;
    for k in 1..4 {
        if lam[k].abs() < 1e-8 {
            return Err(Error::SingularSpectrum {
                index: k.to_string(),
                t,
            });
        }
    }
    let mut mu = [0.0; 4];
    for k in 1..4 {
        let f = |tt: f64| spec.lambda_at(tt).map(|l| l[k]).unwrap_or(f64::NAN);
        mu[k] = fd_deriv(&f, t, FD_STEP, spec.grid.t_max) / lam[k];
    }
    let g = hadamard_apply(&mu);
    Ok([0.25 * g[1], 0.25 * g[2], 0.25 * g[3]])
}

/// The three pairwise rate sums (g1+g2, g1+g3, g2+g3).
pub fn pairwise_sums(g: &[f64; 3]) -> [f64; 3] {
    [g[0] + g[1], g[0] + g[2], g[1] + g[2]]
}

fn gamma_at_or_nan(spec: &QubitChannelSpec, t: f64) -> [f64; 3] {
    gamma_at(spec, t).unwrap_or([f64::NAN; 3])
}

fn min3(x: &[f64; 3]) -> f64 {
    x[0].min(x[1]).min(x[2])
}

/// Proposition-1 test: the dynamics is divisible iff every rate is
/// nonnegative on the whole grid.
pub fn check_divisible(spec: &QubitChannelSpec) -> Result<CriterionVerdict> {
    let gammas = gamma_series(spec)?;
    let series: Vec<f64> = gammas.iter().map(min3).collect();
    let violations = find_violation_intervals(
        &spec.grid,
        &series,
        |t| min3(&gamma_at_or_nan(spec, t)),
        ANALYTIC_TOL,
    );
    Ok(CriterionVerdict::new(Criterion::Divisible, violations))
}

/// BLP test: the information flow is nonpositive for all state pairs iff
/// the three pairwise rate sums are nonnegative. Cross-checked against the
/// eigenvalue monotonicity d|lambda_k|/dt <= 0 computed by finite
/// differences; a clear disagreement is an internal error.
pub fn check_blp(spec: &QubitChannelSpec) -> Result<CriterionVerdict> {
    let gammas = gamma_series(spec)?;
    let sums: Vec<[f64; 3]> = gammas.iter().map(pairwise_sums).collect();
    let series: Vec<f64> = sums.iter().map(min3).collect();

    // Cross-check: -mu_k/2 from |lambda_k| must reproduce the matching sum.
    let ls = lambda_series(spec)?;
    let h = spec.grid.spacing();
    let fd_band = f64::max(1e-3, 2000.0 * h * h);
    // lambda_1 decays with g2+g3 (sums[2]), lambda_2 with g1+g3 (sums[1]),
    // lambda_3 with g1+g2 (sums[0]).
    let sum_index = [2usize, 1, 0];
    for k in 1..4 {
        let abs_series: Vec<f64> = ls.values.iter().map(|l| l[k].abs()).collect();
        let dots = fd_derivative(&abs_series, h);
        for i in 1..abs_series.len() - 1 {
            if abs_series[i] < 1e-8 {
                continue;
            }
            let fd_sum = -dots[i] / (2.0 * abs_series[i]);
            let an_sum = sums[i][sum_index[k - 1]];
            let scale = 1.0 + an_sum.abs().powi(3);
            if (fd_sum - an_sum).abs() > fd_band * scale {
                return Err(Error::InternalConsistency(format!(
                    "pairwise-sum path ({an_sum}) and d|lambda_{k}|/dt path ({fd_sum}) \
                     disagree at t = {}",
                    spec.grid.time(i)
                )));
            }
        }
    }

    let violations = find_violation_intervals(
        &spec.grid,
        &series,
        |t| min3(&pairwise_sums(&gamma_at_or_nan(spec, t))),
        ANALYTIC_TOL,
    );
    Ok(CriterionVerdict::new(Criterion::BlpMonotone, violations))
}

/// Proposition-3 test (sufficient direction only): entropy is monotone if
/// the pairwise rate sums are nonnegative. The verdict records the
/// one-directional nature; necessity is left to the numeric oracle.
pub fn check_entropy_monotone(spec: &QubitChannelSpec) -> Result<CriterionVerdict> {
    let gammas = gamma_series(spec)?;
    let series: Vec<f64> = gammas.iter().map(|g| min3(&pairwise_sums(g))).collect();
    let violations = find_violation_intervals(
        &spec.grid,
        &series,
        |t| min3(&pairwise_sums(&gamma_at_or_nan(spec, t))),
        ANALYTIC_TOL,
    );
    let verdict = CriterionVerdict::new(Criterion::EntropyMonotone, violations);
    Ok(if verdict.holds {
        verdict.with_note("sufficient condition holds; monotone for all initial states")
    } else {
        verdict.with_note("sufficient condition violated; see oracle")
    })
}

fn lambda_sq_derivative(spec: &QubitChannelSpec, lam: &[f64; 4], t: f64) -> Result<[f64; 3]> {
    match &spec.param {
        QubitParameterization::Rates(_) => {
            let g = gamma_at(spec, t)?;
            let sums = pairwise_sums(&g);
            // d(lambda_k^2)/dt = -4 (Gamma_i' + Gamma_j') lambda_k^2
            Ok([
                -4.0 * sums[2] * lam[1] * lam[1],
                -4.0 * sums[1] * lam[2] * lam[2],
                -4.0 * sums[0] * lam[3] * lam[3],
            ])
        }
        QubitParameterization::Probabilities(_) => {
            let mut out = [0.0; 3];
            for k in 1..4 {
                let f = |tt: f64| {
                    spec.lambda_at(tt)
                        .map(|l| l[k] * l[k])
                        .unwrap_or(f64::NAN)
                };
                out[k - 1] = fd_deriv(&f, t, FD_STEP, spec.grid.t_max);
            }
            Ok(out)
        }
    }
}

/// sigma(rho_1, rho_2; t) = (1/2) d/dt ||Lambda_t(Delta)||_1 for
/// Delta = sum_k x_k sigma_k, evaluated via d xi / dt.
pub fn trace_distance_flow(spec: &QubitChannelSpec, x: [f64; 3], t: f64) -> Result<f64> {
    if x == [0.0; 3] {
        return Err(Error::DegeneratePair);
    }
    let lam = spec.lambda_at(t)?;
    let xi = (x[0] * x[0] * lam[1] * lam[1]
        + x[1] * x[1] * lam[2] * lam[2]
        + x[2] * x[2] * lam[3] * lam[3])
        .sqrt();
    if xi <= 1e-12 {
        return Err(Error::FlowUndefined(xi));
    }
    let dsq = lambda_sq_derivative(spec, &lam, t)?;
    Ok((x[0] * x[0] * dsq[0] + x[1] * x[1] * dsq[1] + x[2] * x[2] * dsq[2]) / (2.0 * xi))
}

/// d/dt ||Lambda_t(X)||_1 for Hermitian X = x0 I + sum_k x_k sigma_k:
/// zero while delta_+(t) < |x0|, otherwise 2 d delta_+/dt.
pub fn hermitian_observable_flow(
    spec: &QubitChannelSpec,
    x0: f64,
    x: [f64; 3],
    t: f64,
) -> Result<f64> {
    if x0 == 0.0 && x == [0.0; 3] {
        return Err(Error::DegeneratePair);
    }
    if x == [0.0; 3] {
        return Ok(0.0);
    }
    let lam = spec.lambda_at(t)?;
    let delta_plus = (x[0] * x[0] * lam[1] * lam[1]
        + x[1] * x[1] * lam[2] * lam[2]
        + x[2] * x[2] * lam[3] * lam[3])
        .sqrt();
    if delta_plus < x0.abs() {
        return Ok(0.0);
    }
    Ok(2.0 * trace_distance_flow(spec, x, t)?)
}

/// Accumulated rates Gamma_k(t); in Probabilities mode recovered from the
/// (positive) channel eigenvalues.
pub fn big_gammas_at(spec: &QubitChannelSpec, t: f64) -> Result<[f64; 3]> {
    match &spec.param {
        QubitParameterization::Rates(gs) => Ok([
            gs[0].integral(t)?,
            gs[1].integral(t)?,
            gs[2].integral(t)?,
        ]),
        QubitParameterization::Probabilities(_) => {
            let lam = spec.lambda_at(t)?;
            for k in 1..4 {
                if lam[k] <= 1e-8 {
                    return Err(Error::SingularSpectrum {
                        index: k.to_string(),
                        t,
                    });
                }
            }
            // lambda_k = exp(-2 [Gamma_i + Gamma_j]) inverted pairwise.
            let l = [
                -0.5 * lam[1].ln(),
                -0.5 * lam[2].ln(),
                -0.5 * lam[3].ln(),
            ];
            Ok([
                0.5 * (l[1] + l[2] - l[0]),
                0.5 * (l[0] + l[2] - l[1]),
                0.5 * (l[0] + l[1] - l[2]),
            ])
        }
    }
}

/// d/dt S(rho_t) in closed form via the A(t) coefficient.
pub fn entropy_rate(spec: &QubitChannelSpec, bloch: &BlochDecomposition, t: f64) -> Result<f64> {
    let (u, a, b) = (bloch.u, bloch.a, bloch.b);
    if bloch.radius_sq() < 1e-30 {
        return Ok(0.0); // maximally mixed fixed point
    }
    let lam = spec.lambda_at(t)?;
    let g = gamma_at(spec, t)?;
    // Bloch components evolve as u -> lambda_3 u, a -> lambda_1 a,
    // b -> lambda_2 b; the eigenvalue gap is the evolved Bloch radius.
    let terms = [
        lam[3] * lam[3] * u * u,
        lam[1] * lam[1] * a * a,
        lam[2] * lam[2] * b * b,
    ];
    let r2: f64 = terms.iter().sum();
    if r2 < 1e-30 {
        return Ok(0.0);
    }
    let r = r2.sqrt();
    let x_plus = 0.5 + r;
    let x_minus = 0.5 - r;
    if x_minus <= 1e-12 {
        return Err(Error::NotAState(format!(
            "x_-({t}) = {x_minus:.3e}: Bloch vector at or outside ball"
        )));
    }
    // d(lambda_k^2)/dt = 2 mu_k lambda_k^2 with mu_3 = -2(gamma_1+gamma_2) etc.
    let sums = [g[0] + g[1], g[1] + g[2], g[0] + g[2]];
    let x_plus_dot = -2.0 * (sums[0] * terms[0] + sums[1] * terms[1] + sums[2] * terms[2]) / r;
    Ok(-x_plus_dot * (x_plus / x_minus).ln())
}

/// Minimum Choi eigenvalue of the intermediate propagator V_{t,s}.
///
/// V_{t,s} is diagonal in the Pauli basis with eigenvalue ratios
/// lambda_k(t)/lambda_k(s); its Choi eigenvalues are (1/4) H (1, r_1, r_2, r_3).
pub fn intermediate_map_min_eig(spec: &QubitChannelSpec, s: f64, t: f64) -> Result<f64> {
    if !(0.0 <= s && s <= t && t <= spec.grid.t_max) {
        return Err(Error::Domain(format!(
            "need 0 <= s <= t <= t_max, got s = {s}, t = {t}"
        )));
    }
    let mut ratios = [1.0; 4];
    match &spec.param {
        // Rates mode: lambda never vanishes; form the ratio in log space so
        // deeply decayed spectra stay well conditioned.
        QubitParameterization::Rates(_) => {
            let gs = big_gammas_at(spec, s)?;
            let gt = big_gammas_at(spec, t)?;
            let d = [gt[0] - gs[0], gt[1] - gs[1], gt[2] - gs[2]];
            ratios[1] = (-2.0 * (d[1] + d[2])).exp();
            ratios[2] = (-2.0 * (d[0] + d[2])).exp();
            ratios[3] = (-2.0 * (d[0] + d[1])).exp();
        }
        QubitParameterization::Probabilities(_) => {
            let lam_s = spec.lambda_at(s)?;
            let lam_t = spec.lambda_at(t)?;
            for k in 1..4 {
                if lam_s[k].abs() < 1e-8 {
                    return Err(Error::SingularSpectrum {
                        index: k.to_string(),
                        t: s,
                    });
                }
                ratios[k] = lam_t[k] / lam_s[k];
            }
        }
    }
    let eigs = hadamard_apply(&ratios);
    Ok(eigs.iter().cloned().fold(f64::INFINITY, f64::min) * 0.25)
}

/// Single-decoherence-channel rate gamma_k = -p_0'/(2 p_0 - 1), on the grid.
pub fn single_channel_gamma(
    p0: &RateFunction,
    k: usize,
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    if !(1..=3).contains(&k) {
        return Err(Error::Domain(format!("channel index {k} must be 1..3")));
    }
    p0.validate()?;
    if (p0.eval(0.0) - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("p_0(0) = {} must equal 1", p0.eval(0.0))));
    }
    let mut out = Vec::with_capacity(grid.n_points);
    for t in grid.times() {
        let v = p0.eval(t);
        if v <= 0.5 + 1e-8 {
            return Err(Error::SingularDenominator(t));
        }
        let dot = fd_deriv(&|tt| p0.eval(tt), t, FD_STEP, grid.t_max);
        out.push(-dot / (2.0 * v - 1.0));
    }
    Ok(out)
}

/// Depolarizing-mixture generator prefactor -p'/p of Eq.-style
/// L_t = -(p'/p)[Lambda_D - I]; equals N^2 gamma_kl for the N-level family
/// (4 gamma_k for a qubit).
pub fn depolarizing_rate(p: &RateFunction, t: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension {n} must be >= 2")));
    }
    p.validate()?;
    let v = p.eval(t);
    if v <= 1e-8 {
        return Err(Error::Domain(format!("p({t}) = {v:.3e} too close to zero")));
    }
    let dot = fd_deriv(&|tt| p.eval(tt), t, FD_STEP, f64::INFINITY);
    Ok(-dot / v)
}

/// Full qubit classification: all three verdicts plus the grid series.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub spec_summary: String,
    pub grid: TimeGrid,
    pub divisible: CriterionVerdict,
    pub blp_monotone: CriterionVerdict,
    pub entropy_monotone: CriterionVerdict,
    pub times: Vec<f64>,
    pub gamma: Vec<[f64; 3]>,
    pub lambda: Vec<[f64; 4]>,
    pub pairwise_sums: Vec<[f64; 3]>,
    pub warnings: Vec<String>,
}

/// Flag grid points where the finite-difference derivative of a probability
/// series jumps by more than 1/h between neighbours (a kink candidate).
fn kink_warnings(spec: &QubitChannelSpec) -> Vec<String> {
    let QubitParameterization::Probabilities(ps) = &spec.param else {
        return Vec::new();
    };
    let h = spec.grid.spacing();
    let mut warnings = Vec::new();
    for (a, p) in ps.iter().enumerate() {
        let series: Vec<f64> = spec.grid.times().map(|t| p.eval(t)).collect();
        let dots = fd_derivative(&series, h);
        for i in 0..dots.len() - 1 {
            if (dots[i + 1] - dots[i]).abs() > 1.0 / h {
                warnings.push(format!(
                    "possible kink in p_{a} near t = {:.6}; central differences unreliable there",
                    spec.grid.time(i)
                ));
                break;
            }
        }
    }
    warnings
}

pub fn classify(spec: &QubitChannelSpec) -> Result<ClassificationReport> {
    spec.validate()?;
    let divisible = check_divisible(spec)?;
    let blp = check_blp(spec)?;
    let entropy = check_entropy_monotone(spec)?;
    if divisible.holds && !blp.holds {
        return Err(Error::InternalConsistency(
            "divisible but not BLP-monotone".into(),
        ));
    }
    if blp.holds && !entropy.holds {
        return Err(Error::InternalConsistency(
            "BLP-monotone but entropy test failed".into(),
        ));
    }
    let gammas = gamma_series(spec)?;
    let ls = lambda_series(spec)?;
    let sums: Vec<[f64; 3]> = gammas.iter().map(pairwise_sums).collect();
    let summary = match &spec.param {
        QubitParameterization::Rates(_) => "qubit channel, rates mode".to_string(),
        QubitParameterization::Probabilities(_) => "qubit channel, probabilities mode".to_string(),
    };
    Ok(ClassificationReport {
        spec_summary: summary,
        grid: spec.grid,
        divisible,
        blp_monotone: blp,
        entropy_monotone: entropy,
        times: spec.grid.times().collect(),
        gamma: gammas,
        lambda: ls.values,
        pairwise_sums: sums,
        warnings: kink_warnings(spec),
    })
}
