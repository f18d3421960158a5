//! Time-dependent rate functions gamma(t), their antiderivatives Gamma(t),
//! and the three-way qubit parameterization transforms p(t) <-> lambda(t) <-> gamma(t).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar function of time with an exact or numerical antiderivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RateFunction {
    /// f(t) = value
    Constant { value: f64 },
    /// f(t) = offset + amplitude * sin(omega * t + phase)
    Sinusoid {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// f(t) = sum coefficients[i] * t^i
    Polynomial { coefficients: Vec<f64> },
    /// Piecewise-linear interpolation of (times, values); constant beyond the last knot.
    Piecewise { times: Vec<f64>, values: Vec<f64> },
    /// Sampled data, linear interpolation; integral refined by local quadratics.
    Sampled { times: Vec<f64>, values: Vec<f64> },
    /// f(t) = offset + amplitude * exp(rate * t)
    Exponential {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        rate: f64,
    },
}

fn check_knots(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::Domain(format!(
            "need matching knot lists of length >= 2, got {} times / {} values",
            times.len(),
            values.len()
        )));
    }
    if times[0] != 0.0 {
        return Err(Error::Domain(format!(
            "knot times must start at 0, got {}",
            times[0]
        )));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("knot times must be strictly increasing".into()));
    }
    Ok(())
}

fn interp_linear(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return values[0];
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return values[last];
    }
    let i = match times.partition_point(|&x| x <= t) {
        0 => 0,
        k => k - 1,
    };
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    values[i] * (1.0 - w) + values[i + 1] * w
}

/// Integral over [t_i, min(t, t_{i+1})] of the local quadratic model.
/// Interior segments average the parabolas through {i-1,i,i+1} and
/// {i,i+1,i+2}; the leading interpolation errors of the two one-sided
/// stencils cancel, matching composite-Simpson accuracy.
fn segment_quadratic_integral(times: &[f64], values: &[f64], i: usize, upper: f64) -> f64 {
    let n = times.len();
    // Integral over [a, b] of the parabola through knots {j, j+1, j+2}.
    let stencil = |j: usize, a: f64, b: f64| -> f64 {
        let (t0, t1, t2) = (times[j], times[j + 1], times[j + 2]);
        let (f0, f1, f2) = (values[j], values[j + 1], values[j + 2]);
        let basis = |fa: f64, ta: f64, tb: f64, tc: f64| -> f64 {
            // integral of fa * (t - tb)(t - tc) / ((ta - tb)(ta - tc))
            let denom = (ta - tb) * (ta - tc);
            let prim = |t: f64| t * t * t / 3.0 - (tb + tc) * t * t / 2.0 + tb * tc * t;
            fa * (prim(b) - prim(a)) / denom
        };
        basis(f0, t0, t1, t2) + basis(f1, t1, t0, t2) + basis(f2, t2, t0, t1)
    };
    let (a, b) = (times[i], upper);
    if n < 3 {
        let va = interp_linear(times, values, a);
        let vb = interp_linear(times, values, b);
        return 0.5 * (va + vb) * (b - a);
    }
    match (i >= 1, i + 2 < n) {
        (true, true) => 0.5 * (stencil(i - 1, a, b) + stencil(i, a, b)),
        (true, false) => stencil(i - 1, a, b),
        (false, _) => stencil(0, a, b),
    }
}

impl RateFunction {
    pub fn constant(value: f64) -> Self {
        RateFunction::Constant { value }
    }

    /// sin(t)
    pub fn sin_t() -> Self {
        RateFunction::Sinusoid {
            offset: 0.0,
            amplitude: 1.0,
            omega: 1.0,
            phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RateFunction::Piecewise { times, values } | RateFunction::Sampled { times, values } => {
                check_knots(times, values)
            }
            _ => Ok(()),
        }
    }

    /// The affine image t -> shift + scale * f(t); every kind is closed
    /// under this transform.
    pub fn affine(&self, shift: f64, scale: f64) -> Self {
        match self.clone() {
            RateFunction::Constant { value } => RateFunction::Constant {
                value: shift + scale * value,
            },
            RateFunction::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => RateFunction::Sinusoid {
                offset: shift + scale * offset,
                amplitude: scale * amplitude,
                omega,
                phase,
            },
            RateFunction::Polynomial { mut coefficients } => {
                if coefficients.is_empty() {
                    coefficients.push(0.0);
                }
                for c in coefficients.iter_mut() {
                    *c *= scale;
                }
                coefficients[0] += shift;
                RateFunction::Polynomial { coefficients }
            }
            RateFunction::Piecewise { times, values } => RateFunction::Piecewise {
                times,
                values: values.into_iter().map(|v| shift + scale * v).collect(),
            },
            RateFunction::Sampled { times, values } => RateFunction::Sampled {
                times,
                values: values.into_iter().map(|v| shift + scale * v).collect(),
            },
            RateFunction::Exponential {
                offset,
                amplitude,
                rate,
            } => RateFunction::Exponential {
                offset: shift + scale * offset,
                amplitude: scale * amplitude,
                rate,
            },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RateFunction::Constant { value } => *value,
            RateFunction::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => offset + amplitude * (omega * t + phase).sin(),
            RateFunction::Polynomial { coefficients } => coefficients
                .iter()
                .rev()
                .fold(0.0, |acc, &c| acc * t + c),
            RateFunction::Piecewise { times, values } | RateFunction::Sampled { times, values } => {
                interp_linear(times, values, t)
            }
            RateFunction::Exponential {
                offset,
                amplitude,
                rate,
            } => offset + amplitude * (rate * t).exp(),
        }
    }

    /// Antiderivative Gamma(t) = integral of the rate over [0, t].
    pub fn integral(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::Domain(format!("integral requested at t = {t} < 0")));
        }
        Ok(match self {
            RateFunction::Constant { value } => value * t,
            RateFunction::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => {
                if *omega == 0.0 {
                    (offset + amplitude * phase.sin()) * t
                } else {
                    offset * t + amplitude * (phase.cos() - (omega * t + phase).cos()) / omega
                }
            }
            RateFunction::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .map(|(i, &c)| c * t.powi(i as i32 + 1) / (i as f64 + 1.0))
                .sum(),
            RateFunction::Piecewise { times, values } => {
                let mut acc = 0.0;
                let last = times.len() - 1;
                for i in 0..last {
                    if t <= times[i] {
                        return Ok(acc);
                    }
                    let hi = t.min(times[i + 1]);
                    let v_hi = interp_linear(times, values, hi);
                    acc += 0.5 * (values[i] + v_hi) * (hi - times[i]);
                }
                if t > times[last] {
                    acc += values[last] * (t - times[last]);
                }
                acc
            }
            RateFunction::Sampled { times, values } => {
                let mut acc = 0.0;
                let last = times.len() - 1;
                for i in 0..last {
                    if t <= times[i] {
                        return Ok(acc);
                    }
                    let hi = t.min(times[i + 1]);
                    acc += segment_quadratic_integral(times, values, i, hi);
                }
                if t > times[last] {
                    acc += values[last] * (t - times[last]);
                }
                acc
            }
            RateFunction::Exponential {
                offset,
                amplitude,
                rate,
            } => {
                if *rate == 0.0 {
                    (offset + amplitude) * t
                } else {
                    offset * t + amplitude * ((rate * t).exp() - 1.0) / rate
                }
            }
        })
    }
}

/// Uniform time grid on [0, t_max] including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_points: usize,
}

pub const DEFAULT_T_MAX: f64 = 10.0;
pub const DEFAULT_N_POINTS: usize = 2001;

impl TimeGrid {
    pub fn new(t_max: f64, n_points: usize) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
        }
        if n_points < 2 {
            return Err(Error::Domain(format!("need >= 2 grid points, got {n_points}")));
        }
        Ok(TimeGrid { t_max, n_points })
    }

    pub fn spacing(&self) -> f64 {
        self.t_max / (self.n_points - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_points - 1 {
            self.t_max
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.time(i))
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            t_max: DEFAULT_T_MAX,
            n_points: DEFAULT_N_POINTS,
        }
    }
}

/// Qubit Pauli channel parameterized either by three decoherence rates
/// or by the four Pauli probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum QubitParameterization {
    Rates([RateFunction; 3]),
    Probabilities([RateFunction; 4]),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QubitChannelSpec {
    pub param: QubitParameterization,
    pub grid: TimeGrid,
}

impl QubitChannelSpec {
    pub fn from_rates(g1: RateFunction, g2: RateFunction, g3: RateFunction, grid: TimeGrid) -> Self {
        QubitChannelSpec {
            param: QubitParameterization::Rates([g1, g2, g3]),
            grid,
        }
    }

    pub fn from_probabilities(p: [RateFunction; 4], grid: TimeGrid) -> Self {
        QubitChannelSpec {
            param: QubitParameterization::Probabilities(p),
            grid,
        }
    }

    pub fn is_rates_mode(&self) -> bool {
        matches!(self.param, QubitParameterization::Rates(_))
    }

    pub fn validate(&self) -> Result<()> {
        match &self.param {
            QubitParameterization::Rates(gs) => {
                for g in gs {
                    g.validate()?;
                }
            }
            QubitParameterization::Probabilities(ps) => {
                for p in ps {
                    p.validate()?;
                }
                if (ps[0].eval(0.0) - 1.0).abs() > 1e-10 {
                    return Err(Error::InvalidDistribution(format!(
                        "p_0(0) = {} must equal 1",
                        ps[0].eval(0.0)
                    )));
                }
                for t in self.grid.times() {
                    let p = [ps[0].eval(t), ps[1].eval(t), ps[2].eval(t), ps[3].eval(t)];
                    let sum: f64 = p.iter().sum();
                    if (sum - 1.0).abs() > 1e-8 {
                        return Err(Error::InvalidDistribution(format!(
                            "sum p_alpha({t}) = {sum}"
                        )));
                    }
                    if let Some(bad) = p.iter().find(|&&x| x < -1e-10) {
                        return Err(Error::InvalidDistribution(format!(
                            "p_alpha({t}) = {bad:.3e} negative"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Probabilities at an arbitrary time. Rates mode uses the closed-form
    /// inverse relations; negative values are allowed here (the map then
    /// fails complete positivity at t) -- callers needing a channel must
    /// use [`probabilities_from_gammas`].
    pub fn weights_at(&self, t: f64) -> Result<[f64; 4]> {
        match &self.param {
            QubitParameterization::Probabilities(ps) => {
                Ok([ps[0].eval(t), ps[1].eval(t), ps[2].eval(t), ps[3].eval(t)])
            }
            QubitParameterization::Rates(gs) => {
                let g1 = gs[0].integral(t)?;
                let g2 = gs[1].integral(t)?;
                let g3 = gs[2].integral(t)?;
                Ok(probabilities_from_big_gammas(g1, g2, g3))
            }
        }
    }

    /// Channel eigenvalues (lambda_0..lambda_3) at an arbitrary time.
    pub fn lambda_at(&self, t: f64) -> Result<[f64; 4]> {
        match &self.param {
            QubitParameterization::Probabilities(_) => {
                let p = self.weights_at(t)?;
                Ok(hadamard_apply(&p))
            }
            QubitParameterization::Rates(gs) => {
                let g1 = gs[0].integral(t)?;
                let g2 = gs[1].integral(t)?;
                let g3 = gs[2].integral(t)?;
                Ok([
                    1.0,
                    (-2.0 * (g2 + g3)).exp(),
                    (-2.0 * (g1 + g3)).exp(),
                    (-2.0 * (g1 + g2)).exp(),
                ])
            }
        }
    }

    /// Rates at an arbitrary time, Rates mode only.
    pub fn rates_at(&self, t: f64) -> Option<[f64; 3]> {
        match &self.param {
            QubitParameterization::Rates(gs) => {
                Some([gs[0].eval(t), gs[1].eval(t), gs[2].eval(t)])
            }
            QubitParameterization::Probabilities(_) => None,
        }
    }
}

/// Channel eigenvalues lambda_alpha(t) on the grid.
#[derive(Debug, Clone)]
pub struct LambdaSpectrum {
    pub grid: TimeGrid,
    pub values: Vec<[f64; 4]>,
}

impl LambdaSpectrum {
    fn check_initial(&self) -> Result<()> {
        let l0 = self.values[0];
        for k in 0..4 {
            if (l0[k] - 1.0).abs() > 1e-10 {
                return Err(Error::InternalConsistency(format!(
                    "lambda_{k}(0) = {} must equal 1",
                    l0[k]
                )));
            }
        }
        Ok(())
    }
}

/// The 4x4 Hadamard matrix relating Pauli probabilities and channel
/// eigenvalues; satisfies H H = 4 I.
pub fn hadamard4() -> [[f64; 4]; 4] {
    [
        [1.0, 1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ]
}

pub fn hadamard_apply(x: &[f64; 4]) -> [f64; 4] {
    let h = hadamard4();
    let mut out = [0.0; 4];
    for a in 0..4 {
        out[a] = (0..4).map(|b| h[a][b] * x[b]).sum();
    }
    out
}

/// lambda_alpha(t) = sum_beta H_{alpha beta} p_beta(t) on the grid.
pub fn lambdas_from_probabilities(spec: &QubitChannelSpec) -> Result<LambdaSpectrum> {
    if spec.is_rates_mode() {
        return Err(Error::Domain("expected a Probabilities-mode spec".into()));
    }
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.grid.n_points);
    for t in spec.grid.times() {
        let l = spec.lambda_at(t)?;
        for k in 1..4 {
            if l[k].abs() > 1.0 + 1e-10 {
                return Err(Error::InternalConsistency(format!(
                    "|lambda_{k}({t})| = {} exceeds 1",
                    l[k].abs()
                )));
            }
        }
        values.push(l);
    }
    let ls = LambdaSpectrum {
        grid: spec.grid,
        values,
    };
    ls.check_initial()?;
    Ok(ls)
}

/// lambda_k(t) from the rates via the closed-form exponentials.
///
/// When a rate is negative for long enough, lambda_k can exceed 1; the map
/// then fails complete positivity but the spectrum is still well defined.
pub fn lambdas_from_gammas(spec: &QubitChannelSpec) -> Result<LambdaSpectrum> {
    if !spec.is_rates_mode() {
        return Err(Error::Domain("expected a Rates-mode spec".into()));
    }
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.grid.n_points);
    for t in spec.grid.times() {
        values.push(spec.lambda_at(t)?);
    }
    let ls = LambdaSpectrum {
        grid: spec.grid,
        values,
    };
    ls.check_initial()?;
    Ok(ls)
}

/// Second-order finite-difference derivative of a sampled series:
/// central in the interior, one-sided at the endpoints.
pub fn fd_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3);
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

/// Generator eigenvalues mu_alpha = lambda_dot_alpha / lambda_alpha on the grid.
pub fn mus_from_lambdas(ls: &LambdaSpectrum) -> Result<Vec<[f64; 4]>> {
    let h = ls.grid.spacing();
    let n = ls.values.len();
    for (i, l) in ls.values.iter().enumerate() {
        for k in 1..4 {
            if l[k].abs() < 1e-8 {
                return Err(Error::SingularSpectrum {
                    index: k.to_string(),
                    t: ls.grid.time(i),
                });
            }
        }
    }
    let mut mus = vec![[0.0; 4]; n];
    for k in 1..4 {
        let series: Vec<f64> = ls.values.iter().map(|l| l[k]).collect();
        let dots = fd_derivative(&series, h);
        for i in 0..n {
            mus[i][k] = dots[i] / series[i];
        }
    }
    Ok(mus)
}

/// gamma = (1/4) H mu, components 1..3. Requires mu_0 = 0 (zero-sum identity).
pub fn gammas_from_mus(mus: &[[f64; 4]]) -> Result<Vec<[f64; 3]>> {
    let mut out = Vec::with_capacity(mus.len());
    for mu in mus {
        if mu[0].abs() > 1e-6 {
            return Err(Error::InconsistentGenerator(mu[0].abs()));
        }
        let g = hadamard_apply(mu);
        out.push([0.25 * g[1], 0.25 * g[2], 0.25 * g[3]]);
    }
    Ok(out)
}

fn probabilities_from_big_gammas(g1: f64, g2: f64, g3: f64) -> [f64; 4] {
    let a12 = (-2.0 * (g1 + g2)).exp();
    let a13 = (-2.0 * (g1 + g3)).exp();
    let a23 = (-2.0 * (g2 + g3)).exp();
    [
        0.25 * (1.0 + a12 + a13 + a23),
        0.25 * (1.0 - a12 - a13 + a23),
        0.25 * (1.0 - a12 + a13 - a23),
        0.25 * (1.0 + a12 - a13 - a23),
    ]
}

/// Closed-form probabilities p_alpha(t) on the grid from a Rates-mode spec.
/// Errors if the rates fail to define a CP map at some grid time.
pub fn probabilities_from_gammas(spec: &QubitChannelSpec) -> Result<Vec<[f64; 4]>> {
    if !spec.is_rates_mode() {
        return Err(Error::Domain("expected a Rates-mode spec".into()));
    }
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.grid.n_points);
    for t in spec.grid.times() {
        let p = spec.weights_at(t)?;
        if let Some((a, &bad)) = p.iter().enumerate().find(|(_, &x)| x < -1e-10) {
            return Err(Error::NotAChannel(format!(
                "p_{a}({t}) = {bad:.3e} negative"
            )));
        }
        out.push(p);
    }
    Ok(out)
}

/// Grid series of the three rates, from either parameterization.
/// Probabilities mode goes through the lambda -> mu -> gamma pipeline.
pub fn gamma_series(spec: &QubitChannelSpec) -> Result<Vec<[f64; 3]>> {
    match &spec.param {
        QubitParameterization::Rates(gs) => Ok(spec
            .grid
            .times()
            .map(|t| [gs[0].eval(t), gs[1].eval(t), gs[2].eval(t)])
            .collect()),
        QubitParameterization::Probabilities(_) => {
            let ls = lambdas_from_probabilities(spec)?;
            gammas_from_mus(&mus_from_lambdas(&ls)?)
        }
    }
}

/// Lambda series from either parameterization.
pub fn lambda_series(spec: &QubitChannelSpec) -> Result<LambdaSpectrum> {
    if spec.is_rates_mode() {
        lambdas_from_gammas(spec)
    } else {
        lambdas_from_probabilities(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(t_max: f64, n: usize) -> TimeGrid {
        TimeGrid::new(t_max, n).unwrap()
    }

    #[test]
    fn integral_constant() {
        let g = RateFunction::constant(1.0);
        assert!((g.integral(PI).unwrap() - PI).abs() < 1e-14);
    }

    #[test]
    fn integral_sin_is_one_minus_cos() {
        let g = RateFunction::sin_t();
        for t in [0.0, 0.5, 1.0, PI, 7.3] {
            assert!((g.integral(t).unwrap() - (1.0 - t.cos())).abs() < 1e-13);
        }
        assert!((g.integral(PI).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn integral_polynomial() {
        let g = RateFunction::Polynomial {
            coefficients: vec![0.0, 2.0],
        };
        assert!((g.integral(3.0).unwrap() - 9.0).abs() < 1e-13);
    }

    #[test]
    fn integral_piecewise_linear_exact() {
        let g = RateFunction::Piecewise {
            times: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 1.0, 1.0],
        };
        assert!((g.integral(1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((g.integral(2.0).unwrap() - 1.5).abs() < 1e-14);
        assert!((g.integral(0.5).unwrap() - 0.125).abs() < 1e-14);
        // constant extension beyond the last knot
        assert!((g.integral(3.0).unwrap() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn integral_sampled_quadratic_refinement() {
        // Sample sin(t) at step 0.05; quadratic refinement should beat trapezoid.
        let n = 201;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = times.iter().map(|t| t.sin()).collect();
        let g = RateFunction::Sampled { times, values };
        let t: f64 = 7.35;
        let exact = 1.0 - t.cos();
        assert!((g.integral(t).unwrap() - exact).abs() < 1e-6);
    }

    #[test]
    fn integral_negative_time_rejected() {
        assert!(RateFunction::constant(1.0).integral(-0.1).is_err());
    }

    #[test]
    fn knot_validation() {
        assert!(RateFunction::Piecewise {
            times: vec![0.0, 1.0, 1.0],
            values: vec![0.0, 1.0, 2.0],
        }
        .validate()
        .is_err());
        assert!(RateFunction::Sampled {
            times: vec![0.5, 1.0],
            values: vec![0.0, 1.0],
        }
        .validate()
        .is_err());
    }

    #[test]
    fn hadamard_self_inverse() {
        let h = hadamard4();
        for i in 0..4 {
            for j in 0..4 {
                let prod: f64 = (0..4).map(|k| h[i][k] * h[k][j]).sum();
                let expect = if i == j { 4.0 } else { 0.0 };
                assert_eq!(prod, expect);
            }
        }
    }

    #[test]
    fn hadamard_identity_and_depolarizing_columns() {
        assert_eq!(hadamard_apply(&[1.0, 0.0, 0.0, 0.0]), [1.0; 4]);
        assert_eq!(hadamard_apply(&[0.25; 4]), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn lambdas_from_probabilities_bit_flip() {
        let spec = QubitChannelSpec::from_probabilities(
            [
                RateFunction::constant(0.5),
                RateFunction::constant(0.5),
                RateFunction::constant(0.0),
                RateFunction::constant(0.0),
            ],
            grid(1.0, 11),
        );
        // p_0(0) != 1 so validation must fail first.
        assert!(lambdas_from_probabilities(&spec).is_err());
    }

    #[test]
    fn lambdas_from_probabilities_single_channel() {
        // p_0 = (1 + e^{-2t})/2, p_3 = (1 - e^{-2t})/2: lambda_3 = 1, lambda_1 = lambda_2 = e^{-2t}.
        let spec = QubitChannelSpec::from_probabilities(
            [
                RateFunction::Exponential {
                    offset: 0.5,
                    amplitude: 0.5,
                    rate: -2.0,
                },
                RateFunction::constant(0.0),
                RateFunction::constant(0.0),
                RateFunction::Exponential {
                    offset: 0.5,
                    amplitude: -0.5,
                    rate: -2.0,
                },
            ],
            grid(2.0, 21),
        );
        let ls = lambdas_from_probabilities(&spec).unwrap();
        for (i, t) in spec.grid.times().enumerate() {
            let e = (-2.0 * t).exp();
            assert!((ls.values[i][3] - 1.0).abs() < 1e-12);
            assert!((ls.values[i][1] - e).abs() < 1e-12);
            assert!((ls.values[i][2] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn lambdas_from_gammas_fixture() {
        let spec = QubitChannelSpec::from_rates(
            RateFunction::constant(1.0),
            RateFunction::constant(1.0),
            RateFunction::sin_t(),
            grid(PI, 101),
        );
        let ls = lambdas_from_gammas(&spec).unwrap();
        let last = ls.values.last().unwrap();
        assert!((last[1] - (-2.0 * (PI + 2.0)).exp()).abs() < 1e-12);
        assert!((last[3] - (-4.0 * PI).exp()).abs() < 1e-12);
    }

    #[test]
    fn zero_rates_give_unit_lambdas() {
        let spec = QubitChannelSpec::from_rates(
            RateFunction::constant(0.0),
            RateFunction::constant(0.0),
            RateFunction::constant(0.0),
            grid(5.0, 51),
        );
        let ls = lambdas_from_gammas(&spec).unwrap();
        assert!(ls.values.iter().all(|l| *l == [1.0; 4]));
    }

    #[test]
    fn mus_recover_constant_log_derivative() {
        let spec = QubitChannelSpec::from_rates(
            RateFunction::constant(1.0),
            RateFunction::constant(1.0),
            RateFunction::constant(1.0),
            grid(2.0, 401),
        );
        let ls = lambdas_from_gammas(&spec).unwrap();
        let mus = mus_from_lambdas(&ls).unwrap();
        let h = spec.grid.spacing();
        for mu in &mus {
            assert_eq!(mu[0], 0.0);
            for k in 1..4 {
                assert!((mu[k] + 4.0).abs() < 10.0 * h * h * 64.0 / 6.0 + 1e-10);
            }
        }
    }

    #[test]
    fn mus_singularity_reported() {
        // lambda crosses zero when p = (1/2)(1 + cos-like) passes through 1/2... use
        // probabilities that drive lambda_1 = lambda_2 = 2p_0 - 1 through zero.
        let spec = QubitChannelSpec::from_probabilities(
            [
                RateFunction::Piecewise {
                    times: vec![0.0, 1.0, 2.0],
                    values: vec![1.0, 0.5, 0.4],
                },
                RateFunction::constant(0.0),
                RateFunction::constant(0.0),
                RateFunction::Piecewise {
                    times: vec![0.0, 1.0, 2.0],
                    values: vec![0.0, 0.5, 0.6],
                },
            ],
            grid(2.0, 21),
        );
        let ls = lambdas_from_probabilities(&spec).unwrap();
        match mus_from_lambdas(&ls) {
            Err(Error::SingularSpectrum { .. }) => {}
            other => panic!("expected singular spectrum, got {other:?}"),
        }
    }

    #[test]
    fn gammas_from_mus_examples() {
        let out = gammas_from_mus(&[[0.0, -4.0, -4.0, -4.0]]).unwrap();
        for k in 0..3 {
            assert!((out[0][k] - 1.0).abs() < 1e-14);
        }
        assert_eq!(gammas_from_mus(&[[0.0; 4]]).unwrap(), vec![[0.0; 3]]);
        assert!(gammas_from_mus(&[[0.1, 0.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn probabilities_from_gammas_single_channel() {
        let spec = QubitChannelSpec::from_rates(
            RateFunction::constant(0.0),
            RateFunction::constant(0.0),
            RateFunction::constant(1.5),
            grid(2.0, 21),
        );
        let ps = probabilities_from_gammas(&spec).unwrap();
        for (i, t) in spec.grid.times().enumerate() {
            let e = (-2.0 * 1.5 * t).exp();
            assert!((ps[i][0] - 0.5 * (1.0 + e)).abs() < 1e-13);
            assert!((ps[i][3] - 0.5 * (1.0 - e)).abs() < 1e-13);
            assert!(ps[i][1].abs() < 1e-13 && ps[i][2].abs() < 1e-13);
        }
    }

    #[test]
    fn probabilities_from_gammas_fixture_at_pi() {
        let spec = QubitChannelSpec::from_rates(
            RateFunction::constant(1.0),
            RateFunction::constant(1.0),
            RateFunction::sin_t(),
            grid(PI, 201),
        );
        let ps = probabilities_from_gammas(&spec).unwrap();
        let a12 = (-4.0 * PI).exp();
        let a13 = (-2.0 * (PI + 2.0)).exp();
        let expect = 0.25 * (1.0 + a12 + 2.0 * a13);
        assert!((ps.last().unwrap()[0] - expect).abs() < 1e-13);
    }

    #[test]
    fn probabilities_from_gammas_rejects_non_channel() {
        let spec = QubitChannelSpec::from_rates(
            RateFunction::constant(0.0),
            RateFunction::constant(0.0),
            RateFunction::constant(-1.0),
            grid(1.0, 11),
        );
        assert!(matches!(
            probabilities_from_gammas(&spec),
            Err(Error::NotAChannel(_))
        ));
    }

    #[test]
    fn rates_roundtrip_through_pipeline() {
        // gamma = (1, 1, sin t): lambda -> mu -> gamma recovers the rates to O(h^2).
        let spec = QubitChannelSpec::from_rates(
            RateFunction::constant(1.0),
            RateFunction::constant(1.0),
            RateFunction::sin_t(),
            grid(4.0, 4001),
        );
        let h = spec.grid.spacing();
        let ls = lambdas_from_gammas(&spec).unwrap();
        let gs = gammas_from_mus(&mus_from_lambdas(&ls).unwrap()).unwrap();
        for (i, t) in spec.grid.times().enumerate() {
            let expect = [1.0, 1.0, t.sin()];
            for k in 0..3 {
                assert!(
                    (gs[i][k] - expect[k]).abs() < 500.0 * h * h,
                    "k={k} t={t} got {} want {}",
                    gs[i][k],
                    expect[k]
                );
            }
        }
    }

    #[test]
    fn closed_form_paths_agree() {
        // Rates -> p -> lambda equals Rates -> lambda directly (both closed form).
        let spec = QubitChannelSpec::from_rates(
            RateFunction::Sinusoid {
                offset: 0.4,
                amplitude: 0.2,
                omega: 1.3,
                phase: 0.5,
            },
            RateFunction::constant(0.3),
            RateFunction::Polynomial {
                coefficients: vec![0.1, 0.05],
            },
            grid(5.0, 501),
        );
        let direct = lambdas_from_gammas(&spec).unwrap();
        let ps = probabilities_from_gammas(&spec).unwrap();
        for (i, p) in ps.iter().enumerate() {
            let viah = hadamard_apply(p);
            for k in 0..4 {
                assert!((viah[k] - direct.values[i][k]).abs() < 1e-10);
            }
        }
    }
}
