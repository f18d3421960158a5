//! Brute-force numerical oracles: sampled trace-distance trajectories,
//! numerical entropy derivatives, and the N-level conjecture scanner.
//! Nothing here reuses the analytic flow formulas.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::denmat::{
    apply_weighted_unitaries, entropy_of_eigenvalues, hermitian_eigvals, pauli, trace_norm,
    ComplexMatrix, DensityMatrix,
};
use crate::error::{Error, Result};
use crate::rate::QubitChannelSpec;
use crate::weyl::{weyl_operator, weyl_operators, WeylChannelSpec, WeylIndex};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_pairs: usize,
    pub n_times: usize,
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n_pairs: 500,
            n_times: 400,
            fd_step: 1e-4,
            seed: 0,
        }
    }
}

/// Witness location of an extremal oracle value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Witness {
    pub sample_index: usize,
    pub t: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub config: OracleConfig,
    pub max_positive_flow: f64,
    pub flow_witness: Option<Witness>,
    pub max_entropy_decrease: f64,
    pub entropy_witness: Option<Witness>,
    /// Whether the oracle's sign classification agrees with the analytic verdict.
    pub agreement: bool,
    /// Conjecture scanner only: a flow above the counterexample threshold
    /// was found while the (Ngamma) conditions held.
    pub counterexample_candidate: bool,
    pub notes: Vec<String>,
}

/// A channel whose action can be evaluated numerically at any time.
pub trait EvolvableChannel {
    fn dim(&self) -> usize;
    fn t_max(&self) -> f64;
    fn unitaries(&self) -> Vec<ComplexMatrix>;
    /// Mixing weights at time t, possibly negative when the map fails CP.
    fn weights_at(&self, t: f64) -> Result<Vec<f64>>;
}

impl EvolvableChannel for QubitChannelSpec {
    fn dim(&self) -> usize {
        2
    }
    fn t_max(&self) -> f64 {
        self.grid.t_max
    }
    fn unitaries(&self) -> Vec<ComplexMatrix> {
        (0..4).map(pauli).collect()
    }
    fn weights_at(&self, t: f64) -> Result<Vec<f64>> {
        QubitChannelSpec::weights_at(self, t).map(|p| p.to_vec())
    }
}

impl EvolvableChannel for WeylChannelSpec {
    fn dim(&self) -> usize {
        self.dim
    }
    fn t_max(&self) -> f64 {
        self.grid.t_max
    }
    fn unitaries(&self) -> Vec<ComplexMatrix> {
        weyl_operators(self.dim)
    }
    fn weights_at(&self, t: f64) -> Result<Vec<f64>> {
        WeylChannelSpec::weights_at(self, t)
    }
}

fn evolve_operator(
    channel: &dyn EvolvableChannel,
    unitaries: &[ComplexMatrix],
    x: &ComplexMatrix,
    t: f64,
) -> Result<ComplexMatrix> {
    let w = channel.weights_at(t)?;
    Ok(apply_weighted_unitaries(&w, unitaries, x))
}

/// sigma(rho_1, rho_2; t) by central differences of the trace norm of the
/// evolved difference; no analytic shortcut.
pub fn numeric_trace_distance_flow(
    channel: &dyn EvolvableChannel,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    t: f64,
    h: f64,
) -> Result<f64> {
    let delta = rho1.mat().sub(rho2.mat());
    if delta.max_abs() < 1e-12 {
        return Err(Error::DegeneratePair);
    }
    if t - h < 0.0 || t + h > channel.t_max() {
        return Err(Error::Domain(format!(
            "t +- h = {t} +- {h} leaves [0, {}]",
            channel.t_max()
        )));
    }
    let unitaries = channel.unitaries();
    let plus = trace_norm(&evolve_operator(channel, &unitaries, &delta, t + h)?, true)?;
    let minus = trace_norm(&evolve_operator(channel, &unitaries, &delta, t - h)?, true)?;
    Ok(0.5 * (plus - minus) / (2.0 * h))
}

/// d/dt S(rho_t) by central differences of the evolved entropy.
pub fn numeric_entropy_rate(
    channel: &dyn EvolvableChannel,
    rho: &DensityMatrix,
    t: f64,
    h: f64,
) -> Result<f64> {
    if t - h < 0.0 || t + h > channel.t_max() {
        return Err(Error::Domain(format!(
            "t +- h = {t} +- {h} leaves [0, {}]",
            channel.t_max()
        )));
    }
    let unitaries = channel.unitaries();
    let ent = |tt: f64| -> Result<f64> {
        let m = evolve_operator(channel, &unitaries, rho.mat(), tt)?;
        entropy_of_eigenvalues(&hermitian_eigvals(&m)?)
    };
    Ok((ent(t + h)? - ent(t - h)?) / (2.0 * h))
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; deterministic given the rng stream.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn haar_pure(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let psi: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
        .collect();
    DensityMatrix::pure(&psi).expect("Gaussian vector is almost surely nonzero")
}

fn wishart_state(rng: &mut ChaCha8Rng, n: usize) -> DensityMatrix {
    let g = ComplexMatrix::from_fn(n, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    let m = g.mul(&g.adjoint());
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(Complex64::new(1.0 / tr, 0.0))).expect("G G^dag / tr is a state")
}

fn antipodal_qubit_pair(rng: &mut ChaCha8Rng) -> (DensityMatrix, DensityMatrix) {
    let mut v = [gaussian(rng), gaussian(rng), gaussian(rng)];
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-12);
    let r = rng.gen_range(0.05..=0.5);
    for x in v.iter_mut() {
        *x *= r / norm;
    }
    let state = |sign: f64| {
        let mut m = ComplexMatrix::identity(2).scale(Complex64::new(0.5, 0.0));
        for (k, &x) in v.iter().enumerate() {
            m.add_scaled(&pauli(k + 1), Complex64::new(sign * x, 0.0));
        }
        DensityMatrix::new(m).expect("Bloch radius <= 1/2")
    };
    (state(1.0), state(-1.0))
}

/// Deterministic-by-seed sample of state pairs: Haar pure pairs, full-rank
/// Wishart pairs, and (for qubits) antipodal Bloch pairs.
pub fn sample_state_pairs(n: usize, count: usize, seed: u64) -> Vec<(DensityMatrix, DensityMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let pair = match i % 3 {
            0 => (haar_pure(&mut rng, n), haar_pure(&mut rng, n)),
            1 => (wishart_state(&mut rng, n), wishart_state(&mut rng, n)),
            _ if n == 2 => antipodal_qubit_pair(&mut rng),
            _ => (haar_pure(&mut rng, n), wishart_state(&mut rng, n)),
        };
        out.push(pair);
    }
    out
}

/// Sample of single states, same generator mix.
pub fn sample_states(n: usize, count: usize, seed: u64) -> Vec<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                haar_pure(&mut rng, n)
            } else {
                wishart_state(&mut rng, n)
            }
        })
        .collect()
}

fn sweep_times(channel: &dyn EvolvableChannel, cfg: &OracleConfig) -> Vec<f64> {
    let t_max = channel.t_max();
    let lo = 2.0 * cfg.fd_step;
    let hi = t_max - 2.0 * cfg.fd_step;
    (0..cfg.n_times)
        .map(|i| lo + (hi - lo) * i as f64 / (cfg.n_times - 1).max(1) as f64)
        .collect()
}

/// Flow value with Richardson refinement when the plain estimate sits in
/// the sign-decision band.
fn flow_refined(
    channel: &dyn EvolvableChannel,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    t: f64,
    h: f64,
) -> Result<f64> {
    let coarse = numeric_trace_distance_flow(channel, rho1, rho2, t, h)?;
    if coarse.abs() > 1e-5 {
        return Ok(coarse);
    }
    let fine = numeric_trace_distance_flow(channel, rho1, rho2, t, h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Max numeric information flow over the sampled pairs and times.
pub fn max_flow_sweep(
    channel: &dyn EvolvableChannel,
    cfg: &OracleConfig,
) -> Result<(f64, Option<Witness>)> {
    let pairs = sample_state_pairs(channel.dim(), cfg.n_pairs, cfg.seed);
    let times = sweep_times(channel, cfg);
    let mut max_flow = f64::NEG_INFINITY;
    let mut witness = None;
    for (idx, (r1, r2)) in pairs.iter().enumerate() {
        for &t in &times {
            let f = flow_refined(channel, r1, r2, t, cfg.fd_step)?;
            if f > max_flow {
                max_flow = f;
                witness = Some(Witness {
                    sample_index: idx,
                    t,
                    value: f,
                });
            }
        }
    }
    Ok((max_flow, witness))
}

/// Most negative numeric entropy rate over sampled states and times
/// (returned as a positive "decrease" magnitude, 0 when monotone).
pub fn max_entropy_decrease_sweep(
    channel: &dyn EvolvableChannel,
    cfg: &OracleConfig,
) -> Result<(f64, Option<Witness>)> {
    let states = sample_states(channel.dim(), cfg.n_pairs, cfg.seed.wrapping_add(1));
    let times = sweep_times(channel, cfg);
    let mut min_rate = f64::INFINITY;
    let mut witness = None;
    for (idx, rho) in states.iter().enumerate() {
        for &t in &times {
            let r = numeric_entropy_rate(channel, rho, t, cfg.fd_step)?;
            if r < min_rate {
                min_rate = r;
                witness = Some(Witness {
                    sample_index: idx,
                    t,
                    value: r,
                });
            }
        }
    }
    Ok(((-min_rate).max(0.0), witness))
}

/// Oracle cross-check of the qubit BLP verdict: returns the report with
/// `agreement` comparing the oracle's sign classification (threshold 1e-5)
/// to the analytic verdict.
pub fn verify_blp(spec: &QubitChannelSpec, cfg: &OracleConfig) -> Result<OracleReport> {
    let analytic_holds = crate::qubit::check_blp(spec)?.holds;
    let (max_flow, flow_witness) = max_flow_sweep(spec, cfg)?;
    let oracle_holds = max_flow <= 1e-5;
    let (max_dec, ent_witness) = max_entropy_decrease_sweep(spec, cfg)?;
    Ok(OracleReport {
        config: *cfg,
        max_positive_flow: max_flow,
        flow_witness,
        max_entropy_decrease: max_dec,
        entropy_witness: ent_witness,
        agreement: analytic_holds == oracle_holds,
        counterexample_candidate: false,
        notes: vec![format!(
            "analytic BLP verdict: {analytic_holds}; oracle sign classification: {oracle_holds}"
        )],
    })
}

/// Traceless Hermitian probe built from U_ij + U_ij^dag, embedded in a
/// state pair around the maximally mixed state.
fn weyl_probe_pair(n: usize, idx: WeylIndex) -> Option<(DensityMatrix, DensityMatrix)> {
    let u = weyl_operator(n, idx);
    let mut delta = u.clone();
    delta.add_scaled(&u.adjoint(), Complex64::new(1.0, 0.0));
    let tr = delta.trace();
    if delta.max_abs() < 1e-12 {
        return None;
    }
    // remove any trace component
    let mut d = delta;
    let corr = -tr / n as f64;
    d.add_scaled(&ComplexMatrix::identity(n), corr);
    if d.max_abs() < 1e-12 {
        return None;
    }
    let eigs = hermitian_eigvals(&d).ok()?;
    let spread = eigs
        .iter()
        .map(|e| e.abs())
        .fold(0.0, f64::max)
        .max(1e-12);
    let scale = 0.4 / (n as f64 * spread);
    let mut m1 = ComplexMatrix::identity(n).scale(Complex64::new(1.0 / n as f64, 0.0));
    let mut m2 = m1.clone();
    m1.add_scaled(&d, Complex64::new(scale, 0.0));
    m2.add_scaled(&d, Complex64::new(-scale, 0.0));
    Some((DensityMatrix::new(m1).ok()?, DensityMatrix::new(m2).ok()?))
}

/// Conjecture scanner for N-level channels. When the (Ngamma) conditions
/// hold everywhere it sweeps for positive flow (a counterexample candidate
/// above 1e-5). When they fail it instead confirms, in the necessity
/// direction, that a positive-flow witness exists near the violation.
pub fn conjecture_scan(spec: &WeylChannelSpec, cfg: &OracleConfig) -> Result<OracleReport> {
    if spec.dim < 3 {
        return Err(Error::Dimension("conjecture scan requires N >= 3".into()));
    }
    let conds = crate::weyl::ngamma_conditions(spec)?;
    let min_cond = conds
        .values
        .iter()
        .flat_map(|row| row.iter().cloned())
        .fold(f64::INFINITY, f64::min);
    let mut notes = vec![format!("min (Ngamma) condition value on grid: {min_cond:.6e}")];

    if min_cond >= -1e-6 {
        let (max_flow, witness) = max_flow_sweep(spec, cfg)?;
        let counterexample = max_flow > 1e-5;
        notes.push(format!(
            "(Ngamma) holds; sweep over {} pairs x {} times, max flow {max_flow:.6e}",
            cfg.n_pairs, cfg.n_times
        ));
        return Ok(OracleReport {
            config: *cfg,
            max_positive_flow: max_flow,
            flow_witness: witness,
            max_entropy_decrease: 0.0,
            entropy_witness: None,
            agreement: !counterexample,
            counterexample_candidate: counterexample,
            notes,
        });
    }

    // Necessity direction: d|lambda_ij|/dt > 0 somewhere, so a Weyl-aligned
    // probe pair must show positive flow near the violation time.
    let n = spec.dim;
    let h = spec.grid.spacing();
    let mut best_flow = f64::NEG_INFINITY;
    let mut witness = None;
    'outer: for i in 0..n {
        for j in 0..n {
            if i == 0 && j == 0 {
                continue;
            }
            // locate a time where |lambda_ij| is increasing
            let series: Vec<f64> = spec
                .grid
                .times()
                .map(|t| spec.lambda_at(t).map(|l| l[(i, j)].norm()).unwrap_or(f64::NAN))
                .collect();
            for w in 1..series.len() - 1 {
                let slope = (series[w + 1] - series[w - 1]) / (2.0 * h);
                if slope > 1e-4 {
                    let t = spec.grid.time(w);
                    if let Some((r1, r2)) = weyl_probe_pair(n, WeylIndex { k: i, l: j }) {
                        let f = numeric_trace_distance_flow(spec, &r1, &r2, t, cfg.fd_step)?;
                        if f > best_flow {
                            best_flow = f;
                            witness = Some(Witness {
                                sample_index: i * n + j,
                                t,
                                value: f,
                            });
                        }
                        if f > 1e-5 {
                            notes.push(format!(
                                "necessity confirmed: positive flow {f:.6e} at t = {t:.4} \
                                 with probe U_{i}{j}"
                            ));
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    let found = best_flow > 1e-5;
    if !found {
        notes.push("no positive-flow witness found near the violation".into());
    }
    Ok(OracleReport {
        config: *cfg,
        max_positive_flow: best_flow.max(0.0),
        flow_witness: witness,
        max_entropy_decrease: 0.0,
        entropy_witness: None,
        agreement: found,
        counterexample_candidate: false,
        notes,
    })
}
