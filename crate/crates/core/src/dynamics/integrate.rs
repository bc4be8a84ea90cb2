use nalgebra::DMatrix;

use super::generator::{Generator, Workspace};
use super::MasterEquation;
use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, BasisDescriptor, DensityMatrix, C64, HERMITIAN_TOL, TRACE_TOL};
use crate::observables::Observable;

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Final scaled time γt/2.
    pub t_max: f64,
    /// Spacing of recorded samples.
    pub sample_dt: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Domains over which reduced snapshots are stored at every sample.
    pub keep: Option<Vec<usize>>,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            t_max: 10.0,
            sample_dt: 0.05,
            rtol: 1e-9,
            atol: 1e-11,
            keep: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateOptions {
    /// Frobenius-norm threshold on `dρ/dτ`.
    pub tol: f64,
    pub max_time: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_time: 200.0,
            rtol: 1e-9,
            atol: 1e-11,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub observables: Vec<(String, Vec<f64>)>,
    pub snapshots: Vec<DensityMatrix>,
    pub final_state: DensityMatrix,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub max_trace_drift: f64,
}

impl Trajectory {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.as_slice())
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateResult {
    pub rho: DensityMatrix,
    /// Frobenius norm of `dρ/dτ` at `rho`.
    pub residual: f64,
    pub elapsed_scaled_time: f64,
}

// Dormand–Prince 5(4) tableau. The generator is time independent, so the
// nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MIN_STEP: f64 = 1e-13;
/// `h·ρ(L)` at which the stepper strongly damps every mode.
const STIFF_DAMPING: f64 = 2.0;
/// Residual below which steady-state runs switch to damped steps.
const NEAR_STATIONARY: f64 = 1e-6;

/// Adaptive embedded Runge–Kutta stepper over dense density matrices.
struct Stepper<'a> {
    gen: &'a Generator,
    ws: Workspace,
    k: Vec<DMatrix<C64>>,
    stage: DMatrix<C64>,
    y_new: DMatrix<C64>,
    rtol: f64,
    atol: f64,
    h: f64,
    accepted: usize,
    rejected: usize,
    worst_drift: f64,
}

/// `y += alpha · x`
fn axpy(y: &mut DMatrix<C64>, alpha: f64, x: &DMatrix<C64>) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += xi * alpha;
    }
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm_sqr())).sqrt()
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for c in 0..n {
        for r in 0..c {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm_sqr());
        }
    }
    worst.sqrt()
}

impl<'a> Stepper<'a> {
    fn new(gen: &'a Generator, y0: &DMatrix<C64>, rtol: f64, atol: f64) -> Self {
        let dim = gen.dim();
        let mut k: Vec<DMatrix<C64>> = (0..7).map(|_| DMatrix::zeros(dim, dim)).collect();
        let mut ws = Workspace::new(dim);
        ws.blocked = gen.preserves_blocks(y0);
        gen.apply_with(y0, &mut k[0], &mut ws);
        let scale = max_abs(&k[0]);
        let h = if scale > 0.0 { (0.01 / scale).min(0.01) } else { 0.01 };
        Self {
            gen,
            ws,
            k,
            stage: DMatrix::zeros(dim, dim),
            y_new: DMatrix::zeros(dim, dim),
            rtol,
            atol,
            h,
            accepted: 0,
            rejected: 0,
            worst_drift: 0.0,
        }
    }

    /// Derivative at the current state.
    fn derivative(&self) -> &DMatrix<C64> {
        &self.k[0]
    }

    /// Advances `y` by one accepted step of at most `h_max`; returns the step taken.
    fn step(&mut self, t: f64, y: &mut DMatrix<C64>, h_max: f64) -> Result<f64> {
        loop {
            let clamped = self.h >= h_max;
            let h = self.h.min(h_max);
            for s in 1..7 {
                self.stage.copy_from(y);
                for j in 0..s {
                    let a = A[s][j];
                    if a != 0.0 {
                        axpy(&mut self.stage, h * a, &self.k[j]);
                    }
                }
                self.gen.apply_with(&self.stage, &mut self.k[s], &mut self.ws);
            }
            // Stage 7 is evaluated at the 5th-order solution, which is `stage` after s = 6.
            self.y_new.copy_from(&self.stage);

            let mut err: f64 = 0.0;
            {
                let ys = y.as_slice();
                let yn = self.y_new.as_slice();
                let ks: Vec<&[C64]> = self.k.iter().map(|m| m.as_slice()).collect();
                for idx in 0..ys.len() {
                    let mut e = C64::new(0.0, 0.0);
                    for s in 0..7 {
                        if E[s] != 0.0 {
                            e += ks[s][idx] * E[s];
                        }
                    }
                    let mag = ys[idx].norm_sqr().max(yn[idx].norm_sqr()).sqrt();
                    let scale = self.atol + self.rtol * mag;
                    err = err.max(e.norm_sqr().sqrt() / scale);
                }
                err *= h;
            }
            if !err.is_finite() {
                return Err(Error::IntegrationFailure {
                    time: t,
                    worst_drift: self.worst_drift,
                    reason: "non-finite error estimate".into(),
                });
            }

            if err <= 1.0 {
                let drift = (self.y_new.trace().re - 1.0).abs();
                let herm = hermiticity_defect(&self.y_new);
                if drift <= TRACE_TOL && herm <= HERMITIAN_TOL {
                    std::mem::swap(y, &mut self.y_new);
                    self.k.swap(0, 6);
                    self.worst_drift = self.worst_drift.max(drift);
                    self.accepted += 1;
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if !clamped {
                        self.h = h * factor;
                    } else {
                        self.h = self.h.max(h * factor);
                    }
                    return Ok(h);
                }
                self.worst_drift = self.worst_drift.max(drift);
                self.rejected += 1;
                self.h = h * 0.5;
            } else {
                self.rejected += 1;
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
            if self.h < MIN_STEP {
                return Err(Error::IntegrationFailure {
                    time: t,
                    worst_drift: self.worst_drift,
                    reason: "step size underflow".into(),
                });
            }
        }
    }
}

fn check_basis(eq: &MasterEquation, rho: &DensityMatrix) -> Result<()> {
    if rho.basis() != eq.basis() {
        return Err(Error::invalid(format!(
            "initial state on {} but equation on {}",
            rho.basis(),
            eq.basis()
        )));
    }
    Ok(())
}

fn sample_times(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    if t_max - times[n] > 1e-12 {
        times.push(t_max);
    }
    times
}

struct Recorder<'a> {
    basis: &'a BasisDescriptor,
    observables: &'a [Observable],
    keep: Option<&'a [usize]>,
    series: Vec<Vec<f64>>,
    snapshots: Vec<DensityMatrix>,
}

impl Recorder<'_> {
    fn record(&mut self, y: &mut DMatrix<C64>) -> Result<DensityMatrix> {
        let adj = y.adjoint();
        *y += adj;
        y.scale_mut(0.5);
        let rho = DensityMatrix::from_matrix_unchecked(self.basis.clone(), y.clone())?;
        for (obs, series) in self.observables.iter().zip(self.series.iter_mut()) {
            series.push(obs.evaluate(&rho)?);
        }
        if let Some(keep) = self.keep {
            self.snapshots.push(partial_trace(&rho, keep)?);
        }
        Ok(rho)
    }
}

/// Integrates the master equation from `rho0`, sampling observables every `sample_dt`.
pub fn evolve(
    eq: &MasterEquation,
    rho0: &DensityMatrix,
    opts: &EvolveOptions,
    observables: &[Observable],
) -> Result<Trajectory> {
    check_basis(eq, rho0)?;
    if !(opts.sample_dt > 0.0) || !opts.sample_dt.is_finite() {
        return Err(Error::invalid("sample_dt must be positive"));
    }
    if !(opts.t_max >= 0.0) || !opts.t_max.is_finite() {
        return Err(Error::invalid("t_max must be a finite non-negative time"));
    }
    if let Some(keep) = &opts.keep {
        eq.basis().check_domain_set(keep, "keep")?;
    }
    for obs in observables {
        obs.check(eq.basis())?;
    }
    let times = sample_times(opts.t_max, opts.sample_dt);
    let gen = eq.generator();
    let mut y = rho0.matrix().clone();
    let mut recorder = Recorder {
        basis: eq.basis(),
        observables,
        keep: opts.keep.as_deref(),
        series: vec![Vec::with_capacity(times.len()); observables.len()],
        snapshots: Vec::new(),
    };
    let mut last = recorder.record(&mut y)?;
    let mut stepper = Stepper::new(&gen, &y, opts.rtol, opts.atol);
    let mut t = 0.0;
    for &target in &times[1..] {
        if !gen.is_trivial() {
            while target - t > 1e-12 {
                if stepper.accepted + stepper.rejected >= opts.max_steps {
                    return Err(Error::IntegrationFailure {
                        time: t,
                        worst_drift: stepper.worst_drift,
                        reason: format!("exceeded {} steps", opts.max_steps),
                    });
                }
                let h = stepper.step(t, &mut y, target - t)?;
                t += h;
            }
        }
        t = target;
        last = recorder.record(&mut y)?;
    }
    let names = observables.iter().map(|o| o.name()).collect::<Vec<_>>();
    Ok(Trajectory {
        times,
        observables: names.into_iter().zip(recorder.series).collect(),
        snapshots: recorder.snapshots,
        final_state: last,
        accepted_steps: stepper.accepted,
        rejected_steps: stepper.rejected,
        max_trace_drift: stepper.worst_drift,
    })
}

/// Integrates until `‖dρ/dτ‖_F < tol`.
///
/// The stationary manifold of collective decay is degenerate, so the result
/// depends on `rho0`; no null-space shortcut is attempted.
pub fn steady_state(
    eq: &MasterEquation,
    rho0: &DensityMatrix,
    opts: &SteadyStateOptions,
) -> Result<SteadyStateResult> {
    check_basis(eq, rho0)?;
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("steady-state tolerance must be positive"));
    }
    let gen = eq.generator();
    let mut y = rho0.matrix().clone();
    let mut stepper = Stepper::new(&gen, &y, opts.rtol, opts.atol);
    let mut t = 0.0;
    let mut residual = stepper.derivative().norm();
    // Near stationarity the step size would otherwise settle on the
    // stability boundary, where stiff modes keep the residual from dropping.
    let damped_step = STIFF_DAMPING / gen.rate_bound().max(f64::MIN_POSITIVE);
    while residual >= opts.tol {
        let h_cap = if residual < NEAR_STATIONARY {
            damped_step
        } else {
            f64::INFINITY
        };
        if t >= opts.max_time {
            return Err(Error::ConvergenceFailure {
                max_time: opts.max_time,
                residual,
                tol: opts.tol,
            });
        }
        t += stepper.step(t, &mut y, (opts.max_time - t).min(h_cap))?;
        residual = stepper.derivative().norm();
    }
    let adj = y.adjoint();
    y += adj;
    y.scale_mut(0.5);
    Ok(SteadyStateResult {
        rho: DensityMatrix::from_matrix_unchecked(eq.basis().clone(), y)?,
        residual,
        elapsed_scaled_time: t,
    })
}
