//! Time-domain evolution of `(E, B)` in static, linear, non-absorptive media.
//!
//! The curl equations `∂B/∂t = −∇×E`, `∂E/∂t = ε⁻¹∇×(B/μ)` are stepped with
//! spectral derivatives and an explicit scheme. Uniform media are stepped
//! entirely in Fourier space. Vacuum states can also be advanced through the
//! helicity representation, where every mode acquires an exact phase.

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fields::{
    poynting_current, rs_compose, ComplexVectorField, MediumMap, RSState, RealFieldPair,
    RealVectorField,
};
use crate::spectral::Spectral;
use crate::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Explicit one-step scheme used for the curl equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scheme {
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// Truncated Taylor series of the propagator, `Σ_{j≤p} (dt L)^j / j!`.
    /// For a linear system this is the order-`p` Runge–Kutta method.
    Taylor { order: usize },
}

impl Scheme {
    pub fn order(&self) -> usize {
        match self {
            Scheme::Rk4 => 4,
            Scheme::Taylor { order } => *order,
        }
    }

    /// Amplification factor `R(z)` for `u' = λu`, `z = λ dt`.
    pub fn amplification(&self, z: C64) -> C64 {
        let p = self.order();
        let mut term = C64::new(1.0, 0.0);
        let mut acc = term;
        for j in 1..=p {
            term = term * z / j as f64;
            acc += term;
        }
        acc
    }

    /// Largest `y` with `|R(iy)| ≤ 1` on `[0, y]`.
    pub fn imaginary_stability_limit(&self) -> f64 {
        let h = 1e-3;
        let mut y = 0.0;
        while y < 50.0 {
            let next = y + h;
            if self.amplification(C64::new(0.0, next)).norm_sqr() > 1.0 + 1e-12 {
                break;
            }
            y = next;
        }
        y
    }

    fn validate(&self) -> Result<()> {
        match self {
            Scheme::Rk4 => Ok(()),
            Scheme::Taylor { order } if (2..=40).contains(order) => Ok(()),
            Scheme::Taylor { order } => Err(Error::InvalidParameter(format!(
                "Taylor order {order} outside 2..=40"
            ))),
        }
    }
}

/// Stepping algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Integrator {
    /// Curl-form Maxwell stepping on `(E, B)`.
    Maxwell { scheme: Scheme },
    /// Exact phase evolution of the helicity components (vacuum only).
    VacuumHelicity,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::Maxwell {
            scheme: Scheme::Rk4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: usize,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "yes")]
    pub cfl_guard: bool,
    /// Diagnostics are recorded every this many steps (and at the last step).
    #[serde(default = "one")]
    pub snapshot_every: usize,
    /// Keep full field snapshots in the trajectory, not only diagnostics.
    #[serde(default)]
    pub keep_fields: bool,
}

fn yes() -> bool {
    true
}

fn one() -> usize {
    1
}

impl EvolutionConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            integrator: Integrator::default(),
            cfl_guard: true,
            snapshot_every: 1,
            keep_fields: false,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_snapshots(mut self, every: usize, keep_fields: bool) -> Self {
        self.snapshot_every = every;
        self.keep_fields = keep_fields;
        self
    }

    pub fn without_guard(mut self) -> Self {
        self.cfl_guard = false;
        self
    }

    /// Time step at `fraction` of the CFL bound, rounded down so that
    /// `duration` is covered by a whole number of steps.
    pub fn fitted(sp: &Spectral, medium: &MediumMap, duration: f64, fraction: f64) -> Self {
        let dt_max = fraction * cfl_bound(sp, medium);
        let n = (duration / dt_max).ceil().max(1.0) as usize;
        Self::new(duration / n as f64, n)
    }

    pub fn validate(&self, sp: &Spectral, medium: &MediumMap) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidParameter(
                "snapshot_every must be at least 1".into(),
            ));
        }
        match self.integrator {
            Integrator::Maxwell { scheme } => {
                scheme.validate()?;
                if self.cfl_guard {
                    let bound = cfl_bound(sp, medium);
                    if self.dt > bound {
                        return Err(Error::CflViolation { dt: self.dt, bound });
                    }
                    let stable = scheme.imaginary_stability_limit() / max_frequency(sp, medium);
                    if self.dt > stable {
                        return Err(Error::CflViolation {
                            dt: self.dt,
                            bound: stable,
                        });
                    }
                }
            }
            Integrator::VacuumHelicity => {
                if !medium.is_vacuum() {
                    return Err(Error::InvalidMedium(
                        "helicity stepping requires vacuum".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// `min(Δx, Δy, Δz) · min(n) / (√3 c)`.
pub fn cfl_bound(sp: &Spectral, medium: &MediumMap) -> f64 {
    sp.grid.min_spacing() * medium.min_index() / 3f64.sqrt()
}

/// Upper bound on the angular frequency resolved by the spectral curl.
fn max_frequency(sp: &Spectral, medium: &MediumMap) -> f64 {
    let kmax: f64 = (0..3)
        .map(|a| {
            sp.grid.k_axes()[a]
                .iter()
                .fold(0.0f64, |m, k| m.max(k.abs()))
                .powi(2)
        })
        .sum::<f64>()
        .sqrt();
    (kmax / medium.min_index()).max(f64::MIN_POSITIVE)
}

trait Linear: Clone {
    fn axpy(&mut self, a: f64, x: &Self);
    fn scale(&mut self, a: f64);
}

impl Linear for [C64; 6] {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            *s += v * a;
        }
    }
    fn scale(&mut self, a: f64) {
        for s in self.iter_mut() {
            *s *= a;
        }
    }
}

#[derive(Clone)]
struct RealState {
    e: RealVectorField,
    b: RealVectorField,
}

impl Linear for RealState {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (dst, src) in self
            .e
            .comps
            .iter_mut()
            .chain(self.b.comps.iter_mut())
            .zip(x.e.comps.iter().chain(&x.b.comps))
        {
            dst.par_iter_mut()
                .zip(src.par_iter())
                .for_each(|(d, s)| *d += a * s);
        }
    }
    fn scale(&mut self, a: f64) {
        for dst in self.e.comps.iter_mut().chain(self.b.comps.iter_mut()) {
            dst.par_iter_mut().for_each(|d| *d *= a);
        }
    }
}

fn advance<S: Linear>(u: &S, dt: f64, scheme: Scheme, rhs: impl Fn(&S) -> S) -> S {
    match scheme {
        Scheme::Rk4 => {
            let k1 = rhs(u);
            let mut t = u.clone();
            t.axpy(0.5 * dt, &k1);
            let k2 = rhs(&t);
            let mut t = u.clone();
            t.axpy(0.5 * dt, &k2);
            let k3 = rhs(&t);
            let mut t = u.clone();
            t.axpy(dt, &k3);
            let k4 = rhs(&t);
            let mut out = u.clone();
            out.axpy(dt / 6.0, &k1);
            out.axpy(dt / 3.0, &k2);
            out.axpy(dt / 3.0, &k3);
            out.axpy(dt / 6.0, &k4);
            out
        }
        Scheme::Taylor { order } => {
            let mut term = u.clone();
            let mut out = u.clone();
            for j in 1..=order {
                term = rhs(&term);
                term.scale(dt / j as f64);
                out.axpy(1.0, &term);
            }
            out
        }
    }
}

fn cross_ik(k: [f64; 3], v: [C64; 3]) -> [C64; 3] {
    [
        I * (k[1] * v[2] - k[2] * v[1]),
        I * (k[2] * v[0] - k[0] * v[2]),
        I * (k[0] * v[1] - k[1] * v[0]),
    ]
}

fn uniform_rhs(k: [f64; 3], inv_eps: f64, inv_mu: f64) -> impl Fn(&[C64; 6]) -> [C64; 6] {
    move |u| {
        let ce = cross_ik(k, [u[0], u[1], u[2]]);
        let cb = cross_ik(k, [u[3], u[4], u[5]]);
        let s = inv_eps * inv_mu;
        [cb[0] * s, cb[1] * s, cb[2] * s, -ce[0], -ce[1], -ce[2]]
    }
}

fn real_rhs<'a>(sp: &'a Spectral, medium: &'a MediumMap) -> impl Fn(&RealState) -> RealState + 'a {
    move |u| {
        let mut h = u.b.clone();
        for c in h.comps.iter_mut() {
            c.par_iter_mut()
                .zip(medium.chi_m.par_iter())
                .for_each(|(v, x)| *v /= 1.0 + x);
        }
        let mut e_dot = sp.curl(&h);
        for c in e_dot.comps.iter_mut() {
            c.par_iter_mut()
                .zip(medium.chi_e.par_iter())
                .for_each(|(v, x)| *v /= 1.0 + x);
        }
        let b_dot = sp.curl(&u.e).scaled(-1.0);
        RealState { e: e_dot, b: b_dot }
    }
}

/// `∂E/∂t` from the curl equation, `ε⁻¹∇×(B/μ)`.
pub fn e_time_derivative(
    sp: &Spectral,
    fields: &RealFieldPair,
    medium: &MediumMap,
) -> RealVectorField {
    let u = RealState {
        e: fields.e.clone(),
        b: fields.b.clone(),
    };
    real_rhs(sp, medium)(&u).e
}

/// Advances `(E, B)` by `dt` with classical RK4 and the CFL guard enabled.
pub fn step(
    sp: &Spectral,
    fields: &RealFieldPair,
    medium: &MediumMap,
    dt: f64,
) -> Result<RealFieldPair> {
    step_with(sp, fields, medium, dt, Scheme::Rk4, true)
}

pub fn step_with(
    sp: &Spectral,
    fields: &RealFieldPair,
    medium: &MediumMap,
    dt: f64,
    scheme: Scheme,
    cfl_guard: bool,
) -> Result<RealFieldPair> {
    sp.grid.ensure_same(&fields.grid(), "step fields")?;
    sp.grid.ensure_same(&medium.grid, "step medium")?;
    let mut cfg = EvolutionConfig::new(dt, 1).with_integrator(Integrator::Maxwell { scheme });
    cfg.cfl_guard = cfl_guard;
    cfg.validate(sp, medium)?;
    let u = RealState {
        e: fields.e.clone(),
        b: fields.b.clone(),
    };
    let out = advance(&u, dt, scheme, real_rhs(sp, medium));
    check_real(&out, 1)?;
    Ok(RealFieldPair {
        e: out.e,
        b: out.b,
        t: fields.t + dt,
    })
}

fn check_real(u: &RealState, step: usize) -> Result<()> {
    let ok =
        u.e.comps
            .iter()
            .chain(&u.b.comps)
            .all(|c| c.par_iter().all(|v| v.is_finite()));
    if ok {
        Ok(())
    } else {
        Err(Error::NanDetected { step })
    }
}

/// Exact vacuum evolution: every Fourier mode of both helicity components
/// is multiplied by `e^{−iω dt}`, `ω = c|k|`.
pub fn step_rs_vacuum(sp: &Spectral, state: &RSState, dt: f64) -> Result<RSState> {
    sp.grid.ensure_same(&state.grid(), "RS state")?;
    if !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dt must be finite, got {dt}"
        )));
    }
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let phases = vacuum_phases(sp, dt);
    let evolve = |f: &ComplexVectorField| {
        let mut fk = sp.forward_vec(f);
        for c in fk.comps.iter_mut() {
            c.par_iter_mut()
                .zip(phases.par_iter())
                .for_each(|(v, p)| *v *= p);
        }
        sp.inverse_vec(&fk)
    };
    Ok(RSState {
        psi_plus: evolve(&state.psi_plus),
        psi_minus: evolve(&state.psi_minus),
        t: state.t + dt,
    })
}

fn vacuum_phases(sp: &Spectral, dt: f64) -> Vec<C64> {
    (0..sp.grid.size())
        .into_par_iter()
        .map(|idx| {
            let k = sp.kvec(idx);
            let w = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            C64::from_polar(1.0, -w * dt)
        })
        .collect()
}

/// Spectral RMS of `∇·B` and `∇·D` with `D = εE`.
pub fn divergence_residual(
    sp: &Spectral,
    fields: &RealFieldPair,
    medium: &MediumMap,
) -> Result<(f64, f64)> {
    sp.grid.ensure_same(&fields.grid(), "divergence fields")?;
    sp.grid.ensure_same(&medium.grid, "divergence medium")?;
    let mut d = fields.e.clone();
    for c in d.comps.iter_mut() {
        c.par_iter_mut()
            .zip(medium.chi_e.par_iter())
            .for_each(|(v, x)| *v *= 1.0 + x);
    }
    let rms = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
    Ok((rms(&sp.div(&fields.b).values), rms(&sp.div(&d).values)))
}

fn transverse(sp: &Spectral, f: &RealVectorField) -> RealVectorField {
    let mut fk = sp.forward_real_vec(f);
    let n = sp.grid.size();
    for idx in 0..n {
        let k = sp.kvec(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            // the uniform component has no transverse direction
            for a in 0..3 {
                fk.comps[a][idx] = C64::new(0.0, 0.0);
            }
            continue;
        }
        let v = fk.at(idx);
        let kd = (k[0] * v[0] + k[1] * v[1] + k[2] * v[2]) / k2;
        for a in 0..3 {
            fk.comps[a][idx] = v[a] - k[a] * kd;
        }
    }
    sp.inverse_real_vec(fk)
}

/// Diagnostics recorded at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameDiagnostics {
    /// `∫|Ψ|² d³r` with the vacuum wave function.
    pub psi_energy: f64,
    /// `∫(ε|E|²/2 + |B|²/2μ) d³r`, conserved by the evolution.
    pub medium_energy: f64,
    /// `∫ (Ψ+Ψ*)·J/√(2ε₀) d³r` with the bound current `J = ∂P/∂t + ∇×M`.
    pub work: f64,
    /// `∫ ∇·S d³r`.
    pub flux: f64,
    pub div_b_rms: f64,
    pub div_d_rms: f64,
    pub field_rms: f64,
}

pub fn diagnostics(
    sp: &Spectral,
    fields: &RealFieldPair,
    medium: &MediumMap,
) -> Result<FrameDiagnostics> {
    let g = sp.grid;
    let dv = g.cell_volume();
    let e_t = transverse(sp, &fields.e);
    let psi_energy = 0.5 * (e_t.integral_sq() + fields.b.integral_sq());

    let work = if medium.is_vacuum() {
        0.0
    } else {
        let e_dot = e_time_derivative(sp, fields, medium);
        let mut m = fields.b.clone();
        for c in m.comps.iter_mut() {
            c.par_iter_mut()
                .zip(medium.chi_m.par_iter())
                .for_each(|(v, x)| *v *= x / (1.0 + x));
        }
        let curl_m = sp.curl(&m);
        let mut acc = 0.0;
        for a in 0..3 {
            let terms: Vec<f64> = (0..g.size())
                .into_par_iter()
                .map(|i| {
                    e_t.comps[a][i] * (medium.chi_e[i] * e_dot.comps[a][i] + curl_m.comps[a][i])
                })
                .collect();
            acc += terms.iter().sum::<f64>();
        }
        acc * dv
    };

    let state = crate::fields::rs_compose_quiet(sp, fields, &MediumMap::vacuum(g))?;
    let s = poynting_current(sp, &state)?;
    let flux = sp.div(&s).values.iter().sum::<f64>() * dv;
    let (div_b_rms, div_d_rms) = divergence_residual(sp, fields, medium)?;
    Ok(FrameDiagnostics {
        psi_energy,
        medium_energy: fields.medium_energy(medium),
        work,
        flux,
        div_b_rms,
        div_d_rms,
        field_rms: fields.rms(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub step: usize,
    pub time: f64,
    pub diagnostics: FrameDiagnostics,
    pub fields: Option<RealFieldPair>,
}

/// Called once per recorded frame, in step order.
pub trait Observer {
    fn observe(&mut self, frame: &Frame, fields: &RealFieldPair);
}

impl<F: FnMut(&Frame, &RealFieldPair)> Observer for F {
    fn observe(&mut self, frame: &Frame, fields: &RealFieldPair) {
        self(frame, fields)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub medium: MediumMap,
    pub dt: f64,
    pub frames: Vec<Frame>,
    pub final_fields: RealFieldPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    /// Present when at least three uniformly spaced frames were recorded.
    pub continuity: Option<ContinuityReport>,
}

enum Engine<'a> {
    Real {
        sp: &'a Spectral,
        medium: &'a MediumMap,
        scheme: Scheme,
        state: RealState,
    },
    Uniform {
        sp: &'a Spectral,
        scheme: Scheme,
        inv_eps: f64,
        inv_mu: f64,
        state: Vec<[C64; 6]>,
    },
    Helicity {
        sp: &'a Spectral,
        plus: ComplexVectorField,
        minus: ComplexVectorField,
        e_long: RealVectorField,
        phases: Vec<C64>,
    },
}

impl<'a> Engine<'a> {
    fn new(
        sp: &'a Spectral,
        initial: &RealFieldPair,
        medium: &'a MediumMap,
        cfg: &EvolutionConfig,
    ) -> Result<Self> {
        Ok(match cfg.integrator {
            Integrator::Maxwell { scheme } => match medium.as_uniform() {
                Some((chi_e, chi_m)) => {
                    let ek = sp.forward_real_vec(&initial.e);
                    let bk = sp.forward_real_vec(&initial.b);
                    let state = (0..sp.grid.size())
                        .into_par_iter()
                        .map(|i| {
                            let (e, b) = (ek.at(i), bk.at(i));
                            [e[0], e[1], e[2], b[0], b[1], b[2]]
                        })
                        .collect();
                    Engine::Uniform {
                        sp,
                        scheme,
                        inv_eps: 1.0 / (1.0 + chi_e),
                        inv_mu: 1.0 / (1.0 + chi_m),
                        state,
                    }
                }
                None => Engine::Real {
                    sp,
                    medium,
                    scheme,
                    state: RealState {
                        e: initial.e.clone(),
                        b: initial.b.clone(),
                    },
                },
            },
            Integrator::VacuumHelicity => {
                let rs = rs_compose(sp, initial, medium)?;
                let e_long = initial.e.sub(&transverse(sp, &initial.e));
                Engine::Helicity {
                    sp,
                    plus: sp.forward_vec(&rs.psi_plus),
                    minus: sp.forward_vec(&rs.psi_minus),
                    e_long,
                    phases: vacuum_phases(sp, cfg.dt),
                }
            }
        })
    }

    fn step(&mut self, dt: f64, step: usize) -> Result<()> {
        let finite = match self {
            Engine::Real {
                sp,
                medium,
                scheme,
                state,
            } => {
                *state = advance(state, dt, *scheme, real_rhs(sp, medium));
                return check_real(state, step);
            }
            Engine::Uniform {
                sp,
                scheme,
                inv_eps,
                inv_mu,
                state,
            } => {
                let (scheme, ie, im) = (*scheme, *inv_eps, *inv_mu);
                state.par_iter_mut().enumerate().all(|(i, u)| {
                    *u = advance(u, dt, scheme, uniform_rhs(sp.kvec(i), ie, im));
                    u.iter().all(|v| v.re.is_finite() && v.im.is_finite())
                })
            }
            Engine::Helicity {
                plus,
                minus,
                phases,
                ..
            } => {
                for c in plus.comps.iter_mut().chain(minus.comps.iter_mut()) {
                    c.par_iter_mut()
                        .zip(phases.par_iter())
                        .for_each(|(v, p)| *v *= p);
                }
                true
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::NanDetected { step })
        }
    }

    fn fields(&self, t: f64) -> Result<RealFieldPair> {
        match self {
            Engine::Real { state, .. } => Ok(RealFieldPair {
                e: state.e.clone(),
                b: state.b.clone(),
                t,
            }),
            Engine::Uniform { sp, state, .. } => {
                let g = sp.grid;
                let mut e = ComplexVectorField::zeros(g);
                let mut b = ComplexVectorField::zeros(g);
                for (i, u) in state.iter().enumerate() {
                    for a in 0..3 {
                        e.comps[a][i] = u[a];
                        b.comps[a][i] = u[a + 3];
                    }
                }
                Ok(RealFieldPair {
                    e: sp.inverse_real_vec(e),
                    b: sp.inverse_real_vec(b),
                    t,
                })
            }
            Engine::Helicity {
                sp,
                plus,
                minus,
                e_long,
                ..
            } => {
                let rs = RSState {
                    psi_plus: sp.inverse_vec(plus),
                    psi_minus: sp.inverse_vec(minus),
                    t,
                };
                let f = crate::fields::rs_decompose(sp, &rs, &MediumMap::vacuum(sp.grid))?;
                Ok(RealFieldPair {
                    e: f.e.add(e_long),
                    b: f.b,
                    t,
                })
            }
        }
    }
}

/// Evolves `initial` for `config.n_steps` steps, recording diagnostics at
/// steps `0, s, 2s, …` and at the final step.
pub fn run(
    sp: &Spectral,
    initial: &RealFieldPair,
    medium: &MediumMap,
    config: &EvolutionConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<RunOutput> {
    sp.grid.ensure_same(&initial.grid(), "initial fields")?;
    sp.grid.ensure_same(&medium.grid, "medium")?;
    config.validate(sp, medium)?;
    initial.e.check_finite("initial E")?;
    initial.b.check_finite("initial B")?;

    let mut frames = Vec::new();
    let mut record = |step: usize, fields: &RealFieldPair, frames: &mut Vec<Frame>| -> Result<()> {
        let frame = Frame {
            step,
            time: fields.t,
            diagnostics: diagnostics(sp, fields, medium)?,
            fields: config.keep_fields.then(|| fields.clone()),
        };
        for obs in observers.iter_mut() {
            obs.observe(&frame, fields);
        }
        frames.push(frame);
        Ok(())
    };
    record(0, initial, &mut frames)?;
    if config.n_steps == 0 {
        return finish(medium, config, frames, initial.clone());
    }

    let mut engine = Engine::new(sp, initial, medium, config)?;
    let mut last = None;
    for s in 1..=config.n_steps {
        engine.step(config.dt, s)?;
        if s % config.snapshot_every == 0 || s == config.n_steps {
            let f = engine.fields(initial.t + s as f64 * config.dt)?;
            record(s, &f, &mut frames)?;
            if s == config.n_steps {
                last = Some(f);
            }
        }
    }
    finish(medium, config, frames, last.expect("final frame recorded"))
}

fn finish(
    medium: &MediumMap,
    config: &EvolutionConfig,
    frames: Vec<Frame>,
    final_fields: RealFieldPair,
) -> Result<RunOutput> {
    let trajectory = Trajectory {
        medium: medium.clone(),
        dt: config.dt,
        frames,
        final_fields,
    };
    let uniform =
        trajectory.frames.len() >= 3 && config.n_steps.is_multiple_of(config.snapshot_every);
    let continuity = if uniform {
        Some(continuity_check(&trajectory)?)
    } else {
        None
    };
    Ok(RunOutput {
        trajectory,
        continuity,
    })
}

/// Deliberate faults for mutation testing of the continuity audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    #[default]
    None,
    FlipWorkSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub step: usize,
    pub time: f64,
    pub de_dt: f64,
    pub flux: f64,
    pub work: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    /// Time between frames.
    pub dt: f64,
    /// Largest `∫|Ψ|²` over the trajectory.
    pub energy_scale: f64,
    pub rows: Vec<ContinuityRow>,
    /// Change of `∫|Ψ|²` between the first and last frames.
    pub energy_change: f64,
    /// Time integral of the work term over the trajectory (composite Simpson).
    pub integrated_work: f64,
}

impl ContinuityReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.residual.abs()))
    }

    /// `max |residual| · dt / energy_scale`.
    pub fn max_relative_residual(&self) -> f64 {
        if self.energy_scale == 0.0 {
            return self.max_residual();
        }
        self.max_residual() * self.dt / self.energy_scale
    }

    /// `|ΔW + ∫work dt| / energy_scale`; the balance of the energy audit.
    pub fn work_balance_error(&self) -> f64 {
        let d = (self.energy_change + self.integrated_work).abs();
        if self.energy_scale == 0.0 {
            d
        } else {
            d / self.energy_scale
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,time,dE_dt,flux,work,residual")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:e},{:e},{:e},{:e},{:e}",
                r.step, r.time, r.de_dt, r.flux, r.work, r.residual
            )?;
        }
        Ok(())
    }
}

pub fn continuity_check(trajectory: &Trajectory) -> Result<ContinuityReport> {
    continuity_check_with(trajectory, Fault::None)
}

/// Audits `d/dt∫|Ψ|² + ∮S·dA + ∫E·J = 0` at every interior frame using a
/// centered difference for the time derivative.
pub fn continuity_check_with(trajectory: &Trajectory, fault: Fault) -> Result<ContinuityReport> {
    let frames = &trajectory.frames;
    if frames.len() < 3 {
        return Err(Error::InsufficientSamples(format!(
            "continuity needs 3 frames, got {}",
            frames.len()
        )));
    }
    let h = frames[1].time - frames[0].time;
    for w in frames.windows(2) {
        let d = w[1].time - w[0].time;
        if (d - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(Error::InvalidParameter(
                "continuity requires uniformly spaced frames".into(),
            ));
        }
    }
    let sign = if fault == Fault::FlipWorkSign {
        -1.0
    } else {
        1.0
    };
    let rows = frames
        .windows(3)
        .map(|w| {
            let de_dt = (w[2].diagnostics.psi_energy - w[0].diagnostics.psi_energy) / (2.0 * h);
            let flux = w[1].diagnostics.flux;
            let work = sign * w[1].diagnostics.work;
            ContinuityRow {
                step: w[1].step,
                time: w[1].time,
                de_dt,
                flux,
                work,
                residual: de_dt + flux + work,
            }
        })
        .collect();
    let energy_scale = frames
        .iter()
        .fold(0.0f64, |m, f| m.max(f.diagnostics.psi_energy));
    let works: Vec<f64> = frames.iter().map(|f| sign * f.diagnostics.work).collect();
    let integrated_work = simpson(&works, h);
    let energy_change =
        frames.last().unwrap().diagnostics.psi_energy - frames[0].diagnostics.psi_energy;
    Ok(ContinuityReport {
        dt: h,
        energy_scale,
        rows,
        energy_change,
        integrated_work,
    })
}

/// Composite Simpson rule on uniformly spaced samples, closing an odd
/// interval count with the 3/8 rule. Needs at least three samples.
fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    let (even, tail) = if n.is_multiple_of(2) {
        (n, 0.0)
    } else {
        let m = n - 3;
        (
            m,
            3.0 * h / 8.0 * (y[m] + 3.0 * y[m + 1] + 3.0 * y[m + 2] + y[m + 3]),
        )
    };
    let mut acc = 0.0;
    for i in (0..even).step_by(2) {
        acc += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
    }
    acc + tail
}
