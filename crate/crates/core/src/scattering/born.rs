//! First-order scattering: source term of the medium wave equation
//! `∇²E − (n²/c²)∂²E = −f` and its retarded integral.
//!
//! With `J′` the current of the perturbation (plus any pump-driven current),
//! `f = −μ ∂J′/∂t − ∇(∇·E)`, and the scattered field is
//! `E_sc(r,t) = ∫d³r′ f(r′, t − n|r−r′|/c) / (4π|r−r′|)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::green::GreenSpec;
use crate::fields::{ComplexVectorField, Grid3, RealVectorField};
use crate::spectral::Spectral;
use crate::{Error, Result, C64};

/// Relative level below which source points are skipped in the retarded sum.
const SOURCE_FLOOR: f64 = 1e-13;

/// Time dependence of one vector field on the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum History {
    /// `Re[amplitude · e^{−iωt}]`.
    Harmonic {
        omega: f64,
        amplitude: ComplexVectorField,
    },
    /// Uniform samples at `t0 + i·dt`.
    Sampled {
        t0: f64,
        dt: f64,
        frames: Vec<RealVectorField>,
    },
}

impl History {
    pub fn grid(&self) -> Result<Grid3> {
        match self {
            History::Harmonic { amplitude, .. } => Ok(amplitude.grid),
            History::Sampled { frames, .. } => frames
                .first()
                .map(|f| f.grid)
                .ok_or_else(|| Error::InsufficientSamples("empty history".into())),
        }
    }

    /// Samples `f(t0 + i dt)` of a closure over positions.
    pub fn sample(
        grid: Grid3,
        t0: f64,
        dt: f64,
        count: usize,
        mut f: impl FnMut([f64; 3], f64) -> [f64; 3],
    ) -> Self {
        let frames = (0..count)
            .map(|i| {
                let t = t0 + i as f64 * dt;
                RealVectorField::from_fn(grid, |r| f(r, t))
            })
            .collect();
        History::Sampled { t0, dt, frames }
    }

    fn scaled(&self, s: f64) -> Self {
        match self {
            History::Harmonic { omega, amplitude } => History::Harmonic {
                omega: *omega,
                amplitude: amplitude.scaled(s),
            },
            History::Sampled { t0, dt, frames } => History::Sampled {
                t0: *t0,
                dt: *dt,
                frames: frames.iter().map(|f| f.scaled(s)).collect(),
            },
        }
    }
}

/// Incident fields. `b` may be omitted when the perturbation is purely
/// electric.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHistory {
    pub e: History,
    pub b: Option<History>,
}

impl FieldHistory {
    pub fn electric(e: History) -> Self {
        Self { e, b: None }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            e: self.e.scaled(s),
            b: self.b.as_ref().map(|b| b.scaled(s)),
        }
    }
}

/// Susceptibility differences of the scatterer relative to a uniform
/// background `(χe, χm)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub grid: Grid3,
    pub background: (f64, f64),
    pub d_chi_e: Vec<f64>,
    pub d_chi_m: Vec<f64>,
}

impl Perturbation {
    pub fn new(
        grid: Grid3,
        background: (f64, f64),
        d_chi_e: Vec<f64>,
        d_chi_m: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.size();
        if d_chi_e.len() != n || d_chi_m.len() != n {
            return Err(Error::GridMismatch(format!(
                "perturbation arrays have {} / {} values, grid has {n}",
                d_chi_e.len(),
                d_chi_m.len()
            )));
        }
        let (ce, cm) = background;
        if !(ce.is_finite() && cm.is_finite() && ce > -1.0 && cm > -1.0) {
            return Err(Error::InvalidMedium(format!(
                "background susceptibilities ({ce}, {cm})"
            )));
        }
        for (idx, (&de, &dm)) in d_chi_e.iter().zip(&d_chi_m).enumerate() {
            if !(de.is_finite() && dm.is_finite()) {
                return Err(Error::NonFinite {
                    what: "perturbation",
                    index: idx,
                });
            }
            if ce + de <= -1.0 || cm + dm <= -1.0 {
                return Err(Error::InvalidMedium(format!(
                    "total susceptibility ≤ −1 at index {idx}"
                )));
            }
        }
        let p = Self {
            grid,
            background,
            d_chi_e,
            d_chi_m,
        };
        p.check_support()?;
        Ok(p)
    }

    pub fn from_fn(
        grid: Grid3,
        background: (f64, f64),
        mut f: impl FnMut([f64; 3]) -> (f64, f64),
    ) -> Result<Self> {
        let (de, dm): (Vec<f64>, Vec<f64>) = (0..grid.size()).map(|i| f(grid.position(i))).unzip();
        Self::new(grid, background, de, dm)
    }

    pub fn epsilon(&self) -> f64 {
        1.0 + self.background.0
    }

    pub fn mu(&self) -> f64 {
        1.0 + self.background.1
    }

    pub fn index_of_refraction(&self) -> f64 {
        (self.epsilon() * self.mu()).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            background: self.background,
            d_chi_e: self.d_chi_e.iter().map(|v| v * s).collect(),
            d_chi_m: self.d_chi_m.iter().map(|v| v * s).collect(),
        }
    }

    pub fn is_magnetic(&self) -> bool {
        self.d_chi_m.iter().any(|&v| v != 0.0)
    }

    /// Coefficient of `B` in the magnetization difference.
    fn magnetization_coefficient(&self, idx: usize) -> f64 {
        let cb = self.background.1;
        let ct = cb + self.d_chi_m[idx];
        ct / (1.0 + ct) - cb / (1.0 + cb)
    }

    /// The boundary planes of every non-degenerate axis must be unperturbed.
    fn check_support(&self) -> Result<()> {
        let peak = self
            .d_chi_e
            .iter()
            .chain(&self.d_chi_m)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let g = self.grid;
        for idx in 0..g.size() {
            let m = g.unravel(idx);
            let on_edge = (0..3).any(|a| g.n[a] > 1 && (m[a] == 0 || m[a] == g.n[a] - 1));
            if on_edge && self.d_chi_e[idx].abs().max(self.d_chi_m[idx].abs()) > 1e-12 * peak {
                return Err(Error::InvalidMedium(format!(
                    "perturbation support reaches the domain boundary at {m:?}"
                )));
            }
        }
        Ok(())
    }
}

/// How the `−∇(∇·E)` part of the source is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceModel {
    /// `∇·E = −∇·(Δχe E)/ε` from Gauss's law with the incident field.
    #[default]
    GaussLaw,
    /// Spectral divergence of the supplied field itself.
    FromField,
    /// Dropped: the scalar, paraxial approximation.
    Scalar,
}

/// Source `f` on the grid, harmonic or at uniform time samples.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceTerm {
    Harmonic {
        omega: f64,
        f: ComplexVectorField,
    },
    Sampled {
        t0: f64,
        dt: f64,
        frames: Vec<RealVectorField>,
    },
}

impl SourceTerm {
    pub fn grid(&self) -> Grid3 {
        match self {
            SourceTerm::Harmonic { f, .. } => f.grid,
            SourceTerm::Sampled { frames, .. } => frames[0].grid,
        }
    }
}

fn check_same_kind(fields: &FieldHistory, pump: Option<&History>) -> Result<()> {
    let mut all = vec![&fields.e];
    all.extend(fields.b.as_ref());
    all.extend(pump);
    let g = fields.e.grid()?;
    for h in &all {
        g.ensure_same(&h.grid()?, "field history")?;
    }
    match &fields.e {
        History::Harmonic { omega, .. } => {
            for h in &all {
                match h {
                    History::Harmonic { omega: w, .. } if w == omega => {}
                    _ => {
                        return Err(Error::InvalidParameter(
                            "histories must share one harmonic frequency".into(),
                        ))
                    }
                }
            }
        }
        History::Sampled { t0, dt, frames } => {
            if frames.len() < 3 {
                return Err(Error::InsufficientSamples(format!(
                    "second time derivative needs at least 3 samples, got {}",
                    frames.len()
                )));
            }
            if !(*dt > 0.0) {
                return Err(Error::InvalidParameter(format!("sample spacing {dt}")));
            }
            for h in &all {
                match h {
                    History::Sampled {
                        t0: s,
                        dt: d,
                        frames: f,
                    } if s == t0 && d == dt && f.len() == frames.len() => {}
                    _ => {
                        return Err(Error::InvalidParameter(
                            "histories must share one sampling".into(),
                        ))
                    }
                }
            }
        }
    }
    Ok(())
}

fn map_field(f: &ComplexVectorField, mut g: impl FnMut(usize, C64) -> C64) -> ComplexVectorField {
    let mut out = f.clone();
    for c in out.comps.iter_mut() {
        for (idx, v) in c.iter_mut().enumerate() {
            *v = g(idx, *v);
        }
    }
    out
}

fn axpy(acc: &mut ComplexVectorField, s: C64, x: &ComplexVectorField) {
    for a in 0..3 {
        for (o, v) in acc.comps[a].iter_mut().zip(&x.comps[a]) {
            *o += s * v;
        }
    }
}

fn require_b<'a>(fields: &'a FieldHistory, p: &Perturbation) -> Result<Option<&'a History>> {
    if p.is_magnetic() {
        fields.b.as_ref().map(Some).ok_or_else(|| {
            Error::InvalidParameter("magnetic perturbation needs the incident B history".into())
        })
    } else {
        Ok(None)
    }
}

/// Per-frame pieces shared by the electric and magnetic sources: polarization
/// difference `Δχe E`, magnetization curl `∇×(m B)`, pump current, and the
/// divergence term `−∇(∇·E)`.
struct Pieces {
    pol: ComplexVectorField,
    mag_curl: Option<ComplexVectorField>,
    pump: Option<ComplexVectorField>,
    div_term: Option<ComplexVectorField>,
}

fn pieces(
    sp: &Spectral,
    e: &ComplexVectorField,
    b: Option<&ComplexVectorField>,
    pump: Option<&ComplexVectorField>,
    p: &Perturbation,
    model: DivergenceModel,
) -> Pieces {
    let pol = map_field(e, |idx, v| v * p.d_chi_e[idx]);
    let mag_curl =
        b.map(|b| sp.curl_complex(&map_field(b, |idx, v| v * p.magnetization_coefficient(idx))));
    let div_term = match model {
        DivergenceModel::GaussLaw => Some(
            sp.grad_div_complex(&pol)
                .scaled_c(C64::new(1.0 / p.epsilon(), 0.0)),
        ),
        DivergenceModel::FromField => Some(sp.grad_div_complex(e).scaled_c(C64::new(-1.0, 0.0))),
        DivergenceModel::Scalar => None,
    };
    Pieces {
        pol,
        mag_curl,
        pump: pump.cloned(),
        div_term,
    }
}

fn frame(h: &History, i: usize) -> ComplexVectorField {
    match h {
        History::Sampled { frames, .. } => frames[i].to_complex(),
        History::Harmonic { amplitude, .. } => amplitude.clone(),
    }
}

/// Electric source `f = −μ ∂J′/∂t − ∇(∇·E)` with
/// `J′ = ∂(Δχe E)/∂t + ∇×(ΔM) + J_pump`.
///
/// Sampled histories use central differences, so the returned frames cover
/// the interior samples `1..n−1` only.
pub fn source_term_e(
    sp: &Spectral,
    fields: &FieldHistory,
    perturbation: &Perturbation,
    pump_current: Option<&History>,
    model: DivergenceModel,
) -> Result<SourceTerm> {
    source_term(
        sp,
        fields,
        perturbation,
        pump_current,
        model,
        Target::Electric,
    )
}

/// Magnetic source `f^b = μ ∇×J′`. Only used as a consistency check
/// against `∇×` of the scattered electric field.
pub fn source_term_b(
    sp: &Spectral,
    fields: &FieldHistory,
    perturbation: &Perturbation,
    pump_current: Option<&History>,
) -> Result<SourceTerm> {
    source_term(
        sp,
        fields,
        perturbation,
        pump_current,
        DivergenceModel::Scalar,
        Target::Magnetic,
    )
}

#[derive(Clone, Copy, PartialEq)]
enum Target {
    Electric,
    Magnetic,
}

fn source_term(
    sp: &Spectral,
    fields: &FieldHistory,
    p: &Perturbation,
    pump: Option<&History>,
    model: DivergenceModel,
    target: Target,
) -> Result<SourceTerm> {
    check_same_kind(fields, pump)?;
    sp.grid.ensure_same(&fields.e.grid()?, "source grid")?;
    sp.grid.ensure_same(&p.grid, "perturbation grid")?;
    let b_hist = require_b(fields, p)?;
    let mu = p.mu();
    match &fields.e {
        History::Harmonic { omega, .. } => {
            let w = *omega;
            let e = frame(&fields.e, 0);
            let b = b_hist.map(|h| frame(h, 0));
            let j = pump.map(|h| frame(h, 0));
            let pc = pieces(sp, &e, b.as_ref(), j.as_ref(), p, model);
            // J′ = −iω Δχe E + ∇×ΔM + J_pump
            let mut jp = pc.pol.scaled_c(C64::new(0.0, -w));
            if let Some(m) = &pc.mag_curl {
                axpy(&mut jp, C64::new(1.0, 0.0), m);
            }
            if let Some(j) = &pc.pump {
                axpy(&mut jp, C64::new(1.0, 0.0), j);
            }
            let f = match target {
                Target::Electric => {
                    let mut f = jp.scaled_c(C64::new(0.0, mu * w));
                    if let Some(d) = &pc.div_term {
                        axpy(&mut f, C64::new(1.0, 0.0), d);
                    }
                    f
                }
                Target::Magnetic => sp.curl_complex(&jp).scaled_c(C64::new(mu, 0.0)),
            };
            f.check_finite("source term")?;
            Ok(SourceTerm::Harmonic { omega: w, f })
        }
        History::Sampled { t0, dt, frames } => {
            let n = frames.len();
            let all: Vec<Pieces> = (0..n)
                .map(|i| {
                    let e = frame(&fields.e, i);
                    let b = b_hist.map(|h| frame(h, i));
                    let j = pump.map(|h| frame(h, i));
                    pieces(sp, &e, b.as_ref(), j.as_ref(), p, model)
                })
                .collect();
            let h = *dt;
            let mut out = Vec::with_capacity(n - 2);
            for i in 1..n - 1 {
                let (prev, cur, next) = (&all[i - 1], &all[i], &all[i + 1]);
                let f = match target {
                    Target::Electric => {
                        // −μ[∂²(Δχe E) + ∂t(∇×ΔM) + ∂t J_pump] + div term
                        let mut f = ComplexVectorField::zeros(sp.grid);
                        let c2 = C64::new(-mu / (h * h), 0.0);
                        axpy(&mut f, c2, &next.pol);
                        axpy(&mut f, -2.0 * c2, &cur.pol);
                        axpy(&mut f, c2, &prev.pol);
                        let c1 = C64::new(-mu / (2.0 * h), 0.0);
                        for (a, b) in [(&next.mag_curl, &prev.mag_curl), (&next.pump, &prev.pump)] {
                            if let (Some(a), Some(b)) = (a, b) {
                                axpy(&mut f, c1, a);
                                axpy(&mut f, -c1, b);
                            }
                        }
                        if let Some(d) = &cur.div_term {
                            axpy(&mut f, C64::new(1.0, 0.0), d);
                        }
                        f
                    }
                    Target::Magnetic => {
                        let c1 = C64::new(1.0 / (2.0 * h), 0.0);
                        let mut jp = ComplexVectorField::zeros(sp.grid);
                        axpy(&mut jp, c1, &next.pol);
                        axpy(&mut jp, -c1, &prev.pol);
                        for x in [&cur.mag_curl, &cur.pump].into_iter().flatten() {
                            axpy(&mut jp, C64::new(1.0, 0.0), x);
                        }
                        sp.curl_complex(&jp).scaled_c(C64::new(mu, 0.0))
                    }
                };
                let f = f.re();
                f.check_finite("source term")?;
                out.push(f);
            }
            Ok(SourceTerm::Sampled {
                t0: t0 + h,
                dt: h,
                frames: out,
            })
        }
    }
}

/// An observation point and time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub r: [f64; 3],
    pub t: f64,
}

impl Observation {
    /// Points `center + radius·d̂` for each direction.
    pub fn far_field(center: [f64; 3], radius: f64, directions: &[[f64; 3]], t: f64) -> Vec<Self> {
        directions
            .iter()
            .map(|d| {
                let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                Observation {
                    r: std::array::from_fn(|a| center[a] + radius * d[a] / n),
                    t,
                }
            })
            .collect()
    }
}

/// Fields at the observation set. Harmonic results are analytic signals
/// `amplitude·e^{−iωt}`; sampled results are real.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterOutput {
    pub incident: Vec<[C64; 3]>,
    pub scattered: Vec<[C64; 3]>,
    pub total: Vec<[C64; 3]>,
    /// Observation came within `r_min` of a source point.
    pub regularized: Vec<bool>,
}

struct SourcePoint {
    r: [f64; 3],
    idx: usize,
}

fn active_points(grid: Grid3, peak_at: impl Fn(usize) -> f64) -> Vec<SourcePoint> {
    let peaks: Vec<f64> = (0..grid.size()).map(&peak_at).collect();
    let top = peaks.iter().fold(0.0f64, |m, v| m.max(*v));
    if top == 0.0 {
        return Vec::new();
    }
    peaks
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > SOURCE_FLOOR * top)
        .map(|(idx, _)| SourcePoint {
            r: grid.position(idx),
            idx,
        })
        .collect()
}

/// Retarded integral of `source` at each observation, plus the incident field
/// when given. The time integral starts at the first source sample; samples
/// are expected to begin once the incident envelope exceeds about 1e-8 of its
/// peak, which bounds the truncation error at that level.
pub fn born_scatter(
    source: &SourceTerm,
    spec: &GreenSpec,
    observations: &[Observation],
    incident: Option<&(dyn Fn([f64; 3], f64) -> [C64; 3] + Sync)>,
) -> Result<ScatterOutput> {
    spec.validate()?;
    let grid = source.grid();
    if spec.r_min > grid.min_spacing() * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "r_min {} exceeds the grid spacing {}",
            spec.r_min,
            grid.min_spacing()
        )));
    }
    let dv = grid.cell_volume();
    let v = spec.speed();
    let kernel = |r: [f64; 3], s: &SourcePoint| {
        let d =
            ((r[0] - s.r[0]).powi(2) + (r[1] - s.r[1]).powi(2) + (r[2] - s.r[2]).powi(2)).sqrt();
        (d.max(spec.r_min), d < spec.r_min)
    };
    let results: Vec<Result<([C64; 3], bool)>> = match source {
        SourceTerm::Harmonic { omega, f } => {
            let k = omega / v;
            let pts = active_points(grid, |i| {
                (0..3).map(|a| f.comps[a][i].norm_sqr()).sum::<f64>().sqrt()
            });
            observations
                .par_iter()
                .map(|o| {
                    let mut acc = [C64::new(0.0, 0.0); 3];
                    let mut flag = false;
                    for s in &pts {
                        let (d, reg) = kernel(o.r, s);
                        flag |= reg;
                        let g = C64::from_polar(dv / (4.0 * PI * d), k * d);
                        for a in 0..3 {
                            acc[a] += g * f.comps[a][s.idx];
                        }
                    }
                    let phase = C64::from_polar(1.0, -omega * o.t);
                    Ok((acc.map(|x| x * phase), flag))
                })
                .collect()
        }
        SourceTerm::Sampled { t0, dt, frames } => {
            let n = frames.len();
            if n < 2 {
                return Err(Error::InsufficientSamples(
                    "retarded interpolation needs 2 source samples".into(),
                ));
            }
            let t_last = t0 + (n - 1) as f64 * dt;
            let pts = active_points(grid, |i| {
                frames
                    .iter()
                    .fold(0.0f64, |m, fr| m.max(fr.norm_sq_at(i).sqrt()))
            });
            observations
                .par_iter()
                .map(|o| {
                    let mut acc = [0.0f64; 3];
                    let mut flag = false;
                    for s in &pts {
                        let (d, reg) = kernel(o.r, s);
                        flag |= reg;
                        let tr = o.t - d / v;
                        if tr < *t0 {
                            continue;
                        }
                        if tr > t_last + 1e-12 * dt {
                            return Err(Error::InsufficientSamples(format!(
                                "retarded time {tr} beyond the last source sample {t_last}"
                            )));
                        }
                        let x = ((tr - t0) / dt).min((n - 1) as f64);
                        let i = (x.floor() as usize).min(n - 2);
                        let w = x - i as f64;
                        let g = dv / (4.0 * PI * d);
                        for a in 0..3 {
                            let fi = frames[i].comps[a][s.idx];
                            let fj = frames[i + 1].comps[a][s.idx];
                            acc[a] += g * (fi + w * (fj - fi));
                        }
                    }
                    Ok((acc.map(|x| C64::new(x, 0.0)), flag))
                })
                .collect()
        }
    };
    let mut out = ScatterOutput {
        incident: Vec::with_capacity(observations.len()),
        scattered: Vec::with_capacity(observations.len()),
        total: Vec::with_capacity(observations.len()),
        regularized: Vec::with_capacity(observations.len()),
    };
    for (o, r) in observations.iter().zip(results) {
        let (sc, flag) = r?;
        let inc = incident
            .map(|f| f(o.r, o.t))
            .unwrap_or([C64::new(0.0, 0.0); 3]);
        out.incident.push(inc);
        out.scattered.push(sc);
        out.total.push(std::array::from_fn(|a| inc[a] + sc[a]));
        out.regularized.push(flag);
    }
    Ok(out)
}
