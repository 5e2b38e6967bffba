//! Scenario execution: builds engine inputs from a validated config, runs the
//! computation and writes artifacts followed by the manifest.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use photonwave::fields::{
    helicity_project, ComplexVectorField, Grid3, MediumMap, RealFieldPair, RealVectorField,
    UnitSystem,
};
use photonwave::io::{sha256_hex, ArrayMeta, OutputDir, RunManifest};
use photonwave::propagator::{self, Fault, Integrator, Scheme};
use photonwave::scattering::{
    born_scatter, source_term_e, DivergenceModel, FieldHistory, GreenSpec, History, Observation,
    Perturbation,
};
use photonwave::selftest;
use photonwave::spdc::{
    biphoton_position, marginal_spectrum, schmidt, spdc_jsa, Aperture, CrystalSpec, Filter,
    JsaAxes, JsaGrid, Photon, PositionQuadrature, Profile, PumpSpectrum, Temporal,
};
use photonwave::spectral::Spectral;
use photonwave::Error;

use crate::config::*;

#[derive(Debug)]
pub enum RunError {
    /// Invalid configuration; nothing was written.
    Schema(String),
    /// Numerical failure in a named module and stage.
    Numeric {
        stage: &'static str,
        error: Error,
    },
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Schema(_) => 2,
            RunError::Numeric { .. } => 3,
            RunError::Io(_) => 4,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Schema(m) => write!(f, "configuration error: {m}"),
            RunError::Numeric { stage, error } => write!(f, "numeric failure in {stage}: {error}"),
            RunError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

fn schema(stage: &'static str) -> impl FnOnce(Error) -> RunError {
    move |e| RunError::Schema(format!("{stage}: {e}"))
}

fn numeric(stage: &'static str) -> impl FnOnce(Error) -> RunError {
    move |e| match e {
        Error::Io(io) => RunError::Io(format!("{stage}: {io}")),
        error => RunError::Numeric { stage, error },
    }
}

fn out(e: Error) -> RunError {
    RunError::Io(e.to_string())
}

/// Outcome of a finished run. `success` is false when a selftest run
/// completed but reported failing checks.
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub success: bool,
}

type Diagnostics = BTreeMap<String, Value>;

/// Prepared inputs; building one performs all validation.
enum Plan {
    Propagate(PropagatePlan),
    Scatter(ScatterPlan),
    Jsa(JsaPlan),
    Schmidt(JsaPlan),
    Position(PositionPlan),
    Selftest(selftest::Options, Vec<u32>),
}

pub fn run_scenario(cfg: &ScenarioConfig, threads: usize) -> Result<RunOutcome, RunError> {
    cfg.check_blocks().map_err(RunError::Schema)?;
    let units = UnitSystem::new(
        cfg.units
            .map_or(UnitSystem::default().length_scale, |u| u.length_scale_m),
    )
    .map_err(schema("units"))?;
    let plan = build(cfg)?;

    let start = Instant::now();
    let mut dir = OutputDir::create(&cfg.output_dir)
        .map_err(|e| RunError::Io(format!("{}: {e}", cfg.output_dir.display())))?;
    let mut diag = Diagnostics::new();
    let success = match plan {
        Plan::Propagate(p) => p.execute(&mut dir, &mut diag)?,
        Plan::Scatter(p) => p.execute(&mut dir, &mut diag)?,
        Plan::Jsa(p) => p.execute_jsa(&mut dir, &mut diag)?,
        Plan::Schmidt(p) => p.execute_schmidt(&mut dir, &mut diag)?,
        Plan::Position(p) => p.execute(&mut dir, &mut diag)?,
        Plan::Selftest(opts, criteria) => run_selftest(opts, &criteria, &mut dir, &mut diag)?,
    };
    diag.insert(
        "units".into(),
        json!({ "system": "natural", "length_scale_m": units.length_scale }),
    );

    let canonical = serde_json::to_vec(cfg).map_err(|e| RunError::Io(e.to_string()))?;
    let manifest = RunManifest {
        kind: cfg.kind.name().into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: sha256_hex(&canonical),
        threads,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files: Vec::new(),
        diagnostics: diag,
    };
    let manifest = dir.finish(manifest).map_err(out)?;
    Ok(RunOutcome { manifest, success })
}

fn build(cfg: &ScenarioConfig) -> Result<Plan, RunError> {
    Ok(match cfg.kind {
        Kind::Propagate => Plan::Propagate(PropagatePlan::build(cfg)?),
        Kind::Scatter => Plan::Scatter(ScatterPlan::build(cfg)?),
        Kind::SpdcJsa => Plan::Jsa(JsaPlan::build(cfg)?),
        Kind::Schmidt => Plan::Schmidt(JsaPlan::build(cfg)?),
        Kind::SpdcPosition => Plan::Position(PositionPlan::build(cfg)?),
        Kind::Selftest => {
            let s = cfg.selftest.clone().unwrap_or_default();
            let criteria = s.criteria.clone().unwrap_or_else(|| (1..=12).collect());
            Plan::Selftest(
                selftest::Options {
                    scale: if s.full {
                        selftest::Scale::Full
                    } else {
                        selftest::Scale::Reduced
                    },
                    fault: match s.fault {
                        FaultName::None => Fault::None,
                        FaultName::FlipWorkSign => Fault::FlipWorkSign,
                    },
                },
                criteria,
            )
        }
    })
}

fn grid(cfg: &ScenarioConfig) -> Result<Grid3, RunError> {
    let g = cfg.grid.expect("checked block");
    Grid3::new(g.n, g.len).map_err(schema("grid"))
}

struct PropagatePlan {
    sp: Spectral,
    medium: MediumMap,
    initial: RealFieldPair,
    evolution: propagator::EvolutionConfig,
    write_snapshots: bool,
}

impl PropagatePlan {
    fn build(cfg: &ScenarioConfig) -> Result<Self, RunError> {
        let g = grid(cfg)?;
        let sp = Spectral::new(g);
        let medium = match cfg.medium.expect("checked block") {
            MediumConfig::Vacuum {} => Ok(MediumMap::vacuum(g)),
            MediumConfig::Uniform { chi_e, chi_m } => MediumMap::uniform(g, chi_e, chi_m),
            MediumConfig::GaussianBump {
                chi_e,
                chi_m,
                center,
                sigma,
            } => MediumMap::from_fn(g, |r| {
                let d2: f64 = (0..3).map(|a| (r[a] - center[a]).powi(2)).sum();
                let w = (-d2 / (2.0 * sigma * sigma)).exp();
                (chi_e * w, chi_m * w)
            }),
            MediumConfig::Slab {
                chi_e,
                chi_m,
                z_min,
                z_max,
            } => MediumMap::from_fn(g, |r| {
                if (z_min..z_max).contains(&r[2]) {
                    (chi_e, chi_m)
                } else {
                    (0.0, 0.0)
                }
            }),
        }
        .map_err(schema("medium"))?;
        let initial = match cfg.initial.expect("checked block") {
            InitialConfig::Zero {} => Ok(RealFieldPair::zeros(g)),
            InitialConfig::PlaneWave {
                mode,
                amplitude,
                index,
            } => {
                let k = TAU * mode as f64 / g.len[2];
                let e = RealVectorField::from_fn(g, |r| [amplitude * (k * r[2]).cos(), 0.0, 0.0]);
                let b = RealVectorField::from_fn(g, |r| {
                    [0.0, index * amplitude * (k * r[2]).cos(), 0.0]
                });
                RealFieldPair::new(e, b, 0.0)
            }
            InitialConfig::Packet {
                z0,
                sigma,
                k0,
                waist,
                amplitude,
            } => packet(&sp, &medium, z0, sigma, k0, waist, amplitude),
        }
        .map_err(schema("initial"))?;
        let ev = cfg.evolution.expect("checked block");
        if !(ev.duration.is_finite() && ev.duration > 0.0) {
            return Err(RunError::Schema(
                "evolution.duration must be positive".into(),
            ));
        }
        let mut evolution = match ev.dt {
            Some(dt) => {
                let n = (ev.duration / dt).round().max(1.0) as usize;
                propagator::EvolutionConfig::new(dt, n)
            }
            None => propagator::EvolutionConfig::fitted(&sp, &medium, ev.duration, ev.cfl_fraction),
        };
        evolution.integrator = match ev.integrator {
            IntegratorName::Rk4 => Integrator::Maxwell {
                scheme: Scheme::Rk4,
            },
            IntegratorName::Taylor => Integrator::Maxwell {
                scheme: Scheme::Taylor {
                    order: ev.taylor_order,
                },
            },
            IntegratorName::Helicity => Integrator::VacuumHelicity,
        };
        evolution.snapshot_every = ev.snapshot_every;
        evolution.keep_fields = ev.write_snapshots;
        evolution
            .validate(&sp, &medium)
            .map_err(schema("evolution"))?;
        Ok(Self {
            sp,
            medium,
            initial,
            evolution,
            write_snapshots: ev.write_snapshots,
        })
    }

    fn execute(self, dir: &mut OutputDir, diag: &mut Diagnostics) -> Result<bool, RunError> {
        let result = propagator::run(
            &self.sp,
            &self.initial,
            &self.medium,
            &self.evolution,
            &mut [],
        )
        .map_err(numeric("propagator.run"))?;
        let tr = &result.trajectory;
        let rows: Vec<Vec<f64>> = tr
            .frames
            .iter()
            .map(|f| {
                let d = f.diagnostics;
                vec![
                    f.step as f64,
                    f.time,
                    d.psi_energy,
                    d.medium_energy,
                    d.work,
                    d.flux,
                    d.div_b_rms,
                    d.div_d_rms,
                    d.field_rms,
                ]
            })
            .collect();
        dir.write_csv(
            "trajectory.csv",
            "frame diagnostics",
            &[
                "step",
                "time",
                "psi_energy",
                "medium_energy",
                "work",
                "flux",
                "div_b_rms",
                "div_d_rms",
                "field_rms",
            ],
            &rows,
        )
        .map_err(out)?;
        if let Some(c) = &result.continuity {
            let rows: Vec<Vec<f64>> = c
                .rows
                .iter()
                .map(|r| vec![r.step as f64, r.time, r.de_dt, r.flux, r.work, r.residual])
                .collect();
            dir.write_csv(
                "continuity.csv",
                "energy continuity audit",
                &["step", "time", "de_dt", "flux", "work", "residual"],
                &rows,
            )
            .map_err(out)?;
            diag.insert(
                "continuity_max_relative_residual".into(),
                json!(c.max_relative_residual()),
            );
            diag.insert(
                "continuity_work_balance_error".into(),
                json!(c.work_balance_error()),
            );
        }
        let ff = &tr.final_fields;
        dir.write_vector_field("final_e.bin", "electric field", "internal", &ff.e)
            .map_err(out)?;
        dir.write_vector_field("final_b.bin", "magnetic field", "internal", &ff.b)
            .map_err(out)?;
        if self.write_snapshots {
            let n = self.sp.grid.n;
            let frames: Vec<&RealFieldPair> =
                tr.frames.iter().filter_map(|f| f.fields.as_ref()).collect();
            let dims = [frames.len(), 3, n[0], n[1], n[2]];
            let names = ["frame", "component", "x", "y", "z"];
            let e: Vec<f64> = frames
                .iter()
                .flat_map(|f| f.e.comps.iter().flatten().copied())
                .collect();
            let b: Vec<f64> = frames
                .iter()
                .flat_map(|f| f.b.comps.iter().flatten().copied())
                .collect();
            dir.write_real(
                "snapshots_e.bin",
                ArrayMeta::new("electric field", "internal", &dims, &names),
                &e,
            )
            .map_err(out)?;
            dir.write_real(
                "snapshots_b.bin",
                ArrayMeta::new("magnetic field", "internal", &dims, &names),
                &b,
            )
            .map_err(out)?;
        }
        let div = tr
            .frames
            .iter()
            .map(|f| {
                let d = f.diagnostics;
                let m = d.div_b_rms.max(d.div_d_rms);
                if d.field_rms > 0.0 {
                    m / d.field_rms
                } else {
                    m
                }
            })
            .fold(0.0, f64::max);
        diag.insert("steps".into(), json!(self.evolution.n_steps));
        diag.insert("dt".into(), json!(self.evolution.dt));
        diag.insert("max_relative_divergence".into(), json!(div));
        if let Some(last) = tr.frames.last() {
            diag.insert(
                "final_psi_energy".into(),
                json!(last.diagnostics.psi_energy),
            );
            diag.insert(
                "final_medium_energy".into(),
                json!(last.diagnostics.medium_energy),
            );
        }
        Ok(true)
    }
}

fn packet(
    sp: &Spectral,
    medium: &MediumMap,
    z0: f64,
    sigma: f64,
    k0: f64,
    waist: f64,
    amplitude: f64,
) -> photonwave::Result<RealFieldPair> {
    let g = sp.grid;
    let yc = 0.5 * g.len[1];
    let prof = |r: [f64; 3]| {
        amplitude
            * (-(r[1] - yc).powi(2) / (2.0 * waist * waist)).exp()
            * (-(r[2] - z0).powi(2) / (2.0 * sigma * sigma)).exp()
            * (k0 * r[2]).cos()
    };
    let d = RealVectorField::from_fn(g, |r| [prof(r), 0.0, 0.0]);
    let b = RealVectorField::from_fn(g, |r| [0.0, prof(r), 0.0]);
    let parts = helicity_project(sp, &b.to_complex())?;
    RealFieldPair::from_displacement(d, parts.plus.add(&parts.minus).re(), medium, 0.0)
}

struct ScatterPlan {
    sp: Spectral,
    pert: Perturbation,
    history: FieldHistory,
    k: [f64; 3],
    omega: f64,
    polarization: [f64; 3],
    model: DivergenceModel,
    green: GreenSpec,
    observations: Vec<Observation>,
}

impl ScatterPlan {
    fn build(cfg: &ScenarioConfig) -> Result<Self, RunError> {
        let g = grid(cfg)?;
        let sc = cfg.scatter.as_ref().expect("checked block");
        let background = (sc.background[0], sc.background[1]);
        let pert = match sc.perturbation {
            PerturbationConfig::Ball {
                center,
                radius,
                d_chi_e,
                d_chi_m,
            } => Perturbation::from_fn(g, background, |r| {
                let s = (0..3)
                    .map(|a| (r[a] - center[a]).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    / radius;
                let w = (-s.powi(4)).exp();
                (d_chi_e * w, d_chi_m * w)
            }),
            PerturbationConfig::Box {
                min,
                max,
                edge,
                d_chi_e,
                d_chi_m,
            } => Perturbation::from_fn(g, background, |r| {
                let w: f64 = (0..3)
                    .map(|a| {
                        let lo = 0.5 * (1.0 + ((r[a] - min[a]) / edge).tanh());
                        let hi = 0.5 * (1.0 + ((max[a] - r[a]) / edge).tanh());
                        lo * hi
                    })
                    .product();
                (d_chi_e * w, d_chi_m * w)
            }),
        }
        .map_err(schema("scatter.perturbation"))?;
        let n = pert.index_of_refraction();
        let IncidentConfig::PlaneWave { k, polarization } = sc.incident;
        let kk = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        if !(kk.is_finite() && kk > 0.0) {
            return Err(RunError::Schema(
                "scatter.incident.k must be a nonzero finite vector".into(),
            ));
        }
        let omega = kk / n;
        let amplitude = ComplexVectorField::from_fn(g, |r| {
            let ph = C64::from_polar(1.0, k[0] * r[0] + k[1] * r[1] + k[2] * r[2]);
            polarization.map(|p| ph * p)
        });
        let history = FieldHistory::electric(History::Harmonic { omega, amplitude });
        let gc = sc.green.unwrap_or(GreenConfig {
            k_max: 10.0 * kk,
            apodization: kk,
            r_min: 0.5 * g.min_spacing(),
        });
        let green = GreenSpec::new(n, gc.k_max, gc.apodization, gc.r_min)
            .map_err(schema("scatter.green"))?;
        let observations = match &sc.observation {
            ObservationConfig::Points { points } => points
                .iter()
                .map(|&r| Observation { r, t: sc.time })
                .collect(),
            ObservationConfig::FarField {
                center,
                radius,
                directions,
            } => Observation::far_field(*center, *radius, directions, sc.time),
            ObservationConfig::FarFieldGrid {
                center,
                radius,
                n_theta,
                n_phi,
            } => {
                if *n_theta == 0 || *n_phi == 0 {
                    return Err(RunError::Schema(
                        "far_field_grid needs n_theta, n_phi ≥ 1".into(),
                    ));
                }
                let mut dirs = Vec::new();
                for i in 0..*n_theta {
                    let th = std::f64::consts::PI * (i as f64 + 0.5) / *n_theta as f64;
                    for j in 0..*n_phi {
                        let ph = TAU * j as f64 / *n_phi as f64;
                        dirs.push([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                    }
                }
                Observation::far_field(*center, *radius, &dirs, sc.time)
            }
        };
        if observations.is_empty()
            || observations
                .iter()
                .any(|o| o.r.iter().any(|x| !x.is_finite()))
        {
            return Err(RunError::Schema(
                "scatter.observation must list finite points".into(),
            ));
        }
        let model = match sc.divergence {
            DivergenceName::GaussLaw => DivergenceModel::GaussLaw,
            DivergenceName::FromField => DivergenceModel::FromField,
            DivergenceName::Scalar => DivergenceModel::Scalar,
        };
        Ok(Self {
            sp: Spectral::new(g),
            pert,
            history,
            k,
            omega,
            polarization,
            model,
            green,
            observations,
        })
    }

    fn execute(self, dir: &mut OutputDir, diag: &mut Diagnostics) -> Result<bool, RunError> {
        let src = source_term_e(&self.sp, &self.history, &self.pert, None, self.model)
            .map_err(numeric("scattering.source_term_e"))?;
        let (k, omega, pol) = (self.k, self.omega, self.polarization);
        let incident = move |r: [f64; 3], t: f64| {
            let ph = C64::from_polar(1.0, k[0] * r[0] + k[1] * r[1] + k[2] * r[2] - omega * t);
            pol.map(|p| ph * p)
        };
        let res = born_scatter(&src, &self.green, &self.observations, Some(&incident))
            .map_err(numeric("scattering.born_scatter"))?;
        let rows: Vec<Vec<f64>> = self
            .observations
            .iter()
            .zip(&res.scattered)
            .zip(&res.regularized)
            .map(|((o, e), &reg)| {
                let mag = e.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                vec![
                    o.r[0],
                    o.r[1],
                    o.r[2],
                    o.t,
                    mag,
                    if reg { 1.0 } else { 0.0 },
                ]
            })
            .collect();
        dir.write_csv(
            "observations.csv",
            "observation points",
            &["x", "y", "z", "t", "scattered_magnitude", "regularized"],
            &rows,
        )
        .map_err(out)?;
        let n = self.observations.len();
        for (name, q, data) in [
            ("scattered.bin", "scattered electric field", &res.scattered),
            ("incident.bin", "incident electric field", &res.incident),
            ("total.bin", "total electric field", &res.total),
        ] {
            let flat: Vec<C64> = data.iter().flatten().copied().collect();
            dir.write_complex(
                name,
                ArrayMeta::new(q, "internal", &[n, 3], &["point", "component"]),
                &flat,
            )
            .map_err(out)?;
        }
        diag.insert("observations".into(), json!(n));
        diag.insert(
            "regularized_points".into(),
            json!(res.regularized.iter().filter(|&&r| r).count()),
        );
        diag.insert("omega".into(), json!(omega));
        diag.insert("index_of_refraction".into(), json!(self.green.n));
        Ok(true)
    }
}

struct JsaPlan {
    pump: PumpSpectrum,
    crystal: CrystalSpec,
    axes: Option<JsaAxes>,
    filters: [Option<Filter>; 2],
}

impl JsaPlan {
    fn build(cfg: &ScenarioConfig) -> Result<Self, RunError> {
        let s = cfg.spdc.expect("checked block");
        let p = s.pump;
        let pump = PumpSpectrum::Analytic {
            omega0: p.omega0,
            temporal: p
                .sigma_omega
                .map_or(Temporal::Monochromatic, |sigma_omega| Temporal::Gaussian {
                    sigma_omega,
                }),
            transverse: p
                .waist
                .map_or(Profile::Plane, |waist| Profile::Gaussian { waist }),
        };
        pump.validate().map_err(schema("spdc.pump"))?;
        let c = s.crystal;
        let crystal = CrystalSpec {
            chi2: c.chi2,
            length: c.length,
            aperture: c.aperture.map_or(Aperture::Infinite, |[width_x, width_y]| {
                Aperture::Finite { width_x, width_y }
            }),
            n: c.n,
            window: c.interaction_time.unwrap_or(f64::INFINITY),
        };
        crystal.validate().map_err(schema("spdc.crystal"))?;
        let axes = s
            .axes
            .map(|a| JsaAxes::new(a.omega_min, a.omega_max, a.n_omega, a.q_max, a.n_q))
            .transpose()
            .map_err(schema("spdc.axes"))?;
        let filters = s.filters.map(|f| {
            f.map(|f| match f {
                FilterConfig::Hard { center, width } => Filter::Hard { center, width },
                FilterConfig::Gaussian { center, width } => Filter::Gaussian { center, width },
            })
        });
        Ok(Self {
            pump,
            crystal,
            axes,
            filters,
        })
    }

    fn jsa(&self) -> Result<JsaGrid, RunError> {
        let axes = self.axes.as_ref().expect("checked block");
        spdc_jsa(&self.pump, &self.crystal, axes, self.filters).map_err(numeric("spdc.spdc_jsa"))
    }

    fn execute_jsa(self, dir: &mut OutputDir, diag: &mut Diagnostics) -> Result<bool, RunError> {
        let jsa = self.jsa()?;
        let a = &jsa.axes;
        let (nw, nq) = (a.omega.len(), a.q.len());
        dir.write_complex(
            "jsa.bin",
            ArrayMeta::new(
                "joint spectral amplitude",
                "normalized",
                &[nw, nq, nw, nq],
                &["omega1", "q1", "omega2", "q2"],
            )
            .with_storage("dense_symmetrized"),
            &jsa.values,
        )
        .map_err(out)?;
        let p1 = marginal_spectrum(&jsa, Photon::One);
        let p2 = marginal_spectrum(&jsa, Photon::Two);
        let rows: Vec<Vec<f64>> = (0..jsa.states())
            .map(|s| {
                let (w, q) = a.state(s);
                vec![w, q, p1[s], p2[s]]
            })
            .collect();
        dir.write_csv(
            "marginals.csv",
            "single-photon marginals",
            &["omega", "q", "p1", "p2"],
            &rows,
        )
        .map_err(out)?;
        let axes_rows: Vec<Vec<f64>> = a
            .omega
            .iter()
            .map(|&w| vec![0.0, w])
            .chain(a.q.iter().map(|&q| vec![1.0, q]))
            .collect();
        dir.write_csv(
            "axes.csv",
            "grid axes (axis 0 = omega, 1 = q)",
            &["axis", "value"],
            &axes_rows,
        )
        .map_err(out)?;
        diag.insert("norm_sq".into(), json!(jsa.norm_sq()));
        diag.insert("evanescent_entries".into(), json!(jsa.evanescent));
        diag.insert("states".into(), json!(jsa.states()));
        Ok(true)
    }

    fn execute_schmidt(
        self,
        dir: &mut OutputDir,
        diag: &mut Diagnostics,
    ) -> Result<bool, RunError> {
        let jsa = self.jsa()?;
        let s = schmidt(&jsa).map_err(numeric("spdc.schmidt"))?;
        let rows: Vec<Vec<f64>> = s
            .lambdas
            .iter()
            .enumerate()
            .map(|(i, &l)| vec![i as f64, l])
            .collect();
        dir.write_csv(
            "schmidt.csv",
            "Schmidt coefficients",
            &["n", "lambda"],
            &rows,
        )
        .map_err(out)?;
        diag.insert("schmidt_number".into(), json!(s.k));
        diag.insert("rank".into(), json!(s.rank));
        diag.insert("truncated_weight".into(), json!(s.residual));
        Ok(true)
    }
}

struct PositionPlan {
    jsa: JsaPlan,
    frequencies: (f64, f64),
    detector1: [f64; 3],
    detector2: Vec<[f64; 3]>,
    quadrature: PositionQuadrature,
}

impl PositionPlan {
    fn build(cfg: &ScenarioConfig) -> Result<Self, RunError> {
        let jsa = JsaPlan::build(cfg)?;
        let p = cfg.position.as_ref().expect("checked block");
        let detector2 = match &p.detector2 {
            DetectorScan::Points { points } => points.clone(),
            DetectorScan::Arc {
                radius,
                theta_min,
                theta_max,
                count,
            } => {
                if *count == 0 {
                    return Err(RunError::Schema(
                        "position.detector2.count must be at least 1".into(),
                    ));
                }
                (0..*count)
                    .map(|i| {
                        let f = if *count == 1 {
                            0.0
                        } else {
                            i as f64 / (*count - 1) as f64
                        };
                        let th = theta_min + f * (theta_max - theta_min);
                        [radius * th.sin(), 0.0, radius * th.cos()]
                    })
                    .collect()
            }
        };
        let quadrature =
            p.quadrature
                .map_or(PositionQuadrature::default(), |q| PositionQuadrature {
                    order: q.order,
                    panels_per_cycle: q.panels_per_cycle,
                    min_panels: q.min_panels,
                });
        Ok(Self {
            jsa,
            frequencies: (p.frequencies[0], p.frequencies[1]),
            detector1: p.detector1,
            detector2,
            quadrature,
        })
    }

    fn execute(self, dir: &mut OutputDir, diag: &mut Diagnostics) -> Result<bool, RunError> {
        let mut rows = Vec::with_capacity(self.detector2.len());
        for &r2 in &self.detector2 {
            let a = biphoton_position(
                &self.jsa.pump,
                &self.jsa.crystal,
                self.detector1,
                r2,
                self.frequencies,
                self.quadrature,
            )
            .map_err(numeric("spdc.biphoton_position"))?;
            rows.push(vec![r2[0], r2[1], r2[2], a.re, a.im, a.norm_sqr()]);
        }
        dir.write_csv(
            "coincidence.csv",
            "coincidence pattern",
            &["x2", "y2", "z2", "re", "im", "probability"],
            &rows,
        )
        .map_err(out)?;
        let peak = rows
            .iter()
            .max_by(|a, b| a[5].total_cmp(&b[5]))
            .map(|r| [r[0], r[1], r[2]]);
        diag.insert("points".into(), json!(rows.len()));
        diag.insert("peak_detector2".into(), json!(peak));
        Ok(true)
    }
}

fn run_selftest(
    opts: selftest::Options,
    criteria: &[u32],
    dir: &mut OutputDir,
    diag: &mut Diagnostics,
) -> Result<bool, RunError> {
    let report = selftest::run_criteria(opts, criteria);
    let timings: BTreeMap<String, f64> = report
        .checks
        .iter()
        .map(|c| (c.name.clone(), c.seconds))
        .collect();
    let mut stable = report.clone();
    stable.checks.iter_mut().for_each(|c| c.seconds = 0.0);
    dir.write_json("selftest.json", "selftest report", &stable)
        .map_err(out)?;
    dir.write_text("selftest.txt", "selftest report", &report.render())
        .map_err(out)?;
    let rows: Vec<Vec<f64>> = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.criterion.map_or(0.0, f64::from),
                c.value,
                c.limit,
                if c.passed { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    dir.write_csv(
        "selftest.csv",
        "selftest checks in report order",
        &["criterion", "value", "limit", "passed"],
        &rows,
    )
    .map_err(out)?;
    diag.insert("checks".into(), json!(report.checks.len()));
    diag.insert("check_seconds".into(), json!(timings));
    diag.insert(
        "failed".into(),
        json!(report
            .failures()
            .map(|c| c.name.clone())
            .collect::<Vec<_>>()),
    );
    Ok(report.passed())
}
