//! Run configuration, the time-stepping loop shared by all four schemes,
//! convergence studies and file output.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use log::{debug, info, warn};

use crate::analysis::{self, Axis, ErrorRecord, Line, StabilityAudit, StabilityInputs};
use crate::assembly::{apply_dirichlet, assemble_forms, assemble_load, DirichletData, ScalarForms};
use crate::error::{Error, Result};
use crate::mesh2d::{build_dofmap, build_structured, interpolate_tensor, DofMap, NodalTensorField, TriMesh};
use crate::problems::{self, nodal_eig_range, AtanOrder, ProblemSpec};
use crate::sparse::CsrMatrix;
use crate::system::{build_system, Scheme, SteppedSystem};
use crate::tensor3::{eig_sym3, Bounds, COMPONENT_NAMES};
use crate::visolver::{solve_vi, ExtragradConfig, LinearMethod, LinearSolver, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    BpEuler,
    BpCn,
    CipEuler,
    CipCn,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [SchemeKind::BpEuler, SchemeKind::BpCn, SchemeKind::CipEuler, SchemeKind::CipCn];

    pub fn time_scheme(&self) -> Scheme {
        match self {
            SchemeKind::BpEuler | SchemeKind::CipEuler => Scheme::Euler,
            SchemeKind::BpCn | SchemeKind::CipCn => Scheme::CrankNicolson,
        }
    }

    pub fn bound_preserving(&self) -> bool {
        matches!(self, SchemeKind::BpEuler | SchemeKind::BpCn)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::BpEuler => "bp-euler",
            SchemeKind::BpCn => "bp-cn",
            SchemeKind::CipEuler => "cip-euler",
            SchemeKind::CipCn => "cip-cn",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}' (expected bp-euler, bp-cn, cip-euler or cip-cn)")))
    }
}

/// How the extragradient step length is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaRule {
    /// `ω` used verbatim.
    Fixed(f64),
    /// `ω = c / ‖A‖₂` with the norm estimated by power iteration.
    NormScaled(f64),
}

impl OmegaRule {
    pub fn resolve(&self, a: &CsrMatrix) -> f64 {
        match *self {
            OmegaRule::Fixed(w) => w,
            OmegaRule::NormScaled(c) => c / a.spectral_norm_estimate(500),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: String,
    pub scheme: SchemeKind,
    pub degree: usize,
    pub p: usize,
    pub dt: f64,
    pub t_final: f64,
    pub gamma: f64,
    pub omega: OmegaRule,
    pub eps: f64,
    pub kappa: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub atan_order: AtanOrder,
    /// Keep every `U^n` (needed by the stability audit).
    pub store_fields: bool,
    /// Accumulate errors against the exact solution when one exists.
    pub track_errors: bool,
    pub linear_method: LinearMethod,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Configuration preloaded with the defaults of a benchmark.
    pub fn for_problem(name: &str) -> Result<Self> {
        let spec = problems::problem_by_name(name)?;
        let d = spec.defaults;
        Ok(RunConfig {
            problem: name.to_string(),
            scheme: SchemeKind::BpEuler,
            degree: d.degree,
            p: d.p,
            dt: d.dt,
            t_final: spec.final_time,
            gamma: d.gamma,
            omega: OmegaRule::Fixed(d.omega),
            eps: spec.bounds.eps(),
            kappa: spec.bounds.kappa(),
            tol: 1e-6,
            max_iters: 10_000,
            atan_order: AtanOrder::AsPrinted,
            store_fields: false,
            track_errors: true,
            linear_method: LinearMethod::Auto,
            out_dir: None,
        })
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.p as f64 - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= self.dt) {
            return bad(format!("need 0 < dt <= T, got dt = {} and T = {}", self.dt, self.t_final));
        }
        if self.degree != 1 && self.degree != 2 {
            return bad(format!("degree must be 1 or 2, got {}", self.degree));
        }
        if self.p < 2 {
            return bad(format!("p must be at least 2, got {}", self.p));
        }
        if !(self.gamma >= 0.0) {
            return bad(format!("gamma must be non-negative, got {}", self.gamma));
        }
        match self.omega {
            OmegaRule::Fixed(w) if !(w > 0.0 && w.is_finite()) => return bad(format!("omega must be positive, got {w}")),
            OmegaRule::NormScaled(c) if !(c > 0.0 && c.is_finite()) => {
                return bad(format!("omega scale must be positive, got {c}"))
            }
            _ => {}
        }
        Bounds::new(self.eps, self.kappa)?;
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return bad("tol and max-iters must be positive".into());
        }
        problems::problem_by_name(&self.problem)?;
        Ok(())
    }

    /// Applies one `key = value` setting; keys mirror the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
        }
        match key {
            "problem" => {
                problems::problem_by_name(value)?;
                self.problem = value.to_string();
            }
            "scheme" => self.scheme = value.parse()?,
            "degree" => self.degree = num(key, value)?,
            "p" => self.p = num(key, value)?,
            "dt" => self.dt = num(key, value)?,
            "t-final" => self.t_final = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "omega" => self.omega = OmegaRule::Fixed(num(key, value)?),
            "omega-scale" => self.omega = OmegaRule::NormScaled(num(key, value)?),
            "eps" => self.eps = num(key, value)?,
            "kappa" => self.kappa = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "max-iters" => self.max_iters = num(key, value)?,
            "atan-order" => {
                self.atan_order = match value {
                    "printed" => AtanOrder::AsPrinted,
                    "conventional" => AtanOrder::Conventional,
                    _ => return Err(Error::Config(format!("atan-order must be 'printed' or 'conventional', got '{value}'"))),
                }
            }
            "store-fields" => self.store_fields = num(key, value)?,
            "track-errors" => self.track_errors = num(key, value)?,
            "linear-solver" => {
                self.linear_method = match value {
                    "auto" => LinearMethod::Auto,
                    "direct" => LinearMethod::Direct,
                    "krylov" => LinearMethod::Krylov,
                    _ => return Err(Error::Config(format!("linear-solver must be auto, direct or krylov, got '{value}'"))),
                }
            }
            "out" => self.out_dir = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Builds a configuration from a key-value file body; `problem` must be
    /// present unless `problem_override` is given.
    pub fn from_file_text(text: &str, problem_override: Option<&str>) -> Result<Self> {
        let pairs = parse_kv(text)?;
        let problem = problem_override
            .map(str::to_string)
            .or_else(|| pairs.iter().find(|(k, _)| k == "problem").map(|(_, v)| v.clone()))
            .ok_or_else(|| Error::Config("configuration does not name a problem".into()))?;
        let mut cfg = RunConfig::for_problem(&problem)?;
        for (k, v) in pairs.iter().filter(|(k, _)| k != "problem") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// The benchmark with `gamma`, bounds and angle convention applied.
    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        let spec = match self.problem.as_str() {
            "solid-body-rotation" => problems::solid_body_rotation_with(self.atan_order),
            other => problems::problem_by_name(other)?,
        };
        let mut spec = spec.with_gamma(self.gamma);
        spec.bounds = Bounds::new(self.eps, self.kappa)?;
        spec.final_time = self.t_final;
        Ok(spec)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value', got '{raw}'", no + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub iterations: usize,
    pub increment: f64,
    pub converged: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunErrors {
    pub l2_error: f64,
    pub energy_error: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: RunConfig,
    pub spec: ProblemSpec,
    pub omega: f64,
    pub mesh: TriMesh,
    pub dofmap: DofMap,
    pub forms: ScalarForms,
    pub fixed: Vec<bool>,
    pub initial: NodalTensorField,
    pub final_field: NodalTensorField,
    /// `U⁰ … U^N` when `store_fields` is set, otherwise empty.
    pub fields: Vec<NodalTensorField>,
    pub steps: Vec<StepRecord>,
    pub initial_range: (f64, f64),
    pub errors: Option<RunErrors>,
}

impl Trajectory {
    /// Nodal spectral extremes over the initial field and every step.
    pub fn eig_range(&self) -> (f64, f64) {
        self.steps
            .iter()
            .fold(self.initial_range, |(lo, hi), s| (lo.min(s.lambda_min), hi.max(s.lambda_max)))
    }

    pub fn error_record(&self) -> Option<ErrorRecord> {
        let (lo, hi) = self.eig_range();
        self.errors.map(|e| ErrorRecord {
            h: self.config.h(),
            dt: self.config.dt,
            l2_error: e.l2_error,
            energy_error: e.energy_error,
            eigenvalue_min: lo,
            eigenvalue_max: hi,
        })
    }

    pub fn max_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).max().unwrap_or(0)
    }

    /// Energy-estimate audit; requires stored fields.
    pub fn audit_stability(&self) -> Result<StabilityAudit> {
        if self.fields.is_empty() {
            return Err(Error::Analysis("stability audit needs a run with store-fields enabled".into()));
        }
        let spec = &self.spec;
        let source_norms = self
            .steps
            .iter()
            .map(|s| spec.source.as_ref().map(|f| analysis::source_norm(&self.mesh, f, s.t)).unwrap_or(0.0))
            .collect();
        let inputs = StabilityInputs {
            dt: self.config.dt,
            eps: self.config.eps,
            reaction: spec.coefficients.reaction,
            area: self.mesh.total_area(),
            source_norms,
        };
        analysis::audit_stability(&self.fields, &self.forms, &inputs)
    }
}

struct Operator {
    system: SteppedSystem,
    omega: f64,
    linear: Option<LinearSolver>,
}

fn build_operator(config: &RunConfig, forms: &ScalarForms, fixed: &[bool]) -> Result<Operator> {
    let system = build_system(forms, config.dt, config.scheme.time_scheme())?;
    let omega = if config.scheme.bound_preserving() { config.omega.resolve(&system.matrix) } else { 0.0 };
    let linear = if config.scheme.bound_preserving() {
        None
    } else {
        Some(LinearSolver::new(&system.matrix, fixed, config.linear_method)?)
    };
    Ok(Operator { system, omega, linear })
}

/// Time-steps a benchmark. BP schemes solve the variational inequality by
/// extragradient iteration, CIP schemes the linear system; everything else
/// is shared.
pub fn run(config: &RunConfig) -> Result<Trajectory> {
    config.validate()?;
    run_spec(config, config.problem_spec()?)
}

/// Like [`run`] but with a caller-supplied problem; only the discretisation
/// and solver fields of `config` are used.
pub fn run_spec(config: &RunConfig, spec: ProblemSpec) -> Result<Trajectory> {
    config.validate()?;
    let bounds = spec.bounds;
    let mesh = build_structured(config.p, spec.domain)?;
    let dofmap = build_dofmap(&mesh, config.degree, |x, n| spec.is_inflow(x, n))?;
    let n_dofs = dofmap.len();

    let boundary_at = |t: f64| interpolate_tensor(&dofmap, |x| (spec.boundary)(x, t));
    let dirichlet: DirichletData = apply_dirichlet(&dofmap, spec.dirichlet, &boundary_at(0.0)?, &bounds)?;
    let fixed = dirichlet.fixed.clone();
    let fixed_ids: Vec<usize> = (0..n_dofs).filter(|i| fixed[*i]).collect();

    let mut u = interpolate_tensor(&dofmap, |x| (spec.initial)(x))?;
    dirichlet.impose(&mut u);
    let initial = u.clone();
    let initial_range = nodal_eig_range(&u)?;

    let mut forms = assemble_forms(&mesh, &dofmap, &spec.coefficients, 0.0)?;
    let mut op = build_operator(config, &forms, &fixed)?;
    let mut stiffness = forms.stiffness();
    let vi_cfg = ExtragradConfig { omega: op.omega, tol: config.tol, max_iters: config.max_iters };
    info!(
        "{} {} P{} p={} dofs={} fixed={} dt={} steps={} omega={:.6e}",
        config.problem,
        config.scheme,
        config.degree,
        config.p,
        n_dofs,
        fixed_ids.len(),
        config.dt,
        config.steps(),
        op.omega
    );

    let exact = if config.track_errors { spec.exact.clone() } else { None };
    let mut energy_sum = 0.0;
    let mut fields = if config.store_fields { vec![u.clone()] } else { Vec::new() };
    let mut steps = Vec::with_capacity(config.steps());
    let start = Instant::now();
    let mut boundary = dirichlet.values.clone();
    let zero_load = NodalTensorField::zeros(n_dofs);

    for n in 1..=config.steps() {
        let t = n as f64 * config.dt;
        if spec.coefficients.velocity_time_dependent {
            forms = assemble_forms(&mesh, &dofmap, &spec.coefficients, t)?;
            stiffness = forms.stiffness();
            op = build_operator(config, &forms, &fixed)?;
        }
        for &i in &fixed_ids {
            boundary[i] = (spec.boundary)(dofmap.coords[i], t);
        }
        let load = match &spec.source {
            Some(f) => assemble_load(&mesh, &dofmap, f, op.system.load_time(t)),
            None => zero_load.clone(),
        };
        let rhs = op.system.rhs(&u, &load)?;
        let (next, report) = match &op.linear {
            None => {
                let mut init = u.clone();
                for &i in &fixed_ids {
                    init[i] = boundary[i];
                }
                let vi = ExtragradConfig { omega: op.omega, ..vi_cfg };
                let (next, report) = solve_vi(&op.system.matrix, &rhs, &init, &vi, &bounds, &fixed)
                    .map_err(|source| Error::StepFailed { step: n, source })?;
                if !report.converged {
                    warn!("step {n}: extragradient stopped after {} iterations, increment {:.3e}", report.iterations, report.increment);
                }
                (next, report)
            }
            Some(solver) => {
                let t0 = Instant::now();
                let next = solver.solve(&rhs, &boundary).map_err(|source| Error::StepFailed { step: n, source })?;
                (next, SolveReport::direct(t0.elapsed()))
            }
        };
        u = next;
        let (lambda_min, lambda_max) = nodal_eig_range(&u)?;
        debug!("step {n} t={t:.6} iters={} inc={:.3e} eig=[{lambda_min:.6}, {lambda_max:.6}]", report.iterations, report.increment);
        steps.push(StepRecord {
            n,
            t,
            iterations: report.iterations,
            increment: report.increment,
            converged: report.converged,
            lambda_min,
            lambda_max,
        });
        if let Some(ex) = &exact {
            let mut e = interpolate_tensor(&dofmap, |x| ex(x, t))?;
            e.axpy(-1.0, &u);
            energy_sum += analysis::tensor_form(&stiffness, &e, &e).max(0.0);
        }
        if config.store_fields {
            fields.push(u.clone());
        }
    }
    info!("finished {} steps in {:.2?}", steps.len(), start.elapsed());

    let t_end = config.steps() as f64 * config.dt;
    let errors = exact.as_ref().map(|ex| RunErrors {
        l2_error: analysis::l2_error(&mesh, &dofmap, &u, |x| ex(x, t_end)),
        energy_error: (config.dt * energy_sum).sqrt(),
    });
    Ok(Trajectory {
        config: config.clone(),
        spec,
        omega: op.omega,
        mesh,
        dofmap,
        forms,
        fixed,
        initial,
        final_field: u,
        fields,
        steps,
        initial_range,
        errors,
    })
}

pub const RUN_LOG_HEADER: &str = "n,t,iterations,increment,lambda_min,lambda_max";

pub fn write_run_log<W: Write>(out: &mut W, steps: &[StepRecord]) -> Result<()> {
    writeln!(out, "{RUN_LOG_HEADER}")?;
    for s in steps {
        writeln!(
            out,
            "{},{:.12e},{},{:.12e},{:.12e},{:.12e}",
            s.n, s.t, s.iterations, s.increment, s.lambda_min, s.lambda_max
        )?;
    }
    Ok(())
}

pub fn field_csv_header() -> String {
    format!("node,x,y,{},lambda_min,lambda_max", COMPONENT_NAMES.join(","))
}

pub fn write_field_csv<W: Write>(out: &mut W, dofmap: &DofMap, field: &NodalTensorField) -> Result<()> {
    writeln!(out, "{}", field_csv_header())?;
    for (i, v) in field.iter().enumerate() {
        let e = eig_sym3(v)?.eigenvalues;
        let x = dofmap.coords[i];
        write!(out, "{i},{:.12e},{:.12e}", x[0], x[1])?;
        for c in v.0 {
            write!(out, ",{c:.12e}")?;
        }
        writeln!(out, ",{:.12e},{:.12e}", e[0], e[2])?;
    }
    Ok(())
}

/// Mesh plus vertex values of the spectral extremes as legacy VTK.
pub fn write_eigen_vtk<W: Write>(out: &mut W, mesh: &TriMesh, field: &NodalTensorField) -> Result<()> {
    mesh.write_vtk(out)?;
    let nv = mesh.vertices.len();
    let eigs = field.0[..nv].iter().map(eig_sym3).collect::<std::result::Result<Vec<_>, _>>()?;
    writeln!(out, "POINT_DATA {nv}")?;
    for (name, k) in [("lambda_min", 0), ("lambda_max", 2)] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for e in &eigs {
            writeln!(out, "{:.12e}", e.eigenvalues[k])?;
        }
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Cross-section lines written for every run.
pub const CROSS_SECTIONS: [(&str, Line); 2] =
    [("cross_section_diagonal.csv", Line::Diagonal), ("cross_section_y0.8.csv", Line::Horizontal(0.8))];

/// Writes `run_log.csv`, `final_field.csv`, `final_eigenvalues.vtk`,
/// the cross sections and, when errors were tracked, `errors.csv`.
pub fn emit_outputs(traj: &Trajectory, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut log = create(dir, "run_log.csv")?;
    write_run_log(&mut log, &traj.steps)?;
    log.flush()?;
    let mut f = create(dir, "final_field.csv")?;
    write_field_csv(&mut f, &traj.dofmap, &traj.final_field)?;
    f.flush()?;
    for (name, line) in CROSS_SECTIONS {
        let mut out = create(dir, name)?;
        let samples = if traj.final_field.is_empty() {
            Vec::new()
        } else {
            analysis::cross_section(&traj.mesh, &traj.dofmap, &traj.final_field, line, analysis::CROSS_SECTION_SAMPLES)?
        };
        analysis::write_cross_section_csv(&mut out, &samples)?;
        out.flush()?;
    }
    if !traj.final_field.is_empty() {
        let mut v = create(dir, "final_eigenvalues.vtk")?;
        write_eigen_vtk(&mut v, &traj.mesh, &traj.final_field)?;
        v.flush()?;
    }
    if let Some(r) = traj.error_record() {
        let mut e = create(dir, "errors.csv")?;
        analysis::write_records_csv(&mut e, &[r], Axis::H)?;
        e.flush()?;
    }
    Ok(())
}

/// Runs `base` at each level (values of `h` or `dt`) and collects error
/// records. Levels run concurrently; results keep the input order.
pub fn converge(base: &RunConfig, axis: Axis, levels: &[f64]) -> Result<Vec<ErrorRecord>> {
    if levels.len() < 2 {
        return Err(Error::Config("a convergence study needs at least two levels".into()));
    }
    let configs = levels
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            c.out_dir = None;
            c.store_fields = false;
            c.track_errors = true;
            match axis {
                Axis::H => {
                    let cells = (1.0 / v).round();
                    if !(cells >= 1.0) || ((1.0 / cells) - v).abs() > 1e-9 * v {
                        return Err(Error::Config(format!("h = {v} does not divide the unit square")));
                    }
                    c.p = cells as usize + 1;
                }
                Axis::Dt => c.dt = v,
            }
            c.validate()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let results: Vec<Result<ErrorRecord>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| {
                s.spawn(move || {
                    let traj = run(c)?;
                    traj.error_record()
                        .ok_or_else(|| Error::Config(format!("problem '{}' has no exact solution", c.problem)))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("convergence worker panicked")).collect()
    });
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    analysis::eoc(&records, axis)?;
    Ok(records)
}

pub fn emit_convergence(records: &[ErrorRecord], axis: Axis, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut out = create(dir, "convergence.csv")?;
    analysis::write_records_csv(&mut out, records, axis)?;
    out.flush()?;
    Ok(())
}
