//! Acceptance criteria, one `PASS`/`FAIL` line each with the measured
//! quantities. The process fails if any criterion fails.
//!
//! The full-scale run (criterion 9) is skipped unless `BP_TENSOR_FULL_SCALE=1`.

use std::time::{Duration, Instant};

use bp_tensor::analysis::{self, Axis};
use bp_tensor::assembly::{apply_dirichlet, assemble_forms, Coefficients};
use bp_tensor::mesh2d::{build_dofmap, build_structured, interpolate_tensor};
use bp_tensor::problems::{self, body_factors, inflow_tensors, AtanOrder, BODY_CENTERS};
use bp_tensor::runner::{run, run_spec, OmegaRule, RunConfig, SchemeKind, Trajectory};
use bp_tensor::system::{build_system, Scheme};
use bp_tensor::tensor3::{clamp_project, eig_sym3, matmul, transpose, Bounds, Mat3, SymTensor3};
use bp_tensor::visolver::{solve_linear, solve_vi, ExtragradConfig};
use bp_tensor::NodalTensorField;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Nodal eigenvalue slack for bound preservation.
const BOUND_SLACK: f64 = 1e-10;
/// Minimal baseline overshoot counted as a violation.
const VIOLATION_THRESHOLD: f64 = 1e-4;
const TEMPORAL_EOC: (f64, f64) = (0.8, 1.2);
const SPATIAL_EOC_P1: (f64, f64) = (1.25, 1.85);
const SPATIAL_EOC_P2: (f64, f64) = (2.2, 2.8);
const STABILITY_REL_MARGIN: f64 = 1e-8;
const PROJECTION_TOL: f64 = 1e-9;
const PROJECTION_CANDIDATES: usize = 128;
const VI_LINEAR_REL_TOL: f64 = 1e-8;
const DATA_TOL: f64 = 1e-12;
const FULL_SCALE_MAX_ITERS: usize = 50;
const RUN_BUDGET: Duration = Duration::from_secs(300);
/// Extragradient step `ω = c/‖A‖₂` used wherever the trajectory itself is
/// measured (see the README on step-length choice).
const OMEGA_SCALE: f64 = 0.9;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!("[acceptance {id}] {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn reduced(problem: &str, scheme: SchemeKind) -> RunConfig {
    let mut c = RunConfig::for_problem(problem).unwrap();
    c.scheme = scheme;
    c.p = 41;
    c.dt = 2e-3;
    c.t_final = 1.0;
    c.omega = OmegaRule::NormScaled(OMEGA_SCALE);
    c
}

fn step_extremes(t: &Trajectory) -> (f64, f64) {
    t.eig_range()
}

fn criterion_1_bound_preservation() -> bool {
    let mut all = true;
    let mut lines = Vec::new();
    let cases: Vec<(&str, SchemeKind)> = ["circular-discontinuous", "solid-body-rotation"]
        .into_iter()
        .flat_map(|p| [(p, SchemeKind::BpEuler), (p, SchemeKind::BpCn)])
        .collect();
    let results: Vec<(Trajectory, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .map(|(problem, scheme)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let traj = run(&reduced(problem, *scheme)).unwrap();
                    (traj, start.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for ((problem, scheme), (traj, elapsed)) in cases.iter().zip(&results) {
        let (lo, hi) = step_extremes(traj);
        let per_step_ok =
            traj.steps.iter().all(|s| s.lambda_min >= -BOUND_SLACK && s.lambda_max <= 1.0 + BOUND_SLACK);
        let ok = per_step_ok && lo >= -BOUND_SLACK && hi <= 1.0 + BOUND_SLACK && *elapsed < RUN_BUDGET;
        all &= ok;
        lines.push(format!(
            "{problem}/{scheme} range [{lo:.3e}, {hi:.12}] steps {} max iters {} in {elapsed:.1?}",
            traj.steps.len(),
            traj.max_iterations()
        ));
    }
    report(1, "bound preservation", all, &lines.join("; "));
    all
}

fn criterion_2_baseline_violation() -> bool {
    let traj = run(&reduced("solid-body-rotation", SchemeKind::CipEuler)).unwrap();
    let (lo, hi) = step_extremes(&traj);
    let ok = lo < -VIOLATION_THRESHOLD || hi > 1.0 + VIOLATION_THRESHOLD;
    report(2, "CIP-Euler leaves the bounds", ok, &format!("nodal eigenvalue range over all steps [{lo:.6e}, {hi:.6}]"));
    ok
}

fn in_range(v: f64, r: (f64, f64)) -> bool {
    v >= r.0 && v <= r.1
}

fn criterion_3_temporal_order() -> bool {
    let mut c = RunConfig::for_problem("circular-smooth").unwrap();
    c.degree = 1;
    c.p = 51;
    c.t_final = 4.0;
    c.omega = OmegaRule::NormScaled(OMEGA_SCALE);
    let start = Instant::now();
    let records = bp_tensor::runner::converge(&c, Axis::Dt, &[0.1, 0.05, 0.025, 0.0125]).unwrap();
    let eoc = analysis::eoc(&records, Axis::Dt).unwrap();
    let finer = &eoc[1..];
    let ok = finer.iter().all(|e| in_range(*e, TEMPORAL_EOC));
    let errors: Vec<String> = records.iter().map(|r| format!("{:.4e}", r.l2_error)).collect();
    report(
        3,
        "temporal EOC",
        ok,
        &format!("L2 errors {errors:?}, EOC {eoc:.3?}, finer pairs must lie in {TEMPORAL_EOC:?} ({:.1?})", start.elapsed()),
    );
    ok
}

/// `Δt = 1/500` for every level.
const SPATIAL_DT: f64 = 1.0 / 500.0;

fn spatial_study(degree: usize, range: (f64, f64)) -> bool {
    let mut c = RunConfig::for_problem("circular-smooth").unwrap();
    c.degree = degree;
    c.dt = SPATIAL_DT;
    c.t_final = 4.0;
    c.omega = OmegaRule::NormScaled(OMEGA_SCALE);
    let start = Instant::now();
    let records = bp_tensor::runner::converge(&c, Axis::H, &[0.1, 0.05, 0.025]).unwrap();
    let eoc = analysis::eoc(&records, Axis::H).unwrap();
    let ok = eoc.iter().all(|e| in_range(*e, range));
    let errors: Vec<String> = records.iter().map(|r| format!("{:.4e}", r.l2_error)).collect();
    report(
        4,
        &format!("spatial EOC P{degree}"),
        ok,
        &format!("L2 errors {errors:?}, EOC {eoc:.3?}, required {range:?} ({:.1?})", start.elapsed()),
    );
    ok
}

fn criterion_4_spatial_order() -> bool {
    let p1 = spatial_study(1, SPATIAL_EOC_P1);
    let p2 = spatial_study(2, SPATIAL_EOC_P2);
    p1 && p2
}

fn criterion_5_stability_audit() -> bool {
    let mut all = true;
    let mut lines = Vec::new();
    let mut base = RunConfig::for_problem("circular-discontinuous").unwrap();
    base.p = 21;
    base.dt = 1e-2;
    base.t_final = 0.5;
    base.store_fields = true;
    base.omega = OmegaRule::NormScaled(OMEGA_SCALE);

    let mut toy = base.clone();
    toy.gamma = 0.0;
    let mut toy_spec = toy.problem_spec().unwrap();
    toy_spec.coefficients.velocity = Coefficients::zero_velocity();
    let mut solid = base.clone();
    solid.problem = "solid-body-rotation".into();
    solid.gamma = 1e-3;
    let runs = [
        ("pure-mass", run_spec(&toy, toy_spec).unwrap()),
        ("circular-discontinuous", run(&base).unwrap()),
        ("solid-body-rotation", run(&solid).unwrap()),
    ];
    for (name, traj) in &runs {
        let audit = traj.audit_stability().unwrap();
        let ok = audit.holds(STABILITY_REL_MARGIN);
        all &= ok;
        lines.push(format!("{name} lhs {:.6e} rhs {:.6e} margin {:.3e}", audit.lhs, audit.rhs, audit.margin));
    }
    report(5, "stability inequality", all, &lines.join("; "));
    all
}

fn random_rotation(rng: &mut StdRng) -> Mat3 {
    let mut q = [[0.0; 3]; 3];
    for i in 0..3 {
        loop {
            let mut v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            for prev in q.iter().take(i) {
                let d: f64 = (0..3).map(|k| v[k] * prev[k]).sum();
                for k in 0..3 {
                    v[k] -= d * prev[k];
                }
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-3 {
                q[i] = v.map(|x| x / n);
                break;
            }
        }
    }
    q
}

fn from_factors(q: &Mat3, lambda: [f64; 3]) -> SymTensor3 {
    let d = [[lambda[0], 0.0, 0.0], [0.0, lambda[1], 0.0], [0.0, 0.0, lambda[2]]];
    SymTensor3::from_matrix(&matmul(&matmul(&transpose(q), &d), q))
}

fn criterion_6_projection_oracle() -> bool {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_admissibility = 0.0f64;
    for _ in 0..100 {
        let v = SymTensor3(std::array::from_fn(|_| rng.gen_range(-3.0..3.0)));
        let eps = rng.gen_range(-1.0..0.5);
        let bounds = Bounds::new(eps, eps + rng.gen_range(0.05..2.0)).unwrap();
        let p = clamp_project(&v, &bounds).unwrap();
        let e = eig_sym3(&p).unwrap().eigenvalues;
        worst_admissibility = worst_admissibility.max(bounds.eps() - e[0]).max(e[2] - bounds.kappa());
        let dist = (v - p).frobenius_norm();
        let (eps, kappa) = (bounds.eps(), bounds.kappa());
        for k in 0..PROJECTION_CANDIDATES {
            let w = if k % 2 == 0 {
                // anywhere in the admissible set
                from_factors(&random_rotation(&mut rng), std::array::from_fn(|_| rng.gen_range(eps..=kappa)))
            } else {
                // admissible points close to the projection
                let n = SymTensor3(std::array::from_fn(|_| rng.gen_range(-1e-2..1e-2)));
                clamp_project(&(p + n), &bounds).unwrap()
            };
            worst_gap = worst_gap.max(dist - (v - w).frobenius_norm());
        }
    }
    let ok = worst_gap <= PROJECTION_TOL && worst_admissibility <= PROJECTION_TOL;
    report(
        6,
        "projection is the nearest admissible point",
        ok,
        &format!(
            "100 tensors x {PROJECTION_CANDIDATES} candidates, max(dist(V,P) - dist(V,W)) = {worst_gap:.3e}, max bound excess {worst_admissibility:.3e}"
        ),
    );
    ok
}

fn criterion_7_vi_matches_linear_when_inactive() -> bool {
    let spec = problems::circular_discontinuous();
    let mesh = build_structured(21, spec.domain).unwrap();
    let dm = build_dofmap(&mesh, 1, |x, n| spec.is_inflow(x, n)).unwrap();
    let wide = Bounds::new(-1e30, 1e30).unwrap();
    let bvals = interpolate_tensor(&dm, |x| (spec.boundary)(x, 0.0)).unwrap();
    let dir = apply_dirichlet(&dm, spec.dirichlet, &bvals, &wide).unwrap();
    let mut u0 = interpolate_tensor(&dm, |x| (spec.initial)(x)).unwrap();
    dir.impose(&mut u0);
    let forms = assemble_forms(&mesh, &dm, &spec.coefficients, 0.0).unwrap();
    let sys = build_system(&forms, spec.defaults.dt, Scheme::Euler).unwrap();
    let rhs = sys.rhs(&u0, &NodalTensorField::zeros(dm.len())).unwrap();

    let linear = solve_linear(&sys.matrix, &rhs, &dir.fixed, &dir.values).unwrap();
    let omega = OMEGA_SCALE / sys.matrix.spectral_norm_estimate(500);
    let cfg = ExtragradConfig { omega, tol: 1e-13, max_iters: 100_000 };
    let (vi, rep) = solve_vi(&sys.matrix, &rhs, &u0, &cfg, &wide, &dir.fixed).unwrap();
    let mut diff = vi.clone();
    diff.axpy(-1.0, &linear);
    let rel = diff.l2_norm() / linear.l2_norm();
    let ok = rel <= VI_LINEAR_REL_TOL && rep.converged;
    report(
        7,
        "VI equals linear solve with inactive bounds",
        ok,
        &format!("relative l2 difference {rel:.3e} after {} iterations (omega {omega:.3e})", rep.iterations),
    );
    ok
}

fn orthogonality_defect(q: &Mat3) -> f64 {
    let qqt = matmul(q, &transpose(q));
    let mut d = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            d = d.max((qqt[i][j] - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    d
}

fn criterion_8_data_integrity() -> bool {
    let mut ok = true;
    let mut worst_reconstruct = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut eig_ok = true;
    for f in inflow_tensors() {
        let m = f.tensor();
        let r = f.reconstruct();
        for i in 0..3 {
            for j in 0..3 {
                worst_reconstruct = worst_reconstruct.max((f.matrix[i][j] - r.get(i, j)).abs());
            }
        }
        worst_trace = worst_trace.max((m.trace() - 1.0).abs());
        let e = eig_sym3(&m).unwrap().eigenvalues;
        eig_ok &= e[0] >= -DATA_TOL && e[2] <= 1.0 + DATA_TOL;
    }
    // solid bodies: displayed frames are orthogonal and the spectrum is the
    // displayed one, at sample points across each disc
    let mut worst_frame = 0.0f64;
    let mut worst_spectrum = 0.0f64;
    let mut body_eig_ok = true;
    let mut rng = StdRng::seed_from_u64(8);
    for (k, _) in BODY_CENTERS.iter().enumerate() {
        for _ in 0..200 {
            let (x, y) = loop {
                let (x, y): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if x.hypot(y) <= 1.0 {
                    break (x, y);
                }
            };
            let Some((q, mut lambda)) = body_factors(k, x, y, AtanOrder::AsPrinted) else { continue };
            worst_frame = worst_frame.max(orthogonality_defect(&q));
            let t = problems::body_tensor(k, x, y, AtanOrder::AsPrinted);
            let mut e = eig_sym3(&t).unwrap().eigenvalues;
            lambda.sort_by(f64::total_cmp);
            e.sort_by(f64::total_cmp);
            for i in 0..3 {
                worst_spectrum = worst_spectrum.max((e[i] - lambda[i]).abs());
                body_eig_ok &= lambda[i] >= -DATA_TOL && lambda[i] <= 1.0 + DATA_TOL;
            }
        }
    }
    ok &= worst_reconstruct <= DATA_TOL && worst_trace <= DATA_TOL && eig_ok;
    ok &= worst_frame <= DATA_TOL && worst_spectrum <= DATA_TOL && body_eig_ok;
    report(
        8,
        "displayed data",
        ok,
        &format!(
            "inflow reconstruction {worst_reconstruct:.1e}, trace {worst_trace:.1e}, eigenvalues in [0,1] {eig_ok}; bodies frame {worst_frame:.1e}, spectrum {worst_spectrum:.1e}, eigenvalues in [0,1] {body_eig_ok}"
        ),
    );
    ok
}

fn criterion_9_full_scale() -> bool {
    let c = RunConfig::for_problem("circular-discontinuous").unwrap();
    let start = Instant::now();
    let traj = run(&c).unwrap();
    let (lo, hi) = traj.eig_range();
    let iters = traj.max_iterations();
    let ok = lo >= -BOUND_SLACK && hi <= 1.0 + BOUND_SLACK && iters <= FULL_SCALE_MAX_ITERS;
    report(
        9,
        "full-scale circular-discontinuous",
        ok,
        &format!("range [{lo:.3e}, {hi:.12}], max VI iterations {iters}, omega {}, {:.1?}", traj.omega, start.elapsed()),
    );
    ok
}

type Criterion = (u32, fn() -> bool);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, criterion_1_bound_preservation),
        (2, criterion_2_baseline_violation),
        (3, criterion_3_temporal_order),
        (4, criterion_4_spatial_order),
        (5, criterion_5_stability_audit),
        (6, criterion_6_projection_oracle),
        (7, criterion_7_vi_matches_linear_when_inactive),
        (8, criterion_8_data_integrity),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |id: u32| filter.is_empty() || filter.contains(&id);
    let mut failed = Vec::new();
    for (id, f) in criteria {
        if !selected(id) {
            continue;
        }
        // a panic counts as a failure of that criterion only
        if !std::panic::catch_unwind(f).unwrap_or_else(|_| {
            report(id, "panicked", false, "see message above");
            false
        }) {
            failed.push(id);
        }
    }
    if std::env::var("BP_TENSOR_FULL_SCALE").as_deref() == Ok("1") {
        if !criterion_9_full_scale() {
            failed.push(9);
        }
    } else if selected(9) {
        println!("[acceptance 9] SKIP full-scale circular-discontinuous: set BP_TENSOR_FULL_SCALE=1");
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
