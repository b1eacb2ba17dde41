//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p shapemem-core --test acceptance`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapemem_core::asymptotics::{
    gamma_check_f, limit_evolution_runs, limit_minproblem, Arrow, LimitSchedule,
};
use shapemem_core::bvp::{spacetime_run, BvpProblem};
use shapemem_core::constitutive::{
    continuous_dependence_check, incremental_step, run_constitutive, temporal_error_study,
    verify_stability, PointTrajectory, StepData,
};
use shapemem_core::energy::{f_rho, grad_f_rho};
use shapemem_core::fem::space::assemble_a_nu;
use shapemem_core::fem::{galerkin_project, interp_constrained, FeSpace};
use shapemem_core::solver::{RadialQuadratic, SmoothObjective};
use shapemem_core::{DevTensor3, MaterialParams, PointState, StressPath, SymTensor3, TimeGrid};

struct Outcome {
    passed: bool,
    detail: String,
}

fn direction() -> SymTensor3 {
    SymTensor3::diag(2.0, -1.0, -1.0) * (1.0 / 6f64.sqrt())
}

fn ramp_unload() -> StressPath {
    StressPath::ramp_unload(direction(), 3.0, 1.0).unwrap()
}

fn random_dev(rng: &mut ChaCha8Rng, radius: f64) -> DevTensor3 {
    loop {
        let d = DevTensor3(std::array::from_fn(|_| rng.gen_range(-radius..radius)));
        if d.norm() <= radius {
            return d;
        }
    }
}

fn random_sym(rng: &mut ChaCha8Rng, scale: f64) -> SymTensor3 {
    SymTensor3(std::array::from_fn(|_| rng.gen_range(-scale..scale)))
}

fn run(p: &MaterialParams, path: &StressPath, steps: usize) -> PointTrajectory {
    run_constitutive(
        p,
        &p.dissipation(),
        path,
        &TimeGrid::uniform(1.0, steps).unwrap(),
        &PointState::default(),
    )
    .unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut count, mut ok) = (f64::NEG_INFINITY, 0, true);
    for rho in [0.0, 0.1] {
        let p = MaterialParams {
            rho,
            ..Default::default()
        };
        let pairs: Vec<_> = (0..100)
            .map(|_| {
                let a = StepData {
                    sigma: random_sym(&mut rng, 3.0),
                    z_prev: random_dev(&mut rng, 1.0),
                };
                let b = StepData {
                    sigma: random_sym(&mut rng, 3.0),
                    z_prev: random_dev(&mut rng, 1.0),
                };
                (a, b)
            })
            .collect();
        for row in continuous_dependence_check(&p, &p.dissipation(), &pairs).unwrap() {
            worst = worst.max(row.lhs - row.rhs);
            ok &= row.holds;
            count += 1;
        }
    }
    let t = start.elapsed();
    Outcome {
        passed: ok && t < Duration::from_secs(10),
        detail: format!("{count} pairs, max(lhs - rhs) = {worst:.3e}, {t:.2?}"),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let p = MaterialParams {
        rho: 0.1,
        ..Default::default()
    };
    let taus: Vec<f64> = (4..=8).map(|k| 0.5f64.powi(k)).collect();
    let s = temporal_error_study(
        &p,
        &p.dissipation(),
        &ramp_unload(),
        1.0,
        &taus,
        1.0 / 2048.0,
    )
    .unwrap();
    let t = start.elapsed();
    let order = s.order.unwrap_or(f64::NAN);
    Outcome {
        passed: order >= 0.45 && t < Duration::from_secs(60),
        detail: format!(
            "fitted order {order:.4}, errors {:?}, {t:.2?}",
            s.rows
                .iter()
                .map(|r| format!("{:.3e}", r.1))
                .collect::<Vec<_>>()
        ),
    }
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut shrink_ok = true;
    let mut ratios = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for rho in [0.0, 0.1] {
        let p = MaterialParams {
            rho,
            ..Default::default()
        };
        let mut prev_gap: Option<f64> = None;
        for n in [16, 32, 64, 128, 256] {
            let tr = run(&p, &ramp_unload(), n);
            worst = worst.max(
                tr.ledger
                    .iter()
                    .map(|l| l.residual)
                    .fold(f64::NEG_INFINITY, f64::max),
            );
            let gap = tr
                .ledger
                .iter()
                .map(|l| l.residual.abs())
                .fold(0.0, f64::max);
            if let Some(g) = prev_gap {
                ratios.push(gap / g);
                shrink_ok &= gap <= 0.75 * g;
            }
            prev_gap = Some(gap);
        }
        for _ in 0..10 {
            let mut bp = vec![(0.0, SymTensor3::zero())];
            for k in 1..=4 {
                bp.push((0.25 * k as f64, random_sym(&mut rng, 3.0)));
            }
            let tr = run(&p, &StressPath::new(bp).unwrap(), 64);
            worst = worst.max(
                tr.ledger
                    .iter()
                    .map(|l| l.residual)
                    .fold(f64::NEG_INFINITY, f64::max),
            );
        }
    }
    Outcome {
        passed: worst <= 1e-10 && shrink_ok,
        detail: format!(
            "max one-sided residual {worst:.3e}, gap ratios per halving {:?}",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut all = true;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for rho in [0.0, 0.1] {
        let p = MaterialParams {
            rho,
            ..Default::default()
        };
        let d = p.dissipation();
        let mut bp = vec![(0.0, SymTensor3::zero())];
        for k in 1..=4 {
            bp.push((0.25 * k as f64, random_sym(&mut rng, 3.0)));
        }
        for path in [ramp_unload(), StressPath::new(bp).unwrap()] {
            let tr = run(&p, &path, 32);
            for (i, (s, sig)) in tr.states.iter().zip(&tr.stresses).enumerate() {
                let r = verify_stability(&p, &d, sig, s, 200, 1e-8, 1000 + i as u64);
                worst = worst.max(r.worst_violation);
                all &= r.passed;
                checked += 1;
            }
        }
    }
    let p = MaterialParams {
        rho: 0.1,
        ..Default::default()
    };
    let sigma = direction() * 2.2;
    let good = incremental_step(&p, &p.dissipation(), &sigma, &DevTensor3::zero()).unwrap();
    let bad = PointState {
        eps: good.eps,
        z: good.z + sigma.dev() * (0.1 / sigma.dev().norm()),
    };
    let report = verify_stability(&p, &p.dissipation(), &sigma, &bad, 200, 1e-8, 7);
    let flagged = !report.passed && report.worst_violation > 0.0;
    Outcome {
        passed: all && flagged,
        detail: format!("{checked} states, worst violation {worst:.3e}, perturbed state flagged: {flagged} (violation {:.3e})", report.worst_violation),
    }
}

/// Reduced step objective written out independently of the library.
fn oracle_objective(p: &MaterialParams, sdev: &[f64; 5], zbar: &[f64; 5], z: &[f64; 5]) -> f64 {
    let r = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let f = if p.rho == 0.0 {
        if r > p.c3 {
            return f64::INFINITY;
        }
        p.c1 * r + p.c2 * r * r
    } else {
        let (s, dl) = (r - p.c3, 0.1 * p.c3);
        let phi = if s <= 0.0 {
            0.0
        } else if s <= dl {
            s.powi(3) / (dl * dl)
        } else if s <= 2.0 * dl {
            let w = s - dl;
            dl + 3.0 * w + 3.0 * w * w / dl - w.powi(3) / (dl * dl)
        } else {
            6.0 * dl + 6.0 * (s - 2.0 * dl)
        };
        p.c1 * ((p.rho * p.rho + r * r).sqrt() - p.rho) + p.c2 * r * r + phi / p.rho
    };
    let lin: f64 = sdev.iter().zip(z).map(|(a, b)| a * b).sum();
    let dz = z
        .iter()
        .zip(zbar)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    f - lin + p.dissipation_radius * dz
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_steps: f64 = 0.0;
    let mut count = 0;
    for rho in [0.0, 0.1] {
        let p = MaterialParams {
            rho,
            ..Default::default()
        };
        for _ in 0..20 {
            let sigma = random_sym(&mut rng, 3.0);
            let zbar = random_dev(&mut rng, 0.9);
            let z = incremental_step(&p, &p.dissipation(), &sigma, &zbar)
                .unwrap()
                .z;
            let sd = sigma.dev();
            let e1 = sd * (1.0 / sd.norm());
            let w = zbar - e1 * zbar.dot(&e1);
            let e2 = if w.norm() > 1e-12 {
                w * (1.0 / w.norm())
            } else {
                DevTensor3::basis(if e1[0].abs() < 0.9 { 0 } else { 1 })
            };
            let e2 = {
                let q = e2 - e1 * e2.dot(&e1);
                q * (1.0 / q.norm())
            };
            let half = 1.2 * p.c3;
            let step = 2.0 * half / 399.0;
            let mut best = (f64::INFINITY, 0.0, 0.0);
            for i in 0..400 {
                for j in 0..400 {
                    let (a, b) = (-half + step * i as f64, -half + step * j as f64);
                    // at rho = 0 grid points outside the ball are evaluated at their radial projection
                    let r = a.hypot(b);
                    let (a, b) = if p.rho == 0.0 && r > p.c3 {
                        (a * p.c3 / r, b * p.c3 / r)
                    } else {
                        (a, b)
                    };
                    let zz = e1 * a + e2 * b;
                    let v = oracle_objective(&p, &sd.0, &zbar.0, &zz.0);
                    if v < best.0 {
                        best = (v, a, b);
                    }
                }
            }
            let (a, b) = (z.dot(&e1), z.dot(&e2));
            let off_plane = (z - e1 * a - e2 * b).norm();
            let steps = ((a - best.1).abs().max((b - best.2).abs()) + off_plane) / step;
            worst_steps = worst_steps.max(steps);
            count += 1;
        }
    }
    Outcome {
        passed: worst_steps <= 2.0,
        detail: format!("{count} instances, worst distance {worst_steps:.3} grid steps"),
    }
}

fn criterion_6() -> Outcome {
    let p = MaterialParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut max_point: f64 = 0.0;
    let mut paths = vec![
        ramp_unload(),
        StressPath::ramp_unload(direction(), 6.0, 1.0).unwrap(),
    ];
    for _ in 0..10 {
        let mut bp = vec![(0.0, SymTensor3::zero())];
        for k in 1..=4 {
            bp.push((0.25 * k as f64, random_sym(&mut rng, 5.0)));
        }
        paths.push(StressPath::new(bp).unwrap());
    }
    for path in &paths {
        for n in [16, 64] {
            max_point = max_point.max(
                run(&p, path, n)
                    .states
                    .iter()
                    .map(|s| s.z.norm())
                    .fold(0.0, f64::max),
            );
        }
    }
    let pb = BvpProblem::tension_cube(4.0);
    let r = spacetime_run(&pb, 0.0, 0.01, 0.125, 4).unwrap();
    let max_bvp = r
        .record
        .states
        .iter()
        .map(|s| s.max_z_norm())
        .fold(0.0, f64::max);
    let (coarse, fine) = (
        FeSpace::unit_cube(2).unwrap(),
        FeSpace::unit_cube(4).unwrap(),
    );
    let mut max_interp: f64 = 0.0;
    for k in 0..50 {
        let mut z = vec![0.0; 5 * fine.n_nodes()];
        for n in 0..fine.n_nodes() {
            let mut v = random_dev(&mut rng, 1.0);
            if k % 2 == 0 {
                v = v * (p.c3 / v.norm());
            }
            z[5 * n..5 * n + 5].copy_from_slice(&v.0);
        }
        let zc = interp_constrained(&coarse, &fine, &z).unwrap();
        max_interp = max_interp.max(
            (0..coarse.n_nodes())
                .map(|n| DevTensor3::from_slice(&zc[5 * n..]).norm())
                .fold(0.0, f64::max),
        );
    }
    let lim = p.c3 + 1e-14;
    Outcome {
        passed: max_point <= lim && max_bvp <= lim && max_interp <= lim && max_bvp > 0.5,
        detail: format!("max |z|: constitutive {max_point:.17}, BVP {max_bvp:.17}, interpolant {max_interp:.17}"),
    }
}

fn criterion_7() -> Outcome {
    let p = MaterialParams {
        nu: 0.01,
        rho: 0.1,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_orth, mut worst_ratio): (f64, f64) = (0.0, 0.0);
    let mut count = 0;
    for n in [2, 4] {
        let (cs, fs) = (
            FeSpace::unit_cube(n).unwrap(),
            FeSpace::unit_cube(2 * n).unwrap(),
        );
        let (ca, fa) = (assemble_a_nu(&cs, &p), assemble_a_nu(&fs, &p));
        for _ in 0..10 {
            let x: Vec<f64> = (0..fs.n_constrained())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let y = fs.extend(&x);
            let proj = galerkin_project((&cs, &ca), (&fs, &fa), &y).unwrap();
            worst_orth = worst_orth.max(proj.orthogonality_residual);
            worst_ratio = worst_ratio.max(ca.energy(&proj.coarse) / fa.energy(&y));
            count += 1;
        }
    }
    Outcome {
        passed: worst_orth <= 1e-10 && worst_ratio < 1.0,
        detail: format!(
            "{count} fields, worst orthogonality {worst_orth:.3e}, max A(py)/A(y) {worst_ratio:.4}"
        ),
    }
}

fn criterion_8() -> Outcome {
    let p = MaterialParams::default();
    let tr = run(&p, &ramp_unload(), 64);
    let last = tr.states.last().unwrap();
    let diss = tr.total_dissipation();
    let peak_z = tr.states.iter().map(|s| s.z.norm()).fold(0.0, f64::max);
    Outcome {
        passed: last.z.norm() <= 1e-6 && diss >= 0.1 && last.eps.norm() <= 1e-12,
        detail: format!(
            "final |z| {:.3e}, final |eps| {:.3e}, peak |z| {peak_z:.4}, dissipation {diss:.6}",
            last.z.norm(),
            last.eps.norm()
        ),
    }
}

fn criterion_9() -> Outcome {
    let p = MaterialParams::default();
    let rhos: Vec<f64> = (1..=12).map(|k| 10f64.powi(-k)).collect();
    let radii: Vec<f64> = (0..50).map(|j| 1.5 * p.c3 * j as f64 / 49.0).collect();
    let full = gamma_check_f(&p, &rhos, &radii).unwrap();
    let at4 = gamma_check_f(&p, &rhos[..4], &radii).unwrap();
    Outcome {
        passed: full.monotone
            && full.zero_at_origin
            && at4.final_gap_inside <= 1e-3
            && full.final_min_outside > 1e6,
        detail: format!(
            "min increment {:.3e}, gap inside at rho=1e-4 {:.3e}, min outside at rho=1e-12 {:.3e}",
            full.min_increment, at4.final_gap_inside, full.final_min_outside
        ),
    }
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let pb = BvpProblem::tension_cube(2.5);
    let nu = vec![0.01];
    let sched = |arrow, rho: Vec<f64>, tau: Vec<f64>, divisions: Vec<usize>| LimitSchedule {
        arrow,
        rho,
        nu: nu.clone(),
        tau,
        divisions,
        target: None,
    };
    let rhos = vec![0.1, 0.05, 0.025];
    let taus = vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
    let ns = vec![2, 4, 8];
    let mut lines = Vec::new();
    let mut ok = true;
    let mins = [
        sched(Arrow::MinH, vec![0.1], vec![0.5], ns.clone()),
        sched(Arrow::MinRho, rhos.clone(), vec![0.5], vec![4]),
        sched(Arrow::MinJoint, rhos.clone(), vec![0.5], ns.clone()),
    ];
    for s in &mins {
        let t = limit_minproblem(&pb, s).unwrap();
        let good = t.inter_level_decreasing();
        ok &= good;
        lines.push(format!(
            "{:?} {:?} {}",
            s.arrow,
            t.inter_level
                .iter()
                .map(|d| format!("{d:.3e}"))
                .collect::<Vec<_>>(),
            good
        ));
    }
    let evos = [
        sched(Arrow::EvoH, vec![0.1], vec![taus[0]], ns.clone()),
        sched(Arrow::EvoTau, vec![0.1], taus.clone(), vec![4]),
        sched(Arrow::EvoTauH, vec![0.1], taus.clone(), ns.clone()),
        sched(Arrow::EvoRho, rhos.clone(), vec![taus[1]], vec![4]),
        sched(Arrow::EvoJoint, rhos.clone(), taus.clone(), ns.clone()),
        sched(Arrow::EvoRhoH, rhos.clone(), vec![taus[2]], ns.clone()),
    ];
    let mut bounds = 0;
    for s in &evos {
        let (t, runs) = limit_evolution_runs(&pb, s).unwrap();
        let bound_ok = runs.iter().all(|r| r.record.bound.holds);
        bounds += runs.len();
        let good = t.inter_level_decreasing() && bound_ok;
        ok &= good;
        lines.push(format!(
            "{:?} {:?} bound {} {}",
            s.arrow,
            t.inter_level
                .iter()
                .map(|d| format!("{d:.3e}"))
                .collect::<Vec<_>>(),
            bound_ok,
            good
        ));
    }
    let t = start.elapsed();
    Outcome {
        passed: ok && t < Duration::from_secs(600),
        detail: format!(
            "{t:.1?}, a priori bound checked on {bounds} runs; {}",
            lines.join("; ")
        ),
    }
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    let (mut worst_f, mut worst_step): (f64, f64) = (0.0, 0.0);
    let p = MaterialParams {
        rho: 0.1,
        ..Default::default()
    };
    let sample = |rng: &mut ChaCha8Rng| loop {
        let a = random_dev(rng, 1.5);
        if a.norm() >= 0.05 {
            return a;
        }
    };
    for _ in 0..100 {
        let a = sample(&mut rng);
        let g = grad_f_rho(&p, &a).unwrap();
        let mut fd = DevTensor3::zero();
        for k in 0..5 {
            let (mut ap, mut am) = (a, a);
            ap[k] += h;
            am[k] -= h;
            fd[k] = (f_rho(&p, &ap).unwrap() - f_rho(&p, &am).unwrap()) / (2.0 * h);
        }
        worst_f = worst_f.max((fd - g).norm() / g.norm());
    }
    for _ in 0..100 {
        let a = sample(&mut rng);
        let s = RadialQuadratic {
            curvature: rng.gen_range(1.0..20.0),
            linear: random_dev(&mut rng, 3.0),
            regularized: p.regularized(),
        };
        let g = s.gradient(&a);
        let mut fd = DevTensor3::zero();
        for k in 0..5 {
            let (mut ap, mut am) = (a, a);
            ap[k] += h;
            am[k] -= h;
            fd[k] = (s.value(&ap) - s.value(&am)) / (2.0 * h);
        }
        worst_step = worst_step.max((fd - g).norm() / g.norm());
    }
    Outcome {
        passed: worst_f <= 1e-6 && worst_step <= 1e-6,
        detail: format!(
            "worst relative error: F_rho {worst_f:.3e}, step objective {worst_step:.3e}"
        ),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("single-step continuous dependence", criterion_1),
        ("temporal rate", criterion_2),
        ("discrete one-sided energy inequality", criterion_3),
        ("stability certification", criterion_4),
        ("step solver vs planar brute force", criterion_5),
        ("constraint exactness", criterion_6),
        ("Galerkin projector", criterion_7),
        ("superelastic hysteresis", criterion_8),
        ("monotone regularized family", criterion_9),
        ("BVP convergence tables", criterion_10),
        ("gradient checks", criterion_11),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion-{}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|s| id.contains(s.as_str()) || name.contains(s.as_str()))
        {
            continue;
        }
        let o = f();
        println!(
            "{} {id:>12} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
