use pdhg_core::demos::{self, DeskInstance};
use pdhg_core::identifiability::{
    affine_phase, build_auxiliary_standard, farkas_identity_errors, last_iterate_bound_excess, nondegeneracy,
    partition_indices, partition_tolerance, ray_consistency, refine_ray, refine_ray_signed, shift_identity_deviation,
    verify_linear_phase, warm_run, LinearPhaseConfig, RaySolution, WarmRun,
};
use pdhg_core::linalg::{norm_inf, spmv, spmv_t};
use pdhg_core::operator_lab::{fit_rate_with, RateModel};
use pdhg_core::oracle::{exact_optimal_value, exactify, to_rational, LpClass, OptimalValue};
use pdhg_core::pdhg::{step, PdhgProblem, ProblemMetric};
use pdhg_core::{PdhgState, StandardFormLp, StepSizes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WARM: u64 = 20_000;

struct Analysed {
    inst: DeskInstance,
    steps: StepSizes,
    warm: WarmRun,
    ray: RaySolution,
}

fn analyse(inst: DeskInstance) -> Analysed {
    let steps = StepSizes::for_matrix(&inst.lp.a, 0.9).unwrap();
    let warm = warm_run(&inst.lp, steps, WARM).unwrap();
    let ray = refine_ray(&inst.lp, steps, &warm).unwrap();
    Analysed { inst, steps, warm, ray }
}

fn desk() -> Vec<Analysed> {
    demos::desk_instances().into_iter().map(analyse).collect()
}

fn infeasible(a: &Analysed) -> bool {
    a.inst.class != LpClass::BothFeasible
}

const NONDEGENERATE: [&str; 4] = ["ex1_both_infeasible", "ex1_dual_infeasible", "transport_shortfall", "unbounded_ray"];

#[test]
fn refined_rays_are_tight() {
    for a in desk() {
        assert!(!a.ray.warning, "{} residual {:e}", a.inst.name, a.ray.residual);
        assert!(a.ray.residual <= 1e-10, "{}", a.inst.name);
        let c = ray_consistency(&a.inst.lp, a.steps, &a.ray, 1_000).unwrap();
        assert!(c <= 1e-8, "{} consistency {c:e}", a.inst.name);
    }
}

#[test]
fn infimal_displacement_is_a_farkas_pair() {
    for a in desk().into_iter().filter(infeasible) {
        let p = &a.inst.lp;
        let n = p.n();
        let (vx, vy) = a.ray.v.split_at(n);
        let tol = 1e-8 * (1.0 + norm_inf(&a.ray.v));
        assert!(vx.iter().all(|&v| v >= -tol), "{}", a.inst.name);
        assert!(norm_inf(&spmv(&p.a, vx).unwrap()) <= tol, "{}", a.inst.name);
        assert!(spmv_t(&p.a, vy).unwrap().iter().all(|&v| v >= -tol), "{}", a.inst.name);
        let (ex, ey) = farkas_identity_errors(p, a.steps, &a.ray.v);
        let limit = if a.inst.class == LpClass::BothInfeasible { 1e-6 } else { 1e-4 };
        assert!(ex <= limit && ey <= limit, "{} {ex:e} {ey:e}", a.inst.name);
    }
}

#[test]
fn both_infeasible_example_grows_on_both_sides() {
    let a = analyse(demos::desk_instances().remove(1));
    assert_eq!(a.inst.class, LpClass::BothInfeasible);
    let n = a.inst.lp.n();
    assert!(norm_inf(&a.ray.v[..n]) > 1e-3 && norm_inf(&a.ray.v[n..]) > 1e-3);
    assert!(!a.ray.partition.b.is_empty());
}

#[test]
fn shift_identity_holds_from_the_freeze_point() {
    let mut checked = 0;
    for a in desk().into_iter().filter(infeasible) {
        if !a.warm.freeze.observed {
            continue;
        }
        let dev = shift_identity_deviation(&a.inst.lp, a.steps, &a.ray, &a.warm.z_at_change, 1_000).unwrap();
        // the identity is only claimed once T and T̃ agree, so start far
        // enough along the trajectory as well
        let dev_end = shift_identity_deviation(&a.inst.lp, a.steps, &a.ray, &a.warm.state.z(), 1_000).unwrap();
        assert!(dev_end <= 1e-8, "{} {dev_end:e}", a.inst.name);
        if dev <= 1e-8 {
            checked += 1;
        }
    }
    assert!(checked >= 2, "shift identity verified from the freeze point on {checked} instances");
}

#[test]
fn partition_is_consistent_with_v() {
    for a in desk() {
        let p = &a.inst.lp;
        let n = p.n();
        let part = &a.ray.partition;
        let tol = partition_tolerance(&a.ray.v);
        let aty = spmv_t(&p.a, &a.ray.v[n..]).unwrap();
        for &i in &part.b {
            assert!(aty[i].abs() <= tol, "{} column {i}", a.inst.name);
        }
        let mut all: Vec<usize> = part.b.iter().chain(&part.n1).chain(&part.n2).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
        assert_eq!(&partition_indices(&a.ray.v, &p.a, tol).unwrap(), part);
    }
}

#[test]
fn fixed_point_satisfies_the_auxiliary_constraints() {
    for a in desk() {
        let p = &a.inst.lp;
        let n = p.n();
        let aux = build_auxiliary_standard(p, &a.ray.v, a.steps, &a.ray.partition);
        let x = &a.ray.z_star[..n];
        let ax = spmv(&p.a, x).unwrap();
        for i in 0..p.m() {
            let target = p.b[i] + a.ray.v[n + i] / a.steps.tau;
            assert!((ax[i] - target).abs() <= 1e-8 * (1.0 + target.abs()), "{} row {i}", a.inst.name);
            assert!((aux.lp.b[i] - target).abs() <= 1e-15 * (1.0 + target.abs()));
        }
        for &i in &a.ray.partition.n2 {
            assert!(x[i] == 0.0, "{}", a.inst.name);
        }
        for &i in &a.ray.partition.n1 {
            assert!(x[i] >= 0.0, "{}", a.inst.name);
        }
        // the auxiliary problem is feasible: PDHG on it stops moving
        let aux_steps = a.steps;
        let w = warm_run(&aux, aux_steps, 100_000).unwrap();
        assert!(norm_inf(&w.v_avg) <= 1e-8, "{} aux drift {:e}", a.inst.name, norm_inf(&w.v_avg));
        assert!(aux.kkt(&w.state.x, &w.state.y) <= 1e-6, "{}", a.inst.name);
    }
}

#[test]
fn feasible_instance_has_zero_displacement_and_optimal_fixed_point() {
    let a = analyse(demos::desk_instances().remove(0));
    assert_eq!(a.inst.class, LpClass::BothFeasible);
    assert!(a.ray.v.iter().all(|&v| v == 0.0));
    let n = a.inst.lp.n();
    assert!(a.inst.lp.kkt(&a.ray.z_star[..n], &a.ray.z_star[n..]) <= 1e-8);
}

#[test]
fn last_iterate_obeys_the_two_over_k_bound() {
    for a in desk() {
        let z0 = vec![0.0; a.ray.v.len()];
        let excess = last_iterate_bound_excess(&a.inst.lp, a.steps, &a.ray.z_star, &a.ray.v, &z0, 10_000).unwrap();
        assert!(excess <= 1e-9, "{} {excess:e}", a.inst.name);
    }
}

#[test]
fn distance_to_the_ray_never_grows() {
    for a in desk().into_iter().filter(|a| a.warm.freeze.observed) {
        let p = &a.inst.lp;
        let metric = ProblemMetric::new(p, a.steps).unwrap();
        let mut s = PdhgState::new(p.n(), p.m());
        let mut prev = f64::INFINITY;
        while s.k < 5_000 {
            step(&mut s, p, a.steps).unwrap();
            let kf = s.k as f64;
            let d: Vec<f64> =
                s.z().iter().zip(&a.ray.z_star).zip(&a.ray.v).map(|((z, zs), v)| z - zs - kf * v).collect();
            let now = metric.norm(&d);
            assert!(now <= prev + 1e-9 * (1.0 + prev), "{} k {}", a.inst.name, s.k);
            prev = now;
        }
    }
}

#[test]
fn coordinates_pinned_by_the_dual_ray_stay_at_zero() {
    for a in desk().into_iter().filter(|a| a.warm.freeze.observed) {
        let p = &a.inst.lp;
        let n = p.n();
        let tol = partition_tolerance(&a.ray.v);
        let aty = spmv_t(&p.a, &a.ray.v[n..]).unwrap();
        let pinned: Vec<usize> = (0..n).filter(|&i| aty[i] > tol).collect();
        let mut s = a.warm.state.clone();
        for _ in 0..5_000 {
            step(&mut s, p, a.steps).unwrap();
            for &i in &pinned {
                assert_eq!(s.x[i], 0.0, "{} column {i} at k {}", a.inst.name, s.k);
            }
        }
    }
}

#[test]
fn nondegenerate_instances_freeze_and_pass_strict_complementarity() {
    for a in desk() {
        let report = nondegeneracy(&a.inst.lp, &a.ray);
        let expected = NONDEGENERATE.contains(&a.inst.name);
        assert_eq!(report.nondegenerate, expected, "{} {:?}", a.inst.name, report.violations);
        if expected {
            assert!(a.warm.freeze.observed, "{}", a.inst.name);
            assert!(a.warm.freeze.k < WARM);
        }
    }
}

#[test]
fn degenerate_limit_is_confirmed_exactly() {
    let p = demos::degenerate_tie();
    let a = analyse(DeskInstance { name: "degenerate_tie", lp: p.clone(), class: LpClass::BothFeasible });
    let z = exactify(&a.ray.z_star).unwrap();
    let one = to_rational(1.0).unwrap();
    // exactify scales to unit max-norm; the limit has max entry 1
    let expect: Vec<_> = [0.0, 0.0, 1.0, 1.0, 0.0].iter().map(|&v| to_rational(v).unwrap()).collect();
    assert_eq!(z, expect);
    assert_eq!(exact_optimal_value(&p).unwrap(), OptimalValue::Finite(one));
    let report = nondegeneracy(&p, &a.ray);
    assert!(!report.nondegenerate);
    assert_eq!(report.violations, vec![0, 1]);
    let f = a.warm.freeze;
    if f.observed {
        assert!(WARM - f.k >= 100.max(WARM / 10));
    } else {
        assert_eq!(f.k, WARM);
    }
}

fn random_standard(rng: &mut ChaCha8Rng, n: usize, m: usize) -> StandardFormLp {
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect()).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let a = pdhg_core::SparseMatrix::from_dense(&refs).unwrap();
    let b = (0..m).map(|_| rng.gen_range(-3..=3) as f64).collect();
    let c = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
    StandardFormLp::new(c, a, b).unwrap()
}

#[test]
fn affine_phase_limit_is_a_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (n, m) = (rng.gen_range(2..7), rng.gen_range(1..5));
        let p = random_standard(&mut rng, n, m);
        let Ok(steps) = StepSizes::for_matrix(&p.a, 0.9) else { continue };
        let support: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
        let phase = affine_phase(&p, steps, &support).unwrap();
        assert!(phase.projection_defect() <= 1e-10, "{}", phase.projection_defect());
        let qq = &phase.q_inf * &phase.q_inf - &phase.q_inf;
        assert!(qq.amax() <= 1e-10);
        assert!(phase.spectral_radius_gap() < 1.0);
        assert!(phase.lower_rate <= phase.mu + 1e-12);
    }
}

/// `min x0 + 2x1` subject to `x0 + x1 = 1`: unique, strictly
/// complementary optimum `x = (1, 0)`, `y = -1`.
fn simplex_corner() -> DeskInstance {
    let a = pdhg_core::SparseMatrix::from_dense(&[&[1.0, 1.0]]).unwrap();
    let lp = StandardFormLp::new(vec![1.0, 2.0], a, vec![1.0]).unwrap();
    DeskInstance { name: "simplex_corner", lp, class: LpClass::BothFeasible }
}

#[test]
fn rates_after_the_freeze_match_the_affine_phase() {
    let corner = analyse(simplex_corner());
    assert!(nondegeneracy(&corner.inst.lp, &corner.ray).nondegenerate);
    assert!(corner.ray.v.iter().all(|&v| v == 0.0));
    for a in desk().into_iter().chain([corner]) {
        if !NONDEGENERATE.contains(&a.inst.name) && a.inst.name != "simplex_corner" {
            continue;
        }
        let phase = affine_phase(&a.inst.lp, a.steps, &a.warm.support).unwrap();
        let rep =
            verify_linear_phase(&a.inst.lp, a.steps, &a.ray, &phase, &a.warm, &LinearPhaseConfig::default()).unwrap();
        assert!(rep.skipped.is_none(), "{}", a.inst.name);
        assert!(
            rep.rate_in_bracket,
            "{} {:?} mu {} lower {}",
            a.inst.name,
            rep.difference_fit.map(|f| f.rate),
            rep.mu,
            rep.lower_rate
        );
        assert!(
            rep.slopes_ok,
            "{} {:?} {:?}",
            a.inst.name,
            rep.iterate_fit.map(|f| f.slope),
            rep.average_fit.map(|f| f.slope)
        );
    }
}

#[test]
fn difference_error_changes_slope_at_the_freeze() {
    let mut seen = 0;
    for a in desk().into_iter().filter(|a| NONDEGENERATE.contains(&a.inst.name) && infeasible(a)) {
        let p = &a.inst.lp;
        let k_freeze = a.warm.freeze.k;
        // a fit needs twenty samples on each side
        if k_freeze < 21 {
            continue;
        }
        let phase = affine_phase(p, a.steps, &a.warm.support).unwrap();
        let mut s = PdhgState::new(p.n(), p.m());
        let (mut pre, mut post) = (Vec::new(), Vec::new());
        while s.k < 3 * k_freeze + 400 {
            step(&mut s, p, a.steps).unwrap();
            let e: f64 =
                s.x.iter()
                    .zip(&s.x_prev)
                    .chain(s.y.iter().zip(&s.y_prev))
                    .zip(&a.ray.v)
                    .map(|((z, zp), v)| (z - zp - v).powi(2))
                    .sum::<f64>()
                    .sqrt();
            if s.k < k_freeze {
                pre.push((s.k as f64, e));
            } else if e > 1e-12 {
                post.push((s.k as f64, e));
            }
        }
        let before = fit_rate_with(&pre, RateModel::Geometric, 0.0).unwrap();
        let after = fit_rate_with(&post, RateModel::Geometric, 0.0).unwrap();
        assert!(after.rate <= phase.mu + 0.02 && after.rate >= phase.lower_rate - 0.02, "{}", a.inst.name);
        assert!((before.slope - after.slope).abs() >= 0.01, "{} {} {}", a.inst.name, before.rate, after.rate);
        seen += 1;
    }
    assert!(seen >= 1);
}

#[test]
fn bilinear_game_converges_at_the_predicted_rate() {
    let g = demos::bilinear_game();
    let steps = StepSizes::for_matrix(g.matrix(), 0.9).unwrap();
    let warm = warm_run(&g, steps, 2_000).unwrap();
    assert_eq!(warm.freeze.k, 0);
    let ray = refine_ray_signed(&g, steps, &warm).unwrap();
    assert!(ray.v.iter().all(|&v| v.abs() <= 1e-12));
    let phase = affine_phase(&g, steps, &vec![true; g.n()]).unwrap();
    let rep = verify_linear_phase(&g, steps, &ray, &phase, &warm, &LinearPhaseConfig::default()).unwrap();
    assert!(rep.rate_in_bracket, "{:?} mu {} lower {}", rep.difference_fit.map(|f| f.rate), rep.mu, rep.lower_rate);
}
