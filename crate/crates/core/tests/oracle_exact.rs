mod common;

use num_traits::Zero;
use pdhg_core::demos;
use pdhg_core::identifiability::{refine_ray, warm_run};
use pdhg_core::oracle::{
    classify_lp, decide_feasibility, exactify, to_rational, verify_certificate_exact, CertificateKind, ExactLp,
    ExactSource, Feasibility, LpClass, Rational, Relation,
};
use pdhg_core::pdhg::NoTrace;
use pdhg_core::{run, PdhgConfig, Status};
use proptest::prelude::*;

fn small_system() -> impl Strategy<Value = ExactLp> {
    (1usize..=3, 1usize..=5).prop_flat_map(|(n, rows)| {
        prop::collection::vec((prop::collection::vec(-3i32..=3, n), any::<bool>(), -3i32..=3), rows).prop_map(
            move |rows| {
                let mut sys = ExactLp::new(n);
                for (a, eq, b) in rows {
                    let rel = if eq { Relation::Eq } else { Relation::Ge };
                    sys.push(
                        a.iter().map(|&v| Rational::from_integer(v.into())).collect(),
                        rel,
                        Rational::from_integer(b.into()),
                    );
                }
                sys
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn elimination_agrees_with_vertex_enumeration(sys in small_system()) {
        let nonempty = common::to_polyhedron(&sys).is_nonempty();
        match decide_feasibility(&sys).unwrap() {
            Feasibility::Feasible(x) => {
                prop_assert!(nonempty);
                prop_assert!(sys.is_satisfied_by(&x));
            }
            Feasibility::Infeasible(m) => {
                prop_assert!(!nonempty);
                prop_assert!(sys.is_farkas_combination(&m));
            }
        }
    }

    #[test]
    fn positive_scaling_keeps_farkas_multipliers(sys in small_system(), s in 1i32..=7) {
        if let Feasibility::Infeasible(m) = decide_feasibility(&sys).unwrap() {
            let scaled: Vec<Rational> = m.iter().map(|v| v * Rational::from_integer(s.into())).collect();
            prop_assert!(sys.is_farkas_combination(&scaled));
            let flipped: Vec<Rational> = m.iter().map(|v| -v).collect();
            prop_assert!(!sys.is_farkas_combination(&flipped));
        }
    }
}

#[test]
fn desk_cells_match_vertex_enumeration() {
    for inst in demos::desk_instances() {
        let cls = classify_lp(&inst.lp).unwrap();
        assert_eq!(cls.class, inst.class, "{}", inst.name);
        let primal = common::standard_polyhedron(&inst.lp).is_nonempty();
        assert_eq!(primal, cls.primal.is_feasible(), "{}", inst.name);
        let dual = common::to_polyhedron(&inst.lp.dual_system().unwrap()).is_nonempty();
        assert_eq!(dual, cls.dual.is_feasible(), "{}", inst.name);
    }
}

#[test]
fn example1_cells_in_both_forms() {
    let cells = [
        ((0.0, 1.0), LpClass::BothFeasible),
        ((1.0, 1.0), LpClass::PrimalFeasDualInf),
        ((0.0, 2.0), LpClass::PrimalInfDualFeas),
        ((1.0, 2.0), LpClass::BothInfeasible),
    ];
    for ((a, b), class) in cells {
        assert_eq!(classify_lp(&demos::example1(a, b)).unwrap().class, class);
        assert_eq!(classify_lp(&demos::example1_standard(a, b).0).unwrap().class, class);
    }
}

#[test]
fn primal_rays_survive_exact_check() {
    for inst in demos::desk_instances() {
        if inst.class.expected_status() != Status::PrimalInfeasible && inst.class != LpClass::BothInfeasible {
            continue;
        }
        let cfg = PdhgConfig::for_matrix(&inst.lp.a, 0.9).unwrap();
        let out = run(&inst.lp, &cfg, &mut NoTrace).unwrap();
        assert_eq!(out.status, inst.class.expected_status(), "{}", inst.name);
        assert!(out.primal_certificate.is_some(), "{}", inst.name);

        let warm = warm_run(&inst.lp, cfg.steps, 20_000).unwrap();
        let ray = refine_ray(&inst.lp, cfg.steps, &warm).unwrap();
        let v_y = &ray.v[inst.lp.n()..];
        assert!(verify_certificate_exact(v_y, &inst.lp, CertificateKind::Primal).unwrap(), "{}", inst.name);
    }
}

#[test]
fn exactify_snaps_to_small_fractions() {
    let q = exactify(&[0.5 + 1e-13, -1.0 / 3.0, 1e-15]).unwrap();
    assert_eq!(q[0], to_rational(1.0).unwrap());
    assert_eq!(q[1], Rational::new((-2).into(), 3.into()));
    assert!(q[2].is_zero());
}
