//! Two-item revenues frozen from an independent LP solver (HiGHS) on the same
//! utility formulation.

use revbound::distribution::{equal_revenue_discrete, point_mass, DiscreteDistribution};
use revbound::lp::{solve_lp, solve_lp_via_dual, LpStatus, SolverOptions};
use revbound::mechanism::{build_revenue_lp, optimal_revenue, verify_mechanism, ProductInstance};

fn dist(values: &[f64], probs: &[f64]) -> DiscreteDistribution {
    DiscreteDistribution::new(values.to_vec(), probs.to_vec()).unwrap()
}

fn cases() -> Vec<(ProductInstance, f64)> {
    vec![
        (
            ProductInstance::new(dist(&[1.0, 2.0], &[0.5, 0.5]), dist(&[1.0, 2.0], &[0.5, 0.5])),
            2.25,
        ),
        (
            ProductInstance::new(equal_revenue_discrete(3, 1.0).unwrap(), point_mass(5.0).unwrap()),
            6.0,
        ),
        (
            ProductInstance::new(
                dist(&[1.0, 2.0, 10.0], &[0.1, 0.8, 0.1]),
                point_mass(0.0).unwrap(),
            ),
            1.8,
        ),
        (
            ProductInstance::new(dist(&[1.0, 3.0, 4.0], &[0.2, 0.5, 0.3]), dist(&[2.0, 5.0], &[0.6, 0.4])),
            4.48,
        ),
        (
            ProductInstance::new(
                equal_revenue_discrete(4, 1.0).unwrap(),
                dist(&[1.0, 2.5, 6.0], &[0.3, 0.3, 0.4]),
            ),
            3.592_857_142_857_142_5,
        ),
        (
            ProductInstance::new(
                dist(&[0.5, 1.5, 2.5, 3.5, 4.5], &[0.1, 0.3, 0.2, 0.25, 0.15]),
                dist(&[1.0, 2.0, 3.0, 4.0], &[0.4, 0.1, 0.2, 0.3]),
            ),
            3.165,
        ),
    ]
}

#[test]
fn revenues_match_external_solver() {
    for (k, (inst, expected)) in cases().into_iter().enumerate() {
        let (rev, mech) = optimal_revenue(&inst).unwrap();
        assert!((rev - expected).abs() <= 1e-7, "case {k}: {rev} vs {expected}");
        assert!(verify_mechanism(&inst, &mech).unwrap().passes(1e-7), "case {k}");
    }
}

#[test]
fn primal_and_dual_routes_agree_on_small_grids() {
    for (k, (inst, expected)) in cases().into_iter().take(4).enumerate() {
        let lp = build_revenue_lp(&inst, 200).unwrap();
        let direct = solve_lp(&lp).unwrap();
        let via = solve_lp_via_dual(&lp, &SolverOptions::default()).unwrap();
        assert_eq!(direct.status, LpStatus::Optimal, "case {k}");
        assert_eq!(via.status, LpStatus::Optimal, "case {k}");
        assert!((direct.objective_value - expected).abs() <= 1e-7, "case {k}");
        assert!((via.objective_value - expected).abs() <= 1e-7, "case {k}");
        assert!(lp.max_violation(&direct.assignment) <= 1e-9, "case {k}");
        assert!(lp.max_violation(&via.assignment) <= 1e-9, "case {k}");
    }
}
