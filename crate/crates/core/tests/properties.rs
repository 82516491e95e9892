//! Randomized invariants, one block per module.

mod common;

use common::*;
use nalgebra::DMatrix;
use netrecon::dynsim::{expm_sym, simulate, simulate_discrete};
use netrecon::gramian::{gram_discrete, gram_exact, gram_from_trajectory, residual};
use netrecon::lpsolve::{simplex, LpStatus, StandardLp};
use netrecon::lyap::{solve_affine, solve_unique};
use netrecon::matrix::{Matrix, SymMatrix};
use netrecon::netgraph::{
    all_pairs, graph_from_matrix, is_member, laplacian_of, random_geometric_graph, random_in_class, Graph,
    MatrixClass,
};
use netrecon::reconstruct::{reconstruct, Status, Tolerances};
use netrecon::sym_eig;
use proptest::prelude::*;
use rand::Rng;

fn random_graph(n: usize, density: f64, seed: u64) -> Graph {
    let mut r = rng(seed);
    let edges: Vec<(usize, usize)> = all_pairs(n).filter(|_| r.gen_bool(density)).collect();
    Graph::new(n, edges).unwrap()
}

fn class_strategy() -> impl Strategy<Value = MatrixClass> {
    prop::sample::select(MatrixClass::ALL.to_vec())
}

fn random_state(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen_range(-2.0..2.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // netgraph

    #[test]
    fn generated_matrices_are_members(n in 1usize..9, density in 0.0f64..1.0, class in class_strategy(), seed: u64) {
        let g = random_graph(n, density, seed);
        let x = random_in_class(&g, class, seed);
        prop_assert!(is_member(&x, &g, class, 1e-12).unwrap());
    }

    #[test]
    fn support_round_trips(n in 1usize..9, density in 0.0f64..1.0, class in class_strategy(), seed: u64) {
        let g = random_graph(n, density, seed);
        let x = random_in_class(&g, class, seed);
        prop_assert_eq!(graph_from_matrix(&x, 1e-12), g);
    }

    #[test]
    fn laplacian_rows_sum_to_zero(n in 1usize..9, density in 0.0f64..1.0, seed: u64) {
        let g = random_graph(n, density, seed);
        for class in [MatrixClass::Laplacian, MatrixClass::UnweightedLaplacian] {
            let l = random_in_class(&g, class, seed);
            prop_assert!(l.row_sums().iter().all(|&s| s == 0.0));
        }
    }

    #[test]
    fn geometric_graph_is_deterministic(n in 1usize..40, radius in 0.0f64..600.0, seed: u64) {
        let (g1, p1) = random_geometric_graph(n, 1000.0, radius, seed);
        let (g2, p2) = random_geometric_graph(n, 1000.0, radius, seed);
        prop_assert_eq!(g1, g2);
        prop_assert_eq!(p1, p2);
    }

    // dynsim

    #[test]
    fn exponential_semigroup(n in 1usize..8, s in 0.0f64..2.0, t in 0.0f64..2.0, seed: u64) {
        let x = random_symmetric(n, 1.0, &mut rng(seed));
        let lhs = expm_sym(&x, s).unwrap().matmul(&expm_sym(&x, t).unwrap());
        let rhs = expm_sym(&x, s + t).unwrap().to_full();
        let scale = 1.0 + rhs.max_abs();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((lhs.row(i)[j] - rhs.row(i)[j]).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn consensus_conserves_the_sum(n in 1usize..9, density in 0.0f64..1.0, seed: u64) {
        let g = random_graph(n, density, seed);
        let x = random_in_class(&g, MatrixClass::Laplacian, seed).scale(-1.0);
        let x0 = random_state(n, seed ^ 1);
        let total: f64 = x0.iter().sum();
        let tr = simulate(&x, &x0, 2.0, 50).unwrap();
        for state in tr.states() {
            prop_assert!((state.iter().sum::<f64>() - total).abs() <= 1e-9 * (1.0 + total.abs()));
        }
    }

    #[test]
    fn exponential_is_positive_definite(n in 1usize..9, t in 0.0f64..3.0, seed: u64) {
        let x = random_symmetric(n, 1.0, &mut rng(seed));
        prop_assert!(to_na(&expm_sym(&x, t).unwrap()).cholesky().is_some());
    }

    #[test]
    fn simulation_matches_runge_kutta(n in 1usize..9, seed: u64) {
        let x = random_symmetric(n, 1.0, &mut rng(seed));
        let x0 = random_state(n, seed ^ 2);
        let tr = simulate(&x, &x0, 1.0, 10).unwrap();
        let rk = integrate(&x, &x0, 1.0, 1e-12);
        for (a, b) in tr.terminal().iter().zip(&rk) {
            prop_assert!((a - b).abs() <= 1e-7 * (1.0 + b.abs()));
        }
    }

    // gramian

    #[test]
    fn gramian_is_positive_semidefinite(n in 1usize..9, k in 2usize..200, seed: u64) {
        let x = random_symmetric(n, 1.0, &mut rng(seed));
        let gp = gram_from_trajectory(&simulate(&x, &random_state(n, seed ^ 3), 1.0, k * 2).unwrap());
        let eig = sym_eig(&gp.p).unwrap();
        prop_assert!(eig.eigenvalues[0] >= -1e-12 * eig.eigenvalues[n - 1].abs().max(1e-300));
    }

    #[test]
    fn q_is_the_endpoint_difference(n in 1usize..9, seed: u64) {
        let x = random_symmetric(n, 1.0, &mut rng(seed));
        let tr = simulate(&x, &random_state(n, seed ^ 4), 1.0, 20).unwrap();
        let gp = gram_from_trajectory(&tr);
        let want = SymMatrix::outer(tr.terminal()).sub(&SymMatrix::outer(tr.initial()));
        prop_assert_eq!(gp.q, want);
    }

    #[test]
    fn discrete_identity_holds(n in 1usize..9, seed: u64) {
        let m = random_symmetric(n, 0.6, &mut rng(seed));
        let z = simulate_discrete(&m, &random_state(n, seed ^ 5), n).unwrap();
        let gp = gram_discrete(&z).unwrap();
        prop_assert!(residual(&m, &gp) <= 1e-10 * gp.q.frobenius_norm().max(gp.q_scale()));
    }

    // lyap

    #[test]
    fn affine_set_solves_the_equation(n in 2usize..8, hidden in 0usize..3, seed: u64) {
        let mut r = rng(seed);
        let hidden: Vec<usize> = (0..hidden.min(n - 1)).collect();
        let inst = spread_instance(n, &hidden, &mut r);
        let gp = gram_exact(&inst.x, &inst.x0, 5.0).unwrap();
        let aff = solve_affine(&gp).unwrap();
        let m = aff.kernel_dim_p;
        prop_assert_eq!(m, hidden.len());
        prop_assert_eq!(aff.basis.len(), m * (m + 1) / 2);
        for (i, a) in aff.basis.iter().enumerate() {
            for (j, b) in aff.basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((a.frobenius_dot(b) - want).abs() <= 1e-12);
            }
        }
        let alpha: Vec<f64> = (0..aff.basis.len()).map(|_| r.gen_range(-5.0..5.0)).collect();
        let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
        let bound = (1.0 + l1) * 1e-9 * gp.q.frobenius_norm().max(1.0);
        prop_assert!(residual(&aff.point(&alpha), &gp) <= bound);
    }

    #[test]
    fn unique_solution_inverts_the_gramian(n in 1usize..9, seed: u64) {
        let inst = spread_instance(n, &[], &mut rng(seed));
        let gp = gram_exact(&inst.x, &inst.x0, 5.0).unwrap();
        let s = solve_unique(&gp).unwrap();
        prop_assert!(s.sub(&inst.x).frobenius_norm() <= 1e-8 * inst.x.frobenius_norm());
    }

    // lpsolve

    #[test]
    fn optimal_points_are_feasible_and_reproducible(c in 2usize..12, seed: u64) {
        let mut r = rng(seed);
        let rows = r.gen_range(1..c);
        let m = Matrix::from_fn(rows, c, |_, _| r.gen_range(-10.0..10.0));
        let s: Vec<f64> = (0..c).map(|_| if r.gen_bool(0.5) { r.gen_range(0.0..3.0) } else { 0.0 }).collect();
        let b = m.mul_vec(&s);
        let lp = StandardLp::feasibility(m.clone(), b.clone()).unwrap();
        let first = simplex(&lp).unwrap();
        prop_assert_eq!(first.status, LpStatus::Optimal);
        prop_assert!(first.solution.iter().all(|&v| v >= 0.0));
        let ms = m.mul_vec(&first.solution);
        for i in 0..rows {
            let scale = m.row(i).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            prop_assert!((ms[i] - b[i]).abs() / scale <= 1e-9 * (1.0 + b[i].abs() / scale));
        }
        let second = simplex(&lp).unwrap();
        prop_assert_eq!(first.solution, second.solution);
        prop_assert_eq!(first.basis, second.basis);
    }

    #[test]
    fn optimum_matches_best_vertex(c in 2usize..7, seed: u64) {
        let mut r = rng(seed);
        let rows = r.gen_range(1..c);
        let a = DMatrix::from_fn(rows, c, |_, _| r.gen_range(-1.0..1.0));
        let s = nalgebra::DVector::from_fn(c, |_, _| r.gen_range(0.0..1.0));
        let b = &a * &s;
        let cost: Vec<f64> = (0..c).map(|_| -r.gen_range(0.0..1.0)).collect();
        let lp = StandardLp::new(Matrix::from_fn(rows, c, |i, j| a[(i, j)]), b.as_slice().to_vec(), Some(cost.clone()))
            .unwrap();
        let res = simplex(&lp).unwrap();
        let best = vertices(&a, &b)
            .iter()
            .map(|v| v.iter().zip(&cost).map(|(x, y)| x * y).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(res.status, LpStatus::Optimal);
        prop_assert!((res.objective - best).abs() <= 1e-8 * (1.0 + best.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // reconstruct

    #[test]
    fn unique_outcomes_pass_the_gate(n in 2usize..7, density in 0.2f64..1.0, class in class_strategy(), seed: u64) {
        let g = random_graph(n, density, seed);
        let x = class.class_form(&random_in_class(&g, class, seed));
        let x0 = random_state(n, seed ^ 6);
        let gp = gram_exact(&x, &x0, 1.0).unwrap();
        let tol = Tolerances::default();
        let out = reconstruct(&gp, class, &tol).unwrap();
        if out.status == Status::Unique {
            let xh = out.x_hat.as_ref().unwrap();
            prop_assert!(residual(xh, &gp) <= tol.tol_accept * gp.q.frobenius_norm().max(1.0));
            let form = class.class_form(xh);
            prop_assert!(is_member(&form, out.g_hat.as_ref().unwrap(), class, tol.edge_threshold).unwrap());
        }
    }

    #[test]
    fn unweighted_laplacian_unique_iff_one_graph_fits(n in 2usize..6, density in 0.0f64..1.0, seed: u64) {
        let g = random_graph(n, density, seed);
        let x = random_in_class(&g, MatrixClass::UnweightedLaplacian, seed).scale(-1.0);
        let mut r = rng(seed ^ 7);
        let x0: Vec<f64> = (0..n).map(|_| r.gen_range(0..3) as f64).collect();
        let gp = gram_exact(&x, &x0, 1.0).unwrap();
        let pairs: Vec<(usize, usize)> = all_pairs(n).collect();
        let fits = (0u32..(1 << pairs.len()))
            .filter(|mask| {
                let h = Graph::new(n, pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &e)| e))
                    .unwrap();
                let y = laplacian_of(&h, &netrecon::netgraph::unit_weights(&h)).unwrap().scale(-1.0);
                residual(&y, &gp) <= 1e-6 * gp.q_scale().max(1.0)
            })
            .count();
        let out = reconstruct(&gp, MatrixClass::UnweightedLaplacian, &Tolerances::default()).unwrap();
        prop_assert_eq!(out.status == Status::Unique, fits == 1);
    }

    #[test]
    fn scaling_the_initial_state_changes_nothing(n in 2usize..7, density in 0.3f64..1.0, seed: u64, up: bool) {
        let c = if up { 2.0 } else { 0.5 };
        let g = random_graph(n, density, seed);
        let x = random_in_class(&g, MatrixClass::Laplacian, seed).scale(-1.0);
        let x0 = random_state(n, seed ^ 8);
        let scaled: Vec<f64> = x0.iter().map(|v| c * v).collect();
        let tol = Tolerances::default();
        let a = reconstruct(&gram_exact(&x, &x0, 1.0).unwrap(), MatrixClass::Laplacian, &tol).unwrap();
        let b = reconstruct(&gram_exact(&x, &scaled, 1.0).unwrap(), MatrixClass::Laplacian, &tol).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(&a.g_hat, &b.g_hat);
        if let (Some(p), Some(q)) = (&a.x_hat, &b.x_hat) {
            prop_assert!(p.sub(q).max_abs() <= 1e-6 * (1.0 + x.max_abs()));
        }
    }
}
