mod common;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use simpl_core::entropy::{bregman_volume_correct, densities, inv_sigmoid, l2_volume_correct};
use simpl_core::fem::{
    assemble_scalar_filter_operator, clamp_boundary, elasticity_element_matrix, element_to_node_load,
    node_weights, ElasticityAssembler,
};
use simpl_core::optimizer::{pgd_update, simpl_trial};
use simpl_core::solver::{pcg, CgSettings, Preconditioner};
use simpl_core::{BallLoad, BoundaryTag, Compliance, ElementField, Mesh2D, OptimizerState, ProblemSpec};

#[test]
fn gradient_matches_central_differences() {
    let problem = unit_square_problem(8);
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..3 {
        let rho = random_feasible_density(&mut rng, 64, 0.5);
        for _ in 0..10 {
            let q = zero_mean_direction(&mut rng, 64);
            let (analytic, fd) = directional_derivatives(&problem, &rho, &q, 1e-6);
            let rel = (analytic - fd).abs() / analytic.abs();
            assert!(rel <= 1e-4, "analytic {analytic:e}, fd {fd:e}, rel {rel:e}");
        }
    }
}

#[test]
fn filter_solve_matches_dense_elimination() {
    let mesh = Mesh2D::new(4, 4, 1.0, 1.0).unwrap();
    let a = assemble_scalar_filter_operator(&mesh, 0.1 / (2.0 * 3f64.sqrt())).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    let b: Vec<f64> = (0..a.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dense = a.to_dense();
    let n = a.dim();
    let m = DMatrix::from_fn(n, n, |i, j| dense[i][j]);
    let exact = m.lu().solve(&DVector::from_column_slice(&b)).unwrap();
    let cg = pcg(&a, &b, None, CgSettings::default()).unwrap();
    for (x, y) in cg.x.iter().zip(exact.iter()) {
        assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
    }
}

#[test]
fn filter_preserves_the_integral() {
    let mesh = Mesh2D::new(4, 4, 1.0, 1.0).unwrap();
    let a = assemble_scalar_filter_operator(&mesh, 0.2).unwrap();
    let weights = node_weights(&mesh);
    let mut rng = StdRng::seed_from_u64(11);
    let g: Vec<f64> = (0..a.dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
    // right side b = M g, so ∫g = Σ bᵢ
    let b = {
        let mass = assemble_scalar_filter_operator(&mesh, 1e-300).unwrap();
        mass.mul_vec(&g)
    };
    let w = pcg(&a, &b, None, CgSettings::default()).unwrap().x;
    let integral_g: f64 = b.iter().sum();
    let integral_w: f64 = w.iter().zip(&weights).map(|(w, m)| w * m).sum();
    assert!((integral_w - integral_g).abs() <= 1e-10 * integral_g.abs());
}

#[test]
fn element_stiffness_has_three_rigid_modes() {
    let k = elasticity_element_matrix(1.0, 1.0, 1.0, 0.3);
    let m = DMatrix::from_row_slice(8, 8, &k);
    assert!((&m - m.transpose()).abs().max() <= 1e-15);
    let eig = SymmetricEigen::new(m);
    let scale = eig.eigenvalues.amax();
    let zeros = eig.eigenvalues.iter().filter(|l| l.abs() <= 1e-12 * scale).count();
    assert_eq!(zeros, 3, "{}", eig.eigenvalues);
    assert!(eig.eigenvalues.iter().all(|&l| l > -1e-12 * scale));
}

#[test]
fn multiplier_matches_a_fine_scan() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..3 {
        let psi: Vec<f64> = (0..64).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let out = bregman_volume_correct(&psi, 0.5, 1e-12).unwrap();
        let mean: f64 = densities(&out.psi).iter().sum::<f64>() / 64.0;
        assert!((mean - 0.5).abs() <= 1e-12);
        let mu = scan_mu(&psi, 0.5, 1e-13);
        assert!((out.mu - mu).abs() <= 1e-10, "{} vs {mu}", out.mu);
    }
}

#[test]
fn volume_correction_is_the_bregman_projection() {
    let mut rng = StdRng::seed_from_u64(17);
    for n in [2, 3, 5, 8] {
        for _ in 0..4 {
            let psi: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let theta = rng.gen_range(0.2..0.8);
            let out = bregman_volume_correct(&psi, theta, 1e-12).unwrap();
            let q = densities(&psi);
            let reference = pairwise_minimize(&vec![0.0; n], &q, theta);
            let err = l1_distance(&densities(&out.psi), &reference);
            assert!(err <= 1e-6, "n = {n}: L1 error {err:e}");
        }
    }
}

#[test]
fn l2_correction_of_two_level_field() {
    let (rho, c) = l2_volume_correct(&[-0.5, -0.5, 1.5, 1.5], 0.5, 1e-10).unwrap();
    assert_eq!(c, 0.0);
    assert_eq!(rho.as_slice(), &[0.0, 0.0, 1.0, 1.0]);
}

fn random_state(rng: &mut StdRng, problem: &Compliance) -> OptimizerState {
    let n = problem.mesh().num_elements();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let psi = bregman_volume_correct(&raw, 0.5, 1e-12).unwrap().psi;
    let rho = densities(&psi);
    let eval = problem.evaluate(&rho, None).unwrap();
    let grad = problem.gradient(&eval, None).unwrap().gradient;
    OptimizerState::from_latent(psi, grad, eval.compliance, 0.5, problem.mesh().element_area())
}

#[test]
fn mirror_step_minimizes_the_subproblem() {
    let problem = unit_square_problem(8);
    let mut rng = StdRng::seed_from_u64(23);
    for alpha in [0.5, 5.0, 50.0] {
        let state = random_state(&mut rng, &problem);
        let trial = simpl_trial(&state, alpha).unwrap();
        let linear: Vec<f64> = state.grad.iter().map(|g| alpha * g).collect();
        let reference = pairwise_minimize(&linear, &state.rho, 0.5);
        let err = l1_distance(&trial.rho, &reference);
        assert!(err <= 1e-6, "alpha = {alpha}: L1 error {err:e}");
    }
}

#[test]
fn projected_gradient_agrees_with_mirror_step_to_first_order() {
    let problem = unit_square_problem(8);
    let theta = 0.5;
    let n = problem.mesh().num_elements();
    let rho = vec![theta; n];
    let eval = problem.evaluate(&rho, None).unwrap();
    let raw = problem.gradient(&eval, None).unwrap().gradient;
    let scale = raw.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let grad: ElementField = raw.iter().map(|g| g / scale).collect();
    let psi = vec![inv_sigmoid(theta).unwrap(); n];
    let state = OptimizerState::from_latent(psi.into(), grad.clone(), eval.compliance, theta, 1.0 / n as f64);
    // at ρ ≡ θ the entropic metric is θ(1 − θ) times the L² metric
    let alphas = [1e-2, 1e-3, 1e-4];
    let gaps: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            let mirror = simpl_trial(&state, a).unwrap().rho;
            let projected = pgd_update(&rho, &grad, theta * (1.0 - theta) * a, theta).unwrap();
            mirror.iter().zip(projected.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let slope = log_log_slope(&alphas, &gaps);
    assert!(slope >= 1.9, "slope {slope}, gaps {gaps:?}");
}

fn mirrored_load_problem(nx: usize, ny: usize, y: f64, dy: f64) -> Compliance {
    let mesh = Mesh2D::new(nx, ny, 2.0, 1.0).unwrap();
    Compliance::new(ProblemSpec {
        load: BallLoad {
            center: [1.9, y],
            radius: 0.12,
            direction: [0.3, dy],
        },
        solver_tol: 1e-12,
        ..ProblemSpec::cantilever(mesh)
    })
    .unwrap()
}

#[test]
fn mirrored_load_mirrors_the_displacement() {
    let (nx, ny) = (16, 8);
    let a = mirrored_load_problem(nx, ny, 0.3, -1.0);
    let b = mirrored_load_problem(nx, ny, 0.7, 1.0);
    let mesh = a.mesh().clone();
    // symmetric density: mirrored elements share their value
    let rho: Vec<f64> = (0..mesh.num_elements())
        .map(|e| {
            let [x, y] = mesh.element_center(e);
            0.5 + 0.3 * (4.0 * x).sin() * (std::f64::consts::PI * y).sin()
        })
        .collect();
    let ua = a.evaluate(&rho, None).unwrap().displacement;
    let ub = b.evaluate(&rho, None).unwrap().displacement;
    let scale = ua.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for node in 0..mesh.num_nodes() {
        let m = mesh.mirror_node_y(node);
        assert!((ua[2 * node] - ub[2 * m]).abs() <= 1e-8 * scale);
        assert!((ua[2 * node + 1] + ub[2 * m + 1]).abs() <= 1e-8 * scale);
    }
}

#[test]
fn adding_material_never_increases_compliance() {
    let mesh = Mesh2D::new(4, 4, 1.0, 1.0).unwrap();
    let problem = Compliance::new(ProblemSpec {
        load: BallLoad {
            center: [0.9, 0.5],
            radius: 0.2,
            direction: [0.0, -1.0],
        },
        ..ProblemSpec::cantilever(mesh)
    })
    .unwrap();
    let mut rng = StdRng::seed_from_u64(29);
    for _ in 0..20 {
        let rho: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..0.8)).collect();
        let more: Vec<f64> = rho.iter().map(|r| r + rng.gen_range(0.0..0.2)).collect();
        let (f, f_more) = (problem.objective(&rho).unwrap(), problem.objective(&more).unwrap());
        assert!(f > 0.0 && f_more <= f, "{f_more} > {f}");
    }
    let solid = problem.objective(&[1.0; 16]).unwrap();
    let half = problem.objective(&[0.5; 16]).unwrap();
    assert!(solid > 0.0 && half > solid);
}

#[test]
fn cantilever_gradient_is_nonpositive() {
    let problem = Compliance::new(ProblemSpec::cantilever_h(1.0 / 16.0).unwrap()).unwrap();
    let n = problem.mesh().num_elements();
    let eval = problem.evaluate(&vec![0.5; n], None).unwrap();
    let grad = problem.gradient(&eval, None).unwrap().gradient;
    assert!(grad.iter().all(|&g| g <= 1e-12));
}

#[test]
fn energy_error_estimate_decreases_and_matches_the_solution() {
    let problem = Compliance::new(ProblemSpec::cantilever_h(1.0 / 16.0).unwrap()).unwrap();
    let mesh = problem.mesh().clone();
    let systems = {
        let r: Vec<f64> = (0..mesh.num_elements())
            .map(|e| 1e-6 + (0.5 + 0.45 * (e as f64 * 0.37).sin()).powi(3))
            .collect();
        let mut k = ElasticityAssembler::new(&mesh, 1.0, 0.3).unwrap().assemble(&r).unwrap();
        let mut load = problem.load().to_vec();
        k.apply_dirichlet(&clamp_boundary(&mesh, BoundaryTag::Left), &mut load);
        let filter = problem.filter_operator().clone();
        let rhs = element_to_node_load(&mesh, &r);
        vec![(k, load), (filter, rhs)]
    };
    for (a, b) in &systems {
        for preconditioner in [Preconditioner::Jacobi, Preconditioner::IncompleteCholesky] {
            let settings = CgSettings {
                preconditioner,
                ..CgSettings::default()
            };
            let out = pcg(a, b, None, settings).unwrap();
            let d = &out.energy_decrements;
            assert!(d.iter().all(|&v| v > 0.0), "{preconditioner:?}");
            // remaining error estimates, one per iteration
            let mut tails: Vec<f64> = d
                .iter()
                .rev()
                .scan(0.0, |acc, v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect();
            tails.reverse();
            for w in tails.windows(11) {
                assert!(w[10] <= w[0]);
            }
            // from x₀ = 0 the total drop is ‖x*‖²_A = bᵀx*
            let energy: f64 = b.iter().zip(&out.x).map(|(b, x)| b * x).sum();
            assert!((tails[0] - energy).abs() <= 1e-8 * energy, "{} vs {energy}", tails[0]);
        }
    }
}
