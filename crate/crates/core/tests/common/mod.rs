//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;

use simpl_core::{BallLoad, BoundaryTag, Compliance, Mesh2D, ProblemSpec};

/// Unit square, `n × n` elements, clamped on the left and pulled down near
/// the middle of the right edge. Solves are run to a tight tolerance so
/// finite differences are not polluted by solver error.
pub fn unit_square_problem(n: usize) -> Compliance {
    let mesh = Mesh2D::new(n, n, 1.0, 1.0).unwrap();
    let spec = ProblemSpec {
        r_min: 0.3,
        load: BallLoad {
            center: [0.95, 0.5],
            radius: 0.1,
            direction: [0.0, -1.0],
        },
        clamped: BoundaryTag::Left,
        solver_tol: 1e-13,
        ..ProblemSpec::cantilever(mesh)
    };
    Compliance::new(spec).unwrap()
}

/// Random density in `[0.1, 0.9]` with mean exactly `theta` (up to rounding).
pub fn random_feasible_density(rng: &mut StdRng, n: usize, theta: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    raw.iter().map(|v| theta + (v - mean) * 0.9).collect()
}

pub fn zero_mean_direction(rng: &mut StdRng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    raw.iter().map(|v| v - mean).collect()
}

/// `(∫∇F·q dx, central difference of F along q)`.
pub fn directional_derivatives(problem: &Compliance, rho: &[f64], q: &[f64], step: f64) -> (f64, f64) {
    let area = problem.mesh().element_area();
    let eval = problem.evaluate(rho, None).unwrap();
    let grad = problem.gradient(&eval, None).unwrap().gradient;
    let analytic: f64 = area * grad.iter().zip(q).map(|(g, d)| g * d).sum::<f64>();
    let shifted = |sign: f64| -> Vec<f64> { rho.iter().zip(q).map(|(r, d)| r + sign * step * d).collect() };
    let plus = problem.objective(&shifted(1.0)).unwrap();
    let minus = problem.objective(&shifted(-1.0)).unwrap();
    (analytic, (plus - minus) / (2.0 * step))
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn mean_volume(psi: &[f64], mu: f64) -> f64 {
    psi.iter().map(|p| logistic(p + mu)).sum::<f64>() / psi.len() as f64
}

/// Root of `μ ↦ mean σ(ψ + μ) − θ`, located by scanning a uniform grid for a
/// sign change and rescanning the bracketing cell on a ten times finer grid
/// until the cell is narrower than `resolution`.
pub fn scan_mu(psi: &[f64], theta: f64, resolution: f64) -> f64 {
    let reach = psi.iter().fold(0.0f64, |m, p| m.max(p.abs())) + 40.0;
    let (mut lo, mut hi) = (-reach, reach);
    let mut cells = 100_000usize;
    while hi - lo > resolution {
        let width = (hi - lo) / cells as f64;
        let mut left = lo;
        let mut found = None;
        for c in 1..=cells {
            let right = if c == cells { hi } else { lo + c as f64 * width };
            if mean_volume(psi, right) - theta >= 0.0 {
                found = Some((left, right));
                break;
            }
            left = right;
        }
        let (l, r) = found.expect("volume function changes sign");
        if l == lo && r == hi {
            break;
        }
        lo = l;
        hi = r;
        cells = 10;
    }
    0.5 * (lo + hi)
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Minimizes `Σₑ (cₑ ρₑ + ρₑ ln(ρₑ/qₑ) + (1 − ρₑ) ln((1 − ρₑ)/(1 − qₑ)))`
/// over `mean ρ = θ`, `0 < ρ < 1`, by moving mass between the pair of
/// elements whose partial derivatives differ most, starting from `ρ ≡ θ`.
pub fn pairwise_minimize(c: &[f64], q: &[f64], theta: f64) -> Vec<f64> {
    let n = q.len();
    let mut rho = vec![theta; n];
    let slope = |e: usize, r: f64| c[e] + logit(r) - logit(q[e]);
    for _ in 0..200_000 {
        let (mut i, mut j) = (0, 0);
        for e in 0..n {
            if slope(e, rho[e]) < slope(i, rho[i]) {
                i = e;
            }
            if slope(e, rho[e]) > slope(j, rho[j]) {
                j = e;
            }
        }
        if slope(j, rho[j]) - slope(i, rho[i]) < 1e-13 {
            break;
        }
        // move t of mass from j to i; the pair derivative is increasing in t
        let (mut lo, mut hi) = (0.0, (1.0 - rho[i]).min(rho[j]));
        for _ in 0..200 {
            let t = 0.5 * (lo + hi);
            if t <= lo || t >= hi {
                break;
            }
            if slope(i, rho[i] + t) - slope(j, rho[j] - t) < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
        }
        let t = 0.5 * (lo + hi);
        rho[i] += t;
        rho[j] -= t;
    }
    rho
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
