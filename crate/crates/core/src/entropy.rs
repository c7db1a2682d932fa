//! Fermi–Dirac entropy geometry on piecewise-constant fields.
//!
//! Densities are represented through a latent field `ψ` with `ρ = σ(ψ)`.
//! Everything here works on the latent side where possible so that nearly
//! binary densities never pass through `ln(ρ / (1 − ρ))`. Integrals use the
//! uniform element measure of a structured mesh: `∫ g dx = |e| Σₑ gₑ`.

use crate::error::{Error, Result};
use crate::field::{DensityField, ElementField, LatentField};

/// Bisection stops only once the bracket is this narrow (and the volume
/// residual is within tolerance).
pub const BISECTION_WIDTH: f64 = 1e-12;
pub const BISECTION_MAX_ITERS: usize = 200;
/// Default relative volume tolerance used by the optimizer.
pub const VOLUME_TOL: f64 = 1e-10;

/// Logistic sigmoid, evaluated through `exp(−|x|)` so it never overflows.
///
/// Saturates to exactly `0.0` below about `−745` and to `1.0` above about
/// `37`; use `sigmoid(-x)` for an accurate `1 − σ(x)`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let t = x.exp();
        t / (1.0 + t)
    }
}

/// [`sigmoid`] that rejects NaN.
pub fn checked_sigmoid(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("sigmoid of NaN".into()));
    }
    Ok(sigmoid(x))
}

/// `σ⁻¹(p) = ln(p / (1 − p))` for `p` strictly inside `(0, 1)`.
pub fn inv_sigmoid(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "inverse sigmoid needs 0 < p < 1, got {p}"
        )));
    }
    Ok(p.ln() - (-p).ln_1p())
}

/// `ln(1 + eˣ)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `∫ ρ ln ρ + (1 − ρ) ln(1 − ρ) dx` with `0 ln 0 = 0`.
///
/// Densities outside `[0, 1]` lie outside the effective domain (where the
/// entropy is `+∞`) and are reported as [`Error::Infeasible`].
pub fn fermi_dirac_entropy(rho: &[f64], cell_area: f64) -> Result<f64> {
    let mut sum = 0.0;
    for (e, &r) in rho.iter().enumerate() {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Infeasible(format!("element {e} has density {r}")));
        }
        sum += xlogx(r) + xlogx(1.0 - r);
    }
    Ok(cell_area * sum)
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Pointwise `D_φ(σ(a), σ(b))` in latent form:
/// `σ(a)(a − b) + softplus(b) − softplus(a)`.
#[inline]
fn latent_divergence_density(a: f64, b: f64) -> f64 {
    if a == f64::INFINITY {
        return softplus(-b);
    }
    if a == f64::NEG_INFINITY {
        return softplus(b);
    }
    let d = sigmoid(a) * (a - b) + softplus(b) - softplus(a);
    // Rounding can push an exact zero slightly negative.
    d.max(0.0)
}

/// Bregman divergence of the Fermi–Dirac entropy, `D_φ(σ(a), σ(b))`.
///
/// The first argument may be saturated (`±∞`); the second must be finite.
pub fn bregman_div(a: &[f64], b: &[f64], cell_area: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "fields of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if let Some((e, v)) = b.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "second argument must be finite, element {e} is {v}"
        )));
    }
    if a.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN in latent field".into()));
    }
    Ok(cell_area
        * a.iter()
            .zip(b)
            .map(|(&x, &y)| latent_divergence_density(x, y))
            .sum::<f64>())
}

/// Density-form divergence `∫ ρ ln(ρ/q) + (1−ρ) ln((1−ρ)/(1−q)) dx`, for
/// `ρ ∈ [0, 1]` and `q ∈ (0, 1)`.
pub fn bregman_div_density(rho: &[f64], q: &[f64], cell_area: f64) -> Result<f64> {
    let mut sum = 0.0;
    for (e, (&r, &s)) in rho.iter().zip(q).enumerate() {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Infeasible(format!("element {e} has density {r}")));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("element {e} has reference density {s}")));
        }
        let lhs = if r == 0.0 { 0.0 } else { r * (r / s).ln() };
        let rhs = if r == 1.0 { 0.0 } else { (1.0 - r) * ((1.0 - r) / (1.0 - s)).ln() };
        sum += lhs + rhs;
    }
    Ok(cell_area * sum)
}

/// `ρ = σ(ψ)` element-wise.
pub fn densities(psi: &[f64]) -> DensityField {
    psi.iter().map(|&p| sigmoid(p)).collect()
}

/// `|∫ σ(ψ) dx − θ|Ω|| / |Ω|`.
pub fn latent_volume_error(psi: &[f64], theta: f64) -> f64 {
    let n = psi.len() as f64;
    (psi.iter().map(|&p| sigmoid(p)).sum::<f64>() / n - theta).abs()
}

/// `|∫ ρ dx − θ|Ω|| / |Ω|`.
pub fn volume_error(rho: &[f64], theta: f64) -> f64 {
    let n = rho.len() as f64;
    (rho.iter().sum::<f64>() / n - theta).abs()
}

/// Result of the Bregman projection onto the volume constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeCorrection {
    /// Latent shift `μ`.
    pub mu: f64,
    /// Corrected latent field `ψ_half + μ`.
    pub psi: LatentField,
    pub iterations: usize,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "volume fraction must lie in (0, 1), got {theta}"
        )));
    }
    Ok(())
}

/// Finds `μ` with `∫ σ(ψ_half + μ) dx = θ|Ω|` by bisection and returns the
/// shifted field, which is the Bregman projection of `σ(ψ_half)` onto the
/// admissible set.
///
/// The initial bracket is `[σ⁻¹(θ) − max ψ_half, σ⁻¹(θ) − min ψ_half]`.
/// Iteration stops once the bracket is narrower than [`BISECTION_WIDTH`] and
/// the volume residual is at most `tol · |Ω|`.
pub fn bregman_volume_correct(psi_half: &[f64], theta: f64, tol: f64) -> Result<VolumeCorrection> {
    check_theta(theta)?;
    if psi_half.is_empty() {
        return Err(Error::InvalidArgument("empty latent field".into()));
    }
    if let Some((e, v)) = psi_half.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "latent field must be finite, element {e} is {v}"
        )));
    }
    let n = psi_half.len() as f64;
    // Residual of the volume equation, relative to |Ω|.
    let residual = |mu: f64| psi_half.iter().map(|&p| sigmoid(p + mu)).sum::<f64>() / n - theta;

    let target = inv_sigmoid(theta)?;
    let (lo_psi, hi_psi) = psi_half
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let mut lo = target - hi_psi;
    let mut hi = target - lo_psi;
    // The analytic bracket can miss the root by a rounding error when ψ_half
    // is (nearly) uniform; widen it by a few ulps-scale steps if so.
    let mut step = BISECTION_WIDTH;
    let mut r_lo = residual(lo);
    while r_lo > 0.0 && step < 1.0 {
        lo -= step;
        step *= 2.0;
        r_lo = residual(lo);
    }
    let mut step = BISECTION_WIDTH;
    let mut r_hi = residual(hi);
    while r_hi < 0.0 && step < 1.0 {
        hi += step;
        step *= 2.0;
        r_hi = residual(hi);
    }
    if r_lo > 0.0 || r_hi < 0.0 {
        return Err(Error::Internal(format!(
            "volume correction bracket [{lo}, {hi}] does not enclose a root (residuals {r_lo:e}, {r_hi:e})"
        )));
    }

    let mut iterations = 0;
    let (mut best_mu, mut best_r) = if -r_lo <= r_hi { (lo, r_lo) } else { (hi, r_hi) };
    while iterations < BISECTION_MAX_ITERS {
        if hi - lo <= BISECTION_WIDTH && best_r.abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let r_mid = residual(mid);
        if r_mid.abs() <= best_r.abs() {
            best_mu = mid;
            best_r = r_mid;
        }
        if r_mid == 0.0 {
            break;
        } else if r_mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best_r.abs() > tol {
        return Err(Error::Internal(format!(
            "volume correction stalled with relative residual {:.3e} after {iterations} bisections",
            best_r.abs()
        )));
    }
    Ok(VolumeCorrection {
        mu: best_mu,
        psi: psi_half.iter().map(|&p| p + best_mu).collect(),
        iterations,
    })
}

/// Euclidean projection onto the admissible set:
/// `max(0, min(1, v + c))` with `c` fixing the volume.
///
/// `tol` bounds the volume residual relative to `|Ω|`. Integrals use the
/// uniform element measure, so the mesh enters only through the field length.
/// `c` is located by bisection on the monotone, piecewise-linear volume
/// function over `[θ − max v, θ − min v]`; once the bracket lies on a single
/// linear piece the root is computed directly. Returns the projected density
/// and `c`.
pub fn l2_volume_correct(v: &[f64], theta: f64, tol: f64) -> Result<(DensityField, f64)> {
    check_theta(theta)?;
    if v.is_empty() {
        return Err(Error::InvalidArgument("empty field".into()));
    }
    if let Some((e, x)) = v.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "field must be finite, element {e} is {x}"
        )));
    }
    let n = v.len() as f64;
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    let residual = |c: f64| v.iter().map(|&x| clamp(x + c)).sum::<f64>() / n - theta;
    // -1: at lower bound, 0: free, 1: at upper bound
    let phase = |x: f64| {
        if x <= 0.0 {
            -1i8
        } else if x >= 1.0 {
            1
        } else {
            0
        }
    };

    let (min_v, max_v) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mut lo = theta - max_v;
    let mut hi = theta - min_v;
    let mut c = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITERS {
        let r = residual(c);
        if r.abs() <= tol {
            break;
        }
        if r < 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        let same_piece = v.iter().all(|&x| phase(x + lo) == phase(x + hi));
        if same_piece {
            let free = v.iter().filter(|&&x| phase(x + lo) == 0).count() as f64;
            let r_lo = residual(lo);
            c = if free > 0.0 { lo - r_lo * n / free } else { 0.5 * (lo + hi) };
            if residual(c).abs() <= tol {
                break;
            }
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        c = mid;
    }
    if residual(c).abs() > tol {
        return Err(Error::Internal(format!(
            "L2 volume correction stalled with relative residual {:.3e}",
            residual(c).abs()
        )));
    }
    Ok((v.iter().map(|&x| clamp(x + c)).collect::<ElementField>(), c))
}
