//! Gamma, Pochhammer and Gauss hypergeometric ₂F₁ on the non-positive real
//! axis, plus the interference kernel Z_j(x) and its two asymptotic forms.
//!
//! ₂F₁(a, b; c; z) for z ≤ 0 is evaluated in three regimes:
//!
//! | |z|           | method                                                    |
//! |---------------|-----------------------------------------------------------|
//! | ≤ 0.5         | power series                                              |
//! | (0.5, 2]      | Pfaff: (1−z)^(−b) ₂F₁(b, c−a; c; z/(z−1)), |w| ≤ 2/3        |
//! | > 2           | two-term 1/z connection formula, |1/z| < 0.5              |
//!
//! The 1/z formula is singular when a − b is an integer; there `b` is shifted
//! by [`DEGENERATE_SHIFT`], which costs at most ~1e−7 relative accuracy.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{normalize, NetworkConfig, Tier};

/// Largest |z| handled by the direct power series.
pub const SERIES_LIMIT: f64 = 0.5;
/// Largest |z| handled by the Pfaff transformation.
pub const PFAFF_LIMIT: f64 = 2.0;
pub const DEGENERATE_SHIFT: f64 = 1e-9;
const MAX_TERMS: usize = 10_000;
const TERM_TOL: f64 = 1e-16;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// ln Γ(x) for x ≥ 0.5 via the Lanczos approximation.
fn ln_gamma_lanczos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Γ(x) for x ≥ 0.5.
fn gamma_lanczos(x: f64) -> f64 {
    let xm = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (xm + i as f64);
    }
    let t = xm + LANCZOS_G + 0.5;
    // split the power to delay overflow
    let half = t.powf(0.5 * (xm + 0.5));
    (2.0 * PI).sqrt() * half * half * (-t).exp() * acc
}

/// Sign and ln|Γ(x)| for any real x that is not a pole. Returns sign 0 at poles.
fn gamma_sign_ln(x: f64) -> (f64, f64) {
    if is_nonpositive_integer(x) {
        return (0.0, f64::INFINITY);
    }
    if x >= 0.5 {
        return (1.0, ln_gamma_lanczos(x));
    }
    // Γ(x)Γ(1−x) = π / sin(πx)
    let s = (PI * x).sin();
    let (sign, ln) = (s.signum(), PI.ln() - s.abs().ln() - ln_gamma_lanczos(1.0 - x));
    (sign, ln)
}

/// Γ(x) for any real x off the poles (used internally by the connection formulas).
fn gamma_real(x: f64) -> f64 {
    if (1.0..=21.0).contains(&x) && x == x.round() {
        return (2..x as u64).fold(1.0, |acc, n| acc * n as f64);
    }
    if x >= 0.5 {
        gamma_lanczos(x)
    } else {
        PI / ((PI * x).sin() * gamma_lanczos(1.0 - x))
    }
}

/// The Gamma function on the positive reals.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            func: "gamma_fn",
            detail: format!("x = {x} must be positive and finite"),
        });
    }
    Ok(gamma_real(x))
}

/// ln Γ(x) on the positive reals.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            func: "ln_gamma",
            detail: format!("x = {x} must be positive and finite"),
        });
    }
    Ok(if x >= 0.5 {
        ln_gamma_lanczos(x)
    } else {
        gamma_sign_ln(x).1
    })
}

/// Rising factorial (x)_n = x(x+1)…(x+n−1).
pub fn pochhammer(x: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (x + i as f64))
}

/// Γ(1 − 2/α) Γ(M + 2/α) / Γ(M): the Laplace-exponent constant of an
/// unbounded PPP of Gamma(M, 1/M)-faded interferers.
pub fn interference_moment(alpha: f64, antennas: u32) -> f64 {
    let d = 2.0 / alpha;
    let m = antennas as f64;
    gamma_real(1.0 - d) * (ln_gamma_lanczos(m + d) - ln_gamma_lanczos(m)).exp()
}

fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 {
            return Ok(sum);
        }
        if term.abs() < TERM_TOL * sum.abs() {
            // only stop once the terms are shrinking
            let next = ((a + nf + 1.0) * (b + nf + 1.0) / ((c + nf + 1.0) * (nf + 2.0)) * z).abs();
            if next < 1.0 {
                return Ok(sum);
            }
        }
    }
    Err(Error::NonConvergence {
        what: "hypergeometric series",
        iterations: MAX_TERMS,
        partial: sum,
    })
}

fn connection_term(c: f64, a: f64, b: f64, minus_z: f64) -> Result<f64> {
    // Γ(c)Γ(b−a) / (Γ(b)Γ(c−a)) · (−z)^(−a) · ₂F₁(a, a+1−c; a+1−b; 1/z)
    let (s_b, l_b) = gamma_sign_ln(b);
    let (s_ca, l_ca) = gamma_sign_ln(c - a);
    if s_b == 0.0 || s_ca == 0.0 {
        return Ok(0.0);
    }
    let (s_c, l_c) = gamma_sign_ln(c);
    let (s_ba, l_ba) = gamma_sign_ln(b - a);
    let f = series(a, a + 1.0 - c, a + 1.0 - b, -1.0 / minus_z)?;
    let sign = s_c * s_ba * s_b * s_ca;
    Ok(sign * (l_c + l_ba - l_b - l_ca - a * minus_z.ln()).exp() * f)
}

/// Gauss hypergeometric function ₂F₁(a, b; c; z) for real z ≤ 0.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if ![a, b, c, z].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain {
            func: "hyp2f1",
            detail: format!("non-finite argument ({a}, {b}; {c}; {z})"),
        });
    }
    if z > 0.0 {
        return Err(Error::Domain {
            func: "hyp2f1",
            detail: format!("z = {z} must be non-positive"),
        });
    }
    if is_nonpositive_integer(c) {
        return Err(Error::Domain {
            func: "hyp2f1",
            detail: format!("c = {c} is a non-positive integer"),
        });
    }
    if z == 0.0 || a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return series(a, b, c, z);
    }
    let minus_z = -z;
    if minus_z <= SERIES_LIMIT {
        series(a, b, c, z)
    } else if minus_z <= PFAFF_LIMIT {
        let w = z / (z - 1.0);
        Ok((1.0 - z).powf(-b) * series(b, c - a, c, w)?)
    } else {
        let mut b = b;
        let diff = a - b;
        if (diff - diff.round()).abs() < DEGENERATE_SHIFT {
            b += DEGENERATE_SHIFT;
        }
        Ok(connection_term(c, a, b, minus_z)? + connection_term(c, b, a, minus_z)?)
    }
}

/// Z(x) = ₂F₁[−2/α, M; 1−2/α; (1−eˣ)/M̂] − 1 for x ≥ 0, where `antenna_ratio`
/// is M̂ = M_j / M_k.
pub fn z_function(x: f64, alpha: f64, antennas: u32, antenna_ratio: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::Domain {
            func: "z_function",
            detail: format!("x = {x} must be non-negative"),
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let d = 2.0 / alpha;
    let z = -x.exp_m1() / antenna_ratio;
    Ok(hyp2f1(-d, antennas as f64, 1.0 - d, z)? - 1.0)
}

/// Z_j(x) for interferer tier `j` seen by a user served by tier `k`.
pub fn z_exact(x: f64, j: Tier, k: Tier, config: &NetworkConfig) -> Result<f64> {
    let n = normalize(config, k);
    let p = config.tier(j);
    z_function(x, p.alpha, p.antennas, n.antennas(j))
}

/// Small-x linearization 2M_k x / (α − 2). Assumes equal pathloss exponents.
pub fn z_low(x: f64, j: Tier, k: Tier, config: &NetworkConfig) -> f64 {
    let mk = config.tier(k).antennas as f64;
    2.0 * mk * x / (config.tier(j).alpha - 2.0)
}

/// Large-x form ℳ_j e^(2x/α) − 1 with ℳ_j = Γ(1−2/α)Γ(M_j+2/α) / (Γ(M_j) M̂_j^(2/α)).
/// Assumes equal pathloss exponents.
pub fn z_high(x: f64, j: Tier, k: Tier, config: &NetworkConfig) -> f64 {
    high_coefficient(j, k, config) * (2.0 * x / config.tier(j).alpha).exp() - 1.0
}

/// ℳ_j, the coefficient of e^(2x/α) in [`z_high`].
pub fn high_coefficient(j: Tier, k: Tier, config: &NetworkConfig) -> f64 {
    let p = config.tier(j);
    let m_hat = normalize(config, k).antennas(j);
    interference_moment(p.alpha, p.antennas) / m_hat.powf(2.0 / p.alpha)
}
