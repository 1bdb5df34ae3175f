//! K₀, K₁, the kernel 𝒦, theta and the central Eisenstein value.
//!
//! K₀ and K₁ use the ascending series with the logarithmic term for
//! `x ≤ 2` and Steed's continued fraction (Temme's normalisation) above.

use crate::consts::{EULER_GAMMA, LOG_4PI};
use crate::error::{Error, Result};
use crate::num::{from_u64, lit, Real};
use crate::sieve::sigma0;

const SERIES_SWITCH: f64 = 2.0;

/// Accuracy contract honoured by every routine in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyBudget<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_terms: usize,
}

impl<T: Real> Default for AccuracyBudget<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        Self {
            rel_tol: lit::<T>(1e-12).max(eps * lit(64.0)),
            abs_tol: lit::<T>(1e-300).max(T::min_positive_value()),
            max_terms: 1_000_000,
        }
    }
}

impl<T: Real> AccuracyBudget<T> {
    pub fn new(rel_tol: T, abs_tol: T, max_terms: usize) -> Result<Self> {
        if !(rel_tol > T::zero()) || !(abs_tol > T::zero()) || max_terms == 0 {
            return Err(Error::Usage(format!(
                "accuracy budget needs rel_tol > 0, abs_tol > 0, max_terms >= 1 (got {rel_tol}, {abs_tol}, {max_terms})"
            )));
        }
        Ok(Self { rel_tol, abs_tol, max_terms })
    }

    /// Same budget with a different relative tolerance.
    pub fn with_rel_tol(self, rel_tol: T) -> Result<Self> {
        Self::new(rel_tol, self.abs_tol, self.max_terms)
    }

    /// `max(rel_tol·|value|, abs_tol)`.
    pub fn allowance(&self, value: T) -> T {
        (self.rel_tol * value.abs()).max(self.abs_tol)
    }
}

fn check_positive<T: Real>(x: T, what: &str) -> Result<()> {
    if x > T::zero() && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} requires a positive argument, got {x}")))
    }
}

/// Ascending series for (K₀, K₁), valid for `0 < x ≤ 2`.
fn k01_series<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<(T, T)> {
    let half = lit::<T>(0.5);
    let t = x * x * lit(0.25);
    let lg = (x * half).ln() + lit(EULER_GAMMA);
    let eps = T::epsilon();

    // K₀ = −(ln(x/2)+γ)·I₀ + Σ tᵏ/(k!)² Hₖ
    // K₁ = 1/x + ln(x/2)·I₁ − (x/4) Σ [ψ(k+1)+ψ(k+2)] tᵏ/(k!(k+1)!)
    let mut p0 = T::one(); // tᵏ/(k!)²
    let mut p1 = T::one(); // tᵏ/(k!(k+1)!)
    let mut h = T::zero(); // Hₖ
    let mut i0 = T::zero();
    let mut i1 = T::zero();
    let mut s0 = T::zero();
    let mut s1 = T::zero();
    let g = lit::<T>(EULER_GAMMA);
    let mut k = 0usize;
    loop {
        let kk = from_u64::<T>(k as u64);
        i0 = i0 + p0;
        i1 = i1 + p1;
        s0 = s0 + p0 * h;
        let psi_sum = h - g + (h + T::one() / (kk + T::one())) - g;
        s1 = s1 + p1 * psi_sum;
        if k > 0 && p0 * (T::one() + h.abs()) <= eps * (s0.abs() + i0) {
            break;
        }
        k += 1;
        if k > budget.max_terms {
            return Err(Error::Precision(format!("K0/K1 series did not converge at x = {x}")));
        }
        let kn = from_u64::<T>(k as u64);
        h = h + T::one() / kn;
        p0 = p0 * t / (kn * kn);
        p1 = p1 * t / (kn * (kn + T::one()));
    }
    let k0 = s0 - lg * i0;
    let i1 = i1 * x * half;
    let k1 = T::one() / x + (x * half).ln() * i1 - x * lit::<T>(0.25) * s1;
    Ok((k0, k1))
}

/// Steed/Temme continued fraction for (eˣK₀, eˣK₁), used for `x > 2`.
fn k01_scaled_cf<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<(T, T)> {
    let eps = T::epsilon();
    let two = lit::<T>(2.0);
    let a1 = lit::<T>(0.25);
    let mut b = two * (T::one() + x);
    let mut d = T::one() / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = T::zero();
    let mut q2 = T::one();
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = T::one() + q * delh;
    let mut i = 2usize;
    loop {
        let ii = from_u64::<T>(i as u64);
        a = a - two * (ii - T::one());
        c = -a * c / ii;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q = q + c * qnew;
        b = b + two;
        d = T::one() / (b + a * d);
        delh = (b * d - T::one()) * delh;
        h = h + delh;
        let dels = q * delh;
        s = s + dels;
        if (dels / s).abs() < eps {
            break;
        }
        i += 1;
        if i > budget.max_terms {
            return Err(Error::Precision(format!("K0/K1 continued fraction did not converge at x = {x}")));
        }
    }
    let h = a1 * h;
    let k0 = (T::PI() / (two * x)).sqrt() / s;
    let k1 = k0 * (x + lit(0.5) - h) / x;
    Ok((k0, k1))
}

/// (eˣK₀(x), eˣK₁(x)).
pub fn bessel_k01_scaled<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<(T, T)> {
    check_positive(x, "bessel_k")?;
    if x.is_infinite() {
        return Ok((T::zero(), T::zero()));
    }
    if x <= lit(SERIES_SWITCH) {
        let (k0, k1) = k01_series(x, budget)?;
        let e = x.exp();
        Ok((k0 * e, k1 * e))
    } else {
        k01_scaled_cf(x, budget)
    }
}

/// (K₀(x), K₁(x)). Values below the absolute floor may underflow to zero.
pub fn bessel_k01<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<(T, T)> {
    check_positive(x, "bessel_k")?;
    if x.is_infinite() {
        return Ok((T::zero(), T::zero()));
    }
    if x <= lit(SERIES_SWITCH) {
        k01_series(x, budget)
    } else {
        let (k0, k1) = k01_scaled_cf(x, budget)?;
        let e = (-x).exp();
        Ok((k0 * e, k1 * e))
    }
}

pub fn bessel_k0<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<T> {
    bessel_k01(x, budget).map(|v| v.0)
}

pub fn bessel_k1<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<T> {
    bessel_k01(x, budget).map(|v| v.1)
}

/// Envelope `√(π/2x)e^{−x}(1 ± |4ν²−1|/(8x))` for ν ∈ {0, 1}, as (lower, upper).
pub fn bessel_envelope<T: Real>(nu: u8, x: T) -> (T, T) {
    let lead = (T::PI() / (lit::<T>(2.0) * x)).sqrt() * (-x).exp();
    let w = if nu == 0 { T::one() } else { lit(3.0) };
    let r = w / (lit::<T>(8.0) * x);
    (lead * (T::one() - r), lead * (T::one() + r))
}

fn kernel_parts<T: Real>(y: T, k0: T, k1: T) -> (T, T) {
    let y2 = y * y;
    let a = (lit::<T>(16.0) * y2 * y2 + lit::<T>(288.0) * y2 + lit(16.0)) * y * k0;
    let b = (lit::<T>(128.0) * y2 + lit(64.0)) * y2 * k1;
    (a, b)
}

/// 𝒦(y) = (16y⁵+288y³+16y)K₀(y) − (128y⁴+64y²)K₁(y).
pub fn kernel_k<T: Real>(y: T, budget: &AccuracyBudget<T>) -> Result<T> {
    let (k0, k1) = bessel_k01(y, budget)?;
    let (a, b) = kernel_parts(y, k0, k1);
    Ok(a - b)
}

/// eʸ𝒦(y).
pub fn kernel_k_scaled<T: Real>(y: T, budget: &AccuracyBudget<T>) -> Result<T> {
    kernel_k_scaled_with_error(y, budget).map(|v| v.0)
}

/// (eʸ𝒦(y), bound on its absolute error). The bound accounts for the
/// cancellation between the K₀ and K₁ parts near the zeros of 𝒦.
pub fn kernel_k_scaled_with_error<T: Real>(y: T, budget: &AccuracyBudget<T>) -> Result<(T, T)> {
    let (k0, k1) = bessel_k01_scaled(y, budget)?;
    let (a, b) = kernel_parts(y, k0, k1);
    let v = a - b;
    let err = lit::<T>(16.0) * T::epsilon() * (a.abs() + b.abs());
    Ok((v, err))
}

/// (𝒦(y), absolute error bound).
pub fn kernel_k_with_error<T: Real>(y: T, budget: &AccuracyBudget<T>) -> Result<(T, T)> {
    let (v, e) = kernel_k_scaled_with_error(y, budget)?;
    let s = (-y).exp();
    Ok((v * s, e * s))
}

/// (x d/dx)⁴ K₀(A/x²) expressed in z = A/x²: (64z²+16z⁴)K₀(z) − 64z³K₁(z).
pub fn kernel_k_reflected<T: Real>(z: T, budget: &AccuracyBudget<T>) -> Result<T> {
    kernel_k_reflected_scaled(z, budget).map(|(v, _)| v * (-z).exp())
}

/// (e^z·(64z²+16z⁴)K₀(z) − e^z·64z³K₁(z), absolute error bound).
pub fn kernel_k_reflected_scaled<T: Real>(z: T, budget: &AccuracyBudget<T>) -> Result<(T, T)> {
    let (k0, k1) = bessel_k01_scaled(z, budget)?;
    let z2 = z * z;
    let a = (lit::<T>(64.0) + lit::<T>(16.0) * z2) * z2 * k0;
    let b = lit::<T>(64.0) * z2 * z * k1;
    Ok((a - b, lit::<T>(16.0) * T::epsilon() * (a.abs() + b.abs())))
}

/// Upper bounds for |𝒦(y)| and for |(64y²+16y⁴)K₀(y) − 64y³K₁(y)| from the
/// large-argument envelope, valid for y > 0.
pub fn kernel_majorants<T: Real>(y: T) -> (T, T) {
    let (_, k0) = bessel_envelope(0, y);
    let (_, k1) = bessel_envelope(1, y);
    let k0 = k0.max(T::zero());
    let y2 = y * y;
    let a = (lit::<T>(16.0) * y2 * y2 + lit::<T>(288.0) * y2 + lit(16.0)) * y * k0;
    let b = (lit::<T>(128.0) * y2 + lit(64.0)) * y2 * k1;
    let ra = (lit::<T>(64.0) + lit::<T>(16.0) * y2) * y2 * k0;
    let rb = lit::<T>(64.0) * y2 * y * k1;
    (a.max(b), ra.max(rb))
}

/// θ(x) = Σ_{k∈ℤ} e^{−πk²x} by direct summation.
pub fn theta<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<T> {
    Ok(T::one() + theta_minus_one(x, budget)?)
}

/// θ(x) − 1 = 2Σ_{k≥1} e^{−πk²x}, truncated once the tail bound
/// 2e^{−πK²x}/(1−e^{−πx}) is below the floor.
pub fn theta_minus_one<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<T> {
    check_positive(x, "theta")?;
    let pix = T::PI() * x;
    let denom = T::one() - (-pix).exp();
    let two = lit::<T>(2.0);
    let mut sum = T::zero();
    let mut k = 1u64;
    loop {
        let kk = from_u64::<T>(k);
        let term = two * (-pix * kk * kk).exp();
        sum = sum + term;
        let kn = kk + T::one();
        let tail = two * (-pix * kn * kn).exp() / denom;
        if tail <= budget.abs_tol.max(T::epsilon() * sum * lit(0.25)) {
            return Ok(sum);
        }
        k += 1;
        if k as usize > budget.max_terms {
            return Err(Error::Precision(format!("theta needs more than {} terms at x = {x}", budget.max_terms)));
        }
    }
}

/// θ(x) − 1, switching to θ(x) = x^{−1/2}θ(1/x) for x < 1.
pub fn theta_minus_one_auto<T: Real>(x: T, budget: &AccuracyBudget<T>) -> Result<T> {
    check_positive(x, "theta")?;
    if x >= T::one() {
        theta_minus_one(x, budget)
    } else {
        let inv = T::one() / x;
        Ok(inv.sqrt() * theta(inv, budget)? - T::one())
    }
}

/// Σ_{N≥1} σ₀(N)K₀(cN) and a bound on the truncated tail.
///
/// Terms are summed until the envelope tail 2√(π/2c)·e^{−cN}(1+1/(8cN))/(1−e^{−c})
/// drops below the floor.
pub fn sigma0_k0_sum<T: Real>(c: T, budget: &AccuracyBudget<T>) -> Result<(T, T)> {
    check_positive(c, "sigma0_k0_sum")?;
    let lead = lit::<T>(2.0) * (T::PI() / (lit::<T>(2.0) * c)).sqrt();
    let ratio = T::one() - (-c).exp();
    let tail_after = |n: u64| {
        let m = from_u64::<T>(n + 1) * c;
        lead * (-m).exp() * (T::one() + T::one() / (lit::<T>(8.0) * m)) / ratio
    };
    let mut sum = T::zero();
    let mut n = 1u64;
    loop {
        let (k0s, _) = bessel_k01_scaled(c * from_u64::<T>(n), budget)?;
        let arg = c * from_u64::<T>(n);
        sum = sum + from_u64::<T>(sigma0(n)) * k0s * (-arg).exp();
        let tail = tail_after(n);
        if tail <= budget.abs_tol.max(T::epsilon() * sum * lit(0.25)) {
            return Ok((sum, tail));
        }
        n += 1;
        if n as usize > budget.max_terms {
            return Err(Error::Precision(format!(
                "divisor-weighted K0 sum needs more than {} terms at c = {c}",
                budget.max_terms
            )));
        }
    }
}

/// κ(y) = 4Σ σ₀(N)K₀(2πNy).
pub fn kappa<T: Real>(y: T, budget: &AccuracyBudget<T>) -> Result<T> {
    check_positive(y, "kappa")?;
    let (s, _) = sigma0_k0_sum(lit::<T>(2.0) * T::PI() * y, budget)?;
    Ok(lit::<T>(4.0) * s)
}

/// E(y) = √y·log y + (γ − log 4π)√y + 4√y Σ σ₀(N)K₀(2πNy).
pub fn eisenstein_e<T: Real>(y: T, budget: &AccuracyBudget<T>) -> Result<T> {
    check_positive(y, "eisenstein_e")?;
    let r = y.sqrt();
    let k = kappa(y, budget)?;
    Ok(r * y.ln() + lit::<T>(EULER_GAMMA - LOG_4PI) * r + r * k)
}

/// Real ζ(s) for s ≥ 0, s ≠ 1, through the alternating η series with the
/// Borwein acceleration weights.
pub fn zeta_real(s: f64) -> Result<f64> {
    if !(s >= 0.0) || s == 1.0 {
        return Err(Error::Domain(format!("zeta_real is defined here for s >= 0, s != 1 (got {s})")));
    }
    const N: usize = 60;
    // d_k = n Σ_{i≤k} (n+i−1)! 4^i / ((n−i)! (2i)!)
    let n = N as f64;
    let mut d = [0.0f64; N + 1];
    let mut term = 1.0 / n; // i = 0 term divided by n: (n−1)!/n! = 1/n
    let mut acc = term;
    d[0] = n * acc;
    for (i, di) in d.iter_mut().enumerate().skip(1) {
        let fi = i as f64;
        term *= 4.0 * (n + fi - 1.0) * (n - fi + 1.0) / ((2.0 * fi - 1.0) * (2.0 * fi));
        acc += term;
        *di = n * acc;
    }
    let dn = d[N];
    let mut eta = 0.0;
    for (k, dk) in d.iter().take(N).enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        eta += sign * (dk - dn) / ((k + 1) as f64).powf(s);
    }
    eta = -eta / dn;
    Ok(eta / (1.0 - 2f64.powf(1.0 - s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b() -> AccuracyBudget<f64> {
        AccuracyBudget::default()
    }

    // K₀(x) = ∫₀^∞ e^{−x cosh t} dt, K₁(x) = ∫₀^∞ e^{−x cosh t} cosh t dt by
    // composite Simpson on a truncated range (integrand is smooth and decays
    // doubly exponentially).
    fn k_quad(x: f64, nu: i32) -> f64 {
        let tmax = (800.0 / x).max(2.0).acosh();
        let n = 20_000;
        let h = tmax / n as f64;
        let f = |t: f64| (-x * t.cosh()).exp() * t.cosh().powi(nu);
        let mut s = f(0.0) + f(tmax);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn spot_values() {
        assert!((bessel_k0(1.0, &b()).unwrap() - 0.421024438240708333).abs() < 1e-15);
        assert!((bessel_k0(0.1, &b()).unwrap() - 2.42706902470201661).abs() < 4e-15);
        assert!((bessel_k1(1.0, &b()).unwrap() - 0.601907230197234575).abs() < 1e-15);
        assert!((bessel_k1(2.0, &b()).unwrap() - 0.139865881816522427).abs() < 1e-15);
        assert!((kernel_k(1.0, &b()).unwrap() - 19.1616320391576283).abs() < 1e-12);
    }

    #[test]
    fn matches_quadrature_across_switch() {
        for &x in &[0.01, 0.5, 1.9, 2.0, 2.1, 3.0, 7.5, 20.0] {
            let (k0, k1) = bessel_k01(x, &b()).unwrap();
            assert!((k0 - k_quad(x, 0)).abs() <= 1e-12 * k0, "K0({x})");
            assert!((k1 - k_quad(x, 1)).abs() <= 1e-12 * k1, "K1({x})");
        }
    }

    #[test]
    fn envelope_holds_for_large_x() {
        for &x in &[10.0, 15.0, 40.0, 100.0] {
            let (k0, k1) = bessel_k01(x, &b()).unwrap();
            let (lo, hi) = bessel_envelope(0, x);
            assert!(lo <= k0 && k0 <= hi);
            let (lo, hi) = bessel_envelope(1, x);
            assert!(lo <= k1 && k1 <= hi);
        }
    }

    #[test]
    fn ordering_and_monotonicity() {
        let mut prev = f64::INFINITY;
        for i in 0..400 {
            let x = 1e-3 * 1.03f64.powi(i);
            let (k0, k1) = bessel_k01(x, &b()).unwrap();
            if k0 == 0.0 {
                break;
            }
            assert!(k1 > k0 && k0 < prev);
            prev = k0;
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(bessel_k0(0.0, &b()), Err(Error::Domain(_))));
        assert!(matches!(bessel_k1(-1.0, &b()), Err(Error::Domain(_))));
        assert!(matches!(theta(f64::NAN, &b()), Err(Error::Domain(_))));
        assert!(AccuracyBudget::new(0.0, 1e-300, 10).is_err());
    }

    #[test]
    fn f32_instance() {
        let b32 = AccuracyBudget::<f32>::default();
        let k = bessel_k0(1.0f32, &b32).unwrap();
        assert!((k - 0.421_024_43).abs() < 1e-6);
        let k = bessel_k1(5.0f32, &b32).unwrap();
        assert!((k as f64 - bessel_k1(5.0f64, &b()).unwrap()).abs() < 1e-6 * k as f64);
    }

    #[test]
    fn kernel_small_argument_limit() {
        let mut prev = f64::INFINITY;
        for i in 1..13 {
            let y = 10f64.powi(-i);
            let v = kernel_k(y, &b()).unwrap().abs();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn reflected_kernel_matches_log_derivative() {
        // (x d/dx)⁴ K₀(1/x²) by central differences in t = log x
        let f = |t: f64| bessel_k0((-2.0 * t).exp(), &b()).unwrap();
        for &x in &[0.7, 1.0, 1.4] {
            let t: f64 = f64::ln(x);
            let h = 1e-2;
            let d4 = (-f(t + 3.0 * h) + 12.0 * f(t + 2.0 * h) - 39.0 * f(t + h) + 56.0 * f(t) - 39.0 * f(t - h)
                + 12.0 * f(t - 2.0 * h)
                - f(t - 3.0 * h))
                / (6.0 * h.powi(4));
            let z = 1.0 / (x * x);
            let exact = kernel_k_reflected(z, &b()).unwrap();
            assert!((d4 - exact).abs() < 1e-4 * exact.abs().max(1e-3), "x={x}: {d4} vs {exact}");
        }
    }

    #[test]
    fn theta_values() {
        assert!((theta(1.0, &b()).unwrap() - 1.08643481121330801).abs() < 1e-15);
        for &x in &[0.5, 2.0, 10.0] {
            let l = theta(1.0 / x, &b()).unwrap();
            let r = x.sqrt() * theta(x, &b()).unwrap();
            assert!((l - r).abs() < 1e-12 * l);
        }
        assert!(theta_minus_one(50.0, &b()).unwrap() < 1e-60);
        let a = theta_minus_one_auto(0.3, &b()).unwrap();
        assert!((a - theta_minus_one(0.3, &b()).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn eisenstein_values() {
        assert!((eisenstein_e(1.0, &b()).unwrap() - (-1.95013246000097794)).abs() < 1e-13);
        assert!((kappa(1.0, &b()).unwrap() - 0.00367612206677999).abs() < 1e-15);
        for &y in &[1.3, 2.0, 5.0] {
            let d = eisenstein_e(y, &b()).unwrap() - eisenstein_e(1.0 / y, &b()).unwrap();
            assert!(d.abs() < 1e-10);
        }
        let y = 4.0f64;
        let lead = y.sqrt() * y.ln() + (EULER_GAMMA - LOG_4PI) * y.sqrt();
        let first = 8.0 * y.sqrt() * bessel_k0(2.0 * std::f64::consts::PI * y, &b()).unwrap();
        assert!((eisenstein_e(y, &b()).unwrap() - lead).abs() <= first);
    }

    #[test]
    fn sigma0_sum_tail_dominates_dropped_terms() {
        let c = 0.3;
        let (s, tail) = sigma0_k0_sum(c, &b()).unwrap();
        let mut direct = 0.0;
        for n in 1..2000u64 {
            direct += sigma0(n) as f64 * bessel_k0(c * n as f64, &b()).unwrap();
        }
        assert!((direct - s).abs() <= tail + 1e-14 * s);
    }

    #[test]
    fn zeta_spot_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((zeta_real(2.0).unwrap() - pi2 / 6.0).abs() < 1e-14);
        assert!((zeta_real(4.0).unwrap() - pi2 * pi2 / 90.0).abs() < 1e-14);
        assert!(zeta_real(1.0).is_err());
    }
}
