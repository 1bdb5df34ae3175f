use zboundary::curves::{CeVariant, EllipticCurve};
use zboundary::quad::QuadOptions;
use zboundary::sieve::sigma0;
use zboundary::specfun::{bessel_k0, bessel_k1, theta};
use zboundary::zseries::{dilation_residual, kappa_gamma, kappa_theta_integral, z_xnu, TruncationPlan, ZeEvaluator};
use zboundary::Budget;

fn b() -> Budget {
    Budget::default()
}

#[test]
fn weighted_z_sum_is_minus_ze0_plus_reflected_part() {
    let curve = EllipticCurve::builtin("11a").unwrap();
    let x = 0.3;
    let plan = TruncationPlan { t: 20_000.0, ..Default::default() };
    let ev = ZeEvaluator::for_curve(&curve, CeVariant::Conductor, plan).unwrap();
    let ze = ev.z_e(x, &b()).unwrap();
    let mut sum = 0.0;
    for nu in ev.c.support().take_while(|&nu| nu <= 20_000) {
        sum += ev.c.get(nu) * z_xnu(x, nu as f64, &b()).unwrap().value;
    }
    let want = ze.value + ze.neglected;
    assert!(want < 0.0);
    assert!((sum - want).abs() <= 1e-9 * want.abs(), "{sum} vs {want}");
}

fn reflected_oracle(x: f64, nu: f64) -> f64 {
    let mut s = 0.0;
    for n in 1..400u64 {
        let z = 2.0 * std::f64::consts::PI * n as f64 * nu / (x * x);
        if z > 700.0 {
            break;
        }
        let (k0, k1) = (bessel_k0(z, &b()).unwrap(), bessel_k1(z, &b()).unwrap());
        s += sigma0(n) as f64 * ((64.0 * z * z + 16.0 * z.powi(4)) * k0 - 64.0 * z.powi(3) * k1);
    }
    4.0 * s
}

#[test]
fn dilation_residual_is_the_reflected_difference() {
    for &(x, nu, nu0) in &[(1.0, 2.0, 1.0), (1.5, 3.0, 1.0), (0.8, 1.0, 2.0)] {
        let r = dilation_residual(x, nu, nu0, &b()).unwrap();
        let x0 = x * (nu / nu0).sqrt();
        let want = reflected_oracle(x, nu) - nu0 / nu * reflected_oracle(x0, nu0);
        assert!((r.value - want).abs() <= 1e-10 * want.abs() + r.bound, "{x} {nu}: {} vs {want}", r.value);
    }
}

#[test]
fn dilation_residual_vanishes_to_resolution_at_small_x() {
    // the reflected side is ~e^{−2πν/x²}, far below rounding of Z itself
    for &x in &[0.05, 0.1, 0.15] {
        let r = dilation_residual(x, 2.0, 1.0, &b()).unwrap();
        let z = z_xnu(x, 2.0, &b()).unwrap().value;
        assert!(r.value.abs() <= r.bound + 64.0 * f64::EPSILON * z.abs(), "x = {x}: {}", r.value);
    }
}

#[test]
fn kappa_is_the_theta_mellin_kernel() {
    let opts = QuadOptions::tol(1e-12, 0.0);
    for &x in &[0.5, 1.0, 2.0] {
        let q = kappa_theta_integral(x, &b(), &opts).unwrap();
        let k = kappa_gamma(x, &b()).unwrap();
        assert!((q - k).abs() < 1e-8 * k.abs().max(1.0), "{x}: {q} vs {k}");
    }
    let closed = std::f64::consts::PI.powf(0.25) / statrs::function::gamma::gamma(0.75);
    assert!((theta(1.0, &b()).unwrap() - closed).abs() < 1e-14);
}
