//! The self-verification battery: fourteen numbered criteria, each checked
//! against an independent oracle at a fixed tolerance and time limit.

use std::time::Instant;

use serde::Serialize;

use crate::curves::{CeVariant, EllipticCurve};
use crate::error::Result;
use crate::quad::QuadOptions;
use crate::specfun::{bessel_k01, eisenstein_e, theta};
use crate::stochastic::{d_omega_coeffs, sample_omega, sample_seed};
use crate::zseries::{
    boundary_h, kernel_log_integral, log_grid, omega_quadrature, sign_scan, toy_g, v, v_eisenstein, v_integral,
    xi_quadrature, z_xnu, BoundKind, TruncationPlan, ZSeriesSpec, ZeEvaluator,
};
use crate::Budget;

/// Knobs for a verification run, including fault injection for testing the
/// battery itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyContext {
    pub budget: Budget,
    /// Multiplies every K₀/K₁ value checked by the Bessel criterion.
    pub bessel_scale: f64,
    /// Seed for the random Euler-product samples.
    pub seed: u64,
}

impl Default for VerifyContext {
    fn default() -> Self {
        Self { budget: Budget::default(), bessel_scale: 1.0, seed: 20240601 }
    }
}

type Check = fn(&VerifyContext) -> Result<(bool, String)>;

pub struct Criterion {
    pub number: u32,
    pub id: &'static str,
    pub title: &'static str,
    pub time_limit_secs: f64,
    check: Check,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub number: u32,
    pub id: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub time_limit_secs: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {} ({:.2} s, limit {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.number,
            self.id,
            self.detail,
            self.seconds,
            self.time_limit_secs
        )
    }
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { number: 1, id: "bessel-accuracy", title: "K0, K1 against quadrature", time_limit_secs: 10.0, check: bessel_accuracy },
    Criterion { number: 2, id: "theta-modularity", title: "theta(1/x) = sqrt(x) theta(x)", time_limit_secs: 1.0, check: theta_modularity },
    Criterion { number: 3, id: "eisenstein-invariance", title: "E(y) = E(1/y)", time_limit_secs: 5.0, check: eisenstein_invariance },
    Criterion { number: 4, id: "v-two-route", title: "V by Bessel and Eisenstein routes", time_limit_secs: 10.0, check: v_two_route },
    Criterion { number: 5, id: "v-integral-oracle", title: "V against the double-theta integral", time_limit_secs: 30.0, check: v_integral_oracle },
    Criterion { number: 6, id: "z-derivative", title: "Z against finite differences of V", time_limit_secs: 20.0, check: z_derivative },
    Criterion { number: 7, id: "z-sign-structure", title: "sign structure of Z(x,1)", time_limit_secs: 10.0, check: z_sign_structure },
    Criterion { number: 8, id: "kernel-zero-integral", title: "integral of K(2 pi x) dx/x", time_limit_secs: 5.0, check: kernel_zero_integral },
    Criterion { number: 9, id: "truncation-certificate", title: "Z_E0(T) vs Z_E0(4T) within the bound", time_limit_secs: 120.0, check: truncation_certificate },
    Criterion { number: 10, id: "coefficient-nonnegativity", title: "c_E and c_omega nonnegative", time_limit_secs: 120.0, check: coefficient_nonnegativity },
    Criterion { number: 11, id: "toy-boundary-term", title: "toy omega(s) and the xi identity", time_limit_secs: 60.0, check: toy_boundary_term },
    Criterion { number: 12, id: "hasse-ap", title: "Hasse bound and a_p spot values", time_limit_secs: 30.0, check: hasse_ap },
    Criterion { number: 13, id: "small-x-negativity", title: "no certified positive Z_E for 37a on [0.25, 0.5]", time_limit_secs: 300.0, check: small_x_negativity },
    Criterion { number: 14, id: "goldfeld-trend", title: "partial Euler product trends", time_limit_secs: 600.0, check: goldfeld_trend },
];

pub fn find(id: &str) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id || c.number.to_string() == id)
}

pub fn run_one(c: &Criterion, ctx: &VerifyContext) -> Outcome {
    let start = Instant::now();
    let res = (c.check)(ctx);
    let seconds = start.elapsed().as_secs_f64();
    let (mut passed, mut detail) = match res {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if seconds > c.time_limit_secs {
        passed = false;
        detail.push_str("; over the time limit");
    }
    Outcome { number: c.number, id: c.id, passed, detail, seconds, time_limit_secs: c.time_limit_secs }
}

/// Runs every criterion, or only `only` when given.
pub fn run(ctx: &VerifyContext, only: Option<&str>) -> Vec<Outcome> {
    CRITERIA.iter().filter(|c| only.map_or(true, |o| c.id == o)).map(|c| run_one(c, ctx)).collect()
}

/// K_ν(x) = ½∫_ℝ e^{−x cosh t}cosh(νt)dt by the trapezoidal rule, which
/// converges geometrically for this entire, doubly decaying integrand.
pub fn bessel_quadrature_oracle(x: f64, nu: u32) -> f64 {
    let h = 1.0 / 128.0;
    let tmax = (760.0 / x).max(2.0).acosh();
    let f = |t: f64| (-x * t.cosh()).exp() * (nu as f64 * t).cosh();
    let mut s = 0.5 * f(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > tmax {
            break;
        }
        s += f(t);
        k += 1;
    }
    s * h
}

fn bessel_accuracy(ctx: &VerifyContext) -> Result<(bool, String)> {
    let grid = log_grid(1e-3, 50.0, 200)?;
    let mut worst: f64 = 0.0;
    let mut at = 0.0;
    for &x in &grid {
        let (k0, k1) = bessel_k01(x, &ctx.budget)?;
        for (val, nu) in [(k0, 0), (k1, 1)] {
            let oracle = bessel_quadrature_oracle(x, nu);
            let rel = (val * ctx.bessel_scale - oracle).abs() / oracle;
            if rel > worst {
                worst = rel;
                at = x;
            }
        }
    }
    Ok((worst <= 1e-12, format!("max relative error {worst:.2e} at x = {at:.4e} (tol 1e-12)")))
}

fn theta_modularity(ctx: &VerifyContext) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for x in log_grid(0.1, 10.0, 50)? {
        let d = (theta(1.0 / x, &ctx.budget)? - x.sqrt() * theta(x, &ctx.budget)?).abs();
        worst = worst.max(d);
    }
    Ok((worst <= 1e-12, format!("max |theta(1/x) - sqrt(x) theta(x)| = {worst:.2e} (tol 1e-12)")))
}

fn eisenstein_invariance(ctx: &VerifyContext) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for y in log_grid(1.05, 20.0, 20)? {
        let d = (eisenstein_e(y, &ctx.budget)? - eisenstein_e(1.0 / y, &ctx.budget)?).abs();
        worst = worst.max(d);
    }
    Ok((worst <= 1e-10, format!("max |E(y) - E(1/y)| = {worst:.2e} (tol 1e-10)")))
}

fn v_two_route(ctx: &VerifyContext) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &x in &[0.5, 0.8, 1.3] {
        for &nu in &[1.0, 2.0, 5.0] {
            let d = (v(x, nu, &ctx.budget)? - v_eisenstein(x, nu, &ctx.budget)?).abs();
            worst = worst.max(d);
        }
    }
    Ok((worst <= 1e-9, format!("max route difference {worst:.2e} on the 3x3 grid (tol 1e-9)")))
}

fn v_integral_oracle(ctx: &VerifyContext) -> Result<(bool, String)> {
    let opts = QuadOptions::tol(1e-12, 0.0);
    let q = v_integral(0.9, 1.0, &ctx.budget, &opts)?;
    let b = v(0.9, 1.0, &ctx.budget)?;
    let d = (q - b).abs();
    Ok((d <= 1e-8, format!("V(0.9,1): quadrature {q:.15e}, Bessel {b:.15e}, difference {d:.2e} (tol 1e-8)")))
}

/// Seven-point fourth-order stencil for the fourth derivative.
pub fn fourth_difference<F: Fn(f64) -> Result<f64>>(f: F, t: f64, h: f64) -> Result<f64> {
    let w = [-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0];
    let mut s = 0.0;
    for (i, wi) in w.iter().enumerate() {
        s += wi * f(t + (i as f64 - 3.0) * h)?;
    }
    Ok(s / (6.0 * h.powi(4)))
}

fn z_derivative(ctx: &VerifyContext) -> Result<(bool, String)> {
    let pts: [(f64, f64); 5] = [(0.5, 1.0), (0.8, 1.0), (1.2, 1.0), (2.0, 1.0), (0.8, 2.0)];
    let mut worst: f64 = 0.0;
    for &(x, nu) in &pts {
        let fd = fourth_difference(|t| v((-t).exp(), nu, &ctx.budget), -x.ln(), 1e-2)?;
        let z = z_xnu(x, nu, &ctx.budget)?.value;
        worst = worst.max((fd - z).abs() / z.abs());
    }
    Ok((worst <= 1e-5, format!("max relative difference {worst:.2e} at 5 points (tol 1e-5)")))
}

fn z_sign_structure(ctx: &VerifyContext) -> Result<(bool, String)> {
    let mut ok = true;
    let mut notes = Vec::new();
    for (&x, want) in [0.05, 0.1, 0.2, 3.0, 5.0, 10.0].iter().zip(['-', '-', '-', '+', '+', '+']) {
        let z = z_xnu(x, 1.0, &ctx.budget)?;
        let s = crate::zseries::classify(z.value, z.bound);
        if s != want {
            ok = false;
            notes.push(format!("x = {x}: sign {s}"));
        }
    }
    let scan = sign_scan(
        |x| {
            let z = z_xnu(x, 1.0, &ctx.budget)?;
            Ok((z.value, z.bound))
        },
        0.05,
        10.0,
        100,
    )?;
    ok &= scan.brackets.len() == 1;
    let br = scan.brackets.iter().map(|(a, b)| format!("[{a:.4}, {b:.4}]")).collect::<Vec<_>>().join(" ");
    Ok((
        ok,
        format!(
            "spot signs {}; {} sign change bracket(s) on [0.05, 10]: {br}",
            if notes.is_empty() { "as expected".to_string() } else { notes.join(", ") },
            scan.brackets.len()
        ),
    ))
}

fn kernel_zero_integral(ctx: &VerifyContext) -> Result<(bool, String)> {
    let v = kernel_log_integral(&ctx.budget, &QuadOptions::tol(1e-13, 0.0))?;
    Ok((v.abs() <= 1e-8, format!("integral = {v:.3e} (tol 1e-8)")))
}

fn truncation_certificate(ctx: &VerifyContext) -> Result<(bool, String)> {
    let curve = EllipticCurve::builtin("11a").expect("builtin");
    let plan = TruncationPlan { t: 1e6, ..TruncationPlan::default() };
    let big = TruncationPlan { t: 4e6, ..plan };
    let ev = ZeEvaluator::for_curve(&curve, CeVariant::Conductor, big)?;
    let grid = log_grid(plan.x_min(), 0.5, 20)?;
    let mut fails = 0;
    let mut sharp_ok = 0;
    let mut worst_ratio: f64 = 0.0;
    for &x in &grid {
        let small = crate::zseries::z_e0_truncated(&ev.a, x, &plan, &ctx.budget)?;
        let large = ev.z_e0(x, &ctx.budget)?;
        let diff = (small.value - large.value).abs();
        let bound = small.bound(BoundKind::Chain);
        if diff > bound {
            fails += 1;
        }
        if diff <= small.bound(BoundKind::Sharp) {
            sharp_ok += 1;
        }
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(diff / bound);
        }
    }
    Ok((
        fails == 0,
        format!(
            "11a, T = 1e6, 20 points on [{:.4}, 0.5]: {} violations of the chain bound (max diff/bound {worst_ratio:.2e}); envelope bound held at {sharp_ok}/20",
            plan.x_min(),
            fails
        ),
    ))
}

fn coefficient_nonnegativity(ctx: &VerifyContext) -> Result<(bool, String)> {
    let mut notes = Vec::new();
    let mut ok = true;
    for name in ["11a", "37a"] {
        let c = EllipticCurve::builtin(name).expect("builtin").ce_coeffs(100_000, CeVariant::Conductor)?;
        let (i, m) = c.min();
        ok &= m >= 0.0;
        notes.push(format!("{name}: min c = {m} at {i}"));
    }
    let mut worst = f64::INFINITY;
    for i in 0..100 {
        let omega = sample_omega(&Default::default(), 100, sample_seed(ctx.seed, i))?;
        // d_omega_coeffs rejects any negative coefficient itself
        let c = d_omega_coeffs(&omega, 10_000)?;
        worst = worst.min(c.min().1);
    }
    ok &= worst >= 0.0;
    notes.push(format!("100 omega samples: min c = {worst}"));
    Ok((ok, notes.join("; ")))
}

fn toy_boundary_term(ctx: &VerifyContext) -> Result<(bool, String)> {
    let spec = ZSeriesSpec::toy();
    let opts = QuadOptions::tol(1e-12, 0.0);
    let g = |x: f64| toy_g(x, &ctx.budget);
    let mut worst: f64 = 0.0;
    for &s in &[2.0, 3.0, 4.0] {
        let w = omega_quadrature(|x| boundary_h(&g, x, &spec), s, &spec, &opts)?;
        worst = worst.max((w - (1.0 / (1.0 - s) + 1.0 / s)).abs());
    }
    // n⁻¹γ(s/n)D(s/n) − ξ(s) − εξ(n−s) + εω(s) at s = 3 with γ(s) = π^{−s/2}Γ(s/2), D = ζ
    let s = 3.0;
    let gamma_side = std::f64::consts::PI.powf(-s / 2.0) * statrs::function::gamma::gamma(s / 2.0)
        * crate::specfun::zeta_real(s)?;
    let xi = |s: f64| xi_quadrature(g, s, &spec, &opts);
    let omega = omega_quadrature(|x| boundary_h(&g, x, &spec), s, &spec, &opts)?;
    let closure = gamma_side - xi(s)? - xi(1.0 - s)? + omega;
    let ok = worst <= 1e-8 && closure.abs() <= 1e-7;
    Ok((ok, format!("max |omega - closed form| = {worst:.2e} (tol 1e-8); identity residual at s = 3: {closure:.2e} (tol 1e-7)")))
}

fn hasse_ap(_ctx: &VerifyContext) -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for name in ["11a", "37a"] {
        let c = EllipticCurve::builtin(name).expect("builtin");
        for r in c.ap_table(10_000, u64::MAX)? {
            if r.is_good() {
                let ratio = (r.ap as f64).abs() / (2.0 * (r.prime as f64).sqrt());
                worst = worst.max(ratio);
                ok &= ratio <= 1.0;
            }
        }
    }
    let e = EllipticCurve::builtin("37a").expect("builtin");
    let mut spots = Vec::new();
    for (p, want) in [(2u64, -2i64), (3, -3), (5, -2)] {
        let got = e.ap(p)?.ap;
        let brute = p as i64 + 1 - e.count_points_naive(p) as i64;
        ok &= got == want && brute == want;
        spots.push(format!("a_{p} = {got}"));
    }
    Ok((ok, format!("max |a_p|/(2 sqrt p) = {worst:.4} over good p <= 1e4; 37a: {}", spots.join(", "))))
}

fn small_x_negativity(ctx: &VerifyContext) -> Result<(bool, String)> {
    let curve = EllipticCurve::builtin("37a").expect("builtin");
    // T = R/x_lo² = 320 would sit below the first nonzero weight at 37² = 1369
    let plan = TruncationPlan::default();
    let ev = ZeEvaluator::for_curve(&curve, CeVariant::Conductor, plan)?;
    let mut counts = Vec::new();
    let mut ok = true;
    for kind in [BoundKind::Chain, BoundKind::Sharp] {
        let scan = sign_scan(
            |x| {
                let r = ev.z_e(x, &ctx.budget)?;
                Ok((r.value, r.bound(kind)))
            },
            0.25,
            0.5,
            26,
        )?;
        let pos = scan.points.iter().filter(|p| p.sign == '+').count();
        let neg = scan.points.iter().filter(|p| p.sign == '-').count();
        ok &= pos == 0;
        let zero = scan.points.iter().filter(|p| p.sign == '0').count();
        counts.push(format!(
            "{kind:?}: {neg} negative, {pos} positive, {} indeterminate, {zero} underflowed to 0",
            scan.indeterminate
        ));
    }
    let first = ev.c.support().next().unwrap_or(0);
    Ok((ok, format!("37a on [0.25, 0.5], T = {} (first nonzero c at {first}): {}", plan.t, counts.join("; "))))
}

fn goldfeld_trend(_ctx: &VerifyContext) -> Result<(bool, String)> {
    let ladder = [1e2, 3e2, 1e3, 3e3, 1e4, 3e4, 1e5];
    let e37 = EllipticCurve::builtin("37a").expect("builtin").goldfeld_ladder(&ladder, 1)?;
    let e11 = EllipticCurve::builtin("11a").expect("builtin").goldfeld_ladder(&ladder, 0)?;
    let pick = |rows: &[crate::curves::GoldfeldRow], t: f64| rows.iter().find(|r| r.t == t).map(|r| r.trend).unwrap_or(f64::NAN);
    let col: Vec<f64> = [1e3, 1e4, 1e5].iter().map(|&t| pick(&e37, t)).collect();
    let ratio = col.iter().cloned().fold(f64::MIN, f64::max) / col.iter().cloned().fold(f64::MAX, f64::min);
    let l4 = pick(&e11, 1e4);
    let l5 = pick(&e11, 1e5);
    let change = (l5 / l4 - 1.0).abs();
    let c1_negative = e11.iter().chain(&e37).all(|r| r.c1 < 0.0);
    let ok = ratio <= 2.0 && change <= 0.25 && c1_negative;
    let fmt = |rows: &[crate::curves::GoldfeldRow]| {
        rows.iter().map(|r| format!("{:.0e}:{:.5}", r.t, r.trend)).collect::<Vec<_>>().join(" ")
    };
    Ok((
        ok,
        format!(
            "37a L_T log T max/min = {ratio:.3} (tol 2); 11a L_T change 1e4->1e5 = {:.1}% (tol 25%); C1 < 0: {c1_negative}; ladder 37a [{}] 11a [{}]",
            100.0 * change,
            fmt(&e37),
            fmt(&e11)
        ),
    ))
}
