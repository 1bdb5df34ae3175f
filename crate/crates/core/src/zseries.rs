//! V(x,ν), Z(x,ν), the truncated Z_{E,0}(x) with its tail majorants, sign
//! scans, the dilation residual and the toy-case quadratures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consts::EULER_GAMMA;
use crate::curves::{CeVariant, EllipticCurve};
use crate::dirichlet::a_weights;
use crate::error::{Error, Result};
use crate::quad::{try_integrate, try_integrate_to_infinity, QuadOptions};
use crate::sieve::sigma0;
use crate::specfun::{
    eisenstein_e, kappa, kernel_k_reflected_scaled, kernel_k_scaled_with_error, theta_minus_one_auto,
};
use crate::{Budget, CoeffSeries};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
// exp(−745) underflows to zero in double precision
const EXP_CUTOFF: f64 = 745.0;

/// Q = e^γ/(4π).
pub fn q_const() -> f64 {
    EULER_GAMMA.exp() / (2.0 * TWO_PI)
}

/// (ε, n, λ_c, λ_γ) selecting a boundary-term family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZSeriesSpec {
    pub epsilon: i8,
    pub n: u32,
    pub lambda_c: u32,
    pub lambda_gamma: u32,
}

impl ZSeriesSpec {
    pub fn new(epsilon: i8, n: u32, lambda_c: u32, lambda_gamma: u32) -> Result<Self> {
        let s = Self { epsilon, n, lambda_c, lambda_gamma };
        s.validate()?;
        Ok(s)
    }

    /// The elliptic-curve family (+1, 2, 2, 2).
    pub const fn elliptic() -> Self {
        Self { epsilon: 1, n: 2, lambda_c: 2, lambda_gamma: 2 }
    }

    /// c ≡ 1, γ(s) = π^{−s/2}Γ(s/2): (+1, 1, 1, 1).
    pub const fn toy() -> Self {
        Self { epsilon: 1, n: 1, lambda_c: 1, lambda_gamma: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon == 1 || self.epsilon == -1) || self.n == 0 || self.lambda_c == 0 || self.lambda_gamma == 0 {
            return Err(Error::Config(format!("invalid series spec {self:?}")));
        }
        Ok(())
    }

    /// Anything other than the two exercised families.
    pub fn is_experimental(&self) -> bool {
        *self != Self::elliptic() && *self != Self::toy()
    }
}

/// (T, R, α, β, ε) of the error-bounded cutoff of Z_{E,0}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
}

impl Default for TruncationPlan {
    fn default() -> Self {
        Self { t: 1e5, r: 20.0, alpha: 0.5, beta: 2.0, eps: 0.1 }
    }
}

impl TruncationPlan {
    /// Default constants with T = R/x_lo², the smallest T admitting x_lo.
    pub fn for_x_min(x_lo: f64) -> Self {
        let d = Self::default();
        Self { t: (d.r / (x_lo * x_lo)).ceil(), ..d }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.t >= 1.0
            && self.r > 1.0
            && self.alpha > 0.0
            && self.alpha < 1.0
            && self.beta > 1.0
            && self.eps > 0.0
            && self.eps < 1.0
            && self.alpha * self.beta > self.eps;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "truncation plan needs T >= 1, R > 1, 0 < alpha < 1, beta > 1, 0 < eps < 1, alpha*beta > eps (got {self:?})"
            )))
        }
    }

    /// Smallest x the plan certifies: √(R/T).
    pub fn x_min(&self) -> f64 {
        (self.r / self.t).sqrt()
    }

    /// k = ⌈αβ + 1⌉.
    pub fn k(&self) -> u32 {
        (self.alpha * self.beta + 1.0 - 1e-12).ceil() as u32
    }

    pub fn cutoff(&self) -> usize {
        self.t.floor() as usize
    }
}

/// Σ cᵢ N^{aᵢ} e^{−rate·N}, a majorant for the N-th term of a series.
#[derive(Debug, Clone)]
struct ExpPoly {
    terms: Vec<(f64, f64)>,
    rate: f64,
}

impl ExpPoly {
    fn at(&self, n: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.0 > 0.0)
            .map(|&(c, a)| (c.ln() + a * n.ln() - self.rate * n).exp())
            .sum()
    }

    /// Σ_{N>n0} of the majorant when the term ratio is provably below 1.
    fn tail_after(&self, n0: u64) -> Option<f64> {
        let amax = self.terms.iter().map(|t| t.1).fold(0.0, f64::max);
        let next = (n0 + 1) as f64;
        let r = (-self.rate).exp() * (1.0 + 1.0 / next).powf(amax);
        if r < 1.0 {
            Some(self.at(next) / (1.0 - r))
        } else {
            None
        }
    }
}

/// √(π/2c): K₀(cN) ≤ √(π/2c)·N^{−1/2}e^{−cN} and K₁(z) ≤ K₀ bound·(1 + 1/(2z)).
fn lead(c: f64) -> f64 {
    (std::f64::consts::PI / (2.0 * c)).sqrt()
}

/// κ_γ(x) = 4Σ σ₀(N)K₀(2πNx).
pub fn kappa_gamma(x: f64, budget: &Budget) -> Result<f64> {
    kappa(x, budget)
}

/// 2e^{−πx²}, the inverse Mellin transform of π^{−s/2}Γ(s/2).
pub fn kappa_toy(x: f64) -> f64 {
    2.0 * (-std::f64::consts::PI * x * x).exp()
}

/// V(x,ν) = κ_γ(νx^{−2}) − x²κ_γ(νx²).
pub fn v(x: f64, nu: f64, budget: &Budget) -> Result<f64> {
    check_xnu(x, nu)?;
    if x == 1.0 {
        return Ok(0.0);
    }
    Ok(kappa(nu / (x * x), budget)? - x * x * kappa(nu * x * x, budget)?)
}

/// V(x,ν) through E(y): x²log x² + x²log Qν + log x² − log Qν + (x/√ν)(E(ν/x²) − E(νx²)).
pub fn v_eisenstein(x: f64, nu: f64, budget: &Budget) -> Result<f64> {
    check_xnu(x, nu)?;
    let lx2 = (x * x).ln();
    let lq = (q_const() * nu).ln();
    let e = eisenstein_e(nu / (x * x), budget)? - eisenstein_e(nu * x * x, budget)?;
    Ok(x * x * lx2 + x * x * lq + lx2 - lq + x / nu.sqrt() * e)
}

/// w_{a,b}(x) = (θ(a²/x²)−1)(θ(b²/x²)−1) − x²(θ(a²x²)−1)(θ(b²x²)−1).
pub fn w_ab(a: f64, b: f64, x: f64, budget: &Budget) -> Result<f64> {
    let t = |y: f64| theta_minus_one_auto(y, budget);
    let x2 = x * x;
    let first = t(a * a / x2)?;
    let first = if first == 0.0 { 0.0 } else { first * t(b * b / x2)? };
    let second = t(a * a * x2)?;
    let second = if second == 0.0 { 0.0 } else { second * t(b * b * x2)? };
    Ok(first - x2 * second)
}

/// V(x,ν) = ∫₀^∞ w_{a,ν/a}(x) da/a, by quadrature in log a.
pub fn v_integral(x: f64, nu: f64, budget: &Budget, opts: &QuadOptions<f64>) -> Result<f64> {
    check_xnu(x, nu)?;
    let centre = 0.5 * nu.ln();
    let f = |u: f64| {
        let a = (centre + u).exp();
        w_ab(a, nu / a, x, budget)
    };
    let span = 12.0 + x.ln().abs() + nu.ln().abs();
    Ok(try_integrate(f, -span, span, opts)?.value)
}

/// κ_γ(x) = ∫₀^∞ (θ(a²)−1)(θ(x²/a²)−1) da/a, by quadrature in log a.
pub fn kappa_theta_integral(x: f64, budget: &Budget, opts: &QuadOptions<f64>) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("kappa integral needs x > 0, got {x}")));
    }
    let centre = 0.5 * x.ln();
    let f = |u: f64| {
        let a = (centre + u).exp();
        let l = theta_minus_one_auto(a * a, budget)?;
        if l == 0.0 {
            return Ok(0.0);
        }
        Ok(l * theta_minus_one_auto(x * x / (a * a), budget)?)
    };
    let span = 12.0 + x.ln().abs();
    Ok(try_integrate(f, -span, span, opts)?.value)
}

fn check_xnu(x: f64, nu: f64) -> Result<()> {
    if x > 0.0 && nu > 0.0 && x.is_finite() && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("need x > 0 and nu > 0, got x = {x}, nu = {nu}")))
    }
}

/// A series value with a certified bound on its total error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    pub value: f64,
    pub bound: f64,
    pub terms: usize,
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }
    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// 4Σ_N σ₀(N)·g(N) with the N-th term majorised by `major` and error per
/// term reported by `term`. Stops when the tail is below the floor.
fn sigma0_series<F>(major: &ExpPoly, budget: &Budget, mut term: F) -> Result<Certified>
where
    F: FnMut(u64) -> Result<(f64, f64)>,
{
    let mut acc = Compensated::default();
    let mut err = 0.0;
    let mut mag = 0.0;
    let mut n = 1u64;
    loop {
        let (v, e) = term(n)?;
        let w = sigma0(n) as f64;
        acc.add(w * v);
        err += w * e;
        mag += (w * v).abs();
        if let Some(tail) = major.tail_after(n) {
            if tail <= budget.abs_tol.max(f64::EPSILON * 0.25 * mag) {
                let rounding = 4.0 * (err + 2.0 * f64::EPSILON * mag);
                return Ok(Certified { value: 4.0 * acc.value(), bound: 4.0 * tail + rounding, terms: n as usize });
            }
        }
        n += 1;
        if n as usize > budget.max_terms {
            return Err(Error::Precision(format!("series needs more than {} terms", budget.max_terms)));
        }
    }
}

/// Z(x,ν) = (x d/dx)⁴V(x,ν), termwise:
/// 4Σσ₀(N)[(64z²+16z⁴)K₀(z) − 64z³K₁(z) − 𝒦(Ax²)/A], A = 2πNν, z = A/x².
pub fn z_xnu(x: f64, nu: f64, budget: &Budget) -> Result<Certified> {
    check_xnu(x, nu)?;
    let rel = budget.rel_tol;
    // x^{−2} side, summed first
    let c1 = TWO_PI * nu / (x * x);
    let l1 = lead(c1) * 2.0;
    let m1 = ExpPoly {
        terms: vec![(l1 * 96.0 * c1 * c1, 2.0), (l1 * 64.0 * c1.powi(3), 3.0), (l1 * 16.0 * c1.powi(4), 4.0)],
        rate: c1,
    };
    let reflected = sigma0_series(&m1, budget, |n| {
        let z = c1 * n as f64;
        if z > EXP_CUTOFF {
            return Ok((0.0, 0.0));
        }
        let (v, e) = kernel_k_reflected_scaled(z, budget)?;
        let s = (-z).exp();
        Ok((v * s, (e + rel * (v.abs() + e)) * s))
    })?;
    // x² side
    let c2 = TWO_PI * nu * x * x;
    let l2 = lead(c2) * 2.0 * x * x;
    let m2 = ExpPoly {
        terms: vec![
            (l2 * 48.0, 0.0),
            (l2 * 64.0 * c2, 1.0),
            (l2 * 352.0 * c2 * c2, 2.0),
            (l2 * 128.0 * c2.powi(3), 3.0),
            (l2 * 16.0 * c2.powi(4), 4.0),
        ],
        rate: c2,
    };
    let direct = sigma0_series(&m2, budget, |n| {
        let y = c2 * n as f64;
        if y > EXP_CUTOFF {
            return Ok((0.0, 0.0));
        }
        let a = TWO_PI * nu * n as f64;
        let (v, e) = kernel_k_scaled_with_error(y, budget)?;
        let s = (-y).exp() / a;
        Ok((v * s, (e + rel * (v.abs() + e)) * s))
    })?;
    Ok(Certified {
        value: reflected.value - direct.value,
        bound: reflected.bound + direct.bound,
        terms: reflected.terms + direct.terms,
    })
}

/// Leading terms 16x²log x² + 16x²log(Qe⁴ν) of Z(x,ν) as x → 0.
pub fn z_asym_small(x: f64, nu: f64) -> f64 {
    16.0 * x * x * ((x * x).ln() + (q_const() * nu).ln() + 4.0)
}

/// Z(x,ν) − (ν₀/ν)Z(x√(ν/ν₀), ν₀).
pub fn dilation_residual(x: f64, nu: f64, nu0: f64, budget: &Budget) -> Result<Certified> {
    check_xnu(x, nu)?;
    check_xnu(x, nu0)?;
    if nu == nu0 {
        return Ok(Certified { value: 0.0, bound: 0.0, terms: 0 });
    }
    let a = z_xnu(x, nu, budget)?;
    let b = z_xnu(x * (nu / nu0).sqrt(), nu0, budget)?;
    let k = nu0 / nu;
    Ok(Certified { value: a.value - k * b.value, bound: a.bound + k * b.bound, terms: a.terms + b.terms })
}

/// Which tail majorant certifies a Z_{E,0} value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// 312√(2π)(k+5)!·M_ε/(k−ε)·T^ε(2πx²T)^{−k} chain.
    #[default]
    Chain,
    /// Envelope tail Σ_{n>T} with a(n) ≤ M₁·n.
    Sharp,
}

impl std::str::FromStr for BoundKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Self::Chain),
            "sharp" => Ok(Self::Sharp),
            _ => Err(Error::Usage(format!("bound kind must be `chain` or `sharp`, got `{s}`"))),
        }
    }
}

/// Z_{E,0} value with both tail majorants and its rounding allowance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZE0Report {
    pub value: f64,
    pub chain_bound: f64,
    pub sharp_bound: f64,
    pub rounding: f64,
    pub m_eps: f64,
    pub m_one: f64,
    pub k: u32,
    pub terms: usize,
}

impl ZE0Report {
    pub fn bound(&self, kind: BoundKind) -> f64 {
        match kind {
            BoundKind::Chain => self.chain_bound + self.rounding,
            BoundKind::Sharp => self.sharp_bound + self.rounding,
        }
    }
}

/// Smallest range over which growth constants are measured, so that a
/// short cutoff cannot hide the first nonzero weights.
pub const GROWTH_WINDOW: usize = 100_000;

/// Growth constants max a(n)/n^ε and max a(n)/n over 1 ≤ n ≤ limit.
pub fn growth_constants(a: &CoeffSeries, eps: f64, limit: usize) -> (f64, f64) {
    let mut m_eps: f64 = 0.0;
    let mut m_one: f64 = 0.0;
    for (i, &v) in a.coeffs().iter().enumerate().take(limit) {
        if v == 0.0 {
            continue;
        }
        let n = (i + 1) as f64;
        m_eps = m_eps.max(v.abs() / n.powf(eps));
        m_one = m_one.max(v.abs() / n);
    }
    (m_eps, m_one)
}

/// (2/π)Σ_{n≤T}(a(n)/n)𝒦(2πnx²) with its tail majorants.
pub fn z_e0_truncated(a: &CoeffSeries, x: f64, plan: &TruncationPlan, budget: &Budget) -> Result<ZE0Report> {
    plan.validate()?;
    let xmin = plan.x_min();
    if !(x >= xmin * (1.0 - 1e-12)) {
        return Err(Error::Domain(format!(
            "x = {x} is below the certified range x >= sqrt(R/T) = {xmin}; raise T"
        )));
    }
    let t = plan.cutoff();
    if a.limit() < t {
        return Err(Error::Usage(format!("weights known to {} but T = {t}", a.limit())));
    }
    let (m_eps, m_one) = growth_constants(a, plan.eps, a.limit());
    z_e0_with_growth(a, x, plan, budget, m_eps, m_one)
}

fn z_e0_with_growth(
    a: &CoeffSeries,
    x: f64,
    plan: &TruncationPlan,
    budget: &Budget,
    m_eps: f64,
    m_one: f64,
) -> Result<ZE0Report> {
    let t = plan.cutoff();
    let c = TWO_PI * x * x;
    let rel = budget.rel_tol;
    let slots = a.slots();
    let mut acc = Compensated::default();
    let mut err = 0.0;
    let mut mag = 0.0;
    let mut terms = 0usize;
    // once exp(−y) underflows every later term is below the floor; what is
    // left is charged to the rounding allowance through the envelope tail
    let mut stopped_at = t;
    for (n, &an) in slots.iter().enumerate().take(t + 1).skip(1) {
        let y = c * n as f64;
        if y > EXP_CUTOFF {
            stopped_at = n - 1;
            break;
        }
        if an == 0.0 {
            continue;
        }
        let (kv, ke) = kernel_k_scaled_with_error(y, budget)?;
        let s = (-y).exp() * an / n as f64;
        acc.add(kv * s);
        err += (ke + rel * kv.abs()) * s.abs();
        mag += (kv * s).abs();
        terms += 1;
    }
    let two_over_pi = 2.0 / std::f64::consts::PI;
    // |𝒦(y)| ≤ (16y⁵+128y⁴+352y³+64y²+48y)√(π/2y)e^{−y}; a(n) ≤ M₁n
    let tail_major = |m1: f64| {
        let l = two_over_pi * m1 * lead(c);
        ExpPoly {
            terms: vec![
                (l * 48.0 * c, 0.5),
                (l * 64.0 * c * c, 1.5),
                (l * 352.0 * c.powi(3), 2.5),
                (l * 128.0 * c.powi(4), 3.5),
                (l * 16.0 * c.powi(5), 4.5),
            ],
            rate: c,
        }
    };
    let major = tail_major(m_one);
    let dropped = if stopped_at < t {
        // terms stopped_at+1..=T (inside the truncation but underflowed)
        major.tail_after(stopped_at as u64).unwrap_or(f64::INFINITY)
    } else {
        0.0
    };
    let sharp = major.tail_after(t as u64).unwrap_or(f64::INFINITY);
    let k = plan.k();
    let kf = k as f64;
    let fact: f64 = (1..=k + 5).map(|i| i as f64).product();
    let chain = two_over_pi
        * 312.0
        * TWO_PI.sqrt()
        * fact
        * m_eps
        / (kf - plan.eps)
        * plan.t.powf(plan.eps)
        * (c * plan.t).powf(-kf);
    let rounding = two_over_pi * (err + 4.0 * f64::EPSILON * mag) + dropped;
    Ok(ZE0Report {
        value: two_over_pi * acc.value(),
        chain_bound: chain,
        sharp_bound: sharp,
        rounding,
        m_eps,
        m_one,
        k,
        terms,
    })
}

/// Z_E(x) = −Z_{E,0}(x) with the dropped reflected part reported alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZEReport {
    pub value: f64,
    pub ze0: ZE0Report,
    /// Σ_ν c(ν)·4Σ_N σ₀(N)·[(64z²+16z⁴)K₀(z) − 64z³K₁(z)], z = 2πNν/x²: the
    /// part of Σ c(ν)Z(x,ν) not represented by −Z_{E,0}.
    pub neglected: f64,
}

impl ZEReport {
    pub fn bound(&self, kind: BoundKind) -> f64 {
        self.ze0.bound(kind)
    }
}

/// Coefficients c(ν) with their divisor weights, prepared once per curve and
/// cutoff.
#[derive(Debug, Clone)]
pub struct ZeEvaluator {
    pub c: CoeffSeries,
    pub a: CoeffSeries,
    pub plan: TruncationPlan,
    pub m_eps: f64,
    pub m_one: f64,
}

impl ZeEvaluator {
    /// Weights for `curve` up to max(T, GROWTH_WINDOW); the growth constants
    /// are measured over the whole table.
    pub fn for_curve(curve: &EllipticCurve, variant: CeVariant, plan: TruncationPlan) -> Result<Self> {
        plan.validate()?;
        let c = curve.ce_coeffs(plan.cutoff().max(GROWTH_WINDOW), variant)?;
        Self::from_coeffs(c, plan)
    }

    pub fn from_coeffs(c: CoeffSeries, plan: TruncationPlan) -> Result<Self> {
        plan.validate()?;
        if c.limit() < plan.cutoff() {
            return Err(Error::Usage(format!("coefficients known to {} but T = {}", c.limit(), plan.cutoff())));
        }
        let a = a_weights(&c)?;
        let (m_eps, m_one) = growth_constants(&a, plan.eps, a.limit());
        Ok(Self { c, a, plan, m_eps, m_one })
    }

    pub fn z_e0(&self, x: f64, budget: &Budget) -> Result<ZE0Report> {
        let xmin = self.plan.x_min();
        if !(x >= xmin * (1.0 - 1e-12)) {
            return Err(Error::Domain(format!(
                "x = {x} is below the certified range x >= sqrt(R/T) = {xmin}; raise T"
            )));
        }
        z_e0_with_growth(&self.a, x, &self.plan, budget, self.m_eps, self.m_one)
    }

    pub fn z_e(&self, x: f64, budget: &Budget) -> Result<ZEReport> {
        let ze0 = self.z_e0(x, budget)?;
        let mut neglected = 0.0;
        for nu in self.c.support() {
            let z = TWO_PI * nu as f64 / (x * x);
            if z > EXP_CUTOFF {
                break;
            }
            let mut n = 1u64;
            while z * (n as f64) <= EXP_CUTOFF {
                let zn = z * n as f64;
                let (v, _) = kernel_k_reflected_scaled(zn, budget)?;
                neglected += 4.0 * self.c.get(nu) * sigma0(n) as f64 * v * (-zn).exp();
                n += 1;
            }
        }
        Ok(ZEReport { value: 0.0 - ze0.value, ze0, neglected })
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub x: f64,
    pub value: f64,
    pub bound: f64,
    pub sign: char,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Result of a sign scan over a log-spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignReport {
    pub points: Vec<GridPoint>,
    /// (x_left, x_right) around each certified sign change.
    pub brackets: Vec<(f64, f64)>,
    /// Sign of the first certified point, if any.
    pub prefix_sign: Option<char>,
    /// Largest grid x with every certified sign on [x_lo, x] equal to
    /// `prefix_sign`.
    pub prefix_end: Option<f64>,
    pub indeterminate: usize,
}

pub fn classify(value: f64, bound: f64) -> char {
    if value.is_nan() || bound.is_nan() {
        '?'
    } else if value == 0.0 && bound == 0.0 {
        '0'
    } else if value.abs() <= bound {
        '?'
    } else if value > 0.0 {
        '+'
    } else {
        '-'
    }
}

/// `points` log-spaced abscissae from x_lo to x_hi inclusive.
pub fn log_grid(x_lo: f64, x_hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(x_lo > 0.0 && x_hi > x_lo && points >= 2) {
        return Err(Error::Usage(format!("grid needs 0 < x_lo < x_hi and points >= 2 (got {x_lo}, {x_hi}, {points})")));
    }
    let (a, b) = (x_lo.ln(), x_hi.ln());
    let step = (b - a) / (points - 1) as f64;
    let mut g: Vec<f64> = (0..points).map(|i| (a + step * i as f64).exp()).collect();
    g[0] = x_lo;
    g[points - 1] = x_hi;
    Ok(g)
}

/// Evaluates `f` (returning value and bound) on a log grid in parallel and
/// reports certified signs. Evaluation failures become indeterminate points.
pub fn sign_scan<F>(f: F, x_lo: f64, x_hi: f64, points: usize) -> Result<SignReport>
where
    F: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    let grid = log_grid(x_lo, x_hi, points)?;
    let pts: Vec<GridPoint> = grid
        .par_iter()
        .map(|&x| match f(x) {
            Ok((value, bound)) => GridPoint { x, value, bound, sign: classify(value, bound), error: None },
            Err(e) => GridPoint { x, value: f64::NAN, bound: f64::INFINITY, sign: '?', error: Some(e.to_string()) },
        })
        .collect();
    Ok(summarize(pts))
}

pub fn summarize(points: Vec<GridPoint>) -> SignReport {
    let mut brackets = Vec::new();
    let mut last: Option<(f64, char)> = None;
    let mut prefix_sign = None;
    let mut prefix_end = None;
    let mut prefix_open = true;
    for p in &points {
        if p.sign != '+' && p.sign != '-' {
            continue;
        }
        if let Some((lx, ls)) = last {
            if ls != p.sign {
                brackets.push((lx, p.x));
                prefix_open = false;
            }
        }
        if prefix_sign.is_none() {
            prefix_sign = Some(p.sign);
        }
        if prefix_open {
            prefix_end = Some(p.x);
        }
        last = Some((p.x, p.sign));
    }
    let indeterminate = points.iter().filter(|p| p.sign == '?').count();
    SignReport { points, brackets, prefix_sign, prefix_end, indeterminate }
}

impl SignReport {
    /// CSV `x,value,bound,sign`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,value,bound,sign")?;
        for p in &self.points {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{}", p.x, p.value, p.bound, p.sign)?;
        }
        Ok(())
    }
}

/// h(x) = G(x^{−n}) − εx^n G(x^n) for G(y) = Σ c(ν)κ_γ(νy).
pub fn boundary_h<G>(g: &G, x: f64, spec: &ZSeriesSpec) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let n = spec.n as i32;
    let xn = x.powi(n);
    Ok(g(1.0 / xn)? - spec.epsilon as f64 * xn * g(xn)?)
}

/// Σ_ν κ_toy(νx) = θ(x²) − 1.
pub fn toy_g(x: f64, budget: &Budget) -> Result<f64> {
    theta_minus_one_auto(x * x, budget)
}

/// ω(s) = ∫₀¹ h(x)x^{s−n−1}dx through x = e^{−t}; beyond t_max the integrand
/// is replaced by a cubic fitted to h(e^{−t}) and integrated exactly.
pub fn omega_quadrature<H>(h: H, s: f64, spec: &ZSeriesSpec, opts: &QuadOptions<f64>) -> Result<f64>
where
    H: Fn(f64) -> Result<f64>,
{
    spec.validate()?;
    let sigma = s - spec.n as f64;
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("omega needs s > n = {}, got {s}", spec.n)));
    }
    let tmax = 40.0 / sigma;
    let body = try_integrate(|t: f64| Ok(h((-t).exp())? * (-sigma * t).exp()), 0.0, tmax, opts)?;
    // cubic through four nodes at and beyond tmax
    let nodes: Vec<f64> = (0..4).map(|i| tmax + i as f64 * 0.25 * tmax).collect();
    let vals: Vec<f64> = nodes.iter().map(|&t| h((-t).exp())).collect::<Result<_>>()?;
    let coeffs = cubic_through(&nodes, &vals);
    // ∫_{tmax}^∞ tᵏ e^{−σt} dt = e^{−σ tmax} Σ_{j≤k} k!/j! · tmax^j / σ^{k−j+1}
    let mut tail = 0.0;
    for (k, &ck) in coeffs.iter().enumerate() {
        let mut part = 0.0;
        let mut fact_ratio = 1.0; // k!/j!
        for j in (0..=k).rev() {
            part += fact_ratio * tmax.powi(j as i32) / sigma.powi((k - j + 1) as i32);
            if j > 0 {
                fact_ratio *= j as f64;
            }
        }
        tail += ck * part;
    }
    tail *= (-sigma * tmax).exp();
    Ok(body.value + tail)
}

fn cubic_through(xs: &[f64], ys: &[f64]) -> [f64; 4] {
    // Newton divided differences, then expand into monomial coefficients
    let mut d = ys.to_vec();
    for j in 1..4 {
        for i in (j..4).rev() {
            d[i] = (d[i] - d[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    let mut poly = [0.0f64; 4];
    poly[0] = d[3];
    for i in (0..3).rev() {
        // poly = poly·(t − xs[i]) + d[i]
        let mut next = [0.0f64; 4];
        for k in 0..3 {
            next[k + 1] += poly[k];
            next[k] -= poly[k] * xs[i];
        }
        next[0] += d[i];
        poly = next;
    }
    poly
}

/// ξ(s) = ∫₁^∞ G(x^n)x^{s−1}dx.
pub fn xi_quadrature<G>(g: G, s: f64, spec: &ZSeriesSpec, opts: &QuadOptions<f64>) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    spec.validate()?;
    let n = spec.n as i32;
    Ok(try_integrate_to_infinity(
        |x: f64| {
            let v = g(x.powi(n))?;
            Ok(if v == 0.0 { 0.0 } else { v * x.powf(s - 1.0) })
        },
        1.0,
        opts,
    )?
    .value)
}

/// ∫₀^∞ 𝒦(2πx)dx/x, as ∫ 𝒦(2πe^u)du.
pub fn kernel_log_integral(budget: &Budget, opts: &QuadOptions<f64>) -> Result<f64> {
    let f = |u: f64| {
        let y = TWO_PI * u.exp();
        if y > EXP_CUTOFF {
            return Ok(0.0);
        }
        let (v, _) = kernel_k_scaled_with_error(y, budget)?;
        Ok(v * (-y).exp())
    };
    // |𝒦(y)| ≤ 40y|log y| for y < 1e-3, so the left tail below −60 is < 1e-20
    let left = try_integrate(f, -60.0, 0.0, opts)?;
    let right = try_integrate(f, 0.0, (EXP_CUTOFF / TWO_PI).ln(), opts)?;
    Ok(left.value + right.value)
}
