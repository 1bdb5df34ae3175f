//! Elliptic curves over Q: traces of Frobenius, reduction types, the
//! coefficient sequences fed to Z_E, partial Euler products at s = 1 and
//! the constant C₁(T).

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::consts::{GAMMA_QUARTER, ZETA_HALF, ZETA_ZERO};
use crate::dirichlet::{assemble_multiplicative, invert_series, mul_series, shift_support, square_support, Series};
use crate::error::{Error, Result};
use crate::sieve::{factorize, is_prime, primes_up_to};
use crate::CoeffSeries;

/// Largest prime for which a_p is computed by point counting unless raised.
pub const DEFAULT_COUNT_BOUND: u64 = 1_000_000;

/// Integral Weierstrass model y² + a1xy + a3y = x³ + a2x² + a4x + a6 with
/// its conductor and optional bad-prime data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EllipticCurve {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
    pub conductor: u64,
    #[serde(default, rename = "bad_ap", skip_serializing_if = "BTreeMap::is_empty")]
    pub bad_ap_override: BTreeMap<u64, i64>,
    #[serde(default, rename = "fiber_q", skip_serializing_if = "Option::is_none")]
    pub singular_fiber_q: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reduction {
    Good,
    SplitMultiplicative,
    NonsplitMultiplicative,
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionInfo {
    pub prime: u64,
    pub kind: Reduction,
    pub ap: i64,
}

impl ReductionInfo {
    fn bad(prime: u64, ap: i64) -> Self {
        let kind = match ap {
            1 => Reduction::SplitMultiplicative,
            -1 => Reduction::NonsplitMultiplicative,
            _ => Reduction::Additive,
        };
        Self { prime, kind, ap }
    }

    pub fn is_good(&self) -> bool {
        self.kind == Reduction::Good
    }
}

/// Which coefficient sequence c(ν) to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CeVariant {
    /// q_E^{−2s} ζ_E(2s)²
    #[default]
    #[serde(rename = "qE")]
    Conductor,
    /// c_E^{1−2s} n_E(2s)² ζ_E(2s)² with c_E = q_E ∏ q_j
    #[serde(rename = "nE")]
    FiberData,
}

fn modp(v: i128, p: u64) -> u64 {
    v.rem_euclid(p as i128) as u64
}

fn legendre(a: u64, p: u64) -> i64 {
    // Euler's criterion
    let a = a % p;
    if a == 0 {
        return 0;
    }
    let mut result = 1u64;
    let mut base = a;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            result = ((result as u128 * base as u128) % p as u128) as u64;
        }
        base = ((base as u128 * base as u128) % p as u128) as u64;
        e >>= 1;
    }
    if result == 1 {
        1
    } else {
        -1
    }
}

impl EllipticCurve {
    pub fn new(coeffs: [i64; 5], conductor: u64) -> Self {
        let [a1, a2, a3, a4, a6] = coeffs;
        Self { a1, a2, a3, a4, a6, conductor, bad_ap_override: BTreeMap::new(), singular_fiber_q: None }
    }

    pub fn with_override(mut self, p: u64, ap: i64) -> Self {
        self.bad_ap_override.insert(p, ap);
        self
    }

    pub fn with_fiber_q(mut self, q: Vec<u64>) -> Self {
        self.singular_fiber_q = Some(q);
        self
    }

    /// Named curves "11a" and "37a".
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "11a" | "11a1" => Some(Self::new([0, -1, 1, -10, -20], 11).with_override(11, 1)),
            "37a" | "37a1" => Some(Self::new([0, 0, 1, -1, 0], 37).with_override(37, -1)),
            _ => None,
        }
    }

    /// Parses "a1,a2,a3,a4,a6".
    pub fn parse_inline(s: &str, conductor: u64) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Config(format!("expected five integers a1,a2,a3,a4,a6, got `{s}`")));
        }
        let mut c = [0i64; 5];
        for (slot, part) in c.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|_| Error::Config(format!("`{part}` is not an integer in `{s}`")))?;
        }
        let curve = Self::new(c, conductor);
        curve.validate()?;
        Ok(curve)
    }

    /// (b2, b4, b6, b8).
    pub fn b_invariants(&self) -> (i128, i128, i128, i128) {
        let (a1, a2, a3, a4, a6) =
            (self.a1 as i128, self.a2 as i128, self.a3 as i128, self.a4 as i128, self.a6 as i128);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        (b2, b4, b6, b8)
    }

    pub fn discriminant(&self) -> i128 {
        let (b2, b4, b6, b8) = self.b_invariants();
        -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    }

    pub fn validate(&self) -> Result<()> {
        if self.discriminant() == 0 {
            return Err(Error::Config("singular model: discriminant is zero".into()));
        }
        if self.conductor == 0 {
            return Err(Error::Config("conductor must be positive".into()));
        }
        for (&p, &ap) in &self.bad_ap_override {
            if !(-1..=1).contains(&ap) {
                return Err(Error::Config(format!("override a_{p} = {ap} is not in {{-1, 0, 1}}")));
            }
            if self.conductor % p != 0 {
                return Err(Error::Config(format!("override at p = {p}, which does not divide the conductor")));
            }
        }
        if let Some(q) = &self.singular_fiber_q {
            let mut seen = q.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != q.len() {
                return Err(Error::Config("fiber q_j entries must be pairwise distinct".into()));
            }
            if q.iter().any(|&v| v < 2 || factorize(v).len() != 1) {
                return Err(Error::Config("fiber q_j entries must be prime powers".into()));
            }
        }
        Ok(())
    }

    fn conductor_exponent(&self, p: u64) -> u32 {
        let mut n = self.conductor;
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        e
    }

    /// Number of projective points over F_p by enumerating every (x, y).
    pub fn count_points_naive(&self, p: u64) -> u64 {
        let m = |v: i64| v.rem_euclid(p as i64) as u64;
        let (a1, a2, a3, a4, a6) = (m(self.a1), m(self.a2), m(self.a3), m(self.a4), m(self.a6));
        let mut count = 1u64;
        for x in 0..p {
            let rhs = (((x * x % p) * x) % p + a2 * (x * x % p) % p + a4 * x % p + a6) % p;
            for y in 0..p {
                let lhs = (y * y % p + a1 * x % p * y % p + a3 * y % p) % p;
                if lhs == rhs {
                    count += 1;
                }
            }
        }
        count
    }

    /// a_p = p + 1 − #E(F_p) for a prime of good reduction.
    fn ap_good(&self, p: u64) -> i64 {
        if p <= 3 {
            return p as i64 + 1 - self.count_points_naive(p) as i64;
        }
        // (2y + a1x + a3)² = 4x³ + b2x² + 2b4x + b6
        let (b2, b4, b6, _) = self.b_invariants();
        let (c2, c1, c0) = (modp(b2, p), modp(2 * b4, p), modp(b6, p));
        let mut qr = vec![-1i8; p as usize];
        qr[0] = 0;
        for y in 1..=(p - 1) / 2 {
            qr[(y * y % p) as usize] = 1;
        }
        let mut sum = 0i64;
        for x in 0..p {
            let g = (((4 * x + c2) % p * x + c1) % p * x + c0) % p;
            sum += qr[g as usize] as i64;
        }
        -sum
    }

    /// Reduction type at a bad odd prime from the tangent directions at the
    /// singular point of Y² = g(x).
    fn tangent_test(&self, p: u64) -> Result<ReductionInfo> {
        let (b2, b4, b6, _) = self.b_invariants();
        let (c2, c1, c0) = (modp(b2, p), modp(2 * b4, p), modp(b6, p));
        let g = |x: u64| (((4 * x + c2) % p * x + c1) % p * x + c0) % p;
        let dg = |x: u64| ((12 * x + 2 * c2) % p * x + c1) % p;
        let x0 = (0..p)
            .find(|&x| g(x) == 0 && dg(x) == 0)
            .ok_or_else(|| Error::Config(format!("p = {p} divides the conductor but the model is smooth there")))?;
        let slope2 = (12 * x0 + c2) % p;
        if slope2 == 0 {
            return Ok(ReductionInfo::bad(p, 0));
        }
        Ok(ReductionInfo::bad(p, legendre(slope2, p)))
    }

    /// Reduction data at the prime p, counting points for good p ≤ `bound`.
    pub fn ap_with_bound(&self, p: u64, bound: u64) -> Result<ReductionInfo> {
        if !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not prime")));
        }
        if let Some(&ap) = self.bad_ap_override.get(&p) {
            return Ok(ReductionInfo::bad(p, ap));
        }
        let e = self.conductor_exponent(p);
        if e == 0 {
            if self.discriminant() % p as i128 == 0 {
                return Err(Error::Config(format!(
                    "p = {p} divides the discriminant but not the conductor; the model is not minimal"
                )));
            }
            if p > bound {
                return Err(Error::Bound { prime: p, bound });
            }
            return Ok(ReductionInfo { prime: p, kind: Reduction::Good, ap: self.ap_good(p) });
        }
        if e >= 2 {
            return Ok(ReductionInfo::bad(p, 0));
        }
        if p == 2 {
            return Err(Error::RequiresOverride(p));
        }
        let info = self.tangent_test(p)?;
        if info.kind == Reduction::Additive {
            // p ∥ conductor forces multiplicative reduction; an additive
            // verdict means the model or the conductor is off at p
            return Err(if p == 3 {
                Error::RequiresOverride(p)
            } else {
                Error::Config(format!("tangent test at p = {p} contradicts p || conductor"))
            });
        }
        Ok(info)
    }

    pub fn ap(&self, p: u64) -> Result<ReductionInfo> {
        self.ap_with_bound(p, DEFAULT_COUNT_BOUND)
    }

    /// Reduction data for every prime p ≤ limit, in increasing order.
    pub fn ap_table(&self, limit: u64, bound: u64) -> Result<Vec<ReductionInfo>> {
        primes_up_to(limit).into_par_iter().map(|p| self.ap_with_bound(p, bound)).collect()
    }

    /// Coefficients a(n) of L(E, s).
    pub fn l_coeffs(&self, n: usize) -> Result<CoeffSeries> {
        let table = ap_map(self, n as u64)?;
        let s = assemble_multiplicative(n, "L(E,s)", |p, kmax| {
            let info = table[&p];
            let ap = info.ap as f64;
            let mut out = vec![1.0; kmax + 1];
            if kmax >= 1 {
                out[1] = ap;
            }
            for k in 2..=kmax {
                out[k] = if info.is_good() { ap * out[k - 1] - p as f64 * out[k - 2] } else { ap * out[k - 1] };
            }
            Ok(out)
        })?;
        Ok(s)
    }

    /// Coefficients of ζ(s)²ζ(s−1)²/L(E,s)², assembled from local series.
    pub fn zeta_e_sq_coeffs(&self, n: usize) -> Result<CoeffSeries> {
        let table = ap_map(self, n as u64)?;
        assemble_multiplicative(n, "zeta_E^2", |p, kmax| Ok(zeta_e_sq_local(&table[&p], kmax)))
    }

    /// The sequence c(ν) whose boundary term is Z_E, up to N.
    pub fn ce_coeffs(&self, n: usize, variant: CeVariant) -> Result<CoeffSeries> {
        if n == 0 {
            return Err(Error::Usage("a coefficient series needs limit >= 1".into()));
        }
        let q = self.conductor as usize;
        let (scale_q, extra) = match variant {
            CeVariant::Conductor => (q, None),
            CeVariant::FiberData => {
                let qs = self.singular_fiber_q.clone().ok_or_else(|| {
                    Error::Config("the fiber-data variant needs the singular fiber q_j list".into())
                })?;
                let c_e = qs.iter().try_fold(q, |acc, &v| acc.checked_mul(v as usize));
                let c_e = c_e.ok_or_else(|| Error::Config("c_E overflows".into()))?;
                (c_e, Some(qs))
            }
        };
        let label = match variant {
            CeVariant::Conductor => "cE[qE]",
            CeVariant::FiberData => "cE[nE]",
        };
        let q2 = scale_q.checked_mul(scale_q).ok_or_else(|| Error::Config("scale squared overflows".into()))?;
        let inner = n / q2;
        if inner == 0 {
            return Series::zeros(n, label);
        }
        let m = isqrt(inner);
        let mut beta = self.zeta_e_sq_coeffs(m)?;
        if let Some(qs) = extra {
            beta = crate::dirichlet::convolve(&beta, &n_e_sq_series(&qs, m)?)?;
        }
        let sq = square_support(&beta, inner)?;
        let mut c = shift_support(&sq, scale_q, n)?;
        if variant == CeVariant::FiberData {
            c = c.scale(scale_q as f64);
        }
        Ok(c.with_label(label))
    }
}

fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// n_E(s)² = ∏_j (1 − q_j^{1−s})^{−2} = ∏_j Σ_k (k+1) q_j^k (q_j^k)^{−s}, up to M.
fn n_e_sq_series(qs: &[u64], m: usize) -> Result<CoeffSeries> {
    let mut acc = Series::delta(m)?;
    for &q in qs {
        let mut f = vec![0.0; m];
        let mut qk = 1usize;
        let mut k = 0u32;
        while qk <= m {
            f[qk - 1] = (k + 1) as f64 * qk as f64;
            k += 1;
            qk = match qk.checked_mul(q as usize) {
                Some(v) => v,
                None => break,
            };
        }
        acc = crate::dirichlet::convolve(&acc, &Series::from_values(f, format!("n_E[{q}]"))?)?;
    }
    Ok(acc.with_label("n_E^2"))
}

fn ap_map(curve: &EllipticCurve, limit: u64) -> Result<BTreeMap<u64, ReductionInfo>> {
    curve.validate()?;
    Ok(curve.ap_table(limit, u64::MAX)?.into_iter().map(|r| (r.prime, r)).collect())
}

/// Local series of ζ²ζ(s−1)²/L² at p to order kmax:
/// (1−u)^{−2}(1−pu)^{−2}·(1 − a_p u + p u²)² (good) or ·(1 − a_p u)² (bad).
pub fn zeta_e_sq_local(info: &ReductionInfo, kmax: usize) -> Vec<f64> {
    let p = info.prime as f64;
    let ap = info.ap as f64;
    let euler: Vec<f64> = if info.is_good() { vec![1.0, -ap, p] } else { vec![1.0, -ap] };
    let num = mul_series(&euler, &euler, kmax);
    let den1 = invert_series(&mul_series(&[1.0, -1.0], &[1.0, -1.0], 2), kmax);
    let den2 = invert_series(&mul_series(&[1.0, -p], &[1.0, -p], 2), kmax);
    mul_series(&mul_series(&num, &den1, kmax), &den2, kmax)
}

/// L_T(E,1) from reduction data, multiplying local factors in the given
/// order with double-double accumulation.
pub fn partial_euler_product(table: &[ReductionInfo]) -> f64 {
    let mut acc = TwoFloat::from_f64(1.0);
    for r in table {
        let p = TwoFloat::from_f64(r.prime as f64);
        let ap = TwoFloat::from_f64(r.ap as f64);
        let mut den = TwoFloat::from_f64(1.0) - ap / p;
        if r.is_good() {
            den += TwoFloat::from_f64(1.0) / p;
        }
        acc /= den;
    }
    acc.hi() + acc.lo()
}

impl EllipticCurve {
    /// L_T(E,1) = ∏_{p≤T} local factor at s = 1.
    pub fn partial_euler_l1(&self, t: f64) -> Result<f64> {
        if !(t >= 2.0) {
            return Err(Error::Domain(format!("partial Euler product needs T >= 2, got {t}")));
        }
        self.validate()?;
        Ok(partial_euler_product(&self.ap_table(t.floor() as u64, DEFAULT_COUNT_BOUND.max(t as u64))?))
    }

    /// C₁(T) = −q_E^{−1}·Γ(1/4)²/(16√2)·ζ(0)²ζ(1/2)²/L_T(E,1)².
    pub fn goldfeld_c1(&self, t: f64) -> Result<f64> {
        goldfeld_c1_from(self.conductor, self.partial_euler_l1(t)?)
    }

    /// Rows (T, L_T(E,1), C₁(T), L_T·(log T)^r) for each T of the ladder,
    /// sharing one a_p table.
    pub fn goldfeld_ladder(&self, ladder: &[f64], r: u32) -> Result<Vec<GoldfeldRow>> {
        self.validate()?;
        let tmax = ladder.iter().cloned().fold(2.0, f64::max);
        let table = self.ap_table(tmax.floor() as u64, u64::MAX)?;
        ladder
            .iter()
            .map(|&t| {
                if !(t >= 2.0) {
                    return Err(Error::Domain(format!("partial Euler product needs T >= 2, got {t}")));
                }
                let k = table.partition_point(|i| i.prime as f64 <= t);
                let l = partial_euler_product(&table[..k]);
                Ok(GoldfeldRow { t, l_t: l, c1: goldfeld_c1_from(self.conductor, l)?, trend: l * t.ln().powi(r as i32) })
            })
            .collect()
    }
}

pub fn goldfeld_c1_from(conductor: u64, l_t: f64) -> Result<f64> {
    if l_t == 0.0 || !l_t.is_finite() {
        return Err(Error::Division(format!("L_T(E,1) = {l_t}")));
    }
    let k = GAMMA_QUARTER * GAMMA_QUARTER / (16.0 * std::f64::consts::SQRT_2);
    Ok(-k * ZETA_ZERO * ZETA_ZERO * ZETA_HALF * ZETA_HALF / (conductor as f64 * l_t * l_t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldfeldRow {
    pub t: f64,
    pub l_t: f64,
    pub c1: f64,
    pub trend: f64,
}
