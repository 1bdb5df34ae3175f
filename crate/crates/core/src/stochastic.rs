//! Random Euler products over the torus of unit-circle parameters ω(p), the
//! deterministic families D_{1,k} and D_{χ,k}, and seeded batch sign studies.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::dirichlet::assemble_multiplicative;
use crate::error::{Error, Result};
use crate::sieve::{primes_up_to, smallest_prime_factors};
use crate::zseries::{sign_scan, BoundKind, TruncationPlan, ZeEvaluator};
use crate::{Budget, CoeffSeries};

/// Angles ω(p) = e^{iθ_p} for primes p ≤ P outside the excluded set S.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSample {
    pub excluded: BTreeSet<u64>,
    pub bound: u64,
    pub angles: BTreeMap<u64, f64>,
    pub seed: u64,
}

impl OmegaSample {
    /// Re ω(p), or None for p ∈ S or p beyond the sampled range.
    pub fn re(&self, p: u64) -> Option<f64> {
        self.angles.get(&p).map(|t| t.cos())
    }

    /// Sample with every angle fixed (θ = 0 gives ω(p) = 1).
    pub fn constant(excluded: BTreeSet<u64>, bound: u64, angle: f64) -> Self {
        let angles = primes_up_to(bound).into_iter().filter(|p| !excluded.contains(p)).map(|p| (p, angle)).collect();
        Self { excluded, bound, angles, seed: 0 }
    }
}

/// Independent uniform angles in [0, 2π), drawn in increasing-prime order
/// from a ChaCha8 stream seeded with `seed`.
pub fn sample_omega(excluded: &BTreeSet<u64>, bound: u64, seed: u64) -> Result<OmegaSample> {
    if bound < 2 {
        return Err(Error::Usage(format!("omega sample needs P >= 2, got {bound}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut angles = BTreeMap::new();
    for p in primes_up_to(bound) {
        if excluded.contains(&p) {
            continue;
        }
        angles.insert(p, rng.random_range(0.0..std::f64::consts::TAU));
    }
    Ok(OmegaSample { excluded: excluded.clone(), bound, angles, seed })
}

fn td(x: f64) -> TwoFloat {
    TwoFloat::from_f64(x)
}

fn to_f64(x: TwoFloat) -> f64 {
    x.hi() + x.lo()
}

fn square_dd(g: &[TwoFloat]) -> Vec<TwoFloat> {
    let n = g.len();
    let mut out = vec![td(0.0); n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] += g[i] * g[j];
        }
    }
    out
}

/// Coefficients of G(v)² to order `m` in v, where
/// G(v) = (1 − 2r√p v + pv²)/((1−v)(1−pv)) = 1 + D Σ_{n≥1}(Σ_{k<n} pᵏ)vⁿ,
/// D = p + 1 − 2√p r = (√p − r)² + (1 − r²) ≥ 0. With `r = None` the
/// numerator is dropped.
pub fn omega_local_v(p: u64, r: Option<f64>, m: usize) -> Vec<f64> {
    let pp = td(p as f64);
    let mut g = vec![td(0.0); m + 1];
    g[0] = td(1.0);
    match r {
        Some(r) => {
            let sp = pp.sqrt();
            let dr = sp - r;
            let d = dr * dr + (td(1.0) - td(r) * r);
            let mut geo = td(0.0); // Σ_{k<n} pᵏ
            let mut pk = td(1.0);
            for slot in g.iter_mut().skip(1) {
                geo += pk;
                pk *= pp;
                *slot = d * geo;
            }
        }
        None => {
            let mut geo = td(1.0);
            let mut pk = td(1.0);
            for slot in g.iter_mut().skip(1) {
                pk *= pp;
                geo += pk;
                *slot = geo;
            }
        }
    }
    square_dd(&g).into_iter().map(to_f64).collect()
}

/// Coefficients of (1−v)^{−2}(1−pv)^{−2}(1 − χ√p v)^{2k} to order m, in
/// double-double.
pub fn twisted_local_v(p: u64, chi: i8, k: u32, m: usize) -> Vec<f64> {
    let pp = td(p as f64);
    // 1/((1−v)(1−pv)) = Σ (Σ_{j≤n} p^j) vⁿ
    let mut h = vec![td(0.0); m + 1];
    let mut geo = td(0.0);
    let mut pk = td(1.0);
    for slot in h.iter_mut() {
        geo += pk;
        pk *= pp;
        *slot = geo;
    }
    let mut acc = square_dd(&h);
    if chi != 0 && k > 0 {
        let a = pp.sqrt() * (-(chi as f64));
        for _ in 0..2 * k {
            // multiply by (1 + a v)
            for n in (1..=m).rev() {
                let prev = acc[n - 1];
                acc[n] += a * prev;
            }
        }
    }
    acc.into_iter().map(to_f64).collect()
}

/// Places a series in v = u² onto u-exponents up to `kmax`.
fn spread_to_u(v: &[f64], kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    for (n, &c) in v.iter().enumerate() {
        if 2 * n <= kmax {
            out[2 * n] = c;
        }
    }
    out
}

fn check_nonnegative(s: &CoeffSeries) -> Result<()> {
    let (i, v) = s.min();
    if v < 0.0 {
        let spf = smallest_prime_factors(i.max(2));
        return Err(Error::Negative { index: i, value: v, prime: spf[i.max(2)] as u64 });
    }
    Ok(())
}

/// c_ω(ν): coefficients of ζ(2s)²ζ(2s−1)²/L_S(2s−1/2, ω)², supported on squares.
pub fn d_omega_coeffs(omega: &OmegaSample, n: usize) -> Result<CoeffSeries> {
    let s = assemble_multiplicative(n, format!("D_omega[seed={}]", omega.seed), |p, kmax| {
        if kmax < 2 {
            return Ok(spread_to_u(&[1.0], kmax));
        }
        let r = if omega.excluded.contains(&p) {
            None
        } else {
            Some(omega.re(p).ok_or(Error::Bound { prime: p, bound: omega.bound })?)
        };
        Ok(spread_to_u(&omega_local_v(p, r, kmax / 2), kmax))
    })?;
    check_nonnegative(&s)?;
    Ok(s)
}

/// D_{1,k}: local factor (1−u²)^{−2}(1−pu²)^{−2}(1−√p u²)^{2k}.
pub fn d1k_coeffs(k: u32, n: usize) -> Result<CoeffSeries> {
    assemble_multiplicative(n, format!("D_1,{k}"), |p, kmax| {
        Ok(spread_to_u(&twisted_local_v(p, 1, k, kmax / 2), kmax))
    })
}

/// Whether d is 1 or a fundamental discriminant.
pub fn is_fundamental_discriminant(d: i64) -> bool {
    if d == 1 {
        return true;
    }
    if d == 0 {
        return false;
    }
    let squarefree = |m: i64| {
        let m = m.unsigned_abs();
        let mut q = 2u64;
        while q * q <= m {
            if m % (q * q) == 0 {
                return false;
            }
            q += 1;
        }
        true
    };
    match d.rem_euclid(4) {
        1 => squarefree(d),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && squarefree(m)
        }
        _ => false,
    }
}

/// Kronecker symbol (d/p) for a prime p.
pub fn kronecker(d: i64, p: u64) -> i8 {
    if p == 2 {
        return match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    let a = d.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    let mut result = 1u128;
    let mut base = a as u128;
    let mut e = (p - 1) / 2;
    let pm = p as u128;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % pm;
        }
        base = base * base % pm;
        e >>= 1;
    }
    if result == 1 {
        1
    } else {
        -1
    }
}

/// D_{χ,k} for the quadratic character of discriminant d.
pub fn dchik_coeffs(d: i64, k: u32, n: usize) -> Result<CoeffSeries> {
    if !is_fundamental_discriminant(d) {
        return Err(Error::Domain(format!("{d} is not a fundamental discriminant")));
    }
    assemble_multiplicative(n, format!("D_chi{d},{k}"), |p, kmax| {
        Ok(spread_to_u(&twisted_local_v(p, kronecker(d, p), k, kmax / 2), kmax))
    })
}

/// Per-sample seed: SplitMix64 of (seed, index).
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Parameters of a batch sign study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub excluded: BTreeSet<u64>,
    pub bound: u64,
    pub limit: usize,
    pub num_samples: usize,
    pub x_lo: f64,
    pub x_hi: f64,
    pub points: usize,
    pub seed: u64,
    pub plan: TruncationPlan,
    pub bound_kind: BoundKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub seed: u64,
    pub sign_changes: usize,
    pub first_change: Option<f64>,
    pub indeterminate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub num_samples: usize,
    pub seed: u64,
    pub nonneg_violations: usize,
    pub no_sign_change_fraction: Option<f64>,
    pub first_change_quantiles: Vec<f64>,
    pub samples: Vec<SampleOutcome>,
}

const QUANTILE_LEVELS: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

fn quantiles(mut v: Vec<f64>) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(|a, b| a.total_cmp(b));
    QUANTILE_LEVELS
        .iter()
        .map(|&q| {
            let pos = q * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        })
        .collect()
}

/// For each sampled ω: build c_ω (asserting nonnegativity), evaluate
/// Z_c(x) = −Z_{c,0}(x) on the grid and record certified sign changes.
pub fn batch_sign_study(cfg: &BatchConfig, budget: &Budget) -> Result<BatchSummary> {
    let plan = TruncationPlan { t: cfg.limit as f64, ..cfg.plan };
    plan.validate()?;
    if cfg.num_samples > 0 && cfg.x_lo < plan.x_min() * (1.0 - 1e-12) {
        return Err(Error::Domain(format!(
            "grid starts at {} below sqrt(R/T) = {}; raise the coefficient limit",
            cfg.x_lo,
            plan.x_min()
        )));
    }
    let samples: Vec<SampleOutcome> = (0..cfg.num_samples)
        .into_par_iter()
        .map(|i| {
            let seed = sample_seed(cfg.seed, i as u64);
            let omega = sample_omega(&cfg.excluded, cfg.bound, seed)?;
            let c = d_omega_coeffs(&omega, cfg.limit)?;
            let ev = ZeEvaluator::from_coeffs(c, plan)?;
            let report = sign_scan(
                |x| {
                    let r = ev.z_e(x, budget)?;
                    Ok((r.value, r.bound(cfg.bound_kind)))
                },
                cfg.x_lo,
                cfg.x_hi,
                cfg.points,
            )?;
            Ok(SampleOutcome {
                index: i,
                seed,
                sign_changes: report.brackets.len(),
                first_change: report.brackets.first().map(|&(a, b)| (a * b).sqrt()),
                indeterminate: report.indeterminate,
            })
        })
        .collect::<Result<_>>()?;
    let n = samples.len();
    let no_change = samples.iter().filter(|s| s.sign_changes == 0).count();
    let firsts: Vec<f64> = samples.iter().filter_map(|s| s.first_change).collect();
    Ok(BatchSummary {
        num_samples: n,
        seed: cfg.seed,
        nonneg_violations: 0,
        no_sign_change_fraction: if n == 0 { None } else { Some(no_change as f64 / n as f64) },
        first_change_quantiles: quantiles(firsts),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::{invert_series, mul_series, Series};

    #[test]
    fn sampling_is_deterministic() {
        let s = BTreeSet::new();
        let a = sample_omega(&s, 1000, 42).unwrap();
        let b = sample_omega(&s, 1000, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_omega(&s, 1000, 43).unwrap());
        assert!(a.angles.values().all(|t| (0.0..std::f64::consts::TAU).contains(t)));
        let ex: BTreeSet<u64> = [2, 3].into_iter().collect();
        let c = sample_omega(&ex, 100, 1).unwrap();
        assert!(c.re(2).is_none() && c.re(5).is_some());
    }

    #[test]
    fn mean_of_real_part() {
        let a = sample_omega(&BTreeSet::new(), 10_000, 7).unwrap();
        let n = a.angles.len() as f64;
        let mean: f64 = a.angles.values().map(|t| t.cos()).sum::<f64>() / n;
        assert!(mean.abs() < 3.0 / n.sqrt());
    }

    #[test]
    fn single_prime_identity() {
        for &(p, theta) in &[(2u64, 0.3), (7, 2.0), (101, 4.4)] {
            let r: f64 = f64::cos(theta);
            let sp = (p as f64).sqrt();
            let num = [1.0, -2.0 * r * sp, p as f64];
            let den = invert_series(&mul_series(&[1.0, -1.0], &[1.0, -(p as f64)], 2), 6);
            let direct = mul_series(&num, &den, 6);
            let d = p as f64 + 1.0 - 2.0 * sp * r;
            for n in 1..=6 {
                let geo: f64 = (0..n).map(|k| (p as f64).powi(k)).sum();
                assert!((direct[n as usize] - d * geo).abs() <= 1e-12 * (d * geo).abs().max(1.0));
            }
            let sq = omega_local_v(p, Some(r), 6);
            let want = mul_series(&direct, &direct, 6);
            for n in 0..=6 {
                assert!((sq[n] - want[n]).abs() <= 1e-11 * want[n].abs().max(1.0));
            }
        }
    }

    #[test]
    fn omega_coefficients_nonnegative_on_squares() {
        let a = sample_omega(&[3u64].into_iter().collect(), 100, 9).unwrap();
        let c = d_omega_coeffs(&a, 10_000).unwrap();
        assert!(c.min().1 >= 0.0);
        assert!(c.support().all(|i| ((i as f64).sqrt() as usize).pow(2) == i));
        assert!(matches!(d_omega_coeffs(&a, 200_000), Err(Error::Bound { .. })));
    }

    #[test]
    fn d1k_against_polynomial_oracle() {
        let n = 2000;
        let z0 = d1k_coeffs(0, n).unwrap();
        // ζ(2s)²ζ(2s−1)² on squares
        let m = 44;
        let z = Series::<f64>::zeta(m).unwrap();
        let z1 = Series::<f64>::zeta_shifted(m).unwrap();
        let base = crate::dirichlet::convolve(
            &crate::dirichlet::convolve(&z, &z).unwrap(),
            &crate::dirichlet::convolve(&z1, &z1).unwrap(),
        )
        .unwrap();
        for k in 1..=m {
            assert_eq!(z0.get(k * k), base.get(k));
        }
        // k = 2 against the ω ≡ 1 random product with S = ∅
        let one = OmegaSample::constant(BTreeSet::new(), 50, 0.0);
        let a = d1k_coeffs(2, n).unwrap();
        let b = d_omega_coeffs(&one, n).unwrap();
        for i in 1..=n {
            assert!((a.get(i) - b.get(i)).abs() <= 1e-9 * a.get(i).abs().max(1.0), "{i}");
        }
        assert_eq!(d1k_coeffs(1, 10).unwrap().get(1), 1.0);
    }

    #[test]
    fn d1k_three_has_negative_coefficients() {
        assert!(d1k_coeffs(3, 10_000).unwrap().min().1 < 0.0);
        assert!(d1k_coeffs(1, 10_000).unwrap().min().1 >= 0.0);
        assert!(d1k_coeffs(2, 10_000).unwrap().min().1 >= 0.0);
    }

    #[test]
    fn kronecker_and_discriminants() {
        assert_eq!(kronecker(-4, 3), -1);
        assert_eq!(kronecker(-4, 5), 1);
        assert_eq!(kronecker(-4, 2), 0);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(-7, 2), 1);
        for d in [-4, -3, -7, -8, 5, 8, 12, 13, 1] {
            assert!(is_fundamental_discriminant(d), "{d}");
        }
        for d in [0, -1, 2, 4, 9, 16, -12 * 4] {
            assert!(!is_fundamental_discriminant(d), "{d}");
        }
        assert!(matches!(dchik_coeffs(9, 1, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn dchik_reduces_and_vanishes_at_ramified() {
        let a = dchik_coeffs(1, 2, 3000).unwrap();
        assert_eq!(a.coeffs(), d1k_coeffs(2, 3000).unwrap().coeffs());
        let b = dchik_coeffs(-4, 1, 3000).unwrap();
        // at p = 2 (χ = 0) only the ζ(2s)²ζ(2s−1)² part survives: c(4) = 2 + 2·2 = 6
        assert_eq!(b.get(4), 6.0);
    }

    #[test]
    fn batch_study_basics() {
        let cfg = BatchConfig {
            excluded: BTreeSet::new(),
            bound: 100,
            limit: 2000,
            num_samples: 0,
            x_lo: 0.1,
            x_hi: 0.5,
            points: 6,
            seed: 5,
            plan: TruncationPlan::default(),
            bound_kind: BoundKind::Sharp,
        };
        let s = batch_sign_study(&cfg, &Budget::default()).unwrap();
        assert_eq!(s.num_samples, 0);
        assert!(s.no_sign_change_fraction.is_none());
        let cfg = BatchConfig { num_samples: 3, ..cfg };
        let a = batch_sign_study(&cfg, &Budget::default()).unwrap();
        let b = batch_sign_study(&cfg, &Budget::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 3);
    }
}
