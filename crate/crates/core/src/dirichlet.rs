//! Truncated Dirichlet series: convolution, Euler-product expansion, support
//! maps and the divisor weights a = c ⋆ σ₀.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::num::{from_u64, lit, Real};
use crate::sieve::{primes_up_to, sigma0_table, smallest_prime_factors};

/// Coefficients c(1..N) of a truncated Dirichlet series Σ c(ν)ν^{−s}.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    // values[0] is an unused zero slot so that values[n] = c(n)
    values: Vec<T>,
    pub label: String,
    pub multiplicative: bool,
    pub integral: bool,
}

impl<T: Real> Series<T> {
    /// Series from c(1), c(2), …, c(N).
    pub fn from_values(coeffs: Vec<T>, label: impl Into<String>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Usage("a coefficient series needs limit >= 1".into()));
        }
        let integral = coeffs.iter().all(|v| v.fract() == T::zero() && v.abs() < lit(9.0e15));
        let mut values = Vec::with_capacity(coeffs.len() + 1);
        values.push(T::zero());
        values.extend(coeffs);
        Ok(Self { values, label: label.into(), multiplicative: false, integral })
    }

    fn from_slots(values: Vec<T>, label: impl Into<String>) -> Self {
        let integral = values.iter().all(|v| v.fract() == T::zero() && v.abs() < lit(9.0e15));
        Self { values, label: label.into(), multiplicative: false, integral }
    }

    pub fn zeros(limit: usize, label: impl Into<String>) -> Result<Self> {
        Self::from_values(vec![T::zero(); limit], label)
    }

    /// δ₁: the series of the constant function 1.
    pub fn delta(limit: usize) -> Result<Self> {
        let mut s = Self::zeros(limit, "delta")?;
        s.values[1] = T::one();
        s.multiplicative = true;
        Ok(s)
    }

    /// ζ(s): all ones.
    pub fn zeta(limit: usize) -> Result<Self> {
        let mut s = Self::from_values(vec![T::one(); limit], "zeta")?;
        s.multiplicative = true;
        Ok(s)
    }

    /// ζ(s−1): c(n) = n.
    pub fn zeta_shifted(limit: usize) -> Result<Self> {
        let mut s = Self::from_values((1..=limit as u64).map(from_u64).collect(), "zeta(s-1)")?;
        s.multiplicative = true;
        Ok(s)
    }

    /// ζ(s)²: c(n) = σ₀(n).
    pub fn sigma0(limit: usize) -> Result<Self> {
        if limit == 0 {
            return Err(Error::Usage("a coefficient series needs limit >= 1".into()));
        }
        let t = sigma0_table(limit);
        let mut s = Self::from_slots(t.into_iter().map(|v| from_u64(v as u64)).collect(), "zeta^2");
        s.multiplicative = true;
        Ok(s)
    }

    pub fn limit(&self) -> usize {
        self.values.len() - 1
    }

    /// c(n) for 1 ≤ n ≤ N, zero beyond the truncation.
    pub fn get(&self, n: usize) -> T {
        self.values.get(n).copied().unwrap_or_else(T::zero)
    }

    /// c(1..=N) as a slice.
    pub fn coeffs(&self) -> &[T] {
        &self.values[1..]
    }

    /// Slot-indexed view: `slots()[n] = c(n)`, `slots()[0] = 0`.
    pub fn slots(&self) -> &[T] {
        &self.values
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Smallest coefficient and its index.
    pub fn min(&self) -> (usize, T) {
        let mut best = (1, self.values[1]);
        for (i, &v) in self.values.iter().enumerate().skip(2) {
            if v < best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// Indices with c(n) ≠ 0, in increasing order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().skip(1).filter(|(_, v)| **v != T::zero()).map(|(i, _)| i)
    }

    /// Exhaustive check of c(mn) = c(m)c(n) for coprime m, n with mn ≤ N.
    /// Returns the first offending pair.
    pub fn multiplicativity_violation(&self, rel_tol: T) -> Option<(usize, usize)> {
        let n = self.limit();
        if self.values[1] != T::one() && n >= 1 {
            return Some((1, 1));
        }
        for a in 2..=n {
            for b in 2..=n / a {
                if gcd(a, b) != 1 {
                    continue;
                }
                let lhs = self.values[a * b];
                let rhs = self.values[a] * self.values[b];
                let scale = T::one().max(lhs.abs()).max(rhs.abs());
                if (lhs - rhs).abs() > rel_tol * scale {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Term-by-term product with a scalar.
    pub fn scale(&self, k: T) -> Self {
        let mut s = Self::from_slots(self.values.iter().map(|&v| v * k).collect(), self.label.clone());
        s.multiplicative = false;
        s
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn exact_ints<T: Real>(s: &Series<T>) -> Option<Vec<i64>> {
    if !s.integral {
        return None;
    }
    s.values.iter().map(|v| v.to_i64()).collect()
}

/// Dirichlet convolution c(n) = Σ_{d|n} a(d)b(n/d).
pub fn convolve<T: Real>(a: &Series<T>, b: &Series<T>) -> Result<Series<T>> {
    if a.limit() != b.limit() {
        return Err(Error::Usage(format!("convolve: limits differ ({} vs {})", a.limit(), b.limit())));
    }
    let n = a.limit();
    let label = format!("({})*({})", a.label, b.label);
    if let (Some(ia), Some(ib)) = (exact_ints(a), exact_ints(b)) {
        let mut acc = vec![0i128; n + 1];
        for d in 1..=n {
            let ad = ia[d] as i128;
            if ad == 0 {
                continue;
            }
            for m in 1..=n / d {
                acc[d * m] += ad * ib[m] as i128;
            }
        }
        if acc.iter().all(|v| v.unsigned_abs() < (1u128 << 53)) {
            let mut s = Series::from_slots(acc.into_iter().map(|v| lit::<T>(v as f64)).collect(), label);
            s.multiplicative = a.multiplicative && b.multiplicative;
            return Ok(s);
        }
    }
    let mut out = vec![T::zero(); n + 1];
    for d in 1..=n {
        let ad = a.values[d];
        if ad == T::zero() {
            continue;
        }
        for m in 1..=n / d {
            out[d * m] = out[d * m] + ad * b.values[m];
        }
    }
    let mut s = Series::from_slots(out, label);
    s.multiplicative = a.multiplicative && b.multiplicative;
    Ok(s)
}

/// a(n) = Σ_{d|n} c(d)σ₀(n/d).
pub fn a_weights<T: Real>(c: &Series<T>) -> Result<Series<T>> {
    let s = Series::sigma0(c.limit())?;
    Ok(convolve(c, &s)?.with_label(format!("a[{}]", c.label)))
}

/// c(m²) = a(m) for m² ≤ N, zero elsewhere.
pub fn square_support<T: Real>(a: &Series<T>, n: usize) -> Result<Series<T>> {
    let mut s = Series::zeros(n, format!("sq[{}]", a.label))?;
    let mut m = 1usize;
    while m * m <= n {
        s.values[m * m] = a.get(m);
        m += 1;
    }
    s.multiplicative = a.multiplicative;
    s.integral = a.integral;
    Ok(s)
}

/// c(q²m) = a(m) for q²m ≤ N, zero elsewhere.
pub fn shift_support<T: Real>(a: &Series<T>, q: usize, n: usize) -> Result<Series<T>> {
    if q == 0 {
        return Err(Error::Usage("shift_support needs q >= 1".into()));
    }
    let mut s = Series::zeros(n, format!("shift{q}[{}]", a.label))?;
    let q2 = q * q;
    let mut m = 1usize;
    while q2 * m <= n {
        s.values[q2 * m] = a.get(m);
        m += 1;
    }
    s.multiplicative = q == 1 && a.multiplicative;
    s.integral = a.integral;
    Ok(s)
}

/// Coefficients of ∏_p L_p(p^{−s}) from local power series L_p.
///
/// `local(p, kmax)` must return the coefficients of L_p(u) up to at least
/// u^{kmax}, where p^{kmax} ≤ N < p^{kmax+1}, with constant term 1.
pub fn assemble_multiplicative<T, F>(n: usize, label: impl Into<String>, mut local: F) -> Result<Series<T>>
where
    T: Real,
    F: FnMut(u64, usize) -> Result<Vec<T>>,
{
    if n == 0 {
        return Err(Error::Usage("a coefficient series needs limit >= 1".into()));
    }
    let spf = smallest_prime_factors(n);
    let mut values = vec![T::zero(); n + 1];
    values[1] = T::one();
    // prime powers first
    for p in primes_up_to(n as u64) {
        let mut kmax = 0usize;
        let mut pk = 1usize;
        while pk <= n / p as usize {
            pk *= p as usize;
            kmax += 1;
        }
        let l = local(p, kmax)?;
        if l.is_empty() || l[0] != T::one() {
            return Err(Error::InvalidFactor {
                prime: p,
                constant: l.first().and_then(|v| v.to_f64()).unwrap_or(0.0),
            });
        }
        if l.len() <= kmax {
            return Err(Error::Usage(format!("local series at p = {p} has {} terms, needs {}", l.len(), kmax + 1)));
        }
        let mut pk = p as usize;
        for &c in l.iter().take(kmax + 1).skip(1) {
            values[pk] = c;
            pk = pk.saturating_mul(p as usize);
        }
    }
    for m in 2..=n {
        let p = spf[m] as usize;
        let mut rest = m;
        let mut pk = 1usize;
        while rest % p == 0 {
            rest /= p;
            pk *= p;
        }
        if rest != 1 {
            values[m] = values[pk] * values[rest];
        }
    }
    let mut s = Series::from_slots(values, label);
    s.multiplicative = true;
    Ok(s)
}

/// Power-series inverse of a polynomial with constant term 1, to order `k`.
pub fn invert_series<T: Real>(poly: &[T], k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); k + 1];
    out[0] = T::one();
    for j in 1..=k {
        let mut acc = T::zero();
        for i in 1..poly.len().min(j + 1) {
            acc = acc + poly[i] * out[j - i];
        }
        out[j] = -acc;
    }
    out
}

/// Product of two truncated power series, to order `k`.
pub fn mul_series<T: Real>(a: &[T], b: &[T], k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); k + 1];
    for (i, &x) in a.iter().enumerate().take(k + 1) {
        if x == T::zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(k + 1 - i) {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

type FactorFn<T> = Arc<dyn Fn(u64) -> Vec<T> + Send + Sync>;

/// Local Euler factors f_p(u), u = p^{−s}, as coefficient lists with
/// constant term 1: explicit per-prime entries plus a default.
#[derive(Clone)]
pub struct EulerFactorMap<T> {
    pub overrides: BTreeMap<u64, Vec<T>>,
    default: FactorFn<T>,
    pub max_degree: usize,
}

impl<T: Real> std::fmt::Debug for EulerFactorMap<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EulerFactorMap")
            .field("overrides", &self.overrides)
            .field("max_degree", &self.max_degree)
            .finish_non_exhaustive()
    }
}

impl<T: Real> EulerFactorMap<T> {
    pub fn new<F>(default: F) -> Self
    where
        F: Fn(u64) -> Vec<T> + Send + Sync + 'static,
    {
        Self { overrides: BTreeMap::new(), default: Arc::new(default), max_degree: 4 }
    }

    /// Every prime gets the trivial factor 1.
    pub fn trivial() -> Self {
        Self::new(|_| vec![T::one()])
    }

    pub fn with_factor(mut self, p: u64, poly: Vec<T>) -> Self {
        self.overrides.insert(p, poly);
        self
    }

    pub fn factor(&self, p: u64) -> Vec<T> {
        match self.overrides.get(&p) {
            Some(f) => f.clone(),
            None => (self.default)(p),
        }
    }
}

/// Coefficients of ∏_p f_p(p^{−s})^{±1} up to N.
pub fn euler_expand<T: Real>(factors: &EulerFactorMap<T>, n: usize, invert: bool) -> Result<Series<T>> {
    let label = if invert { "euler^-1" } else { "euler" };
    assemble_multiplicative(n, label, |p, kmax| {
        let f = factors.factor(p);
        if f.is_empty() || f[0] != T::one() {
            return Err(Error::InvalidFactor { prime: p, constant: f.first().and_then(|v| v.to_f64()).unwrap_or(0.0) });
        }
        if f.len() > factors.max_degree + 1 {
            return Err(Error::Usage(format!(
                "local factor at p = {p} has degree {} above the bound {}",
                f.len() - 1,
                factors.max_degree
            )));
        }
        if invert {
            Ok(invert_series(&f, kmax))
        } else {
            let mut v = f;
            v.resize(v.len().max(kmax + 1), T::zero());
            Ok(v)
        }
    })
}

impl Series<f64> {
    /// CSV with header `index,value`, one row per nonzero coefficient, values
    /// with 17 significant digits. `meta` pairs are written as `# key=value`.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "# label={}", self.label)?;
        writeln!(w, "# limit={}", self.limit())?;
        writeln!(w, "index,value")?;
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v != 0.0 {
                writeln!(w, "{i},{v:.16e}")?;
            }
        }
        Ok(())
    }

    /// Reads the format produced by [`Series::write_csv`]. Without a
    /// `# limit=` line the largest index sets the limit.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut limit = None;
        let mut label = String::new();
        let mut rows = Vec::new();
        let mut header = false;
        for line in r.lines() {
            let line = line.map_err(|e| Error::Config(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let meta = meta.trim();
                if let Some(v) = meta.strip_prefix("limit=") {
                    limit = Some(v.parse::<usize>().map_err(|e| Error::Config(format!("bad limit: {e}")))?);
                } else if let Some(v) = meta.strip_prefix("label=") {
                    label = v.to_string();
                }
                continue;
            }
            if !header {
                if line != "index,value" {
                    return Err(Error::Config(format!("expected header `index,value`, got `{line}`")));
                }
                header = true;
                continue;
            }
            let (i, v) = line.split_once(',').ok_or_else(|| Error::Config(format!("malformed row `{line}`")))?;
            let i: usize = i.trim().parse().map_err(|e| Error::Config(format!("bad index `{i}`: {e}")))?;
            let v: f64 = v.trim().parse().map_err(|e| Error::Config(format!("bad value `{v}`: {e}")))?;
            if i == 0 {
                return Err(Error::Config("index 0 is not a Dirichlet coefficient".into()));
            }
            rows.push((i, v));
        }
        let n = limit.unwrap_or_else(|| rows.iter().map(|r| r.0).max().unwrap_or(1));
        let mut s = Series::zeros(n, label)?;
        for (i, v) in rows {
            if i > n {
                return Err(Error::Config(format!("row index {i} exceeds limit {n}")));
            }
            s.values[i] = v;
        }
        s.integral = s.values.iter().all(|v| v.fract() == 0.0 && v.abs() < 9.0e15);
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convolve_examples() {
        let z = Series::<f64>::zeta(20).unwrap();
        let zz = convolve(&z, &z).unwrap();
        assert_eq!(zz.get(12), 6.0);
        assert!(zz.multiplicative);
        let d = Series::delta(20).unwrap();
        let b = Series::zeta_shifted(20).unwrap();
        assert_eq!(convolve(&d, &b).unwrap().coeffs(), b.coeffs());
        assert_eq!(convolve(&z, &b).unwrap().get(6), 12.0);
        assert!(matches!(convolve(&z, &Series::zeta(21).unwrap()), Err(Error::Usage(_))));
    }

    #[test]
    fn float_path_matches_integer_path() {
        let a = Series::from_values((1..=300).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect(), "a").unwrap();
        let b = Series::from_values((1..=300).map(|i| ((i * 104729) % 11) as f64 - 5.0).collect(), "b").unwrap();
        let exact = convolve(&a, &b).unwrap();
        let mut af = a.clone();
        af.integral = false;
        let float = convolve(&af, &b).unwrap();
        assert_eq!(exact.coeffs(), float.coeffs());
    }

    #[test]
    fn euler_expand_examples() {
        let f = EulerFactorMap::new(|_| vec![1.0, -1.0]);
        let z = euler_expand(&f, 100, true).unwrap();
        assert!(z.coeffs().iter().all(|&v| v == 1.0));

        let f = EulerFactorMap::trivial().with_factor(2, vec![1.0, 2.0, 2.0]);
        let plain = euler_expand(&f, 64, false).unwrap();
        assert_eq!([plain.get(1), plain.get(2), plain.get(4), plain.get(8)], [1.0, 2.0, 2.0, 0.0]);
        let inv = euler_expand(&f, 64, true).unwrap();
        let local: Vec<f64> = (0..6).map(|k| inv.get(1 << k)).collect();
        // b_{k+1} = a_p b_k − p b_{k−1} with a_p = −2, p = 2
        assert_eq!(local, vec![1.0, -2.0, 2.0, 0.0, -4.0, 8.0]);
        assert_eq!(inv.get(3), 0.0);
    }

    #[test]
    fn invalid_factor_rejected() {
        let f = EulerFactorMap::trivial().with_factor(3, vec![2.0, 1.0]);
        assert!(matches!(euler_expand(&f, 10, true), Err(Error::InvalidFactor { prime: 3, .. })));
    }

    #[test]
    fn support_maps() {
        let s = Series::<f64>::sigma0(10).unwrap();
        let sq = square_support(&s, 100).unwrap();
        assert_eq!(sq.get(9), 2.0);
        assert_eq!(sq.get(8), 0.0);
        let d = Series::<f64>::delta(1).unwrap();
        let sh = shift_support(&d, 11, 200).unwrap();
        assert_eq!(sh.support().collect::<Vec<_>>(), vec![121]);
        let sh = shift_support(&sq, 37, 2000).unwrap();
        assert_eq!(sh.support().next(), Some(1369));
        let id = shift_support(&s, 1, 10).unwrap();
        assert_eq!(id.coeffs(), s.coeffs());
    }

    #[test]
    fn weights() {
        let d = Series::<f64>::delta(50).unwrap();
        let a = a_weights(&d).unwrap();
        assert_eq!(a.get(6), 4.0);
        let z = Series::<f64>::zeta(50).unwrap();
        assert_eq!(a.coeffs(), convolve(&z, &z).unwrap().coeffs());
        assert_eq!(a_weights(&z).unwrap().get(4), 6.0);
    }

    #[test]
    fn csv_round_trip() {
        let s = Series::from_values(vec![1.0, 0.0, std::f64::consts::PI, -1e-300, 0.1 + 0.2], "x").unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf, &[("seed".into(), "7".into())]).unwrap();
        let back = Series::read_csv(&buf[..]).unwrap();
        assert_eq!(back.coeffs(), s.coeffs());
        assert_eq!(back.label, "x");
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("\n2,"));
    }

    #[test]
    fn generic_in_f32() {
        let z = Series::<f32>::zeta(30).unwrap();
        assert_eq!(convolve(&z, &z).unwrap().get(24), 8.0);
    }
}
