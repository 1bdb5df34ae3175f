//! Prime and divisor-count sieves.

use std::sync::OnceLock;

/// Largest index held by the shared divisor-count table.
const SIGMA0_TABLE_LIMIT: usize = 1 << 21;

/// All primes `p ≤ n`, by the sieve of Eratosthenes.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; n + 1];
    let mut out = Vec::with_capacity(if n > 10 { n / (n as f64).ln() as usize + 16 } else { 8 });
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Smallest-prime-factor table for `0..=n` (entries 0 and 1 are 0).
pub fn smallest_prime_factors(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Divisor counts σ₀(n) for `0..=n` (σ₀(0) is stored as 0).
pub fn sigma0_table(n: usize) -> Vec<u32> {
    let mut t = vec![0u32; n + 1];
    for d in 1..=n {
        let mut m = d;
        while m <= n {
            t[m] += 1;
            m += d;
        }
    }
    t
}

fn shared_sigma0() -> &'static [u16] {
    static TABLE: OnceLock<Vec<u16>> = OnceLock::new();
    TABLE.get_or_init(|| sigma0_table(SIGMA0_TABLE_LIMIT).into_iter().map(|v| v as u16).collect())
}

/// σ₀(n), from a shared table for small `n` and trial division beyond it.
pub fn sigma0(n: u64) -> u64 {
    if (n as usize) <= SIGMA0_TABLE_LIMIT {
        return shared_sigma0()[n as usize] as u64;
    }
    let mut m = n;
    let mut count = 1u64;
    let mut p = 2u64;
    while p * p <= m {
        let mut e = 0;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        count *= e + 1;
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        count *= 2;
    }
    count
}

/// Factorization of `n` as (prime, exponent) pairs in increasing prime order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_primes() {
        assert_eq!(primes_up_to(30), vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(primes_up_to(1).is_empty());
        assert_eq!(primes_up_to(10_000).len(), 1229);
    }

    #[test]
    fn spf_matches_factorization() {
        let spf = smallest_prime_factors(1000);
        for n in 2..=1000u64 {
            assert_eq!(spf[n as usize] as u64, factorize(n)[0].0);
        }
    }

    #[test]
    fn sigma0_table_and_trial_division_agree() {
        let t = sigma0_table(5000);
        for n in 1..=5000u64 {
            let by_factor: u64 = factorize(n).iter().map(|&(_, e)| e as u64 + 1).product();
            assert_eq!(t[n as usize] as u64, by_factor);
            assert_eq!(sigma0(n), by_factor);
        }
        assert_eq!(sigma0(12), 6);
        // beyond the shared table
        assert_eq!(sigma0((1u64 << 22) * 3), 23 * 2);
    }

    #[test]
    fn primality() {
        let ps = primes_up_to(2000);
        for n in 0..2000u64 {
            assert_eq!(is_prime(n), ps.binary_search(&n).is_ok());
        }
    }
}
