use proptest::prelude::*;
use zboundary::dirichlet::{convolve, euler_expand, EulerFactorMap, Series};

fn series(v: Vec<i32>) -> Series<f64> {
    Series::from_values(v.into_iter().map(f64::from).collect(), "p").unwrap()
}

fn arb() -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(-50i32..50, 200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_commutes(a in arb(), b in arb()) {
        let (a, b) = (series(a), series(b));
        let (ab, ba) = (convolve(&a, &b).unwrap(), convolve(&b, &a).unwrap());
        prop_assert_eq!(ab.coeffs(), ba.coeffs());
    }

    #[test]
    fn convolution_associates(a in arb(), b in arb(), c in arb()) {
        let (a, b, c) = (series(a), series(b), series(c));
        let l = convolve(&convolve(&a, &b).unwrap(), &c).unwrap();
        let r = convolve(&a, &convolve(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(l.coeffs(), r.coeffs());
    }

    #[test]
    fn euler_product_and_inverse_cancel(c1 in -3i32..3, c2 in -3i32..3) {
        let (c1, c2) = (c1 as f64, c2 as f64);
        let map = EulerFactorMap::new(move |p| vec![1.0, c1 * (p % 5) as f64, c2]);
        let f = euler_expand(&map, 200, false).unwrap();
        let g = euler_expand(&map, 200, true).unwrap();
        let prod = convolve(&f, &g).unwrap();
        prop_assert_eq!(prod.get(1), 1.0);
        for n in 2..=200 {
            prop_assert!(prod.get(n).abs() < 1e-6, "n = {} -> {}", n, prod.get(n));
        }
        prop_assert!(f.multiplicativity_violation(1e-12).is_none());
        prop_assert!(g.multiplicativity_violation(1e-12).is_none());
    }
}

#[test]
fn zeta_squared_is_divisor_count() {
    let z = Series::<f64>::zeta(200).unwrap();
    let d = convolve(&z, &z).unwrap();
    assert_eq!(d.coeffs(), Series::<f64>::sigma0(200).unwrap().coeffs());
}
