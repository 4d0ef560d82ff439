use std::f64::consts::PI;

use proptest::prelude::*;
use vmma::kernels::{matern_correlation, matern_l_at_zero, KernelSpec};
use vmma::specfun::gamma;
use vmma_oracle::{bessel_k_integral, tanh_sinh};

fn kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::matern(0.4, 1.0).unwrap(),
        KernelSpec::matern(0.1, 2.5).unwrap(),
        KernelSpec::matern(0.9, 0.5).unwrap(),
        KernelSpec::exp_decay(-0.3).unwrap(),
        KernelSpec::pure_power(-0.7, 2.0).unwrap(),
    ]
}

#[test]
fn matern_kernel_value() {
    let k = KernelSpec::matern(0.5, 1.0).unwrap();
    let v = k.eval_g(1.0).unwrap();
    assert!((v / bessel_k_integral(0.25, 1.0) - 1.0).abs() < 1e-12);
    assert_eq!(k.alpha(), 0.5 - 1.0);
}

#[test]
fn matern_slow_variation_at_origin() {
    let k = KernelSpec::matern(0.3, 1.0).unwrap();
    let a = k.eval_l(0.001).unwrap();
    let b = k.eval_l(0.0005).unwrap();
    assert!((a / b - 1.0).abs() < 0.01);
    // The correction to the limit is of relative order r^(1-nu), so the
    // 1% agreement at these radii holds for nu <= 1/2.
    for &nu in &[0.1, 0.3, 0.5] {
        let k = KernelSpec::matern(nu, 1.0).unwrap();
        let a = k.eval_l(1e-4).unwrap();
        let b = k.eval_l(1e-6).unwrap();
        assert!((a / b - 1.0).abs() < 1e-2, "nu = {nu}");
        let limit = matern_l_at_zero(nu, 1.0);
        assert!(limit > 0.0);
        assert!((b / limit - 1.0).abs() < 1e-2, "nu = {nu}: {b} vs {limit}");
    }
}

#[test]
fn matern_l_limit_for_rough_order_needs_smaller_radii() {
    let k = KernelSpec::matern(0.9, 1.0).unwrap();
    let limit = matern_l_at_zero(0.9, 1.0);
    let a = k.eval_l(1e-4).unwrap();
    assert!((a / limit - 1.0).abs() > 0.1);
    let b = k.eval_l(1e-60).unwrap();
    assert!((b / limit - 1.0).abs() < 1e-4, "{b} vs {limit}");
}

#[test]
fn l_bounded_away_from_zero_near_origin() {
    for k in kernels() {
        assert!(k.min_l_near_origin().unwrap() > 0.0, "{k}");
    }
    // A truncation radius below sqrt 2 violates the condition.
    let k = KernelSpec::pure_power(-0.5, 1.0).unwrap();
    assert_eq!(k.min_l_near_origin().unwrap(), 0.0);
}

#[test]
fn g_squared_trivial_cases() {
    let k = KernelSpec::pure_power(-0.5, 1.0).unwrap();
    assert!((k.g_squared_integral(1e-12).unwrap() - 2.0 * PI).abs() < 1e-11);
    let k = KernelSpec::exp_decay(-0.5).unwrap();
    assert!((k.g_squared_integral(1e-12).unwrap() - PI).abs() < 1e-11);
}

#[test]
fn g_squared_matern_against_quadrature_and_mellin_formula() {
    for &(nu, lambda) in &[(0.4, 1.0), (0.15, 1.0), (0.8, 2.0)] {
        let k = KernelSpec::matern(nu, lambda).unwrap();
        let tol = 1e-10;
        let v = k.g_squared_integral(tol).unwrap();
        let mu = 0.5 * (nu - 1.0);
        let f = |r: f64| {
            if lambda * r > 700.0 || r < 1e-100 {
                return 0.0;
            }
            let g = r.powf(mu) * bessel_k_integral(mu, lambda * r);
            2.0 * PI * g * g * r
        };
        let oracle = tanh_sinh(f, 0.0, 1.0, tol / 100.0).value
            + tanh_sinh(|t: f64| f(1.0 + t / (1.0 - t)) / (1.0 - t).powi(2), 0.0, 1.0, tol / 100.0).value;
        assert!((v - oracle).abs() < tol * 10.0, "nu = {nu}: {v} vs {oracle}");
        let mellin = 2.0 * PI * lambda.powf(-nu - 1.0) * PI.sqrt() * gamma(nu) * gamma(0.5 * (nu + 1.0))
            / (4.0 * gamma(0.5 * nu + 1.0));
        assert!((v / mellin - 1.0).abs() < 1e-9, "nu = {nu}: {v} vs {mellin}");
    }
}

#[test]
fn matern_correlation_cases() {
    assert_eq!(matern_correlation(0.4, 1.0, 0.0).unwrap(), 1.0);
    for &r in &[0.01, 0.3, 1.0, 4.0] {
        let v = matern_correlation(0.5, 1.0, r).unwrap();
        assert!((v - (-r as f64).exp()).abs() < 1e-14, "r = {r}");
    }
    let mut prev = 1.0;
    for k in 1..200 {
        let v = matern_correlation(0.4, 1.3, 0.05 * k as f64).unwrap();
        assert!(v < prev);
        prev = v;
    }
    // Continuity at the origin.
    assert!((matern_correlation(0.3, 1.0, 1e-12).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn decay_spot_check() {
    let k = KernelSpec::exp_decay(-0.3).unwrap().with_beta_decay(-5.0).unwrap();
    assert!(k.decay_spot_check().unwrap());
    let k = KernelSpec::matern(0.4, 1.0).unwrap().with_beta_decay(-1.5).unwrap();
    assert!(k.decay_spot_check().unwrap());
    assert!(KernelSpec::matern(0.4, 1.0).unwrap().with_beta_decay(-0.5).is_err());
    assert_eq!(KernelSpec::matern(0.4, 1.0).unwrap().min_truncation_gamma(), 0.0);
    let k = KernelSpec::pure_power(-0.5, 50.0).unwrap().with_beta_decay(-2.0).unwrap();
    assert!((k.min_truncation_gamma() - 0.5).abs() < 1e-15);
}

proptest! {
    #[test]
    fn g_is_power_times_l(r in 1e-6f64..20.0, which in 0usize..5) {
        let k = kernels()[which];
        let g = k.eval_g(r).unwrap();
        let l = k.eval_l(r).unwrap();
        prop_assert!((g - r.powf(k.alpha()) * l).abs() <= 4.0 * f64::EPSILON * g.abs());
    }

    #[test]
    fn matern_alpha_is_nu_minus_one(nu in 0.01f64..0.99, lambda in 0.1f64..10.0) {
        let k = KernelSpec::matern(nu, lambda).unwrap();
        prop_assert_eq!(k.alpha(), nu - 1.0);
        prop_assert!(k.eval_l(0.5).unwrap() > 0.0);
    }
}
