use std::f64::consts::FRAC_PI_4;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vmma::analysis::{
    empirical_variogram, hybrid_mse, mse_study, rate_fit, roughness_study, square_increment_dim, tail_g_squared,
    KernelFamily, Scheme,
};
use vmma::fields::{CirculantEmbedding, FieldGrid, HybridEngine, SchemeParams};
use vmma::kernels::{matern_correlation, KernelSpec};
use vmma::Error;
use vmma_oracle::{mean_and_se, nested_2d, tanh_sinh};

fn iid_grid(n: usize, seed: u64) -> FieldGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 2 * n + 1;
    let values = (0..side * side).map(|_| StandardNormal.sample(&mut rng)).collect();
    FieldGrid::on_unit_square(n, values).unwrap()
}

#[test]
fn white_noise_variogram_and_dimension() {
    let g = iid_grid(100, 1);
    for (lag, v) in empirical_variogram(&g, 5).unwrap() {
        assert!((v - 2.0).abs() < 0.05, "lag {lag}: {v}");
    }
    assert!(square_increment_dim(&g).unwrap() > 2.95);
}

#[test]
fn dimension_is_invariant_under_affine_maps() {
    let g = iid_grid(40, 2);
    let d = square_increment_dim(&g).unwrap();
    let side = g.side();
    let h = g.spacing();
    let values: Vec<f64> = g
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let (x, y) = ((k % side) as f64 * h, (k / side) as f64 * h);
            3.0 * v + 10.0 - 4.0 * x + 7.0 * y
        })
        .collect();
    let shifted = FieldGrid::on_unit_square(40, values).unwrap();
    assert!((square_increment_dim(&shifted).unwrap() - d).abs() < 1e-9);
    assert!((square_increment_dim(&g.scaled(1e-6)).unwrap() - d).abs() < 1e-9);
    assert!(square_increment_dim(&iid_grid(3, 0)).is_err());
}

#[test]
fn circulant_matern_dimension() {
    let nu = 0.5;
    let emb = CirculantEmbedding::new(|r| matern_correlation(nu, 1.0, r).unwrap(), 1.0, 100).unwrap();
    let mut dims = Vec::new();
    for r in 0..10 {
        let (a, b) = emb.sample_pair(3, r).unwrap();
        dims.push(square_increment_dim(&a).unwrap());
        dims.push(square_increment_dim(&b).unwrap());
    }
    let (m, _) = mean_and_se(&dims);
    assert!((m - 2.5).abs() < 0.05, "mean dimension {m}");
}

#[test]
fn hybrid_variogram_slope_matches_roughness() {
    let alpha = -0.5;
    let kernel = KernelSpec::matern(alpha + 1.0, 1.0).unwrap();
    let p = SchemeParams::new(100, 0.3, 1, 8).unwrap();
    let engine = HybridEngine::new(&kernel, &p, p.n).unwrap();
    let mut vg = vec![0.0; 5];
    for r in 0..4 {
        let g = FieldGrid::on_unit_square(p.n, engine.simulate(p.seed, r, None).unwrap().data).unwrap();
        for (acc, (_, v)) in vg.iter_mut().zip(empirical_variogram(&g, 5).unwrap()) {
            *acc += v;
        }
    }
    let xs: Vec<f64> = (1..=5).map(|l| (l as f64).ln()).collect();
    let ys: Vec<f64> = vg.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 5.0;
    let my = ys.iter().sum::<f64>() / 5.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - (2.0 + 2.0 * alpha)).abs() < 0.2, "slope {slope}");
}

#[test]
fn roughness_report_shape() {
    let p = SchemeParams::new(20, 0.3, 1, 0).unwrap();
    let schemes = [Scheme::Hybrid { kappa: 0 }, Scheme::Hybrid { kappa: 2 }, Scheme::Riemann];
    let report = roughness_study(KernelFamily::ExpDecay, &[-0.7, -0.3], &schemes, &p, 3).unwrap();
    assert_eq!(report.rows.len(), 6);
    assert_eq!(report.rows[1].scheme, Scheme::Hybrid { kappa: 2 });
    assert!(report.rows.iter().all(|r| (2.0..=3.0).contains(&r.mean_dim) && r.replicates == 3));
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("alpha,scheme,kappa,mean_dim,var_dim,replicates\n"));
    assert_eq!(text.lines().count(), 7);
    let again = roughness_study(KernelFamily::ExpDecay, &[-0.7, -0.3], &schemes, &p, 3).unwrap();
    for (a, b) in report.rows.iter().zip(&again.rows) {
        assert_eq!(a.mean_dim, b.mean_dim);
    }
    assert!(roughness_study(KernelFamily::ExpDecay, &[-0.5], &schemes, &p, 1).is_err());
    assert!(roughness_study(KernelFamily::ExpDecay, &[-0.5], &[Scheme::Circulant], &p, 2).is_err());
}

#[test]
fn rate_fit_recovers_power_laws() {
    let ns = [10, 20, 40, 80];
    let errors: Vec<f64> = ns.iter().map(|&n| 3.0 * (n as f64).powf(-1.3)).collect();
    let (slope, intercept) = rate_fit(&ns, &errors).unwrap();
    assert!((slope + 1.3).abs() < 1e-12);
    assert!((intercept - 3f64.ln()).abs() < 1e-12);
    assert!(matches!(rate_fit(&ns[..2], &errors[..2]), Err(Error::Validation(_))));
    assert!(matches!(rate_fit(&[5, 5, 5], &[1.0, 2.0, 3.0]), Err(Error::DegenerateInput(_))));
    assert!(rate_fit(&[1, 2, 3], &[1.0, 0.0, 1.0]).is_err());
}

#[test]
fn tail_plus_square_is_total_mass() {
    let kernel = KernelSpec::matern(0.5, 1.0).unwrap();
    let c = 0.5;
    let inside = 8.0
        * tanh_sinh(
            |t: f64| {
                let rho = c / t.cos();
                tanh_sinh(|r| kernel.eval_g(r).unwrap().powi(2) * r, 0.0, rho, 1e-14).value
            },
            0.0,
            FRAC_PI_4,
            1e-13,
        )
        .value;
    let tail = tail_g_squared(&kernel, c, 1e-12).unwrap();
    let total = kernel.g_squared_integral(1e-12).unwrap();
    assert!((inside + tail - total).abs() < 1e-8 * total, "{inside} + {tail} vs {total}");

    let power = KernelSpec::pure_power(-0.3, 0.8).unwrap();
    let p = 2.0 * -0.3 + 2.0;
    let exact_outside_disc = 2.0 * std::f64::consts::PI * 0.8f64.powf(p) / p;
    // Square inside the support disc: the tail is the disc minus the square.
    let square = 8.0 * tanh_sinh(|t: f64| (0.4 / t.cos()).powf(p) / p, 0.0, FRAC_PI_4, 1e-14).value;
    let tail = tail_g_squared(&power, 0.4, 1e-12).unwrap();
    assert!((tail - (exact_outside_disc - square)).abs() < 1e-10);
}

#[test]
fn tail_shrinks_with_gamma() {
    let kernel = KernelSpec::exp_decay(-0.4).unwrap();
    let mut last = f64::INFINITY;
    for gamma in [0.1, 0.3, 0.5, 0.8] {
        let p = SchemeParams::new(10, gamma, 1, 0).unwrap();
        let d4 = tail_g_squared(&kernel, p.c_n(), 1e-12).unwrap();
        assert!(d4 < last && d4 > 0.0);
        last = d4;
    }
}

/// Sum of `int_cell (g(s) - g(||j|| / n))^2` over cells with `lo < |j|_inf <= hi`.
fn oracle_step_error(kernel: &KernelSpec, n: usize, lo: i64, hi: i64) -> f64 {
    let nf = n as f64;
    let mut total = 0.0;
    for j1 in -hi..=hi {
        for j2 in -hi..=hi {
            let sup = j1.abs().max(j2.abs());
            if sup <= lo {
                continue;
            }
            let gb = kernel.eval_g((j1 as f64).hypot(j2 as f64) / nf).unwrap();
            let xs = [(j1 as f64 - 0.5) / nf, (j1 as f64 + 0.5) / nf];
            let ys = [(j2 as f64 - 0.5) / nf, (j2 as f64 + 0.5) / nf];
            total += nested_2d(|x, y| (kernel.eval_g(x.hypot(y)).unwrap() - gb).powi(2), &xs, &ys, 1e-13);
        }
    }
    total
}

#[test]
fn step_errors_match_oracle() {
    let kernel = KernelSpec::matern(0.5, 1.0).unwrap();
    let p = SchemeParams::new(4, 0.3, 1, 0).unwrap();
    assert_eq!(p.truncation(), 6);
    let e = hybrid_mse(&kernel, &p, 1e-12, 1.0).unwrap();
    let d2 = oracle_step_error(&kernel, 4, 1, 4);
    let d3 = oracle_step_error(&kernel, 4, 4, 6);
    assert!((e.d2 - d2).abs() < 1e-8 * d2, "{} vs {d2}", e.d2);
    assert!((e.d3 - d3).abs() < 1e-2 * d3, "{} vs {d3}", e.d3);
    assert!((e.e_n - (e.d1 + e.d2 + e.d3 + e.d4)).abs() < 1e-15);
    assert!(e.d1 > 0.0 && e.d4 > 0.0);
}

#[test]
fn mse_report_layout() {
    let kernel = KernelSpec::exp_decay(-0.5).unwrap();
    let base = SchemeParams::new(5, 0.5, 1, 0).unwrap();
    let report = mse_study(&kernel, &[5, 10, 20], &base, 1e-10, 1.0).unwrap();
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("n,D1,D2,D3,D4,E_n,scaled,J_ref\n"));
    assert_eq!(text.lines().count(), 4);
    let (slope, _) = report.rate.unwrap();
    assert!(slope < 0.0, "slope {slope}");
    assert!(report.entries.windows(2).all(|w| w[1].e_n < w[0].e_n));
}
