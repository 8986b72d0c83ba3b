use gas_core::distributions::{Distribution, DistributionId, Scaling};
use gas_core::estimation::{self, fit, fit_static, initialize, negative_loglik, OptimizerConfig};
use gas_core::model::{self, simulate, target_kappa, Coefficients, GasPar, GasSpec, Series};
use gas_core::GasError;

fn spec(id: DistributionId, par: GasPar) -> GasSpec {
    GasSpec::new(Distribution::univariate(id).unwrap(), Scaling::Identity, par, false).unwrap()
}

fn scale_only() -> GasPar {
    GasPar { scale: true, ..GasPar::default() }
}

fn location_only() -> GasPar {
    GasPar { location: true, ..GasPar::default() }
}

fn sample_static(id: DistributionId, theta: &[f64], n: usize, seed: u64) -> Series {
    let s = spec(id, GasPar::default_for(&Distribution::univariate(id).unwrap()));
    let kappa = s.links.unmap(theta).unwrap();
    simulate(&s, &Coefficients::constant(kappa), n, seed).unwrap().series
}

fn reference_std() -> (GasSpec, Coefficients) {
    let s = spec(DistributionId::Std, GasPar { location: true, scale: true, ..GasPar::default() });
    let b = vec![0.9, 0.95, 0.0];
    let kappa = target_kappa(&s, &b, &[0.1, 1.5, 7.0]).unwrap();
    (s, Coefficients::new(kappa, vec![0.1, 0.4, 0.0], b))
}

#[test]
fn static_gaussian_likelihood_matches_closed_form() {
    let y = sample_static(DistributionId::Norm, &[0.5, 2.0], 400, 1);
    let x = y.values();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let s = spec(DistributionId::Norm, scale_only());
    let kappa = s.links.unmap(&[mean, sd]).unwrap();
    let free = estimation::encode(&s, &Coefficients::constant(kappa)).unwrap();
    // a = b = 0 are encoded at the edge of the transform; pin them exactly
    let mut coeffs = estimation::decode(&s, &free).unwrap();
    coeffs.a_diag[1] = 0.0;
    coeffs.b_diag[1] = 0.0;
    let ll = model::log_likelihood(&s, &coeffs, &y).unwrap();
    let oracle: f64 = x
        .iter()
        .map(|v| {
            let z = (v - mean) / sd;
            -(-0.5 * z * z).exp().ln() + 0.5 * (2.0 * std::f64::consts::PI).ln() + sd.ln()
        })
        .sum();
    assert!((-ll - oracle).abs() < 1e-9 * oracle.abs());
    // the encoded point itself is within rounding of the static model
    let nll = negative_loglik(&s, &free, &y).unwrap();
    assert!((nll - oracle).abs() < 1e-6 * oracle.abs());
    assert_eq!(nll, negative_loglik(&s, &free, &y.clone()).unwrap());
}

#[test]
fn static_mle_closed_forms() {
    let y = sample_static(DistributionId::Norm, &[0.5, 2.0], 500, 2);
    let x = y.values();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let est = fit_static(&spec(DistributionId::Norm, scale_only()), &y).unwrap();
    assert!((est.values[0] - mean).abs() < 1e-6, "{:?} vs {mean}", est.values);
    assert!((est.values[1] - sd).abs() < 1e-6);

    let y = sample_static(DistributionId::Poi, &[3.5], 500, 3);
    let mean = y.values().iter().sum::<f64>() / 500.0;
    let est = fit_static(&spec(DistributionId::Poi, location_only()), &y).unwrap();
    assert!((est.values[0] - mean).abs() < 1e-8, "{} vs {mean}", est.values[0]);

    let y = sample_static(DistributionId::Exp, &[0.7], 500, 4);
    let mean = y.values().iter().sum::<f64>() / 500.0;
    let est = fit_static(&spec(DistributionId::Exp, location_only()), &y).unwrap();
    assert!((est.values[0] - 1.0 / mean).abs() < 1e-8, "{} vs {}", est.values[0], 1.0 / mean);
}

#[test]
fn static_fit_needs_enough_data() {
    let y = Series::univariate(vec![0.1; 15]);
    let r = fit_static(&spec(DistributionId::Norm, scale_only()), &y);
    assert!(matches!(r, Err(GasError::InsufficientData { needed: 20, got: 15 })));
}

#[test]
fn support_violation_is_reported() {
    let mut v = vec![1.0; 50];
    v[17] = -1.0;
    let r = fit_static(&spec(DistributionId::Exp, location_only()), &Series::univariate(v));
    assert!(matches!(r, Err(GasError::SupportViolationAt { t: 17, .. })));
}

#[test]
fn grid_with_static_point_never_loses_to_static() {
    let y = sample_static(DistributionId::Norm, &[0.0, 1.0], 400, 5);
    let s = spec(DistributionId::Norm, scale_only());
    let config = OptimizerConfig { grid_a: vec![0.0, 0.05], grid_b: vec![0.0, 0.9], ..OptimizerConfig::default() };
    let theta = fit_static(&s, &y).unwrap();
    let static_ll =
        model::log_likelihood(&s, &Coefficients::constant(s.links.unmap(&theta.values).unwrap()), &y).unwrap();
    let c0 = initialize(&s, &y, &config).unwrap();
    let ll = model::log_likelihood(&s, &c0, &y).unwrap();
    assert!(ll >= static_ll - 1e-8);
    assert_eq!(c0, initialize(&s, &y, &config).unwrap());
}

#[test]
fn grid_prefers_persistence_on_persistent_data() {
    let (s, coeffs) = reference_std();
    let sim = simulate(&s, &coeffs, 2000, 6).unwrap();
    let c0 = initialize(&s, &sim.series, &OptimizerConfig::default()).unwrap();
    assert!(c0.b_diag[1] >= 0.8, "{:?}", c0.b_diag);
}

#[test]
fn no_dynamics_gives_small_a() {
    let y = sample_static(DistributionId::Norm, &[0.0, 1.0], 5000, 7);
    let r = fit(&spec(DistributionId::Norm, scale_only()), &y, &OptimizerConfig::default()).unwrap();
    assert!(r.coeffs.a_diag[1] <= 0.05, "{:?}", r.coeffs);
    assert_eq!(r.coeffs.a_diag[0], 0.0);
    assert_eq!(r.coeffs.b_diag[0], 0.0);
}

#[test]
fn reference_configuration_fit_structure() {
    let (s, coeffs) = reference_std();
    let sim = simulate(&s, &coeffs, 3000, 8).unwrap();
    let config = OptimizerConfig::default();
    let r = fit(&s, &sim.series, &config).unwrap();
    assert_eq!(r.num_params, 7);
    assert_eq!(r.estimates.len(), 7);
    assert!((r.aic - (2.0 * 7.0 - 2.0 * r.loglik)).abs() < 1e-10);
    assert!((r.bic - (7.0 * 3000f64.ln() - 2.0 * r.loglik)).abs() < 1e-10);
    // the likelihood of the reported coefficients is the filter's
    let free = estimation::encode(&s, &r.coeffs).unwrap();
    let direct = model::log_likelihood(&s, &r.coeffs, &sim.series).unwrap();
    assert_eq!(direct, r.filter_output.total_loglik);
    assert!((negative_loglik(&s, &free, &sim.series).unwrap() + r.loglik).abs() < 1e-6);
    // monotone improvement over the starting point and the static model
    let c0 = initialize(&s, &sim.series, &config).unwrap();
    let ll0 = model::log_likelihood(&s, &c0, &sim.series).unwrap();
    assert!(r.loglik >= ll0);
    for e in &r.estimates {
        if let (Some(se), Some(t), Some(p)) = (e.std_error, e.t_stat, e.p_value) {
            assert!((t - e.value / se).abs() < 1e-12);
            assert!((p - estimation::two_sided_p(t)).abs() < 1e-15);
        }
    }
    assert!(r.estimate("a3").is_none() && r.estimate("b3").is_none());
    assert!(r.coeffs.b_diag[1] > 0.85, "{:?}", r.coeffs);
}

#[test]
fn gaussian_location_standard_error() {
    let y = sample_static(DistributionId::Norm, &[0.3, 1.5], 5000, 9);
    let s = spec(DistributionId::Norm, scale_only());
    let r = fit(&s, &y, &OptimizerConfig::default()).unwrap();
    let x = y.values();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let se = r.estimate("kappa1").unwrap().std_error.unwrap();
    let oracle = sd / n.sqrt();
    assert!((se / oracle - 1.0).abs() < 0.1, "{se} vs {oracle}");
}
