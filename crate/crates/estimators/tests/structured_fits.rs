mod support;

use mwcov_core::{DMatrix, FactorSet, StructuredMatrix, Tensor};
use mwcov_estimators::{
    lambda_from_rate, objective, sg_palm, sg_palm_gradient, sg_palm_objective, sg_palm_smooth, teralasso, teralasso_gradient, teralasso_objective,
    teralasso_smooth, tlasso, tlasso_objective, EstimatorConfig, Init, Method, Model, SampleStats,
};
use support::*;

fn cfg(lambda: f64) -> EstimatorConfig {
    EstimatorConfig {
        tol: 1e-10,
        max_iter: 2000,
        ..EstimatorConfig::with_lambda(vec![lambda])
    }
}

fn scalar_stats(s: f64) -> SampleStats {
    SampleStats::from_cov(DMatrix::from_element(1, 1, s), &[1, 1]).unwrap()
}

fn random_data(seed: u64, dims: &[usize], n: usize) -> Vec<Tensor> {
    let mut r = rng(seed);
    let d: usize = dims.iter().product();
    let mix = rand_spd(&mut r, d);
    (0..n).map(|_| Tensor::new(dims.to_vec(), (&mix * randn(&mut r, d, 1)).as_slice().to_vec()).unwrap()).collect()
}

fn factors(fit: &mwcov_estimators::FitResult) -> Vec<DMatrix<f64>> {
    fit.factors.as_ref().unwrap().factors().to_vec()
}

/// Central differences of `f` along every symmetric unit direction.
fn fd_gradient(f: &dyn Fn(&[DMatrix<f64>]) -> f64, x: &[DMatrix<f64>], h: f64) -> Vec<DMatrix<f64>> {
    x.iter()
        .enumerate()
        .map(|(k, xk)| {
            let n = xk.nrows();
            DMatrix::from_fn(n, n, |i, j| {
                let mut plus = x.to_vec();
                let mut minus = x.to_vec();
                for (a, b) in [(i, j), (j, i)] {
                    plus[k][(a, b)] += h;
                    minus[k][(a, b)] -= h;
                }
                if i == j {
                    plus[k][(i, i)] -= h;
                    minus[k][(i, i)] += h;
                }
                let df = (f(&plus) - f(&minus)) / (2.0 * h);
                // a symmetric off-diagonal move touches two entries
                if i == j {
                    df
                } else {
                    df / 2.0
                }
            })
        })
        .collect()
}

fn rel_grad_err(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_squared()).sum::<f64>().sqrt();
    num / den
}

#[test]
fn teralasso_scalar_stationarity() {
    for s in [0.5, 2.0] {
        let fit = teralasso(&scalar_stats(s), &cfg(0.0)).unwrap();
        let f = factors(&fit);
        assert!((f[0][(0, 0)] - 1.0 / (2.0 * s)).abs() < 1e-6, "{f:?}");
        assert!((f[1][(0, 0)] - 1.0 / (2.0 * s)).abs() < 1e-6);
        let fs = fit.factors.unwrap();
        let want = s * (1.0 / s) - (1.0 / s).ln();
        assert!((teralasso_objective(&scalar_stats(s), &fs, &[0.0, 0.0]).unwrap() - want).abs() < 1e-10);
    }
}

#[test]
fn sg_palm_scalar_stationarity() {
    for s in [0.5, 2.0] {
        let fit = sg_palm(&scalar_stats(s), &cfg(0.0)).unwrap();
        let f = factors(&fit);
        let sum = f[0][(0, 0)] + f[1][(0, 0)];
        assert!((sum - 1.0 / (2.0 * s).sqrt()).abs() < 1e-6, "{sum}");
        assert!((2.0 * s * sum - 1.0 / sum).abs() < 1e-5);
    }
}

#[test]
fn gradients_match_finite_differences() {
    let dims = [3usize, 2];
    for seed in 0..10 {
        let mut r = rng(500 + seed);
        let data = random_data(600 + seed, &dims, 8);
        let stats = SampleStats::from_data(&data, true).unwrap();
        let scatters: Vec<DMatrix<f64>> = (0..2).map(|k| stats.mode_scatter(k).unwrap()).collect();
        let psi: Vec<DMatrix<f64>> = dims.iter().map(|&n| rand_spd(&mut r, n)).collect();
        let f = |x: &[DMatrix<f64>]| teralasso_smooth(&scatters, x).unwrap().unwrap();
        let g = teralasso_gradient(&scatters, &psi).unwrap();
        let err = rel_grad_err(&fd_gradient(&f, &psi, 1e-5), &g);
        assert!(err <= 1e-6, "teralasso seed {seed}: {err:e}");

        let a: Vec<DMatrix<f64>> = dims.iter().map(|&n| rand_spd(&mut r, n)).collect();
        let f = |x: &[DMatrix<f64>]| sg_palm_smooth(&stats, x).unwrap().unwrap();
        let g = sg_palm_gradient(&stats, &a).unwrap();
        let err = rel_grad_err(&fd_gradient(&f, &a, 1e-5), &g);
        assert!(err <= 1e-6, "sg-palm seed {seed}: {err:e}");
    }
}

#[test]
fn objectives_match_dense_evaluation() {
    let dims = [3usize, 2];
    let mut r = rng(9);
    let data = random_data(10, &dims, 12);
    let stats = SampleStats::from_data(&data, true).unwrap();
    let s = stats.covariance(100).unwrap();
    let lam = [0.3, 0.7];
    let f: Vec<DMatrix<f64>> = dims.iter().map(|&n| rand_spd(&mut r, n)).collect();
    let fs = FactorSet::new(f.clone()).unwrap();
    let off = |m: &DMatrix<f64>| m.iter().sum::<f64>() * 0.0 + (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| m[(i, j)].abs()).sum::<f64>();

    let kp = kron_desc(&f);
    let want = s.dot(&kp) - kp.clone().cholesky().unwrap().ln_determinant() + 6.0 / 3.0 * lam[0] * off(&f[0]) + 6.0 / 2.0 * lam[1] * off(&f[1]);
    assert!((tlasso_objective(&stats, &fs, &lam, false).unwrap() - want).abs() <= 1e-10 * want.abs().max(1.0));

    let ks = kron_sum_dense(&f);
    let want = s.dot(&ks) - ks.clone().cholesky().unwrap().ln_determinant() + lam[0] * off(&f[0]) + lam[1] * off(&f[1]);
    assert!((teralasso_objective(&stats, &fs, &lam).unwrap() - want).abs() <= 1e-10 * want.abs().max(1.0));

    let sq = &ks * &ks;
    let diag_ks = DMatrix::from_diagonal(&ks.diagonal());
    let want = s.dot(&sq) - diag_ks.determinant().ln() + lam[0] * off(&f[0]) + lam[1] * off(&f[1]);
    assert!((sg_palm_objective(&stats, &fs, &lam, false).unwrap() - want).abs() <= 1e-10 * want.abs().max(1.0));

    // identity model on S = I
    let id = SampleStats::from_cov(DMatrix::identity(6, 6), &dims).unwrap();
    let model = Model::Structured(StructuredMatrix::kron_product(FactorSet::identity(&dims)));
    assert!((objective(Method::Tlasso, &model, &id, &[0.0], false).unwrap() - 6.0).abs() < 1e-12);
    assert!(objective(Method::TeraLasso, &model, &id, &[0.0], false).is_err());
}

#[test]
fn objective_traces_are_monotone() {
    for seed in 0..5 {
        let dims = [4usize, 3];
        let stats = SampleStats::from_data(&random_data(700 + seed, &dims, 30), true).unwrap();
        let c = EstimatorConfig {
            tol: 1e-8,
            max_iter: 300,
            ..EstimatorConfig::with_lambda(vec![0.05])
        };
        for fit in [tlasso(&stats, &c).unwrap(), teralasso(&stats, &c).unwrap(), sg_palm(&stats, &c).unwrap()] {
            assert!(fit.objective_nonincreasing(), "{:?} seed {seed}: {:?}", fit.method, fit.objective_trace);
            assert!(fit.objective_trace.iter().all(|f| f.is_finite()));
        }
    }
}

#[test]
fn tlasso_recovers_kronecker_precision() {
    let o1 = chain(4, 0.4);
    let o2 = chain(4, -0.3) * 2.0;
    let truth = kron_desc(&[o1.clone(), o2.clone()]);
    let data = sample_precision(&truth, &[4, 4], 500, 42);
    let stats = SampleStats::from_data(&data, true).unwrap();
    let fit = tlasso(&stats, &EstimatorConfig::with_lambda(vec![0.01])).unwrap();
    let est = fit.model.materialize().unwrap();
    let err = rel_frob(&est, &truth);
    assert!(err <= 0.1, "{err}");
    let f = factors(&fit);
    assert!((f[0].trace() - 4.0).abs() < 1e-10);
}

#[test]
fn tlasso_heavy_penalty_gives_diagonal_factors() {
    let data = sample_precision(&DMatrix::identity(12, 12), &[3, 4], 40, 1);
    let fit = tlasso(&SampleStats::from_data(&data, true).unwrap(), &EstimatorConfig::with_lambda(vec![100.0])).unwrap();
    for f in factors(&fit) {
        for j in 0..f.ncols() {
            for i in 0..f.nrows() {
                if i != j {
                    assert_eq!(f[(i, j)], 0.0);
                }
            }
        }
    }
}

#[test]
fn tlasso_scale_identifiability() {
    let data = random_data(77, &[3, 4], 40);
    let c = 3.0;
    let scaled: Vec<Tensor> = data.iter().map(|t| t.scaled(c)).collect();
    let cfg = EstimatorConfig {
        tol: 1e-12,
        inner_tol: 1e-12,
        ..EstimatorConfig::with_lambda(vec![0.0])
    };
    let a = tlasso(&SampleStats::from_data(&data, true).unwrap(), &cfg).unwrap();
    let b = tlasso(&SampleStats::from_data(&scaled, true).unwrap(), &cfg).unwrap();
    let (fa, fb) = (factors(&a), factors(&b));
    assert!((&fa[0] - &fb[0]).amax() <= 1e-8);
    assert!((&fa[1] / (c * c) - &fb[1]).amax() <= 1e-8);
    let (ma, mb) = (a.model.materialize().unwrap(), b.model.materialize().unwrap());
    assert!((ma / (c * c) - mb).amax() <= 1e-8);
}

#[test]
fn teralasso_support_recovery() {
    let dims = [4usize, 4];
    let p1 = chain(4, 0.45);
    let p2 = chain(4, -0.4);
    let truth = kron_sum_dense(&[p1, p2]);
    let mut scores = Vec::new();
    for seed in 0..5 {
        let data = sample_precision(&truth, &dims, 200, 900 + seed);
        let stats = SampleStats::from_data(&data, true).unwrap();
        let lam = lambda_from_rate(Method::TeraLasso, &dims, 200, 2.0).unwrap();
        let fit = teralasso(&stats, &EstimatorConfig::with_lambda(lam)).unwrap();
        let est = fit.model.materialize().unwrap();
        scores.push(mcc(&est, &truth, 1e-6));
    }
    let m = median(scores.clone());
    assert!(m >= 0.8, "{scores:?}");
}

#[test]
fn identity_and_diagonal_inits_reach_the_same_teralasso_optimum() {
    let stats = SampleStats::from_data(&random_data(31, &[3, 3], 50), true).unwrap();
    let mut c = cfg(0.05);
    let a = teralasso(&stats, &c).unwrap();
    c.init = Init::Diagonal;
    let b = teralasso(&stats, &c).unwrap();
    let (fa, fb) = (a.objective_trace.last().unwrap(), b.objective_trace.last().unwrap());
    assert!((fa - fb).abs() <= 1e-8 * fa.abs());
    assert!((a.model.materialize().unwrap() - b.model.materialize().unwrap()).amax() < 1e-3);
}

#[test]
fn rate_rules() {
    let l = lambda_from_rate(Method::SgPalm, &[64, 50], 50, 1.0).unwrap();
    assert!((l[1] - 3200f64.ln().sqrt()).abs() < 1e-12);
    assert!((l[1] - 2.841).abs() < 1e-3);
    let t = lambda_from_rate(Method::TeraLasso, &[4, 16], 10, 1.0).unwrap();
    assert!((t[0] / t[1] - (4.0f64 / 16.0).sqrt()).abs() < 1e-12);
    let k = lambda_from_rate(Method::Tlasso, &[4, 16], 10, 2.0).unwrap();
    assert!((k[1] - 2.0 * (16f64.ln() / 640.0).sqrt()).abs() < 1e-15);
    assert_eq!(lambda_from_rate(Method::Glasso, &[4, 16], 10, 1.0).unwrap().len(), 1);
}
