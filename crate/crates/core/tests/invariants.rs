//! Cross-module properties of the ensemble machinery.

use twistwalk_core::dynamics::{MapSystem, State};
use twistwalk_core::math::{self, normal_cdf};
use twistwalk_core::mc::{first_exit, run_ensemble, EnsembleSpec, ExitSide, Initial};
use twistwalk_core::potentials::{SystemPotentials, TrigPotential};
use twistwalk_core::rng::SymbolStream;
use twistwalk_core::stats::{clt_test, ks_distance, CltThresholds};

fn normals(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut st = SymbolStream::new(seed, index);
    (0..n)
        .map(|_| {
            let u = 1.0 - st.next_unit();
            let v = st.next_unit();
            math::sqrt(-2.0 * math::ln(u)) * math::cos(math::TAU * v)
        })
        .collect()
}

#[test]
fn symbol_means_are_balanced() {
    let (m, n) = (200u64, 5000usize);
    let mut sum = 0i64;
    for i in 0..m {
        let mut st = SymbolStream::new(99, i);
        sum += (0..n).map(|_| i64::from(st.next_symbol())).sum::<i64>();
    }
    let total = m as f64 * n as f64;
    assert!((sum as f64 / total).abs() <= 4.0 / total.sqrt());
}

#[test]
fn exits_land_near_their_boundary() {
    let base = SystemPotentials::cos_sin();
    let w = TrigPotential::constant(0.3);
    let pots = SystemPotentials::new(base.u_plus, base.u_minus, base.v_plus, base.v_minus, w.clone(), w);
    let eps = 0.02;
    let sys = MapSystem::with_epsilon(pots, eps).unwrap();
    for i in 0..300u64 {
        let mut st = SymbolStream::new(5, i);
        let rec = first_exit(&sys, State::new(st.next_unit(), 0.3), 0.2, 0.4, 1_000_000, &mut st, i).unwrap();
        let boundary = match rec.side {
            ExitSide::Up => rec.r_hi,
            ExitSide::Down => rec.r_lo,
            ExitSide::FinalTime => panic!("no exit"),
        };
        assert!((rec.r_exit - boundary).abs() <= eps * (1.0 + 0.3 * eps) + 1e-12, "{rec:?}");
    }
}

#[test]
fn ks_respects_the_dkw_envelope() {
    let m = 2000;
    let envelope = (f64::ln(2.0 / 0.01) / (2.0 * m as f64)).sqrt();
    let exceed = (0..100).filter(|&i| ks_distance(&normals(3, i, m), normal_cdf) > envelope).count();
    // one exceedance expected at the 1% level
    assert!(exceed <= 4, "{exceed}");
}

#[test]
fn clt_test_ignores_sample_order() {
    let xs: Vec<f64> = normals(8, 0, 3000).iter().map(|x| 0.5 * x).collect();
    let mut ys = xs.clone();
    ys.reverse();
    ys.rotate_left(777);
    let a = clt_test(&xs, 1.0, 0.0, 0.25, CltThresholds::default()).unwrap();
    let b = clt_test(&ys, 1.0, 0.0, 0.25, CltThresholds::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.ks <= 1.36 / (3000f64).sqrt());
}

#[test]
fn ensemble_is_reproducible() {
    let sys = MapSystem::with_epsilon(SystemPotentials::cos_sin(), 0.05).unwrap();
    let spec = EnsembleSpec::new(Initial::UniformTheta { r: 0.3 }, 0.5, 64, 21);
    let a = run_ensemble(&sys, &spec).unwrap();
    let b = run_ensemble(&sys, &spec).unwrap();
    assert_eq!(a, b);
    let c = run_ensemble(&sys, &EnsembleSpec { seed: 22, ..spec }).unwrap();
    assert_ne!(a.displacements, c.displacements);
}

#[test]
fn short_time_variance_matches_the_oracle() {
    // Var[eps sum w_k v(theta_k)] = eps^2 sum E v^2 ~ s sigma^2 over times
    // short enough that r stays away from resonances
    let sys = MapSystem::with_epsilon(SystemPotentials::cos_sin(), 0.01).unwrap();
    let spec = EnsembleSpec::new(Initial::UniformTheta { r: 0.25 }, 0.04, 4000, 2);
    let res = run_ensemble(&sys, &spec).unwrap();
    let n = res.displacements.len() as f64;
    let mean = res.displacements.iter().sum::<f64>() / n;
    let var = res.displacements.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n - 1.0);
    assert!((var / (0.04 * 0.25) - 1.0).abs() < 0.15, "{var}");
}
