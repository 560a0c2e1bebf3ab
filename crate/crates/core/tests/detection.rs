use std::f64::consts::{FRAC_PI_4, PI};

use lossyphase_core::bounds::{qfi_lossy, ProbeWeights, EXPERIMENT_ETAS};
use lossyphase_core::detection::{
    classical_fisher, optimize_detection, optimize_theta_d, DetectionConfig, IdealModel, Label, ModelPair,
    OutcomeModel, Setting,
};
use lossyphase_core::imperfections::{apparatus, ImperfectionParams};
use lossyphase_core::prep::{Probe, ProbeKind};

#[test]
fn combined_fisher_saturates_bound_at_zero() {
    for &eta in &EXPERIMENT_ETAS {
        for kind in [ProbeKind::Optimal, ProbeKind::Noon] {
            let probe = Probe::for_kind(kind, eta).unwrap();
            let pair = ModelPair::ideal(&probe.state, eta).unwrap();
            let f_cl = pair.combined_fisher(0.0, true).unwrap();
            let f_q = qfi_lossy(&probe.weights, eta).unwrap();
            let rel = (f_cl - f_q).abs() / f_q;
            assert!(rel < 1e-6, "eta {eta} {kind:?}: {f_cl} vs {f_q} (rel {rel:e})");
        }
    }
}

#[test]
fn nominal_phase_leaves_a_small_gap_for_pair_component() {
    // With the conditional phase pinned at π/4 the best ϑ_D falls short of
    // the zero-loss bound once the probe carries a |11⟩ term.
    let eta = 0.361;
    let probe = Probe::optimal(eta).unwrap();
    let pinned = optimize_theta_d(&probe.state, eta).unwrap();
    let joint = optimize_detection(&probe.state, eta).unwrap();
    let f = |cfg: DetectionConfig| {
        let m = IdealModel::new(&probe.state, eta, cfg).unwrap();
        classical_fisher(&m, 0.0, &Setting::Quarter.labels()).unwrap()
    };
    assert!(f(joint) > f(pinned));
    assert!((pinned.conditional_phase - FRAC_PI_4).abs() == 0.0);
}

#[test]
fn noon_two_photon_fringes_have_period_pi() {
    let noon = ProbeWeights::noon().state();
    for &eta in &[1.0, 0.361] {
        let pair = ModelPair::ideal(&noon, eta).unwrap();
        for k in 0..=400 {
            let phi = -PI + 2.0 * PI * f64::from(k) / 400.0;
            for setting in Setting::BOTH {
                let a = pair.get(setting).probabilities(phi);
                let b = pair.get(setting).probabilities(phi + PI);
                for l in [Label::AA, Label::AB, Label::BB] {
                    assert!((a[l] - b[l]).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn noon_single_loss_counts_are_flat_without_imperfections() {
    let noon = ProbeWeights::noon().state();
    let pair = ModelPair::ideal(&noon, 0.361).unwrap();
    let base = pair.half.probabilities(0.0);
    for k in 0..100 {
        let p = pair.half.probabilities(-PI + 0.0628 * f64::from(k));
        assert!((p[Label::AC] - base[Label::AC]).abs() < 1e-12);
        assert!((p[Label::BC] - base[Label::BC]).abs() < 1e-12);
    }
}

#[test]
fn fibre_admixture_modulates_single_loss_counts() {
    let probe = Probe::noon().unwrap();
    let params = ImperfectionParams {
        epsilon: 0.01,
        ..ImperfectionParams::ideal()
    };
    let app = apparatus(&probe, 0.361, params).unwrap();
    let values: Vec<f64> = (0..200)
        .map(|k| app.half.probabilities(-PI + PI * f64::from(k) / 100.0)[Label::AC])
        .collect();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi - lo > 1e-3, "swing {}", hi - lo);
    // Faint compared with the mean level.
    assert!((hi - lo) < 0.5 * (hi + lo));
}

#[test]
fn imperfect_pipeline_reduces_to_ideal() {
    for &eta in &EXPERIMENT_ETAS {
        for kind in [ProbeKind::Optimal, ProbeKind::Noon] {
            let probe = Probe::for_kind(kind, eta).unwrap();
            let app = apparatus(&probe, eta, ImperfectionParams::ideal()).unwrap();
            let ideal = ModelPair::ideal(&probe.state, eta).unwrap();
            for k in -30..=30 {
                let phi = 0.05 * f64::from(k);
                for s in Setting::BOTH {
                    assert_eq!(app.get(s).probabilities(phi), ideal.get(s).probabilities(phi));
                }
            }
        }
    }
}

#[test]
fn degraded_distributions_stay_normalized() {
    let probe = Probe::optimal(0.4).unwrap();
    for &(lambda, v, eps) in &[(0.98, 0.98, 0.0005), (0.5, 0.7, 0.05), (0.0, 0.0, 1.0)] {
        let params = ImperfectionParams {
            epsilon: eps,
            delta: 0.3,
            lambda_hom: lambda,
            v_classical: v,
            ..ImperfectionParams::ideal()
        };
        let app = apparatus(&probe, 0.4, params).unwrap();
        for k in -20..=20 {
            for s in Setting::BOTH {
                let p = app.get(s).probabilities(0.1 * f64::from(k));
                assert!((p.sum() - 1.0).abs() < 1e-12);
                assert!(p.0.iter().all(|&x| x >= 0.0));
            }
        }
    }
}
