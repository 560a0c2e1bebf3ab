// Independent reference computations checked against the library.

use lossyphase_core::bounds::{optimize_weights, qfi_lossy, sil_precision, sil_precision_numeric, ProbeWeights};
use lossyphase_core::fock::{apply_loss, apply_transform, beam_splitter, phase_shift, FockState, ModeTransform, Occupation};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn factorial(n: u8) -> f64 {
    (1..=u32::from(n)).map(f64::from).product()
}

/// Permanent by expansion over all permutations (Ryser is overkill for n ≤ 4).
fn permanent(m: &[Vec<Complex64>]) -> Complex64 {
    fn go(m: &[Vec<Complex64>], row: usize, used: &mut Vec<bool>) -> Complex64 {
        if row == m.len() {
            return Complex64::new(1.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..m.len() {
            if !used[col] {
                used[col] = true;
                acc += m[row][col] * go(m, row + 1, used);
                used[col] = false;
            }
        }
        acc
    }
    go(m, 0, &mut vec![false; m.len()])
}

fn expand(occ: &[u8]) -> Vec<usize> {
    occ.iter()
        .enumerate()
        .flat_map(|(mode, &n)| std::iter::repeat_n(mode, n as usize))
        .collect()
}

fn patterns(modes: usize, total: u8) -> Vec<Vec<u8>> {
    if modes == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in patterns(modes - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// `⟨out|U|in⟩ = Perm(U[out_i][in_j]) / √(Π in! Π out!)` for `a_k† → Σ_m U[m][k] a_m†`.
fn transform_oracle(state: &FockState, u: &ModeTransform, out: &[u8]) -> Complex64 {
    let rows = expand(out);
    let mut acc = Complex64::new(0.0, 0.0);
    for (occ, &amp) in state.iter() {
        let cols = expand(occ.as_slice());
        if cols.len() != rows.len() {
            continue;
        }
        let m: Vec<Vec<Complex64>> = rows.iter().map(|&r| cols.iter().map(|&c| u.entry(r, c)).collect()).collect();
        let norm: f64 = occ.as_slice().iter().chain(out).map(|&n| factorial(n)).product();
        acc += amp * permanent(&m) / norm.sqrt();
    }
    acc
}

fn random_network(rng: &mut ChaCha8Rng, modes: usize, layers: usize) -> ModeTransform {
    let mut u = ModeTransform::identity(modes);
    for _ in 0..layers {
        let i = rng.random_range(0..modes);
        let mut j = rng.random_range(0..modes);
        while j == i {
            j = rng.random_range(0..modes);
        }
        let bs = beam_splitter(rng.random::<f64>(), i, j, modes).unwrap();
        let ps = phase_shift(rng.random_range(-3.0..3.0), rng.random_range(0..modes), modes).unwrap();
        u = u.then(&bs).unwrap().then(&ps).unwrap();
    }
    u
}

fn random_state(rng: &mut ChaCha8Rng, modes: usize, total: u8) -> FockState {
    let terms: Vec<(Occupation, Complex64)> = patterns(modes, total)
        .into_iter()
        .map(|p| (Occupation::new(p), Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
        .collect();
    let raw = FockState::from_terms(modes, 4, terms.iter().map(|(o, a)| (o.clone(), *a * 0.1))).unwrap();
    raw.normalized()
}

#[test]
fn transform_matches_permanent_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for trial in 0..60 {
        let modes = 2 + trial % 3;
        let total = 1 + (trial % 4) as u8;
        let state = random_state(&mut rng, modes, total);
        let u = random_network(&mut rng, modes, 6);
        let out = apply_transform(&state, &u).unwrap();
        for p in patterns(modes, total) {
            let diff = (out.amplitude(&p) - transform_oracle(&state, &u, &p)).norm();
            worst = worst.max(diff);
        }
    }
    assert!(worst < 1e-10, "max deviation {worst:e}");
}

fn variance_qfi(amps: &[(f64, u32)]) -> (f64, f64) {
    let p: f64 = amps.iter().map(|(a, _)| a * a).sum();
    if p == 0.0 {
        return (0.0, 0.0);
    }
    let mean: f64 = amps.iter().map(|(a, n)| a * a * f64::from(*n)).sum::<f64>() / p;
    let sq: f64 = amps.iter().map(|(a, n)| a * a * f64::from(*n).powi(2)).sum::<f64>() / p;
    (p, 4.0 * (sq - mean * mean))
}

/// `p₀F₀ + p₁F₁` written straight from the conditional states.
fn lossy_qfi_oracle(x: [f64; 3], eta: f64) -> f64 {
    let [x0, x1, x2] = x;
    let (p0, f0) = variance_qfi(&[(eta * x2.sqrt(), 2), ((eta * x1).sqrt(), 1), (-x0.sqrt(), 0)]);
    let (p1, f1) = variance_qfi(&[((2.0 * eta * (1.0 - eta) * x2).sqrt(), 1), (((1.0 - eta) * x1).sqrt(), 0)]);
    p0 * f0 + p1 * f1
}

fn brute_force_optimum(eta: f64) -> f64 {
    let step = 1e-3;
    let n = 1000;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=n {
        for j in 0..=(n - i) {
            let x0 = i as f64 * step;
            let x1 = j as f64 * step;
            let f = lossy_qfi_oracle([x0, x1, (1.0 - x0 - x1).max(0.0)], eta);
            if f > best.0 {
                best = (f, x0, x1);
            }
        }
    }
    // Second pass on a 100x finer grid around the coarse winner.
    let fine = step / 100.0;
    let (_, c0, c1) = best;
    for i in -200..=200 {
        for j in -200..=200 {
            let x0 = c0 + f64::from(i) * fine;
            let x1 = c1 + f64::from(j) * fine;
            let x2 = 1.0 - x0 - x1;
            if x0 < 0.0 || x1 < 0.0 || x2 < 0.0 {
                continue;
            }
            let f = lossy_qfi_oracle([x0, x1, x2], eta);
            if f > best.0 {
                best = (f, x0, x1);
            }
        }
    }
    best.0
}

#[test]
fn optimizer_matches_simplex_brute_force() {
    for &eta in &[0.05, 0.2, 0.361, 0.4, 0.547, 0.8, 1.0] {
        let (w, f) = optimize_weights(eta).unwrap();
        let oracle = brute_force_optimum(eta);
        assert!((f - oracle).abs() < 1e-6, "eta {eta}: {f} vs {oracle}");
        assert!((f - lossy_qfi_oracle(w.as_array(), eta)).abs() < 1e-10);
    }
}

#[test]
fn lossy_qfi_matches_conditional_state_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let a: f64 = rng.random();
        let b: f64 = rng.random::<f64>() * (1.0 - a);
        let w = ProbeWeights::new(a, b, 1.0 - a - b).unwrap();
        let eta: f64 = rng.random_range(0.01..1.0);
        let f = qfi_lossy(&w, eta).unwrap();
        assert!((f - lossy_qfi_oracle(w.as_array(), eta)).abs() < 1e-10);
    }
}

#[test]
fn conditional_states_after_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let a: f64 = rng.random();
        let b: f64 = rng.random::<f64>() * (1.0 - a);
        let [x0, x1, x2] = [a, b, 1.0 - a - b];
        let eta: f64 = rng.random_range(0.0..1.0);
        let state = ProbeWeights::new(x0, x1, x2).unwrap().state();
        let branches = apply_loss(&state, 0, eta).unwrap();
        let zero = branches.iter().find(|b| b.lost == 0).unwrap().weighted_state();
        let one = branches.iter().find(|b| b.lost == 1).unwrap().weighted_state();
        let c = |v: f64| Complex64::new(v, 0.0);
        assert!((zero.amplitude(&[2, 0]) - c(eta * x2.sqrt())).norm() < 1e-12);
        assert!((zero.amplitude(&[1, 1]) - c((eta * x1).sqrt())).norm() < 1e-12);
        assert!((zero.amplitude(&[0, 2]) - c(-x0.sqrt())).norm() < 1e-12);
        assert!((one.amplitude(&[1, 0]) - c((2.0 * eta * (1.0 - eta) * x2).sqrt())).norm() < 1e-12);
        assert!((one.amplitude(&[0, 1]) - c(((1.0 - eta) * x1).sqrt())).norm() < 1e-12);
    }
}

#[test]
fn sil_closed_form_matches_numeric_split() {
    for k in 1..=100 {
        let eta = f64::from(k) / 100.0;
        for &n in &[1.0, 2.0, 10.0] {
            let closed = sil_precision(eta, n).unwrap();
            let numeric = sil_precision_numeric(eta, n).unwrap();
            assert!((closed - numeric).abs() < 1e-8, "eta {eta} n {n}");
        }
    }
}

fn arb_weights() -> impl Strategy<Value = ProbeWeights> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(a, b)| {
        let x0 = a;
        let x1 = (1.0 - a) * b;
        ProbeWeights::new(x0, x1, (1.0 - x0 - x1).max(0.0)).unwrap()
    })
}

proptest! {
    #[test]
    fn transforms_stay_unitary(seed in any::<u64>(), modes in 2usize..5, layers in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_network(&mut rng, modes, layers);
        prop_assert!(u.unitarity_deviation() < 1e-12);
        let state = random_state(&mut rng, modes, 2);
        let out = apply_transform(&state, &u).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composition_is_sequential_application(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_network(&mut rng, 3, 3);
        let v = random_network(&mut rng, 3, 3);
        let state = random_state(&mut rng, 3, 3);
        let stepwise = apply_transform(&apply_transform(&state, &u).unwrap(), &v).unwrap();
        let joint = apply_transform(&state, &u.then(&v).unwrap()).unwrap();
        for p in patterns(3, 3) {
            prop_assert!((stepwise.amplitude(&p) - joint.amplitude(&p)).norm() < 1e-12);
        }
    }

    #[test]
    fn loss_branches_are_complete(w in arb_weights(), eta in 0.0..=1.0f64) {
        let branches = apply_loss(&w.state(), 0, eta).unwrap();
        let total: f64 = branches.iter().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for b in &branches {
            prop_assert!(b.probability > 0.0);
            prop_assert!((b.state.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lossy_qfi_bounded_by_pure(w in arb_weights(), eta in 0.0..=1.0f64) {
        let f = qfi_lossy(&w, eta).unwrap();
        prop_assert!(f >= -1e-12);
        prop_assert!(f <= qfi_lossy(&w, 1.0).unwrap() + 1e-12);
    }
}
