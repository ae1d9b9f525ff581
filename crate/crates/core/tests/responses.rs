//! Response analysis against the published tables and reference
//! computations.

mod common;

use std::f64::consts::PI;

use common::{brute_wng, moment_derivatives, repeated, MEMORIES, TABLE1, TABLE2_Q_OPT, TABLE2_WNG};
use observer_core::analysis::{
    dc_derivatives, flatness_check, frequency_response, frequency_table, impulse_response,
    lde_filter, optimal_lag_k2, ramp_error_empirical, step_response_from_rest, step_response_table, wng_closed_k2,
    wng_numeric,
};
use observer_core::pole_place::memory_to_pole;
use observer_core::realization::lde_k2_closed;
use observer_core::{extract_transfer, TransferFunction};

fn smoother(l: f64, q: f64) -> TransferFunction {
    extract_transfer(&repeated(2, 1.0, memory_to_pole(l).unwrap(), q, 0)).unwrap()
}

#[test]
fn table1_cells() {
    for (q, row) in TABLE1 {
        for (l, expected) in MEMORIES.iter().zip(row) {
            let tf = smoother(*l, q);
            let wng = wng_numeric(&tf).unwrap();
            assert!((wng - expected).abs() < 5e-4, "l={l} q={q}: {wng}");
            assert!((wng - brute_wng(&tf, 20_000)).abs() < 1e-12);
            let p = memory_to_pole(*l).unwrap();
            assert!((wng - wng_closed_k2(p, q)).abs() < 1e-9);
        }
    }
}

#[test]
fn wng_decreases_with_memory() {
    for (q, _) in TABLE1 {
        let values: Vec<f64> = MEMORIES.iter().map(|&l| wng_numeric(&smoother(l, q)).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "q={q}: {values:?}");
    }
}

#[test]
fn table2_cells() {
    for (i, &l) in MEMORIES.iter().enumerate() {
        let p = memory_to_pole(l).unwrap();
        let q = optimal_lag_k2(p);
        assert!((q - TABLE2_Q_OPT[i]).abs() < 0.01, "l={l}: {q}");
        assert!((wng_closed_k2(p, q) - TABLE2_WNG[i]).abs() < 5e-4);
        let tf = smoother(l, q);
        assert!(frequency_response(&tf, PI).unwrap().norm() < 1e-6);
    }
}

#[test]
fn parseval() {
    for (q, _) in TABLE1 {
        for &l in &MEMORIES {
            let tf = smoother(l, q);
            let n = 4096;
            let step = 2.0 * PI / n as f64;
            let integral: f64 = (0..=n)
                .map(|k| {
                    let w = -PI + k as f64 * step;
                    let weight = if k == 0 || k == n { 0.5 } else { 1.0 };
                    weight * frequency_response(&tf, w).unwrap().norm_sqr()
                })
                .sum::<f64>()
                * step
                / (2.0 * PI);
            assert!((integral - wng_numeric(&tf).unwrap()).abs() < 1e-6);
        }
    }
}

#[test]
fn closed_form_wng_grid() {
    for i in 0..20 {
        let p = 0.95 * i as f64 / 19.0;
        for j in 0..20 {
            let q = -2.0 + 12.0 * j as f64 / 19.0;
            let numeric = wng_numeric(&lde_k2_closed(p, q)).unwrap();
            assert!((numeric - wng_closed_k2(p, q)).abs() < 1e-9, "p={p} q={q}");
        }
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-10 {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn optimal_lag_is_the_minimizer() {
    for i in 1..=9 {
        let p = i as f64 / 10.0;
        let q = golden_section(|q| wng_closed_k2(p, q), -5.0, 100.0);
        assert!((q - optimal_lag_k2(p)).abs() < 1e-6, "p={p}");
    }
}

#[test]
fn frequency_derivatives_match_moments() {
    let cases = [(3, 0.04, 0.8, 2.0, 0), (2, 1.0, 0.6065, 1.0, 0), (2, 1.0, 0.9394, -1.0, 0), (3, 0.1, 0.5, 0.5, 1)];
    for (k, ts, p, q, kt) in cases {
        let tf = extract_transfer(&repeated(k, ts, p, q, kt)).unwrap();
        let measured = dc_derivatives(&tf, k + 2).unwrap();
        let oracle = moment_derivatives(&tf, k + 2, 5000);
        for (m, o) in measured.iter().zip(&oracle) {
            assert!((m - o).norm() < 1e-8 * (1.0 + o.norm()), "{m} vs {o}");
        }
    }
}

#[test]
fn flatness_order_is_exact() {
    for (q, _) in TABLE1 {
        for &l in &MEMORIES {
            let tf = smoother(l, q);
            assert!(flatness_check(&tf, 0, q, 1.0, 2).unwrap() < 1e-6);
            assert!(flatness_check(&tf, 0, q, 1.0, 3).unwrap() > 1e-3);
        }
    }
}

#[test]
fn initialized_step_is_flat() {
    for (q, _) in TABLE1 {
        let p = memory_to_pole(4.0).unwrap();
        let y = step_response_table(&repeated(2, 1.0, p, q, 0), 50).unwrap();
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-12), "q={q}");
    }
}

#[test]
fn step_from_rest_follows_the_lag() {
    for &l in &MEMORIES {
        let n = (40.0 * l) as usize;
        let lag = step_response_from_rest(&smoother(l, 1.0), n);
        let zero = step_response_from_rest(&smoother(l, 0.0), n);
        let lead = step_response_from_rest(&smoother(l, -1.0), n);
        for y in [&lag, &zero, &lead] {
            assert!((y[n] - 1.0).abs() < 1e-6);
        }
        // more lag means a slower rise at every early sample
        assert!(lag[0] < zero[0] && zero[0] < lead[0]);
        let peak = |y: &[f64]| y.iter().fold(f64::MIN, |m, &v| m.max(v));
        assert!(peak(&lead) > peak(&zero) && peak(&zero) > 1.0, "l={l}");
    }
}

#[test]
fn ramp_tracking() {
    for (q, _) in TABLE1 {
        for &l in &MEMORIES {
            let err = ramp_error_empirical(&smoother(l, q), q, 1.0, 500);
            assert!(err.abs() < 1e-6, "l={l} q={q}: {err}");
        }
    }
}

#[test]
fn phase_near_dc_is_a_delay() {
    for (q, _) in TABLE1 {
        let tf = smoother(8.0, q);
        let table = frequency_table(&tf).unwrap();
        assert!(table[0].phase_deg().abs() < 1e-12);
        for w in [1e-3, 1e-4] {
            let h = frequency_response(&tf, w).unwrap();
            assert!((h.arg() / w + q).abs() < 100.0 * w, "q={q} w={w}");
        }
    }
}

#[test]
fn impulse_matches_brute_force() {
    let tf = smoother(16.0, -1.0);
    let h = impulse_response(&tf, 1e-16).unwrap();
    let brute = common::brute_impulse(&tf, h.len());
    assert!(common::max_diff(&h, &brute) < 1e-14);
    let y = lde_filter(&tf, &{
        let mut x = vec![0.0; h.len()];
        x[0] = 1.0;
        x
    }, None);
    assert!(common::max_diff(&h, &y) < 1e-14);
}
