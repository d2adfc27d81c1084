use std::f64::consts::PI;

use proptest::prelude::*;

use slowlight::band::{
    dispersion, dos_comoving, resonant_wavevectors, tilted_dispersion, BandParams, ComovingFrame,
};
use slowlight::dynamics::{evolve, AtomSpec, CouplingSpec, LatticeGrid, RunSettings, Simulation};
use slowlight::emission::{directionality, emission_rates, fit_decay, validity_min_velocity, DecayModel};
use slowlight::quad::{self, Tolerance};

fn frame(v: f64) -> ComovingFrame {
    ComovingFrame::new(BandParams::unit(), v)
}

fn band(j: f64, a: f64) -> BandParams {
    BandParams::new(j, a, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dispersion_is_even(k in (-PI + 1e-9)..PI, j in 0.1..3.0f64) {
        let b = band(j, 1.0);
        prop_assert_eq!(dispersion(k, &b).unwrap(), dispersion(-k, &b).unwrap());
    }

    #[test]
    fn tilt_reverses_with_velocity(k in (-PI + 1e-9)..PI, v in -5.0..5.0f64) {
        let a = tilted_dispersion(-k, &frame(v)).unwrap();
        let b = tilted_dispersion(k, &frame(-v)).unwrap();
        prop_assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn resonances_mirror(delta in -6.0..6.0f64, v in -5.0..5.0f64) {
        let mut plus: Vec<f64> = resonant_wavevectors(delta, &frame(v)).iter().map(|r| r.k).collect();
        let mut minus: Vec<f64> = resonant_wavevectors(delta, &frame(-v)).iter().map(|r| -r.k).collect();
        plus.sort_by(f64::total_cmp);
        minus.sort_by(f64::total_cmp);
        prop_assert_eq!(plus.len(), minus.len(), "{:?} vs {:?}", plus, minus);
        for (a, b) in plus.iter().zip(&minus) {
            // k = π has no mirror image inside the half-open zone.
            let gap = (a - b).abs();
            prop_assert!(gap < 1e-9 || (gap - 2.0 * PI).abs() < 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn resonances_solve_the_resonance_condition(
        delta in -6.0..6.0f64,
        v in -5.0..5.0f64,
        j in 0.5..2.0f64,
        a in 0.5..2.0f64,
    ) {
        let f = ComovingFrame::new(band(j, a), v * j * a);
        for r in resonant_wavevectors(delta * j, &f) {
            let w = tilted_dispersion(r.k, &f).unwrap();
            prop_assert!((w - delta * j).abs() < 1e-10 * j, "k = {}, residual {}", r.k, w - delta * j);
        }
    }

    #[test]
    fn tilting_never_narrows(v in -6.0..6.0f64) {
        let (lo, hi) = frame(v).extremes();
        prop_assert!(hi - lo >= 4.0 - 1e-12);
    }

    #[test]
    fn directionality_is_odd_in_velocity(delta in -5.0..5.0f64, v in 0.0..6.0f64) {
        let a = directionality(delta, &frame(v), 0.2, 0.01).unwrap().value();
        let b = directionality(delta, &frame(-v), 0.2, 0.01).unwrap().value();
        match (a, b) {
            (Some(x), Some(y)) => prop_assert!((x + y).abs() < 1e-6, "{} {}", x, y),
            (None, None) => {}
            other => prop_assert!(false, "off-band flag not mirrored: {:?}", other),
        }
    }

    #[test]
    fn rates_are_mirrored(delta in -5.0..5.0f64, v in 0.0..6.0f64) {
        let a = emission_rates(delta, &frame(v), 0.2, 0.01).unwrap();
        let b = emission_rates(delta, &frame(-v), 0.2, 0.01).unwrap();
        let scale = a.total().max(1e-300);
        prop_assert!((a.gamma_l - b.gamma_r).abs() <= 1e-6 * scale);
        prop_assert!((a.gamma_r - b.gamma_l).abs() <= 1e-6 * scale);
    }

    #[test]
    fn validity_bound_ignores_k_orientation(delta in -5.0..5.0f64) {
        // Independent dense scan with k relabelled to -k.
        let n = 200_000;
        let worst = (0..n)
            .map(|i| {
                let k = PI - 2.0 * PI * i as f64 / n as f64;
                ((delta + 2.0 * (-k).cos()) / (1.0 - (-k) / (2.0 * PI))).abs()
            })
            .fold(0.0, f64::max);
        let expected = worst / (2.0 * PI) / 2.0;
        let got = validity_min_velocity(delta, &BandParams::unit());
        prop_assert!((got - expected).abs() <= 1e-3 * expected, "{} vs {}", got, expected);
    }
}

#[test]
fn dos_is_normalized() {
    let broadening = 1e-3;
    for v in [0.0, 0.7, 2.0, 3.5] {
        let f = frame(v);
        let (lo, hi) = f.extremes();
        let mut breaks = vec![lo, hi, 2.0 - v * PI, 2.0 + v * PI];
        // Interior stationary points of the tilted band.
        if v.abs() < 2.0 {
            let k = (v / 2.0).asin();
            breaks.push(tilted_dispersion(k, &f).unwrap());
            breaks.push(tilted_dispersion(PI - k, &f).unwrap());
        }
        let (from, to) = (lo - 2.0, hi + 2.0);
        breaks.retain(|b| *b > from && *b < to);
        let total = quad::integrate_with_breaks(
            |w: f64| dos_comoving(w, &f, broadening).unwrap(),
            from,
            to,
            &breaks,
            Tolerance::new(1e-9, 1e-7).with_max_intervals(20_000),
        )
        .unwrap()
        .value;
        // Lorentzian weight beyond the window: (γ/π)(1/2) per side at distance 2.
        let tail = 2.0 * broadening / (2.0 * PI * 2.0);
        assert!((total + tail - 1.0).abs() < 0.01, "v = {v}: {total}");
    }
}

#[test]
fn weak_coupling_rate_matches_golden_rule() {
    // δ at least 0.5J inside the tilted band, |ṽ_g| ≥ 0.2c̄ at every root.
    let gbar = 0.1;
    for (delta, v) in [(0.0, 0.0), (1.0, 0.5), (-1.0, -1.0)] {
        let f = frame(v);
        let (lo, hi) = f.extremes();
        assert!(delta - lo >= 0.5 && hi - delta >= 0.5);
        for r in resonant_wavevectors(delta, &f) {
            assert!(r.comoving_velocity.abs() >= 0.4, "{r:?}");
        }
        let expected = emission_rates(delta, &f, gbar, 1e-4).unwrap().total();
        let t_max = 4.0 / expected;
        let band = BandParams::unit();
        let sim = Simulation::new(
            band,
            vec![AtomSpec::new(delta, 0.0, v)],
            CouplingSpec::Effective { gbar },
            LatticeGrid::for_light_cone(&band, t_max),
            RunSettings::new(t_max, 0.02).with_stride(25),
        );
        let out = evolve(&sim).unwrap();
        let fit = fit_decay(&out.times, &out.populations[0], DecayModel::Exponential).unwrap();
        let err = (fit.gamma / expected - 1.0).abs();
        assert!(err < 0.1, "delta {delta}, v {v}: fitted {} vs {expected}", fit.gamma);
    }
}

#[test]
fn rates_converge_to_closed_form() {
    // v = 0, δ = 0: roots k = ±π/2 with |v_g| = 2, so Γ_L = Γ_R = ḡ²/2.
    let gbar = 0.2;
    let r = emission_rates(0.0, &frame(0.0), gbar, 1e-3).unwrap();
    for side in [r.gamma_l, r.gamma_r] {
        assert!((side / (0.5 * gbar * gbar) - 1.0).abs() < 0.01, "{side}");
    }
}
