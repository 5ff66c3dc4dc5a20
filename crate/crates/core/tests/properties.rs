use proptest::prelude::*;
use vortex_core::analysis::comparison_test;
use vortex_core::characteristics::{characteristic_position, eval_m, eval_u, invert_p, RadialInitialData};
use vortex_core::exact::*;
use vortex_core::hjfd::{fd_step, h_delta, FdConfig};
use vortex_core::shocks::rh_speed;
use vortex_core::viscous::{viscous_step, ViscousConfig};
use vortex_core::MobilityExponent;

fn step_data() -> impl Strategy<Value = RadialInitialData> {
    (1usize..6)
        .prop_flat_map(|n| (prop::collection::vec(0.05f64..2.0, n), prop::collection::vec(0.01f64..5.0, n)))
        .prop_map(|(widths, mut values)| {
            values.sort_by(|a, b| b.total_cmp(a));
            let mut edges = vec![0.0];
            for w in widths {
                edges.push(edges.last().unwrap() + w);
            }
            RadialInitialData::new(edges, values).unwrap()
        })
}

fn exponent() -> impl Strategy<Value = MobilityExponent> {
    (0.05f64..0.95).prop_map(|a| MobilityExponent::new(a).unwrap())
}

/// Non-decreasing row starting at 0 with entries in `[0, 1]`.
fn mass_row(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_map(|inc| {
        let total: f64 = inc.iter().sum::<f64>().max(1e-12);
        let mut acc = 0.0;
        let mut row: Vec<f64> = inc.iter().map(|v| {
            acc += v / total;
            acc.min(1.0)
        }).collect();
        row[0] = 0.0;
        row
    })
}

proptest! {
    #[test]
    fn characteristics_round_trip(data in step_data(), a in exponent(), t in 0.01f64..5.0, frac in 0.0f64..1.0) {
        let rho = frac * 3.0 * data.support_end() * (1.0 + t);
        let foot = invert_p(t, rho, &data, a).unwrap();
        let back = characteristic_position(foot, &data, a, t);
        prop_assert!((back - rho).abs() <= 1e-10 * rho.max(1.0), "{} vs {}", back, rho);
    }

    #[test]
    fn density_non_increasing_and_mass_non_decreasing(data in step_data(), a in exponent(), t in 0.01f64..5.0) {
        let end = 2.0 * data.support_end() * (1.0 + t);
        let mut prev_u = f64::INFINITY;
        let mut prev_m = 0.0;
        for k in 0..200 {
            let rho = end * k as f64 / 199.0;
            let u = eval_u(t, rho, &data, a).unwrap();
            let m = eval_m(t, rho, &data, a).unwrap();
            prop_assert!(u <= prev_u * (1.0 + 1e-12));
            prop_assert!(m >= prev_m * (1.0 - 1e-12));
            prop_assert!(m <= data.total_mass() * (1.0 + 1e-12));
            prev_u = u;
            prev_m = m;
        }
    }

    #[test]
    fn nested_squares_stay_ordered(a in exponent(), c in 0.1f64..4.0, extra in 0.0f64..3.0, l in 0.1f64..2.0) {
        let small = RadialInitialData::square(c, l).unwrap();
        let big = RadialInitialData::square(c + extra, l).unwrap();
        let samples: Vec<(f64, f64)> = (1..20).flat_map(|i| (0..20).map(move |j| (0.25 * i as f64, 0.3 * j as f64))).collect();
        prop_assert!(comparison_test(|t, r| eval_u(t, r, &big, a).unwrap(), |t, r| eval_u(t, r, &small, a).unwrap(), &samples));
        prop_assert!(comparison_test(|t, r| eval_m(t, r, &big, a).unwrap(), |t, r| eval_m(t, r, &small, a).unwrap(), &samples));
    }

    #[test]
    fn giant_dominates_step_data(data in step_data(), a in exponent(), t in 0.0f64..10.0, frac in 0.0f64..1.0) {
        let rho = frac * 3.0 * data.support_end();
        let giant = friendly_giant(GiantDatum::Finite(data.sup_norm()), a, t).unwrap();
        prop_assert!(eval_u(t, rho, &data, a).unwrap() <= giant * (1.0 + 1e-12));
        if t > 0.0 {
            let universal = friendly_giant(GiantDatum::Infinite, a, t).unwrap();
            prop_assert!(eval_m(t, rho, &data, a).unwrap() <= universal * rho * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn rescaling_identity(a in 0.05f64..0.95, m in 0.1f64..10.0, d in 1u32..4, t in 0.01f64..10.0, x in 0.0f64..5.0) {
        let pm = SelfSimilarParams::new(a, m, d).unwrap();
        let p1 = SelfSimilarParams::new(a, 1.0, d).unwrap();
        let lhs = self_similar_u(&pm, t, x).unwrap();
        let rhs = m * self_similar_u(&p1, m.powf(a) * t, x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(f64::MIN_POSITIVE), "{} {}", lhs, rhs);
    }

    #[test]
    fn mass_function_increases_to_total(a in 0.05f64..0.95, m in 0.1f64..10.0, k1 in 0.0f64..50.0, dk in 0.0f64..50.0) {
        let p = SelfSimilarParams::new(a, m, 1).unwrap();
        let g1 = self_similar_mass(&p, k1);
        let g2 = self_similar_mass(&p, k1 + dk);
        prop_assert!(g1 <= g2 * (1.0 + 1e-14) && g2 <= m * (1.0 + 1e-14));
    }

    #[test]
    fn h_delta_non_negative_non_decreasing(a in exponent(), delta in 0.0f64..1.0, s in -5.0f64..5.0, ds in 0.0f64..5.0) {
        let h = h_delta(s, delta, a);
        prop_assert!(h >= 0.0);
        prop_assert!(h_delta(s + ds, delta, a) >= h);
    }

    #[test]
    fn rh_speed_between_characteristic_speeds(a in exponent(), m in 0.01f64..5.0, u1 in 0.01f64..5.0, u2 in 0.01f64..5.0) {
        let s = rh_speed(m, u1, u2, a).unwrap();
        let (hi, lo) = if u1 > u2 { (u1, u2) } else { (u2, u1) };
        let fast = a.get() * m * lo.powf(a.get() - 1.0);
        let slow = a.get() * m * hi.powf(a.get() - 1.0);
        prop_assert!(s <= fast * (1.0 + 1e-12) && s >= slow * (1.0 - 1e-12));
        prop_assert_eq!(s, rh_speed(m, u2, u1, a).unwrap());
    }

    #[test]
    fn scheme_step_is_monotone(a in exponent(), delta in 0.02f64..0.3, lower in mass_row(40), bump in mass_row(40), w in 0.0f64..1.0) {
        let c = FdConfig::coupled(delta, a, 1.0, 1.0, 1.0).unwrap();
        let upper: Vec<f64> = lower.iter().zip(&bump).map(|(l, b)| (l + w * b).min(1.0)).collect();
        let (mut lo_out, mut up_out) = (vec![0.0; 40], vec![0.0; 40]);
        fd_step(&lower, &mut lo_out, &c).unwrap();
        fd_step(&upper, &mut up_out, &c).unwrap();
        for j in 0..40 {
            prop_assert!(lo_out[j] <= up_out[j] + 1e-15);
            prop_assert!((0.0..=1.0).contains(&up_out[j]));
        }
        prop_assert!(up_out.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn viscous_step_is_monotone(a in exponent(), eps in 0.01f64..0.5, d in 1u32..4, lower in mass_row(40), bump in mass_row(40), w in 0.0f64..1.0) {
        let data = RadialInitialData::square(1.0, 0.2).unwrap();
        let c = ViscousConfig::auto(eps, a, d, &data, 1.0, 0.1).unwrap();
        let c = ViscousConfig { mass: 1.0, u_sup: 1.0 / c.h_rho, ..c };
        let h_t = 0.9 * c.stability_limits().iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
        let c = ViscousConfig { h_t, ..c };
        let mut lower = lower;
        lower[39] = 1.0;
        let mut upper: Vec<f64> = lower.iter().zip(&bump).map(|(l, b)| (l + w * b).min(1.0)).collect();
        upper[0] = 0.0;
        let (mut lo_out, mut up_out) = (vec![0.0; 40], vec![0.0; 40]);
        viscous_step(&lower, &mut lo_out, &c).unwrap();
        viscous_step(&upper, &mut up_out, &c).unwrap();
        for j in 0..40 {
            prop_assert!(lo_out[j] <= up_out[j] + 1e-14);
            prop_assert!(up_out[j] >= -1e-14 && up_out[j] <= 1.0 + 1e-14);
        }
    }
}
