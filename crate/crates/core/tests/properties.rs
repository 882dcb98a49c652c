use proptest::prelude::*;

use bellman_transform::operator::{apply_s, contraction_ratio};
use bellman_transform::program::{
    check_assumption_ws, ell, rbar, weighted_sup_norm_with, ActionGrid, DynamicProgram, GFunction, GridPoint,
    ProgramBuilder, StateGrid,
};
use bellman_transform::ExtReal;

const SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Fixture {
    dp: DynamicProgram,
    kappa: Vec<f64>,
}

/// Random finite program: every action feasible with probability ~2/3 (at
/// least one per state), finite rewards, dense random kernel rows.
fn program() -> impl Strategy<Value = Fixture> {
    (1usize..6, 1usize..4, 0.05f64..0.45).prop_flat_map(|(n, m, beta)| {
        let pairs = n * m;
        (
            Just((n, m, beta)),
            prop::collection::vec(any::<bool>(), pairs),
            prop::collection::vec(-5.0f64..5.0, pairs),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), pairs),
            prop::collection::vec(1.0f64..2.0, n),
        )
    })
    .prop_map(|((n, m, beta), mask, rewards, rows, kappa)| {
        let states = StateGrid::new((0..n).map(|i| GridPoint::new(vec![i as f64])).collect(), vec!["x".into()]).unwrap();
        let actions = ActionGrid::scalar("a", &(0..m).map(|a| a as f64).collect::<Vec<_>>()).unwrap();
        let mut b = ProgramBuilder::new(states, actions, beta);
        for x in 0..n {
            for a in 0..m {
                let p = x * m + a;
                if a > 0 && mask[p] && mask[x * m] {
                    continue;
                }
                let mut row: Vec<(usize, f64)> = rows[p].iter().map(|w| w + 1e-3).enumerate().collect();
                let total: f64 = row.iter().map(|(_, w)| w).sum();
                row.iter_mut().for_each(|(_, w)| *w /= total);
                b.push(x, a, ExtReal::Finite(rewards[p]), row).unwrap();
            }
        }
        Fixture { dp: b.build().unwrap(), kappa }
    })
}

fn g_values(dp: &DynamicProgram, seed: &[f64]) -> GFunction {
    GFunction::from_fn(dp, |p, _, _| seed[p % seed.len()])
}

fn seeds() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0f64..20.0, 1..16)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn norm_is_homogeneous_and_subadditive(f in program(), a in seeds(), b in seeds(), c in -4.0f64..4.0) {
        let dp = &f.dp;
        let (g, h) = (g_values(dp, &a), g_values(dp, &b));
        let norm = |v: &GFunction| weighted_sup_norm_with(v.values(), &f.kappa, dp);
        prop_assert!(norm(&g) >= 0.0);
        prop_assert!((norm(&g.scaled(c)) - c.abs() * norm(&g)).abs() <= SLACK * (1.0 + norm(&g)));
        prop_assert!(norm(&g.add(&h)) <= norm(&g) + norm(&h) + SLACK);
        prop_assert_eq!(norm(&g.sub(&g)), 0.0);
    }

    #[test]
    fn s_contracts_at_alpha_beta(f in program(), a in seeds(), b in seeds()) {
        let dp = &f.dp;
        let w = check_assumption_ws(dp, &f.kappa).unwrap();
        let (g, h) = (g_values(dp, &a), g_values(dp, &b));
        if let Some(ratio) = contraction_ratio(dp, w.kappa(), &g, &h).unwrap() {
            prop_assert!(ratio <= w.modulus_bound() + SLACK, "ratio {} > {}", ratio, w.modulus_bound());
        }
    }

    #[test]
    fn s_is_monotone(f in program(), a in seeds(), bump in prop::collection::vec(0.0f64..3.0, 1..16)) {
        let dp = &f.dp;
        let g = g_values(dp, &a);
        let h = g.add(&g_values(dp, &bump));
        let (sg, sh) = (apply_s(&g, dp).unwrap(), apply_s(&h, dp).unwrap());
        for (lo, hi) in sg.values().iter().zip(sh.values()) {
            prop_assert!(lo <= &(hi + SLACK));
        }
    }

    #[test]
    fn constant_shift_moves_by_beta_c(f in program(), a in seeds(), c in -10.0f64..10.0) {
        let dp = &f.dp;
        let g = g_values(dp, &a);
        let (sg, sgc) = (apply_s(&g, dp).unwrap(), apply_s(&g.shifted(c), dp).unwrap());
        for (x, y) in sg.values().iter().zip(sgc.values()) {
            prop_assert!((y - x - dp.beta() * c).abs() <= 1e-10);
        }
    }

    #[test]
    fn ell_is_dominated_by_d_alpha_kappa(f in program()) {
        let dp = &f.dp;
        let w = check_assumption_ws(dp, &f.kappa).unwrap();
        for (p, l) in ell(dp).into_iter().enumerate() {
            let bound = w.d() * w.alpha() * f.kappa[dp.pair_state(p)];
            prop_assert!(l.to_f64() <= bound + SLACK);
        }
        for (x, r) in rbar(dp).into_iter().enumerate() {
            prop_assert!(r.to_f64() <= w.d() * f.kappa[x] + SLACK);
        }
    }
}
