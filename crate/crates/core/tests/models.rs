mod common;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bellman_transform::config::BuiltModel;
use bellman_transform::diagnostics::{bellman_residual_g, savings_policy_monotonicity};
use bellman_transform::discretize::{lognormal_quadrature, MarkovChain, QuadratureRule};
use bellman_transform::models::{
    build_default, build_job_search, build_savings, CrraUtility, DefaultSpec, JobSearchSpec, ModelSpec, SavingsSpec,
    ACCEPT, CONTINUE,
};
use bellman_transform::operator::{apply_s, apply_t, apply_w0, value_distance, SolverSettings};
use bellman_transform::program::{check_assumption_ws, check_ell_bounded_below, unit_kappa, GFunction};
use bellman_transform::{solve_fixed_point, ExtReal};

use common::{built, config, solve, solve_from, unit_weight, BUILT_IN};

const TOL: f64 = 1e-10;

fn job_search_spec(name: &str) -> JobSearchSpec {
    match config(name).model.to_spec().unwrap() {
        Some(ModelSpec::JobSearch(s)) => s,
        other => panic!("{name}: {other:?}"),
    }
}

fn default_spec(name: &str) -> DefaultSpec {
    match config(name).model.to_spec().unwrap() {
        Some(ModelSpec::Default(s)) => s,
        other => panic!("{name}: {other:?}"),
    }
}

#[test]
fn fixed_point_round_trips() {
    for name in BUILT_IN {
        let model = built(name);
        let dp = model.dp();
        let w = unit_weight(dp);
        let report = solve(dp, &w, TOL);
        let slack = 10.0 * TOL / (1.0 - w.modulus_bound());
        let tv = apply_t(&report.v_star, dp);
        let gap = value_distance(&tv, &report.v_star, w.kappa()).unwrap();
        assert!(gap <= slack, "{name}: ‖Tv* − v*‖ = {gap}");
        let g_back = apply_w0(&report.v_star, dp).unwrap();
        let gap = g_back.sub(&report.g_star).values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(gap <= slack, "{name}: ‖W0 v* − g*‖ = {gap}");

        let warm = solve_from(dp, &w, &report.g_star, TOL);
        assert_eq!(warm.iterations, 1, "{name}");
        assert!(warm.residuals[0] <= TOL);
    }
}

#[test]
fn residual_shrinks_by_the_modulus() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in BUILT_IN {
        let model = built(name);
        let dp = model.dp();
        let w = unit_weight(dp);
        for _ in 0..10 {
            let g = bellman_transform::operator::random_g(dp, &mut rng);
            let sg = apply_s(&g, dp).unwrap();
            let (r0, r1) = (bellman_residual_g(&g, dp, &w).unwrap(), bellman_residual_g(&sg, dp, &w).unwrap());
            assert!(r1 <= w.modulus_bound() * r0 + 1e-12, "{name}: {r1} > αβ·{r0}");
        }
    }
}

#[test]
fn degenerate_job_search_first_step() {
    let BuiltModel::JobSearch(m) = built("job_search_degenerate") else {
        unreachable!()
    };
    let dp = m.dp();
    let x = m.state_index(0, 0, 0);
    let zero = GFunction::zeros(dp);
    let s0 = apply_s(&zero, dp).unwrap();
    assert!((s0.get(dp.pair_index(x, CONTINUE).unwrap()) - 4.5).abs() < 1e-12);
    let w = unit_weight(dp);
    assert!((bellman_residual_g(&zero, dp, &w).unwrap() - 4.5).abs() < 1e-12);
    let report = solve(dp, &w, 1e-12);
    assert!(report.modulus_estimates.iter().all(|&r| r <= dp.beta() + 1e-8));
    assert_eq!(report.policy.action(x), ACCEPT);
}

/// For g ≥ M on continuation pairs (accepting ends the search, so its
/// continuation is zero), Jensen gives Sg(z) ≥ β·max{E_z u(w′)/(1−β), E_z u(c′) + M}.
#[test]
fn job_search_jensen_lower_bound() {
    let spec = job_search_spec("job_search");
    let model = build_job_search(&spec).unwrap();
    let dp = model.dp();
    let (nx, nc, nz) = (spec.xi.len(), spec.zeta.len(), spec.z_chain.len());
    let expect = |jz: usize, rule: &QuadratureRule| -> f64 {
        let mut acc = 0.0;
        for (jn, &z) in spec.z_chain.states().iter().enumerate() {
            for (e, q) in rule.iter() {
                acc += spec.z_chain.prob(jz, jn) * q * spec.utility.eval(z + e).to_f64();
            }
        }
        acc
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let m_floor = -5.0 + trial as f64 * 0.5;
        let employed = model.employed_state();
        let g = GFunction::from_fn(dp, |_, x, a| {
            if a == CONTINUE && x != employed {
                m_floor + rng.random_range(0.0..5.0)
            } else {
                0.0
            }
        });
        let sg = apply_s(&g, dp).unwrap();
        for jz in 0..nz {
            let bound = dp.beta()
                * f64::max(expect(jz, &spec.xi) / (1.0 - dp.beta()), expect(jz, &spec.zeta) + m_floor);
            for k in 0..nx {
                for c in 0..nc {
                    let p = dp.pair_index(model.state_index(jz, k, c), CONTINUE).unwrap();
                    assert!(sg.get(p) >= bound - 1e-10, "z {jz}: {} < {bound}", sg.get(p));
                }
            }
        }
    }
}

#[test]
fn accept_region_is_an_upper_set_in_the_wage() {
    let mut spec = job_search_spec("job_search");
    spec.xi = lognormal_quadrature(0.0, 0.25, 20).unwrap();
    let model = build_job_search(&spec).unwrap();
    let dp = model.dp();
    let report = solve(dp, &unit_weight(dp), TOL);
    let (nz, nx, nc) = model.shape();
    for j in 0..nz {
        for c in 0..nc {
            let mut states: Vec<usize> = (0..nx).map(|k| model.state_index(j, k, c)).collect();
            states.sort_by(|&a, &b| dp.states().point(a).coords[0].total_cmp(&dp.states().point(b).coords[0]));
            let accepts: Vec<bool> = states.iter().map(|&x| report.policy.action(x) == ACCEPT).collect();
            let first = accepts.iter().position(|&a| a).unwrap_or(nx);
            assert!(accepts[first..].iter().all(|&a| a), "z {j}, c {c}: {accepts:?}");
        }
    }
}

/// For g ≥ M: Sg(x, w′) ≥ β E max{u(y′), u(w′ + y′ + b/R)} + βM.
#[test]
fn default_lower_bound() {
    let spec = default_spec("default");
    let model = build_default(&spec).unwrap();
    let dp = model.dp();
    let (b, r) = (spec.borrowing_limit, spec.gross_return);
    let (_, nz, nx) = model.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m_floor = -2.0;
    let g = GFunction::from_fn(dp, |_, _, _| m_floor + rng.random_range(0.0..3.0));
    let sg = apply_s(&g, dp).unwrap();
    for x in 0..model.n_market_states() {
        let j = (x / nx) % nz;
        for p in dp.pair_range(x) {
            let a = dp.pair_action(p);
            if a == model.default_action() {
                continue;
            }
            let wn = spec.asset_grid[a];
            let mut acc = 0.0;
            for jn in 0..nz {
                for (k, &q) in spec.xi.weights().iter().enumerate() {
                    let y = spec.output_map.apply(spec.z_chain.states()[jn], spec.xi.nodes()[k]);
                    let best = spec.utility.eval(y).max(spec.utility.eval(wn + y + b / r));
                    acc += spec.z_chain.prob(j, jn) * q * best.to_f64();
                }
            }
            let bound = dp.beta() * (acc + m_floor);
            assert!(sg.get(p) >= bound - 1e-10, "pair {p}: {} < {bound}", sg.get(p));
        }
    }
}

#[test]
fn default_value_is_max_of_branches() {
    let BuiltModel::Default(model) = built("default") else {
        unreachable!()
    };
    let dp = model.dp();
    let report = solve(dp, &unit_weight(dp), TOL);
    for x in 0..dp.n_states() {
        let best = dp
            .pair_range(x)
            .map(|p| dp.reward(p) + ExtReal::from(report.g_star.get(p)))
            .fold(ExtReal::NegInf, ExtReal::max);
        assert_eq!(best, report.v_star.get(x));
    }
}

#[test]
/// With R < 1, rolling over the maximal debt pays b(1/R − 1) every period on
/// top of output, which strictly beats autarky's u(y) forever.
fn rolling_over_cheap_debt_beats_default() {
    let mut spec = default_spec("default");
    spec.gross_return = 0.9;
    spec.borrowing_limit = 1.0;
    spec.asset_grid = (0..16).map(|i| -1.0 + i as f64 * 0.1).collect();
    let model = build_default(&spec).unwrap();
    let dp = model.dp();
    let report = solve(dp, &unit_weight(dp), TOL);
    for x in 0..model.n_market_states() {
        assert_ne!(report.policy.action(x), model.default_action(), "state {x} defaults");
    }
}

#[test]
fn unit_weight_is_admissible_for_capital_income_risk() {
    let model = built("savings_cir");
    let dp = model.dp();
    let w = check_assumption_ws(dp, &unit_kappa(dp)).unwrap();
    assert_eq!(w.alpha(), 1.0);
}

#[test]
fn valueless_zero_wealth_keeps_ell_finite() {
    let spec = SavingsSpec {
        beta: 0.95,
        gross_return: 1.02,
        utility: CrraUtility::new(2.0).unwrap(),
        income_chain: MarkovChain::new(vec![1.0, 2.0], vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap(),
        wealth_grid: vec![0.0, 0.5, 1.0, 2.0, 4.0],
    };
    let model = build_savings(&spec).unwrap();
    let dp = model.dp();
    let zero = model.state_index(0, 0);
    assert_eq!(dp.pair_range(zero).len(), 1);
    assert_eq!(dp.reward(dp.pair_range(zero).start), ExtReal::NegInf);
    assert!(check_ell_bounded_below(dp).bounded_below);
    // the valueless state has no finite greedy action, so the solve reports it
    let err = solve_fixed_point(dp, &unit_weight(dp), &GFunction::zeros(dp), &SolverSettings::with_tol(TOL));
    assert!(err.is_err());
}

#[test]
fn savings_policy_monotonicity_is_reported() {
    for name in ["savings", "savings_cir"] {
        let model = match built(name) {
            BuiltModel::Savings(m) | BuiltModel::SavingsCir(m) => m,
            _ => unreachable!(),
        };
        let report = solve(model.dp(), &unit_weight(model.dp()), TOL);
        let breaks = savings_policy_monotonicity(&model, &report.policy);
        // informational: discretized savings rules need not be monotone in w
        eprintln!("{name}: {} monotonicity breaks in the savings rule", breaks.len());
    }
}
