use super::*;
use proptest::prelude::*;

fn rates(arrival: f64, service: f64, failure: f64, repair: f64) -> Rates {
    Rates {
        arrival,
        service,
        failure,
        repair,
    }
}

fn outgoing(model: &CtmcModel, from: VmState) -> Vec<(VmState, f64)> {
    let i = model.index_of(from).unwrap();
    let mut out: Vec<(VmState, f64)> = model
        .transitions()
        .iter()
        .filter(|t| t.from == i)
        .map(|t| (model.states()[t.to], t.rate))
        .collect();
    out.sort_by_key(|(s, _)| (s.idle, s.occupied, s.failed));
    out
}

#[test]
fn single_vm_states_and_transitions() {
    assert_eq!(
        enumerate_states(1),
        vec![VmState::new(1, 0, 0), VmState::new(0, 1, 0), VmState::new(0, 0, 1)]
    );
    let m = CtmcModel::new(1, rates(2.0, 3.0, 0.5, 0.7), HandoverRule::Resume).unwrap();
    assert_eq!(
        outgoing(&m, VmState::new(1, 0, 0)),
        vec![(VmState::new(0, 0, 1), 0.5), (VmState::new(0, 1, 0), 2.0)]
    );
    assert_eq!(
        outgoing(&m, VmState::new(0, 1, 0)),
        vec![(VmState::new(0, 0, 1), 0.5), (VmState::new(1, 0, 0), 3.0)]
    );
    assert_eq!(outgoing(&m, VmState::new(0, 0, 1)), vec![(VmState::new(1, 0, 0), 0.7)]);
}

#[test]
fn handover_destinations() {
    let r = rates(2.0, 3.0, 0.5, 0.7);
    let resume = CtmcModel::new(2, r, HandoverRule::Resume).unwrap();
    // Idle failure and handover share a destination and merge in Q.
    let i = resume.index_of(VmState::new(1, 1, 0)).unwrap();
    let j = resume.index_of(VmState::new(0, 1, 1)).unwrap();
    assert_eq!(resume.generator().get(i, j), 1.0);
    assert_eq!(
        outgoing(&resume, VmState::new(1, 1, 0)),
        vec![
            (VmState::new(0, 1, 1), 0.5),
            (VmState::new(0, 1, 1), 0.5),
            (VmState::new(0, 2, 0), 2.0),
            (VmState::new(2, 0, 0), 3.0),
        ]
    );

    let abort = CtmcModel::new(2, r, HandoverRule::Abort).unwrap();
    assert_eq!(
        outgoing(&abort, VmState::new(1, 1, 0)),
        vec![
            (VmState::new(0, 1, 1), 0.5),
            (VmState::new(0, 2, 0), 2.0),
            (VmState::new(1, 0, 1), 0.5),
            (VmState::new(2, 0, 0), 3.0),
        ]
    );
}

#[test]
fn state_counts() {
    assert_eq!(enumerate_states(5).len(), 21);
    assert_eq!(enumerate_states(13).len(), 105);
    for m in 1..=60 {
        let states = enumerate_states(m);
        assert_eq!(states.len(), ((m + 1) * (m + 2) / 2) as usize);
        assert_eq!(states[0], VmState::new(m, 0, 0));
        for (k, s) in states.iter().enumerate() {
            assert_eq!(s.total(), m);
            assert_eq!(ordinal(m, *s), k);
        }
    }
}

#[test]
fn rejects_bad_inputs() {
    let r = rates(1.0, 1.0, 0.1, 1.0);
    assert_eq!(CtmcModel::new(0, r, HandoverRule::Resume).unwrap_err(), CtmcError::VmCount(0));
    assert!(CtmcModel::new(MAX_VMS + 1, r, HandoverRule::Resume).is_err());
    assert!(CtmcModel::new(3, rates(-1.0, 1.0, 0.1, 1.0), HandoverRule::Resume).is_err());
    assert!(CtmcModel::new(3, rates(f64::NAN, 1.0, 0.1, 1.0), HandoverRule::Resume).is_err());
}

#[test]
fn two_state_balances() {
    let (lambda, mu) = (1.3, 0.4);
    let m = CtmcModel::new(1, rates(lambda, mu, 0.0, 2.0), HandoverRule::Resume).unwrap();
    let ss = steady_state_from(&m, m.all_idle()).unwrap();
    let a = lambda / mu;
    let busy = ss.probability(&m, VmState::new(0, 1, 0)).unwrap();
    assert!((busy - a / (1.0 + a)).abs() < 1e-14);

    let (delta, gamma) = (0.3, 1.1);
    let m = CtmcModel::new(1, rates(0.0, 1.0, delta, gamma), HandoverRule::Resume).unwrap();
    let ss = steady_state(&m).unwrap();
    let failed = ss.probability(&m, VmState::new(0, 0, 1)).unwrap();
    let idle = ss.probability(&m, VmState::new(1, 0, 0)).unwrap();
    assert!((failed - delta / (delta + gamma)).abs() < 1e-14);
    assert!((idle - gamma / (delta + gamma)).abs() < 1e-14);
}

fn erlang_b(a: f64, servers: u32) -> f64 {
    let mut b = 1.0;
    for k in 1..=servers {
        b = a * b / (k as f64 + a * b);
    }
    b
}

#[test]
fn erlang_b_without_failures() {
    for (m, lambda, mu) in [(1, 0.5, 1.0), (5, 7.968, 2.049), (13, 7.968, 0.5), (30, 40.0, 1.5)] {
        let model = CtmcModel::new(m, rates(lambda, mu, 0.0, 0.0), HandoverRule::Resume).unwrap();
        // Failed states are unreachable, so the full chain is reducible.
        assert!(matches!(steady_state(&model), Err(CtmcError::Reducible { .. })));
        let ss = steady_state_from(&model, model.all_idle()).unwrap();
        let blocking = ss.mass_where(&model, |s| s.idle == 0);
        assert!(
            (blocking - erlang_b(lambda / mu, m)).abs() < 1e-9,
            "m = {m}: {blocking} vs {}",
            erlang_b(lambda / mu, m)
        );
        assert!(ss.mass_where(&model, |s| s.failed > 0) == 0.0);
    }
}

#[test]
fn reducible_chain_reports_closed_classes() {
    // No repairs: every failure is permanent and (0,0,M) absorbs.
    let model = CtmcModel::new(3, rates(1.0, 1.0, 0.2, 0.0), HandoverRule::Resume).unwrap();
    let ss = steady_state_from(&model, model.all_idle()).unwrap();
    assert!((ss.probability(&model, VmState::new(0, 0, 3)).unwrap() - 1.0).abs() < 1e-12);

    let model = CtmcModel::new(2, rates(1.0, 1.0, 0.0, 0.0), HandoverRule::Resume).unwrap();
    match steady_state(&model) {
        Err(CtmcError::Reducible {
            closed_classes,
            witness,
        }) => {
            assert!(closed_classes.len() >= 2);
            assert!(witness.contains("(2, 0, 0)"));
        }
        other => panic!("expected reducible, got {other:?}"),
    }
}

#[test]
fn larger_models_solve_without_cross_check_failures() {
    for m in [13, 31, 60] {
        let model = CtmcModel::new(m, rates(7.968, 0.6, 0.1, 1.0), HandoverRule::Resume).unwrap();
        let ss = steady_state(&model).unwrap();
        assert!(ss.residual <= 1e-9, "m = {m}: residual {}", ss.residual);
        assert!((ss.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn closed_form_agrees_with_linear_solve() {
    let model = CtmcModel::new(6, rates(3.0, 1.2, 0.4, 0.9), HandoverRule::Abort).unwrap();
    let ss = steady_state(&model).unwrap();
    let closed = closed_form(model.generator()).unwrap();
    for (a, b) in closed.iter().zip(&ss.probabilities) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn gillespie_matches_symmetric_two_state_chain() {
    let model = CtmcModel::new(1, rates(1.0, 1.0, 0.0, 0.0), HandoverRule::Resume).unwrap();
    let occ = gillespie_occupancy(&model, 2e5, 100.0, 3).unwrap();
    let busy = occ.distribution[model.index_of(VmState::new(0, 1, 0)).unwrap()];
    assert!((busy - 0.5).abs() < 0.01, "{busy}");
}

#[test]
fn gillespie_repairs_into_all_idle() {
    let model = CtmcModel::new(4, rates(0.0, 0.0, 0.0, 1.0), HandoverRule::Resume).unwrap();
    let occ = gillespie_occupancy_from(&model, VmState::new(0, 0, 4), 1e4, 100.0, 1).unwrap();
    assert!((occ.distribution[0] - 1.0).abs() < 1e-12);
}

#[test]
fn gillespie_is_deterministic_and_checks_horizon() {
    let model = CtmcModel::new(3, rates(2.0, 1.0, 0.1, 1.0), HandoverRule::Resume).unwrap();
    let a = gillespie_occupancy(&model, 1e3, 10.0, 42).unwrap();
    let b = gillespie_occupancy(&model, 1e3, 10.0, 42).unwrap();
    assert_eq!(a, b);
    assert!(gillespie_occupancy(&model, 10.0, 10.0, 1).is_err());
    assert!(gillespie_occupancy(&model, 10.0, 0.0, 1).is_err());
}

#[test]
fn gillespie_agrees_with_solver_on_mec_model() {
    let model = CtmcModel::new(5, rates(7.968, 2.049, 0.1, 1.0), HandoverRule::Resume).unwrap();
    let ss = steady_state(&model).unwrap();
    let occ = gillespie_occupancy(&model, 1e6, 1e3, 2024).unwrap();
    let tv = occ.total_variation(&ss.probabilities);
    assert!(tv <= 0.005, "total variation {tv}");
    let admitted = 1.0 - ss.mass_where(&model, |s| s.idle == 0);
    assert!((occ.admitted_fraction() - admitted).abs() < 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_rows_sum_to_zero(
        m in 1u32..=25,
        lambda in 0.0f64..20.0,
        mu in 0.0f64..5.0,
        delta in 0.0f64..2.0,
        gamma in 0.0f64..5.0,
        abort in any::<bool>(),
    ) {
        let rule = if abort { HandoverRule::Abort } else { HandoverRule::Resume };
        let model = CtmcModel::new(m, rates(lambda, mu, delta, gamma), rule).unwrap();
        let q = model.generator();
        for i in 0..q.dim() {
            let row = q.row(i);
            let scale = row[i].abs().max(1.0);
            prop_assert!(row.iter().sum::<f64>().abs() <= 1e-12 * scale);
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    prop_assert!(*v >= 0.0);
                }
            }
        }
        for t in model.transitions() {
            let (a, b) = (model.states()[t.from], model.states()[t.to]);
            prop_assert_eq!(b.total(), a.total());
        }
    }

    #[test]
    fn steady_state_is_a_distribution(
        m in 1u32..=20,
        log_rates in proptest::array::uniform4(-2.0f64..1.0),
    ) {
        let [l, mu, d, g] = log_rates.map(|x| 10f64.powf(x));
        let model = CtmcModel::new(m, rates(l, mu, d, g), HandoverRule::Resume).unwrap();
        let ss = steady_state(&model).unwrap();
        prop_assert!((ss.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!(ss.probabilities.iter().all(|p| *p >= 0.0));
        prop_assert!(ss.residual <= 1e-9);
    }
}
