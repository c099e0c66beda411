use equisum_core::entropy::{check_entropy_condition, e_value, Measure, SlackStatus, System};
use equisum_core::flags::{apply_automorphism, automorphism_generators, binary_flag, enumerate_subflags, mt_flag};
use equisum_core::optmeas::{certify_system, optimal_data};
use equisum_core::rho::{solve_flag_rhos, solve_rhos};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() < tol
}

#[test]
fn binary_order_two_certificate() {
    let f = binary_flag(2).unwrap();
    let rh = solve_rhos(2).unwrap().0.rhos;
    let c = certify_system(&f, &rh).unwrap();
    assert!(c.passed);
    assert_eq!(c.subflag_count, 24);
    let cs = &c.data.c_star;
    assert!(close(cs[1], 0.14938675700, 1e-10) && close(cs[2], 0.012933942985573, 1e-13));
    assert!(close(c.data.entropy[2][0], 2.669636056747, 1e-11));
    assert!(close(c.data.entropy[2][1], 2.189573854944, 1e-11));
    assert!(c.basic_slacks.iter().all(|(_, s)| s.abs() <= 1e-9));
    assert!(close(c.min_nonbasic_slack.unwrap(), 1.4489e-5, 1e-8));
    assert!(c.perturbed.iter().all(|p| p.strict));
    assert_eq!(c.invariant_intermediates, Some(0));
}

#[test]
fn mt_order_two_certificate() {
    let f = mt_flag(2).unwrap();
    let rh = solve_flag_rhos(&f).unwrap().rhos;
    let c = certify_system(&f, &rh).unwrap();
    assert!(c.passed);
    assert_eq!(c.subflag_count, 6);
    assert!(close(c.data.c_star[1], 0.135113844, 1e-9));
    assert!(close(c.data.c_star[2], 0.0118314163, 1e-10));
    assert!(c.min_nonbasic_slack.unwrap() > 0.039);
}

#[test]
fn mt_order_three_certificate() {
    let f = mt_flag(3).unwrap();
    let rh = solve_flag_rhos(&f).unwrap().rhos;
    let c = certify_system(&f, &rh).unwrap();
    assert!(c.passed);
    assert!(close(c.data.c_star[3], 0.0015595, 1e-7));
    assert!(close(c.min_nonbasic_slack.unwrap(), 0.00488, 1e-5));
}

fn k2_system(c2: f64) -> System {
    let f = binary_flag(1).unwrap();
    let mu = Measure::uniform(2, &[0b00, 0b01, 0b10]).unwrap();
    System::new(f, vec![1.0, c2], vec![mu]).unwrap()
}

#[test]
fn k2_threshold() {
    let crit = 1.0 - 1.0 / 3f64.ln();
    let below = check_entropy_condition(&k2_system(crit - 0.01)).unwrap();
    assert!(below.strict);
    assert!(close(below.min_slack, (1.0 - crit + 0.01) * 3f64.ln() - 1.0, 1e-14));
    let above = check_entropy_condition(&k2_system(crit + 0.01)).unwrap();
    assert!(!above.holds);
    let e = above.entries.iter().find(|e| e.basic == Some(0)).unwrap();
    assert_eq!(e.status, SlackStatus::Fail);
    let at = check_entropy_condition(&k2_system(crit)).unwrap();
    assert!(at.entries.iter().all(|e| e.slack.abs() <= 1e-12 || e.basic.is_none()));
}

fn binary_system() -> System {
    let f = binary_flag(2).unwrap();
    let d = optimal_data(&f, &solve_rhos(2).unwrap().0.rhos).unwrap();
    System::new(f, d.c_star, d.restrictions).unwrap()
}

#[test]
fn e_value_submodular_on_pairs() {
    let s = binary_system();
    let en = enumerate_subflags(&s.flag).unwrap();
    let n = en.subflags.len();
    for a in 0..n {
        for b in a..n {
            let (x, y) = (&en.subflags[a], &en.subflags[b]);
            let lhs = e_value(&s, x).unwrap() + e_value(&s, y).unwrap();
            let rhs = e_value(&s, &x.sum(y).unwrap()).unwrap() + e_value(&s, &x.intersect(y).unwrap()).unwrap();
            assert!(lhs >= rhs - 1e-10, "{a} {b}");
        }
    }
}

#[test]
fn e_value_automorphism_invariant() {
    let s = binary_system();
    let en = enumerate_subflags(&s.flag).unwrap();
    for g in automorphism_generators(&s.flag).unwrap() {
        for sf in &en.subflags {
            let img = apply_automorphism(&g, sf);
            assert!(close(e_value(&s, sf).unwrap(), e_value(&s, &img).unwrap(), 1e-12));
        }
    }
}
