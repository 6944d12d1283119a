use holonomy_core::admissibility::ControlField;
use holonomy_core::model::{Model, Origin};
use holonomy_core::models::{engel_plane, heisenberg, visual_cortex};
use holonomy_core::regularity::{is_regular, Verdict};
use holonomy_core::symfield::parse;

fn expected_usize(model: &Model, key: &str) -> usize {
    model.expectation(key).unwrap().value.parse().unwrap()
}

/// Checks the `a i j` / `b i j` entries of the ledger at every node.
fn check_coefficients(model: &Model, tol: f64) -> usize {
    let prep = model.prepare().unwrap();
    let sys = &prep.system;
    let params = model.immersion.params();
    let mut checked = 0;
    for e in &model.expect {
        let mut parts = e.key.split_whitespace();
        let which = parts.next().unwrap();
        if which != "a" && which != "b" {
            continue;
        }
        let i: usize = parts.next().unwrap().parse().unwrap();
        let j: usize = parts.next().unwrap().parse().unwrap();
        let expr = parse(&e.value, params).unwrap();
        for (l, line) in sys.lines.iter().enumerate() {
            for node in 0..=sys.steps {
                let q = &line.params[2 * node];
                let got = if which == "a" {
                    sys.a_node(l, node)[(i - 1, j - 1)]
                } else {
                    sys.b_node(l, node)[(i - 1, j - 1)]
                };
                let want = expr.eval(q).unwrap();
                assert!((got - want).abs() < tol, "{} at {q:?}: {got} vs {want}", e.key);
                checked += 1;
            }
        }
    }
    checked
}

#[test]
fn engel_plane_ledger() {
    let model = engel_plane();
    let prep = model.prepare().unwrap();
    assert_eq!(prep.pattern.degree, expected_usize(&model, "degree"));
    assert_eq!(prep.pattern.iota, expected_usize(&model, "iota"));
    assert_eq!(prep.pattern.k, expected_usize(&model, "k"));
    assert!(check_coefficients(&model, 1e-10) > 0);
    let report = is_regular(&prep.system, model.analysis.tol_rank, model.analysis.tol_cert).unwrap();
    assert_eq!(report.verdict, Verdict::Regular);
    assert!(report.certificates.is_empty());
}

#[test]
fn engel_plane_holonomy_of_unit_control() {
    // With A = -1, B = 0 and g = 1 the solution is f(x1) = x1.
    let model = engel_plane();
    let prep = model.prepare().unwrap();
    let g = model.control_field(&prep).unwrap();
    let hol = prep.system.holonomy(&g).unwrap();
    let eps = model.analysis.eps;
    for v in &hol {
        assert!((v[0] - eps).abs() < 1e-12);
    }
    let e = model.expectation("holonomy").unwrap();
    assert_eq!(e.origin, Origin::Derived);
    let expr = parse(&e.value, model.immersion.params()).unwrap();
    // The characteristic through (0, v) ends at u = eps.
    for line in &prep.system.lines {
        let end = line.params.last().unwrap();
        assert!((expr.eval(end).unwrap() - eps).abs() < 1e-12);
    }
}

#[test]
fn engel_plane_area() {
    let model = engel_plane();
    let (lo, hi) = model.analysis.area.clone().unwrap();
    let d = expected_usize(&model, "degree");
    let area = model.immersion.degree_area(&model.frame, &lo, &hi, 16, d).unwrap();
    let want: f64 = model.expectation("area").unwrap().value.parse().unwrap();
    assert!((area - want).abs() < 1e-6);
}

#[test]
fn visual_cortex_ledger() {
    let model = visual_cortex("x").unwrap();
    let prep = model.prepare().unwrap();
    assert_eq!(prep.pattern.degree, expected_usize(&model, "degree"));
    assert_eq!(prep.pattern.k, 1);
    assert_eq!(prep.system.r, 1);
    assert!(check_coefficients(&model, 1e-8) > 100);
    let report = is_regular(&prep.system, model.analysis.tol_rank, model.analysis.tol_cert).unwrap();
    assert_eq!(report.verdict, Verdict::Regular);
}

#[test]
fn visual_cortex_constant_angle() {
    // κ ≡ 0: a = 1, b = 0, straight characteristics at angle θ.
    let model = visual_cortex("0.4").unwrap();
    let prep = model.prepare().unwrap();
    let sys = &prep.system;
    for l in 0..sys.lines.len() {
        for i in 0..=sys.steps {
            assert!((sys.a_node(l, i)[(0, 0)] - 1.0).abs() < 1e-10);
            assert!(sys.b_node(l, i)[(0, 0)].abs() < 1e-10);
        }
    }
    for line in &prep.grid.lines {
        let (q0, q1) = (&line.params[0], line.params.last().unwrap());
        let angle = (q1[1] - q0[1]).atan2(q1[0] - q0[0]);
        assert!((angle - 0.4).abs() < 1e-12);
    }
}

#[test]
fn heisenberg_curve_is_regular() {
    for n in 1..=3 {
        let model = heisenberg(n).unwrap();
        let prep = model.prepare().unwrap();
        assert_eq!(prep.pattern.degree, expected_usize(&model, "degree"));
        assert_eq!(prep.pattern.k, expected_usize(&model, "k"));
        assert_eq!(prep.system.r, 1);
        let report = is_regular(&prep.system, 1e-8, 1e-6).unwrap();
        assert_eq!(report.verdict, Verdict::Regular);
        // Only [X_1, Y_1] = T reaches the vertical direction.
        let a = prep.system.a_node(0, 0);
        let nonzero: Vec<usize> = (0..a.ncols()).filter(|&j| a[(0, j)] != 0.0).collect();
        assert_eq!(nonzero, vec![n - 1]);
        assert_eq!(a[(0, n - 1)], 1.0);
    }
}

#[test]
fn empty_controls_give_zero_holonomy() {
    let mut model = engel_plane();
    model.controls.g.clear();
    let prep = model.prepare().unwrap();
    let g = model.control_field(&prep).unwrap();
    assert_eq!(g, ControlField::zeros(&prep.system));
    assert!(prep.system.holonomy(&g).unwrap().iter().all(|v| v[0] == 0.0));
}

#[test]
fn exported_fixtures_compute_identically() {
    for model in [engel_plane(), visual_cortex("x").unwrap()] {
        let back = Model::parse(&model.to_text()).unwrap();
        let (a, b) = (model.prepare().unwrap(), back.prepare().unwrap());
        for (la, lb) in a.system.lines.iter().zip(&b.system.lines) {
            assert_eq!(la.a, lb.a);
            assert_eq!(la.b, lb.b);
            assert_eq!(la.params, lb.params);
        }
    }
}
