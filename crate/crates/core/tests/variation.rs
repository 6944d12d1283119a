use holonomy_core::models::engel_plane;
use holonomy_core::symfield::parse;
use holonomy_core::variation::{first_order_check, Probe, Variation, VariationVerdict};

fn probe(g: &str, f: &str) -> Probe {
    let params = ["u".to_string(), "v".to_string()];
    Probe {
        g: vec![parse(g, &params).unwrap()],
        f: vec![parse(f, &params).unwrap()],
    }
}

fn nodes() -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 1..4 {
        for j in 1..4 {
            out.push(vec![i as f64 / 4.0, j as f64 / 4.0]);
        }
    }
    out
}

#[test]
fn admissible_probe_is_second_order() {
    // ∂_u f = g solves the Engel system with A = -1, B = 0. The only
    // component above degree 4 is -t³ f ∂_v f ∂_u g / 2 on X_3 ∧ X_4.
    let model = engel_plane();
    let pattern = model.pattern().unwrap();
    let var = Variation::new(&model.frame, &model.immersion, &pattern, probe("5*v*cos(u)", "5*v*sin(u)")).unwrap();
    let report = first_order_check(&var, &nodes(), &model.analysis.variation_t).unwrap();
    assert_eq!(report.verdict, VariationVerdict::Admissible, "{report:?}");
    assert!(report.slope.unwrap() >= 1.8);
    let oracle = |t: f64| {
        nodes()
            .iter()
            .map(|q| {
                let (u, v) = (q[0], q[1]);
                (t.powi(3) * 125.0 * v * v * u.sin().powi(3) / 2.0).abs()
            })
            .fold(0.0, f64::max)
    };
    for (t, r) in report.t.iter().zip(&report.rho) {
        assert!((r - oracle(*t)).abs() < 1e-6 * oracle(*t) + 1e-13 * t, "{t}: {r} vs {}", oracle(*t));
    }
}

#[test]
fn non_admissible_probe_is_first_order() {
    let model = engel_plane();
    let pattern = model.pattern().unwrap();
    let var = Variation::new(&model.frame, &model.immersion, &pattern, probe("0", "u")).unwrap();
    let report = first_order_check(&var, &nodes(), &model.analysis.variation_t).unwrap();
    assert_eq!(report.verdict, VariationVerdict::NotAdmissible, "{report:?}");
    assert!(report.slope.unwrap() <= 1.2);
    // V = u X_3 tilts E_1 = X_2 by t X_3 exactly: ρ(t) = t.
    for (t, r) in report.t.iter().zip(&report.rho) {
        assert!((r - t).abs() < 1e-9 * t.max(1.0), "{t} {r}");
    }
}

#[test]
fn translation_along_the_ruling_keeps_the_degree() {
    let model = engel_plane();
    let pattern = model.pattern().unwrap();
    let var = Variation::new(&model.frame, &model.immersion, &pattern, probe("cos(u)", "sin(u)")).unwrap();
    let report = first_order_check(&var, &nodes(), &[1e-2, 1e-3]).unwrap();
    assert!(report.rho.iter().all(|&r| r < 1e-14), "{report:?}");
}

#[test]
fn unperturbed_plane_keeps_its_degree() {
    let model = engel_plane();
    let pattern = model.pattern().unwrap();
    let var = Variation::new(&model.frame, &model.immersion, &pattern, probe("0", "0")).unwrap();
    let report = first_order_check(&var, &nodes(), &[1e-2, 1e-3]).unwrap();
    assert!(report.rho.iter().all(|&r| r == 0.0));
    assert_eq!(report.verdict, VariationVerdict::Inconclusive);
}

#[test]
fn verdict_agrees_with_the_residual() {
    let mut model = engel_plane();
    let prep = model.prepare().unwrap();
    let params = ["u".to_string(), "v".to_string()];
    for (g, f, admissible) in [("cos(u)", "sin(u)", true), ("0", "u", false)] {
        model.controls.g.insert(3, parse(g, &params).unwrap());
        model.controls.f.insert(4, parse(f, &params).unwrap());
        let gf = model.control_field(&prep).unwrap();
        let ff = model.vertical_field(&prep).unwrap();
        let res = prep.system.max_residual(&ff, &gf).unwrap();
        assert_eq!(res < 1e-6, admissible, "{g} {f}: {res}");
    }
}
