//! Built-in example models, kept as model-file text.

use crate::error::{Error, Result};
use crate::model::Model;
use crate::symfield::{parse, Expr};

pub const ENGEL_PLANE: &str = "\
[model]
name = engel-plane

[coords]
x1 x2 x3 x4

[frame]
X1 1 : 1, 0, 0, 0
X2 1 : 0, 1, x1, x1^2/2
X3 2 : 0, 0, 1, x1
X4 3 : 0, 0, 0, 1

[immersion]
params = u v
chart = 0, u, 0, v

[analysis]
sigma0_origin = 0, 0
sigma0_dir = 0, 1
sigma0_range = 0, 1
eps = 1
area_lo = 0, 0
area_hi = 1, 1

[controls]
g3 = 1

[expect]
degree = 4 @reference
iota = 1 @derived
k = 1 @derived
a 1 1 = -1 @reference
b 1 1 = 0 @reference
verdict = regular @reference
area = 1 @derived
holonomy = u @derived
";

/// Engel group with the plane `Φ(u, v) = (0, u, 0, v)`.
pub fn engel_plane() -> Model {
    Model::parse(ENGEL_PLANE).expect("built-in model parses")
}

/// Heisenberg group `ℍⁿ` with the line `Φ(u) = (u, 0, …, 0)`.
pub fn heisenberg(n: usize) -> Result<Model> {
    if n == 0 {
        return Err(Error::Invalid("Heisenberg dimension must be at least 1".into()));
    }
    Model::parse(&heisenberg_text(n))
}

pub fn heisenberg_text(n: usize) -> String {
    let mut coords: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    coords.extend((1..=n).map(|i| format!("y{i}")));
    coords.push("t".into());
    let dim = 2 * n + 1;
    let row = |pairs: &[(usize, String)]| {
        let mut c = vec!["0".to_string(); dim];
        for (i, e) in pairs {
            c[*i] = e.clone();
        }
        c.join(", ")
    };
    let mut s = format!("[model]\nname = heisenberg-{n}\n\n[coords]\n{}\n\n[frame]\n", coords.join(" "));
    for i in 0..n {
        let r = row(&[(i, "1".into()), (2 * n, format!("-y{}/2", i + 1))]);
        s.push_str(&format!("X{} 1 : {r}\n", i + 1));
    }
    for i in 0..n {
        let r = row(&[(n + i, "1".into()), (2 * n, format!("x{}/2", i + 1))]);
        s.push_str(&format!("Y{} 1 : {r}\n", i + 1));
    }
    s.push_str(&format!("T 2 : {}\n", row(&[(2 * n, "1".into())])));
    let chart = row(&[(0, "u".into())]);
    s.push_str(&format!(
        "\n[immersion]\nparams = u\nchart = {chart}\n\n[analysis]\nsigma0_origin = 0\neps = 1\n\n\
         [expect]\ndegree = 1 @trivial\niota = 1 @trivial\nk = {} @derived\nverdict = regular @derived\n",
        2 * n - 1
    ));
    s
}

/// `(X̄_1 f, X̄_4 f)` for a function of `(x, y)` along the planar frame
/// rotated by `θ`.
fn planar_derivatives(theta: &Expr, f: &Expr) -> (Expr, Expr) {
    let (c, s) = (Expr::cos(theta.clone()), Expr::sin(theta.clone()));
    let (fx, fy) = (f.diff(0), f.diff(1));
    let x1 = Expr::add(Expr::mul(c.clone(), fx.clone()), Expr::mul(s.clone(), fy.clone()));
    let x4 = Expr::add(Expr::mul(Expr::neg(s), fx), Expr::mul(c, fy));
    (x1, x4)
}

/// Roto-translation group with the graph `Φ(x, y) = (x, y, θ, κ)` and
/// `κ = X̄_1(θ)` computed symbolically. `theta` is an expression in `x, y`.
pub fn visual_cortex(theta: &str) -> Result<Model> {
    let params = ["x".to_string(), "y".to_string()];
    let theta = parse(theta, &params)?;
    let (kappa, x4_theta) = planar_derivatives(&theta, &theta);
    let (x1_kappa, _) = planar_derivatives(&theta, &kappa);
    let a = Expr::add(Expr::one(), Expr::pow(x1_kappa, 2));
    let show = |e: &Expr| e.display(&params).to_string();
    let text = format!(
        "[model]\nname = visual-cortex\n\n[coords]\nx y th k\n\n[frame]\n\
         X1 1 : cos(th), sin(th), k, 0\n\
         X2 1 : 0, 0, 0, 1\n\
         X3 2 : 0, 0, -1, 0\n\
         X4 3 : -sin(th), cos(th), 0, 0\n\n\
         [immersion]\nparams = x y\nchart = x, y, {}, {}\n\n\
         [analysis]\nsigma0_origin = 0, 0\nsigma0_dir = 0, 1\nsigma0_range = -0.5, 0.5\neps = 1\n\n\
         [expect]\ndegree = 4 @reference\niota = 1 @derived\nk = 1 @derived\n\
         a 1 1 = {} @reference\nb 1 1 = {} @reference\nverdict = regular @reference\n",
        show(&theta),
        show(&kappa),
        show(&a),
        show(&x4_theta),
    );
    Model::parse(&text)
}

/// As [`visual_cortex`], also checking a user-supplied curvature against
/// `X̄_1(θ)` on `samples`.
pub fn visual_cortex_checked(theta: &str, kappa: &str, samples: &[[f64; 2]]) -> Result<Model> {
    let params = ["x".to_string(), "y".to_string()];
    let th = parse(theta, &params)?;
    let given = parse(kappa, &params)?;
    let (computed, _) = planar_derivatives(&th, &th);
    for p in samples {
        let diff = (given.eval(p)? - computed.eval(p)?).abs();
        if !(diff <= 1e-10) {
            return Err(Error::Constraint(format!(
                "curvature differs from X1(theta) by {diff:e} at {p:?}"
            )));
        }
    }
    visual_cortex(theta)
}

/// Built-in model by name: `engel-plane`, `visual-cortex`, `heisenberg`.
pub fn by_name(name: &str, theta: &str, n: usize) -> Result<Model> {
    match name {
        "engel-plane" => Ok(engel_plane()),
        "visual-cortex" => visual_cortex(theta),
        "heisenberg" => heisenberg(n),
        other => Err(Error::Invalid(format!("unknown example `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        assert_eq!(engel_plane().frame.degrees(), &[1, 1, 2, 3]);
        let h = heisenberg(2).unwrap();
        assert_eq!(h.frame.layer_dims(), vec![4, 5]);
        assert!(heisenberg(0).is_err());
        let v = visual_cortex("x").unwrap();
        assert_eq!(v.immersion.chart().len(), 4);
    }

    #[test]
    fn curvature_is_derived_from_the_angle() {
        let v = visual_cortex("x").unwrap();
        let k = &v.immersion.chart()[3];
        for x in [0.0, 0.3, 1.1] {
            assert!((k.eval(&[x, 0.2]).unwrap() - x.cos()).abs() < 1e-15);
        }
        let pts = [[0.1, 0.2], [0.7, -0.3]];
        assert!(visual_cortex_checked("x", "cos(x)", &pts).is_ok());
        assert!(matches!(
            visual_cortex_checked("x", "sin(x)", &pts),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn heisenberg_brackets() {
        let h = heisenberg(1).unwrap();
        let b = h.frame.bracket(0, 1);
        let p = [0.3, -0.8, 2.0];
        assert_eq!(b.eval(&p).unwrap(), vec![0.0, 0.0, 1.0]);
    }
}
