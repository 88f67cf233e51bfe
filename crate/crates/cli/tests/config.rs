//! Strict key = value parsing.

use mhdal::assembly::EliminationOrder;
use mhdal_cli::{parse_config, parse_with_overrides, Problem};

#[test]
fn stationary_defaults() {
    let c = parse_config("problem = ldc2d_stationary\n").unwrap();
    assert_eq!(c.problem, Problem::Ldc2dStationary);
    let s = &c.solver;
    assert_eq!((s.re, s.re_m, s.s, s.gamma, s.degree), (1.0, 1.0, 1.0, 1e4, 2));
    assert_eq!((c.nx, c.refinements), (16, 2));
    assert!(s.newton && !s.transient);
    assert_eq!(s.order, EliminationOrder::EliminateUp);
    assert_eq!(s.ladder_re, vec![1.0]);
    let i = parse_config("problem = island2d").unwrap();
    assert_eq!((i.nx, i.refinements), (8, 3));
    assert!(i.solver.transient);
    assert_eq!((i.solver.re, i.solver.re_m, i.solver.s), (1000.0, 1000.0, 1000.0));
    let i = parse_config("problem = island2d\nRem = 500").unwrap();
    assert_eq!((i.solver.re, i.solver.s), (1000.0, 500.0));
    assert_eq!(parse_config("problem = ldc2d_stationary\nRem = 500").unwrap().solver.s, 1.0);
    assert!(!parse_config("problem = schur_check").unwrap().solver.newton);
}

#[test]
fn comments_blank_lines_and_ladders() {
    let text = "# cavity sweep\n\nproblem = ldc2d_stationary  # trailing\nRe = 100\nladder_S = 1, 10,100\nS = 100\n";
    let c = parse_config(text).unwrap();
    assert_eq!(c.solver.re, 100.0);
    // an omitted ladder reaches its target in one step
    assert_eq!(c.solver.ladder_re, vec![1.0, 100.0]);
    assert_eq!(c.solver.ladder_s, vec![1.0, 10.0, 100.0]);
}

#[test]
fn negative_reynolds_number_names_the_key() {
    let e = parse_config("problem = ldc2d_stationary\nRe = -1\n").unwrap_err();
    assert_eq!(e.line, Some(2));
    assert!(e.to_string().contains("Re"), "{e}");
    for bad in ["S = 0", "Rem = -2", "gamma = 0", "dt = -0.1", "Re = nan"] {
        assert!(parse_config(&format!("problem = mms_transient\n{bad}")).is_err(), "{bad}");
    }
}

#[test]
fn malformed_input_reports_the_line() {
    let e = parse_config("problem = ldc2d_stationary\n\nviscosity = 3\n").unwrap_err();
    assert_eq!(e.line, Some(3));
    assert!(e.message.contains("viscosity"));
    let e = parse_config("problem = ldc2d_stationary\nnx = four\n").unwrap_err();
    assert_eq!(e.line, Some(2));
    let e = parse_config("problem = ldc2d_stationary\nnewton\n").unwrap_err();
    assert_eq!(e.line, Some(2));
    assert!(parse_config("problem = cavity3d").is_err());
    let e = parse_config("Re = 10\n").unwrap_err();
    assert_eq!(e.line, None);
    assert!(e.message.contains("problem"));
    assert!(parse_config("problem = ldc2d_stationary\nladder_Re = 2,100").is_err());
    assert!(parse_config("problem = island2d\nnx = 2").is_err());
}

#[test]
fn overrides_apply_after_the_file() {
    let c = parse_with_overrides("problem = ldc2d_stationary\nRe = 10\n", &["Re=50".into(), "order = eliminate_EB".into()]).unwrap();
    assert_eq!(c.solver.re, 50.0);
    assert_eq!(c.solver.order, EliminationOrder::EliminateEB);
    let e = parse_with_overrides("problem = ldc2d_stationary", &["bogus=1".into()]).unwrap_err();
    assert!(e.to_string().contains("--set bogus=1"), "{e}");
}

#[test]
fn serialization_round_trips() {
    let texts = [
        "problem = ldc2d_stationary",
        "problem = island2d\nsigma = 25\nnewton = false\nisland_eps = 0.02\noutput_dir = /tmp/x y",
        "problem = mms_transient\nmms_shape = polynomial\nmms_profile = linear\ndt = 0.003\nladder_Rem = 1,7.5",
        "problem = quad_check\nquad_degrees = 2,4,8",
    ];
    for t in texts {
        let c = parse_config(t).unwrap();
        let c2 = parse_config(&c.to_text()).unwrap();
        assert_eq!(c, c2, "{t}");
        assert_eq!(c.to_text(), c2.to_text());
    }
}
