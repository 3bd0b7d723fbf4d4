use std::f64::consts::PI;

use gaplab::config::{CoupleCheck, PotentialSpec};
use gaplab::{parse_config, run, ConfigError, Kind};

#[test]
fn one_line_solve1d_is_valid() {
    let cfg = parse_config("kind=solve1d n=2 k=0 D=1 V=0").unwrap();
    assert_eq!(cfg.kind, Kind::Solve1d);
    assert_eq!((cfg.n, cfg.k, cfg.d), (2, 0.0, Some(1.0)));
    assert!(cfg.potential.is_zero());
}

#[test]
fn diameter_beyond_the_conjugate_bound_is_rejected() {
    match parse_config("kind=solve1d k=1 D=4") {
        Err(ConfigError::Validation(p)) => {
            assert!(p.iter().any(|m| m.contains("D < pi/sqrt(k)")), "{p:?}");
        }
        other => panic!("{other:?}"),
    }
    match parse_config("kind=solveball k=1 R=1.6") {
        Err(ConfigError::Validation(p)) => assert!(p[0].contains("2R <= pi/sqrt(k)"), "{p:?}"),
        other => panic!("{other:?}"),
    }
    assert!(parse_config("kind=solveball k=1 R=pi/2").is_ok());
}

#[test]
fn duplicate_key_names_its_line() {
    let err = parse_config("kind=solve1d\nD=1\n# comment\nn=2 D=2\n").unwrap_err();
    let ConfigError::Parse(errors) = err else { panic!("{err:?}") };
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0].line, 4);
    assert!(errors[0].message.contains("duplicate key \"D\""));
    assert!(errors[0].message.contains("line 2"));
}

#[test]
fn every_malformed_line_is_reported() {
    let err = parse_config("kind=solve1d\nD=one\nbogus\nwhat=1\n").unwrap_err();
    let ConfigError::Parse(errors) = err else { panic!("{err:?}") };
    let lines: Vec<usize> = errors.iter().map(|e| e.line).collect();
    assert_eq!(lines, vec![2, 3, 4]);
    assert!(err_text(&parse_config("kind=nothing")).contains("line 1"));
}

fn err_text<T: std::fmt::Debug>(r: &Result<T, ConfigError>) -> String {
    r.as_ref().unwrap_err().to_string()
}

#[test]
fn odd_model_potential_is_rejected() {
    assert!(matches!(
        parse_config("kind=solve1d D=1 V=0,1"),
        Err(ConfigError::Validation(_))
    ));
    assert!(parse_config("kind=solve1d D=1 V=1,0,2").is_ok());
}

#[test]
fn couple_needs_its_points() {
    assert!(matches!(
        parse_config("kind=couple k=1 R=1 check=coupling x0=0.5,0"),
        Err(ConfigError::Validation(_))
    ));
    assert!(matches!(
        parse_config("kind=couple k=1 R=1 check=coupling x0=1.5,0 y0=0.5,0"),
        Err(ConfigError::Validation(_))
    ));
    let cfg = parse_config("kind=couple k=1 R=1 check=feynman_kac x0=0.5,pi/3").unwrap();
    assert_eq!(cfg.check, Some(CoupleCheck::FeynmanKac));
    assert_eq!(cfg.x0, Some((0.5, PI / 3.0)));
}

#[test]
fn sweep_lists() {
    let cfg = parse_config("kind=sweep target=verify balls=1:0.4;0:1:0,0,1 potentials=0;0,0,1").unwrap();
    let s = cfg.sweep.as_ref().unwrap();
    assert_eq!(s.target, Kind::Verify);
    assert_eq!(s.balls.len(), 2);
    assert_eq!(cfg.sweep_potentials()[1], PotentialSpec::Poly(vec![0.0, 0.0, 1.0]));
    assert!(parse_config("kind=solve1d D=1 target=verify").is_err());
}

#[test]
fn flat_model_reproduces_three_pi_squared() {
    let report = run(&parse_config("kind=solve1d n=3 k=0 D=2 V=0").unwrap()).unwrap();
    assert!(report.pass);
    let detail = &report.sections[0].checks[0].detail;
    assert!((detail["exact"].as_f64().unwrap() - 3.0 * PI * PI / 4.0).abs() < 1e-15);
    assert!(detail["relError"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn empty_sweep_gives_an_empty_report() {
    let report = run(&parse_config("kind=sweep target=solve1d").unwrap()).unwrap();
    assert!(report.sections.is_empty());
    assert!(report.pass);
    let report = run(&parse_config("kind=sweep target=verify").unwrap()).unwrap();
    assert!(report.sections.is_empty());
}

#[test]
fn runs_are_pure_functions_of_the_text() {
    let text = "kind=sweep target=couple check=coupling balls=1:1;0:1 x0=0.5,pi y0=0.5,0\n\
                trajectories=64 dt=2e-3 T=0.5 observe=0,0.25,0.5 seed=9";
    let a = run(&parse_config(text).unwrap()).unwrap();
    let b = run(&parse_config(text).unwrap()).unwrap();
    assert_eq!(a.without_timings(), b.without_timings());
    assert_eq!(a.sections.len(), 2);
}
