use std::collections::BTreeMap;
use std::fs;

use gaplab::emit::{content_hash, parse_report, report_json, ALL_FORMATS, INDEX_FILE};
use gaplab::report::{Check, Section, Series, Table};
use gaplab::{emit, parse_config, run, write_index, Format, VerificationReport};
use proptest::prelude::*;
use serde_json::{json, Value};

fn small_couple_report() -> VerificationReport {
    let text = "kind=couple k=1 R=pi/2 check=coupling x0=0.5,pi y0=0.5,0\n\
                trajectories=50 dt=2e-3 T=0.6 observe=0,0.2,0.4,0.6 seed=3";
    run(&parse_config(text).unwrap()).unwrap()
}

#[test]
fn emitting_twice_gives_identical_files() {
    let report = small_couple_report();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let pa = emit(&report, a.path(), &ALL_FORMATS).unwrap();
    let pb = emit(&report, b.path(), &ALL_FORMATS).unwrap();
    assert_eq!(pa.len(), pb.len());
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    // Re-emitting into the same directory adds nothing.
    let again = emit(&report, a.path(), &ALL_FORMATS).unwrap();
    assert_eq!(again, pa);
    assert_eq!(fs::read_dir(a.path()).unwrap().count(), pa.len());
}

#[test]
fn observation_csv_has_one_row_per_time() {
    let report = small_couple_report();
    let dir = tempfile::tempdir().unwrap();
    let paths = emit(&report, dir.path(), &[Format::Csv]).unwrap();
    let obs = paths
        .iter()
        .find(|p| p.to_string_lossy().contains("observations"))
        .unwrap();
    let text = fs::read_to_string(obs).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,xi,xiStderr,phi,phiStderr,uncoupled");
    assert_eq!(text.lines().count() - 1, 4);
}

#[test]
fn plot_files_have_three_columns() {
    let report = small_couple_report();
    let dir = tempfile::tempdir().unwrap();
    let paths = emit(&report, dir.path(), &[Format::Plot]).unwrap();
    assert_eq!(paths.len(), 1);
    let text = fs::read_to_string(&paths[0]).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let cols: Vec<f64> = row.split_whitespace().map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 3);
    }
}

#[test]
fn report_file_is_named_by_its_content() {
    let report = small_couple_report();
    let dir = tempfile::tempdir().unwrap();
    let paths = emit(&report, dir.path(), &[Format::Json]).unwrap();
    let text = fs::read_to_string(&paths[0]).unwrap();
    let name = paths[0].file_name().unwrap().to_string_lossy().into_owned();
    assert_eq!(name, format!("report-couple-{}.json", content_hash(text.as_bytes())));
    assert_eq!(parse_report(&text).unwrap(), report);

    let index = write_index(dir.path()).unwrap();
    assert_eq!(index.file_name().unwrap(), INDEX_FILE);
    let entries: Value = serde_json::from_str(&fs::read_to_string(index).unwrap()).unwrap();
    assert_eq!(entries[0]["file"], json!(name));
    assert_eq!(entries[0]["pass"], json!(report.pass));
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        -1e3..1e3f64,
        Just(0.0),
        Just(1.0),
    ]
}

fn value() -> impl Strategy<Value = Value> {
    let leaf = prop_oneof![
        Just(Value::Null),
        any::<bool>().prop_map(Value::Bool),
        finite().prop_map(|x| json!(x)),
        any::<i64>().prop_map(|x| json!(x)),
        "[a-z \"\\\\]{0,8}".prop_map(Value::String),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
            prop::collection::btree_map("[a-zA-Z]{1,6}", inner, 0..4)
                .prop_map(|m| Value::Object(m.into_iter().collect())),
        ]
    })
}

fn section() -> impl Strategy<Value = Section> {
    (
        "[a-z=. ]{0,12}",
        prop::collection::btree_map("[a-z]{1,5}", value(), 0..3),
        prop::collection::vec(("[a-z ]{1,8}", any::<bool>(), value()), 0..3),
        prop::collection::vec(prop::collection::vec(finite(), 2), 0..3),
        prop::collection::vec([finite(), finite(), finite()], 0..4),
    )
        .prop_map(|(label, outputs, checks, rows, points)| {
            let mut table = Table::new("t", &["a", "b"]);
            for r in &rows {
                table.push(r);
            }
            Section {
                label,
                outputs,
                checks: checks
                    .into_iter()
                    .map(|(name, pass, detail)| Check { name, pass, detail })
                    .collect(),
                tables: vec![table],
                series: vec![Series::new("s", points)],
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn json_round_trips(
        sections in prop::collection::vec(section(), 0..3),
        config in prop::collection::btree_map("[a-z]{1,6}", "[0-9a-z.,]{0,6}", 0..4),
        times in prop::collection::btree_map("[a-z]{1,6}", finite(), 0..3),
        pass in any::<bool>(),
    ) {
        let report = VerificationReport {
            kind: "sweep".into(),
            config,
            sections,
            pass,
            wall_times: times,
        };
        let text = report_json(&report);
        let back = parse_report(&text).unwrap();
        prop_assert_eq!(&back, &report);
        prop_assert_eq!(report_json(&back), text);
    }
}

#[test]
fn non_finite_values_become_null() {
    let mut s = Section::new("x");
    s.output("v", f64::NAN);
    s.output("w", vec![1.0, f64::INFINITY]);
    assert_eq!(s.outputs["v"], Value::Null);
    assert_eq!(s.outputs["w"], json!([1.0, null]));
    let report = VerificationReport {
        kind: "solve1d".into(),
        config: BTreeMap::new(),
        sections: vec![s],
        pass: true,
        wall_times: BTreeMap::new(),
    };
    assert_eq!(parse_report(&report_json(&report)).unwrap(), report);
}
