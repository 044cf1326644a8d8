use std::path::PathBuf;
use std::process::Command;

use uppnc::cli::{
    analyze, bench, compare, export_csv, parse_network, parse_network_str, select_curve, BenchClass, Method,
    Optimizations,
};
use uppnc::curves::equivalent;
use uppnc::numerics::rat;
use uppnc::oracles::StaircaseSpec;
use uppnc::Sequence;

fn network(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../networks").join(name)
}

fn run_binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_uppnc")).args(args).output().expect("binary runs")
}

#[test]
fn network_files_parse() {
    let exact = parse_network(&network("tandem4_exact.net")).unwrap();
    assert_eq!(exact.tandem.len(), 4);
    let approx = parse_network(&network("tandem4_approx.net")).unwrap();
    assert_eq!(approx.tandem.len(), 4);
    let homogeneous = parse_network(&network("homogeneous3.net")).unwrap();
    assert!(homogeneous.arrival.is_some());
}

#[test]
fn malformed_networks_are_rejected() {
    assert!(parse_network_str("node 1\n").is_err());
    assert!(parse_network_str("window 3\nnode 1 2\n").is_err());
    assert!(parse_network_str("node 1 2\nnode x 3\n").is_err());
    assert!(parse_network_str("# only a comment\n").is_err());
}

#[test]
fn export_round_trips_through_csv() {
    let net = parse_network(&network("tandem4_exact.net")).unwrap();
    let horizon = rat(60, 1);
    for id in ["exact", "approx", "node:2", "exact:3"] {
        let f = select_curve(&net, id, Default::default()).unwrap();
        let csv = export_csv(&f, &horizon).unwrap();
        let cut = Sequence::from_csv(&csv, &horizon).unwrap();
        for k in 0..240 {
            let t = rat(k, 4);
            assert_eq!(cut.eval(&t), Some(f.eval(&t)), "{id} at {t}");
        }
    }
    assert!(export_csv(&select_curve(&net, "exact", Default::default()).unwrap(), &rat(0, 1)).is_err());
    assert!(select_curve(&net, "node:9", Default::default()).is_err());
}

#[test]
fn bench_is_deterministic_per_seed() {
    let spec = StaircaseSpec::default();
    let strip = |seed| {
        bench(seed, 4, None, &spec)
            .unwrap()
            .into_iter()
            .map(|r| {
                let row = r.csv_row();
                row[..row.rfind(',').unwrap()].to_string()
            })
            .collect::<Vec<_>>()
    };
    let first = strip(7);
    assert_eq!(first.len(), 8);
    assert_eq!(first, strip(7));
    for r in bench(7, 4, None, &spec).unwrap() {
        assert!(r.equivalent);
    }
    for r in bench(3, 2, Some(BenchClass::Neither), &spec).unwrap() {
        assert_eq!(r.class, BenchClass::Neither);
    }
}

#[test]
fn every_optimization_subset_gives_the_same_curve() {
    let net = parse_network(&network("tandem4_exact.net")).unwrap();
    for method in [Method::Exact, Method::Approx] {
        let reference = analyze(&net, method, Optimizations::default().pipeline_options()).unwrap().curve;
        for mask in 0u8..16 {
            let opts = Optimizations {
                no_minimize: mask & 1 != 0,
                no_dominance: mask & 2 != 0,
                no_asymptotic: mask & 4 != 0,
                no_selfconv: mask & 8 != 0,
                ..Default::default()
            };
            let curve = analyze(&net, method, opts.pipeline_options()).unwrap().curve;
            assert!(equivalent(&curve, &reference).unwrap(), "{method:?} mask {mask}");
        }
    }
}

#[test]
fn compare_reports_end_to_end_equality() {
    let net = parse_network(&network("tandem4_exact.net")).unwrap();
    let verdicts = compare(&net, Default::default()).unwrap();
    assert_eq!(verdicts.len(), net.tandem.len());
    assert!(verdicts.last().unwrap().equal);
    for v in &verdicts {
        assert_eq!(v.equal, v.divergence.is_none(), "{}", v.label);
    }
    let homogeneous = parse_network(&network("homogeneous3.net")).unwrap();
    let verdicts = compare(&homogeneous, Default::default()).unwrap();
    assert!(!verdicts[0].equal);
    assert!(verdicts.last().unwrap().equal);
}

#[test]
fn exit_codes() {
    let ok = run_binary(&["analyze", network("homogeneous3.net").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(!ok.stdout.is_empty());

    let dir = std::env::temp_dir().join(format!("uppnc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.net");
    std::fs::write(&bad, "node 1 one\n").unwrap();
    assert_eq!(run_binary(&["analyze", bad.to_str().unwrap()]).status.code(), Some(2));

    let missing = dir.join("absent.net");
    assert_eq!(run_binary(&["analyze", missing.to_str().unwrap()]).status.code(), Some(1));

    let out = dir.join("curve.csv");
    let export = run_binary(&[
        "export",
        network("tandem4_exact.net").to_str().unwrap(),
        "--curve",
        "exact",
        "--horizon",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(export.status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("t,kind"));
    std::fs::remove_dir_all(&dir).ok();
}
