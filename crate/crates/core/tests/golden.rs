//! Frozen report outputs. Regenerate with `UPDATE_GOLDEN=1 cargo test --test golden`.

use std::path::PathBuf;

use effdyn::dynamics::System;
use effdyn::entropy::{block_entropy, brudno_estimate, h1_estimate, ksym_estimate};
use effdyn::measure::ZooMeasure;
use effdyn::numerics::{q, Rational};
use effdyn::report::{entropy_rows, recurrence_rows, Report};
use effdyn::space::{Point, SpaceDescriptor};
use effdyn::stats::recurrence_trace;
use effdyn::symbolic::ComputablePartition;

fn check(name: &str, report: Report) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.csv"));
    let text = report.to_csv().unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &text).unwrap();
        return;
    }
    let frozen = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(text, frozen, "{name} drifted from its golden file");
}

fn single(rows: Vec<effdyn::report::Row>) -> Report {
    let mut r = Report::new();
    r.extend(rows);
    r
}

#[test]
fn doubling_blocks() {
    let r =
        block_entropy(&System::doubling(), &ComputablePartition::halves(SpaceDescriptor::Circle), &[1, 2, 4, 8, 12]);
    check("doubling-blocks", single(entropy_rows(&r.unwrap())));
}

#[test]
fn markov_blocks() {
    let p = vec![vec![q(9, 10), q(1, 10)], vec![q(1, 2), q(1, 2)]];
    let sys = System::markov_shift(ZooMeasure::markov(p).unwrap()).unwrap();
    let r = block_entropy(&sys, &ComputablePartition::symbols(2), &[1, 2, 3, 6]).unwrap();
    check("markov-blocks", single(entropy_rows(&r)));
}

#[test]
fn shift_spanning_counts() {
    let r = h1_estimate(&System::shift(2), &[1], &[2, 3, 4, 5, 6]).unwrap();
    check("shift2-h1", single(entropy_rows(&r)));
}

#[test]
fn seeded_complexity_rates() {
    let x = Point::random(SpaceDescriptor::Circle, 3).unwrap();
    let halves = ComputablePartition::halves(SpaceDescriptor::Circle);
    let mut r = single(entropy_rows(&ksym_estimate(&System::doubling(), &x, &halves, &[256, 1024]).unwrap()));
    r.extend(entropy_rows(&brudno_estimate(&System::doubling(), &x, &[4, 6], &[256, 1024]).unwrap()));
    check("doubling-seed3-rates", r);
}

#[test]
fn rotation_recurrence() {
    let sys = System::golden_rotation();
    let x = Point::rational(SpaceDescriptor::Circle, Rational::zero()).unwrap();
    let trace = recurrence_trace(&sys, &x, 200).unwrap();
    check("rotation-recurrence", single(recurrence_rows(&sys.name, &trace, &[1, 2, 5, 12, 29, 70, 169, 200])));
}
