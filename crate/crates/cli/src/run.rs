//! Executes a configured experiment into a report.

use effdyn::complexity::{compressor_by_id, default_compressor};
use effdyn::entropy::{
    block_entropy_with, brudno_estimate_with, h1_estimate, ksym_estimate_with, local_info, verify_null_s_cover,
    EntropyReport, NullSCover,
};
use effdyn::error::Error;
use effdyn::numerics::Rational;
use effdyn::report::{birkhoff_row, entropy_rows, recurrence_rows, typicality_rows, Report, Row};
use effdyn::space::Point;
use effdyn::stats::{dyadic_family, recurrence_trace, typicality_test, EmpiricalMeasure, Target};
use effdyn::symbolic::CylinderOracle;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::Config;

pub const DEFAULT_TYPICALITY_TOL: f64 = 0.02;
pub const DEFAULT_TYPICALITY_LEVEL: u32 = 4;

pub fn config_hash(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Errors the run reports as rows rather than failing on.
fn reported(e: &Error) -> bool {
    matches!(e, Error::UnknownSymbol(_) | Error::Stalled(_))
}

fn error_row(method: &str, system: &str, param: &str, e: &Error) -> Row {
    Row::new(method, system, param, None, f64::NAN, format!("unknown: {e}"))
}

/// Runs the experiment; identical text gives identical reports.
pub fn run(cfg: &Config, text: &str) -> anyhow::Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.experiment.workers).build()?;
    let rows = pool.install(|| rows(cfg))?;
    let mut report = Report::new()
        .with_meta("experiment", &cfg.experiment.name)
        .with_meta("config_sha256", config_hash(text))
        .with_meta("seed", cfg.experiment.seed);
    report.extend(rows);
    Ok(report)
}

fn per_point<F>(points: &[Point], f: F) -> anyhow::Result<Vec<Row>>
where
    F: Fn(&Point) -> Result<Vec<Row>, Error> + Sync,
{
    let parts: Vec<Result<Vec<Row>, Error>> = points.par_iter().map(&f).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn rows(cfg: &Config) -> anyhow::Result<Vec<Row>> {
    let sys = cfg.system()?;
    let xi = cfg.partition()?;
    let points = cfg.points()?;
    let e = &cfg.estimator;
    let name = sys.name.clone();
    let compressor = match &e.compressor {
        Some(id) => compressor_by_id(id).ok_or_else(|| anyhow::anyhow!("unknown compressor {id}"))?,
        None => default_compressor(),
    };
    let ps = e.p.clone().unwrap_or_default();
    let entropy = |r: EntropyReport| entropy_rows(&r);
    match e.kind.as_str() {
        "block" => {
            let mu = cfg.measure()?.ok_or_else(|| anyhow::anyhow!("block entropy needs a measure"))?;
            let oracle = CylinderOracle::with_measure(&sys, &xi, mu)?;
            Ok(entropy(block_entropy_with(&oracle, &e.n)?))
        }
        "local-info" => per_point(&points, |x| {
            e.n.iter()
                .map(|&n| {
                    let iv = local_info(&sys, x, &xi, n)?;
                    let diag = format!("width={}", iv.width().to_f64());
                    Ok(Row::new("local-info", &name, x.label(), Some(n), iv.midpoint().to_f64(), diag))
                })
                .collect()
        }),
        "ksym" => per_point(&points, |x| match ksym_estimate_with(compressor.as_ref(), &sys, x, &xi, &e.n) {
            Ok(r) => Ok(entropy(r)),
            Err(err) if reported(&err) => Ok(vec![error_row("ksym", &name, x.label(), &err)]),
            Err(err) => Err(err),
        }),
        "brudno" => per_point(&points, |x| Ok(entropy(brudno_estimate_with(compressor.as_ref(), &sys, x, &ps, &e.n)?))),
        "h1" => Ok(entropy(h1_estimate(&sys, &ps, &e.n)?)),
        "null-cover" => {
            let s = e.s.expect("validated");
            let p = ps[0];
            let cover = NullSCover::from_spanning(&sys, &e.n, p, s)?;
            let k_max = e.k_max.unwrap_or(*e.n.iter().min().expect("validated"));
            let sample_n = e.samples.unwrap_or(100) as u64;
            let sample: Vec<Point> = (0..sample_n)
                .map(|i| Point::random(sys.space.clone(), cfg.experiment.seed + i))
                .collect::<Result<_, _>>()?;
            let chk = verify_null_s_cover(&cover, &sys, &sample, k_max, f64::INFINITY)?;
            let param = format!("s={s}|p={p}");
            let mut rows: Vec<Row> = chk
                .depth_weights
                .iter()
                .map(|&(n, w)| Row::new("null-cover", &name, &format!("{param}|weight"), Some(n), w, ""))
                .collect();
            let diag = format!("failing_k={:?};unknown={};samples={}", chk.failing_k, chk.unknown.len(), sample.len());
            rows.push(Row::new(
                "null-cover",
                &name,
                &format!("{param}|covered"),
                Some(k_max),
                chk.covered_points as f64,
                diag,
            ));
            Ok(rows)
        }
        "birkhoff" => {
            let t = e.target.as_ref().expect("validated");
            let (a, b): (Rational, Rational) = (t[0].parse()?, t[1].parse()?);
            let label = format!("[{a},{b})");
            let target = Target::half_open(a, b);
            per_point(&points, |x| {
                e.n.iter()
                    .map(|&n| {
                        let c = EmpiricalMeasure::new(&sys, x, n)?.count(&target)?;
                        Ok(birkhoff_row(&name, &format!("{}|{label}", x.label()), &c))
                    })
                    .collect()
            })
        }
        "typicality" => {
            let mu = cfg.measure()?.ok_or_else(|| anyhow::anyhow!("typicality needs a measure"))?;
            let family = dyadic_family(&mu, e.level.unwrap_or(DEFAULT_TYPICALITY_LEVEL))?;
            let tol = e.tol.unwrap_or(DEFAULT_TYPICALITY_TOL);
            per_point(&points, |x| {
                let mut rows = Vec::new();
                for &n in &e.n {
                    let t = typicality_test(&sys, x, &family, n, tol)?;
                    let sys_tag = format!("{name}|{}", x.label());
                    rows.extend(typicality_rows(&sys_tag, &t));
                }
                Ok(rows)
            })
        }
        "recurrence" => per_point(&points, |x| {
            let max = *e.n.iter().max().expect("validated");
            let trace = recurrence_trace(&sys, x, max)?;
            let mut grid = e.n.clone();
            grid.sort_unstable();
            grid.dedup();
            let mut rows = recurrence_rows(&name, &trace, &grid);
            for r in &mut rows {
                r.param = format!("{}|{}", x.label(), r.param);
            }
            Ok(rows)
        }),
        other => anyhow::bail!("unknown estimator {other}"),
    }
}
