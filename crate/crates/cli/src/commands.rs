use std::io::{self, Write};
use std::sync::Arc;

use serde::Serialize;

use nterm::asymptotics::{self, AsymptoticProfile, ConstantRegistry, RatioDiagnostics};
use nterm::lattice::RearrangementStream;
use nterm::oracle::{self, VerifyOptions};
use nterm::{
    sigma_exact, DiagonalSpec, Error, Exponent, LatticeSource, Regime, SequenceRegistry, SequenceSource,
    WeightFamily, WeightRegistry,
};

use super::output::{ErrorRecord, Format, Report};
use super::{Command, ConstantArgs, DiagnoseArgs, SourceArgs, StreamArgs, VerifyArgs, WidthArgs};

pub fn run(command: &Command, out: &mut dyn Write) -> io::Result<i32> {
    match command {
        Command::Width(a) => finish(width(a), a.format, command, out),
        Command::Constant(a) => finish(constant(a), a.format, command, out),
        Command::Verify(a) => finish(verify(a), a.format, command, out),
        Command::Diagnose(a) => {
            let report = diagnose(a);
            report.emit(a.format, command, |d: &RatioDiagnostics| d.rows.clone(), out)?;
            Ok(report.exit_code())
        }
        Command::Stream(a) => {
            let report = stream(a);
            report.emit(a.format, command, |p: &PointRecord| vec![PointRow::from(p)], out)?;
            Ok(report.exit_code())
        }
    }
}

fn finish<R: Serialize + Clone>(report: Report<R>, format: Format, command: &Command, out: &mut dyn Write) -> io::Result<i32> {
    report.emit(format, command, |r: &R| vec![r.clone()], out)?;
    Ok(report.exit_code())
}

fn build_source(args: &SourceArgs) -> nterm::Result<Arc<dyn SequenceSource>> {
    match (&args.seq, &args.family) {
        (Some(seq), None) => SequenceRegistry::default().build(seq),
        (None, Some(fam)) => Ok(Arc::new(LatticeSource::new(WeightRegistry::default().build(fam)?))),
        _ => Err(Error::InvalidParameter { field: "seq".into(), reason: "give exactly one of --seq and --family".into() }),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WidthRecord {
    n: u64,
    value_lo: f64,
    value_hi: f64,
    regime: Regime,
    achiever: Option<u64>,
}

fn width(a: &WidthArgs) -> Report<WidthRecord> {
    let mut report = Report::new();
    let source = match build_source(&a.source) {
        Ok(s) => s,
        Err(err) => {
            report.errors.push(ErrorRecord::from_error(&err, None));
            return report;
        }
    };
    let spec = DiagonalSpec::new(a.p, a.q, source);
    for &n in &a.n {
        match sigma_exact(&spec, n, a.tol) {
            Ok(w) => report.records.push(WidthRecord {
                n,
                value_lo: w.value.lo,
                value_hi: w.value.hi,
                regime: w.regime,
                achiever: w.achiever,
            }),
            Err(err) => {
                let config = err.is_config_error();
                report.errors.push(ErrorRecord::from_error(&err, Some(n)));
                if config {
                    break;
                }
            }
        }
    }
    report
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantRecord {
    tag: &'static str,
    s: f64,
    d: usize,
    lo: f64,
    hi: f64,
}

fn constant(a: &ConstantArgs) -> Report<ConstantRecord> {
    let mut report = Report::new();
    let registry = ConstantRegistry::default();
    let Some(named) = registry.get(&a.tag) else {
        report.errors.push(ErrorRecord::config(
            Some("tag"),
            format!("unknown constant `{}`; known: {}", a.tag, registry.tags().join(", ")),
        ));
        return report;
    };
    match named.evaluate(a.s, a.d, a.tol) {
        Ok(v) => report.records.push(ConstantRecord { tag: named.tag(), s: a.s, d: a.d, lo: v.lo, hi: v.hi }),
        Err(err) => report.errors.push(ErrorRecord::from_error(&err, None)),
    }
    report
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyRecord {
    prefix: String,
    p: Exponent,
    q: Exponent,
    m: usize,
    n: usize,
    formula: f64,
    witness: f64,
    sampled: f64,
    margin: f64,
    gap: f64,
    passed: bool,
}

const SUITE_EXPONENTS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];

fn verify(a: &VerifyArgs) -> Report<VerifyRecord> {
    let mut report = Report::new();
    if !(2..=oracle::MAX_OPTIMIZER_LEN).contains(&a.m) {
        report.errors.push(ErrorRecord::config(Some("M"), format!("{} outside 2..={}", a.m, oracle::MAX_OPTIMIZER_LEN)));
    }
    if !(a.perturb > 0.0 && a.perturb.is_finite()) {
        report.errors.push(ErrorRecord::config(Some("perturb"), "must be positive"));
    }
    if a.samples == 0 || a.restarts == 0 {
        report.errors.push(ErrorRecord::config(Some("samples"), "samples and restarts must be positive"));
    }
    let suite: Vec<Exponent> = SUITE_EXPONENTS.iter().map(|&v| Exponent::new(v).expect("positive")).collect();
    let ps = a.p.map_or(suite.clone(), |p| vec![p]);
    let qs = a.q.map_or(suite, |q| vec![q]);
    if ps.iter().chain(&qs).any(|e| e.is_infinite()) {
        report.errors.push(ErrorRecord::config(Some("p"), "verification needs finite p and q"));
    }
    if !report.errors.is_empty() {
        return report;
    }
    let mut prefixes = vec![("geometric:0.5".to_string(), (1..=a.m as i32).map(|k| 0.5f64.powi(k)).collect::<Vec<_>>())];
    for i in 0..a.prefixes as u64 {
        let seed = a.seed.wrapping_add(i);
        prefixes.push((format!("random:{seed}"), oracle::random_prefix(a.m, seed)));
    }
    let opts = VerifyOptions { samples: a.samples, restarts: a.restarts, seed: a.seed, perturbation: a.perturb };
    for (name, lambda) in &prefixes {
        for &p in &ps {
            for &q in &qs {
                for n in 0..a.m {
                    match oracle::verify(p, q, lambda, n, &opts) {
                        Ok(v) => {
                            if !v.passed {
                                report.errors.push(ErrorRecord {
                                    kind: "verification",
                                    field: None,
                                    n: Some(n as u64),
                                    message: format!(
                                        "{name} p={p} q={q}: formula {} witness {} sampled {}",
                                        v.formula, v.witness, v.sampled
                                    ),
                                });
                            }
                            report.records.push(VerifyRecord {
                                prefix: name.clone(),
                                p,
                                q,
                                m: v.m,
                                n,
                                formula: v.formula,
                                witness: v.witness,
                                sampled: v.sampled,
                                margin: v.margin,
                                gap: v.gap,
                                passed: v.passed,
                            });
                        }
                        Err(err) => report.errors.push(ErrorRecord::from_error(&err, Some(n as u64))),
                    }
                }
            }
        }
    }
    report
}

fn diagnose(a: &DiagnoseArgs) -> Report<RatioDiagnostics> {
    let mut report = Report::new();
    let grid = if a.grid.is_empty() { asymptotics::geometric_grid(2, 6, 1) } else { a.grid.clone() };
    let result = build_source(&a.source).and_then(|source| {
        let profile = AsymptoticProfile::new(a.s, a.beta, a.c)?.with_log_offset(a.log_offset);
        if a.terms {
            asymptotics::term_ratio(&source, &profile, &grid)
        } else {
            asymptotics::empirical_ratio(&DiagonalSpec::new(a.p, a.q, source), &profile, &grid)
        }
    });
    match result {
        Ok(d) => report.records.push(d),
        Err(err) => report.errors.push(ErrorRecord::from_error(&err, None)),
    }
    report
}

#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    n: u64,
    k: Vec<i64>,
    weight: f64,
}

/// CSV form of a point: coordinates joined by spaces.
#[derive(Serialize)]
struct PointRow {
    n: u64,
    k: String,
    weight: f64,
}

impl From<&PointRecord> for PointRow {
    fn from(p: &PointRecord) -> Self {
        let k = p.k.iter().map(i64::to_string).collect::<Vec<_>>().join(" ");
        PointRow { n: p.n, k, weight: p.weight }
    }
}

fn stream(a: &StreamArgs) -> Report<PointRecord> {
    let mut report = Report::new();
    let family: Arc<dyn WeightFamily> = match WeightRegistry::default().build(&a.family) {
        Ok(f) => f,
        Err(err) => {
            report.errors.push(ErrorRecord::from_error(&err, None));
            return report;
        }
    };
    for (p, n) in RearrangementStream::new(family).take(a.count as usize).zip(1..) {
        report.records.push(PointRecord { n, k: p.k, weight: p.weight });
    }
    report
}
