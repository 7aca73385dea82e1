use std::fmt::Write;

use kamred::cocycle::{rotation_number, ConstantCocycle};
use kamred::kam::{run_iteration, Classification, KamSchedule};
use kamred::linalg::{self, CMat2, Mat2};
use kamred::schrodinger::{
    fold_rho, homogeneity as measure_homogeneity, periodic_approximant, scan_spectrum, schrodinger_cocycle,
    transport_velocity, Potential, SpectrumIndicator,
};
use kamred::torus_fourier::{AlgebraTag, FourierMap, Period};
use kamred::Error;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{fmt_f, HomSource, RunConfig};
use crate::{EXIT_CONFIG, EXIT_ENTRY, EXIT_IO, EXIT_NONCONVERGENCE, EXIT_NUMERICAL};

pub struct Run {
    pub output: String,
    pub code: u8,
    pub message: Option<String>,
}

impl Run {
    fn ok(output: String) -> Self {
        Run { output, code: 0, message: None }
    }

    fn fail(output: String, e: &Error) -> Self {
        Run { output, code: exit_code(e), message: Some(e.to_string()) }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_) => EXIT_CONFIG,
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        Error::EntrySmallness { .. } => EXIT_ENTRY,
        Error::Json(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn header(command: &str, cfg: &RunConfig) -> String {
    let mut out = format!("# kamred {command}\n");
    for (k, v) in cfg.echo() {
        let _ = writeln!(out, "# config: {k}={v}");
    }
    out
}

fn config_json(cfg: &RunConfig) -> serde_json::Value {
    let map: serde_json::Map<String, serde_json::Value> =
        cfg.echo().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    serde_json::Value::Object(map)
}

fn json_output(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn rotnum(cfg: &RunConfig) -> Run {
    let rows: Vec<kamred::Result<f64>> = cfg
        .energies
        .par_iter()
        .map(|&e| {
            let c = schrodinger_cocycle(&cfg.potential, &cfg.freq, e)?;
            rotation_number(&c, cfg.n_iter).map(fold_rho)
        })
        .collect();
    let mut out = header("rotnum", cfg);
    out.push_str("E,rho\n");
    for (&e, row) in cfg.energies.iter().zip(rows) {
        match row {
            Ok(rho) => {
                let _ = writeln!(out, "{},{}", fmt_f(e), fmt_f(rho));
            }
            Err(err) => {
                let _ = writeln!(out, "# error at E = {}: {err}", fmt_f(e));
                return Run::fail(out, &err);
            }
        }
    }
    Run::ok(out)
}

/// `[[0, 0], [λV, 0]]`, so that `S_E^V = S_E^0·e^{f}`.
fn schrodinger_perturbation(v: &Potential) -> FourierMap {
    let coeffs = v.coefficients().into_iter().map(|(m, c)| {
        let mut a = CMat2::zeros();
        a[(1, 0)] = c;
        (m, a)
    });
    FourierMap::from_coeffs(v.dim(), Period::Standard, AlgebraTag::Sl2R, coeffs)
}

fn ln_entry_bound(s: &KamSchedule, a: &Mat2) -> f64 {
    let a_norm = linalg::op_norm(a);
    let m = s.m_value(a_norm);
    s.ln_eps0_prime(1.0 / s.l(1, m), 1.0 / s.l(2, m), a_norm)
}

pub fn kam_reduce(cfg: &RunConfig) -> Run {
    let f = schrodinger_perturbation(&cfg.potential);
    let runs: Vec<(f64, kamred::Result<serde_json::Value>, Option<Classification>)> = cfg
        .energies
        .par_iter()
        .map(|&e| {
            let a = Mat2::new(e, -1.0, 1.0, 0.0);
            let run = ConstantCocycle::new(a)
                .and_then(|ac| run_iteration(&ac, &f, &cfg.freq, &cfg.schedule, cfg.rot))
                .and_then(|rep| Ok((rep.to_json()?, rep.classification)));
            match run {
                Ok((j, class)) => (e, Ok(j), Some(class)),
                Err(err) => (e, Err(err), None),
            }
        })
        .collect();
    let mut entries = Vec::new();
    let mut code = 0;
    let mut message = None;
    for (e, run, class) in runs {
        match run {
            Ok(report) => {
                if code == 0 && matches!(class, Some(Classification::Inconclusive)) {
                    code = EXIT_NUMERICAL;
                    message = Some(format!("classification inconclusive at E = {}", fmt_f(e)));
                }
                entries.push(json!({"E": e, "report": report}));
            }
            Err(err) => {
                let text = match &err {
                    Error::EntrySmallness { k, norm, .. } => {
                        let ln_bound = ln_entry_bound(&cfg.schedule, &Mat2::new(e, -1.0, 1.0, 0.0));
                        format!(
                            "entry smallness fails at E = {}: ||f||_{k} = {norm:.6e} exceeds eps0'(1/l1, 1/l2) = exp({ln_bound:.6})",
                            fmt_f(e)
                        )
                    }
                    other => format!("E = {}: {other}", fmt_f(e)),
                };
                if code == 0 || code == EXIT_NUMERICAL && exit_code(&err) != EXIT_NUMERICAL {
                    code = exit_code(&err);
                    message = Some(text.clone());
                }
                entries.push(json!({"E": e, "error": text, "exit_code": exit_code(&err)}));
            }
        }
    }
    let doc = json!({
        "command": "kam-reduce",
        "config": config_json(cfg),
        "results": entries,
    });
    Run { output: json_output(&doc), code, message }
}

pub fn ids_scan(cfg: &RunConfig) -> Run {
    let mut out = header("ids-scan", cfg);
    out.push_str("E,rho,ids,lyap,hyperbolic,gap_m,edge_flag\n");
    let scan = match scan_spectrum(&cfg.potential, &cfg.freq, &cfg.energies, cfg.n_iter) {
        Ok(s) => s,
        Err(e) => return Run::fail(out, &e),
    };
    for s in &scan.samples {
        let label = s
            .gap_label
            .as_ref()
            .map(|m| m.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f(s.e),
            fmt_f(s.rho),
            fmt_f(s.ids),
            fmt_f(s.lyap),
            s.hyperbolic,
            label,
            s.edge_flag
        );
    }
    let _ = writeln!(out, "# hull: {} {}", fmt_f(scan.hull.0), fmt_f(scan.hull.1));
    for g in &scan.gaps {
        let _ = writeln!(
            out,
            "# gap: {} {} label {:?} residual {}",
            fmt_f(g.lower),
            fmt_f(g.upper),
            g.label,
            fmt_f(g.label_residual)
        );
    }
    for w in &scan.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    Run::ok(out)
}

pub fn homogeneity(cfg: &RunConfig) -> Run {
    let mut extra = serde_json::Map::new();
    let indicator = match cfg.source {
        HomSource::Intervals => {
            if cfg.intervals.is_empty() {
                return Run::fail(String::new(), &Error::InvalidInput("source=intervals needs intervals=A:B;...".into()));
            }
            SpectrumIndicator::from_intervals(&cfg.intervals, cfg.h_min, cfg.h_max, cfg.spacing)
        }
        HomSource::Approximant => periodic_approximant(&cfg.potential, &cfg.freq, cfg.q_max, cfg.phases).and_then(|a| {
            extra.insert("p".into(), json!(a.p));
            extra.insert("q".into(), json!(a.q));
            extra.insert("bands".into(), json!(a.bands.len()));
            SpectrumIndicator::from_intervals(&a.bands, cfg.h_min, cfg.h_max, cfg.spacing)
        }),
        HomSource::Scan => SpectrumIndicator::from_fn(cfg.h_min, cfg.h_max, cfg.spacing, |_| false).and_then(|mut ind| {
            let grid: Vec<f64> = (0..ind.inside.len()).map(|i| ind.energy(i)).collect();
            let scan = scan_spectrum(&cfg.potential, &cfg.freq, &grid, cfg.n_iter)?;
            for (slot, s) in ind.inside.iter_mut().zip(&scan.samples) {
                *slot = !s.hyperbolic;
            }
            extra.insert("warnings".into(), json!(scan.warnings));
            Ok(ind)
        }),
    };
    let report = indicator.and_then(|ind| measure_homogeneity(&ind, cfg.resolution));
    match report {
        Ok(r) => {
            let doc = json!({
                "command": "homogeneity",
                "config": config_json(cfg),
                "source": extra,
                "report": r,
            });
            Run::ok(json_output(&doc))
        }
        Err(e) => {
            let doc = json!({
                "command": "homogeneity",
                "config": config_json(cfg),
                "error": e.to_string(),
            });
            Run::fail(json_output(&doc), &e)
        }
    }
}

pub fn transport(cfg: &RunConfig) -> Run {
    let mut out = header("transport", cfg);
    out.push_str("T,velocity,second_moment,time_avg_velocity,speed,identity_residual,edge_mass,norm_error\n");
    let r = match transport_velocity(&cfg.potential, &cfg.freq, &cfg.theta, cfg.l, &cfg.t_list, &cfg.initial) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(out, "# error: {e}");
            return Run::fail(out, &e);
        }
    };
    for p in &r.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f(p.t),
            fmt_f(p.velocity),
            fmt_f(p.second_moment),
            fmt_f(p.time_avg_velocity),
            fmt_f(p.speed),
            fmt_f(p.identity_residual),
            fmt_f(p.edge_mass),
            fmt_f(p.norm_error)
        );
    }
    let _ = writeln!(out, "# velocity_bound: {}", fmt_f(r.velocity_bound));
    let _ = writeln!(out, "# velocity_block_hermitian_defect: {}", fmt_f(r.q_block.hermitian_defect));
    Run::ok(out)
}
