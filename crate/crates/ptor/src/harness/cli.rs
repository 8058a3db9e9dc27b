//! Command-line front end: every scan as a subcommand, rows printed in
//! the reference table shape, optional CSV/JSONL sink.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::archimedean::{bs_window, range_mean, Place};
use crate::error::{Error, Result};
use crate::exec::{ExecCfg, FieldError};
use crate::families::{
    huge_p_regulator_scan, reciprocal_search, scan_delta_max, scan_family, scan_vptor_extrema,
    FamilyParams, FamilyVariant, ScanCase, SquarefreePolicy,
};
use crate::harness::oracle::{oracle_verify, OracleClient, OracleMode};
use crate::harness::sink::{sink_write, SinkFormat, SinkMeta, SinkRecord};
use crate::quadfield::CLASS_CEILING;
use crate::torsion::{vptor, Casramif, TorsionOpts};

#[derive(Parser, Debug)]
#[command(
    name = "ptor",
    version,
    about = "abelian p-ramification torsion scans for real quadratic fields"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

/// Knobs shared by every scan: worker count, ceilings, sink.
#[derive(Args, Debug, Clone)]
struct Common {
    /// Worker threads (1 forces the sequential path).
    #[arg(long)]
    workers: Option<usize>,
    /// Modulus-exponent ceiling for delta saturation.
    #[arg(long, default_value_t = 4096)]
    modulus_ceiling: u32,
    /// Exact class-number ceiling on D.
    #[arg(long, default_value_t = CLASS_CEILING)]
    class_ceiling: u64,
    /// Write records to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sink format: csv or jsonl.
    #[arg(long, default_value = "csv")]
    format: String,
}

impl Common {
    fn exec(&self) -> ExecCfg {
        ExecCfg {
            workers: self.workers,
        }
    }

    fn opts(&self) -> TorsionOpts {
        TorsionOpts {
            max_n: self.modulus_ceiling,
            class_ceiling: self.class_ceiling,
            ..TorsionOpts::default()
        }
    }

    fn sink(&self, kind: &str, range: String, records: Vec<SinkRecord>) -> Result<()> {
        if let Some(path) = &self.out {
            let format: SinkFormat = self.format.parse()?;
            let meta = SinkMeta::new(
                kind,
                range,
                format!(
                    "class={};modulus={}",
                    self.class_ceiling, self.modulus_ceiling
                ),
            );
            let n = sink_write(&records, path, format, &meta)?;
            eprintln!("wrote {n} records to {}", path.display());
        }
        Ok(())
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Successive maxima of delta_p over a discriminant range.
    ScanDelta {
        #[arg(long)]
        p: u64,
        /// Case filter: unramified or ramified.
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 5)]
        min_d: u64,
        #[arg(long)]
        max_d: u64,
        /// Use the stated case-table constant for m = 2 (mod 8)
        /// (the default); disable to mimic the reference program branch.
        #[arg(long, default_value_t = false)]
        casramif_program: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Successive minima of Delta_p with vptor and C_p.
    ScanVptor {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 5)]
        min_d: u64,
        #[arg(long)]
        max_d: u64,
        #[command(flatten)]
        common: Common,
    },
    /// The explicit-unit family m = a^2 p^(2 rho) + 1 (or + 4).
    Family {
        #[arg(long, default_value_t = 1)]
        a: u64,
        #[arg(long)]
        p: u64,
        /// plus1 or plus4.
        #[arg(long, default_value = "plus1")]
        variant: String,
        #[arg(long, default_value_t = 2)]
        rho_min: u32,
        #[arg(long)]
        rho_max: u32,
        /// Squarefree policy: require or allow-core.
        #[arg(long, default_value = "require")]
        policy: String,
        #[command(flatten)]
        common: Common,
    },
    /// Search for units 1 + p^rho(X + Y sqrt m); successive minima of D.
    Reciprocal {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        rho: u32,
        #[arg(long, default_value_t = 1)]
        a_min: u64,
        #[arg(long)]
        a_max: u64,
        /// Emit every hit instead of successive minima.
        #[arg(long, default_value_t = false)]
        all_hits: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Flag fields with delta_p >= 1 for a huge prime (mod p^2 test).
    HugeP {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 5)]
        min_d: u64,
        #[arg(long)]
        max_d: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate cyclic cubic conductors with defining polynomials.
    CubicEnum {
        #[arg(long, default_value_t = 7)]
        min_f: u64,
        #[arg(long)]
        max_f: u64,
        /// Also export specs as JSONL for the oracle client.
        #[arg(long)]
        export: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// One-parameter totally real cubic family over N = 1 + a p^k.
    Washington {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        k_min: u32,
        #[arg(long)]
        k_max: u32,
        #[arg(long, default_value_t = 1)]
        a_min: u64,
        #[arg(long, default_value_t = 12)]
        a_max: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Classical Brauer-Siegel window extrema over a range.
    BsScan {
        #[arg(long)]
        min_d: u64,
        #[arg(long)]
        max_d: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Mean of C_v over a range, at the infinite place or a prime.
    Means {
        /// "infinity" or a prime p.
        #[arg(long)]
        place: String,
        #[arg(long, default_value_t = 5)]
        min_d: u64,
        #[arg(long)]
        max_d: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Single-field report.
    Field {
        #[arg(long, conflicts_with = "d")]
        m: Option<u64>,
        #[arg(long)]
        d: Option<u64>,
        #[arg(long)]
        p: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the decomposition path against recorded oracle results.
    OracleVerify {
        /// off, fixtures, or live.
        #[arg(long, default_value = "fixtures")]
        mode: String,
        #[arg(long, default_value = "fixtures/oracle.jsonl")]
        fixtures: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn print_errors(errors: &[FieldError]) {
    for e in errors {
        eprintln!("skipped {}: {}", e.at, e.message);
    }
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

pub fn cli_dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::ScanDelta {
            p,
            case,
            min_d,
            max_d,
            casramif_program,
            common,
        } => {
            let case = match case.as_str() {
                "unramified" => ScanCase::Unramified,
                "ramified" => ScanCase::Ramified,
                other => return Err(Error::Usage(format!("unknown case {other:?}"))),
            };
            let mut opts = common.opts();
            if casramif_program {
                opts.casramif = Casramif::Program;
            }
            let out = scan_delta_max(p, case, min_d, max_d, &opts, common.exec())?;
            print_errors(&out.errors);
            let mut records = Vec::new();
            for r in &out.records {
                println!("D={} delta={}", r.d, r.value);
                records.push(SinkRecord {
                    kind: "delta-max".into(),
                    p: Some(p),
                    d: Some(r.d.to_string()),
                    m: Some(r.m.to_string()),
                    value: Some(r.value as i64),
                    delta: Some(r.value),
                    ..SinkRecord::default()
                });
            }
            common.sink("delta-max", format!("{min_d}..{max_d}"), records)
        }
        Cmd::ScanVptor {
            p,
            min_d,
            max_d,
            common,
        } => {
            let out = scan_vptor_extrema(p, min_d, max_d, &common.opts(), common.exec())?;
            print_errors(&out.errors);
            let mut records = Vec::new();
            for r in &out.records {
                println!(
                    "D={} m={} vptor={} Ymin={:.8} Cp={}",
                    r.d,
                    r.m,
                    r.value,
                    r.gap.unwrap(),
                    f4(r.c_p.unwrap())
                );
                let (h, v_cl, v_w) = r.extras.unwrap();
                records.push(SinkRecord {
                    kind: "vptor-min".into(),
                    p: Some(p),
                    d: Some(r.d.to_string()),
                    m: Some(r.m.to_string()),
                    value: Some(r.value as i64),
                    vptor: Some(r.value),
                    v_cl: Some(v_cl),
                    v_w: Some(v_w),
                    c_p: r.c_p,
                    gap: r.gap,
                    h: Some(h.to_string()),
                    ..SinkRecord::default()
                });
            }
            common.sink("vptor-min", format!("{min_d}..{max_d}"), records)
        }
        Cmd::Family {
            a,
            p,
            variant,
            rho_min,
            rho_max,
            policy,
            common,
        } => {
            let params = FamilyParams {
                a,
                p,
                variant: match variant.as_str() {
                    "plus1" => FamilyVariant::Plus1,
                    "plus4" => FamilyVariant::Plus4,
                    other => return Err(Error::Usage(format!("unknown variant {other:?}"))),
                },
                rho_lo: rho_min,
                rho_hi: rho_max,
                policy: match policy.as_str() {
                    "require" => SquarefreePolicy::Require,
                    "allow-core" => SquarefreePolicy::AllowCore,
                    other => return Err(Error::Usage(format!("unknown policy {other:?}"))),
                },
            };
            let out = scan_family(&params, &common.opts(), common.exec())?;
            print_errors(&out.errors);
            let mut records = Vec::new();
            for r in &out.records {
                match (r.vptor, r.c_p) {
                    (Some(v), Some(cp)) => println!(
                        "p={} m={} rho={} vptor={} Cp={} vph={}",
                        p,
                        r.m,
                        r.rho,
                        v,
                        f4(cp),
                        r.v_ph.unwrap()
                    ),
                    _ => println!(
                        "p={} m={} rho={} delta={} v_w={} (vptor unavailable: {})",
                        p,
                        r.m,
                        r.rho,
                        r.delta,
                        r.v_w,
                        r.unavailable.as_deref().unwrap_or("?")
                    ),
                }
                let mut flags = Vec::new();
                if r.vptor.is_none() {
                    flags.push("delta-only");
                }
                if r.probably_squarefree {
                    flags.push("probably-squarefree");
                }
                if r.core_reduced {
                    flags.push("core-reduced");
                }
                records.push(SinkRecord {
                    kind: "family".into(),
                    p: Some(p),
                    d: Some(r.d.to_string()),
                    m: Some(r.m.to_string()),
                    value: Some(r.rho as i64),
                    vptor: r.vptor,
                    v_w: Some(r.v_w),
                    delta: Some(r.delta),
                    c_p: r.c_p,
                    flags: flags.join(";"),
                    ..SinkRecord::default()
                });
            }
            for ev in &out.events {
                println!("EVENT: {ev}");
            }
            common.sink("family", format!("rho={rho_min}..{rho_max}"), records)
        }
        Cmd::Reciprocal {
            p,
            rho,
            a_min,
            a_max,
            all_hits,
            common,
        } => {
            let out = reciprocal_search(
                p,
                rho,
                a_min,
                a_max,
                all_hits,
                &common.opts(),
                common.exec(),
            )?;
            print_errors(&out.errors);
            let mut records = Vec::new();
            for h in &out.hits {
                match (h.vptor, h.c_p) {
                    (Some(v), Some(cp)) => println!(
                        "D={} a={} b={} vptor={} vph={} Cp={}",
                        h.d,
                        h.a,
                        h.b,
                        v,
                        h.v_ph.unwrap(),
                        f4(cp)
                    ),
                    _ => println!("D={} a={} b={} delta_eta={}", h.d, h.a, h.b, h.delta_eta),
                }
                records.push(SinkRecord {
                    kind: "reciprocal".into(),
                    p: Some(p),
                    d: Some(h.d.to_string()),
                    m: Some(h.m.to_string()),
                    value: Some(h.a as i64),
                    vptor: h.vptor,
                    delta: Some(h.delta_eta),
                    c_p: h.c_p,
                    flags: if h.certified {
                        String::new()
                    } else {
                        "probably-squarefree".into()
                    },
                    ..SinkRecord::default()
                });
            }
            common.sink(
                "reciprocal",
                format!("a={a_min}..{a_max};rho={rho}"),
                records,
            )
        }
        Cmd::HugeP {
            p,
            min_d,
            max_d,
            common,
        } => {
            let out = huge_p_regulator_scan(p, min_d, max_d, common.exec())?;
            print_errors(&out.errors);
            let mut records = Vec::new();
            for r in &out.records {
                println!("D={}", r.d);
                records.push(SinkRecord {
                    kind: "huge-p".into(),
                    p: Some(p),
                    d: Some(r.d.to_string()),
                    m: Some(r.m.to_string()),
                    ..SinkRecord::default()
                });
            }
            common.sink("huge-p", format!("{min_d}..{max_d}"), records)
        }
        Cmd::CubicEnum {
            min_f,
            max_f,
            export,
            common,
        } => {
            let out = crate::cubic::enumerate_cyclic_cubic(min_f, max_f, common.exec())?;
            print_errors(&out.errors);
            let mut records = Vec::new();
            for s in &out.specs {
                println!("f={} a={} b={} P={}", s.f, s.a, s.b, s.poly_string());
                records.push(SinkRecord {
                    kind: "cubic".into(),
                    d: Some((s.f as u128 * s.f as u128).to_string()),
                    m: Some(s.f.to_string()),
                    value: Some(s.a),
                    flags: format!("b={}", s.b),
                    ..SinkRecord::default()
                });
            }
            if let Some(path) = export {
                let mut buf = String::new();
                for s in &out.specs {
                    buf.push_str(
                        &serde_json::to_string(s).map_err(|e| Error::Usage(e.to_string()))?,
                    );
                    buf.push('\n');
                }
                std::fs::write(&path, buf)?;
                eprintln!("exported {} specs to {}", out.specs.len(), path.display());
            }
            common.sink("cubic", format!("f={min_f}..{max_f}"), records)
        }
        Cmd::Washington {
            p,
            k_min,
            k_max,
            a_min,
            a_max,
            common,
        } => {
            let recs = crate::cubic::washington_family(p, k_min, k_max, a_min, a_max)?;
            let mut records = Vec::new();
            for r in &recs {
                println!(
                    "p={} a={} k={} N={} P=x^3+({})*x^2+({})*x+({})",
                    p, r.a, r.k, r.n, r.poly[0], r.poly[1], r.poly[2]
                );
                records.push(SinkRecord {
                    kind: "washington".into(),
                    p: Some(p),
                    m: Some(r.n.to_string()),
                    value: Some(r.k as i64),
                    ..SinkRecord::default()
                });
            }
            common.sink(
                "washington",
                format!("k={k_min}..{k_max};a={a_min}..{a_max}"),
                records,
            )
        }
        Cmd::BsScan {
            min_d,
            max_d,
            common,
        } => {
            let (min, max, n, errors) =
                bs_window(min_d, max_d, common.class_ceiling, common.exec())?;
            print_errors(&errors);
            println!("fields={n} BSmin={min:.6} BSmax={max:.6}");
            common.sink(
                "arch",
                format!("{min_d}..{max_d}"),
                vec![SinkRecord {
                    kind: "arch".into(),
                    c_p: Some(min),
                    gap: Some(max),
                    flags: format!("fields={n}"),
                    ..SinkRecord::default()
                }],
            )
        }
        Cmd::Means {
            place,
            min_d,
            max_d,
            common,
        } => {
            let pl = if place == "infinity" {
                Place::Infinite
            } else {
                Place::Finite(place.parse().map_err(|_| {
                    Error::Usage(format!(
                        "place must be a prime or 'infinity', got {place:?}"
                    ))
                })?)
            };
            let (r, errors) = range_mean(pl, min_d, max_d, &common.opts(), common.exec())?;
            print_errors(&errors);
            println!("M={:.8} fields={}", r.mean, r.count);
            common.sink(
                "mean",
                format!("{min_d}..{max_d}"),
                vec![SinkRecord {
                    kind: "mean".into(),
                    p: match pl {
                        Place::Finite(p) => Some(p),
                        Place::Infinite => None,
                    },
                    c_p: Some(r.mean),
                    flags: format!("fields={}", r.count),
                    ..SinkRecord::default()
                }],
            )
        }
        Cmd::Field { m, d, p, common } => {
            let id = match (m, d) {
                (Some(m), None) => crate::quadfield::QuadFieldId::from_m(m)?,
                (None, Some(d)) => crate::quadfield::QuadFieldId::from_d(d)?,
                _ => return Err(Error::Usage("give exactly one of --m or --d".into())),
            };
            let r = vptor(id.m, p, &common.opts())?;
            let tag = if r.vptor == 0 { " (p-rational)" } else { "" };
            println!(
                "D={} m={} p={} h={} v_cl={} delta={} v_w={} vptor={}{} Cp={} Ymin={:.8}",
                r.id.d,
                r.id.m,
                p,
                r.h,
                r.v_cl,
                r.delta,
                r.v_w,
                r.vptor,
                tag,
                f4(r.c_p),
                r.gap
            );
            common.sink(
                "field",
                format!("m={}", id.m),
                vec![SinkRecord {
                    kind: "field".into(),
                    p: Some(p),
                    d: Some(r.id.d.to_string()),
                    m: Some(r.id.m.to_string()),
                    vptor: Some(r.vptor),
                    v_cl: Some(r.v_cl),
                    v_w: Some(r.v_w),
                    delta: Some(r.delta),
                    c_p: Some(r.c_p),
                    gap: Some(r.gap),
                    h: Some(r.h.to_string()),
                    ..SinkRecord::default()
                }],
            )
        }
        Cmd::OracleVerify {
            mode,
            fixtures,
            common,
        } => {
            let mode: OracleMode = mode.parse()?;
            let client = match mode {
                OracleMode::Fixtures => OracleClient::fixtures(&fixtures)?,
                OracleMode::Live => OracleClient::live_from_env()?,
                OracleMode::Off => {
                    return Err(Error::Usage("oracle mode off has nothing to verify".into()))
                }
            };
            let report = oracle_verify(&client, &common.opts());
            println!(
                "checked={} parity-checked={} skipped={} unavailable={} disagreements={}",
                report.checked,
                report.parity_checked,
                report.skipped.len(),
                report.unavailable.len(),
                report.disagreements.len()
            );
            for s in &report.skipped {
                eprintln!("skipped: {s}");
            }
            for u in &report.unavailable {
                eprintln!("unavailable: {u}");
            }
            for d in &report.disagreements {
                println!("DISAGREEMENT: {d}");
            }
            if !report.disagreements.is_empty() {
                return Err(Error::Disagreement(format!(
                    "{} field(s) disagree",
                    report.disagreements.len()
                )));
            }
            if !report.unavailable.is_empty() {
                return Err(Error::OracleUnavailable(format!(
                    "{} field(s) could not be compared",
                    report.unavailable.len()
                )));
            }
            Ok(())
        }
    }
}

/// Parse argv and run; clap usage errors map to exit code 1.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // keep clap's rendered help/usage text
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match cli_dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
