//! External-CAS oracle client: generated ray-class scripts with
//! automatic modulus escalation (live mode), or committed result files
//! (fixtures mode). The direct ray-class route is the independent check
//! of the decomposition path.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Condvar, Mutex, OnceLock};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::cubic::{specs_for_conductor, washington_poly};
use crate::error::{Error, Result};
use crate::intbase::{padic_valuation_big, squarefree_core, Valuation};
use crate::torsion::{vptor, TorsionOpts};

/// Environment variable naming the CAS executable for live mode.
pub const CAS_ENV: &str = "PTOR_CAS";

/// One recorded (or freshly computed) direct ray-class result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Field identifier: "quad:<m>", "cubic:<f>", "washington:<N>",
    /// or "biquad:<m1>:<m2>".
    pub key: String,
    pub p: u64,
    pub vptor: u32,
    /// Cyclic orders of the torsion part, largest first, when recorded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<Vec<u64>>,
    pub provenance: String,
}

impl OracleResult {
    /// Structure entries must be p-powers whose valuations sum to vptor.
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = &self.structure {
            let mut total = 0u32;
            for &c in s {
                match padic_valuation_big(&BigUint::from(c), self.p) {
                    Valuation::Finite(v)
                        if v >= 1 && BigUint::from(self.p).pow(v) == BigUint::from(c) =>
                    {
                        total += v;
                    }
                    _ => {
                        return Err(Error::Integrity(format!(
                            "structure entry {c} of {} is not a {}-power",
                            self.key, self.p
                        )));
                    }
                }
            }
            if total != self.vptor {
                return Err(Error::Integrity(format!(
                    "structure of {} sums to {total}, vptor is {}",
                    self.key, self.vptor
                )));
            }
        }
        Ok(())
    }
}

/// Defining polynomial for a field key, as the CAS sees it.
fn poly_for_key(key: &str) -> Result<String> {
    if let Some(m) = key.strip_prefix("quad:") {
        let m: BigUint = m
            .parse()
            .map_err(|_| Error::Usage(format!("bad quadratic key {key:?}")))?;
        return Ok(format!("x^2-{m}"));
    }
    if let Some(f) = key.strip_prefix("cubic:") {
        let f: u64 = f
            .parse()
            .map_err(|_| Error::Usage(format!("bad cubic key {key:?}")))?;
        let spec = specs_for_conductor(f)?.remove(0);
        return Ok(format!(
            "x^3+({})*x^2+({})*x+({})",
            spec.c2, spec.c1, spec.c0
        ));
    }
    if let Some(n) = key.strip_prefix("washington:") {
        let n: num_bigint::BigInt = n
            .parse()
            .map_err(|_| Error::Usage(format!("bad family key {key:?}")))?;
        let poly = washington_poly(&n)?;
        return Ok(format!(
            "x^3+({})*x^2+({})*x+({})",
            poly[0], poly[1], poly[2]
        ));
    }
    if let Some(rest) = key.strip_prefix("biquad:") {
        let (m1, m2) = rest
            .split_once(':')
            .ok_or_else(|| Error::Usage(format!("bad biquadratic key {key:?}")))?;
        return Ok(format!("component(polcompositum(x^2-{m1},x^2-{m2}),1)"));
    }
    Err(Error::Usage(format!("unknown key scheme {key:?}")))
}

/// Deterministic ray-class script for (key, p, n): byte-identical for
/// identical inputs. Prints "vptor=<v>" and "structure=[...]" lines.
pub fn generate_script(key: &str, p: u64, n: u32) -> Result<String> {
    let poly = poly_for_key(key)?;
    Ok(format!(
        "{{P={poly};p={p};n={n};K=bnfinit(P,1);Kpn=bnrinit(K,p^n);\n\
         C5=component(Kpn,5);Hpn0=component(C5,1);Hpn=component(C5,2);\n\
         Hpn1=component(Hpn,1);vptor=valuation(Hpn0/Hpn1,p);\n\
         print(\"vptor=\",vptor);\n\
         e=component(matsize(Hpn),2);print1(\"structure=[\");\n\
         for(k=2,e,c=component(Hpn,k);if(Mod(c,p)==0,print1(p^valuation(c,p),\",\")));\n\
         print(\"]\")}}\n"
    ))
}

/// Counting semaphore bounding concurrent external CAS processes.
struct Gate {
    permits: Mutex<usize>,
    cv: Condvar,
}

static GATE: OnceLock<Gate> = OnceLock::new();
const DEFAULT_CAS_WORKERS: usize = 2;

fn gate() -> &'static Gate {
    GATE.get_or_init(|| Gate {
        permits: Mutex::new(DEFAULT_CAS_WORKERS),
        cv: Condvar::new(),
    })
}

struct GateGuard;

impl GateGuard {
    fn acquire() -> GateGuard {
        let g = gate();
        let mut p = g.permits.lock().unwrap();
        while *p == 0 {
            p = g.cv.wait(p).unwrap();
        }
        *p -= 1;
        GateGuard
    }
}

impl Drop for GateGuard {
    fn drop(&mut self) {
        let g = gate();
        *g.permits.lock().unwrap() += 1;
        g.cv.notify_one();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Off,
    Fixtures,
    Live,
}

impl std::str::FromStr for OracleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(OracleMode::Off),
            "fixtures" => Ok(OracleMode::Fixtures),
            "live" => Ok(OracleMode::Live),
            other => Err(Error::Usage(format!("unknown oracle mode {other:?}"))),
        }
    }
}

#[derive(Debug)]
pub struct OracleClient {
    mode: OracleMode,
    fixtures: HashMap<(String, u64), OracleResult>,
    cas_bin: Option<PathBuf>,
    max_n: u32,
}

/// Parsed stdout of one CAS run.
#[derive(Debug)]
struct RunOutput {
    vptor: u32,
    structure: Vec<u64>,
}

impl OracleClient {
    pub fn off() -> Self {
        OracleClient {
            mode: OracleMode::Off,
            fixtures: HashMap::new(),
            cas_bin: None,
            max_n: 64,
        }
    }

    /// Fixtures mode from a committed JSONL file of results.
    pub fn fixtures(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::OracleUnavailable(format!("cannot read fixtures {}: {e}", path.display()))
        })?;
        let mut fixtures = HashMap::new();
        for line in text.lines() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let r: OracleResult = serde_json::from_str(line)
                .map_err(|e| Error::OracleUnavailable(format!("bad fixture line: {e}")))?;
            r.validate()?;
            fixtures.insert((r.key.clone(), r.p), r);
        }
        Ok(OracleClient {
            mode: OracleMode::Fixtures,
            fixtures,
            cas_bin: None,
            max_n: 64,
        })
    }

    /// Live mode using the executable named by the PTOR_CAS variable.
    pub fn live_from_env() -> Result<Self> {
        let bin = std::env::var_os(CAS_ENV).ok_or_else(|| {
            Error::OracleUnavailable(format!("set {CAS_ENV} to the CAS executable for live mode"))
        })?;
        Ok(OracleClient {
            mode: OracleMode::Live,
            fixtures: HashMap::new(),
            cas_bin: Some(PathBuf::from(bin)),
            max_n: 64,
        })
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn fixture_entries(&self) -> impl Iterator<Item = &OracleResult> {
        self.fixtures.values()
    }

    /// Direct ray-class vptor for a field. In live mode the modulus
    /// exponent starts at the hint (or 2 / 3 by parity of p) and grows
    /// until the largest torsion exponent sits strictly below n - 2.
    pub fn query(&self, key: &str, p: u64, n_hint: Option<u32>) -> Result<OracleResult> {
        match self.mode {
            OracleMode::Off => Err(Error::OracleUnavailable("oracle mode is off".into())),
            OracleMode::Fixtures => self
                .fixtures
                .get(&(key.to_string(), p))
                .cloned()
                .ok_or_else(|| Error::OracleUnavailable(format!("no fixture for {key} at p={p}"))),
            OracleMode::Live => {
                let mut n = n_hint.unwrap_or(if p == 2 { 3 } else { 2 });
                loop {
                    let out = self.run_script(key, p, n)?;
                    let max_exp = out
                        .structure
                        .iter()
                        .map(|&c| match padic_valuation_big(&BigUint::from(c), p) {
                            Valuation::Finite(v) => v,
                            Valuation::Infinite => 0,
                        })
                        .max()
                        .unwrap_or(0);
                    if max_exp + 2 < n {
                        return Ok(OracleResult {
                            key: key.to_string(),
                            p,
                            vptor: out.vptor,
                            structure: Some(out.structure),
                            provenance: format!(
                                "live:{}",
                                self.cas_bin.as_ref().unwrap().display()
                            ),
                        });
                    }
                    if n >= self.max_n {
                        return Err(Error::OracleUnavailable(format!(
                            "modulus escalation ceiling {} reached for {key}",
                            self.max_n
                        )));
                    }
                    n = (n + 2).min(self.max_n);
                }
            }
        }
    }

    fn run_script(&self, key: &str, p: u64, n: u32) -> Result<RunOutput> {
        let bin = self.cas_bin.as_ref().unwrap();
        let script = generate_script(key, p, n)?;
        let mut tmp = tempfile_in_env()?;
        tmp.write_all(script.as_bytes())?;
        let path = tmp.into_temp_path();
        let _slot = GateGuard::acquire();
        let out = Command::new(bin)
            .arg("-q")
            .arg("-f")
            .arg(&*path)
            .output()
            .map_err(|e| Error::OracleUnavailable(format!("cannot run {}: {e}", bin.display())))?;
        if !out.status.success() {
            return Err(Error::OracleUnavailable(format!(
                "CAS exited with {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr)
            )));
        }
        parse_run_output(&String::from_utf8_lossy(&out.stdout))
    }
}

fn tempfile_in_env() -> Result<tempfile_shim::NamedTemp> {
    tempfile_shim::NamedTemp::new()
}

/// Minimal named-tempfile support so the runtime crate does not depend
/// on the dev-only tempfile crate.
mod tempfile_shim {
    use std::fs::{self, File};
    use std::io::{self, Write};
    use std::path::{Path, PathBuf};
    use std::sync::atomic::{AtomicU64, Ordering};

    static SEQ: AtomicU64 = AtomicU64::new(0);

    pub struct NamedTemp {
        file: File,
        path: PathBuf,
    }

    pub struct TempPath(PathBuf);

    impl NamedTemp {
        pub fn new() -> crate::error::Result<NamedTemp> {
            let dir = std::env::temp_dir();
            let path = dir.join(format!(
                "ptor-oracle-{}-{}.gp",
                std::process::id(),
                SEQ.fetch_add(1, Ordering::Relaxed)
            ));
            let file = File::create(&path)?;
            Ok(NamedTemp { file, path })
        }

        pub fn write_all(&mut self, data: &[u8]) -> io::Result<()> {
            self.file.write_all(data)?;
            self.file.flush()
        }

        pub fn into_temp_path(self) -> TempPath {
            TempPath(self.path)
        }
    }

    impl std::ops::Deref for TempPath {
        type Target = Path;
        fn deref(&self) -> &Path {
            &self.0
        }
    }

    impl Drop for TempPath {
        fn drop(&mut self) {
            let _ = fs::remove_file(&self.0);
        }
    }
}

fn parse_run_output(stdout: &str) -> Result<RunOutput> {
    let mut vptor = None;
    let mut structure = Vec::new();
    for line in stdout.lines() {
        let line = line.trim();
        if let Some(v) = line.strip_prefix("vptor=") {
            vptor = Some(v.trim().parse::<u32>().map_err(|_| {
                Error::OracleUnavailable(format!("unparsable vptor line {line:?}"))
            })?);
        } else if let Some(s) = line.strip_prefix("structure=[") {
            let s = s.trim_end_matches(']');
            for tok in s.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                structure.push(tok.parse::<u64>().map_err(|_| {
                    Error::OracleUnavailable(format!("unparsable structure entry {tok:?}"))
                })?);
            }
        }
    }
    let vptor =
        vptor.ok_or_else(|| Error::OracleUnavailable("no vptor line in CAS output".into()))?;
    Ok(RunOutput { vptor, structure })
}

/// Native-versus-oracle comparison report. Empty disagreement list with
/// nothing unavailable means pass.
#[derive(Debug, Default)]
pub struct VerifyReport {
    pub checked: usize,
    pub parity_checked: usize,
    pub disagreements: Vec<String>,
    pub unavailable: Vec<String>,
    pub skipped: Vec<String>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.disagreements.is_empty() && self.unavailable.is_empty()
    }
}

/// Run the decomposition path against every oracle entry it can reach.
/// Quadratic keys are recomputed natively; biquadratic entries check
/// the subfield additivity v(K) = v1 + v2 + v3; cubic and one-parameter
/// family entries get the parity law (vptor even when p = 2 mod 3).
pub fn oracle_verify(client: &OracleClient, opts: &TorsionOpts) -> VerifyReport {
    let mut report = VerifyReport::default();
    let mut entries: Vec<&OracleResult> = client.fixture_entries().collect();
    entries.sort_by(|a, b| (&a.key, a.p).cmp(&(&b.key, b.p)));
    for r in entries {
        if let Err(e) = r.validate() {
            report.disagreements.push(format!("{}: {e}", r.key));
            continue;
        }
        if let Some(mstr) = r.key.strip_prefix("quad:") {
            let Ok(m) = mstr.parse::<u64>() else {
                report
                    .skipped
                    .push(format!("{}: radicand beyond native range", r.key));
                continue;
            };
            match vptor(m, r.p, opts) {
                Ok(native) if native.vptor == r.vptor => report.checked += 1,
                Ok(native) => report.disagreements.push(format!(
                    "quad m={m} p={}: native {} vs oracle {}",
                    r.p, native.vptor, r.vptor
                )),
                Err(Error::Capacity(msg)) => {
                    report.skipped.push(format!("quad m={m} p={}: {msg}", r.p))
                }
                Err(e) => report
                    .unavailable
                    .push(format!("quad m={m} p={}: {e}", r.p)),
            }
            continue;
        }
        if let Some(rest) = r.key.strip_prefix("biquad:") {
            let parts: Option<(u64, u64)> = rest
                .split_once(':')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
            let Some((m1, m2)) = parts else {
                report.unavailable.push(format!("{}: malformed key", r.key));
                continue;
            };
            let m3 = {
                let split = squarefree_core(&(BigUint::from(m1) * m2));
                match u64::try_from(&split.core) {
                    Ok(v) => v,
                    Err(_) => {
                        report
                            .skipped
                            .push(format!("{}: third subfield too large", r.key));
                        continue;
                    }
                }
            };
            let native: Result<u32> = (|| {
                Ok(vptor(m1, r.p, opts)?.vptor
                    + vptor(m2, r.p, opts)?.vptor
                    + vptor(m3, r.p, opts)?.vptor)
            })();
            match native {
                Ok(sum) if sum == r.vptor => report.checked += 1,
                Ok(sum) => report.disagreements.push(format!(
                    "biquad ({m1},{m2}) p={}: subfield sum {sum} vs oracle {}",
                    r.p, r.vptor
                )),
                Err(e) => report.unavailable.push(format!("{}: {e}", r.key)),
            }
            continue;
        }
        // cubic and one-parameter family entries: no native path; apply
        // the Galois parity law where it binds
        if r.p % 3 == 2 && r.vptor % 2 != 0 {
            report.disagreements.push(format!(
                "{} p={}: vptor {} must be even for p = 2 (mod 3)",
                r.key, r.p, r.vptor
            ));
        } else {
            report.parity_checked += 1;
        }
    }
    report
}
