//! The complex-place comparator: classical Brauer-Siegel quotients
//! BS_K = log(h R)/log(sqrt D), the normalized torsion analogue
//! h R / sqrt D at the infinite place, and range means M_v for either
//! the infinite place or a finite prime.

use crate::error::{Error, Result};
use crate::exec::{map_fold, ExecCfg, FieldError, Kahan};
use crate::quadfield::{bound_check_h, class_number, discriminant_valid, unit_regulator};
use crate::torsion::{vptor, TorsionOpts};

/// One field's archimedean bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchRecord {
    pub d: u64,
    pub h: u64,
    pub regulator: f64,
    /// h R / sqrt(D), the normalized residue analogue.
    pub t_inf: f64,
    /// log(h R) / log(sqrt D).
    pub bs: f64,
    /// bs - 1 = log(t_inf)/log(sqrt D).
    pub bs_tilde: f64,
}

/// Compute the archimedean record for one field, asserting the two
/// classical bounds h <= sqrt(D)/2 and h R / sqrt(D) <= log(sqrt D)/2.
pub fn arch_record(m: u64, class_ceiling: u64) -> Result<ArchRecord> {
    let d = if m % 4 == 1 { m } else { 4 * m };
    let h = class_number(d, class_ceiling)?;
    let unit = unit_regulator(m)?;
    let logsd = (d as f64).ln() / 2.0;
    let t_inf = h as f64 * unit.regulator / (d as f64).sqrt();
    if !bound_check_h(d, h) {
        return Err(Error::Integrity(format!(
            "h={h} violates h <= sqrt(D)/2 at D={d}"
        )));
    }
    if t_inf > logsd / 2.0 + 1e-9 {
        return Err(Error::Integrity(format!(
            "h R / sqrt(D) = {t_inf} exceeds log(sqrt D)/2 at D={d}"
        )));
    }
    let bs = (h as f64 * unit.regulator).ln() / logsd;
    Ok(ArchRecord {
        d,
        h,
        regulator: unit.regulator,
        t_inf,
        bs,
        bs_tilde: bs - 1.0,
    })
}

/// Place selector for range means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Place {
    Infinite,
    Finite(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanResult {
    pub mean: f64,
    pub count: u64,
}

/// Arithmetic mean of C_v(K) over all fundamental discriminants in
/// [d_lo, d_hi]: bs_tilde at the infinite place, C_p at a finite prime
/// (p-rational fields contribute 0, nothing is skipped). Compensated
/// summation keeps long ranges reproducible to full float accuracy.
pub fn range_mean(
    place: Place,
    d_lo: u64,
    d_hi: u64,
    opts: &TorsionOpts,
    cfg: ExecCfg,
) -> Result<(MeanResult, Vec<FieldError>)> {
    if let Place::Finite(p) = place {
        if !crate::intbase::is_prime(p) {
            return Err(Error::Usage(format!("{p} is not prime")));
        }
    }
    let work = |d: u64| -> Result<Option<f64>> {
        if !discriminant_valid(d) {
            return Ok(None);
        }
        let m = if d % 4 == 0 { d / 4 } else { d };
        match place {
            Place::Infinite => Ok(Some(arch_record(m, opts.class_ceiling)?.bs_tilde)),
            Place::Finite(p) => {
                if p == 2 && m == 2 {
                    return Ok(None);
                }
                Ok(Some(vptor(m, p, opts)?.c_p))
            }
        }
    };
    let ((sum, count), errors) = map_fold(
        d_lo,
        d_hi,
        cfg,
        work,
        (Kahan::default(), 0u64),
        |(mut k, n), _, v| {
            k.add(v);
            (k, n + 1)
        },
    )?;
    if count == 0 {
        return Err(Error::Usage(format!(
            "no fundamental discriminants in [{d_lo}, {d_hi}]"
        )));
    }
    Ok((
        MeanResult {
            mean: sum.value() / count as f64,
            count,
        },
        errors,
    ))
}

/// Window extrema of BS over a discriminant range.
pub fn bs_window(
    d_lo: u64,
    d_hi: u64,
    class_ceiling: u64,
    cfg: ExecCfg,
) -> Result<(f64, f64, u64, Vec<FieldError>)> {
    let work = |d: u64| -> Result<Option<f64>> {
        if !discriminant_valid(d) {
            return Ok(None);
        }
        let m = if d % 4 == 0 { d / 4 } else { d };
        Ok(Some(arch_record(m, class_ceiling)?.bs))
    };
    let ((min, max, n), errors) = map_fold(
        d_lo,
        d_hi,
        cfg,
        work,
        (f64::INFINITY, f64::NEG_INFINITY, 0u64),
        |(lo, hi, n), _, bs| (lo.min(bs), hi.max(bs), n + 1),
    )?;
    if n == 0 {
        return Err(Error::Usage(format!(
            "no fundamental discriminants in [{d_lo}, {d_hi}]"
        )));
    }
    Ok((min, max, n, errors))
}
