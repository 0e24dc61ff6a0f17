//! Adaptive Gauss–Kronrod quadrature.
//!
//! A 21-point Kronrod rule drives a globally adaptive scheme: the interval
//! with the largest error estimate is bisected until the summed estimate
//! meets the requested tolerance. Integrable endpoint singularities are
//! handled by the refinement itself (the rule never evaluates interval
//! endpoints); half-line integrals go through the map t = x/(1-x).

use crate::error::{Error, Result};

/// Strategy for integrals over `[lo, +inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImproperStrategy {
    /// Map the half line onto (0, 1) with t = lo + x/(1-x) and integrate the
    /// transformed proper integral.
    TransformToUnit,
    /// Truncate at the point where the integrand is guaranteed below the
    /// given threshold and integrate the finite piece.
    Cutoff { threshold: f64 },
}

/// Tolerances and budget for adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum bisection depth of any subinterval.
    pub max_depth: u32,
    pub improper: ImproperStrategy,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 50,
            improper: ImproperStrategy::TransformToUnit,
        }
    }
}

impl QuadratureConfig {
    /// Same strategy and depth, scaled tolerances.
    pub fn with_tol(tol: f64) -> Self {
        QuadratureConfig {
            abs_tol: tol,
            rel_tol: tol,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Parameter(format!(
                "quadrature tolerances must be positive (abs {}, rel {})",
                self.abs_tol, self.rel_tol
            )));
        }
        Ok(())
    }
}

// 21-point Kronrod nodes/weights with the embedded 10-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK21: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One 21-point Kronrod pass over `[a, b]`; returns (value, error estimate).
fn qk21<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let eval = |x: f64| -> Result<f64> {
        let v = f(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                label: "integrand".into(),
                at: x,
                value: v,
            })
        }
    };

    let f_center = eval(center)?;
    let mut res_gauss = 0.0;
    let mut res_kronrod = f_center * WGK21[10];
    let mut res_abs = res_kronrod.abs();
    let mut fv = [0.0f64; 21];
    fv[20] = f_center;

    for (j, xk) in XGK21.iter().take(10).enumerate() {
        let dx = half * xk;
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv[j] = f1;
        fv[10 + j] = f2;
        let fsum = f1 + f2;
        res_kronrod += WGK21[j] * fsum;
        res_abs += WGK21[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG10[j / 2] * fsum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK21[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK21[j] * ((fv[j] - mean).abs() + (fv[10 + j] - mean).abs());
    }

    let value = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0f64.min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: u32,
}

/// Integrate a fallible integrand over `[lo, hi]`.
///
/// The integrand may be unbounded at the endpoints as long as the integral
/// converges; the rule never samples `lo` or `hi` themselves. When plain
/// refinement stalls against the depth cap at an unbounded endpoint, the
/// endpoint is peeled off in geometric shells and the shell sums are
/// Aitken-extrapolated. Failure to reach the tolerance returns
/// [`Error::QuadratureNonConvergence`] carrying the best estimate.
pub fn integrate<F: Fn(f64) -> Result<f64>>(
    f: F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    cfg.check()?;
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return Ok(-integrate(f, hi, lo, cfg)?);
    }
    match adaptive(&f, lo, hi, cfg) {
        Ok(v) => Ok(v),
        Err(Error::QuadratureNonConvergence { estimate, error_bound }) => {
            endpoint_extrapolation(&f, lo, hi, cfg).map_err(|_| {
                Error::QuadratureNonConvergence {
                    estimate,
                    error_bound,
                }
            })
        }
        Err(e) => Err(e),
    }
}

fn adaptive<F: Fn(f64) -> Result<f64>>(
    f: &F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let (v0, e0) = qk21(&f, lo, hi)?;
    let mut intervals = vec![Interval {
        a: lo,
        b: hi,
        value: v0,
        err: e0,
        depth: 0,
    }];
    let mut total_value = v0;
    let mut total_err = e0;

    // generous budget; the depth cap is what actually stops runaway cases
    let max_intervals = 20_000usize;

    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total_value.abs());
        if total_err <= tol {
            return Ok(total_value);
        }

        // split the interval with the largest error that still may be split
        let mut worst: Option<usize> = None;
        let mut worst_err = 0.0;
        for (i, iv) in intervals.iter().enumerate() {
            if iv.depth < cfg.max_depth && iv.err > worst_err {
                worst_err = iv.err;
                worst = Some(i);
            }
        }
        let Some(i) = worst else {
            return Err(Error::QuadratureNonConvergence {
                estimate: total_value,
                error_bound: total_err,
            });
        };
        if intervals.len() >= max_intervals {
            return Err(Error::QuadratureNonConvergence {
                estimate: total_value,
                error_bound: total_err,
            });
        }

        let Interval {
            a, b, value, err, depth,
        } = intervals.swap_remove(i);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval at floating-point resolution; keep it as-is
            intervals.push(Interval {
                a,
                b,
                value,
                err,
                depth: cfg.max_depth,
            });
            continue;
        }
        let (vl, el) = qk21(&f, a, mid)?;
        let (vr, er) = qk21(&f, mid, b)?;
        total_value += vl + vr - value;
        total_err += el + er - err;
        intervals.push(Interval {
            a,
            b: mid,
            value: vl,
            err: el,
            depth: depth + 1,
        });
        intervals.push(Interval {
            a: mid,
            b,
            value: vr,
            err: er,
            depth: depth + 1,
        });
    }
}

/// Peel geometric shells off an endpoint where the integrand is unbounded
/// and Aitken-extrapolate the partial sums. For an algebraic singularity
/// f ~ C·(t-lo)^(p-1) the shell sums form a geometric sequence, so the
/// extrapolation converges in a handful of shells.
fn endpoint_extrapolation<F: Fn(f64) -> Result<f64>>(
    f: &F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let width = hi - lo;
    let probe = |t: f64| f(t).map(|v| v.abs()).unwrap_or(f64::INFINITY);
    let near_lo = probe(lo + 1e-9 * width);
    let near_hi = probe(hi - 1e-9 * width);
    let mid = probe(lo + 0.5 * width);
    let scale = mid.max(1.0);

    if near_lo > 1e3 * scale && near_lo >= near_hi {
        return shell_extrapolate(&|t| f(t), lo, hi, cfg);
    }
    if near_hi > 1e3 * scale {
        // reflect so the singular endpoint sits at the left
        return shell_extrapolate(&|t| f(lo + hi - t), lo, hi, cfg);
    }
    Err(Error::QuadratureNonConvergence {
        estimate: f64::NAN,
        error_bound: f64::INFINITY,
    })
}

fn shell_extrapolate<F: Fn(f64) -> Result<f64>>(
    f: &F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let width = hi - lo;
    let mut eps = 1e-4 * width;
    let mut sum = adaptive(f, lo + eps, hi, cfg)?;
    let tol = cfg.abs_tol.max(cfg.rel_tol * sum.abs());

    let mut partials = vec![sum];
    let mut best = sum;
    for _ in 0..24 {
        let next_eps = eps / 4.0;
        sum += adaptive(f, lo + next_eps, lo + eps, cfg)?;
        eps = next_eps;
        partials.push(sum);
        let n = partials.len();
        if n >= 3 {
            let (x0, x1, x2) = (partials[n - 3], partials[n - 2], partials[n - 1]);
            let d0 = x1 - x0;
            let d1 = x2 - x1;
            let denom = d1 - d0;
            let accel = if denom.abs() > f64::EPSILON * x2.abs().max(1.0) {
                x2 - d1 * d1 / denom
            } else {
                x2
            };
            let settled = (accel - best).abs();
            best = accel;
            if settled < tol && d1.abs() < 1e3 * tol {
                return Ok(best);
            }
        }
    }
    Err(Error::QuadratureNonConvergence {
        estimate: best,
        error_bound: (best - sum).abs(),
    })
}

/// Convenience wrapper for infallible integrands.
pub fn integrate_fn<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    integrate(|t| Ok(f(t)), lo, hi, cfg)
}

/// Integrate over the half line `[lo, +inf)`.
pub fn integrate_to_inf<F: Fn(f64) -> Result<f64>>(
    f: F,
    lo: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    match cfg.improper {
        ImproperStrategy::TransformToUnit => {
            // t = lo + x/(1-x), dt = dx/(1-x)^2
            integrate(
                |x| {
                    let om = 1.0 - x;
                    let t = lo + x / om;
                    Ok(f(t)? / (om * om))
                },
                0.0,
                1.0,
                cfg,
            )
        }
        ImproperStrategy::Cutoff { threshold } => {
            let mut hi = lo.max(1.0);
            let mut steps = 0;
            while f(hi)?.abs() >= threshold && steps < 64 {
                hi *= 2.0;
                steps += 1;
            }
            integrate(f, lo, hi, cfg)
        }
    }
}
