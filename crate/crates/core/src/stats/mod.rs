//! Least-squares trend fitting and Pearson correlation with two-sided
//! Student-t significance.

pub mod special;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope.
    pub std_err: f64,
    pub t_stat: f64,
    pub df: u64,
    pub p_value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub t_stat: f64,
    pub df: u64,
    pub p_value: f64,
    pub n: usize,
}

/// Two-sided tail probability `P(|T| >= |t|)` of Student's t with `df`
/// degrees of freedom, `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_sf(t: f64, df: u64) -> Result<f64> {
    if df < 1 {
        return Err(Error::Input("degrees of freedom must be at least 1".into()));
    }
    if t.is_nan() {
        return Err(Error::Input("t statistic is NaN".into()));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let nu = df as f64;
    let t2 = t * t;
    let x = nu / (nu + t2);
    let y = t2 / (nu + t2);
    Ok(special::inc_beta_with_complement(x, y, nu / 2.0, 0.5).clamp(0.0, 1.0))
}

/// Centered sums shared by the trend and correlation routines.
struct Moments {
    n: usize,
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl Moments {
    fn new(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::Input(format!(
                "series lengths differ: {} vs {}",
                xs.len(),
                ys.len()
            )));
        }
        let n = xs.len();
        if n < 3 {
            return Err(Error::Input(format!("need at least 3 points, got {n}")));
        }
        if xs.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::Input("series contain non-finite values".into()));
        }
        let mean_x = xs.iter().sum::<f64>() / n as f64;
        let mean_y = ys.iter().sum::<f64>() / n as f64;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(ys) {
            let dx = x - mean_x;
            let dy = y - mean_y;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        Ok(Self {
            n,
            mean_x,
            mean_y,
            sxx,
            syy,
            sxy,
        })
    }

    fn r(&self) -> f64 {
        (self.sxy / (self.sxx * self.syy).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Ordinary least squares `y = slope·x + intercept` with a t-test of a
/// nonzero slope at `n - 2` degrees of freedom. Constant `ys` give a flat
/// fit with `p = 1`.
pub fn linear_trend(xs: &[f64], ys: &[f64]) -> Result<TrendResult> {
    let m = Moments::new(xs, ys)?;
    if m.sxx == 0.0 {
        return Err(Error::Input("x values have zero variance".into()));
    }
    let df = (m.n - 2) as u64;
    if m.syy == 0.0 {
        return Ok(TrendResult {
            slope: 0.0,
            intercept: m.mean_y,
            r_squared: 0.0,
            std_err: 0.0,
            t_stat: 0.0,
            df,
            p_value: 1.0,
            n: m.n,
        });
    }

    let slope = m.sxy / m.sxx;
    let intercept = m.mean_y - slope * m.mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let e = (y - m.mean_y) - slope * (x - m.mean_x);
            e * e
        })
        .sum();
    let r = m.r();
    let std_err = (ss_res / df as f64 / m.sxx).sqrt();
    let t_stat = if std_err == 0.0 {
        f64::INFINITY.copysign(slope)
    } else {
        slope / std_err
    };
    Ok(TrendResult {
        slope,
        intercept,
        r_squared: r * r,
        std_err,
        t_stat,
        df,
        p_value: student_t_sf(t_stat, df)?,
        n: m.n,
    })
}

/// Sample Pearson correlation with a two-sided t-test at `n - 2` degrees
/// of freedom.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult> {
    let m = Moments::new(xs, ys)?;
    if m.sxx == 0.0 || m.syy == 0.0 {
        return Err(Error::Input(
            "correlation needs nonzero variance in both series".into(),
        ));
    }
    let df = (m.n - 2) as u64;
    let r = m.r();
    let one_minus_r2 = (1.0 - r) * (1.0 + r);
    let (t_stat, p_value) = if one_minus_r2 <= 0.0 {
        (f64::INFINITY.copysign(r), 0.0)
    } else {
        let t = r * (df as f64 / one_minus_r2).sqrt();
        (t, student_t_sf(t, df)?)
    };
    Ok(CorrelationResult {
        r,
        t_stat,
        df,
        p_value,
        n: m.n,
    })
}
