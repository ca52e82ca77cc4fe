//! Synthesis of regressors and measurements from the linear model
//! `y = w_opt·x + q`.

use crate::error::{Error, Result};
use crate::filter::predict;
use crate::prng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianParams {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        let params = Self { mean, sd };
        params.validate("sd")?;
        Ok(params)
    }

    pub fn zero_mean(sd: f64) -> Result<Self> {
        Self::new(0.0, sd)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(Error::validation(
                field,
                format!("mean {} is not finite", self.mean),
            ));
        }
        if !(self.sd >= 0.0) || !self.sd.is_finite() {
            return Err(Error::validation(
                field,
                format!(
                    "standard deviation {} must be finite and non-negative",
                    self.sd
                ),
            ));
        }
        Ok(())
    }

    /// Second moment `mean² + sd²`.
    pub fn power(&self) -> f64 {
        self.mean * self.mean + self.sd * self.sd
    }

    #[inline]
    pub fn draw(&self, stream: &mut RandomStream) -> Result<f64> {
        stream.next_gaussian(self.mean, self.sd)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSample {
    pub x: Vec<f64>,
    pub y: f64,
    /// Noise realization; kept for diagnostics only.
    pub q: f64,
}

impl SignalSample {
    pub fn from_parts(w_opt: &[f64], x: Vec<f64>, q: f64) -> Result<Self> {
        let y = predict(w_opt, &x)? + q;
        Ok(Self { x, y, q })
    }
}

/// Draws the `M` regressor components and then the noise, in that order.
pub fn generate_sample(
    stream: &mut RandomStream,
    w_opt: &[f64],
    input: &GaussianParams,
    noise: &GaussianParams,
) -> Result<SignalSample> {
    if w_opt.is_empty() {
        return Err(Error::Dimension {
            expected: 1,
            found: 0,
        });
    }
    let x = w_opt
        .iter()
        .map(|_| input.draw(stream))
        .collect::<Result<Vec<_>>>()?;
    let q = noise.draw(stream)?;
    SignalSample::from_parts(w_opt, x, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_model_arithmetic() {
        let s = SignalSample::from_parts(&[1.0], vec![0.5], 0.1).unwrap();
        assert_eq!(s.y, 0.6);
    }

    #[test]
    fn noiseless_sample_is_exact() {
        let mut stream = RandomStream::new(5);
        let input = GaussianParams::zero_mean(0.09).unwrap();
        let noise = GaussianParams::zero_mean(0.0).unwrap();
        let w_opt = [2.0, -1.0];
        for _ in 0..100 {
            let s = generate_sample(&mut stream, &w_opt, &input, &noise).unwrap();
            assert_eq!(s.q, 0.0);
            assert_eq!(s.y, 2.0 * s.x[0] - s.x[1]);
        }
    }

    #[test]
    fn consumes_m_plus_one_gaussians() {
        let w_opt = [1.0, 2.0, 3.0];
        let input = GaussianParams::zero_mean(1.0).unwrap();
        let noise = GaussianParams::zero_mean(1.0).unwrap();
        let mut a = RandomStream::new(9);
        let mut b = RandomStream::new(9);
        generate_sample(&mut a, &w_opt, &input, &noise).unwrap();
        generate_sample(&mut a, &w_opt, &input, &noise).unwrap();
        for _ in 0..8 {
            b.next_standard_gaussian();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn x_then_q_order() {
        let mut a = RandomStream::new(13);
        let mut b = RandomStream::new(13);
        let s = generate_sample(
            &mut a,
            &[1.0],
            &GaussianParams::new(0.0, 0.09).unwrap(),
            &GaussianParams::new(0.0, 0.03).unwrap(),
        )
        .unwrap();
        assert_eq!(s.x[0], 0.09 * b.next_standard_gaussian());
        assert_eq!(s.q, 0.03 * b.next_standard_gaussian());
    }

    #[test]
    fn output_variance() {
        // Var[y] = 2²·0.09² + 0.03²
        let expected = 4.0 * 0.09f64.powi(2) + 0.03f64.powi(2);
        let mut stream = RandomStream::new(21);
        let input = GaussianParams::zero_mean(0.09).unwrap();
        let noise = GaussianParams::zero_mean(0.03).unwrap();
        let n = 100_000;
        let ys: Vec<f64> = (0..n)
            .map(|_| {
                generate_sample(&mut stream, &[2.0], &input, &noise)
                    .unwrap()
                    .y
            })
            .collect();
        let mean = ys.iter().sum::<f64>() / n as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(
            (var / expected - 1.0).abs() < 0.05,
            "var {var} vs {expected}"
        );
    }

    #[test]
    fn independent_streams_uncorrelated() {
        let input = GaussianParams::zero_mean(0.09).unwrap();
        let noise = GaussianParams::zero_mean(0.03).unwrap();
        let mut sa = RandomStream::new(crate::prng::derive_seed(42, 0));
        let mut sb = RandomStream::new(crate::prng::derive_seed(42, 1));
        let n = 10_000;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let a = generate_sample(&mut sa, &[2.0], &input, &noise).unwrap().x[0];
            let b = generate_sample(&mut sb, &[2.0], &input, &noise).unwrap().x[0];
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        let corr = sab / (saa * sbb).sqrt();
        assert!(corr.abs() < 0.05, "corr {corr}");
    }

    #[test]
    fn rejects_bad_params() {
        assert!(GaussianParams::new(0.0, -0.1).is_err());
        assert!(GaussianParams::new(f64::NAN, 0.1).is_err());
        assert!(GaussianParams::new(0.0, f64::INFINITY).is_err());
    }
}
