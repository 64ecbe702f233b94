//! DDPM forward corruption, reverse steps and sampling loops.

mod schedule;

use thiserror::Error;

use crate::codec::PointCloudTensor;
use crate::rng::{fill_standard_normal, seeded};

pub use schedule::{NoiseSchedule, DEFAULT_OFFSET, DEFAULT_STEPS};

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("invalid schedule parameters (steps = {steps}, offset = {offset})")]
    InvalidParams { steps: usize, offset: f64 },
    #[error("step {t} outside 1..={steps}")]
    StepOutOfRange { t: usize, steps: usize },
    #[error("the final reverse step (t = 1) must not add noise")]
    NoiseAtFinalStep,
    #[error("noise predictor failed: {0}")]
    Predictor(String),
}

/// x_t = √ᾱ_t·x₀ + √(1−ᾱ_t)·ε
pub fn q_sample(
    x0: &PointCloudTensor,
    t: usize,
    eps: &PointCloudTensor,
    sch: &NoiseSchedule,
) -> Result<PointCloudTensor, DiffusionError> {
    sch.check_step(t)?;
    let ab = sch.alpha_bar(t);
    let (s, n) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.zip_map(eps, |x, e| s * x + n * e))
}

/// x̂₀ = (x_t − √(1−ᾱ_t)·ε̂)/√ᾱ_t
pub fn predict_x0(
    xt: &PointCloudTensor,
    t: usize,
    eps_hat: &PointCloudTensor,
    sch: &NoiseSchedule,
) -> Result<PointCloudTensor, DiffusionError> {
    sch.check_step(t)?;
    let ab = sch.alpha_bar(t);
    let (s, n) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(xt.zip_map(eps_hat, |x, e| (x - n * e) / s))
}

/// The noise that maps `x0` onto `xt` at step `t`: ε* = (x_t − √ᾱ_t·x₀)/√(1−ᾱ_t).
pub fn oracle_eps(
    xt: &PointCloudTensor,
    x0: &PointCloudTensor,
    t: usize,
    sch: &NoiseSchedule,
) -> Result<PointCloudTensor, DiffusionError> {
    sch.check_step(t)?;
    let ab = sch.alpha_bar(t);
    let (s, n) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(xt.zip_map(x0, |x, o| (x - s * o) / n))
}

/// x_{t−1} = (x_t − β_t/√(1−ᾱ_t)·ε̂)/√α_t + σ_t·z, with σ_t = √β_t.
///
/// `z` must be `None` at t = 1.
pub fn reverse_step(
    xt: &PointCloudTensor,
    t: usize,
    eps_hat: &PointCloudTensor,
    z: Option<&PointCloudTensor>,
    sch: &NoiseSchedule,
) -> Result<PointCloudTensor, DiffusionError> {
    sch.check_step(t)?;
    if t == 1 && z.is_some() {
        return Err(DiffusionError::NoiseAtFinalStep);
    }
    let coef = sch.beta(t) / (1.0 - sch.alpha_bar(t)).sqrt();
    let inv_sqrt_alpha = 1.0 / sch.alpha(t).sqrt();
    let mut out = xt.zip_map(eps_hat, |x, e| (x - coef * e) * inv_sqrt_alpha);
    if let Some(z) = z {
        let sigma = sch.sigma(t);
        for (o, zv) in out.as_mut_slice().iter_mut().zip(z.as_slice()) {
            *o += sigma * zv;
        }
    }
    Ok(out)
}

/// Anything that estimates the noise in `x_t` at step `t`.
pub trait NoisePredictor {
    fn predict(&self, xt: &PointCloudTensor, t: usize) -> Result<PointCloudTensor, crate::Error>;
}

impl<F> NoisePredictor for F
where
    F: Fn(&PointCloudTensor, usize) -> Result<PointCloudTensor, crate::Error>,
{
    fn predict(&self, xt: &PointCloudTensor, t: usize) -> Result<PointCloudTensor, crate::Error> {
        self(xt, t)
    }
}

/// The exact noise predictor for a known clean tensor.
pub struct OraclePredictor<'a> {
    pub x0: &'a PointCloudTensor,
    pub schedule: &'a NoiseSchedule,
}

impl NoisePredictor for OraclePredictor<'_> {
    fn predict(&self, xt: &PointCloudTensor, t: usize) -> Result<PointCloudTensor, crate::Error> {
        Ok(oracle_eps(xt, self.x0, t, self.schedule)?)
    }
}

/// Range every entry of a clean encoded tensor lies in.
pub const DATA_RANGE: (f64, f64) = (0.0, 1.0);

/// Wraps a predictor so that the clean estimate it implies,
/// x̂0 = (x_t − √(1−ᾱ)·ε̂)/√ᾱ, is clamped to `range` and the noise consistent
/// with the clamped estimate is returned instead. Near t = T, where ᾱ ≈ 0,
/// small errors in ε̂ otherwise blow up the trajectory. An exact predictor
/// whose target lies in `range` is unaffected.
#[derive(Debug, Clone, Copy)]
pub struct ClampedPredictor<'a, P: ?Sized> {
    pub inner: &'a P,
    pub schedule: &'a NoiseSchedule,
    pub range: (f64, f64),
}

impl<P: NoisePredictor + ?Sized> NoisePredictor for ClampedPredictor<'_, P> {
    fn predict(&self, xt: &PointCloudTensor, t: usize) -> Result<PointCloudTensor, crate::Error> {
        let eps = self.inner.predict(xt, t)?;
        let (lo, hi) = self.range;
        let x0 = predict_x0(xt, t, &eps, self.schedule)?.map(|v| v.clamp(lo, hi));
        Ok(oracle_eps(xt, &x0, t, self.schedule)?)
    }
}

fn normal_tensor(rng: &mut crate::rng::PcRng) -> PointCloudTensor {
    let mut x = PointCloudTensor::zeros();
    fill_standard_normal(rng, x.as_mut_slice());
    x
}

fn denoise_loop<P: NoisePredictor + ?Sized>(
    mut x: PointCloudTensor,
    predictor: &P,
    sch: &NoiseSchedule,
    rng: &mut crate::rng::PcRng,
    mut on_step: Option<&mut dyn FnMut(usize, &PointCloudTensor)>,
) -> Result<PointCloudTensor, crate::Error> {
    for t in (1..=sch.steps()).rev() {
        if let Some(cb) = on_step.as_deref_mut() {
            cb(t, &x);
        }
        let eps_hat = predictor.predict(&x, t)?;
        let z = if t > 1 { Some(normal_tensor(rng)) } else { None };
        x = reverse_step(&x, t, &eps_hat, z.as_ref(), sch)?;
    }
    if let Some(cb) = on_step {
        cb(0, &x);
    }
    Ok(x)
}

/// Ancestral sampling from x_T ~ N(0, I). The callback, if any, sees `(t, x_t)`
/// before each reverse step and `(0, x_0)` at the end.
pub fn sample<P: NoisePredictor + ?Sized>(
    predictor: &P,
    sch: &NoiseSchedule,
    seed: u64,
    on_step: Option<&mut dyn FnMut(usize, &PointCloudTensor)>,
) -> Result<PointCloudTensor, crate::Error> {
    let mut rng = seeded(seed);
    let xt = normal_tensor(&mut rng);
    denoise_loop(xt, predictor, sch, &mut rng, on_step)
}

/// Corrupts `x0` all the way to step T with seeded noise, then denoises.
pub fn reconstruct<P: NoisePredictor + ?Sized>(
    x0: &PointCloudTensor,
    predictor: &P,
    sch: &NoiseSchedule,
    seed: u64,
    on_step: Option<&mut dyn FnMut(usize, &PointCloudTensor)>,
) -> Result<PointCloudTensor, crate::Error> {
    let mut rng = seeded(seed);
    let eps = normal_tensor(&mut rng);
    let xt = q_sample(x0, sch.steps(), &eps, sch)?;
    denoise_loop(xt, predictor, sch, &mut rng, on_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode, ElementSlots};
    use crate::fixtures::mgmno3;

    fn sch() -> NoiseSchedule {
        NoiseSchedule::cosine(1000, 0.008).unwrap()
    }

    fn randn(seed: u64) -> PointCloudTensor {
        normal_tensor(&mut seeded(seed))
    }

    fn x0() -> PointCloudTensor {
        let s = mgmno3();
        encode(&s, &ElementSlots::for_structure(&s).unwrap()).unwrap()
    }

    // single step with ᾱ_1 = 0.25 exactly
    fn quarter() -> NoiseSchedule {
        NoiseSchedule::from_betas(vec![0.75]).unwrap()
    }

    #[test]
    fn clamping_leaves_the_oracle_exact() {
        let s = sch();
        let x = x0();
        let oracle = OraclePredictor { x0: &x, schedule: &s };
        let clamped = ClampedPredictor { inner: &oracle, schedule: &s, range: DATA_RANGE };
        let plain = reconstruct(&x, &oracle, &s, 5, None).unwrap();
        let out = reconstruct(&x, &clamped, &s, 5, None).unwrap();
        assert!(out.max_abs_diff(&x) < 1e-6);
        assert!(out.max_abs_diff(&plain) < 1e-6);
    }

    #[test]
    fn clamping_bounds_a_biased_predictor() {
        // predicting no noise at all makes every step divide by √α
        let s = sch();
        let x = x0();
        let blind = |_: &PointCloudTensor, _: usize| -> Result<PointCloudTensor, crate::Error> { Ok(PointCloudTensor::zeros()) };
        let wild = reconstruct(&x, &blind, &s, 1, None).unwrap();
        assert!(wild.as_slice().iter().any(|v| !v.is_finite() || v.abs() > 1e3));
        let clamped = ClampedPredictor { inner: &blind, schedule: &s, range: DATA_RANGE };
        let tame = reconstruct(&x, &clamped, &s, 1, None).unwrap();
        assert!(tame.as_slice().iter().all(|v| v.abs() < 2.0));
    }

    #[test]
    fn q_sample_substitution() {
        let s = quarter();
        let x = x0();
        let out = q_sample(&x, 1, &PointCloudTensor::zeros(), &s).unwrap();
        assert_eq!(out, x.map(|v| 0.5 * v));
        let e = randn(1);
        let out = q_sample(&PointCloudTensor::zeros(), 1, &e, &s).unwrap();
        assert!(out.max_abs_diff(&e.map(|v| v * 0.75f64.sqrt())) < 1e-15);
        let out = q_sample(&PointCloudTensor::filled(1.0), 1, &PointCloudTensor::filled(1.0), &s).unwrap();
        assert!(out.as_slice().iter().all(|v| (v - 1.3660254037844386).abs() < 1e-15));
    }

    #[test]
    fn step_range_checked() {
        let s = sch();
        let x = x0();
        assert!(matches!(q_sample(&x, 0, &x, &s), Err(DiffusionError::StepOutOfRange { .. })));
        assert!(matches!(q_sample(&x, 1001, &x, &s), Err(DiffusionError::StepOutOfRange { .. })));
        assert!(predict_x0(&x, 0, &x, &s).is_err());
        assert!(oracle_eps(&x, &x, 1001, &s).is_err());
        assert!(reverse_step(&x, 0, &x, None, &s).is_err());
        assert_eq!(reverse_step(&x, 1, &x, Some(&x), &s), Err(DiffusionError::NoiseAtFinalStep));
    }

    #[test]
    fn predict_x0_inverts_q_sample() {
        let s = sch();
        let x = x0();
        let e = randn(2);
        for t in [1, 2, 10, 100, 500, 999, 1000] {
            let xt = q_sample(&x, t, &e, &s).unwrap();
            let back = predict_x0(&xt, t, &e, &s).unwrap();
            // conditioning grows like 1/√ᾱ_t near T
            let tol = 1e-12 / s.alpha_bar(t).sqrt();
            assert!(back.max_abs_diff(&x) < tol.max(1e-12), "t={t}: {}", back.max_abs_diff(&x));
        }
        let xt = randn(3);
        let t = 300;
        let eh = xt.map(|v| v / (1.0 - s.alpha_bar(t)).sqrt());
        assert!(predict_x0(&xt, t, &eh, &s).unwrap().max_abs_diff(&PointCloudTensor::zeros()) < 1e-12);
    }

    #[test]
    fn predict_x0_substitution_identity() {
        // q_sample(predict_x0(x_t, ε̂), ε̂) must return x_t
        let s = sch();
        let xt = randn(4);
        let eh = randn(5);
        for t in [1, 37, 640] {
            let x0 = predict_x0(&xt, t, &eh, &s).unwrap();
            assert!(q_sample(&x0, t, &eh, &s).unwrap().max_abs_diff(&xt) < 1e-12);
        }
    }

    #[test]
    fn oracle_identities() {
        let s = sch();
        let x = x0();
        let e = randn(6);
        for t in [1, 500, 1000] {
            let xt = q_sample(&x, t, &e, &s).unwrap();
            assert!(oracle_eps(&xt, &x, t, &s).unwrap().max_abs_diff(&e) < 1e-10);
        }
        let t = 20;
        let scaled = x.map(|v| v * s.alpha_bar(t).sqrt());
        assert!(oracle_eps(&scaled, &x, t, &s).unwrap().max_abs_diff(&PointCloudTensor::zeros()) < 1e-15);
        let xt = randn(7);
        let eps = oracle_eps(&xt, &x, t, &s).unwrap();
        assert!(q_sample(&x, t, &eps, &s).unwrap().max_abs_diff(&xt) < 1e-12);
    }

    #[test]
    fn reverse_step_linear_pieces() {
        let s = sch();
        let xt = randn(8);
        let t = 250;
        let out = reverse_step(&xt, t, &PointCloudTensor::zeros(), None, &s).unwrap();
        assert!(out.max_abs_diff(&xt.map(|v| v / s.alpha(t).sqrt())) < 1e-15);
        let eh = randn(9);
        let z1 = randn(10);
        let z2 = randn(11);
        let a = reverse_step(&xt, t, &eh, Some(&z1), &s).unwrap();
        let b = reverse_step(&xt, t, &eh, Some(&z2), &s).unwrap();
        let expect = z1.zip_map(&z2, |p, q| s.sigma(t) * (p - q));
        assert!(a.zip_map(&b, |p, q| p - q).max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn reverse_step_matches_posterior_mean() {
        let s = sch();
        let x = x0();
        let e = randn(12);
        for t in [2, 30, 700, 1000] {
            let xt = q_sample(&x, t, &e, &s).unwrap();
            let mean = reverse_step(&xt, t, &e, None, &s).unwrap();
            let (ab, abp, b, a) = (s.alpha_bar(t), s.alpha_bar(t - 1), s.beta(t), s.alpha(t));
            let c0 = abp.sqrt() * b / (1.0 - ab);
            let ct = a.sqrt() * (1.0 - abp) / (1.0 - ab);
            let posterior = x.zip_map(&xt, |p, q| c0 * p + ct * q);
            assert!(mean.max_abs_diff(&posterior) < 1e-10, "t={t}");
        }
    }

    #[test]
    fn final_step_collapses_to_x0() {
        let s = sch();
        let x = x0();
        let xt = randn(13);
        let e = oracle_eps(&xt, &x, 1, &s).unwrap();
        let out = reverse_step(&xt, 1, &e, None, &s).unwrap();
        assert!(out.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn error_recursion() {
        // with the oracle, e_{t-1} = e_t·√α_t(1−ᾱ_{t−1})/(1−ᾱ_t) where e_t = x_t − √ᾱ_t x₀
        let s = sch();
        let x = x0();
        let mut xt = randn(14);
        for t in (1..=1000).rev() {
            let e_t = xt.zip_map(&x, |p, q| p - s.alpha_bar(t).sqrt() * q);
            let eps = oracle_eps(&xt, &x, t, &s).unwrap();
            let next = reverse_step(&xt, t, &eps, None, &s).unwrap();
            let e_next = next.zip_map(&x, |p, q| p - s.alpha_bar(t - 1).sqrt() * q);
            let factor = s.alpha(t).sqrt() * (1.0 - s.alpha_bar(t - 1)) / (1.0 - s.alpha_bar(t));
            let predicted = e_t.map(|v| v * factor);
            assert!(e_next.max_abs_diff(&predicted) < 1e-10, "t={t}");
            xt = next;
        }
        assert!(xt.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn variance_preserved() {
        let s = sch();
        let mut rng = seeded(15);
        let n_tensors = 10;
        for t in [1, 300, 700, 1000] {
            let mut vals = Vec::new();
            for _ in 0..n_tensors {
                let x = normal_tensor(&mut rng);
                let e = normal_tensor(&mut rng);
                vals.extend_from_slice(q_sample(&x, t, &e, &s).unwrap().as_slice());
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            // standard error of a normal sample variance is √(2/(n−1))
            assert!((var - 1.0).abs() < 3.0 * (2.0 / (n - 1.0)).sqrt(), "t={t} var={var}");
        }
    }

    #[test]
    fn sampling_with_oracle() {
        let s = sch();
        let x = x0();
        let oracle = OraclePredictor { x0: &x, schedule: &s };
        let a = sample(&oracle, &s, 42, None).unwrap();
        assert!(a.max_abs_diff(&x) < 1e-6);
        let b = sample(&oracle, &s, 42, None).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        let r = reconstruct(&x, &oracle, &s, 3, None).unwrap();
        assert!(r.max_abs_diff(&x) < 1e-6);

        let one = NoiseSchedule::cosine(1, 0.008).unwrap();
        let oracle1 = OraclePredictor { x0: &x, schedule: &one };
        assert!(sample(&oracle1, &one, 1, None).unwrap().max_abs_diff(&x) < 1e-12);
        assert!(reconstruct(&x, &oracle1, &one, 1, None).unwrap().max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn trajectory_callback() {
        let s = NoiseSchedule::cosine(20, 0.008).unwrap();
        let x = x0();
        let oracle = OraclePredictor { x0: &x, schedule: &s };
        let mut seen = Vec::new();
        let mut cb = |t: usize, _: &PointCloudTensor| seen.push(t);
        sample(&oracle, &s, 0, Some(&mut cb)).unwrap();
        assert_eq!(seen.len(), 21);
        assert_eq!(seen[0], 20);
        assert_eq!(*seen.last().unwrap(), 0);
    }

    #[test]
    fn predictor_errors_propagate() {
        let s = NoiseSchedule::cosine(5, 0.008).unwrap();
        let bad = |_: &PointCloudTensor, t: usize| -> Result<PointCloudTensor, crate::Error> {
            Err(DiffusionError::Predictor(format!("boom at {t}")).into())
        };
        assert!(sample(&bad, &s, 0, None).is_err());
    }
}
