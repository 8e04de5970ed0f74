//! Per-period demand distributions with closed-form partial expectations.
//!
//! All supported models live on `[0, ∞)`. Besides the right-continuous CDF
//! each model exposes [`DemandModel::cdf_left`] (`P(D < x)`), which is what the
//! grid discretization uses so that an atom sitting on a grid point `z_n` is
//! charged to that point.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DemandModel {
    /// Normal(μ, σ) conditioned on being non-negative.
    TruncatedNormal { mu: f64, sigma: f64 },
    /// Uniform on `[0, upper]`.
    Uniform { upper: f64 },
    /// Gamma with the given shape and rate (mean = shape / rate).
    Gamma { shape: f64, rate: f64 },
    /// Piecewise-linear CDF through `(x, F)` knots. `F(x) = 0` left of the
    /// first knot, so a positive first `F` is an atom at the first knot.
    Empirical { knots: Vec<(f64, f64)> },
    /// Finite probability mass function as `(value, probability)` pairs,
    /// sorted by value.
    Discrete { atoms: Vec<(f64, f64)> },
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Antiderivative of Φ: ∫_{-∞}^{z} Φ(u) du = zΦ(z) + φ(z).
fn std_normal_cdf_integral(z: f64) -> f64 {
    z * std_normal_cdf(z) + std_normal_pdf(z)
}

impl DemandModel {
    pub fn truncated_normal(mu: f64, sigma: f64) -> Result<Self> {
        let d = DemandModel::TruncatedNormal { mu, sigma };
        d.check()?;
        Ok(d)
    }

    pub fn uniform(upper: f64) -> Result<Self> {
        let d = DemandModel::Uniform { upper };
        d.check()?;
        Ok(d)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        let d = DemandModel::Gamma { shape, rate };
        d.check()?;
        Ok(d)
    }

    pub fn empirical(knots: Vec<(f64, f64)>) -> Result<Self> {
        let d = DemandModel::Empirical { knots };
        d.check()?;
        Ok(d)
    }

    /// Builds a finite pmf; atoms are sorted and merged, probabilities must
    /// sum to one within 1e-12.
    pub fn discrete(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let d = DemandModel::Discrete { atoms: merged };
        d.check()?;
        Ok(d)
    }

    /// Verifies parameter ranges.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDemand(msg));
        match self {
            DemandModel::TruncatedNormal { mu, sigma } => {
                if !mu.is_finite() || !(sigma.is_finite() && *sigma > 0.0) {
                    return bad(format!(
                        "truncated normal needs finite mu and sigma > 0 (got {mu}, {sigma})"
                    ));
                }
                if std_normal_cdf(mu / sigma) <= 0.0 {
                    return bad(format!(
                        "truncated normal has no mass on [0, inf) (mu = {mu}, sigma = {sigma})"
                    ));
                }
            }
            DemandModel::Uniform { upper } => {
                if !(upper.is_finite() && *upper > 0.0) {
                    return bad(format!(
                        "uniform upper bound must be positive (got {upper})"
                    ));
                }
            }
            DemandModel::Gamma { shape, rate } => {
                if !(shape.is_finite() && *shape > 0.0 && rate.is_finite() && *rate > 0.0) {
                    return bad(format!(
                        "gamma needs shape > 0 and rate > 0 (got {shape}, {rate})"
                    ));
                }
            }
            DemandModel::Empirical { knots } => {
                if knots.is_empty() {
                    return bad("empirical cdf needs at least one knot".into());
                }
                if knots[0].0 < 0.0 {
                    return bad("empirical cdf knots must be non-negative".into());
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) || w[1].1 < w[0].1 {
                        return bad(
                            "empirical cdf knots must have increasing x and non-decreasing F"
                                .into(),
                        );
                    }
                }
                if knots
                    .iter()
                    .any(|k| !k.0.is_finite() || !(0.0..=1.0).contains(&k.1))
                {
                    return bad("empirical cdf values must lie in [0, 1]".into());
                }
                if (knots[knots.len() - 1].1 - 1.0).abs() > 1e-12 {
                    return bad("empirical cdf must reach 1 at its last knot".into());
                }
            }
            DemandModel::Discrete { atoms } => {
                if atoms.is_empty() {
                    return bad("discrete demand needs at least one atom".into());
                }
                if atoms
                    .iter()
                    .any(|a| !(a.0.is_finite() && a.0 >= 0.0) || !(a.1 > 0.0))
                {
                    return bad("discrete atoms must be non-negative with positive mass".into());
                }
                if atoms.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return bad("discrete atoms must be strictly increasing".into());
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("discrete probabilities sum to {total}, not 1"));
                }
            }
        }
        Ok(())
    }

    /// Right-continuous CDF `P(D ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            DemandModel::TruncatedNormal { mu, sigma } => {
                let z = (x - mu) / sigma;
                let norm = std_normal_cdf(mu / sigma);
                if z > 0.0 {
                    (1.0 - std_normal_cdf(-z) / norm).clamp(0.0, 1.0)
                } else {
                    let below = std_normal_cdf(-mu / sigma);
                    ((std_normal_cdf(z) - below) / norm).clamp(0.0, 1.0)
                }
            }
            DemandModel::Uniform { upper } => (x / upper).min(1.0),
            DemandModel::Gamma { shape, rate } => gamma_lower(*shape, rate * x),
            DemandModel::Empirical { knots } => empirical_cdf(knots, x),
            DemandModel::Discrete { atoms } => {
                if x >= atoms[atoms.len() - 1].0 {
                    return 1.0;
                }
                atoms.iter().take_while(|a| a.0 <= x).map(|a| a.1).sum()
            }
        }
    }

    /// Left limit `P(D < x)`. Equal to [`cdf`](Self::cdf) except at atoms.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            DemandModel::Empirical { knots } => {
                if x <= knots[0].0 {
                    0.0
                } else {
                    empirical_cdf(knots, x)
                }
            }
            DemandModel::Discrete { atoms } => {
                if x > atoms[atoms.len() - 1].0 {
                    return 1.0;
                }
                atoms.iter().take_while(|a| a.0 < x).map(|a| a.1).sum()
            }
            _ => self.cdf(x),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DemandModel::TruncatedNormal { mu, sigma } => {
                let a = mu / sigma;
                mu + sigma * std_normal_pdf(a) / std_normal_cdf(a)
            }
            DemandModel::Uniform { upper } => 0.5 * upper,
            DemandModel::Gamma { shape, rate } => shape / rate,
            DemandModel::Empirical { knots } => {
                let last = knots[knots.len() - 1].0;
                last - empirical_integral(knots, last)
            }
            DemandModel::Discrete { atoms } => atoms.iter().map(|a| a.0 * a.1).sum(),
        }
    }

    /// Partial expectations `(E[(y − D)⁺], E[(D − y)⁺])`.
    ///
    /// Whichever side is small is computed directly and the other follows
    /// from `e_plus − e_minus = y − mean`.
    pub fn loss_functions(&self, y: f64) -> (f64, f64) {
        let mean = self.mean();
        if y <= 0.0 {
            return (0.0, mean - y);
        }
        match self {
            DemandModel::TruncatedNormal { mu, sigma } => {
                let norm = std_normal_cdf(mu / sigma);
                let zy = (y - mu) / sigma;
                if y <= *mu {
                    let below = std_normal_cdf(-mu / sigma);
                    let g = std_normal_cdf_integral(zy) - std_normal_cdf_integral(-mu / sigma);
                    let e_plus = ((sigma * g - y * below) / norm).max(0.0);
                    (e_plus, e_plus - y + mean)
                } else {
                    let e_minus = (sigma * std_normal_cdf_integral(-zy) / norm).max(0.0);
                    (e_minus + y - mean, e_minus)
                }
            }
            DemandModel::Uniform { upper } => {
                if y >= *upper {
                    (y - mean, 0.0)
                } else {
                    let e_plus = y * y / (2.0 * upper);
                    (e_plus, e_plus - y + mean)
                }
            }
            DemandModel::Gamma { shape, rate } => {
                let u = rate * y;
                if y <= mean {
                    let e_plus =
                        (y * gamma_lower(*shape, u) - mean * gamma_lower(shape + 1.0, u)).max(0.0);
                    (e_plus, e_plus - y + mean)
                } else {
                    let upper_tail = |a: f64| gamma_upper(a, u);
                    let e_minus =
                        (mean * upper_tail(shape + 1.0) - y * upper_tail(*shape)).max(0.0);
                    (e_minus + y - mean, e_minus)
                }
            }
            DemandModel::Empirical { knots } => {
                let e_plus = empirical_integral(knots, y);
                (e_plus, (e_plus - y + mean).max(0.0))
            }
            DemandModel::Discrete { atoms } => {
                let e_plus: f64 = atoms.iter().map(|a| a.1 * (y - a.0).max(0.0)).sum();
                let e_minus: f64 = atoms.iter().map(|a| a.1 * (a.0 - y).max(0.0)).sum();
                (e_plus, e_minus)
            }
        }
    }

    /// Generalized inverse `inf { x : F(x) ≥ u }` for `u ∈ (0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            DemandModel::TruncatedNormal { mu, sigma } => {
                let below = std_normal_cdf(-mu / sigma);
                let p = below + u * (1.0 - below);
                let normal = statrs::distribution::Normal::new(*mu, *sigma)
                    .expect("validated normal parameters");
                normal.inverse_cdf(p).max(0.0)
            }
            DemandModel::Uniform { upper } => u * upper,
            DemandModel::Gamma { shape, rate } => Gamma::new(*shape, *rate)
                .expect("validated gamma parameters")
                .inverse_cdf(u),
            DemandModel::Empirical { knots } => {
                if u <= knots[0].1 {
                    return knots[0].0;
                }
                for w in knots.windows(2) {
                    let ((x0, f0), (x1, f1)) = (w[0], w[1]);
                    if u <= f1 {
                        return x0 + (x1 - x0) * (u - f0) / (f1 - f0);
                    }
                }
                knots[knots.len() - 1].0
            }
            DemandModel::Discrete { atoms } => {
                let mut acc = 0.0;
                for &(v, p) in atoms {
                    acc += p;
                    if u <= acc {
                        return v;
                    }
                }
                atoms[atoms.len() - 1].0
            }
        }
    }

    /// Upper end of the support, if bounded.
    pub fn support_max(&self) -> Option<f64> {
        match self {
            DemandModel::Uniform { upper } => Some(*upper),
            DemandModel::Empirical { knots } => Some(knots[knots.len() - 1].0),
            DemandModel::Discrete { atoms } => Some(atoms[atoms.len() - 1].0),
            _ => None,
        }
    }
}

fn empirical_cdf(knots: &[(f64, f64)], x: f64) -> f64 {
    if x < knots[0].0 {
        return 0.0;
    }
    for w in knots.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if x <= x1 {
            return f0 + (f1 - f0) * (x - x0) / (x1 - x0);
        }
    }
    1.0
}

/// Exact `∫_0^y F(ξ) dξ` for the piecewise-linear CDF.
fn empirical_integral(knots: &[(f64, f64)], y: f64) -> f64 {
    if y <= knots[0].0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for w in knots.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if y <= x1 {
            let fy = f0 + (f1 - f0) * (y - x0) / (x1 - x0);
            return acc + 0.5 * (f0 + fy) * (y - x0);
        }
        acc += 0.5 * (f0 + f1) * (x1 - x0);
    }
    acc + (y - knots[knots.len() - 1].0)
}

/// Regularized lower incomplete gamma `P(a, x)`, extended to `x ≤ 0` and `x = ∞`.
fn gamma_lower(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x)`.
fn gamma_upper(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Adaptive Simpson quadrature, used as an independent check on the
    /// closed forms.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || b - a < 1e-9 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
            }
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        rec(
            f,
            a,
            b,
            fa,
            fm,
            fb,
            (b - a) / 6.0 * (fa + 4.0 * fm + fb),
            tol,
            50,
        )
    }

    fn models() -> Vec<DemandModel> {
        vec![
            DemandModel::truncated_normal(110.0, 22.0).unwrap(),
            DemandModel::truncated_normal(3.0, 4.0).unwrap(),
            DemandModel::uniform(2.0).unwrap(),
            DemandModel::gamma(25.0, 25.0 / 110.0).unwrap(),
            DemandModel::gamma(0.7, 1.3).unwrap(),
            DemandModel::empirical(vec![(0.0, 0.2), (1.0, 0.5), (3.0, 1.0)]).unwrap(),
            DemandModel::discrete(vec![(0.0, 0.25), (1.0, 0.5), (2.5, 0.25)]).unwrap(),
        ]
    }

    #[test]
    fn uniform_midpoint() {
        let d = DemandModel::uniform(2.0).unwrap();
        assert_eq!(d.cdf(1.0), 0.5);
    }

    #[test]
    fn zero_below_support() {
        for d in models() {
            assert_eq!(d.cdf(-5.0), 0.0);
            assert_eq!(d.cdf_left(-5.0), 0.0);
        }
    }

    #[test]
    fn truncation_anchor() {
        let d = DemandModel::truncated_normal(110.0, 22.0).unwrap();
        assert_eq!(d.cdf(0.0), 0.0);
        // cdf(x) = (Φ̄(x) − Φ̄(0)) / (1 − Φ̄(0)) against statrs' normal.
        let n = statrs::distribution::Normal::new(110.0, 22.0).unwrap();
        for x in [5.0, 80.0, 110.0, 150.0, 200.0] {
            let want = (n.cdf(x) - n.cdf(0.0)) / (1.0 - n.cdf(0.0));
            assert!((d.cdf(x) - want).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn uniform_losses() {
        let d = DemandModel::uniform(2.0).unwrap();
        assert_eq!(d.loss_functions(0.0), (0.0, 1.0));
        let (ep, em) = d.loss_functions(2.0);
        assert!((ep - 1.0).abs() < 1e-15 && em.abs() < 1e-15);
        let quad = simpson(&|x| d.cdf(x), 0.0, 2.0, 1e-13);
        assert!((quad - 1.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_at_mean() {
        let d = DemandModel::gamma(25.0, 25.0 / 110.0).unwrap();
        let (ep, em) = d.loss_functions(110.0);
        assert!((ep - em).abs() < 1e-10 * 110.0);
        assert!(ep > 0.0);
    }

    #[test]
    fn losses_match_quadrature() {
        for d in models() {
            if matches!(d, DemandModel::Discrete { .. }) {
                continue;
            }
            let mean = d.mean();
            for frac in [0.1, 0.5, 0.9, 1.0, 1.3, 2.0] {
                let y = frac * mean;
                let (ep, em) = d.loss_functions(y);
                // Split at the knots so kinks don't stall the quadrature.
                let mut cuts = vec![0.0, y];
                if let DemandModel::Empirical { knots } = &d {
                    cuts.extend(knots.iter().map(|k| k.0).filter(|&x| x < y));
                }
                cuts.sort_by(f64::total_cmp);
                let quad: f64 = cuts
                    .windows(2)
                    .map(|w| simpson(&|x| d.cdf(x), w[0], w[1], 1e-14))
                    .sum();
                assert!(
                    (ep - quad).abs() <= 1e-10 * mean.max(1.0),
                    "{d:?} y={y}: {ep} vs {quad}"
                );
                assert!((ep - em - (y - mean)).abs() <= 1e-10 * mean.max(1.0));
            }
        }
    }

    #[test]
    fn mean_matches_survival_integral() {
        for d in models() {
            if matches!(d, DemandModel::Discrete { .. }) {
                continue;
            }
            let hi = match d.support_max() {
                Some(m) => m,
                None => d.quantile(1.0 - 1e-15) * 1.5,
            };
            let mut cuts = vec![0.0, hi];
            if let DemandModel::Empirical { knots } = &d {
                cuts.extend(knots.iter().map(|k| k.0));
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let quad: f64 = cuts
                .windows(2)
                .map(|w| simpson(&|x| 1.0 - d.cdf(x), w[0], w[1], 1e-11))
                .sum();
            assert!(
                (quad - d.mean()).abs() <= 1e-9 * d.mean(),
                "{d:?}: {quad} vs {}",
                d.mean()
            );
        }
    }

    #[test]
    fn atoms_and_left_limits() {
        let d = DemandModel::discrete(vec![(1.0, 0.5), (0.0, 0.25), (2.5, 0.25)]).unwrap();
        assert_eq!(d.cdf(0.0), 0.25);
        assert_eq!(d.cdf_left(0.0), 0.0);
        assert_eq!(d.cdf_left(1.0), 0.25);
        assert_eq!(d.cdf(1.0), 0.75);
        assert_eq!(d.cdf(2.5), 1.0);
        assert_eq!(d.quantile(0.3), 1.0);
        assert_eq!(d.mean(), 0.5 + 0.625);
        let e = DemandModel::empirical(vec![(0.0, 0.2), (1.0, 0.5), (3.0, 1.0)]).unwrap();
        assert_eq!(e.cdf(0.0), 0.2);
        assert_eq!(e.cdf_left(0.0), 0.0);
        assert_eq!(e.quantile(0.1), 0.0);
        assert!((e.quantile(0.35) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DemandModel::uniform(0.0).is_err());
        assert!(DemandModel::gamma(-1.0, 1.0).is_err());
        assert!(DemandModel::truncated_normal(1.0, 0.0).is_err());
        assert!(DemandModel::discrete(vec![(0.0, 0.5)]).is_err());
        assert!(DemandModel::empirical(vec![(0.0, 0.5), (1.0, 0.4)]).is_err());
    }

    proptest! {
        #[test]
        fn cdf_is_a_distribution(idx in 0usize..7, a in -10.0f64..400.0, b in -10.0f64..400.0) {
            let d = &models()[idx];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (flo, fhi) = (d.cdf(lo), d.cdf(hi));
            prop_assert!((0.0..=1.0).contains(&flo) && (0.0..=1.0).contains(&fhi));
            prop_assert!(flo <= fhi);
            prop_assert!(d.cdf_left(lo) <= flo);
            if lo < 0.0 { prop_assert_eq!(flo, 0.0); }
        }

        #[test]
        fn loss_identity(idx in 0usize..7, y in -50.0f64..400.0) {
            let d = &models()[idx];
            let (ep, em) = d.loss_functions(y);
            prop_assert!(ep >= 0.0 && em >= 0.0);
            let scale = d.mean().max(y.abs()).max(1.0);
            prop_assert!((ep - em - (y - d.mean())).abs() <= 1e-10 * scale);
        }

        #[test]
        fn quantile_inverts_cdf(idx in 0usize..7, u in 1e-6f64..(1.0 - 1e-6)) {
            let d = &models()[idx];
            let x = d.quantile(u);
            prop_assert!(d.cdf(x) >= u - 1e-9);
            prop_assert!(d.cdf_left(x) <= u + 1e-9);
        }
    }
}
