//! Model parameters and the closed-form constants derived from them.
//!
//! Every function here is a pure function of its arguments. Thresholds use
//! strict inequalities and report their slack so that callers can add their
//! own safety buffers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The model tuple `(a, mu, chi, N)`.
///
/// `a` is the growth rate, `mu` the logistic damping, `chi` the chemotactic
/// sensitivity and `dim` the spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub a: f64,
    pub mu: f64,
    pub chi: f64,
    pub dim: usize,
    /// Set when `a`, `mu` or `chi` were allowed to be zero. Degenerate
    /// parameters can be simulated but never pass a theorem check.
    #[serde(default)]
    pub degenerate: bool,
}

impl Params {
    pub fn new(a: f64, mu: f64, chi: f64, dim: usize) -> Result<Self> {
        let params = Params {
            a,
            mu,
            chi,
            dim,
            degenerate: false,
        };
        params.validate()?;
        Ok(params)
    }

    /// Relaxed constructor accepting `a, mu, chi >= 0`.
    pub fn degenerate(a: f64, mu: f64, chi: f64, dim: usize) -> Result<Self> {
        let params = Params {
            a,
            mu,
            chi,
            dim,
            degenerate: true,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let strict = !self.degenerate;
        for (name, value) in [("a", self.a), ("mu", self.mu), ("chi", self.chi)] {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
            if strict && value <= 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be > 0",
                });
            }
            if value < 0.0 {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be >= 0",
                });
            }
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    /// The homogeneous steady state `a / mu`, shared by both components.
    pub fn carrying_capacity(&self) -> f64 {
        self.a / self.mu
    }

    pub fn is_admissible(&self) -> bool {
        !self.degenerate
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Params { mu, ..self }
    }
}

/// An open real interval `(lo, hi)`. Empty when `lo >= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenInterval {
    pub lo: f64,
    pub hi: f64,
}

impl OpenInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        OpenInterval { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &OpenInterval) -> OpenInterval {
        OpenInterval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

/// Outcome of the boundedness hypotheses on `(a, chi, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `a` above the growth threshold.
    pub cond_a_ok: bool,
    /// `chi` below `sqrt(2/N)` (always true in one dimension).
    pub cond_chi_ok: bool,
    pub a_threshold: f64,
    pub margin_a: f64,
    /// `sqrt(2/N) - chi`, or `+inf` when `N = 1`.
    pub margin_chi: f64,
    pub admissible: bool,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.cond_a_ok && self.cond_chi_ok && self.admissible
    }
}

/// Growth threshold: `chi^2/4` for `chi <= 2`, `chi - 1` beyond.
pub fn a_threshold(chi: f64) -> f64 {
    if chi <= 2.0 {
        chi * chi / 4.0
    } else {
        chi - 1.0
    }
}

/// Critical sensitivity `sqrt(2/N)`; infinite for `N = 1`.
pub fn chi_threshold(dim: usize) -> f64 {
    if dim <= 1 {
        f64::INFINITY
    } else {
        (2.0 / dim as f64).sqrt()
    }
}

pub fn check_boundedness_conditions(params: &Params) -> ConditionReport {
    let a_threshold = a_threshold(params.chi);
    let margin_a = params.a - a_threshold;
    let margin_chi = chi_threshold(params.dim) - params.chi;
    ConditionReport {
        cond_a_ok: margin_a > 0.0,
        cond_chi_ok: margin_chi > 0.0,
        a_threshold,
        margin_a,
        margin_chi,
        admissible: params.is_admissible(),
    }
}

fn check_chi(chi: f64) -> Result<()> {
    if chi > 0.0 && chi.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "chi",
            value: chi,
            reason: "must be > 0",
        })
    }
}

/// Lower edge `q_{1,+}(p) = (p+1)/2 * (sqrt(1 + p chi^2) - 1)` of the
/// admissible `q` for the negative-exponent integral `int u^-p v^-q`.
pub fn q1_plus(p: f64, chi: f64) -> Result<f64> {
    check_chi(chi)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain {
            what: "p",
            value: p,
            domain: "(0, 1)".into(),
        });
    }
    let x = p * chi * chi;
    // sqrt(1+x) - 1 without cancellation for small x
    Ok(0.5 * (p + 1.0) * x / ((1.0 + x).sqrt() + 1.0))
}

/// Roots of the quadratic controlling the sign of `q_{1,+}(p) - a p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgWindow {
    pub window: OpenInterval,
    /// Intersection with `(0, 1)`; may be empty.
    pub unit_overlap: OpenInterval,
}

/// `p_{g,-} < p < p_{g,+}`. Fails with [`Error::Undefined`] when
/// `(1+a)^2 < chi^2`; a zero discriminant yields an empty window.
pub fn p_g_range(a: f64, chi: f64) -> Result<PgWindow> {
    check_chi(chi)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "a",
            value: a,
            reason: "must be > 0",
        });
    }
    let chi2 = chi * chi;
    let disc = (1.0 + a) * (1.0 + a) - chi2;
    if disc < 0.0 {
        return Err(Error::Undefined(format!(
            "(1+a)^2 = {} < chi^2 = {}",
            (1.0 + a) * (1.0 + a),
            chi2
        )));
    }
    let centre = 2.0 * a * a + 2.0 * a - chi2;
    let spread = 2.0 * a * disc.sqrt();
    let window = OpenInterval::new((centre - spread) / chi2, (centre + spread) / chi2);
    Ok(PgWindow {
        window,
        unit_overlap: window.intersect(&OpenInterval::new(0.0, 1.0)),
    })
}

/// `(q_{2,-}(p), q_{2,+}(p))` for `p > 1` and `p chi^2 < 1`.
pub fn q2_range(p: f64, chi: f64) -> Result<OpenInterval> {
    check_chi(chi)?;
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Domain {
            what: "p",
            value: p,
            domain: "(1, inf)".into(),
        });
    }
    let x = p * chi * chi;
    if x >= 1.0 {
        return Err(Error::EmptyWindow(format!("p chi^2 = {x} >= 1")));
    }
    let s = (1.0 - x).sqrt();
    let half = 0.5 * (p - 1.0);
    Ok(OpenInterval::new(half * (1.0 - s), half * (1.0 + s)))
}

/// Exponents for the positive weighted integral `int u^kappa v^-q0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaQ0 {
    pub kappa: f64,
    pub q0: f64,
    pub kappa_window: OpenInterval,
    pub q0_window: OpenInterval,
}

/// Canonical `kappa` and `q0`: the midpoint of `(N/2, 1/chi^2)` (moved to the
/// midpoint of `(1, 1/chi^2)` if it does not exceed 1), then the midpoint of
/// `q2_range(kappa) ∩ (0, N/2)`.
pub fn select_kappa_q0(params: &Params) -> Result<KappaQ0> {
    if !params.is_admissible() {
        return Err(Error::Degenerate("select_kappa_q0"));
    }
    let half_dim = params.dim as f64 / 2.0;
    let inv_chi2 = 1.0 / (params.chi * params.chi);
    let mut kappa_window = OpenInterval::new(half_dim, inv_chi2);
    if kappa_window.is_empty() {
        return Err(Error::Infeasible(format!(
            "N/2 = {half_dim} >= 1/chi^2 = {inv_chi2}"
        )));
    }
    if kappa_window.midpoint() <= 1.0 {
        kappa_window = OpenInterval::new(1.0, inv_chi2);
        if kappa_window.is_empty() {
            return Err(Error::Infeasible(format!(
                "no kappa > 1 below 1/chi^2 = {inv_chi2}"
            )));
        }
    }
    let kappa = kappa_window.midpoint();
    let q0_window = q2_range(kappa, params.chi)?.intersect(&OpenInterval::new(0.0, half_dim));
    if q0_window.is_empty() {
        return Err(Error::Infeasible(format!(
            "q2_range({kappa}) does not meet (0, {half_dim})"
        )));
    }
    Ok(KappaQ0 {
        kappa,
        q0: q0_window.midpoint(),
        kappa_window,
        q0_window,
    })
}

/// Constants of the Lyapunov functional for the shifted system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovConstants {
    pub eta0: f64,
    /// `1 / eta0^2`.
    pub k0: f64,
    pub l_window: OpenInterval,
    pub l: f64,
    pub g0: f64,
    pub mu_threshold: f64,
    /// `G0 / (N + 2)`, the guaranteed exponential rate.
    pub rate_bound: f64,
}

impl LyapunovConstants {
    /// The two branches of `G0` at the stored weight.
    pub fn g0_branches(&self, params: &Params) -> (f64, f64) {
        g0_branches(params, self.k0, self.l)
    }
}

/// `mu` threshold `max{1, a chi k0 sqrt(2)/4}`.
pub fn mu_threshold(params: &Params, k0: f64) -> f64 {
    (params.a * params.chi * k0 * std::f64::consts::SQRT_2 / 4.0).max(1.0)
}

/// `(chi^2 k0 / 4, 2 mu^2 / a^2)`.
pub fn l_window(params: &Params, k0: f64) -> OpenInterval {
    OpenInterval::new(
        params.chi * params.chi * k0 / 4.0,
        2.0 * params.mu * params.mu / (params.a * params.a),
    )
}

/// `(a - (L/2)(a/mu)^2, L - chi^2 k0 / 4)`.
pub fn g0_branches(params: &Params, k0: f64, l: f64) -> (f64, f64) {
    let ratio = params.a / params.mu;
    (
        params.a - 0.5 * l * ratio * ratio,
        l - params.chi * params.chi * k0 / 4.0,
    )
}

pub fn g0_at(params: &Params, k0: f64, l: f64) -> f64 {
    let (first, second) = g0_branches(params, k0, l);
    first.min(second)
}

/// Weight that equalises the two `G0` branches.
pub fn equalizing_l(params: &Params, k0: f64) -> f64 {
    let ratio = params.a / params.mu;
    (params.a + params.chi * params.chi * k0 / 4.0) / (1.0 + 0.5 * ratio * ratio)
}

pub fn lyapunov_constants(
    params: &Params,
    eta0: f64,
    l_choice: Option<f64>,
) -> Result<LyapunovConstants> {
    if !params.is_admissible() {
        return Err(Error::Degenerate("lyapunov_constants"));
    }
    if !(eta0 > 0.0 && eta0.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "eta0",
            value: eta0,
            reason: "must be > 0",
        });
    }
    let k0 = 1.0 / (eta0 * eta0);
    let threshold = mu_threshold(params, k0);
    if !(params.mu > threshold) {
        return Err(Error::BelowThreshold {
            mu: params.mu,
            threshold,
        });
    }
    let window = l_window(params, k0);
    if window.is_empty() {
        return Err(Error::Infeasible(format!(
            "L window ({}, {}) is empty",
            window.lo, window.hi
        )));
    }
    let l = match l_choice {
        Some(l) if window.contains(l) => l,
        Some(l) => {
            return Err(Error::Domain {
                what: "L",
                value: l,
                domain: format!("({}, {})", window.lo, window.hi),
            })
        }
        None => {
            let best = equalizing_l(params, k0);
            if window.contains(best) {
                best
            } else {
                // G0 still rising at the upper edge; stay just inside it.
                window.hi - 0.01 * window.width()
            }
        }
    };
    let g0 = g0_at(params, k0, l);
    if !(g0 > 0.0) {
        return Err(Error::Infeasible(format!("G0 = {g0} <= 0 at L = {l}")));
    }
    Ok(LyapunovConstants {
        eta0,
        k0,
        l_window: window,
        l,
        g0,
        mu_threshold: threshold,
        rate_bound: g0 / (params.dim as f64 + 2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(a: f64, mu: f64, chi: f64, dim: usize) -> Params {
        Params::new(a, mu, chi, dim).unwrap()
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(Params::new(0.0, 1.0, 1.0, 1).is_err());
        assert!(Params::new(1.0, -1.0, 1.0, 1).is_err());
        assert!(Params::new(1.0, 1.0, 1.0, 0).is_err());
        assert!(Params::degenerate(0.0, 0.0, 0.0, 1).is_ok());
        assert!(Params::degenerate(-1.0, 0.0, 0.0, 1).is_err());
    }

    #[test]
    fn boundedness_conditions_examples() {
        let r = check_boundedness_conditions(&p(1.0, 1.0, 1.0, 2));
        assert!(r.cond_a_ok);
        assert!(
            !r.cond_chi_ok,
            "chi = sqrt(2/N) fails the strict inequality"
        );
        assert_abs_diff_eq!(r.margin_a, 0.75);

        let r = check_boundedness_conditions(&p(2.5, 1.0, 3.0, 1));
        assert!(r.cond_a_ok);
        assert!(r.cond_chi_ok);
        assert_abs_diff_eq!(r.a_threshold, 2.0);
        assert!(r.margin_chi.is_infinite());

        let r = check_boundedness_conditions(&p(0.3, 1.0, 1.2, 1));
        assert!(!r.cond_a_ok);
        assert_abs_diff_eq!(r.a_threshold, 0.36, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_params_are_flagged() {
        let d = Params::degenerate(1.0, 1.0, 0.5, 1).unwrap();
        assert!(!check_boundedness_conditions(&d).all_ok());
        assert!(matches!(
            lyapunov_constants(&d, 1.0, None),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn q1_plus_examples() {
        assert!(q1_plus(1e-12, 3.0).unwrap() < 1e-6);
        assert_abs_diff_eq!(
            q1_plus(0.5, 2.0).unwrap(),
            0.75 * (3f64.sqrt() - 1.0),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(q1_plus(0.5, 2.0).unwrap(), 0.549038, epsilon = 1e-6);
        let tiny = q1_plus(0.5, 1e-9).unwrap();
        assert_abs_diff_eq!(tiny, 0.5 * 1e-18 * 1.5 / 4.0, epsilon = 1e-30);
        assert!(matches!(q1_plus(1.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(q1_plus(0.0, 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn p_g_range_examples() {
        let w = p_g_range(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(w.window.lo, 3.0 - 2.0 * 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.window.hi, 3.0 + 2.0 * 3f64.sqrt(), epsilon = 1e-14);
        assert_eq!(w.unit_overlap, OpenInterval::new(0.0, 1.0));

        let w = p_g_range(1.0, 2.0).unwrap();
        assert_eq!(w.window.lo, 0.0);
        assert_eq!(w.window.hi, 0.0);
        assert!(w.window.is_empty());

        assert!(matches!(p_g_range(0.1, 5.0), Err(Error::Undefined(_))));
    }

    #[test]
    fn q2_range_examples() {
        let w = q2_range(2.0, 0.5).unwrap();
        assert_abs_diff_eq!(w.lo, 0.5 * (1.0 - 0.5f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(w.hi, 0.5 * (1.0 + 0.5f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(w.lo, 0.146447, epsilon = 1e-6);
        assert_abs_diff_eq!(w.hi, 0.853553, epsilon = 1e-6);

        let w = q2_range(1.0 + 1e-12, 0.5).unwrap();
        assert!(w.width() < 1e-11);

        assert!(matches!(q2_range(5.0, 0.5), Err(Error::EmptyWindow(_))));
        assert!(matches!(q2_range(1.0, 0.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn select_kappa_q0_examples() {
        let k = select_kappa_q0(&p(1.0, 1.0, 0.5, 2)).unwrap();
        assert_abs_diff_eq!(k.kappa, 2.5);
        let s = 0.375f64.sqrt();
        assert_abs_diff_eq!(k.q0_window.lo, 0.75 * (1.0 - s), epsilon = 1e-15);
        assert_eq!(k.q0_window.hi, 1.0);
        assert_abs_diff_eq!(k.q0, 0.5 * (0.75 * (1.0 - s) + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(k.q0, 0.645, epsilon = 1e-3);

        assert!(matches!(
            select_kappa_q0(&p(1.0, 1.0, 1.0, 2)),
            Err(Error::Infeasible(_))
        ));

        let k = select_kappa_q0(&p(1.0, 1.0, 0.5, 3)).unwrap();
        assert_abs_diff_eq!(k.kappa, 2.75);
        assert!(k.q0 > 0.0 && k.q0 < 1.5);
        assert!(q2_range(2.75, 0.5).unwrap().contains(k.q0));

        // one dimension: kappa from (1/2, 1/chi^2), q0 below 1/2
        let k = select_kappa_q0(&p(1.0, 1.0, 0.5, 1)).unwrap();
        assert_abs_diff_eq!(k.kappa, 2.25);
        assert!(k.q0 > 0.0 && k.q0 < 0.5);
    }

    #[test]
    fn lyapunov_constants_example() {
        let c = lyapunov_constants(&p(1.0, 2.0, 0.5, 1), 1.0, None).unwrap();
        assert_eq!(c.k0, 1.0);
        assert_abs_diff_eq!(c.l_window.lo, 0.0625);
        assert_abs_diff_eq!(c.l_window.hi, 8.0);
        assert_abs_diff_eq!(c.l, 1.0625 / 1.125, epsilon = 1e-15);
        assert_abs_diff_eq!(c.g0, 0.881944, epsilon = 1e-6);
        assert_abs_diff_eq!(c.rate_bound, 0.293981, epsilon = 1e-6);
        let (b1, b2) = c.g0_branches(&p(1.0, 2.0, 0.5, 1));
        assert_abs_diff_eq!(b1, b2, epsilon = 1e-15);
    }

    #[test]
    fn lyapunov_constants_errors() {
        assert!(matches!(
            lyapunov_constants(&p(1.0, 1.0, 0.5, 1), 1.0, None),
            Err(Error::BelowThreshold { .. })
        ));
        assert!(matches!(
            lyapunov_constants(&p(1.0, 2.0, 0.5, 1), 1.0, Some(9.0)),
            Err(Error::Domain { .. })
        ));
        assert!(lyapunov_constants(&p(1.0, 2.0, 0.5, 1), 1.0, Some(2.0)).is_ok());
        assert!(lyapunov_constants(&p(1.0, 2.0, 0.5, 1), 0.0, None).is_err());
    }

    #[test]
    fn upper_edge_fallback_stays_inside_window() {
        // a > 1 with mu close to 1 pushes the equalising weight past 2 mu^2 / a^2
        let params = p(3.0, 1.1, 0.1, 1);
        assert!(!l_window(&params, 1.0).contains(equalizing_l(&params, 1.0)));
        let c = lyapunov_constants(&params, 1.0, None).unwrap();
        assert!(c.l_window.contains(c.l));
        assert!(c.g0 > 0.0);
    }

    proptest! {
        #[test]
        fn q2_endpoints_ordered(p in 1.0001f64..20.0, frac in 0.0f64..0.999) {
            // chi chosen so that p chi^2 = frac < 1
            let chi = (frac.max(1e-6) / p).sqrt();
            let w = q2_range(p, chi).unwrap();
            prop_assert!(w.lo > 0.0);
            prop_assert!(w.lo < w.hi);
            prop_assert!(w.hi <= p - 1.0 + 1e-12);
        }

        #[test]
        fn default_l_maximizes_g0(
            a in 0.1f64..3.0,
            mu_over in 1.01f64..5.0,
            chi in 0.05f64..1.5,
            eta0 in 0.2f64..2.0,
            seed in any::<u64>(),
        ) {
            let base = p(a, 1.0, chi, 1);
            let k0 = 1.0 / (eta0 * eta0);
            let mu = mu_threshold(&base, k0) * mu_over;
            let params = base.with_mu(mu);
            let window = l_window(&params, k0);
            prop_assume!(window.contains(equalizing_l(&params, k0)));
            let consts = match lyapunov_constants(&params, eta0, None) {
                Ok(c) => c,
                Err(_) => return Ok(()),
            };
            let (b1, b2) = consts.g0_branches(&params);
            prop_assert!((b1 - b2).abs() < 1e-12 * (1.0 + b1.abs()));

            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let l = rng.gen_range(window.lo..window.hi);
                prop_assert!(g0_at(&params, k0, l) <= consts.g0 + 1e-12);
            }
        }

        #[test]
        fn conditions_monotone(a in 0.01f64..5.0, da in 0.0f64..2.0, chi in 0.01f64..5.0, dchi in 0.0f64..1.0, dim in 1usize..5) {
            let base = check_boundedness_conditions(&p(a, 1.0, chi, dim));
            let more_a = check_boundedness_conditions(&p(a + da, 1.0, chi, dim));
            prop_assert!(!base.cond_a_ok || more_a.cond_a_ok);
            let smaller_chi = (chi - dchi).max(1e-3);
            let less_chi = check_boundedness_conditions(&p(a, 1.0, smaller_chi, dim));
            prop_assert!(!base.cond_a_ok || less_chi.cond_a_ok);
            prop_assert!(!base.cond_chi_ok || less_chi.cond_chi_ok);
        }

        #[test]
        fn q1_plus_increasing(p in 0.01f64..0.98, chi in 0.01f64..5.0) {
            let h = 1e-3;
            let base = q1_plus(p, chi).unwrap();
            prop_assert!(base > 0.0);
            prop_assert!(q1_plus(p + h * 0.5, chi).unwrap() > base);
            prop_assert!(q1_plus(p, chi + h).unwrap() > base);
        }
    }
}
