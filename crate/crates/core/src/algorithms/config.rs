use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, Norm, NormPair};
use crate::math;
use crate::objective::Objective;
use crate::solvers::OcoKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Optimistic program over the confidence hypercube at every step.
    UcbBwcr,
    /// Linear bandits with knapsacks: optimistic LP with shrunken budget.
    UcbBwk,
    /// Linearized arm choice driven by online convex optimization on the dual vector.
    DualOco,
    /// Frank-Wolfe on the running average of estimates.
    FwPrimal,
    /// Frank-Wolfe-style approach toward the target set only.
    FwBwc,
    /// Objective and constraint directions combined in one small LP per step.
    Combined,
    /// Fractional-knapsack arm choice for bandits with knapsacks.
    GreedyBwk,
}

impl Variant {
    pub fn is_knapsack(self) -> bool {
        matches!(self, Variant::UcbBwk | Variant::GreedyBwk)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::UcbBwcr => "ucb_bwcr",
            Variant::UcbBwk => "ucb_bwk",
            Variant::DualOco => "dual_oco",
            Variant::FwPrimal => "fw_primal",
            Variant::FwBwc => "fw_bwc",
            Variant::Combined => "combined",
            Variant::GreedyBwk => "greedy_bwk",
        }
    }
}

/// How the combined algorithm picks its objective (θ) and constraint (φ) directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateRule {
    /// Online convex optimization on the dual vector.
    #[default]
    Dual,
    /// Gradient at the running average.
    Primal,
    /// Gradient of the smoothed function at the running average.
    PrimalSmoothed,
}

#[derive(Debug, Clone)]
pub struct AlgorithmConfig {
    pub variant: Variant,
    pub objective: Option<Objective>,
    pub set: Option<ConvexSet>,
    pub horizon: usize,
    /// Total budget per resource (knapsack variants).
    pub budget: Option<f64>,
    /// Shrink parameter; knapsack variants default to `min(1/2, sqrt(m·γ/B))`.
    pub eps: Option<f64>,
    pub gamma: f64,
    pub norm: NormPair,
    pub oco: OcoKind,
    pub theta_update: UpdateRule,
    pub phi_update: UpdateRule,
    /// Smoothing parameter; defaults to `sqrt(d·log₂(2T)/T)` where smoothing is needed.
    pub sigma: Option<f64>,
    pub allow_idle: bool,
}

impl AlgorithmConfig {
    pub fn new(variant: Variant, horizon: usize, gamma: f64) -> Self {
        Self {
            variant,
            objective: None,
            set: None,
            horizon,
            budget: None,
            eps: None,
            gamma,
            norm: NormPair::default(),
            oco: OcoKind::Ogd,
            theta_update: UpdateRule::Dual,
            phi_update: UpdateRule::Dual,
            sigma: None,
            allow_idle: variant == Variant::GreedyBwk,
        }
    }

    pub fn with_objective(mut self, f: Objective) -> Self {
        self.objective = Some(f);
        self
    }

    pub fn with_set(mut self, set: ConvexSet) -> Self {
        self.set = Some(set);
        self
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = NormPair::new(norm);
        self
    }

    pub fn with_oco(mut self, oco: OcoKind) -> Self {
        self.oco = oco;
        self
    }

    pub fn with_updates(mut self, theta: UpdateRule, phi: UpdateRule) -> Self {
        self.theta_update = theta;
        self.phi_update = phi;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn with_idle(mut self, allow: bool) -> Self {
        self.allow_idle = allow;
        self
    }

    pub fn default_sigma(&self, dim: usize) -> f64 {
        let t = self.horizon.max(1) as f64;
        math::sqrt(dim as f64 * math::log2(2.0 * t) / t)
    }

    pub fn sigma_or_default(&self, dim: usize) -> f64 {
        self.sigma.unwrap_or_else(|| self.default_sigma(dim))
    }

    /// The shrink parameter in effect for `arms` arms.
    pub fn effective_eps(&self, arms: usize) -> f64 {
        match (self.eps, self.budget) {
            (Some(eps), _) => eps,
            (None, Some(b)) if self.variant.is_knapsack() => {
                f64::min(0.5, math::sqrt(arms as f64 * self.gamma / b))
            }
            _ => 0.0,
        }
    }

    /// Checks that the fields required by the variant are present and consistent.
    pub fn validate(&self, dim: usize, arms: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let name = self.variant.name();
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if !(self.gamma > 0.0) {
            return fail("confidence parameter must be positive".into());
        }
        if arms == 0 {
            return fail("instance has no arms".into());
        }
        if let Some(f) = &self.objective {
            if f.dim() != dim {
                return fail(format!("objective dimension {} does not match {dim}", f.dim()));
            }
        }
        if let Some(s) = &self.set {
            if s.dim() != dim {
                return fail(format!("set dimension {} does not match {dim}", s.dim()));
            }
        }
        if let Some(eps) = self.eps {
            if !(0.0..=1.0).contains(&eps) {
                return fail("shrink parameter must lie in [0, 1]".into());
            }
        }
        if let Some(sigma) = self.sigma {
            if !(sigma > 0.0) {
                return fail("smoothing parameter must be positive".into());
            }
        }
        let needs_objective = |what: &str| -> Result<()> {
            if self.objective.is_none() {
                return fail(format!("{name} needs an objective{what}"));
            }
            Ok(())
        };
        let needs_set = || -> Result<()> {
            if self.set.is_none() {
                return fail(format!("{name} needs a target set"));
            }
            Ok(())
        };
        let finite_lipschitz = |f: &Objective| -> Result<()> {
            if !f.lipschitz(self.norm.primal).is_finite() {
                return fail(format!("{name} needs an objective with a finite Lipschitz constant"));
            }
            Ok(())
        };
        match self.variant {
            Variant::UcbBwcr => {
                if self.objective.is_none() && self.set.is_none() {
                    return fail("ucb_bwcr needs an objective, a target set, or both".into());
                }
                if self.eps.is_some_and(|e| e > 0.0) && !self.set.as_ref().is_some_and(ConvexSet::is_downward_closed) {
                    return fail("shrinking requires a downward-closed target set".into());
                }
            }
            Variant::UcbBwk | Variant::GreedyBwk => {
                if dim < 2 {
                    return fail(format!("{name} needs a reward component and at least one resource"));
                }
                match self.budget {
                    Some(b) if b > 0.0 => {}
                    _ => return fail(format!("{name} needs a positive budget")),
                }
                if self.variant == Variant::GreedyBwk && !self.allow_idle {
                    return fail("greedy_bwk plays fractional probabilities and needs idling".into());
                }
            }
            Variant::DualOco => {
                if self.objective.is_none() {
                    needs_set()?;
                }
                if let Some(f) = &self.objective {
                    finite_lipschitz(f)?;
                }
                self.check_oco_norm()?;
            }
            Variant::FwPrimal => {
                needs_objective("")?;
                let f = self.objective.as_ref().expect("checked");
                if f.smoothness().is_none() {
                    if self.sigma.is_none() {
                        return fail("fw_primal with a nonsmooth objective needs a smoothing parameter".into());
                    }
                    self.check_smoothable(f)?;
                }
            }
            Variant::FwBwc => {
                needs_set()?;
                self.check_l2("fw_bwc")?;
            }
            Variant::Combined => {
                needs_objective(" and a target set")?;
                needs_set()?;
                let f = self.objective.as_ref().expect("checked");
                match self.theta_update {
                    UpdateRule::Dual => {
                        finite_lipschitz(f)?;
                        self.check_oco_norm()?;
                    }
                    UpdateRule::Primal => {}
                    UpdateRule::PrimalSmoothed => self.check_smoothable(f)?,
                }
                match self.phi_update {
                    UpdateRule::Dual => self.check_oco_norm()?,
                    UpdateRule::Primal | UpdateRule::PrimalSmoothed => self.check_l2("combined φ update")?,
                }
            }
        }
        Ok(())
    }

    fn check_oco_norm(&self) -> Result<()> {
        if self.oco == OcoKind::Entropic && self.norm.primal != Norm::LInf {
            return Err(Error::Config("entropic updates need the L∞ norm".into()));
        }
        Ok(())
    }

    fn check_l2(&self, what: &str) -> Result<()> {
        if self.norm.primal != Norm::L2 {
            return Err(Error::Config(format!("{what} projects in the Euclidean norm; use norm L2")));
        }
        Ok(())
    }

    fn check_smoothable(&self, f: &Objective) -> Result<()> {
        self.check_l2("smoothing")?;
        if !f.lipschitz(Norm::L2).is_finite() {
            return Err(Error::Config("smoothing needs a finite Lipschitz constant".into()));
        }
        Ok(())
    }
}
