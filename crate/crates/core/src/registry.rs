//! Named built-in displacements and axiom checks, selectable at runtime.

use crate::axioms::{self, AxiomReport, Hypothesis};
use crate::displacement::{DisplacementSpec, Domain, Graph, Smooth};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::gauge::Gauge;

pub trait Builtin: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn build(&self) -> Result<DisplacementSpec>;
}

struct Exponential;
struct Roundabout;
struct SantiagoGraph;
struct IdentityGauge;

impl Builtin for Exponential {
    fn name(&self) -> &'static str {
        "exponential"
    }
    fn description(&self) -> &'static str {
        "smooth non-Stieltjes displacement exp(y^2 - x^2) - exp(x - y) on [0, 1]"
    }
    fn build(&self) -> Result<DisplacementSpec> {
        Ok(DisplacementSpec::Smooth(Smooth::from_exprs(
            Domain::new(0.0, 1.0)?,
            "exp(y^2 - x^2) - exp(x - y)",
            Some("2*y*exp(y^2 - x^2) + exp(x - y)"),
        )?))
    }
}

impl Builtin for Roundabout {
    fn name(&self) -> &'static str {
        "roundabout"
    }
    fn description(&self) -> &'static str {
        "minimum counter-clockwise angle on the circle"
    }
    fn build(&self) -> Result<DisplacementSpec> {
        Ok(DisplacementSpec::Angular)
    }
}

impl Builtin for SantiagoGraph {
    fn name(&self) -> &'static str {
        "santiago_graph"
    }
    fn description(&self) -> &'static str {
        "four-vertex weighted directed graph of travel times in minutes"
    }
    fn build(&self) -> Result<DisplacementSpec> {
        Ok(DisplacementSpec::FiniteGraph(Graph::new(vec![
            vec![0.0, 9.0, 4.0, 10.0],
            vec![10.0, 0.0, 14.0, 8.0],
            vec![7.0, 9.0, 0.0, 5.0],
            vec![11.0, 6.0, 7.0, 0.0],
        ])?))
    }
}

impl Builtin for IdentityGauge {
    fn name(&self) -> &'static str {
        "identity_gauge"
    }
    fn description(&self) -> &'static str {
        "Stieltjes displacement of g(t) = t on [0, 1]"
    }
    fn build(&self) -> Result<DisplacementSpec> {
        Ok(DisplacementSpec::Stieltjes(Gauge::identity(0.0, 1.0)?))
    }
}

static BUILTINS: [&dyn Builtin; 4] = [&Exponential, &Roundabout, &SantiagoGraph, &IdentityGauge];

pub fn builtins() -> &'static [&'static dyn Builtin] {
    &BUILTINS
}

pub fn make_builtin(name: &str) -> Result<DisplacementSpec> {
    BUILTINS
        .iter()
        .find(|b| b.name() == name)
        .ok_or_else(|| Error::UnknownBuiltin(name.to_string()))?
        .build()
}

/// Parameters shared by all checks; each check reads the ones it needs.
#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub samples: usize,
    pub shrink_levels: usize,
    pub grid: usize,
    /// Rescaling `φ(r)` for (H2′).
    pub phi: Expr,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> CheckOptions {
        CheckOptions {
            samples: 21,
            shrink_levels: 8,
            grid: 64,
            phi: Expr::parse("r", &["r"]).expect("valid literal"),
            seed: 0,
        }
    }
}

pub trait AxiomCheck: Send + Sync {
    fn name(&self) -> &'static str;
    fn hypothesis(&self) -> Hypothesis;
    /// Whether the check accepts this kind of displacement at all.
    fn applies_to(&self, spec: &DisplacementSpec) -> bool;
    fn run(&self, spec: &DisplacementSpec, opts: &CheckOptions) -> Result<AxiomReport>;
}

macro_rules! check {
    ($ty:ident, $name:literal, $hyp:expr, |$spec:ident| $applies:expr, |$s:ident, $o:ident| $run:expr) => {
        struct $ty;
        impl AxiomCheck for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn hypothesis(&self) -> Hypothesis {
                $hyp
            }
            fn applies_to(&self, $spec: &DisplacementSpec) -> bool {
                $applies
            }
            fn run(&self, $s: &DisplacementSpec, $o: &CheckOptions) -> Result<AxiomReport> {
                $run
            }
        }
    };
}

check!(H1, "h1", Hypothesis::H1, |_spec| true, |s, o| axioms::check_h1(
    s, o.samples
));
check!(
    H2Usc,
    "h2usc",
    Hypothesis::H2Usc,
    |spec| spec.interval().is_some(),
    |s, o| { axioms::check_h2_usc(s, o.samples, o.shrink_levels) }
);
check!(H2Prime, "h2prime", Hypothesis::H2Prime, |_spec| true, |s, o| {
    axioms::check_h2prime(s, &o.phi, o.samples)
});
check!(H3, "h3", Hypothesis::H3, |spec| spec.interval().is_some(), |s, o| {
    axioms::check_h3(s, o.samples)
});
check!(
    H4,
    "h4",
    Hypothesis::H4Gamma,
    |spec| spec.interval().is_some(),
    |s, o| { axioms::check_h4(s, o.samples * o.samples, o.seed) }
);
check!(H5, "h5", Hypothesis::H5, |spec| spec.interval().is_some(), |s, o| {
    axioms::check_h5(s, o.samples)
});
check!(
    D2,
    "d2",
    Hypothesis::D2Positive,
    |spec| matches!(spec, DisplacementSpec::Smooth(_)),
    |s, o| { axioms::check_d2_positive(s, o.grid) }
);

static CHECKS: [&dyn AxiomCheck; 7] = [&H1, &H2Usc, &H2Prime, &H3, &H4, &H5, &D2];

pub fn checks() -> &'static [&'static dyn AxiomCheck] {
    &CHECKS
}

pub fn find_check(name: &str) -> Result<&'static dyn AxiomCheck> {
    CHECKS
        .iter()
        .copied()
        .find(|c| c.name() == name)
        .ok_or_else(|| Error::UnknownCheck(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_builds() {
        for b in builtins() {
            let spec = b.build().unwrap();
            assert_eq!(make_builtin(b.name()).unwrap().kind(), spec.kind());
            assert!(!b.description().is_empty());
        }
        assert!(matches!(make_builtin("zermelo"), Err(Error::UnknownBuiltin(_))));
    }

    #[test]
    fn checks_are_found_by_name() {
        for name in ["h1", "h2usc", "h2prime", "h3", "h4", "h5", "d2"] {
            assert_eq!(find_check(name).unwrap().name(), name);
        }
        assert!(matches!(find_check("h6"), Err(Error::UnknownCheck(_))));
    }

    #[test]
    fn applicable_checks_run_on_builtins() {
        let opts = CheckOptions {
            samples: 9,
            ..CheckOptions::default()
        };
        for b in builtins() {
            let spec = b.build().unwrap();
            for c in checks().iter().filter(|c| c.applies_to(&spec)) {
                let report = c.run(&spec, &opts).unwrap();
                assert_eq!(report.hypothesis, c.hypothesis());
            }
        }
    }
}
