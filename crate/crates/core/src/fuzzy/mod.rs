//! Mamdani fuzzy inference with trapezoidal membership functions, a genetic
//! tuner and the adaptive re-tuning trigger.

mod adaptive;
mod ga;
mod text;

use serde::{Deserialize, Serialize};

pub use adaptive::{adaptive_check, AdaptiveProtector, AdaptiveState};
pub use ga::{
    balanced_accuracy, decode, encode, ga_tune, Chromosome, FuzzyTemplate, GaConfig, LabeledInputs, TunedFuzzy,
};
pub use text::{parse_system, FORMAT_HEADER};

use crate::error::{Error, Result};
use crate::Scalar;

/// Points of the output discretization on [0, 1].
pub const OUTPUT_RESOLUTION: usize = 1001;
/// Score at or above which the decision is "fault".
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trapezoid<T> {
    a: T,
    b: T,
    c: T,
    d: T,
}

impl<T: Scalar> Trapezoid<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let ok = [a, b, c, d].iter().all(|v| v.is_finite()) && a <= b && b <= c && c <= d;
        if !ok {
            return Err(Error::InvalidParameter(format!("trapezoid breakpoints must satisfy a <= b <= c <= d, got {a} {b} {c} {d}")));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn points(&self) -> [T; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn membership(&self, x: T) -> T {
        if x < self.a || x > self.d {
            T::zero()
        } else if x >= self.b && x <= self.c {
            T::one()
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term<T> {
    pub label: String,
    pub set: Trapezoid<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable<T> {
    pub name: String,
    pub lo: T,
    pub hi: T,
    pub terms: Vec<Term<T>>,
}

impl<T: Scalar> Variable<T> {
    pub fn term_index(&self, label: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.label == label)
    }
}

/// Antecedent term per input (`None` = input not used) and consequent term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedent: Vec<Option<usize>>,
    pub consequent: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzySystem<T> {
    inputs: Vec<Variable<T>>,
    output: Variable<T>,
    rules: Vec<Rule>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inference<T> {
    pub score: T,
    /// No rule fired; the score is the neutral 0.5.
    pub no_rule: bool,
    /// At least one input lay outside its universe and was clamped.
    pub clamped: bool,
}

impl<T: Scalar> Inference<T> {
    pub fn is_fault(&self) -> bool {
        self.score >= T::lit(DECISION_THRESHOLD)
    }
}

impl<T: Scalar> FuzzySystem<T> {
    pub fn new(inputs: Vec<Variable<T>>, output: Variable<T>, rules: Vec<Rule>) -> Result<Self> {
        if inputs.is_empty() || rules.is_empty() || output.terms.is_empty() {
            return Err(Error::InvalidParameter("fuzzy system needs inputs, output terms and at least one rule".into()));
        }
        for v in inputs.iter().chain(std::iter::once(&output)) {
            if v.terms.is_empty() || !(v.lo < v.hi) {
                return Err(Error::InvalidParameter(format!("variable {} needs terms and lo < hi", v.name)));
            }
            // Coverage: the largest membership must reach 0.5 everywhere.
            for i in 0..=200 {
                let x = (v.lo + (v.hi - v.lo) * T::from_usize_lossy(i) / T::lit(200.0)).min(v.hi);
                let m = v.terms.iter().map(|t| t.set.membership(x)).fold(T::zero(), T::max);
                if m < T::lit(0.5) - T::lit(1e-6) {
                    return Err(Error::InvalidParameter(format!("variable {} is not covered at {x}", v.name)));
                }
            }
        }
        if output.lo != T::zero() || output.hi != T::one() {
            return Err(Error::InvalidParameter("output universe must be [0, 1]".into()));
        }
        for (k, r) in rules.iter().enumerate() {
            let bad = r.antecedent.len() != inputs.len()
                || r.antecedent.iter().all(Option::is_none)
                || r.consequent >= output.terms.len()
                || r.antecedent.iter().zip(&inputs).any(|(a, v)| a.is_some_and(|t| t >= v.terms.len()));
            if bad {
                return Err(Error::InvalidParameter(format!("rule {k} references unknown terms")));
            }
        }
        Ok(Self { inputs, output, rules })
    }

    pub fn inputs(&self) -> &[Variable<T>] {
        &self.inputs
    }

    pub fn output(&self) -> &Variable<T> {
        &self.output
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Output-term membership tables, reusable across many inferences.
    pub fn evaluator(&self) -> Evaluator<'_, T> {
        let grid: Vec<Vec<T>> = self
            .output
            .terms
            .iter()
            .map(|t| (0..OUTPUT_RESOLUTION).map(|i| t.set.membership(grid_point(i))).collect())
            .collect();
        Evaluator { sys: self, grid }
    }

    pub fn infer(&self, inputs: &[T]) -> Result<Inference<T>> {
        self.evaluator().infer(inputs)
    }

    /// Fault decision: score at or above 0.5.
    pub fn decide(&self, inputs: &[T]) -> Result<(bool, Inference<T>)> {
        let inf = self.infer(inputs)?;
        Ok((inf.is_fault(), inf))
    }
}

fn grid_point<T: Scalar>(i: usize) -> T {
    T::from_usize_lossy(i) / T::from_usize_lossy(OUTPUT_RESOLUTION - 1)
}

pub struct Evaluator<'a, T> {
    sys: &'a FuzzySystem<T>,
    grid: Vec<Vec<T>>,
}

impl<T: Scalar> Evaluator<'_, T> {
    /// Firing strength per output term (max over rules), plus the clamp flag.
    pub fn term_strengths(&self, inputs: &[T]) -> Result<(Vec<T>, bool)> {
        let sys = self.sys;
        if inputs.len() != sys.inputs.len() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} fuzzy inputs", sys.inputs.len()),
                got: inputs.len().to_string(),
            });
        }
        let mut clamped = false;
        let mut memb: Vec<Vec<T>> = Vec::with_capacity(inputs.len());
        for (x, v) in inputs.iter().zip(&sys.inputs) {
            if !x.is_finite() {
                return Err(Error::NonFinite(format!("fuzzy input {}", v.name)));
            }
            let xc = x.max(v.lo).min(v.hi);
            clamped |= xc != *x;
            memb.push(v.terms.iter().map(|t| t.set.membership(xc)).collect());
        }
        if clamped {
            log::debug!("fuzzy inputs clamped to their universes");
        }
        let mut strengths = vec![T::zero(); sys.output.terms.len()];
        for r in &sys.rules {
            let w = r
                .antecedent
                .iter()
                .enumerate()
                .filter_map(|(i, a)| a.map(|t| memb[i][t]))
                .fold(T::one(), T::min);
            let s = &mut strengths[r.consequent];
            *s = s.max(w);
        }
        Ok((strengths, clamped))
    }

    /// Centroid of the max-aggregated, min-clipped output sets; `None` when
    /// the aggregate has no mass.
    pub fn centroid(&self, strengths: &[T]) -> Option<T> {
        let (mut num, mut den) = (T::zero(), T::zero());
        for i in 0..OUTPUT_RESOLUTION {
            let mu = self
                .grid
                .iter()
                .zip(strengths)
                .map(|(g, &s)| g[i].min(s))
                .fold(T::zero(), T::max);
            num = num + mu * grid_point::<T>(i);
            den = den + mu;
        }
        (den > T::zero()).then(|| num / den)
    }

    pub fn infer(&self, inputs: &[T]) -> Result<Inference<T>> {
        let (strengths, clamped) = self.term_strengths(inputs)?;
        Ok(match self.centroid(&strengths) {
            Some(score) => Inference { score: score.max(T::zero()).min(T::one()), no_rule: false, clamped },
            None => Inference { score: T::lit(0.5), no_rule: true, clamped },
        })
    }
}
