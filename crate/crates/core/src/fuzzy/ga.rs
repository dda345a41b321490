use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FuzzySystem, Rule, Term, Trapezoid, Variable};
use crate::error::{Error, Result};
use crate::Scalar;

pub const INPUT_LABELS: [&str; 3] = ["LOW", "MED", "HIGH"];
const OUTPUT_LABELS_2: [&str; 2] = ["NO", "FAULT"];
const OUTPUT_LABELS_3: [&str; 3] = ["NO", "UNSURE", "FAULT"];
const INPUT_WEIGHTS: usize = 5;
const MUTATION_SIGMA: f64 = 0.25;
const MIN_WEIGHT: f64 = 1e-3;

/// Structure the tuner fills in: input names, rule groups and the number of
/// output terms. Each group yields a full grid of rules over its inputs
/// (three terms per input); inputs outside the group are ignored by those
/// rules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzyTemplate {
    pub input_names: Vec<String>,
    pub groups: Vec<Vec<usize>>,
    pub output_terms: usize,
}

impl FuzzyTemplate {
    /// `(A2, A5)` per phase, one 3×3 rule grid per phase.
    pub fn per_phase() -> Self {
        let mut names = Vec::new();
        for p in ["a", "b", "c"] {
            names.push(format!("A2_{p}"));
            names.push(format!("A5_{p}"));
        }
        Self { input_names: names, groups: vec![vec![0, 1], vec![2, 3], vec![4, 5]], output_terms: 2 }
    }

    /// One rule grid over all the given inputs.
    pub fn joint(names: &[&str]) -> Self {
        Self {
            input_names: names.iter().map(|s| s.to_string()).collect(),
            groups: vec![(0..names.len()).collect()],
            output_terms: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.input_names.len();
        let ok = n > 0
            && !self.groups.is_empty()
            && self.groups.iter().all(|g| !g.is_empty() && g.iter().all(|&i| i < n))
            && (2..=3).contains(&self.output_terms)
            && self.input_names.iter().all(|s| !s.is_empty() && !s.contains(char::is_whitespace));
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("fuzzy template needs inputs, non-empty groups over them and 2 or 3 output terms".into()))
        }
    }

    pub fn rule_antecedents(&self) -> Vec<Vec<Option<usize>>> {
        let mut out = Vec::new();
        for g in &self.groups {
            let combos = 3usize.pow(g.len() as u32);
            for mut code in 0..combos {
                let mut ant = vec![None; self.input_names.len()];
                for &i in g {
                    ant[i] = Some(code % 3);
                    code /= 3;
                }
                out.push(ant);
            }
        }
        out
    }

    fn output_labels(&self) -> &'static [&'static str] {
        if self.output_terms == 3 {
            &OUTPUT_LABELS_3
        } else {
            &OUTPUT_LABELS_2
        }
    }

    fn output_weights(&self) -> usize {
        2 * self.output_terms - 1
    }

    pub fn weight_len(&self) -> usize {
        INPUT_WEIGHTS * self.input_names.len() + self.output_weights()
    }

    /// Index of the most fault-like output term.
    pub fn fault_term(&self) -> usize {
        self.output_terms - 1
    }
}

/// Genes: non-negative increments that fix the breakpoints of each variable's
/// partition, then one consequent per rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub weights: Vec<f64>,
    pub consequents: Vec<usize>,
}

/// Breakpoints from increments: cumulative shares of the span.
fn cut_points(w: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    w[..w.len() - 1]
        .iter()
        .map(|&x| {
            acc += x;
            (lo + (hi - lo) * (acc / total)).min(hi)
        })
        .collect()
}

fn trap<T: Scalar>(a: f64, b: f64, c: f64, d: f64) -> Result<Trapezoid<T>> {
    Trapezoid::new(T::lit(a), T::lit(b), T::lit(c), T::lit(d))
}

/// Build the three-term Ruspini partition LOW / MED / HIGH (or the output
/// partition) from increments.
fn partition<T: Scalar>(w: &[f64], lo: f64, hi: f64, labels: &[&str]) -> Result<Vec<Term<T>>> {
    let p = cut_points(w, lo, hi);
    let sets = match p.len() {
        2 => vec![trap(lo, lo, p[0], p[1])?, trap(p[0], p[1], hi, hi)?],
        4 => vec![trap(lo, lo, p[0], p[1])?, trap(p[0], p[1], p[2], p[3])?, trap(p[2], p[3], hi, hi)?],
        _ => return Err(Error::InvalidParameter("unsupported partition size".into())),
    };
    Ok(labels.iter().zip(sets).map(|(l, set)| Term { label: l.to_string(), set }).collect())
}

pub fn decode<T: Scalar>(template: &FuzzyTemplate, universes: &[(T, T)], ch: &Chromosome) -> Result<FuzzySystem<T>> {
    template.validate()?;
    let ants = template.rule_antecedents();
    if ch.weights.len() != template.weight_len() || ch.consequents.len() != ants.len() || universes.len() != template.input_names.len() {
        return Err(Error::InvalidParameter("chromosome does not match template".into()));
    }
    if ch.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidParameter("chromosome weights must be finite and non-negative".into()));
    }
    let mut inputs = Vec::with_capacity(universes.len());
    for (i, (name, &(lo, hi))) in template.input_names.iter().zip(universes).enumerate() {
        let w = &ch.weights[i * INPUT_WEIGHTS..(i + 1) * INPUT_WEIGHTS];
        let terms = partition(w, lo.to_f64_lossy(), hi.to_f64_lossy(), &INPUT_LABELS)?;
        inputs.push(Variable { name: name.clone(), lo, hi, terms });
    }
    let ow = &ch.weights[INPUT_WEIGHTS * universes.len()..];
    let output = Variable {
        name: "fault_score".into(),
        lo: T::zero(),
        hi: T::one(),
        terms: partition(ow, 0.0, 1.0, template.output_labels())?,
    };
    let rules = ants
        .into_iter()
        .zip(&ch.consequents)
        .map(|(antecedent, &consequent)| Rule { antecedent, consequent })
        .collect();
    FuzzySystem::new(inputs, output, rules)
}

/// Inverse of [`decode`] for systems with the template's structure; the
/// increments are normalised to unit sum per variable.
pub fn encode<T: Scalar>(template: &FuzzyTemplate, sys: &FuzzySystem<T>) -> Result<Chromosome> {
    template.validate()?;
    let ants = template.rule_antecedents();
    let mismatch = || Error::InvalidParameter("system does not follow the template".into());
    if sys.inputs().len() != template.input_names.len() || sys.rules().len() != ants.len() {
        return Err(mismatch());
    }
    let incr = |v: &Variable<T>, cuts: Vec<f64>| -> Vec<f64> {
        let (lo, hi) = (v.lo.to_f64_lossy(), v.hi.to_f64_lossy());
        let mut prev = lo;
        let mut out: Vec<f64> = cuts
            .into_iter()
            .chain(std::iter::once(hi))
            .map(|c| {
                let d = (c - prev) / (hi - lo);
                prev = c;
                d
            })
            .collect();
        let s: f64 = out.iter().sum();
        out.iter_mut().for_each(|x| *x /= s);
        out
    };
    let mut weights = Vec::with_capacity(template.weight_len());
    for v in sys.inputs() {
        if v.terms.len() != 3 {
            return Err(mismatch());
        }
        let [_, _, p0, p1] = v.terms[0].set.points();
        let [_, _, p2, p3] = v.terms[1].set.points();
        weights.extend(incr(v, [p0, p1, p2, p3].iter().map(|x| x.to_f64_lossy()).collect()));
    }
    let out = sys.output();
    if out.terms.len() != template.output_terms {
        return Err(mismatch());
    }
    let mut cuts = Vec::new();
    for t in &out.terms[..out.terms.len() - 1] {
        let [_, _, c, d] = t.set.points();
        cuts.push(c.to_f64_lossy());
        cuts.push(d.to_f64_lossy());
    }
    weights.extend(incr(out, cuts));
    for (r, a) in sys.rules().iter().zip(&ants) {
        if &r.antecedent != a {
            return Err(mismatch());
        }
    }
    Ok(Chromosome { weights, consequents: sys.rules().iter().map(|r| r.consequent).collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism_count: usize,
    pub seed: u64,
    /// Training rows used for fitness; larger corpora are subsampled per class.
    pub max_train: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 30,
            generations: 40,
            crossover_rate: 0.8,
            mutation_rate: 0.1,
            elitism_count: 2,
            seed: 0,
            max_train: 600,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let rate = |r: f64| (0.0..=1.0).contains(&r);
        if self.population < 4 || !rate(self.crossover_rate) || !rate(self.mutation_rate) || self.elitism_count >= self.population || self.max_train < 2 {
            return Err(Error::InvalidParameter(format!(
                "GA config needs population >= 4, rates in [0, 1], elitism < population, max_train >= 2 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Fuzzy input vectors with fault (`true`) / no-fault labels.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabeledInputs<T> {
    pub inputs: Vec<Vec<T>>,
    pub labels: Vec<bool>,
}

impl<T: Scalar> LabeledInputs<T> {
    pub fn push(&mut self, x: Vec<T>, label: bool) {
        self.inputs.push(x);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|&l| l) && self.labels.iter().any(|&l| !l)
    }

    /// Per-input `[min, max]` widened by 5% of the span on each side.
    pub fn universes(&self) -> Vec<(T, T)> {
        let d = self.inputs.first().map_or(0, Vec::len);
        (0..d)
            .map(|j| {
                let lo = self.inputs.iter().map(|r| r[j]).fold(T::infinity(), T::min);
                let hi = self.inputs.iter().map(|r| r[j]).fold(T::neg_infinity(), T::max);
                let span = hi - lo;
                let pad = if span > T::zero() { span * T::lit(0.05) } else { T::lit(0.5) * lo.abs().max(T::one()) };
                (lo - pad, hi + pad)
            })
            .collect()
    }
}

/// Mean of the per-class recall over the classes present.
pub fn balanced_accuracy(pred: &[bool], labels: &[bool]) -> f64 {
    let mut hit = [0usize; 2];
    let mut tot = [0usize; 2];
    for (&p, &l) in pred.iter().zip(labels) {
        tot[l as usize] += 1;
        hit[l as usize] += (p == l) as usize;
    }
    let recalls: Vec<f64> = (0..2).filter(|&c| tot[c] > 0).map(|c| hit[c] as f64 / tot[c] as f64).collect();
    if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunedFuzzy<T> {
    pub system: FuzzySystem<T>,
    pub chromosome: Chromosome,
    pub fitness: f64,
    /// Best fitness so far after initialisation and after each generation.
    pub trace: Vec<f64>,
}

fn fitness<T: Scalar>(template: &FuzzyTemplate, universes: &[(T, T)], ch: &Chromosome, data: &LabeledInputs<T>) -> f64 {
    let Ok(sys) = decode(template, universes, ch) else { return 0.0 };
    let ev = sys.evaluator();
    let pred: Vec<bool> = data.inputs.iter().map(|x| ev.infer(x).map(|i| i.is_fault()).unwrap_or(false)).collect();
    balanced_accuracy(&pred, &data.labels)
}

/// Per-class subsample of at most `max` rows, drawn without replacement.
fn subsample<T: Scalar>(data: &LabeledInputs<T>, max: usize, rng: &mut ChaCha8Rng) -> LabeledInputs<T> {
    if data.len() <= max {
        return data.clone();
    }
    let mut out = LabeledInputs::default();
    for class in [false, true] {
        let idx: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        let take = idx.len().min(max / 2);
        let mut chosen: Vec<usize> = idx.choose_multiple(rng, take).copied().collect();
        chosen.sort_unstable();
        for i in chosen {
            out.push(data.inputs[i].clone(), class);
        }
    }
    out
}

/// Start point: uniform partitions with each rule's consequent set by the
/// class-balanced vote of the training rows that fire it.
fn informed_chromosome<T: Scalar>(template: &FuzzyTemplate, universes: &[(T, T)], data: &LabeledInputs<T>) -> Chromosome {
    let weights = vec![1.0; template.weight_len()];
    let ants = template.rule_antecedents();
    let mut consequents = vec![0; ants.len()];
    let probe = Chromosome { weights: weights.clone(), consequents: consequents.clone() };
    if let Ok(sys) = decode(template, universes, &probe) {
        let n_fault = data.labels.iter().filter(|&&l| l).count().max(1) as f64;
        let n_ok = (data.len() as f64 - n_fault).max(1.0);
        let mut votes = vec![[0.0f64; 2]; ants.len()];
        for (x, &l) in data.inputs.iter().zip(&data.labels) {
            let memb: Vec<Vec<f64>> = sys
                .inputs()
                .iter()
                .zip(x)
                .map(|(v, &xi)| v.terms.iter().map(|t| t.set.membership(xi.max(v.lo).min(v.hi)).to_f64_lossy()).collect())
                .collect();
            for (r, ant) in ants.iter().enumerate() {
                let w = ant.iter().enumerate().filter_map(|(i, a)| a.map(|t| memb[i][t])).fold(1.0, f64::min);
                votes[r][l as usize] += w / if l { n_fault } else { n_ok };
            }
        }
        for (c, v) in consequents.iter_mut().zip(votes) {
            *c = if v[1] > v[0] { template.fault_term() } else { 0 };
        }
    }
    Chromosome { weights, consequents }
}

fn random_chromosome(template: &FuzzyTemplate, rules: usize, rng: &mut ChaCha8Rng) -> Chromosome {
    Chromosome {
        weights: (0..template.weight_len()).map(|_| rng.random_range(0.05..1.0)).collect(),
        consequents: (0..rules).map(|_| rng.random_range(0..template.output_terms)).collect(),
    }
}

fn tournament<'a>(pop: &'a [Chromosome], fit: &[f64], rng: &mut ChaCha8Rng) -> &'a Chromosome {
    let mut best = rng.random_range(0..pop.len());
    for _ in 0..2 {
        let c = rng.random_range(0..pop.len());
        if fit[c] > fit[best] {
            best = c;
        }
    }
    &pop[best]
}

fn crossover(a: &Chromosome, b: &Chromosome, rng: &mut ChaCha8Rng) -> (Chromosome, Chromosome) {
    let nw = a.weights.len();
    let len = nw + a.consequents.len();
    let cut = rng.random_range(1..len);
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    for g in cut..len {
        if g < nw {
            std::mem::swap(&mut c1.weights[g], &mut c2.weights[g]);
        } else {
            std::mem::swap(&mut c1.consequents[g - nw], &mut c2.consequents[g - nw]);
        }
    }
    (c1, c2)
}

fn mutate(c: &mut Chromosome, rate: f64, terms: usize, rng: &mut ChaCha8Rng) {
    let normal = Normal::new(0.0, MUTATION_SIGMA).expect("valid sigma");
    for w in &mut c.weights {
        if rng.random::<f64>() < rate {
            *w = (*w + normal.sample(rng)).abs().max(MIN_WEIGHT);
        }
    }
    for k in &mut c.consequents {
        if rng.random::<f64>() < rate {
            *k = rng.random_range(0..terms);
        }
    }
}

/// Genetic tuning of breakpoints and rule consequents, maximising balanced
/// accuracy on the training rows. Deterministic for a given seed.
pub fn ga_tune<T: Scalar>(train: &LabeledInputs<T>, template: &FuzzyTemplate, cfg: &GaConfig) -> Result<TunedFuzzy<T>> {
    template.validate()?;
    cfg.validate()?;
    if !train.has_both_classes() {
        return Err(Error::Degenerate("fuzzy tuning needs both fault and no-fault rows".into()));
    }
    let d = template.input_names.len();
    if train.inputs.iter().any(|x| x.len() != d) {
        return Err(Error::SchemaMismatch { expected: format!("{d} fuzzy inputs"), got: "rows of another width".into() });
    }
    if train.inputs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fuzzy training inputs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let universes = train.universes();
    let data = subsample(train, cfg.max_train, &mut rng);
    let rules = template.rule_antecedents().len();

    let mut pop = vec![informed_chromosome(template, &universes, &data)];
    while pop.len() < cfg.population {
        pop.push(random_chromosome(template, rules, &mut rng));
    }
    let eval = |pop: &[Chromosome]| -> Vec<f64> { pop.par_iter().map(|c| fitness(template, &universes, c, &data)).collect() };
    let mut fit = eval(&pop);
    let argmax = |fit: &[f64]| (0..fit.len()).fold(0, |b, i| if fit[i] > fit[b] { i } else { b });
    let mut best_i = argmax(&fit);
    let mut best = (pop[best_i].clone(), fit[best_i]);
    let mut trace = vec![best.1];

    for _ in 0..cfg.generations {
        if best.1 >= 1.0 {
            break;
        }
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| fit[b].total_cmp(&fit[a]).then(a.cmp(&b)));
        let mut next: Vec<Chromosome> = order[..cfg.elitism_count].iter().map(|&i| pop[i].clone()).collect();
        while next.len() < cfg.population {
            let p1 = tournament(&pop, &fit, &mut rng).clone();
            let p2 = tournament(&pop, &fit, &mut rng).clone();
            let (mut c1, mut c2) = if rng.random::<f64>() < cfg.crossover_rate { crossover(&p1, &p2, &mut rng) } else { (p1, p2) };
            mutate(&mut c1, cfg.mutation_rate, template.output_terms, &mut rng);
            mutate(&mut c2, cfg.mutation_rate, template.output_terms, &mut rng);
            next.push(c1);
            if next.len() < cfg.population {
                next.push(c2);
            }
        }
        pop = next;
        fit = eval(&pop);
        best_i = argmax(&fit);
        if fit[best_i] > best.1 {
            best = (pop[best_i].clone(), fit[best_i]);
        }
        trace.push(best.1);
    }
    let system = decode(template, &universes, &best.0)?;
    Ok(TunedFuzzy { system, chromosome: best.0, fitness: best.1, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledInputs<f64> {
        let mut d = LabeledInputs::default();
        for i in 0..60 {
            let x = i as f64 / 10.0;
            d.push(vec![x], x >= 3.3);
        }
        d
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let t = FuzzyTemplate::joint(&["x"]);
        let cfg = GaConfig { generations: 50, seed: 5, ..GaConfig::default() };
        let tuned = ga_tune(&toy(), &t, &cfg).unwrap();
        assert_eq!(tuned.fitness, 1.0);
        assert!(tuned.trace.len() <= 51);
        assert!(tuned.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn zero_generations_and_determinism() {
        let t = FuzzyTemplate::joint(&["x"]);
        let cfg = GaConfig { generations: 0, seed: 9, ..GaConfig::default() };
        let a = ga_tune(&toy(), &t, &cfg).unwrap();
        assert_eq!(a.trace.len(), 1);
        let cfg = GaConfig { generations: 10, seed: 9, ..GaConfig::default() };
        let mut noisy = toy();
        noisy.labels[10] = true;
        noisy.labels[50] = false;
        let b = ga_tune(&noisy, &t, &cfg).unwrap();
        let c = ga_tune(&noisy, &t, &cfg).unwrap();
        assert_eq!(b, c);
    }

    #[test]
    fn single_class_rejected() {
        let mut d = toy();
        d.labels.iter_mut().for_each(|l| *l = true);
        assert!(ga_tune(&d, &FuzzyTemplate::joint(&["x"]), &GaConfig::default()).is_err());
        let bad = GaConfig { population: 3, ..GaConfig::default() };
        assert!(ga_tune(&toy(), &FuzzyTemplate::joint(&["x"]), &bad).is_err());
    }

    #[test]
    fn template_rules() {
        assert_eq!(FuzzyTemplate::per_phase().rule_antecedents().len(), 27);
        assert_eq!(FuzzyTemplate::joint(&["x"]).rule_antecedents().len(), 3);
        assert_eq!(FuzzyTemplate::joint(&["x", "y"]).rule_antecedents().len(), 9);
    }

    #[test]
    fn balanced_accuracy_values() {
        assert_eq!(balanced_accuracy(&[true, true, true, false], &[true, true, true, true]), 0.75);
        assert_eq!(balanced_accuracy(&[true, false, false, false], &[true, false, false, true]), 0.75);
    }
}
