use std::fmt::Write as _;

use super::{FuzzySystem, Rule, Term, Trapezoid, Variable};
use crate::error::{Error, Result};
use crate::Scalar;

pub const FORMAT_HEADER: &str = "arfault-fuzzy 1";

impl<T: Scalar> FuzzySystem<T> {
    /// Line-oriented text form:
    ///
    /// ```text
    /// arfault-fuzzy 1
    /// input A2_a -0.5 1.2
    /// term LOW -0.5 -0.5 0.1 0.3
    /// ...
    /// output fault_score 0 1
    /// term NO 0 0 0.4 0.6
    /// rule LOW - -> NO
    /// ```
    pub fn to_text(&self) -> Result<String> {
        let mut s = String::new();
        writeln!(s, "{FORMAT_HEADER}").ok();
        let mut var = |kind: &str, v: &Variable<T>| -> Result<()> {
            check_token(&v.name)?;
            writeln!(s, "{kind} {} {} {}", v.name, v.lo, v.hi).ok();
            for t in &v.terms {
                check_token(&t.label)?;
                let [a, b, c, d] = t.set.points();
                writeln!(s, "term {} {a} {b} {c} {d}", t.label).ok();
            }
            Ok(())
        };
        for v in &self.inputs {
            var("input", v)?;
        }
        var("output", &self.output)?;
        for r in &self.rules {
            let ants: Vec<&str> = r
                .antecedent
                .iter()
                .zip(&self.inputs)
                .map(|(a, v)| a.map_or("-", |t| v.terms[t].label.as_str()))
                .collect();
            writeln!(s, "rule {} -> {}", ants.join(" "), self.output.terms[r.consequent].label).ok();
        }
        Ok(s)
    }
}

fn check_token(s: &str) -> Result<()> {
    if s.is_empty() || s == "-" || s == "->" || s.contains(char::is_whitespace) {
        return Err(Error::Format(format!("'{s}' cannot be written as a fuzzy label")));
    }
    Ok(())
}

pub fn parse_system<T: Scalar>(text: &str) -> Result<FuzzySystem<T>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, FORMAT_HEADER)) => {}
        Some((line, l)) => return Err(Error::Parse { line, msg: format!("expected '{FORMAT_HEADER}', found '{l}'") }),
        None => return Err(Error::Format("empty fuzzy system".into())),
    }
    let num = |line: u64, s: &str| -> Result<T> {
        s.parse::<f64>().map(T::lit).map_err(|e| Error::Parse { line, msg: format!("'{s}': {e}") })
    };
    let mut inputs: Vec<Variable<T>> = Vec::new();
    let mut output: Option<Variable<T>> = None;
    let mut rules = Vec::new();
    for (line, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok[0] {
            "input" | "output" if tok.len() == 4 => {
                if output.is_some() {
                    return Err(Error::Parse { line, msg: "variables must precede the output's terms and rules".into() });
                }
                let v = Variable { name: tok[1].into(), lo: num(line, tok[2])?, hi: num(line, tok[3])?, terms: vec![] };
                if tok[0] == "input" {
                    inputs.push(v);
                } else {
                    output = Some(v);
                }
            }
            "term" if tok.len() == 6 => {
                let v = output.as_mut().or(inputs.last_mut()).ok_or(Error::Parse { line, msg: "term before any variable".into() })?;
                let set = Trapezoid::new(num(line, tok[2])?, num(line, tok[3])?, num(line, tok[4])?, num(line, tok[5])?)
                    .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
                v.terms.push(Term { label: tok[1].into(), set });
            }
            "rule" if tok.len() == inputs.len() + 3 && tok[tok.len() - 2] == "->" => {
                let out = output.as_ref().ok_or(Error::Parse { line, msg: "rule before output".into() })?;
                let antecedent = tok[1..=inputs.len()]
                    .iter()
                    .zip(&inputs)
                    .map(|(t, v)| match *t {
                        "-" => Ok(None),
                        lbl => v.term_index(lbl).map(Some).ok_or(Error::Parse { line, msg: format!("unknown term {lbl} of {}", v.name) }),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let lbl = tok[tok.len() - 1];
                let consequent = out.term_index(lbl).ok_or(Error::Parse { line, msg: format!("unknown output term {lbl}") })?;
                rules.push(Rule { antecedent, consequent });
            }
            _ => return Err(Error::Parse { line, msg: format!("unrecognised line '{l}'") }),
        }
    }
    let output = output.ok_or_else(|| Error::Format("fuzzy system has no output".into()))?;
    FuzzySystem::new(inputs, output, rules)
}
