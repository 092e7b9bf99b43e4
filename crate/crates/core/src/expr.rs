//! Linear parameter expressions.
//!
//! A [`ParameterExpression`] is a linear combination of named parameters plus
//! a constant, e.g. `3.141592653589793*a + 0.5*b`. Gate angles and ansatz
//! parameters are expressions; binding an environment of name→value pairs
//! turns one into a number. Expressions are deliberately linear: the adjoint
//! gradient chain rule only needs the per-name coefficients, and there is no
//! constructor that could produce a product of two parameters.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name → value environment used to bind expressions.
pub type Bindings = HashMap<String, f64>;

/// A linear combination of named parameters plus a constant.
///
/// Invariants: no stored coefficient is exactly zero, and parameter names are
/// non-empty and contain no whitespace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterExpression {
    /// Per-parameter coefficients, keyed by name.
    terms: BTreeMap<String, f64>,
    /// Constant offset.
    #[serde(rename = "const")]
    constant: f64,
}

impl ParameterExpression {
    /// The constant expression `c`.
    pub fn constant(c: f64) -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    /// The expression `1*name`.
    pub fn variable(name: impl Into<String>) -> Result<Self> {
        Self::term(name, 1.0)
    }

    /// The expression `coeff*name`.
    pub fn term(name: impl Into<String>, coeff: f64) -> Result<Self> {
        let name = name.into();
        validate_name(&name)?;
        if !coeff.is_finite() {
            return Err(Error::NonFinite("expression coefficient"));
        }
        let mut terms = BTreeMap::new();
        if coeff != 0.0 {
            terms.insert(name, coeff);
        }
        Ok(Self {
            terms,
            constant: 0.0,
        })
    }

    /// Build from raw parts, validating names and pruning zero coefficients.
    pub fn from_terms(terms: impl IntoIterator<Item = (String, f64)>, constant: f64) -> Result<Self> {
        let mut out = Self::constant(constant);
        for (name, coeff) in terms {
            out = out.add(&Self::term(name, coeff)?);
        }
        Ok(out)
    }

    /// True when the expression has no parameter terms.
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant part.
    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    /// Coefficient of `name`, zero when absent.
    pub fn coefficient(&self, name: &str) -> f64 {
        self.terms.get(name).copied().unwrap_or(0.0)
    }

    /// Iterate over `(name, coefficient)` pairs in name order.
    pub fn iter_terms(&self) -> impl Iterator<Item = (&str, f64)> {
        self.terms.iter().map(|(n, &c)| (n.as_str(), c))
    }

    /// Parameter names in sorted order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    /// Termwise sum; cancellations prune to the constant expression.
    pub fn add(&self, rhs: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (name, &coeff) in &rhs.terms {
            let entry = terms.entry(name.clone()).or_insert(0.0);
            *entry += coeff;
            if *entry == 0.0 {
                terms.remove(name);
            }
        }
        Self {
            terms,
            constant: self.constant + rhs.constant,
        }
    }

    /// Every coefficient and the constant multiplied by `k`.
    pub fn scale(&self, k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::NonFinite("expression scale factor"));
        }
        if k == 0.0 {
            return Ok(Self::constant(0.0));
        }
        Ok(Self {
            terms: self.terms.iter().map(|(n, &c)| (n.clone(), c * k)).collect(),
            constant: self.constant * k,
        })
    }

    /// Negation, used when inverting parameterized gates.
    pub fn neg(&self) -> Self {
        self.scale(-1.0).expect("-1 is finite")
    }

    /// Evaluate under `env`. Every parameter name must be bound.
    pub fn eval(&self, env: &Bindings) -> Result<f64> {
        let mut acc = self.constant;
        for (name, &coeff) in &self.terms {
            let value = env
                .get(name)
                .ok_or_else(|| Error::MissingParameter(name.clone()))?;
            acc += coeff * value;
        }
        Ok(acc)
    }

    /// Parse the rendered form back into an expression.
    ///
    /// Accepts `+`/`-` separated terms of the form `c*name`, bare `name`
    /// (unit coefficient), or a bare numeric constant.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::constant(0.0);
        let mut rest = text.trim();
        if rest.is_empty() {
            return Err(Error::invalid("expression", "empty string"));
        }
        let mut sign = 1.0;
        if let Some(stripped) = rest.strip_prefix('-') {
            sign = -1.0;
            rest = stripped.trim_start();
        }
        loop {
            let split = rest
                .char_indices()
                .find(|&(i, c)| i > 0 && (c == '+' || c == '-') && rest[..i].ends_with(' '));
            let (piece, tail) = match split {
                Some((i, c)) => (&rest[..i], (c, &rest[i + 1..])),
                None => (rest, (' ', "")),
            };
            let piece = piece.trim();
            let term = match piece.split_once('*') {
                Some((coeff, name)) => {
                    let c: f64 = coeff.trim().parse().map_err(|_| {
                        Error::invalid("expression", format!("bad coefficient `{coeff}`"))
                    })?;
                    Self::term(name.trim(), sign * c)?
                }
                None => match piece.parse::<f64>() {
                    Ok(c) => Self::constant(sign * c),
                    Err(_) => Self::term(piece, sign)?,
                },
            };
            out = out.add(&term);
            let (next_sign, tail) = tail;
            if tail.is_empty() {
                break;
            }
            sign = if next_sign == '-' { -1.0 } else { 1.0 };
            rest = tail.trim_start();
        }
        Ok(out)
    }
}

fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::invalid("parameter name", "empty string"));
    }
    if name.chars().any(char::is_whitespace) {
        return Err(Error::invalid(
            "parameter name",
            format!("`{name}` contains whitespace"),
        ));
    }
    Ok(())
}

impl std::fmt::Display for ParameterExpression {
    /// Terms in name order, coefficients in shortest round-trip decimal:
    /// `2*a + 0.5*b - 1`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (name, coeff) in &self.terms {
            if first {
                if coeff.is_sign_negative() {
                    write!(f, "-{}*{}", -coeff, name)?;
                } else {
                    write!(f, "{coeff}*{name}")?;
                }
                first = false;
            } else if coeff.is_sign_negative() {
                write!(f, " - {}*{}", -coeff, name)?;
            } else {
                write!(f, " + {coeff}*{name}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant != 0.0 {
            if self.constant.is_sign_negative() {
                write!(f, " - {}", -self.constant)?;
            } else {
                write!(f, " + {}", self.constant)?;
            }
        }
        Ok(())
    }
}

impl From<f64> for ParameterExpression {
    fn from(c: f64) -> Self {
        Self::constant(c)
    }
}

/// Build a bindings map from `(name, value)` pairs.
pub fn bindings<const N: usize>(pairs: [(&str, f64); N]) -> Bindings {
    pairs.iter().map(|&(n, v)| (n.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn var(name: &str) -> ParameterExpression {
        ParameterExpression::variable(name).unwrap()
    }

    #[test]
    fn add_matches_resolver_example() {
        // pi*a + 0.5*b, the canonical two-term expression.
        let e = ParameterExpression::term("a", PI)
            .unwrap()
            .add(&ParameterExpression::term("b", 0.5).unwrap());
        assert_eq!(e.coefficient("a"), PI);
        assert_eq!(e.coefficient("b"), 0.5);
        assert_eq!(e.to_string(), "3.141592653589793*a + 0.5*b");
    }

    #[test]
    fn add_cancels_to_constant() {
        let e = var("a").add(&ParameterExpression::term("a", -1.0).unwrap());
        assert!(e.is_constant());
        assert_eq!(e.constant_part(), 0.0);
        assert_eq!(e.iter_terms().count(), 0);
    }

    #[test]
    fn add_folds_constants() {
        let e = ParameterExpression::term("a", 2.0)
            .unwrap()
            .add(&ParameterExpression::constant(3.0))
            .add(&ParameterExpression::constant(4.0));
        assert_eq!(e.coefficient("a"), 2.0);
        assert_eq!(e.constant_part(), 7.0);
    }

    #[test]
    fn scale_examples() {
        let e = var("a").add(&ParameterExpression::constant(1.0));
        let doubled = e.scale(2.0).unwrap();
        assert_eq!(doubled.coefficient("a"), 2.0);
        assert_eq!(doubled.constant_part(), 2.0);

        let zeroed = ParameterExpression::term("a", PI).unwrap().scale(0.0).unwrap();
        assert!(zeroed.is_constant());
        assert_eq!(zeroed.constant_part(), 0.0);

        let flipped = ParameterExpression::term("b", 0.5).unwrap().scale(-2.0).unwrap();
        assert_eq!(flipped.coefficient("b"), -1.0);
    }

    #[test]
    fn scale_rejects_non_finite() {
        assert!(matches!(
            var("a").scale(f64::NAN),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            var("a").scale(f64::INFINITY),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn eval_examples() {
        let e = ParameterExpression::term("a", PI)
            .unwrap()
            .add(&ParameterExpression::term("b", 0.5).unwrap());
        let value = e.eval(&bindings([("a", 1.0), ("b", 2.0)])).unwrap();
        assert!((value - (PI + 1.0)).abs() < 1e-15);

        assert_eq!(
            ParameterExpression::constant(3.0).eval(&Bindings::new()).unwrap(),
            3.0
        );

        assert_eq!(
            var("a").eval(&Bindings::new()),
            Err(Error::MissingParameter("a".into()))
        );
    }

    #[test]
    fn rejects_bad_names() {
        assert!(ParameterExpression::variable("").is_err());
        assert!(ParameterExpression::variable("a b").is_err());
        assert!(ParameterExpression::variable("a\tb").is_err());
    }

    #[test]
    fn names_are_case_sensitive() {
        let e = var("a").add(&var("A"));
        assert_eq!(e.iter_terms().count(), 2);
    }

    #[test]
    fn render_negative_terms() {
        let e = ParameterExpression::term("a", -2.0)
            .unwrap()
            .add(&ParameterExpression::constant(-1.5));
        assert_eq!(e.to_string(), "-2*a - 1.5");
        assert_eq!(ParameterExpression::parse("-2*a - 1.5").unwrap(), e);
    }

    #[test]
    fn json_shape() {
        let e = ParameterExpression::term("a", 1.0).unwrap();
        let json = serde_json::to_value(&e).unwrap();
        assert_eq!(json, serde_json::json!({"terms": {"a": 1.0}, "const": 0.0}));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_expr() -> impl Strategy<Value = ParameterExpression> {
            arb_expr_with(prop::num::f64::NORMAL.prop_map(|c| c % 1e6))
        }

        /// Coefficients that are integer multiples of 2⁻²⁰ below 2²⁰, so any
        /// three-way sum is exact in f64 (~41 significant bits).
        fn arb_dyadic_expr() -> impl Strategy<Value = ParameterExpression> {
            arb_expr_with((-(1i64 << 40)..(1i64 << 40)).prop_map(|n| n as f64 / (1u64 << 20) as f64))
        }

        fn arb_expr_with(
            coeff: impl Strategy<Value = f64> + Clone,
        ) -> impl Strategy<Value = ParameterExpression> {
            let name = prop::sample::select(vec!["a", "b", "c", "theta", "g0"]);
            (
                prop::collection::vec((name, coeff.clone()), 0..4),
                coeff,
            )
                .prop_map(|(terms, constant)| {
                    let mut e = ParameterExpression::constant(constant);
                    for (n, c) in terms {
                        e = e.add(&ParameterExpression::term(n, c).unwrap());
                    }
                    e
                })
        }

        proptest! {
            #[test]
            fn add_commutes(a in arb_expr(), b in arb_expr()) {
                prop_assert_eq!(a.add(&b), b.add(&a));
            }

            // Exact associativity needs exact coefficient addition, hence
            // the dyadic strategy; general floats reassociate.
            #[test]
            fn add_associates(a in arb_dyadic_expr(), b in arb_dyadic_expr(), c in arb_dyadic_expr()) {
                prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
            }

            #[test]
            fn scale_commutes_with_eval(e in arb_expr(), k in -1e3f64..1e3) {
                let env = bindings([("a", 0.3), ("b", -2.0), ("c", 7.5), ("theta", 0.01), ("g0", 11.0)]);
                let lhs = e.scale(k).unwrap().eval(&env).unwrap();
                let rhs = k * e.eval(&env).unwrap();
                // One rounding per coefficient product plus the fold; the
                // forward error scales with the absolute-value sum of the
                // intermediate products, not the (possibly cancelled) result.
                let magnitude: f64 = e
                    .iter_terms()
                    .map(|(n, c)| (c * k * env[n]).abs())
                    .sum::<f64>()
                    + (k * e.constant_part()).abs();
                let ops = e.iter_terms().count() as f64 + 2.0;
                let ulp = ops * f64::EPSILON * magnitude.max(1.0);
                prop_assert!((lhs - rhs).abs() <= ulp, "{lhs} vs {rhs}");
            }

            #[test]
            fn render_parse_round_trip(e in arb_expr()) {
                let parsed = ParameterExpression::parse(&e.to_string()).unwrap();
                prop_assert_eq!(parsed, e);
            }

            #[test]
            fn no_zero_coefficients(a in arb_expr(), b in arb_expr()) {
                let sum = a.add(&b);
                prop_assert!(sum.iter_terms().all(|(_, c)| c != 0.0));
            }
        }
    }
}
