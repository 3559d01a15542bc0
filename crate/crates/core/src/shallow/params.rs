use std::collections::BTreeMap;

use serde_json::Value;

use super::{Algorithm, ShallowError};

pub type Hyperparameters = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamKind {
    /// Float strictly greater than zero.
    PositiveFloat,
    /// Integer of at least the given value.
    Int(i64),
    /// Integer of at least the given value, or null for "unbounded".
    OptionalInt(i64),
    Bool,
    Choice(&'static [&'static str]),
    /// Positive float or `"scale"`.
    Gamma,
    /// `"auto"`, `"sqrt"`, `"log2"`, a positive integer, a fraction in
    /// (0, 1], or null for all features.
    MaxFeatures,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    /// JSON literal.
    pub default: &'static str,
}

const fn p(name: &'static str, kind: ParamKind, default: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        kind,
        default,
    }
}

const CRITERIA: &[&str] = &["gini", "entropy"];

/// Accepted hyperparameters per algorithm, with defaults.
pub fn schema(algorithm: Algorithm) -> &'static [ParamSpec] {
    use ParamKind::*;
    match algorithm {
        Algorithm::NaiveBayes => {
            const S: &[ParamSpec] = &[
                p("alpha", PositiveFloat, "1.0"),
                p("fit_prior", Bool, "true"),
            ];
            S
        }
        Algorithm::Svm => {
            const S: &[ParamSpec] = &[
                p("C", PositiveFloat, "1.0"),
                p("gamma", Gamma, "\"scale\""),
                p("kernel", Choice(&["linear", "rbf"]), "\"rbf\""),
                p("tol", PositiveFloat, "0.001"),
            ];
            S
        }
        Algorithm::RandomForest => {
            const S: &[ParamSpec] = &[
                p("bootstrap", Bool, "true"),
                p("criterion", Choice(CRITERIA), "\"gini\""),
                p("max_depth", OptionalInt(1), "null"),
                p("max_features", MaxFeatures, "\"sqrt\""),
                p("min_samples_split", Int(2), "2"),
                p("n_estimators", Int(1), "100"),
            ];
            S
        }
        Algorithm::DecisionTree => {
            const S: &[ParamSpec] = &[
                p("criterion", Choice(CRITERIA), "\"gini\""),
                p("max_depth", OptionalInt(1), "null"),
                p("max_features", MaxFeatures, "null"),
                p("min_samples_split", Int(2), "2"),
                p("splitter", Choice(&["best", "random"]), "\"best\""),
            ];
            S
        }
        Algorithm::LogisticRegression => {
            const S: &[ParamSpec] = &[
                p("C", PositiveFloat, "1.0"),
                p("max_iter", Int(1), "100"),
                p("solver", Choice(&["liblinear", "lbfgs"]), "\"lbfgs\""),
                p("tol", PositiveFloat, "0.0001"),
            ];
            S
        }
        Algorithm::AdaBoost => {
            const S: &[ParamSpec] = &[
                p("algorithm", Choice(&["SAMME", "SAMME.R"]), "\"SAMME.R\""),
                p("learning_rate", PositiveFloat, "1.0"),
                p("n_estimators", Int(1), "50"),
            ];
            S
        }
        Algorithm::KNearestNeighbor => {
            const S: &[ParamSpec] = &[
                p(
                    "algorithm",
                    Choice(&["auto", "ball_tree", "kd_tree", "brute"]),
                    "\"auto\"",
                ),
                p("n_neighbors", Int(1), "5"),
                p("weights", Choice(&["uniform", "distance"]), "\"uniform\""),
            ];
            S
        }
    }
}

fn check(kind: ParamKind, v: &Value) -> Result<(), String> {
    let positive_float = |v: &Value| v.as_f64().is_some_and(|x| x > 0.0 && x.is_finite());
    let ok = match kind {
        ParamKind::PositiveFloat => positive_float(v),
        ParamKind::Int(min) => v.as_i64().is_some_and(|x| x >= min),
        ParamKind::OptionalInt(min) => v.is_null() || v.as_i64().is_some_and(|x| x >= min),
        ParamKind::Bool => v.is_boolean(),
        ParamKind::Choice(options) => v.as_str().is_some_and(|s| options.contains(&s)),
        ParamKind::Gamma => v.as_str() == Some("scale") || positive_float(v),
        ParamKind::MaxFeatures => {
            v.is_null()
                || v.as_str()
                    .is_some_and(|s| matches!(s, "auto" | "sqrt" | "log2"))
                || v.as_i64().is_some_and(|x| x >= 1)
                || (v.is_f64() && v.as_f64().is_some_and(|x| x > 0.0 && x <= 1.0))
        }
    };
    if ok {
        return Ok(());
    }
    Err(match kind {
        ParamKind::PositiveFloat => "a positive number".into(),
        ParamKind::Int(min) => format!("an integer >= {min}"),
        ParamKind::OptionalInt(min) => format!("null or an integer >= {min}"),
        ParamKind::Bool => "true or false".into(),
        ParamKind::Choice(options) => format!("one of {}", options.join(", ")),
        ParamKind::Gamma => "a positive number or \"scale\"".into(),
        ParamKind::MaxFeatures => {
            "auto, sqrt, log2, null, a positive integer or a fraction in (0, 1]".into()
        }
    })
}

pub(super) fn validate(algorithm: Algorithm, params: &Hyperparameters) -> Result<(), ShallowError> {
    let specs = schema(algorithm);
    for (name, value) in params {
        let Some(spec) = specs.iter().find(|s| s.name == name) else {
            return Err(ShallowError::UnknownParam {
                algorithm,
                name: name.clone(),
                valid: specs.iter().map(|s| s.name).collect::<Vec<_>>().join(", "),
            });
        };
        check(spec.kind, value).map_err(|expected| ShallowError::InvalidParam {
            algorithm,
            name: name.clone(),
            value: value.clone(),
            expected,
        })?;
    }
    Ok(())
}

pub(super) fn resolve(algorithm: Algorithm, params: &Hyperparameters) -> Hyperparameters {
    schema(algorithm)
        .iter()
        .map(|s| {
            let v = params.get(s.name).cloned().unwrap_or_else(|| {
                serde_json::from_str(s.default).expect("schema defaults are valid JSON")
            });
            (s.name.to_string(), v)
        })
        .collect()
}

/// Resolved, validated hyperparameters with typed accessors.
pub(super) struct Params(Hyperparameters);

impl Params {
    pub fn new(algorithm: Algorithm, resolved: Hyperparameters) -> Self {
        debug_assert!(validate(algorithm, &resolved).is_ok());
        Self(resolved)
    }

    fn get(&self, name: &str) -> &Value {
        self.0
            .get(name)
            .unwrap_or_else(|| panic!("hyperparameter `{name}` missing after resolution"))
    }

    pub fn f64(&self, name: &str) -> f64 {
        self.get(name).as_f64().expect("validated number")
    }

    pub fn usize(&self, name: &str) -> usize {
        self.get(name).as_i64().expect("validated integer") as usize
    }

    pub fn opt_usize(&self, name: &str) -> Option<usize> {
        self.get(name).as_i64().map(|x| x as usize)
    }

    pub fn bool(&self, name: &str) -> bool {
        self.get(name).as_bool().expect("validated bool")
    }

    pub fn str(&self, name: &str) -> &str {
        self.get(name).as_str().unwrap_or("")
    }

    pub fn value(&self, name: &str) -> &Value {
        self.get(name)
    }

    /// Number of features examined per split for `dim` input features.
    pub fn max_features(&self, dim: usize) -> usize {
        let v = self.get("max_features");
        let k = match v.as_str() {
            Some("auto") | Some("sqrt") => (dim as f64).sqrt() as usize,
            Some("log2") => (dim as f64).log2() as usize,
            _ if v.is_null() => dim,
            _ if v.is_f64() => (v.as_f64().unwrap_or(1.0) * dim as f64) as usize,
            _ => v.as_i64().unwrap_or(1) as usize,
        };
        k.clamp(1, dim.max(1))
    }
}
