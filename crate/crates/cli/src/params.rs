//! `--set key=value` overrides on top of per-command defaults.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value as Json;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    List(Vec<f64>),
    Text(String),
}

impl Value {
    fn to_json(&self) -> Json {
        match self {
            Value::Num(x) => json_num(*x),
            Value::List(xs) => Json::Array(xs.iter().map(|&x| json_num(x)).collect()),
            Value::Text(s) => Json::String(s.clone()),
        }
    }
}

pub fn json_num(x: f64) -> Json {
    serde_json::Number::from_f64(x).map_or_else(|| Json::String(x.to_string()), Json::Number)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

#[derive(Debug, Clone, Default)]
pub struct Params {
    values: BTreeMap<&'static str, Value>,
}

impl Params {
    pub fn new(defaults: impl IntoIterator<Item = (&'static str, Value)>) -> Self {
        Self {
            values: defaults.into_iter().collect(),
        }
    }

    /// Applies `key=value` strings. Keys must already have a default; the default's
    /// kind decides how the value is parsed.
    pub fn apply(&mut self, overrides: &[String]) -> Result<(), UsageError> {
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| usage(format!("expected key=value, got `{item}`")))?;
            let (key, raw) = (key.trim(), raw.trim());
            if !self.values.contains_key(key) {
                let known: Vec<&str> = self.values.keys().copied().collect();
                return Err(usage(format!("unknown parameter `{key}`; known: {}", known.join(", "))));
            }
            let slot = self.values.get_mut(key).expect("checked above");
            *slot = match slot {
                Value::Num(_) => Value::Num(parse_num(key, raw)?),
                Value::List(_) => Value::List(
                    raw.split(',')
                        .map(|s| parse_num(key, s.trim()))
                        .collect::<Result<_, _>>()?,
                ),
                Value::Text(_) => Value::Text(raw.to_string()),
            };
        }
        Ok(())
    }

    pub fn num(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Num(x)) => *x,
            other => panic!("parameter `{key}` is not a number: {other:?}"),
        }
    }

    /// A count: non-negative integer-valued number.
    pub fn count(&self, key: &str) -> Result<usize, UsageError> {
        let x = self.num(key);
        if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
            Ok(x as usize)
        } else {
            Err(usage(format!(
                "parameter `{key}` must be a non-negative integer, got {x}"
            )))
        }
    }

    pub fn list(&self, key: &str) -> &[f64] {
        match self.values.get(key) {
            Some(Value::List(xs)) => xs,
            other => panic!("parameter `{key}` is not a list: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::Text(s)) => s,
            other => panic!("parameter `{key}` is not text: {other:?}"),
        }
    }

    pub fn to_json(&self) -> Json {
        Json::Object(self.values.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect())
    }
}

fn parse_num(key: &str, raw: &str) -> Result<f64, UsageError> {
    let x: f64 = match raw {
        "pi" => std::f64::consts::PI,
        "-pi" => -std::f64::consts::PI,
        _ => raw
            .parse()
            .map_err(|_| usage(format!("parameter `{key}`: cannot parse `{raw}` as a number")))?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(usage(format!("parameter `{key}` must be finite")))
    }
}
