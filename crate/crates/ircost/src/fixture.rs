//! JSON memory fixtures for `simulate`.

use std::collections::BTreeMap;
use std::path::Path;

use ircost_core::interp::{Fixture, DEFAULT_STEP_BUDGET};
use ircost_core::num::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{read, Error, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureFile {
    /// Address to value; keys are decimal integers.
    #[serde(default)]
    pub memory: BTreeMap<String, Value>,
    #[serde(default)]
    pub load_stream: Vec<Value>,
    #[serde(default)]
    pub external_returns: BTreeMap<String, Value>,
    #[serde(default)]
    pub step_budget: Option<u64>,
}

fn int(v: &Value) -> std::result::Result<BigInt, String> {
    let text = match v {
        Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(format!("expected an integer, found {}", other)),
    };
    text.trim().parse().map_err(|_| format!("expected an integer, found `{}`", text))
}

impl FixtureFile {
    pub fn to_fixture(&self) -> std::result::Result<Fixture, String> {
        let mut fx = Fixture { step_budget: self.step_budget.unwrap_or(DEFAULT_STEP_BUDGET), ..Fixture::default() };
        for (k, v) in &self.memory {
            let a: BigInt = k.trim().parse().map_err(|_| format!("memory address `{}` is not an integer", k))?;
            fx.memory.insert(a, int(v)?);
        }
        fx.load_stream = self.load_stream.iter().map(int).collect::<std::result::Result<_, _>>()?;
        for (k, v) in &self.external_returns {
            fx.external_returns.insert(k.clone(), int(v)?);
        }
        Ok(fx)
    }

    pub fn from_fixture(fx: &Fixture) -> Self {
        let s = |v: &BigInt| Value::String(v.to_string());
        FixtureFile {
            memory: fx.memory.iter().map(|(k, v)| (k.to_string(), s(v))).collect(),
            load_stream: fx.load_stream.iter().map(s).collect(),
            external_returns: fx.external_returns.iter().map(|(k, v)| (k.clone(), s(v))).collect(),
            step_budget: Some(fx.step_budget),
        }
    }
}

pub fn parse_fixture(text: &str) -> std::result::Result<Fixture, String> {
    let f: FixtureFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    f.to_fixture()
}

pub fn load_fixture(path: &Path) -> Result<Fixture> {
    parse_fixture(&read(path)?).map_err(|message| Error::Model { path: path.to_path_buf(), message })
}
