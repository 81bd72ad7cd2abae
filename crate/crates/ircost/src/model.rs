//! JSON energy model files.
//!
//! The kind of model is recognised by its keys: `E` for a group model,
//! `p_base_w` for the multi-threaded model, `B` for the base+overhead model
//! and `sites` for a mapping file. Numbers may be JSON numbers or strings
//! holding a decimal or a fraction such as `"1/3"`.

use std::collections::BTreeMap;
use std::path::Path;

use ircost_core::energy::{EnergyModel, GroupModel, MappingModel, TiwariModel, Xs1Model};
use ircost_core::num::{fmt_rational, parse_decimal, rat, Rational};
use ircost_core::IrModule;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{read, Error, Result};

#[derive(Debug, Clone)]
struct Dec(Rational);

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let text = match Value::deserialize(d)? {
            Value::Number(n) => n.to_string(),
            Value::String(s) => s,
            other => return Err(D::Error::custom(format!("expected a number, found {}", other))),
        };
        parse_decimal(&text).map(Dec).map_err(|e| D::Error::custom(format!("bad number `{}`", e.0)))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupFile {
    #[serde(rename = "E")]
    e: BTreeMap<String, Dec>,
    #[serde(default)]
    call_arg_nj: Option<Dec>,
    #[serde(default)]
    call_ret_nj: Option<Dec>,
    #[serde(default)]
    widen_mul: Option<Dec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Xs1File {
    p_base_w: Dec,
    t_clk_s: Dec,
    #[serde(rename = "O", default)]
    o: Option<Dec>,
    #[serde(rename = "M")]
    m: Vec<Dec>,
    #[serde(rename = "P")]
    p: BTreeMap<String, Dec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TiwariFile {
    #[serde(rename = "B")]
    b: BTreeMap<String, Dec>,
    #[serde(rename = "O", default)]
    o: BTreeMap<String, Dec>,
    #[serde(default)]
    ext: Vec<Dec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteEntry {
    #[serde(rename = "fn")]
    function: String,
    block: String,
    index: usize,
    isa_nj: Vec<Dec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MappingFile {
    sites: Vec<SiteEntry>,
    #[serde(default)]
    phi_adjust: Option<Dec>,
}

/// Why a model document was rejected.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ModelError(pub String);

fn nonneg(what: &str, q: &Rational) -> std::result::Result<Rational, ModelError> {
    if *q < rat(0) {
        return Err(ModelError(format!("{} is negative ({})", what, fmt_rational(q))));
    }
    Ok(q.clone())
}

fn typed<T: serde::de::DeserializeOwned>(v: Value) -> std::result::Result<T, ModelError> {
    serde_json::from_value(v).map_err(|e| ModelError(e.to_string()))
}

/// Parses a model document.
pub fn parse_model(text: &str) -> std::result::Result<EnergyModel, ModelError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ModelError(e.to_string()))?;
    let Value::Object(obj) = &v else {
        return Err(ModelError(String::from("a model file holds a JSON object")));
    };
    if obj.contains_key("sites") {
        return parse_mapping_value(v).map(EnergyModel::Mapping);
    }
    if obj.contains_key("E") {
        let g: GroupFile = typed(v)?;
        let mut e = [rat(0), rat(0), rat(0), rat(0)];
        for (k, val) in g.e {
            let i = match k.as_str() {
                "M" => 0,
                "B" => 1,
                "D" => 2,
                "G" => 3,
                other => return Err(ModelError(format!("unknown instruction group `{}`", other))),
            };
            e[i] = nonneg(&format!("E.{}", k), &val.0)?;
        }
        let zero = || Dec(rat(0));
        return Ok(EnergyModel::Group(GroupModel {
            e,
            call_arg: nonneg("call_arg_nj", &g.call_arg_nj.unwrap_or_else(zero).0)?,
            call_ret: nonneg("call_ret_nj", &g.call_ret_nj.unwrap_or_else(zero).0)?,
            widen_mul: nonneg("widen_mul", &g.widen_mul.unwrap_or(Dec(rat(1))).0)?,
        }));
    }
    if obj.contains_key("p_base_w") {
        let x: Xs1File = typed(v)?;
        if x.t_clk_s.0 <= rat(0) {
            return Err(ModelError(String::from("t_clk_s must be positive")));
        }
        if x.m.is_empty() {
            return Err(ModelError(String::from("M needs at least the single-thread scale")));
        }
        let mut p = BTreeMap::new();
        for (k, val) in x.p {
            p.insert(k.clone(), nonneg(&format!("P.{}", k), &val.0)?);
        }
        return Ok(EnergyModel::Xs1(Xs1Model {
            p_base: nonneg("p_base_w", &x.p_base_w.0)?,
            t_clk: x.t_clk_s.0,
            overhead: nonneg("O", &x.o.unwrap_or(Dec(rat(1))).0)?,
            m: x.m.into_iter().enumerate().map(|(i, d)| nonneg(&format!("M[{}]", i), &d.0)).collect::<std::result::Result<_, _>>()?,
            p,
        }));
    }
    if obj.contains_key("B") {
        let t: TiwariFile = typed(v)?;
        let mut m = TiwariModel::default();
        for (k, val) in t.b {
            m.base.insert(k.clone(), nonneg(&format!("B.{}", k), &val.0)?);
        }
        for (k, val) in t.o {
            let Some((a, b)) = k.split_once(',') else {
                return Err(ModelError(format!("overhead key `{}` is not `i,j`", k)));
            };
            let q = nonneg(&format!("O.{}", k), &val.0)?;
            m.overhead.insert((a.trim().to_string(), b.trim().to_string()), q);
        }
        for (i, val) in t.ext.into_iter().enumerate() {
            m.externals.push(nonneg(&format!("ext[{}]", i), &val.0)?);
        }
        return Ok(EnergyModel::Tiwari(m));
    }
    Err(ModelError(String::from("unrecognised model: expected one of the keys E, p_base_w, B or sites")))
}

fn parse_mapping_value(v: Value) -> std::result::Result<MappingModel, ModelError> {
    let f: MappingFile = typed(v)?;
    let mut m = MappingModel::default();
    for s in f.sites {
        let isa: Vec<Rational> = s
            .isa_nj
            .iter()
            .map(|d| nonneg(&format!("@{}:{}[{}]", s.function, s.block, s.index), &d.0))
            .collect::<std::result::Result<_, _>>()?;
        let key = (s.function.clone(), s.block.clone(), s.index);
        if m.per_ir.contains_key(&key) {
            return Err(ModelError(format!("site @{}:{}[{}] is listed twice", s.function, s.block, s.index)));
        }
        m.insert_site(&s.function, &s.block, s.index, &isa);
    }
    m.phi_adjust = match f.phi_adjust {
        Some(d) => Some(nonneg("phi_adjust", &d.0)?),
        None => None,
    };
    Ok(m)
}

/// Parses a mapping document on its own.
pub fn parse_mapping(text: &str) -> std::result::Result<MappingModel, ModelError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ModelError(e.to_string()))?;
    parse_mapping_value(v)
}

/// Checks every site of a mapping against the module and reports the first
/// site that names a missing function, block or index.
pub fn check_mapping(m: &MappingModel, module: &IrModule) -> std::result::Result<(), ModelError> {
    for (f, b, i) in m.per_ir.keys() {
        let func = module.function(f).ok_or_else(|| ModelError(format!("mapping names unknown function @{}", f)))?;
        let bb = func.block(b).ok_or_else(|| ModelError(format!("mapping names unknown block @{}:{}", f, b)))?;
        if *i >= bb.insts.len() {
            return Err(ModelError(format!("@{}:{} has no instruction {}", f, b, i)));
        }
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<EnergyModel> {
    parse_model(&read(path)?).map_err(|e| Error::Model { path: path.to_path_buf(), message: e.0 })
}

pub fn load_mapping(path: &Path) -> Result<MappingModel> {
    parse_mapping(&read(path)?).map_err(|e| Error::Model { path: path.to_path_buf(), message: e.0 })
}

/// The model as a JSON document that [`parse_model`] reads back unchanged.
pub fn model_to_json(m: &EnergyModel) -> Value {
    let s = fmt_rational;
    match m {
        EnergyModel::Group(g) => json!({
            "E": {"M": s(&g.e[0]), "B": s(&g.e[1]), "D": s(&g.e[2]), "G": s(&g.e[3])},
            "call_arg_nj": s(&g.call_arg),
            "call_ret_nj": s(&g.call_ret),
            "widen_mul": s(&g.widen_mul),
        }),
        EnergyModel::Xs1(x) => json!({
            "p_base_w": s(&x.p_base),
            "t_clk_s": s(&x.t_clk),
            "O": s(&x.overhead),
            "M": x.m.iter().map(s).collect::<Vec<_>>(),
            "P": x.p.iter().map(|(k, v)| (k.clone(), s(v))).collect::<BTreeMap<_, _>>(),
        }),
        EnergyModel::Tiwari(t) => json!({
            "B": t.base.iter().map(|(k, v)| (k.clone(), s(v))).collect::<BTreeMap<_, _>>(),
            "O": t.overhead.iter().map(|((a, b), v)| (format!("{},{}", a, b), s(v))).collect::<BTreeMap<_, _>>(),
            "ext": t.externals.iter().map(s).collect::<Vec<_>>(),
        }),
        EnergyModel::Mapping(mm) => {
            let sites: Vec<Value> = mm
                .per_ir
                .iter()
                .map(|((f, b, i), v)| json!({"fn": f, "block": b, "index": i, "isa_nj": [s(v)]}))
                .collect();
            let mut doc = json!({ "sites": sites });
            if let Some(a) = &mm.phi_adjust {
                doc["phi_adjust"] = json!(s(a));
            }
            doc
        }
    }
}
