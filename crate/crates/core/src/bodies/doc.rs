//! JSON description of bodies: `{"kind", "dim", "params", "children"}` with
//! sorted parameter keys, so serialisation of a parsed canonical document is
//! byte-identical to the input.

use super::{Body, BodyKind};
use crate::error::{GbmError, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyDoc {
    pub kind: String,
    pub dim: usize,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub children: Vec<BodyDoc>,
}

impl BodyDoc {
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("body documents always serialise")
    }
}

pub(super) fn to_doc(dim: usize, kind: &BodyKind) -> BodyDoc {
    let mut params = Map::new();
    let mut children = Vec::new();
    match kind {
        BodyKind::Ball { radius } => {
            params.insert("radius".into(), float(*radius));
        }
        BodyKind::Box { half_widths } => {
            params.insert("half_widths".into(), json!(half_widths));
        }
        BodyKind::Ellipsoid { semi_axes } => {
            params.insert("semi_axes".into(), json!(semi_axes));
        }
        BodyKind::SymPolytope { vertices, .. } => {
            params.insert("vertices".into(), json!(vertices));
        }
        BodyKind::Slab { axis, half_width, cap_radius } => {
            params.insert("axis".into(), json!(axis));
            params.insert("half_width".into(), json!(half_width));
            if let Some(c) = cap_radius {
                params.insert("cap_radius".into(), json!(c));
            }
        }
        BodyKind::Halfspace { normal, offset } => {
            params.insert("normal".into(), json!(normal));
            params.insert("offset".into(), json!(offset));
        }
        BodyKind::MinkowskiCombo { lambda, k, l } | BodyKind::GeometricMean { lambda, k, l } => {
            params.insert("lambda".into(), json!(lambda));
            children.push(k.to_doc());
            children.push(l.to_doc());
        }
        BodyKind::Dilate { t, body } => {
            params.insert("t".into(), json!(t));
            children.push(body.to_doc());
        }
        BodyKind::Union { parts } => {
            children.extend(parts.iter().map(|p| p.to_doc()));
        }
    }
    BodyDoc { kind: kind.name().to_string(), dim, params, children }
}

/// Infinite radii have no JSON number; they are written as the string "inf".
fn float(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

fn schema(msg: impl Into<String>) -> GbmError {
    GbmError::Schema(msg.into())
}

struct Params<'a> {
    kind: &'a str,
    map: &'a Map<String, Value>,
    used: Vec<&'static str>,
}

impl<'a> Params<'a> {
    fn get(&mut self, key: &'static str) -> Result<&'a Value> {
        self.used.push(key);
        self.map
            .get(key)
            .ok_or_else(|| schema(format!("{}: missing parameter '{key}'", self.kind)))
    }

    fn opt(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.push(key);
        self.map.get(key)
    }

    fn number(&mut self, key: &'static str) -> Result<f64> {
        let kind = self.kind;
        let v = self.get(key)?;
        as_number(v).ok_or_else(|| schema(format!("{kind}: '{key}' must be a number")))
    }

    fn vector(&mut self, key: &'static str) -> Result<Vec<f64>> {
        let kind = self.kind;
        as_vector(self.get(key)?)
            .ok_or_else(|| schema(format!("{kind}: '{key}' must be an array of numbers")))
    }

    fn finish(self) -> Result<()> {
        for k in self.map.keys() {
            if !self.used.contains(&k.as_str()) {
                return Err(schema(format!("{}: unknown parameter '{k}'", self.kind)));
            }
        }
        Ok(())
    }
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) if s == "inf" => Some(f64::INFINITY),
        _ => None,
    }
}

fn as_vector(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(|x| x.as_f64()).collect()
}

pub(super) fn from_doc(d: &BodyDoc) -> Result<Body> {
    let mut p = Params { kind: &d.kind, map: &d.params, used: Vec::new() };
    let nchildren = |want: usize| -> Result<()> {
        if d.children.len() != want {
            return Err(schema(format!(
                "{}: expected {want} children, found {}",
                d.kind,
                d.children.len()
            )));
        }
        Ok(())
    };
    let children: Vec<Body> = d.children.iter().map(from_doc).collect::<Result<_>>()?;
    let body = match d.kind.as_str() {
        "ball" => {
            nchildren(0)?;
            Body::ball(d.dim, p.number("radius")?)?
        }
        "box" => {
            nchildren(0)?;
            Body::cuboid(p.vector("half_widths")?)?
        }
        "ellipsoid" => {
            nchildren(0)?;
            Body::ellipsoid(p.vector("semi_axes")?)?
        }
        "sym-polytope" => {
            nchildren(0)?;
            let raw = p.get("vertices")?;
            let verts = raw
                .as_array()
                .and_then(|a| a.iter().map(as_vector).collect::<Option<Vec<_>>>())
                .ok_or_else(|| schema("sym-polytope: 'vertices' must be an array of points"))?;
            Body::sym_polytope(verts)?
        }
        "slab" => {
            nchildren(0)?;
            let axis = p
                .get("axis")?
                .as_u64()
                .ok_or_else(|| schema("slab: 'axis' must be a non-negative integer"))?;
            let hw = p.number("half_width")?;
            let cap = match p.opt("cap_radius") {
                Some(v) => Some(as_number(v).ok_or_else(|| schema("slab: bad 'cap_radius'"))?),
                None => None,
            };
            Body::slab(d.dim, axis as usize, hw, cap)?
        }
        "halfspace-pair" => {
            nchildren(0)?;
            Body::halfspace(p.vector("normal")?, p.number("offset")?)?
        }
        "minkowski-combo" => {
            nchildren(2)?;
            Body::minkowski_combine(p.number("lambda")?, &children[0], &children[1])?
        }
        "geometric-mean" => {
            nchildren(2)?;
            Body::geometric_mean(p.number("lambda")?, &children[0], &children[1])?
        }
        "dilate" => {
            nchildren(1)?;
            Body::dilate(p.number("t")?, &children[0])?
        }
        "union" => Body::union(children)?,
        other => return Err(schema(format!("unknown body kind '{other}'"))),
    };
    p.finish()?;
    if body.dim() != d.dim {
        return Err(GbmError::DimensionMismatch { expected: d.dim, got: body.dim() });
    }
    Ok(body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip_is_byte_identical() {
        let k = Body::sym_polytope(vec![vec![1.0, 0.2], vec![-0.3, 0.9]]).unwrap();
        let l = Body::ellipsoid(vec![1.5, 0.25]).unwrap();
        let m = Body::minkowski_combine(0.25, &k, &Body::dilate(1.5, &l).unwrap()).unwrap();
        let s = m.to_json();
        let back = Body::from_json(&s).unwrap();
        assert_eq!(back.to_json(), s);
        let slab = Body::truncated_slab(3, 0.1).unwrap();
        assert_eq!(Body::from_json(&slab.to_json()).unwrap().to_json(), slab.to_json());
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(
            Body::from_json(r#"{"kind":"ball","dim":2,"params":{}}"#),
            Err(GbmError::Schema(_))
        ));
        assert!(matches!(
            Body::from_json(r#"{"kind":"ball","dim":2,"params":{"radius":1.0,"x":1}}"#),
            Err(GbmError::Schema(_))
        ));
        assert!(matches!(
            Body::from_json(r#"{"kind":"box","dim":3,"params":{"half_widths":[1.0,1.0]}}"#),
            Err(GbmError::DimensionMismatch { .. })
        ));
        assert!(Body::from_json(r#"{"kind":"blob","dim":2}"#).is_err());
    }
}
