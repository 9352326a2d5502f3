use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

/// A concrete data value.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Str(String),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Text used inside flat variable and row names, e.g. `1`, `A2`, `<1,a>`.
    pub fn name_text(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Float(f) => format!("{f:?}"),
            Value::Str(s) => s.clone(),
            Value::Tuple(items) => format!("<{}>", items.iter().map(Value::name_text).collect::<Vec<_>>().join(",")),
        }
    }
}

/// Values compare by content; floats compare by bit pattern after folding `-0.0` into `0.0`.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => canonical_bits(*a) == canonical_bits(*b),
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Tuple(a), Value::Tuple(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Value::Int(i) => i.hash(state),
            Value::Float(f) => canonical_bits(*f).hash(state),
            Value::Str(s) => s.hash(state),
            Value::Tuple(items) => items.hash(state),
        }
    }
}

fn canonical_bits(f: f64) -> u64 {
    if f == 0.0 {
        0
    } else {
        f.to_bits()
    }
}

/// Source-like rendering used in messages: strings are quoted.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Str(s) => write!(f, "\"{s}\""),
            Value::Tuple(items) => {
                f.write_str("<")?;
                for (k, v) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(">")
            }
        }
    }
}

/// An ordered index set: a range `lo..hi` or the elements of a set in literal order.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    elems: Vec<Value>,
    positions: HashMap<Value, usize>,
    range: Option<(i64, i64)>,
}

impl Domain {
    pub fn range(lo: i64, hi: i64) -> Domain {
        let elems: Vec<Value> = if hi >= lo { (lo..=hi).map(Value::Int).collect() } else { Vec::new() };
        Domain { elems, positions: HashMap::new(), range: Some((lo, hi)) }
    }

    /// Builds a set domain; later duplicates are ignored.
    pub fn set(values: Vec<Value>) -> Domain {
        let mut elems = Vec::with_capacity(values.len());
        let mut positions = HashMap::with_capacity(values.len());
        for v in values {
            if !positions.contains_key(&v) {
                positions.insert(v.clone(), elems.len());
                elems.push(v);
            }
        }
        Domain { elems, positions, range: None }
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn elements(&self) -> &[Value] {
        &self.elems
    }

    /// Bounds when this domain is a range.
    pub fn bounds(&self) -> Option<(i64, i64)> {
        self.range
    }

    pub fn position(&self, v: &Value) -> Option<usize> {
        match self.range {
            Some((lo, hi)) => match v {
                Value::Int(i) if *i >= lo && *i <= hi => Some((*i - lo) as usize),
                Value::Float(f) if f.fract() == 0.0 && *f >= lo as f64 && *f <= hi as f64 => Some((*f as i64 - lo) as usize),
                _ => None,
            },
            None => self.positions.get(v).copied().or_else(|| match v {
                // numeric sets accept an int where a float element is stored and vice versa
                Value::Int(i) => self.positions.get(&Value::Float(*i as f64)).copied(),
                Value::Float(f) if f.fract() == 0.0 => self.positions.get(&Value::Int(*f as i64)).copied(),
                _ => None,
            }),
        }
    }
}
