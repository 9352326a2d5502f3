//! Data binding and expansion of a typed model into a flat programme.

mod env;
mod eval;
mod expand;
mod value;

pub use env::{bind_data, ArrayValue, Binding, DataEnvironment};
pub use expand::{expand, flat_name, NameEntry, NameMap};
pub use value::{Domain, Value};
