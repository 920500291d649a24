//! `key=value,key=value` argument lists used by the plain-text descriptors of
//! sequence and weight families.

use crate::error::{Error, Result};
use crate::exponent::Exponent;

#[derive(Clone, Debug, Default)]
pub struct Params {
    positional: Vec<String>,
    named: Vec<(String, String)>,
}

impl Params {
    pub fn parse(text: &str) -> Result<Self> {
        let mut params = Params::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.split_once('=') {
                Some((k, v)) => {
                    let key = k.trim().to_ascii_lowercase();
                    if params.named.iter().any(|(existing, _)| *existing == key) {
                        return Err(Error::invalid(&key, "given more than once"));
                    }
                    params.named.push((key, v.trim().to_string()));
                }
                None if params.named.is_empty() => params.positional.push(item.to_string()),
                None => return Err(Error::invalid(item, "positional value after named values")),
            }
        }
        Ok(params)
    }

    /// Rejects positional values beyond `max_positional` and any key not in `known`.
    pub fn check(&self, known: &[&str], max_positional: usize) -> Result<()> {
        if self.positional.len() > max_positional {
            return Err(Error::invalid(
                &self.positional[max_positional],
                format!("at most {max_positional} positional value(s) accepted"),
            ));
        }
        for (key, _) in &self.named {
            if !known.contains(&key.as_str()) {
                return Err(Error::invalid(key, format!("unknown field; expected one of {known:?}")));
            }
        }
        Ok(())
    }

    /// The named value `key`, falling back to positional slot `slot`.
    pub fn raw(&self, key: &str, slot: Option<usize>) -> Option<&str> {
        self.named
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .or_else(|| slot.and_then(|i| self.positional.get(i)).map(String::as_str))
    }

    pub fn f64(&self, key: &str, slot: Option<usize>) -> Result<Option<f64>> {
        self.raw(key, slot)
            .map(|v| parse_f64(key, v))
            .transpose()
    }

    pub fn require_f64(&self, key: &str, slot: Option<usize>) -> Result<f64> {
        self.f64(key, slot)?
            .ok_or_else(|| Error::invalid(key, "missing"))
    }

    pub fn exponent(&self, key: &str, slot: Option<usize>) -> Result<Option<Exponent>> {
        self.raw(key, slot)
            .map(|v| {
                v.parse::<Exponent>().map_err(|_| Error::invalid(key, format!("`{v}` is not a number in (0, inf]")))
            })
            .transpose()
    }

    pub fn usize(&self, key: &str, slot: Option<usize>) -> Result<Option<usize>> {
        self.raw(key, slot)
            .map(|v| v.parse::<usize>().map_err(|_| Error::invalid(key, format!("`{v}` is not a non-negative integer"))))
            .transpose()
    }
}

pub(crate) fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| Error::invalid(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::invalid(key, "must be finite"));
    }
    Ok(x)
}

/// Splits `kind:rest` into the lower-cased kind and the remainder.
pub fn split_kind(descriptor: &str) -> (String, &str) {
    match descriptor.trim().split_once(':') {
        Some((kind, rest)) => (kind.trim().to_ascii_lowercase(), rest),
        None => (descriptor.trim().to_ascii_lowercase(), ""),
    }
}
