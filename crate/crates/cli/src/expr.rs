//! Closed-form functions of the coordinates `x1, y1, ..., xn, yn` given as
//! expression strings in the config.

use acma::io::coordinate_names;
use exmex::prelude::*;

#[derive(Clone, Debug)]
pub struct Expr {
    ex: FlatEx<f64>,
    /// Coordinate index of each expression variable, in the expression's
    /// variable order.
    slots: Vec<usize>,
}

impl Expr {
    pub fn parse(text: &str, n: usize) -> Result<Self, String> {
        let ex = exmex::parse::<f64>(text).map_err(|e| format!("cannot parse '{text}': {e}"))?;
        let names = coordinate_names(n);
        let slots = ex
            .var_names()
            .iter()
            .map(|v| {
                names
                    .iter()
                    .position(|c| c == v)
                    .ok_or_else(|| format!("unknown variable '{v}' in '{text}' (expected {})", names.join(", ")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { ex, slots })
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        let mut vars = [0.0; 4];
        for (k, &s) in self.slots.iter().enumerate() {
            vars[k] = p[s];
        }
        self.ex.eval(&vars[..self.slots.len()]).unwrap_or(f64::NAN)
    }
}

impl acma::field::PointFn for Expr {
    fn value(&self, p: &[f64]) -> f64 {
        self.eval(p)
    }
}
