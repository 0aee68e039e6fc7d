//! `(0,1)`-forms `f = Σ f_j dz̄_j` on a product domain.

use crate::error::{DbarError, Result};
use crate::slice_ops::Operand;

#[derive(Debug, Clone, PartialEq)]
pub struct Form01<F> {
    components: Vec<F>,
}

impl<F: Operand> Form01<F> {
    /// Component `j` is the coefficient of `dz̄_j`; every component must
    /// live on the same `n`-fold product as the form itself.
    pub fn new(components: Vec<F>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(DbarError::Shape("a (0,1)-form needs at least one component".into()));
        }
        if let Some(bad) = components.iter().find(|c| c.nvars() != n) {
            return Err(DbarError::Shape(format!(
                "component in {} variables for a form on a {n}-fold product",
                bad.nvars()
            )));
        }
        Ok(Self { components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[F] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &F {
        &self.components[j]
    }

    /// `∂̄u = Σ ∂_{z̄_j} u dz̄_j`.
    pub fn dbar_of(u: &F) -> Result<Self> {
        let comps = (0..u.nvars()).map(|j| u.dzbar(j)).collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }
}
