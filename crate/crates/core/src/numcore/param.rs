use std::sync::atomic::{AtomicU64, Ordering};

use super::Tensor;

static NEXT_PARAM: AtomicU64 = AtomicU64::new(1);

/// Identity of a trainable parameter, used to key gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(u64);

impl ParamId {
    fn fresh() -> Self {
        ParamId(NEXT_PARAM.fetch_add(1, Ordering::Relaxed))
    }
}

/// A named-by-identity trainable tensor.
///
/// Cloning yields an independent parameter with a fresh id, so a target
/// network cloned from its online network never aliases its gradients.
#[derive(Debug)]
pub struct Param {
    id: ParamId,
    pub value: Tensor,
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        Self { id: ParamId::fresh(), value }
    }

    pub fn id(&self) -> ParamId {
        self.id
    }

    pub fn shape(&self) -> &[usize] {
        self.value.shape()
    }
}

impl Clone for Param {
    fn clone(&self) -> Self {
        Self::new(self.value.clone())
    }
}

impl PartialEq for Param {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

/// Implemented by every network that owns parameters. The enumeration order
/// is fixed and is shared by `params` and `params_mut`.
pub trait Parameterized {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn num_scalars(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }
}
