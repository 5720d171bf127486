use crate::error::{Error, Result};

/// Click (+1) or no-click (−1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// Accepts the `{0, 1}` and `{-1, +1}` encodings.
    pub fn parse(raw: &str) -> Result<Self> {
        match raw.trim() {
            "1" | "+1" | "1.0" | "+1.0" => Ok(Label::Positive),
            "0" | "-1" | "0.0" | "-1.0" => Ok(Label::Negative),
            other => Err(Error::Data(format!("unrecognized label {other:?}"))),
        }
    }

    pub fn from_bool(click: bool) -> Self {
        if click {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// `y ∈ {+1, −1}`.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    /// `y ∈ {1, 0}`.
    pub fn as_binary(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => 0.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

/// One labeled example with exactly one active feature per field:
/// `active[f]` is the feature id of field `f`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    pub label: Label,
    pub active: Vec<u32>,
}

impl Instance {
    pub fn new(label: Label, active: Vec<u32>) -> Self {
        Instance { label, active }
    }

    pub fn n_fields(&self) -> usize {
        self.active.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n: usize,
    m: usize,
    instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(n: usize, m: usize, instances: Vec<Instance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        if n == 0 {
            return Err(Error::Data("dataset must have at least one field".into()));
        }
        for (row, inst) in instances.iter().enumerate() {
            check_instance(inst, n, m).map_err(|e| Error::Data(format!("instance {row}: {e}")))?;
        }
        Ok(Dataset { n, m, instances })
    }

    pub fn n_fields(&self) -> usize {
        self.n
    }

    pub fn n_features(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn into_instances(self) -> Vec<Instance> {
        self.instances
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Instance> {
        self.instances.iter()
    }

    /// Number of positive and negative labels.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.instances.iter().filter(|i| i.label.is_positive()).count();
        (pos, self.instances.len() - pos)
    }

    /// A new dataset over the same feature space.
    pub fn with_instances(&self, instances: Vec<Instance>) -> Result<Self> {
        Dataset::new(self.n, self.m, instances)
    }
}

pub(crate) fn check_instance(inst: &Instance, n: usize, m: usize) -> Result<()> {
    if inst.active.len() != n {
        return Err(Error::Dimension(format!(
            "instance has {} active features, expected one per field ({n})",
            inst.active.len()
        )));
    }
    if let Some(&id) = inst.active.iter().find(|&&id| id as usize >= m) {
        return Err(Error::Dimension(format!("feature id {id} out of range for m = {m}")));
    }
    Ok(())
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Instance;
    type IntoIter = std::slice::Iter<'a, Instance>;

    fn into_iter(self) -> Self::IntoIter {
        self.instances.iter()
    }
}
