use crate::error::{Error, Result};
use crate::vq::shannon_entropy_bits;

const SUM_TOLERANCE: f64 = 1e-12;

/// A group of events in which every event may spawn its own child group.
#[derive(Clone, Debug, PartialEq)]
pub struct EventGroup {
    probabilities: Vec<f64>,
    children: Option<Vec<EventGroup>>,
}

impl EventGroup {
    /// A terminal group.
    pub fn leaf(probabilities: Vec<f64>) -> Result<Self> {
        Self::new(probabilities, None)
    }

    /// `children`, when given, holds one group per event.
    pub fn new(probabilities: Vec<f64>, children: Option<Vec<EventGroup>>) -> Result<Self> {
        if probabilities.is_empty() || probabilities.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::invalid("event probabilities must lie in (0, 1]"));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::invalid(format!("event probabilities sum to {sum}, not 1")));
        }
        if let Some(c) = &children {
            if c.len() != probabilities.len() {
                return Err(Error::invalid(format!(
                    "{} child groups for {} events",
                    c.len(),
                    probabilities.len()
                )));
            }
        }
        Ok(Self { probabilities, children })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn children(&self) -> Option<&[EventGroup]> {
        self.children.as_deref()
    }
}

/// Entropy of an auto-generative events group: terminal groups contribute
/// their Shannon entropy, inner groups `sum_i P(i) [log2(1/P(i)) + H(G^i)]`.
pub fn auto_generative_entropy(group: &EventGroup) -> f64 {
    match &group.children {
        None => shannon_entropy_bits(&group.probabilities),
        Some(children) => group
            .probabilities
            .iter()
            .zip(children)
            .map(|(&p, child)| p * (-p.log2() + auto_generative_entropy(child)))
            .sum(),
    }
}
