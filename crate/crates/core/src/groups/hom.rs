//! Homomorphisms given by generator images.

use super::{Element, GroupBackend};
use crate::error::{Error, Result};

/// The homomorphism `source -> target` sending generator `i` to `images[i]`.
#[derive(Clone, Debug)]
pub struct Homomorphism {
    source: GroupBackend,
    target: GroupBackend,
    images: Vec<Element>,
}

impl Homomorphism {
    /// Free sources accept any images. Free abelian sources need pairwise
    /// commuting images; other sources are not supported.
    pub fn new(source: GroupBackend, target: GroupBackend, images: Vec<Element>) -> Result<Self> {
        if images.len() != source.generator_count() {
            return Err(Error::Input(format!(
                "{} generator images given, {} needed",
                images.len(),
                source.generator_count()
            )));
        }
        match &source {
            GroupBackend::Free { .. } => {}
            GroupBackend::FreeAbelian { .. } => {
                for (i, a) in images.iter().enumerate() {
                    for b in &images[i + 1..] {
                        if target.multiply(a, b) != target.multiply(b, a) {
                            return Err(Error::Input("images of an abelian source must commute".into()));
                        }
                    }
                }
            }
            other => {
                return Err(Error::Unsupported(format!("homomorphisms out of {}", other.label())));
            }
        }
        Ok(Homomorphism { source, target, images })
    }

    /// Images given as words in the target.
    pub fn from_words(source: GroupBackend, target: GroupBackend, words: &[&str]) -> Result<Self> {
        let images = words.iter().map(|w| target.evaluate_str(w)).collect::<Result<Vec<_>>>()?;
        Self::new(source, target, images)
    }

    pub fn source(&self) -> &GroupBackend {
        &self.source
    }

    pub fn target(&self) -> &GroupBackend {
        &self.target
    }

    pub fn images(&self) -> &[Element] {
        &self.images
    }

    pub fn apply(&self, x: &Element) -> Element {
        let word = self.source.normal_word(x).expect("source backend has normal words");
        let mut acc = self.target.identity();
        for l in word {
            let g = &self.images[l.generator];
            acc = if l.inverse {
                self.target.multiply(&acc, &self.target.inverse(g))
            } else {
                self.target.multiply(&acc, g)
            };
        }
        acc
    }
}
