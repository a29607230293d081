use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{dot, normalize};
use crate::rng::standard_normals;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: usize,
    /// Unit-norm feature vector.
    pub features: Vec<f64>,
    pub category: usize,
}

/// Items grouped around one random centroid per category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemCatalog {
    items: Vec<Item>,
    categories: usize,
    dim: usize,
}

impl ItemCatalog {
    pub fn generate<R: Rng + ?Sized>(
        num_items: usize,
        categories: usize,
        dim: usize,
        spread: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if categories == 0 || num_items < categories || dim == 0 {
            return Err(Error::invalid("catalog needs at least one item per category"));
        }
        let centroids: Vec<Vec<f64>> = (0..categories)
            .map(|_| {
                let mut c = standard_normals(rng, dim);
                normalize(&mut c);
                c
            })
            .collect();
        let items = (0..num_items)
            .map(|id| {
                let category = id % categories;
                let noise = standard_normals(rng, dim);
                let mut features: Vec<f64> = centroids[category]
                    .iter()
                    .zip(&noise)
                    .map(|(c, n)| c + spread * n)
                    .collect();
                normalize(&mut features);
                Item {
                    id,
                    features,
                    category,
                }
            })
            .collect();
        Ok(Self {
            items,
            categories,
            dim,
        })
    }

    pub fn from_items(items: Vec<Item>, categories: usize) -> Result<Self> {
        let dim = items.first().map(|i| i.features.len()).unwrap_or(0);
        let mut seen = vec![false; categories];
        for (k, it) in items.iter().enumerate() {
            if it.id != k || it.features.len() != dim || it.category >= categories {
                return Err(Error::invalid("items must have dense ids, one dimension and valid categories"));
            }
            let norm = dot(&it.features, &it.features).sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("item {k} features are not unit norm")));
            }
            seen[it.category] = true;
        }
        if dim == 0 || seen.iter().any(|s| !s) {
            return Err(Error::invalid("every category must own at least one item"));
        }
        Ok(Self {
            items,
            categories,
            dim,
        })
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, id: usize) -> &Item {
        &self.items[id]
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Item with the largest cosine similarity to `action`; ties go to the
    /// lowest id. Features are unit norm, so ranking by dot product is
    /// equivalent.
    pub fn nearest(&self, action: &[f64]) -> Result<&Item> {
        if action.len() != self.dim {
            return Err(Error::invalid(format!(
                "action has dimension {}, items have {}",
                action.len(),
                self.dim
            )));
        }
        let mut best = &self.items[0];
        let mut best_score = f64::NEG_INFINITY;
        for it in &self.items {
            let s = dot(&it.features, action);
            if s > best_score {
                best_score = s;
                best = it;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn generated_catalog_satisfies_invariants() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let cat = ItemCatalog::generate(20, 6, 5, 0.3, &mut rng).unwrap();
        for (k, it) in cat.items().iter().enumerate() {
            assert_eq!(it.id, k);
            assert!((dot(&it.features, &it.features) - 1.0).abs() < 1e-12);
        }
        for c in 0..6 {
            assert!(cat.items().iter().any(|it| it.category == c));
        }
        ItemCatalog::from_items(cat.items().to_vec(), 6).unwrap();
    }

    #[test]
    fn nearest_item_of_its_own_features_is_itself() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let cat = ItemCatalog::generate(30, 5, 6, 0.3, &mut rng).unwrap();
        for it in cat.items() {
            assert_eq!(cat.nearest(&it.features).unwrap().id, it.id);
        }
        assert!(cat.nearest(&[0.0; 3]).is_err());
    }
}
