use super::KnowledgeGraph;

/// Degree-based prior distributions over entities and relations.
#[derive(Clone, Debug)]
pub struct DegreePriors {
    pub entity: Vec<f64>,
    pub relation: Vec<f64>,
}

/// `p(i) = (deg(i) + smoothing) / Σ_j (deg(j) + smoothing)`.
///
/// Falls back to uniform when every smoothed degree is zero.
pub fn normalize_degrees(degrees: &[u32], smoothing: f64) -> Vec<f64> {
    let total: f64 = degrees.iter().map(|&d| f64::from(d) + smoothing).sum();
    if total <= 0.0 {
        let n = degrees.len().max(1) as f64;
        return vec![1.0 / n; degrees.len()];
    }
    degrees.iter().map(|&d| (f64::from(d) + smoothing) / total).collect()
}

pub fn degree_priors(kg: &KnowledgeGraph, smoothing: f64) -> DegreePriors {
    DegreePriors {
        entity: normalize_degrees(kg.entity_degree(), smoothing),
        relation: normalize_degrees(kg.relation_degree(), smoothing),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_degrees(&[2, 1, 1], 0.0), vec![0.5, 0.25, 0.25]);
        assert_eq!(normalize_degrees(&[0, 0], 1.0), vec![0.5, 0.5]);
        let p = normalize_degrees(&[3, 1], 1.0);
        assert!((p[0] - 4.0 / 6.0).abs() < 1e-15 && (p[1] - 2.0 / 6.0).abs() < 1e-15);
        // isolated entity with no smoothing gets exactly zero
        assert_eq!(normalize_degrees(&[2, 0], 0.0), vec![1.0, 0.0]);
    }
}
