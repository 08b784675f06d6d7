//! Browser bindings for three toolkit operations: the weight table with its index,
//! the orbit distance curve, and the tree embedding check.

use wasm_bindgen::prelude::*;

use hinfty::embed::{embed_dist_u, pairing_iu_minus_one};
use hinfty::prinseries::{lambda_k, signature_index, SeriesParams};
use hinfty::treerep::{tree_embed, MetricTree};

fn message(e: hinfty::Error) -> String {
    e.to_string()
}

/// λ_0, …, λ_K for the given dimension and parameter.
#[wasm_bindgen]
pub fn lambda_table(n: usize, t: f64, k_max: usize) -> Result<Vec<f64>, String> {
    let params = SeriesParams::new(n, t).map_err(message)?;
    Ok((0..=k_max).map(|k| lambda_k(&params, k)).collect())
}

/// Number of negative directions of the invariant form at truncation K.
#[wasm_bindgen]
pub fn signature(n: usize, t: f64, k_max: usize) -> Result<usize, String> {
    let params = SeriesParams::new(n, t).map_err(message)?;
    Ok(signature_index(&params, k_max).map_err(message)?.index)
}

/// Flattened rows (u, distance, log I_u) for `steps + 1` evenly spaced u in [0, u_max].
#[wasm_bindgen]
pub fn distance_curve(n: usize, t: f64, u_max: f64, steps: usize) -> Result<Vec<f64>, String> {
    if steps == 0 || !(u_max > 0.0) {
        return Err("need steps >= 1 and u_max > 0".into());
    }
    let params = SeriesParams::new(n, t).map_err(message)?;
    let mut out = Vec::with_capacity(3 * (steps + 1));
    for i in 0..=steps {
        let u = u_max * i as f64 / steps as f64;
        let d = embed_dist_u(&params, u).map_err(message)?;
        let log_iu = pairing_iu_minus_one(&params, u).map_err(message)?.ln_1p();
        out.extend([u, d, log_iu]);
    }
    Ok(out)
}

/// Embeds the tree given as an edge list and returns
/// (vertices, positive eigenvalues, max distance error, max Gram error).
#[wasm_bindgen]
pub fn tree_check(edges: &str, lam: f64) -> Result<Vec<f64>, String> {
    let tree = MetricTree::parse_edge_list(edges).map_err(message)?;
    let emb = tree_embed(&tree, lam).map_err(message)?;
    Ok(vec![tree.m as f64, emb.positive_count as f64, emb.max_distance_error, emb.max_gram_error])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_table_starts_at_one() {
        let lam = lambda_table(2, 0.5, 2).unwrap();
        assert_eq!(lam[0], 1.0);
        assert!((lam[1] + 1.0 / 3.0).abs() < 1e-15);
        assert!((lam[2] + 1.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn signature_matches_index_one() {
        assert_eq!(signature(3, 0.5, 20).unwrap(), 1);
        assert!(signature(3, 1.0, 20).is_err());
    }

    #[test]
    fn distance_curve_rows() {
        let rows = distance_curve(2, 0.5, 2.0, 4).unwrap();
        assert_eq!(rows.len(), 15);
        assert_eq!(rows[1], 0.0);
        for r in rows.chunks(3) {
            assert!(r[2] <= 0.5 * r[0] + 1e-9);
        }
        assert!(distance_curve(2, 0.5, 2.0, 0).is_err());
    }

    #[test]
    fn tree_check_star() {
        let report = tree_check("0 1\n0 2\n0 3\n0 4\n", 2.0).unwrap();
        assert_eq!(report[0], 5.0);
        assert_eq!(report[1], 1.0);
        assert!(report[2] < 1e-8);
        assert!(tree_check("0 1\n1 2\n2 0\n", 2.0).is_err());
    }
}
