//! Square formation on a four-vehicle ring: Laplacian spectrum and the
//! neighbor formation error for a perturbed layout.

use platoon::graph::{ring_adjacency, square_offsets, FormationGraph};
use platoon::Vec2;

fn main() -> platoon::Result<()> {
    let offsets = square_offsets(12.0);
    let graph = FormationGraph::with_pinning(ring_adjacency(4), offsets.clone(), vec![1.0; 4])?;

    let laplacian = graph.build_laplacian();
    println!("connected: {}", graph.is_connected());
    println!("Laplacian eigenvalues: {:?}", laplacian.eigenvalues());
    println!(
        "algebraic connectivity: {:.3}",
        laplacian.algebraic_connectivity()
    );
    for i in 0..graph.len() {
        println!(
            "neighbors of AV{}: {:?}",
            i + 1,
            graph
                .neighbor_set(i)?
                .iter()
                .map(|j| j + 1)
                .collect::<Vec<_>>()
        );
    }

    // Translating the whole formation leaves the neighbor error at zero.
    let shift = Vec2::new(100.0, -3.0);
    let mut positions: Vec<Vec2> = offsets.iter().map(|o| o + shift).collect();
    println!(
        "\nerror at a translated formation: {:?}",
        norms(&graph.formation_error(&positions)?)
    );

    positions[2] += Vec2::new(1.5, -0.5);
    println!(
        "error with AV3 displaced:        {:?}",
        norms(&graph.formation_error(&positions)?)
    );
    Ok(())
}

fn norms(errors: &[Vec2]) -> Vec<String> {
    errors.iter().map(|e| format!("{:.3}", e.norm())).collect()
}
