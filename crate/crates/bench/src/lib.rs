//! Synthetic class diagrams for the benchmarks.

use std::fmt::Write;

use patternforge::dsl::parse_model;
use patternforge::graph::TypedGraph;

/// `hierarchies` independent Composite structures with `leaves` leaves
/// each, plus `noise` unrelated classes chained by associations.
pub fn composite_model(hierarchies: usize, leaves: usize, noise: usize) -> TypedGraph {
    let mut s = String::from("model classdiagram\n");
    for h in 0..hierarchies {
        let _ = writeln!(s, "class Graphic{h} {{ abstract }}\nop draw in Graphic{h}");
        let _ = writeln!(s, "class Picture{h}\nedge inherits Picture{h} -> Graphic{h}\nedge aggregates Picture{h} -> Graphic{h}");
        for l in 0..leaves {
            let _ = writeln!(s, "class Leaf{h}_{l}\nedge inherits Leaf{h}_{l} -> Graphic{h}");
        }
    }
    for n in 0..noise {
        let _ = writeln!(s, "class Noise{n}");
        if n > 0 {
            let _ = writeln!(s, "edge assoc Noise{} -> Noise{n}", n - 1);
        }
    }
    parse_model(&s).expect("generated model parses").graph
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let g = composite_model(2, 3, 4);
        assert_eq!(g.node_count(), 2 * (3 + 3) + 4);
        assert_eq!(g.edge_count(), 2 * (3 + 3) + 3);
    }
}
