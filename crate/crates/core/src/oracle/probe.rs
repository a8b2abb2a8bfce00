use petgraph::algo::kosaraju_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::{OracleError, TruncatedSpace};
use crate::conservation::ConservedStructure;
use crate::network::ReactionNetwork;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub states: usize,
    /// States none of whose positive-rate moves leave the box.
    pub interior: usize,
    /// Distinct strongly connected components meeting the interior.
    pub interior_components: usize,
    pub strongly_connected: bool,
}

/// Builds the in-box transition graph and checks that all interior states
/// lie in one strongly connected component. `net` and `cs` use the
/// reordered species indexing.
pub fn empirical_irreducibility_probe(
    net: &ReactionNetwork,
    cs: &ConservedStructure,
    upper: &[u64],
    max_states: usize,
) -> Result<ProbeResult, OracleError> {
    let space = TruncatedSpace::new(cs, upper, max_states)?;
    let n = space.len();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n * net.num_reactions());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    let mut interior = vec![true; n];
    for i in 0..n {
        for (_, j, _) in space.transitions(net, i) {
            match j {
                Some(j) if j != i => {
                    g.add_edge(nodes[i], nodes[j], ());
                }
                Some(_) => {}
                None => interior[i] = false,
            }
        }
    }
    let mut component = vec![0usize; n];
    for (c, scc) in kosaraju_scc(&g).into_iter().enumerate() {
        for v in scc {
            component[v.index()] = c;
        }
    }
    let mut hit: Vec<usize> = (0..n).filter(|&i| interior[i]).map(|i| component[i]).collect();
    hit.sort_unstable();
    hit.dedup();
    Ok(ProbeResult {
        states: n,
        interior: interior.iter().filter(|&&b| b).count(),
        interior_components: hit.len(),
        strongly_connected: hit.len() <= 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;

    #[test]
    fn birth_death_ladder() {
        let net = parse_network("0 -> S ; 1\nS -> 0 ; 1").unwrap();
        let r = empirical_irreducibility_probe(&net, &ConservedStructure::trivial(1), &[30], 1000).unwrap();
        assert_eq!(r.states, 31);
        assert_eq!(r.interior, 30);
        assert!(r.strongly_connected);
    }

    #[test]
    fn pure_birth_splits() {
        let net = parse_network("0 -> S ; 1").unwrap();
        let r = empirical_irreducibility_probe(&net, &ConservedStructure::trivial(1), &[30], 1000).unwrap();
        assert!(!r.strongly_connected);
        assert_eq!(r.interior_components, 30);
    }

    #[test]
    fn too_large() {
        let net = parse_network("0 -> S ; 1").unwrap();
        let r = empirical_irreducibility_probe(&net, &ConservedStructure::trivial(1), &[30], 10);
        assert_eq!(r, Err(OracleError::StateSpaceTooLarge { limit: 10 }));
    }
}
