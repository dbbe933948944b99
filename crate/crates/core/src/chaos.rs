//! Scripted fault injection on the simulated cluster.
//!
//! A `network_delay` fault overrides the one-way latency of its links in both
//! directions; a `cpu_stress` fault adds busy threads to its nodes, which the
//! fair-share contention model picks up at the next service start. Reverting
//! restores the values saved when the fault was applied.

use thiserror::Error;

use crate::config::{ChaosDef, ChaosKind};
use crate::simcore::{ClusterState, SimTime};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChaosError {
    #[error("chaos[{index}] conflicts with active chaos[{active}] on `{target}`")]
    Conflict {
        index: usize,
        active: usize,
        target: String,
    },
    #[error("chaos[{0}] is not active")]
    NotActive(usize),
    #[error("chaos[{index}] targets unknown {what} `{name}`")]
    UnknownTarget {
        index: usize,
        what: &'static str,
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum SavedBaseline {
    /// `(link index, latency before the fault)`
    Links(Vec<(usize, f64)>),
    /// `(node index, stress threads before the fault)`
    Nodes(Vec<(usize, u32)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveFault {
    pub index: usize,
    pub def: ChaosDef,
    pub applied_at: SimTime,
    saved: SavedBaseline,
}

impl ActiveFault {
    fn touches(&self, other: &SavedBaseline) -> Option<String> {
        match (&self.saved, other) {
            (SavedBaseline::Links(a), SavedBaseline::Links(b)) => a
                .iter()
                .find(|(l, _)| b.iter().any(|(m, _)| m == l))
                .map(|(l, _)| format!("link {l}")),
            (SavedBaseline::Nodes(a), SavedBaseline::Nodes(b)) => a
                .iter()
                .find(|(n, _)| b.iter().any(|(m, _)| m == n))
                .map(|(n, _)| format!("node {n}")),
            _ => None,
        }
    }
}

/// Faults currently in effect.
#[derive(Debug, Clone, Default)]
pub struct ChaosController {
    active: Vec<ActiveFault>,
}

impl ChaosController {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn active(&self) -> &[ActiveFault] {
        &self.active
    }

    pub fn is_active(&self, index: usize) -> bool {
        self.active.iter().any(|f| f.index == index)
    }

    /// Applies chaos definition `index`.
    pub fn apply(
        &mut self,
        state: &mut ClusterState,
        index: usize,
        def: &ChaosDef,
    ) -> Result<&ActiveFault, ChaosError> {
        let targets = resolve_targets(state, index, def)?;
        if let Some((active, target)) = self
            .active
            .iter()
            .find_map(|f| f.touches(&targets).map(|t| (f.index, t)))
        {
            return Err(ChaosError::Conflict {
                index,
                active,
                target,
            });
        }
        let saved = match (&def.kind, targets) {
            (ChaosKind::NetworkDelay { new_latency_ms, .. }, SavedBaseline::Links(links)) => {
                let saved = links
                    .into_iter()
                    .map(|(l, _)| {
                        let before = state.links[l].latency_ms;
                        state.links[l].latency_ms = *new_latency_ms;
                        (l, before)
                    })
                    .collect();
                SavedBaseline::Links(saved)
            }
            (ChaosKind::CpuStress { threads, .. }, SavedBaseline::Nodes(nodes)) => {
                let saved = nodes
                    .into_iter()
                    .map(|(n, _)| {
                        let before = state.nodes[n].stress_threads;
                        state.nodes[n].stress_threads = before + threads;
                        (n, before)
                    })
                    .collect();
                SavedBaseline::Nodes(saved)
            }
            _ => unreachable!("targets resolved per kind"),
        };
        self.active.push(ActiveFault {
            index,
            def: def.clone(),
            applied_at: state.clock,
            saved,
        });
        Ok(self.active.last().expect("just pushed"))
    }

    /// Reverts chaos definition `index`, restoring the saved baseline.
    pub fn revert(
        &mut self,
        state: &mut ClusterState,
        index: usize,
    ) -> Result<ActiveFault, ChaosError> {
        let pos = self
            .active
            .iter()
            .position(|f| f.index == index)
            .ok_or(ChaosError::NotActive(index))?;
        let fault = self.active.remove(pos);
        match &fault.saved {
            SavedBaseline::Links(links) => {
                for &(l, before) in links {
                    state.links[l].latency_ms = before;
                }
            }
            SavedBaseline::Nodes(nodes) => {
                for &(n, before) in nodes {
                    state.nodes[n].stress_threads = before;
                }
            }
        }
        Ok(fault)
    }
}

fn resolve_targets(
    state: &ClusterState,
    index: usize,
    def: &ChaosDef,
) -> Result<SavedBaseline, ChaosError> {
    match &def.kind {
        ChaosKind::NetworkDelay { links, .. } => links
            .iter()
            .map(|(a, b)| {
                let unknown = || ChaosError::UnknownTarget {
                    index,
                    what: "link",
                    name: format!("{a}<->{b}"),
                };
                let za = state.zone_index(a).ok_or_else(unknown)?;
                let zb = state.zone_index(b).ok_or_else(unknown)?;
                let l = state.link_between(za, zb).ok_or_else(unknown)?;
                Ok((l, 0.0))
            })
            .collect::<Result<_, _>>()
            .map(SavedBaseline::Links),
        ChaosKind::CpuStress { nodes, .. } => nodes
            .iter()
            .map(|n| {
                state
                    .node_index(n)
                    .map(|i| (i, 0))
                    .ok_or_else(|| ChaosError::UnknownTarget {
                        index,
                        what: "node",
                        name: n.clone(),
                    })
            })
            .collect::<Result<_, _>>()
            .map(SavedBaseline::Nodes),
    }
}
