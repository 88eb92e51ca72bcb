//! Prefix-tree log sanitization: find trace prefixes that violate k-anonymity
//! or t-closeness, detach them, and merge the affected traces into the
//! nearest remaining variant until both guarantees hold.

use std::collections::{BTreeSet, HashMap, HashSet};

use chrono::{DateTime, Duration, FixedOffset};

use crate::distance::{nearest_candidate, Candidate, DistanceMeasure};
use crate::error::{Error, Result};
use crate::eventlog::{ActivityId, Event, EventLog, Trace};

/// Privacy thresholds enforced by [`anonymize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    k: usize,
    t_close: f64,
}

impl PrivacyParams {
    /// `k >= 1` is the minimum group size; `t_close` in `[0, 1]` bounds the
    /// normalized duration-distribution distance of any group.
    pub fn new(k: usize, t_close: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter(format!(
                "k must be at least 1, got {k}"
            )));
        }
        if !(0.0..=1.0).contains(&t_close) {
            return Err(Error::InvalidParameter(format!(
                "t must lie in [0, 1], got {t_close}"
            )));
        }
        Ok(Self { k, t_close })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t_close(&self) -> f64 {
        self.t_close
    }
}

/// One performed merge: a violating trace relabeled to a surviving variant.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeRecord {
    pub case_id: String,
    pub source_variant: String,
    pub target_variant: String,
    pub distance: f64,
}

/// What the anonymization loop did to reach a compliant log.
#[derive(Debug, Clone, Default)]
pub struct AnonymizationReport {
    pub merges: Vec<MergeRecord>,
    pub truncated: usize,
    pub dropped: usize,
    pub iterations: usize,
    /// The input had fewer than `k` traces; the output is empty.
    pub input_smaller_than_k: bool,
}

/// Node handle into a [`PrefixTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

const ROOT: usize = 0;

#[derive(Debug, Clone)]
struct Node {
    /// `None` only for the virtual root.
    activity: Option<ActivityId>,
    depth: usize,
    parent: Option<usize>,
    children: Vec<usize>,
    trace_ids: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
struct TraceState {
    case_id: String,
    first_timestamp: DateTime<FixedOffset>,
    sequence: Vec<ActivityId>,
    /// Seconds between consecutive events; position 0 is always 0.
    durations: Vec<f64>,
    alive: bool,
}

/// Prefix tree over the traces of one log.
///
/// Each node groups the traces sharing the activity prefix spelled by the
/// path from the root, and its sensitive bag holds those traces' event
/// durations at the node's depth.
#[derive(Debug, Clone)]
pub struct PrefixTree {
    nodes: Vec<Node>,
    traces: Vec<TraceState>,
}

/// Builds the prefix tree of `log`, deriving event durations from timestamps
/// when the log is not yet annotated.
pub fn build_prefix_tree(log: &EventLog) -> PrefixTree {
    PrefixTree::build(log)
}

impl PrefixTree {
    fn build(log: &EventLog) -> Self {
        let traces: Vec<TraceState> = log
            .traces
            .iter()
            .map(|trace| TraceState {
                case_id: trace.case_id.clone(),
                first_timestamp: trace.events[0].timestamp,
                sequence: trace.activity_sequence(),
                durations: trace_durations(trace, log.durations_annotated()),
                alive: true,
            })
            .collect();
        let root = Node {
            activity: None,
            depth: 0,
            parent: None,
            children: Vec::new(),
            trace_ids: BTreeSet::new(),
        };
        let mut tree = Self {
            nodes: vec![root],
            traces,
        };
        for idx in 0..tree.traces.len() {
            tree.insert_trace(idx);
        }
        tree
    }

    pub fn root(&self) -> NodeId {
        NodeId(ROOT)
    }

    /// `None` for the root.
    pub fn activity(&self, node: NodeId) -> Option<ActivityId> {
        self.nodes[node.0].activity
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.nodes[node.0].depth
    }

    pub fn children(&self, node: NodeId) -> Vec<NodeId> {
        self.nodes[node.0].children.iter().map(|&c| NodeId(c)).collect()
    }

    pub fn child_by_activity(&self, node: NodeId, activity: ActivityId) -> Option<NodeId> {
        self.find_child(node.0, activity).map(NodeId)
    }

    pub fn trace_count(&self, node: NodeId) -> usize {
        self.nodes[node.0].trace_ids.len()
    }

    pub fn case_ids(&self, node: NodeId) -> Vec<&str> {
        self.nodes[node.0]
            .trace_ids
            .iter()
            .map(|&t| self.traces[t].case_id.as_str())
            .collect()
    }

    /// Durations at this node's depth, one per trace through the node.
    pub fn sensitive_bag(&self, node: NodeId) -> Vec<f64> {
        let n = &self.nodes[node.0];
        if n.depth == 0 {
            return Vec::new();
        }
        n.trace_ids
            .iter()
            .map(|&t| self.traces[t].durations[n.depth - 1])
            .collect()
    }

    /// Number of reachable nodes, root included.
    pub fn node_count(&self) -> usize {
        let mut count = 0;
        let mut stack = vec![ROOT];
        while let Some(n) = stack.pop() {
            count += 1;
            stack.extend(&self.nodes[n].children);
        }
        count
    }

    /// Duration multiset per activity over all traces currently in the tree
    /// (the overall population the t-closeness check compares against).
    pub fn overall_distributions(&self) -> HashMap<ActivityId, Vec<f64>> {
        let mut overall: HashMap<ActivityId, Vec<f64>> = HashMap::new();
        for &idx in &self.nodes[ROOT].trace_ids {
            let trace = &self.traces[idx];
            for (i, &activity) in trace.sequence.iter().enumerate() {
                overall.entry(activity).or_default().push(trace.durations[i]);
            }
        }
        overall
    }

    fn find_child(&self, node: usize, activity: ActivityId) -> Option<usize> {
        self.nodes[node]
            .children
            .iter()
            .copied()
            .find(|&c| self.nodes[c].activity == Some(activity))
    }

    fn insert_trace(&mut self, trace: usize) {
        let sequence = self.traces[trace].sequence.clone();
        let mut node = ROOT;
        self.nodes[ROOT].trace_ids.insert(trace);
        for (i, &activity) in sequence.iter().enumerate() {
            let child = match self.find_child(node, activity) {
                Some(c) => c,
                None => {
                    let c = self.nodes.len();
                    self.nodes.push(Node {
                        activity: Some(activity),
                        depth: i + 1,
                        parent: Some(node),
                        children: Vec::new(),
                        trace_ids: BTreeSet::new(),
                    });
                    self.nodes[node].children.push(c);
                    c
                }
            };
            self.nodes[child].trace_ids.insert(trace);
            node = child;
        }
    }

    fn remove_trace(&mut self, trace: usize) {
        let sequence = self.traces[trace].sequence.clone();
        let mut path = Vec::with_capacity(sequence.len());
        let mut node = ROOT;
        self.nodes[ROOT].trace_ids.remove(&trace);
        for &activity in &sequence {
            let child = self
                .find_child(node, activity)
                .expect("live trace path must exist in the tree");
            self.nodes[child].trace_ids.remove(&trace);
            path.push(child);
            node = child;
        }
        // Prune emptied nodes bottom-up.
        for &n in path.iter().rev() {
            if self.nodes[n].trace_ids.is_empty() {
                let parent = self.nodes[n].parent.expect("non-root node has a parent");
                self.nodes[parent].children.retain(|&c| c != n);
            }
        }
    }

    fn end_count(&self, node: usize) -> usize {
        let depth = self.nodes[node].depth;
        self.nodes[node]
            .trace_ids
            .iter()
            .filter(|&&t| self.traces[t].sequence.len() == depth)
            .count()
    }

    /// Variants currently in the tree, in first-appearance order:
    /// (sequence, member traces). Detached traces are not listed, so they
    /// can never be chosen as their own merge target.
    fn live_variants(&self) -> Vec<(Vec<ActivityId>, Vec<usize>)> {
        let mut order: Vec<(Vec<ActivityId>, Vec<usize>)> = Vec::new();
        let mut positions: HashMap<Vec<ActivityId>, usize> = HashMap::new();
        for &idx in &self.nodes[ROOT].trace_ids {
            let trace = &self.traces[idx];
            match positions.get(&trace.sequence) {
                Some(&p) => order[p].1.push(idx),
                None => {
                    positions.insert(trace.sequence.clone(), order.len());
                    order.push((trace.sequence.clone(), vec![idx]));
                }
            }
        }
        order
    }
}

fn trace_durations(trace: &Trace, annotated: bool) -> Vec<f64> {
    if annotated {
        return trace.events.iter().map(|e| e.duration_secs).collect();
    }
    let mut durations = Vec::with_capacity(trace.events.len());
    for (i, event) in trace.events.iter().enumerate() {
        if i == 0 {
            durations.push(0.0);
        } else {
            let gap = event
                .timestamp
                .signed_duration_since(trace.events[i - 1].timestamp)
                .num_milliseconds() as f64
                / 1000.0;
            durations.push(gap.max(0.0));
        }
    }
    durations
}

/// Normalized 1-D earth mover's distance between two duration multisets:
/// the area between the empirical CDFs, divided by the range of the combined
/// support (0 when the range is 0). Always in `[0, 1]`.
pub fn emd_normalized(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyMultiset);
    }
    let mut ps = p.to_vec();
    let mut qs = q.to_vec();
    ps.sort_unstable_by(|a, b| a.partial_cmp(b).expect("durations are finite"));
    qs.sort_unstable_by(|a, b| a.partial_cmp(b).expect("durations are finite"));
    let min = ps[0].min(qs[0]);
    let max = ps[ps.len() - 1].max(qs[qs.len() - 1]);
    let range = max - min;
    if range == 0.0 {
        return Ok(0.0);
    }
    let (n, m) = (ps.len() as f64, qs.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = min;
    let mut area = 0.0;
    loop {
        let next = match (ps.get(i), qs.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        area += (i as f64 / n - j as f64 / m).abs() * (next - prev);
        while ps.get(i) == Some(&next) {
            i += 1;
        }
        while qs.get(j) == Some(&next) {
            j += 1;
        }
        prev = next;
    }
    Ok((area / range).clamp(0.0, 1.0))
}

/// True when the node's group breaks either guarantee: fewer than `k` traces,
/// or its duration bag sits farther than `t_close` from the overall
/// distribution of its activity.
pub fn violates(
    tree: &PrefixTree,
    node: NodeId,
    params: &PrivacyParams,
    overall: &HashMap<ActivityId, Vec<f64>>,
) -> bool {
    let n = &tree.nodes[node.0];
    assert!(n.depth > 0, "the virtual root is never checked");
    if n.trace_ids.len() < params.k {
        return true;
    }
    // The normalized distance never exceeds 1, so t = 1 cannot be violated.
    if params.t_close >= 1.0 {
        return false;
    }
    let activity = n.activity.expect("non-root node has an activity");
    let bag = tree.sensitive_bag(node);
    let population = overall
        .get(&activity)
        .expect("live node's activity occurs in the population");
    emd_normalized(population, &bag).expect("both bags are nonempty") > params.t_close
}

enum Violation {
    /// The node's whole group breaks a guarantee: detach the subtree.
    Subtree(usize),
    /// Only the traces ending exactly here are too few: detach just those.
    EndGroup(usize),
}

/// Anonymizes `log` to `params` under `measure`.
///
/// Repeatedly finds the first violating prefix (depth-first, children by
/// descending trace count), detaches the affected traces, and merges each
/// into its nearest remaining variant. Traces with no remaining target are
/// truncated to a compliant input-variant prefix or dropped.
pub fn anonymize(
    log: &EventLog,
    params: &PrivacyParams,
    measure: &DistanceMeasure<'_>,
) -> Result<(EventLog, AnonymizationReport)> {
    if let DistanceMeasure::Embedding { table, .. } = measure {
        if table.len() < log.activities.len() {
            return Err(Error::InvalidParameter(format!(
                "event distance table covers {} activities but the log has {}",
                table.len(),
                log.activities.len()
            )));
        }
    }
    let mut report = AnonymizationReport::default();
    if log.traces.len() < params.k {
        log::warn!(
            "input has {} traces, fewer than k = {}: emitting an empty log",
            log.traces.len(),
            params.k
        );
        report.input_smaller_than_k = true;
        report.dropped = log.traces.len();
        let mut empty = EventLog::from_traces(Vec::new(), log.activities.clone())
            .expect("empty trace list is always valid");
        empty.set_durations_annotated();
        return Ok((empty, report));
    }

    let mut tree = PrefixTree::build(log);
    let input_variants: HashSet<Vec<ActivityId>> = tree
        .live_variants()
        .into_iter()
        .map(|(seq, _)| seq)
        .collect();
    let max_len = tree
        .traces
        .iter()
        .map(|t| t.sequence.len())
        .max()
        .unwrap_or(0);
    // The loop provably terminates (every iteration removes a variant,
    // shortens traces or drops them); the cap only guards against bugs.
    let iteration_cap = 64 + 4 * input_variants.len() * max_len.max(1);

    loop {
        let overall = tree.overall_distributions();
        let violation = find_violation(&tree, params, &overall);
        let Some(violation) = violation else { break };
        report.iterations += 1;
        let force_drop = report.iterations > iteration_cap;
        if force_drop {
            log::warn!("iteration cap reached; dropping remaining violating traces");
        }

        let orphans: Vec<usize> = match violation {
            Violation::Subtree(node) => tree.nodes[node].trace_ids.iter().copied().collect(),
            Violation::EndGroup(node) => {
                let depth = tree.nodes[node].depth;
                tree.nodes[node]
                    .trace_ids
                    .iter()
                    .copied()
                    .filter(|&t| tree.traces[t].sequence.len() == depth)
                    .collect()
            }
        };
        for &t in &orphans {
            tree.remove_trace(t);
        }
        if force_drop {
            for &t in &orphans {
                tree.traces[t].alive = false;
            }
            report.dropped += orphans.len();
            continue;
        }

        let variants = tree.live_variants();
        if variants.is_empty() {
            truncate_or_drop(&mut tree, &orphans, &input_variants, params, &mut report);
            continue;
        }
        let candidates: Vec<Candidate<'_>> = variants
            .iter()
            .map(|(seq, members)| Candidate {
                sequence: seq,
                count: members.len(),
            })
            .collect();
        for &t in &orphans {
            let source = tree.traces[t].sequence.clone();
            let chosen = nearest_candidate(&source, &candidates, measure)?;
            let target = candidates[chosen].sequence.to_vec();
            report.merges.push(MergeRecord {
                case_id: tree.traces[t].case_id.clone(),
                source_variant: log.render_sequence(&source, ","),
                target_variant: log.render_sequence(&target, ","),
                distance: measure.distance(&target, &source),
            });
            merge_trace(&mut tree, t, &target);
        }
    }

    let output = rebuild_log(&tree, log);
    debug_assert_eq!(output.traces.len() + report.dropped, log.traces.len());
    Ok((output, report))
}

/// First violating node in depth-first order; children are visited by
/// descending trace count, ties by activity index.
fn find_violation(
    tree: &PrefixTree,
    params: &PrivacyParams,
    overall: &HashMap<ActivityId, Vec<f64>>,
) -> Option<Violation> {
    let mut stack = vec![ROOT];
    while let Some(n) = stack.pop() {
        if n != ROOT {
            if violates(tree, NodeId(n), params, overall) {
                return Some(Violation::Subtree(n));
            }
            let ends = tree.end_count(n);
            if ends > 0 && ends < params.k {
                return Some(Violation::EndGroup(n));
            }
        }
        let mut kids = tree.nodes[n].children.clone();
        kids.sort_by(|&a, &b| {
            tree.nodes[b]
                .trace_ids
                .len()
                .cmp(&tree.nodes[a].trace_ids.len())
                .then(tree.nodes[a].activity.cmp(&tree.nodes[b].activity))
        });
        stack.extend(kids.iter().rev());
    }
    None
}

/// Relabels trace `t` to `target` and reinserts it.
///
/// Positions shared with the target keep the trace's own durations; added
/// positions take the median duration of the target node's bag at that depth;
/// positions beyond the target are discarded.
fn merge_trace(tree: &mut PrefixTree, t: usize, target: &[ActivityId]) {
    let kept = tree.traces[t].sequence.len().min(target.len());
    let mut durations: Vec<f64> = tree.traces[t].durations[..kept].to_vec();
    if target.len() > kept {
        // Walk the target path once; bags are read before this trace joins.
        let mut node = ROOT;
        for (depth, &activity) in target.iter().enumerate() {
            node = tree
                .find_child(node, activity)
                .expect("target variant is live in the tree");
            if depth >= kept {
                durations.push(median(tree.sensitive_bag(NodeId(node))));
            }
        }
    }
    tree.traces[t].sequence = target.to_vec();
    tree.traces[t].durations = durations;
    tree.insert_trace(t);
}

/// Median rounded to millisecond precision, so synthesized durations stay
/// exactly representable in written timestamps.
fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty(), "median of a live node's bag");
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("durations are finite"));
    let mid = values.len() / 2;
    let raw = if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    };
    (raw * 1000.0).round() / 1000.0
}

/// Fallback when a detach left no variant to merge into (the tree is empty):
/// truncate each orphan to its longest proper prefix that is an input variant
/// and whose pooled group reaches `k`; drop the rest.
///
/// Prefix lengths are processed longest-first so shorter pools collect every
/// trace that falls through from longer ones.
fn truncate_or_drop(
    tree: &mut PrefixTree,
    orphans: &[usize],
    input_variants: &HashSet<Vec<ActivityId>>,
    params: &PrivacyParams,
    report: &mut AnonymizationReport,
) {
    // Proper-prefix chains, longest first. Reinserting a full sequence could
    // recreate the violation just detached, so the trace must shrink.
    let mut chains: Vec<(usize, Vec<Vec<ActivityId>>)> = orphans
        .iter()
        .map(|&t| {
            let seq = &tree.traces[t].sequence;
            let chain: Vec<Vec<ActivityId>> = (1..seq.len())
                .rev()
                .map(|len| seq[..len].to_vec())
                .filter(|prefix| input_variants.contains(prefix))
                .collect();
            (t, chain)
        })
        .collect();

    let max_len = chains
        .iter()
        .filter_map(|(_, c)| c.first().map(|p| p.len()))
        .max()
        .unwrap_or(0);
    for len in (1..=max_len).rev() {
        // Pool this round's proposals by prefix, in stable orphan order.
        let mut pools: Vec<(Vec<ActivityId>, Vec<usize>)> = Vec::new();
        for (pos, (_, chain)) in chains.iter().enumerate() {
            let Some(head) = chain.first() else { continue };
            if head.len() != len {
                continue;
            }
            match pools.iter_mut().find(|(seq, _)| seq == head) {
                Some((_, members)) => members.push(pos),
                None => pools.push((head.clone(), vec![pos])),
            }
        }
        for (prefix, members) in pools {
            if members.len() >= params.k {
                for &pos in &members {
                    let t = chains[pos].0;
                    tree.traces[t].sequence = prefix.clone();
                    tree.traces[t].durations.truncate(prefix.len());
                    tree.insert_trace(t);
                    report.truncated += 1;
                    chains[pos].1.clear();
                    chains[pos].1.push(Vec::new()); // mark as settled
                }
            } else {
                for &pos in &members {
                    chains[pos].1.remove(0);
                }
            }
        }
    }
    for (t, chain) in &chains {
        let settled = chain.first().map(|p| p.is_empty()).unwrap_or(false);
        if !settled {
            tree.traces[*t].alive = false;
            report.dropped += 1;
        }
    }
}

/// Materializes live traces back into an event log, rebuilding timestamps
/// from each trace's first event plus its (millisecond-exact) durations.
fn rebuild_log(tree: &PrefixTree, input: &EventLog) -> EventLog {
    let traces: Vec<Trace> = tree
        .traces
        .iter()
        .filter(|t| t.alive)
        .map(|state| {
            let mut elapsed_ms: i64 = 0;
            let events = state
                .sequence
                .iter()
                .zip(&state.durations)
                .map(|(&activity, &duration)| {
                    elapsed_ms += (duration * 1000.0).round() as i64;
                    Event {
                        activity,
                        timestamp: state.first_timestamp + Duration::milliseconds(elapsed_ms),
                        duration_secs: duration,
                    }
                })
                .collect();
            Trace {
                case_id: state.case_id.clone(),
                events,
            }
        })
        .collect();
    let mut log = EventLog::from_traces(traces, input.activities.clone())
        .expect("case ids are preserved from the valid input");
    log.set_durations_annotated();
    log
}
