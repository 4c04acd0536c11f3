//! JSON flow files: `{"value", "scale", "edges": [{"tail", "head", "flow"}]}`, 0-based ids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{check_feasible, CapGraph, Demand, ScaledFlow, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeFlow {
    pub tail: usize,
    pub head: usize,
    pub flow: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowFile {
    pub value: i64,
    pub scale: i64,
    pub edges: Vec<EdgeFlow>,
}

impl FlowFile {
    pub fn new(g: &CapGraph, flow: &[i64], value: i64, scale: i64) -> Self {
        let edges = g.edges.iter().zip(flow).map(|(e, &f)| EdgeFlow { tail: e.tail, head: e.head, flow: f }).collect();
        FlowFile { value, scale, edges }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("flow file serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MalformedLine { line: e.line(), msg: e.to_string() })
    }

    /// Checks that the file describes an `s`-`t` flow of the claimed value on `g`.
    pub fn verify(&self, g: &CapGraph, s: usize, t: usize) -> Result<Verdict> {
        let fail = |msg: String| Ok(Verdict { ok: false, violation: Some(msg) });
        if self.scale <= 0 {
            return fail(format!("scale {} is not positive", self.scale));
        }
        if self.edges.len() != g.m() {
            return fail(format!("flow lists {} edges, graph has {}", self.edges.len(), g.m()));
        }
        for (i, (e, x)) in g.edges.iter().zip(&self.edges).enumerate() {
            if (e.tail, e.head) != (x.tail, x.head) {
                return fail(format!("edge {i} is {}->{} in the graph but {}->{} in the flow", e.tail, e.head, x.tail, x.head));
            }
        }
        if self.value < 0 {
            return fail(format!("negative value {}", self.value));
        }
        let values: Vec<i64> = self.edges.iter().map(|x| x.flow).collect();
        let d = Demand::st(g.n, s, t, self.value, self.scale);
        let f = ScaledFlow { scale: self.scale, values };
        let verdict = check_feasible(g, &d, &f, 1, 1)?;
        if !verdict.ok {
            return Ok(verdict);
        }
        let routed = g.net_out(&f.values)[s];
        if routed != self.value {
            return fail(format!("value mismatch: claimed {} but {routed} leaves the source", self.value));
        }
        Ok(verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path() -> CapGraph {
        CapGraph::from_edges(4, &[(0, 1, 5), (1, 2, 3), (2, 3, 9)])
    }

    #[test]
    fn round_trip_and_verify() {
        let g = path();
        let f = FlowFile::new(&g, &[3, 3, 3], 3, 1);
        let back = FlowFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert!(back.verify(&g, 0, 3).unwrap().ok);
    }

    #[test]
    fn tampered_flow_names_the_violation() {
        let g = path();
        let mut f = FlowFile::new(&g, &[3, 3, 3], 3, 1);
        f.edges[1].flow = 4;
        let v = f.verify(&g, 0, 3).unwrap();
        assert!(!v.ok);
        assert!(v.violation.unwrap().contains("capacity violated on edge 1"));

        let mut f = FlowFile::new(&g, &[3, 2, 2], 3, 1);
        f.value = 3;
        let v = f.verify(&g, 0, 3).unwrap();
        assert!(v.violation.unwrap().contains("conservation"));
    }

    #[test]
    fn overstated_value() {
        let g = path();
        let f = FlowFile::new(&g, &[2, 2, 2], 3, 1);
        let v = f.verify(&g, 0, 3).unwrap();
        assert!(!v.ok);
    }

    #[test]
    fn fractional_scale() {
        let g = CapGraph::from_edges(2, &[(0, 1, 1), (0, 1, 1)]);
        let f = FlowFile::new(&g, &[1, 2], 3, 2);
        assert!(f.verify(&g, 0, 1).unwrap().ok);
        assert!(FlowFile::from_json("{\"value\": 1}").is_err());
    }
}
