//! Plain-text SEM serialization.
//!
//! Line-oriented format: a header with the node count and roles, then one
//! `i j weight` line per edge, then one `i sigma2` line per node. Lines
//! starting with `#` and blank lines are ignored.
//!
//! ```text
//! p 4
//! treatment 2
//! outcome 3
//! anchor 0
//! hidden 1
//! 0 2 0.95
//! 1 2 0.6
//! 1 3 1.0
//! 2 3 0.8
//! 0 1
//! 1 1
//! 2 1
//! 3 1
//! ```

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::LinearSem;
use crate::numerics::Matrix;
use crate::{Error, Result};

/// Renders a model in the adjacency format above. Floats use the shortest
/// round-trip representation, so parse(render(sem)) is exact.
pub fn render_sem(sem: &LinearSem) -> String {
    let mut out = String::new();
    let p = sem.num_nodes();
    out.push_str(&format!("p {p}\n"));
    out.push_str(&format!("treatment {}\n", sem.treatment()));
    out.push_str(&format!("outcome {}\n", sem.outcome()));
    out.push_str(&format!("anchor {}\n", sem.anchor()));
    out.push_str("hidden");
    for h in sem.hidden() {
        out.push_str(&format!(" {h}"));
    }
    out.push('\n');
    for i in 0..p {
        for j in 0..p {
            let w = sem.edge_weights().get(i, j);
            if w != 0.0 {
                out.push_str(&format!("{i} {j} {w}\n"));
            }
        }
    }
    for (i, s) in sem.noise_variances().iter().enumerate() {
        out.push_str(&format!("{i} {s}\n"));
    }
    out
}

/// Parses the adjacency format, running full model validation.
pub fn parse_sem(text: &str) -> Result<LinearSem> {
    let mut p: Option<usize> = None;
    let mut treatment: Option<usize> = None;
    let mut outcome: Option<usize> = None;
    let mut anchor: Option<usize> = None;
    let mut hidden: BTreeSet<usize> = BTreeSet::new();
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut noises: Vec<(usize, f64)> = Vec::new();

    let parse_usize = |tok: &str, line_no: usize| -> Result<usize> {
        tok.parse::<usize>()
            .map_err(|_| Error::Data(format!("line {line_no}: expected an index, got {tok:?}")))
    };
    let parse_f64 = |tok: &str, line_no: usize| -> Result<f64> {
        tok.parse::<f64>()
            .map_err(|_| Error::Data(format!("line {line_no}: expected a number, got {tok:?}")))
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "p" => {
                if tokens.len() != 2 {
                    return Err(Error::Data(format!("line {line_no}: malformed p line")));
                }
                p = Some(parse_usize(tokens[1], line_no)?);
            }
            "treatment" => treatment = Some(parse_usize(tokens[1], line_no)?),
            "outcome" => outcome = Some(parse_usize(tokens[1], line_no)?),
            "anchor" => anchor = Some(parse_usize(tokens[1], line_no)?),
            "hidden" => {
                for tok in &tokens[1..] {
                    hidden.insert(parse_usize(tok, line_no)?);
                }
            }
            _ => match tokens.len() {
                3 => {
                    let i = parse_usize(tokens[0], line_no)?;
                    let j = parse_usize(tokens[1], line_no)?;
                    let w = parse_f64(tokens[2], line_no)?;
                    edges.push((i, j, w));
                }
                2 => {
                    let i = parse_usize(tokens[0], line_no)?;
                    let s = parse_f64(tokens[1], line_no)?;
                    noises.push((i, s));
                }
                _ => {
                    return Err(Error::Data(format!(
                        "line {line_no}: expected `i j weight` or `i sigma2`, got {line:?}"
                    )))
                }
            },
        }
    }

    let p = p.ok_or_else(|| Error::Data("missing `p <count>` header line".into()))?;
    let treatment = treatment.ok_or_else(|| Error::Data("missing `treatment` line".into()))?;
    let outcome = outcome.ok_or_else(|| Error::Data("missing `outcome` line".into()))?;
    let anchor = anchor.ok_or_else(|| Error::Data("missing `anchor` line".into()))?;

    let mut b = Matrix::zeros(p, p);
    for (i, j, w) in edges {
        if i >= p || j >= p {
            return Err(Error::Data(format!("edge ({i}, {j}) out of range for p = {p}")));
        }
        b.set(i, j, w);
    }
    let mut omega = alloc::vec![0.0; p];
    let mut seen = alloc::vec![false; p];
    for (i, s) in noises {
        if i >= p {
            return Err(Error::Data(format!("noise index {i} out of range for p = {p}")));
        }
        omega[i] = s;
        seen[i] = true;
    }
    if let Some(missing) = seen.iter().position(|&ok| !ok) {
        return Err(Error::Data(format!("missing noise variance for node {missing}")));
    }
    LinearSem::new(b, omega, treatment, outcome, anchor, hidden)
}

#[cfg(test)]
mod tests {
    use super::super::tests::confounded;
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let sem = confounded(0.9371, 0.6123, 1.0456, 0.8999);
        let text = render_sem(&sem);
        let back = parse_sem(&text).unwrap();
        assert_eq!(back.edge_weights(), sem.edge_weights());
        assert_eq!(back.noise_variances(), sem.noise_variances());
        assert_eq!(back.treatment(), sem.treatment());
        assert_eq!(back.hidden(), sem.hidden());
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_sem("p 3\ntreatment 1\noutcome 2\nanchor 0\n0 1 oops\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 5"), "message: {msg}");
    }

    #[test]
    fn parse_validates_model() {
        // Structurally fine lines, but the anchor edge is missing.
        let text = "p 3\ntreatment 1\noutcome 2\nanchor 0\n1 2 1.0\n0 1.0\n1 1.0\n2 1.0\n";
        assert!(parse_sem(text).is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let sem = confounded(0.9, 0.6, 1.0, 0.8);
        let mut text = String::from("# generated\n\n");
        text.push_str(&render_sem(&sem));
        assert!(parse_sem(&text).is_ok());
    }
}
