//! Plain-text model files.
//!
//! ```text
//! indoorboost-gbt 1
//! feature_count <d>
//! classes <k> <label>...
//! params <json GbtParams>
//! initial_scores <f64 x k>
//! stages <m>
//! tree <stage> <class> <n_nodes> <depth>
//! S <feature> <bin> <threshold> <left> <right>
//! L <value>
//! ...
//! end
//! ```
//!
//! Reals are written in Rust's shortest round-trip form, so a reloaded model
//! predicts bit-identically.

use std::io::{BufRead, Write};

use super::{GbtModel, GbtParams, Node, RegressionTree};
use crate::data::Label;
use crate::error::{Error, Result};

pub(crate) const GBT_MAGIC: &str = "indoorboost-gbt";
const GBT_VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::io("<model stream>", e)
}

fn join<T: std::fmt::Debug>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Line reader that tracks line numbers for error messages.
pub(crate) struct Lines<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> Lines<R> {
    pub(crate) fn new(inner: R) -> Self {
        Lines {
            inner,
            line: 0,
            buf: String::new(),
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.line,
            message: message.into(),
        }
    }

    /// Next line split into whitespace tokens.
    pub(crate) fn tokens(&mut self) -> Result<Vec<String>> {
        self.buf.clear();
        if self.inner.read_line(&mut self.buf).map_err(io_err)? == 0 {
            return Err(self.error("unexpected end of file"));
        }
        self.line += 1;
        Ok(self.buf.split_whitespace().map(str::to_string).collect())
    }

    /// Next line's tokens after a leading `key`.
    pub(crate) fn expect(&mut self, key: &str) -> Result<Vec<String>> {
        let mut tokens = self.tokens()?;
        if tokens.first().map(String::as_str) != Some(key) {
            return Err(self.error(format!("expected `{key}`, found {:?}", tokens.first())));
        }
        tokens.remove(0);
        Ok(tokens)
    }

    pub(crate) fn rest(&mut self, key: &str) -> Result<String> {
        self.buf.clear();
        if self.inner.read_line(&mut self.buf).map_err(io_err)? == 0 {
            return Err(self.error(format!("unexpected end of file, expected `{key}`")));
        }
        self.line += 1;
        let line = self.buf.trim_end();
        line.strip_prefix(key)
            .map(|r| r.trim().to_string())
            .ok_or_else(|| self.error(format!("expected `{key}`")))
    }

    pub(crate) fn parse<T: std::str::FromStr>(&self, token: &str) -> Result<T> {
        token
            .parse()
            .map_err(|_| self.error(format!("cannot parse `{token}`")))
    }

    pub(crate) fn parse_all<T: std::str::FromStr>(
        &self,
        tokens: &[String],
        count: usize,
    ) -> Result<Vec<T>> {
        if tokens.len() != count {
            return Err(self.error(format!("expected {count} values, found {}", tokens.len())));
        }
        tokens.iter().map(|t| self.parse(t)).collect()
    }
}

impl GbtModel {
    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        let params = serde_json::to_string(&self.params).expect("params serialize");
        (|| -> std::io::Result<()> {
            writeln!(out, "{GBT_MAGIC} {GBT_VERSION}")?;
            writeln!(out, "feature_count {}", self.feature_count)?;
            writeln!(
                out,
                "classes {} {}",
                self.classes.len(),
                join(&self.classes)
            )?;
            writeln!(out, "params {params}")?;
            writeln!(out, "initial_scores {}", join(&self.initial_scores))?;
            writeln!(out, "stages {}", self.stages.len())?;
            for (s, stage) in self.stages.iter().enumerate() {
                for (c, tree) in stage.iter().enumerate() {
                    writeln!(out, "tree {s} {c} {} {}", tree.nodes.len(), tree.depth)?;
                    for node in &tree.nodes {
                        match node {
                            Node::Split {
                                feature,
                                bin,
                                threshold,
                                left,
                                right,
                            } => writeln!(out, "S {feature} {bin} {threshold:?} {left} {right}")?,
                            Node::Leaf { value } => writeln!(out, "L {value:?}")?,
                        }
                    }
                }
            }
            writeln!(out, "end")
        })()
        .map_err(io_err)
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<GbtModel> {
        read_gbt(&mut Lines::new(input))
    }
}

pub(crate) fn read_gbt<R: BufRead>(lines: &mut Lines<R>) -> Result<GbtModel> {
    let header = lines.expect(GBT_MAGIC)?;
    let version: u32 = lines.parse(header.first().map_or("", String::as_str))?;
    if version != GBT_VERSION {
        return Err(lines.error(format!("unsupported version {version}")));
    }
    let t = lines.expect("feature_count")?;
    let feature_count: usize = lines.parse_all(&t, 1)?[0];
    let t = lines.expect("classes")?;
    let k: usize = lines.parse(t.first().map_or("", String::as_str))?;
    let classes: Vec<Label> = lines.parse_all(&t[1..], k)?;
    let json = lines.rest("params")?;
    let params: GbtParams =
        serde_json::from_str(&json).map_err(|e| lines.error(format!("bad params: {e}")))?;
    let t = lines.expect("initial_scores")?;
    let initial_scores: Vec<f64> = lines.parse_all(&t, k)?;
    let t = lines.expect("stages")?;
    let n_stages: usize = lines.parse_all(&t, 1)?[0];

    let mut stages = Vec::with_capacity(n_stages);
    for s in 0..n_stages {
        let mut stage = Vec::with_capacity(k);
        for c in 0..k {
            let t = lines.expect("tree")?;
            let ids: Vec<usize> = lines.parse_all(&t, 4)?;
            if ids[0] != s || ids[1] != c {
                return Err(lines.error(format!(
                    "expected tree {s} {c}, found {} {}",
                    ids[0], ids[1]
                )));
            }
            let n_nodes = ids[2];
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let mut t = lines.tokens()?;
                let kind = if t.is_empty() {
                    String::new()
                } else {
                    t.remove(0)
                };
                let is_split = match kind.as_str() {
                    "S" => true,
                    "L" => false,
                    _ => return Err(lines.error("expected `S` or `L` node")),
                };
                if is_split {
                    if t.len() != 5 {
                        return Err(lines.error("split node needs 5 fields"));
                    }
                    let node = Node::Split {
                        feature: lines.parse(&t[0])?,
                        bin: lines.parse(&t[1])?,
                        threshold: lines.parse(&t[2])?,
                        left: lines.parse(&t[3])?,
                        right: lines.parse(&t[4])?,
                    };
                    if let Node::Split {
                        feature,
                        left,
                        right,
                        ..
                    } = node
                    {
                        if feature >= feature_count || left >= n_nodes || right >= n_nodes {
                            return Err(lines.error("split node references out of range"));
                        }
                    }
                    nodes.push(node);
                } else {
                    let v: Vec<f64> = lines.parse_all(&t, 1)?;
                    nodes.push(Node::Leaf { value: v[0] });
                }
            }
            stage.push(RegressionTree {
                nodes,
                depth: ids[3],
            });
        }
        stages.push(stage);
    }
    lines.expect("end")?;
    Ok(GbtModel {
        classes,
        initial_scores,
        stages,
        params,
        feature_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbt::{gbt_fit, gbt_predict_scores};
    use crate::matrix::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reload_predicts_bit_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<Label> = rows
            .iter()
            .map(|r| {
                if r[0] * r[1] > 0.0 {
                    2
                } else if r[2] > 0.3 {
                    7
                } else {
                    0
                }
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let params = GbtParams {
            learning_rate: 0.1,
            n_trees: 12,
            ..GbtParams::default()
        };
        let model = gbt_fit(&x, &labels, &vec![1.0; 200], &params).unwrap();

        let mut buf = Vec::new();
        model.write_to(&mut buf).unwrap();
        let back = GbtModel::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        for _ in 0..200 {
            let row: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let a = gbt_predict_scores(&model, &row).unwrap();
            let b = gbt_predict_scores(&back, &row).unwrap();
            assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }

    #[test]
    fn rejects_corrupt_files() {
        assert!(GbtModel::read_from("nonsense 1\n".as_bytes()).is_err());
        assert!(GbtModel::read_from("indoorboost-gbt 9\n".as_bytes()).is_err());
        let truncated = "indoorboost-gbt 1\nfeature_count 1\nclasses 2 0 1\n";
        match GbtModel::read_from(truncated.as_bytes()) {
            Err(Error::ModelFormat { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
