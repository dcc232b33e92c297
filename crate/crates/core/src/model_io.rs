//! Plain-text network serialization.
//!
//! ```text
//! qnn v1 layers=<L>
//! layer in=<n> out=<m> activation=<identity|tanhshrink>
//! w <q0> <q1> <q2> <q3>        # m*n lines, row-major W[i,j]
//! b <q0> <q1> <q2> <q3>        # m lines
//! layer ...
//! ```
//!
//! Components use 17 significant digits, so `load(save(net))` reproduces
//! every parameter bit for bit. Blank lines and lines starting with `#`
//! are ignored.

use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, Network};
use crate::quat::{QMatrix, QVector, Quaternion};
use crate::textfmt::{header_field, header_usize, parse_error, parse_real, push_quaternion};

pub fn network_to_text(net: &Network) -> String {
    let mut out = format!("qnn v1 layers={}\n", net.layers().len());
    for layer in net.layers() {
        out.push_str(&format!(
            "layer in={} out={} activation={}\n",
            layer.inputs(),
            layer.outputs(),
            layer.activation
        ));
        for w in layer.weights.as_slice() {
            out.push_str("w ");
            push_quaternion(&mut out, *w);
            out.push('\n');
        }
        for b in layer.bias.iter() {
            out.push_str("b ");
            push_quaternion(&mut out, *b);
            out.push('\n');
        }
    }
    out
}

struct Cursor<'a> {
    path: &'a Path,
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, path: &'a Path) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self {
            path,
            lines,
            pos: 0,
        }
    }

    fn last_line(&self) -> usize {
        self.pos.checked_sub(1).map_or(1, |p| self.lines[p].0)
    }

    fn next(&mut self, expecting: &str) -> Result<(usize, Vec<&'a str>)> {
        let Some(&(ln, line)) = self.lines.get(self.pos) else {
            return Err(parse_error(
                self.path,
                self.last_line(),
                format!("unexpected end of file, expected {expecting}"),
            ));
        };
        self.pos += 1;
        Ok((ln, line.split_whitespace().collect()))
    }

    fn quaternion_record(&mut self, kind: &str) -> Result<Quaternion> {
        let (ln, tokens) = self.next(&format!("a '{kind}' record"))?;
        if tokens.first() != Some(&kind) {
            return Err(parse_error(
                self.path,
                ln,
                format!("expected a '{kind}' record, found '{}'", tokens.join(" ")),
            ));
        }
        if tokens.len() != 5 {
            return Err(parse_error(
                self.path,
                ln,
                format!("expected 4 components, found {}", tokens.len() - 1),
            ));
        }
        let mut c = [0.0; 4];
        for (slot, tok) in c.iter_mut().zip(&tokens[1..]) {
            *slot = parse_real(self.path, ln, tok)?;
        }
        Ok(Quaternion::from_array(c))
    }
}

pub fn network_from_text(text: &str, path: &Path) -> Result<Network> {
    let mut cur = Cursor::new(text, path);
    let (hl, tokens) = cur.next("the 'qnn v1' header")?;
    if tokens.len() < 2 || tokens[0] != "qnn" || tokens[1] != "v1" {
        return Err(parse_error(path, hl, "expected header 'qnn v1 layers=<L>'"));
    }
    let n_layers = header_usize(path, hl, &tokens, "layers")?;

    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let (ln, tokens) = cur.next("a 'layer' header")?;
        if tokens.first() != Some(&"layer") {
            return Err(parse_error(
                path,
                ln,
                format!("expected a 'layer' header, found '{}'", tokens.join(" ")),
            ));
        }
        let n_in = header_usize(path, ln, &tokens, "in")?;
        let n_out = header_usize(path, ln, &tokens, "out")?;
        let act: Activation = header_field(path, ln, &tokens, "activation")?
            .parse()
            .map_err(|e: Error| parse_error(path, ln, e.to_string()))?;
        let w = (0..n_in * n_out)
            .map(|_| cur.quaternion_record("w"))
            .collect::<Result<Vec<_>>>()?;
        let b = (0..n_out)
            .map(|_| cur.quaternion_record("b"))
            .collect::<Result<Vec<_>>>()?;
        layers.push(DenseLayer::new(
            QMatrix::from_row_major(n_out, n_in, w)?,
            QVector::new(b),
            act,
        )?);
    }
    if let Some(&(ln, _)) = cur.lines.get(cur.pos) {
        return Err(parse_error(
            path,
            ln,
            format!("trailing records after the {n_layers} declared layers"),
        ));
    }
    Network::new(layers)
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, network_to_text(net)).map_err(|e| Error::io(path, e))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    network_from_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_teacher;

    #[test]
    fn round_trip_is_bit_identical() {
        let net = make_teacher(&[3, 3, 2, 2], Activation::Tanhshrink, 9).unwrap();
        let text = network_to_text(&net);
        let back = network_from_text(&text, Path::new("mem")).unwrap();
        assert_eq!(back, net);
        for (a, b) in net.parameters().zip(back.parameters()) {
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn header_and_layout() {
        let net = Network::zeros(&[2, 1], Activation::Identity).unwrap();
        let text = network_to_text(&net);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "qnn v1 layers=1");
        assert_eq!(lines[1], "layer in=2 out=1 activation=identity");
        assert!(lines[2].starts_with("w 0.0000000000000000e0 "));
        assert_eq!(lines.len(), 2 + 2 + 1);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let net = Network::zeros(&[2, 2, 1], Activation::Tanhshrink).unwrap();
        let text = network_to_text(&net);
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        let err = network_from_text(&cut, Path::new("m.qnn")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn bad_records_are_rejected() {
        let p = Path::new("m.qnn");
        assert!(network_from_text("", p).is_err());
        assert!(network_from_text("qnn v2 layers=1\n", p).is_err());
        let bad_num =
            "qnn v1 layers=1\nlayer in=1 out=1 activation=identity\nw 1 2 x 4\nb 0 0 0 0\n";
        assert!(matches!(
            network_from_text(bad_num, p),
            Err(Error::Parse { line: 3, .. })
        ));
        let extra = "qnn v1 layers=1\nlayer in=1 out=1 activation=identity\nw 1 2 3 4\nb 0 0 0 0\nb 0 0 0 0\n";
        assert!(matches!(
            network_from_text(extra, p),
            Err(Error::Parse { line: 5, .. })
        ));
        let bad_final =
            "qnn v1 layers=1\nlayer in=1 out=1 activation=tanhshrink\nw 1 2 3 4\nb 0 0 0 0\n";
        assert!(matches!(
            network_from_text(bad_final, p),
            Err(Error::InvalidConfig(_))
        ));
    }
}
