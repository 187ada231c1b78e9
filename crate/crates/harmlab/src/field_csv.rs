//! Field CSV files: one row `x1,...,xd,value` per point in lexicographic
//! order, values with 17 significant digits, after a `#` line naming the
//! tool version and configuration digest.

use std::io::{Read, Write};
use std::path::Path;

use harmlab_core::{Field, LatticePoint, PointSet};

use crate::HarmlabError;

/// Provenance line of an artifact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    pub digest: String,
}

impl Provenance {
    pub fn new(digest: &str) -> Self {
        Provenance { version: crate::VERSION.to_string(), digest: digest.to_string() }
    }

    fn line(&self) -> String {
        format!("# harmlab {} config {}", self.version, self.digest)
    }

    fn parse(line: &str) -> Option<Self> {
        let mut words = line.strip_prefix('#')?.split_whitespace();
        match (words.next()?, words.next()?, words.next()?, words.next()?) {
            ("harmlab", version, "config", digest) => {
                Some(Provenance { version: version.to_string(), digest: digest.to_string() })
            }
            _ => None,
        }
    }
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field<W: Write>(out: W, field: &Field, provenance: &Provenance) -> Result<(), HarmlabError> {
    let dim = field.support().dim();
    let mut out = out;
    writeln!(out, "{}", provenance.line()).map_err(HarmlabError::csv)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    header.push("value".into());
    w.write_record(&header).map_err(HarmlabError::csv)?;
    for (x, v) in field.iter() {
        let mut row: Vec<String> = x.coords().iter().map(|c| c.to_string()).collect();
        row.push(format_value(v));
        w.write_record(&row).map_err(HarmlabError::csv)?;
    }
    w.flush().map_err(HarmlabError::csv)
}

pub fn read_field<R: Read>(input: R) -> Result<(Field, Option<Provenance>), HarmlabError> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text).map_err(HarmlabError::csv)?;
    let provenance = text.lines().next().and_then(Provenance::parse);
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(HarmlabError::csv)?.clone();
    let dim = header.len().checked_sub(1).filter(|&d| d > 0 && header.get(d) == Some("value"));
    let dim = dim.ok_or_else(|| HarmlabError::Csv(format!("bad header {header:?}")))?;
    let mut rows: Vec<(LatticePoint, f64)> = Vec::new();
    for record in r.records() {
        let record = record.map_err(HarmlabError::csv)?;
        let bad = || HarmlabError::Csv(format!("bad row {record:?}"));
        let coords: Vec<i64> = (0..dim).map(|k| record[k].parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let value: f64 = record[dim].parse().map_err(|_| bad())?;
        rows.push((LatticePoint::new(&coords), value));
    }
    if rows.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(HarmlabError::Csv("rows are not in strictly increasing lexicographic order".into()));
    }
    let (points, values): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let support = PointSet::from_points(dim, points)?;
    Ok((Field::new(support, values)?, provenance))
}

pub fn save_field(path: &Path, field: &Field, provenance: &Provenance) -> Result<(), HarmlabError> {
    let file = std::fs::File::create(path).map_err(|e| HarmlabError::io(path, e))?;
    write_field(std::io::BufWriter::new(file), field, provenance)
}

pub fn load_field(path: &Path) -> Result<(Field, Option<Provenance>), HarmlabError> {
    let file = std::fs::File::open(path).map_err(|e| HarmlabError::io(path, e))?;
    read_field(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn provenance() -> Provenance {
        Provenance::new("abc123")
    }

    #[test]
    fn single_point_field() {
        let f = Field::new(PointSet::from_points(2, vec![LatticePoint::new(&[3, -1])]).unwrap(), vec![0.1]).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f, &provenance()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, [&provenance().line() as &str, "x1,x2,value", "3,-1,1.0000000000000001e-1"]);
        let (g, p) = read_field(text.as_bytes()).unwrap();
        assert_eq!(g, f);
        assert_eq!(p, Some(provenance()));
    }

    #[test]
    fn rejects_unsorted_rows() {
        let text = "x1,value\n2,1.0\n1,2.0\n";
        assert!(read_field(text.as_bytes()).is_err());
        assert!(read_field("a,b\n1,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(entries in prop::collection::btree_map((-50i64..50, -50i64..50), any::<f64>(), 1..40)) {
            let (points, values): (Vec<_>, Vec<_>) =
                entries.into_iter().map(|((a, b), v)| (LatticePoint::new(&[a, b]), v)).unzip();
            let f = Field::new(PointSet::from_points(2, points).unwrap(), values).unwrap();
            let mut buf = Vec::new();
            write_field(&mut buf, &f, &provenance()).unwrap();
            let (g, _) = read_field(buf.as_slice()).unwrap();
            prop_assert_eq!(g.support(), f.support());
            for (a, b) in g.values().iter().zip(f.values()) {
                prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
            }
        }
    }
}
