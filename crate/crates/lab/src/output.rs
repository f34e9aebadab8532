//! CSV emission. Every file starts with a `#` line holding the resolved
//! configuration as JSON; floats use the shortest round-trip decimal.

use std::io::Write;

use rggmod_core::domain::SampleCloud;
use rggmod_core::functional::DiscretePartition;
use rggmod_core::geograph::GeometricGraph;

/// One row per `(n, trial)`, or per `(n, trial, key)` for experiments that
/// sweep a parameter inside a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub n: usize,
    pub eps: f64,
    pub trial: usize,
    pub seed: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<TrialRow>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a named column, in row order.
    pub fn values(&self, name: &str) -> Vec<f64> {
        let j = self.column(name).unwrap_or_else(|| panic!("no column `{name}`"));
        self.rows.iter().map(|r| r.values[j]).collect()
    }

    /// Rows with `n` and, if given, `key == value` on a named column.
    pub fn select(&self, n: usize, key: Option<(&str, f64)>) -> Vec<&TrialRow> {
        let k = key.map(|(name, v)| (self.column(name).expect("known column"), v));
        self.rows.iter().filter(|r| r.n == n && k.map_or(true, |(j, v)| r.values[j] == v)).collect()
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_table<W: Write>(out: W, header_json: &str, table: &Table) -> anyhow::Result<()> {
    let mut out = out;
    writeln!(out, "# {header_json}")?;
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["experiment".to_string(), "n".into(), "eps".into(), "trial".into(), "seed".into()];
    head.extend(table.columns.iter().cloned());
    w.write_record(&head)?;
    for r in &table.rows {
        let mut rec = vec![table.experiment.clone(), r.n.to_string(), fmt_f64(r.eps), r.trial.to_string(), r.seed.to_string()];
        rec.extend(r.values.iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_points<W: Write>(out: W, header_json: &str, cloud: &SampleCloud) -> anyhow::Result<()> {
    let mut out = out;
    writeln!(out, "# {header_json}")?;
    let mut w = csv::Writer::from_writer(out);
    let head: Vec<String> = (0..cloud.dim()).map(|a| format!("x{a}")).collect();
    w.write_record(&head)?;
    for p in cloud.points() {
        w.write_record(p.iter().map(|&v| fmt_f64(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Upper-triangle edge list `i,j,w`.
pub fn write_edges<W: Write>(out: W, header_json: &str, graph: &GeometricGraph) -> anyhow::Result<()> {
    let mut out = out;
    writeln!(out, "# {header_json}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "w"])?;
    for (i, j, wij) in graph.upper_edges() {
        w.write_record([i.to_string(), j.to_string(), fmt_f64(wij)])?;
    }
    w.flush()?;
    Ok(())
}

/// Labels file: `vertex_index,label`.
pub fn write_labels<W: Write>(out: W, header_json: &str, partition: &DiscretePartition) -> anyhow::Result<()> {
    let mut out = out;
    writeln!(out, "# {header_json}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex_index", "label"])?;
    for (i, &l) in partition.labels().iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456789.125, -0.0, 2.0f64.sqrt()] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.1), "0.1");
    }

    #[test]
    fn table_has_header_line() {
        let t = Table {
            experiment: "balance".into(),
            columns: vec!["q".into()],
            rows: vec![TrialRow { n: 10, eps: 0.5, trial: 0, seed: 7, values: vec![0.25] }],
        };
        let mut buf = Vec::new();
        write_table(&mut buf, r#"{"a":1}"#, &t).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "# {\"a\":1}\nexperiment,n,eps,trial,seed,q\nbalance,10,0.5,0,7,0.25\n");
    }

    #[test]
    fn labels_file() {
        let p = DiscretePartition::new(vec![1, 0, 1], 2).unwrap();
        let mut buf = Vec::new();
        write_labels(&mut buf, "{}", &p).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# {}\nvertex_index,label\n0,1\n1,0\n2,1\n");
    }
}
