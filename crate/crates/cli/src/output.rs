//! Output sinks. Every file starts with a metadata record describing the run.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use supmeasure::RNG_ALGORITHM;

pub fn metadata(command: &str, config: &impl Serialize, seed: u64) -> Value {
    json!({
        "meta": {
            "tool": "supmeasure",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "rng": RNG_ALGORITHM,
            "seed": seed,
        }
    })
}

/// A JSON-lines writer to a file or standard output.
pub struct JsonLines {
    out: Box<dyn Write>,
}

impl JsonLines {
    pub fn create(path: Option<&Path>, meta: &Value) -> io::Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        let mut sink = JsonLines { out };
        sink.write(meta)?;
        Ok(sink)
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// `dir/stem.suffix` next to `out`, or `default_stem.suffix` in the working directory.
pub fn sidecar(out: Option<&Path>, default_stem: &str, suffix: &str) -> PathBuf {
    match out {
        Some(p) => {
            let stem = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or(default_stem);
            p.with_file_name(format!("{stem}.{suffix}"))
        }
        None => PathBuf::from(format!("{default_stem}.{suffix}")),
    }
}

/// CSV table whose first line is `# meta <json>`.
pub fn write_csv(path: &Path, meta: &Value, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# meta {}", serde_json::to_string(meta)?)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

/// Summary row of one interval's evaluations: `⊥` count and quantiles of the finite values.
pub fn summary_row(label: &str, values: &[Option<f64>]) -> Vec<String> {
    let mut finite: Vec<f64> = values.iter().flatten().copied().collect();
    finite.sort_by(f64::total_cmp);
    let q = |t: f64| -> String {
        if finite.is_empty() {
            return String::new();
        }
        let i = ((finite.len() - 1) as f64 * t).round() as usize;
        format!("{}", finite[i])
    };
    vec![
        format!("\"{label}\""),
        values.len().to_string(),
        (values.len() - finite.len()).to_string(),
        q(0.1),
        q(0.5),
        q(0.9),
    ]
}

pub const SUMMARY_HEADER: [&str; 6] = ["interval", "replicates", "bottom", "q10", "median", "q90"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar(Some(Path::new("/tmp/run.jsonl")), "x", "summary.csv"),
            PathBuf::from("/tmp/run.summary.csv")
        );
        assert_eq!(sidecar(None, "figure", "hypograph.jsonl"), PathBuf::from("figure.hypograph.jsonl"));
    }

    #[test]
    fn summary_quantiles() {
        let vals: Vec<Option<f64>> = (0..=10).map(|i| Some(i as f64)).chain([None]).collect();
        let row = summary_row("(0,1)", &vals);
        assert_eq!(row, ["\"(0,1)\"", "12", "1", "1", "5", "9"]);
        assert_eq!(summary_row("g", &[None])[3], "");
    }
}
