//! Output emitters. Every CSV starts with a metadata comment line carrying
//! the tool version, command, system hash, and seed, then a header row; JSON
//! reports embed the same metadata object.

use std::io::Write;

use serde_json::json;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Meta {
    pub command: String,
    pub system_hash: String,
    pub seed: u64,
    /// Free-form notes (e.g. clipped psi levels), kept inside the comment.
    pub notes: Vec<String>,
}

impl Meta {
    pub fn comment_line(&self) -> String {
        let mut line = format!(
            "# digitfrac v{} cmd={} system={} seed={}",
            VERSION, self.command, self.system_hash, self.seed
        );
        for n in &self.notes {
            line.push(' ');
            line.push_str(n);
        }
        line
    }

    pub fn json_value(&self) -> serde_json::Value {
        json!({
            "version": VERSION,
            "command": self.command,
            "system": self.system_hash,
            "seed": self.seed,
            "notes": self.notes,
        })
    }
}

/// Write a CSV with the metadata comment, a header, and string rows.
pub fn write_csv<W: Write>(
    out: &mut W,
    meta: &Meta,
    header: &[&str],
    rows: &[Vec<String>],
) -> std::io::Result<()> {
    writeln!(out, "{}", meta.comment_line())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Render a float for CSV output: shortest round-trip form, stable across
/// runs and thread counts.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape() {
        let meta = Meta {
            command: "count".into(),
            system_hash: "abc".into(),
            seed: 3,
            notes: vec!["clipped=0".into()],
        };
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &meta,
            &["a", "b"],
            &[vec!["1".into(), "2".into()]],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# digitfrac v"));
        assert_eq!(lines.next().unwrap(), "a,b");
        assert_eq!(lines.next().unwrap(), "1,2");
    }
}
