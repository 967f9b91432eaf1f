//! Markdown summary rendered from a finished bundle.
//!
//! Only bundle files are read, so a report can be regenerated without
//! rerunning the study. Numbers are copied from the artifacts verbatim.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::study::{inconsistency_names, TOP_K};
use crate::CliError;

fn read(dir: &Path, rel: &str) -> Result<String, CliError> {
    fs::read_to_string(dir.join(rel)).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => CliError::MissingArtifact(rel.to_string()),
        _ => CliError::io(&dir.join(rel), e),
    })
}

fn bad(artifact: &str, message: impl Into<String>) -> CliError {
    CliError::BadArtifact { artifact: artifact.into(), message: message.into() }
}

/// Data lines of a comma-separated artifact, header and comments skipped.
fn records<'a>(text: &'a str) -> impl Iterator<Item = Vec<&'a str>> + 'a {
    text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).skip(1).map(|l| l.split(',').collect())
}

struct Manifest {
    instruments: Vec<String>,
    exclusions: Vec<(String, String, String)>,
    degenerate: Vec<String>,
}

fn manifest(dir: &Path) -> Result<Manifest, CliError> {
    const NAME: &str = "manifest.json";
    let v: serde_json::Value = serde_json::from_str(&read(dir, NAME)?).map_err(|e| bad(NAME, e.to_string()))?;
    let strings = |key: &str| -> Result<Vec<String>, CliError> {
        v[key]
            .as_array()
            .ok_or_else(|| bad(NAME, format!("`{key}` is not a list")))?
            .iter()
            .map(|x| x.as_str().map(String::from).ok_or_else(|| bad(NAME, format!("`{key}` holds a non-string"))))
            .collect()
    };
    let exclusions = v["exclusions"]
        .as_array()
        .ok_or_else(|| bad(NAME, "`exclusions` is not a list"))?
        .iter()
        .map(|e| {
            let f = |k: &str| e[k].as_str().unwrap_or_default().to_string();
            (f("ticker"), f("stage"), f("reason"))
        })
        .collect();
    Ok(Manifest { instruments: strings("instruments")?, exclusions, degenerate: strings("degenerate_affinities")? })
}

fn norm_table(out: &mut String, norms: &BTreeMap<String, String>, rows: [(&str, &str); 2]) -> Result<(), CliError> {
    out.push_str("| Matrix | Pre | Post | Post / Pre |\n|---|---|---|---|\n");
    for (label, code) in rows {
        let get = |p: &str| {
            let key = format!("D_{code}_{p}");
            norms.get(&key).ok_or_else(|| bad("matrix_norms.csv", format!("no row for {key}")))
        };
        let (pre, post) = (get("pre")?, get("post")?);
        let ratio = match (pre.parse::<f64>(), post.parse::<f64>()) {
            (Ok(a), Ok(b)) if a > 0.0 => format!("{:.3}", b / a),
            (Ok(_), Ok(_)) => "n/a".to_string(),
            _ => return Err(bad("matrix_norms.csv", "non-numeric norm")),
        };
        let _ = writeln!(out, "| {label} | {pre} | {post} | {ratio} |");
    }
    Ok(())
}

/// Renders the report for the bundle in `dir`.
pub fn render(dir: &Path) -> Result<String, CliError> {
    let m = manifest(dir)?;
    let norms: BTreeMap<String, String> = records(&read(dir, "matrix_norms.csv")?)
        .map(|r| match r.as_slice() {
            [name, value] => Ok((name.to_string(), value.to_string())),
            _ => Err(bad("matrix_norms.csv", "expected two columns")),
        })
        .collect::<Result<_, _>>()?;

    let mut out = String::from("# Tail and break study report\n\n");
    let _ = writeln!(out, "Instruments analysed ({}): {}\n", m.instruments.len(), m.instruments.join(", "));
    if m.exclusions.is_empty() {
        out.push_str("Excluded instruments: none\n\n");
    } else {
        out.push_str("Excluded instruments:\n\n");
        for (t, stage, reason) in &m.exclusions {
            let _ = writeln!(out, "- {t} ({stage}): {reason}");
        }
        out.push('\n');
    }
    if !m.degenerate.is_empty() {
        let _ = writeln!(out, "Affinities set to all ones (zero distance matrix): {}\n", m.degenerate.join(", "));
    }

    out.push_str("## Frobenius norms: tail extremity\n\n");
    norm_table(&mut out, &norms, [("Returns (D_ER)", "ER"), ("Variance (D_EV)", "EV")])?;
    out.push_str("\n## Frobenius norms: structural breaks\n\n");
    norm_table(&mut out, &norms, [("Returns (D_BR)", "BR"), ("Variance (D_BV)", "BV")])?;

    let _ = writeln!(out, "\n## Top-{TOP_K} anomaly scores\n");
    for name in inconsistency_names() {
        let rel = format!("anomaly/{name}_top{TOP_K}.csv");
        let text = read(dir, &rel)?;
        let provenance = read(dir, &format!("inconsistency/{name}.csv"))
            .ok()
            .and_then(|t| t.lines().next().and_then(|l| l.strip_prefix("# ")).map(String::from));
        match provenance {
            Some(p) => {
                let _ = writeln!(out, "### {name} ({p})\n");
            }
            None => {
                let _ = writeln!(out, "### {name}\n");
            }
        }
        let rows: Vec<Vec<&str>> = records(&text).collect();
        if rows.is_empty() {
            out.push_str("none\n\n");
            continue;
        }
        for r in rows {
            match r.as_slice() {
                [rank, label, score] => {
                    let _ = writeln!(out, "{rank}. {label}: {score}");
                }
                _ => return Err(bad(&rel, "expected rank,label,score")),
            }
        }
        out.push('\n');
    }

    out.push_str(
        "## Sign of restricted means\n\n| Window | Series | Negative | Total | % negative |\n|---|---|---|---|---|\n",
    );
    const SIGNS: &str = "tails/restricted_mean_signs.csv";
    for r in records(&read(dir, SIGNS)?) {
        match r.as_slice() {
            [w, s, neg, total, pct] => {
                let pct: f64 = pct.parse().map_err(|_| bad(SIGNS, "non-numeric percentage"))?;
                let _ = writeln!(out, "| {w} | {s} | {neg} | {total} | {pct:.1} |");
            }
            _ => return Err(bad(SIGNS, "expected five columns")),
        }
    }
    Ok(out)
}
