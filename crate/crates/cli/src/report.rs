//! Deterministic CSV/text rendering and the sidecar metadata file. Data
//! files are byte-identical across re-runs; wall-clock facts live only in
//! the sidecar.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use bpsim_core::capacity::{CapacityResult, HeavyTrafficParams, PsiMode};

pub const CSV_SCHEMA: &str = "bpsim-csv v1";

pub fn csv_preamble(kind: &str) -> String {
    format!("# {CSV_SCHEMA} {kind}\n")
}

pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

/// Writes a CSV with the schema comment line and a header row.
pub fn write_csv(path: &Path, kind: &str, header: &str, rows: &[String]) -> anyhow::Result<()> {
    let mut text = csv_preamble(kind);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Sidecar metadata next to an output file set; the only place wall-clock
/// time appears.
pub fn write_sidecar(dir: &Path, name: &str, command: &str, scenario: &str, seed: u64, wall_ms: u128) -> anyhow::Result<()> {
    let created_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
    let body = serde_json::json!({
        "tool": "bpsim",
        "version": env!("CARGO_PKG_VERSION"),
        "csv_schema": CSV_SCHEMA,
        "command": command,
        "scenario": scenario,
        "seed": seed,
        "wall_ms": wall_ms,
        "created_unix_ms": created_unix_ms,
    });
    let mut f = fs::File::create(dir.join(format!("{name}.meta.json")))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&body)?)?;
    Ok(())
}

pub fn mode_name(mode: PsiMode) -> &'static str {
    match mode {
        PsiMode::FullQueue => "full-queue",
        PsiMode::FlowAggregate => "flow-aggregate",
    }
}

fn vec6(v: &[f64]) -> String {
    let inner: Vec<String> = v.iter().map(|x| fmt6(*x)).collect();
    format!("({})", inner.join(", "))
}

pub fn capacity_text(cap: &CapacityResult) -> String {
    let binding: Vec<String> = cap.binding_links.iter().map(|l| l.to_string()).collect();
    let mut s = String::new();
    s.push_str("capacity result\n");
    s.push_str(&format!("  direction        {}\n", vec6(&cap.direction)));
    s.push_str(&format!("  theta*           {}\n", fmt6(cap.theta)));
    s.push_str(&format!("  lambda*          {}\n", vec6(&cap.lambda_star)));
    s.push_str(&format!("  link duals       {}\n", vec6(&cap.link_duals)));
    s.push_str(&format!("  psi (full)       {}\n", vec6(&cap.psi_full)));
    s.push_str(&format!("  psi (aggregate)  {}\n", vec6(&cap.psi_aggregate)));
    s.push_str(&format!("  binding links    [{}]\n", binding.join(", ")));
    s.push_str(&format!(
        "  certificate      primal {} <= theta <= dual {}\n",
        fmt6(cap.primal_bound),
        fmt6(cap.dual_bound)
    ));
    if cap.degenerate {
        s.push_str("  warning          active face looks degenerate (dual/binding mismatch)\n");
    }
    s
}

pub fn ht_text(ht: &HeavyTrafficParams) -> String {
    let mut s = String::new();
    s.push_str(&format!("heavy-traffic parameters ({} space)\n", mode_name(ht.mode)));
    s.push_str(&format!("  psi              {}\n", vec6(&ht.psi)));
    s.push_str(&format!("  lambda*          {}\n", vec6(&ht.lambda_star)));
    s.push_str(&format!("  n                {}\n", fmt6(ht.n)));
    s.push_str(&format!("  b*               {}\n", fmt6(ht.b_star)));
    s.push_str(&format!("  mu_hat           {}\n", fmt6(ht.mu_hat)));
    s.push_str(&format!("  sigma_hat^2      {} (computed)\n", fmt6(ht.sigma_hat_sq)));
    if (ht.sigma_hat_sq_used - ht.sigma_hat_sq).abs() > 0.0 {
        s.push_str(&format!("  sigma_hat^2 used {} (override)\n", fmt6(ht.sigma_hat_sq_used)));
    }
    s.push_str(&format!("  sigma^2          {}\n", fmt6(ht.sigma_sq)));
    s
}
