use std::fmt::Write as _;
use std::time::Instant;

/// One named check inside a [`RunReport`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Check {
    pub name: String,
    /// `None` for informational records without a verdict.
    pub verdict: Option<bool>,
    pub values: Vec<(String, String)>,
    pub seconds: f64,
}

impl Check {
    pub fn value(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.values.push((key.to_string(), value.to_string()));
        self
    }
}

/// Machine-readable `key: value` run record.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub tool: String,
    pub command: String,
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn new(command: String, seed: Option<u64>) -> Self {
        RunReport { tool: format!("pseudoarc {}", env!("CARGO_PKG_VERSION")), command, seed, ..Default::default() }
    }

    /// Runs `body` as a timed check named `name` and records it.
    pub fn check<T>(&mut self, name: &str, body: impl FnOnce(&mut Check) -> anyhow::Result<T>) -> anyhow::Result<T> {
        let mut c = Check { name: name.to_string(), ..Default::default() };
        let start = Instant::now();
        let out = body(&mut c);
        c.seconds = start.elapsed().as_secs_f64();
        self.checks.push(c);
        out
    }

    pub fn artifact(&mut self, path: impl ToString) {
        self.artifacts.push(path.to_string());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Some(false))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tool: {}", self.tool);
        let _ = writeln!(s, "command: {}", self.command);
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed: {seed}");
        }
        for c in &self.checks {
            let _ = writeln!(s, "check: {}", c.name);
            if let Some(v) = c.verdict {
                let _ = writeln!(s, "  verdict: {}", if v { "pass" } else { "fail" });
            }
            for (k, v) in &c.values {
                let _ = writeln!(s, "  {k}: {v}");
            }
            let _ = writeln!(s, "  seconds: {:.6}", c.seconds);
        }
        for a in &self.artifacts {
            let _ = writeln!(s, "artifact: {a}");
        }
        let _ = writeln!(s, "status: {}", if self.passed() { "pass" } else { "fail" });
        s
    }

    /// Inverse of [`to_text`](Self::to_text).
    #[cfg(test)]
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut r = RunReport::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let nested = line.starts_with("  ");
            let (key, value) = line.trim().split_once(": ").ok_or_else(|| anyhow::anyhow!("not a `key: value` line: {line:?}"))?;
            if nested {
                let c = r.checks.last_mut().ok_or_else(|| anyhow::anyhow!("check field outside a check: {line:?}"))?;
                match key {
                    "verdict" => c.verdict = Some(value == "pass"),
                    "seconds" => c.seconds = value.parse()?,
                    _ => c.values.push((key.to_string(), value.to_string())),
                }
                continue;
            }
            match key {
                "tool" => r.tool = value.to_string(),
                "command" => r.command = value.to_string(),
                "seed" => r.seed = Some(value.parse()?),
                "check" => r.checks.push(Check { name: value.to_string(), ..Default::default() }),
                "artifact" => r.artifacts.push(value.to_string()),
                "status" => {}
                _ => anyhow::bail!("unknown report key {key:?}"),
            }
        }
        Ok(r)
    }
}
