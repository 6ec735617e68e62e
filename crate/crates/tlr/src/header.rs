//! Format-version header line shared by every emitted file.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: String,
    pub version: u32,
}

impl Header {
    pub fn new(format: &str, version: u32) -> Self {
        Self {
            format: format.into(),
            version,
        }
    }

    /// Parses `line` as a header; `None` when it is something else.
    pub fn detect(line: &str) -> Option<Self> {
        serde_json::from_str(line).ok()
    }

    pub fn expect(&self, format: &str, version: u32) -> Result<(), String> {
        if self.format != format {
            return Err(format!("expected a `{format}` file, found `{}`", self.format));
        }
        if self.version != version {
            return Err(format!("unsupported {format} version {} (expected {version})", self.version));
        }
        Ok(())
    }

    pub fn write(&self, out: &mut impl Write) -> CliResult<()> {
        serde_json::to_writer(&mut *out, self).map_err(CliError::internal)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}
