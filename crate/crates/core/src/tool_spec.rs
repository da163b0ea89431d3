//! Tool schemas exposed to the model through function calling.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// The fixed tool vocabulary. Declaration order is the registry order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolName {
    Editor,
    Terminal,
    Search,
    Finish,
    Think,
    Plan,
    Summary,
}

impl ToolName {
    pub const ALL: [ToolName; 7] = [
        ToolName::Editor,
        ToolName::Terminal,
        ToolName::Search,
        ToolName::Finish,
        ToolName::Think,
        ToolName::Plan,
        ToolName::Summary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ToolName::Editor => "editor",
            ToolName::Terminal => "terminal",
            ToolName::Search => "search",
            ToolName::Finish => "finish",
            ToolName::Think => "think",
            ToolName::Plan => "plan",
            ToolName::Summary => "summary",
        }
    }
}

impl fmt::Display for ToolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ToolName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ToolName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    #[serde(rename = "text")]
    Text,
    #[serde(rename = "integer")]
    Integer,
    #[serde(rename = "boolean")]
    Boolean,
    #[serde(rename = "list-of-text")]
    TextList,
}

impl ParamKind {
    fn json_schema(self) -> Value {
        match self {
            ParamKind::Text => json!({"type": "string"}),
            ParamKind::Integer => json!({"type": "integer"}),
            ParamKind::Boolean => json!({"type": "boolean"}),
            ParamKind::TextList => json!({"type": "array", "items": {"type": "string"}}),
        }
    }

    /// Whether `value` has this semantic type.
    pub fn accepts(self, value: &Value) -> bool {
        match self {
            ParamKind::Text => value.is_string(),
            ParamKind::Integer => value.is_i64() || value.is_u64(),
            ParamKind::Boolean => value.is_boolean(),
            ParamKind::TextList => value
                .as_array()
                .is_some_and(|items| items.iter().all(Value::is_string)),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ParamKind::Text => "text",
            ParamKind::Integer => "integer",
            ParamKind::Boolean => "boolean",
            ParamKind::TextList => "list of text",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ParamKind,
    pub required: bool,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub parameters: Vec<ParamSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum ToolSpecError {
    #[error("invalid tool description file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("tool `{0}` has an empty description")]
    EmptyDescription(String),
    #[error("tool `{tool}` declares parameter `{param}` twice")]
    DuplicateParameter { tool: String, param: String },
}

impl ToolSpec {
    /// Parse a tool description file and check its invariants.
    pub fn from_toml(text: &str) -> Result<Self, ToolSpecError> {
        let spec: ToolSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ToolSpecError> {
        if self.description.trim().is_empty() {
            return Err(ToolSpecError::EmptyDescription(self.name.clone()));
        }
        let mut seen = BTreeSet::new();
        for p in &self.parameters {
            if !seen.insert(p.name.as_str()) {
                return Err(ToolSpecError::DuplicateParameter {
                    tool: self.name.clone(),
                    param: p.name.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    /// One entry of the chat protocol's `tools` array.
    pub fn to_wire(&self) -> Value {
        let mut properties = Map::new();
        let mut required = Vec::new();
        for p in &self.parameters {
            let mut schema = p.kind.json_schema();
            schema["description"] = Value::String(p.description.clone());
            properties.insert(p.name.clone(), schema);
            if p.required {
                required.push(Value::String(p.name.clone()));
            }
        }
        json!({
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": {
                    "type": "object",
                    "properties": properties,
                    "required": required,
                },
            },
        })
    }
}

/// Canonical serialization of a tool registry: the compact JSON `tools`
/// array. Object keys are sorted, so the output is byte-stable.
pub fn tools_wire_json(specs: &[ToolSpec]) -> String {
    Value::Array(specs.iter().map(ToolSpec::to_wire).collect()).to_string()
}
