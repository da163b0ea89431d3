//! Translation to and from the HTTP chat-completion wire format.

use serde_json::{json, Map, Value};

use super::{ChatRequest, ChatResponse, FinishReason, LlmError};
use crate::message::{Message, Role, ToolArguments, ToolCall, Usage};

fn message_to_wire(m: &Message) -> Value {
    let mut out = Map::new();
    out.insert("role".into(), json!(m.role.to_string()));
    let calls = m.calls();
    if calls.is_empty() || !m.content.is_empty() {
        out.insert("content".into(), json!(m.content));
    } else {
        out.insert("content".into(), Value::Null);
    }
    if !calls.is_empty() {
        let wire: Vec<Value> = calls
            .iter()
            .map(|c| {
                json!({
                    "id": c.call_id,
                    "type": "function",
                    "function": {"name": c.tool_name, "arguments": c.arguments.to_text()},
                })
            })
            .collect();
        out.insert("tool_calls".into(), Value::Array(wire));
    }
    if let Some(id) = &m.tool_call_id {
        out.insert("tool_call_id".into(), json!(id));
    }
    Value::Object(out)
}

/// The request body.
pub fn request_body(req: &ChatRequest) -> Value {
    let mut body = json!({
        "model": req.model_id,
        "messages": req.messages.iter().map(message_to_wire).collect::<Vec<_>>(),
        "temperature": req.temperature,
        "top_p": req.top_p,
    });
    if !req.tools.is_empty() {
        body["tools"] = Value::Array(req.tools.iter().map(|t| t.to_wire()).collect());
    }
    body
}

fn malformed(what: &str) -> LlmError {
    LlmError::Malformed(what.to_string())
}

fn parse_call(raw: &Value, index: usize, fresh_id: &mut dyn FnMut(usize) -> String) -> Result<ToolCall, LlmError> {
    let function = raw.get("function").ok_or_else(|| malformed("tool call without `function`"))?;
    let name = function
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("tool call without a function name"))?;
    let arguments = match function.get("arguments") {
        Some(Value::String(text)) => ToolArguments::from_text(text),
        Some(Value::Object(map)) => ToolArguments::Parsed(map.clone()),
        None | Some(Value::Null) => ToolArguments::default(),
        Some(other) => ToolArguments::Malformed(other.to_string()),
    };
    let call_id = match raw.get("id").and_then(Value::as_str) {
        Some(id) if !id.is_empty() => id.to_string(),
        _ => fresh_id(index),
    };
    Ok(ToolCall { call_id, tool_name: name.to_string(), arguments })
}

/// Parse a reply body. Missing call ids are filled by `fresh_id`.
pub fn parse_response(body: &Value, fresh_id: &mut dyn FnMut(usize) -> String) -> Result<ChatResponse, LlmError> {
    let choice = body
        .get("choices")
        .and_then(Value::as_array)
        .and_then(|c| c.first())
        .ok_or_else(|| malformed("reply has no choices"))?;
    let message = choice.get("message").ok_or_else(|| malformed("choice has no message"))?;
    let content = message.get("content").and_then(Value::as_str).unwrap_or_default().to_string();
    let calls = match message.get("tool_calls") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => {
            items.iter().enumerate().map(|(i, c)| parse_call(c, i, fresh_id)).collect::<Result<_, _>>()?
        }
        Some(_) => return Err(malformed("`tool_calls` is not a list")),
    };
    let usage = match body.get("usage") {
        None | Some(Value::Null) => Usage::default(),
        Some(u) => {
            let field = |name: &str| u.get(name).and_then(Value::as_u64).unwrap_or(0);
            Usage::new(field("prompt_tokens"), field("completion_tokens"))
        }
    };
    let mut response = ChatResponse::new(Message::assistant(content, calls), usage);
    if response.finish_reason != FinishReason::ToolCalls {
        response.finish_reason = match choice.get("finish_reason").and_then(Value::as_str) {
            Some("length") => FinishReason::Length,
            Some("stop") | Some("tool_calls") | Some("function_call") | None => FinishReason::Stop,
            Some(_) => FinishReason::Error,
        };
    }
    debug_assert_eq!(response.message.role, Role::Assistant);
    Ok(response)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tool_spec::ToolSpec;

    fn no_ids(i: usize) -> String {
        format!("gen-{i}")
    }

    #[test]
    fn single_tool_call_reply() {
        let body = json!({
            "choices": [{
                "message": {"role": "assistant", "content": null, "tool_calls": [
                    {"id": "call_1", "type": "function", "function": {"name": "terminal", "arguments": "{\"command\":\"ls\"}"}}
                ]},
                "finish_reason": "stop"
            }],
            "usage": {"prompt_tokens": 120, "completion_tokens": 7, "total_tokens": 127}
        });
        let r = parse_response(&body, &mut no_ids).unwrap();
        assert_eq!(r.finish_reason, FinishReason::ToolCalls);
        assert_eq!(r.message.calls().len(), 1);
        assert_eq!(r.message.calls()[0].arguments.parsed().unwrap()["command"], "ls");
        assert_eq!(r.usage, Usage::new(120, 7));
    }

    #[test]
    fn bad_arguments_and_missing_ids_survive() {
        let body = json!({
            "choices": [{"message": {"tool_calls": [
                {"function": {"name": "editor", "arguments": "{not json"}}
            ]}, "finish_reason": "tool_calls"}]
        });
        let r = parse_response(&body, &mut no_ids).unwrap();
        let call = &r.message.calls()[0];
        assert_eq!(call.call_id, "gen-0");
        assert_eq!(call.arguments, ToolArguments::Malformed("{not json".into()));
    }

    #[test]
    fn finish_reasons_without_calls() {
        for (raw, want) in [("stop", FinishReason::Stop), ("length", FinishReason::Length), ("content_filter", FinishReason::Error)] {
            let body = json!({"choices": [{"message": {"content": "x"}, "finish_reason": raw}]});
            assert_eq!(parse_response(&body, &mut no_ids).unwrap().finish_reason, want);
        }
        assert!(parse_response(&json!({"choices": []}), &mut no_ids).is_err());
    }

    #[test]
    fn request_body_shape() {
        let spec = ToolSpec::from_toml("name = \"finish\"\ndescription = \"done\"\n").unwrap();
        let call = ToolCall::new("c1", "finish", json!({"summary": "ok"}));
        let req = ChatRequest {
            messages: vec![
                Message::system("s"),
                Message::assistant("", vec![call]),
                Message::tool(&crate::message::ToolResult::ok("c1", "Finished.")),
            ],
            tools: vec![spec],
            temperature: 0.0,
            top_p: 1.0,
            model_id: "m".into(),
        };
        let body = request_body(&req);
        assert_eq!(body["messages"][1]["content"], Value::Null);
        assert_eq!(body["messages"][1]["tool_calls"][0]["function"]["arguments"], "{\"summary\":\"ok\"}");
        assert_eq!(body["messages"][2]["tool_call_id"], "c1");
        assert_eq!(body["tools"][0]["function"]["name"], "finish");
    }
}
