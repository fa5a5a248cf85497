use serde_json::Value;
use thiserror::Error;

pub const OUTPUT_FIELD: &str = "fact_sentence";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("model output is empty")]
    Empty,
    #[error("no JSON object with a {OUTPUT_FIELD:?} field in model output")]
    NoPayload,
    #[error("model reported no factual statement")]
    NoStatement,
}

fn field(v: &Value) -> Option<Result<String, ParseError>> {
    let f = v.as_object()?.get(OUTPUT_FIELD)?;
    Some(match f {
        Value::String(s) if !s.trim().is_empty() => Ok(s.clone()),
        Value::String(_) | Value::Null => Err(ParseError::NoStatement),
        _ => Err(ParseError::NoPayload),
    })
}

/// Pull the fact statement out of a model response. The JSON object may be
/// wrapped in prose or code fences; the first object carrying the field wins.
pub fn parse_model_output(raw: &str) -> Result<String, ParseError> {
    if raw.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    if let Ok(v) = serde_json::from_str::<Value>(raw.trim()) {
        if let Some(r) = field(&v) {
            return r;
        }
    }
    for (i, _) in raw.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        if let Some(Ok(v)) = stream.next() {
            if let Some(r) = field(&v) {
                return r;
            }
        }
    }
    Err(ParseError::NoPayload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plain_object() {
        assert_eq!(
            parse_model_output(r#"{"fact_sentence": "he stole a bicycle"}"#).unwrap(),
            "he stole a bicycle"
        );
    }

    #[test]
    fn fenced_inside_commentary() {
        let raw = "Sure, here it is:\n```json\n{\"fact_sentence\": \"he stole a bicycle\"}\n```\nAnything else?";
        assert_eq!(parse_model_output(raw).unwrap(), "he stole a bicycle");
    }

    #[test]
    fn inner_string_unmodified() {
        let raw = r#"{"fact_sentence": "  dňa 1. 1. 2020 {v noci} \"ukradol\"  "}"#;
        assert_eq!(parse_model_output(raw).unwrap(), "  dňa 1. 1. 2020 {v noci} \"ukradol\"  ");
    }

    #[test]
    fn nested_braces_before_payload() {
        let raw = r#"note {not json} then {"other": {"x": 1}} and {"fact_sentence": "ok"}"#;
        assert_eq!(parse_model_output(raw).unwrap(), "ok");
    }

    #[test]
    fn failures() {
        assert_eq!(parse_model_output("   "), Err(ParseError::Empty));
        assert_eq!(parse_model_output("I cannot help"), Err(ParseError::NoPayload));
        assert_eq!(parse_model_output(r#"{"fact": "x"}"#), Err(ParseError::NoPayload));
        assert_eq!(parse_model_output(r#"{"fact_sentence": null}"#), Err(ParseError::NoStatement));
        assert_eq!(parse_model_output(r#"{"fact_sentence": ""}"#), Err(ParseError::NoStatement));
        assert_eq!(parse_model_output(r#"{"fact_sentence": 3}"#), Err(ParseError::NoPayload));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn wrapped_payload_recovered(
            inner in "[a-zA-Záčďéíľňóšťúýž ,.\"{}]{1,60}",
            before in "[a-zA-Z .:\n]{0,40}",
            after in "[a-zA-Z .:\n]{0,40}",
            fence in proptest::bool::ANY,
        ) {
            prop_assume!(!inner.trim().is_empty());
            let payload = serde_json::json!({ OUTPUT_FIELD: inner }).to_string();
            let body = if fence { format!("```json\n{payload}\n```") } else { payload };
            let raw = format!("{before}{body}{after}");
            prop_assert_eq!(parse_model_output(&raw).unwrap(), inner);
        }
    }
}
