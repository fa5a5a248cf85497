use super::{LlmError, ProviderConfig};

/// Token estimate for a character count, rounded up.
pub fn tokens_for(chars: u64, chars_per_token: f64) -> u64 {
    (chars as f64 / chars_per_token).ceil() as u64
}

/// Estimated USD cost of one request. Input tokens cover document and prompt
/// together, as the provider sees one string.
pub fn estimate_cost(doc_chars: i64, prompt_chars: i64, output_chars: i64, config: &ProviderConfig) -> Result<f64, LlmError> {
    for (name, v) in [("doc_chars", doc_chars), ("prompt_chars", prompt_chars), ("output_chars", output_chars)] {
        if v < 0 {
            return Err(LlmError::Argument(format!("{name} is negative ({v})")));
        }
    }
    config.validate()?;
    let input = tokens_for((doc_chars + prompt_chars) as u64, config.chars_per_token);
    let output = tokens_for(output_chars as u64, config.chars_per_token);
    let p = &config.pricing;
    Ok(input as f64 * p.input_usd_per_million_tokens / 1e6 + output as f64 * p.output_usd_per_million_tokens / 1e6)
}
