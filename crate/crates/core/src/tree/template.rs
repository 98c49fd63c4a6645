use super::RunState;

/// Fill `{text}`, `{feature}` and `{binding:NAME}` placeholders.
///
/// `{{` and `}}` produce literal braces. Unknown placeholders are kept as
/// written; an unset binding renders as the empty string.
pub fn render_template(template: &str, state: &RunState) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(pos) = rest.find(['{', '}']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            continue;
        }
        if let Some(after) = tail.strip_prefix('}') {
            out.push('}');
            rest = after;
            continue;
        }
        let Some(close) = tail.find('}') else {
            out.push_str(tail);
            return out;
        };
        let name = &tail[1..close];
        match name {
            "text" => out.push_str(&state.text),
            "feature" => out.push_str(state.feature.description()),
            _ => match name.strip_prefix("binding:") {
                Some(key) => out.push_str(state.bindings.get(key).map_or("", String::as_str)),
                None => out.push_str(&tail[..=close]),
            },
        }
        rest = &tail[close + 1..];
    }
    out.push_str(rest);
    out
}
