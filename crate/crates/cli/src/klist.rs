//! Degree lists: comma-separated items, each `k`, `lo..hi` (inclusive) or
//! `lo..hi:step`. The result must be strictly increasing.

pub fn parse_klist(s: &str) -> Result<Vec<usize>, String> {
    let mut out: Vec<usize> = Vec::new();
    for item in s.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(format!("empty item in degree list '{s}'"));
        }
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{t}' is not a non-negative integer in degree list '{s}'"))
        };
        match item.split_once("..") {
            None => out.push(num(item)?),
            Some((lo, rest)) => {
                let (hi, step) = match rest.split_once(':') {
                    Some((hi, step)) => (num(hi)?, num(step)?),
                    None => (num(rest)?, 1),
                };
                let lo = num(lo)?;
                if step == 0 {
                    return Err(format!("zero step in '{item}'"));
                }
                if hi < lo {
                    return Err(format!("empty range '{item}'"));
                }
                out.extend((lo..=hi).step_by(step));
            }
        }
    }
    if out.windows(2).any(|w| w[1] <= w[0]) {
        return Err(format!("degree list '{s}' must be strictly increasing"));
    }
    Ok(out)
}
