use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::ast::{Literal, ParamKind, PlanAst};
use super::PlanError;

/// Values of the pseudo-parameters supplied by the executing node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEnv {
    pub os: String,
    pub home: String,
}

impl Default for NodeEnv {
    fn default() -> Self {
        NodeEnv {
            os: "Linux".into(),
            home: "/home/gridsim".into(),
        }
    }
}

/// Parameter name to the list of values to use instead of its natural ones.
pub type Overrides = BTreeMap<String, Vec<String>>;

/// One job of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct JobBinding {
    /// 1-based position in the cross product.
    pub job_index: usize,
    /// Declared parameters in declaration order.
    pub values: Vec<(String, Literal)>,
    /// `jobname`, `OS`, `HOME`.
    pub pseudo: BTreeMap<String, String>,
}

impl JobBinding {
    /// Text of a declared parameter or pseudo-parameter. Declared names
    /// shadow pseudo-parameters.
    pub fn lookup(&self, name: &str) -> Option<String> {
        self.values
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.to_string())
            .or_else(|| self.pseudo.get(name).cloned())
    }
}

/// Value set of every parameter after overrides, in declaration order.
pub fn value_sets(ast: &PlanAst, overrides: &Overrides) -> Result<Vec<Vec<Literal>>, PlanError> {
    if let Some(unknown) = overrides.keys().find(|k| ast.parameter(k).is_none()) {
        return Err(PlanError::UnknownOverride(unknown.clone()));
    }
    ast.parameters
        .iter()
        .map(|p| match overrides.get(&p.name) {
            None => Ok(p.natural_values()),
            Some(raw) => raw
                .iter()
                .map(|v| {
                    let allowed = match &p.kind {
                        ParamKind::SelectOneOf { options, .. } => options.contains(v),
                        _ => true,
                    };
                    Literal::parse(p.ty, v)
                        .filter(|_| allowed && !raw.is_empty())
                        .ok_or_else(|| PlanError::BadOverrideValue {
                            name: p.name.clone(),
                            value: v.clone(),
                        })
                })
                .collect::<Result<Vec<_>, _>>()
                .and_then(|vals| {
                    if vals.is_empty() {
                        Err(PlanError::BadOverrideValue {
                            name: p.name.clone(),
                            value: String::new(),
                        })
                    } else {
                        Ok(vals)
                    }
                }),
        })
        .collect()
}

/// Number of jobs the sweep expands to.
pub fn job_count(ast: &PlanAst, overrides: &Overrides) -> Result<usize, PlanError> {
    Ok(value_sets(ast, overrides)?.iter().map(Vec::len).product())
}

/// Expands the cross product of parameter values. The first declared
/// parameter varies slowest; `jobname` is the decimal job index.
pub fn generate_jobs(
    ast: &PlanAst,
    overrides: &Overrides,
    env: &NodeEnv,
) -> Result<Vec<JobBinding>, PlanError> {
    let sets = value_sets(ast, overrides)?;
    let total: usize = sets.iter().map(Vec::len).product();
    let mut jobs = Vec::with_capacity(total);
    let mut digits = vec![0usize; sets.len()];
    for k in 0..total {
        let job_index = k + 1;
        let values = ast
            .parameters
            .iter()
            .zip(&digits)
            .zip(&sets)
            .map(|((p, &d), set)| (p.name.clone(), set[d].clone()))
            .collect();
        let pseudo = BTreeMap::from([
            ("jobname".to_string(), job_index.to_string()),
            ("OS".to_string(), env.os.clone()),
            ("HOME".to_string(), env.home.clone()),
        ]);
        jobs.push(JobBinding {
            job_index,
            values,
            pseudo,
        });
        for i in (0..digits.len()).rev() {
            digits[i] += 1;
            if digits[i] < sets[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
    Ok(jobs)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Replaces `$name` and `${name}` place markers with bound values.
///
/// Unbraced names take the longest identifier match. `$$` yields a literal
/// `$`; a `$` not followed by an identifier, `{` or `$` is kept as is.
/// Substituted text is not rescanned. `position` in errors is the byte
/// offset of the `$`.
pub fn substitute(template: &str, binding: &JobBinding) -> Result<String, PlanError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    let mut offset = 0;
    while let Some(i) = rest.find('$') {
        out.push_str(&rest[..i]);
        let pos = offset + i;
        let after = &rest[i + 1..];
        let (name, consumed) = if after.starts_with('$') {
            out.push('$');
            (None, 2)
        } else if let Some(tail) = after.strip_prefix('{') {
            let end = tail.find('}').ok_or_else(|| PlanError::UnboundMarker {
                name: tail.to_string(),
                position: pos,
            })?;
            (Some(&tail[..end]), end + 3)
        } else if after.starts_with(is_ident_start) {
            let end = after.find(|c| !is_ident_char(c)).unwrap_or(after.len());
            (Some(&after[..end]), end + 1)
        } else {
            out.push('$');
            (None, 1)
        };
        if let Some(name) = name {
            let value = binding
                .lookup(name)
                .ok_or_else(|| PlanError::UnboundMarker {
                    name: name.to_string(),
                    position: pos,
                })?;
            out.push_str(&value);
        }
        rest = &rest[i + consumed..];
        offset = pos + consumed;
    }
    out.push_str(rest);
    Ok(out)
}

/// Tab-separated table: a `jobname` column, then one column per declared
/// parameter.
pub fn binding_table(ast: &PlanAst, jobs: &[JobBinding]) -> String {
    let mut out = String::from("jobname");
    for p in &ast.parameters {
        out.push('\t');
        out.push_str(&p.name);
    }
    out.push('\n');
    for j in jobs {
        let _ = write!(out, "{}", j.job_index);
        for (_, v) in &j.values {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}
