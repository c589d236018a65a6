//! Declarative high-level change rules.
//!
//! A rule is a conjunction of low-level change templates sharing variables,
//! optional (in)equality constraints, and the variables naming the affected
//! entities:
//!
//! ```text
//! rule value-update: delete-attribute(?s,?p,?o1) & add-attribute(?s,?p,?o2) & ?o1 != ?o2 => context(?s,?p)
//! ```
//!
//! Attribute templates take `(subject, predicate, object)`, record templates
//! `(subject)` and schema templates `(id, range)`. A term is a `?variable`
//! or an `<iri>` constant. Matching is greedy in the change set's sorted
//! order, and a low-level change joins at most one instance of a rule.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::delta::{ChangeOp, ChangeSet, HighLevelChange, LowLevelChange, Payload};
use crate::error::{Error, Result};
use crate::model::{Identifier, Literal, Object, Range};

const BUILTIN_RULES: &str = "\
rule value-update: delete-attribute(?s,?p,?o1) & add-attribute(?s,?p,?o2) & ?o1 != ?o2 => context(?s,?p)
rule record-replaced: delete-record(?s) & add-record(?s) => context(?s)
rule property-retyped: delete-schema-object(?s,?r1) & add-schema-object(?s,?r2) & ?r1 != ?r2 => context(?s)
";

#[derive(Clone, Debug, PartialEq, Eq)]
enum Term {
    Var(String),
    Const(Identifier),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Atom {
    op: ChangeOp,
    args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Constraint {
    left: String,
    right: String,
    equal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChangeRule {
    pub name: String,
    atoms: Vec<Atom>,
    constraints: Vec<Constraint>,
    context: Vec<String>,
}

/// What a variable can be bound to. Ref objects bind as identifiers so a
/// variable can join an object position with a subject position.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Value {
    Id(Identifier),
    Literal(Literal),
    Range(Option<Range>),
}

fn arity(op: ChangeOp) -> usize {
    match op {
        ChangeOp::AddAttribute | ChangeOp::DeleteAttribute => 3,
        ChangeOp::AddRecord | ChangeOp::DeleteRecord => 1,
        ChangeOp::AddSchemaObject | ChangeOp::DeleteSchemaObject => 2,
    }
}

/// Argument positions that always hold identifiers.
fn identifier_positions(op: ChangeOp) -> &'static [usize] {
    match op {
        ChangeOp::AddAttribute | ChangeOp::DeleteAttribute => &[0, 1],
        _ => &[0],
    }
}

impl ChangeRule {
    /// The rules applied to every change set before any user rules.
    pub fn builtins() -> Vec<ChangeRule> {
        ChangeRule::parse_file(BUILTIN_RULES).expect("built-in rules parse")
    }

    pub fn parse_file(text: &str) -> Result<Vec<ChangeRule>> {
        let mut rules: Vec<ChangeRule> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rule = parse_rule(line).map_err(|message| Error::RuleSyntax { line_no: i + 1, message })?;
            if rules.iter().any(|r| r.name == rule.name) {
                return Err(Error::RuleSyntax {
                    line_no: i + 1,
                    message: format!("duplicate rule name `{}`", rule.name),
                });
            }
            rules.push(rule);
        }
        Ok(rules)
    }

    /// Finds all instances of this rule in `low`, greedily.
    fn instances(&self, low: &[LowLevelChange]) -> Vec<HighLevelChange> {
        let mut by_op: HashMap<ChangeOp, Vec<usize>> = HashMap::new();
        let mut by_op_subject: HashMap<(ChangeOp, Identifier), Vec<usize>> = HashMap::new();
        for (i, change) in low.iter().enumerate() {
            by_op.entry(change.op).or_default().push(i);
            by_op_subject.entry((change.op, change.subject.clone())).or_default().push(i);
        }
        let index = Index { by_op, by_op_subject };
        let mut used = vec![false; low.len()];
        let mut found = Vec::new();
        let first = &self.atoms[0];
        for &start in index.candidates(first, &BTreeMap::new()) {
            if used[start] {
                continue;
            }
            let mut chosen = Vec::with_capacity(self.atoms.len());
            let mut bindings = BTreeMap::new();
            if self.extend(low, &index, &used, 0, start, &mut chosen, &mut bindings) {
                for &i in &chosen {
                    used[i] = true;
                }
                let context = self
                    .context
                    .iter()
                    .filter_map(|v| match bindings.get(v.as_str()) {
                        Some(Value::Id(id)) => Some(id.clone()),
                        _ => None,
                    })
                    .collect();
                found.push(HighLevelChange {
                    name: self.name.clone(),
                    constituents: chosen.iter().map(|&i| low[i].clone()).collect(),
                    context,
                    annotation: None,
                });
            }
        }
        found
    }

    /// Tries to bind atom `depth` to change `candidate`, then recursively the
    /// remaining atoms, taking the first completion in sorted order.
    #[allow(clippy::too_many_arguments)]
    fn extend<'a>(
        &'a self,
        low: &[LowLevelChange],
        index: &Index,
        used: &[bool],
        depth: usize,
        candidate: usize,
        chosen: &mut Vec<usize>,
        bindings: &mut BTreeMap<&'a str, Value>,
    ) -> bool {
        let atom = &self.atoms[depth];
        let saved = bindings.clone();
        if !bind(atom, &low[candidate], bindings) || !self.constraints_hold(bindings) {
            *bindings = saved;
            return false;
        }
        chosen.push(candidate);
        if depth + 1 == self.atoms.len() {
            return true;
        }
        let next = &self.atoms[depth + 1];
        for &i in index.candidates(next, bindings) {
            if used[i] || chosen.contains(&i) {
                continue;
            }
            if self.extend(low, index, used, depth + 1, i, chosen, bindings) {
                return true;
            }
        }
        chosen.pop();
        *bindings = saved;
        false
    }

    fn constraints_hold(&self, bindings: &BTreeMap<&str, Value>) -> bool {
        self.constraints.iter().all(|c| {
            match (bindings.get(c.left.as_str()), bindings.get(c.right.as_str())) {
                (Some(l), Some(r)) => (l == r) == c.equal,
                _ => true,
            }
        })
    }
}

struct Index {
    by_op: HashMap<ChangeOp, Vec<usize>>,
    by_op_subject: HashMap<(ChangeOp, Identifier), Vec<usize>>,
}

impl Index {
    fn candidates(&self, atom: &Atom, bindings: &BTreeMap<&str, Value>) -> &[usize] {
        let subject = match &atom.args[0] {
            Term::Const(id) => Some(id),
            Term::Var(v) => match bindings.get(v.as_str()) {
                Some(Value::Id(id)) => Some(id),
                _ => None,
            },
        };
        let hit = match subject {
            Some(s) => self.by_op_subject.get(&(atom.op, s.clone())),
            None => self.by_op.get(&atom.op),
        };
        hit.map_or(&[], Vec::as_slice)
    }
}

fn values_of(change: &LowLevelChange) -> Vec<Value> {
    let mut values = vec![Value::Id(change.subject.clone())];
    match &change.payload {
        Payload::Attribute(a) => {
            values.push(Value::Id(a.predicate.clone()));
            values.push(match &a.object {
                Object::Ref(id) => Value::Id(id.clone()),
                Object::Literal(lit) => Value::Literal(lit.clone()),
            });
        }
        Payload::Record(_) => {}
        Payload::Schema(s) => values.push(Value::Range(s.range.clone())),
    }
    values
}

fn bind<'a>(atom: &'a Atom, change: &LowLevelChange, bindings: &mut BTreeMap<&'a str, Value>) -> bool {
    if atom.op != change.op {
        return false;
    }
    for (term, value) in atom.args.iter().zip(values_of(change)) {
        match term {
            Term::Const(id) => {
                if value != Value::Id(id.clone()) {
                    return false;
                }
            }
            Term::Var(name) => match bindings.get(name.as_str()) {
                Some(bound) if *bound != value => return false,
                Some(_) => {}
                None => {
                    bindings.insert(name, value);
                }
            },
        }
    }
    true
}

/// Appends the high-level changes found by the built-in rules, then by
/// `user_rules`. Low-level changes are left untouched.
pub fn derive_high_level(cs: ChangeSet, user_rules: &[ChangeRule]) -> ChangeSet {
    let cs = apply_rules(cs, &ChangeRule::builtins());
    apply_rules(cs, user_rules)
}

/// Appends the high-level changes found by `rules` alone.
pub fn apply_rules(mut cs: ChangeSet, rules: &[ChangeRule]) -> ChangeSet {
    for rule in rules {
        let found = rule.instances(&cs.low_level);
        cs.high_level.extend(found);
    }
    cs
}

fn parse_rule(line: &str) -> std::result::Result<ChangeRule, String> {
    let rest = line.strip_prefix("rule").ok_or("a rule starts with `rule`")?;
    if !rest.starts_with(char::is_whitespace) {
        return Err("a rule starts with `rule `".into());
    }
    let (name, rest) = rest.split_once(':').ok_or("missing `:` after rule name")?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(format!("invalid rule name `{name}`"));
    }
    let (body, emit) = rest.split_once("=>").ok_or("missing `=>`")?;

    let mut atoms = Vec::new();
    let mut constraints = Vec::new();
    for item in body.split('&').map(str::trim) {
        if item.is_empty() {
            return Err("empty conjunct".into());
        }
        if item.starts_with('?') {
            let (left, right, equal) = if let Some((l, r)) = item.split_once("!=") {
                (l, r, false)
            } else if let Some((l, r)) = item.split_once('=') {
                (l, r, true)
            } else {
                return Err(format!("expected a constraint, found `{item}`"));
            };
            constraints.push(Constraint {
                left: parse_var(left.trim())?,
                right: parse_var(right.trim())?,
                equal,
            });
        } else {
            atoms.push(parse_atom(item)?);
        }
    }
    if atoms.is_empty() {
        return Err("a rule needs at least one change template".into());
    }

    let emit = emit.trim();
    let inner = emit
        .strip_prefix("context")
        .map(str::trim_start)
        .and_then(|s| s.strip_prefix('('))
        .and_then(|s| s.strip_suffix(')'))
        .ok_or("expected `context(...)` after `=>`")?;
    let context = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(|v| parse_var(v.trim())).collect::<std::result::Result<Vec<_>, _>>()?
    };

    let mut bound: BTreeSet<&str> = BTreeSet::new();
    let mut id_bound: BTreeSet<&str> = BTreeSet::new();
    for atom in &atoms {
        for (pos, term) in atom.args.iter().enumerate() {
            if let Term::Var(v) = term {
                bound.insert(v);
                if identifier_positions(atom.op).contains(&pos) {
                    id_bound.insert(v);
                }
            }
        }
    }
    for c in &constraints {
        for v in [&c.left, &c.right] {
            if !bound.contains(v.as_str()) {
                return Err(format!("constraint variable ?{v} is not bound by any template"));
            }
        }
    }
    for v in &context {
        if !id_bound.contains(v.as_str()) {
            return Err(format!("context variable ?{v} must be bound to a subject, predicate or schema id"));
        }
    }
    Ok(ChangeRule {
        name: name.to_string(),
        atoms,
        constraints,
        context,
    })
}

fn parse_var(s: &str) -> std::result::Result<String, String> {
    let name = s.strip_prefix('?').ok_or_else(|| format!("expected a variable, found `{s}`"))?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(format!("invalid variable `{s}`"));
    }
    Ok(name.to_string())
}

fn parse_atom(s: &str) -> std::result::Result<Atom, String> {
    let (op, rest) = s.split_once('(').ok_or_else(|| format!("expected `op(...)`, found `{s}`"))?;
    let op: ChangeOp = op.trim().parse().map_err(|_| format!("unknown change kind `{}`", op.trim()))?;
    let args = rest.trim_end().strip_suffix(')').ok_or_else(|| format!("unclosed `(` in `{s}`"))?;
    let args = args
        .split(',')
        .map(|t| {
            let t = t.trim();
            if let Some(iri) = t.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
                Identifier::parse(iri).map(Term::Const).map_err(|e| e.to_string())
            } else {
                parse_var(t).map(Term::Var)
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if args.len() != arity(op) {
        return Err(format!("{op} takes {} arguments, found {}", arity(op), args.len()));
    }
    Ok(Atom { op, args })
}
