//! Front end and evaluator for generated Python snippets.

pub mod ast;
mod eval;
mod lexer;
mod parser;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use eval::{Fault, Program, DEFAULT_STEP_LIMIT, TIMEOUT};
pub use lexer::{tokenize, SyntaxError, Tok, Token};

use ast::*;

pub fn parse(code: &str) -> Result<Vec<Stmt>, SyntaxError> {
    if code.trim().is_empty() {
        return Err(SyntaxError { line: 1, col: 1, message: "empty source".into() });
    }
    parser::parse_module(&tokenize(code)?)
}

/// Result of the syntactic pre-check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precheck {
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<PrecheckError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecheckError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn parse_precheck(code: &str) -> Precheck {
    match parse(code) {
        Ok(_) => Precheck { ok: true, error: None },
        Err(e) => Precheck { ok: false, error: Some(PrecheckError { line: e.line, column: e.col, message: e.message }) },
    }
}

pub fn compile(code: &str, class_name: &str, method_name: &str) -> Result<Program, SyntaxError> {
    Ok(Program::new(parse(code)?, class_name, method_name))
}

/// Locates the definition of the method under test: first in the class named
/// `class_name`, then in any class, then at module level. Returns the method
/// together with the sibling methods of its class.
pub fn find_method<'a>(
    module: &'a [Stmt],
    class_name: &str,
    method_name: &str,
) -> Option<(&'a FunctionDef, HashMap<&'a str, &'a FunctionDef>)> {
    let mut fallback = None;
    for stmt in module {
        if let Stmt::ClassDef { name, body } = stmt {
            let methods: HashMap<&str, &FunctionDef> =
                body.iter().filter_map(|s| if let Stmt::FunctionDef(f) = s { Some((f.name.as_str(), f)) } else { None }).collect();
            if let Some(m) = methods.get(method_name).copied() {
                if name == class_name {
                    return Some((m, methods));
                }
                fallback.get_or_insert((m, methods));
            }
        }
    }
    fallback.or_else(|| {
        module.iter().find_map(|s| match s {
            Stmt::FunctionDef(f) if f.name == method_name => Some((f, HashMap::new())),
            _ => None,
        })
    })
}

/// Names accessed as `self.<name>` inside the method under test, following
/// calls to other methods on the receiver.
pub fn receiver_fields(code: &str, class_name: &str, method_name: &str) -> Result<BTreeSet<String>, SyntaxError> {
    let module = parse(code)?;
    let Some((method, siblings)) = find_method(&module, class_name, method_name) else {
        return Err(SyntaxError { line: 1, col: 1, message: format!("no definition of `{method_name}` found") });
    };
    let mut fields = BTreeSet::new();
    let mut visited = BTreeSet::new();
    let mut queue = vec![method];
    while let Some(f) = queue.pop() {
        if !visited.insert(f.name.clone()) {
            continue;
        }
        let Some(receiver) = f.params.first().map(|p| p.name.as_str()) else { continue };
        let mut found = BTreeSet::new();
        for s in &f.body {
            visit_stmt(s, receiver, &mut found);
        }
        for name in found {
            match siblings.get(name.as_str()) {
                Some(m) => queue.push(m),
                None => {
                    fields.insert(name);
                }
            }
        }
    }
    Ok(fields)
}

/// The first source line mentioning `self.<field>`, trimmed, for fault
/// excerpts.
pub fn field_excerpt(code: &str, field: &str) -> Option<String> {
    let pattern = regex::Regex::new(&format!(r"\b\w+\s*\.\s*{}\b", regex::escape(field))).ok()?;
    code.lines().find(|l| pattern.is_match(l)).map(|l| l.trim().to_string())
}

fn visit_stmt(s: &Stmt, recv: &str, out: &mut BTreeSet<String>) {
    let block = |b: &[Stmt], out: &mut BTreeSet<String>| b.iter().for_each(|s| visit_stmt(s, recv, out));
    match s {
        Stmt::Expr(e) | Stmt::Raise(Some(e)) => visit_expr(e, recv, out),
        Stmt::Return(e) => {
            if let Some(e) = e {
                visit_expr(e, recv, out)
            }
        }
        Stmt::Assign(targets, e) => {
            targets.iter().for_each(|t| visit_target(t, recv, out));
            visit_expr(e, recv, out);
        }
        Stmt::AugAssign(t, _, e) => {
            visit_target(t, recv, out);
            visit_expr(e, recv, out);
        }
        Stmt::AnnAssign { target, value, .. } => {
            visit_target(target, recv, out);
            if let Some(v) = value {
                visit_expr(v, recv, out);
            }
        }
        Stmt::If { test, body, orelse } => {
            visit_expr(test, recv, out);
            block(body, out);
            block(orelse, out);
        }
        Stmt::While { test, body } => {
            visit_expr(test, recv, out);
            block(body, out);
        }
        Stmt::For { target, iter, body } => {
            visit_target(target, recv, out);
            visit_expr(iter, recv, out);
            block(body, out);
        }
        Stmt::Try { body, handlers, orelse, finalbody } => {
            block(body, out);
            for h in handlers {
                if let Some(k) = &h.kind {
                    visit_expr(k, recv, out);
                }
                block(&h.body, out);
            }
            block(orelse, out);
            block(finalbody, out);
        }
        Stmt::Assert(a, b) => {
            visit_expr(a, recv, out);
            if let Some(b) = b {
                visit_expr(b, recv, out);
            }
        }
        Stmt::FunctionDef(f) => {
            // Nested helpers close over the receiver unless they shadow it.
            if !f.params.iter().any(|p| p.name == recv) {
                block(&f.body, out);
            }
            for p in &f.params {
                if let Some(d) = &p.default {
                    visit_expr(d, recv, out);
                }
            }
        }
        Stmt::ClassDef { body, .. } => block(body, out),
        Stmt::Raise(None) | Stmt::Import | Stmt::Pass | Stmt::Break | Stmt::Continue => {}
    }
}

fn visit_target(t: &Target, recv: &str, out: &mut BTreeSet<String>) {
    match t {
        Target::Name(_) => {}
        Target::Attribute(obj, _) => visit_expr(obj, recv, out),
        Target::Subscript(obj, idx) => {
            visit_expr(obj, recv, out);
            visit_expr(idx, recv, out);
        }
        Target::Tuple(ts) => ts.iter().for_each(|t| visit_target(t, recv, out)),
    }
}

fn visit_expr(e: &Expr, recv: &str, out: &mut BTreeSet<String>) {
    let mut go = |e: &Expr| visit_expr(e, recv, out);
    match e {
        Expr::Attribute(obj, attr) => {
            if matches!(obj.as_ref(), Expr::Name(n) if n == recv) {
                out.insert(attr.clone());
            } else {
                go(obj);
            }
        }
        Expr::Call { func, args, kwargs } => {
            go(func);
            args.iter().for_each(&mut go);
            kwargs.iter().for_each(|(_, v)| go(v));
        }
        Expr::Subscript(a, b) => {
            go(a);
            go(b);
        }
        Expr::Slice(a, b, c) => [a, b, c].into_iter().flatten().for_each(|x| go(x)),
        Expr::Unary(_, a) => go(a),
        Expr::Binary(_, a, b) => {
            go(a);
            go(b);
        }
        Expr::BoolOp(_, items) | Expr::Tuple(items) | Expr::List(items) | Expr::Set(items) => items.iter().for_each(go),
        Expr::Compare(first, rest) => {
            go(first);
            rest.iter().for_each(|(_, e)| go(e));
        }
        Expr::IfExp { test, body, orelse } => {
            go(test);
            go(body);
            go(orelse);
        }
        Expr::Dict(pairs) => pairs.iter().for_each(|(k, v)| {
            go(k);
            go(v);
        }),
        Expr::Comprehension { element, iter, conds, .. } => {
            go(element);
            go(iter);
            conds.iter().for_each(go);
        }
        Expr::Name(_) | Expr::Int(_) | Expr::Float(_) | Expr::Str(_) | Expr::FStr(_) | Expr::Bool(_) | Expr::None | Expr::Lambda => {}
    }
}
