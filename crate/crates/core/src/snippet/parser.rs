//! Recursive-descent parser producing [`Stmt`] trees.

use super::ast::*;
use super::lexer::{SyntaxError, Tok, Token};

const KEYWORDS: &[&str] = &[
    "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif", "else", "except", "finally", "for",
    "from", "global", "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with",
    "yield",
];

pub fn parse_module(tokens: &[Token]) -> Result<Vec<Stmt>, SyntaxError> {
    let mut p = Parser { toks: tokens, pos: 0 };
    let mut body = Vec::new();
    while !p.at(&Tok::Eof) {
        body.extend(p.statement()?);
    }
    Ok(body)
}

/// Positional and keyword arguments of a call.
type CallArgs = (Vec<Expr>, Vec<(String, Expr)>);

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn cur(&self) -> &'a Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn at(&self, t: &Tok) -> bool {
        &self.cur().tok == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(&self.cur().tok, Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.cur().tok, Tok::Name(n) if n == kw)
    }

    fn advance(&mut self) -> &'a Token {
        let t = self.cur();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        let t = self.cur();
        Err(SyntaxError { line: t.line, col: t.col, message: message.into() })
    }

    fn expect_op(&mut self, op: &str) -> Result<(), SyntaxError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.err(format!("expected '{op}', found {}", describe(&self.cur().tok)))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.err(format!("expected '{kw}', found {}", describe(&self.cur().tok)))
        }
    }

    fn name(&mut self) -> Result<String, SyntaxError> {
        match &self.cur().tok {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.advance();
                Ok(n)
            }
            other => self.err(format!("expected a name, found {}", describe(other))),
        }
    }

    fn expect_newline(&mut self) -> Result<(), SyntaxError> {
        match self.cur().tok {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof => Ok(()),
            ref other => self.err(format!("expected end of line, found {}", describe(other))),
        }
    }

    fn statement(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        if let Tok::Name(n) = &self.cur().tok {
            match n.as_str() {
                "if" => return Ok(vec![self.if_stmt()?]),
                "while" => {
                    self.advance();
                    let test = self.test()?;
                    let body = self.block()?;
                    if self.at_kw("else") {
                        return self.err("while/else is not supported");
                    }
                    return Ok(vec![Stmt::While { test, body }]);
                }
                "for" => {
                    self.advance();
                    let target = self.target_list()?;
                    self.expect_kw("in")?;
                    let iter = self.testlist()?;
                    let body = self.block()?;
                    if self.at_kw("else") {
                        return self.err("for/else is not supported");
                    }
                    return Ok(vec![Stmt::For { target, iter, body }]);
                }
                "def" => return Ok(vec![self.funcdef()?]),
                "class" => return Ok(vec![self.classdef()?]),
                "try" => return Ok(vec![self.try_stmt()?]),
                "with" | "async" => return self.err(format!("'{n}' statements are not supported")),
                _ => {}
            }
        }
        if self.at_op("@") {
            while self.eat_op("@") {
                self.test()?;
                self.expect_newline()?;
            }
            if self.at_kw("def") {
                return Ok(vec![self.funcdef()?]);
            }
            if self.at_kw("class") {
                return Ok(vec![self.classdef()?]);
            }
            return self.err("expected 'def' or 'class' after decorator");
        }
        self.simple_line()
    }

    fn simple_line(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        let mut out = vec![self.simple_stmt()?];
        while self.eat_op(";") {
            if matches!(self.cur().tok, Tok::Newline | Tok::Eof) {
                break;
            }
            out.push(self.simple_stmt()?);
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn simple_stmt(&mut self) -> Result<Stmt, SyntaxError> {
        if let Tok::Name(n) = &self.cur().tok {
            match n.as_str() {
                "pass" => {
                    self.advance();
                    return Ok(Stmt::Pass);
                }
                "break" => {
                    self.advance();
                    return Ok(Stmt::Break);
                }
                "continue" => {
                    self.advance();
                    return Ok(Stmt::Continue);
                }
                "return" => {
                    self.advance();
                    if matches!(self.cur().tok, Tok::Newline | Tok::Eof) || self.at_op(";") {
                        return Ok(Stmt::Return(None));
                    }
                    return Ok(Stmt::Return(Some(self.testlist()?)));
                }
                "raise" => {
                    self.advance();
                    if matches!(self.cur().tok, Tok::Newline | Tok::Eof) {
                        return Ok(Stmt::Raise(None));
                    }
                    let e = self.test()?;
                    if self.eat_kw("from") {
                        self.test()?;
                    }
                    return Ok(Stmt::Raise(Some(e)));
                }
                "assert" => {
                    self.advance();
                    let test = self.test()?;
                    let msg = if self.eat_op(",") { Some(self.test()?) } else { None };
                    return Ok(Stmt::Assert(test, msg));
                }
                "import" | "from" => {
                    self.import()?;
                    return Ok(Stmt::Import);
                }
                "global" | "nonlocal" | "del" | "yield" | "await" => {
                    return self.err(format!("'{n}' is not supported"));
                }
                _ => {}
            }
        }

        let first = self.testlist()?;
        if self.eat_op(":") {
            let target = to_target(&first).ok_or_else(|| self.syntax("illegal target for annotation"))?;
            let annotation = self.test()?;
            let value = if self.eat_op("=") { Some(self.testlist()?) } else { None };
            return Ok(Stmt::AnnAssign { target, annotation, value });
        }
        if self.at_op("=") {
            let mut exprs = vec![first];
            while self.eat_op("=") {
                exprs.push(self.testlist()?);
            }
            let value = exprs.pop().unwrap();
            let targets = exprs
                .iter()
                .map(|e| to_target(e).ok_or_else(|| self.syntax("cannot assign to expression")))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(Stmt::Assign(targets, value));
        }
        let aug = match &self.cur().tok {
            Tok::Op("+=") => Some(BinOp::Add),
            Tok::Op("-=") => Some(BinOp::Sub),
            Tok::Op("*=") => Some(BinOp::Mul),
            Tok::Op("/=") => Some(BinOp::Div),
            Tok::Op("//=") => Some(BinOp::FloorDiv),
            Tok::Op("%=") => Some(BinOp::Mod),
            Tok::Op("**=") => Some(BinOp::Pow),
            Tok::Op("&=") => Some(BinOp::BitAnd),
            Tok::Op("|=") => Some(BinOp::BitOr),
            Tok::Op("^=") => Some(BinOp::BitXor),
            _ => None,
        };
        if let Some(op) = aug {
            self.advance();
            let target = match to_target(&first) {
                Some(t @ (Target::Name(_) | Target::Attribute(..) | Target::Subscript(..))) => t,
                _ => return self.err("illegal target for augmented assignment"),
            };
            let value = self.testlist()?;
            return Ok(Stmt::AugAssign(target, op, value));
        }
        Ok(Stmt::Expr(first))
    }

    fn syntax(&self, message: &str) -> SyntaxError {
        let t = self.cur();
        SyntaxError { line: t.line, col: t.col, message: message.into() }
    }

    fn import(&mut self) -> Result<(), SyntaxError> {
        if self.eat_kw("import") {
            loop {
                self.dotted_name()?;
                if self.eat_kw("as") {
                    self.name()?;
                }
                if !self.eat_op(",") {
                    return Ok(());
                }
            }
        }
        self.expect_kw("from")?;
        while self.eat_op(".") || self.eat_op("...") {}
        if !self.at_kw("import") {
            self.dotted_name()?;
        }
        self.expect_kw("import")?;
        if self.eat_op("*") {
            return Ok(());
        }
        let paren = self.eat_op("(");
        loop {
            self.name()?;
            if self.eat_kw("as") {
                self.name()?;
            }
            if !self.eat_op(",") {
                break;
            }
            if paren && self.at_op(")") {
                break;
            }
        }
        if paren {
            self.expect_op(")")?;
        }
        Ok(())
    }

    fn dotted_name(&mut self) -> Result<(), SyntaxError> {
        self.name()?;
        while self.eat_op(".") {
            self.name()?;
        }
        Ok(())
    }

    fn block(&mut self) -> Result<Vec<Stmt>, SyntaxError> {
        self.expect_op(":")?;
        if !self.at(&Tok::Newline) {
            return self.simple_line();
        }
        self.advance();
        if !self.at(&Tok::Indent) {
            return self.err("expected an indented block");
        }
        self.advance();
        let mut body = Vec::new();
        while !self.at(&Tok::Dedent) && !self.at(&Tok::Eof) {
            body.extend(self.statement()?);
        }
        if self.at(&Tok::Dedent) {
            self.advance();
        }
        Ok(body)
    }

    fn if_stmt(&mut self) -> Result<Stmt, SyntaxError> {
        self.advance();
        let test = self.test()?;
        let body = self.block()?;
        let orelse = if self.at_kw("elif") {
            vec![self.if_stmt()?]
        } else if self.eat_kw("else") {
            self.block()?
        } else {
            Vec::new()
        };
        Ok(Stmt::If { test, body, orelse })
    }

    fn try_stmt(&mut self) -> Result<Stmt, SyntaxError> {
        self.advance();
        let body = self.block()?;
        let mut handlers = Vec::new();
        while self.eat_kw("except") {
            let (kind, name) = if self.at_op(":") {
                (None, None)
            } else {
                let kind = self.test()?;
                let name = if self.eat_kw("as") { Some(self.name()?) } else { None };
                (Some(kind), name)
            };
            handlers.push(ExceptHandler { kind, name, body: self.block()? });
        }
        let orelse = if !handlers.is_empty() && self.eat_kw("else") { self.block()? } else { Vec::new() };
        let finalbody = if self.eat_kw("finally") { self.block()? } else { Vec::new() };
        if handlers.is_empty() && finalbody.is_empty() {
            return self.err("expected 'except' or 'finally' block");
        }
        Ok(Stmt::Try { body, handlers, orelse, finalbody })
    }

    fn funcdef(&mut self) -> Result<Stmt, SyntaxError> {
        let line = self.cur().line;
        self.expect_kw("def")?;
        let name = self.name()?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.at_op(")") {
            if self.at_op("*") || self.at_op("**") || self.at_op("/") {
                return self.err("variadic and positional-only parameters are not supported");
            }
            let pname = self.name()?;
            if self.eat_op(":") {
                self.test()?;
            }
            let default = if self.eat_op("=") { Some(self.test()?) } else { None };
            params.push(Param { name: pname, default });
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.test()?;
        }
        let body = self.block()?;
        Ok(Stmt::FunctionDef(FunctionDef { name, params, body, line }))
    }

    fn classdef(&mut self) -> Result<Stmt, SyntaxError> {
        self.expect_kw("class")?;
        let name = self.name()?;
        if self.eat_op("(") {
            while !self.at_op(")") {
                self.test()?;
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op(")")?;
        }
        let body = self.block()?;
        Ok(Stmt::ClassDef { name, body })
    }

    fn target_list(&mut self) -> Result<Target, SyntaxError> {
        let mut items = vec![self.bitor()?];
        let mut tuple = false;
        while self.eat_op(",") {
            tuple = true;
            if self.at_kw("in") || self.at_op("=") {
                break;
            }
            items.push(self.bitor()?);
        }
        let expr = if tuple { Expr::Tuple(items) } else { items.pop().unwrap() };
        to_target(&expr).ok_or_else(|| self.syntax("invalid loop target"))
    }

    fn testlist(&mut self) -> Result<Expr, SyntaxError> {
        let first = self.test()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.ends_testlist() {
                break;
            }
            items.push(self.test()?);
        }
        Ok(Expr::Tuple(items))
    }

    fn ends_testlist(&self) -> bool {
        matches!(self.cur().tok, Tok::Newline | Tok::Eof | Tok::Op("=" | ")" | ":" | ";" | "]" | "}"))
    }

    fn test(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_kw("lambda") {
            while !self.at_op(":") {
                if matches!(self.cur().tok, Tok::Newline | Tok::Eof) {
                    return self.err("unterminated lambda");
                }
                self.advance();
            }
            self.advance();
            self.test()?;
            return Ok(Expr::Lambda);
        }
        let body = self.or_test()?;
        if self.eat_kw("if") {
            let test = self.or_test()?;
            self.expect_kw("else")?;
            let orelse = self.test()?;
            return Ok(Expr::IfExp { test: Box::new(test), body: Box::new(body), orelse: Box::new(orelse) });
        }
        Ok(body)
    }

    fn or_test(&mut self) -> Result<Expr, SyntaxError> {
        let first = self.and_test()?;
        if !self.at_kw("or") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_kw("or") {
            items.push(self.and_test()?);
        }
        Ok(Expr::BoolOp(BoolOp::Or, items))
    }

    fn and_test(&mut self) -> Result<Expr, SyntaxError> {
        let first = self.not_test()?;
        if !self.at_kw("and") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_kw("and") {
            items.push(self.not_test()?);
        }
        Ok(Expr::BoolOp(BoolOp::And, items))
    }

    fn not_test(&mut self) -> Result<Expr, SyntaxError> {
        if self.eat_kw("not") {
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.not_test()?)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, SyntaxError> {
        let left = self.bitor()?;
        let mut ops = Vec::new();
        loop {
            let op = match &self.cur().tok {
                Tok::Op("==") => CmpOp::Eq,
                Tok::Op("!=") => CmpOp::NotEq,
                Tok::Op("<") => CmpOp::Lt,
                Tok::Op("<=") => CmpOp::LtE,
                Tok::Op(">") => CmpOp::Gt,
                Tok::Op(">=") => CmpOp::GtE,
                Tok::Name(n) if n == "in" => CmpOp::In,
                Tok::Name(n) if n == "is" => {
                    self.advance();
                    let op = if self.eat_kw("not") { CmpOp::IsNot } else { CmpOp::Is };
                    ops.push((op, self.bitor()?));
                    continue;
                }
                Tok::Name(n) if n == "not" => {
                    let next = &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok;
                    if !matches!(next, Tok::Name(m) if m == "in") {
                        break;
                    }
                    self.advance();
                    CmpOp::NotIn
                }
                _ => break,
            };
            self.advance();
            ops.push((op, self.bitor()?));
        }
        if ops.is_empty() {
            Ok(left)
        } else {
            Ok(Expr::Compare(Box::new(left), ops))
        }
    }

    fn binary_level(&mut self, table: &[(&str, BinOp)], next: fn(&mut Self) -> Result<Expr, SyntaxError>) -> Result<Expr, SyntaxError> {
        let mut left = next(self)?;
        'outer: loop {
            for (sym, op) in table {
                if self.at_op(sym) {
                    self.advance();
                    let right = next(self)?;
                    left = Expr::Binary(*op, Box::new(left), Box::new(right));
                    continue 'outer;
                }
            }
            return Ok(left);
        }
    }

    fn bitor(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&[("|", BinOp::BitOr)], Self::bitxor)
    }

    fn bitxor(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&[("^", BinOp::BitXor)], Self::bitand)
    }

    fn bitand(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&[("&", BinOp::BitAnd)], Self::arith)
    }

    fn arith(&mut self) -> Result<Expr, SyntaxError> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::term)
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        if self.at_op("<<") || self.at_op(">>") {
            return self.err("shift operators are not supported");
        }
        self.binary_level(&[("*", BinOp::Mul), ("//", BinOp::FloorDiv), ("/", BinOp::Div), ("%", BinOp::Mod)], Self::factor)
    }

    fn factor(&mut self) -> Result<Expr, SyntaxError> {
        let op = match &self.cur().tok {
            Tok::Op("-") => Some(UnaryOp::Neg),
            Tok::Op("+") => Some(UnaryOp::Pos),
            Tok::Op("~") => Some(UnaryOp::Invert),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            return Ok(Expr::Unary(op, Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, SyntaxError> {
        let base = self.primary()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let mut e = self.atom()?;
        loop {
            if self.eat_op(".") {
                let attr = match &self.cur().tok {
                    Tok::Name(n) => n.clone(),
                    other => return self.err(format!("expected attribute name, found {}", describe(other))),
                };
                self.advance();
                e = Expr::Attribute(Box::new(e), attr);
            } else if self.eat_op("(") {
                let (args, kwargs) = self.call_args()?;
                e = Expr::Call { func: Box::new(e), args, kwargs };
            } else if self.eat_op("[") {
                let index = self.subscript()?;
                self.expect_op("]")?;
                e = Expr::Subscript(Box::new(e), Box::new(index));
            } else {
                return Ok(e);
            }
        }
    }

    fn call_args(&mut self) -> Result<CallArgs, SyntaxError> {
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        while !self.at_op(")") {
            if self.at_op("*") || self.at_op("**") {
                return self.err("argument unpacking is not supported");
            }
            let is_kw =
                matches!(&self.cur().tok, Tok::Name(_)) && matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Op("=")));
            if is_kw {
                let name = self.name()?;
                self.advance();
                kwargs.push((name, self.test()?));
            } else {
                let arg = self.test()?;
                if self.at_kw("for") {
                    args.push(self.comprehension(CompKind::Generator, arg)?);
                } else {
                    args.push(arg);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok((args, kwargs))
    }

    fn subscript(&mut self) -> Result<Expr, SyntaxError> {
        let lower = if self.at_op(":") { None } else { Some(Box::new(self.test()?)) };
        if !self.at_op(":") {
            let index = *lower.expect("parsed above");
            if self.at_op(",") {
                return self.err("multi-dimensional subscripts are not supported");
            }
            return Ok(index);
        }
        self.advance();
        let upper = if self.at_op("]") || self.at_op(":") { None } else { Some(Box::new(self.test()?)) };
        let step = if self.eat_op(":") && !self.at_op("]") { Some(Box::new(self.test()?)) } else { None };
        Ok(Expr::Slice(lower, upper, step))
    }

    fn comprehension(&mut self, kind: CompKind, element: Expr) -> Result<Expr, SyntaxError> {
        self.expect_kw("for")?;
        let target = self.target_list()?;
        self.expect_kw("in")?;
        let iter = self.or_test()?;
        let mut conds = Vec::new();
        while self.eat_kw("if") {
            conds.push(self.or_test()?);
        }
        if self.at_kw("for") {
            return self.err("nested comprehensions are not supported");
        }
        Ok(Expr::Comprehension { kind, element: Box::new(element), target, iter: Box::new(iter), conds })
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        let t = self.cur();
        match &t.tok {
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::Int(*i))
            }
            Tok::Float(f) => {
                self.advance();
                Ok(Expr::Float(*f))
            }
            Tok::Str { .. } => {
                let mut text = String::new();
                let mut formatted = false;
                while let Tok::Str { value, formatted: f } = &self.cur().tok {
                    text.push_str(value);
                    formatted |= *f;
                    self.advance();
                }
                Ok(if formatted { Expr::FStr(text) } else { Expr::Str(text) })
            }
            Tok::Name(n) => match n.as_str() {
                "True" => {
                    self.advance();
                    Ok(Expr::Bool(true))
                }
                "False" => {
                    self.advance();
                    Ok(Expr::Bool(false))
                }
                "None" => {
                    self.advance();
                    Ok(Expr::None)
                }
                _ => Ok(Expr::Name(self.name()?)),
            },
            Tok::Op("(") => {
                self.advance();
                if self.eat_op(")") {
                    return Ok(Expr::Tuple(Vec::new()));
                }
                let first = self.test()?;
                if self.at_kw("for") {
                    let e = self.comprehension(CompKind::Generator, first)?;
                    self.expect_op(")")?;
                    return Ok(e);
                }
                if self.eat_op(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op(")")?;
                Ok(Expr::Tuple(items))
            }
            Tok::Op("[") => {
                self.advance();
                if self.eat_op("]") {
                    return Ok(Expr::List(Vec::new()));
                }
                let first = self.test()?;
                if self.at_kw("for") {
                    let e = self.comprehension(CompKind::List, first)?;
                    self.expect_op("]")?;
                    return Ok(e);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op("]") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op("]")?;
                Ok(Expr::List(items))
            }
            Tok::Op("{") => {
                self.advance();
                if self.eat_op("}") {
                    return Ok(Expr::Dict(Vec::new()));
                }
                let first = self.test()?;
                if self.eat_op(":") {
                    let mut pairs = vec![(first, self.test()?)];
                    if self.at_kw("for") {
                        return self.err("dict comprehensions are not supported");
                    }
                    while self.eat_op(",") {
                        if self.at_op("}") {
                            break;
                        }
                        let k = self.test()?;
                        self.expect_op(":")?;
                        pairs.push((k, self.test()?));
                    }
                    self.expect_op("}")?;
                    return Ok(Expr::Dict(pairs));
                }
                if self.at_kw("for") {
                    let e = self.comprehension(CompKind::Set, first)?;
                    self.expect_op("}")?;
                    return Ok(e);
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op("}") {
                        break;
                    }
                    items.push(self.test()?);
                }
                self.expect_op("}")?;
                Ok(Expr::Set(items))
            }
            Tok::Op("...") => {
                self.advance();
                Ok(Expr::None)
            }
            other => self.err(format!("unexpected {}", describe(other))),
        }
    }
}

fn to_target(e: &Expr) -> Option<Target> {
    match e {
        Expr::Name(n) => Some(Target::Name(n.clone())),
        Expr::Attribute(obj, attr) => Some(Target::Attribute(obj.clone(), attr.clone())),
        Expr::Subscript(obj, idx) => Some(Target::Subscript(obj.clone(), idx.clone())),
        Expr::Tuple(items) | Expr::List(items) => items.iter().map(to_target).collect::<Option<Vec<_>>>().map(Target::Tuple),
        _ => None,
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) => format!("'{n}'"),
        Tok::Int(i) => format!("number {i}"),
        Tok::Float(f) => format!("number {f}"),
        Tok::Str { .. } => "string literal".into(),
        Tok::Op(o) => format!("'{o}'"),
        Tok::Newline => "end of line".into(),
        Tok::Indent => "indent".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Eof => "end of input".into(),
    }
}
