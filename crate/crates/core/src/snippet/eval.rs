//! Tree-walking evaluator for the parsed Python subset.
//!
//! Only what generated decision methods need is modelled: scalar values,
//! strings, lists/tuples/sets/dicts, instances of the task class, module
//! helpers and a handful of builtins. Module-level code other than
//! definitions, imports and name bindings is not executed.

use std::cell::{Cell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use super::ast::*;
use crate::value::AttrValue;

pub const DEFAULT_STEP_LIMIT: u64 = 200_000;
const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub kind: String,
    pub message: String,
}

impl Fault {
    fn new(kind: &str, message: impl Into<String>) -> Self {
        Fault { kind: kind.to_string(), message: message.into() }
    }

    pub fn is_timeout(&self) -> bool {
        self.kind == TIMEOUT
    }
}

pub const TIMEOUT: &str = "Timeout";

type R<T> = Result<T, Fault>;

#[derive(Debug)]
pub struct ClassInfo {
    pub name: String,
    methods: HashMap<String, Rc<FunctionDef>>,
    attrs: HashMap<String, Value>,
    defaults: Vec<(String, Option<Expr>)>,
}

#[derive(Debug)]
pub struct Instance {
    class: Rc<ClassInfo>,
    fields: RefCell<BTreeMap<String, Value>>,
}

#[derive(Debug, Clone)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(Rc<str>),
    List(Rc<RefCell<Vec<Value>>>),
    Tuple(Rc<Vec<Value>>),
    Set(Rc<RefCell<Vec<Value>>>),
    Dict(Rc<RefCell<Vec<(Value, Value)>>>),
    Range(i64, i64, i64),
    Instance(Rc<Instance>),
    Class(Rc<ClassInfo>),
    Function(Rc<FunctionDef>, Option<Rc<Instance>>),
    Builtin(&'static str),
    Method(Box<Value>, &'static str),
    ExcType(Rc<str>),
    Exc(Rc<str>, Rc<str>),
}

impl Value {
    fn str(s: &str) -> Value {
        Value::Str(Rc::from(s))
    }

    fn list(v: Vec<Value>) -> Value {
        Value::List(Rc::new(RefCell::new(v)))
    }

    fn type_name(&self) -> &'static str {
        match self {
            Value::None => "NoneType",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "str",
            Value::List(_) => "list",
            Value::Tuple(_) => "tuple",
            Value::Set(_) => "set",
            Value::Dict(_) => "dict",
            Value::Range(..) => "range",
            Value::Instance(_) => "object",
            Value::Class(_) => "type",
            Value::Function(..) | Value::Builtin(_) | Value::Method(..) => "function",
            Value::ExcType(_) => "type",
            Value::Exc(..) => "exception",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Int(i) => *i != 0,
            Value::Float(f) => *f != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::List(v) | Value::Set(v) => !v.borrow().is_empty(),
            Value::Tuple(v) => !v.is_empty(),
            Value::Dict(d) => !d.borrow().is_empty(),
            Value::Range(a, b, s) => range_len(*a, *b, *s) > 0,
            _ => true,
        }
    }

    fn as_number(&self) -> Option<Num> {
        match self {
            Value::Bool(b) => Some(Num::I(*b as i64)),
            Value::Int(i) => Some(Num::I(*i)),
            Value::Float(f) => Some(Num::F(*f)),
            _ => None,
        }
    }

    fn repr(&self) -> String {
        match self {
            Value::Str(s) => crate::value::python_str(s),
            other => other.to_display(),
        }
    }

    fn to_display(&self) -> String {
        match self {
            Value::None => "None".into(),
            Value::Bool(true) => "True".into(),
            Value::Bool(false) => "False".into(),
            Value::Int(i) => i.to_string(),
            Value::Float(f) => crate::value::python_float(*f),
            Value::Str(s) => s.to_string(),
            Value::List(v) => format!("[{}]", v.borrow().iter().map(Value::repr).collect::<Vec<_>>().join(", ")),
            Value::Tuple(v) => format!("({})", v.iter().map(Value::repr).collect::<Vec<_>>().join(", ")),
            Value::Set(v) => format!("{{{}}}", v.borrow().iter().map(Value::repr).collect::<Vec<_>>().join(", ")),
            Value::Dict(d) => {
                format!("{{{}}}", d.borrow().iter().map(|(k, v)| format!("{}: {}", k.repr(), v.repr())).collect::<Vec<_>>().join(", "))
            }
            Value::Exc(_, msg) => msg.to_string(),
            other => format!("<{}>", other.type_name()),
        }
    }
}

impl From<&AttrValue> for Value {
    fn from(v: &AttrValue) -> Self {
        match v {
            AttrValue::Bool(b) => Value::Bool(*b),
            AttrValue::Int(i) => Value::Int(*i),
            AttrValue::Real(r) => Value::Float(*r),
            AttrValue::Str(s) => Value::str(s),
        }
    }
}

#[derive(Clone, Copy)]
enum Num {
    I(i64),
    F(f64),
}

impl Num {
    fn f(self) -> f64 {
        match self {
            Num::I(i) => i as f64,
            Num::F(f) => f,
        }
    }
}

fn range_len(a: i64, b: i64, s: i64) -> i64 {
    if s > 0 && b > a {
        (b - a + s - 1) / s
    } else if s < 0 && a > b {
        (a - b - s - 1) / (-s)
    } else {
        0
    }
}

const EXCEPTION_TYPES: &[&str] = &[
    "Exception",
    "BaseException",
    "ValueError",
    "TypeError",
    "KeyError",
    "IndexError",
    "ZeroDivisionError",
    "AttributeError",
    "NameError",
    "RuntimeError",
    "NotImplementedError",
    "AssertionError",
    "ArithmeticError",
    "LookupError",
    "OverflowError",
    "RecursionError",
];

const BUILTINS: &[&str] = &[
    "len",
    "abs",
    "min",
    "max",
    "sum",
    "any",
    "all",
    "int",
    "float",
    "str",
    "bool",
    "round",
    "range",
    "sorted",
    "list",
    "tuple",
    "set",
    "dict",
    "isinstance",
    "print",
    "enumerate",
    "zip",
    "getattr",
    "hasattr",
];

fn exception_matches(raised: &str, handler: &str) -> bool {
    if raised == TIMEOUT {
        return false;
    }
    raised == handler
        || handler == "Exception"
        || handler == "BaseException"
        || (handler == "ArithmeticError" && matches!(raised, "ZeroDivisionError" | "OverflowError"))
        || (handler == "LookupError" && matches!(raised, "KeyError" | "IndexError"))
        || (handler == "RuntimeError" && matches!(raised, "NotImplementedError" | "RecursionError"))
}

enum Flow {
    Normal,
    Return(Value),
    Break,
    Continue,
}

/// A compiled snippet ready to be invoked on instances.
pub struct Program {
    module: Vec<Stmt>,
    class_name: String,
    method_name: String,
    pub step_limit: u64,
}

impl Program {
    pub fn new(module: Vec<Stmt>, class_name: &str, method_name: &str) -> Self {
        Program { module, class_name: class_name.into(), method_name: method_name.into(), step_limit: DEFAULT_STEP_LIMIT }
    }

    /// Builds an instance from `assignment` and calls the target method,
    /// returning the truthiness of its result.
    pub fn call(&self, assignment: &BTreeMap<String, AttrValue>) -> Result<bool, Fault> {
        let interp = Interp { globals: RefCell::new(HashMap::new()), steps: Cell::new(0), limit: self.step_limit, depth: Cell::new(0) };
        let (class, method) = interp.load_module(&self.module, &self.class_name, &self.method_name)?;
        let fields = assignment.iter().map(|(k, v)| (k.clone(), Value::from(v))).collect();
        let inst = Rc::new(Instance { class, fields: RefCell::new(fields) });
        let result = interp.call_function(&method, Some(inst), Vec::new(), Vec::new())?;
        Ok(result.truthy())
    }
}

struct Interp {
    globals: RefCell<HashMap<String, Value>>,
    steps: Cell<u64>,
    limit: u64,
    depth: Cell<usize>,
}

type Locals = HashMap<String, Value>;

impl Interp {
    fn tick(&self) -> R<()> {
        let n = self.steps.get() + 1;
        self.steps.set(n);
        if n > self.limit {
            return Err(Fault::new(TIMEOUT, "step budget exhausted"));
        }
        Ok(())
    }

    fn load_module(&self, module: &[Stmt], class_name: &str, method_name: &str) -> R<(Rc<ClassInfo>, Rc<FunctionDef>)> {
        let mut found: Option<(Rc<ClassInfo>, Rc<FunctionDef>, bool)> = None;
        let mut loose: Option<Rc<FunctionDef>> = None;
        for stmt in module {
            match stmt {
                Stmt::FunctionDef(f) => {
                    let f = Rc::new(f.clone());
                    if f.name == method_name && f.params.first().is_some_and(|p| p.name == "self") {
                        loose = Some(f.clone());
                    }
                    self.globals.borrow_mut().insert(f.name.clone(), Value::Function(f, None));
                }
                Stmt::ClassDef { name, body } => {
                    let class = Rc::new(self.build_class(name, body)?);
                    if let Some(m) = class.methods.get(method_name) {
                        let exact = name == class_name;
                        if found.as_ref().is_none_or(|(_, _, prev_exact)| exact && !prev_exact) {
                            found = Some((class.clone(), m.clone(), exact));
                        }
                    }
                    self.globals.borrow_mut().insert(name.clone(), Value::Class(class));
                }
                Stmt::Assign(targets, value) => {
                    let mut locals = Locals::new();
                    if let Ok(v) = self.eval(value, &mut locals) {
                        for t in targets {
                            if let Target::Name(n) = t {
                                self.globals.borrow_mut().insert(n.clone(), v.clone());
                            }
                        }
                    }
                }
                Stmt::AnnAssign { target: Target::Name(n), value: Some(value), .. } => {
                    let mut locals = Locals::new();
                    if let Ok(v) = self.eval(value, &mut locals) {
                        self.globals.borrow_mut().insert(n.clone(), v);
                    }
                }
                _ => {}
            }
        }
        if let Some((class, method, _)) = found {
            return Ok((class, method));
        }
        if let Some(method) = loose {
            let class = Rc::new(ClassInfo {
                name: class_name.to_string(),
                methods: HashMap::from([(method_name.to_string(), method.clone())]),
                attrs: HashMap::new(),
                defaults: Vec::new(),
            });
            return Ok((class, method));
        }
        Err(Fault::new("AttributeError", format!("'{class_name}' object has no attribute '{method_name}'")))
    }

    fn build_class(&self, name: &str, body: &[Stmt]) -> R<ClassInfo> {
        let mut methods = HashMap::new();
        let mut attrs = HashMap::new();
        let mut defaults = Vec::new();
        let mut scratch = Locals::new();
        for stmt in body {
            match stmt {
                Stmt::FunctionDef(f) => {
                    methods.insert(f.name.clone(), Rc::new(f.clone()));
                }
                Stmt::AnnAssign { target: Target::Name(n), value, .. } => {
                    defaults.push((n.clone(), value.clone()));
                }
                Stmt::Assign(targets, value) => {
                    let v = self.eval(value, &mut scratch)?;
                    for t in targets {
                        if let Target::Name(n) = t {
                            attrs.insert(n.clone(), v.clone());
                            scratch.insert(n.clone(), v.clone());
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(ClassInfo { name: name.to_string(), methods, attrs, defaults })
    }

    fn call_function(
        &self,
        f: &Rc<FunctionDef>,
        receiver: Option<Rc<Instance>>,
        args: Vec<Value>,
        kwargs: Vec<(String, Value)>,
    ) -> R<Value> {
        let depth = self.depth.get();
        if depth >= MAX_DEPTH {
            return Err(Fault::new("RecursionError", "maximum recursion depth exceeded"));
        }
        let mut locals = Locals::new();
        let mut positional = receiver.map(Value::Instance).into_iter().chain(args);
        for p in &f.params {
            if let Some(v) = positional.next() {
                locals.insert(p.name.clone(), v);
            }
        }
        if positional.next().is_some() {
            return Err(Fault::new("TypeError", format!("{}() takes {} positional arguments", f.name, f.params.len())));
        }
        for (k, v) in kwargs {
            if !f.params.iter().any(|p| p.name == k) {
                return Err(Fault::new("TypeError", format!("{}() got an unexpected keyword argument '{k}'", f.name)));
            }
            locals.insert(k, v);
        }
        for p in &f.params {
            if !locals.contains_key(&p.name) {
                match &p.default {
                    Some(d) => {
                        let v = self.eval(d, &mut Locals::new())?;
                        locals.insert(p.name.clone(), v);
                    }
                    None => {
                        return Err(Fault::new("TypeError", format!("{}() missing required positional argument: '{}'", f.name, p.name)))
                    }
                }
            }
        }
        self.depth.set(depth + 1);
        let flow = self.exec_block(&f.body, &mut locals);
        self.depth.set(depth);
        match flow? {
            Flow::Return(v) => Ok(v),
            _ => Ok(Value::None),
        }
    }

    fn exec_block(&self, body: &[Stmt], locals: &mut Locals) -> R<Flow> {
        for stmt in body {
            match self.exec(stmt, locals)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn exec(&self, stmt: &Stmt, locals: &mut Locals) -> R<Flow> {
        self.tick()?;
        match stmt {
            Stmt::Expr(e) => {
                self.eval(e, locals)?;
            }
            Stmt::Assign(targets, value) => {
                let v = self.eval(value, locals)?;
                for t in targets {
                    self.assign(t, v.clone(), locals)?;
                }
            }
            Stmt::AugAssign(target, op, value) => {
                let current = match target {
                    Target::Name(n) => self.lookup(n, locals)?,
                    Target::Attribute(obj, attr) => {
                        let o = self.eval(obj, locals)?;
                        self.get_attr(&o, attr)?
                    }
                    Target::Subscript(obj, idx) => {
                        let o = self.eval(obj, locals)?;
                        let i = self.eval(idx, locals)?;
                        self.subscript(&o, &i)?
                    }
                    Target::Tuple(_) => return Err(Fault::new("SyntaxError", "illegal augmented assignment")),
                };
                let rhs = self.eval(value, locals)?;
                let v = self.binary(*op, &current, &rhs)?;
                self.assign(target, v, locals)?;
            }
            Stmt::AnnAssign { target, value, .. } => {
                if let Some(value) = value {
                    let v = self.eval(value, locals)?;
                    self.assign(target, v, locals)?;
                }
            }
            Stmt::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(e, locals)?,
                    None => Value::None,
                };
                return Ok(Flow::Return(v));
            }
            Stmt::If { test, body, orelse } => {
                let branch = if self.eval(test, locals)?.truthy() { body } else { orelse };
                return self.exec_block(branch, locals);
            }
            Stmt::While { test, body } => {
                while self.eval(test, locals)?.truthy() {
                    match self.exec_block(body, locals)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        _ => {}
                    }
                }
            }
            Stmt::For { target, iter, body } => {
                let items = self.iterate(&self.eval(iter, locals)?)?;
                for item in items {
                    self.assign(target, item, locals)?;
                    match self.exec_block(body, locals)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        _ => {}
                    }
                }
            }
            Stmt::Try { body, handlers, orelse, finalbody } => {
                let outcome = match self.exec_block(body, locals) {
                    Ok(flow) => match flow {
                        Flow::Normal => self.exec_block(orelse, locals),
                        other => Ok(other),
                    },
                    Err(fault) => {
                        let mut handled = None;
                        for h in handlers {
                            let matches = match &h.kind {
                                None => !fault.is_timeout(),
                                Some(kind) => self.handler_matches(kind, &fault, locals)?,
                            };
                            if matches {
                                if let Some(n) = &h.name {
                                    locals.insert(n.clone(), Value::Exc(Rc::from(fault.kind.as_str()), Rc::from(fault.message.as_str())));
                                }
                                handled = Some(self.exec_block(&h.body, locals));
                                break;
                            }
                        }
                        handled.unwrap_or(Err(fault))
                    }
                };
                if !finalbody.is_empty() {
                    if let Err(f) = &outcome {
                        if f.is_timeout() {
                            return outcome;
                        }
                    }
                    match self.exec_block(finalbody, locals)? {
                        Flow::Normal => {}
                        other => return Ok(other),
                    }
                }
                return outcome;
            }
            Stmt::Raise(e) => {
                let Some(e) = e else { return Err(Fault::new("RuntimeError", "No active exception to reraise")) };
                return Err(match self.eval(e, locals)? {
                    Value::ExcType(k) => Fault::new(&k, ""),
                    Value::Exc(k, m) => Fault::new(&k, m.to_string()),
                    other => Fault::new("TypeError", format!("exceptions must derive from BaseException, not {}", other.type_name())),
                });
            }
            Stmt::Assert(test, msg) => {
                if !self.eval(test, locals)?.truthy() {
                    let m = match msg {
                        Some(m) => self.eval(m, locals)?.to_display(),
                        None => String::new(),
                    };
                    return Err(Fault::new("AssertionError", m));
                }
            }
            Stmt::FunctionDef(f) => {
                locals.insert(f.name.clone(), Value::Function(Rc::new(f.clone()), None));
            }
            Stmt::ClassDef { name, body } => {
                let class = self.build_class(name, body)?;
                locals.insert(name.clone(), Value::Class(Rc::new(class)));
            }
            Stmt::Import | Stmt::Pass => {}
            Stmt::Break => return Ok(Flow::Break),
            Stmt::Continue => return Ok(Flow::Continue),
        }
        Ok(Flow::Normal)
    }

    fn handler_matches(&self, kind: &Expr, fault: &Fault, locals: &mut Locals) -> R<bool> {
        if fault.is_timeout() {
            return Ok(false);
        }
        let v = self.eval(kind, locals)?;
        let names: Vec<Rc<str>> = match v {
            Value::ExcType(k) => vec![k],
            Value::Tuple(items) => items.iter().filter_map(|i| if let Value::ExcType(k) = i { Some(k.clone()) } else { None }).collect(),
            _ => return Err(Fault::new("TypeError", "catching classes that do not inherit from BaseException is not allowed")),
        };
        Ok(names.iter().any(|n| exception_matches(&fault.kind, n)))
    }

    fn assign(&self, target: &Target, value: Value, locals: &mut Locals) -> R<()> {
        match target {
            Target::Name(n) => {
                locals.insert(n.clone(), value);
            }
            Target::Attribute(obj, attr) => match self.eval(obj, locals)? {
                Value::Instance(inst) => {
                    inst.fields.borrow_mut().insert(attr.clone(), value);
                }
                other => {
                    return Err(Fault::new("AttributeError", format!("'{}' object attribute '{attr}' is read-only", other.type_name())))
                }
            },
            Target::Subscript(obj, idx) => {
                let o = self.eval(obj, locals)?;
                let i = self.eval(idx, locals)?;
                match o {
                    Value::List(l) => {
                        let mut l = l.borrow_mut();
                        let pos = normalize_index(&i, l.len())?;
                        l[pos] = value;
                    }
                    Value::Dict(d) => {
                        let mut d = d.borrow_mut();
                        match d.iter_mut().find(|(k, _)| py_eq(k, &i)) {
                            Some(slot) => slot.1 = value,
                            None => d.push((i, value)),
                        }
                    }
                    other => {
                        return Err(Fault::new("TypeError", format!("'{}' object does not support item assignment", other.type_name())))
                    }
                }
            }
            Target::Tuple(targets) => {
                let items = self.iterate(&value)?;
                if items.len() != targets.len() {
                    return Err(Fault::new("ValueError", format!("expected {} values to unpack, got {}", targets.len(), items.len())));
                }
                for (t, v) in targets.iter().zip(items) {
                    self.assign(t, v, locals)?;
                }
            }
        }
        Ok(())
    }

    fn lookup(&self, name: &str, locals: &Locals) -> R<Value> {
        if let Some(v) = locals.get(name) {
            return Ok(v.clone());
        }
        if let Some(v) = self.globals.borrow().get(name) {
            return Ok(v.clone());
        }
        if let Some(b) = BUILTINS.iter().find(|b| **b == name) {
            return Ok(Value::Builtin(b));
        }
        if let Some(e) = EXCEPTION_TYPES.iter().find(|e| **e == name) {
            return Ok(Value::ExcType(Rc::from(*e)));
        }
        Err(Fault::new("NameError", format!("name '{name}' is not defined")))
    }

    fn eval(&self, e: &Expr, locals: &mut Locals) -> R<Value> {
        self.tick()?;
        Ok(match e {
            Expr::Name(n) => self.lookup(n, locals)?,
            Expr::Int(i) => Value::Int(*i),
            Expr::Float(f) => Value::Float(*f),
            Expr::Str(s) => Value::str(s),
            Expr::FStr(_) => return Err(Fault::new("NotImplementedError", "f-strings are not supported")),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::None => Value::None,
            Expr::Lambda => return Err(Fault::new("NotImplementedError", "lambda is not supported")),
            Expr::Attribute(obj, attr) => {
                let o = self.eval(obj, locals)?;
                self.get_attr(&o, attr)?
            }
            Expr::Call { func, args, kwargs } => {
                let f = self.eval(func, locals)?;
                let args = args.iter().map(|a| self.eval(a, locals)).collect::<R<Vec<_>>>()?;
                let kwargs = kwargs.iter().map(|(k, v)| Ok((k.clone(), self.eval(v, locals)?))).collect::<R<Vec<_>>>()?;
                self.call(f, args, kwargs)?
            }
            Expr::Subscript(obj, idx) => {
                let o = self.eval(obj, locals)?;
                if let Expr::Slice(lo, hi, step) = idx.as_ref() {
                    let mut bound = |b: &Option<Box<Expr>>| -> R<Option<i64>> {
                        match b {
                            None => Ok(None),
                            Some(b) => match self.eval(b, locals)? {
                                Value::Int(i) => Ok(Some(i)),
                                Value::None => Ok(None),
                                other => Err(Fault::new("TypeError", format!("slice indices must be integers, not {}", other.type_name()))),
                            },
                        }
                    };
                    let (lo, hi, step) = (bound(lo)?, bound(hi)?, bound(step)?);
                    return slice(&o, lo, hi, step.unwrap_or(1));
                }
                let i = self.eval(idx, locals)?;
                self.subscript(&o, &i)?
            }
            Expr::Slice(..) => return Err(Fault::new("SyntaxError", "slice outside subscript")),
            Expr::Unary(op, operand) => {
                let v = self.eval(operand, locals)?;
                match op {
                    UnaryOp::Not => Value::Bool(!v.truthy()),
                    UnaryOp::Neg => match v.as_number() {
                        Some(Num::I(i)) => Value::Int(i.checked_neg().ok_or_else(overflow)?),
                        Some(Num::F(f)) => Value::Float(-f),
                        None => return Err(Fault::new("TypeError", format!("bad operand type for unary -: '{}'", v.type_name()))),
                    },
                    UnaryOp::Pos => match v.as_number() {
                        Some(Num::I(i)) => Value::Int(i),
                        Some(Num::F(f)) => Value::Float(f),
                        None => return Err(Fault::new("TypeError", format!("bad operand type for unary +: '{}'", v.type_name()))),
                    },
                    UnaryOp::Invert => match v.as_number() {
                        Some(Num::I(i)) => Value::Int(!i),
                        _ => return Err(Fault::new("TypeError", format!("bad operand type for unary ~: '{}'", v.type_name()))),
                    },
                }
            }
            Expr::Binary(op, l, r) => {
                let l = self.eval(l, locals)?;
                let r = self.eval(r, locals)?;
                self.binary(*op, &l, &r)?
            }
            Expr::BoolOp(op, items) => {
                let mut last = Value::None;
                for item in items {
                    last = self.eval(item, locals)?;
                    let t = last.truthy();
                    if (*op == BoolOp::And && !t) || (*op == BoolOp::Or && t) {
                        return Ok(last);
                    }
                }
                last
            }
            Expr::Compare(first, rest) => {
                let mut left = self.eval(first, locals)?;
                for (op, right) in rest {
                    let right = self.eval(right, locals)?;
                    if !compare(*op, &left, &right)? {
                        return Ok(Value::Bool(false));
                    }
                    left = right;
                }
                Value::Bool(true)
            }
            Expr::IfExp { test, body, orelse } => {
                if self.eval(test, locals)?.truthy() {
                    self.eval(body, locals)?
                } else {
                    self.eval(orelse, locals)?
                }
            }
            Expr::Tuple(items) => Value::Tuple(Rc::new(items.iter().map(|i| self.eval(i, locals)).collect::<R<Vec<_>>>()?)),
            Expr::List(items) => Value::list(items.iter().map(|i| self.eval(i, locals)).collect::<R<Vec<_>>>()?),
            Expr::Set(items) => {
                let vals = items.iter().map(|i| self.eval(i, locals)).collect::<R<Vec<_>>>()?;
                Value::Set(Rc::new(RefCell::new(dedup(vals))))
            }
            Expr::Dict(pairs) => {
                let mut out: Vec<(Value, Value)> = Vec::new();
                for (k, v) in pairs {
                    let k = self.eval(k, locals)?;
                    let v = self.eval(v, locals)?;
                    match out.iter_mut().find(|(ek, _)| py_eq(ek, &k)) {
                        Some(slot) => slot.1 = v,
                        None => out.push((k, v)),
                    }
                }
                Value::Dict(Rc::new(RefCell::new(out)))
            }
            Expr::Comprehension { kind, element, target, iter, conds } => {
                let items = self.iterate(&self.eval(iter, locals)?)?;
                let mut scope = locals.clone();
                let mut out = Vec::new();
                'items: for item in items {
                    self.assign(target, item, &mut scope)?;
                    for c in conds {
                        if !self.eval(c, &mut scope)?.truthy() {
                            continue 'items;
                        }
                    }
                    out.push(self.eval(element, &mut scope)?);
                }
                match kind {
                    CompKind::Set => Value::Set(Rc::new(RefCell::new(dedup(out)))),
                    _ => Value::list(out),
                }
            }
        })
    }

    fn get_attr(&self, obj: &Value, attr: &str) -> R<Value> {
        let missing = || Fault::new("AttributeError", format!("'{}' object has no attribute '{attr}'", obj.type_name()));
        match obj {
            Value::Instance(inst) => {
                if let Some(v) = inst.fields.borrow().get(attr) {
                    return Ok(v.clone());
                }
                if let Some(v) = inst.class.attrs.get(attr) {
                    return Ok(v.clone());
                }
                if let Some(m) = inst.class.methods.get(attr) {
                    return Ok(Value::Function(m.clone(), Some(inst.clone())));
                }
                Err(Fault::new("AttributeError", format!("'{}' object has no attribute '{attr}'", inst.class.name)))
            }
            Value::Class(c) => c.attrs.get(attr).cloned().ok_or_else(missing),
            Value::Str(_) => {
                const M: &[&str] = &[
                    "lower",
                    "upper",
                    "strip",
                    "lstrip",
                    "rstrip",
                    "title",
                    "capitalize",
                    "casefold",
                    "startswith",
                    "endswith",
                    "replace",
                    "split",
                    "join",
                    "isdigit",
                    "isalpha",
                    "count",
                    "find",
                ];
                M.iter().find(|m| **m == attr).map(|m| Value::Method(Box::new(obj.clone()), m)).ok_or_else(missing)
            }
            Value::List(_) => {
                const M: &[&str] = &["append", "count", "index", "extend"];
                M.iter().find(|m| **m == attr).map(|m| Value::Method(Box::new(obj.clone()), m)).ok_or_else(missing)
            }
            Value::Tuple(_) => {
                const M: &[&str] = &["count", "index"];
                M.iter().find(|m| **m == attr).map(|m| Value::Method(Box::new(obj.clone()), m)).ok_or_else(missing)
            }
            Value::Set(_) => {
                const M: &[&str] = &["add"];
                M.iter().find(|m| **m == attr).map(|m| Value::Method(Box::new(obj.clone()), m)).ok_or_else(missing)
            }
            Value::Dict(_) => {
                const M: &[&str] = &["get", "keys", "values", "items"];
                M.iter().find(|m| **m == attr).map(|m| Value::Method(Box::new(obj.clone()), m)).ok_or_else(missing)
            }
            Value::Exc(_, msg) if attr == "args" => Ok(Value::Tuple(Rc::new(vec![Value::Str(msg.clone())]))),
            _ => Err(missing()),
        }
    }

    fn call(&self, f: Value, args: Vec<Value>, kwargs: Vec<(String, Value)>) -> R<Value> {
        match f {
            Value::Function(def, recv) => self.call_function(&def, recv, args, kwargs),
            Value::Builtin(name) => self.builtin(name, args, kwargs),
            Value::Method(recv, name) => method(&recv, name, args),
            Value::ExcType(kind) => {
                let msg = args.first().map(Value::to_display).unwrap_or_default();
                Ok(Value::Exc(kind, Rc::from(msg.as_str())))
            }
            Value::Class(class) => {
                let mut fields = BTreeMap::new();
                let mut positional = args.into_iter();
                for (name, default) in &class.defaults {
                    let v = match positional.next() {
                        Some(v) => Some(v),
                        None => match kwargs.iter().find(|(k, _)| k == name) {
                            Some((_, v)) => Some(v.clone()),
                            None => match default {
                                Some(d) => Some(self.eval(d, &mut Locals::new())?),
                                None => None,
                            },
                        },
                    };
                    match v {
                        Some(v) => {
                            fields.insert(name.clone(), v);
                        }
                        None => return Err(Fault::new("TypeError", format!("{}() missing required argument: '{name}'", class.name))),
                    }
                }
                Ok(Value::Instance(Rc::new(Instance { class, fields: RefCell::new(fields) })))
            }
            other => Err(Fault::new("TypeError", format!("'{}' object is not callable", other.type_name()))),
        }
    }

    fn builtin(&self, name: &str, args: Vec<Value>, kwargs: Vec<(String, Value)>) -> R<Value> {
        let arity = |n: usize| -> R<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Fault::new("TypeError", format!("{name}() takes exactly {n} argument(s) ({} given)", args.len())))
            }
        };
        match name {
            "print" => Ok(Value::None),
            "len" => {
                arity(1)?;
                Ok(Value::Int(match &args[0] {
                    Value::Str(s) => s.chars().count() as i64,
                    Value::Range(a, b, s) => range_len(*a, *b, *s),
                    Value::Dict(d) => d.borrow().len() as i64,
                    v @ (Value::List(_) | Value::Tuple(_) | Value::Set(_)) => self.iterate(v)?.len() as i64,
                    other => return Err(Fault::new("TypeError", format!("object of type '{}' has no len()", other.type_name()))),
                }))
            }
            "abs" => {
                arity(1)?;
                match args[0].as_number() {
                    Some(Num::I(i)) => Ok(Value::Int(i.checked_abs().ok_or_else(overflow)?)),
                    Some(Num::F(f)) => Ok(Value::Float(f.abs())),
                    None => Err(Fault::new("TypeError", format!("bad operand type for abs(): '{}'", args[0].type_name()))),
                }
            }
            "min" | "max" => {
                let items = if args.len() == 1 { self.iterate(&args[0])? } else { args };
                let default = kwargs.into_iter().find(|(k, _)| k == "default").map(|(_, v)| v);
                let mut it = items.into_iter();
                let Some(mut best) = it.next() else {
                    return default.ok_or_else(|| Fault::new("ValueError", format!("{name}() arg is an empty sequence")));
                };
                for v in it {
                    let better = if name == "min" { compare(CmpOp::Lt, &v, &best)? } else { compare(CmpOp::Gt, &v, &best)? };
                    if better {
                        best = v;
                    }
                }
                Ok(best)
            }
            "sum" => {
                let mut acc = args.get(1).cloned().unwrap_or(Value::Int(0));
                for v in self.iterate(args.first().ok_or_else(|| Fault::new("TypeError", "sum() takes at least 1 argument"))?)? {
                    acc = self.binary(BinOp::Add, &acc, &v)?;
                }
                Ok(acc)
            }
            "any" => {
                arity(1)?;
                Ok(Value::Bool(self.iterate(&args[0])?.iter().any(Value::truthy)))
            }
            "all" => {
                arity(1)?;
                Ok(Value::Bool(self.iterate(&args[0])?.iter().all(Value::truthy)))
            }
            "bool" => Ok(Value::Bool(args.first().is_some_and(Value::truthy))),
            "int" => match args.first() {
                None => Ok(Value::Int(0)),
                Some(Value::Str(s)) => s.trim().parse::<i64>().map(Value::Int).map_err(|_| {
                    Fault::new("ValueError", format!("invalid literal for int() with base 10: {}", crate::value::python_str(s)))
                }),
                Some(Value::Float(f)) => {
                    if f.is_finite() {
                        Ok(Value::Int(f.trunc() as i64))
                    } else {
                        Err(Fault::new("ValueError", "cannot convert float to integer"))
                    }
                }
                Some(v) => match v.as_number() {
                    Some(Num::I(i)) => Ok(Value::Int(i)),
                    _ => Err(Fault::new("TypeError", format!("int() argument must be a string or a number, not '{}'", v.type_name()))),
                },
            },
            "float" => match args.first() {
                None => Ok(Value::Float(0.0)),
                Some(Value::Str(s)) => {
                    s.trim().parse::<f64>().map(Value::Float).map_err(|_| {
                        Fault::new("ValueError", format!("could not convert string to float: {}", crate::value::python_str(s)))
                    })
                }
                Some(v) => match v.as_number() {
                    Some(n) => Ok(Value::Float(n.f())),
                    None => Err(Fault::new("TypeError", format!("float() argument must be a string or a number, not '{}'", v.type_name()))),
                },
            },
            "str" => Ok(Value::str(&args.first().map(Value::to_display).unwrap_or_default())),
            "round" => {
                let x = args.first().and_then(Value::as_number).ok_or_else(|| Fault::new("TypeError", "round() needs a number"))?;
                match args.get(1) {
                    None => Ok(Value::Int(x.f().round_ties_even() as i64)),
                    Some(Value::Int(d)) => {
                        let p = 10f64.powi(*d as i32);
                        Ok(Value::Float((x.f() * p).round_ties_even() / p))
                    }
                    Some(_) => Err(Fault::new("TypeError", "round() ndigits must be an integer")),
                }
            }
            "range" => {
                let ints = args
                    .iter()
                    .map(|a| match a.as_number() {
                        Some(Num::I(i)) => Ok(i),
                        _ => Err(Fault::new("TypeError", format!("'{}' object cannot be interpreted as an integer", a.type_name()))),
                    })
                    .collect::<R<Vec<_>>>()?;
                match ints.as_slice() {
                    [b] => Ok(Value::Range(0, *b, 1)),
                    [a, b] => Ok(Value::Range(*a, *b, 1)),
                    [_, _, 0] => Err(Fault::new("ValueError", "range() arg 3 must not be zero")),
                    [a, b, s] => Ok(Value::Range(*a, *b, *s)),
                    _ => Err(Fault::new("TypeError", "range expected 1 to 3 arguments")),
                }
            }
            "sorted" => {
                let mut items = self.iterate(args.first().ok_or_else(|| Fault::new("TypeError", "sorted expected 1 argument"))?)?;
                let mut err = None;
                items.sort_by(|a, b| {
                    if compare(CmpOp::Lt, a, b).unwrap_or_else(|e| {
                        err = Some(e);
                        false
                    }) {
                        std::cmp::Ordering::Less
                    } else if compare(CmpOp::Lt, b, a).unwrap_or(false) {
                        std::cmp::Ordering::Greater
                    } else {
                        std::cmp::Ordering::Equal
                    }
                });
                if let Some(e) = err {
                    return Err(e);
                }
                if kwargs.iter().any(|(k, v)| k == "reverse" && v.truthy()) {
                    items.reverse();
                }
                Ok(Value::list(items))
            }
            "list" => Ok(Value::list(match args.first() {
                Some(v) => self.iterate(v)?,
                None => Vec::new(),
            })),
            "tuple" => Ok(Value::Tuple(Rc::new(match args.first() {
                Some(v) => self.iterate(v)?,
                None => Vec::new(),
            }))),
            "set" => Ok(Value::Set(Rc::new(RefCell::new(dedup(match args.first() {
                Some(v) => self.iterate(v)?,
                None => Vec::new(),
            }))))),
            "dict" => {
                let mut out: Vec<(Value, Value)> = Vec::new();
                if let Some(v) = args.first() {
                    for pair in self.iterate(v)? {
                        let kv = self.iterate(&pair)?;
                        if kv.len() != 2 {
                            return Err(Fault::new("ValueError", "dictionary update sequence element has wrong length"));
                        }
                        out.push((kv[0].clone(), kv[1].clone()));
                    }
                }
                for (k, v) in kwargs {
                    out.push((Value::str(&k), v));
                }
                Ok(Value::Dict(Rc::new(RefCell::new(out))))
            }
            "enumerate" => {
                let start = match args.get(1) {
                    Some(Value::Int(i)) => *i,
                    _ => 0,
                };
                let items = self.iterate(args.first().ok_or_else(|| Fault::new("TypeError", "enumerate expected 1 argument"))?)?;
                Ok(Value::list(
                    items.into_iter().enumerate().map(|(i, v)| Value::Tuple(Rc::new(vec![Value::Int(start + i as i64), v]))).collect(),
                ))
            }
            "zip" => {
                let lists = args.iter().map(|a| self.iterate(a)).collect::<R<Vec<_>>>()?;
                let n = lists.iter().map(Vec::len).min().unwrap_or(0);
                Ok(Value::list((0..n).map(|i| Value::Tuple(Rc::new(lists.iter().map(|l| l[i].clone()).collect()))).collect()))
            }
            "isinstance" => {
                arity(2)?;
                let names: Vec<String> = match &args[1] {
                    Value::Builtin(b) => vec![b.to_string()],
                    Value::Class(c) => vec![c.name.clone()],
                    Value::ExcType(e) => vec![e.to_string()],
                    Value::Tuple(items) => items
                        .iter()
                        .filter_map(|i| match i {
                            Value::Builtin(b) => Some(b.to_string()),
                            Value::Class(c) => Some(c.name.clone()),
                            _ => None,
                        })
                        .collect(),
                    _ => return Err(Fault::new("TypeError", "isinstance() arg 2 must be a type")),
                };
                let v = &args[0];
                Ok(Value::Bool(names.iter().any(|n| match (n.as_str(), v) {
                    ("int", Value::Int(_) | Value::Bool(_)) => true,
                    ("float", Value::Float(_)) => true,
                    ("bool", Value::Bool(_)) => true,
                    (n, Value::Instance(i)) => i.class.name == n,
                    (n, v) => v.type_name() == n,
                })))
            }
            "getattr" => {
                let (obj, Some(Value::Str(attr))) = (args.first(), args.get(1)) else {
                    return Err(Fault::new("TypeError", "getattr(): attribute name must be string"));
                };
                let obj = obj.ok_or_else(|| Fault::new("TypeError", "getattr expected at least 2 arguments"))?;
                match self.get_attr(obj, attr) {
                    Ok(v) => Ok(v),
                    Err(e) if e.kind == "AttributeError" && args.len() == 3 => Ok(args[2].clone()),
                    Err(e) => Err(e),
                }
            }
            "hasattr" => {
                arity(2)?;
                let Value::Str(attr) = &args[1] else {
                    return Err(Fault::new("TypeError", "hasattr(): attribute name must be string"));
                };
                Ok(Value::Bool(self.get_attr(&args[0], attr).is_ok()))
            }
            other => Err(Fault::new("NameError", format!("name '{other}' is not defined"))),
        }
    }

    fn iterate(&self, v: &Value) -> R<Vec<Value>> {
        Ok(match v {
            Value::List(l) | Value::Set(l) => l.borrow().clone(),
            Value::Tuple(t) => t.as_ref().clone(),
            Value::Dict(d) => d.borrow().iter().map(|(k, _)| k.clone()).collect(),
            Value::Str(s) => s.chars().map(|c| Value::str(&c.to_string())).collect(),
            Value::Range(a, b, s) => {
                let n = range_len(*a, *b, *s);
                if n > self.limit as i64 {
                    return Err(Fault::new(TIMEOUT, "step budget exhausted"));
                }
                (0..n).map(|i| Value::Int(a + i * s)).collect()
            }
            other => return Err(Fault::new("TypeError", format!("'{}' object is not iterable", other.type_name()))),
        })
    }

    fn subscript(&self, obj: &Value, idx: &Value) -> R<Value> {
        match obj {
            Value::List(l) => {
                let l = l.borrow();
                Ok(l[normalize_index(idx, l.len())?].clone())
            }
            Value::Tuple(t) => Ok(t[normalize_index(idx, t.len())?].clone()),
            Value::Str(s) => {
                let chars: Vec<char> = s.chars().collect();
                Ok(Value::str(&chars[normalize_index(idx, chars.len())?].to_string()))
            }
            Value::Dict(d) => {
                d.borrow().iter().find(|(k, _)| py_eq(k, idx)).map(|(_, v)| v.clone()).ok_or_else(|| Fault::new("KeyError", idx.repr()))
            }
            other => Err(Fault::new("TypeError", format!("'{}' object is not subscriptable", other.type_name()))),
        }
    }

    fn binary(&self, op: BinOp, l: &Value, r: &Value) -> R<Value> {
        if let (Some(a), Some(b)) = (l.as_number(), r.as_number()) {
            return arith(op, a, b);
        }
        match (op, l, r) {
            (BinOp::Add, Value::Str(a), Value::Str(b)) => Ok(Value::str(&format!("{a}{b}"))),
            (BinOp::Add, Value::List(a), Value::List(b)) => Ok(Value::list(a.borrow().iter().chain(b.borrow().iter()).cloned().collect())),
            (BinOp::Add, Value::Tuple(a), Value::Tuple(b)) => Ok(Value::Tuple(Rc::new(a.iter().chain(b.iter()).cloned().collect()))),
            (BinOp::Mul, Value::Str(s), Value::Int(n)) | (BinOp::Mul, Value::Int(n), Value::Str(s)) => {
                if *n > 10_000 {
                    return Err(Fault::new("MemoryError", "string too large"));
                }
                Ok(Value::str(&s.repeat((*n).max(0) as usize)))
            }
            (BinOp::Mod, Value::Str(_), _) => Err(Fault::new("NotImplementedError", "%-formatting is not supported")),
            (BinOp::BitOr, Value::Set(a), Value::Set(b)) => {
                Ok(Value::Set(Rc::new(RefCell::new(dedup(a.borrow().iter().chain(b.borrow().iter()).cloned().collect())))))
            }
            (BinOp::BitAnd, Value::Set(a), Value::Set(b)) => {
                let b = b.borrow();
                Ok(Value::Set(Rc::new(RefCell::new(a.borrow().iter().filter(|x| b.iter().any(|y| py_eq(x, y))).cloned().collect()))))
            }
            (BinOp::Sub, Value::Set(a), Value::Set(b)) => {
                let b = b.borrow();
                Ok(Value::Set(Rc::new(RefCell::new(a.borrow().iter().filter(|x| !b.iter().any(|y| py_eq(x, y))).cloned().collect()))))
            }
            _ => Err(Fault::new(
                "TypeError",
                format!("unsupported operand type(s) for {}: '{}' and '{}'", op_symbol(op), l.type_name(), r.type_name()),
            )),
        }
    }
}

fn overflow() -> Fault {
    Fault::new("OverflowError", "integer overflow")
}

fn op_symbol(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "*",
        BinOp::Div => "/",
        BinOp::FloorDiv => "//",
        BinOp::Mod => "%",
        BinOp::Pow => "**",
        BinOp::BitAnd => "&",
        BinOp::BitOr => "|",
        BinOp::BitXor => "^",
    }
}

fn arith(op: BinOp, a: Num, b: Num) -> R<Value> {
    let zero = || Fault::new("ZeroDivisionError", "division by zero");
    match (a, b) {
        (Num::I(x), Num::I(y)) => match op {
            BinOp::Add => x.checked_add(y).map(Value::Int).ok_or_else(overflow),
            BinOp::Sub => x.checked_sub(y).map(Value::Int).ok_or_else(overflow),
            BinOp::Mul => x.checked_mul(y).map(Value::Int).ok_or_else(overflow),
            BinOp::Div => {
                if y == 0 {
                    Err(zero())
                } else {
                    Ok(Value::Float(x as f64 / y as f64))
                }
            }
            BinOp::FloorDiv => {
                if y == 0 {
                    Err(zero())
                } else {
                    Ok(Value::Int(x.div_euclid(y) - if y < 0 && x.rem_euclid(y) != 0 { 1 } else { 0 }))
                }
            }
            BinOp::Mod => {
                if y == 0 {
                    Err(zero())
                } else {
                    let m = x % y;
                    Ok(Value::Int(if m != 0 && (m < 0) != (y < 0) { m + y } else { m }))
                }
            }
            BinOp::Pow => {
                if y < 0 {
                    Ok(Value::Float((x as f64).powf(y as f64)))
                } else {
                    u32::try_from(y).ok().and_then(|e| x.checked_pow(e)).map(Value::Int).ok_or_else(overflow)
                }
            }
            BinOp::BitAnd => Ok(Value::Int(x & y)),
            BinOp::BitOr => Ok(Value::Int(x | y)),
            BinOp::BitXor => Ok(Value::Int(x ^ y)),
        },
        (a, b) => {
            let (x, y) = (a.f(), b.f());
            match op {
                BinOp::Add => Ok(Value::Float(x + y)),
                BinOp::Sub => Ok(Value::Float(x - y)),
                BinOp::Mul => Ok(Value::Float(x * y)),
                BinOp::Div => {
                    if y == 0.0 {
                        Err(Fault::new("ZeroDivisionError", "float division by zero"))
                    } else {
                        Ok(Value::Float(x / y))
                    }
                }
                BinOp::FloorDiv => {
                    if y == 0.0 {
                        Err(Fault::new("ZeroDivisionError", "float floor division by zero"))
                    } else {
                        Ok(Value::Float((x / y).floor()))
                    }
                }
                BinOp::Mod => {
                    if y == 0.0 {
                        Err(Fault::new("ZeroDivisionError", "float modulo"))
                    } else {
                        let m = x % y;
                        Ok(Value::Float(if m != 0.0 && (m < 0.0) != (y < 0.0) { m + y } else { m }))
                    }
                }
                BinOp::Pow => Ok(Value::Float(x.powf(y))),
                _ => Err(Fault::new("TypeError", format!("unsupported operand type(s) for {}: 'float'", op_symbol(op)))),
            }
        }
    }
}

fn normalize_index(idx: &Value, len: usize) -> R<usize> {
    let i = match idx.as_number() {
        Some(Num::I(i)) => i,
        _ => return Err(Fault::new("TypeError", format!("indices must be integers, not {}", idx.type_name()))),
    };
    let pos = if i < 0 { len as i64 + i } else { i };
    if pos < 0 || pos >= len as i64 {
        return Err(Fault::new("IndexError", "index out of range"));
    }
    Ok(pos as usize)
}

fn slice(v: &Value, lo: Option<i64>, hi: Option<i64>, step: i64) -> R<Value> {
    if step == 0 {
        return Err(Fault::new("ValueError", "slice step cannot be zero"));
    }
    let pick = |len: usize| -> Vec<usize> {
        let len = len as i64;
        let clamp = |x: i64, lo: i64, hi: i64| x.max(lo).min(hi);
        let norm = |x: i64| if x < 0 { x + len } else { x };
        let mut out = Vec::new();
        if step > 0 {
            let start = clamp(lo.map(norm).unwrap_or(0), 0, len);
            let stop = clamp(hi.map(norm).unwrap_or(len), 0, len);
            let mut i = start;
            while i < stop {
                out.push(i as usize);
                i += step;
            }
        } else {
            let start = clamp(lo.map(norm).unwrap_or(len - 1), -1, len - 1);
            let stop = clamp(hi.map(norm).unwrap_or(-1), -1, len - 1);
            let mut i = start;
            while i > stop {
                out.push(i as usize);
                i += step;
            }
        }
        out
    };
    match v {
        Value::List(l) => {
            let l = l.borrow();
            Ok(Value::list(pick(l.len()).into_iter().map(|i| l[i].clone()).collect()))
        }
        Value::Tuple(t) => Ok(Value::Tuple(Rc::new(pick(t.len()).into_iter().map(|i| t[i].clone()).collect()))),
        Value::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            Ok(Value::str(&pick(chars.len()).into_iter().map(|i| chars[i]).collect::<String>()))
        }
        other => Err(Fault::new("TypeError", format!("'{}' object is not subscriptable", other.type_name()))),
    }
}

fn dedup(vals: Vec<Value>) -> Vec<Value> {
    let mut out: Vec<Value> = Vec::with_capacity(vals.len());
    for v in vals {
        if !out.iter().any(|o| py_eq(o, &v)) {
            out.push(v);
        }
    }
    out
}

pub(crate) fn py_eq(a: &Value, b: &Value) -> bool {
    if let (Some(x), Some(y)) = (a.as_number(), b.as_number()) {
        return match (x, y) {
            (Num::I(x), Num::I(y)) => x == y,
            (x, y) => x.f() == y.f(),
        };
    }
    match (a, b) {
        (Value::None, Value::None) => true,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::List(x), Value::List(y)) => seq_eq(&x.borrow(), &y.borrow()),
        (Value::Tuple(x), Value::Tuple(y)) => seq_eq(x, y),
        (Value::Set(x), Value::Set(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len() && x.iter().all(|v| y.iter().any(|w| py_eq(v, w)))
        }
        (Value::Dict(x), Value::Dict(y)) => {
            let (x, y) = (x.borrow(), y.borrow());
            x.len() == y.len() && x.iter().all(|(k, v)| y.iter().any(|(k2, v2)| py_eq(k, k2) && py_eq(v, v2)))
        }
        (Value::Range(a, b, c), Value::Range(d, e, f)) => (a, b, c) == (d, e, f),
        (Value::Instance(x), Value::Instance(y)) => Rc::ptr_eq(x, y),
        (Value::ExcType(x), Value::ExcType(y)) => x == y,
        (Value::Builtin(x), Value::Builtin(y)) => x == y,
        _ => false,
    }
}

fn seq_eq(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| py_eq(x, y))
}

fn compare(op: CmpOp, l: &Value, r: &Value) -> R<bool> {
    match op {
        CmpOp::Eq => Ok(py_eq(l, r)),
        CmpOp::NotEq => Ok(!py_eq(l, r)),
        CmpOp::Is => Ok(match (l, r) {
            (Value::None, Value::None) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Instance(a), Value::Instance(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }),
        CmpOp::IsNot => compare(CmpOp::Is, l, r).map(|b| !b),
        CmpOp::In | CmpOp::NotIn => {
            let found = match r {
                Value::Str(hay) => match l {
                    Value::Str(needle) => hay.contains(needle.as_ref()),
                    other => {
                        return Err(Fault::new(
                            "TypeError",
                            format!("'in <string>' requires string as left operand, not {}", other.type_name()),
                        ))
                    }
                },
                Value::List(v) | Value::Set(v) => v.borrow().iter().any(|x| py_eq(x, l)),
                Value::Tuple(v) => v.iter().any(|x| py_eq(x, l)),
                Value::Dict(d) => d.borrow().iter().any(|(k, _)| py_eq(k, l)),
                Value::Range(a, b, s) => match l.as_number() {
                    Some(Num::I(x)) => {
                        let n = range_len(*a, *b, *s);
                        n > 0 && (x - a) % s == 0 && (x - a) / s >= 0 && (x - a) / s < n
                    }
                    _ => false,
                },
                other => return Err(Fault::new("TypeError", format!("argument of type '{}' is not iterable", other.type_name()))),
            };
            Ok(if op == CmpOp::In { found } else { !found })
        }
        CmpOp::Lt | CmpOp::LtE | CmpOp::Gt | CmpOp::GtE => {
            let ord = order(l, r).ok_or_else(|| {
                let sym = match op {
                    CmpOp::Lt => "<",
                    CmpOp::LtE => "<=",
                    CmpOp::Gt => ">",
                    _ => ">=",
                };
                Fault::new("TypeError", format!("'{sym}' not supported between instances of '{}' and '{}'", l.type_name(), r.type_name()))
            })?;
            use std::cmp::Ordering::*;
            Ok(match op {
                CmpOp::Lt => ord == Less,
                CmpOp::LtE => ord != Greater,
                CmpOp::Gt => ord == Greater,
                _ => ord != Less,
            })
        }
    }
}

fn order(l: &Value, r: &Value) -> Option<std::cmp::Ordering> {
    if let (Some(x), Some(y)) = (l.as_number(), r.as_number()) {
        return match (x, y) {
            (Num::I(x), Num::I(y)) => Some(x.cmp(&y)),
            (x, y) => x.f().partial_cmp(&y.f()),
        };
    }
    match (l, r) {
        (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
        (Value::List(a), Value::List(b)) => seq_order(&a.borrow(), &b.borrow()),
        (Value::Tuple(a), Value::Tuple(b)) => seq_order(a, b),
        _ => None,
    }
}

fn seq_order(a: &[Value], b: &[Value]) -> Option<std::cmp::Ordering> {
    for (x, y) in a.iter().zip(b) {
        if !py_eq(x, y) {
            return order(x, y);
        }
    }
    Some(a.len().cmp(&b.len()))
}

fn method(recv: &Value, name: &str, args: Vec<Value>) -> R<Value> {
    let arg_str = |i: usize| -> R<Rc<str>> {
        match args.get(i) {
            Some(Value::Str(s)) => Ok(s.clone()),
            Some(other) => Err(Fault::new("TypeError", format!("{name}() argument must be str, not {}", other.type_name()))),
            None => Err(Fault::new("TypeError", format!("{name}() takes at least {} argument(s)", i + 1))),
        }
    };
    match recv {
        Value::Str(s) => Ok(match name {
            "lower" | "casefold" => Value::str(&s.to_lowercase()),
            "upper" => Value::str(&s.to_uppercase()),
            "strip" => Value::str(s.trim()),
            "lstrip" => Value::str(s.trim_start()),
            "rstrip" => Value::str(s.trim_end()),
            "title" => Value::str(
                &s.split(' ')
                    .map(|w| {
                        let mut c = w.chars();
                        match c.next() {
                            Some(f) => f.to_uppercase().collect::<String>() + &c.as_str().to_lowercase(),
                            None => String::new(),
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" "),
            ),
            "capitalize" => {
                let mut c = s.chars();
                Value::str(&match c.next() {
                    Some(f) => f.to_uppercase().collect::<String>() + &c.as_str().to_lowercase(),
                    None => String::new(),
                })
            }
            "startswith" => match args.first() {
                Some(Value::Tuple(t)) => Value::Bool(t.iter().any(|p| matches!(p, Value::Str(p) if s.starts_with(p.as_ref())))),
                _ => Value::Bool(s.starts_with(arg_str(0)?.as_ref())),
            },
            "endswith" => match args.first() {
                Some(Value::Tuple(t)) => Value::Bool(t.iter().any(|p| matches!(p, Value::Str(p) if s.ends_with(p.as_ref())))),
                _ => Value::Bool(s.ends_with(arg_str(0)?.as_ref())),
            },
            "replace" => Value::str(&s.replace(arg_str(0)?.as_ref(), arg_str(1)?.as_ref())),
            "split" => {
                let parts: Vec<Value> = match args.first() {
                    None | Some(Value::None) => s.split_whitespace().map(Value::str).collect(),
                    Some(_) => s.split(arg_str(0)?.as_ref()).map(Value::str).collect(),
                };
                Value::list(parts)
            }
            "join" => {
                let items = match args.first() {
                    Some(Value::List(l)) => l.borrow().clone(),
                    Some(Value::Tuple(t)) => t.as_ref().clone(),
                    _ => return Err(Fault::new("TypeError", "join() argument must be a list or tuple")),
                };
                let parts = items
                    .iter()
                    .map(|v| match v {
                        Value::Str(x) => Ok(x.to_string()),
                        other => Err(Fault::new("TypeError", format!("sequence item: expected str instance, {} found", other.type_name()))),
                    })
                    .collect::<R<Vec<_>>>()?;
                Value::str(&parts.join(s))
            }
            "isdigit" => Value::Bool(!s.is_empty() && s.chars().all(|c| c.is_ascii_digit())),
            "isalpha" => Value::Bool(!s.is_empty() && s.chars().all(char::is_alphabetic)),
            "count" => Value::Int(s.matches(arg_str(0)?.as_ref()).count() as i64),
            "find" => Value::Int(s.find(arg_str(0)?.as_ref()).map(|i| s[..i].chars().count() as i64).unwrap_or(-1)),
            _ => unreachable!("unknown str method"),
        }),
        Value::List(l) => match name {
            "append" => {
                l.borrow_mut().push(args.into_iter().next().ok_or_else(|| Fault::new("TypeError", "append() takes exactly one argument"))?);
                Ok(Value::None)
            }
            "extend" => {
                let more = match args.first() {
                    Some(Value::List(m)) => m.borrow().clone(),
                    Some(Value::Tuple(t)) => t.as_ref().clone(),
                    _ => return Err(Fault::new("TypeError", "extend() argument must be iterable")),
                };
                l.borrow_mut().extend(more);
                Ok(Value::None)
            }
            _ => seq_method(&l.borrow(), name, &args),
        },
        Value::Tuple(t) => seq_method(t, name, &args),
        Value::Set(s) => {
            let v = args.into_iter().next().ok_or_else(|| Fault::new("TypeError", "add() takes exactly one argument"))?;
            let mut s = s.borrow_mut();
            if !s.iter().any(|x| py_eq(x, &v)) {
                s.push(v);
            }
            Ok(Value::None)
        }
        Value::Dict(d) => {
            let d = d.borrow();
            Ok(match name {
                "get" => {
                    let key = args.first().ok_or_else(|| Fault::new("TypeError", "get expected at least 1 argument"))?;
                    d.iter()
                        .find(|(k, _)| py_eq(k, key))
                        .map(|(_, v)| v.clone())
                        .unwrap_or_else(|| args.get(1).cloned().unwrap_or(Value::None))
                }
                "keys" => Value::list(d.iter().map(|(k, _)| k.clone()).collect()),
                "values" => Value::list(d.iter().map(|(_, v)| v.clone()).collect()),
                _ => Value::list(d.iter().map(|(k, v)| Value::Tuple(Rc::new(vec![k.clone(), v.clone()]))).collect()),
            })
        }
        other => Err(Fault::new("AttributeError", format!("'{}' object has no attribute '{name}'", other.type_name()))),
    }
}

fn seq_method(items: &[Value], name: &str, args: &[Value]) -> R<Value> {
    let needle = args.first().ok_or_else(|| Fault::new("TypeError", format!("{name}() takes exactly one argument")))?;
    match name {
        "count" => Ok(Value::Int(items.iter().filter(|x| py_eq(x, needle)).count() as i64)),
        _ => items
            .iter()
            .position(|x| py_eq(x, needle))
            .map(|i| Value::Int(i as i64))
            .ok_or_else(|| Fault::new("ValueError", format!("{} is not in list", needle.repr()))),
    }
}
