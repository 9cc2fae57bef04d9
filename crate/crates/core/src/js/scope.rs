//! Scope construction and name resolution.
//!
//! Builds a [`ScopeTree`] from the parsed program, declares every local
//! binding with the appropriate hoisting (`var` and function declarations to
//! the enclosing function scope, `let`/`const` to the enclosing block), and
//! resolves every identifier reference to a binding or to `GLOBAL`.
//!
//! The program scope acts as the outermost function scope: `var`, `let` and
//! `const` declared there are local names. Function declarations at program
//! scope are the file's globally visible entry points and stay global, as do
//! all undeclared references. Property names and object keys never resolve.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{BindingId, Token};
use crate::error::{Error, Result};

/// Index of a scope in its [`ScopeTree`].
pub type ScopeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScopeKind {
    /// Outermost scope of the file.
    Program,
    /// Scope of a function declaration or expression.
    Function,
    /// Block scope: `{}`, the head+body of a `for`, or a `switch` body.
    Block,
    /// Scope introduced by a `catch` parameter.
    Catch,
}

/// How a binding was introduced. `var`-likes merge on redeclaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingKind {
    Var,
    Let,
    Const,
    Param,
    Func,
    FuncExprName,
    CatchParam,
}

impl BindingKind {
    fn var_like(self) -> bool {
        matches!(self, BindingKind::Var | BindingKind::Param | BindingKind::Func)
    }
}

/// A resolved local declaration together with all its occurrence tokens.
#[derive(Debug, Clone)]
pub struct Binding {
    pub id: BindingId,
    /// Surface name at analysis time (the minified name in minified code).
    pub name: String,
    /// Scope the binding is declared in.
    pub scope: ScopeId,
    pub kind: BindingKind,
    /// First declaration token.
    pub decl_token: usize,
    /// Every identifier token of this binding (declaration included), in
    /// stream order. Parallel to `occurrence_scopes`.
    pub occurrences: Vec<usize>,
    pub occurrence_scopes: Vec<ScopeId>,
}

/// A reference that did not resolve to any local declaration.
#[derive(Debug, Clone)]
pub struct GlobalRef {
    pub name: String,
    pub token: usize,
    pub scope: ScopeId,
}

#[derive(Debug)]
pub struct Scope {
    pub parent: Option<ScopeId>,
    pub kind: ScopeKind,
    /// `/`-joined chain of child ordinals from the root, e.g. `0/2/1`.
    pub path: String,
    /// Bindings declared here, in declaration order.
    pub decl_order: Vec<BindingId>,
    by_name: HashMap<String, BindingId>,
    pub children: Vec<ScopeId>,
}

/// The scope tree plus all bindings and unresolved references of one file.
#[derive(Debug)]
pub struct ScopeTree {
    scopes: Vec<Scope>,
    bindings: Vec<Binding>,
    global_refs: Vec<GlobalRef>,
}

impl ScopeTree {
    pub fn scopes(&self) -> &[Scope] {
        &self.scopes
    }

    pub fn scope(&self, id: ScopeId) -> &Scope {
        &self.scopes[id]
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn binding(&self, id: BindingId) -> &Binding {
        &self.bindings[id]
    }

    pub fn global_refs(&self) -> &[GlobalRef] {
        &self.global_refs
    }

    pub fn path(&self, id: ScopeId) -> &str {
        &self.scopes[id].path
    }

    /// True when `a` is `b` or an ancestor of `b`.
    pub fn is_ancestor_or_self(&self, a: ScopeId, b: ScopeId) -> bool {
        let mut cur = Some(b);
        while let Some(s) = cur {
            if s == a {
                return true;
            }
            cur = self.scopes[s].parent;
        }
        false
    }

    /// Looks a binding up by its declaring scope path and surface name.
    pub fn lookup(&self, scope_path: &str, name: &str) -> Option<BindingId> {
        let scope = self.scopes.iter().position(|s| s.path == scope_path)?;
        self.scopes[scope].by_name.get(name).copied()
    }
}

/// A local name paired with its declaring scope; equality is binding identity.
#[derive(Debug, Clone)]
pub struct ScopedName {
    pub name: String,
    pub scope: ScopeId,
    pub binding: BindingId,
}

impl PartialEq for ScopedName {
    fn eq(&self, other: &Self) -> bool {
        self.binding == other.binding
    }
}
impl Eq for ScopedName {}
impl std::hash::Hash for ScopedName {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.binding.hash(state);
    }
}
impl PartialOrd for ScopedName {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ScopedName {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.binding.cmp(&other.binding)
    }
}

/// Full analysis of one file: annotated tokens, the scope tree, and the set
/// of local names in declaration order.
#[derive(Debug)]
pub struct Analysis {
    pub tokens: Vec<Token>,
    pub scopes: ScopeTree,
    pub names: Vec<ScopedName>,
}

impl Analysis {
    /// Local names ordered by their first occurrence in the token stream.
    pub fn names_by_first_occurrence(&self) -> Vec<ScopedName> {
        let mut names = self.names.clone();
        names.sort_by_key(|n| self.scopes.binding(n.binding).occurrences[0]);
        names
    }
}

/// Parses the token stream and resolves every local name.
///
/// Returns the annotated tokens (identifier occurrences of locals carry their
/// binding id), the scope tree, and the set of local names.
pub fn resolve_local_names(tokens: Vec<Token>) -> Result<Analysis> {
    let program = super::parser::parse(&tokens)?;
    let mut analyzer = Analyzer {
        tokens,
        scopes: vec![Scope {
            parent: None,
            kind: ScopeKind::Program,
            path: "0".to_string(),
            decl_order: Vec::new(),
            by_name: HashMap::new(),
            children: Vec::new(),
        }],
        bindings: Vec::new(),
        global_refs: Vec::new(),
        stack: vec![0],
    };
    analyzer.hoist_function_scope(0, &program.body, &[])?;
    for stmt in &program.body {
        analyzer.walk_stmt(stmt)?;
    }
    let names = analyzer
        .bindings
        .iter()
        .map(|b| ScopedName { name: b.name.clone(), scope: b.scope, binding: b.id })
        .collect();
    Ok(Analysis {
        tokens: analyzer.tokens,
        scopes: ScopeTree {
            scopes: analyzer.scopes,
            bindings: analyzer.bindings,
            global_refs: analyzer.global_refs,
        },
        names,
    })
}

/// Convenience wrapper: lex then resolve.
pub fn analyze(source: &str) -> Result<Analysis> {
    resolve_local_names(super::lexer::tokenize(source)?)
}

struct Analyzer {
    tokens: Vec<Token>,
    scopes: Vec<Scope>,
    bindings: Vec<Binding>,
    global_refs: Vec<GlobalRef>,
    stack: Vec<ScopeId>,
}

impl Analyzer {
    fn current(&self) -> ScopeId {
        *self.stack.last().unwrap()
    }

    fn new_scope(&mut self, kind: ScopeKind) -> ScopeId {
        let parent = self.current();
        let ordinal = self.scopes[parent].children.len();
        let path = format!("{}/{}", self.scopes[parent].path, ordinal);
        let id = self.scopes.len();
        self.scopes.push(Scope {
            parent: Some(parent),
            kind,
            path,
            decl_order: Vec::new(),
            by_name: HashMap::new(),
            children: Vec::new(),
        });
        self.scopes[parent].children.push(id);
        id
    }

    fn declare(&mut self, scope: ScopeId, name_tok: TokIdx, kind: BindingKind) -> Result<()> {
        let name = self.tokens[name_tok].text.clone();
        if let Some(&existing) = self.scopes[scope].by_name.get(&name) {
            let existing_kind = self.bindings[existing].kind;
            if kind.var_like() && existing_kind.var_like() {
                // `var x; var x;` and `function f(a){var a;}` merge into one
                // binding; the extra declaration token is another occurrence.
                self.record_occurrence(existing, name_tok, scope);
                return Ok(());
            }
            return Err(Error::Parse {
                offset: self.tokens[name_tok].span.0,
                message: format!("redeclaration of `{name}`"),
            });
        }
        let id = self.bindings.len();
        self.bindings.push(Binding {
            id,
            name: name.clone(),
            scope,
            kind,
            decl_token: name_tok,
            occurrences: Vec::new(),
            occurrence_scopes: Vec::new(),
        });
        self.scopes[scope].by_name.insert(name, id);
        self.scopes[scope].decl_order.push(id);
        self.record_occurrence(id, name_tok, scope);
        Ok(())
    }

    fn record_occurrence(&mut self, binding: BindingId, tok: TokIdx, scope: ScopeId) {
        self.tokens[tok].binding = Some(binding);
        let b = &mut self.bindings[binding];
        b.occurrences.push(tok);
        b.occurrence_scopes.push(scope);
    }

    /// Hoisted declarations record their declaring scope at hoist time; once
    /// the walk reaches the declaration site, the occurrence is re-pinned to
    /// the scope the token physically sits in (they differ for `var` inside a
    /// block), which is what capture checks need.
    fn fix_occurrence_scope(&mut self, tok: TokIdx) {
        if let Some(b) = self.tokens[tok].binding {
            let here = self.current();
            let binding = &mut self.bindings[b];
            if let Some(i) = binding.occurrences.iter().position(|&t| t == tok) {
                binding.occurrence_scopes[i] = here;
            }
        }
    }

    /// Resolves an identifier token through the scope chain.
    fn resolve_ident(&mut self, tok: TokIdx) {
        let name = &self.tokens[tok].text;
        for &scope in self.stack.iter().rev() {
            if let Some(&binding) = self.scopes[scope].by_name.get(name) {
                let here = self.current();
                self.record_occurrence(binding, tok, here);
                return;
            }
        }
        self.global_refs.push(GlobalRef {
            name: name.clone(),
            token: tok,
            scope: self.current(),
        });
    }

    // ── Hoisting ────────────────────────────────────────────────────────────

    /// Declares everything belonging to a function-level scope: parameters,
    /// deep-scanned `var` and `function` declarations, and shallow `let`/
    /// `const`. At program scope, function declarations stay global.
    fn hoist_function_scope(
        &mut self,
        scope: ScopeId,
        body: &[Stmt],
        params: &[TokIdx],
    ) -> Result<()> {
        for &p in params {
            self.declare(scope, p, BindingKind::Param)?;
        }
        let top_level = self.scopes[scope].kind == ScopeKind::Program;
        self.hoist_vars_deep(scope, body, top_level)?;
        self.hoist_lexical_shallow(scope, body)?;
        Ok(())
    }

    /// Deep scan for `var` declarators and function declarations, stopping at
    /// nested function boundaries. `skip_funcs` leaves top-level function
    /// names undeclared (they are globally visible).
    fn hoist_vars_deep(&mut self, scope: ScopeId, stmts: &[Stmt], skip_funcs: bool) -> Result<()> {
        for stmt in stmts {
            self.hoist_vars_stmt(scope, stmt, skip_funcs)?;
        }
        Ok(())
    }

    fn hoist_vars_stmt(&mut self, scope: ScopeId, stmt: &Stmt, skip_funcs: bool) -> Result<()> {
        match stmt {
            Stmt::Var { kind: DeclKind::Var, decls } => {
                for d in decls {
                    self.declare(scope, d.name, BindingKind::Var)?;
                }
            }
            Stmt::Var { .. } => {}
            Stmt::Func(f) => {
                if !skip_funcs {
                    self.declare(scope, f.name, BindingKind::Func)?;
                }
            }
            Stmt::Block(body) => self.hoist_vars_deep(scope, body, skip_funcs)?,
            Stmt::If { cons, alt, .. } => {
                self.hoist_vars_stmt(scope, cons, skip_funcs)?;
                if let Some(alt) = alt {
                    self.hoist_vars_stmt(scope, alt, skip_funcs)?;
                }
            }
            Stmt::While { body, .. } | Stmt::DoWhile { body, .. } | Stmt::Labeled { body, .. } => {
                self.hoist_vars_stmt(scope, body, skip_funcs)?;
            }
            Stmt::For { init, body, .. } => {
                if let Some(ForInit::Decl { kind: DeclKind::Var, decls }) = init {
                    for d in decls {
                        self.declare(scope, d.name, BindingKind::Var)?;
                    }
                }
                self.hoist_vars_stmt(scope, body, skip_funcs)?;
            }
            Stmt::ForIn { left, body, .. } => {
                if let ForInLeft::Decl { kind: DeclKind::Var, name } = left {
                    self.declare(scope, *name, BindingKind::Var)?;
                }
                self.hoist_vars_stmt(scope, body, skip_funcs)?;
            }
            Stmt::Switch { cases, .. } => {
                for c in cases {
                    self.hoist_vars_deep(scope, &c.body, skip_funcs)?;
                }
            }
            Stmt::Try { block, handler, finalizer } => {
                self.hoist_vars_deep(scope, block, skip_funcs)?;
                if let Some(h) = handler {
                    self.hoist_vars_deep(scope, &h.body, skip_funcs)?;
                }
                if let Some(f) = finalizer {
                    self.hoist_vars_deep(scope, f, skip_funcs)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Declares the `let`/`const` declarators appearing directly in a scope's
    /// statement list.
    fn hoist_lexical_shallow(&mut self, scope: ScopeId, stmts: &[Stmt]) -> Result<()> {
        for stmt in stmts {
            if let Stmt::Var { kind, decls } = stmt {
                if matches!(kind, DeclKind::Let | DeclKind::Const) {
                    let bk = if *kind == DeclKind::Let { BindingKind::Let } else { BindingKind::Const };
                    for d in decls {
                        self.declare(scope, d.name, bk)?;
                    }
                }
            }
        }
        Ok(())
    }

    // ── Walking ─────────────────────────────────────────────────────────────

    fn walk_function(
        &mut self,
        name: Option<(TokIdx, BindingKind)>,
        params: &[TokIdx],
        body: &[Stmt],
    ) -> Result<()> {
        let scope = self.new_scope(ScopeKind::Function);
        self.stack.push(scope);
        if let Some((tok, kind)) = name {
            self.declare(scope, tok, kind)?;
        }
        self.hoist_function_scope(scope, body, params)?;
        for stmt in body {
            self.walk_stmt(stmt)?;
        }
        self.stack.pop();
        Ok(())
    }

    fn walk_stmt(&mut self, stmt: &Stmt) -> Result<()> {
        match stmt {
            Stmt::Var { decls, .. } => {
                for d in decls {
                    // Declared during hoisting; the name token is already an
                    // occurrence. Only initializers are walked here.
                    self.fix_occurrence_scope(d.name);
                    if let Some(init) = &d.init {
                        self.walk_expr(init)?;
                    }
                }
            }
            Stmt::Func(f) => {
                // Name declared in the enclosing scope during hoisting; at
                // program scope it stayed global and is recorded as a global
                // occurrence instead.
                if self.tokens[f.name].binding.is_none() {
                    self.global_refs.push(GlobalRef {
                        name: self.tokens[f.name].text.clone(),
                        token: f.name,
                        scope: self.current(),
                    });
                } else {
                    self.fix_occurrence_scope(f.name);
                }
                self.walk_function(None, &f.params, &f.body)?;
            }
            Stmt::Expr(e) | Stmt::Throw(e) => self.walk_expr(e)?,
            Stmt::Return(arg) => {
                if let Some(e) = arg {
                    self.walk_expr(e)?;
                }
            }
            Stmt::If { test, cons, alt } => {
                self.walk_expr(test)?;
                self.walk_stmt(cons)?;
                if let Some(alt) = alt {
                    self.walk_stmt(alt)?;
                }
            }
            Stmt::While { test, body } => {
                self.walk_expr(test)?;
                self.walk_stmt(body)?;
            }
            Stmt::DoWhile { body, test } => {
                self.walk_stmt(body)?;
                self.walk_expr(test)?;
            }
            Stmt::For { init, test, update, body } => {
                let scope = self.new_scope(ScopeKind::Block);
                self.stack.push(scope);
                if let Some(ForInit::Decl { kind, decls }) = init {
                    if matches!(kind, DeclKind::Let | DeclKind::Const) {
                        let bk =
                            if *kind == DeclKind::Let { BindingKind::Let } else { BindingKind::Const };
                        for d in decls {
                            self.declare(scope, d.name, bk)?;
                        }
                    }
                }
                match init {
                    Some(ForInit::Decl { decls, .. }) => {
                        for d in decls {
                            self.fix_occurrence_scope(d.name);
                            if let Some(e) = &d.init {
                                self.walk_expr(e)?;
                            }
                        }
                    }
                    Some(ForInit::Expr(e)) => self.walk_expr(e)?,
                    None => {}
                }
                if let Some(e) = test {
                    self.walk_expr(e)?;
                }
                if let Some(e) = update {
                    self.walk_expr(e)?;
                }
                self.walk_stmt(body)?;
                self.stack.pop();
            }
            Stmt::ForIn { left, object, body } => {
                let scope = self.new_scope(ScopeKind::Block);
                self.stack.push(scope);
                match left {
                    ForInLeft::Decl { kind, name } => {
                        if matches!(kind, DeclKind::Let | DeclKind::Const) {
                            let bk = if *kind == DeclKind::Let {
                                BindingKind::Let
                            } else {
                                BindingKind::Const
                            };
                            self.declare(scope, *name, bk)?;
                        } else {
                            self.fix_occurrence_scope(*name);
                        }
                    }
                    ForInLeft::Target(e) => self.walk_expr(e)?,
                }
                self.walk_expr(object)?;
                self.walk_stmt(body)?;
                self.stack.pop();
            }
            Stmt::Block(body) => {
                let scope = self.new_scope(ScopeKind::Block);
                self.stack.push(scope);
                self.hoist_lexical_shallow(scope, body)?;
                for s in body {
                    self.walk_stmt(s)?;
                }
                self.stack.pop();
            }
            Stmt::Switch { disc, cases } => {
                self.walk_expr(disc)?;
                let scope = self.new_scope(ScopeKind::Block);
                self.stack.push(scope);
                for c in cases {
                    self.hoist_lexical_shallow(scope, &c.body)?;
                }
                for c in cases {
                    if let Some(t) = &c.test {
                        self.walk_expr(t)?;
                    }
                    for s in &c.body {
                        self.walk_stmt(s)?;
                    }
                }
                self.stack.pop();
            }
            Stmt::Try { block, handler, finalizer } => {
                let scope = self.new_scope(ScopeKind::Block);
                self.stack.push(scope);
                self.hoist_lexical_shallow(scope, block)?;
                for s in block {
                    self.walk_stmt(s)?;
                }
                self.stack.pop();
                if let Some(h) = handler {
                    let scope = self.new_scope(ScopeKind::Catch);
                    self.stack.push(scope);
                    self.declare(scope, h.param, BindingKind::CatchParam)?;
                    self.hoist_lexical_shallow(scope, &h.body)?;
                    for s in &h.body {
                        self.walk_stmt(s)?;
                    }
                    self.stack.pop();
                }
                if let Some(f) = finalizer {
                    let scope = self.new_scope(ScopeKind::Block);
                    self.stack.push(scope);
                    self.hoist_lexical_shallow(scope, f)?;
                    for s in f {
                        self.walk_stmt(s)?;
                    }
                    self.stack.pop();
                }
            }
            Stmt::Labeled { body, .. } => self.walk_stmt(body)?,
            Stmt::Break(_) | Stmt::Continue(_) | Stmt::Empty | Stmt::Debugger => {}
        }
        Ok(())
    }

    fn walk_expr(&mut self, expr: &Expr) -> Result<()> {
        match expr {
            Expr::Ident(tok) => self.resolve_ident(*tok),
            Expr::Literal(_) | Expr::This(_) => {}
            Expr::Array(elems) => {
                for e in elems {
                    self.walk_expr(e)?;
                }
            }
            Expr::Object(props) => {
                // Keys are property names, never references.
                for p in props {
                    self.walk_expr(&p.value)?;
                }
            }
            Expr::Func(f) => {
                self.walk_function(
                    f.name.map(|n| (n, BindingKind::FuncExprName)),
                    &f.params,
                    &f.body,
                )?;
            }
            Expr::Member { object, .. } => self.walk_expr(object)?,
            Expr::Index { object, index } => {
                self.walk_expr(object)?;
                self.walk_expr(index)?;
            }
            Expr::Call { callee, args } | Expr::New { callee, args } => {
                self.walk_expr(callee)?;
                for a in args {
                    self.walk_expr(a)?;
                }
            }
            Expr::Unary { operand, .. } => self.walk_expr(operand)?,
            Expr::Update { target, .. } => self.walk_expr(target)?,
            Expr::Binary { left, right, .. } | Expr::Logical { left, right, .. } => {
                self.walk_expr(left)?;
                self.walk_expr(right)?;
            }
            Expr::Assign { target, value, .. } => {
                self.walk_expr(target)?;
                self.walk_expr(value)?;
            }
            Expr::Cond { test, cons, alt } => {
                self.walk_expr(test)?;
                self.walk_expr(cons)?;
                self.walk_expr(alt)?;
            }
            Expr::Seq(exprs) => {
                for e in exprs {
                    self.walk_expr(e)?;
                }
            }
        }
        Ok(())
    }
}
