//! Recursive-descent parser for the supported subset: functions,
//! `var`/`let`/`const`, control flow, member access, calls, and literals.
//! Destructuring, classes, modules, arrow functions, `with`, getters and
//! setters are rejected.
//!
//! Semicolon handling follows the usual insertion rules: a statement may end
//! at `}`, at end of input, or before a token on a new line.

use super::ast::*;
use super::lexer::{Token, TokenKind};
use crate::error::{Error, Result};

pub fn parse(tokens: &[Token]) -> Result<Program> {
    let mut p = Parser { tokens, pos: 0 };
    let mut body = Vec::new();
    while p.pos < p.tokens.len() {
        body.push(p.parse_statement_listitem()?);
    }
    Ok(Program { body })
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn err(&self, message: impl Into<String>) -> Error {
        let offset = self
            .tokens
            .get(self.pos)
            .map(|t| t.span.0)
            .unwrap_or_else(|| self.tokens.last().map(|t| t.span.1).unwrap_or(0));
        Error::Parse { offset, message: message.into() }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, off: usize) -> Option<&Token> {
        self.tokens.get(self.pos + off)
    }

    fn at_punct(&self, text: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Punctuator && t.text == text)
    }

    fn at_keyword(&self, text: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword && t.text == text)
    }

    fn eat_punct(&mut self, text: &str) -> bool {
        if self.at_punct(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, text: &str) -> bool {
        if self.at_keyword(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, text: &str) -> Result<()> {
        if self.eat_punct(text) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{text}`")))
        }
    }

    fn expect_identifier(&mut self) -> Result<TokIdx> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                let idx = self.pos;
                self.pos += 1;
                Ok(idx)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    /// Consumes a statement terminator: an explicit `;`, or an inserted one
    /// before `}`, end of input, or a line break.
    fn eat_semicolon(&mut self) -> Result<()> {
        if self.eat_punct(";") {
            return Ok(());
        }
        match self.peek() {
            None => Ok(()),
            Some(t) if t.kind == TokenKind::Punctuator && t.text == "}" => Ok(()),
            Some(t) if t.nl_before => Ok(()),
            _ => Err(self.err("expected `;`")),
        }
    }

    /// Statements allowed at the top of a scope: includes declarations.
    fn parse_statement_listitem(&mut self) -> Result<Stmt> {
        if self.at_keyword("function") {
            return Ok(Stmt::Func(self.parse_function_decl()?));
        }
        if self.at_keyword("var") || self.at_keyword("let") || self.at_keyword("const") {
            return self.parse_var_statement();
        }
        self.parse_statement()
    }

    fn decl_kind(&mut self) -> Result<DeclKind> {
        let kind = match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword => match t.text.as_str() {
                "var" => DeclKind::Var,
                "let" => DeclKind::Let,
                "const" => DeclKind::Const,
                _ => return Err(self.err("expected declaration keyword")),
            },
            _ => return Err(self.err("expected declaration keyword")),
        };
        self.pos += 1;
        Ok(kind)
    }

    fn parse_var_statement(&mut self) -> Result<Stmt> {
        let kind = self.decl_kind()?;
        let decls = self.parse_declarator_list(kind, true)?;
        self.eat_semicolon()?;
        Ok(Stmt::Var { kind, decls })
    }

    fn parse_declarator_list(&mut self, kind: DeclKind, allow_in: bool) -> Result<Vec<Declarator>> {
        let mut decls = Vec::new();
        loop {
            let name = self.expect_identifier()?;
            let init = if self.eat_punct("=") {
                Some(self.parse_assignment(allow_in)?)
            } else if kind == DeclKind::Const {
                return Err(self.err("const declaration requires an initializer"));
            } else {
                None
            };
            decls.push(Declarator { name, init });
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(decls)
    }

    fn parse_function_decl(&mut self) -> Result<FuncDecl> {
        self.pos += 1; // function
        let name = self.expect_identifier()?;
        let (params, body) = self.parse_function_rest()?;
        Ok(FuncDecl { name, params, body })
    }

    fn parse_function_rest(&mut self) -> Result<(Vec<TokIdx>, Vec<Stmt>)> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                params.push(self.expect_identifier()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return Err(self.err("unterminated function body"));
            }
            body.push(self.parse_statement_listitem()?);
        }
        self.expect_punct("}")?;
        Ok((params, body))
    }

    /// Statements in non-declaration position (loop bodies, if branches).
    fn parse_statement(&mut self) -> Result<Stmt> {
        let tok = match self.peek() {
            Some(t) => t,
            None => return Err(self.err("unexpected end of input")),
        };
        match tok.kind {
            TokenKind::Punctuator if tok.text == "{" => {
                self.pos += 1;
                let mut body = Vec::new();
                while !self.at_punct("}") {
                    if self.peek().is_none() {
                        return Err(self.err("unterminated block"));
                    }
                    body.push(self.parse_statement_listitem()?);
                }
                self.expect_punct("}")?;
                Ok(Stmt::Block(body))
            }
            TokenKind::Punctuator if tok.text == ";" => {
                self.pos += 1;
                Ok(Stmt::Empty)
            }
            TokenKind::Keyword => match tok.text.as_str() {
                "if" => self.parse_if(),
                "while" => self.parse_while(),
                "do" => self.parse_do_while(),
                "for" => self.parse_for(),
                "return" => self.parse_return(),
                "break" | "continue" => self.parse_break_continue(),
                "switch" => self.parse_switch(),
                "throw" => self.parse_throw(),
                "try" => self.parse_try(),
                "debugger" => {
                    self.pos += 1;
                    self.eat_semicolon()?;
                    Ok(Stmt::Debugger)
                }
                "function" | "var" | "let" | "const" => {
                    Err(self.err("declaration not allowed in this position"))
                }
                "with" | "class" | "import" | "export" => {
                    Err(self.err(format!("`{}` is not supported", tok.text)))
                }
                _ => self.parse_expression_statement(),
            },
            TokenKind::Identifier => {
                // Labeled statement: identifier followed by `:`.
                if matches!(self.peek_at(1), Some(t) if t.kind == TokenKind::Punctuator && t.text == ":")
                {
                    let label = self.pos;
                    self.pos += 2;
                    let body = Box::new(self.parse_statement()?);
                    return Ok(Stmt::Labeled { label, body });
                }
                self.parse_expression_statement()
            }
            _ => self.parse_expression_statement(),
        }
    }

    fn parse_expression_statement(&mut self) -> Result<Stmt> {
        let expr = self.parse_expression(true)?;
        self.eat_semicolon()?;
        Ok(Stmt::Expr(expr))
    }

    fn parse_if(&mut self) -> Result<Stmt> {
        self.pos += 1;
        self.expect_punct("(")?;
        let test = self.parse_expression(true)?;
        self.expect_punct(")")?;
        let cons = Box::new(self.parse_statement()?);
        let alt = if self.eat_keyword("else") {
            Some(Box::new(self.parse_statement()?))
        } else {
            None
        };
        Ok(Stmt::If { test, cons, alt })
    }

    fn parse_while(&mut self) -> Result<Stmt> {
        self.pos += 1;
        self.expect_punct("(")?;
        let test = self.parse_expression(true)?;
        self.expect_punct(")")?;
        let body = Box::new(self.parse_statement()?);
        Ok(Stmt::While { test, body })
    }

    fn parse_do_while(&mut self) -> Result<Stmt> {
        self.pos += 1;
        let body = Box::new(self.parse_statement()?);
        if !self.eat_keyword("while") {
            return Err(self.err("expected `while`"));
        }
        self.expect_punct("(")?;
        let test = self.parse_expression(true)?;
        self.expect_punct(")")?;
        self.eat_semicolon()?;
        Ok(Stmt::DoWhile { body, test })
    }

    fn parse_for(&mut self) -> Result<Stmt> {
        self.pos += 1;
        self.expect_punct("(")?;

        if self.eat_punct(";") {
            return self.parse_for_rest(None);
        }

        if self.at_keyword("var") || self.at_keyword("let") || self.at_keyword("const") {
            let kind = self.decl_kind()?;
            let decls = self.parse_declarator_list(kind, false)?;
            if self.eat_keyword("in") {
                if decls.len() != 1 || decls[0].init.is_some() {
                    return Err(self.err("invalid for-in declaration"));
                }
                let left = ForInLeft::Decl { kind, name: decls[0].name };
                return self.parse_for_in_rest(left);
            }
            self.expect_punct(";")?;
            return self.parse_for_rest(Some(ForInit::Decl { kind, decls }));
        }

        let init = self.parse_expression(false)?;
        if self.eat_keyword("in") {
            if !matches!(init, Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. }) {
                return Err(self.err("invalid for-in target"));
            }
            return self.parse_for_in_rest(ForInLeft::Target(init));
        }
        self.expect_punct(";")?;
        self.parse_for_rest(Some(ForInit::Expr(init)))
    }

    fn parse_for_rest(&mut self, init: Option<ForInit>) -> Result<Stmt> {
        let test = if self.at_punct(";") { None } else { Some(self.parse_expression(true)?) };
        self.expect_punct(";")?;
        let update = if self.at_punct(")") { None } else { Some(self.parse_expression(true)?) };
        self.expect_punct(")")?;
        let body = Box::new(self.parse_statement()?);
        Ok(Stmt::For { init, test, update, body })
    }

    fn parse_for_in_rest(&mut self, left: ForInLeft) -> Result<Stmt> {
        let object = self.parse_expression(true)?;
        self.expect_punct(")")?;
        let body = Box::new(self.parse_statement()?);
        Ok(Stmt::ForIn { left, object, body })
    }

    fn parse_return(&mut self) -> Result<Stmt> {
        self.pos += 1;
        let arg = if self.statement_argument_follows() {
            Some(self.parse_expression(true)?)
        } else {
            None
        };
        self.eat_semicolon()?;
        Ok(Stmt::Return(arg))
    }

    fn parse_break_continue(&mut self) -> Result<Stmt> {
        let is_break = self.peek().map(|t| t.text == "break").unwrap_or(false);
        self.pos += 1;
        let label = match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier && !t.nl_before => {
                let idx = self.pos;
                self.pos += 1;
                Some(idx)
            }
            _ => None,
        };
        self.eat_semicolon()?;
        Ok(if is_break { Stmt::Break(label) } else { Stmt::Continue(label) })
    }

    /// Whether `return` is followed by an argument on the same line.
    fn statement_argument_follows(&self) -> bool {
        match self.peek() {
            None => false,
            Some(t) if t.nl_before => false,
            Some(t) if t.kind == TokenKind::Punctuator && (t.text == ";" || t.text == "}") => false,
            Some(_) => true,
        }
    }

    fn parse_switch(&mut self) -> Result<Stmt> {
        self.pos += 1;
        self.expect_punct("(")?;
        let disc = self.parse_expression(true)?;
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut cases = Vec::new();
        while !self.at_punct("}") {
            let test = if self.eat_keyword("case") {
                let t = self.parse_expression(true)?;
                Some(t)
            } else if self.eat_keyword("default") {
                None
            } else {
                return Err(self.err("expected `case` or `default`"));
            };
            self.expect_punct(":")?;
            let mut body = Vec::new();
            while !self.at_punct("}") && !self.at_keyword("case") && !self.at_keyword("default") {
                if self.peek().is_none() {
                    return Err(self.err("unterminated switch"));
                }
                body.push(self.parse_statement_listitem()?);
            }
            cases.push(SwitchCase { test, body });
        }
        self.expect_punct("}")?;
        Ok(Stmt::Switch { disc, cases })
    }

    fn parse_throw(&mut self) -> Result<Stmt> {
        self.pos += 1;
        match self.peek() {
            Some(t) if !t.nl_before => {}
            _ => return Err(self.err("throw requires an argument on the same line")),
        }
        let arg = self.parse_expression(true)?;
        self.eat_semicolon()?;
        Ok(Stmt::Throw(arg))
    }

    fn parse_try(&mut self) -> Result<Stmt> {
        self.pos += 1;
        let block = self.parse_braced_body()?;
        let handler = if self.eat_keyword("catch") {
            self.expect_punct("(")?;
            let param = self.expect_identifier()?;
            self.expect_punct(")")?;
            let body = self.parse_braced_body()?;
            Some(CatchClause { param, body })
        } else {
            None
        };
        let finalizer = if self.eat_keyword("finally") {
            Some(self.parse_braced_body()?)
        } else {
            None
        };
        if handler.is_none() && finalizer.is_none() {
            return Err(self.err("try requires catch or finally"));
        }
        Ok(Stmt::Try { block, handler, finalizer })
    }

    fn parse_braced_body(&mut self) -> Result<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.at_punct("}") {
            if self.peek().is_none() {
                return Err(self.err("unterminated block"));
            }
            body.push(self.parse_statement_listitem()?);
        }
        self.expect_punct("}")?;
        Ok(body)
    }

    // ── Expressions ────────────────────────────────────────────────────────

    fn parse_expression(&mut self, allow_in: bool) -> Result<Expr> {
        let first = self.parse_assignment(allow_in)?;
        if !self.at_punct(",") {
            return Ok(first);
        }
        let mut seq = vec![first];
        while self.eat_punct(",") {
            seq.push(self.parse_assignment(allow_in)?);
        }
        Ok(Expr::Seq(seq))
    }

    fn parse_assignment(&mut self, allow_in: bool) -> Result<Expr> {
        let left = self.parse_conditional(allow_in)?;
        let op_text = match self.peek() {
            Some(t) if t.kind == TokenKind::Punctuator => t.text.clone(),
            _ => return Ok(left),
        };
        let is_assign = matches!(
            op_text.as_str(),
            "=" | "+=" | "-=" | "*=" | "/=" | "%=" | "<<=" | ">>=" | ">>>=" | "&=" | "|=" | "^="
        );
        if !is_assign {
            return Ok(left);
        }
        if !matches!(left, Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. }) {
            return Err(self.err("invalid assignment target"));
        }
        let op = self.pos;
        self.pos += 1;
        let value = self.parse_assignment(allow_in)?;
        Ok(Expr::Assign { op, target: Box::new(left), value: Box::new(value) })
    }

    fn parse_conditional(&mut self, allow_in: bool) -> Result<Expr> {
        let test = self.parse_binary(0, allow_in)?;
        if !self.eat_punct("?") {
            return Ok(test);
        }
        let cons = self.parse_assignment(true)?;
        self.expect_punct(":")?;
        let alt = self.parse_assignment(allow_in)?;
        Ok(Expr::Cond { test: Box::new(test), cons: Box::new(cons), alt: Box::new(alt) })
    }

    fn binary_precedence(&self, allow_in: bool) -> Option<(u8, bool)> {
        // (precedence, is_logical)
        let t = self.peek()?;
        let prec = match t.kind {
            TokenKind::Punctuator => match t.text.as_str() {
                "||" => (1, true),
                "&&" => (2, true),
                "|" => (3, false),
                "^" => (4, false),
                "&" => (5, false),
                "==" | "!=" | "===" | "!==" => (6, false),
                "<" | ">" | "<=" | ">=" => (7, false),
                "<<" | ">>" | ">>>" => (8, false),
                "+" | "-" => (9, false),
                "*" | "/" | "%" => (10, false),
                _ => return None,
            },
            TokenKind::Keyword => match t.text.as_str() {
                "instanceof" => (7, false),
                "in" if allow_in => (7, false),
                _ => return None,
            },
            _ => return None,
        };
        Some(prec)
    }

    fn parse_binary(&mut self, min_prec: u8, allow_in: bool) -> Result<Expr> {
        let mut left = self.parse_unary(allow_in)?;
        while let Some((prec, is_logical)) = self.binary_precedence(allow_in) {
            if prec <= min_prec {
                break;
            }
            let op = self.pos;
            self.pos += 1;
            let right = self.parse_binary(prec, allow_in)?;
            left = if is_logical {
                Expr::Logical { op, left: Box::new(left), right: Box::new(right) }
            } else {
                Expr::Binary { op, left: Box::new(left), right: Box::new(right) }
            };
        }
        Ok(left)
    }

    fn parse_unary(&mut self, allow_in: bool) -> Result<Expr> {
        let tok = match self.peek() {
            Some(t) => t,
            None => return Err(self.err("unexpected end of expression")),
        };
        let is_unary = match tok.kind {
            TokenKind::Punctuator => matches!(tok.text.as_str(), "!" | "~" | "+" | "-"),
            TokenKind::Keyword => matches!(tok.text.as_str(), "typeof" | "void" | "delete"),
            _ => false,
        };
        if is_unary {
            let op = self.pos;
            self.pos += 1;
            let operand = self.parse_unary(allow_in)?;
            return Ok(Expr::Unary { op, operand: Box::new(operand) });
        }
        if tok.kind == TokenKind::Punctuator && (tok.text == "++" || tok.text == "--") {
            let op = self.pos;
            self.pos += 1;
            let target = self.parse_unary(allow_in)?;
            if !matches!(target, Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. }) {
                return Err(self.err("invalid update target"));
            }
            return Ok(Expr::Update { op, prefix: true, target: Box::new(target) });
        }
        let mut expr = self.parse_call_or_member(true)?;
        // Postfix update binds only without an intervening line break.
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Punctuator
                && (t.text == "++" || t.text == "--")
                && !t.nl_before
                && matches!(expr, Expr::Ident(_) | Expr::Member { .. } | Expr::Index { .. })
            {
                let op = self.pos;
                self.pos += 1;
                expr = Expr::Update { op, prefix: false, target: Box::new(expr) };
            }
        }
        Ok(expr)
    }

    /// Parses `new` expressions, member chains, and calls.
    fn parse_call_or_member(&mut self, allow_call: bool) -> Result<Expr> {
        let mut expr = if self.at_keyword("new") {
            self.pos += 1;
            let callee = self.parse_call_or_member(false)?;
            let args = if self.at_punct("(") { self.parse_arguments()? } else { Vec::new() };
            Expr::New { callee: Box::new(callee), args }
        } else {
            self.parse_primary()?
        };
        loop {
            if self.eat_punct(".") {
                let prop = match self.peek() {
                    Some(t) if t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword => {
                        let idx = self.pos;
                        self.pos += 1;
                        idx
                    }
                    _ => return Err(self.err("expected property name after `.`")),
                };
                expr = Expr::Member { object: Box::new(expr), property: prop };
            } else if self.at_punct("[") {
                self.pos += 1;
                let index = self.parse_expression(true)?;
                self.expect_punct("]")?;
                expr = Expr::Index { object: Box::new(expr), index: Box::new(index) };
            } else if allow_call && self.at_punct("(") {
                let args = self.parse_arguments()?;
                expr = Expr::Call { callee: Box::new(expr), args };
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn parse_arguments(&mut self) -> Result<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                args.push(self.parse_assignment(true)?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn parse_primary(&mut self) -> Result<Expr> {
        let tok = match self.peek() {
            Some(t) => t,
            None => return Err(self.err("unexpected end of expression")),
        };
        let idx = self.pos;
        match tok.kind {
            TokenKind::Identifier => {
                self.pos += 1;
                Ok(Expr::Ident(idx))
            }
            TokenKind::NumericLiteral
            | TokenKind::StringLiteral
            | TokenKind::RegexLiteral
            | TokenKind::TemplateLiteral => {
                self.pos += 1;
                Ok(Expr::Literal(idx))
            }
            TokenKind::Keyword => match tok.text.as_str() {
                "true" | "false" | "null" => {
                    self.pos += 1;
                    Ok(Expr::Literal(idx))
                }
                "this" => {
                    self.pos += 1;
                    Ok(Expr::This(idx))
                }
                "function" => {
                    self.pos += 1;
                    let name = if matches!(self.peek(), Some(t) if t.kind == TokenKind::Identifier)
                    {
                        let n = self.pos;
                        self.pos += 1;
                        Some(n)
                    } else {
                        None
                    };
                    let (params, body) = self.parse_function_rest()?;
                    Ok(Expr::Func(FuncExpr { name, params, body }))
                }
                other => Err(self.err(format!("unexpected keyword `{other}`"))),
            },
            TokenKind::Punctuator => match tok.text.as_str() {
                "(" => {
                    self.pos += 1;
                    let inner = self.parse_expression(true)?;
                    self.expect_punct(")")?;
                    Ok(inner)
                }
                "[" => {
                    self.pos += 1;
                    let mut elems = Vec::new();
                    while !self.at_punct("]") {
                        if self.at_punct(",") {
                            return Err(self.err("array holes are not supported"));
                        }
                        elems.push(self.parse_assignment(true)?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                    self.expect_punct("]")?;
                    Ok(Expr::Array(elems))
                }
                "{" => {
                    self.pos += 1;
                    let mut props = Vec::new();
                    while !self.at_punct("}") {
                        let key = match self.peek() {
                            Some(t)
                                if matches!(
                                    t.kind,
                                    TokenKind::Identifier
                                        | TokenKind::Keyword
                                        | TokenKind::StringLiteral
                                        | TokenKind::NumericLiteral
                                ) =>
                            {
                                let k = self.pos;
                                self.pos += 1;
                                k
                            }
                            _ => return Err(self.err("expected property key")),
                        };
                        self.expect_punct(":")?;
                        let value = self.parse_assignment(true)?;
                        props.push(Property { key, value });
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                    self.expect_punct("}")?;
                    Ok(Expr::Object(props))
                }
                other => Err(self.err(format!("unexpected token `{other}`"))),
            },
        }
    }
}
