//! Syntax tree for the supported JavaScript subset.
//!
//! Identifier nodes store indices into the token stream rather than copies of
//! the text, so later passes can annotate the tokens in place.

/// Index of a token in the stream the program was parsed from.
pub type TokIdx = usize;

#[derive(Debug)]
pub struct Program {
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeclKind {
    Var,
    Let,
    Const,
}

#[derive(Debug)]
pub struct Declarator {
    pub name: TokIdx,
    pub init: Option<Expr>,
}

#[derive(Debug)]
pub struct FuncDecl {
    pub name: TokIdx,
    pub params: Vec<TokIdx>,
    pub body: Vec<Stmt>,
}

#[derive(Debug)]
pub struct FuncExpr {
    pub name: Option<TokIdx>,
    pub params: Vec<TokIdx>,
    pub body: Vec<Stmt>,
}

#[derive(Debug)]
pub enum ForInit {
    Decl { kind: DeclKind, decls: Vec<Declarator> },
    Expr(Expr),
}

#[derive(Debug)]
pub enum ForInLeft {
    Decl { kind: DeclKind, name: TokIdx },
    Target(Expr),
}

#[derive(Debug)]
pub struct SwitchCase {
    pub test: Option<Expr>,
    pub body: Vec<Stmt>,
}

#[derive(Debug)]
pub struct CatchClause {
    pub param: TokIdx,
    pub body: Vec<Stmt>,
}

#[derive(Debug)]
pub enum Stmt {
    Var { kind: DeclKind, decls: Vec<Declarator> },
    Func(FuncDecl),
    Expr(Expr),
    Return(Option<Expr>),
    If { test: Expr, cons: Box<Stmt>, alt: Option<Box<Stmt>> },
    While { test: Expr, body: Box<Stmt> },
    DoWhile { body: Box<Stmt>, test: Expr },
    For { init: Option<ForInit>, test: Option<Expr>, update: Option<Expr>, body: Box<Stmt> },
    ForIn { left: ForInLeft, object: Expr, body: Box<Stmt> },
    Block(Vec<Stmt>),
    Break(Option<TokIdx>),
    Continue(Option<TokIdx>),
    Switch { disc: Expr, cases: Vec<SwitchCase> },
    Throw(Expr),
    Try { block: Vec<Stmt>, handler: Option<CatchClause>, finalizer: Option<Vec<Stmt>> },
    Labeled { label: TokIdx, body: Box<Stmt> },
    Empty,
    Debugger,
}

#[derive(Debug)]
pub struct Property {
    /// Key token: identifier, keyword, string, or number. Never a reference.
    pub key: TokIdx,
    pub value: Expr,
}

#[derive(Debug)]
pub enum Expr {
    /// An identifier reference.
    Ident(TokIdx),
    /// Numeric, string, regex, or template literal, or `true`/`false`/`null`.
    Literal(TokIdx),
    This(TokIdx),
    Array(Vec<Expr>),
    Object(Vec<Property>),
    Func(FuncExpr),
    Member { object: Box<Expr>, property: TokIdx },
    Index { object: Box<Expr>, index: Box<Expr> },
    Call { callee: Box<Expr>, args: Vec<Expr> },
    New { callee: Box<Expr>, args: Vec<Expr> },
    Unary { op: TokIdx, operand: Box<Expr> },
    Update { op: TokIdx, prefix: bool, target: Box<Expr> },
    Binary { op: TokIdx, left: Box<Expr>, right: Box<Expr> },
    Logical { op: TokIdx, left: Box<Expr>, right: Box<Expr> },
    Assign { op: TokIdx, target: Box<Expr>, value: Box<Expr> },
    Cond { test: Box<Expr>, cons: Box<Expr>, alt: Box<Expr> },
    Seq(Vec<Expr>),
}
