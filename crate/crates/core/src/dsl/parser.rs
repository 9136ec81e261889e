use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::lexer::{tokenize, Pos, Token, TokenKind};
use super::ParseError;
use crate::engine::MAX_LEVELS;
use crate::model::{Order, Role};

const BLOCKS: [&str; 5] = ["units", "trts", "rcrds", "allot", "assign"];

/// Levels a declared unit will own, enough to resolve per-parent keys
/// without materialising every label.
struct UnitShape {
    name: String,
    count: u64,
    explicit: Option<Vec<String>>,
}

impl UnitShape {
    fn ordinal_of(&self, label: &str) -> Option<u64> {
        match &self.explicit {
            Some(labels) => labels.iter().position(|l| l == label).map(|i| i as u64 + 1),
            None => {
                let k: u64 = label.strip_prefix(self.name.as_str())?.parse().ok()?;
                let canonical = format!("{}{}", self.name, k);
                (canonical == label && (1..=self.count).contains(&k)).then_some(k)
            }
        }
    }

    fn label_of(&self, ordinal: u64) -> String {
        match &self.explicit {
            Some(labels) => labels[(ordinal - 1) as usize].clone(),
            None => format!("{}{}", self.name, ordinal),
        }
    }
}

enum Symbol {
    Unit(UnitShape),
    Treatment { allotted: bool },
    Record,
}

impl Symbol {
    fn role(&self) -> Role {
        match self {
            Symbol::Unit(_) => Role::Unit,
            Symbol::Treatment { .. } => Role::Treatment,
            Symbol::Record => Role::Record,
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
    spec: DesignSpec,
    symbols: HashMap<String, (Symbol, Pos)>,
    total_levels: u64,
    assign_pos: Option<Pos>,
}

type PResult<T> = Result<T, ParseError>;

/// Parses a `.ged` program.
///
/// Names must be declared before they are referenced. Semantic errors
/// (duplicate names, undeclared or mistyped references, bad counts) carry
/// the position of the offending token.
pub fn parse(source: &str) -> Result<DesignSpec, ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens,
        idx: 0,
        spec: DesignSpec::default(),
        symbols: HashMap::new(),
        total_levels: 0,
        assign_pos: None,
    };
    p.program()?;
    Ok(p.spec)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.idx + offset).min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let tok = self.peek().clone();
        if tok.kind != TokenKind::Eof {
            self.idx += 1;
        }
        tok
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let tok = self.peek();
        ParseError::new(tok.pos, format!("unexpected {}", tok.kind.describe()))
            .expecting(expected.iter().map(|s| s.to_string()).collect())
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Pos> {
        if self.peek().kind == kind {
            Ok(self.advance().pos)
        } else {
            Err(self.unexpected(&[&kind.describe()]))
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn at_keyword(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == word)
    }

    fn keyword(&mut self, word: &str) -> PResult<Pos> {
        if self.at_keyword(word) {
            Ok(self.advance().pos)
        } else {
            Err(self.unexpected(&[&format!("`{word}`")]))
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match &self.peek().kind {
            TokenKind::Ident(s) => {
                let s = s.clone();
                Ok((s, self.advance().pos))
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn int(&mut self) -> PResult<(u64, Pos)> {
        match self.peek().kind {
            TokenKind::Int(n) => Ok((n, self.advance().pos)),
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn count(&mut self) -> PResult<(u64, Pos)> {
        let (n, pos) = self.int()?;
        if n == 0 {
            return Err(ParseError::new(pos, "count must be a positive integer"));
        }
        if n > MAX_LEVELS {
            return Err(ParseError::new(
                pos,
                format!("count {n} exceeds the limit of {MAX_LEVELS} levels"),
            ));
        }
        Ok((n, pos))
    }

    fn program(&mut self) -> PResult<()> {
        self.keyword("design")?;
        if let TokenKind::Str(title) = &self.peek().kind {
            self.spec.title = Some(title.clone());
            self.advance();
        }
        if self.peek().kind != TokenKind::LBrace {
            return Err(self.unexpected(&["string", "`{`"]));
        }
        self.advance();
        loop {
            match &self.peek().kind {
                TokenKind::RBrace => break,
                TokenKind::Ident(word) => match word.as_str() {
                    "units" => self.units_block()?,
                    "trts" => self.trts_block()?,
                    "rcrds" => self.rcrds_block()?,
                    "allot" => self.allot_block()?,
                    "assign" => self.assign_block()?,
                    _ => return Err(self.block_expected()),
                },
                _ => return Err(self.block_expected()),
            }
        }
        self.advance();
        self.expect(TokenKind::Eof)?;
        self.finish()
    }

    fn block_expected(&self) -> ParseError {
        let mut expected: Vec<String> = BLOCKS.iter().map(|b| format!("`{b}`")).collect();
        expected.push("`}`".into());
        let refs: Vec<&str> = expected.iter().map(String::as_str).collect();
        self.unexpected(&refs)
    }

    fn finish(&mut self) -> PResult<()> {
        let Some(pos) = self.assign_pos else {
            return Ok(());
        };
        let allots = self.spec.allot_decls.len();
        if allots == 0 {
            return Err(ParseError::new(
                pos,
                "`assign` requires at least one allotment",
            ));
        }
        let orders = self.spec.assign_decl.as_ref().map_or(0, |a| a.orders.len());
        if orders != 1 && orders != allots {
            return Err(ParseError::new(
                pos,
                format!(
                    "`assign` lists {orders} orders for {allots} allotments; give 1 or {allots}"
                ),
            ));
        }
        Ok(())
    }

    /// Parses `{ item [,] ... }`, calling `item` for each declaration.
    fn braced(&mut self, mut item: impl FnMut(&mut Self) -> PResult<()>) -> PResult<()> {
        self.expect(TokenKind::LBrace)?;
        loop {
            if self.eat(&TokenKind::RBrace) {
                return Ok(());
            }
            if !matches!(self.peek().kind, TokenKind::Ident(_)) {
                return Err(self.unexpected(&["identifier", "`}`"]));
            }
            item(self)?;
            self.eat(&TokenKind::Comma);
        }
    }

    fn declare(&mut self, name: &str, pos: Pos, symbol: Symbol) -> PResult<()> {
        if let Some((_, first)) = self.symbols.get(name) {
            return Err(ParseError::new(
                pos,
                format!("factor `{name}` is already declared at {first}"),
            ));
        }
        self.symbols.insert(name.to_owned(), (symbol, pos));
        Ok(())
    }

    fn add_levels(&mut self, n: u64, pos: Pos) -> PResult<()> {
        self.total_levels = self.total_levels.saturating_add(n);
        if self.total_levels > MAX_LEVELS {
            return Err(ParseError::new(
                pos,
                format!("design exceeds the limit of {MAX_LEVELS} levels"),
            ));
        }
        Ok(())
    }

    fn lookup(&self, name: &str, pos: Pos, want: Role) -> PResult<&Symbol> {
        match self.symbols.get(name) {
            None => Err(ParseError::new(pos, format!("undeclared factor `{name}`"))),
            Some((sym, _)) if sym.role() != want => Err(ParseError::new(
                pos,
                format!("`{name}` is a {}, expected a {want}", sym.role()),
            )),
            Some((sym, _)) => Ok(sym),
        }
    }

    fn label_list(&mut self) -> PResult<Vec<String>> {
        self.expect(TokenKind::LBracket)?;
        let mut labels = Vec::new();
        let mut seen = HashSet::new();
        loop {
            let pos = self.peek().pos;
            match &self.peek().kind {
                TokenKind::Str(s) => {
                    if !seen.insert(s.clone()) {
                        return Err(ParseError::new(pos, format!("duplicate label {s:?}")));
                    }
                    labels.push(s.clone());
                    self.advance();
                }
                _ => return Err(self.unexpected(&["string"])),
            }
            if self.eat(&TokenKind::Comma) {
                continue;
            }
            if self.eat(&TokenKind::RBracket) {
                return Ok(labels);
            }
            return Err(self.unexpected(&["`,`", "`]`"]));
        }
    }

    fn units_block(&mut self) -> PResult<()> {
        self.advance();
        self.braced(|p| p.unit_decl())
    }

    fn unit_decl(&mut self) -> PResult<()> {
        let (name, name_pos) = self.ident()?;
        self.expect(TokenKind::Eq)?;
        let value_pos = self.peek().pos;
        let (spec, shape) = match &self.peek().kind {
            TokenKind::Int(_) => {
                let (n, _) = self.count()?;
                (
                    UnitSpec::Count(n),
                    UnitShape {
                        name: name.clone(),
                        count: n,
                        explicit: None,
                    },
                )
            }
            TokenKind::LBracket => {
                let labels = self.label_list()?;
                let shape = UnitShape {
                    name: name.clone(),
                    count: labels.len() as u64,
                    explicit: Some(labels.clone()),
                };
                (UnitSpec::Labels(labels), shape)
            }
            TokenKind::Ident(w) if w == "nested_in" => {
                let (parent, counts, total) = self.nested()?;
                let shape = UnitShape {
                    name: name.clone(),
                    count: total,
                    explicit: None,
                };
                (UnitSpec::NestedIn { parent, counts }, shape)
            }
            _ => return Err(self.unexpected(&["integer", "`[`", "`nested_in`"])),
        };
        self.add_levels(shape.count, value_pos)?;
        self.declare(&name, name_pos, Symbol::Unit(shape))?;
        self.spec.unit_decls.push(UnitDecl { name, spec });
        Ok(())
    }

    /// `nested_in(parent, k)` or `nested_in(parent, key ~ k, ...)`; returns
    /// the parent name, counts and total child level count.
    fn nested(&mut self) -> PResult<(String, NestCounts, u64)> {
        self.advance();
        self.expect(TokenKind::LParen)?;
        let (parent, parent_pos) = self.ident()?;
        let parent_count = match self.lookup(&parent, parent_pos, Role::Unit)? {
            Symbol::Unit(shape) => shape.count,
            _ => unreachable!("lookup checked the role"),
        };
        self.expect(TokenKind::Comma)?;

        let uniform = matches!(self.peek().kind, TokenKind::Int(_))
            && self.peek_at(1).kind != TokenKind::Tilde;
        if uniform {
            let (k, pos) = self.count()?;
            self.expect(TokenKind::RParen)?;
            let total = k.saturating_mul(parent_count);
            if total > MAX_LEVELS {
                return Err(ParseError::new(
                    pos,
                    format!("nesting yields {total} levels, over the limit of {MAX_LEVELS}"),
                ));
            }
            return Ok((parent, NestCounts::Uniform(k), total));
        }

        let mut by_ordinal: Vec<(u64, u64)> = Vec::new();
        let mut by_label: Vec<(String, u64)> = Vec::new();
        let mut covered: HashSet<u64> = HashSet::new();
        let mut total: u64 = 0;
        loop {
            let key_pos = self.peek().pos;
            let (ordinal, key_label) = match self.peek().kind.clone() {
                TokenKind::Int(ordinal) => {
                    if !by_label.is_empty() {
                        return Err(ParseError::new(
                            key_pos,
                            "per-parent keys mix ordinals and labels",
                        ));
                    }
                    self.advance();
                    if ordinal == 0 || ordinal > parent_count {
                        return Err(ParseError::new(
                            key_pos,
                            format!("`{parent}` has no level with ordinal {ordinal} (it has {parent_count})"),
                        ));
                    }
                    (ordinal, None)
                }
                TokenKind::Str(label) => {
                    if !by_ordinal.is_empty() {
                        return Err(ParseError::new(
                            key_pos,
                            "per-parent keys mix ordinals and labels",
                        ));
                    }
                    self.advance();
                    let Some(Symbol::Unit(shape)) = self.symbols.get(&parent).map(|(s, _)| s)
                    else {
                        unreachable!("parent resolved above");
                    };
                    match shape.ordinal_of(&label) {
                        Some(ordinal) => (ordinal, Some(label)),
                        None => {
                            return Err(ParseError::new(
                                key_pos,
                                format!("`{parent}` has no level labelled {label:?}"),
                            ))
                        }
                    }
                }
                _ => return Err(self.unexpected(&["integer", "string"])),
            };
            if !covered.insert(ordinal) {
                return Err(ParseError::new(
                    key_pos,
                    format!("parent level {ordinal} of `{parent}` is given more than one count"),
                ));
            }
            self.expect(TokenKind::Tilde)?;
            let (k, k_pos) = self.count()?;
            total = total.saturating_add(k);
            if total > MAX_LEVELS {
                return Err(ParseError::new(
                    k_pos,
                    format!("nesting yields more than {MAX_LEVELS} levels"),
                ));
            }
            match key_label {
                Some(label) => by_label.push((label, k)),
                None => by_ordinal.push((ordinal, k)),
            }
            if self.eat(&TokenKind::Comma) {
                continue;
            }
            if self.peek().kind == TokenKind::RParen {
                break;
            }
            return Err(self.unexpected(&["`,`", "`)`"]));
        }
        let close = self.advance().pos;
        if covered.len() as u64 != parent_count {
            let Some(Symbol::Unit(shape)) = self.symbols.get(&parent).map(|(s, _)| s) else {
                unreachable!("parent resolved above");
            };
            let missing: Vec<String> = (1..=parent_count)
                .filter(|o| !covered.contains(o))
                .take(10)
                .map(|o| shape.label_of(o))
                .collect();
            return Err(ParseError::new(
                close,
                format!(
                    "every level of `{parent}` needs a count; missing {} (e.g. {})",
                    parent_count - covered.len() as u64,
                    missing.join(", ")
                ),
            ));
        }
        let counts = if by_label.is_empty() {
            NestCounts::ByOrdinal(by_ordinal)
        } else {
            NestCounts::ByLabel(by_label)
        };
        Ok((parent, counts, total))
    }

    fn trts_block(&mut self) -> PResult<()> {
        self.advance();
        self.braced(|p| {
            let (name, name_pos) = p.ident()?;
            p.expect(TokenKind::Eq)?;
            let value_pos = p.peek().pos;
            let spec = match p.peek().kind {
                TokenKind::Int(_) => TrtSpec::Count(p.count()?.0),
                TokenKind::LBracket => TrtSpec::Labels(p.label_list()?),
                _ => return Err(p.unexpected(&["integer", "`[`"])),
            };
            let n = match &spec {
                TrtSpec::Count(n) => *n,
                TrtSpec::Labels(l) => l.len() as u64,
            };
            p.add_levels(n, value_pos)?;
            p.declare(&name, name_pos, Symbol::Treatment { allotted: false })?;
            p.spec.trt_decls.push(TrtDecl { name, spec });
            Ok(())
        })
    }

    fn rcrds_block(&mut self) -> PResult<()> {
        self.advance();
        self.braced(|p| {
            let (name, name_pos) = p.ident()?;
            p.keyword("on")?;
            let (unit, unit_pos) = p.ident()?;
            p.lookup(&unit, unit_pos, Role::Unit)?;
            p.declare(&name, name_pos, Symbol::Record)?;
            p.spec.rcrd_decls.push(RcrdDecl { name, unit });
            Ok(())
        })
    }

    fn allot_block(&mut self) -> PResult<()> {
        self.advance();
        self.braced(|p| {
            let mut sources = Vec::new();
            loop {
                let (source, pos) = p.ident()?;
                p.lookup(&source, pos, Role::Treatment)?;
                if let Some((Symbol::Treatment { allotted }, _)) = p.symbols.get_mut(&source) {
                    if *allotted {
                        return Err(ParseError::new(
                            pos,
                            format!("treatment `{source}` is already allotted"),
                        ));
                    }
                    *allotted = true;
                }
                sources.push(source);
                if !p.eat(&TokenKind::Colon) {
                    break;
                }
            }
            if p.peek().kind != TokenKind::Tilde {
                return Err(p.unexpected(&["`:`", "`~`"]));
            }
            p.advance();
            let (target, target_pos) = p.ident()?;
            p.lookup(&target, target_pos, Role::Unit)?;
            p.spec.allot_decls.push(AllotDecl { sources, target });
            Ok(())
        })
    }

    fn assign_block(&mut self) -> PResult<()> {
        let pos = self.advance().pos;
        if self.assign_pos.is_some() {
            return Err(ParseError::new(pos, "only one `assign` block is allowed"));
        }
        self.assign_pos = Some(pos);
        let mut orders = Vec::new();
        if self.eat(&TokenKind::LBracket) {
            loop {
                orders.push(self.order()?);
                if self.eat(&TokenKind::Comma) {
                    continue;
                }
                if self.eat(&TokenKind::RBracket) {
                    break;
                }
                return Err(self.unexpected(&["`,`", "`]`"]));
            }
        } else {
            if !matches!(self.peek().kind, TokenKind::Ident(_)) {
                return Err(self.unexpected(&["`random`", "`systematic`", "`[`"]));
            }
            orders.push(self.order()?);
        }
        let seed = if self.at_keyword("seed") {
            self.advance();
            Some(self.int()?.0)
        } else {
            None
        };
        self.spec.assign_decl = Some(AssignDecl { orders, seed });
        Ok(())
    }

    fn order(&mut self) -> PResult<Order> {
        if self.at_keyword("random") {
            self.advance();
            Ok(Order::Random)
        } else if self.at_keyword("systematic") {
            self.advance();
            Ok(Order::Systematic)
        } else {
            Err(self.unexpected(&["`random`", "`systematic`"]))
        }
    }
}
