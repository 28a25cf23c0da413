//! Hand-written recursive-descent parser for the rule language.
//!
//! ```text
//! q(X) :- Dep(Y, X), Course(Z, X, Y).      % conjunctive query
//! :- P(X), Q(X, Y).                        % denial constraint
//! Dep(X, Y) -> exists U: Course(U, Y, X).  % inclusion dependency
//! ```
//!
//! Variables start with an uppercase letter or `_`; constants are lowercase or
//! numeric identifiers, or single-quoted strings (`''` escapes a quote).

use std::collections::BTreeMap;

use super::ast::*;
use super::QueryError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    ColonDash,
    Arrow,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Quoted(s) => format!("string '{s}'"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Colon => "`:`".into(),
            Tok::ColonDash => "`:-`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, QueryError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| QueryError::Syntax { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, column: col };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' | ')' | ',' | '.' => {
                out.push((
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        _ => Tok::Dot,
                    },
                    span,
                ));
                i += 1;
                col += 1;
            }
            ':' => {
                if chars.get(i + 1) == Some(&'-') {
                    out.push((Tok::ColonDash, span));
                    i += 2;
                    col += 2;
                } else {
                    out.push((Tok::Colon, span));
                    i += 1;
                    col += 1;
                }
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push((Tok::Arrow, span));
                i += 2;
                col += 2;
            }
            '\'' => {
                let mut s = String::new();
                i += 1;
                col += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(span.line, span.column, "unterminated string".into())),
                        Some('\'') if chars.get(i + 1) == Some(&'\'') => {
                            s.push('\'');
                            i += 2;
                            col += 2;
                        }
                        Some('\'') => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        Some('\n') => {
                            return Err(err(span.line, span.column, "newline in string".into()))
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                            col += 1;
                        }
                    }
                }
                out.push((Tok::Quoted(s), span));
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                col += i - start;
                out.push((Tok::Ident(chars[start..i].iter().collect()), span));
            }
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        }
    }
    out.push((Tok::Eof, Span { line, column: col }));
    Ok(out)
}

pub(crate) fn is_variable_name(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_uppercase() || c == '_')
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn span(&self) -> Span {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> QueryError {
        let span = self.span();
        QueryError::Syntax { line: span.line, column: span.column, message: message.into() }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, QueryError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.error(format!("expected {}, found {}", tok.describe(), self.peek().describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), QueryError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().1;
                Ok((s, span))
            }
            other => Err(self.error(format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn term(&mut self) -> Result<Term, QueryError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(if is_variable_name(&s) { Term::Var(s) } else { Term::Const(s) })
            }
            Tok::Quoted(s) => {
                self.bump();
                Ok(Term::Const(s))
            }
            other => Err(self.error(format!("expected a term, found {}", other.describe()))),
        }
    }

    /// Parses `( term, ... )`, allowing an empty list.
    fn args(&mut self) -> Result<Vec<Term>, QueryError> {
        self.expect(Tok::LParen)?;
        let mut terms = Vec::new();
        if *self.peek() == Tok::RParen {
            self.bump();
            return Ok(terms);
        }
        loop {
            terms.push(self.term()?);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    return Ok(terms);
                }
                other => {
                    return Err(self.error(format!("expected `,` or `)`, found {}", other.describe())))
                }
            }
        }
    }

    fn atom(&mut self) -> Result<Atom, QueryError> {
        let (relation, span) = self.ident("a relation name")?;
        let terms = self.args()?;
        if terms.is_empty() {
            return Err(QueryError::Syntax {
                line: span.line,
                column: span.column,
                message: format!("atom `{relation}` has no arguments"),
            });
        }
        Ok(Atom { relation, terms, span })
    }

    fn body(&mut self) -> Result<Vec<Atom>, QueryError> {
        if matches!(self.peek(), Tok::Dot | Tok::Eof) {
            return Err(self.error("empty rule body"));
        }
        let mut atoms = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            atoms.push(self.atom()?);
        }
        self.expect(Tok::Dot)?;
        Ok(atoms)
    }

    fn statement(&mut self) -> Result<Statement, QueryError> {
        let start = self.span();
        if *self.peek() == Tok::ColonDash {
            self.bump();
            let body = self.body()?;
            return Ok(Statement::Denial(DenialConstraint { body, span: start }));
        }
        let (name, _) = self.ident("a rule head or `:-`")?;
        let args = if *self.peek() == Tok::LParen { self.args()? } else { Vec::new() };
        match self.peek() {
            Tok::ColonDash => {
                self.bump();
                let mut head = Vec::with_capacity(args.len());
                for t in args {
                    match t {
                        Term::Var(v) => head.push(v),
                        Term::Const(c) => {
                            return Err(QueryError::Syntax {
                                line: start.line,
                                column: start.column,
                                message: format!("head of `{name}` must list variables, found constant `{c}`"),
                            })
                        }
                    }
                }
                let body = self.body()?;
                let cq = Cq { name, head, body, span: start };
                check_head_bound(&cq)?;
                Ok(Statement::Query(cq))
            }
            Tok::Arrow => {
                self.bump();
                if args.is_empty() {
                    return Err(QueryError::Syntax {
                        line: start.line,
                        column: start.column,
                        message: format!("atom `{name}` has no arguments"),
                    });
                }
                let source = Atom { relation: name, terms: args, span: start };
                let mut existentials = Vec::new();
                if matches!(self.peek(), Tok::Ident(s) if s == "exists") {
                    self.bump();
                    loop {
                        let (v, vspan) = self.ident("a variable")?;
                        if !is_variable_name(&v) {
                            return Err(QueryError::Syntax {
                                line: vspan.line,
                                column: vspan.column,
                                message: format!("`{v}` is not a variable"),
                            });
                        }
                        existentials.push(v);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::Colon)?;
                }
                let target = self.atom()?;
                self.expect(Tok::Dot)?;
                let ind = InclusionDependency { source, target, existentials, span: start };
                check_inclusion(&ind)?;
                Ok(Statement::Inclusion(ind))
            }
            other => Err(self.error(format!("expected `:-` or `->`, found {}", other.describe()))),
        }
    }
}

fn check_head_bound(cq: &Cq) -> Result<(), QueryError> {
    for v in &cq.head {
        if !cq.body.iter().flat_map(Atom::vars).any(|b| b == v) {
            return Err(QueryError::UnboundHeadVariable {
                query: cq.name.clone(),
                variable: v.clone(),
                line: cq.span.line,
            });
        }
    }
    Ok(())
}

fn check_inclusion(ind: &InclusionDependency) -> Result<(), QueryError> {
    let source_vars: Vec<&str> = ind.source.vars().collect();
    for e in &ind.existentials {
        if source_vars.contains(&e.as_str()) {
            return Err(QueryError::Malformed(format!(
                "existential `{e}` of `{ind}` also occurs in the premise"
            )));
        }
        if !ind.target.vars().any(|v| v == e) {
            return Err(QueryError::Malformed(format!("existential `{e}` of `{ind}` is unused")));
        }
    }
    for v in ind.target.vars() {
        if !source_vars.contains(&v) && !ind.existentials.iter().any(|e| e == v) {
            return Err(QueryError::Malformed(format!(
                "variable `{v}` of `{ind}` is neither shared nor declared existential"
            )));
        }
    }
    Ok(())
}

/// Parses a whole rule file.
pub fn parse(text: &str) -> Result<Vec<Statement>, QueryError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        out.push(p.statement()?);
    }
    Ok(out)
}

/// Groups the query rules of `text` into unions by head name, in order of
/// first appearance.
pub fn parse_queries(text: &str) -> Result<Vec<Ucq>, QueryError> {
    let mut groups: Vec<Ucq> = Vec::new();
    let mut by_name: BTreeMap<String, usize> = BTreeMap::new();
    for st in parse(text)? {
        let Statement::Query(cq) = st else { continue };
        match by_name.get(&cq.name) {
            Some(&i) => {
                let expected = groups[i].arity();
                if cq.head.len() != expected {
                    return Err(QueryError::Malformed(format!(
                        "rules for `{}` disagree on head arity ({} vs {})",
                        cq.name,
                        expected,
                        cq.head.len()
                    )));
                }
                groups[i].disjuncts.push(cq);
            }
            None => {
                by_name.insert(cq.name.clone(), groups.len());
                groups.push(Ucq { disjuncts: vec![cq] });
            }
        }
    }
    Ok(groups)
}

/// Parses the query named `name`, or the only query of the file when `name` is `None`.
pub fn parse_query(text: &str, name: Option<&str>) -> Result<Ucq, QueryError> {
    let groups = parse_queries(text)?;
    match name {
        Some(n) => groups
            .into_iter()
            .find(|u| u.name() == n)
            .ok_or_else(|| QueryError::Malformed(format!("no query named `{n}`"))),
        None => {
            let mut it = groups.into_iter();
            match (it.next(), it.next()) {
                (Some(u), None) => Ok(u),
                (None, _) => Err(QueryError::Malformed("no query rules found".into())),
                (Some(_), Some(_)) => {
                    Err(QueryError::Malformed("several queries defined; select one by name".into()))
                }
            }
        }
    }
}

pub fn parse_denials(text: &str) -> Result<Vec<DenialConstraint>, QueryError> {
    let mut out = Vec::new();
    for st in parse(text)? {
        match st {
            Statement::Denial(d) => out.push(d),
            other => {
                return Err(QueryError::Malformed(format!("expected only denial constraints, found `{other}`")))
            }
        }
    }
    Ok(out)
}

pub fn parse_hard_constraints(text: &str) -> Result<Vec<HardConstraint>, QueryError> {
    let mut out = Vec::new();
    for st in parse(text)? {
        match st {
            Statement::Denial(d) => out.push(HardConstraint::Denial(d)),
            Statement::Inclusion(i) => out.push(HardConstraint::Inclusion(i)),
            Statement::Query(q) => {
                return Err(QueryError::Malformed(format!("expected constraints, found query `{q}`")))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boolean_query_with_three_atoms() {
        let st = parse("q() :- S(X), R(X,Y), S(Y).").unwrap();
        let [Statement::Query(q)] = st.as_slice() else { panic!("{st:?}") };
        assert!(q.is_boolean());
        assert_eq!(q.body.len(), 3);
        assert_eq!(q.body[1], Atom::new("R", vec![Term::var("X"), Term::var("Y")]));
    }

    #[test]
    fn denial_constraint() {
        let st = parse(":- P(X), Q(X,Y).").unwrap();
        assert!(matches!(st.as_slice(), [Statement::Denial(d)] if d.body.len() == 2));
    }

    #[test]
    fn empty_body_is_rejected_with_position() {
        let err = parse("q() :- .").unwrap_err();
        assert!(matches!(err, QueryError::Syntax { line: 1, column: 8, .. }), "{err}");
    }

    #[test]
    fn unbound_head_variable() {
        let err = parse("q(X) :- S(Y).").unwrap_err();
        assert!(matches!(err, QueryError::UnboundHeadVariable { ref variable, .. } if variable == "X"));
    }

    #[test]
    fn positions_on_later_lines() {
        let err = parse("q() :- S(X).\n\n  :- R(X,\n  ).").unwrap_err();
        assert!(matches!(err, QueryError::Syntax { line: 4, column: 3, .. }), "{err}");
    }

    #[test]
    fn inclusion_dependency() {
        let st = parse("Dep(X, Y) -> exists U: Course(U, Y, X).").unwrap();
        let [Statement::Inclusion(ind)] = st.as_slice() else { panic!() };
        assert_eq!(ind.existentials, vec!["U".to_string()]);
        assert_eq!(ind.to_string(), "Dep(X, Y) -> exists U: Course(U, Y, X).");
        assert!(parse("Dep(X, Y) -> Course(U, Y, X).").is_err());
    }

    #[test]
    fn constants_and_quotes() {
        let st = parse("q(X) :- Course(Z, john, 'It''s'), R(X, 42).").unwrap();
        let [Statement::Query(q)] = st.as_slice() else { panic!() };
        assert_eq!(q.body[0].terms[1], Term::constant("john"));
        assert_eq!(q.body[0].terms[2], Term::constant("It's"));
        assert_eq!(q.body[1].terms[1], Term::constant("42"));
        assert_eq!(q.to_string(), "q(X) :- Course(Z, john, 'It''s'), R(X, 42).");
    }

    #[test]
    fn comments_and_bare_heads() {
        let qs = parse_queries("% paths\nyes :- E(a, b).\nyes :- E(a, Z), E(Z, b). % two hops\n").unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].disjuncts.len(), 2);
        assert!(qs[0].is_boolean());
    }

    #[test]
    fn mismatched_union_arity() {
        assert!(parse_queries("q(X) :- S(X).\nq() :- S(Y).").is_err());
    }
}
