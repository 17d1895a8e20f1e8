#include "wia/formula.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <utility>

#include "wia/errors.hpp"
#include "wia/value.hpp"

namespace wia {

namespace {

constexpr std::array<std::pair<Function, std::string_view>, 8> kFunctions{{
    {Function::Sum, "SUM"},
    {Function::Average, "AVERAGE"},
    {Function::Min, "MIN"},
    {Function::Max, "MAX"},
    {Function::Count, "COUNT"},
    {Function::If, "IF"},
    {Function::Abs, "ABS"},
    {Function::Round, "ROUND"},
}};

}  // namespace

std::string_view operator_symbol(Operator op) {
  switch (op) {
    case Operator::Add: return "+";
    case Operator::Sub: return "-";
    case Operator::Mul: return "*";
    case Operator::Div: return "/";
    case Operator::Pow: return "^";
    case Operator::Concat: return "&";
    case Operator::Eq: return "=";
    case Operator::Ne: return "<>";
    case Operator::Lt: return "<";
    case Operator::Le: return "<=";
    case Operator::Gt: return ">";
    case Operator::Ge: return ">=";
    case Operator::Neg: return "-";
    case Operator::Plus: return "+";
  }
  return "?";
}

std::string_view function_name(Function fn) {
  for (const auto& [f, name] : kFunctions)
    if (f == fn) return name;
  return "?";
}

std::optional<Function> lookup_function(std::string_view name) {
  for (const auto& [f, fname] : kFunctions)
    if (iequals(fname, name)) return f;
  return std::nullopt;
}

FormulaNode FormulaNode::number_literal(double v) {
  FormulaNode n;
  n.kind = NodeKind::Number;
  n.number = v;
  return n;
}

FormulaNode FormulaNode::text_literal(std::string v) {
  FormulaNode n;
  n.kind = NodeKind::Text;
  n.text = std::move(v);
  return n;
}

FormulaNode FormulaNode::boolean_literal(bool v) {
  FormulaNode n;
  n.kind = NodeKind::Boolean;
  n.boolean = v;
  return n;
}

FormulaNode FormulaNode::reference(CellAddress a) {
  FormulaNode n;
  n.kind = NodeKind::Ref;
  n.ref = std::move(a);
  return n;
}

FormulaNode FormulaNode::range(CellAddress a, CellAddress b) {
  if (a.row > b.row) {
    std::swap(a.row, b.row);
    std::swap(a.row_absolute, b.row_absolute);
  }
  if (a.col > b.col) {
    std::swap(a.col, b.col);
    std::swap(a.col_absolute, b.col_absolute);
  }
  b.sheet = a.sheet;
  FormulaNode n;
  n.kind = NodeKind::Range;
  n.ref = std::move(a);
  n.range_end = std::move(b);
  return n;
}

FormulaNode FormulaNode::unary(Operator op, FormulaNode child) {
  FormulaNode n;
  n.kind = NodeKind::Unary;
  n.op = op;
  n.children.push_back(std::move(child));
  return n;
}

FormulaNode FormulaNode::binary(Operator op, FormulaNode lhs, FormulaNode rhs) {
  FormulaNode n;
  n.kind = NodeKind::Binary;
  n.op = op;
  n.children.push_back(std::move(lhs));
  n.children.push_back(std::move(rhs));
  return n;
}

FormulaNode FormulaNode::call(Function fn, std::vector<FormulaNode> args) {
  FormulaNode n;
  n.kind = NodeKind::Call;
  n.function = fn;
  n.children = std::move(args);
  return n;
}

bool structurally_equal(const FormulaNode& a, const FormulaNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Number:
      return std::bit_cast<std::uint64_t>(a.number) ==
             std::bit_cast<std::uint64_t>(b.number);
    case NodeKind::Text: return a.text == b.text;
    case NodeKind::Boolean: return a.boolean == b.boolean;
    case NodeKind::Ref: return identical(a.ref, b.ref);
    case NodeKind::Range:
      return identical(a.ref, b.ref) && identical(a.range_end, b.range_end);
    case NodeKind::Unary:
    case NodeKind::Binary:
      if (a.op != b.op) return false;
      break;
    case NodeKind::Call:
      if (a.function != b.function) return false;
      break;
  }
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Number, String, Word, Quoted, Bang, Colon, Comma, LParen, RParen, Op, End };

struct Token {
  Tok kind = Tok::End;
  std::size_t offset = 0;
  std::string text;  // word / operator / decoded string or sheet name
  double number = 0.0;
};

bool is_word_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '$';
}
bool is_word_char(char c) {
  return is_word_start(c) || std::isdigit(static_cast<unsigned char>(c)) != 0;
}
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::vector<Token> lex(std::string_view src, std::size_t start) {
  std::vector<Token> out;
  std::size_t i = start;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.offset = i;
    if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1]))) {
      std::size_t j = i;
      while (j < src.size() && is_digit(src[j])) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && is_digit(src[j])) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && is_digit(src[k])) {
          while (k < src.size() && is_digit(src[k])) ++k;
          j = k;
        }
      }
      std::string lexeme(src.substr(i, j - i));
      // from_chars rejects a leading '.', so give it a zero.
      if (lexeme.front() == '.') lexeme.insert(lexeme.begin(), '0');
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), v);
      if (ec != std::errc() || ptr != lexeme.data() + lexeme.size() || !std::isfinite(v))
        throw ParseError(i, {"number"}, "invalid number at offset " + std::to_string(i));
      t.kind = Tok::Number;
      t.number = v;
      t.text = std::string(src.substr(i, j - i));
      i = j;
    } else if (c == '"' || c == '\'') {
      const char quote = c;
      std::size_t j = i + 1;
      std::string text;
      bool closed = false;
      while (j < src.size()) {
        if (src[j] == quote) {
          if (j + 1 < src.size() && src[j + 1] == quote) {
            text += quote;
            j += 2;
            continue;
          }
          closed = true;
          ++j;
          break;
        }
        text += src[j++];
      }
      if (!closed)
        throw ParseError(src.size(), {std::string(1, quote)},
                         "unterminated quote starting at offset " + std::to_string(i));
      t.kind = quote == '"' ? Tok::String : Tok::Quoted;
      t.text = std::move(text);
      i = j;
    } else if (is_word_start(c)) {
      std::size_t j = i;
      while (j < src.size() && is_word_char(src[j])) ++j;
      t.kind = Tok::Word;
      t.text = std::string(src.substr(i, j - i));
      i = j;
    } else {
      switch (c) {
        case '!': t.kind = Tok::Bang; break;
        case ':': t.kind = Tok::Colon; break;
        case ',': t.kind = Tok::Comma; break;
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case '+': case '-': case '*': case '/': case '^': case '&': case '=':
          t.kind = Tok::Op;
          t.text = std::string(1, c);
          break;
        case '<':
          t.kind = Tok::Op;
          if (i + 1 < src.size() && (src[i + 1] == '=' || src[i + 1] == '>')) {
            t.text = std::string(src.substr(i, 2));
            ++i;
          } else {
            t.text = "<";
          }
          break;
        case '>':
          t.kind = Tok::Op;
          if (i + 1 < src.size() && src[i + 1] == '=') {
            t.text = ">=";
            ++i;
          } else {
            t.text = ">";
          }
          break;
        default:
          throw ParseError(i, {"expression"},
                           std::string("unexpected character '") + c + "' at offset " +
                               std::to_string(i));
      }
      ++i;
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.offset = src.size();
  out.push_back(std::move(end));
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string default_sheet)
      : tokens_(std::move(tokens)), sheet_(std::move(default_sheet)) {}

  FormulaNode parse() {
    FormulaNode root = comparison();
    if (peek().kind != Tok::End) fail({"operator", "end of formula"});
    return root;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  bool peek_op(std::string_view op) const {
    return peek().kind == Tok::Op && peek().text == op;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    const Token& t = peek();
    std::string msg = "expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += " or ";
      msg += expected[i];
    }
    msg += " at offset " + std::to_string(t.offset);
    throw ParseError(t.offset, std::move(expected), msg);
  }

  FormulaNode comparison() {
    FormulaNode lhs = concat();
    for (;;) {
      std::optional<Operator> op;
      if (peek().kind == Tok::Op) {
        const std::string& s = peek().text;
        if (s == "=") op = Operator::Eq;
        else if (s == "<>") op = Operator::Ne;
        else if (s == "<") op = Operator::Lt;
        else if (s == "<=") op = Operator::Le;
        else if (s == ">") op = Operator::Gt;
        else if (s == ">=") op = Operator::Ge;
      }
      if (!op) return lhs;
      advance();
      lhs = FormulaNode::binary(*op, std::move(lhs), concat());
    }
  }

  FormulaNode concat() {
    FormulaNode lhs = additive();
    while (peek_op("&")) {
      advance();
      lhs = FormulaNode::binary(Operator::Concat, std::move(lhs), additive());
    }
    return lhs;
  }

  FormulaNode additive() {
    FormulaNode lhs = term();
    while (peek_op("+") || peek_op("-")) {
      const Operator op = advance().text == "+" ? Operator::Add : Operator::Sub;
      lhs = FormulaNode::binary(op, std::move(lhs), term());
    }
    return lhs;
  }

  FormulaNode term() {
    FormulaNode lhs = unary();
    while (peek_op("*") || peek_op("/")) {
      const Operator op = advance().text == "*" ? Operator::Mul : Operator::Div;
      lhs = FormulaNode::binary(op, std::move(lhs), unary());
    }
    return lhs;
  }

  static FormulaNode make_unary(Operator op, FormulaNode child) {
    if (op == Operator::Neg && child.kind == NodeKind::Number && !std::signbit(child.number))
      return FormulaNode::number_literal(-child.number);
    return FormulaNode::unary(op, std::move(child));
  }

  FormulaNode unary() {
    if (peek_op("-") || peek_op("+")) {
      const Operator op = advance().text == "-" ? Operator::Neg : Operator::Plus;
      return make_unary(op, unary());
    }
    return power();
  }

  FormulaNode power() {
    FormulaNode base = primary();
    if (peek_op("^")) {
      advance();
      return FormulaNode::binary(Operator::Pow, std::move(base), exponent());
    }
    return base;
  }

  FormulaNode exponent() {
    if (peek_op("-") || peek_op("+")) {
      const Operator op = advance().text == "-" ? Operator::Neg : Operator::Plus;
      return make_unary(op, exponent());
    }
    return power();
  }

  CellAddress cell_after_sheet(const std::string& sheet) {
    if (peek().kind != Tok::Word) fail({"cell reference"});
    const Token& t = advance();
    CellAddress a;
    if (!try_parse_a1(t.text, a))
      throw ParseError(t.offset, {"cell reference"},
                       "invalid cell reference '" + t.text + "' at offset " +
                           std::to_string(t.offset));
    a.sheet = sheet;
    return a;
  }

  FormulaNode reference_tail(CellAddress start) {
    if (peek().kind != Tok::Colon) return FormulaNode::reference(std::move(start));
    advance();
    std::string sheet = start.sheet;
    if (peek().kind == Tok::Quoted || (peek().kind == Tok::Word && peek(1).kind == Tok::Bang)) {
      const Token& s = advance();
      if (!iequals(s.text, start.sheet))
        throw ParseError(s.offset, {"cell reference"},
                         "range endpoints must be on the same sheet (offset " +
                             std::to_string(s.offset) + ")");
      advance();  // '!'
    }
    CellAddress end = cell_after_sheet(sheet);
    return FormulaNode::range(std::move(start), std::move(end));
  }

  FormulaNode primary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        advance();
        return FormulaNode::number_literal(t.number);
      }
      case Tok::String: {
        advance();
        return FormulaNode::text_literal(t.text);
      }
      case Tok::LParen: {
        advance();
        FormulaNode inner = comparison();
        if (peek().kind != Tok::RParen) fail({")"});
        advance();
        return inner;
      }
      case Tok::Quoted: {
        advance();
        if (peek().kind != Tok::Bang) fail({"!"});
        advance();
        std::string sheet = t.text;
        return reference_tail(cell_after_sheet(sheet));
      }
      case Tok::Word: {
        const Token& word = advance();
        if (peek().kind == Tok::Bang) {
          advance();
          return reference_tail(cell_after_sheet(word.text));
        }
        if (peek().kind == Tok::LParen) return call(word);
        if (iequals(word.text, "TRUE")) return FormulaNode::boolean_literal(true);
        if (iequals(word.text, "FALSE")) return FormulaNode::boolean_literal(false);
        CellAddress a;
        if (try_parse_a1(word.text, a)) {
          a.sheet = sheet_;
          return reference_tail(std::move(a));
        }
        throw ParseError(word.offset, {"cell reference", "function", "literal"},
                         "unknown name '" + word.text + "' at offset " +
                             std::to_string(word.offset));
      }
      default:
        fail({"expression"});
    }
  }

  FormulaNode call(const Token& name) {
    const auto fn = lookup_function(name.text);
    if (!fn) throw UnknownFunction(name.offset, name.text);
    advance();  // '('
    std::vector<FormulaNode> args;
    if (peek().kind != Tok::RParen) {
      args.push_back(comparison());
      while (peek().kind == Tok::Comma) {
        advance();
        args.push_back(comparison());
      }
    }
    if (peek().kind != Tok::RParen) fail({",", ")"});
    const std::size_t close = peek().offset;
    advance();
    std::size_t want_min = 1;
    std::size_t want_max = SIZE_MAX;
    if (*fn == Function::If) want_min = want_max = 3;
    if (*fn == Function::Round) want_min = want_max = 2;
    if (*fn == Function::Abs) want_min = want_max = 1;
    if (args.size() < want_min || args.size() > want_max) {
      std::string msg = std::string(function_name(*fn)) + " takes ";
      msg += want_min == want_max ? std::to_string(want_min)
                                  : "at least " + std::to_string(want_min);
      msg += " argument(s), got " + std::to_string(args.size()) + " (offset " +
             std::to_string(name.offset) + ")";
      throw ParseError(close, {"argument"}, msg);
    }
    return FormulaNode::call(*fn, std::move(args));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::string sheet_;
};

// ---------------------------------------------------------------------------
// Printer

// Binding strength used for parenthesization.
int precedence(const FormulaNode& n) {
  switch (n.kind) {
    case NodeKind::Number: return std::signbit(n.number) ? 5 : 7;
    case NodeKind::Unary: return 5;
    case NodeKind::Binary:
      switch (n.op) {
        case Operator::Pow: return 6;
        case Operator::Mul:
        case Operator::Div: return 4;
        case Operator::Add:
        case Operator::Sub: return 3;
        case Operator::Concat: return 2;
        default: return 1;
      }
    default: return 7;
  }
}

class Printer {
 public:
  Printer(const std::string& home, bool mask_refs) : home_(home), mask_(mask_refs) {}

  void print(const FormulaNode& n, std::string& out) const {
    switch (n.kind) {
      case NodeKind::Number: out += format_number(n.number); return;
      case NodeKind::Text:
        out += '"';
        for (char c : n.text) {
          out += c;
          if (c == '"') out += '"';
        }
        out += '"';
        return;
      case NodeKind::Boolean: out += n.boolean ? "TRUE" : "FALSE"; return;
      case NodeKind::Ref: out += mask_ ? "R" : ref_text(n.ref); return;
      case NodeKind::Range:
        if (mask_) {
          out += "R:R";
        } else {
          out += ref_text(n.ref);
          out += ':';
          out += format_a1(n.range_end);
        }
        return;
      case NodeKind::Unary:
        out += operator_symbol(n.op);
        wrap(n.children[0], precedence(n.children[0]) < 5, out);
        return;
      case NodeKind::Binary: {
        const int p = precedence(n);
        const FormulaNode& lhs = n.children[0];
        const FormulaNode& rhs = n.children[1];
        if (n.op == Operator::Pow) {
          wrap(lhs, precedence(lhs) <= p, out);
          out += '^';
          wrap(rhs, precedence(rhs) < 5, out);
        } else {
          wrap(lhs, precedence(lhs) < p, out);
          out += operator_symbol(n.op);
          wrap(rhs, precedence(rhs) <= p, out);
        }
        return;
      }
      case NodeKind::Call:
        out += function_name(n.function);
        out += '(';
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          if (i) out += ',';
          print(n.children[i], out);
        }
        out += ')';
        return;
    }
  }

 private:
  void wrap(const FormulaNode& n, bool parens, std::string& out) const {
    if (parens) out += '(';
    print(n, out);
    if (parens) out += ')';
  }

  std::string ref_text(const CellAddress& a) const {
    if (a.sheet == home_) return format_a1(a);
    return quote_sheet(a.sheet) + "!" + format_a1(a);
  }

  const std::string& home_;
  bool mask_;
};

void collect_refs(const FormulaNode& n, std::vector<std::size_t>& path, RefList& out) {
  if (n.kind == NodeKind::Ref || n.kind == NodeKind::Range) {
    RefOccurrence r;
    r.ordinal = out.size();
    r.start = n.ref;
    if (n.kind == NodeKind::Range) r.end = n.range_end;
    r.path = path;
    out.push_back(std::move(r));
    return;
  }
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    path.push_back(i);
    collect_refs(n.children[i], path, out);
    path.pop_back();
  }
}

template <typename Fn>
void for_each_number(FormulaNode& n, Fn&& fn) {
  if (n.kind == NodeKind::Number) {
    fn(n);
    return;
  }
  for (auto& c : n.children) for_each_number(c, fn);
}

template <typename Fn>
void for_each_number(const FormulaNode& n, Fn&& fn) {
  if (n.kind == NodeKind::Number) {
    fn(n);
    return;
  }
  for (const auto& c : n.children) for_each_number(c, fn);
}

}  // namespace

FormulaAst parse_formula(std::string_view source, std::string_view default_sheet) {
  std::size_t start = 0;
  while (start < source.size() && std::isspace(static_cast<unsigned char>(source[start])))
    ++start;
  if (start >= source.size() || source[start] != '=')
    throw ParseError(start, {"="}, "formula must start with '='");
  Parser parser(lex(source, start + 1), std::string(default_sheet));
  return FormulaAst{parser.parse(), std::string(default_sheet)};
}

std::string print_formula(const FormulaAst& ast) {
  std::string out = "=";
  Printer(ast.home_sheet, false).print(ast.root, out);
  return out;
}

NormalizedFormula normalize(const FormulaAst& ast) {
  std::string out;
  Printer(ast.home_sheet, true).print(ast.root, out);
  return out;
}

RefList extract_refs(const FormulaAst& ast) {
  RefList out;
  std::vector<std::size_t> path;
  collect_refs(ast.root, path, out);
  return out;
}

std::size_t count_number_literals(const FormulaNode& node) {
  std::size_t n = 0;
  for_each_number(node, [&](const FormulaNode&) { ++n; });
  return n;
}

std::vector<LiteralSlot> extract_literal_slots(const FormulaAst& ast,
                                               const CellAddress& owner) {
  std::vector<LiteralSlot> out;
  for_each_number(ast.root, [&](const FormulaNode& n) {
    out.push_back(LiteralSlot{owner, out.size(), n.number});
  });
  return out;
}

FormulaAst rewrite_literals(const FormulaAst& ast,
                            const std::map<std::size_t, double>& assignment) {
  const std::size_t count = count_number_literals(ast.root);
  for (const auto& [ordinal, value] : assignment)
    if (ordinal >= count) throw UnknownSlot(ordinal);
  FormulaAst out = ast;
  std::size_t ordinal = 0;
  for_each_number(out.root, [&](FormulaNode& n) {
    if (auto it = assignment.find(ordinal); it != assignment.end()) n.number = it->second;
    ++ordinal;
  });
  return out;
}

}  // namespace wia
