#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spnmap/spn.hpp"

namespace spnmap {

class ParseError : public SpnError {
 public:
  ParseError(int line, int column, const std::string& what)
      : SpnError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

namespace detail {

struct Token {
  std::string_view text;
  int column;  // 1-based
};

// Splits a line on whitespace after stripping a '#' comment.
inline std::vector<Token> tokenize(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

inline int parse_int(const Token& t, int line) {
  int v = 0;
  auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (ec != std::errc{} || p != t.text.data() + t.text.size())
    throw ParseError(line, t.column, "expected integer, got '" + std::string(t.text) + "'");
  return v;
}

inline double parse_double(const Token& t, int line) {
  double v = 0;
  auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
  if (ec != std::errc{} || p != t.text.data() + t.text.size())
    throw ParseError(line, t.column, "expected number, got '" + std::string(t.text) + "'");
  return v;
}

// Shortest decimal that reads back to the same double.
inline std::string format_exact(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

// Fixed significant-digit formatting used for scores (17 digits round-trips).
inline std::string format_score(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpnError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Parses the line-based SPN format:
///
///     SPN <num_vars>
///     CARD <var> <k>                 (optional, default 2)
///     L <var> <val>                  indicator
///     S <child> <w> <child> <w> ...  sum
///     P <child> <child> ...          product
///
/// Node ids are implicit in line order and the last node is the root.
inline Spn parse_spn(std::string_view text) {
  const auto lines = detail::split_lines(text);
  VariableTable vars;
  bool have_header = false;
  std::vector<Node> nodes;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const int ln = static_cast<int>(li) + 1;
    const auto tok = detail::tokenize(lines[li]);
    if (tok.empty()) continue;
    const std::string_view kw = tok[0].text;
    if (!have_header) {
      if (kw != "SPN") throw ParseError(ln, tok[0].column, "expected 'SPN <num_vars>' header");
      if (tok.size() != 2) throw ParseError(ln, tok[0].column, "header takes exactly one argument");
      const int n = detail::parse_int(tok[1], ln);
      if (n <= 0) throw ParseError(ln, tok[1].column, "variable count must be positive");
      vars = VariableTable(n);
      have_header = true;
      continue;
    }
    if (kw == "CARD") {
      if (!nodes.empty()) throw ParseError(ln, tok[0].column, "CARD must precede node lines");
      if (tok.size() != 3) throw ParseError(ln, tok[0].column, "CARD takes <var> <k>");
      const int v = detail::parse_int(tok[1], ln);
      const int k = detail::parse_int(tok[2], ln);
      if (v < 0 || v >= vars.count()) throw ParseError(ln, tok[1].column, "variable out of range");
      if (k < 2 || k > kMaxCardinality) throw ParseError(ln, tok[2].column, "cardinality must be in [2, 64]");
      vars.set_cardinality(v, k);
      continue;
    }
    const int id = static_cast<int>(nodes.size());
    auto child_ref = [&](const detail::Token& t) {
      const int c = detail::parse_int(t, ln);
      if (c < 0) throw ParseError(ln, t.column, "negative child id");
      if (c >= id) throw ParseError(ln, t.column, "child " + std::to_string(c) + " does not precede node " +
                                                     std::to_string(id) + " (dangling or forward reference)");
      return c;
    };
    if (kw == "L") {
      if (tok.size() != 3) throw ParseError(ln, tok[0].column, "indicator takes <var> <val>");
      const int v = detail::parse_int(tok[1], ln);
      const int x = detail::parse_int(tok[2], ln);
      if (v < 0 || v >= vars.count()) throw ParseError(ln, tok[1].column, "variable out of range");
      if (x < 0 || x >= vars.cardinality(v)) throw ParseError(ln, tok[2].column, "value out of range");
      nodes.push_back(Node::indicator(v, x));
    } else if (kw == "S") {
      if (tok.size() < 3 || tok.size() % 2 == 0) throw ParseError(ln, tok[0].column, "sum takes <child> <weight> pairs");
      std::vector<int> ch;
      std::vector<double> w;
      for (std::size_t i = 1; i < tok.size(); i += 2) {
        ch.push_back(child_ref(tok[i]));
        const double wi = detail::parse_double(tok[i + 1], ln);
        if (!(wi >= 0.0)) throw ParseError(ln, tok[i + 1].column, "negative weight");
        w.push_back(wi);
      }
      nodes.push_back(Node::sum(std::move(ch), std::move(w)));
    } else if (kw == "P") {
      if (tok.size() < 2) throw ParseError(ln, tok[0].column, "product needs at least one child");
      std::vector<int> ch;
      for (std::size_t i = 1; i < tok.size(); ++i) ch.push_back(child_ref(tok[i]));
      nodes.push_back(Node::product(std::move(ch)));
    } else {
      throw ParseError(ln, tok[0].column, "unknown record '" + std::string(kw) + "'");
    }
  }
  if (!have_header) throw ParseError(1, 1, "missing 'SPN <num_vars>' header");
  if (nodes.empty()) throw ParseError(static_cast<int>(lines.size()), 1, "no node lines");
  return Spn(std::move(vars), std::move(nodes));
}

inline Spn load_spn(const std::string& path) { return parse_spn(read_file(path)); }

inline std::string serialize_spn(const Spn& spn) {
  std::string out = "SPN " + std::to_string(spn.num_vars());
  for (int v = 0; v < spn.num_vars(); ++v) {
    if (spn.variables().cardinality(v) != 2)
      out += "\nCARD " + std::to_string(v) + ' ' + std::to_string(spn.variables().cardinality(v));
  }
  for (const Node& n : spn.nodes()) {
    switch (n.kind) {
      case NodeKind::kIndicator:
        out += "\nL " + std::to_string(n.var) + ' ' + std::to_string(n.value);
        break;
      case NodeKind::kSum:
        out += "\nS";
        for (std::size_t i = 0; i < n.children.size(); ++i)
          out += ' ' + std::to_string(n.children[i]) + ' ' + detail::format_exact(n.weights[i]);
        break;
      case NodeKind::kProduct:
        out += "\nP";
        for (int c : n.children) out += ' ' + std::to_string(c);
        break;
    }
  }
  return out;
}

}  // namespace spnmap
