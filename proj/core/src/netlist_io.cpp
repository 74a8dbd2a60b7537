#include "memsim/netlist_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "memsim/errors.hpp"

namespace memsim {

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i])) != 0) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != '#' &&
           std::isspace(static_cast<unsigned char>(line[i])) == 0) {
      ++i;
    }
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, std::size_t line_no, std::size_t line_len)
      : tokens_(std::move(tokens)), line_(line_no), end_column_(line_len + 1) {}

  std::size_t size() const { return tokens_.size(); }
  const Token& at(std::size_t i) const { return tokens_[i]; }

  [[noreturn]] void fail(const std::string& what, std::size_t token) const {
    const std::size_t col = token < tokens_.size() ? tokens_[token].column : end_column_;
    throw ParseError(what, line_, col);
  }

  void require(std::size_t count, const std::string& what) const {
    if (tokens_.size() < count) fail("expected " + what, tokens_.size());
  }

  double real(std::size_t i, const char* what) const {
    double v = 0.0;
    if (i >= tokens_.size()) fail(std::string("missing ") + what, i);
    if (!parse_real(tokens_[i].text, v) || !std::isfinite(v)) {
      fail(std::string("invalid ") + what + " '" + std::string(tokens_[i].text) + "'", i);
    }
    return v;
  }

  int node(std::size_t i) const {
    if (i >= tokens_.size()) fail("missing node", i);
    const auto t = tokens_[i].text;
    int v = -1;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || v < 0) {
      fail("invalid node '" + std::string(t) + "' (expected a nonnegative integer)", i);
    }
    return v;
  }

  void no_trailing(std::size_t i) const {
    if (i < tokens_.size()) fail("unexpected token '" + std::string(tokens_[i].text) + "'", i);
  }

 private:
  std::vector<Token> tokens_;
  std::size_t line_;
  std::size_t end_column_;
};

Waveform parse_waveform(const LineParser& p, std::size_t i) {
  if (i >= p.size()) p.fail("missing waveform (DC or SIN)", i);
  std::string kind(p.at(i).text);
  for (auto& ch : kind) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (kind == "DC") {
    const double v = p.real(i + 1, "DC value");
    p.no_trailing(i + 2);
    return Waveform::dc(v);
  }
  if (kind == "SIN") {
    const double amp = p.real(i + 1, "SIN amplitude");
    const double freq = p.real(i + 2, "SIN frequency");
    double phase = 0.0;
    if (i + 3 < p.size()) phase = p.real(i + 3, "SIN phase");
    p.no_trailing(i + 4);
    return Waveform::sin(amp, freq, phase);
  }
  p.fail("unknown waveform '" + std::string(p.at(i).text) + "' (expected DC or SIN)", i);
}

void parse_initial(const LineParser& p, Netlist& out) {
  p.require(3, ".ic target and value");
  const auto target = p.at(1).text;
  if (target.size() < 4 || target[1] != '(' || target.back() != ')') {
    p.fail("expected V(<node>) or I(<branch>)", 1);
  }
  const auto inner = target.substr(2, target.size() - 3);
  InitialValue iv;
  iv.value = p.real(2, "initial value");
  p.no_trailing(3);
  const char kind = static_cast<char>(std::toupper(static_cast<unsigned char>(target[0])));
  if (kind == 'V') {
    iv.kind = InitialValue::Kind::NodeVoltage;
    const auto [ptr, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), iv.node);
    if (ec != std::errc() || ptr != inner.data() + inner.size() || iv.node < 0) {
      p.fail("invalid node in '" + std::string(target) + "'", 1);
    }
  } else if (kind == 'I') {
    iv.kind = InitialValue::Kind::BranchCurrent;
    iv.branch = std::string(inner);
  } else {
    p.fail("expected V(<node>) or I(<branch>)", 1);
  }
  out.initial.push_back(std::move(iv));
}

}  // namespace

bool parse_real(std::string_view text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

Netlist parse_netlist(std::string_view text) {
  Netlist out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

    LineParser p(tokenize(line), line_no, line.size());
    if (p.size() == 0) continue;
    const auto head = p.at(0).text;
    if (head == ".ic" || head == ".IC") {
      parse_initial(p, out);
      continue;
    }
    if (head.size() != 1) p.fail("unknown element kind '" + std::string(head) + "'", 0);

    Element e;
    switch (std::toupper(static_cast<unsigned char>(head[0]))) {
      case 'R': e.kind = ElementKind::R; break;
      case 'C': e.kind = ElementKind::C; break;
      case 'L': e.kind = ElementKind::L; break;
      case 'V': e.kind = ElementKind::V; break;
      case 'I': e.kind = ElementKind::I; break;
      case 'M': e.kind = ElementKind::M; break;
      default: p.fail("unknown element kind '" + std::string(head) + "'", 0);
    }
    p.require(5, "<kind> <name> <n+> <n-> <value>");
    e.name = std::string(p.at(1).text);
    e.node_a = p.node(2);
    e.node_b = p.node(3);
    switch (e.kind) {
      case ElementKind::R:
      case ElementKind::C:
      case ElementKind::L:
        e.value = p.real(4, "element value");
        if (!(e.value > 0.0)) p.fail("element value must be positive", 4);
        p.no_trailing(5);
        break;
      case ElementKind::V:
      case ElementKind::I:
        e.waveform = parse_waveform(p, 4);
        break;
      case ElementKind::M: {
        const auto dev = p.at(4).text;
        constexpr std::string_view key = "device=";
        if (dev.substr(0, key.size()) != key || dev.size() == key.size()) {
          p.fail("expected device=<path>", 4);
        }
        e.device = std::string(dev.substr(key.size()));
        p.no_trailing(5);
        break;
      }
    }
    for (const auto& other : out.elements) {
      if (other.name == e.name) p.fail("duplicate element name '" + e.name + "'", 1);
    }
    out.elements.push_back(std::move(e));
  }
  return out;
}

Netlist read_netlist_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open netlist '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_netlist(ss.str());
}

std::string print_netlist(const Netlist& netlist) {
  std::ostringstream os;
  for (const auto& e : netlist.elements) {
    os << to_char(e.kind) << ' ' << e.name << ' ' << e.node_a << ' ' << e.node_b << ' ';
    switch (e.kind) {
      case ElementKind::R:
      case ElementKind::C:
      case ElementKind::L:
        os << format_real(e.value);
        break;
      case ElementKind::V:
      case ElementKind::I:
        if (e.waveform.kind == Waveform::Kind::DC) {
          os << "DC " << format_real(e.waveform.amplitude);
        } else {
          os << "SIN " << format_real(e.waveform.amplitude) << ' '
             << format_real(e.waveform.frequency) << ' ' << format_real(e.waveform.phase);
        }
        break;
      case ElementKind::M:
        os << "device=" << e.device;
        break;
    }
    os << '\n';
  }
  for (const auto& iv : netlist.initial) {
    if (iv.kind == InitialValue::Kind::NodeVoltage) {
      os << ".ic V(" << iv.node << ") " << format_real(iv.value) << '\n';
    } else {
      os << ".ic I(" << iv.branch << ") " << format_real(iv.value) << '\n';
    }
  }
  return os.str();
}

}  // namespace memsim
