#include "memsim/config_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "memsim/errors.hpp"
#include "memsim/netlist_io.hpp"

namespace memsim {

CellField PiecewiseField::sample(const Mesh& mesh) const {
  CellField out = CellField::Constant(mesh.num_cells(), background);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double x = mesh.center_x(c);
    const double y = mesh.center_y(c);
    for (const auto& r : rects) {
      if (x >= r.x0 && x <= r.x1 && y >= r.y0 && y <= r.y1) out[c] = r.value;
    }
  }
  return out;
}

double PiecewiseField::min_value() const {
  double v = background;
  for (const auto& r : rects) v = std::min(v, r.value);
  return v;
}

double PiecewiseField::max_abs() const {
  double v = std::abs(background);
  for (const auto& r : rects) v = std::max(v, std::abs(r.value));
  return v;
}

void DeviceConfig::validate() const {
  domain.validate();
  if (nx < 2 || ny < 2) throw ConfigError("nx and ny must be at least 2");
  if (!(lambda2 > 0.0)) throw ConfigError("lambda2 must be positive");
  if (!(intrinsic > 0.0)) throw ConfigError("intrinsic density must be positive");
  if (!(n_bar.minCoeff() > 0.0) || !(p_bar.minCoeff() > 0.0)) {
    throw ConfigError("boundary densities n and p must be positive");
  }
  if (n0.min_value() < 0.0 || p0.min_value() < 0.0 || D0.min_value() < 0.0) {
    throw ConfigError("initial densities must be nonnegative");
  }
  if (!(gummel_tol > 0.0)) throw ConfigError("gummel_tol must be positive");
  if (gummel_max_iter < 1) throw ConfigError("gummel_max_iter must be at least 1");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    out.push_back(trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos
                                                                   : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])) != 0) ++i;
    const std::size_t start = i;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])) == 0) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

struct Context {
  std::size_t line;
  std::size_t value_column;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line, value_column);
  }

  double real(std::string_view text) const {
    double v = 0.0;
    if (!parse_real(text, v) || !std::isfinite(v)) fail("invalid number '" + std::string(text) + "'");
    return v;
  }

  int integer(std::string_view text) const {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail("invalid integer '" + std::string(text) + "'");
    }
    return v;
  }

  RectValue rect(std::string_view text) const {
    const auto w = words(text);
    if (w.size() != 5) fail("rect expects: x0 x1 y0 y1 value");
    RectValue r{real(w[0]), real(w[1]), real(w[2]), real(w[3]), real(w[4])};
    if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) fail("rect needs x0 < x1 and y0 < y1");
    return r;
  }

  Eigen::Vector2d pair(std::string_view text) const {
    const auto w = words(text);
    if (w.size() == 1) {
      const double v = real(w[0]);
      return {v, v};
    }
    if (w.size() == 2) return {real(w[0]), real(w[1])};
    fail("expected one value or one value per terminal");
  }

  std::vector<EdgeSegment> edge_layout(std::string_view text) const {
    std::vector<EdgeSegment> segs;
    for (auto part : split(text, ',')) {
      const auto fields = split(part, ':');
      try {
        if (fields.size() == 1) {
          segs.push_back({0.0, 1.0, parse_boundary_tag(fields[0])});
        } else if (fields.size() == 3) {
          segs.push_back({real(fields[1]), real(fields[2]), parse_boundary_tag(fields[0])});
        } else {
          fail("edge segment expects LABEL or LABEL:begin:end");
        }
      } catch (const ConfigError& e) {
        fail(e.what());
      }
    }
    return segs;
  }
};

}  // namespace

DeviceConfig parse_device_config(std::string_view text) {
  DeviceConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no, 1);
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "domain" && section != "doping" && section != "boundary" &&
          section != "initial" && section != "solver") {
        throw ParseError("unknown section '" + section + "'", line_no, 2);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key = value", line_no, 1);
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const std::size_t value_col =
        static_cast<std::size_t>(value.data() - raw.data()) + 1;
    const Context ctx{line_no, value_col};
    if (section.empty()) throw ParseError("key outside of a section", line_no, 1);
    if (value.empty()) ctx.fail("missing value for '" + key + "'");

    auto unknown = [&] { throw ParseError("unknown key '" + key + "' in [" + section + "]", line_no, 1); };

    if (section == "domain") {
      if (key == "length_x") cfg.domain.length_x = ctx.real(value);
      else if (key == "length_y") cfg.domain.length_y = ctx.real(value);
      else if (key == "nx") cfg.nx = ctx.integer(value);
      else if (key == "ny") cfg.ny = ctx.integer(value);
      else if (key == "lambda2") cfg.lambda2 = ctx.real(value);
      else if (key == "left") cfg.domain.edge(Edge::Left) = ctx.edge_layout(value);
      else if (key == "right") cfg.domain.edge(Edge::Right) = ctx.edge_layout(value);
      else if (key == "bottom") cfg.domain.edge(Edge::Bottom) = ctx.edge_layout(value);
      else if (key == "top") cfg.domain.edge(Edge::Top) = ctx.edge_layout(value);
      else unknown();
    } else if (section == "doping") {
      if (key == "intrinsic") cfg.intrinsic = ctx.real(value);
      else if (key == "background") cfg.doping.background = ctx.real(value);
      else if (key == "rect") cfg.doping.rects.push_back(ctx.rect(value));
      else unknown();
    } else if (section == "boundary") {
      if (key == "n") cfg.n_bar = ctx.pair(value);
      else if (key == "p") cfg.p_bar = ctx.pair(value);
      else unknown();
    } else if (section == "initial") {
      PiecewiseField* field = nullptr;
      bool rect = false;
      if (key == "n" || key == "n_rect") field = &cfg.n0;
      if (key == "p" || key == "p_rect") field = &cfg.p0;
      if (key == "D" || key == "D_rect") field = &cfg.D0;
      if (field == nullptr) unknown();
      rect = key.size() > 1;
      if (rect) field->rects.push_back(ctx.rect(value));
      else field->background = ctx.real(value);
    } else if (section == "solver") {
      if (key == "gummel_tol") cfg.gummel_tol = ctx.real(value);
      else if (key == "gummel_max_iter") cfg.gummel_max_iter = ctx.integer(value);
      else if (key == "k_trunc") {
        if (value == "off") cfg.truncation = Truncation::off();
        else {
          const double k = ctx.real(value);
          if (!(k > 0.0)) ctx.fail("k_trunc must be positive or 'off'");
          cfg.truncation = Truncation{k};
        }
      } else unknown();
    }
  }
  cfg.validate();
  return cfg;
}

DeviceConfig read_device_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open device config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_device_config(ss.str());
}

}  // namespace memsim
