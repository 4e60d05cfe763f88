#include <charconv>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "kamdnlw/vf_algebra.hpp"

namespace kamdnlw {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

int to_int(const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw InvalidMonomial("malformed integer in term: '" + s + "'");
  return v;
}

std::vector<int> parse_ints(const std::string& field) {
  std::vector<int> out;
  std::istringstream in(field);
  std::string tok;
  while (in >> tok) out.push_back(to_int(tok));
  return out;
}

ExponentMap parse_exponents(const std::string& field) {
  ExponentMap e;
  if (field.empty()) return e;
  for (const auto& item : split(field, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InvalidMonomial("malformed exponent entry: '" + item + "'");
    e[to_int(trim(item.substr(0, colon)))] += to_int(trim(item.substr(colon + 1)));
  }
  return e;
}

std::string format_exponents(const ExponentMap& e) {
  std::string out;
  for (auto [j, p] : e) {
    if (!out.empty()) out += ',';
    out += std::to_string(j) + ':' + std::to_string(p);
  }
  return out;
}

std::string format_ints(const std::vector<int>& v) {
  std::string out;
  for (int x : v) {
    if (!out.empty()) out += ' ';
    out += std::to_string(x);
  }
  return out;
}

const char* axis_name(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
    case Axis::zbar: return "zbar";
  }
  return "?";
}

Component parse_component(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw InvalidMonomial("malformed component: '" + s + "'");
  const std::string name = trim(s.substr(0, colon));
  const int j = to_int(trim(s.substr(colon + 1)));
  if (name == "x") return {Axis::x, j};
  if (name == "y") return {Axis::y, j};
  if (name == "z") return {Axis::z, j};
  if (name == "zbar") return {Axis::zbar, j};
  throw InvalidMonomial("unknown component axis: '" + name + "'");
}

}  // namespace

std::string format_term(const MonomialKey& key, cplx c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g %.17g", c.real(), c.imag());
  std::string out = buf;
  out += " | " + format_ints(key.k);
  out += " | " + format_ints(key.i);
  out += " | " + format_exponents(key.alpha);
  out += " | " + format_exponents(key.beta);
  out += std::string(" | ") + axis_name(key.component.axis) + ':' +
         std::to_string(key.component.index);
  return out;
}

Monomial parse_term(const std::string& line) {
  const auto fields = split(line, '|');
  if (fields.size() != 6) throw InvalidMonomial("term needs 6 '|'-separated fields: '" + line + "'");
  Monomial m;
  std::istringstream coeff(fields[0]);
  double re = 0, im = 0;
  if (!(coeff >> re >> im)) throw InvalidMonomial("malformed coefficient: '" + fields[0] + "'");
  m.coeff = {re, im};
  m.key.k = parse_ints(fields[1]);
  m.key.i = parse_ints(fields[2]);
  m.key.alpha = parse_exponents(fields[3]);
  m.key.beta = parse_exponents(fields[4]);
  m.key.component = parse_component(fields[5]);
  return m;
}

std::string to_text(const VectorField& X) {
  std::string out;
  for (const auto& [key, c] : X.terms()) out += format_term(key, c) + '\n';
  return out;
}

std::string to_json(const VectorField& X) {
  nlohmann::ordered_json j;
  j["sites"] = X.sites().plus_sites();
  j["truncation"] = {{"j_max", X.truncation().j_max},
                     {"k_max", X.truncation().k_max},
                     {"d_max", X.truncation().d_max}};
  auto terms = nlohmann::ordered_json::array();
  for (const auto& [key, c] : X.terms()) terms.push_back(format_term(key, c));
  j["terms"] = std::move(terms);
  return j.dump(2);
}

VectorField from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Truncation t;
  t.j_max = j.at("truncation").at("j_max").get<int>();
  t.k_max = j.at("truncation").at("k_max").get<int>();
  t.d_max = j.at("truncation").at("d_max").get<int>();
  VectorField X(SiteSet(j.at("sites").get<std::vector<int>>()), t);
  for (const auto& line : j.at("terms")) X.add(parse_term(line.get<std::string>()));
  return X;
}

}  // namespace kamdnlw
