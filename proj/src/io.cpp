#include "nilflow/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace nilflow {

using nlohmann::json;

namespace {

json nest3(const std::vector<double>& flat, int a, int b, int c) {
  json out = json::array();
  for (int i = 0; i < a; ++i) {
    json mid = json::array();
    for (int j = 0; j < b; ++j) {
      json row = json::array();
      for (int k = 0; k < c; ++k) row.push_back(flat[(static_cast<std::size_t>(i) * b + j) * c + k]);
      mid.push_back(std::move(row));
    }
    out.push_back(std::move(mid));
  }
  return out;
}

std::vector<double> flatten3(const json& doc, const char* field, int a, int b, int c) {
  const std::string name(field);
  if (!doc.contains(name)) throw SpecError("spec: missing field '" + name + "'");
  const json& t = doc.at(name);
  auto bad = [&](const std::string& why) {
    return SpecError("spec: field '" + name + "' " + why + " (expected shape " + std::to_string(a) +
                     "x" + std::to_string(b) + "x" + std::to_string(c) + ")");
  };
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(a) * b * c);
  if (!t.is_array() || static_cast<int>(t.size()) != a) throw bad("has wrong outer length");
  for (const auto& mid : t) {
    if (!mid.is_array() || static_cast<int>(mid.size()) != b) throw bad("has wrong middle length");
    for (const auto& row : mid) {
      if (!row.is_array() || static_cast<int>(row.size()) != c) throw bad("has wrong inner length");
      for (const auto& v : row) {
        if (!v.is_number()) throw bad("contains a non-numeric entry");
        out.push_back(v.get<double>());
      }
    }
  }
  return out;
}

int positive_int(const json& doc, const char* field) {
  const std::string name(field);
  if (!doc.contains(name)) throw SpecError("spec: missing field '" + name + "'");
  const json& v = doc.at(name);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw SpecError("spec: field '" + name + "' must be a positive integer");
  return v.get<int>();
}

}  // namespace

json spec_to_json(const ExtensionSpec& spec) {
  const int m = spec.m(), n = spec.n();
  json doc;
  doc["m"] = m;
  doc["N"] = n;
  doc["step"] = spec.step();
  doc["omega"] = nest3(spec.omega_data(), m, m, n);
  doc["alpha"] = nest3(spec.alpha_data(), m, n, n);
  doc["v_bracket"] = nest3(spec.v_bracket_data(), n, n, n);
  return doc;
}

ExtensionSpec spec_from_json(const json& doc) {
  if (!doc.is_object()) throw SpecError("spec: document must be a JSON object");
  const int m = positive_int(doc, "m");
  const int n = positive_int(doc, "N");
  const int step = positive_int(doc, "step");
  auto omega = flatten3(doc, "omega", m, m, n);
  auto alpha = flatten3(doc, "alpha", m, n, n);
  auto vb = flatten3(doc, "v_bracket", n, n, n);
  return ExtensionSpec(m, n, step, std::move(omega), std::move(alpha), std::move(vb));
}

ExtensionSpec read_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("spec: cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("spec: malformed JSON: ") + e.what());
  }
  return spec_from_json(doc);
}

void write_spec_file(const ExtensionSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << spec_to_json(spec).dump(2) << '\n';
}

std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string spec_hash(const ExtensionSpec& spec) { return sha256_hex(spec_to_json(spec).dump()); }

Element parse_element_csv(const std::string& text, int m, int n) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    if (b == std::string::npos) throw ShapeError("element: empty coordinate");
    tok = tok.substr(b, e - b + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw ShapeError("element: cannot parse '" + tok + "'");
    vals.push_back(v);
  }
  if (static_cast<int>(vals.size()) != m + n)
    throw ShapeError("element: expected " + std::to_string(m + n) + " coordinates, got " +
                     std::to_string(vals.size()));
  return Element(m, Eigen::Map<Eigen::VectorXd>(vals.data(), m + n));
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

std::string element_to_csv(const Element& x) {
  std::string out;
  for (int i = 0; i < x.dim(); ++i) {
    if (i) out.push_back(',');
    out += format_double(x[i]);
  }
  return out;
}

json validation_to_json(const ValidationReport& rep) {
  json doc;
  doc["passed"] = rep.passed();
  doc["tolerance"] = rep.tolerance;
  doc["declared_step"] = rep.declared_step;
  doc["detected_step"] = rep.detected_step;
  doc["c0_estimate"] = rep.c0;
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name}, {"max_violation", c.max_violation}, {"passed", c.passed}});
  doc["checks"] = std::move(checks);
  return doc;
}

}  // namespace nilflow
