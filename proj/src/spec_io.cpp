#include "kdisc/spec_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kdisc {

using nlohmann::json;

bool is_matrix_kernel_spec(const json& j) {
  return j.is_object() && (j.contains("diagonal") || j.contains("bounded_stein_base") ||
                           (j.contains("base") && j.contains("tilt") && is_matrix_kernel_spec(j.at("base"))));
}

namespace {

const json& require_key(const json& j, const char* key, const char* where) {
  if (!j.is_object()) throw InputError(std::string(where) + ": expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(std::string(where) + ": missing \"" + key + "\"");
  return *it;
}

double number(const json& j, const char* key, const char* where, std::optional<double> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw InputError(std::string(where) + ": missing \"" + key + "\"");
  }
  const json& v = j.at(key);
  if (!v.is_number()) throw InputError(std::string(where) + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

Point vec(const json& v, const char* what) {
  if (!v.is_array()) throw InputError(std::string(what) + " must be an array of numbers");
  Point out;
  for (const json& e : v) {
    if (!e.is_number()) throw InputError(std::string(what) + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::size_t dimension(const json& j, std::optional<std::size_t> default_dim, const char* where) {
  if (j.contains("dim")) {
    const json& v = j.at("dim");
    if (!v.is_number_integer() || v.get<long long>() <= 0)
      throw InputError(std::string(where) + ": \"dim\" must be a positive integer");
    const auto d = v.get<std::size_t>();
    if (default_dim && *default_dim != d)
      throw InputError(std::string(where) + ": kernel dimension " + std::to_string(d) +
                       " does not match target dimension " + std::to_string(*default_dim));
    return d;
  }
  if (!default_dim) throw InputError(std::string(where) + ": missing \"dim\"");
  return *default_dim;
}

ScalarField parse_tilt_field(const json& t) {
  if (t.is_object() && t.contains("constant")) {
    const double v = number(t, "constant", "tilt");
    if (!(v > 0.0)) throw InputError("constant tilt must be positive");
    return constant_field(v);
  }
  return parse_tilt(t).field();
}

bool matrix_bounded(const json& j, std::optional<std::size_t> d) {
  if (j.contains("bounded_stein_base")) {
    const json& b = j.at("bounded_stein_base");
    return parse_scalar_kernel(require_key(b, "base", "bounded_stein_base"), d).bounded() &&
           parse_tilt(require_key(b, "tilt", "bounded_stein_base")).gamma >= 0.5;
  }
  if (j.contains("diagonal")) {
    const json& entries = j.at("diagonal");
    for (const json& e : entries)
      if (!parse_scalar_kernel(e, entries.size()).bounded()) return false;
    return true;
  }
  if (is_matrix_kernel_spec(j)) return parse_tilt_field(j.at("tilt")).bounded && matrix_bounded(j.at("base"), d);
  return parse_scalar_kernel(j, d).bounded();
}

}  // namespace

TiltParams parse_tilt(const json& j) {
  if (!j.is_object()) throw InputError("tilt: expected an object {\"c\": .., \"gamma\": ..}");
  TiltParams t;
  t.c = number(j, "c", "tilt", 1.0);
  t.gamma = number(j, "gamma", "tilt", 1.0);
  t.validate();
  return t;
}

ScalarKernel parse_scalar_kernel(const json& j, std::optional<std::size_t> default_dim) {
  if (!j.is_object()) throw InputError("kernel spec must be a JSON object");
  if (j.contains("tilt")) {
    const ScalarKernel base = parse_scalar_kernel(require_key(j, "base", "tilted kernel"), default_dim);
    return tilt_kernel(base, parse_tilt_field(j.at("tilt")));
  }
  const json& fam = require_key(j, "family", "kernel spec");
  if (!fam.is_string()) throw InputError("kernel spec: \"family\" must be a string");
  const KernelFamily f = parse_kernel_family(fam.get<std::string>());
  const std::size_t d = dimension(j, default_dim, "kernel spec");
  const json params = j.contains("params") ? j.at("params") : json::object();
  if (!params.is_object()) throw InputError("kernel spec: \"params\" must be an object");
  switch (f) {
    case KernelFamily::gaussian: return ScalarKernel::gaussian(d, number(params, "bandwidth", "gaussian", 1.0));
    case KernelFamily::imq:
      return ScalarKernel::imq(d, number(params, "c", "imq", 1.0), number(params, "gamma", "imq", 0.5));
    case KernelFamily::matern32: return ScalarKernel::matern32(d, number(params, "bandwidth", "matern32", 1.0));
    case KernelFamily::inverse_log:
      return ScalarKernel::inverse_log(d, number(params, "bandwidth", "inverse_log", 1.0),
                                       number(params, "offset", "inverse_log", 1.0));
    case KernelFamily::sech: return ScalarKernel::sech(d, number(params, "bandwidth", "sech", 1.0));
    case KernelFamily::linear: return ScalarKernel::linear(d);
    case KernelFamily::custom: break;
  }
  throw InputError("custom kernels can only be constructed programmatically");
}

MatrixBaseKernel parse_matrix_base(const json& j, std::optional<std::size_t> default_dim) {
  if (!j.is_object()) throw InputError("kernel spec must be a JSON object");
  if (j.contains("bounded_stein_base")) {
    const json& b = j.at("bounded_stein_base");
    return bounded_stein_base(parse_scalar_kernel(require_key(b, "base", "bounded_stein_base"), default_dim),
                              parse_tilt(require_key(b, "tilt", "bounded_stein_base")));
  }
  if (j.contains("diagonal")) {
    const json& entries = j.at("diagonal");
    if (!entries.is_array() || entries.empty()) throw InputError("\"diagonal\" must be a non-empty array of kernels");
    if (default_dim && entries.size() != *default_dim)
      throw InputError("diagonal kernel has " + std::to_string(entries.size()) + " entries, expected " +
                       std::to_string(*default_dim));
    std::vector<ScalarKernel> ks;
    for (const json& e : entries) ks.push_back(parse_scalar_kernel(e, entries.size()));
    return MatrixBaseKernel::diagonal(std::move(ks));
  }
  if (is_matrix_kernel_spec(j)) return parse_matrix_base(j.at("base"), default_dim).tilted(parse_tilt_field(j.at("tilt")));
  return MatrixBaseKernel::promote(parse_scalar_kernel(j, default_dim));
}

Target parse_target(const json& j) {
  if (!j.is_object()) throw InputError("target spec must be a JSON object");
  const json& fam = require_key(j, "family", "target spec");
  if (!fam.is_string()) throw InputError("target spec: \"family\" must be a string");
  const std::string f = fam.get<std::string>();
  auto ones_like = [](const Point& p) { return Point(p.size(), 1.0); };
  if (f == "gaussian") {
    Point mean = vec(require_key(j, "mean", "gaussian target"), "gaussian mean");
    Point cov = j.contains("cov_diag") ? vec(j.at("cov_diag"), "gaussian cov_diag") : ones_like(mean);
    return Target::gaussian(std::move(mean), std::move(cov));
  }
  if (f == "standard_normal") {
    const json& d = require_key(j, "dim", "standard_normal target");
    if (!d.is_number_integer() || d.get<long long>() <= 0) throw InputError("standard_normal: dim must be positive");
    return Target::standard_normal(d.get<std::size_t>());
  }
  if (f == "gaussian_mixture") {
    Point w = vec(require_key(j, "weights", "gaussian_mixture target"), "mixture weights");
    std::vector<Point> means, covs;
    const json& m = require_key(j, "means", "gaussian_mixture target");
    if (!m.is_array()) throw InputError("mixture means must be an array of arrays");
    for (const json& e : m) means.push_back(vec(e, "mixture mean"));
    if (j.contains("cov_diags")) {
      if (!j.at("cov_diags").is_array()) throw InputError("mixture cov_diags must be an array of arrays");
      for (const json& e : j.at("cov_diags")) covs.push_back(vec(e, "mixture cov_diag"));
    } else {
      for (const Point& p : means) covs.push_back(ones_like(p));
    }
    return Target::gaussian_mixture(std::move(w), std::move(means), std::move(covs));
  }
  if (f == "student_t" || f == "cauchy") {
    Point loc = vec(require_key(j, "loc", "student_t target"), "loc");
    Point scale = j.contains("scale") ? vec(j.at("scale"), "scale") : ones_like(loc);
    if (f == "cauchy") return Target::cauchy(std::move(loc), std::move(scale));
    return Target::student_t(number(j, "nu", "student_t target"), std::move(loc), std::move(scale));
  }
  if (f == "custom") throw InputError("custom targets can only be constructed programmatically");
  throw InputError("unknown target family '" + f + "'");
}

DissipativityParams parse_dissipativity(const json& j) {
  if (!j.is_object()) throw InputError("dissipativity params must be an object");
  DissipativityParams p;
  p.u = number(j, "u", "dissipativity", p.u);
  p.r0 = number(j, "r0", "dissipativity", p.r0);
  p.r1 = number(j, "r1", "dissipativity", p.r1);
  p.r2 = number(j, "r2", "dissipativity", p.r2);
  p.validate();
  return p;
}

SteinSpec parse_stein(const json& j) {
  if (!j.is_object()) throw InputError("stein spec must be a JSON object");
  Target target = parse_target(require_key(j, "target", "stein spec"));
  const json* kj = j.contains("base") ? &j.at("base") : j.contains("kernel") ? &j.at("kernel") : nullptr;
  if (!kj) throw InputError("stein spec: missing \"base\" kernel");
  const std::size_t d = target.dim();

  std::optional<ScalarKernel> scalar;
  std::optional<TiltParams> tilt;
  if (j.contains("tilt") && !j.at("tilt").is_null()) tilt = parse_tilt(j.at("tilt"));
  if (!is_matrix_kernel_spec(*kj)) scalar = parse_scalar_kernel(*kj, d);
  if (tilt && !scalar) throw InputError("stein spec: a top-level tilt needs a scalar base kernel");

  MatrixBaseKernel base = tilt ? bounded_stein_base(*scalar, *tilt)
                               : scalar ? MatrixBaseKernel::promote(*scalar)
                                        : parse_matrix_base(*kj, d);
  const bool bounded = tilt ? scalar->bounded() && tilt->gamma >= 0.5 : matrix_bounded(*kj, d);
  return {std::move(scalar), tilt, bounded, SteinKernel(std::move(base), std::move(target))};
}

SampleSet parse_samples_csv(const std::string& text, const std::string& source) {
  std::vector<double> values;
  std::size_t dim = 0, row = 0, line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t cols = 0, pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const auto b = field.find_first_not_of(" \t"), e = field.find_last_not_of(" \t");
      field = b == std::string::npos ? std::string() : field.substr(b, e - b + 1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      const std::string where = source + ": row " + std::to_string(row + 1) + " (line " + std::to_string(line_no) + ")";
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw InputError(where + ": cannot parse '" + field + "' as a number");
      if (!std::isfinite(v)) throw InputError(where + ": non-finite coordinate '" + field + "'");
      values.push_back(v);
      ++cols;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (dim == 0) dim = cols;
    else if (cols != dim)
      throw InputError(source + ": row " + std::to_string(row + 1) + " has " + std::to_string(cols) +
                       " columns, expected " + std::to_string(dim));
    ++row;
  }
  if (row == 0) throw InputError(source + ": no samples");
  return {dim, std::move(values)};
}

SampleSet read_samples_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open sample file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_samples_csv(ss.str(), path);
}

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

std::string samples_to_csv(const SampleSet& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec p = s.point(i);
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (a) out += ',';
      out += format_double(p[a]);
    }
    out += '\n';
  }
  return out;
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += format_double(r[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace kdisc
