#include "kdisc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kdisc/discrepancy.hpp"
#include "kdisc/experiments.hpp"
#include "kdisc/inference.hpp"
#include "kdisc/reduce.hpp"
#include "kdisc/spec_io.hpp"

namespace kdisc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Context {
  json config;
  fs::path base_dir;  // relative input paths resolve against the config file
  std::uint64_t seed = 0;
};

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  const json& s = j.at(key);
  if (!s.is_object()) throw InputError(std::string("config: \"") + key + "\" must be an object");
  return s;
}

double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw InputError(std::string("config: \"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

std::size_t get_count(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw InputError(std::string("config: \"") + key + "\" must be a nonnegative integer");
  return v.get<std::size_t>();
}

std::vector<double> get_numbers(const json& j, const char* key, std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_array()) throw InputError(std::string("config: \"") + key + "\" must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw InputError(std::string("config: \"") + key + "\" must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

const json& require(const json& j, const char* key) {
  if (!j.contains(key)) throw InputError(std::string("config: missing \"") + key + "\"");
  return j.at(key);
}

SampleSet load_samples(const Context& ctx, const json& v, const char* what) {
  if (v.is_string()) {
    fs::path p = v.get<std::string>();
    if (p.is_relative()) p = ctx.base_dir / p;
    return read_samples_csv(p.string());
  }
  if (v.is_array()) {
    std::vector<Point> pts;
    for (const json& row : v) {
      if (!row.is_array()) throw InputError(std::string(what) + ": inline samples must be an array of arrays");
      Point p;
      for (const json& e : row) {
        if (!e.is_number()) throw InputError(std::string(what) + ": row " + std::to_string(pts.size() + 1) +
                                             " has a non-numeric entry");
        p.push_back(e.get<double>());
      }
      pts.push_back(std::move(p));
    }
    return SampleSet::from_points(pts);
  }
  if (v.is_object()) {
    // {"target": spec, "n": count} draws from a built-in sampler.
    const Target t = parse_target(require(v, "target"));
    return draw_samples(t, get_count(v, "n", 0), ctx.seed);
  }
  throw InputError(std::string(what) + ": expected a CSV path, an array of points or {\"target\", \"n\"}");
}

SampleSet with_weights(const Context& ctx, const SampleSet& s, const char* key) {
  const json& c = ctx.config;
  if (!c.contains(key)) return s;
  return {s.dim(), s.data(), get_numbers(c, key, {})};
}

void require_dim(const SampleSet& s, std::size_t d, const char* what) {
  if (s.dim() != d)
    throw InputError(std::string(what) + " have dimension " + std::to_string(s.dim()) + ", target has " +
                     std::to_string(d));
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string cmd_ksd(const Context& ctx) {
  const SteinSpec spec = parse_stein(ctx.config);
  const std::string est = ctx.config.value("estimator", std::string("v_stat"));
  if (est == "quadrature") {
    const Target q = parse_target(require(ctx.config, "q"));
    if (q.dim() != 1 || !q.has_pdf()) throw InputError("quadrature KSD needs a one-dimensional q with a density");
    Interval dom{-INFINITY, INFINITY};
    if (ctx.config.contains("domain")) {
      const json& d = ctx.config.at("domain");
      if (!d.is_array() || d.size() != 2) throw InputError("config: \"domain\" must be [lo, hi]");
      if (!d[0].is_null()) dom.lo = d[0].get<double>();
      if (!d[1].is_null()) dom.hi = d[1].get<double>();
    }
    auto density = [&](double x) {
      const double xx[1] = {x};
      return q.pdf(xx);
    };
    return dump(ksd_quadrature_1d(spec.stein, density, dom, get_number(ctx.config, "tol", 1e-10)).to_json());
  }
  const SampleSet s = with_weights(ctx, load_samples(ctx, require(ctx.config, "samples"), "samples"), "weights");
  require_dim(s, spec.stein.dim(), "samples");
  if (est == "v_stat") return dump(ksd_v_stat(spec.stein, s).to_json());
  if (est == "u_stat") return dump(ksd_u_stat(spec.stein, s).to_json());
  throw InputError("config: unknown estimator '" + est + "'");
}

std::string cmd_mmd(const Context& ctx) {
  const SampleSet q = with_weights(ctx, load_samples(ctx, require(ctx.config, "samples"), "samples"), "weights");
  const SampleSet p =
      with_weights(ctx, load_samples(ctx, require(ctx.config, "reference"), "reference"), "reference_weights");
  const json& kj = ctx.config.contains("kernel") ? ctx.config.at("kernel") : require(ctx.config, "base");
  const ScalarKernel k = parse_scalar_kernel(kj, q.dim());
  return dump(mmd_v_stat(k, q, p).to_json());
}

std::string cmd_gof(const Context& ctx) {
  const SteinSpec spec = parse_stein(ctx.config);
  const SampleSet s = load_samples(ctx, require(ctx.config, "samples"), "samples");
  require_dim(s, spec.stein.dim(), "samples");
  const TestResult r = gof_test(spec.stein, s, get_number(ctx.config, "alpha", 0.05),
                                get_count(ctx.config, "n_bootstrap", 1000), ctx.seed);
  return dump(r.to_json());
}

std::string summary_header(std::size_t d) {
  std::string h = "iteration";
  for (const char* name : {"mean", "variance"})
    for (std::size_t a = 0; a < d; ++a) h += "," + std::string(name) + (d == 1 ? "" : "_" + std::to_string(a + 1));
  return h + ",ksd\n";
}

std::string cmd_svgd(const Context& ctx) {
  const json& c = ctx.config;
  const json& sv = section(c, "svgd");
  SVGDConfig cfg;
  cfg.step_size = get_number(sv, "step_size", cfg.step_size);
  cfg.iterations = get_count(sv, "iterations", cfg.iterations);
  cfg.seed = ctx.seed;
  if (sv.contains("kernel_choice")) cfg.kernel_choice = parse_svgd_kernel_choice(sv.at("kernel_choice").get<std::string>());
  if (c.contains("tilt")) {
    cfg.tilt = parse_tilt(c.at("tilt"));
    cfg.kernel_choice = SvgdKernelChoice::bounded_stein_construction;
  }

  const Target target = parse_target(require(c, "target"));
  const json& kj = c.contains("base") ? c.at("base") : require(c, "kernel");
  const std::variant<ScalarKernel, MatrixBaseKernel> kernel =
      is_matrix_kernel_spec(kj) ? std::variant<ScalarKernel, MatrixBaseKernel>(parse_matrix_base(kj, target.dim()))
                                : parse_scalar_kernel(kj, target.dim());
  const SampleSet initial = load_samples(ctx, c.contains("initial") ? c.at("initial") : require(c, "samples"), "initial");
  require_dim(initial, target.dim(), "initial particles");

  std::string trace;
  SvgdObserver observer;
  const bool tracing = sv.contains("trace");
  if (tracing) {
    trace = summary_header(initial.dim());
    observer = [&](const SvgdSummary& s) {
      trace += std::to_string(s.iteration);
      for (double v : s.mean) trace += "," + format_double(v);
      for (double v : s.variance) trace += "," + format_double(v);
      trace += "," + format_double(s.ksd) + "\n";
    };
  }
  const SampleSet out = svgd_run(target, cfg, initial, kernel, observer);
  if (tracing) {
    fs::path p = sv.at("trace").get<std::string>();
    if (p.is_relative()) p = ctx.base_dir / p;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write SVGD trace to '" + p.string() + "'");
    f << trace;
  }

  const SvgdSummary s = summarize_particles(out);
  json particles = json::array();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec p = out.point(i);
    particles.push_back(std::vector<double>(p.begin(), p.end()));
  }
  return dump({{"config", cfg.to_json()},
               {"n_particles", out.size()},
               {"mean", s.mean},
               {"variance", s.variance},
               {"particles", particles}});
}

constexpr const char* kFailureWarning =
    "bounded base kernel with decaying score: the KSD fails to control P-convergence "
    "(mass escaping to infinity can have vanishing KSD)";

std::string cmd_diagnose(const Context& ctx) {
  const SteinSpec spec = parse_stein(ctx.config);
  const Target& target = spec.stein.target();
  const json& dj = section(ctx.config, "diagnose");
  const std::vector<double> radii = get_numbers(dj, "radii", {1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0});
  const std::size_t directions = get_count(dj, "directions", 64);
  const std::size_t n = get_count(dj, "n", 1000);
  const DissipativityParams dp = dj.contains("dissipativity") ? parse_dissipativity(dj.at("dissipativity"))
                                                              : DissipativityParams{};

  json warnings = json::array();
  json report = {{"target", target.spec()}, {"base", spec.stein.base().spec()}, {"base_bounded", spec.bounded}};

  if (target.has_sampler()) {
    report["embeddability"] = embeddability_diagnostics(spec.stein, n, ctx.seed).to_json();
  } else {
    report["embeddability"] = nullptr;
    warnings.push_back("embeddability diagnostics skipped: the target has no sampler");
  }

  const DissipativityReport dr = check_dissipativity(target, dp, radii, directions, ctx.seed);
  report["dissipativity"] = {{"params", {{"u", dp.u}, {"r0", dp.r0}, {"r1", dp.r1}, {"r2", dp.r2}}},
                             {"holds", dr.holds},
                             {"worst_margin", dr.worst_margin},
                             {"worst_point", dr.worst_point},
                             {"points_checked", dr.points_checked},
                             {"drift_radius", dr.drift_radius ? json(*dr.drift_radius) : json(nullptr)}};

  const ScoreGrowthReport gr = score_growth_probe(target, radii, directions, ctx.seed);
  const bool decaying = gr.score_decaying();
  report["score_growth"] = {{"radii", gr.radii},
                            {"max_ratio_per_radius", gr.max_ratio_per_radius},
                            {"max_score_norm_per_radius", gr.max_score_norm_per_radius},
                            {"score_decaying", decaying}};
  if (!dr.holds) warnings.push_back("generalized dissipativity fails on the sampled grid");
  if (spec.bounded && decaying) warnings.push_back(kFailureWarning);
  report["warnings"] = warnings;
  return dump(report);
}

std::vector<std::size_t> n_grid(const json& e) {
  if (e.contains("n_grid")) {
    const json& g = e.at("n_grid");
    if (!g.is_array()) throw InputError("config: \"n_grid\" must be an array of positive integers");
    std::vector<std::size_t> out;
    for (const json& v : g) {
      if (!v.is_number_integer() || v.get<long long>() <= 0)
        throw InputError("config: \"n_grid\" must be an array of positive integers");
      out.push_back(v.get<std::size_t>());
    }
    if (out.empty()) throw InputError("config: \"n_grid\" is empty");
    return out;
  }
  const std::size_t n_max = get_count(e, "n_max", 50);
  if (n_max == 0) throw InputError("config: \"n_max\" must be positive");
  std::vector<std::size_t> out(n_max);
  for (std::size_t i = 0; i < n_max; ++i) out[i] = i + 1;
  return out;
}

std::string cmd_experiment(const Context& ctx) {
  const json& e = require(ctx.config, "experiment");
  if (!e.is_object() || !e.contains("name") || !e.at("name").is_string())
    throw InputError("config: \"experiment\" must be an object with a \"name\"");
  const std::string name = e.at("name").get<std::string>();
  ScanOptions scan;
  scan.radii = get_numbers(e, "radii", scan.radii);
  scan.directions = get_count(e, "directions", scan.directions);
  scan.seed = ctx.seed;

  if (name == "dissipativity_report") {
    const Target t = parse_target(require(ctx.config, "target"));
    const DissipativityParams dp = e.contains("dissipativity") ? parse_dissipativity(e.at("dissipativity"))
                                                               : DissipativityParams{};
    return dissipativity_table(t, dp, scan).to_csv();
  }
  const SteinSpec spec = parse_stein(ctx.config);
  if (name == "escape_sequence") {
    const TargetFamily f = spec.stein.target().family();
    if (f != TargetFamily::cauchy && f != TargetFamily::student_t && f != TargetFamily::gaussian)
      throw InputError("escape_sequence needs a cauchy, student_t or gaussian target");
    if (!spec.bounded) throw InputError("escape_sequence needs a bounded base kernel");
    EscapeOptions o;
    o.n_max = get_count(e, "n_max", o.n_max);
    o.step = get_number(e, "step", o.step);
    return escape_sequence(spec.stein, o).to_csv();
  }
  if (name == "convergence_curve") {
    ConvergenceOptions o;
    o.sequence = parse_convergence_sequence(e.value("sequence", std::string("shrinking_shift")));
    o.n_grid = n_grid(e);
    o.tol = get_number(e, "tol", o.tol);
    return convergence_curve(spec.stein, o).to_csv();
  }
  if (name == "boundedness_scan") return boundedness_scan(spec.stein, scan).to_csv();
  throw InputError("unknown experiment '" + name + "'");
}

json load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    json j = json::parse(ss.str());
    if (!j.is_object()) throw InputError("config '" + path + "' must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw InputError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel Stein and maximum mean discrepancies"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, output_path;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "JSON config")->required();
  auto* seed_opt = app.add_option("--seed", seed, "seed, overrides the config's \"seed\"");
  app.add_option("--output", output_path, "write the result here instead of stdout");
  app.add_option("--threads", threads, "OpenMP threads")->check(CLI::PositiveNumber);

  using Handler = std::string (*)(const Context&);
  std::vector<std::pair<CLI::App*, Handler>> commands = {
      {app.add_subcommand("ksd", "kernel Stein discrepancy of a sample or a 1-d density"), cmd_ksd},
      {app.add_subcommand("mmd", "maximum mean discrepancy between two samples"), cmd_mmd},
      {app.add_subcommand("gof", "KSD goodness-of-fit test with wild bootstrap"), cmd_gof},
      {app.add_subcommand("svgd", "Stein variational gradient descent"), cmd_svgd},
      {app.add_subcommand("diagnose", "embeddability, dissipativity and score-growth report"), cmd_diagnose},
      {app.add_subcommand("experiment", "escape, convergence, boundedness and dissipativity tables"), cmd_experiment},
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : input_error;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    Context ctx;
    ctx.config = load_config(config_path);
    ctx.base_dir = fs::path(config_path).parent_path();
    if (ctx.config.contains("seed")) {
      const json& s = ctx.config.at("seed");
      if (!s.is_number_unsigned()) throw InputError("config: \"seed\" must be a nonnegative integer");
      ctx.seed = s.get<std::uint64_t>();
    }
    if (seed_opt->count() > 0) ctx.seed = seed;

    std::string result;
    for (const auto& [sub, handler] : commands)
      if (sub->parsed()) result = handler(ctx);

    if (output_path.empty()) {
      out << result;
    } else {
      std::ofstream f(output_path, std::ios::binary);
      if (!f) throw InputError("cannot write output to '" + output_path + "'");
      f << result;
      if (!f) throw InputError("failed writing output to '" + output_path + "'");
    }
    return ok;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return input_error;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed config: " << e.what() << "\n";
    return input_error;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical_error;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical_error;
  }
}

}  // namespace kdisc::cli
