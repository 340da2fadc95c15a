// mjpl command-line front end.
//
// Every subcommand resolves its parameters the same way: the --spec JSON
// object, then command-line flags on top, then defaults. Unknown spec fields
// and every invalid value are collected and reported together before any
// computation. Data go to --out (or stdout); progress and summaries go to
// stderr.
//
// Exit status: 0 success, 1 usage / input / IO error, 2 numerical failure
// (non-convergence, degenerate bootstrap, unstable quadrature).
#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mjpl/analysis.hpp"
#include "mjpl/glm.hpp"
#include "mjpl/io.hpp"
#include "mjpl/phase.hpp"
#include "mjpl/separation.hpp"
#include "mjpl/sim.hpp"

using json = nlohmann::json;
using namespace mjpl;

namespace {

#ifndef MJPL_VERSION
#define MJPL_VERSION "unknown"
#endif

constexpr int kUsage = 1;
constexpr int kNumerical = 2;

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Parameters

enum class Kind { integer, real, text, flag, integers, reals, texts, pairs, triples };

using Check = std::function<std::string(const json&)>;

struct Param {
  std::string key;
  Kind kind;
  json fallback;  // null: required unless `optional`
  std::string help;
  Check check{};
  bool optional = false;
};

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::integer: return "an integer";
    case Kind::real: return "a number";
    case Kind::text: return "a string";
    case Kind::flag: return "true or false";
    case Kind::integers: return "a list of integers";
    case Kind::reals: return "a list of numbers";
    case Kind::texts: return "a list of strings";
    case Kind::pairs: return "a list of [kappa, gamma] pairs";
    case Kind::triples: return "a list of [kappa, gamma, rho2] triples";
  }
  return "?";
}

const char* type_label(Kind k) {
  switch (k) {
    case Kind::integer: return "INT";
    case Kind::real: return "NUM";
    case Kind::flag: return "true|false";
    case Kind::integers: return "INT,...";
    case Kind::reals: return "NUM,...";
    case Kind::texts: return "NAME,...";
    default: return "TEXT";
  }
}

bool is_list(Kind k) { return k == Kind::integers || k == Kind::reals || k == Kind::texts; }

bool has_kind(const json& v, Kind k) {
  auto tuple_of = [&](std::size_t size) {
    if (!v.is_array()) return false;
    for (const auto& t : v) {
      if (!t.is_array() || t.size() != size) return false;
      for (const auto& x : t)
        if (!x.is_number()) return false;
    }
    return true;
  };
  auto all = [&](auto pred) {
    if (!v.is_array()) return false;
    for (const auto& x : v)
      if (!pred(x)) return false;
    return true;
  };
  switch (k) {
    case Kind::integer: return v.is_number_integer();
    case Kind::real: return v.is_number();
    case Kind::text: return v.is_string();
    case Kind::flag: return v.is_boolean();
    case Kind::integers: return all([](const json& x) { return x.is_number_integer(); });
    case Kind::reals: return all([](const json& x) { return x.is_number(); });
    case Kind::texts: return all([](const json& x) { return x.is_string(); });
    case Kind::pairs: return tuple_of(2);
    case Kind::triples: return tuple_of(3);
  }
  return false;
}

// Converts a command-line token; nullopt when it does not parse.
std::optional<json> scalar_from_text(const std::string& s, Kind k) {
  try {
    std::size_t used = 0;
    switch (k) {
      case Kind::integer:
      case Kind::integers: {
        const long long v = std::stoll(s, &used);
        if (used != s.size()) return std::nullopt;
        return json(v);
      }
      case Kind::real:
      case Kind::reals: {
        const double v = std::stod(s, &used);
        if (used != s.size()) return std::nullopt;
        return json(v);
      }
      case Kind::flag:
        if (s == "true" || s == "1") return json(true);
        if (s == "false" || s == "0") return json(false);
        return std::nullopt;
      default: return json(s);
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// checks
Check positive() {
  return [](const json& v) { return v.get<double>() > 0.0 ? "" : "must be > 0"; };
}
Check at_least(long long lo) {
  return [lo](const json& v) { return v.get<long long>() >= lo ? "" : "must be >= " + std::to_string(lo); };
}
Check in_closed(double lo, double hi) {
  return [lo, hi](const json& v) {
    const double x = v.get<double>();
    return x >= lo && x <= hi ? std::string() : "must lie in [" + format_double(lo) + ", " + format_double(hi) + "]";
  };
}
Check one_of(std::vector<std::string> names) {
  return [names](const json& v) {
    const auto s = v.get<std::string>();
    for (const auto& n : names)
      if (n == s) return std::string();
    std::string all;
    for (const auto& n : names) all += (all.empty() ? "" : ", ") + n;
    return "must be one of " + all;
  };
}
Check each(Check inner) {
  return [inner](const json& v) {
    for (const auto& x : v) {
      const auto msg = inner(x);
      if (!msg.empty()) return "every entry " + msg;
    }
    return v.empty() ? std::string("must not be empty") : std::string();
  };
}
Check grid_points(bool with_rho2) {
  return [with_rho2](const json& v) {
    for (const auto& t : v) {
      if (!(t[0].get<double>() > 0.0 && t[0].get<double>() < 1.0)) return std::string("kappa must lie in (0, 1)");
      if (!(t[1].get<double>() >= 0.0)) return std::string("gamma must be >= 0");
      if (with_rho2 && !(t[2].get<double>() >= 0.0 && t[2].get<double>() <= 1.0))
        return std::string("rho2 must lie in [0, 1]");
    }
    return std::string();
  };
}
Check config_name() {
  return [](const json& v) {
    try {
      parse_beta_config(v.get<std::string>());
      return std::string();
    } catch (const Error&) {
      return std::string("must be one of train-grid, s1, s2, u1, u2");
    }
  };
}

std::vector<Param> common_params() {
  const RescaleCoefficients b;
  const GlmControl c;
  return {
      {"seed", Kind::integer, 1, "random seed", at_least(0)},
      {"workers", Kind::integer, 1, "worker threads (output order does not depend on it)", at_least(1)},
      {"tol", Kind::real, c.tol, "convergence tolerance (max coefficient change)", positive()},
      {"max_iter", Kind::integer, c.max_iter, "iteration cap", at_least(1)},
      {"b0", Kind::real, b.b0, "power-law constant b0"},
      {"b1", Kind::real, b.b1, "power-law exponent of kappa"},
      {"b2", Kind::real, b.b2, "power-law exponent of gamma"},
      {"b3", Kind::real, b.b3, "power-law exponent of gamma0"},
      {"out", Kind::text, "", "output file (stdout when empty)"},
  };
}

// The resolved parameter set of one invocation.
class Spec {
 public:
  Spec(std::string command, std::vector<Param> params) : command_(std::move(command)), params_(std::move(params)) {
    for (auto& p : common_params()) params_.push_back(std::move(p));
  }

  const std::vector<Param>& params() const { return params_; }
  const std::string& command() const { return command_; }

  // Registers one flag per parameter on the subcommand.
  void attach(CLI::App& app) {
    app.add_option("--spec", spec_path_, "JSON file with parameters (flags override it)");
    for (const auto& p : params_) {
      std::string flag = "--" + p.key;
      for (auto& ch : flag)
        if (ch == '_') ch = '-';
      if (is_list(p.kind)) {
        app.add_option(flag, lists_[p.key], p.help)->delimiter(',')->type_name(type_label(p.kind));
      } else if (p.kind == Kind::pairs || p.kind == Kind::triples) {
        // spec file only
      } else {
        app.add_option(flag, scalars_[p.key], p.help)->type_name(type_label(p.kind));
      }
    }
  }

  void positional(CLI::App& app, const std::string& key, const std::string& help) {
    app.add_option(key + "_file", positional_[key], help);
  }

  // Merges spec file, flags and defaults; throws SpecError listing every
  // violation.
  void resolve(const CLI::App& app) {
    std::vector<std::string> errors;
    json file = json::object();
    if (!spec_path_.empty()) {
      std::ifstream in(spec_path_);
      if (!in) throw SpecError("cannot open spec file " + spec_path_);
      try {
        file = json::parse(in);
      } catch (const json::parse_error& e) {
        throw SpecError("spec " + spec_path_ + ": " + e.what());
      }
      if (!file.is_object()) throw SpecError("spec " + spec_path_ + ": top level must be an object");
      for (const auto& [key, _] : file.items()) {
        bool known = false;
        for (const auto& p : params_) known = known || p.key == key;
        if (!known) errors.push_back("unknown field '" + key + "'");
      }
    }
    (void)app;

    for (const auto& p : params_) {
      json value;
      bool from_flag = false;
      std::string raw;
      if (auto it = scalars_.find(p.key); it != scalars_.end()) raw = it->second;
      if (auto it = positional_.find(p.key); raw.empty() && it != positional_.end()) raw = it->second;
      if (!raw.empty()) {
        from_flag = true;
        if (auto v = scalar_from_text(raw, p.kind)) {
          value = *v;
        } else {
          errors.push_back(p.key + ": '" + raw + "' is not " + kind_name(p.kind));
          continue;
        }
      } else if (auto lt = lists_.find(p.key); lt != lists_.end() && !lt->second.empty()) {
        from_flag = true;
        value = json::array();
        bool ok = true;
        for (const auto& s : lt->second) {
          if (auto v = scalar_from_text(s, p.kind)) {
            value.push_back(*v);
          } else {
            errors.push_back(p.key + ": '" + s + "' is not " + kind_name(p.kind));
            ok = false;
          }
        }
        if (!ok) continue;
      } else if (file.contains(p.key)) {
        value = file[p.key];
      } else {
        value = p.fallback;
      }
      if (value.is_null()) {
        if (!p.optional) errors.push_back("missing required field '" + p.key + "'");
        values_[p.key] = value;
        continue;
      }
      if (!has_kind(value, p.kind)) {
        errors.push_back(p.key + ": must be " + kind_name(p.kind) + (from_flag ? "" : " (spec file)"));
        continue;
      }
      if (p.check) {
        const auto msg = p.check(value);
        if (!msg.empty()) {
          errors.push_back(p.key + ": " + msg);
          continue;
        }
      }
      values_[p.key] = value;
    }
    if (!errors.empty()) {
      std::string all = "invalid " + command_ + " parameters:";
      for (const auto& e : errors) all += "\n  - " + e;
      throw SpecError(all);
    }
  }

  // Cross-field rules, reported together in the same style.
  void require(std::vector<std::pair<bool, std::string>> rules) const {
    std::string all;
    for (const auto& [ok, msg] : rules)
      if (!ok) all += "\n  - " + msg;
    if (!all.empty()) throw SpecError("invalid " + command_ + " parameters:" + all);
  }

  bool has(const std::string& key) const { return values_.contains(key) && !values_.at(key).is_null(); }
  const json& operator[](const std::string& key) const { return values_.at(key); }
  double real(const std::string& key) const { return values_.at(key).get<double>(); }
  int integer(const std::string& key) const { return values_.at(key).get<int>(); }
  std::uint64_t seed() const { return values_.at("seed").get<std::uint64_t>(); }
  std::string text(const std::string& key) const { return values_.at(key).get<std::string>(); }
  bool flag(const std::string& key) const { return values_.at(key).get<bool>(); }
  const json& all() const { return values_; }

  RescaleCoefficients b() const {
    RescaleCoefficients b;
    b.b0 = real("b0");
    b.b1 = real("b1");
    b.b2 = real("b2");
    b.b3 = real("b3");
    return b;
  }
  GlmControl control() const {
    GlmControl c;
    c.tol = real("tol");
    c.max_iter = integer("max_iter");
    return c;
  }
  OutputMeta meta() const {
    OutputMeta m;
    m.b = b();
    m.seed = seed();
    m.control = control();
    m.extra.push_back({"command", command_});
    m.extra.push_back({"version", MJPL_VERSION});
    // where the output goes and how many threads made it do not change it
    json echoed = values_;
    for (const char* k : {"out", "workers", "truth_out"}) echoed.erase(k);
    m.extra.push_back({"spec", echoed.dump()});
    return m;
  }

 private:
  std::string command_;
  std::vector<Param> params_;
  std::string spec_path_;
  std::map<std::string, std::string> scalars_;
  std::map<std::string, std::string> positional_;
  std::map<std::string, std::vector<std::string>> lists_;
  json values_ = json::object();
};

// ---------------------------------------------------------------------------
// Output helpers

// `out.csv` -> `out.<suffix>`; used for companion files.
std::string companion(const std::string& path, const std::string& suffix) {
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? path.substr(0, dot) : path) + "." + suffix;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::invalid_argument, "cannot write " + path);
  body(out);
  if (!out) throw Error(Errc::invalid_argument, "write failed for " + path);
}

// To --out when given, else stdout. Returns the paths written.
std::vector<std::string> emit(const Spec& spec, const std::function<void(std::ostream&)>& body) {
  const auto path = spec.text("out");
  if (path.empty()) {
    body(std::cout);
    return {};
  }
  write_file(path, body);
  return {path};
}

void write_manifest(const Spec& spec, std::vector<std::string> outputs) {
  const auto path = spec.text("out");
  if (path.empty()) return;
  const auto b = spec.b();
  const auto c = spec.control();
  json m;
  m["command"] = spec.command();
  m["version"] = MJPL_VERSION;
  m["seed"] = spec.seed();
  m["constants"] = {{"b0", b.b0}, {"b1", b.b1}, {"b2", b.b2}, {"b3", b.b3}, {"phi", b.phi}};
  m["control"] = {{"tol", c.tol}, {"max_iter", c.max_iter}, {"clamp_eps", c.clamp_eps},
                  {"max_step_halvings", c.max_step_halvings}, {"divergence_guard", c.divergence_guard}};
  m["spec"] = spec.all();
  m["outputs"] = outputs;
  const auto manifest = companion(path, "manifest.json");
  write_file(manifest, [&](std::ostream& out) { out << m.dump(2) << '\n'; });
}

std::string na_or(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

Estimator estimator(const Spec& spec) { return spec.text("method") == "ml" ? Estimator::ml : Estimator::mjpl; }

ReplicationOptions replication(const Spec& spec) {
  ReplicationOptions r;
  r.b = spec.b();
  r.control = spec.control();
  r.estimator = estimator(spec);
  return r;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_fit(const Spec& spec) {
  const auto data = read_dataset_file(spec.text("data"), spec.flag("intercept"));
  const bool ml = spec.text("method") == "ml";
  const auto fit = ml ? fit_ml(data, spec.control()) : fit_mjpl(data, spec.control());
  const auto coefs = coefficients_from_fit(fit.theta, data.has_intercept);
  emit(spec, [&](std::ostream& out) {
    auto meta = spec.meta();
    meta.extra.push_back({"status", to_string(fit.status)});
    meta.extra.push_back({"iterations", std::to_string(fit.iterations)});
    meta.extra.push_back({"score_norm", format_double(fit.score_norm)});
    write_meta(out, meta);
    write_coefficients(out, coefs);
  });
  std::fprintf(stderr, "%s: %s after %d iterations, score norm %s, %.3f s\n", ml ? "ml" : "mjpl",
               to_string(fit.status).c_str(), fit.iterations, format_double(fit.score_norm).c_str(), fit.elapsed);
  return fit.converged ? 0 : kNumerical;
}

SimConfig sim_config(const Spec& spec) {
  SimConfig cfg;
  cfg.n = spec.integer("n");
  cfg.kappa = spec.real("kappa");
  cfg.gamma = spec.real("gamma");
  cfg.rho2 = spec.real("rho2");
  cfg.psi = spec.real("psi");
  cfg.beta_config = parse_beta_config(spec.text("config"));
  cfg.family = parse_covariate_family(spec.text("family"));
  cfg.lambda = spec.real("lambda");
  cfg.has_intercept = spec.flag("intercept");
  cfg.seed = spec.seed();
  cfg.point_id = spec["point_id"].get<std::uint64_t>();
  cfg.replicate = spec["replicate"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

int cmd_simulate(const Spec& spec) {
  const auto cfg = sim_config(spec);
  const auto sample = generate_dataset(cfg);
  auto outputs = emit(spec, [&](std::ostream& out) {
    auto meta = spec.meta();
    meta.extra.push_back({"beta0", format_double(sample.beta0)});
    meta.extra.push_back({"realized_signal", format_double(sample.realized_signal)});
    write_meta(out, meta);
    write_dataset(out, sample.data);
  });
  if (!spec.text("truth_out").empty()) {
    Vector theta(sample.beta.size() + (cfg.has_intercept ? 1 : 0));
    if (cfg.has_intercept) theta << sample.beta0, sample.beta;
    else theta = sample.beta;
    write_file(spec.text("truth_out"), [&](std::ostream& out) {
      write_meta(out, spec.meta());
      write_coefficients(out, coefficients_from_fit(theta, cfg.has_intercept));
    });
    outputs.push_back(spec.text("truth_out"));
  }
  write_manifest(spec, outputs);
  std::fprintf(stderr, "simulated n=%d p=%d\n", cfg.n, cfg.p());
  return 0;
}

int cmd_train(const Spec& spec) {
  std::vector<DesignPoint> design;
  if (spec.has("design")) {
    for (const auto& t : spec["design"]) design.push_back({t[0].get<double>(), t[1].get<double>(), t[2].get<double>()});
  } else {
    design = space_filling_design(spec.integer("points"), spec.seed());
  }
  TrainingOptions opt;
  opt.n = spec.integer("n");
  opt.reps = spec.integer("reps");
  opt.seed = spec.seed();
  opt.workers = spec.integer("workers");
  opt.psi = spec.real("psi");
  opt.beta_config = parse_beta_config(spec.text("config"));
  opt.replication = replication(spec);
  std::fprintf(stderr, "train: %zu design points x %d replicates at n=%d\n", design.size(), opt.reps, opt.n);
  const auto res = run_training_experiment(design, opt);

  auto outputs = emit(spec, [&](std::ostream& out) {
    write_meta(out, spec.meta());
    write_records(out, res.records);
  });
  if (!spec.text("out").empty()) {
    const auto path = companion(spec.text("out"), "summary.csv");
    write_file(path, [&](std::ostream& out) {
      write_meta(out, spec.meta());
      out << "point_id,kappa,gamma,rho2,beta0,gamma0,exists,h,n,p,reps_used,mean_delta0,mean_delta1,sd_delta1\n";
      for (const auto& s : res.summary) {
        out << s.point_id << ',' << format_double(s.point.kappa) << ',' << format_double(s.point.gamma) << ','
            << format_double(s.point.rho2) << ',' << format_double(s.beta0) << ',' << format_double(s.gamma0) << ','
            << (s.exists ? 1 : 0) << ',' << format_double(s.h) << ',' << s.n << ',' << s.p << ',' << s.reps_used
            << ',' << na_or(s.mean_delta0) << ',' << na_or(s.mean_delta1) << ',' << na_or(s.sd_delta1) << '\n';
      }
    });
    outputs.push_back(path);
  }
  write_manifest(spec, outputs);
  return 0;
}

int cmd_test(const Spec& spec) {
  TestGrid grid;
  grid.ns.clear();
  for (const auto& v : spec["ns"]) grid.ns.push_back(v.get<int>());
  grid.psis = spec["psis"].get<std::vector<double>>();
  grid.rho2s = spec["rho2s"].get<std::vector<double>>();
  grid.configs.clear();
  for (const auto& v : spec["configs"]) grid.configs.push_back(parse_beta_config(v.get<std::string>()));
  if (spec.has("points")) {
    for (const auto& t : spec["points"]) grid.points.push_back({t[0].get<double>(), t[1].get<double>()});
  }
  TestOptions opt;
  opt.seed = spec.seed();
  opt.workers = spec.integer("workers");
  opt.replication = replication(spec);
  const auto res = run_test_experiment(grid, opt);

  auto outputs = emit(spec, [&](std::ostream& out) {
    write_meta(out, spec.meta());
    write_records(out, res.records);
  });
  auto r2_table = [&](std::ostream& out) {
    write_meta(out, spec.meta());
    out << "n,psi,rho2,config,points_used,r2_test\n";
    for (const auto& r : res.r2) {
      out << r.n << ',' << format_double(r.psi) << ',' << format_double(r.rho2) << ',' << to_string(r.config) << ','
          << r.points_used << ',' << na_or(r.r2) << '\n';
    }
  };
  if (!spec.text("out").empty()) {
    const auto path = companion(spec.text("out"), "r2.csv");
    write_file(path, r2_table);
    outputs.push_back(path);
  }
  write_manifest(spec, outputs);
  return 0;
}

int cmd_amse(const Spec& spec) {
  const auto kappas = spec["kappas"].get<std::vector<double>>();
  const auto gammas = spec["gammas"].get<std::vector<double>>();
  AmseOptions opt;
  opt.n = spec.integer("n");
  opt.reps = spec.integer("reps");
  opt.seed = spec.seed();
  opt.workers = spec.integer("workers");
  opt.replication = replication(spec);
  const auto res = run_amse_experiment(kappas, gammas, opt);

  auto outputs = emit(spec, [&](std::ostream& out) {
    write_meta(out, spec.meta());
    write_records(out, res.records);
  });
  if (!spec.text("out").empty()) {
    const auto path = companion(spec.text("out"), "summary.csv");
    write_file(path, [&](std::ostream& out) {
      write_meta(out, spec.meta());
      out << "kappa,gamma,p,exists,q,reps_used,mean_amse,se_amse,mean_bias,min_bias,max_bias\n";
      for (const auto& s : res.summary) {
        out << format_double(s.kappa) << ',' << format_double(s.gamma) << ',' << s.p << ',' << (s.exists ? 1 : 0)
            << ',' << format_double(s.q) << ',' << s.reps_used << ',' << na_or(s.mean_amse) << ',' << na_or(s.se_amse)
            << ',' << na_or(s.mean_bias) << ',' << na_or(s.min_bias) << ',' << na_or(s.max_bias) << '\n';
      }
    });
    outputs.push_back(path);
  }
  write_manifest(spec, outputs);
  return 0;
}

// (beta0, gamma0) directly, or from (gamma, rho2).
PhasePoint phase_point(const Spec& spec) {
  const bool direct = spec.has("beta0") || spec.has("gamma0");
  const bool polar = spec.has("gamma") || spec.has("rho2");
  spec.require({{direct != polar, "give either beta0 and gamma0, or gamma and rho2"},
                {!direct || (spec.has("beta0") && spec.has("gamma0")), "beta0 and gamma0 go together"},
                {!polar || (spec.has("gamma") && spec.has("rho2")), "gamma and rho2 go together"}});
  if (direct) return {spec.real("kappa"), spec.real("beta0"), spec.real("gamma0")};
  return PhasePoint::from_rho2(spec.real("kappa"), spec.real("gamma"), spec.real("rho2"));
}

int cmd_phase(const Spec& spec) {
  const auto point = phase_point(spec);
  const bool mc = spec.text("method") == "mc";
  McBoundaryOptions mco;
  mco.n = spec.integer("mc_n");
  mco.reps = spec.integer("mc_reps");
  mco.seed = spec.seed();
  const auto v = mle_exists_asymptotically(point, mc ? PhaseMethod::monte_carlo : PhaseMethod::analytic, {}, mco);
  std::cout << "kappa=" << format_double(point.kappa) << " beta0=" << format_double(point.beta0)
            << " gamma0=" << format_double(point.gamma0) << " h=" << format_double(v.h_value)
            << " method=" << to_string(v.method) << " verdict=" << (v.exists_asymptotically ? "exists" : "not exists")
            << '\n';
  return 0;
}

int cmd_separation(const Spec& spec) {
  const auto data = read_dataset_file(spec.text("data"), spec.flag("intercept"));
  const auto v = detect_separation(data);
  std::cout << (v.separated ? "separated" : "not separated") << " optimum=" << format_double(v.optimum) << '\n';
  if (v.certificate) {
    const auto terms = coefficients_from_fit(*v.certificate, data.has_intercept).terms;
    std::cout << "certificate";
    for (Eigen::Index j = 0; j < v.certificate->size(); ++j) {
      std::cout << ' ' << terms[static_cast<std::size_t>(j)] << '=' << format_double((*v.certificate)[j]);
    }
    std::cout << '\n';
  }
  return 0;
}

int cmd_rescale(const Spec& spec) {
  std::ifstream in(spec.text("coefficients"));
  if (!in) throw Error(Errc::invalid_argument, "cannot open " + spec.text("coefficients"));
  auto coefs = read_coefficients(in);
  const double kappa = spec.real("kappa");
  const double gamma = spec.real("gamma");
  const double gamma0 = spec.has("gamma0") ? spec.real("gamma0") : gamma;
  spec.require({{gamma0 <= gamma, "gamma0 must not exceed gamma"}});
  const auto mode = spec.text("exists");
  bool exists = mode == "true";
  double h = NAN;
  if (mode == "auto") {
    const double beta0 = std::sqrt(std::max(0.0, gamma * gamma - gamma0 * gamma0));
    const auto v = mle_exists_asymptotically({kappa, beta0, gamma0});
    exists = v.exists_asymptotically;
    h = v.h_value;
  }
  const double q = q_factor(kappa, gamma, gamma0, spec.b(), exists);
  // the intercept is not part of the rescaling
  for (std::size_t j = 0; j < coefs.terms.size(); ++j) {
    if (coefs.terms[j] != "(Intercept)") coefs.estimates[static_cast<Eigen::Index>(j)] /= q;
  }
  auto outputs = emit(spec, [&](std::ostream& out) {
    auto meta = spec.meta();
    meta.extra.push_back({"exists", exists ? "true" : "false"});
    meta.extra.push_back({"q", format_double(q)});
    write_meta(out, meta);
    write_coefficients(out, coefs);
  });
  write_manifest(spec, outputs);
  std::fprintf(stderr, "q=%s exists=%s h=%s\n", format_double(q).c_str(), exists ? "true" : "false",
               format_double(h).c_str());
  return 0;
}

// Per-point means of the training records, in the layout power_law_points
// expects.
std::vector<TrainingSummary> summarize_records(const std::vector<ReplicationRecord>& records) {
  std::map<std::uint64_t, std::pair<TrainingSummary, std::vector<double>>> by_point;
  for (const auto& r : records) {
    auto& [row, slopes] = by_point[r.point_id];
    row.point_id = r.point_id;
    row.point = {r.kappa, r.gamma, r.rho2};
    const auto pp = PhasePoint::from_rho2(r.kappa, r.gamma, r.rho2);
    row.beta0 = pp.beta0;
    row.gamma0 = pp.gamma0;
    row.exists = r.exists;
    row.n = r.n;
    row.p = r.p;
    if (r.delta1) slopes.push_back(*r.delta1);
  }
  std::vector<TrainingSummary> out;
  for (auto& [_, entry] : by_point) {
    auto& [row, slopes] = entry;
    row.reps_used = static_cast<int>(slopes.size());
    if (!slopes.empty()) {
      double s = 0.0;
      for (double d : slopes) s += d;
      row.mean_delta1 = s / static_cast<double>(slopes.size());
    }
    out.push_back(row);
  }
  return out;
}

int cmd_fit_b(const Spec& spec) {
  std::ifstream in(spec.text("records"));
  if (!in) throw Error(Errc::invalid_argument, "cannot open " + spec.text("records"));
  const auto summary = summarize_records(read_records(in));
  const auto points = power_law_points(summary, spec.real("rho2_max"));
  const auto fit = fit_power_law(points);

  const CaseStatistic statistic = [&](std::span<const std::size_t> idx) {
    std::vector<PowerLawPoint> sample;
    sample.reserve(idx.size());
    for (auto i : idx) sample.push_back(points[i]);
    const auto f = fit_power_law(sample).gamma_glm;
    Vector v(5);
    v << f.b0, f.b1, f.b2, f.b3, f.phi;
    return v;
  };
  const auto ci = bootstrap_bca(points.size(), statistic, spec.integer("resamples"), spec.real("level"), spec.seed());

  auto outputs = emit(spec, [&](std::ostream& out) {
    auto meta = spec.meta();
    meta.extra.push_back({"points", std::to_string(fit.points)});
    meta.extra.push_back({"deviance_explained", format_double(fit.deviance_explained)});
    meta.extra.push_back({"resamples_kept", std::to_string(ci.front().resamples)});
    write_meta(out, meta);
    out << "term,estimate,lower,upper\n";
    const char* names[] = {"b0", "b1", "b2", "b3", "phi"};
    for (std::size_t j = 0; j < ci.size(); ++j) {
      out << names[j] << ',' << format_double(ci[j].estimate) << ',' << format_double(ci[j].lower) << ','
          << format_double(ci[j].upper) << '\n';
    }
  });
  write_manifest(spec, outputs);
  std::fprintf(stderr, "fit-b: %zu points, deviance explained %s\n", fit.points,
               format_double(fit.deviance_explained).c_str());
  return 0;
}

// ---------------------------------------------------------------------------

Param method_param(std::vector<std::string> names, std::string help = "estimator") {
  std::string choices;
  for (const auto& n : names) choices += (choices.empty() ? "" : "|") + n;
  const auto first = names.front();
  return {"method", Kind::text, first, help + " (" + choices + ")", one_of(std::move(names))};
}


struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
  std::function<int(const Spec&)> run;
  std::vector<std::pair<std::string, std::string>> positionals{};
};

std::vector<Command> commands() {
  const json none;
  return {
      {"fit",
       "fit ML or mJPL to a dataset CSV",
       {{"data", Kind::text, none, "dataset CSV (y,x1..xp)"},
        method_param({"mjpl", "ml"}),
        {"intercept", Kind::flag, true, "add an intercept column"}},
       cmd_fit,
       {{"data", "dataset CSV"}}},
      {"simulate",
       "write one simulated dataset",
       {{"n", Kind::integer, 2000, "observations", at_least(2)},
        {"kappa", Kind::real, 0.1, "p / n", positive()},
        {"gamma", Kind::real, 1.0, "total signal strength", in_closed(0, 1e6)},
        {"rho2", Kind::real, 0.0, "share of signal in the intercept", in_closed(0, 1)},
        {"psi", Kind::real, 0.0, "AR(1) correlation", in_closed(0, 0.999)},
        {"config", Kind::text, "s1", "initial coefficient configuration", config_name()},
        {"family", Kind::text, "normal-ar1", "covariate law",
         one_of({"normal-ar1", "bernoulli", "normal-scaled"})},
        {"lambda", Kind::real, 0.1, "Bernoulli success probability", in_closed(1e-6, 1 - 1e-6)},
        {"intercept", Kind::flag, true, "include an intercept"},
        {"point_id", Kind::integer, 0, "stream coordinate", at_least(0)},
        {"replicate", Kind::integer, 0, "stream coordinate", at_least(0)},
        {"truth_out", Kind::text, "", "write the true coefficients here"}},
       cmd_simulate},
      {"train",
       "training experiment over a space-filling design",
       {{"n", Kind::integer, 2000, "observations", at_least(2)},
        {"reps", Kind::integer, 100, "replicates per point", at_least(1)},
        {"points", Kind::integer, 100, "design size (ignored with design)", at_least(1)},
        {"design", Kind::triples, none, "explicit [kappa, gamma, rho2] points", grid_points(true), true},
        {"psi", Kind::real, 0.0, "AR(1) correlation", in_closed(0, 0.999)},
        {"config", Kind::text, "train-grid", "initial coefficient configuration", config_name()},
        method_param({"mjpl", "ml"})},
       cmd_train},
      {"test",
       "test experiment over the (kappa, gamma) grid",
       {{"ns", Kind::integers, json{1000, 2000, 3000}, "sample sizes", each(at_least(2))},
        {"psis", Kind::reals, json{0.0, 0.3, 0.6, 0.9}, "AR(1) correlations", each(in_closed(0, 0.999))},
        {"rho2s", Kind::reals, json{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}, "intercept shares",
         each(in_closed(0, 1))},
        {"configs", Kind::texts, json{"s1", "s2", "u1", "u2"}, "coefficient configurations", each(config_name())},
        {"points", Kind::pairs, none, "explicit [kappa, gamma] points (default: the built-in 30)", grid_points(false),
         true},
        method_param({"mjpl", "ml"})},
       cmd_test},
      {"amse",
       "aMSE of the rescaled estimator without intercept",
       {{"kappas", Kind::reals, json{0.1, 0.2, 0.3}, "p / n values", each(positive())},
        {"gammas", Kind::reals, json{1.0, 5.0, 10.0}, "signal strengths", each(positive())},
        {"n", Kind::integer, 2000, "observations", at_least(2)},
        {"reps", Kind::integer, 50, "replicates per cell", at_least(1)},
        method_param({"mjpl", "ml"})},
       cmd_amse},
      {"phase",
       "asymptotic existence verdict",
       {{"kappa", Kind::real, none, "p / n", in_closed(1e-12, 1 - 1e-12)},
        {"beta0", Kind::real, none, "intercept", {}, true},
        {"gamma0", Kind::real, none, "slope signal", in_closed(0, 1e6), true},
        {"gamma", Kind::real, none, "total signal", in_closed(0, 1e6), true},
        {"rho2", Kind::real, none, "intercept share", in_closed(0, 1), true},
        method_param({"analytic", "mc"}, "threshold method"),
        {"mc_n", Kind::integer, 2000, "Monte-Carlo sample size", at_least(200)},
        {"mc_reps", Kind::integer, 20, "Monte-Carlo replicates per step", at_least(1)}},
       cmd_phase},
      {"separation",
       "separation check of a dataset CSV",
       {{"data", Kind::text, none, "dataset CSV"}, {"intercept", Kind::flag, true, "add an intercept column"}},
       cmd_separation,
       {{"data", "dataset CSV"}}},
      {"rescale",
       "divide fitted slopes by q(kappa, gamma, gamma0)",
       {{"coefficients", Kind::text, none, "coefficient CSV (term,estimate)"},
        {"kappa", Kind::real, none, "p / n", in_closed(1e-12, 1 - 1e-12)},
        {"gamma", Kind::real, none, "total signal", positive()},
        {"gamma0", Kind::real, none, "slope signal (default gamma)", positive(), true},
        {"exists", Kind::text, "auto", "true, false or auto (analytic verdict)", one_of({"auto", "true", "false"})}},
       cmd_rescale,
       {{"coefficients", "coefficient CSV"}}},
      {"fit-b",
       "power-law fit with BCa intervals from training records",
       {{"records", Kind::text, none, "training records CSV"},
        {"resamples", Kind::integer, 1999, "bootstrap resamples", at_least(999)},
        {"level", Kind::real, 0.95, "confidence level", in_closed(0.5, 0.999)},
        {"rho2_max", Kind::real, 0.7, "largest rho2 used", in_closed(0, 1)}},
       cmd_fit_b,
       {{"records", "training records CSV"}}},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mJPL / ML logistic regression, separation, phase transition and rescaling experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MJPL_VERSION);

  auto cmds = commands();
  std::vector<std::unique_ptr<Spec>> specs;
  std::vector<CLI::App*> subs;
  for (auto& c : cmds) {
    specs.push_back(std::make_unique<Spec>(c.name, c.params));
    auto* sub = app.add_subcommand(c.name, c.help);
    for (const auto& [key, help] : c.positionals) specs.back()->positional(*sub, key, help);
    specs.back()->attach(*sub);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      specs[i]->resolve(*subs[i]);
      return cmds[i].run(*specs[i]);
    } catch (const SpecError& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kUsage;
    } catch (const Error& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      switch (e.code()) {
        case Errc::singular_information:
        case Errc::non_finite_objective:
        case Errc::degenerate_bootstrap:
        case Errc::quadrature_unstable: return kNumerical;
        default: return kUsage;
      }
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return kUsage;
    }
  }
  return kUsage;
}
