// Command-line front end. Data goes to --out (written atomically) or stdout;
// summaries go to stderr. Exit codes: 0 success, 1 invalid parameters,
// 2 missing or unreadable input, 3 failed check.

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <gmpxx.h>
#include <json.hpp>

#include "cvxspec/cantor.hpp"
#include "cvxspec/expr.hpp"
#include "cvxspec/sequence.hpp"
#include "cvxspec/spectrum.hpp"
#include "cvxspec/verify.hpp"

using namespace cvxspec;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kInput = 2, kCheck = 3 };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string format;
  std::string out;
  std::string config;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_format) {
  c.format = default_format;
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  cmd->add_option("--out", c.out, "Output path (default: stdout)");
  cmd->add_option("--config", c.config, "JSON file of option values; command-line flags take precedence");
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty()) {
    std::cout << data;
    std::cout.flush();
    return;
  }
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + tmp);
    f << data;
    f.flush();
    if (!f) throw InputError("cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InputError("cannot rename " + tmp + " to " + path + ": " + ec.message());
  }
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot read " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Turns {"key": value} from --config into "--key value" arguments placed
// right after the subcommand, so later command-line flags override them.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;
  const auto j = read_json_file(path);
  if (!j.is_object()) throw InputError(path + ": config must be a JSON object");
  std::vector<std::string> extra;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
      continue;
    }
    extra.push_back("--" + key);
    if (value.is_string()) {
      extra.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ',';
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      extra.push_back(joined);
    } else {
      extra.push_back(value.dump());
    }
  }
  args.insert(args.begin() + 1, extra.begin(), extra.end());
  return args;
}

std::vector<std::int64_t> parse_entries(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad sequence entry: '" + item + "'");
    }
  }
  return out;
}

ScaleSequence resolve_sequence(const std::string& seq, std::size_t depth, std::optional<double> h) {
  SequenceOptions opts;
  opts.holder_level = h;
  if (seq == "auto") {
    if (depth == 0) return ScaleSequence(std::vector<std::int64_t>{}, opts);
    return ScaleSequence::smallest(depth, opts);
  }
  return ScaleSequence(parse_entries(seq), opts);
}

// ---- construct ----

struct ConstructArgs {
  Common common;
  int dim = 1;
  std::string base = "zero";
  double quad_coeff = 1.0;
  std::string seq = "auto";
  std::size_t depth = 2;
  std::optional<double> h;
  std::vector<std::int64_t> phi;
  std::optional<double> mollify;
  int nodes_exp = 7;
};

int run_construct(const ConstructArgs& a) {
  QuadraticBase base = a.base == "quad" ? QuadraticBase::sum_of_squares(a.dim, Dyadic::from_double(a.quad_coeff))
                                        : QuadraticBase::zero(a.dim);
  if (a.h) require_holder_level(*a.h);
  const auto seq = resolve_sequence(a.seq, a.depth, a.h);
  auto f = compose_generic(base, seq);
  if (!a.phi.empty()) {
    auto terms = f.terms();
    for (auto l : a.phi) terms.push_back(Term::phi(l, 0));
    f = ConvexFunctionExpr(f.base(), terms);
  }
  if (a.mollify) {
    auto child = std::make_shared<const ConvexFunctionExpr>(f);
    f = ConvexFunctionExpr(QuadraticBase::zero(a.dim), {Term::mollified(child, *a.mollify, a.nodes_exp)});
  }
  const auto j = f.to_json();
  if (a.common.format == "json") {
    write_output(a.common.out, dump(j));
  } else {
    std::ostringstream out;
    out << "kind,weight,level,axis\n";
    for (const auto& t : j["terms"]) {
      out << t["kind"].get<std::string>() << ',' << t["weight"].get<std::string>() << ','
          << (t.contains("level") ? t["level"].dump() : "") << ',' << (t.contains("axis") ? t["axis"].dump() : "")
          << '\n';
    }
    write_output(a.common.out, out.str());
  }
  std::cerr << "constructed " << f.terms().size() << " terms from sequence (";
  for (std::size_t i = 0; i < seq.depth(); ++i) std::cerr << (i ? "," : "") << seq[i];
  std::cerr << ")\n";
  return kOk;
}

// ---- spectrum ----

struct SpectrumArgs {
  Common common;
  std::string input;
  int n = 12;
  SpectrumOptions opts;
  double tolerance = 0.15;
};

int run_spectrum(const SpectrumArgs& a) {
  if (!std::filesystem::exists(a.input)) throw InputError("input not found: " + a.input);
  ConvexFunctionExpr f = [&] {
    const auto j = read_json_file(a.input);
    try {
      return ConvexFunctionExpr::from_json(j);
    } catch (const std::invalid_argument& e) {
      throw InputError(a.input + ": " + e.what());
    }
  }();
  const int finest = std::min(a.n - 2, a.opts.max_scale);
  if (finest - a.opts.min_scale + 1 < 3)
    throw InputError("grid exponent " + std::to_string(a.n) + " resolves fewer than three scales");

  const auto grid = sample_grid(f, a.n);
  const auto curve = empirical_spectrum(grid, a.opts);
  const auto bound = check_upper_bound(curve, f.dimension(), a.tolerance);

  if (a.common.format == "json") {
    auto j = curve.to_json();
    j["grid_exponent"] = a.n;
    j["upper_bound"] = {{"pass", bound.pass}, {"tolerance", a.tolerance}, {"violations", nlohmann::json::array()}};
    for (const auto& v : bound.violations)
      j["upper_bound"]["violations"].push_back({{"h", v.h}, {"value", v.value}, {"bound", v.bound}});
    write_output(a.common.out, dump(j));
  } else {
    write_output(a.common.out, curve.to_csv());
  }
  std::cerr << "upper bound " << (bound.pass ? "PASS" : "FAIL") << " (tolerance " << a.tolerance << ", "
            << bound.violations.size() << " violations)\n";
  for (const auto& v : bound.violations)
    std::cerr << "  h=" << v.h << " value=" << v.value << " bound=" << v.bound << '\n';
  return bound.pass ? kOk : kCheck;
}

// ---- verify ----

struct VerifyArgs {
  Common common;
  VerifyOptions opts;
};

int run_verify(const VerifyArgs& a) {
  const auto rows = run_verify_suite(a.opts);
  write_output(a.common.out, a.common.format == "json" ? dump(verify_json(rows)) : verify_csv(rows));
  std::cerr << verify_table(rows);
  for (const auto& r : rows)
    if (!r.as_expected()) return kCheck;
  return kOk;
}

// ---- cantor ----

struct CantorArgs {
  Common common;
  double h = 1.5;
  std::string seq = "auto";
  std::size_t depth = 2;
  std::size_t k_start = 1;
  int dim = 1;
  int points = 4;
  std::uint64_t seed = 1;
  std::string intervals;
};

int run_cantor(const CantorArgs& a) {
  require_holder_level(a.h);
  if (a.dim < 1 || a.dim > kMaxDimension) throw std::invalid_argument("dimension must lie in [1, 3]");
  const auto seq = resolve_sequence(a.seq, a.depth, a.h);
  const std::size_t K = seq.depth();
  const auto counts = covering_counts(a.h, seq, K, a.k_start);

  struct Sample {
    Dyadic x1;
    double slope;
  };
  std::vector<Sample> samples;
  if (K >= a.k_start && a.points > 0) {
    const MassDistribution m(a.h, seq, K, a.k_start, a.dim);
    // resolvable radii, at most 64 exponents spread evenly
    const std::int64_t e_lo = -m.coarsest_radius().exponent();
    const std::int64_t e_hi = -m.resolution().exponent();
    const std::int64_t span = e_hi - e_lo;
    const std::int64_t step = std::max<std::int64_t>(1, (span + 63) / 64);
    std::vector<Dyadic> radii;
    for (std::int64_t e = e_lo; e <= e_hi; e += step) radii.push_back(Dyadic::pow2(-e));
    gmp_randclass rng(gmp_randinit_mt);
    rng.seed(static_cast<unsigned long>(a.seed));
    for (int p = 0; p < a.points; ++p) {
      std::vector<mpz_class> path;
      for (const auto& b : m.branching()) path.push_back(rng.get_z_range(b));
      std::vector<Dyadic> x{m.support_point(path)};
      for (int i = 1; i < a.dim; ++i) x.push_back(Dyadic(1, -1));
      samples.push_back({x[0], local_dimension(m, x, radii)});
    }
  }

  if (!a.intervals.empty()) write_output(a.intervals, dump(intersect_to_depth(a.h, seq, K, a.k_start).to_json()));

  if (a.common.format == "json") {
    nlohmann::json j;
    j["format"] = "cvxspec-cantor/1";
    j["h"] = a.h;
    j["sequence"] = seq.entries();
    j["dimension"] = a.dim;
    j["covering_counts"] = covering_counts_json(counts);
    j["local_dimension"] = nlohmann::json::array();
    for (const auto& s : samples) j["local_dimension"].push_back({{"x1", s.x1.to_string()}, {"slope", s.slope}});
    write_output(a.common.out, dump(j));
  } else {
    std::ostringstream out;
    out << covering_counts_csv(counts);
    if (!samples.empty()) {
      out << "\npoint,x1,local_dimension\n";
      for (std::size_t i = 0; i < samples.size(); ++i)
        out << i << ',' << samples[i].x1.to_string() << ',' << format_spectrum_value(samples[i].slope) << '\n';
    }
    write_output(a.common.out, out.str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex-function regularity toolkit"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  ConstructArgs ca;
  auto* construct = app.add_subcommand("construct", "Build a composite convex function and write it as JSON");
  add_common(construct, ca.common, "json");
  construct->add_option("--dim", ca.dim, "Dimension d")->check(CLI::Range(1, kMaxDimension))->capture_default_str();
  construct->add_option("--base", ca.base, "Smooth part")->check(CLI::IsMember({"zero", "quad"}))->capture_default_str();
  construct->add_option("--quad-coeff", ca.quad_coeff, "Coefficient of |x|^2 for --base quad")->capture_default_str();
  construct->add_option("--seq", ca.seq, "'auto' or comma-separated levels")->capture_default_str();
  construct->add_option("--depth", ca.depth, "Sequence length for --seq auto")->capture_default_str();
  construct->add_option("--h", ca.h, "Holder level in [1,2) for the sequence conditions");
  construct->add_option("--phi", ca.phi, "Add boundary spikes of these levels along x_1")->delimiter(',');
  construct->add_option("--mollify", ca.mollify, "Mollify the result with this lambda");
  construct->add_option("--nodes-exp", ca.nodes_exp, "Quadrature nodes 2^m per axis for --mollify")->capture_default_str();

  SpectrumArgs sa;
  auto* spectrum = app.add_subcommand("spectrum", "Empirical spectrum of a function file and its upper-bound check");
  add_common(spectrum, sa.common, "csv");
  spectrum->add_option("--input", sa.input, "Function JSON from construct")->required();
  spectrum->add_option("--n", sa.n, "Grid exponent")->capture_default_str();
  spectrum->add_option("--bin-width", sa.opts.bin_width, "Bin width")->capture_default_str();
  spectrum->add_option("--min-scale", sa.opts.min_scale, "Coarsest scale exponent")->capture_default_str();
  spectrum->add_option("--max-scale", sa.opts.max_scale, "Finest scale exponent")->capture_default_str();
  spectrum->add_option("--tolerance", sa.tolerance, "Allowed excess over the upper bound")->capture_default_str();

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run the property suite");
  add_common(verify, va.common, "csv");
  verify->add_option("--seed", va.opts.seed, "Seed for randomized probes")->capture_default_str();
  verify->add_option("--only", va.opts.only, "Run only these checks")->delimiter(',');
  verify->add_flag("--negative-controls", va.opts.negative_controls, "Add injected violations that must be caught");

  CantorArgs ka;
  auto* cantor = app.add_subcommand("cantor", "Covering counts and local dimensions of the Cantor scheme");
  add_common(cantor, ka.common, "csv");
  cantor->add_option("--h", ka.h, "Holder level in [1,2)")->capture_default_str();
  cantor->add_option("--seq", ka.seq, "'auto' or comma-separated levels")->capture_default_str();
  cantor->add_option("--depth", ka.depth, "Sequence length for --seq auto")->capture_default_str();
  cantor->add_option("--k-start", ka.k_start, "First generation")->capture_default_str();
  cantor->add_option("--dim", ka.dim, "Product dimension for local dimensions")->capture_default_str();
  cantor->add_option("--points", ka.points, "Random support points for local dimensions")->capture_default_str();
  cantor->add_option("--seed", ka.seed, "Seed for the support points")->capture_default_str();
  cantor->add_option("--intervals", ka.intervals, "Also write the materialized intervals as JSON here");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }

  try {
    if (*construct) return run_construct(ca);
    if (*spectrum) return run_spectrum(sa);
    if (*verify) return run_verify(va);
    if (*cantor) return run_cantor(ka);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const EmptyIntersection& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kCheck;
  }
  return kInvalid;
}
