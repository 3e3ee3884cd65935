#include "fadi/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace fadi {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment", {"name", "reps", "seed", "threads", "metrics", "out"}},
      {"model",
       {"kind", "d", "n", "m", "K", "lambda", "sigma2", "axis_aligned", "kprime", "theta",
        "delta0sq", "noise_sd", "sigma", "self_loops", "expected_only", "layout", "p_in",
        "p_out"}},
      {"sketch", {"p", "p_prime", "L", "q", "regime", "mu0"}},
      {"inference", {"j", "jprime", "k", "alpha"}},
      {"baselines", {"methods"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw InvalidArgument("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos, 0);
    if (pos != v.size() || (!v.empty() && v[0] == '-')) throw std::invalid_argument("bad");
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
  }
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw InvalidArgument("config: '" + key + "' expects a boolean, got '" + v + "'");
}

// Drops full-line and trailing comments; the ini reader only knows ';' lines.
std::string strip_comments(const std::string& text) {
  std::stringstream in(text), out;
  std::string line;
  while (std::getline(in, line)) {
    for (const char* mark : {" #", "\t#", " ;", "\t;"}) {
      const auto pos = line.find(mark);
      if (pos != std::string::npos) line.erase(pos);
    }
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

std::size_t ExperimentConfig::max_L() const {
  return L_values.empty() ? 0 : *std::max_element(L_values.begin(), L_values.end());
}

const std::set<std::string>& known_metrics() {
  static const std::set<std::string> m{"error",    "invariants", "coverage", "power", "rank",
                                       "clustering", "are",      "timing"};
  return m;
}

RegimeChoice parse_regime_choice(const std::string& s) {
  if (s == "auto") return RegimeChoice::Auto;
  if (s == "large") return RegimeChoice::Large;
  if (s == "small") return RegimeChoice::Small;
  throw InvalidArgument("unknown regime '" + s + "' (expected auto, large or small)");
}

std::string regime_choice_name(RegimeChoice r) {
  switch (r) {
    case RegimeChoice::Large: return "large";
    case RegimeChoice::Small: return "small";
    default: return "auto";
  }
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::stringstream ss(strip_comments(text));
  try {
    pt::read_ini(ss, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw InvalidArgument("config: unknown section [" + section + "]");
    if (body.empty() && !body.data().empty())
      throw InvalidArgument("config: key '" + section + "' outside a section");
    for (const auto& [key, _] : body)
      if (!it->second.count(key))
        throw InvalidArgument("config: unknown key '" + key + "' in [" + section + "]");
  }
  auto get = [&](const std::string& path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  };

  ExperimentConfig c;
  if (auto v = get("experiment.name")) c.name = *v;
  if (auto v = get("experiment.reps")) c.reps = to_count("reps", *v);
  if (auto v = get("experiment.seed")) c.seed = to_u64("seed", *v);
  if (auto v = get("experiment.threads")) c.threads = to_count("threads", *v);
  if (auto v = get("experiment.metrics")) {
    const auto list = split_list(*v);
    c.metrics = std::set<std::string>(list.begin(), list.end());
  }
  if (auto v = get("experiment.out")) c.out = *v;

  if (auto v = get("model.kind")) c.model = parse_model(*v);
  if (auto v = get("model.d")) c.d = to_count("d", *v);
  if (auto v = get("model.n")) c.n = to_count("n", *v);
  if (auto v = get("model.m")) c.m = to_count("m", *v);
  if (auto v = get("model.K")) c.K = to_count("K", *v);
  if (auto v = get("model.lambda")) {
    c.lambda.clear();
    for (const auto& s : split_list(*v)) c.lambda.push_back(to_real("lambda", s));
  }
  if (auto v = get("model.sigma2")) c.sigma2 = to_real("sigma2", *v);
  if (auto v = get("model.axis_aligned")) c.axis_aligned = to_bool("axis_aligned", *v);
  if (auto v = get("model.kprime")) c.kprime = to_count("kprime", *v);
  if (auto v = get("model.theta")) c.theta = to_real("theta", *v);
  if (auto v = get("model.delta0sq")) c.delta0sq = to_real("delta0sq", *v);
  if (auto v = get("model.noise_sd")) c.noise_sd = to_real("noise_sd", *v);
  if (auto v = get("model.sigma")) c.sigma = to_real("sigma", *v);
  if (auto v = get("model.self_loops")) c.self_loops = to_bool("self_loops", *v);
  if (auto v = get("model.expected_only")) c.expected_only = to_bool("expected_only", *v);
  if (auto v = get("model.layout")) c.dcmm_layout = *v;
  if (auto v = get("model.p_in")) c.p_in = to_real("p_in", *v);
  if (auto v = get("model.p_out")) c.p_out = to_real("p_out", *v);

  if (auto v = get("sketch.p")) c.p = to_count("p", *v);
  if (auto v = get("sketch.p_prime")) c.p_prime = to_count("p_prime", *v);
  if (auto v = get("sketch.L")) {
    c.L_values.clear();
    for (const auto& s : split_list(*v)) c.L_values.push_back(to_count("L", s));
  }
  if (auto v = get("sketch.q")) c.q = to_count("q", *v);
  if (auto v = get("sketch.regime")) c.regime = parse_regime_choice(*v);
  if (auto v = get("sketch.mu0")) c.mu0 = to_real("mu0", *v);

  if (auto v = get("inference.j")) c.j = to_count("j", *v);
  if (auto v = get("inference.jprime")) c.jprime = to_count("jprime", *v);
  if (auto v = get("inference.k")) c.kalt = to_count("k", *v);
  if (auto v = get("inference.alpha")) c.alpha = to_real("alpha", *v);

  if (auto v = get("baselines.methods")) c.baselines = split_list(*v);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot open config " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

void validate(ExperimentConfig& c) {
  require(c.reps >= 1, "config: reps must be at least 1");
  require(c.d >= 1, "config: d must be positive");
  require(c.K >= 1 && c.K <= c.d, "config: K must satisfy 1 <= K <= d");
  require(c.m >= 1, "config: m must be positive");
  if (is_sample_split(c.model)) {
    require(c.n >= c.d, "config: n must be at least d for sample-split models");
    require(c.m <= c.n, "config: more splits than samples");
  } else {
    require(c.m <= c.d, "config: more splits than columns");
  }
  require(!c.L_values.empty(), "config: L must list at least one value");
  for (auto L : c.L_values) require(L >= 1, "config: every L must be positive");
  require(c.p >= c.K, "config: p must be at least K");
  require(c.p <= c.d, "config: p must not exceed d");
  require(c.p_prime == 0 || c.p_prime >= c.K, "config: p_prime must be at least K");
  require(c.q >= 1, "config: q must be positive");
  require(c.alpha > 0.0 && c.alpha < 1.0, "config: alpha must lie in (0, 1)");
  for (const auto& mtr : c.metrics)
    require(known_metrics().count(mtr) > 0, "config: unknown metric '" + mtr + "'");
  for (const auto& b : c.baselines) {
    require(b == "traditional" || b == "fan" || b == "fast_single",
            "config: unknown baseline '" + b + "'");
    if (b == "fan")
      require(c.model == ModelKind::SpikedCov, "config: the fan baseline needs the spiked model");
  }
  if (c.model == ModelKind::SpikedCov || c.model == ModelKind::IncompleteMatrix) {
    if (c.lambda.empty())
      for (std::size_t k = c.K; k >= 1; --k) c.lambda.push_back(2.0 * double(k));
    require(c.lambda.size() == c.K, "config: lambda needs K entries");
  }
  if (c.model == ModelKind::SpikedCov) {
    if (c.kprime == 0) c.kprime = c.K + 1;
    require(c.kprime >= c.K + 1 && c.kprime <= c.d, "config: kprime must lie in [K + 1, d]");
  }
  if (c.model == ModelKind::DCMM) {
    require(c.dcmm_layout == "mixed" || c.dcmm_layout == "blocks",
            "config: layout must be mixed or blocks");
    if (c.dcmm_layout == "mixed") require(c.K == 3, "config: the mixed layout has K = 3");
    if (!c.jprime || !c.kalt) {
      if (c.dcmm_layout == "mixed") {
        if (!c.jprime) {
          c.j = c.d / 2;
          c.jprime = c.d / 2 + 1;
        }
        if (!c.kalt) c.kalt = 7 * c.d / 8;
      } else {
        if (!c.jprime) c.jprime = c.j + 1;
        if (!c.kalt) c.kalt = std::min(c.d - 1, c.j + c.d / c.K);
      }
    }
  }
  require(c.j < c.d, "config: j out of range");
  require(!c.jprime || (*c.jprime < c.d && *c.jprime != c.j), "config: jprime out of range");
  require(!c.kalt || (*c.kalt < c.d && *c.kalt != c.j), "config: k out of range");
  if (c.metrics.count("power"))
    require(c.model == ModelKind::DCMM, "config: power is defined for the pairwise DCMM test");
  if (c.metrics.count("clustering"))
    require(c.model == ModelKind::DCMM || c.model == ModelKind::GMM,
            "config: clustering needs labelled truth (dcmm or gmm)");
  if (c.regime == RegimeChoice::Small)
    require(c.metrics.count("coverage") || c.metrics.count("power"),
            "config: regime = small only affects coverage and power");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["model"] = {{"kind", std::string(model_name(c.model))},
                {"d", c.d},
                {"n", c.n},
                {"m", c.m},
                {"K", c.K},
                {"lambda", c.lambda},
                {"sigma2", c.sigma2},
                {"axis_aligned", c.axis_aligned},
                {"kprime", c.kprime},
                {"theta", c.theta},
                {"delta0sq", c.delta0sq},
                {"noise_sd", c.noise_sd},
                {"sigma", c.sigma},
                {"self_loops", c.self_loops},
                {"expected_only", c.expected_only},
                {"layout", c.dcmm_layout}};
  j["sketch"] = {{"p", c.p},
                 {"p_prime", c.p_prime ? c.p_prime : c.p},
                 {"L", c.L_values},
                 {"q", c.q},
                 {"regime", regime_choice_name(c.regime)}};
  if (c.mu0) j["sketch"]["mu0"] = *c.mu0;
  j["inference"] = {{"j", c.j}, {"alpha", c.alpha}};
  if (c.jprime) j["inference"]["jprime"] = *c.jprime;
  if (c.kalt) j["inference"]["k"] = *c.kalt;
  j["baselines"] = c.baselines;
  j["experiment"] = {{"reps", c.reps},
                     {"seed", c.seed},
                     {"metrics", std::vector<std::string>(c.metrics.begin(), c.metrics.end())}};
  return j;
}

}  // namespace fadi
