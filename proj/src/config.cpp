#include "fapc/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fapc/rng.hpp"

namespace fapc {
namespace {

using nlohmann::ordered_json;

constexpr double kPi = std::numbers::pi;

ordered_json parse_json(const std::string& text) {
  try {
    return ordered_json::parse(text);
  } catch (const ordered_json::parse_error& err) {
    throw ConfigError(err.what());  // carries line/column from the parser
  }
}

void reject_unknown_keys(const ordered_json& obj, const std::string& context,
                         const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (allowed.count(item.key()) == 0) {
      throw ConfigError("unknown key \"" + item.key() + "\" in " + context);
    }
  }
}

const ordered_json& require(const ordered_json& obj, const std::string& context,
                            const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing key \"" + key + "\" in " + context);
  return *it;
}

double as_number(const ordered_json& value, const std::string& what) {
  if (!value.is_number()) throw ConfigError(what + " must be a number");
  return value.get<double>();
}

int as_int(const ordered_json& value, const std::string& what) {
  if (!value.is_number_integer()) throw ConfigError(what + " must be an integer");
  return value.get<int>();
}

std::string as_string(const ordered_json& value, const std::string& what) {
  if (!value.is_string()) throw ConfigError(what + " must be a string");
  return value.get<std::string>();
}

// Preset grammar: zero | mode-<k> | gaussian-bump(c,w) | random.
void validate_preset(const std::string& preset) {
  if (preset == "zero" || preset == "random") return;
  if (preset.rfind("mode-", 0) == 0) {
    const std::string tail = preset.substr(5);
    if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("malformed mode preset \"" + preset + "\"");
    }
    return;
  }
  if (preset.rfind("gaussian-bump(", 0) == 0 && preset.back() == ')') {
    const std::string inner = preset.substr(14, preset.size() - 15);
    const auto comma = inner.find(',');
    if (comma != std::string::npos) {
      try {
        size_t used = 0;
        std::stod(inner.substr(0, comma), &used);
        std::stod(inner.substr(comma + 1), &used);
        return;
      } catch (const std::exception&) {
        // falls through to the error below
      }
    }
    throw ConfigError("malformed gaussian-bump preset \"" + preset + "\"");
  }
  throw ConfigError("unknown state preset \"" + preset + "\"");
}

StateSpec parse_state(const ordered_json& value, const std::string& context, int n_modes) {
  StateSpec spec;
  if (value.is_string()) {
    spec.is_preset = true;
    spec.preset = value.get<std::string>();
    validate_preset(spec.preset);
    return spec;
  }
  if (value.is_array()) {
    spec.is_preset = false;
    spec.preset.clear();
    for (const auto& entry : value) {
      spec.coeffs.push_back(as_number(entry, context + " coefficient"));
    }
    if (static_cast<int>(spec.coeffs.size()) != n_modes) {
      std::ostringstream os;
      os << context << " has " << spec.coeffs.size() << " coefficients, expected " << n_modes;
      throw ConfigError(os.str());
    }
    return spec;
  }
  throw ConfigError(context + " must be a coefficient array or a preset name");
}

ordered_json state_to_json(const StateSpec& spec) {
  if (spec.is_preset) return spec.preset;
  return ordered_json(spec.coeffs);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  const ordered_json doc = parse_json(text);
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown_keys(doc, "the top level",
                      {"scenario", "model", "control", "projection", "epsilons", "states",
                       "time_grid", "semilinear", "output", "seed", "gramian_file"});

  RunConfig config;

  if (doc.contains("scenario")) config.scenario = as_string(doc["scenario"], "scenario");

  const ordered_json& model = require(doc, "the top level", "model");
  if (!model.is_object()) throw ConfigError("model must be an object");
  reject_unknown_keys(model, "model", {"n_modes", "horizon"});
  config.n_modes = as_int(require(model, "model", "n_modes"), "model.n_modes");
  config.horizon = as_number(require(model, "model", "horizon"), "model.horizon");
  if (config.n_modes < 1) throw ConfigError("model.n_modes must be at least 1");
  if (!(config.horizon > 0.0)) throw ConfigError("model.horizon must be positive");

  const ordered_json& control = require(doc, "the top level", "control");
  if (!control.is_object()) throw ConfigError("control must be an object");
  config.control_kind = as_string(require(control, "control", "kind"), "control.kind");
  if (config.control_kind == "distributed") {
    reject_unknown_keys(control, "control", {"kind", "a", "b"});
    config.control_lo = as_number(require(control, "control", "a"), "control.a");
    config.control_hi = as_number(require(control, "control", "b"), "control.b");
  } else if (config.control_kind == "lumped") {
    reject_unknown_keys(control, "control", {"kind", "alpha1", "alpha2"});
    config.control_lo = as_number(require(control, "control", "alpha1"), "control.alpha1");
    config.control_hi = as_number(require(control, "control", "alpha2"), "control.alpha2");
  } else {
    throw ConfigError("control.kind must be \"distributed\" or \"lumped\"");
  }

  if (doc.contains("projection")) {
    const ordered_json& projection = doc["projection"];
    if (!projection.is_object()) throw ConfigError("projection must be an object");
    reject_unknown_keys(projection, "projection", {"m_modes", "basis_file"});
    if (projection.contains("m_modes") && projection.contains("basis_file")) {
      throw ConfigError("projection takes m_modes or basis_file, not both");
    }
    if (projection.contains("m_modes")) {
      config.m_modes = as_int(projection["m_modes"], "projection.m_modes");
      if (config.m_modes < 0 || config.m_modes > config.n_modes) {
        throw ConfigError("projection.m_modes must lie in [0, n_modes]");
      }
    }
    if (projection.contains("basis_file")) {
      config.basis_file = as_string(projection["basis_file"], "projection.basis_file");
    }
  }

  const ordered_json& epsilons = require(doc, "the top level", "epsilons");
  if (!epsilons.is_array() || epsilons.empty()) {
    throw ConfigError("epsilons must be a nonempty array");
  }
  for (const auto& entry : epsilons) {
    config.epsilons.push_back(as_number(entry, "epsilons entry"));
  }
  for (size_t i = 0; i < config.epsilons.size(); ++i) {
    if (!(config.epsilons[i] > 0.0)) throw ConfigError("epsilons entries must be positive");
    if (i > 0 && !(config.epsilons[i] < config.epsilons[i - 1])) {
      throw ConfigError("epsilons must be strictly decreasing");
    }
  }

  const ordered_json& states = require(doc, "the top level", "states");
  if (!states.is_object()) throw ConfigError("states must be an object");
  reject_unknown_keys(states, "states", {"y0", "yf"});
  config.y0 = parse_state(require(states, "states", "y0"), "states.y0", config.n_modes);
  config.yf = parse_state(require(states, "states", "yf"), "states.yf", config.n_modes);

  if (doc.contains("time_grid")) {
    const ordered_json& grid = doc["time_grid"];
    if (!grid.is_object()) throw ConfigError("time_grid must be an object");
    reject_unknown_keys(grid, "time_grid", {"steps"});
    config.steps = as_int(require(grid, "time_grid", "steps"), "time_grid.steps");
    if (config.steps < 2) throw ConfigError("time_grid.steps must be at least 2");
  }

  if (doc.contains("semilinear")) {
    const ordered_json& semi = doc["semilinear"];
    if (!semi.is_object()) throw ConfigError("semilinear must be an object");
    reject_unknown_keys(semi, "semilinear", {"f", "g", "L", "tol", "max_iter", "relaxation"});
    if (semi.contains("f")) config.f_name = as_string(semi["f"], "semilinear.f");
    if (semi.contains("g")) config.g_name = as_string(semi["g"], "semilinear.g");
    if (semi.contains("L")) config.bound = as_number(semi["L"], "semilinear.L");
    if (semi.contains("tol")) config.tol = as_number(semi["tol"], "semilinear.tol");
    if (semi.contains("max_iter")) config.max_iter = as_int(semi["max_iter"], "semilinear.max_iter");
    if (semi.contains("relaxation")) {
      config.relaxation = as_number(semi["relaxation"], "semilinear.relaxation");
    }
    if (config.bound < 0.0) throw ConfigError("semilinear.L must be nonnegative");
    if (!(config.tol > 0.0)) throw ConfigError("semilinear.tol must be positive");
    if (config.max_iter < 1) throw ConfigError("semilinear.max_iter must be at least 1");
    if (!(config.relaxation > 0.0 && config.relaxation <= 1.0)) {
      throw ConfigError("semilinear.relaxation must lie in (0, 1]");
    }
  }

  if (doc.contains("output")) {
    const ordered_json& output = doc["output"];
    if (!output.is_object()) throw ConfigError("output must be an object");
    reject_unknown_keys(output, "output", {"csv_path", "report_path"});
    if (output.contains("csv_path")) {
      config.csv_path = as_string(output["csv_path"], "output.csv_path");
    }
    if (output.contains("report_path")) {
      config.report_path = as_string(output["report_path"], "output.report_path");
    }
  }

  if (doc.contains("seed")) {
    const ordered_json& seed = doc["seed"];
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<int64_t>() >= 0)) {
      throw ConfigError("seed must be a nonnegative integer");
    }
    config.seed = seed.get<uint64_t>();
  }

  if (doc.contains("gramian_file")) {
    config.gramian_file = as_string(doc["gramian_file"], "gramian_file");
  }

  return config;
}

std::string serialize_config(const RunConfig& config) {
  ordered_json doc;
  doc["scenario"] = config.scenario;
  doc["model"] = {{"n_modes", config.n_modes}, {"horizon", config.horizon}};
  if (config.control_kind == "distributed") {
    doc["control"] = {{"kind", "distributed"}, {"a", config.control_lo}, {"b", config.control_hi}};
  } else {
    doc["control"] = {{"kind", "lumped"},
                      {"alpha1", config.control_lo},
                      {"alpha2", config.control_hi}};
  }
  if (!config.basis_file.empty()) {
    doc["projection"] = {{"basis_file", config.basis_file}};
  } else {
    doc["projection"] = {{"m_modes", config.m_modes}};
  }
  doc["epsilons"] = config.epsilons;
  doc["states"] = {{"y0", state_to_json(config.y0)}, {"yf", state_to_json(config.yf)}};
  doc["time_grid"] = {{"steps", config.steps}};
  doc["semilinear"] = {{"f", config.f_name},     {"g", config.g_name},
                       {"L", config.bound},      {"tol", config.tol},
                       {"max_iter", config.max_iter}, {"relaxation", config.relaxation}};
  doc["output"] = {{"csv_path", config.csv_path}, {"report_path", config.report_path}};
  doc["seed"] = config.seed;
  if (!config.gramian_file.empty()) doc["gramian_file"] = config.gramian_file;
  return doc.dump(2) + "\n";
}

bool operator==(const StateSpec& a, const StateSpec& b) {
  return a.is_preset == b.is_preset && a.preset == b.preset && a.coeffs == b.coeffs;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.scenario == b.scenario && a.n_modes == b.n_modes && a.horizon == b.horizon &&
         a.control_kind == b.control_kind && a.control_lo == b.control_lo &&
         a.control_hi == b.control_hi && a.m_modes == b.m_modes && a.basis_file == b.basis_file &&
         a.epsilons == b.epsilons && a.y0 == b.y0 && a.yf == b.yf && a.steps == b.steps &&
         a.f_name == b.f_name && a.g_name == b.g_name && a.bound == b.bound && a.tol == b.tol &&
         a.max_iter == b.max_iter && a.relaxation == b.relaxation && a.csv_path == b.csv_path &&
         a.report_path == b.report_path && a.seed == b.seed && a.gramian_file == b.gramian_file;
}

namespace {

uint64_t mix_tag(uint64_t seed, const std::string& tag) {
  // FNV-1a over the tag keeps the y0/yf streams apart for the same seed
  uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : tag) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return seed ^ hash;
}

Vector gaussian_bump_coefficients(double center, double width, int n_modes) {
  if (!(width > 0.0)) throw ConfigError("gaussian-bump width must be positive");
  // composite Simpson projection of the bump onto the sine modes
  const int intervals = 2000;
  const double h = kPi / intervals;
  Vector out = Vector::Zero(n_modes);
  const double scale = std::sqrt(2.0 / kPi);
  for (int i = 0; i <= intervals; ++i) {
    const double theta = h * i;
    const double weight = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double bump = std::exp(-0.5 * (theta - center) * (theta - center) / (width * width));
    for (int n = 1; n <= n_modes; ++n) {
      out(n - 1) += weight * bump * scale * std::sin(n * theta);
    }
  }
  return (h / 3.0) * out;
}

}  // namespace

Vector resolve_state(const StateSpec& spec, int n_modes, uint64_t seed, const std::string& tag) {
  if (!spec.is_preset) {
    Vector out(n_modes);
    for (int i = 0; i < n_modes; ++i) out(i) = spec.coeffs[i];
    return out;
  }

  if (spec.preset == "zero") return Vector::Zero(n_modes);

  if (spec.preset.rfind("mode-", 0) == 0) {
    const int k = std::stoi(spec.preset.substr(5));
    if (k < 1 || k > n_modes) {
      throw ConfigError("preset \"" + spec.preset + "\" is outside the mode range");
    }
    Vector out = Vector::Zero(n_modes);
    out(k - 1) = 1.0;
    return out;
  }

  if (spec.preset.rfind("gaussian-bump(", 0) == 0) {
    const std::string inner = spec.preset.substr(14, spec.preset.size() - 15);
    const auto comma = inner.find(',');
    const double center = std::stod(inner.substr(0, comma));
    const double width = std::stod(inner.substr(comma + 1));
    return gaussian_bump_coefficients(center, width, n_modes);
  }

  if (spec.preset == "random") {
    // smooth random profile: mode-wise decay keeps the target physically
    // reachable, unit norm keeps magnitudes comparable across seeds
    SplitMix64 rng(mix_tag(seed, tag));
    Vector out(n_modes);
    for (int n = 1; n <= n_modes; ++n) {
      out(n - 1) = rng.symmetric() * std::exp(-0.5 * n);
    }
    const double norm = out.norm();
    if (norm == 0.0) {
      out.setZero();
      out(0) = 1.0;
      return out;
    }
    return out / norm;
  }

  throw ConfigError("unknown state preset \"" + spec.preset + "\"");
}

namespace {

ordered_json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file \"" + path + "\"");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json(buffer.str());
}

Matrix parse_matrix(const ordered_json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty()) throw ConfigError(what + " must be a nonempty array");
  const size_t cols = rows[0].is_array() ? rows[0].size() : 0;
  if (cols == 0) throw ConfigError(what + " rows must be nonempty arrays");
  Matrix out(rows.size(), cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols) {
      throw ConfigError(what + " rows must all have the same length");
    }
    for (size_t j = 0; j < cols; ++j) {
      out(i, j) = as_number(rows[i][j], what + " entry");
    }
  }
  return out;
}

}  // namespace

Subspace load_basis_file(const std::string& path, int n_modes) {
  const ordered_json doc = load_json_file(path);
  if (!doc.is_object()) throw ConfigError("basis file must hold a JSON object");
  reject_unknown_keys(doc, "the basis file", {"basis"});
  const Matrix basis = parse_matrix(require(doc, "the basis file", "basis"), "basis");
  if (basis.rows() != n_modes) {
    throw ConfigError("basis rows do not match the configured mode count");
  }
  try {
    return Subspace::from_basis(basis);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("basis file rejected: ") + err.what());
  }
}

Matrix load_matrix_file(const std::string& path, int n_modes) {
  const ordered_json doc = load_json_file(path);
  if (!doc.is_object()) throw ConfigError("matrix file must hold a JSON object");
  reject_unknown_keys(doc, "the matrix file", {"matrix"});
  const Matrix out = parse_matrix(require(doc, "the matrix file", "matrix"), "matrix");
  if (out.rows() != n_modes || out.cols() != n_modes) {
    throw ConfigError("matrix size does not match the configured mode count");
  }
  return out;
}

}  // namespace fapc
