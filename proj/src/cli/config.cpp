#include "mpj/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mpj/binary_io.hpp"
#include "mpj/errors.hpp"

namespace mpj::cli {

namespace {

using neural::ModelKind;

const std::set<std::string, std::less<>> kKeys = {
    "seed",
    "synth.nx", "synth.ny", "synth.samples", "synth.dt", "synth.noise_fraction",
    "data.snapshots", "data.baseline",
    "hodmd.preset", "hodmd.d", "hodmd.eps1", "hodmd.eps", "hodmd.strouhal_h", "hodmd.strouhal_u",
    "reconstruct.samples",
    "split.train", "split.validation", "split.test",
    "window.q",
    "models",
    "train.batch_size", "train.patience", "train.learning_rate", "train.early_stopping",
    "train.rnn.epochs", "train.cnn.epochs",
    "rnn.lstm_units", "rnn.fc1", "rnn.fc2", "rnn.scaling",
    "cnn.filters", "cnn.fc", "cnn.scaling",
    "predict.window",
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw ConfigError("config key '" + key + "' = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad(key, v, "expected a finite number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad(key, v, "expected a non-negative integer");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  bad(key, v, "expected on/off");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::string_view pattern_name(synth::PatternKind k) {
  switch (k) {
    case synth::PatternKind::Constant: return "constant";
    case synth::PatternKind::Sinusoid: return "sinusoid";
    case synth::PatternKind::TravelingWave: return "traveling";
    case synth::PatternKind::GaussianSinusoid: return "gaussian";
  }
  return "?";
}

synth::ModeSpec parse_mode(const std::string& key, const std::string& line) {
  synth::ModeSpec m;
  std::istringstream is(line);
  std::string tok;
  std::set<std::string> seen;
  while (is >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) bad(key, line, "mode fields are written name:value");
    const std::string name = tok.substr(0, colon), value = tok.substr(colon + 1);
    if (!seen.insert(name).second) bad(key, line, "field '" + name + "' given twice");
    if (name == "pattern") {
      if (value == "constant") m.pattern.kind = synth::PatternKind::Constant;
      else if (value == "sinusoid") m.pattern.kind = synth::PatternKind::Sinusoid;
      else if (value == "traveling") m.pattern.kind = synth::PatternKind::TravelingWave;
      else if (value == "gaussian") m.pattern.kind = synth::PatternKind::GaussianSinusoid;
      else bad(key, line, "unknown pattern '" + value + "'");
      continue;
    }
    const double x = to_double(key + "." + name, value);
    if (name == "amp") m.amplitude = x;
    else if (name == "growth") m.growth_rate = x;
    else if (name == "omega") m.frequency = x;
    else if (name == "phase") m.phase = x;
    else if (name == "kx") m.pattern.kx = x;
    else if (name == "ky") m.pattern.ky = x;
    else if (name == "pphase") m.pattern.phase = x;
    else if (name == "x0") m.pattern.x0 = x;
    else if (name == "y0") m.pattern.y0 = x;
    else if (name == "width") m.pattern.width = x;
    else bad(key, line, "unknown mode field '" + name + "'");
  }
  if (m.amplitude < 0.0) bad(key, line, "amplitude must be >= 0");
  if (m.pattern.kind == synth::PatternKind::GaussianSinusoid && !(m.pattern.width > 0.0)) {
    bad(key, line, "gaussian width must be > 0");
  }
  return m;
}

std::string format_mode(const synth::ModeSpec& m) {
  using io::format_double;
  std::string s = "amp:" + format_double(m.amplitude) + " growth:" + format_double(m.growth_rate) +
                  " omega:" + format_double(m.frequency) + " phase:" + format_double(m.phase) +
                  " pattern:" + std::string(pattern_name(m.pattern.kind)) + " kx:" + format_double(m.pattern.kx) +
                  " ky:" + format_double(m.pattern.ky) + " pphase:" + format_double(m.pattern.phase);
  if (m.pattern.kind == synth::PatternKind::GaussianSinusoid) {
    s += " x0:" + format_double(m.pattern.x0) + " y0:" + format_double(m.pattern.y0) +
         " width:" + format_double(m.pattern.width);
  }
  return s;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

void fill_resolved(RunConfig& c) {
  using io::format_double;
  auto& r = c.resolved;
  r.clear();
  r["seed"] = std::to_string(c.seed);
  r["synth.nx"] = std::to_string(c.synth.grid.nx);
  r["synth.ny"] = std::to_string(c.synth.grid.ny);
  r["synth.samples"] = std::to_string(c.synth.samples);
  r["synth.dt"] = format_double(c.synth.dt);
  r["synth.noise_fraction"] = format_double(c.noise_fraction);
  for (std::size_t i = 0; i < c.synth.modes.size(); ++i) {
    r["mode." + std::to_string(i + 1)] = format_mode(c.synth.modes[i]);
  }
  r["data.snapshots"] = c.snapshots ? c.snapshots->generic_string() : "";
  r["data.baseline"] = c.baseline ? c.baseline->generic_string() : "";
  r["hodmd.d"] = std::to_string(c.hodmd.d);
  r["hodmd.eps1"] = format_double(c.hodmd.eps1);
  r["hodmd.eps"] = format_double(c.hodmd.eps);
  r["hodmd.strouhal_h"] = format_double(c.strouhal_h);
  r["hodmd.strouhal_u"] = format_double(c.strouhal_u);
  r["reconstruct.samples"] = std::to_string(c.reconstruct_samples);
  r["split.train"] = std::to_string(c.split.training);
  r["split.validation"] = std::to_string(c.split.validation);
  r["split.test"] = std::to_string(c.split.test);
  r["window.q"] = std::to_string(c.q);
  std::string models;
  for (const auto& m : c.models) {
    const std::string k(neural::to_string(m.kind));
    models += (models.empty() ? "" : ",") + k;
    r["train." + k + ".epochs"] = std::to_string(m.train.epochs);
    r[k + ".scaling"] = m.scaled ? "on" : "off";
    if (m.kind == ModelKind::Rnn) {
      r["rnn.lstm_units"] = std::to_string(m.widths[0]);
      r["rnn.fc1"] = std::to_string(m.widths[1]);
      r["rnn.fc2"] = std::to_string(m.widths[2]);
    } else {
      r["cnn.filters"] = join(m.widths);
      r["cnn.fc"] = std::to_string(m.fc);
    }
    r["train.batch_size"] = std::to_string(m.train.batch_size);
    r["train.patience"] = std::to_string(m.train.patience);
    r["train.learning_rate"] = format_double(m.train.adam.learning_rate);
    r["train.early_stopping"] = m.train.early_stopping ? "on" : "off";
  }
  r["models"] = models;
  r["predict.window"] = std::to_string(c.predict_window);
}

}  // namespace

neural::ArchSpec RunConfig::arch(const ModelSettings& m) const {
  using neural::Activation;
  using neural::LayerKind;
  neural::ArchSpec a;
  a.kind = m.kind;
  a.q = q;
  a.grid = synth.grid;
  a.horizon = horizon;
  a.scaled_io = m.scaled;
  const std::size_t out = horizon * synth.grid.points();
  if (m.kind == ModelKind::Rnn) {
    a.layers = {{LayerKind::Lstm, m.widths[0], {1, 1, 1}, Activation::Tanh},
                {LayerKind::Dense, m.widths[1], {1, 1, 1}, Activation::Relu},
                {LayerKind::Dense, m.widths[2], {1, 1, 1}, Activation::Relu},
                {LayerKind::Dense, out, {1, 1, 1}, Activation::Linear}};
  } else {
    for (std::size_t f : m.widths) {
      a.layers.push_back({LayerKind::Conv3D, f, {2, 2, 2}, Activation::Relu});
      a.layers.push_back({LayerKind::MaxPool3D, 0, {1, 2, 2}, Activation::Linear});
      a.layers.push_back({LayerKind::BatchNorm, 0, {1, 1, 1}, Activation::Linear});
    }
    a.layers.push_back({LayerKind::Conv3D, 2, {1, 1, 1}, Activation::Relu});
    a.layers.push_back({LayerKind::Flatten, 0, {1, 1, 1}, Activation::Linear});
    a.layers.push_back({LayerKind::Dense, m.fc, {1, 1, 1}, Activation::Relu});
    a.layers.push_back({LayerKind::Dense, out, {1, 1, 1}, Activation::Sigmoid});
  }
  return a;
}

const ModelSettings* RunConfig::model(neural::ModelKind kind) const {
  for (const auto& m : models) {
    if (m.kind == kind) return &m;
  }
  return nullptr;
}

RunConfig parse_config(std::string_view text, std::optional<std::uint64_t> seed_override) {
  std::map<std::string, std::string> raw;
  std::map<std::size_t, std::string> mode_lines;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.starts_with("mode.")) {
      const std::string idx = key.substr(5);
      const std::size_t n = to_size(key, idx);
      if (n < 1) bad(key, value, "modes are numbered from 1");
      if (!mode_lines.emplace(n, value).second) throw ConfigError("config key '" + key + "' given twice");
      continue;
    }
    if (!kKeys.contains(key)) throw ConfigError("unknown config key '" + key + "' (line " + std::to_string(lineno) + ")");
    if (!raw.emplace(key, value).second) throw ConfigError("config key '" + key + "' given twice");
  }

  auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (auto it = raw.find(key); it != raw.end()) return it->second;
    return std::nullopt;
  };
  auto num = [&](const std::string& key, double def) { auto v = get(key); return v ? to_double(key, *v) : def; };
  auto size = [&](const std::string& key, std::size_t def) { auto v = get(key); return v ? to_size(key, *v) : def; };
  auto flag = [&](const std::string& key, bool def) { auto v = get(key); return v ? to_bool(key, *v) : def; };
  auto positive = [&](const std::string& key, double v) {
    if (!(v > 0.0)) bad(key, std::to_string(v), "must be > 0");
    return v;
  };
  auto at_least_one = [&](const std::string& key, std::size_t v) {
    if (v < 1) bad(key, std::to_string(v), "must be >= 1");
    return v;
  };

  RunConfig c;
  c.seed = seed_override ? *seed_override : (get("seed") ? to_u64("seed", *get("seed")) : 0);

  c.synth.grid.nx = at_least_one("synth.nx", size("synth.nx", 16));
  c.synth.grid.ny = at_least_one("synth.ny", size("synth.ny", 16));
  c.synth.samples = at_least_one("synth.samples", size("synth.samples", 100));
  c.synth.dt = positive("synth.dt", num("synth.dt", 0.1));
  c.noise_fraction = num("synth.noise_fraction", 0.0);
  if (c.noise_fraction < 0.0) bad("synth.noise_fraction", *get("synth.noise_fraction"), "must be >= 0");
  c.synth.seed = c.seed;
  std::size_t expect = 1;
  for (const auto& [n, l] : mode_lines) {
    if (n != expect++) throw ConfigError("mode keys must be numbered 1, 2, 3, ... without gaps");
    c.synth.modes.push_back(parse_mode("mode." + std::to_string(n), l));
  }

  if (auto v = get("data.snapshots"); v && !v->empty()) c.snapshots = *v;
  if (auto v = get("data.baseline"); v && !v->empty()) c.baseline = *v;

  bool es_default = true;
  if (auto p = get("hodmd.preset"); p && !p->empty()) {
    try {
      c.hodmd = hodmd::preset(*p);
    } catch (const std::exception& e) {
      bad("hodmd.preset", *p, e.what());
    }
    es_default = p->starts_with("simple");
  } else {
    c.hodmd = {10, 1e-8, 1e-8};
  }
  c.hodmd.d = at_least_one("hodmd.d", size("hodmd.d", c.hodmd.d));
  c.hodmd.eps1 = num("hodmd.eps1", c.hodmd.eps1);
  c.hodmd.eps = num("hodmd.eps", c.hodmd.eps);
  if (!(c.hodmd.eps1 > 0.0 && c.hodmd.eps1 < 1.0)) bad("hodmd.eps1", *get("hodmd.eps1"), "must lie in (0,1)");
  if (!(c.hodmd.eps > 0.0 && c.hodmd.eps < 1.0)) bad("hodmd.eps", *get("hodmd.eps"), "must lie in (0,1)");
  c.strouhal_h = positive("hodmd.strouhal_h", num("hodmd.strouhal_h", 1.0));
  c.strouhal_u = positive("hodmd.strouhal_u", num("hodmd.strouhal_u", 1.0));
  c.reconstruct_samples = size("reconstruct.samples", 0);

  c.split.training = at_least_one("split.train", size("split.train", 184));
  c.split.validation = at_least_one("split.validation", size("split.validation", 45));
  c.split.test = at_least_one("split.test", size("split.test", 122));
  c.q = at_least_one("window.q", size("window.q", 10));
  c.predict_window = size("predict.window", 0);

  std::vector<std::string> names = split_list(get("models").value_or("rnn,cnn"));
  if (names.empty()) throw ConfigError("config key 'models' lists no models");
  for (const auto& n : names) {
    ModelSettings m;
    try {
      m.kind = neural::parse_model_kind(n);
    } catch (const std::exception& e) {
      bad("models", n, e.what());
    }
    if (c.model(m.kind)) bad("models", n, "listed twice");
    const std::string k(neural::to_string(m.kind));
    m.train = neural::TrainConfig::defaults_for(m.kind);
    m.train.epochs = at_least_one("train." + k + ".epochs", size("train." + k + ".epochs", m.train.epochs));
    m.train.batch_size = at_least_one("train.batch_size", size("train.batch_size", 5));
    m.train.patience = at_least_one("train.patience", size("train.patience", 10));
    m.train.adam.learning_rate = positive("train.learning_rate", num("train.learning_rate", 1e-3));
    m.train.early_stopping = flag("train.early_stopping", es_default);
    m.train.seed = c.seed;
    if (m.kind == ModelKind::Rnn) {
      m.scaled = flag("rnn.scaling", false);
      m.widths = {at_least_one("rnn.lstm_units", size("rnn.lstm_units", 400)),
                  at_least_one("rnn.fc1", size("rnn.fc1", 200)), at_least_one("rnn.fc2", size("rnn.fc2", 80))};
    } else {
      m.scaled = flag("cnn.scaling", true);
      if (!m.scaled) bad("cnn.scaling", "off", "the CNN ends in a sigmoid and needs min-max scaled data");
      for (const auto& f : split_list(get("cnn.filters").value_or("5,10,20"))) {
        m.widths.push_back(at_least_one("cnn.filters", to_size("cnn.filters", f)));
      }
      if (m.widths.empty()) throw ConfigError("config key 'cnn.filters' lists no filters");
      m.fc = at_least_one("cnn.fc", size("cnn.fc", 80));
    }
    c.models.push_back(std::move(m));
  }
  for (const auto& m : c.models) {
    try {
      (void)neural::shape_trace(c.arch(m));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(neural::to_string(m.kind)) + " architecture does not fit the grid and window: " +
                        e.what());
    }
  }

  fill_resolved(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), seed_override);
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg.resolved) out += k + " = " + v + "\n";
  return out;
}

}  // namespace mpj::cli
