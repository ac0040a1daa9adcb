#include "mpj/cli/commands.hpp"

#include <chrono>
#include <filesystem>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "mpj/binary_io.hpp"
#include "mpj/errors.hpp"
#include "mpj/field.hpp"
#include "mpj/forecast_data.hpp"
#include "mpj/hodmd.hpp"
#include "mpj/metrics.hpp"
#include "mpj/neural/checkpoint.hpp"
#include "mpj/neural/train.hpp"
#include "mpj/synth.hpp"

#ifndef MPJ_VERSION
#define MPJ_VERSION "unknown"
#endif

namespace mpj::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using neural::ModelKind;

std::string sha256_hex(std::span<const char> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(io::read_file(path)); }

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Tracks the inputs and outputs of one stage and writes its manifest.
class Stage {
 public:
  Stage(std::string name, const RunConfig& cfg, fs::path out)
      : name_(std::move(name)), cfg_(cfg), out_(std::move(out)), start_(Clock::now()) {}

  fs::path need(const std::string& file, std::string_view producer) {
    const fs::path p = out_ / file;
    if (!fs::exists(p)) {
      throw MissingArtifactError(p.string() + " not found; run `mpj " + std::string(producer) + "` first");
    }
    inputs_[file] = sha256_file(p);
    return p;
  }

  fs::path need_external(const fs::path& p, std::string_view key) {
    if (!fs::exists(p)) throw MissingArtifactError(p.string() + " (config key " + std::string(key) + ") not found");
    inputs_[p.generic_string()] = sha256_file(p);
    return p;
  }

  fs::path snapshots() {
    return cfg_.snapshots ? need_external(*cfg_.snapshots, "data.snapshots") : need("flow.mpjf", "generate");
  }

  fs::path output(const std::string& file) {
    outputs_.push_back(file);
    return out_ / file;
  }

  json results = json::object();
  json timings = json::object();

  void finish() {
    json m;
    m["command"] = name_;
    m["version"] = MPJ_VERSION;
    m["seed"] = cfg_.seed;
    m["config"] = cfg_.resolved;
    m["inputs"] = inputs_;
    json outs = json::object();
    for (const auto& f : outputs_) outs[f] = sha256_file(out_ / f);
    m["outputs"] = outs;
    m["results"] = results;
    io::write_text_atomic(out_ / ("manifest_" + name_ + ".json"), m.dump(2) + "\n");
    timings["wall_seconds"] = seconds_since(start_);
    io::write_text_atomic(out_ / ("timings_" + name_ + ".json"), timings.dump(2) + "\n");
  }

 private:
  std::string name_;
  const RunConfig& cfg_;
  fs::path out_;
  Clock::time_point start_;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
};

std::string kind_name(ModelKind k) { return std::string(neural::to_string(k)); }

void require_grid(const RunConfig& cfg, const Grid2D& grid, const fs::path& file) {
  if (!(grid == cfg.synth.grid)) {
    throw ConfigError(file.string() + " has a " + std::to_string(grid.nx) + "x" + std::to_string(grid.ny) +
                      " grid but synth.nx/synth.ny say " + std::to_string(cfg.synth.grid.nx) + "x" +
                      std::to_string(cfg.synth.grid.ny));
  }
}

bool any_scaled(const RunConfig& cfg) {
  for (const auto& m : cfg.models) {
    if (m.scaled) return true;
  }
  return false;
}

ScalingParams read_scaling(const fs::path& p) {
  try {
    const auto j = json::parse(io::read_file(p));
    return {j.at("min").get<double>(), j.at("max").get<double>()};
  } catch (const json::exception& e) {
    throw CorruptFileError(p.string() + ": " + e.what());
  }
}

struct LoadedModel {
  const ModelSettings* settings;
  neural::Checkpoint checkpoint;
};

std::vector<LoadedModel> load_models(Stage& st, const RunConfig& cfg) {
  std::vector<LoadedModel> out;
  for (const auto& m : cfg.models) {
    auto cp = neural::read_checkpoint(st.need("model_" + kind_name(m.kind) + ".mpjn", "train"));
    if (!(cp.arch == cfg.arch(m))) {
      throw ConfigError("model_" + kind_name(m.kind) + ".mpjn was trained with a different architecture, grid or q; "
                        "rerun `mpj train` with this config");
    }
    out.push_back({&m, std::move(cp)});
  }
  return out;
}

// Test split in physical units plus the optional baseline segment.
struct TestData {
  SnapshotMatrix field;
  std::optional<SnapshotMatrix> baseline;
};

TestData load_test(Stage& st, const RunConfig& cfg) {
  const auto test_path = st.need("test.mpjf", "preprocess");
  require_grid(cfg, read_snapshot_header(test_path).grid, test_path);
  TestData t{read_snapshots(test_path), std::nullopt};
  if (cfg.baseline) t.baseline = read_snapshots(st.need("baseline_test.mpjf", "preprocess"));
  return t;
}

Eigen::MatrixXd window_baseline(const TestData& t, std::size_t w, const RunConfig& cfg) {
  return t.baseline->data().middleCols(static_cast<Eigen::Index>(w + cfg.q), static_cast<Eigen::Index>(cfg.horizon));
}

void cmd_generate(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  if (cfg.synth.modes.empty()) throw ConfigError("generate needs at least one mode.N line in the config");
  Stage st("generate", cfg, out);
  synth::SynthConfig sc = cfg.synth;
  if (cfg.noise_fraction > 0.0) {
    auto clean = sc;
    clean.noise_std = 0.0;
    const auto flow = synth::generate_flow(clean);
    const auto& d = flow.snapshots.data();
    sc.noise_std = cfg.noise_fraction * std::sqrt(d.squaredNorm() / static_cast<double>(d.size()));
  }
  const auto flow = synth::generate_flow(sc);
  const auto rows = hodmd::mode_table(flow.ground_truth, cfg.strouhal_h, cfg.strouhal_u);
  write_snapshots(st.output("flow.mpjf"), flow.snapshots);
  hodmd::write_mode_table_csv(st.output("ground_truth.csv"), rows);
  st.results["samples"] = flow.snapshots.samples();
  st.results["points"] = flow.snapshots.points();
  st.results["noise_std"] = sc.noise_std;
  st.results["ground_truth_modes"] = rows.size();
  st.finish();
  log << "generate: " << flow.snapshots.samples() << " snapshots, " << rows.size() << " ground-truth modes\n";
}

void cmd_decompose(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  Stage st("decompose", cfg, out);
  const auto path = st.snapshots();
  const auto header = read_snapshot_header(path);
  if (header.samples <= cfg.hodmd.d + 1) {
    throw ConfigError("hodmd.d = " + std::to_string(cfg.hodmd.d) + " needs at least d + 2 snapshots, but " +
                      path.string() + " has K = " + std::to_string(header.samples));
  }
  const auto v = read_snapshots(path);
  const hodmd::Rom rom{hodmd::hodmd_decompose(v, cfg.hodmd)};
  const auto recon = hodmd::rom_reconstruct(rom, v.samples());
  const double err = metrics::rrmse(recon.data(), v.data());
  const double imag = hodmd::rom_imag_residue(rom, v.samples());
  hodmd::write_mode_table_csv(st.output("modes.csv"), hodmd::mode_table(rom.result, cfg.strouhal_h, cfg.strouhal_u));
  hodmd::write_rom(st.output("rom.mpjr"), rom);
  st.results["reconstruction_rrmse"] = err;
  st.results["imag_residue"] = imag;
  st.results["spatial_complexity"] = rom.result.spatial_complexity;
  st.results["spectral_complexity"] = rom.result.spectral_complexity;
  st.finish();
  log << "decompose: N = " << rom.result.spatial_complexity << ", M = " << rom.result.spectral_complexity
      << ", reconstruction RRMSE = " << io::format_double(err) << "\n";
}

void cmd_reconstruct(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  Stage st("reconstruct", cfg, out);
  const auto rom = hodmd::read_rom(st.need("rom.mpjr", "decompose"));
  std::size_t count = cfg.reconstruct_samples;
  std::optional<SnapshotMatrix> original;
  const fs::path src = cfg.snapshots ? *cfg.snapshots : out / "flow.mpjf";
  if (fs::exists(src)) original = read_snapshots(cfg.snapshots ? st.need_external(src, "data.snapshots") : st.need("flow.mpjf", "generate"));
  if (count == 0) {
    if (!original) throw ConfigError("reconstruct.samples = 0 means 'same K as the snapshots', but " + src.string() + " does not exist");
    count = original->samples();
  }
  const auto recon = hodmd::rom_reconstruct(rom, count);
  write_snapshots(st.output("reconstruction.mpjf"), recon);
  st.results["samples"] = count;
  if (original && original->grid() == recon.grid()) {
    const std::size_t k = std::min(count, original->samples());
    st.results["reconstruction_rrmse"] =
        metrics::rrmse(recon.data().leftCols(static_cast<Eigen::Index>(k)), original->data().leftCols(static_cast<Eigen::Index>(k)));
  }
  st.finish();
  log << "reconstruct: " << count << " snapshots\n";
}

void cmd_preprocess(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  Stage st("preprocess", cfg, out);
  const auto path = st.snapshots();
  const auto header = read_snapshot_header(path);
  require_grid(cfg, header.grid, path);
  std::optional<fs::path> base_path;
  if (cfg.baseline) {
    base_path = st.need_external(*cfg.baseline, "data.baseline");
    const auto bh = read_snapshot_header(*base_path);
    if (!(bh.grid == header.grid) || bh.samples != header.samples || bh.dt != header.dt) {
      throw ConfigError("baseline " + base_path->string() + " does not match the layout of " + path.string());
    }
  }
  forecast::SplitSpec spec;
  try {
    spec = forecast::scale_split(cfg.split, header.samples);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("split does not fit K: ") + e.what());
  }
  if (spec.training == 0 || spec.validation == 0 || spec.test == 0) {
    throw ConfigError("split scaled to K = " + std::to_string(header.samples) + " leaves an empty segment");
  }
  for (auto [name, n] : {std::pair{"training", spec.training}, {"validation", spec.validation}, {"test", spec.test}}) {
    if (forecast::window_count(n, cfg.q, cfg.horizon) == 0) {
      throw ConfigError(std::string(name) + " split has " + std::to_string(n) + " samples, too few for q = " +
                        std::to_string(cfg.q) + " plus 2 targets");
    }
  }

  SnapshotMatrix v = read_snapshots(path);
  std::optional<forecast::Splits> base_parts;
  if (base_path) {
    const auto single = read_snapshots(*base_path);
    v = subtract_baseline(v, single);
    base_parts = forecast::split(single, spec);
  }
  const auto parts = forecast::split(v, spec);
  std::optional<ScalingParams> scaling;
  if (any_scaled(cfg)) scaling = fit_minmax(parts.train);

  write_snapshots(st.output("train.mpjf"), parts.train);
  write_snapshots(st.output("validation.mpjf"), parts.validation);
  write_snapshots(st.output("test.mpjf"), parts.test);
  if (base_parts) write_snapshots(st.output("baseline_test.mpjf"), base_parts->test);
  if (scaling) {
    const json s = {{"min", scaling->min}, {"max", scaling->max}};
    io::write_text_atomic(st.output("scaling.json"), s.dump(2) + "\n");
    st.results["scaling"] = s;
  }
  st.results["split"] = {{"train", spec.training}, {"validation", spec.validation}, {"test", spec.test}};
  st.results["boundaries"] = {spec.training, spec.training + spec.validation};
  st.results["windows"] = {{"train", forecast::window_count(spec.training, cfg.q, cfg.horizon)},
                           {"validation", forecast::window_count(spec.validation, cfg.q, cfg.horizon)},
                           {"test", forecast::window_count(spec.test, cfg.q, cfg.horizon)}};
  st.results["baseline_subtracted"] = base_path.has_value();
  st.finish();
  log << "preprocess: split " << spec.training << "/" << spec.validation << "/" << spec.test << "\n";
}

void cmd_train(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  Stage st("train", cfg, out);
  const auto train_path = st.need("train.mpjf", "preprocess");
  const auto val_path = st.need("validation.mpjf", "preprocess");
  require_grid(cfg, read_snapshot_header(train_path).grid, train_path);
  std::optional<ScalingParams> scaling;
  if (any_scaled(cfg)) scaling = read_scaling(st.need("scaling.json", "preprocess"));
  const auto train_raw = read_snapshots(train_path);
  const auto val_raw = read_snapshots(val_path);

  struct Trained {
    const ModelSettings* m;
    neural::ArchSpec arch;
    neural::TrainResult r;
  };
  std::vector<Trained> done;
  for (const auto& m : cfg.models) {
    const auto arch = cfg.arch(m);
    auto tr = std::make_shared<const SnapshotMatrix>(m.scaled ? apply_minmax(train_raw, *scaling) : train_raw);
    auto va = std::make_shared<const SnapshotMatrix>(m.scaled ? apply_minmax(val_raw, *scaling) : val_raw);
    const auto t0 = Clock::now();
    auto r = neural::train(arch, forecast::rolling_windows(tr, cfg.q, cfg.horizon),
                           forecast::rolling_windows(va, cfg.q, cfg.horizon), m.train);
    st.timings[kind_name(m.kind) + "_seconds"] = seconds_since(t0);
    log << "train " << kind_name(m.kind) << ": " << r.report.epochs.size() << " epochs, best epoch "
        << r.report.best_epoch << "\n";
    done.push_back({&m, arch, std::move(r)});
  }
  for (const auto& d : done) {
    const std::string k = kind_name(d.m->kind);
    neural::write_checkpoint(st.output("model_" + k + ".mpjn"), d.arch, d.r.params);
    neural::write_train_report_csv(st.output("train_" + k + ".csv"), d.r.report);
    const auto& rep = d.r.report;
    st.results[k] = {{"parameters", neural::param_count(d.arch)},
                     {"epochs_run", rep.epochs.size()},
                     {"best_epoch", rep.best_epoch},
                     {"best_val_loss", rep.epochs[rep.best_epoch - 1].val_loss},
                     {"final_train_loss", rep.epochs.back().train_loss},
                     {"early_stopping", d.m->train.early_stopping},
                     {"stop_reason", rep.reason == neural::StopReason::EarlyStop ? "early_stop" : "max_epochs"}};
  }
  st.finish();
}

void cmd_predict(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  Stage st("predict", cfg, out);
  const auto test = load_test(st, cfg);
  const std::size_t windows = forecast::window_count(test.field.samples(), cfg.q, cfg.horizon);
  if (cfg.predict_window >= windows) {
    throw ConfigError("predict.window = " + std::to_string(cfg.predict_window) + " but the test split has " +
                      std::to_string(windows) + " windows");
  }
  std::optional<ScalingParams> scaling;
  if (any_scaled(cfg)) scaling = read_scaling(st.need("scaling.json", "preprocess"));
  const auto models = load_models(st, cfg);

  const std::size_t w = cfg.predict_window;
  const auto inputs = test.field.data().middleCols(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(cfg.q));
  Eigen::MatrixXd truth = test.field.data().middleCols(static_cast<Eigen::Index>(w + cfg.q), static_cast<Eigen::Index>(cfg.horizon));
  std::optional<Eigen::MatrixXd> base;
  if (test.baseline) {
    base = window_baseline(test, w, cfg);
    truth += *base;
  }
  for (const auto& lm : models) {
    const std::string k = kind_name(lm.settings->kind);
    const auto pred = neural::predict_two_ahead(lm.checkpoint.arch, lm.checkpoint.params, inputs,
                                                lm.settings->scaled ? scaling : std::nullopt, base);
    write_snapshots(st.output("prediction_" + k + ".mpjf"), SnapshotMatrix(test.field.grid(), test.field.dt(), pred));
    st.results[k] = {{"window", w}, {"rrmse", metrics::rrmse(pred, truth)}};
    log << "predict " << k << ": window " << w << "\n";
  }
  st.finish();
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  Stage st("evaluate", cfg, out);
  const auto test = load_test(st, cfg);
  const std::size_t windows = forecast::window_count(test.field.samples(), cfg.q, cfg.horizon);
  if (windows == 0) throw ConfigError("test split is too short for q = " + std::to_string(cfg.q));
  std::optional<ScalingParams> scaling;
  if (any_scaled(cfg)) scaling = read_scaling(st.need("scaling.json", "preprocess"));
  const auto models = load_models(st, cfg);

  const SnapshotMatrix phys = test.baseline ? add_baseline(test.field, *test.baseline) : test.field;
  auto truth = [&](std::size_t w) {
    return phys.data().middleCols(static_cast<Eigen::Index>(w + cfg.q), static_cast<Eigen::Index>(cfg.horizon));
  };

  std::vector<std::pair<std::string, metrics::ErrorSeries>> series;
  for (const auto& lm : models) {
    std::vector<double> errs;
    for (std::size_t w = 0; w < windows; ++w) {
      std::optional<Eigen::MatrixXd> base;
      if (test.baseline) base = window_baseline(test, w, cfg);
      const auto pred = neural::predict_two_ahead(
          lm.checkpoint.arch, lm.checkpoint.params,
          test.field.data().middleCols(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(cfg.q)),
          lm.settings->scaled ? scaling : std::nullopt, base);
      errs.push_back(metrics::rrmse(pred, truth(w)));
    }
    series.emplace_back(kind_name(lm.settings->kind), metrics::make_series(std::move(errs)));
  }
  const auto persist = synth::persistence_baseline(phys, cfg.q);
  std::vector<double> perrs;
  for (std::size_t w = 0; w < windows; ++w) {
    perrs.push_back(metrics::rrmse(persist.data().middleCols(static_cast<Eigen::Index>(2 * w), 2), truth(w)));
  }
  series.emplace_back("persistence", metrics::make_series(std::move(perrs)));

  st.results["windows"] = windows;
  for (const auto& [name, s] : series) {
    metrics::write_error_csv(st.output("eval_" + name + ".csv"), s);
    st.results["mean_rrmse"][name] = s.mean;
    log << "evaluate " << name << ": mean RRMSE " << io::format_double(s.mean) << " over " << windows
        << " windows\n";
  }
  st.finish();
}

void cmd_report(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  std::ostringstream os;
  os << "# run report\n\n";
  for (const auto& m : cfg.models) {
    const auto arch = cfg.arch(m);
    os << kind_name(m.kind) << " architecture:";
    for (const auto& s : neural::shape_trace(arch)) os << ' ' << neural::format_shape(s);
    os << "\n" << kind_name(m.kind) << " trainable parameters: " << neural::param_count(arch) << "\n";
  }
  bool any = false;
  for (std::string_view name : kCommands) {
    const fs::path p = out / ("manifest_" + std::string(name) + ".json");
    if (!fs::exists(p)) continue;
    any = true;
    const auto j = json::parse(io::read_file(p));
    os << "\n## " << name << "\n";
    for (const auto& [k, v] : j.at("results").items()) os << k << ": " << v.dump() << "\n";
  }
  if (!any) throw MissingArtifactError("no manifests in " + out.string() + "; run `mpj generate` first");
  io::write_text_atomic(out / "report.md", os.str());
  log << os.str();
}

}  // namespace

void run_command(std::string_view name, const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  fs::create_directories(out);
  if (name == "generate") return cmd_generate(cfg, out, log);
  if (name == "decompose") return cmd_decompose(cfg, out, log);
  if (name == "reconstruct") return cmd_reconstruct(cfg, out, log);
  if (name == "preprocess") return cmd_preprocess(cfg, out, log);
  if (name == "train") return cmd_train(cfg, out, log);
  if (name == "predict") return cmd_predict(cfg, out, log);
  if (name == "evaluate") return cmd_evaluate(cfg, out, log);
  if (name == "report") return cmd_report(cfg, out, log);
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const NumericOverflowError*>(&e) || dynamic_cast<const TrainingDivergedError*>(&e) ||
      dynamic_cast<const DegenerateScalingError*>(&e) || dynamic_cast<const EmptySpectrumError*>(&e) ||
      dynamic_cast<const UndefinedRelativeError*>(&e)) {
    return 4;
  }
  if (dynamic_cast<const Error*>(&e) || dynamic_cast<const std::invalid_argument*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return 3;
  }
  return 1;
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid HODMD and deep-learning flow forecasting pipeline", "mpj"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "run";
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--out", out_dir, "directory for all artifacts")->capture_default_str();
  const std::map<std::string_view, std::string_view> help = {
      {"generate", "synthesize a flow and its ground-truth modes"},
      {"decompose", "HODMD of the snapshot file"},
      {"reconstruct", "rebuild snapshots from the ROM"},
      {"preprocess", "baseline subtraction, split and scaling"},
      {"train", "train the configured forecasters"},
      {"predict", "two-step forecast from one test window"},
      {"evaluate", "per-window test RRMSE against persistence"},
      {"report", "summarize the manifests in the output directory"}};
  for (std::string_view c : kCommands) app.add_subcommand(std::string(c), std::string(help.at(c)));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "mpj: " << e.what() << "\n";
    return 2;
  }

  try {
    const RunConfig cfg = config_path.empty() ? parse_config("", seed) : load_config(config_path, seed);
    run_command(app.get_subcommands().front()->get_name(), cfg, out_dir, out);
    return 0;
  } catch (const std::exception& e) {
    err << "mpj: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace mpj::cli
