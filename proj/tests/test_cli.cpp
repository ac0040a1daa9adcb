#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mpj/binary_io.hpp"
#include "mpj/cli/commands.hpp"
#include "mpj/cli/config.hpp"
#include "mpj/errors.hpp"
#include "mpj/field.hpp"
#include "test_support.hpp"
#include "toy_pipeline.hpp"

using namespace mpj;
using namespace mpj::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "mpj");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& text, const std::string& name = "run.conf") {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

nlohmann::json manifest(const fs::path& dir, const std::string& cmd) {
  return nlohmann::json::parse(io::read_file(dir / ("manifest_" + cmd + ".json")));
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

const std::string kFiveMode = R"(
synth.nx = 40
synth.ny = 40
synth.samples = 200
synth.dt = 0.1
mode.1 = amp:1 phase:0.5 pattern:sinusoid kx:1 ky:0 pphase:0.3
mode.2 = amp:0.9 growth:-0.05 omega:2 phase:0.2 pattern:sinusoid kx:1 ky:1
mode.3 = amp:0.6 omega:3.3 phase:1.1 pattern:gaussian kx:2 ky:1 pphase:0.4 x0:0.45 y0:0.55 width:0.3
hodmd.d = 10
hodmd.eps1 = 1e-8
hodmd.eps = 1e-8
)";

}  // namespace

TEST_CASE("config defaults and resolution") {
  const auto c = parse_config("");
  CHECK(c.seed == 0);
  CHECK(c.q == 10);
  CHECK(c.horizon == 2);
  CHECK(c.split.training == 184);
  REQUIRE(c.models.size() == 2);
  CHECK(c.models[0].kind == neural::ModelKind::Rnn);
  CHECK_FALSE(c.models[0].scaled);
  CHECK(c.models[1].scaled);
  CHECK(c.models[0].train.epochs == 140);
  CHECK(c.models[1].train.epochs == 70);
  CHECK(c.arch(c.models[0]) == neural::rnn_arch(10, {16, 16}));

  auto big = parse_config("synth.nx = 100\nsynth.ny = 100\n");
  CHECK(big.arch(big.models[1]) == neural::cnn_arch(10, {100, 100}));

  const auto again = parse_config(format_config(c));
  CHECK(again.resolved == c.resolved);
}

TEST_CASE("config parsing") {
  const auto c = parse_config(R"(
# comment line
seed = 42   # trailing comment
mode.1 = amp:2 omega:1.5 pattern:gaussian kx:1 ky:2 x0:0.3 y0:0.7 width:0.2
mode.2 = amp:1 pattern:constant
models = cnn
train.early_stopping = off
)");
  CHECK(c.seed == 42);
  CHECK(c.synth.seed == 42);
  REQUIRE(c.synth.modes.size() == 2);
  CHECK(c.synth.modes[0].amplitude == 2.0);
  CHECK(c.synth.modes[0].frequency == 1.5);
  CHECK(c.synth.modes[0].pattern.kind == synth::PatternKind::GaussianSinusoid);
  CHECK(c.synth.modes[0].pattern.width == 0.2);
  CHECK(c.synth.modes[1].pattern.kind == synth::PatternKind::Constant);
  REQUIRE(c.models.size() == 1);
  CHECK_FALSE(c.models[0].train.early_stopping);
  CHECK(parse_config("seed = 1", 99).seed == 99);
}

TEST_CASE("presets") {
  const auto s = parse_config("hodmd.preset = simple-singlephase");
  CHECK(s.hodmd.d == 100);
  CHECK(s.hodmd.eps == 7e-3);
  CHECK(s.hodmd.eps1 == 7e-3);
  CHECK(s.models[0].train.early_stopping);
  const auto m = parse_config("hodmd.preset = modified-singlephase\nhodmd.d = 30");
  CHECK(m.hodmd.d == 30);
  CHECK(m.hodmd.eps == 2e-3);
  CHECK_FALSE(m.models[0].train.early_stopping);
  CHECK_THROWS_AS(parse_config("hodmd.preset = nope"), ConfigError);
}

TEST_CASE("config errors") {
  for (const char* text : {"unknown.key = 1", "seed = -3", "seed = 1\nseed = 2", "synth.dt = 0", "synth.dt = nan",
                           "no equals sign", "models = rnn,lstm", "models = rnn,rnn", "cnn.scaling = off",
                           "train.learning_rate = 0", "window.q = 0", "hodmd.eps = 1.5", "mode.1 = amp:1 bogus:2",
                           "mode.1 = amp:1\nmode.3 = amp:1", "mode.1 = pattern:spiral", "mode.1 = amp:-1",
                           "rnn.scaling = maybe", "split.test = 0", "window.horizon = 3",
                           "models = cnn\nwindow.q = 2"}) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  }
}

TEST_CASE("command line") {
  test::TempDir dir;
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 2);
  CHECK(run({"fly"}).code == 2);
  CHECK(run({"generate", "--seed", "x"}).code == 2);
  CHECK(run({"generate", "--config", (dir.path() / "missing.conf").string()}).code == 2);

  const auto bad = write_config(dir.path(), "colour = blue\n");
  const auto r = run({"generate", "--config", bad.string(), "--out", (dir.path() / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("colour") != std::string::npos);
  CHECK_FALSE(fs::exists(dir.path() / "o" / "flow.mpjf"));

  const auto nomodes = write_config(dir.path(), "seed = 1\n", "nomodes.conf");
  CHECK(run({"generate", "--config", nomodes.string(), "--out", (dir.path() / "o").string()}).code == 2);
}

TEST_CASE("generate") {
  test::TempDir dir;
  SUBCASE("one steady mode gives identical columns") {
    const auto cfg = write_config(dir.path(), "synth.samples = 7\nmode.1 = amp:2 pattern:sinusoid kx:1 ky:1\n");
    REQUIRE(run({"generate", "--config", cfg.string(), "--out", dir.path().string()}).code == 0);
    const auto v = read_snapshots(dir.path() / "flow.mpjf");
    for (std::size_t k = 1; k < v.samples(); ++k) CHECK(v.column(k) == v.column(0));
    CHECK(line_count(dir.path() / "ground_truth.csv") == 2);
  }
  SUBCASE("seeded noisy runs are byte-identical") {
    const auto cfg = write_config(dir.path(), "synth.noise_fraction = 0.1\nmode.1 = amp:1 omega:1 pattern:sinusoid kx:1\n");
    REQUIRE(run({"generate", "--config", cfg.string(), "--out", (dir.path() / "a").string(), "--seed", "5"}).code == 0);
    REQUIRE(run({"generate", "--config", cfg.string(), "--out", (dir.path() / "b").string(), "--seed", "5"}).code == 0);
    REQUIRE(run({"generate", "--config", cfg.string(), "--out", (dir.path() / "c").string(), "--seed", "6"}).code == 0);
    CHECK(io::read_file(dir.path() / "a" / "flow.mpjf") == io::read_file(dir.path() / "b" / "flow.mpjf"));
    CHECK(io::read_file(dir.path() / "a" / "flow.mpjf") != io::read_file(dir.path() / "c" / "flow.mpjf"));
    CHECK(io::read_file(dir.path() / "a" / "manifest_generate.json") ==
          io::read_file(dir.path() / "b" / "manifest_generate.json"));
  }
  SUBCASE("five-mode config lists five ground-truth modes") {
    const auto cfg = write_config(dir.path(), kFiveMode);
    REQUIRE(run({"generate", "--config", cfg.string(), "--out", dir.path().string()}).code == 0);
    CHECK(line_count(dir.path() / "ground_truth.csv") == 1 + 5);
    CHECK(manifest(dir.path(), "generate")["results"]["ground_truth_modes"] == 5);
  }
}

TEST_CASE("decompose") {
  test::TempDir dir;
  SUBCASE("noiseless five-mode flow") {
    const auto cfg = write_config(dir.path(), kFiveMode);
    REQUIRE(run({"generate", "--config", cfg.string(), "--out", dir.path().string()}).code == 0);
    REQUIRE(run({"decompose", "--config", cfg.string(), "--out", dir.path().string()}).code == 0);
    const auto m = manifest(dir.path(), "decompose");
    CHECK(m["results"]["reconstruction_rrmse"].get<double>() <= 1e-6);
    CHECK(m["results"]["spectral_complexity"] == 5);
    CHECK(line_count(dir.path() / "modes.csv") == 1 + 5);
    CHECK(m["inputs"]["flow.mpjf"] == sha256_file(dir.path() / "flow.mpjf"));
    CHECK(m["outputs"]["rom.mpjr"] == sha256_file(dir.path() / "rom.mpjr"));

    REQUIRE(run({"reconstruct", "--config", cfg.string(), "--out", dir.path().string()}).code == 0);
    CHECK(read_snapshots(dir.path() / "reconstruction.mpjf").samples() == 200);
    CHECK(manifest(dir.path(), "reconstruct")["results"]["reconstruction_rrmse"].get<double>() <= 1e-6);
  }
  SUBCASE("filter saturation leaves only the dominant pair") {
    const auto cfg = write_config(dir.path(), R"(
synth.samples = 80
mode.1 = amp:1 omega:2 pattern:sinusoid kx:1 ky:1
mode.2 = amp:0.1 omega:3 pattern:sinusoid kx:2 ky:1
hodmd.eps = 0.5
)");
    REQUIRE(run({"generate", "--config", cfg.string(), "--out", dir.path().string()}).code == 0);
    REQUIRE(run({"decompose", "--config", cfg.string(), "--out", dir.path().string()}).code == 0);
    CHECK(line_count(dir.path() / "modes.csv") == 1 + 2);
  }
  SUBCASE("K <= d + 1 is a config error and writes nothing") {
    const auto cfg = write_config(dir.path(), "synth.samples = 11\nhodmd.d = 10\nmode.1 = amp:1 omega:1 pattern:sinusoid kx:1\n");
    REQUIRE(run({"generate", "--config", cfg.string(), "--out", dir.path().string()}).code == 0);
    CHECK(run({"decompose", "--config", cfg.string(), "--out", dir.path().string()}).code == 2);
    CHECK_FALSE(fs::exists(dir.path() / "modes.csv"));
    CHECK_FALSE(fs::exists(dir.path() / "manifest_decompose.json"));
  }
  SUBCASE("missing input names its producer") {
    const auto r = run({"decompose", "--out", dir.path().string()});
    CHECK(r.code == 3);
    CHECK(r.err.find("mpj generate") != std::string::npos);
  }
}

TEST_CASE("toy pipeline") {
  test::TempDir dir;
  const auto cfg = write_config(dir.path(), test::kToyConfig);
  const auto out = (dir.path() / "run").string();
  auto stage = [&](const std::string& c) { return run({c, "--config", cfg.string(), "--out", out}); };

  REQUIRE(stage("generate").code == 0);
  const auto early = stage("predict");
  CHECK(early.code == 3);
  CHECK(early.err.find("preprocess") != std::string::npos);
  REQUIRE(stage("preprocess").code == 0);
  const auto no_model = stage("predict");
  CHECK(no_model.code == 3);
  CHECK(no_model.err.find("mpj train") != std::string::npos);

  REQUIRE(stage("train").code == 0);
  REQUIRE(stage("predict").code == 0);
  REQUIRE(stage("evaluate").code == 0);
  REQUIRE(stage("report").code == 0);

  const auto pre = manifest(out, "preprocess");
  const std::size_t windows = pre["results"]["windows"]["test"];
  CHECK(windows == forecast::window_count(pre["results"]["split"]["test"], 4, 2));
  for (const char* name : {"eval_rnn.csv", "eval_cnn.csv", "eval_persistence.csv"}) {
    CHECK(line_count(fs::path(out) / name) == windows + 2);  // header and mean row
  }
  const auto pred = read_snapshots(fs::path(out) / "prediction_cnn.mpjf");
  CHECK(pred.samples() == 2);
  CHECK(pred.grid() == Grid2D{12, 12});

  SUBCASE("a config that no longer matches the checkpoint is rejected") {
    const auto other = write_config(dir.path(), test::kToyConfig + "rnn.fc1 = 9\n", "other.conf");
    CHECK(run({"evaluate", "--config", other.string(), "--out", out}).code == 2);
  }
  SUBCASE("predict window out of range") {
    const auto other = write_config(dir.path(), test::kToyConfig + "predict.window = 500\n", "other.conf");
    CHECK(run({"predict", "--config", other.string(), "--out", out}).code == 2);
  }
}

TEST_CASE("baseline subtraction round trip through the CLI") {
  test::TempDir dir;
  const auto single_dir = dir.path() / "single";
  // Single-phase field: the toy flow without noise.
  std::string text = test::kToyConfig;
  text.erase(text.find("synth.noise_fraction"), std::string("synth.noise_fraction = 0.02\n").size());
  const auto single_cfg = write_config(dir.path(), text, "single.conf");
  REQUIRE(run({"generate", "--config", single_cfg.string(), "--out", single_dir.string()}).code == 0);

  const auto cfg = write_config(dir.path(), test::kToyConfig + "data.baseline = " +
                                                (single_dir / "flow.mpjf").generic_string() + "\n");
  const auto out = (dir.path() / "run").string();
  for (const char* c : {"generate", "preprocess"}) REQUIRE(run({c, "--config", cfg.string(), "--out", out}).code == 0);
  CHECK(fs::exists(fs::path(out) / "baseline_test.mpjf"));
  // Subtracted training data is just the noise.
  const auto train = read_snapshots(fs::path(out) / "train.mpjf");
  const auto noise_std = manifest(out, "generate")["results"]["noise_std"].get<double>();
  CHECK(std::sqrt(train.data().squaredNorm() / static_cast<double>(train.data().size())) ==
        doctest::Approx(noise_std).epsilon(0.1));

  for (const char* c : {"train", "predict", "evaluate"}) REQUIRE(run({c, "--config", cfg.string(), "--out", out}).code == 0);
  // Persistence in physical units is comparable to the raw flow's persistence.
  const auto raw_out = (dir.path() / "raw").string();
  for (const char* c : {"generate", "preprocess", "train", "evaluate"}) {
    REQUIRE(run({c, "--config", write_config(dir.path(), test::kToyConfig, "raw.conf").string(), "--out", raw_out}).code == 0);
  }
  CHECK(manifest(out, "evaluate")["results"]["mean_rrmse"]["persistence"].get<double>() ==
        doctest::Approx(manifest(raw_out, "evaluate")["results"]["mean_rrmse"]["persistence"].get<double>()).epsilon(1e-12));
}

TEST_CASE("preprocess rejects a split that leaves no windows, before writing") {
  test::TempDir dir;
  std::string text = test::kToyConfig;
  text.replace(text.find("split.validation = 12"), 21, "split.validation = 3 ");
  text.replace(text.find("split.train = 36"), 16, "split.train = 45");
  const auto cfg2 = write_config(dir.path(), text, "short.conf");
  REQUIRE(run({"generate", "--config", cfg2.string(), "--out", dir.path().string()}).code == 0);
  CHECK(run({"preprocess", "--config", cfg2.string(), "--out", dir.path().string()}).code == 2);
  CHECK_FALSE(fs::exists(dir.path() / "train.mpjf"));
}

TEST_CASE("toy pipeline is deterministic") {
  test::TempDir dir;
  const auto a = dir.path() / "a", b = dir.path() / "b";
  test::run_toy_pipeline(a);
  test::run_toy_pipeline(b);
  for (const auto& f : test::kDeterministicArtifacts) {
    CAPTURE(f);
    CHECK(io::read_file(a / f) == io::read_file(b / f));
  }
}
