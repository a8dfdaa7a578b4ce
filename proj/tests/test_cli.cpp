#include "doctest.h"
#include "support.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "avtopo/cli.hpp"
#include "avtopo/image_io.hpp"
#include "avtopo/verify/acceptance.hpp"

using namespace avtopo;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("help and usage errors") {
  const Run help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("selftest") != std::string::npos);
  CHECK(help.out.find("orientation-scores") != std::string::npos);

  CHECK(run({}).code == cli::exit_config);
  CHECK(run({"no-such-command"}).code == cli::exit_config);
  CHECK(run({"synth"}).code == cli::exit_config);  // --out-dir is required
}

TEST_CASE("loss on identical prediction and ground truth") {
  support::TempDir tmp("cli-loss");
  const AVGroundTruth gt = verify::random_truth(21, 24, 24);
  io::write_png_rgb8(tmp.path / "gt.png", encode_rite_label(gt));
  fs::create_directories(tmp.path / "pred");
  for (AvClass c : kAllClasses)
    io::write_raw_f64(tmp.path / "pred" / (std::string(to_string(c)) + ".f64"),
                      gt.channel(c).cast<double>());

  const Run r = run({"loss", "--pred-dir", (tmp.path / "pred").string(), "--gt", (tmp.path / "gt.png").string()});
  REQUIRE(r.code == 0);
  const json m = json::parse(r.out);
  CHECK(m["schema"] == 1);
  CHECK(m["command"] == "loss");
  CHECK(m["results"]["total"].get<double>() < 1e-3);
  CHECK(m["inputs"].size() == 4);
  CHECK(m["params"]["topoloss.k"] == 5);
}

TEST_CASE("metrics with mismatched sizes names both sizes") {
  support::TempDir tmp("cli-size");
  fs::create_directories(tmp.path / "pred");
  fs::create_directories(tmp.path / "gt");
  io::write_png_rgb8(tmp.path / "gt" / "a.png", encode_rite_label(verify::random_truth(1, 128, 128)));
  io::write_png_rgb8(tmp.path / "pred" / "a.png", encode_rite_label(verify::random_truth(2, 64, 64)));
  const Run r = run({"metrics", "--pred-dir", (tmp.path / "pred").string(), "--gt-dir",
                     (tmp.path / "gt").string()});
  CHECK(r.code == cli::exit_config);
  CHECK(r.err.find("64x64") != std::string::npos);
  CHECK(r.err.find("128x128") != std::string::npos);
}

TEST_CASE("metrics output does not depend on the job count") {
  support::TempDir tmp("cli-jobs");
  fs::create_directories(tmp.path / "pred");
  fs::create_directories(tmp.path / "gt");
  for (int i = 0; i < 5; ++i) {
    const std::string name = "img" + std::to_string(i) + ".png";
    const AVGroundTruth gt = verify::random_truth(100 + i, 40, 40);
    io::write_png_rgb8(tmp.path / "gt" / name, encode_rite_label(gt));
    AVGroundTruth p = gt;
    p.arteriole.block(0, 0, 20, 20).swap(p.venule.block(0, 0, 20, 20));
    io::write_png_rgb8(tmp.path / "pred" / name, encode_rite_label(p));
  }
  const std::vector<std::string> args{"metrics", "--pred-dir", (tmp.path / "pred").string(), "--gt-dir",
                                      (tmp.path / "gt").string()};
  std::vector<std::string> serial = args, parallel = args;
  serial.insert(serial.begin(), {"--jobs", "1"});
  parallel.insert(parallel.begin(), {"--jobs", "4"});
  const Run a = run(serial), b = run(parallel);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const json m = json::parse(a.out);
  CHECK(m["results"]["n_images"] == 5);
  CHECK(m["results"]["pooled"]["acc_all"].get<double>() < 100.0);
  CHECK_FALSE(m["params"].contains("jobs"));
}

TEST_CASE("missing files exit with 3") {
  support::TempDir tmp("cli-missing");
  CHECK(run({"skeleton", "--in", (tmp.path / "nope.png").string(), "--out", (tmp.path / "s.png").string()}).code ==
        cli::exit_io);
  CHECK(run({"--config", (tmp.path / "none.toml").string(), "synth", "--out-dir", tmp.path.string()}).code ==
        cli::exit_io);
}

TEST_CASE("config files: sections, unknown fields, invalid values, overrides") {
  support::TempDir tmp("cli-config");
  const std::string out = (tmp.path / "tree").string();

  write_file(tmp.path / "a.toml", "[synthgen]\ndepth = 0\nseed = 3\n");
  Run r = run({"--config", (tmp.path / "a.toml").string(), "synth", "--out-dir", out});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["results"]["n_branches"] == 1);

  r = run({"--config", (tmp.path / "a.toml").string(), "synth", "--out-dir", out, "--depth", "1"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["results"]["n_branches"] == 3);
  CHECK(json::parse(r.out)["params"]["synthgen.seed"] == 3);

  write_file(tmp.path / "b.toml", "[synthgen]\ndepht = 1\n");
  r = run({"--config", (tmp.path / "b.toml").string(), "synth", "--out-dir", out});
  CHECK(r.code == cli::exit_config);
  CHECK(r.err.find("depht") != std::string::npos);

  write_file(tmp.path / "c.toml", "[preprocess]\ndark_patch = 0\n");
  r = run({"--config", (tmp.path / "c.toml").string(), "preprocess", "--in", "x.png", "--out", "y.png"});
  CHECK(r.code == cli::exit_config);
  CHECK(r.err.find("dark_patch") != std::string::npos);

  CHECK(run({"synth", "--out-dir", out, "--widths", "3,0"}).code == cli::exit_config);
}

TEST_CASE("identical runs give byte-identical manifests and artifacts") {
  support::TempDir tmp("cli-determinism");
  const std::string dir = (tmp.path / "t").string();
  const Run a = run({"synth", "--seed", "8", "--depth", "2", "--out-dir", dir});
  const std::string labels = io::read_bytes(fs::path(dir) / "labels.png");
  const Run b = run({"synth", "--seed", "8", "--depth", "2", "--out-dir", dir});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(labels == io::read_bytes(fs::path(dir) / "labels.png"));
  const json m = json::parse(a.out);
  CHECK(m["outputs"].size() == 4);
  for (const auto& [path, hash] : m["outputs"].items()) CHECK(hash.get<std::string>().size() == 64);
}

TEST_CASE("selftest exit status follows the criteria") {
  Run r = run({"selftest", "--only", "9"});
  CHECK(r.code == 0);
  CHECK(r.err.find("PASS") != std::string::npos);
  r = run({"selftest", "--only", "1,8"});
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["results"]["passed"] == 2);
  CHECK(run({"selftest", "--only", "99"}).code == cli::exit_config);
}
