#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include "hypervd/data_io.hpp"
#include "support.hpp"

#ifndef HYPERVD_CLI
#error "HYPERVD_CLI must point at the command-line binary"
#endif

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + HYPERVD_CLI + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

}  // namespace

TEST_CASE("help documents every subcommand and flag") {
  const auto top = run("--help");
  CHECK(top.code == 0);
  for (const char* sub : {"gen-synth", "train", "score", "eval", "ablate", "gradcheck", "params"}) {
    CHECK(top.out.find(sub) != std::string::npos);
  }
  const auto gen = run("gen-synth --help");
  for (const char* flag : {"--out", "--seed", "--train", "--test", "--t-min", "--t-max", "--visual-dim", "--audio-dim",
                           "--separation", "--write-config"}) {
    CHECK(gen.out.find(flag) != std::string::npos);
  }
  CHECK(run("eval --help").out.find("--curves") != std::string::npos);
}

TEST_CASE("gradcheck on the default toy config") {
  const auto r = run("gradcheck");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("PASS, max rel err ", 0) == 0);
}

TEST_CASE("parameter count at full scale") {
  const auto r = run("params");
  CHECK(r.code == 0);
  CHECK(r.out == "parameters: 609807\n");
}

TEST_CASE("end-to-end pipeline") {
  const auto dir = testing::temp_dir("cli");
  const std::string d = dir.string();
  REQUIRE(run("gen-synth --out " + d + " --train 8 --test 4 --t-min 6 --t-max 10 --write-config").code == 0);
  {
    std::ifstream in(dir / "run.ini");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    const auto pos = text.find("epochs = 50");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 11, "epochs = 3");
    std::ofstream(dir / "run.ini") << text;
  }
  const auto tr = run("train --config " + d + "/run.ini");
  CHECK(tr.code == 0);
  CHECK(std::filesystem::exists(dir / "hypervd.ckpt"));
  CHECK(std::filesystem::exists(dir / "history.csv"));
  CHECK(run("score --checkpoint " + d + "/hypervd.ckpt --manifest " + d + "/test.manifest --out " + d + "/scores").code == 0);
  const auto ev = run("eval --scores " + d + "/scores --manifest " + d + "/test.manifest --curves " + d + "/curves");
  CHECK(ev.code == 0);
  CHECK(ev.out.rfind("ap: ", 0) == 0);
  CHECK(std::filesystem::exists(dir / "curves" / "test_0001.csv"));

  // Perfect scores: the frame labels themselves.
  std::filesystem::create_directories(dir / "perfect");
  for (const auto& e : hypervd::io::read_manifest(dir / "test.manifest")) {
    std::ofstream out(dir / "perfect" / (e.id + ".scores"));
    for (int y : hypervd::io::read_frame_labels(*e.frame_labels)) out << y << '\n';
  }
  const auto perfect = run("eval --scores " + d + "/perfect --manifest " + d + "/test.manifest");
  CHECK(perfect.out.rfind("ap: 1.000000\n", 0) == 0);

  const auto ab = run("ablate --config " + d + "/run.ini --axis branch");
  CHECK(ab.code == 0);
  CHECK(std::count(ab.out.begin(), ab.out.end(), '\n') == 4);
  CHECK(ab.out.find("hfsg_only") != std::string::npos);
  CHECK(ab.out.find("htrg_only") != std::string::npos);
  CHECK(ab.out.find("both") != std::string::npos);
}

TEST_CASE("exit codes") {
  const auto dir = testing::temp_dir("cli_codes");
  const std::string d = dir.string();
  std::ofstream(dir / "bad.ini") << "[model]\nhiden = 3\n";
  CHECK(run("train --config " + d + "/bad.ini").code == 2);
  CHECK(run("train --config " + d + "/missing.ini").code == 2);
  std::ofstream(dir / "nodata.ini") << "[data]\ntrain_manifest = nope.manifest\n";
  CHECK(run("train --config " + d + "/nodata.ini").code == 3);
  std::ofstream(dir / "junk.ckpt") << "junk";
  CHECK(run("score --checkpoint " + d + "/junk.ckpt --manifest x --out " + d).code == 3);
  std::ofstream(dir / "seed.ini") << "[train]\nseed = 1\n";
  CHECK(run("gradcheck --config " + d + "/seed.ini --videos 1", "HYPERVD_SEED=abc").code == 2);
  CHECK(run("ablate --config " + d + "/seed.ini --axis colour").code != 0);
}
