#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "m4sc/binary_io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status = -1;
  std::string out, err;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "m4sc_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run(const std::string& args) {
  const fs::path d = work_dir();
  const std::string cmd = "cd '" + d.string() + "' && M4SC_OUTPUT_ROOT='" + d.string() + "' '" +
                          M4SC_CLI + "' " + args + " > out.txt 2> err.txt";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = m4sc::read_file_text((d / "out.txt").string());
  r.err = m4sc::read_file_text((d / "err.txt").string());
  return r;
}

std::size_t lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

void expect_config_error(const std::string& args) {
  const auto r = run(args);
  EXPECT_EQ(r.status, 2) << args;
  EXPECT_EQ(lines(r.err), 1u) << r.err;
  EXPECT_EQ(r.err.rfind("m4sc: configuration error: ", 0), 0u) << r.err;
}

}  // namespace

TEST(Cli, InvalidConfigurationFailsWithOneLine) {
  expect_config_error("simulate --untrained --set users=0");
  expect_config_error("simulate --untrained --overlap 1.5");
  expect_config_error("simulate --untrained --set system.depth=3");
  expect_config_error("simulate --untrained --set noequals");
  expect_config_error("sweep --param users --untrained --points 0");
  expect_config_error("simulate");
  expect_config_error("simulate --checkpoint missing.bin");
  m4sc::write_file_text((work_dir() / "bad.json").string(), "{\"users\": ");
  expect_config_error("simulate --untrained --config bad.json");
}

TEST(Cli, BadArgumentsAreRejected) {
  EXPECT_NE(run("sweep --param colour --untrained").status, 0);
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("train --phase warmup").status, 0);
}

TEST(Cli, SimulateWritesInspectableFrame) {
  const auto r = run("simulate --untrained --seeds 3 --users 3 --out sim");
  ASSERT_EQ(r.status, 0) << r.err;
  const fs::path dir = work_dir() / "sim";
  for (const char* f : {"simulate.csv", "simulate.jsonl", "simulate.manifest.json", "frame.m4sc"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto ok = run("inspect-frame sim/frame.m4sc");
  EXPECT_EQ(ok.status, 0) << ok.err;
  EXPECT_NE(ok.out.find("3"), std::string::npos);

  auto bytes = m4sc::read_file_bytes((dir / "frame.m4sc").string());
  bytes[bytes.size() / 2] ^= 0x5A;
  m4sc::write_file_bytes((dir / "bad.m4sc").string(), bytes);
  const auto bad = run("inspect-frame sim/bad.m4sc");
  EXPECT_EQ(bad.status, 1);
  EXPECT_EQ(lines(bad.err), 1u) << bad.err;
  EXPECT_EQ(bad.err.rfind("m4sc: error: ", 0), 0u) << bad.err;

  const auto missing = run("inspect-frame sim/none.m4sc");
  EXPECT_EQ(missing.status, 1);
  EXPECT_EQ(lines(missing.err), 1u) << missing.err;
}

TEST(Cli, UnwritableOutputIsAnError) {
  m4sc::write_file_text((work_dir() / "blocker").string(), "x");
  const auto r = run("simulate --untrained --seeds 0 --out blocker/sub");
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(lines(r.err), 1u) << r.err;
}
