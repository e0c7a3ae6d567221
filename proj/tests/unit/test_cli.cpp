/**
 * Copyright 2026 The maliot Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "maliot/common.hpp"

namespace {

namespace fs = std::filesystem;

const std::string kCli = MALIOT_CLI_PATH;
const fs::path kGolden = MALIOT_GOLDEN_DIR;
const fs::path kData = MALIOT_EXAMPLE_DIR;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("maliot_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

class CliHelp : public ::testing::TestWithParam<std::string> {};

TEST_P(CliHelp, MatchesGoldenText) {
  const std::string sub = GetParam();
  const auto r = run(sub == "maliot" ? "--help" : sub + " --help");
  EXPECT_EQ(r.code, 0);
  std::string golden_name = sub;
  std::replace(golden_name.begin(), golden_name.end(), ' ', '_');
  EXPECT_EQ(r.out, slurp(kGolden / (golden_name + ".txt")));
}

INSTANTIATE_TEST_SUITE_P(Subcommands, CliHelp,
                         ::testing::Values("maliot", "gen", "train", "broker", "serve", "replay", "bench",
                                           "bench inference", "bench accuracy", "bench scalability", "retrain"),
                         [](const auto& info) {
                           std::string name = info.param;
                           std::replace(name.begin(), name.end(), ' ', '_');
                           return name;
                         });

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("train --model dt").code, 2);
  EXPECT_EQ(run("gen").code, 2);
  EXPECT_EQ(run("gen --out " + path("a.csv") + " --to-broker 127.0.0.1:1").code, 2);
  EXPECT_EQ(run("--log-level loud gen --out " + path("a.csv")).code, 2);
  EXPECT_EQ(run("train --model xgboost --data x --out y").code, 2);
  EXPECT_EQ(run("gen --devices 0 --out " + path("a.csv")).code, 2);
  EXPECT_EQ(run("replay --broker nowhere --data x").code, 2);
}

TEST_F(Cli, MissingInputExitsFour) {
  EXPECT_EQ(run("train --model dt --data " + path("absent.csv") + " --out " + path("m.json")).code, 4);
}

TEST_F(Cli, UnreadableFormatExitsThree) {
  std::ofstream(path("junk.txt")) << "hello world\n";
  EXPECT_EQ(run("train --model dt --data " + path("junk.txt") + " --out " + path("m.json")).code, 3);
}

TEST_F(Cli, CorruptModelExitsThree) {
  std::ofstream(path("m.json")) << "{\"format_version\":1";
  EXPECT_EQ(run("retrain --persist-dir " + path("p") + " --model dt --out " + path("o.json") + " --current " +
                path("m.json"))
                .code,
            3);
}

TEST_F(Cli, UnreachableBrokerExitsFive) {
  ASSERT_EQ(run("--log-level error gen --devices 3 --duration 20 --out " + path("flows.csv")).code, 0);
  ASSERT_EQ(run("--log-level error train --model dt --data " + path("flows.csv") + " --out " + path("m.json")).code,
            0);
  EXPECT_EQ(run("serve --broker 127.0.0.1:1 --model " + path("m.json") + " --max-idle-ms 100").code, 5);
}

TEST_F(Cli, GenThenTrainOnMixedSources) {
  ASSERT_EQ(run("--seed 4 gen --devices 9 --duration 40 --out " + path("flows.csv")).code, 0);
  const auto r = run("train --model decision_tree --features deid --data " + path("flows.csv") + " " +
                     (kData / "iot23_sample.conn.log").string() + " " + (kData / "ton_sample.csv").string() +
                     " --out " + path("dt.json") + " --version 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("model=decision_tree features=de_identified"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("accuracy="), std::string::npos);
  EXPECT_TRUE(fs::exists(path("dt.codec.json")));
  EXPECT_NE(slurp(path("dt.json")).find("\"version\":3"), std::string::npos);
}

TEST_F(Cli, ConfigFileSuppliesOptions) {
  std::ofstream(path("gen.ini")) << "[gen]\ndevices=2\nduration=5\nrate=2\nout=" << path("cfg.csv") << "\n";
  ASSERT_EQ(run("--config " + path("gen.ini") + " gen").code, 0);
  std::ifstream in(path("cfg.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 1 + 2 * 10);
}

TEST_F(Cli, GenIsDeterministicPerSeed) {
  ASSERT_EQ(run("--seed 7 gen --devices 3 --duration 10 --out " + path("a.csv")).code, 0);
  ASSERT_EQ(run("--seed 7 gen --devices 3 --duration 10 --out " + path("b.csv")).code, 0);
  ASSERT_EQ(run("--seed 8 gen --devices 3 --duration 10 --out " + path("c.csv")).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

}  // namespace
