/*
 * Copyright 2026 The msngo Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "msngo/text.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;  // stdout and stderr
};

Result run(const std::string& args) {
  const std::string cmd = std::string(MSNGO_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / "msngo_cli_test";
    fs::remove_all(root_);
    const auto r = run("fixture -o " + data().string() + " --proteins 30 -s 2");
    ASSERT_EQ(r.code, 0) << r.out;
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path data() const { return root_ / "data"; }
  std::string common(const std::string& work) const {
    return "-c " + (data() / "run.cfg").string() + " --work-dir " + (root_ / work).string() +
           " --set struct_epochs=2 --set prop_epochs=5";
  }

  fs::path root_;
};

TEST_F(Cli, RunPrintsMetricsAndIsReproducible) {
  const auto a = run("run " + common("w1"));
  ASSERT_EQ(a.code, 0) << a.out;
  for (const char* m : {"Fmax\tMFO\t", "Smin\tMFO\t", "AUPR\tMFO\t", "wFmax\tMFO\t", "wAUPR\tMFO\t"})
    EXPECT_NE(a.out.find(m), std::string::npos) << m;
  const auto b = run("run " + common("w2"));
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(msngo::read_file(root_ / "w1" / "MFO" / "full" / "predictions.tsv"),
            msngo::read_file(root_ / "w2" / "MFO" / "full" / "predictions.tsv"));
}

TEST_F(Cli, StagesRunSeparatelyMatchRun) {
  const auto all = run("run --no-struct-model " + common("w1"));
  ASSERT_EQ(all.code, 0) << all.out;
  for (const char* stage : {"contact", "embed", "train-prop", "predict"}) {
    const auto r = run(std::string(stage) + " --no-struct-model " + common("w2"));
    ASSERT_EQ(r.code, 0) << stage << ": " << r.out;
  }
  const auto ev = run("eval --no-struct-model " + common("w2"));
  ASSERT_EQ(ev.code, 0) << ev.out;
  EXPECT_EQ(ev.out, all.out);
}

TEST_F(Cli, ErrorsExitNonZeroWithMessage) {
  auto r = run("run " + common("w") + " --set no_such_key=1");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("error: unknown config key 'no_such_key'"), std::string::npos) << r.out;

  r = run("predict " + common("w"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("not found"), std::string::npos) << r.out;

  r = run("run " + common("w") + " --no-struct --no-struct-model");
  EXPECT_EQ(r.code, 1);

  r = run("run -c " + (root_ / "absent.cfg").string());
  EXPECT_EQ(r.code, 1);

  EXPECT_NE(run("").code, 0);
  EXPECT_NE(run("frobnicate").code, 0);
}

TEST_F(Cli, AllBranchesSkipsEmptyBranches) {
  const auto r = run("run --all-branches --no-struct " + common("w"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("no BPO terms"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Fmax\tMFO"), std::string::npos) << r.out;
}

}  // namespace
