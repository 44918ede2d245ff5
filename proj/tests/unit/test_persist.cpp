#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "clref/harness/persist.hpp"

namespace fs = std::filesystem;
using namespace clref;
using namespace clref::harness;

namespace {

RunRecord sample_record(std::uint64_t seed, bool refresh) {
  RunRecord r;
  r.config.objective = cl::ObjectiveConfig::preset(cl::Method::er, 1.0);
  r.config.refresh.enabled = refresh;
  r.seed = seed;
  r.accuracy = AccuracyMatrix::from_rows({{0.9}, {0.6, 0.8}});
  r.metrics = compute_metrics(r.accuracy);
  r.timings = Timings{1.5, 0.25, 0.125, 2.0, {0.7, 0.8}};
  r.diagnostics = RunDiagnostics{40, 20, 3, 0.123456789012345};
  r.git_describe = "abc123";
  return r;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

class PersistDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("clref_persist_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(PersistDir, RecordRoundTripsExactly) {
  const RunRecord r = sample_record(7, true);
  const fs::path p = persist_results(dir_, r);
  EXPECT_TRUE(fs::exists(p));
  EXPECT_NE(p.filename().string().find("seed7"), std::string::npos);
  EXPECT_EQ(load_run_record(p), r);
}

TEST_F(PersistDir, SummaryGetsOneHeaderAndOneRowPerRun) {
  persist_results(dir_, sample_record(0, false));
  persist_results(dir_, sample_record(1, false));
  persist_results(dir_, sample_record(1, true));
  const auto lines = lines_of(dir_ / kSummaryFile);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], kSummaryHeader);
  EXPECT_EQ(lines[1].rfind("er,", 0), 0u);
  EXPECT_NE(lines[1].find(",0.7,-0.3,"), std::string::npos);
  const auto columns = std::count(lines[0].begin(), lines[0].end(), ',');
  for (const auto& l : lines) EXPECT_EQ(std::count(l.begin(), l.end(), ','), columns);
}

TEST_F(PersistDir, RefreshAndPlainRunsGetDistinctFiles) {
  const fs::path a = persist_results(dir_, sample_record(2, false));
  const fs::path b = persist_results(dir_, sample_record(2, true));
  EXPECT_NE(a, b);
}

TEST(Persist, RecordCarriesTheBuildDescription) {
  EXPECT_FALSE(git_describe().empty());
  RunResult result;
  result.seed = 3;
  result.accuracy = AccuracyMatrix::from_rows({{0.5}});
  const RunRecord r = make_record(RunConfig{}, result);
  EXPECT_EQ(r.seed, 3u);
  EXPECT_DOUBLE_EQ(r.metrics.acc, 0.5);
  EXPECT_EQ(r.git_describe, git_describe());
}
