#include <gtest/gtest.h>

#include <filesystem>

#include "fockrb/config.hpp"

using namespace fockrb;

namespace {

std::string diagnostic(const std::string& text) {
  try {
    parse_config_string(text, "t.ini");
  } catch (const config_error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Thresholds, PilotFileMatchesDefaults) {
  const Thresholds th = load_thresholds(FOCKRB_PILOT_FILE);
  EXPECT_TRUE(th == Thresholds{});
}

TEST(Thresholds, UnknownKeyRejected) {
  std::istringstream in("[thresholds]\ngrowth_bound = 3\nmystery = 1\n");
  EXPECT_THROW(parse_thresholds(in, "x"), config_error);
  std::istringstream neg("[thresholds]\ngrowth_bound = -1\n");
  EXPECT_THROW(parse_thresholds(neg, "x"), config_error);
}

TEST(Config, MinimalAndDefaults) {
  const auto c = parse_config_string("[weight]\nkind = logpower\nparam = 2\n");
  EXPECT_EQ(c.weight().descriptor(), "logpower:2");
  EXPECT_EQ(c.n_max, 300u);
  EXPECT_EQ(c.nodes.generator, "partB");
  EXPECT_TRUE(c.thresholds == Thresholds{});
}

TEST(Config, MissingParamNamesTheField) {
  EXPECT_EQ(diagnostic("[weight]\nkind = logpower\n"), "[weight] param: missing required field");
  EXPECT_NE(diagnostic("[table]\nn_max = 10\n").find("[weight] kind"), std::string::npos);
}

TEST(Config, UnknownKeysAndSections) {
  EXPECT_EQ(diagnostic("[weight]\nkind = power\nparam = 2\nbeta = 3\n"), "[weight] beta: unknown key");
  EXPECT_NE(diagnostic("[weight]\nkind = power\nparam = 2\n[extra]\na = 1\n").find("unknown section"),
            std::string::npos);
}

TEST(Config, ValueDiagnostics) {
  const std::string w = "[weight]\nkind = logpower\nparam = 2\n";
  EXPECT_NE(diagnostic(w + "[grid]\nangles = 100\n").find("[grid] angles"), std::string::npos);
  EXPECT_NE(diagnostic(w + "[table]\nn_max = ten\n").find("expected a number"), std::string::npos);
  EXPECT_NE(diagnostic(w + "[gram]\nn_list = 16, 8\n").find("[gram] n_list"), std::string::npos);
  EXPECT_NE(diagnostic(w + "[nodes]\ntheta = random\n").find("[nodes] theta"), std::string::npos);
  EXPECT_NE(diagnostic("[weight]\nkind = logpower\nparam = 0.5\n").find("[weight] param"),
            std::string::npos);
  EXPECT_NE(diagnostic(w + "[table]\nn_max = 40\n[growth]\ndelta = 1\n").find("n_max >= 50"),
            std::string::npos);
}

TEST(Config, DuplicateKeyReportsLine) {
  const auto d = diagnostic("[weight]\nkind = power\nparam = 2\nparam = 3\n");
  EXPECT_NE(d.find("t.ini:4"), std::string::npos) << d;
}

TEST(Config, GramList) {
  const auto c = parse_config_string(
      "[weight]\nkind = logpower\nparam = 2\n[gram]\nn_list = 4, 8,16\nexpect = stable\n");
  EXPECT_EQ(c.n_list, (std::vector<std::size_t>{4, 8, 16}));
}

TEST(Config, ExampleConfigsParse) {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(FOCKRB_EXAMPLES_DIR)) {
    if (e.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 10u);
}
