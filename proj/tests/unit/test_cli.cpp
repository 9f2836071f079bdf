#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "attnseg/volume_io.h"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(ATTNSEG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "attnseg_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST(Cli, ExitCodesFollowErrorKinds) {
  const std::string d = scratch("codes");
  attnseg::write_text(d + "/bad.json", R"({"model": {"levels": "three"}})");
  EXPECT_EQ(run("train --config " + d + "/bad.json --out " + d + "/run"), 2);
  attnseg::write_text(d + "/fake.bin", "not a checkpoint at all, just some bytes");
  EXPECT_EQ(run("infer --checkpoint " + d + "/fake.bin --out " + d + "/pred " + d), 4);
  EXPECT_EQ(run("infer --checkpoint " + d + "/absent.bin --out " + d + "/pred " + d), 5);
  EXPECT_NE(run("no-such-command"), 0);
}

TEST(Cli, PhantomThenTrainThenInfer) {
  const std::string d = scratch("flow");
  attnseg::write_text(d + "/cohort.json",
                      R"({"count": 4, "seed": 3, "min_volume_ml": 0.5, "max_volume_ml": 2.0,
                          "phantom": {"dims": [20, 28, 28], "spacing": [2.0, 2.0, 2.0],
                                      "head_semi_axes": [22.0, 22.0, 15.0]}})");
  ASSERT_EQ(run("phantom --config " + d + "/cohort.json --out " + d + "/data"), 0);
  attnseg::write_text(d + "/exp.json", R"({"model": {"levels": 2, "filters": [2, 4], "input_shape": [16, 16, 16]},
                                           "train": {"max_epochs": 1}, "data": {"folds": 3}})");
  ASSERT_EQ(run("train --config " + d + "/exp.json --dataset " + d + "/data --out " + d + "/run"), 0);
  EXPECT_TRUE(fs::exists(d + "/run/checkpoint.bin"));
  const auto entries = attnseg::read_manifest(d + "/data");
  ASSERT_EQ(entries.size(), 4u);
  ASSERT_EQ(run("infer --checkpoint " + d + "/run/checkpoint.bin --out " + d + "/pred --repeat 2 " + d + "/data/" +
                entries[0].path),
            0);
  EXPECT_TRUE(fs::exists(d + "/pred/timing.json"));
  EXPECT_TRUE(fs::exists(d + "/pred/" + entries[0].id + "/image.raw"));
}
