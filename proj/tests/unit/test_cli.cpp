#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "fixtures.hpp"
#include "json.hpp"
#include "mlbalance/cli.hpp"
#include "mlbalance/dataset.hpp"
#include "oracles.hpp"

using namespace mlbalance;
using nlohmann::json;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_fixture(const std::string& dir, const std::string& name,
                          const MultiLabelDataset& ds) {
  const std::string path = dir + "/" + name;
  write_text_file(path, write_dataset(ds, DatasetFormat::kCsv));
  return path;
}

std::vector<std::string> quick_train(const std::string& input, const std::string& out) {
  return {"train", "--input", input, "--label-count", "6", "--out", out, "--epochs", "3",
          "--hidden-units", "32", "--seed", "5"};
}

}  // namespace

TEST_CASE("missing input file exits 2 naming the path") {
  const Run r = cli({"stats", "--input", "/nonexistent/data.csv", "--label-count", "1"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("/nonexistent/data.csv") != std::string::npos);
}

TEST_CASE("stats on a tiny csv matches a column recount") {
  const std::string dir = fixtures::temp_dir("cli_stats");
  const std::string path = dir + "/tiny.csv";
  write_text_file(path, "f1,A,B,C\n0.1,1,0,0\n0.2,1,1,0\n0.3,1,0,0\n0.4,0,1,1\n");
  const Run r = cli({"stats", "--input", path, "--label-count", "3"});
  REQUIRE(r.code == kExitOk);
  const json j = json::parse(r.out);
  const auto ds = parse_dense_csv(read_text_file(path), 3);
  const auto ref = oracle::profile(ds.labels());
  CHECK(j["n"] == 4);
  CHECK(j["q"] == 3);
  CHECK(j["mean_ir"].get<double>() == doctest::Approx(ref.mean_ir).epsilon(1e-12));
  CHECK(j["cvir"].get<double>() == doctest::Approx(ref.cvir).epsilon(1e-12));
  CHECK(j["card"].get<double>() == doctest::Approx(ref.card).epsilon(1e-12));
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(j["per_label"][l]["n1"] == ref.n1[l]);
    CHECK(j["per_label"][l]["irlbl"].get<double>() == ref.irlbl[l]);
  }
}

TEST_CASE("balanced data has nothing to sample") {
  const std::string dir = fixtures::temp_dir("cli_balanced");
  const std::string path = dir + "/balanced.csv";
  write_text_file(path, "f1,A,B\n0.1,1,0\n0.2,0,1\n0.3,1,0\n0.4,0,1\n");
  const Run r = cli({"sample", "--input", path, "--label-count", "2", "--sampler", "mlros",
                     "--out", dir + "/out"});
  CHECK(r.code == kExitNothingToSample);
  CHECK(r.err.find("minority") != std::string::npos);
}

TEST_CASE("train is reproducible from its resolved config") {
  const std::string dir = fixtures::temp_dir("cli_train");
  const std::string input = write_fixture(dir, "data.csv", fixtures::imbalanced_dataset());
  REQUIRE(cli(quick_train(input, dir + "/a")).code == kExitOk);
  REQUIRE(cli(quick_train(input, dir + "/b")).code == kExitOk);
  const std::string model = read_text_file(dir + "/a/model.json");
  CHECK(model == read_text_file(dir + "/b/model.json"));

  const std::string log = read_text_file(dir + "/a/loss_log.csv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 4);

  REQUIRE(cli({"train", "--config", dir + "/a/resolved_config.json", "--out", dir + "/c"}).code ==
          kExitOk);
  CHECK(read_text_file(dir + "/c/model.json") == model);
}

TEST_CASE("sample with a trained model and with mlros") {
  const std::string dir = fixtures::temp_dir("cli_sample");
  const auto ds = fixtures::imbalanced_dataset();
  const std::string input = write_fixture(dir, "data.csv", ds);
  REQUIRE(cli(quick_train(input, dir + "/m")).code == kExitOk);

  const Run r = cli({"sample", "--input", input, "--label-count", "6", "--model",
                     dir + "/m/model.json", "--p", "0.1", "--out", dir + "/s"});
  REQUIRE(r.code == kExitOk);
  const json prov = json::parse(read_text_file(dir + "/s/provenance.json"));
  CHECK(prov["accepted"] == 50);
  CHECK(prov["num"] == 50);
  const auto augmented = parse_dense_csv(read_text_file(dir + "/s/augmented.csv"), 6);
  CHECK(augmented.num_instances() == 550);

  REQUIRE(cli({"sample", "--input", input, "--label-count", "6", "--sampler", "mlros", "--p",
               "0.1", "--out", dir + "/r"})
              .code == kExitOk);
  const auto copied = parse_dense_csv(read_text_file(dir + "/r/augmented.csv"), 6);
  CHECK(copied.num_instances() == 550);
  for (Index i = 500; i < 550; ++i) {
    bool found = false;
    for (Index k = 0; k < 500 && !found; ++k) {
      found = copied.features().row(i) == ds.features().row(k) &&
              copied.labels().row(i) == ds.labels().row(k);
    }
    CHECK(found);
  }
}

TEST_CASE("pipeline with no sampler reports identical results") {
  const std::string dir = fixtures::temp_dir("cli_pipeline");
  const std::string input = write_fixture(dir, "data.csv", fixtures::imbalanced_dataset());
  const Run r = cli({"pipeline", "--input", input, "--label-count", "6", "--sampler", "none",
                     "--test-frac", "0.3", "--seed", "2", "--epochs-br", "200"});
  REQUIRE(r.code == kExitOk);
  const json report = json::parse(r.out);
  CHECK(report["baseline"] == report["augmented"]);
  for (const char* metric : {"macro_f", "macro_auc", "ranking_loss"}) {
    CHECK(report["delta"][metric] == 0.0);
  }
  CHECK(report["leakage_audit"]["passed"] == true);

  CHECK(cli({"pipeline", "--input", input, "--label-count", "6", "--sampler", "none"}).code ==
        kExitInput);
}

TEST_CASE("seed precedence") {
  const std::string dir = fixtures::temp_dir("cli_seed");
  const std::string input = write_fixture(dir, "data.csv", fixtures::imbalanced_dataset());
  write_text_file(dir + "/cfg.json", R"({"seed": 11, "sampler": "mlros", "p": 0.1})");
  REQUIRE(cli({"sample", "--config", dir + "/cfg.json", "--input", input, "--label-count", "6",
               "--out", dir + "/from_file"})
              .code == kExitOk);
  CHECK(json::parse(read_text_file(dir + "/from_file/provenance.json"))["seed"] == 11);
  REQUIRE(cli({"sample", "--config", dir + "/cfg.json", "--input", input, "--label-count", "6",
               "--seed", "12", "--out", dir + "/from_flag"})
              .code == kExitOk);
  CHECK(json::parse(read_text_file(dir + "/from_flag/provenance.json"))["seed"] == 12);
}
