#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "life/dataset_io.hpp"
#include "life/synthetic.hpp"
#include "life/train.hpp"

using namespace life;

namespace {

std::filesystem::path scratch_file(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::current_path() / "io_scratch";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Dataset labeled_dataset(std::uint64_t seed, std::size_t N = 6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset ds;
  ds.task.kind = Task::Kind::classification;
  ds.task.num_classes = 2;
  for (std::size_t n = 0; n < N; ++n) {
    const std::size_t T = 3 + n % 3;
    Matrix values(T, 2, 0.0), mask(T, 2, 1.0);
    std::vector<double> ts(T);
    for (std::size_t t = 0; t < T; ++t) {
      ts[t] = 0.5 * static_cast<double>(t) + 0.25;
      for (std::size_t d = 0; d < 2; ++d) {
        if (unif(rng) < 0.25) {
          mask(t, d) = 0.0;
          values(t, d) = kMissing;
        } else {
          values(t, d) = gauss(rng);
        }
      }
    }
    TimeSeriesSample s = make_sample("case-" + std::to_string(n), ts, values, mask);
    s.has_label = true;
    s.label = static_cast<double>(n % 2);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace

TEST_CASE("jsonl: write/read round trip is lossless", "[io]") {
  const Dataset original = labeled_dataset(71);
  const auto path = scratch_file("roundtrip.jsonl");
  write_dataset_jsonl(path.string(), original);
  const Dataset loaded = read_dataset_jsonl(path.string());
  REQUIRE(loaded.size() == original.size());
  for (std::size_t n = 0; n < original.size(); ++n) {
    const auto& a = original.samples[n];
    const auto& b = loaded.samples[n];
    CHECK(a.id == b.id);
    CHECK(a.timestamps == b.timestamps);
    CHECK(a.mask == b.mask);
    CHECK(a.intervals == b.intervals);
    CHECK(a.has_label == b.has_label);
    CHECK(a.label == b.label);
    for (std::size_t t = 0; t < a.length(); ++t)
      for (std::size_t d = 0; d < a.dims(); ++d)
        if (a.mask(t, d) == 1.0)
          CHECK(a.values(t, d) == b.values(t, d));
        else
          CHECK(std::isnan(b.values(t, d)));
    // Serialized form is a fixed point, so a second trip changes nothing.
    CHECK(sample_to_jsonl(a) == sample_to_jsonl(b));
  }
}

TEST_CASE("jsonl: label and id are optional", "[io]") {
  const std::string line = R"({"timestamps":[0,1],"values":[[1.0],[null]],"mask":[[1],[0]]})";
  const TimeSeriesSample s = sample_from_json(nlohmann::json::parse(line), 3);
  CHECK(s.id == "sample-3");
  CHECK_FALSE(s.has_label);
  CHECK(s.mask(1, 0) == 0.0);
  CHECK(std::isnan(s.values(1, 0)));
}

TEST_CASE("jsonl: malformed rows name their line", "[io]") {
  const auto path = scratch_file("bad.jsonl");
  {
    std::ofstream out(path);
    out << R"({"timestamps":[0],"values":[[1.0]],"mask":[[1]]})" << "\n";
    out << "{not json}\n";
  }
  try {
    read_dataset_jsonl(path.string());
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("jsonl: observed null cell rejected", "[io]") {
  const std::string line = R"({"timestamps":[0],"values":[[null]],"mask":[[1]]})";
  CHECK_THROWS_AS(sample_from_json(nlohmann::json::parse(line), 1), InputError);
}

TEST_CASE("jsonl: ragged rows and bad mask values rejected", "[io]") {
  const std::string ragged = R"({"timestamps":[0,1],"values":[[1,2],[3]],"mask":[[1,1],[1,1]]})";
  CHECK_THROWS_AS(sample_from_json(nlohmann::json::parse(ragged), 1), InputError);
  const std::string badmask = R"({"timestamps":[0],"values":[[1]],"mask":[[2]]})";
  CHECK_THROWS_AS(sample_from_json(nlohmann::json::parse(badmask), 1), InputError);
}

TEST_CASE("csv: empty input produces an empty dataset", "[io]") {
  std::istringstream in("");
  const Dataset ds = dataset_from_csv_long(in);
  CHECK(ds.size() == 0);
}

TEST_CASE("csv: header row is tolerated", "[io]") {
  std::istringstream in(
      "sample_id,t,dim,value\n"
      "a,0,0,1.5\n"
      "a,1,0,2.5\n");
  const Dataset ds = dataset_from_csv_long(in);
  REQUIRE(ds.size() == 1);
  CHECK(ds.samples[0].values(0, 0) == 1.5);
  CHECK(ds.samples[0].values(1, 0) == 2.5);
}

TEST_CASE("csv: absent cells stay missing and dims are zero-based", "[io]") {
  std::istringstream in(
      "a,0,0,1.0\n"
      "a,1,2,5.0\n");
  const Dataset ds = dataset_from_csv_long(in);
  REQUIRE(ds.size() == 1);
  const auto& s = ds.samples[0];
  REQUIRE(s.dims() == 3);  // largest index 2 -> three dimensions
  CHECK(s.mask(0, 0) == 1.0);
  CHECK(s.mask(0, 1) == 0.0);
  CHECK(s.mask(0, 2) == 0.0);
  CHECK(s.mask(1, 2) == 1.0);
  CHECK(std::isnan(s.values(1, 0)));
}

TEST_CASE("csv: bucketing averages co-bucket observations", "[io]") {
  std::istringstream in(
      "a,0.1,0,1.0\n"
      "a,0.4,0,3.0\n"
      "a,0.6,0,10.0\n");
  const Dataset ds = dataset_from_csv_long(in, 0.5);
  REQUIRE(ds.size() == 1);
  const auto& s = ds.samples[0];
  REQUIRE(s.length() == 2);
  CHECK(s.timestamps[0] == 0.0);  // left bucket edge
  CHECK(s.timestamps[1] == 0.5);
  CHECK(s.values(0, 0) == 2.0);   // mean of 1 and 3
  CHECK(s.values(1, 0) == 10.0);
}

TEST_CASE("csv: malformed rows name their line", "[io]") {
  std::istringstream in(
      "a,0,0,1.0\n"
      "a,1,0,2.0\n"
      "a,zzz,0,3.0\n");
  try {
    dataset_from_csv_long(in);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream missing_field("a,0,0\n");
  CHECK_THROWS_AS(dataset_from_csv_long(missing_field), InputError);
}

TEST_CASE("correlation csv: round trip preserves every bit", "[io]") {
  const CorrelationMatrix original = rand_correlation(4, 83);
  const auto path = scratch_file("corr.csv");
  write_correlation_csv(path.string(), original);
  const CorrelationMatrix loaded = read_correlation_csv(path.string());
  CHECK(loaded.entries == original.entries);
}

TEST_CASE("correlation csv: invariant violations rejected", "[io]") {
  CHECK_THROWS_AS(correlation_from_csv_text("1,0.5\n0.4,1\n"), InputError);   // asymmetric
  CHECK_THROWS_AS(correlation_from_csv_text("0.9,0.5\n0.5,1\n"), InputError); // diagonal != 1
  CHECK_THROWS_AS(correlation_from_csv_text("1,1.5\n1.5,1\n"), InputError);   // out of range
  CHECK_THROWS_AS(correlation_from_csv_text("1,0.5\n"), InputError);          // not square
}

TEST_CASE("checkpoint: restored model reproduces the forward pass", "[io]") {
  Dataset ds = labeled_dataset(89, 8);
  TrainConfig cfg;
  cfg.k = 2;
  cfg.F = 2;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.source = CorrelationSource::pearson;
  cfg.task = ds.task;
  cfg.seed = 5;
  const TrainResult result = train(ds, cfg);

  const auto path = scratch_file("model.ckpt.json");
  write_checkpoint(path.string(), result.model, result.correlation, result.norm);
  const Checkpoint ck = read_checkpoint(path.string());

  CHECK(ck.model.D == result.model.D);
  CHECK(ck.model.k == result.model.k);
  CHECK(ck.correlation.entries == result.correlation.entries);
  CHECK(ck.norm.mean == result.norm.mean);

  const ExpandedCorrelation ca = expand_correlation(result.correlation, cfg.k);
  const ExpandedCorrelation cb = expand_correlation(ck.correlation, ck.model.k);
  const Dataset normalized = apply_normalization(labeled_dataset(97, 3), result.norm);
  for (const auto& s : normalized.samples) {
    const ForwardTrace ta = forward(result.model, ca, s);
    const ForwardTrace tb = forward(ck.model, cb, s);
    CHECK(ta.pred.probabilities == tb.pred.probabilities);
    CHECK(ta.xhat == tb.xhat);
    CHECK(ta.loss.total == tb.loss.total);
  }
}

TEST_CASE("checkpoint: version and correlation are validated", "[io]") {
  nlohmann::json j;
  j["format_version"] = 2;
  CHECK_THROWS_AS(checkpoint_from_json(j), InputError);
}

TEST_CASE("log: csv header and layout", "[io]") {
  std::vector<LogRow> rows(1);
  rows[0].epoch = 3;
  rows[0].split = "train";
  rows[0].loss = 1.5;
  rows[0].pred = 1.0;
  rows[0].imp = 0.5;
  rows[0].metric = 0.75;
  const std::string csv = training_log_csv(rows);
  std::istringstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "epoch,split,loss,L_pred,L_imp,metric");
  CHECK(row == "3,train,1.5,1,0.5,0.75");
}

TEST_CASE("synthetic: presets and label plant", "[io]") {
  const SyntheticConfig cfg = synthetic_preset("stability");
  REQUIRE(cfg.missing_rates.size() == kSyntheticDims);
  const Dataset ds = make_planted_dataset(cfg);
  CHECK(ds.size() == cfg.N);
  std::size_t ones = 0;
  for (const auto& s : ds.samples) {
    REQUIRE(s.has_label);
    CHECK((s.label == 0.0 || s.label == 1.0));
    CHECK(s.dims() == kSyntheticDims);
    if (s.label == 1.0) ++ones;
  }
  CHECK(ones > 0);
  CHECK(ones < ds.size());
  CHECK_THROWS_AS(synthetic_preset("nope"), InputError);
  // Same seed, same data.
  const Dataset again = make_planted_dataset(cfg);
  CHECK(again.samples[0].mask == ds.samples[0].mask);
  CHECK(again.samples[0].label == ds.samples[0].label);
}
