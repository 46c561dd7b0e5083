#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <unistd.h>

#include "subband/config.hpp"
#include "subband/error.hpp"
#include "subband/pipeline.hpp"

using namespace subband;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("subband_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Relative path -> content for every regular file under dir.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

// The run record names the output directory, so only the dataset is compared.
std::map<std::string, std::string> dataset(const fs::path& dir) {
  auto t = tree(dir);
  t.erase("resolved_config.yaml");
  t.erase("provenance.txt");
  return t;
}

RunConfig small(const fs::path& out) {
  RunConfig c = RunConfig::desk();
  c.seed = 7;
  c.output_dir = out;
  c.workers = 1;
  c.trainer.dataset_size = 10;
  c.trainer.max_epochs = 3;
  c.trainer.batch_size = 4;
  c.model.n_layers = 2;
  c.model.embedding_dim = 8;
  c.eval.n_snapshots = 4;
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInternal;
}

}  // namespace

TEST_CASE("content hash matches git blob ids") {
  CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("gen-data is reproducible") {
  TempDir a("gen_a"), b("gen_b");
  cmd_gen_data(small(a.path / "d"));
  cmd_gen_data(small(b.path / "d"));
  const auto ta = dataset(a.path / "d");
  CHECK(ta == dataset(b.path / "d"));
  CHECK(ta.count("manifest.csv") == 1);
  CHECK(ta.size() == 11);
  CHECK(fs::exists(a.path / "d" / "provenance.txt"));
  CHECK(fs::exists(a.path / "d" / "resolved_config.yaml"));

  RunConfig other = small(b.path / "e");
  other.seed = 8;
  cmd_gen_data(other);
  CHECK(slurp(a.path / "d" / "manifest.csv") != slurp(b.path / "e" / "manifest.csv"));

  RunConfig w = small(b.path / "w");
  w.workers = 3;
  cmd_gen_data(w);
  CHECK(dataset(b.path / "w") == ta);
}

TEST_CASE("gen-data rejects an empty dataset") {
  TempDir t("gen0");
  CHECK(code_of([&] { cmd_gen_data(parse_run_config("trainer: {dataset_size: 0}")); }) ==
        ErrorCode::kConfig);
}

TEST_CASE("train is reproducible and needs a dataset") {
  TempDir t("train");
  RunConfig g = small(t.path / "data");
  cmd_gen_data(g);

  RunConfig c = small(t.path / "m1");
  c.dataset_dir = t.path / "data";
  cmd_train(c);
  c.output_dir = t.path / "m2";
  cmd_train(c);
  CHECK(slurp(t.path / "m1" / "model.bin") == slurp(t.path / "m2" / "model.bin"));
  CHECK(slurp(t.path / "m1" / "loss_history.csv") == slurp(t.path / "m2" / "loss_history.csv"));
  CHECK(fs::exists(t.path / "m1" / "provenance.txt"));
  // provenance covers the dataset files
  CHECK(slurp(t.path / "m1" / "provenance.txt").find("manifest.csv") != std::string::npos);

  RunConfig missing = small(t.path / "m3");
  missing.dataset_dir = t.path / "nope";
  CHECK(code_of([&] { cmd_train(missing); }) == ErrorCode::kIo);
  missing.dataset_dir.clear();
  CHECK(code_of([&] { cmd_train(missing); }) == ErrorCode::kConfig);

  SUBCASE("eval with a trained model") {
    RunConfig e = small(t.path / "ev");
    e.model_path = t.path / "m1" / "model.bin";
    cmd_eval(e);
    const auto files = tree(t.path / "ev");
    for (const char* name : {"ra", "cgc", "sisa", "ggnn"}) {
      CHECK(files.count(std::string("cdf_sum_se_") + name + ".csv") == 1);
      CHECK(files.count(std::string("cdf_device_se_") + name + ".csv") == 1);
    }
    CHECK(files.count("summary.csv") == 1);
    CHECK(files.count("provenance.txt") == 1);
    CHECK(files.count("resolved_config.yaml") == 1);
  }
}

TEST_CASE("eval without a model") {
  TempDir t("eval");
  RunConfig e = small(t.path / "ev");
  e.eval.n_snapshots = 1;
  e.eval.allocators = {"ra"};
  cmd_eval(e);
  std::istringstream summary(slurp(t.path / "ev" / "summary.csv"));
  int lines = 0;
  for (std::string line; std::getline(summary, line);) ++lines;
  CHECK(lines == 2);  // header and one allocator

  RunConfig g = small(t.path / "ev2");
  g.eval.allocators = {"ra", "ggnn"};
  g.model_path = t.path / "no_model.bin";
  CHECK(code_of([&] { cmd_eval(g); }) == ErrorCode::kIo);

  g.eval.allocators = {"magic"};
  CHECK(code_of([&] { cmd_eval(g); }) == ErrorCode::kConfig);
}

TEST_CASE("resolved config reloads to the same config") {
  TempDir t("resolved");
  cmd_gen_data(small(t.path / "d"));
  const std::string yaml = slurp(t.path / "d" / "resolved_config.yaml");
  CHECK(to_yaml(parse_run_config(yaml)) == yaml);
}
