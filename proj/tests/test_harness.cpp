#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "pspin/config.hpp"
#include "pspin/io.hpp"
#include "pspin/version.hpp"

using namespace pspin;

TEST_CASE("config: presets, file text, overrides, precedence") {
  const ExperimentConfig base = preset_config("planted");
  CHECK(base.N == 80);
  CHECK(base.K == 40);
  CHECK(base.eps == 0.005);
  CHECK_THROWS_AS(preset_config("nope"), ConfigError);

  const std::string text = R"(
# comment line
N = 44
eps = 0.02        # trailing comment
mode = "spinglass"
seed = 12345
)";
  const ExperimentConfig cfg = parse_config_text(text, base);
  CHECK(cfg.N == 44);
  CHECK(cfg.eps == 0.02);
  CHECK(cfg.mode == "spinglass");
  CHECK(cfg.seed == 12345);
  CHECK(cfg.K == 40);  // untouched fields keep preset values

  ExperimentConfig flagged = cfg;
  apply_override(flagged, "gamma", "0.7");
  CHECK(flagged.gamma == 0.7);
  CHECK_THROWS_AS(apply_override(flagged, "bogus_key", "1"), ConfigError);
  CHECK_THROWS_AS(apply_override(flagged, "N", "not_a_number"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("N 44", base), ConfigError);
}

TEST_CASE("config: paper-regime ordering validation") {
  ExperimentConfig ok = preset_config("paper-regime");
  ok.validate();  // gamma >> iota >> delta >> eps >> 1/K

  ExperimentConfig bad = ok;
  bad.delta = bad.iota;  // breaks iota >> delta
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  ExperimentConfig loose = preset_config("fast-ci");
  loose.delta = loose.iota;  // other presets are not ordering-checked
  loose.validate();
}

TEST_CASE("tensor container: round trip, sidecar, corruption") {
  const DisorderTensor t = sample_disorder(6, 3, 4242);
  const std::string path = "/tmp/pspin_test_tensor.bin";
  save_tensor(t, path);
  const DisorderTensor back = load_tensor(path);
  CHECK(back.N == 6);
  CHECK(back.p == 3);
  CHECK(back.seed == 4242);
  CHECK(back.entries == t.entries);

  std::ifstream side(path + ".json");
  REQUIRE(side.good());
  std::string sidecar((std::istreambuf_iterator<char>(side)),
                      std::istreambuf_iterator<char>());
  CHECK(sidecar.find("\"seed\": 4242") != std::string::npos);
  CHECK(sidecar.find(kContentHash) != std::string::npos);

  // corrupt the magic
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS(load_tensor(path));
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}

TEST_CASE("csv writer embeds config and enforces the row shape") {
  const ExperimentConfig cfg = preset_config("fast-ci");
  const std::string path = "/tmp/pspin_test.csv";
  {
    CsvWriter csv(path, {"a", "b"}, cfg);
    csv.row({1.0, 2.5});
    CHECK_THROWS_AS(csv.row({1.0}), InvalidInput);
  }
  std::ifstream f(path);
  std::string all((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  CHECK(all.find("content_hash=") != std::string::npos);
  CHECK(all.find("\"preset\":\"fast-ci\"") != std::string::npos);
  CHECK(all.find("a,b") != std::string::npos);
  CHECK(all.find("1,2.5") != std::string::npos);
  // gnuplot twin
  std::ifstream dat("/tmp/pspin_test.dat");
  CHECK(dat.good());
  std::remove(path.c_str());
  std::remove("/tmp/pspin_test.dat");
}

TEST_CASE("bit-exact replay: same config and seed reproduce identical files") {
  const ExperimentConfig cfg = preset_config("fast-ci");
  auto emit = [&](const std::string& path) {
    const Hamiltonian H = sample_hamiltonian(12, 3, cfg.seed);
    Rng rng(split_seed(cfg.seed, 1));
    AscentConfig ac;
    ac.delta_stop = 0.05;
    const Trajectory t =
        gd_ascent(H, SpherePoint::rescaled(rng.gaussian_vector(12)), ac);
    write_trajectory_csv(path, t, 12, cfg);
  };
  emit("/tmp/pspin_replay_1.csv");
  emit("/tmp/pspin_replay_2.csv");
  CHECK(sha1_hex_of_file("/tmp/pspin_replay_1.csv") ==
        sha1_hex_of_file("/tmp/pspin_replay_2.csv"));
  std::remove("/tmp/pspin_replay_1.csv");
  std::remove("/tmp/pspin_replay_2.csv");
}
