#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "hbi/serialize.hpp"

using namespace hbi;
using Catch::Approx;
namespace fs = std::filesystem;

TEST_CASE("distributions and channels survive a JSON round trip", "[serialize]") {
  auto d = prob::make_distribution({0.3, 0.2, 0.5}, {"a", "b", "c"});
  auto d2 = io::distribution_from_json(io::to_json(d));
  REQUIRE(d2.support == d.support);
  REQUIRE(d2.probs == d.probs);  // full precision, bit-exact

  prob::Channel ch{{"0", "1"}, {"0", "1"}, {{0.9, 0.1}, {0.1, 0.9}}};
  auto ch2 = io::channel_from_json(io::to_json(ch));
  REQUIRE(ch2.rows == ch.rows);
  REQUIRE_NOTHROW(ch2.validate());
}

TEST_CASE("joint distributions round trip with axis names", "[serialize]") {
  std::vector<prob::Axis> axes{{"y", {"0", "1"}}, {"s", {"u", "v"}}};
  prob::JointDistribution j(axes, {0.25, 0.25, 0.3, 0.2});
  auto j2 = io::joint_from_json(io::to_json(j));
  REQUIRE(j2.axes()[0].name == "y");
  REQUIRE(j2.axes()[1].support == std::vector<std::string>{"u", "v"});
  REQUIRE(j2.table() == j.table());
}

TEST_CASE("reloading a serialized distribution re-validates its mass",
          "[serialize]") {
  nlohmann::json bad{{"support", {"a", "b"}}, {"probs", {0.5, 0.4}}};
  REQUIRE_THROWS_AS(io::distribution_from_json(bad), InvalidDistribution);
}

TEST_CASE("supervision specs round trip through their JSON schema", "[serialize]") {
  sup::SupervisionSpec spec;
  spec.noise = {sup::NoiseKind::gaussian, 0.4};
  spec.bias.kind = sup::BiasKind::linear;
  spec.bias.delta = {0.2, -0.1};
  spec.quantizer.edges = {-1.0, 0.0, 1.0};
  auto spec2 = io::supervision_from_json(io::to_json(spec));
  REQUIRE(spec2.noise.kind == sup::NoiseKind::gaussian);
  REQUIRE(spec2.noise.scale == 0.4);
  REQUIRE(spec2.bias.delta == spec.bias.delta);
  REQUIRE(spec2.quantizer.edges == spec.quantizer.edges);

  sup::SupervisionSpec flip;
  flip.noise = {sup::NoiseKind::flip, 0.2};
  auto flip2 = io::supervision_from_json(io::to_json(flip));
  REQUIRE(flip2.noise.kind == sup::NoiseKind::flip);
  REQUIRE(flip2.noise.scale == 0.2);
}

TEST_CASE("experiment configs round trip and reject bad schemas", "[serialize]") {
  auto cfg = sweep::default_config(sweep::ExperimentKind::noise_sweep);
  auto cfg2 = io::config_from_json(io::to_json(cfg));
  REQUIRE(cfg2.canonical_string() == cfg.canonical_string());
  REQUIRE(cfg2.digest() == cfg.digest());

  auto j = io::to_json(cfg);
  j["schema"] = 2;
  REQUIRE_THROWS_AS(io::config_from_json(j), ConfigError);

  nlohmann::json mismatched = io::to_json(cfg);
  mismatched["task"]["dim"] = 3;  // delta still has 2 entries
  REQUIRE_THROWS_AS(io::config_from_json(mismatched), ConfigError);
}

TEST_CASE("linear models serialize as a weights array", "[serialize]") {
  learn::LinearModel m;
  m.weights = Eigen::Vector3d(0.5, -0.25, 1.0);
  auto j = io::to_json(m);
  REQUIRE(j["weights"].get<std::vector<double>>() ==
          std::vector<double>{0.5, -0.25, 1.0});
}

TEST_CASE("witness reports serialize with certificates and flags", "[serialize]") {
  auto rep = witness::run_fixed_witness("rlhf");
  auto j = io::to_json(rep);
  REQUIRE(j["theorem_id"] == "rlhf");
  REQUIRE(j["satisfied"] == true);
  REQUIRE(j["certificate"]["kind"] == "rlhf-gap");
  REQUIRE(j["certificate"]["value"].get<double>() == Approx(0.1));
}

TEST_CASE("atomic_write replaces files completely", "[serialize][atomic]") {
  auto dir = fs::temp_directory_path() / "hbi_atomic";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto path = dir / "out.txt";
  io::atomic_write(path, "first\n");
  REQUIRE(io::read_file(path) == "first\n");
  io::atomic_write(path, "second\n");
  REQUIRE(io::read_file(path) == "second\n");
  // No temp litter left behind.
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  REQUIRE(files == 1);
  fs::remove_all(dir);
}

TEST_CASE("plot CSVs round trip within formatting tolerance", "[serialize][plots]") {
  auto cfg = sweep::default_config(sweep::ExperimentKind::sufficiency_proxy);
  cfg.n_test = 400;
  auto res = sweep::run_sufficiency_proxy(cfg);

  auto dir = fs::temp_directory_path() / "hbi_plots";
  fs::remove_all(dir);
  auto paths = io::emit_plot_data(res, dir);
  REQUIRE(paths.size() == res.metric_names.size());

  const auto content = io::read_file(paths[0]);
  std::istringstream is(content);
  std::string header;
  std::getline(is, header);
  REQUIRE(header == "param,mean,ci_lo,ci_hi");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    double param, mean, lo, hi;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &param, &mean, &lo, &hi) == 4);
    const auto& agg = res.aggregate(param, "accuracy");
    REQUIRE(mean == Approx(agg.mean).margin(5e-7));
    REQUIRE(lo == Approx(agg.ci_lo).margin(5e-7));
    REQUIRE(hi == Approx(agg.ci_hi).margin(5e-7));
    ++rows;
  }
  REQUIRE(rows == cfg.grid.size());
  fs::remove_all(dir);
}

TEST_CASE("emit_plot_data rejects empty results", "[serialize][plots]") {
  sweep::SweepResult empty;
  empty.metric_names = {"accuracy"};
  REQUIRE_THROWS_AS(io::emit_plot_data(empty, fs::temp_directory_path() / "hbi_none"),
                    EmptyEval);
}

TEST_CASE("rate-distortion curves serialize at six decimals", "[serialize]") {
  auto src = prob::make_distribution({1.0, 1.0}, {"0", "1"});
  auto curve = info::rate_distortion_ba(src, info::hamming_distortion(2),
                                        info::auto_slopes(12));
  auto j = io::to_json(curve);
  REQUIRE(j["d_max"].get<double>() == Approx(0.5));
  for (const auto& pt : j["points"]) {
    const double r = pt["rate_bits"].get<double>();
    REQUIRE(r == Approx(io::round6(r)));  // already rounded
  }
}
