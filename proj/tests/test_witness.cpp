#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "hbi/witness.hpp"

using namespace hbi;
using Catch::Approx;

TEST_CASE("floor witness on the fixed biased instance", "[witness][hbi]") {
  witness::HbiFloorInstance inst;
  inst.delta = {0.5, 0.0};
  auto rep = witness::hbi_floor_witness(inst);
  REQUIRE(rep.theorem_id == "hbi");
  REQUIRE(rep.rhs == Approx(0.25));
  REQUIRE(rep.satisfied);
  // Tail excess risk sits at the analytic floor.
  REQUIRE(rep.lhs == Approx(0.25).margin(0.01));
  REQUIRE(rep.certificate.kind == "hbi-gamma");
  REQUIRE(rep.certificate.value == Approx(0.25));
}

TEST_CASE("floor witness: two distinct biases with the same floor", "[witness][hbi]") {
  witness::HbiFloorInstance inst;
  inst.delta = {0.3, 0.4};
  inst.n_grid = {4000, 20000};
  auto rep = witness::hbi_floor_witness(inst);
  REQUIRE(rep.rhs == Approx(0.25));
  REQUIRE(rep.satisfied);
}

TEST_CASE("floor witness sufficiency control decays to zero", "[witness][hbi]") {
  witness::HbiFloorInstance inst;
  inst.delta = {0.0, 0.0};
  inst.n_grid = {2000, 20000};
  auto rep = witness::hbi_floor_witness(inst);
  REQUIRE(rep.rhs == 0.0);
  REQUIRE(rep.satisfied);
  REQUIRE(rep.lhs < 0.005);
  REQUIRE(std::find(rep.flags.begin(), rep.flags.end(), "sufficiency-control") !=
          rep.flags.end());
}

TEST_CASE("operator witness: projection bias has unit norm", "[witness][operator]") {
  witness::OperatorInstance inst;
  inst.t_star = Eigen::MatrixXd::Identity(2, 2);
  inst.t_h = Eigen::MatrixXd::Zero(2, 2);
  inst.t_h(0, 0) = 1.0;
  auto rep = witness::operator_bias_witness(inst);
  REQUIRE(rep.rhs == Approx(1.0).margin(1e-10));
  REQUIRE(rep.satisfied);
  // The estimates live inside the triangle-inequality envelope.
  for (const auto& [n, est] : rep.trace) {
    REQUIRE(est >= 1.0 - 1.0 / n - 1e-9);
    REQUIRE(est <= 1.0 + 1.0 / n + 1e-9);
  }
}

TEST_CASE("operator witness without bias converges to zero", "[witness][operator]") {
  witness::OperatorInstance inst;
  inst.t_star = Eigen::MatrixXd::Identity(3, 3);
  inst.t_h = inst.t_star;
  auto rep = witness::operator_bias_witness(inst);
  REQUIRE(rep.rhs == 0.0);
  REQUIRE(rep.satisfied);
  REQUIRE(std::find(rep.flags.begin(), rep.flags.end(), "no-bias") != rep.flags.end());
}

TEST_CASE("operator witness limit matches the directly computed norm on a random pair",
          "[witness][operator]") {
  prob::RngStream rng = prob::derive_stream(314, 0);
  witness::OperatorInstance inst;
  inst.t_star.resize(5, 5);
  inst.t_h.resize(5, 5);
  for (long r = 0; r < 5; ++r) {
    for (long c = 0; c < 5; ++c) {
      inst.t_star(r, c) = rng.next_gaussian();
      inst.t_h(r, c) = rng.next_gaussian();
    }
  }
  inst.n_grid = {10, 1000, 100000000};
  auto rep = witness::operator_bias_witness(inst);
  REQUIRE(rep.satisfied);
  REQUIRE(rep.lhs == Approx(rep.rhs).margin(1e-8));
}

TEST_CASE("spectral norm via power iteration matches Eigen's SVD",
          "[witness][operator][property]") {
  prob::RngStream rng = prob::derive_stream(315, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const long n = 2 + static_cast<long>(rng.next_index(5));
    const long m = 2 + static_cast<long>(rng.next_index(5));
    Eigen::MatrixXd a(n, m);
    for (long r = 0; r < n; ++r) {
      for (long c = 0; c < m; ++c) a(r, c) = rng.next_gaussian();
    }
    const double ours = witness::spectral_norm(a);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    REQUIRE(ours == Approx(svd.singularValues()[0]).margin(1e-8));
  }
}

TEST_CASE("pacbayes witness on the fixed class", "[witness][pacbayes]") {
  learn::FiniteHypothesisClass cls;
  cls.members = {"f0", "f1"};
  cls.losses_h = {0.1, 0.2};
  cls.losses_star = {0.5, 0.0};
  auto rep = witness::pacbayes_floor_witness(cls, {1.0, 10.0, 100.0, 1e4, 1e6});
  REQUIRE(rep.certificate.value == Approx(0.5));
  REQUIRE(rep.rhs == Approx(0.5));  // min L* + gamma = 0 + 0.5
  REQUIRE(rep.lhs == Approx(0.5).margin(1e-9));
  REQUIRE(rep.satisfied);
}

TEST_CASE("pacbayes witness with an aligned channel has no floor",
          "[witness][pacbayes]") {
  learn::FiniteHypothesisClass cls;
  cls.members = {"f0", "f1"};
  cls.losses_h = {0.1, 0.2};
  cls.losses_star = {0.0, 0.5};  // the surrogate argmin also minimizes L*
  auto rep = witness::pacbayes_floor_witness(cls, {1.0, 1e4});
  REQUIRE(rep.certificate.value == 0.0);
  REQUIRE(rep.satisfied);
  REQUIRE(std::find(rep.flags.begin(), rep.flags.end(), "aligned-channel") !=
          rep.flags.end());
}

TEST_CASE("pacbayes witness takes the infimum over tied minimizers",
          "[witness][pacbayes]") {
  learn::FiniteHypothesisClass cls;
  cls.members = {"f0", "f1", "f2"};
  cls.losses_h = {0.1, 0.1, 0.2};
  cls.losses_star = {0.3, 0.4, 0.0};
  auto rep = witness::pacbayes_floor_witness(cls, {1.0, 1e4, 1e6});
  REQUIRE(rep.certificate.value == Approx(0.3));  // inf over the tied argmin set
  REQUIRE(rep.satisfied);
}

TEST_CASE("causal witness: brute force equals the bayes closed form exactly",
          "[witness][causal]") {
  auto source = prob::make_distribution({0.3, 0.7}, {"y1", "y2"});
  prob::Channel ch{{"y1", "y2"}, {"s1", "s2"}, {{0.6, 0.4}, {0.6, 0.4}}};
  auto rep = witness::causal_witness(ch, source, 0.3);
  REQUIRE(rep.lhs == rep.rhs);  // exact equality, not approximate
  REQUIRE(rep.rhs == Approx(0.3));
  REQUIRE(rep.satisfied);
}

TEST_CASE("causal witness: fully invertible channels are rejected",
          "[witness][causal]") {
  auto source = prob::make_distribution({0.5, 0.5}, {"y1", "y2"});
  auto id = prob::make_identity_channel({"y1", "y2"});
  REQUIRE_THROWS_AS(witness::causal_witness(id, source, 0.5), NotNonInvertible);
}

TEST_CASE("causal witness at p = 0.5 reaches maximal ambiguity", "[witness][causal]") {
  auto source = prob::make_distribution({0.5, 0.5}, {"y1", "y2"});
  prob::Channel ch{{"y1", "y2"}, {"s1", "s2"}, {{0.5, 0.5}, {0.5, 0.5}}};
  auto rep = witness::causal_witness(ch, source, 0.5);
  REQUIRE(rep.rhs == Approx(0.5));
  REQUIRE(rep.satisfied);
}

TEST_CASE("causal witness with a partially merged channel", "[witness][causal]") {
  // Three targets, the first two indistinguishable, the third separable.
  auto source = prob::make_distribution({0.2, 0.3, 0.5}, {"y1", "y2", "y3"});
  prob::Channel ch{{"y1", "y2", "y3"},
                   {"s1", "s2"},
                   {{0.9, 0.1}, {0.9, 0.1}, {0.1, 0.9}}};
  const double p_cond = 0.2 / 0.5;
  auto rep = witness::causal_witness(ch, source, p_cond);
  REQUIRE(rep.lhs == rep.rhs);
  REQUIRE(rep.satisfied);
  // Bayes risk is at least the merged-region ambiguity.
  REQUIRE(rep.rhs >= std::min(p_cond, 1 - p_cond) * 0.5 - 1e-12);
}

TEST_CASE("categorical witness: the half-range bound is achieved",
          "[witness][categorical]") {
  witness::QuotientInstance inst;
  inst.losses = {0.0, 1.0};
  inst.classes = {{0, 1}};
  auto rep = witness::categorical_witness(inst);
  REQUIRE(rep.rhs == Approx(0.5));
  REQUIRE(rep.lhs == Approx(0.5));
  REQUIRE(rep.satisfied);
}

TEST_CASE("categorical witness: constant classes factorize", "[witness][categorical]") {
  witness::QuotientInstance inst;
  inst.losses = {0.4, 0.4, 0.7, 0.7};
  inst.classes = {{0, 1}, {2, 3}};
  auto rep = witness::categorical_witness(inst);
  REQUIRE(rep.rhs == 0.0);
  REQUIRE(rep.satisfied);
  REQUIRE(std::find(rep.flags.begin(), rep.flags.end(), "factorizable") !=
          rep.flags.end());
}

TEST_CASE("categorical witness: bound is half the largest class range",
          "[witness][categorical]") {
  witness::QuotientInstance inst;
  inst.losses = {0.0, 0.2, 0.1, 0.7};
  inst.classes = {{0, 1}, {2, 3}};  // ranges 0.2 and 0.6
  auto rep = witness::categorical_witness(inst);
  REQUIRE(rep.rhs == Approx(0.3));
  REQUIRE(rep.satisfied);
}

TEST_CASE("categorical witness rejects empty instances", "[witness][categorical]") {
  witness::QuotientInstance inst;
  REQUIRE_THROWS_AS(witness::categorical_witness(inst), EmptyInstance);
}

TEST_CASE("rlhf witness: bias moves the optimum", "[witness][rlhf]") {
  witness::PolicyGameInstance inst;
  inst.u_star = {1.0, 0.9};
  inst.b_h = {0.0, 0.5};
  auto rep = witness::rlhf_gap_witness(inst);
  REQUIRE(rep.lhs == Approx(0.1));
  REQUIRE(rep.satisfied);
  REQUIRE(rep.flags.empty());
}

TEST_CASE("rlhf witness: constant bias is the degenerate case", "[witness][rlhf]") {
  witness::PolicyGameInstance inst;
  inst.u_star = {1.0, 0.5, 0.2};
  inst.b_h = {0.3, 0.3, 0.3};
  auto rep = witness::rlhf_gap_witness(inst);
  REQUIRE(rep.lhs == 0.0);
  REQUIRE(rep.satisfied);
  REQUIRE(std::find(rep.flags.begin(), rep.flags.end(), "degenerate-constant-bias") !=
          rep.flags.end());
}

TEST_CASE("rlhf witness: weak bias leaves the optimum in place", "[witness][rlhf]") {
  witness::PolicyGameInstance inst;
  inst.u_star = {1.0, 0.2};
  inst.b_h = {0.0, 0.1};
  auto rep = witness::rlhf_gap_witness(inst);
  REQUIRE(rep.lhs == 0.0);
  REQUIRE(rep.satisfied);
  REQUIRE(std::find(rep.flags.begin(), rep.flags.end(), "bias-did-not-move-optimum") !=
          rep.flags.end());
}

TEST_CASE("rlhf argmax is invariant to constant bias shifts",
          "[witness][rlhf][property]") {
  prob::RngStream rng = prob::derive_stream(316, 0);
  for (int trial = 0; trial < 50; ++trial) {
    witness::PolicyGameInstance inst;
    const std::size_t k = 2 + rng.next_index(5);
    for (std::size_t i = 0; i < k; ++i) {
      inst.u_star.push_back(rng.next_gaussian());
      inst.b_h.push_back(rng.next_gaussian());
    }
    auto base = witness::rlhf_gap_witness(inst);
    witness::PolicyGameInstance shifted = inst;
    const double c = 3.0 * rng.next_gaussian();
    for (auto& v : shifted.b_h) v += c;
    auto moved = witness::rlhf_gap_witness(shifted);
    REQUIRE(base.lhs == moved.lhs);
  }
}

TEST_CASE("decompose_floor: bias-only channels put everything on the pref share",
          "[witness][decompose]") {
  sup::SupervisionSpec spec;
  spec.bias.kind = sup::BiasKind::linear;
  spec.bias.delta = {0.4, -0.3};
  witness::FloorTask task;
  task.dim = 2;
  task.n_mc = 100000;
  auto cert = witness::decompose_floor(spec, task);
  REQUIRE(cert.kind == "hbi-gamma");
  REQUIRE((*cert.components)[0] == 0.0);
  REQUIRE((*cert.components)[1] == Approx(cert.value));
  REQUIRE((*cert.components)[2] == 0.0);
  // MC estimate of E[(delta'x)^2] = ||delta||^2 on isotropic inputs.
  REQUIRE(cert.value == Approx(0.25).margin(0.01));
}

TEST_CASE("decompose_floor: zero-mean noise alone is not a floor",
          "[witness][decompose]") {
  sup::SupervisionSpec spec;
  spec.noise = {sup::NoiseKind::gaussian, 0.8};
  witness::FloorTask task;
  task.dim = 2;
  task.n_mc = 20000;
  auto cert = witness::decompose_floor(spec, task);
  REQUIRE(cert.value == Approx(0.0).margin(1e-12));
}

TEST_CASE("decompose_floor: two-bin quantizer on a uniform grid gives 1/48",
          "[witness][decompose]") {
  sup::SupervisionSpec spec;
  spec.quantizer.edges = {0.0, 0.5, 1.0};
  witness::FloorTask task;
  task.law = witness::FloorTask::FeatureLaw::uniform_grid;
  task.dim = 1;
  task.weights = {1.0};
  task.grid_points = 4096;
  auto cert = witness::decompose_floor(spec, task);
  // Within-bin variance of a uniform variable on a half interval.
  REQUIRE(cert.value == Approx(1.0 / 48.0).margin(5e-4));
  REQUIRE((*cert.components)[2] == Approx(cert.value));
}

TEST_CASE("decompose_floor components are nonnegative and sum to the total",
          "[witness][decompose][property]") {
  prob::RngStream rng = prob::derive_stream(317, 0);
  for (int trial = 0; trial < 10; ++trial) {
    sup::SupervisionSpec spec;
    spec.noise = {sup::NoiseKind::gaussian, rng.next_double()};
    spec.bias.kind = sup::BiasKind::linear;
    spec.bias.delta = {0.5 * rng.next_gaussian(), 0.5 * rng.next_gaussian()};
    spec.quantizer.edges = {-4.0, -0.5, 0.5, 4.0};
    witness::FloorTask task;
    task.dim = 2;
    task.n_mc = 20000;
    task.seed = rng.next_u64();
    auto cert = witness::decompose_floor(spec, task);
    const auto& c = *cert.components;
    REQUIRE(c[0] >= -1e-9);
    REQUIRE(c[1] >= -1e-9);
    REQUIRE(c[2] >= -1e-9);
    REQUIRE(c[0] + c[1] + c[2] == Approx(cert.value).margin(1e-9));
    REQUIRE(cert.raw_components.has_value());
  }
}

TEST_CASE("the full witness suite passes on fixed and random instances",
          "[witness][suite]") {
  const auto t0 = std::chrono::steady_clock::now();
  auto reports = witness::run_all_witnesses(/*random_count=*/25, /*seed=*/1);
  const auto t1 = std::chrono::steady_clock::now();
  REQUIRE(reports.size() == 6 * 26);
  for (const auto& rep : reports) {
    INFO("theorem " << rep.theorem_id << " digest " << rep.instance_digest);
    REQUIRE(rep.satisfied);
  }
  const double seconds = std::chrono::duration<double>(t1 - t0).count();
  REQUIRE(seconds < 60.0);
}

TEST_CASE("causal brute force equals bayes exactly on random merged channels",
          "[witness][causal][property]") {
  for (std::uint64_t i = 0; i < 25; ++i) {
    auto rep = witness::run_random_witness("causal", 99, i);
    REQUIRE(rep.lhs == rep.rhs);
    REQUIRE(rep.satisfied);
  }
}
