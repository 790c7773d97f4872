#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hbi/prob.hpp"

using namespace hbi;
using Catch::Approx;

namespace {

// Independent copy of the SplitMix64 finalizer, used as the oracle for
// derive_stream's contract.
std::uint64_t reference_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

prob::Channel bsc(double p) {
  return prob::Channel{{"0", "1"}, {"0", "1"}, {{1.0 - p, p}, {p, 1.0 - p}}};
}

}  // namespace

TEST_CASE("make_distribution normalizes weights", "[prob]") {
  auto d = prob::make_distribution({1.0, 1.0}, {"a", "b"});
  REQUIRE(d.probs[0] == Approx(0.5));
  REQUIRE(d.probs[1] == Approx(0.5));

  auto d2 = prob::make_distribution({2.0, 0.0, 2.0}, {"a", "b", "c"});
  REQUIRE(d2.probs[0] == Approx(0.5));
  REQUIRE(d2.probs[1] == 0.0);
  REQUIRE(d2.probs[2] == Approx(0.5));
}

TEST_CASE("make_distribution rejects degenerate weights", "[prob]") {
  REQUIRE_THROWS_AS(prob::make_distribution({0.0, 0.0}, {"a", "b"}),
                    InvalidDistribution);
  REQUIRE_THROWS_AS(prob::make_distribution({1.0, -0.1}, {"a", "b"}),
                    InvalidDistribution);
  REQUIRE_THROWS_AS(prob::make_distribution({}, {}), InvalidDistribution);
}

TEST_CASE("distribution validation catches duplicates and bad mass", "[prob]") {
  prob::Distribution dup{{"a", "a"}, {0.5, 0.5}};
  REQUIRE_THROWS_AS(dup.validate(), InvalidDistribution);
  prob::Distribution short_mass{{"a", "b"}, {0.5, 0.4}};
  REQUIRE_THROWS_AS(short_mass.validate(), InvalidDistribution);
}

TEST_CASE("push_forward through identity and point mass", "[prob]") {
  auto uniform = prob::make_distribution({1.0, 1.0}, {"0", "1"});
  auto id = prob::make_identity_channel({"0", "1"});
  auto out = prob::push_forward(uniform, id);
  REQUIRE(out.probs[0] == Approx(0.5));
  REQUIRE(out.probs[1] == Approx(0.5));

  auto ch = bsc(0.1);
  auto point = prob::make_distribution({1.0, 0.0}, {"0", "1"});
  auto pushed = prob::push_forward(point, ch);
  REQUIRE(pushed.probs[0] == Approx(ch.rows[0][0]));
  REQUIRE(pushed.probs[1] == Approx(ch.rows[0][1]));
}

TEST_CASE("push_forward of uniform through BSC stays uniform", "[prob]") {
  // Oracle: explicit matrix product.
  auto uniform = prob::make_distribution({1.0, 1.0}, {"0", "1"});
  auto ch = bsc(0.1);
  double expect0 = 0.5 * ch.rows[0][0] + 0.5 * ch.rows[1][0];
  auto out = prob::push_forward(uniform, ch);
  REQUIRE(out.probs[0] == Approx(expect0));
  REQUIRE(out.probs[0] == Approx(0.5));
}

TEST_CASE("push_forward rejects support mismatch", "[prob]") {
  auto d = prob::make_distribution({1.0, 1.0}, {"x", "y"});
  REQUIRE_THROWS_AS(prob::push_forward(d, bsc(0.1)), ShapeError);
}

TEST_CASE("push_forward preserves mass on random channels", "[prob][property]") {
  prob::RngStream rng(42, 7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_index(4);
    const std::size_t m = 2 + rng.next_index(4);
    std::vector<std::string> in, out;
    for (std::size_t i = 0; i < n; ++i) in.push_back("i" + std::to_string(i));
    for (std::size_t j = 0; j < m; ++j) out.push_back("o" + std::to_string(j));
    std::vector<double> w(n);
    for (auto& v : w) v = 0.05 + rng.next_double();
    auto d = prob::make_distribution(w, in);
    prob::Channel ch{in, out, {}};
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(m);
      double z = 0.0;
      for (auto& v : row) {
        v = 0.01 + rng.next_double();
        z += v;
      }
      for (auto& v : row) v /= z;
      ch.rows.push_back(row);
    }
    auto pushed = prob::push_forward(d, ch);
    double mass = 0.0;
    for (double p : pushed.probs) mass += p;
    REQUIRE(std::abs(mass - 1.0) <= 1e-12);
    REQUIRE_NOTHROW(pushed.validate());
  }
}

TEST_CASE("joint_from_chain with identities puts mass on the diagonal", "[prob]") {
  auto src = prob::make_distribution({1.0, 1.0}, {"0", "1"});
  auto id = prob::make_identity_channel({"0", "1"});
  auto j = prob::joint_from_chain(src, {id, id}, prob::ChainStructure::chain);
  REQUIRE(j.rank() == 3);
  const auto& t = j.table();
  // cells: (x0, x1, x2) with stride 4, 2, 1
  REQUIRE(t[0] == Approx(0.5));      // (0,0,0)
  REQUIRE(t[7] == Approx(0.5));      // (1,1,1)
  REQUIRE(t[1] == 0.0);
  REQUIRE(t[6] == 0.0);
}

TEST_CASE("fan-out joint matches the hand product", "[prob]") {
  // uniform binary source fanned into BSC(0.1) and identity:
  // P(y=0, s_h=0, s_a=0) = 0.5 * 0.9 * 1 = 0.45.
  auto src = prob::make_distribution({1.0, 1.0}, {"0", "1"});
  auto id = prob::make_identity_channel({"0", "1"});
  auto j = prob::joint_from_chain(src, {bsc(0.1), id}, prob::ChainStructure::fan_out,
                                  {"y", "s_h", "s_a"});
  REQUIRE(j.table()[0] == Approx(0.45));
  REQUIRE(j.total_mass() == Approx(1.0));
}

TEST_CASE("constant channel makes the downstream variable independent", "[prob]") {
  auto src = prob::make_distribution({0.3, 0.7}, {"0", "1"});
  prob::Channel constant{{"0", "1"}, {"u", "v"}, {{0.25, 0.75}, {0.25, 0.75}}};
  auto j = prob::joint_from_chain(src, {constant}, prob::ChainStructure::chain);
  // p(x0, x1) = p(x0) p(x1) for every cell.
  auto mx = j.axis_marginal(0);
  auto my = j.axis_marginal(1);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      REQUIRE(j.table()[a * 2 + b] == Approx(mx.probs[a] * my.probs[b]));
    }
  }
}

TEST_CASE("joint marginals equal compositional push-forwards", "[prob][property]") {
  prob::RngStream rng(99, 3);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + rng.next_index(3);
    std::vector<std::string> supp;
    for (std::size_t i = 0; i < n; ++i) supp.push_back(std::to_string(i));
    std::vector<double> w(n);
    for (auto& v : w) v = 0.05 + rng.next_double();
    auto src = prob::make_distribution(w, supp);

    auto random_channel = [&](const std::vector<std::string>& in) {
      const std::size_t m = 2 + rng.next_index(3);
      std::vector<std::string> out;
      for (std::size_t j = 0; j < m; ++j) out.push_back("o" + std::to_string(j));
      prob::Channel ch{in, out, {}};
      for (std::size_t i = 0; i < in.size(); ++i) {
        std::vector<double> row(m);
        double z = 0.0;
        for (auto& v : row) {
          v = 0.01 + rng.next_double();
          z += v;
        }
        for (auto& v : row) v /= z;
        ch.rows.push_back(row);
      }
      return ch;
    };
    auto ch1 = random_channel(supp);
    auto ch2 = random_channel(ch1.output_support);
    auto j = prob::joint_from_chain(src, {ch1, ch2}, prob::ChainStructure::chain);

    auto m1 = j.axis_marginal(1);
    auto p1 = prob::push_forward(src, ch1);
    for (std::size_t i = 0; i < p1.probs.size(); ++i) {
      REQUIRE(m1.probs[i] == Approx(p1.probs[i]).margin(1e-12));
    }
    auto m2 = j.axis_marginal(2);
    auto p2 = prob::push_forward(p1, ch2);
    for (std::size_t i = 0; i < p2.probs.size(); ++i) {
      REQUIRE(m2.probs[i] == Approx(p2.probs[i]).margin(1e-12));
    }
  }
}

TEST_CASE("sample returns point-mass copies and is deterministic", "[prob]") {
  auto point = prob::make_distribution({0.0, 1.0}, {"a", "b"});
  prob::RngStream rng = prob::derive_stream(123, 0);
  auto draws = prob::sample(point, rng, 5);
  REQUIRE(draws == std::vector<std::string>(5, "b"));

  prob::RngStream r1 = prob::derive_stream(5, 9);
  prob::RngStream r2 = prob::derive_stream(5, 9);
  auto u = prob::make_distribution({1.0, 1.0, 1.0}, {"x", "y", "z"});
  REQUIRE(prob::sample(u, r1, 100) == prob::sample(u, r2, 100));
}

TEST_CASE("sample frequencies land in the 3-sigma binomial band", "[prob]") {
  // n = 10000 uniform binary: sd of the frequency is 0.005, so 0.47..0.53
  // is the +-3 sigma band around 0.5 with margin.
  auto u = prob::make_distribution({1.0, 1.0}, {"0", "1"});
  prob::RngStream rng = prob::derive_stream(2024, 1);
  auto draws = prob::sample(u, rng, 10000);
  std::size_t zeros = 0;
  for (const auto& s : draws) zeros += s == "0";
  const double freq = static_cast<double>(zeros) / 10000.0;
  REQUIRE(freq > 0.47);
  REQUIRE(freq < 0.53);
}

TEST_CASE("derive_stream matches the reference mixer", "[prob][rng]") {
  const std::uint64_t s = 0x123456789abcdef0ULL;
  REQUIRE(prob::derive_stream(s, 0).stream_id() == reference_mix(s));
  REQUIRE(prob::derive_stream(s, 3).stream_id() == reference_mix(s ^ 3));
  REQUIRE(prob::derive_stream(s, 3).stream_id() ==
          prob::derive_stream(s, 3).stream_id());
  REQUIRE(prob::derive_stream(s, 3).stream_id() !=
          prob::derive_stream(s, 4).stream_id());
}

TEST_CASE("merged tuple axis preserves mass", "[prob]") {
  auto src = prob::make_distribution({1.0, 1.0}, {"0", "1"});
  auto id = prob::make_identity_channel({"0", "1"});
  auto j = prob::joint_from_chain(src, {bsc(0.2), id}, prob::ChainStructure::fan_out);
  auto merged = j.merge_axes({1, 2}, "s");
  REQUIRE(merged.rank() == 2);
  REQUIRE(merged.total_mass() == Approx(1.0));
  REQUIRE(merged.axes()[1].support.size() == 4);
}
